//! Decoder strategies behind a common trait, registered by name.
//!
//! Both decoders search V^n exhaustively; the default block v_0 (returned by
//! the threshold decoder when zero or several candidates qualify) is fixed
//! to the lexicographically smallest block so that error counts are
//! reproducible.

use crate::scheme::{RealizedEncoder, SchemeInstance};

pub trait Decoder: Send + Sync {
    fn name(&self) -> &'static str;

    /// Maps a received block y (digits, plus its index) to a source block
    /// index, searching over all of V^n.
    fn decode(
        &self,
        inst: &SchemeInstance,
        phi: &RealizedEncoder,
        y_idx: usize,
        y: &[u8],
    ) -> usize;
}

/// Unique-candidate decoder from the decision set S_n: returns the single v
/// with (phi(v), y) in S_n(v), else the default block 0^n.
pub struct ThresholdDecoder;

impl Decoder for ThresholdDecoder {
    fn name(&self) -> &'static str {
        "threshold"
    }

    fn decode(
        &self,
        inst: &SchemeInstance,
        phi: &RealizedEncoder,
        y_idx: usize,
        y: &[u8],
    ) -> usize {
        let n = inst.n() as f64;
        let ln_py = inst.ln_p_y(y_idx, y);
        let mut candidate = None;
        for (v, &x) in phi.x_of_v.iter().enumerate() {
            let x = x as usize;
            let density = (inst.ln_w_xy(x, y_idx) - ln_py) / n;
            if density > inst.threshold_rhs(v, x) {
                if candidate.is_some() {
                    return 0; // more than one candidate: fall back to v_0
                }
                candidate = Some(v);
            }
        }
        candidate.unwrap_or(0)
    }
}

/// Maximum a posteriori decoder: argmax_v P_V(v) W^m(y | phi(v)), ties
/// broken toward the lexicographically smallest block.
pub struct MapDecoder;

impl Decoder for MapDecoder {
    fn name(&self) -> &'static str {
        "map"
    }

    fn decode(
        &self,
        inst: &SchemeInstance,
        phi: &RealizedEncoder,
        y_idx: usize,
        _y: &[u8],
    ) -> usize {
        let mut best_v = 0usize;
        let mut best_score = f64::NEG_INFINITY;
        for (v, &x) in phi.x_of_v.iter().enumerate() {
            let score = inst.ln_pv(v) + inst.ln_w_xy(x as usize, y_idx);
            if score > best_score {
                best_score = score;
                best_v = v;
            }
        }
        best_v
    }
}

static THRESHOLD: ThresholdDecoder = ThresholdDecoder;
static MAP: MapDecoder = MapDecoder;
static REGISTRY: [&dyn Decoder; 2] = [&THRESHOLD, &MAP];

/// All registered decoder strategies.
pub fn decoder_registry() -> &'static [&'static dyn Decoder] {
    &REGISTRY
}

pub fn decoder_by_name(name: &str) -> Option<&'static dyn Decoder> {
    decoder_registry().iter().copied().find(|d| d.name() == name)
}
