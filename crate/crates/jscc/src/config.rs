//! JSON experiment configuration: parsing with exhaustive error reporting,
//! strict unknown-key rejection, and construction of a runnable instance.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::codes::{CodeEnsemble, LinearCode};
use crate::error::{Error, Result};
use crate::scheme::{ChannelModel, Quantization, SchemeInstance, SourceModel};

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub q: u8,
    pub n: usize,
    pub l: usize,
    pub m: usize,
    pub source: SourceCfg,
    pub channel: ChannelCfg,
    pub code: CodeCfg,
    pub quant: QuantCfg,
    pub gamma: f64,
    pub trials: u64,
    pub seed: u64,
    pub rate_target: Option<f64>,
    pub sweep: Option<SweepCfg>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceCfg {
    Iid { p: Vec<f64> },
    /// Explicit block distribution keyed by the digit string of v.
    Explicit { probs: BTreeMap<String, f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelCfg {
    Bsc { param: f64 },
    Bec { param: f64 },
    Qsc { param: f64 },
    Noiseless,
    Dmc { matrix: Vec<Vec<f64>> },
}

impl ChannelCfg {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ChannelCfg::Bsc { .. } => "bsc",
            ChannelCfg::Bec { .. } => "bec",
            ChannelCfg::Qsc { .. } => "qsc",
            ChannelCfg::Noiseless => "noiseless",
            ChannelCfg::Dmc { .. } => "dmc",
        }
    }

    pub fn param_value(&self) -> f64 {
        match self {
            ChannelCfg::Bsc { param } | ChannelCfg::Bec { param } | ChannelCfg::Qsc { param } => {
                *param
            }
            ChannelCfg::Noiseless | ChannelCfg::Dmc { .. } => 0.0,
        }
    }

    /// Same channel family with a different crossover/erasure parameter.
    /// Parameter-free channels are returned unchanged.
    pub fn with_param(&self, param: f64) -> ChannelCfg {
        match self {
            ChannelCfg::Bsc { .. } => ChannelCfg::Bsc { param },
            ChannelCfg::Bec { .. } => ChannelCfg::Bec { param },
            ChannelCfg::Qsc { .. } => ChannelCfg::Qsc { param },
            other => other.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CodeCfg {
    Uniform,
    MatrixFile { path: String },
    MatrixRows { rows: Vec<Vec<u8>> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuantCfg {
    Preset { preset: String },
    File { path: String },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepCfg {
    pub gamma: Vec<f64>,
    pub channel_param: Vec<f64>,
    pub lm: Vec<(usize, usize)>,
}

pub fn load_config(path: &Path) -> Result<ResolvedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Validation(vec![format!("cannot read config file {}: {e}", path.display())])
    })?;
    parse_config(&text).map_err(|e| match e {
        Error::Validation(mut errs) => {
            for err in &mut errs {
                *err = format!("{}: {err}", path.display());
            }
            Error::Validation(errs)
        }
        other => other,
    })
}

struct Walker<'a> {
    errs: Vec<String>,
    root: &'a Map<String, Value>,
}

impl<'a> Walker<'a> {
    fn check_keys(&mut self, ctx: &str, obj: &Map<String, Value>, known: &[&str]) {
        for key in obj.keys() {
            if !known.contains(&key.as_str()) {
                self.errs.push(format!("{ctx}: unknown key `{key}`"));
            }
        }
    }

    fn require<'b>(&mut self, ctx: &str, obj: &'b Map<String, Value>, key: &str) -> Option<&'b Value> {
        let v = obj.get(key);
        if v.is_none() {
            self.errs.push(format!("{ctx}: missing required key `{key}`"));
        }
        v
    }

    fn as_obj<'b>(&mut self, ctx: &str, v: &'b Value) -> Option<&'b Map<String, Value>> {
        match v.as_object() {
            Some(o) => Some(o),
            None => {
                self.errs.push(format!("{ctx}: expected an object"));
                None
            }
        }
    }

    fn uint(&mut self, ctx: &str, v: &Value) -> Option<u64> {
        match v.as_u64() {
            Some(u) => Some(u),
            None => {
                self.errs.push(format!("{ctx}: expected a non-negative integer"));
                None
            }
        }
    }

    fn float(&mut self, ctx: &str, v: &Value) -> Option<f64> {
        match v.as_f64() {
            Some(f) if f.is_finite() => Some(f),
            _ => {
                self.errs.push(format!("{ctx}: expected a finite number"));
                None
            }
        }
    }

    fn string(&mut self, ctx: &str, v: &Value) -> Option<String> {
        match v.as_str() {
            Some(s) => Some(s.to_string()),
            None => {
                self.errs.push(format!("{ctx}: expected a string"));
                None
            }
        }
    }

    fn float_array(&mut self, ctx: &str, v: &Value) -> Option<Vec<f64>> {
        let arr = match v.as_array() {
            Some(a) => a,
            None => {
                self.errs.push(format!("{ctx}: expected an array of numbers"));
                return None;
            }
        };
        let mut out = Vec::with_capacity(arr.len());
        for (i, e) in arr.iter().enumerate() {
            out.push(self.float(&format!("{ctx}[{i}]"), e)?);
        }
        Some(out)
    }

    fn top(&mut self, key: &str) -> Option<&'a Value> {
        self.root.get(key)
    }
}

fn parse_source(w: &mut Walker, v: &Value) -> Option<SourceCfg> {
    let obj = w.as_obj("source", v)?;
    w.check_keys("source", obj, &["kind", "p", "probs"]);
    let kind = w.require("source", obj, "kind").and_then(|k| w.string("source.kind", k))?;
    match kind.as_str() {
        "iid" => {
            let p = w.require("source", obj, "p")?;
            Some(SourceCfg::Iid { p: w.float_array("source.p", p)? })
        }
        "explicit" => {
            let probs = w.require("source", obj, "probs")?;
            let map = w.as_obj("source.probs", probs)?;
            let mut out = BTreeMap::new();
            for (k, pv) in map {
                out.insert(k.clone(), w.float(&format!("source.probs[{k}]"), pv)?);
            }
            Some(SourceCfg::Explicit { probs: out })
        }
        other => {
            w.errs.push(format!("source.kind: unknown kind `{other}` (expected iid or explicit)"));
            None
        }
    }
}

fn parse_channel(w: &mut Walker, v: &Value) -> Option<ChannelCfg> {
    let obj = w.as_obj("channel", v)?;
    w.check_keys("channel", obj, &["kind", "param", "matrix"]);
    let kind = w.require("channel", obj, "kind").and_then(|k| w.string("channel.kind", k))?;
    let param = |w: &mut Walker| -> Option<f64> {
        let p = w.require("channel", obj, "param")?;
        w.float("channel.param", p)
    };
    match kind.as_str() {
        "bsc" => Some(ChannelCfg::Bsc { param: param(w)? }),
        "bec" => Some(ChannelCfg::Bec { param: param(w)? }),
        "qsc" => Some(ChannelCfg::Qsc { param: param(w)? }),
        "noiseless" => Some(ChannelCfg::Noiseless),
        "dmc" => {
            let m = w.require("channel", obj, "matrix")?;
            let rows = match m.as_array() {
                Some(a) => a,
                None => {
                    w.errs.push("channel.matrix: expected an array of rows".into());
                    return None;
                }
            };
            let mut matrix = Vec::with_capacity(rows.len());
            for (i, row) in rows.iter().enumerate() {
                matrix.push(w.float_array(&format!("channel.matrix[{i}]"), row)?);
            }
            Some(ChannelCfg::Dmc { matrix })
        }
        other => {
            w.errs.push(format!(
                "channel.kind: unknown kind `{other}` (expected bsc, bec, qsc, noiseless, dmc)"
            ));
            None
        }
    }
}

fn parse_code(w: &mut Walker, v: &Value) -> Option<CodeCfg> {
    let obj = w.as_obj("code", v)?;
    w.check_keys("code", obj, &["kind", "path", "rows"]);
    let kind = w.require("code", obj, "kind").and_then(|k| w.string("code.kind", k))?;
    match kind.as_str() {
        "uniform" => Some(CodeCfg::Uniform),
        "matrix" => match (obj.get("path"), obj.get("rows")) {
            (Some(p), None) => Some(CodeCfg::MatrixFile { path: w.string("code.path", p)? }),
            (None, Some(r)) => {
                let rows = match r.as_array() {
                    Some(a) => a,
                    None => {
                        w.errs.push("code.rows: expected an array of rows".into());
                        return None;
                    }
                };
                let mut out = Vec::with_capacity(rows.len());
                for (i, row) in rows.iter().enumerate() {
                    let fr = w.float_array(&format!("code.rows[{i}]"), row)?;
                    let mut br = Vec::with_capacity(fr.len());
                    for (j, f) in fr.iter().enumerate() {
                        if f.fract() != 0.0 || *f < 0.0 || *f > 255.0 {
                            w.errs.push(format!("code.rows[{i}][{j}]: expected a field digit"));
                            return None;
                        }
                        br.push(*f as u8);
                    }
                    out.push(br);
                }
                Some(CodeCfg::MatrixRows { rows: out })
            }
            _ => {
                w.errs.push("code: matrix kind requires exactly one of `path` or `rows`".into());
                None
            }
        },
        other => {
            w.errs.push(format!("code.kind: unknown kind `{other}` (expected uniform or matrix)"));
            None
        }
    }
}

fn parse_quant(w: &mut Walker, v: &Value) -> Option<QuantCfg> {
    let obj = w.as_obj("quant", v)?;
    w.check_keys("quant", obj, &["preset", "path"]);
    match (obj.get("preset"), obj.get("path")) {
        (Some(p), None) => {
            let preset = w.string("quant.preset", p)?;
            if !["channel-coding", "source-coding", "deterministic", "jscc-default"]
                .contains(&preset.as_str())
            {
                w.errs.push(format!("quant.preset: unknown preset `{preset}`"));
                return None;
            }
            Some(QuantCfg::Preset { preset })
        }
        (None, Some(p)) => Some(QuantCfg::File { path: w.string("quant.path", p)? }),
        _ => {
            w.errs.push("quant: requires exactly one of `preset` or `path`".into());
            None
        }
    }
}

fn parse_sweep(w: &mut Walker, v: &Value) -> Option<SweepCfg> {
    let obj = w.as_obj("sweep", v)?;
    w.check_keys("sweep", obj, &["gamma", "channel_param", "lm"]);
    let mut cfg = SweepCfg::default();
    if let Some(g) = obj.get("gamma") {
        cfg.gamma = w.float_array("sweep.gamma", g)?;
    }
    if let Some(p) = obj.get("channel_param") {
        cfg.channel_param = w.float_array("sweep.channel_param", p)?;
    }
    if let Some(lm) = obj.get("lm") {
        let arr = match lm.as_array() {
            Some(a) => a,
            None => {
                w.errs.push("sweep.lm: expected an array of [l, m] pairs".into());
                return None;
            }
        };
        for (i, pair) in arr.iter().enumerate() {
            let fp = w.float_array(&format!("sweep.lm[{i}]"), pair)?;
            if fp.len() != 2 || fp.iter().any(|f| f.fract() != 0.0 || *f < 1.0) {
                w.errs.push(format!("sweep.lm[{i}]: expected a pair of positive integers"));
                return None;
            }
            cfg.lm.push((fp[0] as usize, fp[1] as usize));
        }
    }
    Some(cfg)
}

const TOP_KEYS: &[&str] = &[
    "q", "n", "l", "m", "source", "channel", "code", "quant", "gamma", "trials", "seed",
    "rate_target", "sweep",
];

pub fn parse_config(text: &str) -> Result<ResolvedConfig> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| Error::Validation(vec![format!("invalid JSON: {e}")]))?;
    let root = value
        .as_object()
        .ok_or_else(|| Error::Validation(vec!["config root must be a JSON object".into()]))?;

    let mut w = Walker { errs: Vec::new(), root };
    w.check_keys("config", root, TOP_KEYS);

    let dim = |key: &str, w: &mut Walker| -> Option<u64> {
        let v = match root.get(key) {
            Some(v) => v.clone(),
            None => {
                w.errs.push(format!("config: missing required key `{key}`"));
                return None;
            }
        };
        let u = w.uint(key, &v)?;
        if u == 0 {
            w.errs.push(format!("{key}: must be >= 1"));
            return None;
        }
        Some(u)
    };
    let q = dim("q", &mut w).and_then(|u| {
        if u > 255 {
            w.errs.push("q: must fit in a byte".into());
            None
        } else {
            Some(u as u8)
        }
    });
    let n = dim("n", &mut w).map(|u| u as usize);
    let l = dim("l", &mut w).map(|u| u as usize);
    let m = dim("m", &mut w).map(|u| u as usize);

    let source = w.top("source").cloned().and_then(|v| parse_source(&mut w, &v));
    if w.root.get("source").is_none() {
        w.errs.push("config: missing required key `source`".into());
    }
    let channel = w.top("channel").cloned().and_then(|v| parse_channel(&mut w, &v));
    if w.root.get("channel").is_none() {
        w.errs.push("config: missing required key `channel`".into());
    }
    let code = w.top("code").cloned().and_then(|v| parse_code(&mut w, &v));
    if w.root.get("code").is_none() {
        w.errs.push("config: missing required key `code`".into());
    }
    let quant = w.top("quant").cloned().and_then(|v| parse_quant(&mut w, &v));
    if w.root.get("quant").is_none() {
        w.errs.push("config: missing required key `quant`".into());
    }

    let gamma = match w.top("gamma").cloned() {
        Some(v) => {
            let g = w.float("gamma", &v);
            if let Some(g) = g {
                if g <= 0.0 {
                    w.errs.push("gamma: must be > 0".into());
                }
            }
            g
        }
        None => {
            w.errs.push("config: missing required key `gamma`".into());
            None
        }
    };
    let trials = match w.top("trials").cloned() {
        Some(v) => w.uint("trials", &v),
        None => Some(10_000),
    };
    let seed = match w.top("seed").cloned() {
        Some(v) => w.uint("seed", &v),
        None => Some(0),
    };
    let rate_target = match w.top("rate_target").cloned() {
        Some(v) => Some(w.float("rate_target", &v)),
        None => None,
    };
    let sweep = w.top("sweep").cloned().and_then(|v| parse_sweep(&mut w, &v));
    let sweep_present = w.root.get("sweep").is_some();

    if !w.errs.is_empty() {
        return Err(Error::Validation(w.errs));
    }
    // all required fields were validated above; unwraps cannot fail here
    let cfg = ResolvedConfig {
        q: q.unwrap(),
        n: n.unwrap(),
        l: l.unwrap(),
        m: m.unwrap(),
        source: source.unwrap(),
        channel: channel.unwrap(),
        code: code.unwrap(),
        quant: quant.unwrap(),
        gamma: gamma.unwrap(),
        trials: trials.unwrap(),
        seed: seed.unwrap(),
        rate_target: rate_target.map(|r| r.unwrap()),
        sweep: if sweep_present { Some(sweep.unwrap()) } else { None },
    };
    Ok(cfg)
}

impl ResolvedConfig {
    /// Canonical JSON form; parsing it back yields an equal config.
    pub fn to_json(&self) -> Value {
        let source = match &self.source {
            SourceCfg::Iid { p } => json!({"kind": "iid", "p": p}),
            SourceCfg::Explicit { probs } => {
                let map: Map<String, Value> =
                    probs.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
                json!({"kind": "explicit", "probs": map})
            }
        };
        let channel = match &self.channel {
            ChannelCfg::Bsc { param } => json!({"kind": "bsc", "param": param}),
            ChannelCfg::Bec { param } => json!({"kind": "bec", "param": param}),
            ChannelCfg::Qsc { param } => json!({"kind": "qsc", "param": param}),
            ChannelCfg::Noiseless => json!({"kind": "noiseless"}),
            ChannelCfg::Dmc { matrix } => json!({"kind": "dmc", "matrix": matrix}),
        };
        let code = match &self.code {
            CodeCfg::Uniform => json!({"kind": "uniform"}),
            CodeCfg::MatrixFile { path } => json!({"kind": "matrix", "path": path}),
            CodeCfg::MatrixRows { rows } => json!({"kind": "matrix", "rows": rows}),
        };
        let quant = match &self.quant {
            QuantCfg::Preset { preset } => json!({"preset": preset}),
            QuantCfg::File { path } => json!({"path": path}),
        };
        let mut obj = Map::new();
        obj.insert("q".into(), json!(self.q));
        obj.insert("n".into(), json!(self.n));
        obj.insert("l".into(), json!(self.l));
        obj.insert("m".into(), json!(self.m));
        obj.insert("source".into(), source);
        obj.insert("channel".into(), channel);
        obj.insert("code".into(), code);
        obj.insert("quant".into(), quant);
        obj.insert("gamma".into(), json!(self.gamma));
        obj.insert("trials".into(), json!(self.trials));
        obj.insert("seed".into(), json!(self.seed));
        if let Some(r) = self.rate_target {
            obj.insert("rate_target".into(), json!(r));
        }
        if let Some(s) = &self.sweep {
            let lm: Vec<Vec<usize>> = s.lm.iter().map(|&(l, m)| vec![l, m]).collect();
            obj.insert(
                "sweep".into(),
                json!({"gamma": s.gamma, "channel_param": s.channel_param, "lm": lm}),
            );
        }
        Value::Object(obj)
    }

    pub fn build_channel(&self) -> Result<ChannelModel> {
        match &self.channel {
            ChannelCfg::Bsc { param } => ChannelModel::bsc(*param, self.m),
            ChannelCfg::Bec { param } => ChannelModel::bec(*param, self.m),
            ChannelCfg::Qsc { param } => ChannelModel::qsc(self.q as usize, *param, self.m),
            ChannelCfg::Noiseless => ChannelModel::noiseless(self.q as usize, self.m),
            ChannelCfg::Dmc { matrix } => ChannelModel::dmc("dmc", 0.0, matrix.clone(), self.m),
        }
    }

    pub fn build_source(&self, budget: u64) -> Result<SourceModel> {
        match &self.source {
            SourceCfg::Iid { p } => SourceModel::iid(self.q, self.n, p, budget),
            SourceCfg::Explicit { probs } => {
                let mut pairs = Vec::with_capacity(probs.len());
                let mut errs = Vec::new();
                for (digits, prob) in probs {
                    match parse_block_index(digits, self.q, self.n) {
                        Ok(idx) => pairs.push((idx, *prob)),
                        Err(e) => errs.push(format!("source.probs[{digits}]: {e}")),
                    }
                }
                if !errs.is_empty() {
                    return Err(Error::Validation(errs));
                }
                SourceModel::explicit(self.q, self.n, &pairs, budget)
            }
        }
    }

    pub fn build_ensemble(&self) -> Result<CodeEnsemble> {
        match &self.code {
            CodeCfg::Uniform => Ok(CodeEnsemble::UniformMatrix { q: self.q, n: self.n, l: self.l }),
            CodeCfg::MatrixFile { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::Validation(vec![format!("cannot read matrix file {path}: {e}")])
                })?;
                let code = LinearCode::parse(&text)?;
                if code.q() != self.q || code.input_len() != self.n || code.output_len() != self.l
                {
                    return Err(Error::Validation(vec![format!(
                        "matrix file {path} has shape ({}, {}, q={}), config expects ({}, {}, q={})",
                        code.input_len(),
                        code.output_len(),
                        code.q(),
                        self.n,
                        self.l,
                        self.q
                    )]));
                }
                Ok(CodeEnsemble::point(code))
            }
            CodeCfg::MatrixRows { rows } => {
                if rows.len() != self.n || rows.iter().any(|r| r.len() != self.l) {
                    return Err(Error::Validation(vec![format!(
                        "code.rows must be an {} x {} matrix",
                        self.n, self.l
                    )]));
                }
                let g: Vec<u8> = rows.iter().flatten().copied().collect();
                let code = LinearCode::new(self.q, self.n, self.l, g)?;
                Ok(CodeEnsemble::point(code))
            }
        }
    }

    pub fn build_quant(&self, x_card: usize, budget: u64) -> Result<Quantization> {
        match &self.quant {
            QuantCfg::Preset { preset } => match preset.as_str() {
                // X = U symbol for symbol: the quantizer ignores v.
                "channel-coding" | "source-coding" => {
                    require_x_is_u(preset, self.q, self.l, x_card, self.m)?;
                    let v_count = checked_pow(self.q as usize, self.n, budget)?;
                    Quantization::identity_on_u(self.q, self.l, v_count, budget)
                }
                "deterministic" => {
                    if x_card < self.q as usize {
                        return Err(Error::Validation(vec![format!(
                            "quant preset `deterministic` needs a channel input alphabet of at \
                             least q = {} symbols, got {x_card}",
                            self.q
                        )]));
                    }
                    let v_count = checked_pow(self.q as usize, self.n, budget)?;
                    let x_of_v: Vec<u32> = (0..v_count)
                        .map(|v| embed_block(v, self.q, self.n, x_card, self.m))
                        .collect();
                    Quantization::deterministic(self.q, self.l, x_card, self.m, &x_of_v, budget)
                }
                "jscc-default" => {
                    require_x_is_u(preset, self.q, self.l, x_card, self.m)?;
                    Quantization::shift_by_v(self.q, self.n, self.l, budget)
                }
                other => Err(Error::Internal(format!("unvalidated quant preset `{other}`"))),
            },
            QuantCfg::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::Validation(vec![format!("cannot read quantization file {path}: {e}")])
                })?;
                Quantization::parse(&text, self.q, self.n, self.l, x_card, self.m, budget)
            }
        }
    }

    pub fn build_instance(&self, budget: u64) -> Result<SchemeInstance> {
        let channel = self.build_channel()?;
        let source = self.build_source(budget)?;
        let ensemble = self.build_ensemble()?;
        let quant = self.build_quant(channel.x_card(), budget)?;
        SchemeInstance::new(source, ensemble, quant, channel, self.gamma, budget)
    }
}

fn checked_pow(base: usize, exp: usize, budget: u64) -> Result<usize> {
    let c = (base as u128)
        .checked_pow(exp as u32)
        .ok_or(Error::Budget { required: u128::MAX, budget })?;
    crate::error::check_budget(c, budget)?;
    Ok(c as usize)
}

fn require_x_is_u(preset: &str, q: u8, l: usize, x_card: usize, m: usize) -> Result<()> {
    if x_card != q as usize || m != l {
        return Err(Error::Validation(vec![format!(
            "quant preset `{preset}` requires the channel input space to equal the code output \
             space ({q}^{l}), but the channel has {x_card}^{m}"
        )]));
    }
    Ok(())
}

/// Block index `v` in base q, re-read as an X^m index: the first min(n, m)
/// digits carry over, the rest are zero.
fn embed_block(v: usize, q: u8, n: usize, x_card: usize, m: usize) -> u32 {
    let vd = crate::algebra::index_to_digits(v, q as usize, n);
    let mut xd = vec![0u8; m];
    for i in 0..n.min(m) {
        xd[i] = vd[i];
    }
    crate::algebra::digits_to_index(&xd, x_card) as u32
}

fn parse_block_index(digits: &str, q: u8, n: usize) -> std::result::Result<usize, String> {
    if digits.len() != n {
        return Err(format!("expected {n} digits"));
    }
    let mut acc = 0usize;
    for ch in digits.chars() {
        let d = ch.to_digit(10).ok_or_else(|| format!("bad digit `{ch}`"))?;
        if d >= q as u32 {
            return Err(format!("digit {d} out of range for q = {q}"));
        }
        acc = acc * q as usize + d as usize;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> String {
        r#"{
            "q": 2, "n": 3, "l": 2, "m": 2,
            "source": {"kind": "iid", "p": [0.7, 0.3]},
            "channel": {"kind": "bsc", "param": 0.1},
            "code": {"kind": "uniform"},
            "quant": {"preset": "channel-coding"},
            "gamma": 0.2
        }"#
        .to_string()
    }

    #[test]
    fn parses_minimal_config_with_defaults() {
        let cfg = parse_config(&base_config()).unwrap();
        assert_eq!(cfg.q, 2);
        assert_eq!((cfg.n, cfg.l, cfg.m), (3, 2, 2));
        assert_eq!(cfg.trials, 10_000);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.source, SourceCfg::Iid { p: vec![0.7, 0.3] });
        assert!(cfg.sweep.is_none());
    }

    #[test]
    fn rejects_unknown_keys_and_lists_all_errors() {
        let text = r#"{
            "q": 2, "n": 3, "l": 2, "m": 2, "typo_key": 1,
            "source": {"kind": "iid", "p": [0.7, 0.3], "extra": 0},
            "channel": {"kind": "bsc", "param": 0.1},
            "code": {"kind": "uniform"},
            "quant": {"preset": "channel-coding"},
            "gamma": -0.5
        }"#;
        let err = parse_config(text).unwrap_err();
        match err {
            Error::Validation(errs) => {
                assert!(errs.iter().any(|e| e.contains("typo_key")), "{errs:?}");
                assert!(errs.iter().any(|e| e.contains("extra")), "{errs:?}");
                assert!(errs.iter().any(|e| e.contains("gamma")), "{errs:?}");
                assert!(errs.len() >= 3);
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn missing_required_keys_are_all_reported() {
        let err = parse_config(r#"{"q": 2}"#).unwrap_err();
        match err {
            Error::Validation(errs) => {
                for key in ["n", "l", "m", "source", "channel", "code", "quant", "gamma"] {
                    assert!(
                        errs.iter().any(|e| e.contains(&format!("`{key}`"))),
                        "missing report for {key}: {errs:?}"
                    );
                }
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_json_is_a_validation_error() {
        assert!(matches!(parse_config("{ not json"), Err(Error::Validation(_))));
    }

    #[test]
    fn json_round_trip_is_identity() {
        let mut cfg = parse_config(&base_config()).unwrap();
        cfg.sweep = Some(SweepCfg {
            gamma: vec![0.1, 0.2],
            channel_param: vec![0.05],
            lm: vec![(2, 2), (3, 3)],
        });
        cfg.rate_target = Some(1.5);
        let text = serde_json::to_string_pretty(&cfg.to_json()).unwrap();
        let back = parse_config(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn builds_a_runnable_instance() {
        let cfg = parse_config(&base_config()).unwrap();
        let inst = cfg.build_instance(1 << 20).unwrap();
        assert_eq!(inst.n(), 3);
        assert_eq!(inst.channel().m(), 2);
    }

    #[test]
    fn dmc_with_bad_row_reports_the_row_index() {
        let text = r#"{
            "q": 2, "n": 2, "l": 2, "m": 2,
            "source": {"kind": "iid", "p": [0.5, 0.5]},
            "channel": {"kind": "dmc", "matrix": [[0.9, 0.1], [0.49, 0.5]]},
            "code": {"kind": "uniform"},
            "quant": {"preset": "channel-coding"},
            "gamma": 0.1
        }"#;
        let cfg = parse_config(text).unwrap();
        let err = cfg.build_instance(1 << 20).unwrap_err();
        match err {
            Error::Validation(errs) => {
                assert!(errs.iter().any(|e| e.contains("row 1")), "{errs:?}")
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn composite_q_is_rejected() {
        let text = base_config().replace("\"q\": 2", "\"q\": 4");
        let cfg = parse_config(&text).unwrap();
        // q=4 with a binary iid source law is doubly wrong; both reported.
        let err = cfg.build_instance(1 << 20).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }
}
