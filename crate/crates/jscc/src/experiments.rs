//! Exact evaluation of the error-probability bound, Monte Carlo estimation
//! of the average error probability, rate/gamma sweeps, and the special-case
//! presets.
//!
//! Monte Carlo trials are partitioned into fixed-size blocks; each block
//! draws from a counter-derived RNG substream, so results are identical for
//! a fixed seed regardless of how many threads run the blocks.

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{digits_to_index, index_to_digits, substream};
use crate::codes;
use crate::config::{ChannelCfg, CodeCfg, QuantCfg, ResolvedConfig, SourceCfg};
use crate::error::{check_budget, Error, Result};
use crate::scheme::{decoder_registry, Decoder, SchemeInstance};

const BLOCK_SIZE: u64 = 4096;
const Z95: f64 = 1.959963984540054;

/// Wilson 95% interval half-width for k successes out of n.
pub fn wilson_half_width(k: u64, n: u64) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = Z95 * Z95;
    Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / (1.0 + z2 / nf)
}

#[derive(Debug, Clone)]
pub struct BoundResult {
    pub prob_term: f64,
    pub exp_term: f64,
    pub rhs: f64,
}

/// Exact evaluation of the two-term error bound: the probability that the
/// joint triple (V, X, Y) falls outside the decision set, plus e^{-n gamma}.
pub fn lemma2_bound(inst: &SchemeInstance) -> Result<BoundResult> {
    let quant = inst.quant();
    let v_count = quant.v_count();
    let x_count = quant.x_count();
    let y_count = inst.y_count();
    let m = inst.channel().m();
    let y_card = inst.channel().y_card();

    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for v in 0..v_count {
        let pv = inst.source().prob(v);
        if pv == 0.0 {
            continue;
        }
        for x in 0..x_count {
            let pxv = quant.p_x_given_v(v, x);
            if pxv > 0.0 {
                pairs.push((v, x, pv * pxv));
            }
        }
    }
    check_budget((pairs.len() as u128) * (y_count as u128), inst.budget())?;

    let n = inst.n() as f64;
    let mut prob_term = 0.0f64;
    let mut yd = vec![0u8; m];
    for y in 0..y_count {
        yd.copy_from_slice(&index_to_digits(y, y_card, m));
        let ln_py = inst.ln_p_y(y, &yd);
        for &(v, x, w) in &pairs {
            let lnw = inst.ln_w_xy(x, y);
            if lnw == f64::NEG_INFINITY {
                continue; // zero-probability triple
            }
            let density = (lnw - ln_py) / n;
            if density <= inst.threshold_rhs(v, x) {
                prob_term += w * lnw.exp();
            }
        }
    }
    let exp_term = (-(inst.n() as f64) * inst.gamma()).exp();
    Ok(BoundResult { prob_term, exp_term, rhs: prob_term + exp_term })
}

#[derive(Debug, Clone)]
pub struct SimParams {
    pub trials: u64,
    pub seed: u64,
    /// 0 = rayon default.
    pub threads: usize,
}

#[derive(Debug, Clone)]
pub struct SimEstimate {
    pub trials: u64,
    /// (decoder name, error count, eps_hat, 95% half-width), registry order.
    pub per_decoder: Vec<(String, u64, f64, f64)>,
}

impl SimEstimate {
    pub fn get(&self, name: &str) -> Option<(f64, f64)> {
        self.per_decoder
            .iter()
            .find(|(n, _, _, _)| n == name)
            .map(|&(_, _, e, c)| (e, c))
    }
}

/// Monte Carlo estimate of the average error probability for every
/// registered decoder. Deterministic for a fixed seed.
pub fn simulate(inst: &SchemeInstance, params: &SimParams) -> Result<SimEstimate> {
    if params.trials == 0 {
        return Err(Error::Usage("simulate requires trials >= 1".into()));
    }
    let decoders = decoder_registry();
    let run = || -> Vec<Vec<u64>> {
        let nblocks = params.trials.div_ceil(BLOCK_SIZE);
        (0..nblocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = substream(params.seed, b + 1);
                let t0 = b * BLOCK_SIZE;
                let block_trials = BLOCK_SIZE.min(params.trials - t0);
                let mut errs = vec![0u64; decoders.len()];
                let mut ybuf: Vec<u8> = Vec::with_capacity(inst.channel().m());
                let y_card = inst.channel().y_card();
                for _ in 0..block_trials {
                    let v = inst.source().sample(&mut rng);
                    let phi = inst.realize_encoder(&mut rng);
                    let x = phi.x_of_v[v] as usize;
                    inst.channel().sample_block(inst.x_digits(x), &mut ybuf, &mut rng);
                    let y_idx = digits_to_index(&ybuf, y_card);
                    for (slot, d) in errs.iter_mut().zip(decoders) {
                        if d.decode(inst, &phi, y_idx, &ybuf) != v {
                            *slot += 1;
                        }
                    }
                }
                errs
            })
            .collect()
    };
    let blocks = if params.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(params.threads)
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
        pool.install(run)
    } else {
        run()
    };

    let mut totals = vec![0u64; decoders.len()];
    for block in blocks {
        for (t, e) in totals.iter_mut().zip(block) {
            *t += e;
        }
    }
    let per_decoder = decoders
        .iter()
        .zip(&totals)
        .map(|(d, &k)| {
            let eps = k as f64 / params.trials as f64;
            (d.name().to_string(), k, eps, wilson_half_width(k, params.trials))
        })
        .collect();
    Ok(SimEstimate { trials: params.trials, per_decoder })
}

/// Exactly-enumerated average error probability of a decoder, summing over
/// the full encoder randomization space, the source, and the channel.
/// Only feasible for desk-scale instances; used as a simulation oracle.
pub fn exact_error_probability(inst: &SchemeInstance, decoder: &dyn Decoder) -> Result<f64> {
    let encoders = inst.enumerate_encoder_randomness()?;
    let y_count = inst.y_count();
    let m = inst.channel().m();
    let y_card = inst.channel().y_card();
    check_budget(
        (encoders.len() as u128)
            .saturating_mul(inst.quant().v_count() as u128)
            .saturating_mul(y_count as u128),
        inst.budget(),
    )?;
    let mut eps = 0.0f64;
    let mut yd = vec![0u8; m];
    for (phi, weight) in &encoders {
        let wf = weight.to_f64().unwrap_or(0.0);
        for y in 0..y_count {
            yd.copy_from_slice(&index_to_digits(y, y_card, m));
            let mut err_mass = 0.0f64;
            let mut any = false;
            for (v, &x) in phi.x_of_v.iter().enumerate() {
                let pv = inst.source().prob(v);
                if pv == 0.0 {
                    continue;
                }
                let lnw = inst.ln_w_xy(x as usize, y);
                if lnw == f64::NEG_INFINITY {
                    continue;
                }
                any = true;
                err_mass += pv * lnw.exp();
            }
            if !any {
                continue;
            }
            // subtract the correctly decoded mass for this (phi, y)
            let dec = decoder.decode(inst, phi, y, &yd);
            let pv = inst.source().prob(dec);
            if pv > 0.0 {
                let lnw = inst.ln_w_xy(phi.x_of_v[dec] as usize, y);
                if lnw != f64::NEG_INFINITY {
                    err_mass -= pv * lnw.exp();
                }
            }
            eps += wf * err_mass;
        }
    }
    Ok(eps.clamp(0.0, 1.0))
}

/// One output record; the CSV columns and the JSON field names coincide.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub n: usize,
    pub l: usize,
    pub m: usize,
    pub q: u8,
    pub rate: f64,
    pub gamma: f64,
    pub channel: String,
    pub param: f64,
    pub trials: u64,
    pub seed: u64,
    pub eps_map: Option<f64>,
    pub eps_map_ci: Option<f64>,
    pub eps_thr: Option<f64>,
    pub eps_thr_ci: Option<f64>,
    pub bound_prob: Option<f64>,
    pub bound_exp: Option<f64>,
    pub bound_rhs: Option<f64>,
    pub max_alpha: Option<f64>,
    pub log_rate: Option<f64>,
    pub runtime_ms: u64,
    pub error: Option<String>,
}

pub const CSV_HEADER: &str = "n,l,m,q,rate,gamma,channel,param,trials,seed,eps_map,eps_map_ci,eps_thr,eps_thr_ci,bound_prob,bound_exp,bound_rhs,max_alpha,log_rate,runtime_ms,error";

fn opt(v: &Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_rows_csv<W: std::io::Write>(rows: &[ResultRow], w: &mut W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.l,
            r.m,
            r.q,
            r.rate,
            r.gamma,
            r.channel,
            r.param,
            r.trials,
            r.seed,
            opt(&r.eps_map),
            opt(&r.eps_map_ci),
            opt(&r.eps_thr),
            opt(&r.eps_thr_ci),
            opt(&r.bound_prob),
            opt(&r.bound_exp),
            opt(&r.bound_rhs),
            opt(&r.max_alpha),
            opt(&r.log_rate),
            r.runtime_ms,
            r.error.as_deref().unwrap_or_default()
        )?;
    }
    Ok(())
}

pub fn write_rows_json<W: std::io::Write>(rows: &[ResultRow], w: &mut W) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, rows)
        .map_err(|e| Error::Internal(format!("json serialization: {e}")))?;
    writeln!(w)?;
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub budget: u64,
    pub threads: usize,
    /// When false, runtime_ms is recorded as 0 so that repeated runs with
    /// the same seed produce byte-identical output files.
    pub timing: bool,
}

fn empty_row(cfg: &ResolvedConfig) -> ResultRow {
    ResultRow {
        n: cfg.n,
        l: cfg.l,
        m: cfg.m,
        q: cfg.q,
        rate: cfg.rate_target.unwrap_or(cfg.n as f64 / cfg.m as f64),
        gamma: cfg.gamma,
        channel: cfg.channel.kind_name().to_string(),
        param: cfg.channel.param_value(),
        trials: cfg.trials,
        seed: cfg.seed,
        eps_map: None,
        eps_map_ci: None,
        eps_thr: None,
        eps_thr_ci: None,
        bound_prob: None,
        bound_exp: None,
        bound_rhs: None,
        max_alpha: None,
        log_rate: None,
        runtime_ms: 0,
        error: None,
    }
}

/// Builds the instance for `cfg`, runs the bound, the goodness metric and the
/// simulation, and reports everything in one row. Bound and goodness are
/// best-effort: a budget overrun leaves their fields empty rather than
/// failing the simulation.
pub fn run_point(cfg: &ResolvedConfig, opts: &RunOptions) -> Result<ResultRow> {
    let start = std::time::Instant::now();
    let mut row = empty_row(cfg);
    let inst = cfg.build_instance(opts.budget)?;

    match lemma2_bound(&inst) {
        Ok(b) => {
            row.bound_prob = Some(b.prob_term);
            row.bound_exp = Some(b.exp_term);
            row.bound_rhs = Some(b.rhs);
        }
        Err(Error::Budget { .. }) => {}
        Err(e) => return Err(e),
    }
    match codes::goodness(inst.ensemble(), opts.budget) {
        Ok((ma, lr)) => {
            row.max_alpha = ma.to_f64();
            row.log_rate = Some(lr);
        }
        Err(Error::Budget { .. }) => {}
        Err(e) => return Err(e),
    }

    let est = simulate(
        &inst,
        &SimParams { trials: cfg.trials, seed: cfg.seed, threads: opts.threads },
    )?;
    if let Some((e, c)) = est.get("map") {
        row.eps_map = Some(e);
        row.eps_map_ci = Some(c);
    }
    if let Some((e, c)) = est.get("threshold") {
        row.eps_thr = Some(e);
        row.eps_thr_ci = Some(c);
    }
    if opts.timing {
        row.runtime_ms = start.elapsed().as_millis() as u64;
    }
    Ok(row)
}

/// Bound-only evaluation (no simulation). Budget errors propagate.
pub fn run_bound(cfg: &ResolvedConfig, opts: &RunOptions) -> Result<ResultRow> {
    let start = std::time::Instant::now();
    let mut row = empty_row(cfg);
    let inst = cfg.build_instance(opts.budget)?;
    let b = lemma2_bound(&inst)?;
    row.bound_prob = Some(b.prob_term);
    row.bound_exp = Some(b.exp_term);
    row.bound_rhs = Some(b.rhs);
    if opts.timing {
        row.runtime_ms = start.elapsed().as_millis() as u64;
    }
    Ok(row)
}

/// Runs the full grid configured in `cfg.sweep`. Per-point errors are
/// recorded in the row's `error` column and the sweep continues.
pub fn sweep(cfg: &ResolvedConfig, opts: &RunOptions) -> Vec<ResultRow> {
    let grid = cfg.sweep.clone().unwrap_or_default();
    let gammas = if grid.gamma.is_empty() { vec![cfg.gamma] } else { grid.gamma.clone() };
    let params = if grid.channel_param.is_empty() {
        vec![cfg.channel.param_value()]
    } else {
        grid.channel_param.clone()
    };
    let lms = if grid.lm.is_empty() { vec![(cfg.l, cfg.m)] } else { grid.lm.clone() };

    let mut rows = Vec::new();
    for &(l, m) in &lms {
        for &param in &params {
            for &gamma in &gammas {
                let mut point = cfg.clone();
                point.l = l;
                point.m = m;
                point.gamma = gamma;
                point.channel = point.channel.with_param(param);
                point.sweep = None;
                point.rate_target = Some(point.n as f64 / m as f64);
                match run_point(&point, opts) {
                    Ok(row) => rows.push(row),
                    Err(e) => {
                        let mut row = empty_row(&point);
                        row.error = Some(e.to_string().replace('\n', "; ").replace(',', ";"));
                        rows.push(row);
                    }
                }
            }
        }
    }
    rows
}

pub const PRESET_NAMES: &[(&str, &str)] = &[
    ("channel-coding", "uniform source, quantization independent of the source block"),
    ("source-coding", "noiseless channel with X = U: compression through the code only"),
    ("jscc-default", "source-correlated quantization over a noisy channel"),
];

/// Built-in experiment configurations for the special cases of the scheme.
pub fn preset(name: &str) -> Result<ResolvedConfig> {
    let cfg = match name {
        "channel-coding" => ResolvedConfig {
            q: 2,
            n: 4,
            l: 4,
            m: 4,
            source: SourceCfg::Iid { p: vec![0.5, 0.5] },
            channel: ChannelCfg::Bsc { param: 0.05 },
            code: CodeCfg::Uniform,
            quant: QuantCfg::Preset { preset: "channel-coding".into() },
            gamma: 0.1,
            trials: 10_000,
            seed: 1,
            rate_target: None,
            sweep: None,
        },
        "source-coding" => ResolvedConfig {
            q: 2,
            n: 8,
            l: 6,
            m: 6,
            source: SourceCfg::Iid { p: vec![0.9, 0.1] },
            channel: ChannelCfg::Noiseless,
            code: CodeCfg::Uniform,
            quant: QuantCfg::Preset { preset: "source-coding".into() },
            gamma: 0.05,
            trials: 10_000,
            seed: 1,
            rate_target: None,
            sweep: None,
        },
        "jscc-default" => ResolvedConfig {
            q: 2,
            n: 4,
            l: 4,
            m: 4,
            source: SourceCfg::Iid { p: vec![0.9, 0.1] },
            channel: ChannelCfg::Bsc { param: 0.05 },
            code: CodeCfg::Uniform,
            quant: QuantCfg::Preset { preset: "jscc-default".into() },
            gamma: 0.1,
            trials: 10_000,
            seed: 1,
            rate_target: None,
            sweep: None,
        },
        other => {
            return Err(Error::Usage(format!(
                "unknown preset `{other}`; known presets: channel-coding, source-coding, jscc-default"
            )))
        }
    };
    Ok(cfg)
}
