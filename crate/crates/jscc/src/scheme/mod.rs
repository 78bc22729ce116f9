//! The full encoder/decoder chain: source and channel models, the
//! quantization map, the randomized encoder, the beta/beta' pairwise
//! dependence coefficients, information density, and the decision set
//! used by the threshold decoder.

pub mod decoder;

use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::algebra::{digits_to_index, index_to_digits, FieldContext, Permutation, QVec};
use crate::codes::{randomize, AlphaTable, CodeEnsemble, RandomizedCode};
use crate::error::{check_budget, Error, Result};
use crate::spectra::{enumerate_types, type_of_slice, Rat};

const PROB_TOL: f64 = 1e-9;

/// Distribution of the source block V^n, fully materialized over q^n values.
#[derive(Debug, Clone)]
pub struct SourceModel {
    q: u8,
    n: usize,
    probs: Vec<f64>,
    cum: Vec<f64>,
}

impl SourceModel {
    /// i.i.d. per-letter distribution `p` (length q).
    pub fn iid(q: u8, n: usize, p: &[f64], budget: u64) -> Result<Self> {
        FieldContext::new(q)?;
        if p.len() != q as usize {
            return Err(Error::Validation(vec![format!(
                "source distribution has {} entries, expected q = {q}",
                p.len()
            )]));
        }
        validate_dist(p, "source distribution")?;
        let count = checked_card(q as usize, n, budget)?;
        let mut probs = vec![0.0f64; count];
        for (idx, slot) in probs.iter_mut().enumerate() {
            let digits = index_to_digits(idx, q as usize, n);
            *slot = digits.iter().map(|&d| p[d as usize]).product();
        }
        Ok(Self::from_probs(q, n, probs))
    }

    /// Explicit distribution over V^n, given as (block index, probability).
    pub fn explicit(q: u8, n: usize, entries: &[(usize, f64)], budget: u64) -> Result<Self> {
        FieldContext::new(q)?;
        let count = checked_card(q as usize, n, budget)?;
        let mut probs = vec![0.0f64; count];
        for &(idx, p) in entries {
            if idx >= count {
                return Err(Error::Validation(vec![format!(
                    "explicit source index {idx} out of range (q^n = {count})"
                )]));
            }
            probs[idx] += p;
        }
        validate_dist(&probs, "explicit source")?;
        Ok(Self::from_probs(q, n, probs))
    }

    fn from_probs(q: u8, n: usize, probs: Vec<f64>) -> Self {
        let mut cum = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cum.push(acc);
        }
        SourceModel { q, n, probs, cum }
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn block_count(&self) -> usize {
        self.probs.len()
    }

    pub fn prob(&self, v_idx: usize) -> f64 {
        self.probs[v_idx]
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        match self.cum.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
            Ok(i) => (i + 1).min(self.probs.len() - 1),
            Err(i) => i.min(self.probs.len() - 1),
        }
    }
}

fn validate_dist(p: &[f64], what: &str) -> Result<()> {
    let mut errs = Vec::new();
    for (i, &x) in p.iter().enumerate() {
        if !(0.0..=1.0 + PROB_TOL).contains(&x) || !x.is_finite() {
            errs.push(format!("{what}: entry {i} = {x} is not a probability"));
        }
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        errs.push(format!("{what}: entries sum to {sum}, expected 1"));
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(errs))
    }
}

fn checked_card(base: usize, exp: usize, budget: u64) -> Result<usize> {
    let c = (base as u128)
        .checked_pow(exp as u32)
        .ok_or(Error::Budget { required: u128::MAX, budget })?;
    check_budget(c, budget)?;
    Ok(c as usize)
}

/// Discrete memoryless channel: per-letter row-stochastic matrix, extended
/// memorylessly to blocks of length m.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    name: String,
    param: f64,
    x_card: usize,
    y_card: usize,
    m: usize,
    w: Vec<f64>,
    ln_w: Vec<f64>,
    cum: Vec<f64>,
}

impl ChannelModel {
    pub fn dmc(name: &str, param: f64, rows: Vec<Vec<f64>>, m: usize) -> Result<Self> {
        let x_card = rows.len();
        if x_card == 0 {
            return Err(Error::Validation(vec!["channel matrix has no rows".into()]));
        }
        let y_card = rows[0].len();
        let mut errs = Vec::new();
        if y_card == 0 {
            errs.push("channel matrix has no columns".into());
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != y_card {
                errs.push(format!("channel row {i} has {} entries, expected {y_card}", row.len()));
                continue;
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                errs.push(format!("channel row {i} sums to {sum}, expected 1"));
            }
            for (j, &p) in row.iter().enumerate() {
                if !(0.0..=1.0 + PROB_TOL).contains(&p) || !p.is_finite() {
                    errs.push(format!("channel entry ({i},{j}) = {p} is not a probability"));
                }
            }
        }
        if m == 0 {
            errs.push("channel block length m must be >= 1".into());
        }
        if !errs.is_empty() {
            return Err(Error::Validation(errs));
        }
        let w: Vec<f64> = rows.into_iter().flatten().collect();
        let ln_w = w.iter().map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY }).collect();
        let mut cum = Vec::with_capacity(w.len());
        for x in 0..x_card {
            let mut acc = 0.0;
            for y in 0..y_card {
                acc += w[x * y_card + y];
                cum.push(acc);
            }
        }
        Ok(ChannelModel { name: name.to_string(), param, x_card, y_card, m, w, ln_w, cum })
    }

    pub fn bsc(eps: f64, m: usize) -> Result<Self> {
        Self::dmc("bsc", eps, vec![vec![1.0 - eps, eps], vec![eps, 1.0 - eps]], m)
    }

    /// Binary erasure channel; the erasure symbol is output value 2.
    pub fn bec(eps: f64, m: usize) -> Result<Self> {
        Self::dmc("bec", eps, vec![vec![1.0 - eps, 0.0, eps], vec![0.0, 1.0 - eps, eps]], m)
    }

    /// k-ary symmetric channel: stays with prob 1-eps, otherwise uniform
    /// over the other k-1 symbols.
    pub fn qsc(k: usize, eps: f64, m: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::Validation(vec!["qsc needs alphabet size >= 2".into()]));
        }
        let rows = (0..k)
            .map(|x| {
                (0..k)
                    .map(|y| if y == x { 1.0 - eps } else { eps / (k - 1) as f64 })
                    .collect()
            })
            .collect();
        Self::dmc("qsc", eps, rows, m)
    }

    pub fn noiseless(k: usize, m: usize) -> Result<Self> {
        let rows = (0..k)
            .map(|x| (0..k).map(|y| if y == x { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::dmc("noiseless", 0.0, rows, m)
    }

    /// All rows identical: the output is independent of the input.
    pub fn pure_noise(x_card: usize, out_dist: &[f64], m: usize) -> Result<Self> {
        let rows = (0..x_card).map(|_| out_dist.to_vec()).collect();
        Self::dmc("pure-noise", 0.0, rows, m)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn param(&self) -> f64 {
        self.param
    }

    pub fn x_card(&self) -> usize {
        self.x_card
    }

    pub fn y_card(&self) -> usize {
        self.y_card
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn w(&self, x: usize, y: usize) -> f64 {
        self.w[x * self.y_card + y]
    }

    pub fn ln_w(&self, x: usize, y: usize) -> f64 {
        self.ln_w[x * self.y_card + y]
    }

    /// Memoryless product law W^m(y|x) = prod W(y_i|x_i).
    pub fn w_block(&self, x: &[u8], y: &[u8]) -> f64 {
        x.iter().zip(y).map(|(&a, &b)| self.w(a as usize, b as usize)).product()
    }

    pub fn ln_w_block(&self, x: &[u8], y: &[u8]) -> f64 {
        x.iter().zip(y).map(|(&a, &b)| self.ln_w(a as usize, b as usize)).sum()
    }

    pub fn sample_block<R: Rng>(&self, x: &[u8], y: &mut Vec<u8>, rng: &mut R) {
        y.clear();
        for &xi in x {
            let u: f64 = rng.gen();
            let row = &self.cum[xi as usize * self.y_card..(xi as usize + 1) * self.y_card];
            let mut out = self.y_card - 1;
            for (j, &c) in row.iter().enumerate() {
                if u < c {
                    out = j;
                    break;
                }
            }
            y.push(out as u8);
        }
    }
}

/// Deterministic map q_n: V^n x U^l -> X^m with O(1) preimage-size queries.
#[derive(Debug, Clone)]
pub struct Quantization {
    q_u: u8,
    l: usize,
    x_card: usize,
    m: usize,
    v_count: usize,
    u_count: usize,
    x_count: usize,
    /// table[v * u_count + u] = x
    table: Vec<u32>,
    /// pre[v * x_count + x] = |q_n^{-1}(v, x)|
    pre: Vec<u32>,
}

impl Quantization {
    fn from_table(
        q_u: u8,
        l: usize,
        x_card: usize,
        m: usize,
        v_count: usize,
        table: Vec<u32>,
        budget: u64,
    ) -> Result<Self> {
        let u_count = checked_card(q_u as usize, l, budget)?;
        let x_count = checked_card(x_card, m, budget)?;
        check_budget((v_count as u128) * (u_count as u128), budget)?;
        if table.len() != v_count * u_count {
            return Err(Error::Internal("quantization table has wrong size".into()));
        }
        if table.iter().any(|&x| x as usize >= x_count) {
            return Err(Error::Validation(vec![
                "quantization maps outside the channel input space".into(),
            ]));
        }
        let mut pre = vec![0u32; v_count * x_count];
        for v in 0..v_count {
            for u in 0..u_count {
                pre[v * x_count + table[v * u_count + u] as usize] += 1;
            }
        }
        Ok(Quantization { q_u, l, x_card, m, v_count, u_count, x_count, table, pre })
    }

    /// q_n(v, u) = u; requires X = U symbol for symbol (x_card = q, m = l).
    pub fn identity_on_u(q_u: u8, l: usize, v_count: usize, budget: u64) -> Result<Self> {
        let u_count = checked_card(q_u as usize, l, budget)?;
        let mut table = Vec::with_capacity(v_count * u_count);
        for _ in 0..v_count {
            table.extend(0..u_count as u32);
        }
        Self::from_table(q_u, l, q_u as usize, l, v_count, table, budget)
    }

    /// q_n(v, u) = x(v) for all u: the code output is discarded.
    pub fn deterministic(
        q_u: u8,
        l: usize,
        x_card: usize,
        m: usize,
        x_of_v: &[u32],
        budget: u64,
    ) -> Result<Self> {
        let v_count = x_of_v.len();
        let u_count = checked_card(q_u as usize, l, budget)?;
        let mut table = Vec::with_capacity(v_count * u_count);
        for &x in x_of_v {
            table.extend(std::iter::repeat(x).take(u_count));
        }
        Self::from_table(q_u, l, x_card, m, v_count, table, budget)
    }

    /// q_n(v, u) = u + embed(v): source-correlated bijection in u. The first
    /// min(n, l) digits of v are added componentwise; requires X = U, m = l.
    pub fn shift_by_v(q_u: u8, n: usize, l: usize, budget: u64) -> Result<Self> {
        let v_count = checked_card(q_u as usize, n, budget)?;
        let u_count = checked_card(q_u as usize, l, budget)?;
        let q = q_u as usize;
        let mut table = Vec::with_capacity(v_count * u_count);
        for v in 0..v_count {
            let vd = index_to_digits(v, q, n);
            let mut shift = vec![0u8; l];
            for i in 0..n.min(l) {
                shift[i] = vd[i];
            }
            for u in 0..u_count {
                let ud = index_to_digits(u, q, l);
                let xd: Vec<u8> = ud
                    .iter()
                    .zip(&shift)
                    .map(|(&a, &b)| ((a as usize + b as usize) % q) as u8)
                    .collect();
                table.push(digits_to_index(&xd, q) as u32);
            }
        }
        Self::from_table(q_u, l, q_u as usize, l, v_count, table, budget)
    }

    /// Builds a quantization realizing a target conditional distribution
    /// P_{X|V}: for each v, preimage sizes are target(x|v) * q^l. In strict
    /// mode the scaled probabilities must already be integers; otherwise
    /// largest-remainder rounding is applied. u-values are assigned to
    /// x-values in lexicographic order.
    pub fn from_target(
        q_u: u8,
        l: usize,
        x_card: usize,
        m: usize,
        target: &[Vec<f64>],
        strict: bool,
        budget: u64,
    ) -> Result<Self> {
        let u_count = checked_card(q_u as usize, l, budget)?;
        let x_count = checked_card(x_card, m, budget)?;
        let v_count = target.len();
        let mut table = Vec::with_capacity(v_count * u_count);
        for (v, row) in target.iter().enumerate() {
            if row.len() != x_count {
                return Err(Error::Validation(vec![format!(
                    "target row {v} has {} entries, expected {x_count}",
                    row.len()
                )]));
            }
            validate_dist(row, &format!("target row {v}"))?;
            let counts = apportion(row, u_count, strict)
                .map_err(|e| Error::Validation(vec![format!("target row {v}: {e}")]))?;
            for (x, &c) in counts.iter().enumerate() {
                table.extend(std::iter::repeat(x as u32).take(c));
            }
        }
        Self::from_table(q_u, l, x_card, m, v_count, table, budget)
    }

    /// Table file: one line per (v, u) pair, `v_digits u_digits x_digits`,
    /// each rendered as fixed-length digit strings in the respective base.
    pub fn parse(
        text: &str,
        q_u: u8,
        n: usize,
        l: usize,
        x_card: usize,
        m: usize,
        budget: u64,
    ) -> Result<Self> {
        let v_count = checked_card(q_u as usize, n, budget)?;
        let u_count = checked_card(q_u as usize, l, budget)?;
        let mut table = vec![u32::MAX; v_count * u_count];
        let mut errs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                errs.push(format!("line {}: expected 3 fields", lineno + 1));
                continue;
            }
            let parse_digits = |s: &str, base: usize, len: usize| -> std::result::Result<usize, String> {
                if s.len() != len {
                    return Err(format!("`{s}` should have {len} digits"));
                }
                let mut acc = 0usize;
                for ch in s.chars() {
                    let d = ch.to_digit(10).ok_or_else(|| format!("bad digit in `{s}`"))? as usize;
                    if d >= base {
                        return Err(format!("digit {d} out of range for base {base}"));
                    }
                    acc = acc * base + d;
                }
                Ok(acc)
            };
            let v = parse_digits(fields[0], q_u as usize, n);
            let u = parse_digits(fields[1], q_u as usize, l);
            let x = parse_digits(fields[2], x_card, m);
            match (v, u, x) {
                (Ok(v), Ok(u), Ok(x)) => table[v * u_count + u] = x as u32,
                (v, u, x) => {
                    for r in [v, u, x] {
                        if let Err(e) = r {
                            errs.push(format!("line {}: {e}", lineno + 1));
                        }
                    }
                }
            }
        }
        if table.iter().any(|&x| x == u32::MAX) {
            errs.push("quantization table is not a total function on V^n x U^l".into());
        }
        if !errs.is_empty() {
            return Err(Error::Validation(errs));
        }
        Self::from_table(q_u, l, x_card, m, v_count, table, budget)
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn q_u(&self) -> u8 {
        self.q_u
    }

    pub fn x_card(&self) -> usize {
        self.x_card
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn v_count(&self) -> usize {
        self.v_count
    }

    pub fn u_count(&self) -> usize {
        self.u_count
    }

    pub fn x_count(&self) -> usize {
        self.x_count
    }

    pub fn apply(&self, v_idx: usize, u_idx: usize) -> usize {
        self.table[v_idx * self.u_count + u_idx] as usize
    }

    pub fn preimage_count(&self, v_idx: usize, x_idx: usize) -> u32 {
        self.pre[v_idx * self.x_count + x_idx]
    }

    pub fn preimage(&self, v_idx: usize, x_idx: usize) -> Vec<usize> {
        (0..self.u_count)
            .filter(|&u| self.table[v_idx * self.u_count + u] as usize == x_idx)
            .collect()
    }

    /// P_{X|V}(x|v) = |q_n^{-1}(v,x)| / |U|^l.
    pub fn p_x_given_v(&self, v_idx: usize, x_idx: usize) -> f64 {
        self.preimage_count(v_idx, x_idx) as f64 / self.u_count as f64
    }

    /// True when P_{X|V}(.|v) is uniform over the whole of X^m for every v.
    pub fn conditional_is_uniform(&self) -> bool {
        if self.u_count % self.x_count != 0 {
            return false;
        }
        let expect = (self.u_count / self.x_count) as u32;
        self.pre.iter().all(|&c| c == expect)
    }

    /// Recomputes preimage counts from the table and compares to the cache.
    pub fn verify_cache(&self) -> bool {
        let mut fresh = vec![0u32; self.v_count * self.x_count];
        for v in 0..self.v_count {
            for u in 0..self.u_count {
                fresh[v * self.x_count + self.table[v * self.u_count + u] as usize] += 1;
            }
        }
        fresh == self.pre
    }
}

/// Largest-remainder apportionment of `total` units proportional to `probs`.
/// In strict mode every scaled probability must already be an integer.
fn apportion(probs: &[f64], total: usize, strict: bool) -> std::result::Result<Vec<usize>, String> {
    let scaled: Vec<f64> = probs.iter().map(|&p| p * total as f64).collect();
    if strict {
        for &s in &scaled {
            if (s - s.round()).abs() > 1e-6 {
                return Err(format!(
                    "probability * {total} = {s} is not an integer (strict mode)"
                ));
            }
        }
    }
    let mut counts: Vec<usize> = scaled.iter().map(|&s| s.floor() as usize).collect();
    // nudge exact-integer floats suffering from representation error
    for (c, &s) in counts.iter_mut().zip(&scaled) {
        if (s - s.round()).abs() < 1e-9 {
            *c = s.round() as usize;
        }
    }
    let assigned: usize = counts.iter().sum();
    if assigned > total {
        return Err("rounded counts exceed the available u-space".into());
    }
    let mut rem = total - assigned;
    if rem > 0 {
        if strict {
            return Err(format!("scaled probabilities sum to {assigned}, expected {total} (strict mode)"));
        }
        let mut order: Vec<usize> = (0..probs.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = scaled[a] - scaled[a].floor();
            let rb = scaled[b] - scaled[b].floor();
            rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
        });
        for i in order {
            if rem == 0 {
                break;
            }
            counts[i] += 1;
            rem -= 1;
        }
    }
    Ok(counts)
}

/// How beta'(v, x) is evaluated for decoding.
#[derive(Debug, Clone)]
enum BetaPrimeEval {
    /// Uniform-matrix ensemble: alpha = 1 off the zero type, so beta' = 1.
    ConstantOne,
    /// Dense ln-table over (v, x).
    Dense(Vec<f64>),
}

/// Exact per-block channel-output law P_{Y^m}.
#[derive(Debug, Clone)]
enum OutputLaw {
    /// P_{X^m} uniform: P_{Y^m} factorizes into per-letter marginals.
    Factorized(Vec<f64>),
    /// Dense table over y indices.
    Dense(Vec<f64>),
}

/// A sample of all encoder randomness, realized as a full map v -> x.
#[derive(Debug, Clone)]
pub struct RealizedEncoder {
    pub x_of_v: Vec<u32>,
}

/// Source + code ensemble + quantization + channel + slack, with the exact
/// caches needed by the decoders and the error bound.
#[derive(Debug)]
pub struct SchemeInstance {
    source: SourceModel,
    ensemble: CodeEnsemble,
    quant: Quantization,
    channel: ChannelModel,
    gamma: f64,
    budget: u64,
    n: usize,
    l: usize,
    alpha: AlphaTable,
    beta_prime_eval: BetaPrimeEval,
    output_law: OutputLaw,
    ln_pv: Vec<f64>,
    x_digits: Vec<u8>,
    /// ln W^m(y|x) for every (x_idx, y_idx) pair.
    ln_w_xy: Vec<f64>,
}

impl SchemeInstance {
    pub fn new(
        source: SourceModel,
        ensemble: CodeEnsemble,
        quant: Quantization,
        channel: ChannelModel,
        gamma: f64,
        budget: u64,
    ) -> Result<Self> {
        ensemble.validate()?;
        let (q, n, l) = ensemble.shape();
        let mut errs = Vec::new();
        if source.q() != q {
            errs.push(format!("source alphabet q={} does not match code q={q}", source.q()));
        }
        if source.n() != n {
            errs.push(format!("source block length {} does not match code input {n}", source.n()));
        }
        if quant.q_u() != q || quant.l() != l {
            errs.push("quantization U-space does not match the code output".into());
        }
        if quant.v_count() != source.block_count() {
            errs.push("quantization V-space does not match the source".into());
        }
        if quant.x_card() != channel.x_card() || quant.m() != channel.m() {
            errs.push(format!(
                "quantization output ({}^{}) does not match channel input ({}^{})",
                quant.x_card(),
                quant.m(),
                channel.x_card(),
                channel.m()
            ));
        }
        if !(gamma > 0.0) {
            errs.push(format!("gamma must be positive, got {gamma}"));
        }
        if !errs.is_empty() {
            return Err(Error::Validation(errs));
        }

        let alpha = crate::codes::alpha_of_ensemble(&ensemble, budget)?;
        let ln_pv = (0..source.block_count())
            .map(|v| {
                let p = source.prob(v);
                if p > 0.0 { p.ln() } else { f64::NEG_INFINITY }
            })
            .collect();

        let x_count = quant.x_count();
        let y_count = checked_card(channel.y_card(), channel.m(), budget)?;
        check_budget((x_count as u128) * (y_count as u128), budget)?;
        let mut x_digits = Vec::with_capacity(x_count * channel.m());
        for x in 0..x_count {
            x_digits.extend(index_to_digits(x, channel.x_card(), channel.m()));
        }
        let m = channel.m();
        let mut ln_w_xy = Vec::with_capacity(x_count * y_count);
        let mut yd = vec![0u8; m];
        for y in 0..y_count {
            yd.copy_from_slice(&index_to_digits(y, channel.y_card(), m));
            for x in 0..x_count {
                ln_w_xy.push(channel.ln_w_block(&x_digits[x * m..(x + 1) * m], &yd));
            }
        }

        let mut inst = SchemeInstance {
            source,
            ensemble,
            quant,
            channel,
            gamma,
            budget,
            n,
            l,
            alpha,
            beta_prime_eval: BetaPrimeEval::ConstantOne,
            output_law: OutputLaw::Factorized(Vec::new()),
            ln_pv,
            x_digits,
            ln_w_xy,
        };
        inst.beta_prime_eval = inst.build_beta_prime()?;
        inst.output_law = inst.build_output_law(y_count)?;
        Ok(inst)
    }

    fn build_beta_prime(&self) -> Result<BetaPrimeEval> {
        if matches!(self.ensemble, CodeEnsemble::UniformMatrix { .. }) {
            return Ok(BetaPrimeEval::ConstantOne);
        }
        let v_count = self.quant.v_count();
        let x_count = self.quant.x_count();
        let states = (v_count as u128)
            * (x_count as u128)
            * (self.quant.u_count() as u128)
            * (self.quant.u_count() as u128);
        check_budget(states, self.budget)?;
        let mut table = vec![f64::NEG_INFINITY; v_count * x_count];
        for v in 0..v_count {
            for x in 0..x_count {
                if self.quant.preimage_count(v, x) == 0 {
                    continue;
                }
                let bp = self.beta_prime_exact(v, x)?;
                table[v * x_count + x] = bp.to_f64().map(|b| b.ln()).unwrap_or(f64::NAN);
            }
        }
        Ok(BetaPrimeEval::Dense(table))
    }

    fn build_output_law(&self, y_count: usize) -> Result<OutputLaw> {
        let y_card = self.channel.y_card();
        if self.quant.conditional_is_uniform() {
            // per-letter output marginal under a uniform channel input
            let x_card = self.channel.x_card();
            let letter: Vec<f64> = (0..y_card)
                .map(|y| (0..x_card).map(|x| self.channel.w(x, y)).sum::<f64>() / x_card as f64)
                .collect();
            return Ok(OutputLaw::Factorized(letter));
        }
        let v_count = self.quant.v_count();
        let x_count = self.quant.x_count();
        check_budget((v_count as u128) * (x_count as u128) * (y_count as u128), self.budget)?;
        let mut py = vec![0.0f64; y_count];
        for v in 0..v_count {
            let pv = self.source.prob(v);
            if pv == 0.0 {
                continue;
            }
            for x in 0..x_count {
                let pxv = self.quant.p_x_given_v(v, x);
                if pxv == 0.0 {
                    continue;
                }
                let w = pv * pxv;
                for (y, slot) in py.iter_mut().enumerate() {
                    let lnw = self.ln_w_xy[y * x_count + x];
                    if lnw.is_finite() {
                        *slot += w * lnw.exp();
                    }
                }
            }
        }
        let mut total = 0.0;
        for &p in &py {
            total += p;
        }
        debug_assert!((total - 1.0).abs() < 1e-6, "P_Y sums to {total}");
        Ok(OutputLaw::Dense(py))
    }

    pub fn source(&self) -> &SourceModel {
        &self.source
    }

    pub fn ensemble(&self) -> &CodeEnsemble {
        &self.ensemble
    }

    pub fn quant(&self) -> &Quantization {
        &self.quant
    }

    pub fn channel(&self) -> &ChannelModel {
        &self.channel
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn alpha(&self) -> &AlphaTable {
        &self.alpha
    }

    pub fn x_digits(&self, x_idx: usize) -> &[u8] {
        let m = self.channel.m();
        &self.x_digits[x_idx * m..(x_idx + 1) * m]
    }

    pub fn ln_w_xy(&self, x_idx: usize, y_idx: usize) -> f64 {
        self.ln_w_xy[y_idx * self.quant.x_count() + x_idx]
    }

    pub fn ln_pv(&self, v_idx: usize) -> f64 {
        self.ln_pv[v_idx]
    }

    pub fn y_count(&self) -> usize {
        self.ln_w_xy.len() / self.quant.x_count()
    }

    /// ln P_{Y^m}(y), exact (enumerated, not estimated).
    pub fn ln_p_y(&self, y_idx: usize, y: &[u8]) -> f64 {
        match &self.output_law {
            OutputLaw::Factorized(letter) => {
                y.iter().map(|&b| {
                    let p = letter[b as usize];
                    if p > 0.0 { p.ln() } else { f64::NEG_INFINITY }
                }).sum()
            }
            OutputLaw::Dense(py) => {
                let p = py[y_idx];
                if p > 0.0 { p.ln() } else { f64::NEG_INFINITY }
            }
        }
    }

    /// (1/n) ln [ W^m(y|x) / P_{Y^m}(y) ] in nats.
    pub fn information_density(&self, x_idx: usize, y_idx: usize, y: &[u8]) -> Result<f64> {
        let ln_py = self.ln_p_y(y_idx, y);
        if ln_py == f64::NEG_INFINITY {
            return Err(Error::Domain("information density undefined: P_Y(y) = 0".into()));
        }
        Ok((self.ln_w_xy(x_idx, y_idx) - ln_py) / self.n as f64)
    }

    /// Exact beta'(v, x): max over nonzero input types P and offsets u1 of
    /// the preimage-averaged alpha.
    pub fn beta_prime_exact(&self, v_idx: usize, x_idx: usize) -> Result<Rat> {
        let pre = self.quant.preimage(v_idx, x_idx);
        if pre.is_empty() {
            return Err(Error::Domain(format!(
                "beta' undefined: q_n^{{-1}}(v={v_idx}, x={x_idx}) is empty"
            )));
        }
        let q = self.source.q();
        let size = Rat::from(num_bigint::BigInt::from(pre.len()));
        let mut best: Option<Rat> = None;
        let u2_digits: Vec<Vec<u8>> = pre
            .iter()
            .map(|&u| index_to_digits(u, q as usize, self.l))
            .collect();
        for p in enumerate_types(self.n as u32, q as usize) {
            if p.is_zero_type() {
                continue;
            }
            for u1 in 0..self.quant.u_count() {
                let u1d = index_to_digits(u1, q as usize, self.l);
                let mut acc = Rat::zero();
                for u2d in &u2_digits {
                    let diff: Vec<u8> = u2d
                        .iter()
                        .zip(&u1d)
                        .map(|(&a, &b)| ((a as u16 + q as u16 - b as u16) % q as u16) as u8)
                        .collect();
                    acc += self.alpha.get(&p, &type_of_slice(&diff, q as usize));
                }
                let val = acc / &size;
                if best.as_ref().map_or(true, |b| val > *b) {
                    best = Some(val);
                }
            }
        }
        Ok(best.unwrap_or_else(Rat::one))
    }

    /// Exact beta(v1, v2, x1, x2): preimage-pair average of
    /// alpha(P_{v2-v1}, P_{u2-u1}).
    pub fn beta_exact(
        &self,
        v1_idx: usize,
        v2_idx: usize,
        x1_idx: usize,
        x2_idx: usize,
    ) -> Result<Rat> {
        if v1_idx == v2_idx {
            return Err(Error::Usage("beta requires v1 != v2".into()));
        }
        let pre1 = self.quant.preimage(v1_idx, x1_idx);
        let pre2 = self.quant.preimage(v2_idx, x2_idx);
        if pre1.is_empty() || pre2.is_empty() {
            return Err(Error::Domain("beta undefined: empty preimage".into()));
        }
        let q = self.source.q();
        let v1 = index_to_digits(v1_idx, q as usize, self.n);
        let v2 = index_to_digits(v2_idx, q as usize, self.n);
        let dv: Vec<u8> = v2
            .iter()
            .zip(&v1)
            .map(|(&a, &b)| ((a as u16 + q as u16 - b as u16) % q as u16) as u8)
            .collect();
        let p = type_of_slice(&dv, q as usize);
        let mut acc = Rat::zero();
        for &u1 in &pre1 {
            let u1d = index_to_digits(u1, q as usize, self.l);
            for &u2 in &pre2 {
                let u2d = index_to_digits(u2, q as usize, self.l);
                let diff: Vec<u8> = u2d
                    .iter()
                    .zip(&u1d)
                    .map(|(&a, &b)| ((a as u16 + q as u16 - b as u16) % q as u16) as u8)
                    .collect();
                acc += self.alpha.get(&p, &type_of_slice(&diff, q as usize));
            }
        }
        Ok(acc / Rat::from(num_bigint::BigInt::from(pre1.len() * pre2.len())))
    }

    /// ln beta'(v, x) as used by the decoder and the bound.
    pub fn ln_beta_prime(&self, v_idx: usize, x_idx: usize) -> f64 {
        match &self.beta_prime_eval {
            BetaPrimeEval::ConstantOne => 0.0,
            BetaPrimeEval::Dense(t) => t[v_idx * self.quant.x_count() + x_idx],
        }
    }

    /// Decoder threshold: (1/n) ln(1/P_V(v)) + (1/n) ln beta'(v, x) + gamma.
    pub fn threshold_rhs(&self, v_idx: usize, x_idx: usize) -> f64 {
        let lp = self.ln_pv[v_idx];
        if lp == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        (-lp + self.ln_beta_prime(v_idx, x_idx)) / self.n as f64 + self.gamma
    }

    /// Membership in the decision set S_n.
    pub fn sn_member(&self, v_idx: usize, x_idx: usize, y_idx: usize, y: &[u8]) -> Result<bool> {
        let d = self.information_density(x_idx, y_idx, y)?;
        Ok(d > self.threshold_rhs(v_idx, x_idx))
    }

    /// One encoder sample: fresh code (if the ensemble is random), fresh
    /// permutations and dilution, applied to the single block v.
    pub fn encode_sample<R: Rng>(&self, v: &QVec, rng: &mut R) -> Result<Vec<u8>> {
        if v.q() != self.source.q() || v.len() != self.n {
            return Err(Error::Usage("encode_sample: block has the wrong shape".into()));
        }
        let code = self.ensemble.sample(rng);
        let rc = randomize(code, rng);
        let u = rc.apply(v)?;
        let x_idx = self.quant.apply(v.to_index(), u.to_index());
        Ok(self.x_digits(x_idx).to_vec())
    }

    /// Realizes the full random encoder phi(v) = q_n(v, F^(v)) for all v.
    pub fn realize_encoder<R: Rng>(&self, rng: &mut R) -> RealizedEncoder {
        let code = self.ensemble.sample(rng);
        let rc = randomize(code, rng);
        self.realize_from(&rc)
    }

    pub fn realize_from(&self, rc: &RandomizedCode) -> RealizedEncoder {
        let q = self.source.q() as usize;
        let v_count = self.quant.v_count();
        let mut x_of_v = Vec::with_capacity(v_count);
        let mut vbuf = vec![0u8; self.n];
        let mut pbuf = Vec::with_capacity(self.n);
        let mut ebuf = vec![0u8; self.l];
        let mut obuf = Vec::with_capacity(self.l);
        for v in 0..v_count {
            vbuf.copy_from_slice(&index_to_digits(v, q, self.n));
            rc.sigma_in.apply_slice(&vbuf, &mut pbuf);
            rc.base.encode_slice(&pbuf, &mut ebuf);
            rc.sigma_out.apply_slice(&ebuf, &mut obuf);
            for (o, &d) in obuf.iter_mut().zip(rc.dilution.elems()) {
                *o = ((*o as u16 + d as u16) % self.source.q() as u16) as u8;
            }
            let u_idx = digits_to_index(&obuf, q);
            x_of_v.push(self.quant.apply(v, u_idx) as u32);
        }
        RealizedEncoder { x_of_v }
    }

    /// Enumerates the whole encoder randomization space with exact weights:
    /// ensemble support x input perms x output perms x dilutions.
    pub fn enumerate_encoder_randomness(&self) -> Result<Vec<(RealizedEncoder, Rat)>> {
        let support = self.ensemble.enumerate_support(self.budget)?;
        let fact = |k: usize| (1..=k as u128).product::<u128>();
        let q = self.source.q();
        let rand_states = fact(self.n)
            .saturating_mul(fact(self.l))
            .saturating_mul((q as u128).pow(self.l as u32))
            .saturating_mul(support.len() as u128);
        check_budget(
            rand_states.saturating_mul(self.quant.v_count() as u128),
            self.budget,
        )?;
        let perms_in = Permutation::enumerate_all(self.n);
        let perms_out = Permutation::enumerate_all(self.l);
        let d_count = (q as usize).pow(self.l as u32);
        let denom = Rat::from(num_bigint::BigInt::from(perms_in.len() * perms_out.len() * d_count));
        let mut out = Vec::new();
        for (code, weight) in &support {
            let cell = weight / &denom;
            for pin in &perms_in {
                for pout in &perms_out {
                    for di in 0..d_count {
                        let rc = RandomizedCode::new(
                            code.clone(),
                            pin.clone(),
                            pout.clone(),
                            QVec::from_index(q, self.l, di),
                        )?;
                        out.push((self.realize_from(&rc), cell.clone()));
                    }
                }
            }
        }
        Ok(out)
    }

    /// The type-level threshold inequality is monotone in gamma; exposed for
    /// tests that rebuild an otherwise-identical instance.
    pub fn with_gamma(&self, gamma: f64) -> Result<SchemeInstance> {
        SchemeInstance::new(
            self.source.clone(),
            self.ensemble.clone(),
            self.quant.clone(),
            self.channel.clone(),
            gamma,
            self.budget,
        )
    }
}

pub use decoder::{decoder_by_name, decoder_registry, Decoder, MapDecoder, ThresholdDecoder};

#[cfg(test)]
mod tests;
