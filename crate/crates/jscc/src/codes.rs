//! Linear codes as generator matrices over GF(q), random code ensembles,
//! the permuted/diluted randomization of a code, the alpha spectrum ratio,
//! and the goodness metrics derived from it.

use std::collections::BTreeMap;
use std::io::Write;

use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::algebra::{
    index_to_digits, sample_uniform_perm, sample_uniform_vec, FieldContext, Permutation, QVec,
};
use crate::error::{check_budget, Error, Result};
use crate::spectra::{ambient_mass, enumerate_types, type_of_slice, Rat, TypeDist};

/// Generator-matrix realization of a homomorphism GF(q)^n -> GF(q)^l:
/// encode(x) = xG, with G stored row-major (n rows of l entries).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearCode {
    q: u8,
    n: usize,
    l: usize,
    g: Vec<u8>,
}

impl LinearCode {
    pub fn new(q: u8, n: usize, l: usize, g: Vec<u8>) -> Result<Self> {
        FieldContext::new(q)?;
        if g.len() != n * l {
            return Err(Error::Usage(format!(
                "generator matrix has {} entries, expected {}",
                g.len(),
                n * l
            )));
        }
        if g.iter().any(|&e| e >= q) {
            return Err(Error::Usage(format!("matrix entry out of range for q = {q}")));
        }
        Ok(LinearCode { q, n, l, g })
    }

    pub fn zero(q: u8, n: usize, l: usize) -> Self {
        LinearCode { q, n, l, g: vec![0; n * l] }
    }

    pub fn identity(q: u8, n: usize) -> Self {
        let mut g = vec![0u8; n * n];
        for i in 0..n {
            g[i * n + i] = 1;
        }
        LinearCode { q, n, l: n, g }
    }

    /// Matrix whose flattened entries are the base-q digits of `idx`
    /// (used to enumerate all q^{n*l} matrices deterministically).
    pub fn from_matrix_index(q: u8, n: usize, l: usize, idx: usize) -> Self {
        LinearCode { q, n, l, g: index_to_digits(idx, q as usize, n * l) }
    }

    pub fn sample_uniform<R: Rng>(q: u8, n: usize, l: usize, rng: &mut R) -> Self {
        let g = (0..n * l).map(|_| rng.gen_range(0..q)).collect();
        LinearCode { q, n, l, g }
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn input_len(&self) -> usize {
        self.n
    }

    pub fn output_len(&self) -> usize {
        self.l
    }

    pub fn matrix(&self) -> &[u8] {
        &self.g
    }

    pub fn encode(&self, x: &QVec) -> Result<QVec> {
        if x.q() != self.q || x.len() != self.n {
            return Err(Error::Usage(format!(
                "encode expects a length-{} vector over GF({})",
                self.n, self.q
            )));
        }
        let mut out = vec![0u8; self.l];
        self.encode_slice(x.elems(), &mut out);
        Ok(QVec::new(self.q, out).expect("entries reduced mod q"))
    }

    pub fn encode_slice(&self, x: &[u8], out: &mut [u8]) {
        let q = self.q as u16;
        out.fill(0);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0 {
                continue;
            }
            let row = &self.g[i * self.l..(i + 1) * self.l];
            for (o, &gij) in out.iter_mut().zip(row) {
                *o = ((*o as u16 + xi as u16 * gij as u16) % q) as u8;
            }
        }
    }

    /// Matrix file format: line 1 `n l q`, then n lines of l integers.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Validation(vec!["matrix file is empty".into()]))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 3 {
            return Err(Error::Validation(vec![format!(
                "matrix header must be `n l q`, got `{header}`"
            )]));
        }
        let n: usize = head[0]
            .parse()
            .map_err(|_| Error::Validation(vec![format!("bad n in matrix header: {}", head[0])]))?;
        let l: usize = head[1]
            .parse()
            .map_err(|_| Error::Validation(vec![format!("bad l in matrix header: {}", head[1])]))?;
        let q: u8 = head[2]
            .parse()
            .map_err(|_| Error::Validation(vec![format!("bad q in matrix header: {}", head[2])]))?;
        let mut g = Vec::with_capacity(n * l);
        let mut errs = Vec::new();
        let mut rows = 0usize;
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            rows += 1;
            let entries: Vec<&str> = line.split_whitespace().collect();
            if entries.len() != l {
                errs.push(format!("row {}: expected {} entries, got {}", i + 1, l, entries.len()));
                continue;
            }
            for e in entries {
                match e.parse::<u8>() {
                    Ok(v) if v < q => g.push(v),
                    _ => errs.push(format!("row {}: bad entry `{e}` for q = {q}", i + 1)),
                }
            }
        }
        if rows != n {
            errs.push(format!("expected {n} rows, got {rows}"));
        }
        if !errs.is_empty() {
            return Err(Error::Validation(errs));
        }
        LinearCode::new(q, n, l, g)
    }

    pub fn to_file_format(&self) -> String {
        let mut s = format!("{} {} {}\n", self.n, self.l, self.q);
        for i in 0..self.n {
            let row: Vec<String> = self.g[i * self.l..(i + 1) * self.l]
                .iter()
                .map(|e| e.to_string())
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }
}

/// Distribution over linear codes of a fixed shape.
#[derive(Debug, Clone)]
pub enum CodeEnsemble {
    /// Every one of the n*l matrix entries i.i.d. uniform on GF(q).
    UniformMatrix { q: u8, n: usize, l: usize },
    /// Explicit finite support with rational weights summing to one.
    Explicit(Vec<(LinearCode, Rat)>),
}

impl CodeEnsemble {
    pub fn point(code: LinearCode) -> Self {
        CodeEnsemble::Explicit(vec![(code, Rat::one())])
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CodeEnsemble::UniformMatrix { q, .. } => {
                FieldContext::new(*q)?;
                Ok(())
            }
            CodeEnsemble::Explicit(support) => {
                if support.is_empty() {
                    return Err(Error::Validation(vec!["empty code ensemble".into()]));
                }
                let total: Rat = support.iter().map(|(_, w)| w.clone()).sum();
                if !total.is_one() {
                    return Err(Error::Validation(vec![format!(
                        "ensemble weights sum to {total}, expected 1"
                    )]));
                }
                let (q, n, l) = self.shape();
                for (c, _) in support {
                    if c.q() != q || c.input_len() != n || c.output_len() != l {
                        return Err(Error::Validation(vec![
                            "ensemble members have inconsistent shapes".into(),
                        ]));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn shape(&self) -> (u8, usize, usize) {
        match self {
            CodeEnsemble::UniformMatrix { q, n, l } => (*q, *n, *l),
            CodeEnsemble::Explicit(support) => {
                let c = &support[0].0;
                (c.q(), c.input_len(), c.output_len())
            }
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> LinearCode {
        match self {
            CodeEnsemble::UniformMatrix { q, n, l } => LinearCode::sample_uniform(*q, *n, *l, rng),
            CodeEnsemble::Explicit(support) => {
                if support.len() == 1 {
                    return support[0].0.clone();
                }
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (c, w) in support {
                    acc += w.to_f64().unwrap_or(0.0);
                    if u < acc {
                        return c.clone();
                    }
                }
                support.last().unwrap().0.clone()
            }
        }
    }

    /// Enumerates the support as (code, weight) pairs. For the uniform-matrix
    /// kind this materializes all q^{n*l} matrices, subject to `budget`.
    pub fn enumerate_support(&self, budget: u64) -> Result<Vec<(LinearCode, Rat)>> {
        match self {
            CodeEnsemble::UniformMatrix { q, n, l } => {
                let count = (*q as u128)
                    .checked_pow((n * l) as u32)
                    .ok_or(Error::Budget { required: u128::MAX, budget })?;
                check_budget(count, budget)?;
                let count = count as usize;
                let w = Rat::new(1.into(), num_bigint::BigInt::from(count));
                Ok((0..count)
                    .map(|idx| (LinearCode::from_matrix_index(*q, *n, *l, idx), w.clone()))
                    .collect())
            }
            CodeEnsemble::Explicit(support) => Ok(support.clone()),
        }
    }
}

/// A base code composed with fresh input/output permutations and an additive
/// dilution offset: x -> sigma_out(encode(sigma_in(x))) + dilution.
#[derive(Debug, Clone)]
pub struct RandomizedCode {
    pub base: LinearCode,
    pub sigma_in: Permutation,
    pub sigma_out: Permutation,
    pub dilution: QVec,
}

impl RandomizedCode {
    pub fn new(
        base: LinearCode,
        sigma_in: Permutation,
        sigma_out: Permutation,
        dilution: QVec,
    ) -> Result<Self> {
        if sigma_in.len() != base.input_len()
            || sigma_out.len() != base.output_len()
            || dilution.len() != base.output_len()
            || dilution.q() != base.q()
        {
            return Err(Error::Usage("randomization components do not match the base code".into()));
        }
        Ok(RandomizedCode { base, sigma_in, sigma_out, dilution })
    }

    /// Identity permutations and zero dilution (ablation configuration).
    pub fn degenerate(base: LinearCode) -> Self {
        let n = base.input_len();
        let l = base.output_len();
        let q = base.q();
        RandomizedCode {
            base,
            sigma_in: Permutation::identity(n),
            sigma_out: Permutation::identity(l),
            dilution: QVec::zero(q, l),
        }
    }

    pub fn apply(&self, x: &QVec) -> Result<QVec> {
        let permuted = self.sigma_in.apply(x)?;
        let encoded = self.base.encode(&permuted)?;
        self.sigma_out.apply(&encoded)?.add(&self.dilution)
    }
}

pub fn randomize<R: Rng>(base: LinearCode, rng: &mut R) -> RandomizedCode {
    let n = base.input_len();
    let l = base.output_len();
    let q = base.q();
    let sigma_in = sample_uniform_perm(n, rng);
    let sigma_out = sample_uniform_perm(l, rng);
    let dilution = sample_uniform_vec(l, q, rng);
    RandomizedCode { base, sigma_in, sigma_out, dilution }
}

/// alpha(F)(P, Q) = E[S_XY(F)(P, Q)] / (ambient_V(P) * ambient_U(Q)),
/// tabulated over all (P, Q) in P_n(V) x P_l(U).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphaTable {
    q: u8,
    n: usize,
    l: usize,
    entries: BTreeMap<(TypeDist, TypeDist), Rat>,
}

impl AlphaTable {
    pub fn get(&self, p: &TypeDist, q: &TypeDist) -> Rat {
        self.entries
            .get(&(p.clone(), q.clone()))
            .cloned()
            .unwrap_or_else(Rat::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(TypeDist, TypeDist), &Rat)> {
        self.entries.iter()
    }

    pub fn shape(&self) -> (u8, usize, usize) {
        (self.q, self.n, self.l)
    }

    /// max over P != P_{0^n} and all Q.
    pub fn max_alpha(&self) -> Rat {
        let mut best = Rat::zero();
        for ((p, _), a) in &self.entries {
            if p.is_zero_type() {
                continue;
            }
            if *a > best {
                best = a.clone();
            }
        }
        best
    }

    /// Total-probability identity: sum_Q alpha(P,Q) * ambient_U(Q) = 1
    /// for every input type P.
    pub fn total_probability_holds(&self) -> bool {
        for p in enumerate_types(self.n as u32, self.q as usize) {
            let mut acc = Rat::zero();
            for qt in enumerate_types(self.l as u32, self.q as usize) {
                acc += self.get(&p, &qt) * ambient_mass(&qt);
            }
            if !acc.is_one() {
                return false;
            }
        }
        true
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "type_counts_in,type_counts_out,alpha_num,alpha_den")?;
        for ((p, q), a) in &self.entries {
            writeln!(w, "{},{},{},{}", p.render(), q.render(), a.numer(), a.denom())?;
        }
        Ok(())
    }
}

/// Exact alpha table of an ensemble. The uniform-matrix kind falls back to
/// the closed form (alpha = 1 off the zero input type) when exhaustive
/// enumeration would exceed the budget; explicit ensembles are always
/// enumerated and fail hard when over budget.
pub fn alpha_of_ensemble(e: &CodeEnsemble, budget: u64) -> Result<AlphaTable> {
    e.validate()?;
    let (q, n, l) = e.shape();
    if let CodeEnsemble::UniformMatrix { .. } = e {
        let matrices = (q as u128).checked_pow((n * l) as u32);
        let inputs = (q as u128).checked_pow(n as u32);
        let states = matrices.and_then(|m| inputs.map(|i| m.saturating_mul(i)));
        let over = match states {
            Some(s) => s > budget as u128,
            None => true,
        };
        if over {
            return Ok(alpha_uniform_closed_form(q, n, l));
        }
    }
    let support = e.enumerate_support(budget)?;
    let inputs = (q as u128).pow(n as u32);
    check_budget(inputs.saturating_mul(support.len() as u128), budget)?;

    // E[S_XY(F)] by exact expectation over the ensemble.
    let input_count = (q as usize).pow(n as u32);
    let per_input = Rat::new(1.into(), num_bigint::BigInt::from(input_count));
    let mut expected: BTreeMap<(TypeDist, TypeDist), Rat> = BTreeMap::new();
    let mut out = vec![0u8; l];
    for (code, weight) in &support {
        let cell = weight * &per_input;
        for xi in 0..input_count {
            let x = index_to_digits(xi, q as usize, n);
            code.encode_slice(&x, &mut out);
            let key = (type_of_slice(&x, q as usize), type_of_slice(&out, q as usize));
            *expected.entry(key).or_insert_with(Rat::zero) += &cell;
        }
    }

    let mut entries = BTreeMap::new();
    for p in enumerate_types(n as u32, q as usize) {
        let ambp = ambient_mass(&p);
        for qt in enumerate_types(l as u32, q as usize) {
            let num = expected.remove(&(p.clone(), qt.clone())).unwrap_or_else(Rat::zero);
            let a = num / (&ambp * ambient_mass(&qt));
            entries.insert((p.clone(), qt), a);
        }
    }
    Ok(AlphaTable { q, n, l, entries })
}

/// Closed form for the uniform-matrix ensemble: alpha(P,Q) = 1 for P != P_0;
/// alpha(P_0, Q) = q^l at Q = delta_0 and 0 elsewhere (F(0) = 0 always).
fn alpha_uniform_closed_form(q: u8, n: usize, l: usize) -> AlphaTable {
    let mut entries = BTreeMap::new();
    let zero_in = TypeDist::zero_type(n as u32, q as usize);
    let zero_out = TypeDist::zero_type(l as u32, q as usize);
    let ql = Rat::from(num_bigint::BigInt::from(q)).pow(l as i32);
    for p in enumerate_types(n as u32, q as usize) {
        for qt in enumerate_types(l as u32, q as usize) {
            let a = if p == zero_in {
                if qt == zero_out { ql.clone() } else { Rat::zero() }
            } else {
                Rat::one()
            };
            entries.insert((p.clone(), qt), a);
        }
    }
    AlphaTable { q, n, l, entries }
}

/// Goodness metric: (max alpha off the zero input type, (1/n) ln of it).
pub fn goodness(e: &CodeEnsemble, budget: u64) -> Result<(Rat, f64)> {
    let table = alpha_of_ensemble(e, budget)?;
    let (_, n, _) = e.shape();
    let max_alpha = table.max_alpha();
    let log_rate = max_alpha
        .to_f64()
        .map(|v| v.ln() / n as f64)
        .unwrap_or(f64::NAN);
    Ok((max_alpha, log_rate))
}

/// Exact pairwise probabilities of the fully randomized code, by brute-force
/// enumeration of ensemble support x input permutations x output
/// permutations x dilutions. Returns (Pr{F^(x1)=y1}, Pr{F^(x2)=y2 | F^(x1)=y1}).
pub fn check_randomized_pairwise(
    e: &CodeEnsemble,
    x1: &QVec,
    x2: &QVec,
    y1: &QVec,
    y2: &QVec,
    budget: u64,
) -> Result<(Rat, Rat)> {
    e.validate()?;
    let (q, n, l) = e.shape();
    if x1 == x2 {
        return Err(Error::Usage("pairwise check requires x1 != x2".into()));
    }
    if x1.len() != n || x2.len() != n || y1.len() != l || y2.len() != l {
        return Err(Error::Usage("pairwise check arguments have wrong lengths".into()));
    }
    let support = e.enumerate_support(budget)?;
    let fact = |k: usize| (1..=k as u128).product::<u128>();
    let rand_states = fact(n)
        .saturating_mul(fact(l))
        .saturating_mul((q as u128).pow(l as u32));
    check_budget(rand_states.saturating_mul(support.len() as u128), budget)?;

    let perms_in = Permutation::enumerate_all(n);
    let perms_out = Permutation::enumerate_all(l);
    let dilution_count = (q as usize).pow(l as u32);
    let denom = Rat::from(num_bigint::BigInt::from(
        perms_in.len() * perms_out.len() * dilution_count,
    ));

    let mut p1 = Rat::zero();
    let mut p_both = Rat::zero();
    for (code, weight) in &support {
        let cell = weight / &denom;
        for pin in &perms_in {
            for pout in &perms_out {
                for di in 0..dilution_count {
                    let d = QVec::from_index(q, l, di);
                    let rc = RandomizedCode::new(code.clone(), pin.clone(), pout.clone(), d)?;
                    let o1 = rc.apply(x1)?;
                    if &o1 != y1 {
                        continue;
                    }
                    p1 += &cell;
                    if &rc.apply(x2)? == y2 {
                        p_both += &cell;
                    }
                }
            }
        }
    }
    if p1.is_zero() {
        return Err(Error::Domain("conditioning event has probability zero".into()));
    }
    let p2_given_1 = p_both / &p1;
    Ok((p1, p2_given_1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::substream;
    use crate::spectra::rat;

    #[test]
    fn encode_examples() {
        let c = LinearCode::new(2, 2, 2, vec![1, 0, 1, 1]).unwrap();
        let x = QVec::new(2, vec![1, 1]).unwrap();
        assert_eq!(c.encode(&x).unwrap().elems(), &[0, 1]);

        // zero input maps to zero for any code
        let mut rng = substream(3, 0);
        let c = LinearCode::sample_uniform(5, 4, 3, &mut rng);
        assert_eq!(c.encode(&QVec::zero(5, 4)).unwrap(), QVec::zero(5, 3));
    }

    #[test]
    fn homomorphism_law_exhaustive() {
        let mut rng = substream(17, 0);
        for q in [2u8, 3u8] {
            for n in 1..=3usize {
                let c = LinearCode::sample_uniform(q, n, 3, &mut rng);
                let count = (q as usize).pow(n as u32);
                for ai in 0..count {
                    for bi in 0..count {
                        let a = QVec::from_index(q, n, ai);
                        let b = QVec::from_index(q, n, bi);
                        let lhs = c.encode(&a.add(&b).unwrap()).unwrap();
                        let rhs = c.encode(&a).unwrap().add(&c.encode(&b).unwrap()).unwrap();
                        assert_eq!(lhs, rhs);
                    }
                }
            }
        }
    }

    #[test]
    fn degenerate_randomization_is_plain_encode() {
        let mut rng = substream(8, 0);
        let c = LinearCode::sample_uniform(3, 3, 2, &mut rng);
        let rc = RandomizedCode::degenerate(c.clone());
        for i in 0..27 {
            let x = QVec::from_index(3, 3, i);
            assert_eq!(rc.apply(&x).unwrap(), c.encode(&x).unwrap());
        }
    }

    #[test]
    fn uniform_single_cell_law() {
        // n=l=1, q=2: enumerating both matrices, Pr{F(1)=y} = 1/2.
        let support = CodeEnsemble::UniformMatrix { q: 2, n: 1, l: 1 }
            .enumerate_support(1 << 20)
            .unwrap();
        assert_eq!(support.len(), 2);
        let x = QVec::new(2, vec![1]).unwrap();
        for y in 0..2usize {
            let yv = QVec::from_index(2, 1, y);
            let p: Rat = support
                .iter()
                .filter(|(c, _)| c.encode(&x).unwrap() == yv)
                .map(|(_, w)| w.clone())
                .sum();
            assert_eq!(p, rat(1, 2));
        }
    }

    #[test]
    fn uniform_matrix_law_n2() {
        // all 16 matrices at n=l=2, q=2: each y hit 4 times for x != 0.
        let support = CodeEnsemble::UniformMatrix { q: 2, n: 2, l: 2 }
            .enumerate_support(1 << 20)
            .unwrap();
        assert_eq!(support.len(), 16);
        for xi in 1..4usize {
            let x = QVec::from_index(2, 2, xi);
            for yi in 0..4usize {
                let y = QVec::from_index(2, 2, yi);
                let hits = support
                    .iter()
                    .filter(|(c, _)| c.encode(&x).unwrap() == y)
                    .count();
                assert_eq!(hits, 4);
            }
        }
    }

    #[test]
    fn alpha_uniform_is_one_off_zero_type() {
        let e = CodeEnsemble::UniformMatrix { q: 2, n: 2, l: 2 };
        let t = alpha_of_ensemble(&e, 1 << 20).unwrap();
        for p in enumerate_types(2, 2) {
            for qt in enumerate_types(2, 2) {
                if p.is_zero_type() {
                    continue;
                }
                assert!(t.get(&p, &qt).is_one(), "alpha not 1 at {:?} {:?}", p, qt);
            }
        }
        assert!(t.total_probability_holds());
        // closed form agrees with the exhaustive oracle
        let closed = alpha_uniform_closed_form(2, 2, 2);
        assert_eq!(t, closed);
    }

    #[test]
    fn alpha_zero_code_point_ensemble() {
        // zero code n=l=1, q=2: alpha((0,1), delta_0) = 2, alpha((0,1),(0,1)) = 0
        let e = CodeEnsemble::point(LinearCode::zero(2, 1, 1));
        let t = alpha_of_ensemble(&e, 1 << 20).unwrap();
        let p1 = TypeDist::new(vec![0, 1]);
        let d0 = TypeDist::new(vec![1, 0]);
        assert_eq!(t.get(&p1, &d0), rat(2, 1));
        assert_eq!(t.get(&p1, &p1), rat(0, 1));
        assert!(t.total_probability_holds());
    }

    #[test]
    fn total_probability_identity_random_ensembles() {
        let mut rng = substream(77, 0);
        for _ in 0..10 {
            let c = LinearCode::sample_uniform(2, 3, 2, &mut rng);
            let t = alpha_of_ensemble(&CodeEnsemble::point(c), 1 << 20).unwrap();
            assert!(t.total_probability_holds());
        }
        for q in [2u8, 3u8] {
            let e = CodeEnsemble::UniformMatrix { q, n: 2, l: 2 };
            assert!(alpha_of_ensemble(&e, 1 << 22).unwrap().total_probability_holds());
        }
    }

    #[test]
    fn goodness_examples() {
        let e = CodeEnsemble::UniformMatrix { q: 2, n: 2, l: 2 };
        let (max_alpha, log_rate) = goodness(&e, 1 << 20).unwrap();
        assert!(max_alpha.is_one());
        assert_eq!(log_rate, 0.0);

        let e = CodeEnsemble::point(LinearCode::zero(2, 1, 1));
        let (max_alpha, log_rate) = goodness(&e, 1 << 20).unwrap();
        assert_eq!(max_alpha, rat(2, 1));
        assert!((log_rate - 2f64.ln()).abs() < 1e-12);

        // identity code n=2: max_alpha = 1/ambient((0,2)) = 4
        let e = CodeEnsemble::point(LinearCode::identity(2, 2));
        let (max_alpha, _) = goodness(&e, 1 << 20).unwrap();
        assert_eq!(max_alpha, rat(4, 1));
    }

    #[test]
    fn goodness_uniform_is_one_at_several_shapes() {
        for (n, l) in [(1, 2), (2, 2), (2, 3), (3, 2)] {
            let e = CodeEnsemble::UniformMatrix { q: 2, n, l };
            let (max_alpha, _) = goodness(&e, 1 << 24).unwrap();
            assert!(max_alpha.is_one(), "n={n} l={l}");
        }
    }

    #[test]
    fn prop3_identity_exhaustive() {
        // Pr{F~(x)=y} = q^{-l} alpha(P_x, P_y) at n=l=2, q=2, for a point
        // ensemble, enumerating input x output permutations only (no dilution).
        let code = LinearCode::new(2, 2, 2, vec![1, 0, 1, 1]).unwrap();
        let e = CodeEnsemble::point(code.clone());
        let alpha = alpha_of_ensemble(&e, 1 << 20).unwrap();
        let perms = Permutation::enumerate_all(2);
        for xi in 0..4usize {
            let x = QVec::from_index(2, 2, xi);
            for yi in 0..4usize {
                let y = QVec::from_index(2, 2, yi);
                let mut hits = 0usize;
                for pin in &perms {
                    for pout in &perms {
                        let o = pout.apply(&code.encode(&pin.apply(&x).unwrap()).unwrap()).unwrap();
                        if o == y {
                            hits += 1;
                        }
                    }
                }
                let lhs = Rat::new(hits.into(), 4.into());
                let px = type_of_slice(x.elems(), 2);
                let py = type_of_slice(y.elems(), 2);
                let rhs = rat(1, 4) * alpha.get(&px, &py);
                assert_eq!(lhs, rhs, "x={xi} y={yi}");
            }
        }
    }

    #[test]
    fn pairwise_uniform_ensemble() {
        let e = CodeEnsemble::UniformMatrix { q: 2, n: 2, l: 2 };
        for (x1i, x2i) in [(0usize, 1usize), (1, 2), (2, 3), (3, 0)] {
            let x1 = QVec::from_index(2, 2, x1i);
            let x2 = QVec::from_index(2, 2, x2i);
            let y1 = QVec::from_index(2, 2, 2);
            let y2 = QVec::from_index(2, 2, 1);
            let (p1, p2) = check_randomized_pairwise(&e, &x1, &x2, &y1, &y2, 1 << 20).unwrap();
            assert_eq!(p1, rat(1, 4));
            assert_eq!(p2, rat(1, 4)); // alpha = 1 everywhere off zero type
        }
    }

    #[test]
    fn pairwise_zero_code_matches_alpha() {
        // point ensemble on the zero code, n=l=1, q=2:
        // p2|1 = (1/2) alpha(P_{x2-x1}, P_{y2-y1})
        let e = CodeEnsemble::point(LinearCode::zero(2, 1, 1));
        let alpha = alpha_of_ensemble(&e, 1 << 20).unwrap();
        let x1 = QVec::from_index(2, 1, 0);
        let x2 = QVec::from_index(2, 1, 1);
        for y1i in 0..2usize {
            for y2i in 0..2usize {
                let y1 = QVec::from_index(2, 1, y1i);
                let y2 = QVec::from_index(2, 1, y2i);
                let (p1, p2) = check_randomized_pairwise(&e, &x1, &x2, &y1, &y2, 1 << 20).unwrap();
                assert_eq!(p1, rat(1, 2));
                let dy = y2.sub(&y1).unwrap();
                let expect = rat(1, 2) * alpha.get(&type_of_slice(x2.sub(&x1).unwrap().elems(), 2), &type_of_slice(dy.elems(), 2));
                assert_eq!(p2, expect, "y1={y1i} y2={y2i}");
            }
        }
    }

    #[test]
    fn pairwise_equal_inputs_is_usage_error() {
        let e = CodeEnsemble::UniformMatrix { q: 2, n: 2, l: 2 };
        let x = QVec::from_index(2, 2, 1);
        let y = QVec::from_index(2, 2, 0);
        assert!(matches!(
            check_randomized_pairwise(&e, &x, &x, &y, &y, 1 << 20),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn matrix_file_roundtrip_and_strictness() {
        let c = LinearCode::new(3, 2, 3, vec![1, 0, 2, 2, 1, 0]).unwrap();
        let text = c.to_file_format();
        assert_eq!(LinearCode::parse(&text).unwrap(), c);
        // trailing whitespace tolerated
        assert_eq!(LinearCode::parse(&format!("{text}  \n")).unwrap(), c);
        // bad entry rejected
        assert!(LinearCode::parse("1 2 2\n0 2\n").is_err());
        // wrong row count rejected
        assert!(LinearCode::parse("2 2 2\n0 1\n").is_err());
    }

    #[test]
    fn alpha_budget_error_for_explicit_over_budget() {
        let e = CodeEnsemble::point(LinearCode::identity(2, 30));
        assert!(matches!(alpha_of_ensemble(&e, 1 << 10), Err(Error::Budget { .. })));
    }

    #[test]
    fn alpha_uniform_closed_form_over_budget() {
        // over budget for exhaustive matrices -> closed form, still exact
        let e = CodeEnsemble::UniformMatrix { q: 2, n: 10, l: 10 };
        let t = alpha_of_ensemble(&e, 1 << 10).unwrap();
        assert!(t.max_alpha().is_one());
        assert!(t.total_probability_holds());
    }
}
