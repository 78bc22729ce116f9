//! Method-of-types machinery: types of sequences, enumeration of type
//! classes, and exact/sampled spectra of sets and functions.
//!
//! All exact spectra carry arbitrary-precision rational masses end to end;
//! floating point only appears in the sampled mode's reported standard error.

use std::collections::BTreeMap;
use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use crate::algebra::{sample_uniform_vec, QVec};
use crate::error::{check_budget, Error, Result};

pub type Rat = BigRational;

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Empirical distribution of a length-n sequence over a q-ary alphabet,
/// stored as the count vector (a composition of n into q parts).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeDist {
    counts: Vec<u32>,
}

impl TypeDist {
    pub fn new(counts: Vec<u32>) -> Self {
        TypeDist { counts }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn n(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn q(&self) -> usize {
        self.counts.len()
    }

    /// Type of the all-zero sequence 0^n.
    pub fn zero_type(n: u32, q: usize) -> Self {
        let mut counts = vec![0u32; q];
        counts[0] = n;
        TypeDist { counts }
    }

    pub fn is_zero_type(&self) -> bool {
        self.counts[0] == self.n() && self.n() > 0
    }

    /// Multinomial coefficient n! / prod(counts!).
    pub fn multinomial(&self) -> BigInt {
        let mut acc = BigInt::one();
        let mut k = 0u32;
        for &c in &self.counts {
            for j in 1..=c {
                k += 1;
                acc = acc * BigInt::from(k) / BigInt::from(j);
            }
        }
        acc
    }

    /// Rendering used by the CSV dump format: `c0|c1|...|c{q-1}`.
    pub fn render(&self) -> String {
        self.counts
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join("|")
    }
}

pub fn type_of(x: &QVec) -> Result<TypeDist> {
    if x.is_empty() {
        return Err(Error::Usage("type of the empty sequence is undefined".into()));
    }
    Ok(type_of_slice(x.elems(), x.q() as usize))
}

pub fn type_of_slice(x: &[u8], q: usize) -> TypeDist {
    let mut counts = vec![0u32; q];
    for &a in x {
        counts[a as usize] += 1;
    }
    TypeDist { counts }
}

/// All compositions of n into q parts, in lexicographic order of the count
/// vector. There are C(n+q-1, q-1) of them.
pub fn enumerate_types(n: u32, q: usize) -> Vec<TypeDist> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; q];
    fn rec(out: &mut Vec<TypeDist>, cur: &mut Vec<u32>, pos: usize, rest: u32) {
        if pos + 1 == cur.len() {
            cur[pos] = rest;
            out.push(TypeDist::new(cur.clone()));
            return;
        }
        for c in 0..=rest {
            cur[pos] = c;
            rec(out, cur, pos + 1, rest - c);
        }
    }
    rec(&mut out, &mut cur, 0, n);
    out
}

/// Probability mass over types, exact rational, summing to one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spectrum {
    mass: BTreeMap<TypeDist, Rat>,
}

impl Spectrum {
    pub fn from_mass(mass: BTreeMap<TypeDist, Rat>) -> Self {
        Spectrum { mass }
    }

    pub fn mass(&self, p: &TypeDist) -> Rat {
        self.mass.get(p).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TypeDist, &Rat)> {
        self.mass.iter()
    }

    pub fn total(&self) -> Rat {
        self.mass.values().sum()
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "type_counts,mass_num,mass_den")?;
        for (p, m) in &self.mass {
            writeln!(w, "{},{},{}", p.render(), m.numer(), m.denom())?;
        }
        Ok(())
    }
}

/// Probability mass over pairs of types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointSpectrum {
    mass: BTreeMap<(TypeDist, TypeDist), Rat>,
}

impl JointSpectrum {
    pub fn from_mass(mass: BTreeMap<(TypeDist, TypeDist), Rat>) -> Self {
        JointSpectrum { mass }
    }

    pub fn mass(&self, p: &TypeDist, q: &TypeDist) -> Rat {
        self.mass
            .get(&(p.clone(), q.clone()))
            .cloned()
            .unwrap_or_else(Rat::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(TypeDist, TypeDist), &Rat)> {
        self.mass.iter()
    }

    pub fn total(&self) -> Rat {
        self.mass.values().sum()
    }

    pub fn marginal_in(&self) -> Spectrum {
        let mut mass: BTreeMap<TypeDist, Rat> = BTreeMap::new();
        for ((p, _), m) in &self.mass {
            *mass.entry(p.clone()).or_insert_with(Rat::zero) += m;
        }
        Spectrum { mass }
    }

    pub fn marginal_out(&self) -> Spectrum {
        let mut mass: BTreeMap<TypeDist, Rat> = BTreeMap::new();
        for ((_, q), m) in &self.mass {
            *mass.entry(q.clone()).or_insert_with(Rat::zero) += m;
        }
        Spectrum { mass }
    }

    /// Conditional spectrum of the output given input type `p`. Defined only
    /// where the input marginal is nonzero.
    pub fn conditional_out_given_in(&self, p: &TypeDist) -> Result<Spectrum> {
        let denom = self.marginal_in().mass(p);
        if denom.is_zero() {
            return Err(Error::Domain(format!(
                "conditional spectrum undefined: input type {} has zero mass",
                p.render()
            )));
        }
        let mut mass = BTreeMap::new();
        for ((pp, qq), m) in &self.mass {
            if pp == p && !m.is_zero() {
                mass.insert(qq.clone(), m / &denom);
            }
        }
        Ok(Spectrum { mass })
    }

    pub fn conditional_in_given_out(&self, q: &TypeDist) -> Result<Spectrum> {
        let denom = self.marginal_out().mass(q);
        if denom.is_zero() {
            return Err(Error::Domain(format!(
                "conditional spectrum undefined: output type {} has zero mass",
                q.render()
            )));
        }
        let mut mass = BTreeMap::new();
        for ((pp, qq), m) in &self.mass {
            if qq == q && !m.is_zero() {
                mass.insert(pp.clone(), m / &denom);
            }
        }
        Ok(Spectrum { mass })
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "type_counts_in,type_counts_out,mass_num,mass_den")?;
        for ((p, q), m) in &self.mass {
            writeln!(w, "{},{},{},{}", p.render(), q.render(), m.numer(), m.denom())?;
        }
        Ok(())
    }
}

/// Spectrum of the full space: mass(P) = multinomial(n; counts(P)) / q^n.
pub fn ambient_spectrum(n: u32, q: usize) -> Spectrum {
    let total = BigInt::from(q).pow(n);
    let mass = enumerate_types(n, q)
        .into_iter()
        .map(|p| {
            let m = Rat::new(p.multinomial(), total.clone());
            (p, m)
        })
        .collect();
    Spectrum { mass }
}

/// Ambient mass of a single type without materializing the whole spectrum.
pub fn ambient_mass(p: &TypeDist) -> Rat {
    let total = BigInt::from(p.q()).pow(p.n());
    Rat::new(p.multinomial(), total)
}

/// Empirical distribution of types among the elements of a set.
pub fn set_spectrum<I>(set: I) -> Result<Spectrum>
where
    I: IntoIterator<Item = QVec>,
{
    let mut counts: BTreeMap<TypeDist, u64> = BTreeMap::new();
    let mut total = 0u64;
    for x in set {
        let t = type_of(&x)?;
        *counts.entry(t).or_insert(0) += 1;
        total += 1;
    }
    if total == 0 {
        return Err(Error::Usage("set spectrum of an empty set is undefined".into()));
    }
    let mass = counts
        .into_iter()
        .map(|(t, c)| (t, Rat::new(BigInt::from(c), BigInt::from(total))))
        .collect();
    Ok(Spectrum { mass })
}

pub fn joint_set_spectrum<I>(set: I) -> Result<JointSpectrum>
where
    I: IntoIterator<Item = (QVec, QVec)>,
{
    let mut counts: BTreeMap<(TypeDist, TypeDist), u64> = BTreeMap::new();
    let mut total = 0u64;
    for (x, y) in set {
        let tx = type_of(&x)?;
        let ty = type_of(&y)?;
        *counts.entry((tx, ty)).or_insert(0) += 1;
        total += 1;
    }
    if total == 0 {
        return Err(Error::Usage("joint spectrum of an empty set is undefined".into()));
    }
    let mass = counts
        .into_iter()
        .map(|(t, c)| (t, Rat::new(BigInt::from(c), BigInt::from(total))))
        .collect();
    Ok(JointSpectrum { mass })
}

/// Exact joint spectrum of rl(f) = {(x, f(x))}, enumerating all q^n inputs.
pub fn function_spectrum_exact<F>(f: F, n: usize, q: u8, budget: u64) -> Result<JointSpectrum>
where
    F: Fn(&QVec) -> QVec,
{
    let states = (q as u128).checked_pow(n as u32).ok_or(Error::Budget {
        required: u128::MAX,
        budget,
    })?;
    check_budget(states, budget)?;
    let count = (q as usize).pow(n as u32);
    joint_set_spectrum((0..count).map(|i| {
        let x = QVec::from_index(q, n, i);
        let y = f(&x);
        (x, y)
    }))
}

/// Monte Carlo estimate of a joint spectrum from uniform input draws.
pub struct SampledSpectrum {
    pub spectrum: JointSpectrum,
    pub trials: u64,
    /// Largest per-cell binomial standard error among observed cells.
    pub max_std_err: f64,
}

pub fn function_spectrum_sampled<F, R>(
    f: F,
    n: usize,
    q: u8,
    trials: u64,
    rng: &mut R,
) -> Result<SampledSpectrum>
where
    F: Fn(&QVec) -> QVec,
    R: Rng,
{
    if trials == 0 {
        return Err(Error::Usage("sampled spectrum requires trials >= 1".into()));
    }
    let mut counts: BTreeMap<(TypeDist, TypeDist), u64> = BTreeMap::new();
    for _ in 0..trials {
        let x = sample_uniform_vec(n, q, rng);
        let y = f(&x);
        let tx = type_of(&x)?;
        let ty = type_of(&y)?;
        *counts.entry((tx, ty)).or_insert(0) += 1;
    }
    let mut max_std_err = 0.0f64;
    for &c in counts.values() {
        let p = c as f64 / trials as f64;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        max_std_err = max_std_err.max(se);
    }
    let mass = counts
        .into_iter()
        .map(|(t, c)| (t, Rat::new(BigInt::from(c), BigInt::from(trials))))
        .collect();
    Ok(SampledSpectrum {
        spectrum: JointSpectrum { mass },
        trials,
        max_std_err,
    })
}

/// Total variation distance between two joint spectra (used to check the
/// sampled mode against the exact one).
pub fn joint_tv_distance(a: &JointSpectrum, b: &JointSpectrum) -> f64 {
    let mut keys: std::collections::BTreeSet<_> = a.mass.keys().cloned().collect();
    keys.extend(b.mass.keys().cloned());
    let mut tv = Rat::zero();
    for k in keys {
        let (p, q) = (&k.0, &k.1);
        let d = a.mass(p, q) - b.mass(p, q);
        tv += if d < Rat::zero() { -d } else { d };
    }
    use num_traits::ToPrimitive;
    tv.to_f64().unwrap_or(f64::NAN) / 2.0
}
