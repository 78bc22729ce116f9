//! Exact arithmetic over the prime field GF(q), fixed-length vectors over it,
//! permutations, and the seeded RNG substream scheme.
//!
//! The modulus lives in a [`FieldContext`] (or on the vector itself) rather
//! than on every element, so vectors are plain byte buffers. Only prime `q`
//! is accepted; composite moduli are rejected at context creation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= q {
        if q % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Carrier of the prime modulus for element-level arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldContext {
    q: u8,
}

impl FieldContext {
    pub fn new(q: u8) -> Result<Self> {
        if !is_prime(q as u64) {
            return Err(Error::Validation(vec![format!(
                "q = {q} is not prime; only prime fields are supported"
            )]));
        }
        Ok(FieldContext { q })
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn add(&self, a: u8, b: u8) -> u8 {
        ((a as u16 + b as u16) % self.q as u16) as u8
    }

    pub fn sub(&self, a: u8, b: u8) -> u8 {
        ((a as u16 + self.q as u16 - b as u16) % self.q as u16) as u8
    }

    pub fn mul(&self, a: u8, b: u8) -> u8 {
        ((a as u16 * b as u16) % self.q as u16) as u8
    }

    pub fn neg(&self, a: u8) -> u8 {
        self.sub(0, a)
    }
}

/// Fixed-length vector with entries in [0, q).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QVec {
    q: u8,
    elems: Vec<u8>,
}

impl QVec {
    pub fn new(q: u8, elems: Vec<u8>) -> Result<Self> {
        let ctx = FieldContext::new(q)?;
        if elems.iter().any(|&e| e >= q) {
            return Err(Error::Usage(format!("vector entry out of range for q = {q}")));
        }
        let _ = ctx;
        Ok(QVec { q, elems })
    }

    pub fn zero(q: u8, n: usize) -> Self {
        QVec { q, elems: vec![0; n] }
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn elems(&self) -> &[u8] {
        &self.elems
    }

    fn check_compatible(&self, other: &QVec) -> Result<()> {
        if self.q != other.q {
            return Err(Error::Usage(format!(
                "modulus mismatch: {} vs {}",
                self.q, other.q
            )));
        }
        if self.elems.len() != other.elems.len() {
            return Err(Error::Usage(format!(
                "length mismatch: {} vs {}",
                self.elems.len(),
                other.elems.len()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &QVec) -> Result<QVec> {
        self.check_compatible(other)?;
        let q = self.q as u16;
        let elems = self
            .elems
            .iter()
            .zip(&other.elems)
            .map(|(&a, &b)| ((a as u16 + b as u16) % q) as u8)
            .collect();
        Ok(QVec { q: self.q, elems })
    }

    pub fn sub(&self, other: &QVec) -> Result<QVec> {
        self.check_compatible(other)?;
        let q = self.q as u16;
        let elems = self
            .elems
            .iter()
            .zip(&other.elems)
            .map(|(&a, &b)| ((a as u16 + q - b as u16) % q) as u8)
            .collect();
        Ok(QVec { q: self.q, elems })
    }

    /// Mixed-radix index of the vector, most significant digit first.
    pub fn to_index(&self) -> usize {
        digits_to_index(&self.elems, self.q as usize)
    }

    pub fn from_index(q: u8, n: usize, idx: usize) -> Self {
        QVec { q, elems: index_to_digits(idx, q as usize, n) }
    }
}

pub fn digits_to_index(digits: &[u8], base: usize) -> usize {
    digits.iter().fold(0usize, |acc, &d| acc * base + d as usize)
}

pub fn index_to_digits(mut idx: usize, base: usize, len: usize) -> Vec<u8> {
    let mut out = vec![0u8; len];
    for slot in out.iter_mut().rev() {
        *slot = (idx % base) as u8;
        idx /= base;
    }
    out
}

/// A bijection on [0, n), stored as its image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &i in &image {
            if i >= n || seen[i] {
                return Err(Error::Usage("permutation image is not a bijection".into()));
            }
            seen[i] = true;
        }
        Ok(Permutation { image })
    }

    pub fn identity(n: usize) -> Self {
        Permutation { image: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0usize; self.image.len()];
        for (i, &j) in self.image.iter().enumerate() {
            inv[j] = i;
        }
        Permutation { image: inv }
    }

    /// result[i] = a[p(i)]
    pub fn apply(&self, a: &QVec) -> Result<QVec> {
        if self.image.len() != a.len() {
            return Err(Error::Usage(format!(
                "permutation size {} does not match vector length {}",
                self.image.len(),
                a.len()
            )));
        }
        let elems = self.image.iter().map(|&i| a.elems[i]).collect();
        Ok(QVec { q: a.q, elems })
    }

    pub fn apply_slice(&self, a: &[u8], out: &mut Vec<u8>) {
        out.clear();
        out.extend(self.image.iter().map(|&i| a[i]));
    }

    /// All n! permutations on n letters, in a deterministic order.
    pub fn enumerate_all(n: usize) -> Vec<Permutation> {
        use itertools::Itertools;
        (0..n)
            .permutations(n)
            .map(|image| Permutation { image })
            .collect()
    }
}

/// Fisher-Yates draw, uniform over all n! permutations.
pub fn sample_uniform_perm<R: Rng>(n: usize, rng: &mut R) -> Permutation {
    let mut image: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        image.swap(i, j);
    }
    Permutation { image }
}

pub fn sample_uniform_vec<R: Rng>(n: usize, q: u8, rng: &mut R) -> QVec {
    let elems = (0..n).map(|_| rng.gen_range(0..q)).collect();
    QVec { q, elems }
}

/// Deterministic substream derivation: one master seed, per-block streams
/// selected by a counter. Streams are statistically independent and the
/// assignment does not depend on thread scheduling.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
