//! Basis encoding, statevectors, single-site gates and projective sampling.
//!
//! Site `k` (0-based) lives in bit `k` of the basis index; spin up is 0.

use std::collections::BTreeMap;

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;

/// Largest chain the statevector routines accept.
pub const MAX_SITES: usize = 20;

pub const UNITARITY_TOL: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity() -> Mat2 {
    Mat2::identity()
}

pub fn pauli_x() -> Mat2 {
    Mat2::new(c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.))
}

pub fn pauli_y() -> Mat2 {
    Mat2::new(c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.))
}

pub fn pauli_z() -> Mat2 {
    Mat2::new(c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.))
}

/// `σᶻ` eigenvalue of a bit: +1 for up (0), −1 for down (1).
#[inline]
pub fn sz(bit: u64) -> f64 {
    1.0 - 2.0 * bit as f64
}

/// Normalized pure state of `num_sites` spin-1/2 sites.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_sites: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Wraps raw amplitudes, normalizing them.
    pub fn new(num_sites: usize, amplitudes: Vec<C64>) -> Result<Self> {
        let mut s = Self::from_raw(num_sites, amplitudes)?;
        let norm = s.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::invalid("amplitudes", "zero or non-finite norm"));
        }
        s.amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(s)
    }

    /// Wraps amplitudes without normalizing (e.g. the output of `H|ψ⟩`).
    pub fn from_raw(num_sites: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if num_sites == 0 || num_sites > MAX_SITES {
            return Err(Error::TooLarge {
                what: "num_sites",
                value: num_sites,
                limit: MAX_SITES,
            });
        }
        let dim = 1usize << num_sites;
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: amplitudes.len(),
            });
        }
        Ok(Self {
            num_sites,
            amplitudes,
        })
    }

    pub fn basis(num_sites: usize, index: u64) -> Result<Self> {
        let dim = 1u64 << num_sites.min(63);
        if index >= dim {
            return Err(Error::invalid("index", format!("{index} ≥ 2^{num_sites}")));
        }
        let mut amps = vec![C64::default(); 1usize << num_sites];
        amps[index as usize] = c(1., 0.);
        Self::from_raw(num_sites, amps)
    }

    /// Product state from per-site spins (`false` = up, `true` = down).
    pub fn product(spins: &[bool]) -> Result<Self> {
        let index = spins
            .iter()
            .enumerate()
            .fold(0u64, |acc, (k, &down)| acc | ((down as u64) << k));
        Self::basis(spins.len(), index)
    }

    /// Néel state `|↓↑↓↑…⟩`: even sites down, odd sites up.
    pub fn neel(num_sites: usize) -> Result<Self> {
        let spins: Vec<bool> = (0..num_sites).map(|k| k % 2 == 0).collect();
        Self::product(&spins)
    }

    /// Haar-random pure state (complex Gaussian amplitudes, normalized).
    pub fn random<R: Rng + ?Sized>(num_sites: usize, rng: &mut R) -> Result<Self> {
        let dim = 1usize << num_sites.min(MAX_SITES);
        let amps = (0..dim)
            .map(|_| {
                let re: f64 = rng.sample(rand_distr::StandardNormal);
                let im: f64 = rng.sample(rand_distr::StandardNormal);
                c(re, im)
            })
            .collect();
        Self::new(num_sites, amps)
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn overlap(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// `⟨σᶻ_site⟩`.
    pub fn sz_expectation(&self, site: usize) -> Result<f64> {
        check_site(site, self.num_sites)?;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(x, a)| sz((x as u64 >> site) & 1) * a.norm_sqr())
            .sum())
    }

    pub fn apply(&self, u: &LocalUnitary) -> Result<StateVector> {
        apply_local_unitary(self, u)
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }
}

fn check_site(site: usize, num_sites: usize) -> Result<()> {
    if site >= num_sites {
        Err(Error::SiteOutOfRange { site, num_sites })
    } else {
        Ok(())
    }
}

/// A 2×2 unitary acting on one site.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalUnitary {
    site: usize,
    matrix: Mat2,
}

impl LocalUnitary {
    pub fn new(site: usize, matrix: Mat2) -> Result<Self> {
        let deviation = unitarity_deviation(&matrix);
        if deviation > UNITARITY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { site, matrix })
    }

    pub fn site(&self) -> usize {
        self.site
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.matrix
    }

    pub fn adjoint(&self) -> LocalUnitary {
        LocalUnitary {
            site: self.site,
            matrix: self.matrix.adjoint(),
        }
    }
}

/// `‖U†U − 1‖_F`.
pub fn unitarity_deviation(m: &Mat2) -> f64 {
    (m.adjoint() * m - Mat2::identity()).norm()
}

pub fn apply_local_unitary(state: &StateVector, u: &LocalUnitary) -> Result<StateVector> {
    let mut out = state.clone();
    apply_in_place(out.amplitudes_mut(), state.num_sites, u.site, &u.matrix)?;
    Ok(out)
}

/// Applies `m` to `site` of a raw amplitude buffer.
pub fn apply_in_place(amps: &mut [C64], num_sites: usize, site: usize, m: &Mat2) -> Result<()> {
    check_site(site, num_sites)?;
    let bit = 1usize << site;
    let (m00, m01, m10, m11) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    for x in 0..amps.len() {
        if x & bit == 0 {
            let a0 = amps[x];
            let a1 = amps[x | bit];
            amps[x] = m00 * a0 + m01 * a1;
            amps[x | bit] = m10 * a0 + m11 * a1;
        }
    }
    Ok(())
}

/// Spin configuration on an ordered region, bit `k` = position `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bitstring {
    len: u32,
    bits: u64,
}

impl Bitstring {
    pub fn new(len: usize, bits: u64) -> Result<Self> {
        if len > 63 {
            return Err(Error::TooLarge {
                what: "bitstring length",
                value: len,
                limit: 63,
            });
        }
        if bits >> len != 0 {
            return Err(Error::invalid("bits", format!("{bits:#b} does not fit in {len} bits")));
        }
        Ok(Self {
            len: len as u32,
            bits,
        })
    }

    /// From spins in position order (`false` = up).
    pub fn from_spins(spins: &[bool]) -> Result<Self> {
        let bits = spins
            .iter()
            .enumerate()
            .fold(0u64, |acc, (k, &d)| acc | ((d as u64) << k));
        Self::new(spins.len(), bits)
    }

    /// Parses `↑`/`↓` (or `u`/`d`, `0`/`1`), first character = position 0.
    pub fn parse(s: &str) -> Result<Self> {
        let spins = s
            .chars()
            .map(|ch| match ch {
                '↑' | 'u' | 'U' | '0' => Ok(false),
                '↓' | 'd' | 'D' | '1' => Ok(true),
                other => Err(Error::invalid("bitstring", format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_spins(&spins)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn spin(&self, k: usize) -> bool {
        (self.bits >> k) & 1 == 1
    }

    pub fn spins(&self) -> Vec<bool> {
        (0..self.len()).map(|k| self.spin(k)).collect()
    }

    pub fn hamming(&self, other: &Bitstring) -> Result<u32> {
        hamming_distance(self, other)
    }

    /// Reverses the order of positions.
    pub fn reflect(&self) -> Bitstring {
        Bitstring {
            len: self.len,
            bits: reverse_bits(self.bits, self.len()),
        }
    }
}

impl std::fmt::Display for Bitstring {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for k in 0..self.len() {
            f.write_str(if self.spin(k) { "↓" } else { "↑" })?;
        }
        Ok(())
    }
}

pub fn hamming_distance(a: &Bitstring, b: &Bitstring) -> Result<u32> {
    if a.len != b.len {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok((a.bits ^ b.bits).count_ones())
}

/// Reverses the low `len` bits of `bits`.
#[inline]
pub fn reverse_bits(bits: u64, len: usize) -> u64 {
    if len == 0 {
        0
    } else {
        bits.reverse_bits() >> (64 - len)
    }
}

/// Spatial reflection of a bitstring over the full interval of a
/// two-segment partition.
pub fn reflect_bitstring(s: &Bitstring, partition: &crate::rdm::PartitionSpec) -> Result<Bitstring> {
    let expected = partition.interval_len();
    if s.len() != expected {
        return Err(Error::LengthMismatch {
            left: s.len(),
            right: expected,
        });
    }
    Ok(s.reflect())
}

/// Gathers the bits of `x` at `sites` into a compact index (position `k` ← `sites[k]`).
#[inline]
pub fn gather_bits(x: u64, sites: &[usize]) -> u64 {
    sites
        .iter()
        .enumerate()
        .fold(0u64, |acc, (k, &s)| acc | (((x >> s) & 1) << k))
}

/// Born probabilities of the state marginalized onto `region`, indexed by
/// the compact region bitstring.
pub fn marginal_probabilities(state: &StateVector, region: &[usize]) -> Result<Vec<f64>> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    for &s in region {
        check_site(s, state.num_sites())?;
    }
    let mut probs = vec![0.0; 1usize << region.len()];
    for (x, a) in state.amplitudes().iter().enumerate() {
        probs[gather_bits(x as u64, region) as usize] += a.norm_sqr();
    }
    Ok(probs)
}

/// Draws `n_shots` outcomes from `probs`, returning dense counts.
pub fn sample_counts<R: Rng + ?Sized>(probs: &[f64], n_shots: usize, rng: &mut R) -> Result<Vec<u32>> {
    if n_shots == 0 {
        return Err(Error::invalid("n_shots", "must be ≥ 1"));
    }
    let clean: Vec<f64> = probs.iter().map(|&p| p.max(0.0)).collect();
    let dist = WeightedIndex::new(&clean)
        .map_err(|e| Error::invalid("probabilities", e.to_string()))?;
    let mut counts = vec![0u32; probs.len()];
    for _ in 0..n_shots {
        counts[dist.sample(rng)] += 1;
    }
    Ok(counts)
}

/// Projective measurement of `region` repeated `n_shots` times.
pub fn sample_bitstrings<R: Rng + ?Sized>(
    state: &StateVector,
    region: &[usize],
    n_shots: usize,
    rng: &mut R,
) -> Result<BTreeMap<Bitstring, u32>> {
    let probs = marginal_probabilities(state, region)?;
    let counts = sample_counts(&probs, n_shots, rng)?;
    counts
        .into_iter()
        .enumerate()
        .filter(|&(_, n)| n > 0)
        .map(|(s, n)| Ok((Bitstring::new(region.len(), s as u64)?, n)))
        .collect()
}
