//! Exact reference values: reduced density matrices, purities and the
//! partial-reflection, partial-time-reversal, D₂ and Klein-bottle invariants
//! by direct contraction.
//!
//! Inside an interval the local basis index places the `k`-th site of
//! [`PartitionSpec::sites`] in bit `k`, so segment `I₁` occupies the lowest
//! bits.

use std::ops::Range;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{gather_bits, reverse_bits, sz, StateVector, C64};

/// Largest interval for which ρ_I is materialized.
pub const MAX_INTERVAL_SITES: usize = 12;

/// Tolerance on the imaginary part of an assembled real trace.
pub const REALNESS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub n_sites: usize,
    /// Contiguous, disjoint, ordered site ranges (I₁, I₂ and optionally I₃).
    pub segments: Vec<Range<usize>>,
}

impl PartitionSpec {
    pub fn new(n_sites: usize, segments: Vec<Range<usize>>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let mut prev_end = 0;
        for (i, seg) in segments.iter().enumerate() {
            if seg.is_empty() {
                return Err(Error::IncompatiblePartition(format!("segment {i} is empty")));
            }
            if seg.end > n_sites {
                return Err(Error::SiteOutOfRange {
                    site: seg.end - 1,
                    num_sites: n_sites,
                });
            }
            if i > 0 && seg.start < prev_end {
                return Err(Error::IncompatiblePartition(format!(
                    "segment {i} overlaps or precedes segment {}",
                    i - 1
                )));
            }
            prev_end = seg.end;
        }
        let total: usize = segments.iter().map(|s| s.len()).sum();
        if total > MAX_INTERVAL_SITES {
            return Err(Error::TooLarge {
                what: "interval length",
                value: total,
                limit: MAX_INTERVAL_SITES,
            });
        }
        Ok(Self { n_sites, segments })
    }

    /// `I₁ = [N/2 − n, N/2)`, `I₂ = [N/2, N/2 + n)`: two blocks mirrored about
    /// the central bond.
    pub fn reflection(n_sites: usize, n: usize) -> Result<Self> {
        if n == 0 || 2 * n > n_sites || n_sites % 2 != 0 {
            return Err(Error::IncompatiblePartition(format!(
                "cannot place 2×{n} sites around the centre of {n_sites}"
            )));
        }
        let mid = n_sites / 2;
        Self::new(n_sites, vec![mid - n..mid, mid..mid + n])
    }

    /// Three adjacent blocks of `n` sites centred on the chain (start rounded down).
    pub fn three_segments(n_sites: usize, n: usize) -> Result<Self> {
        if n == 0 || 3 * n > n_sites {
            return Err(Error::IncompatiblePartition(format!(
                "cannot place 3×{n} sites in a chain of {n_sites}"
            )));
        }
        let s = (n_sites - 3 * n) / 2;
        Self::new(n_sites, vec![s..s + n, s + n..s + 2 * n, s + 2 * n..s + 3 * n])
    }

    /// All sites of the interval in segment order.
    pub fn sites(&self) -> Vec<usize> {
        self.segments.iter().flat_map(|s| s.clone()).collect()
    }

    pub fn interval_len(&self) -> usize {
        self.segments.iter().map(|s| s.len()).sum()
    }

    /// Local bit positions of segment `i`.
    pub fn local_bits(&self, i: usize) -> Range<usize> {
        let start: usize = self.segments[..i].iter().map(|s| s.len()).sum();
        start..start + self.segments[i].len()
    }

    pub fn segment_len(&self, i: usize) -> usize {
        self.segments[i].len()
    }

    /// Two equal segments, as required by the reflection and time-reversal invariants.
    pub fn require_pair(&self) -> Result<usize> {
        match self.segments.as_slice() {
            [a, b] if a.len() == b.len() => Ok(a.len()),
            _ => Err(Error::IncompatiblePartition(
                "expected two segments of equal length".into(),
            )),
        }
    }

    pub fn require_triple(&self) -> Result<()> {
        if self.segments.len() == 3 {
            Ok(())
        } else {
            Err(Error::IncompatiblePartition(format!(
                "expected three segments, got {}",
                self.segments.len()
            )))
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReducedDensityMatrix {
    pub partition: PartitionSpec,
    pub matrix: DMatrix<C64>,
}

/// `ρ_I = Tr_{S∖I} |ψ⟩⟨ψ|`.
pub fn reduced_density_matrix(state: &StateVector, partition: &PartitionSpec) -> Result<ReducedDensityMatrix> {
    if partition.n_sites != state.num_sites() {
        return Err(Error::DimensionMismatch {
            expected: partition.n_sites,
            actual: state.num_sites(),
        });
    }
    let region = partition.sites();
    let rest: Vec<usize> = (0..state.num_sites()).filter(|s| !region.contains(s)).collect();
    let (da, de) = (1usize << region.len(), 1usize << rest.len());
    let mut m = DMatrix::<C64>::zeros(da, de);
    for (x, amp) in state.amplitudes().iter().enumerate() {
        let a = gather_bits(x as u64, &region) as usize;
        let e = gather_bits(x as u64, &rest) as usize;
        m[(a, e)] = *amp;
    }
    let matrix = &m * m.adjoint();
    Ok(ReducedDensityMatrix {
        partition: partition.clone(),
        matrix,
    })
}

/// Partial trace of a matrix on `total_bits` local bits, keeping `keep` (in order).
pub fn partial_trace(matrix: &DMatrix<C64>, total_bits: usize, keep: &[usize]) -> DMatrix<C64> {
    let traced: Vec<usize> = (0..total_bits).filter(|b| !keep.contains(b)).collect();
    let dk = 1usize << keep.len();
    let mut out = DMatrix::<C64>::zeros(dk, dk);
    let dim = 1usize << total_bits;
    for x in 0..dim {
        let kx = gather_bits(x as u64, keep) as usize;
        let tx = gather_bits(x as u64, &traced);
        for y in 0..dim {
            if gather_bits(y as u64, &traced) == tx {
                out[(kx, gather_bits(y as u64, keep) as usize)] += matrix[(x, y)];
            }
        }
    }
    out
}

impl ReducedDensityMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_bits(&self) -> usize {
        self.partition.interval_len()
    }

    /// Reduced density matrix of segment `i`.
    pub fn segment(&self, i: usize) -> DMatrix<C64> {
        let keep: Vec<usize> = self.partition.local_bits(i).collect();
        partial_trace(&self.matrix, self.num_bits(), &keep)
    }

    pub fn segment_purity(&self, i: usize) -> f64 {
        purity_of(&self.segment(i))
    }

    pub fn purity(&self) -> f64 {
        purity_of(&self.matrix)
    }

    /// Partial transpose on the local bits in `mask`:
    /// `(ρ^{T})_{x,y} = ρ_{x', y'}` where `x', y'` exchange the masked bits of `x` and `y`.
    pub fn partial_transpose(&self, mask: u64) -> DMatrix<C64> {
        partial_transpose(&self.matrix, mask)
    }
}

pub fn purity_of(rho: &DMatrix<C64>) -> f64 {
    // Tr ρ² = Σ |ρ_xy|² for Hermitian ρ.
    rho.iter().map(|z| z.norm_sqr()).sum()
}

pub fn purity(rdm: &ReducedDensityMatrix) -> f64 {
    rdm.purity()
}

pub fn partial_transpose(rho: &DMatrix<C64>, mask: u64) -> DMatrix<C64> {
    let dim = rho.nrows();
    DMatrix::from_fn(dim, dim, |x, y| {
        let (xu, yu) = (x as u64, y as u64);
        let xs = (xu & !mask) | (yu & mask);
        let ys = (yu & !mask) | (xu & mask);
        rho[(xs as usize, ys as usize)]
    })
}

/// `u X u†` with `u = ⊗ σʸ` on the bits in `mask`.
///
/// `σʸ|0⟩ = i|1⟩` and `σʸ|1⟩ = −i|0⟩`, so `u|a⟩ = φ(a)|a ⊕ mask⟩`.
pub fn conjugate_by_sigma_y(x: &DMatrix<C64>, mask: u64) -> DMatrix<C64> {
    let phase = |a: u64| -> C64 {
        let ups = (!a & mask).count_ones();
        let downs = (a & mask).count_ones();
        C64::i().powu(ups) * (-C64::i()).powu(downs)
    };
    let dim = x.nrows();
    DMatrix::from_fn(dim, dim, |r, col| {
        let (ru, cu) = (r as u64 ^ mask, col as u64 ^ mask);
        phase(ru) * x[(ru as usize, cu as usize)] * phase(cu).conj()
    })
}

/// `u X u†` with `u = ⊗ σˣ` on the bits in `mask`.
pub fn conjugate_by_sigma_x(x: &DMatrix<C64>, mask: u64) -> DMatrix<C64> {
    let dim = x.nrows();
    DMatrix::from_fn(dim, dim, |r, col| x[(r ^ mask as usize, col ^ mask as usize)])
}

/// Which invariant an [`InvariantValue`] or estimate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InvariantKind {
    #[serde(rename = "R")]
    Reflection,
    #[serde(rename = "T")]
    TimeReversal,
    #[serde(rename = "D2")]
    D2,
    #[serde(rename = "KB")]
    KleinBottle,
}

impl std::fmt::Display for InvariantKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InvariantKind::Reflection => "R",
            InvariantKind::TimeReversal => "T",
            InvariantKind::D2 => "D2",
            InvariantKind::KleinBottle => "KB",
        })
    }
}

impl std::str::FromStr for InvariantKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "R" | "r" => Ok(Self::Reflection),
            "T" | "t" => Ok(Self::TimeReversal),
            "D2" | "d2" => Ok(Self::D2),
            "KB" | "kb" => Ok(Self::KleinBottle),
            other => Err(Error::invalid("kind", format!("unknown invariant {other:?}"))),
        }
    }
}

impl InvariantKind {
    /// Exponent `p` of the normalization `Z̃ = Z / (mean purity)^p`.
    pub fn normalization_exponent(self) -> f64 {
        match self {
            InvariantKind::Reflection => 0.5,
            _ => 1.5,
        }
    }

    /// Segments whose purities normalize the invariant: (I₁, I₂) for R and T,
    /// (I₁, I₃) for D₂ and KB.
    pub fn normalization_segments(self) -> (usize, usize) {
        match self {
            InvariantKind::Reflection | InvariantKind::TimeReversal => (0, 1),
            InvariantKind::D2 | InvariantKind::KleinBottle => (0, 2),
        }
    }
}

/// `Z / ((p_a + p_b)/2)^exponent`.
pub fn normalize(kind: InvariantKind, raw: f64, purity_a: f64, purity_b: f64) -> f64 {
    raw / (0.5 * (purity_a + purity_b)).powf(kind.normalization_exponent())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantValue {
    pub kind: InvariantKind,
    pub raw: f64,
    pub normalized: f64,
    /// Purities of the two normalizing segments, see
    /// [`InvariantKind::normalization_segments`].
    pub purity_a: f64,
    pub purity_b: f64,
}

fn real_part(z: C64, what: &str) -> f64 {
    debug_assert!(z.im.abs() <= REALNESS_TOL, "{what} has imaginary part {}", z.im);
    if z.im.abs() > REALNESS_TOL {
        log::warn!("{what}: discarding imaginary part {:e}", z.im);
    }
    z.re
}

fn finish(kind: InvariantKind, rdm: &ReducedDensityMatrix, raw: f64) -> InvariantValue {
    let (a, b) = kind.normalization_segments();
    let purity_a = rdm.segment_purity(a);
    let purity_b = rdm.segment_purity(b);
    InvariantValue {
        kind,
        raw,
        normalized: normalize(kind, raw, purity_a, purity_b),
        purity_a,
        purity_b,
    }
}

/// Bit mask of segment `i` in the local basis.
fn segment_mask(p: &PartitionSpec, i: usize) -> u64 {
    p.local_bits(i).fold(0u64, |m, b| m | (1 << b))
}

/// `Z_R = Tr[ρ_I R_I]` with `R_I` reversing the interval.
pub fn exact_zr(rdm: &ReducedDensityMatrix) -> Result<InvariantValue> {
    rdm.partition.require_pair()?;
    let len = rdm.num_bits();
    let z: C64 = (0..rdm.dim())
        .map(|s| rdm.matrix[(s, reverse_bits(s as u64, len) as usize)])
        .sum();
    Ok(finish(InvariantKind::Reflection, rdm, real_part(z, "Z_R")))
}

/// `Z_T = Tr[ρ_I u_T ρ_I^{T₁} u_T†]`, `u_T = ⊗_{I₁} σʸ`.
pub fn exact_zt(rdm: &ReducedDensityMatrix) -> Result<InvariantValue> {
    rdm.partition.require_pair()?;
    let mask = segment_mask(&rdm.partition, 0);
    let twisted = conjugate_by_sigma_y(&rdm.partial_transpose(mask), mask);
    let z = trace_of_product(&rdm.matrix, &twisted);
    Ok(finish(InvariantKind::TimeReversal, rdm, real_part(z, "Z_T")))
}

/// `Tr[A B]`.
fn trace_of_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = C64::default();
    for x in 0..n {
        for y in 0..n {
            acc += a[(x, y)] * b[(y, x)];
        }
    }
    acc
}

/// `Tr_{I₂}[(⊗_{I₂} σᶻ) X]`, an operator on `I₁ ∪ I₃`.
fn trace_out_middle_with_sz(op: &DMatrix<C64>, p: &PartitionSpec) -> DMatrix<C64> {
    let total = p.interval_len();
    let middle: Vec<usize> = p.local_bits(1).collect();
    let keep: Vec<usize> = (0..total).filter(|b| !middle.contains(b)).collect();
    let scatter = |compact: u64, bits: &[usize]| -> u64 {
        bits.iter()
            .enumerate()
            .fold(0u64, |acc, (k, &b)| acc | (((compact >> k) & 1) << b))
    };
    let dk = 1usize << keep.len();
    let middle_states: Vec<(u64, f64)> = (0..1u64 << middle.len())
        .map(|m| {
            let sign = (0..middle.len()).map(|k| sz((m >> k) & 1)).product();
            (scatter(m, &middle), sign)
        })
        .collect();
    DMatrix::from_fn(dk, dk, |a, a2| {
        let (xa, ya) = (scatter(a as u64, &keep), scatter(a2 as u64, &keep));
        middle_states
            .iter()
            .map(|&(m, sign)| op[((xa | m) as usize, (ya | m) as usize)] * sign)
            .sum()
    })
}

/// `Z_D2 = Tr[S_{I₁} Z_{I₂} S_{I₃} (ρ̆_I ⊗ ρ_I)]`, `ρ̆_I = X_{I₁} ρ_I X_{I₁}`.
///
/// The swaps on I₁ and I₃ join the two copies into a single trace over
/// `I₁ ∪ I₃`, while each copy carries its own `σᶻ` string on I₂.
pub fn exact_zd2(rdm: &ReducedDensityMatrix) -> Result<InvariantValue> {
    rdm.partition.require_triple()?;
    let mask = segment_mask(&rdm.partition, 0);
    let flipped = conjugate_by_sigma_x(&rdm.matrix, mask);
    let a = trace_out_middle_with_sz(&flipped, &rdm.partition);
    let b = trace_out_middle_with_sz(&rdm.matrix, &rdm.partition);
    let z = trace_of_product(&a, &b);
    Ok(finish(InvariantKind::D2, rdm, real_part(z, "Z_D2")))
}

/// `Z_KB = Tr[S_{I₁} Z_{I₂} S_{I₃} (u_T ρ_I^{T₁} u_T† ⊗ ρ_I)]`.
pub fn exact_zkb(rdm: &ReducedDensityMatrix) -> Result<InvariantValue> {
    rdm.partition.require_triple()?;
    let mask = segment_mask(&rdm.partition, 0);
    let twisted = conjugate_by_sigma_y(&rdm.partial_transpose(mask), mask);
    let a = trace_out_middle_with_sz(&twisted, &rdm.partition);
    let b = trace_out_middle_with_sz(&rdm.matrix, &rdm.partition);
    let z = trace_of_product(&a, &b);
    Ok(finish(InvariantKind::KleinBottle, rdm, real_part(z, "Z_KB")))
}

pub fn exact_invariant(kind: InvariantKind, rdm: &ReducedDensityMatrix) -> Result<InvariantValue> {
    match kind {
        InvariantKind::Reflection => exact_zr(rdm),
        InvariantKind::TimeReversal => exact_zt(rdm),
        InvariantKind::D2 => exact_zd2(rdm),
        InvariantKind::KleinBottle => exact_zkb(rdm),
    }
}

/// Convenience: exact invariant of a pure state on `partition`.
pub fn exact_invariant_of_state(
    kind: InvariantKind,
    state: &StateVector,
    partition: &PartitionSpec,
) -> Result<InvariantValue> {
    exact_invariant(kind, &reduced_density_matrix(state, partition)?)
}
