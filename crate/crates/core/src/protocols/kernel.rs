//! Per-site factorized weights of the estimators.
//!
//! Every two-outcome weight used here factorizes over sites,
//! `w(s, s′) = Π_k w_k(s_k, s′_k)`, with one of two site kernels:
//!
//! - Hamming: `(−2)^{−[s_k ≠ s′_k]}`, i.e. `[[1, −½], [−½, 1]]`;
//! - σᶻ string: `σᶻ(s_k) σᶻ(s′_k)`, i.e. `[[1, −1], [−1, 1]]`.
//!
//! `Σ_{s,s′} w(s, s′) p(s) q(s′)` is then evaluated with one butterfly pass
//! per site in `O(L·2^L)` rather than `O(4^L)`.

use crate::spin::reverse_bits;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SiteKernel {
    Hamming,
    SigmaZ,
}

impl SiteKernel {
    fn off_diagonal(self) -> f64 {
        match self {
            SiteKernel::Hamming => -0.5,
            SiteKernel::SigmaZ => -1.0,
        }
    }
}

/// `Σ_{s,s′} Π_k w_k(s_k, s′_k) p(s) q(s′)`; `kernels[k]` acts on bit `k`.
pub(crate) fn kernel_sum(p: &[f64], q: &[f64], kernels: &[SiteKernel]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    debug_assert_eq!(p.len(), 1 << kernels.len());
    let mut t = q.to_vec();
    for (k, kern) in kernels.iter().enumerate() {
        let bit = 1usize << k;
        let off = kern.off_diagonal();
        for x in 0..t.len() {
            if x & bit == 0 {
                let (a, b) = (t[x], t[x | bit]);
                t[x] = a + off * b;
                t[x | bit] = off * a + b;
            }
        }
    }
    p.iter().zip(&t).map(|(a, b)| a * b).sum()
}

/// `Σ_{s,s′} (−2)^{−D[s,s′]} p(s) q(s′)` over `bits` sites.
pub fn hamming_kernel_sum(p: &[f64], q: &[f64], bits: usize) -> f64 {
    kernel_sum(p, q, &vec![SiteKernel::Hamming; bits])
}

/// `(−2)^{−D[s, R(s)]/2}` for an interval of `len` sites.
///
/// Mismatches between `s` and its mirror image come in pairs, so the
/// exponent is always an integer.
pub fn reflection_weight(s: u64, len: usize) -> f64 {
    let d = (s ^ reverse_bits(s, len)).count_ones();
    assert!(d % 2 == 0, "D[s, R(s)] must be even");
    (-2f64).powi(-((d / 2) as i32))
}

/// Marginal of a distribution on `total_bits` bits onto the bits in `keep`.
pub(crate) fn marginal(p: &[f64], keep: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; 1 << keep.len()];
    for (x, &v) in p.iter().enumerate() {
        out[crate::spin::gather_bits(x as u64, keep) as usize] += v;
    }
    out
}
