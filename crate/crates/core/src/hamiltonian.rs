//! Bond-alternating XXZ chain with open boundaries.
//!
//! ```text
//! H = Σ_bonds (c_b/2)(σˣσˣ + σʸσʸ + δ σᶻσᶻ)               c_b = J on (0,1),(2,3),…  J′ on (1,2),(3,4),…
//!   + B Σ_j (σˣ_j σᶻ_{j+1} − σᶻ_j σˣ_{j+1})
//!   + w Δ Σ_k (−1)^k σᶻ_k                                  (favours |↓↑↓↑…⟩)
//!   + δ_p σᶻ_0
//! ```
//!
//! Every term is real in the σᶻ basis, so `H` is a real symmetric matrix.

use nalgebra::{DMatrix, Matrix4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{c, sz, StateVector, C64, MAX_SITES};

/// Fraction of `J` used for the default boundary pinning field.
pub const DEFAULT_PINNING_RATIO: f64 = 0.05;

/// Largest chain [`dense_matrix`] will build.
pub const MAX_DENSE_SITES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSpec {
    pub n_sites: usize,
    pub j: f64,
    pub j_prime: f64,
    /// Exchange anisotropy δ.
    pub delta: f64,
    /// Symmetry-breaking strength.
    #[serde(default)]
    pub b: f64,
    /// Staggered (Néel) field strength Δ.
    #[serde(default)]
    pub neel: f64,
    /// Multiplier on the Néel term, the ramp knob f(t).
    #[serde(default = "one")]
    pub neel_weight: f64,
    /// Boundary field δ_p on site 0.
    pub pinning: f64,
}

fn one() -> f64 {
    1.0
}

impl HamiltonianSpec {
    /// Plain XXZ chain with the default pinning field `0.05 J`.
    pub fn xxz(n_sites: usize, j: f64, j_prime: f64, delta: f64) -> Self {
        Self {
            n_sites,
            j,
            j_prime,
            delta,
            b: 0.0,
            neel: 0.0,
            neel_weight: 1.0,
            pinning: DEFAULT_PINNING_RATIO * j,
        }
    }

    pub fn with_b(mut self, b: f64) -> Self {
        self.b = b;
        self
    }

    pub fn with_neel(mut self, neel: f64, weight: f64) -> Self {
        self.neel = neel;
        self.neel_weight = weight;
        self
    }

    pub fn with_pinning(mut self, pinning: f64) -> Self {
        self.pinning = pinning;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 4 || self.n_sites % 2 != 0 {
            return Err(Error::invalid("n_sites", format!("must be even and ≥ 4, got {}", self.n_sites)));
        }
        if self.n_sites > MAX_SITES {
            return Err(Error::TooLarge {
                what: "n_sites",
                value: self.n_sites,
                limit: MAX_SITES,
            });
        }
        for (name, v) in [
            ("j", self.j),
            ("j_prime", self.j_prime),
            ("delta", self.delta),
            ("b", self.b),
            ("neel", self.neel),
            ("neel_weight", self.neel_weight),
            ("pinning", self.pinning),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_sites
    }

    /// Coupling of the bond between sites `j` and `j + 1`.
    pub fn bond_coupling(&self, j: usize) -> f64 {
        if j % 2 == 0 {
            self.j
        } else {
            self.j_prime
        }
    }

    /// Coefficient of `σᶻ_k` from the Néel and pinning fields.
    pub fn field_coefficient(&self, k: usize) -> f64 {
        let stagger = if k % 2 == 0 { 1.0 } else { -1.0 };
        let pin = if k == 0 { self.pinning } else { 0.0 };
        self.neel_weight * self.neel * stagger + pin
    }

    /// Real symmetric 4×4 matrix of the two-site term on bond `j`, in the
    /// basis `|b_j b_{j+1}⟩` with `b_j` as the high bit.
    pub fn bond_matrix(&self, j: usize) -> Matrix4<f64> {
        let cb = self.bond_coupling(j);
        let x = nalgebra::Matrix2::new(0.0, 1.0, 1.0, 0.0);
        // σʸ⊗σʸ is real: (−i)(−i)·… collapses to ±1 entries.
        let yy = Matrix4::new(
            0.0, 0.0, 0.0, -1.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            -1.0, 0.0, 0.0, 0.0,
        );
        let z = nalgebra::Matrix2::new(1.0, 0.0, 0.0, -1.0);
        let xx = x.kronecker(&x);
        let zz = z.kronecker(&z);
        let xz = x.kronecker(&z);
        let zx = z.kronecker(&x);
        (xx + yy + zz * self.delta) * (cb / 2.0) + (xz - zx) * self.b
    }

    /// Diagonal energy of the field terms on basis state `x`.
    pub fn field_energy(&self, x: u64) -> f64 {
        (0..self.n_sites)
            .map(|k| self.field_coefficient(k) * sz((x >> k) & 1))
            .sum()
    }

    /// Apply `H` to `state` without forming the matrix.
    pub fn matvec(&self, state: &StateVector) -> Result<StateVector> {
        self.validate()?;
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: state.dim(),
            });
        }
        let mut out = vec![C64::default(); self.dim()];
        self.matvec_into(state.amplitudes(), &mut out);
        StateVector::from_raw(self.n_sites, out)
    }

    /// Gather-form `out = H·v`. Each output entry is computed independently
    /// in a fixed order, so the result does not depend on the thread count.
    pub fn matvec_into(&self, v: &[C64], out: &mut [C64]) {
        let n = self.n_sites;
        let fields: Vec<f64> = (0..n).map(|k| self.field_coefficient(k)).collect();
        let couplings: Vec<f64> = (0..n - 1).map(|j| self.bond_coupling(j)).collect();
        let delta = self.delta;
        let b = self.b;
        out.par_iter_mut().enumerate().with_min_len(1024).for_each(|(x, o)| {
            let xu = x as u64;
            let mut diag = 0.0;
            let mut acc = C64::default();
            for k in 0..n {
                diag += fields[k] * sz((xu >> k) & 1);
            }
            for j in 0..n - 1 {
                let bj = (xu >> j) & 1;
                let bk = (xu >> (j + 1)) & 1;
                let zj = sz(bj);
                let zk = sz(bk);
                diag += 0.5 * couplings[j] * delta * zj * zk;
                if bj != bk {
                    acc += v[x ^ (0b11 << j)] * couplings[j];
                }
                if b != 0.0 {
                    acc += v[x ^ (1 << j)] * (b * zk);
                    acc -= v[x ^ (1 << (j + 1))] * (b * zj);
                }
            }
            *o = acc + v[x] * diag;
        });
    }

    /// `⟨ψ|H|ψ⟩`.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        let hpsi = self.matvec(state)?;
        Ok(state.inner(&hpsi)?.re)
    }
}

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

/// Single-site operator `op` on `site` embedded in the full space.
///
/// Kronecker factors are ordered from the highest site down to site 0 so the
/// matrix index matches the bit layout of basis states.
fn embed(n: usize, ops: &[(usize, &DMatrix<C64>)]) -> DMatrix<C64> {
    let id = DMatrix::<C64>::identity(2, 2);
    let mut m = DMatrix::<C64>::identity(1, 1);
    for site in (0..n).rev() {
        let factor = ops.iter().find(|(s, _)| *s == site).map(|(_, o)| *o).unwrap_or(&id);
        m = kron(&m, factor);
    }
    m
}

/// Dense `2^N × 2^N` matrix assembled from Kronecker products of Pauli
/// matrices. Intended as a test oracle for [`HamiltonianSpec::matvec`].
pub fn dense_matrix(spec: &HamiltonianSpec) -> Result<DMatrix<C64>> {
    spec.validate()?;
    let n = spec.n_sites;
    if n > MAX_DENSE_SITES {
        return Err(Error::TooLarge {
            what: "n_sites",
            value: n,
            limit: MAX_DENSE_SITES,
        });
    }
    let sx = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
    let sy = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]);
    let sz = DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]);
    let dim = spec.dim();
    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for j in 0..n - 1 {
        let cb = c(spec.bond_coupling(j) / 2.0, 0.0);
        let xx = embed(n, &[(j, &sx), (j + 1, &sx)]);
        let yy = embed(n, &[(j, &sy), (j + 1, &sy)]);
        let zz = embed(n, &[(j, &sz), (j + 1, &sz)]);
        h += (xx + yy + zz * c(spec.delta, 0.)) * cb;
        if spec.b != 0.0 {
            let xz = embed(n, &[(j, &sx), (j + 1, &sz)]);
            let zx = embed(n, &[(j, &sz), (j + 1, &sx)]);
            h += (xz - zx) * c(spec.b, 0.);
        }
    }
    for k in 0..n {
        let coef = spec.field_coefficient(k);
        if coef != 0.0 {
            h += embed(n, &[(k, &sz)]) * c(coef, 0.);
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use crate::rng::{self, Domain};

    fn random_state(n: usize, seed: u64) -> StateVector {
        StateVector::random(n, &mut rng::stream(seed, Domain::Test, n as u64)).unwrap()
    }

    #[test]
    fn all_up_is_annihilated_without_anisotropy() {
        let spec = HamiltonianSpec::xxz(4, 1.0, 0.0, 0.0).with_pinning(0.0);
        let out = spec.matvec(&StateVector::product(&[false; 4]).unwrap()).unwrap();
        assert!(out.amplitudes().iter().all(|a| a.norm() < 1e-15));
    }

    #[test]
    fn validation_names_the_field() {
        let err = HamiltonianSpec::xxz(5, 1.0, 1.0, 1.0).validate().unwrap_err();
        assert!(err.to_string().contains("n_sites"));
        let err = HamiltonianSpec::xxz(4, f64::NAN, 1.0, 1.0).validate().unwrap_err();
        assert!(err.to_string().contains('j'));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let spec = HamiltonianSpec::xxz(4, 1.0, 1.0, 1.0);
        let psi = random_state(6, 1);
        assert!(matches!(spec.matvec(&psi), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn dense_oracle_too_large() {
        let spec = HamiltonianSpec::xxz(12, 1.0, 1.0, 1.0);
        assert!(matches!(dense_matrix(&spec), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn bond_matrix_matches_dense_two_site_block() {
        // On a 4-site chain with only bond (1,2) active, the dense matrix
        // restricted to sites 1,2 must equal the bond matrix.
        // B acts on every bond, so it stays off here.
        let spec = HamiltonianSpec::xxz(4, 0.0, 1.3, 0.4).with_pinning(0.0);
        let dense = dense_matrix(&spec).unwrap();
        let bm = spec.bond_matrix(1);
        for hi in 0..4usize {
            for hj in 0..4usize {
                // high bit = site 1, low bit = site 2
                let x = ((hi >> 1) << 1) | ((hi & 1) << 2);
                let y = ((hj >> 1) << 1) | ((hj & 1) << 2);
                assert!((dense[(x, y)].re - bm[(hi, hj)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn matvec_matches_dense() {
        let spec = HamiltonianSpec::xxz(8, 1.0, 0.7, 0.3).with_b(0.2).with_neel(0.5, 0.8);
        let dense = dense_matrix(&spec).unwrap();
        let psi = random_state(8, 3);
        let v = DVector::from_column_slice(psi.amplitudes());
        let hv = spec.matvec(&psi).unwrap().into_amplitudes();
        let expected = &dense * v;
        for (a, b) in hv.iter().zip(expected.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!((&dense - dense.adjoint()).norm() < 1e-14);
    }

    #[test]
    fn field_signs_favour_neel() {
        let spec = HamiltonianSpec::xxz(4, 0.0, 0.0, 0.0).with_pinning(0.0).with_neel(1.0, 1.0);
        let neel = StateVector::neel(4).unwrap();
        assert!((spec.expectation(&neel).unwrap() + 4.0).abs() < 1e-14);
    }
}
