//! Lowest eigenpair by restarted Lanczos with full reorthogonalization.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::rng::{self, Domain};
use crate::spin::{StateVector, C64};

/// Largest chain the solver accepts.
pub const MAX_GROUND_STATE_SITES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LanczosOptions {
    /// Tolerance on `‖Hψ − Eψ‖`.
    pub tol: f64,
    /// Cap on the total number of matrix-vector products.
    pub max_iter: usize,
    /// Krylov dimension before a restart.
    pub krylov_dim: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 20_000,
            krylov_dim: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub energy: f64,
    pub state: StateVector,
    pub residual_norm: f64,
    /// Matrix-vector products used.
    pub iterations: usize,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// Lowest eigenvalue and its eigenvector of the tridiagonal `(alpha, beta)`.
fn tridiagonal_ground(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = t.symmetric_eigen();
    let (imin, &emin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty tridiagonal");
    (emin, eig.eigenvectors.column(imin).iter().copied().collect())
}

/// Ground state of `spec`.
///
/// Each cycle builds a Krylov basis of up to `krylov_dim` vectors, keeping it
/// orthonormal by two passes of classical Gram–Schmidt per step, and restarts
/// from the current Ritz vector. The start vector is drawn from `seed`.
pub fn ground_state(spec: &HamiltonianSpec, opts: &LanczosOptions) -> Result<EigenResult> {
    spec.validate()?;
    if spec.n_sites > MAX_GROUND_STATE_SITES {
        return Err(Error::TooLarge {
            what: "n_sites",
            value: spec.n_sites,
            limit: MAX_GROUND_STATE_SITES,
        });
    }
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    if opts.krylov_dim < 2 {
        return Err(Error::invalid("krylov_dim", "must be ≥ 2"));
    }
    let dim = spec.dim();
    let m = opts.krylov_dim.min(dim);
    let mut start = StateVector::random(spec.n_sites, &mut rng::stream(opts.seed, Domain::StartVector, 0))?
        .into_amplitudes();

    let mut matvecs = 0usize;
    let mut hv = vec![C64::default(); dim];
    let mut best_residual = f64::INFINITY;

    loop {
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m);
        let mut alpha: Vec<f64> = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        let n0 = norm(&start);
        basis.push(start.iter().map(|x| x / n0).collect());

        let ritz: (f64, Vec<f64>);
        loop {
            let j = basis.len() - 1;
            spec.matvec_into(&basis[j], &mut hv);
            matvecs += 1;
            let mut w = hv.clone();
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            for _ in 0..2 {
                for q in &basis {
                    let proj = dot(q, &w);
                    axpy(-proj, q, &mut w);
                }
            }
            let b = norm(&w);
            let k = alpha.len();
            let check = k == m || b < 1e-13 || k % 5 == 0 || matvecs >= opts.max_iter;
            if check {
                let (e, y) = tridiagonal_ground(&alpha, &beta);
                let estimate = b * y[k - 1].abs();
                let done = estimate < 0.1 * opts.tol || b < 1e-13;
                if done || k == m || matvecs >= opts.max_iter {
                    ritz = (e, y);
                    break;
                }
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }

        let (energy, y) = ritz;
        let mut psi = vec![C64::default(); dim];
        for (q, &coef) in basis.iter().zip(&y) {
            axpy(C64::new(coef, 0.0), q, &mut psi);
        }
        let nrm = norm(&psi);
        psi.iter_mut().for_each(|x| *x /= nrm);

        spec.matvec_into(&psi, &mut hv);
        matvecs += 1;
        let rayleigh = dot(&psi, &hv).re;
        let residual = hv
            .iter()
            .zip(&psi)
            .map(|(h, p)| (h - p * rayleigh).norm_sqr())
            .sum::<f64>()
            .sqrt();
        best_residual = best_residual.min(residual);
        log::debug!(
            "lanczos cycle: ritz {energy:.12} rayleigh {rayleigh:.12} residual {residual:e} matvecs {matvecs}"
        );
        if residual <= opts.tol {
            return Ok(EigenResult {
                energy: rayleigh,
                state: StateVector::from_raw(spec.n_sites, psi)?,
                residual_norm: residual,
                iterations: matvecs,
            });
        }
        if matvecs >= opts.max_iter {
            return Err(Error::NotConverged {
                iterations: matvecs,
                residual: best_residual,
            });
        }
        start = psi;
    }
}
