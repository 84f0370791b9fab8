//! Twirling channels over 2×2 CUE unitaries on a pair of spins.
//!
//! Two-spin operators are 4×4 matrices in the basis `|s, s′⟩`, index
//! `2s + s′`.

use nalgebra::Matrix4;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sample_cue;
use crate::error::{Error, Result};
use crate::spin::{c, Mat2, C64};

pub type Mat4 = Matrix4<C64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TwirlChannel {
    /// `E[(U ⊗ U)† O (U ⊗ U)]`
    Phi,
    /// `E[(U ⊗ U*)† O (U ⊗ U*)]`
    Psi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwirlReport {
    pub channel: TwirlChannel,
    pub n_samples: usize,
    /// Frobenius distance of the Monte Carlo average to its target.
    pub distance: f64,
}

fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|i, j| a[(i >> 1, j >> 1)] * b[(i & 1, j & 1)])
}

/// `S = Σ |s, s′⟩⟨s′, s|`.
pub fn swap_operator() -> Mat4 {
    Mat4::from_fn(|i, j| {
        let (s, t) = (i >> 1, i & 1);
        if j == (t << 1 | s) {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// `T = S^{T₂} = Σ |s, s⟩⟨s′, s′|`.
pub fn transpose_swap_operator() -> Mat4 {
    Mat4::from_fn(|i, j| {
        if (i == 0 || i == 3) && (j == 0 || j == 3) {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// `Õ = 2 Σ (−2)^{−D[s,s′]} |s, s′⟩⟨s, s′|`.
pub fn weight_operator() -> Mat4 {
    Mat4::from_diagonal(&nalgebra::Vector4::new(c(2.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0), c(2.0, 0.0)))
}

/// Partial transpose on the second spin.
pub fn partial_transpose_2(o: &Mat4) -> Mat4 {
    Mat4::from_fn(|i, j| o[((i & 2) | (j & 1), (j & 2) | (i & 1))])
}

/// `Φ(O) = ⅓(Tr O − ½ Tr SO) 1 + ⅓(Tr SO − ½ Tr O) S`.
pub fn phi_closed_form(o: &Mat4) -> Mat4 {
    let s = swap_operator();
    let tr = o.trace();
    let tr_s = (s * o).trace();
    Mat4::identity() * ((tr - tr_s * 0.5) / 3.0) + s * ((tr_s - tr * 0.5) / 3.0)
}

/// `Ψ(O) = [Φ(O^{T₂})]^{T₂}`.
pub fn psi_closed_form(o: &Mat4) -> Mat4 {
    partial_transpose_2(&phi_closed_form(&partial_transpose_2(o)))
}

/// Monte Carlo twirl of `Õ`, compared with `S` (Φ) or `T` (Ψ).
pub fn twirl_check<R: Rng + ?Sized>(channel: TwirlChannel, n_samples: usize, rng: &mut R) -> Result<TwirlReport> {
    if n_samples < 100 {
        return Err(Error::invalid("n_samples", format!("must be ≥ 100, got {n_samples}")));
    }
    let o = weight_operator();
    let mut acc = Mat4::zeros();
    for _ in 0..n_samples {
        let u = sample_cue(rng);
        let second = match channel {
            TwirlChannel::Phi => u,
            TwirlChannel::Psi => u.map(|z| z.conj()),
        };
        let w = kron(&u, &second);
        acc += w.adjoint() * o * w;
    }
    acc /= c(n_samples as f64, 0.0);
    let target = match channel {
        TwirlChannel::Phi => swap_operator(),
        TwirlChannel::Psi => transpose_swap_operator(),
    };
    Ok(TwirlReport {
        channel,
        n_samples,
        distance: (acc - target).norm(),
    })
}
