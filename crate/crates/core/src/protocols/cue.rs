use nalgebra::Matrix2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::spin::{c, Mat2, C64};

/// Haar-random 2×2 unitary.
///
/// QR-decomposes a complex Ginibre matrix and rescales the columns of Q by the
/// phases of R's diagonal, which removes the bias of the decomposition's
/// phase convention.
pub fn sample_cue<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    let mut g = || -> C64 {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    };
    let z: Matrix2<C64> = Matrix2::new(g(), g(), g(), g());
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..2 {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for row in 0..2 {
            q[(row, k)] *= phase;
        }
    }
    q
}
