use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rmtopo::protocols::{phi_closed_form, reflection_weight, weight_operator};
use rmtopo::rdm::{exact_invariant, exact_invariant_of_state, exact_zkb, exact_zr, reduced_density_matrix};
use rmtopo::spin::c;
use rmtopo::*;

fn random_mixed(bits: usize, rank: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let d = 1 << bits;
    let mut rho = DMatrix::<C64>::zeros(d, d);
    for _ in 0..rank {
        let v = nalgebra::DVector::from_column_slice(StateVector::random(bits, rng).unwrap().amplitudes());
        rho += &v * v.adjoint();
    }
    rho / c(rank as f64, 0.0)
}

fn rdm(n_sites: usize, segments: Vec<std::ops::Range<usize>>, matrix: DMatrix<C64>) -> ReducedDensityMatrix {
    ReducedDensityMatrix {
        partition: PartitionSpec::new(n_sites, segments).unwrap(),
        matrix,
    }
}

/// Single-site operator `m` on bit `k` of an `n`-bit register.
fn on_site(n: usize, k: usize, m: [[f64; 2]; 2]) -> DMatrix<C64> {
    DMatrix::from_fn(1 << n, 1 << n, |r, col| {
        if (r ^ col) & !(1 << k) != 0 {
            return c(0.0, 0.0);
        }
        c(m[(r >> k) & 1][(col >> k) & 1], 0.0)
    })
}

/// Swap of bits `a` and `b`.
fn swap_bits(n: usize, a: usize, b: usize) -> DMatrix<C64> {
    DMatrix::from_fn(1 << n, 1 << n, |r, col| {
        let (x, y) = ((col >> a) & 1, (col >> b) & 1);
        let swapped = (col & !(1 << a) & !(1 << b)) | (y << a) | (x << b);
        c(if r == swapped { 1.0 } else { 0.0 }, 0.0)
    })
}

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    // Copy `a` on the low bits, `b` on the high bits.
    b.kronecker(a)
}

/// Two-copy brute force of `Tr[S_{I₁} Z_{I₂} S_{I₃} (X ⊗ ρ)]` for three
/// single-site segments.
fn two_copy_trace(x: &DMatrix<C64>, rho: &DMatrix<C64>) -> f64 {
    let z = [[1.0, 0.0], [0.0, -1.0]];
    let op = swap_bits(6, 0, 3) * on_site(6, 1, z) * on_site(6, 4, z) * swap_bits(6, 2, 5);
    (op * kron(x, rho)).trace().re
}

#[test]
fn klein_bottle_of_a_polarized_triple_vanishes() {
    let mut up = DMatrix::<C64>::zeros(8, 8);
    up[(0, 0)] = c(1.0, 0.0);
    let r = rdm(4, vec![0..1, 1..2, 2..3], up.clone());
    let v = exact_zkb(&r).unwrap();
    // u_T ρ^{T₁} u_T† flips site 0, after which the swap on I₁ has no overlap.
    let sy_t = DMatrix::from_row_slice(8, 8, &{
        let mut m = vec![c(0.0, 0.0); 64];
        for x in 0..8usize {
            m[(x ^ 1) * 8 + x] = c(1.0, 0.0);
        }
        m
    });
    let twisted = &sy_t * &up * sy_t.adjoint();
    assert!(v.raw.abs() < 1e-14);
    assert!((two_copy_trace(&twisted, &up) - v.raw).abs() < 1e-14);
}

#[test]
fn klein_bottle_and_d2_match_two_copy_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = [[0.0, 1.0], [1.0, 0.0]];
    for _ in 0..5 {
        let rho = random_mixed(3, 2, &mut rng);
        let r = rdm(4, vec![0..1, 1..2, 2..3], rho.clone());
        let flipped = on_site(3, 0, x) * &rho * on_site(3, 0, x);
        let d2 = exact_invariant(InvariantKind::D2, &r).unwrap();
        assert!((two_copy_trace(&flipped, &rho) - d2.raw).abs() < 1e-12);
        // u_T ρ^{T₁} u_T† with σʸ = i σˣ σᶻ; the phases cancel in the conjugation.
        let pt = r.partial_transpose(1);
        let zx = on_site(3, 0, [[0.0, -1.0], [1.0, 0.0]]);
        let twisted = &zx * pt * zx.transpose();
        let kb = exact_invariant(InvariantKind::KleinBottle, &r).unwrap();
        assert!((two_copy_trace(&twisted, &rho) - kb.raw).abs() < 1e-12);
    }
}

#[test]
fn reflection_equals_twirled_estimator_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..5 {
        let rho = random_mixed(4, 3, &mut rng);
        let r = rdm(6, vec![1..3, 3..5], rho.clone());
        // The estimator weight 2^n (−2)^{−D/2} factorizes into one Õ per mirror pair.
        for s in 0..16u64 {
            let pairs = [(0, 3), (1, 2)];
            let product: f64 = pairs
                .iter()
                .map(|&(a, b)| {
                    let i = (((s >> a) & 1) * 2 + ((s >> b) & 1)) as usize;
                    weight_operator()[(i, i)].re
                })
                .product();
            assert!((4.0 * reflection_weight(s, 4) - product).abs() < 1e-14);
        }
        let phi = phi_closed_form(&weight_operator());
        let op = DMatrix::from_fn(16, 16, |row, col| {
            [(0usize, 3usize), (1, 2)]
                .iter()
                .map(|&(a, b)| {
                    let i = ((row >> a) & 1) * 2 + ((row >> b) & 1);
                    let j = ((col >> a) & 1) * 2 + ((col >> b) & 1);
                    phi[(i, j)]
                })
                .product::<C64>()
        });
        let z = (&rho * op).trace();
        assert!((z.re - exact_zr(&r).unwrap().raw).abs() < 1e-10);
        assert!(z.im.abs() < 1e-10);
    }
}

#[test]
fn partial_traces_compose() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let state = StateVector::random(8, &mut rng).unwrap();
    let wide = reduced_density_matrix(&state, &PartitionSpec::new(8, vec![1..4, 4..7]).unwrap()).unwrap();
    let narrow = reduced_density_matrix(&state, &PartitionSpec::new(8, vec![2..4, 4..6]).unwrap()).unwrap();
    let traced = rmtopo::rdm::partial_trace(&wide.matrix, 6, &[1, 2, 3, 4]);
    assert!((traced - &narrow.matrix).norm() < 1e-12);
    assert!((narrow.matrix.trace().re - 1.0).abs() < 1e-12);
    assert!((narrow.matrix.adjoint() - &narrow.matrix).norm() < 1e-12);
}

fn ground(j_prime: f64) -> StateVector {
    ground_state(&HamiltonianSpec::xxz(12, 1.0, j_prime, 0.25), &LanczosOptions::default())
        .unwrap()
        .state
}

#[test]
fn ground_state_invariants_separate_the_phases() {
    let (trivial, topo) = (ground(0.2), ground(5.0));
    let pair = PartitionSpec::reflection(12, 2).unwrap();
    let triple = PartitionSpec::three_segments(12, 2).unwrap();
    for kind in [InvariantKind::Reflection, InvariantKind::TimeReversal] {
        let a = exact_invariant_of_state(kind, &trivial, &pair).unwrap().normalized;
        let b = exact_invariant_of_state(kind, &topo, &pair).unwrap().normalized;
        assert!(a > 0.9 && b < -0.9, "{kind}: {a} {b}");
    }
    for kind in [InvariantKind::D2, InvariantKind::KleinBottle] {
        let a = exact_invariant_of_state(kind, &trivial, &triple).unwrap().normalized;
        let b = exact_invariant_of_state(kind, &topo, &triple).unwrap().normalized;
        assert!(a < 0.0 && b > 0.9, "{kind}: {a} {b}");
    }
}

#[test]
fn product_states_have_trivial_reflection() {
    let up = StateVector::product(&[false; 8]).unwrap();
    let v = exact_invariant_of_state(InvariantKind::Reflection, &up, &PartitionSpec::reflection(8, 2).unwrap()).unwrap();
    assert!((v.raw - 1.0).abs() < 1e-14 && (v.normalized - 1.0).abs() < 1e-14);
    let neel = StateVector::neel(8).unwrap();
    let v = exact_invariant_of_state(InvariantKind::Reflection, &neel, &PartitionSpec::reflection(8, 1).unwrap()).unwrap();
    assert!(v.raw.abs() < 1e-14);
}
