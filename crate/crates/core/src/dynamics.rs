//! Real-time evolution by second-order Trotter splitting.
//!
//! The chain Hamiltonian splits into bonds starting on even sites, bonds
//! starting on odd sites, and the diagonal field terms. One step of length
//! `τ` is
//!
//! ```text
//! e^{−iAτ/2} e^{−iBτ/2} e^{−iC(t+τ/2)τ} e^{−iBτ/2} e^{−iAτ/2}
//! ```
//!
//! with the time-dependent fields evaluated at the step midpoint.

use nalgebra::Matrix4;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::protocols::{estimate_normalized, run_campaign, Campaign, EstimatorResult, ProtocolParams};
use crate::rdm::{exact_invariant, reduced_density_matrix, InvariantKind, InvariantValue, PartitionSpec};
use crate::rng::{derive_seed, Domain};
use crate::spin::{c, sz, StateVector, C64};

/// Default Trotter step in units of `1/J`.
pub const DEFAULT_DT: f64 = 0.01;

/// Largest tolerated `|‖ψ‖ − 1|` at the end of a ramp.
pub const NORM_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampSpec {
    /// Ramp duration.
    pub t_f: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Initial Néel field strength Δ.
    pub delta_neel: f64,
    #[serde(default = "default_exponent")]
    pub ramp_exponent: u32,
    /// Snapshot times; empty means only `t_f`.
    #[serde(default)]
    pub sample_times: Vec<f64>,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_exponent() -> u32 {
    4
}

impl RampSpec {
    pub fn new(t_f: f64, delta_neel: f64) -> Self {
        Self {
            t_f,
            dt: DEFAULT_DT.min(t_f),
            delta_neel,
            ramp_exponent: 4,
            sample_times: Vec::new(),
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_samples(mut self, times: Vec<f64>) -> Self {
        self.sample_times = times;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_f > 0.0 && self.t_f.is_finite()) {
            return Err(Error::invalid("t_f", format!("must be positive and finite, got {}", self.t_f)));
        }
        if !(self.dt > 0.0 && self.dt <= self.t_f) {
            return Err(Error::invalid("dt", format!("must satisfy 0 < dt ≤ t_f, got {}", self.dt)));
        }
        if !self.delta_neel.is_finite() {
            return Err(Error::invalid("delta_neel", "must be finite"));
        }
        if self.ramp_exponent == 0 {
            return Err(Error::invalid("ramp_exponent", "must be ≥ 1"));
        }
        if let Some(t) = self.sample_times.iter().find(|t| !(0.0..=self.t_f).contains(*t)) {
            return Err(Error::invalid("sample_times", format!("{t} outside [0, {}]", self.t_f)));
        }
        Ok(())
    }

    /// `f(t) = (1 − t/t_F)^p`, which is `(t/t_F − 1)^4` for the default `p`.
    pub fn ramp_factor(&self, t: f64) -> f64 {
        (1.0 - t / self.t_f).powi(self.ramp_exponent as i32)
    }

    fn snapshot_times(&self) -> Vec<f64> {
        let mut times = if self.sample_times.is_empty() {
            vec![self.t_f]
        } else {
            self.sample_times.clone()
        };
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub state: StateVector,
}

/// `exp(−i h τ)` for a real symmetric `h`.
fn bond_gate(h: &Matrix4<f64>, tau: f64) -> Matrix4<C64> {
    let eig = h.symmetric_eigen();
    let v = eig.eigenvectors.map(|x| c(x, 0.0));
    let phases = Matrix4::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * tau)));
    v * phases * v.transpose()
}

fn apply_bond(amps: &mut [C64], j: usize, g: &Matrix4<C64>) {
    let (hi, lo) = (1usize << j, 1usize << (j + 1));
    for x in 0..amps.len() {
        if x & (hi | lo) == 0 {
            let idx = [x, x | lo, x | hi, x | hi | lo];
            let a = idx.map(|i| amps[i]);
            for (r, &i) in idx.iter().enumerate() {
                amps[i] = g[(r, 0)] * a[0] + g[(r, 1)] * a[1] + g[(r, 2)] * a[2] + g[(r, 3)] * a[3];
            }
        }
    }
}

/// Bond propagators of one Trotter step, cached per step length.
struct Propagator<'a> {
    spec: &'a HamiltonianSpec,
    tau: f64,
    half_gates: Vec<Matrix4<C64>>,
    /// Diagonal of the static fields and of the unit staggered field.
    static_diag: Vec<f64>,
    stagger_diag: Vec<f64>,
}

impl<'a> Propagator<'a> {
    fn new(spec: &'a HamiltonianSpec, static_diag: &[f64], stagger_diag: &[f64]) -> Self {
        Self {
            spec,
            tau: f64::NAN,
            half_gates: Vec::new(),
            static_diag: static_diag.to_vec(),
            stagger_diag: stagger_diag.to_vec(),
        }
    }

    fn set_tau(&mut self, tau: f64) {
        if tau != self.tau {
            self.tau = tau;
            self.half_gates = (0..self.spec.n_sites - 1)
                .map(|j| bond_gate(&self.spec.bond_matrix(j), 0.5 * tau))
                .collect();
        }
    }

    /// One step with staggered-field amplitude `h_stag`.
    fn step(&self, amps: &mut [C64], h_stag: f64) {
        let n = self.spec.n_sites;
        let sweep = |amps: &mut [C64], parity: usize| {
            for j in (parity..n - 1).step_by(2) {
                apply_bond(amps, j, &self.half_gates[j]);
            }
        };
        sweep(amps, 0);
        sweep(amps, 1);
        let tau = self.tau;
        amps.par_iter_mut()
            .with_min_len(4096)
            .zip(self.static_diag.par_iter().zip(&self.stagger_diag))
            .for_each(|(a, (e0, es))| *a *= C64::from_polar(1.0, -tau * (e0 + h_stag * es)));
        sweep(amps, 1);
        sweep(amps, 0);
    }
}

fn diagonals(spec: &HamiltonianSpec) -> (Vec<f64>, Vec<f64>) {
    let n = spec.n_sites;
    let stat: Vec<f64> = (0..spec.dim() as u64).map(|x| spec.field_energy(x)).collect();
    let stagger = (0..spec.dim() as u64)
        .map(|x| (0..n).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } * sz((x >> k) & 1)).sum())
        .collect();
    (stat, stagger)
}

fn check_norm(amps: &[C64]) -> Result<()> {
    let drift = (amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt() - 1.0).abs();
    if drift > NORM_TOLERANCE {
        return Err(Error::NormDrift {
            drift,
            tolerance: NORM_TOLERANCE,
        });
    }
    Ok(())
}

/// Evolves `state` under the time-independent `spec` for `time` with steps
/// of at most `dt`.
pub fn evolve(spec: &HamiltonianSpec, state: &StateVector, time: f64, dt: f64) -> Result<StateVector> {
    spec.validate()?;
    if state.num_sites() != spec.n_sites {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            actual: state.dim(),
        });
    }
    if !(dt > 0.0) || !(time >= 0.0) {
        return Err(Error::invalid("dt", "need dt > 0 and time ≥ 0"));
    }
    let (stat, stagger) = diagonals(spec);
    let mut prop = Propagator::new(spec, &stat, &stagger);
    let steps = (time / dt - 1e-9).ceil().max(0.0) as usize;
    let mut amps = state.clone().into_amplitudes();
    if steps > 0 {
        prop.set_tau(time / steps as f64);
        for _ in 0..steps {
            prop.step(&mut amps, 0.0);
        }
    }
    check_norm(&amps)?;
    StateVector::from_raw(spec.n_sites, amps)
}

/// Ramp from the Néel state `|↓↑↓↑…⟩` under `H(t) = H + f(t) Δ Σ_k (−1)^k σᶻ_k`.
///
/// The Néel term of `spec` itself is ignored; its pinning field stays on for
/// the whole ramp. Returns one snapshot per requested time, in ascending
/// order.
pub fn adiabatic_evolve(spec: &HamiltonianSpec, ramp: &RampSpec) -> Result<Vec<Snapshot>> {
    ramp.validate()?;
    let target = spec.clone().with_neel(0.0, 1.0);
    target.validate()?;
    if ramp.delta_neel < 10.0 * spec.j.abs() {
        log::warn!(
            "Néel field Δ = {} is below 10 J; the initial state is far from the ground state of H(0)",
            ramp.delta_neel
        );
    }
    let (stat, stagger) = diagonals(&target);
    let mut prop = Propagator::new(&target, &stat, &stagger);
    let mut amps = StateVector::neel(spec.n_sites)?.into_amplitudes();
    let mut t = 0.0;
    let mut out = Vec::new();
    for ts in ramp.snapshot_times() {
        let len = ts - t;
        let steps = (len / ramp.dt - 1e-9).ceil().max(0.0) as usize;
        if steps > 0 {
            let tau = len / steps as f64;
            prop.set_tau(tau);
            for s in 0..steps {
                let mid = t + (s as f64 + 0.5) * tau;
                prop.step(&mut amps, ramp.delta_neel * ramp.ramp_factor(mid));
            }
        }
        t = ts;
        check_norm(&amps)?;
        out.push(Snapshot {
            time: ts,
            state: StateVector::from_raw(spec.n_sites, amps.clone())?,
        });
    }
    Ok(out)
}

/// How [`monitor_invariants`] evaluates each snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorMode {
    Exact,
    Sampled { n_u: usize, n_m: usize, master_seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorPoint {
    pub time: f64,
    pub kind: InvariantKind,
    pub exact: InvariantValue,
    pub sampled: Option<EstimatorResult>,
}

/// Invariants along a snapshot series. The exact value is always included;
/// sampled mode adds a normalized estimate from a simulated campaign whose
/// seed is derived from the snapshot index and the invariant kind.
pub fn monitor_invariants(
    snapshots: &[Snapshot],
    partition: &PartitionSpec,
    which: &[InvariantKind],
    mode: MonitorMode,
) -> Result<Vec<MonitorPoint>> {
    if snapshots.is_empty() {
        return Err(Error::invalid("snapshots", "empty series"));
    }
    let tasks: Vec<(usize, usize)> = (0..snapshots.len())
        .flat_map(|i| (0..which.len()).map(move |k| (i, k)))
        .collect();
    tasks
        .par_iter()
        .map(|&(i, k)| {
            let snap = &snapshots[i];
            let kind = which[k];
            let rdm = reduced_density_matrix(&snap.state, partition)?;
            let exact = exact_invariant(kind, &rdm)?;
            let sampled = match mode {
                MonitorMode::Exact => None,
                MonitorMode::Sampled { n_u, n_m, master_seed } => {
                    let params = ProtocolParams {
                        kind: kind.into(),
                        n_u,
                        n_m,
                        partition: partition.clone(),
                        master_seed: derive_seed(master_seed, Domain::Repetition, (i * which.len() + k) as u64),
                    };
                    let records = run_campaign(&snap.state, &params)?;
                    let campaign = Campaign::from_records(&params, &records)?;
                    Some(estimate_normalized(&campaign)?.with_reference(exact.normalized))
                }
            };
            Ok(MonitorPoint {
                time: snap.time,
                kind,
                exact,
                sampled,
            })
        })
        .collect()
}
