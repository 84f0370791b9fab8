//! Parameter sweeps, correlation-length fits, error-scaling scans and the
//! symmetry-breaking comparison, each producing plain rows for export.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{adiabatic_evolve, RampSpec};
use crate::error::{Error, Result};
use crate::groundstate::{ground_state, LanczosOptions};
use crate::hamiltonian::HamiltonianSpec;
use crate::protocols::{estimate, exact_campaign, run_campaign, Campaign, ProtocolKind, ProtocolParams, Quantity};
use crate::rdm::{exact_invariant, reduced_density_matrix, InvariantKind, PartitionSpec};
use crate::rng::{derive_seed, Domain};
use crate::spin::StateVector;

/// Largest chain a sweep will diagonalize.
pub const MAX_SWEEP_SITES: usize = 16;

/// Partition used for `kind` with segments of `n` sites around the centre.
pub fn partition_for(kind: InvariantKind, n_sites: usize, n: usize) -> Result<PartitionSpec> {
    match kind {
        InvariantKind::Reflection | InvariantKind::TimeReversal => PartitionSpec::reflection(n_sites, n),
        InvariantKind::D2 | InvariantKind::KleinBottle => PartitionSpec::three_segments(n_sites, n),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    JPrime,
    Delta,
    B,
    /// Segment length in sites.
    N,
    NU,
    NM,
    TF,
}

impl SweepParam {
    fn is_integer(self) -> bool {
        matches!(self, SweepParam::N | SweepParam::NU | SweepParam::NM)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum SweepMode {
    Exact,
    Sampled { n_u: usize, n_m: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: HamiltonianSpec,
    pub kind: InvariantKind,
    /// Segment length when `n` is not swept.
    pub n: usize,
    pub axes: Vec<SweepAxis>,
    pub mode: SweepMode,
    pub repetitions: usize,
    pub master_seed: u64,
    /// When set, each point is the endpoint of this ramp rather than the
    /// ground state. Required by a `t_f` axis.
    pub ramp: Option<RampSpec>,
}

/// Fully resolved parameters of one sweep point.
#[derive(Debug, Clone, PartialEq)]
struct Point {
    spec: HamiltonianSpec,
    n: usize,
    n_u: usize,
    n_m: usize,
    ramp: Option<RampSpec>,
    key: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub j_prime: f64,
    pub delta: f64,
    pub b: f64,
    pub n: usize,
    pub n_u: Option<usize>,
    pub n_m: Option<usize>,
    pub t_f: Option<f64>,
    pub repetition: usize,
    pub seed: u64,
    pub kind: InvariantKind,
    pub exact_raw: Option<f64>,
    pub exact_normalized: Option<f64>,
    /// Ground-state value; equals `exact_normalized` unless a ramp is used.
    pub ground_normalized: Option<f64>,
    pub estimate: Option<f64>,
    pub std_error: Option<f64>,
    pub error: Option<String>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::invalid("axes", "at least one sweep axis is required"));
        }
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions", "must be ≥ 1"));
        }
        let mut seen = Vec::new();
        for axis in &self.axes {
            if seen.contains(&axis.param) {
                return Err(Error::invalid("axes", format!("{:?} swept twice", axis.param)));
            }
            seen.push(axis.param);
            if axis.values.is_empty() {
                return Err(Error::invalid("axes", format!("{:?} has no values", axis.param)));
            }
            for &v in &axis.values {
                if !v.is_finite() {
                    return Err(Error::invalid("axes", format!("{:?} value {v} is not finite", axis.param)));
                }
                if axis.param.is_integer() && (v < 0.0 || v.fract() != 0.0) {
                    return Err(Error::invalid("axes", format!("{:?} value {v} must be a count", axis.param)));
                }
            }
            if matches!(axis.param, SweepParam::NU | SweepParam::NM) && !matches!(self.mode, SweepMode::Sampled { .. })
            {
                return Err(Error::invalid("axes", "n_u/n_m axes need sampled mode"));
            }
            if axis.param == SweepParam::TF && self.ramp.is_none() {
                return Err(Error::invalid("axes", "a t_f axis needs a ramp section"));
            }
        }
        self.base.validate()?;
        if self.base.n_sites > MAX_SWEEP_SITES {
            return Err(Error::TooLarge {
                what: "n_sites",
                value: self.base.n_sites,
                limit: MAX_SWEEP_SITES,
            });
        }
        Ok(())
    }

    fn points(&self) -> Vec<Point> {
        let (n_u, n_m) = match self.mode {
            SweepMode::Exact => (0, 0),
            SweepMode::Sampled { n_u, n_m } => (n_u, n_m),
        };
        let mut points = vec![Point {
            spec: self.base.clone(),
            n: self.n,
            n_u,
            n_m,
            ramp: self.ramp.clone(),
            key: Vec::new(),
        }];
        for axis in &self.axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |&v| {
                        let mut q = p.clone();
                        match axis.param {
                            SweepParam::JPrime => q.spec.j_prime = v,
                            SweepParam::Delta => q.spec.delta = v,
                            SweepParam::B => q.spec.b = v,
                            SweepParam::N => q.n = v as usize,
                            SweepParam::NU => q.n_u = v as usize,
                            SweepParam::NM => q.n_m = v as usize,
                            SweepParam::TF => {
                                if let Some(r) = q.ramp.as_mut() {
                                    r.t_f = v;
                                    r.dt = r.dt.min(v);
                                }
                            }
                        }
                        q.key.push(v);
                        q
                    })
                })
                .collect();
        }
        points
    }
}

fn spec_key(spec: &HamiltonianSpec) -> [u64; 3] {
    [spec.j_prime.to_bits(), spec.delta.to_bits(), spec.b.to_bits()]
}

/// Seed of repetition `rep` at sweep point `point`; independent of the total
/// number of repetitions.
pub fn point_seed(master: u64, point: usize, rep: usize) -> u64 {
    derive_seed(derive_seed(master, Domain::Repetition, point as u64), Domain::Repetition, rep as u64)
}

fn evaluate_point(
    sweep: &SweepSpec,
    p: &Point,
    ground: &Result<StateVector, String>,
    seed: u64,
) -> Result<(f64, f64, f64, Option<(f64, f64)>)> {
    let ground = ground.as_ref().map_err(|e| Error::invalid("ground_state", e.clone()))?;
    let partition = partition_for(sweep.kind, p.spec.n_sites, p.n)?;
    let ground_value = exact_invariant(sweep.kind, &reduced_density_matrix(ground, &partition)?)?;
    let state = match &p.ramp {
        Some(r) => adiabatic_evolve(&p.spec, r)?.pop().expect("ramp yields its endpoint").state,
        None => ground.clone(),
    };
    let rdm = reduced_density_matrix(&state, &partition)?;
    let exact = exact_invariant(sweep.kind, &rdm)?;
    let sampled = match sweep.mode {
        SweepMode::Exact => None,
        SweepMode::Sampled { .. } => {
            let params = ProtocolParams {
                kind: sweep.kind.into(),
                n_u: p.n_u,
                n_m: p.n_m,
                partition,
                master_seed: seed,
            };
            let records = run_campaign(&state, &params)?;
            let r = estimate(&Campaign::from_records(&params, &records)?, Quantity::Normalized)?;
            Some((r.value, r.std_error))
        }
    };
    Ok((exact.raw, exact.normalized, ground_value.normalized, sampled))
}

/// Evaluates the Cartesian product of the sweep axes.
///
/// Ground states are computed once per distinct `(J′, δ, B)`. A failing
/// point yields a row with `error` set and the sweep carries on. Rows are
/// ordered by axis values (in axis order), then repetition.
pub fn run_sweep(sweep: &SweepSpec) -> Result<Vec<SweepRow>> {
    sweep.validate()?;
    let points = sweep.points();
    let mut distinct: BTreeMap<[u64; 3], HamiltonianSpec> = BTreeMap::new();
    for p in &points {
        distinct.entry(spec_key(&p.spec)).or_insert_with(|| p.spec.clone());
    }
    let grounds: BTreeMap<[u64; 3], Result<StateVector, String>> = distinct
        .into_par_iter()
        .map(|(k, spec)| {
            let gs = ground_state(&spec, &LanczosOptions::default())
                .map(|r| r.state)
                .map_err(|e| e.to_string());
            (k, gs)
        })
        .collect();
    let tasks: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|i| (0..sweep.repetitions).map(move |r| (i, r)))
        .collect();
    let mut rows: Vec<(Vec<f64>, SweepRow)> = tasks
        .par_iter()
        .map(|&(i, rep)| {
            let p = &points[i];
            let seed = point_seed(sweep.master_seed, i, rep);
            let outcome = evaluate_point(sweep, p, &grounds[&spec_key(&p.spec)], seed);
            let sampled_mode = matches!(sweep.mode, SweepMode::Sampled { .. });
            let mut row = SweepRow {
                j_prime: p.spec.j_prime,
                delta: p.spec.delta,
                b: p.spec.b,
                n: p.n,
                n_u: sampled_mode.then_some(p.n_u),
                n_m: sampled_mode.then_some(p.n_m),
                t_f: p.ramp.as_ref().map(|r| r.t_f),
                repetition: rep,
                seed,
                kind: sweep.kind,
                exact_raw: None,
                exact_normalized: None,
                ground_normalized: None,
                estimate: None,
                std_error: None,
                error: None,
            };
            match outcome {
                Ok((raw, norm, ground, sampled)) => {
                    row.exact_raw = Some(raw);
                    row.exact_normalized = Some(norm);
                    row.ground_normalized = Some(ground);
                    row.estimate = sampled.map(|s| s.0);
                    row.std_error = sampled.map(|s| s.1);
                }
                Err(e) => {
                    log::warn!("sweep point {:?} failed: {e}", p.key);
                    row.error = Some(e.to_string());
                }
            }
            let mut key = p.key.clone();
            key.push(rep as f64);
            (key, row)
        })
        .collect();
    rows.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Ok,
    /// A deviation vanished to machine precision; `lambda` is 0.
    Converged,
    /// The deviations do not decay; `lambda` is infinite.
    NonDecaying,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationLengthFit {
    /// Decay length in units of `n`.
    pub lambda: f64,
    pub amplitude: f64,
    /// The `(n, Z̃)` pairs used.
    pub fit_points: Vec<(f64, f64)>,
    pub quantized_target: f64,
    /// RMS residual of the log-linear fit.
    pub residual: f64,
    pub status: FitStatus,
}

/// Deviation below which a series counts as converged.
pub const CONVERGED_DEVIATION: f64 = 1e-12;

/// Fits `|Z̃(n) − s| = A e^{−n/λ}` on the three smallest `n`.
///
/// `s` is `target_sign` if given, otherwise the sign of `Z̃` at the largest
/// `n` of the whole series.
pub fn fit_correlation_length(series: &[(f64, f64)], target_sign: Option<f64>) -> Result<CorrelationLengthFit> {
    if series.len() < 3 {
        return Err(Error::DegenerateFit(format!("{} points, need ≥ 3", series.len())));
    }
    if series.iter().any(|(n, z)| !n.is_finite() || !z.is_finite()) {
        return Err(Error::DegenerateFit("non-finite input".into()));
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::DegenerateFit("repeated n".into()));
    }
    let first = sorted[0].1;
    if sorted.iter().all(|&(_, z)| z == first) {
        return Err(Error::DegenerateFit("constant series".into()));
    }
    let s = match target_sign {
        Some(t) => t.signum(),
        None => sorted.last().expect("non-empty").1.signum(),
    };
    let pts: Vec<(f64, f64)> = sorted[..3].to_vec();
    let devs: Vec<f64> = pts.iter().map(|&(_, z)| (z - s).abs()).collect();
    let base = CorrelationLengthFit {
        lambda: 0.0,
        amplitude: 0.0,
        fit_points: pts.clone(),
        quantized_target: s,
        residual: 0.0,
        status: FitStatus::Converged,
    };
    if devs.iter().any(|&d| d <= CONVERGED_DEVIATION) {
        return Ok(base);
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = devs.iter().map(|d| d.ln()).collect();
    let xm = xs.iter().sum::<f64>() / 3.0;
    let ym = ys.iter().sum::<f64>() / 3.0;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / 3.0)
        .sqrt();
    let (lambda, status) = if slope < 0.0 {
        (-1.0 / slope, FitStatus::Ok)
    } else {
        (f64::INFINITY, FitStatus::NonDecaying)
    };
    Ok(CorrelationLengthFit {
        lambda,
        amplitude: intercept.exp(),
        residual,
        status,
        ..base
    })
}

/// Index of the largest finite-or-infinite `λ` among successful fits;
/// converged fits count as `λ = 0`.
pub fn argmax_lambda(fits: &[CorrelationLengthFit]) -> Option<usize> {
    fits.iter()
        .enumerate()
        .max_by(|a, b| a.1.lambda.total_cmp(&b.1.lambda))
        .map(|(i, _)| i)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanAxis {
    NM,
    NU,
    /// Segment length.
    N,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub axis_value: usize,
    pub n: usize,
    pub n_u: usize,
    pub n_m: usize,
    pub repetitions: usize,
    pub exact: f64,
    /// Mean of `|estimate − exact|` over repetitions.
    pub mean_abs_error: f64,
    /// Standard error of that mean.
    pub sem: f64,
}

/// Mean absolute error of the raw estimator of `base.kind` (or of the
/// interval purity for purity campaigns) on `state`, as one parameter is
/// varied. Each `(value, repetition)` pair has its own derived seed.
pub fn error_scaling_scan(
    state: &StateVector,
    base: &ProtocolParams,
    axis: ScanAxis,
    values: &[usize],
    repetitions: usize,
) -> Result<Vec<ScanRow>> {
    if repetitions < 8 {
        return Err(Error::invalid("repetitions", format!("must be ≥ 8, got {repetitions}")));
    }
    if values.is_empty() {
        return Err(Error::invalid("values", "empty scan"));
    }
    let n_sites = state.num_sites();
    let configs: Vec<ProtocolParams> = values
        .iter()
        .map(|&v| {
            let mut p = base.clone();
            match axis {
                ScanAxis::NM => p.n_m = v,
                ScanAxis::NU => p.n_u = v,
                ScanAxis::N => {
                    p.partition = match base.kind.invariant() {
                        Some(k) => partition_for(k, n_sites, v)?,
                        None => PartitionSpec::reflection(n_sites, v)?,
                    }
                }
            }
            p.validate()?;
            Ok(p)
        })
        .collect::<Result<_>>()?;
    let quantity = match base.kind {
        ProtocolKind::Purity => Quantity::Purity { segment: None },
        _ => Quantity::Raw,
    };
    let exacts: Vec<f64> = configs
        .iter()
        .map(|p| {
            let rdm = reduced_density_matrix(state, &p.partition)?;
            Ok(match p.kind.invariant() {
                Some(k) => exact_invariant(k, &rdm)?.raw,
                None => rdm.purity(),
            })
        })
        .collect::<Result<_>>()?;
    let tasks: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|i| (0..repetitions).map(move |r| (i, r)))
        .collect();
    let errors: Vec<f64> = tasks
        .par_iter()
        .map(|&(i, rep)| {
            let mut p = configs[i].clone();
            p.master_seed = point_seed(base.master_seed, i, rep);
            let records = run_campaign(state, &p)?;
            let r = estimate(&Campaign::from_records(&p, &records)?, quantity)?;
            Ok((r.value - exacts[i]).abs())
        })
        .collect::<Result<_>>()?;
    Ok(configs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let e = &errors[i * repetitions..(i + 1) * repetitions];
            ScanRow {
                axis_value: values[i],
                n: p.partition.segment_len(0),
                n_u: p.n_u,
                n_m: p.n_m,
                repetitions,
                exact: exacts[i],
                mean_abs_error: crate::stats::mean(e),
                sem: crate::stats::std_dev(e) / (repetitions as f64).sqrt(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryRow {
    pub n: usize,
    pub z_t: f64,
    pub z_r: f64,
}

/// Normalized `Z̃_T(n)` and `Z̃_R(n)` on the ground state of `spec`.
pub fn symmetry_breaking_report(spec: &HamiltonianSpec, n_values: &[usize]) -> Result<Vec<SymmetryRow>> {
    if spec.b == 0.0 {
        return Err(Error::invalid("b", "the symmetry-breaking report needs B ≠ 0"));
    }
    invariant_series(spec, n_values)
}

/// Normalized `Z̃_T(n)` and `Z̃_R(n)` without the `B ≠ 0` requirement.
pub fn invariant_series(spec: &HamiltonianSpec, n_values: &[usize]) -> Result<Vec<SymmetryRow>> {
    let gs = ground_state(spec, &LanczosOptions::default())?;
    n_values
        .par_iter()
        .map(|&n| {
            let rdm = reduced_density_matrix(&gs.state, &PartitionSpec::reflection(spec.n_sites, n)?)?;
            Ok(SymmetryRow {
                n,
                z_t: exact_invariant(InvariantKind::TimeReversal, &rdm)?.normalized,
                z_r: exact_invariant(InvariantKind::Reflection, &rdm)?.normalized,
            })
        })
        .collect()
}

/// Infinite-shot estimate of `kind` from `n_u` draws on `state`.
pub fn infinite_shot_estimate(
    state: &StateVector,
    params: &ProtocolParams,
    quantity: Quantity,
) -> Result<crate::protocols::EstimatorResult> {
    let rdm = reduced_density_matrix(state, &params.partition)?;
    estimate(&exact_campaign(&rdm, params)?, quantity)
}
