use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{kernel_sum, marginal, reflection_weight, SiteKernel};
use super::{Campaign, Distribution, MeasurementRecord, ProtocolKind, ProtocolParams};
use crate::error::{Error, Result};
use crate::rdm::InvariantKind;
use crate::stats::{bootstrap_std_error, DEFAULT_RESAMPLES};

/// What an [`EstimatorResult`] estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Raw,
    Normalized,
    /// Purity of one segment, or of the whole interval when `segment` is `None`.
    Purity { segment: Option<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub kind: ProtocolKind,
    pub quantity: Quantity,
    pub value: f64,
    /// Bootstrap standard error over unitary draws.
    pub std_error: f64,
    pub n_u: usize,
    pub n_m: usize,
    /// Estimated from exact Born probabilities rather than shots.
    pub infinite_shots: bool,
    pub master_seed: u64,
    pub exact_reference: Option<f64>,
}

impl EstimatorResult {
    pub fn with_reference(mut self, exact: f64) -> Self {
        self.exact_reference = Some(exact);
        self
    }

    /// `|value − exact| / std_error`, if a reference is attached.
    pub fn z_score(&self) -> Option<f64> {
        self.exact_reference.map(|x| (self.value - x).abs() / self.std_error)
    }
}

/// `Σ w p p′` for one experiment with itself. With shots, the diagonal
/// `s = s′` uses `c(c − 1)` so the product is unbiased.
fn self_correlation(d: &Distribution, kernels: &[SiteKernel]) -> f64 {
    let cross = kernel_sum(&d.probs, &d.probs, kernels);
    match d.shots {
        None => cross,
        Some(m) => {
            let m = m as f64;
            (m * cross - 1.0) / (m - 1.0)
        }
    }
}

fn segment_bits(campaign: &Campaign, segment: Option<usize>) -> Vec<usize> {
    let p = &campaign.params.partition;
    match segment {
        Some(i) => p.local_bits(i).collect(),
        None => (0..p.interval_len()).collect(),
    }
}

/// Per-draw purity estimate of `bits`, averaged over the draw's experiments.
fn draw_purity(experiments: &[Distribution], bits: &[usize], whole: bool) -> f64 {
    let kernels = vec![SiteKernel::Hamming; bits.len()];
    let scale = (1u64 << bits.len()) as f64;
    let total: f64 = experiments
        .iter()
        .map(|d| {
            if whole {
                self_correlation(d, &kernels)
            } else {
                let m = Distribution {
                    probs: marginal(&d.probs, bits),
                    shots: d.shots,
                };
                self_correlation(&m, &kernels)
            }
        })
        .sum();
    scale * total / experiments.len() as f64
}

fn check_purity_segment(kind: ProtocolKind, campaign: &Campaign, segment: Option<usize>) -> Result<()> {
    let p = &campaign.params.partition;
    match segment {
        None if kind != ProtocolKind::Purity => Err(Error::IncompatiblePartition(format!(
            "whole-interval purity needs independent unitaries, not a {kind} campaign"
        ))),
        Some(i) if i >= p.segments.len() => Err(Error::invalid(
            "segment",
            format!("{i} out of range for {} segments", p.segments.len()),
        )),
        Some(1) if matches!(kind, ProtocolKind::D2 | ProtocolKind::KleinBottle) => Err(
            Error::IncompatiblePartition("the middle segment is not rotated in D2/KB campaigns".into()),
        ),
        _ => Ok(()),
    }
}

/// Per-draw raw invariant estimate.
fn draw_raw(kind: InvariantKind, campaign: &Campaign, experiments: &[Distribution]) -> f64 {
    let p = &campaign.params.partition;
    let len = p.interval_len();
    match kind {
        InvariantKind::Reflection => {
            let n = len / 2;
            let sum: f64 = experiments[0]
                .probs
                .iter()
                .enumerate()
                .map(|(s, &ps)| reflection_weight(s as u64, len) * ps)
                .sum();
            (1u64 << n) as f64 * sum
        }
        InvariantKind::TimeReversal => {
            let kernels = vec![SiteKernel::Hamming; len];
            (1u64 << len) as f64 * kernel_sum(&experiments[0].probs, &experiments[1].probs, &kernels)
        }
        InvariantKind::D2 | InvariantKind::KleinBottle => {
            let middle = p.local_bits(1);
            let kernels: Vec<SiteKernel> = (0..len)
                .map(|k| {
                    if middle.contains(&k) {
                        SiteKernel::SigmaZ
                    } else {
                        SiteKernel::Hamming
                    }
                })
                .collect();
            let twirled = len - p.segment_len(1);
            (1u64 << twirled) as f64 * kernel_sum(&experiments[0].probs, &experiments[1].probs, &kernels)
        }
    }
}

fn mean_over(values: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| values[i]).sum::<f64>() / idx.len() as f64
}

/// Estimate of `quantity` from a campaign (sampled or exact).
///
/// Each unitary draw contributes one term; the value is the mean over draws
/// in ascending unitary order, and the error bar is a bootstrap over draws.
/// The normalized invariant divides the mean raw estimate by the mean
/// purity of the normalizing segments inside every resample.
pub fn estimate(campaign: &Campaign, quantity: Quantity) -> Result<EstimatorResult> {
    let params = &campaign.params;
    let kind = params.kind;
    let n = campaign.n_draws();
    if n < 2 {
        return Err(Error::MalformedCampaign(format!("{n} unitary draws, need ≥ 2")));
    }
    let (numer, denom, exponent): (Vec<f64>, Option<Vec<f64>>, f64) = match quantity {
        Quantity::Purity { segment } => {
            check_purity_segment(kind, campaign, segment)?;
            let bits = segment_bits(campaign, segment);
            let whole = segment.is_none();
            let v = campaign
                .draws
                .par_iter()
                .map(|d| draw_purity(&d.experiments, &bits, whole))
                .collect();
            (v, None, 0.0)
        }
        Quantity::Raw | Quantity::Normalized => {
            let inv = kind.invariant().ok_or_else(|| Error::WrongKind {
                expected: "an invariant campaign (R, T, D2, KB)".into(),
                actual: kind.to_string(),
            })?;
            let raw: Vec<f64> = campaign
                .draws
                .par_iter()
                .map(|d| draw_raw(inv, campaign, &d.experiments))
                .collect();
            if quantity == Quantity::Raw {
                (raw, None, 0.0)
            } else {
                let (a, b) = inv.normalization_segments();
                let bits_a = segment_bits(campaign, Some(a));
                let bits_b = segment_bits(campaign, Some(b));
                let pur = campaign
                    .draws
                    .par_iter()
                    .map(|d| {
                        0.5 * (draw_purity(&d.experiments, &bits_a, false)
                            + draw_purity(&d.experiments, &bits_b, false))
                    })
                    .collect();
                (raw, Some(pur), inv.normalization_exponent())
            }
        }
    };
    let statistic = |idx: &[usize]| -> f64 {
        let m = mean_over(&numer, idx);
        match &denom {
            None => m,
            Some(d) => m / mean_over(d, idx).powf(exponent),
        }
    };
    let all: Vec<usize> = (0..n).collect();
    let value = statistic(&all);
    if !value.is_finite() {
        return Err(Error::DegenerateFit(format!("{kind} estimate is not finite")));
    }
    let std_error = bootstrap_std_error(n, DEFAULT_RESAMPLES, params.master_seed, statistic);
    Ok(EstimatorResult {
        kind,
        quantity,
        value,
        std_error,
        n_u: n,
        n_m: params.n_m,
        infinite_shots: campaign.is_exact(),
        master_seed: params.master_seed,
        exact_reference: None,
    })
}

pub fn estimate_raw(campaign: &Campaign) -> Result<EstimatorResult> {
    estimate(campaign, Quantity::Raw)
}

pub fn estimate_normalized(campaign: &Campaign) -> Result<EstimatorResult> {
    estimate(campaign, Quantity::Normalized)
}

fn raw_of_kind(expected: ProtocolKind, records: &[MeasurementRecord], params: &ProtocolParams) -> Result<EstimatorResult> {
    if params.kind != expected {
        return Err(Error::WrongKind {
            expected: expected.to_string(),
            actual: params.kind.to_string(),
        });
    }
    estimate_raw(&Campaign::from_records(params, records)?)
}

/// Reflection invariant from R-campaign records.
pub fn estimate_zr(records: &[MeasurementRecord], params: &ProtocolParams) -> Result<EstimatorResult> {
    raw_of_kind(ProtocolKind::Reflection, records, params)
}

/// Partial time-reversal invariant from paired T-campaign records.
pub fn estimate_zt(records: &[MeasurementRecord], params: &ProtocolParams) -> Result<EstimatorResult> {
    raw_of_kind(ProtocolKind::TimeReversal, records, params)
}

pub fn estimate_zd2(records: &[MeasurementRecord], params: &ProtocolParams) -> Result<EstimatorResult> {
    raw_of_kind(ProtocolKind::D2, records, params)
}

pub fn estimate_zkb(records: &[MeasurementRecord], params: &ProtocolParams) -> Result<EstimatorResult> {
    raw_of_kind(ProtocolKind::KleinBottle, records, params)
}

/// Purity of `segment` (or the whole interval) from the same records.
pub fn estimate_purity(
    records: &[MeasurementRecord],
    params: &ProtocolParams,
    segment: Option<usize>,
) -> Result<EstimatorResult> {
    estimate(&Campaign::from_records(params, records)?, Quantity::Purity { segment })
}
