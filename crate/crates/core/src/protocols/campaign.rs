use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{build_pattern, MeasurementRecord, ProtocolParams};
use crate::error::{Error, Result};
use crate::rdm::{reduced_density_matrix, ReducedDensityMatrix};
use crate::rng::{self, Domain};
use crate::spin::{sample_counts, Mat2, StateVector, C64};

/// Outcome statistics of one experiment: empirical frequencies with their
/// shot count, or exact Born probabilities (`shots == None`).
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub probs: Vec<f64>,
    pub shots: Option<u32>,
}

impl Distribution {
    pub fn exact(probs: Vec<f64>) -> Self {
        Self { probs, shots: None }
    }

    pub fn from_counts(counts: &[u32]) -> Self {
        let total: u64 = counts.iter().map(|&c| c as u64).sum();
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Self {
            probs,
            shots: Some(total as u32),
        }
    }
}

/// All experiments of one unitary draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub unitary_index: usize,
    pub experiments: Vec<Distribution>,
}

/// Measurement data of a whole campaign, ordered by unitary index.
#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub params: ProtocolParams,
    pub draws: Vec<Draw>,
}

impl Campaign {
    /// Groups records by unitary index. Every draw must carry exactly the
    /// experiments of the protocol, each with `n_m` shots.
    pub fn from_records(params: &ProtocolParams, records: &[MeasurementRecord]) -> Result<Self> {
        params.validate()?;
        let len = params.partition.interval_len();
        let dim = 1usize << len;
        let n_exp = params.kind.experiments();
        let mut grouped: BTreeMap<usize, Vec<Option<Distribution>>> = BTreeMap::new();
        for r in records {
            if r.experiment == 0 || r.experiment as usize > n_exp {
                return Err(Error::MalformedCampaign(format!(
                    "experiment {} invalid for a {} campaign",
                    r.experiment, params.kind
                )));
            }
            if r.total() != params.n_m as u64 {
                return Err(Error::MalformedCampaign(format!(
                    "unitary {} experiment {}: {} shots, expected {}",
                    r.unitary_index,
                    r.experiment,
                    r.total(),
                    params.n_m
                )));
            }
            let mut counts = vec![0u32; dim];
            for (&s, &c) in &r.counts {
                if s as usize >= dim {
                    return Err(Error::MalformedCampaign(format!("bitstring {s} outside a {len}-site interval")));
                }
                counts[s as usize] = c;
            }
            let slot = &mut grouped.entry(r.unitary_index).or_insert_with(|| vec![None; n_exp])
                [r.experiment as usize - 1];
            if slot.is_some() {
                return Err(Error::MalformedCampaign(format!(
                    "duplicate record for unitary {} experiment {}",
                    r.unitary_index, r.experiment
                )));
            }
            *slot = Some(Distribution::from_counts(&counts));
        }
        let draws = grouped
            .into_iter()
            .map(|(unitary_index, exps)| {
                let experiments = exps
                    .into_iter()
                    .enumerate()
                    .map(|(e, d)| {
                        d.ok_or_else(|| {
                            Error::MalformedCampaign(format!("unitary {unitary_index} lacks experiment {}", e + 1))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Draw {
                    unitary_index,
                    experiments,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if draws.len() < 2 {
            return Err(Error::MalformedCampaign(format!("{} unitary draws, need ≥ 2", draws.len())));
        }
        Ok(Self {
            params: params.clone(),
            draws,
        })
    }

    pub fn n_draws(&self) -> usize {
        self.draws.len()
    }

    pub fn is_exact(&self) -> bool {
        self.draws.iter().all(|d| d.experiments.iter().all(|e| e.shots.is_none()))
    }
}

/// Diagonal of `U ρ U†` with `U = ⊗_k unitaries[k]` (bit `k` ↔ `unitaries[k]`).
pub fn born_probabilities(rho: &DMatrix<C64>, unitaries: &[Mat2]) -> Vec<f64> {
    let dim = rho.nrows();
    assert_eq!(dim, 1 << unitaries.len());
    // Row-major working copy.
    let mut m: Vec<C64> = rho.transpose().as_slice().to_vec();
    for (k, u) in unitaries.iter().enumerate() {
        if *u == Mat2::identity() {
            continue;
        }
        let bit = 1usize << k;
        let (u00, u01, u10, u11) = (u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
        // Rows: m ← U m.
        for x in 0..dim {
            if x & bit == 0 {
                let (r0, r1) = (x * dim, (x | bit) * dim);
                for col in 0..dim {
                    let (a, b) = (m[r0 + col], m[r1 + col]);
                    m[r0 + col] = u00 * a + u01 * b;
                    m[r1 + col] = u10 * a + u11 * b;
                }
            }
        }
        // Columns: m ← m U†.
        let (c00, c01, c10, c11) = (u00.conj(), u01.conj(), u10.conj(), u11.conj());
        for row in 0..dim {
            let base = row * dim;
            for y in 0..dim {
                if y & bit == 0 {
                    let (a, b) = (m[base + y], m[base + (y | bit)]);
                    m[base + y] = c00 * a + c01 * b;
                    m[base + (y | bit)] = c10 * a + c11 * b;
                }
            }
        }
    }
    (0..dim).map(|x| m[x * dim + x].re.max(0.0)).collect()
}

fn check_rdm(rdm: &ReducedDensityMatrix, params: &ProtocolParams) -> Result<()> {
    params.validate()?;
    if rdm.partition != params.partition {
        return Err(Error::IncompatiblePartition(
            "density matrix and protocol use different partitions".into(),
        ));
    }
    Ok(())
}

fn simulate_draw(rho: &DMatrix<C64>, params: &ProtocolParams, r: usize, shots: bool) -> Result<Draw> {
    let mut urng = rng::stream(params.master_seed, Domain::Unitaries, r as u64);
    let pattern = build_pattern(params.kind, &params.partition, &mut urng)?;
    let experiments = pattern
        .experiments()
        .into_iter()
        .enumerate()
        .map(|(e, us)| {
            let probs = born_probabilities(rho, us);
            if shots {
                let mut srng = rng::stream(params.master_seed, Domain::Shots, (2 * r + e) as u64);
                Ok(Distribution::from_counts(&sample_counts(&probs, params.n_m, &mut srng)?))
            } else {
                Ok(Distribution::exact(probs))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Draw {
        unitary_index: r,
        experiments,
    })
}

fn simulate(rdm: &ReducedDensityMatrix, params: &ProtocolParams, shots: bool) -> Result<Campaign> {
    check_rdm(rdm, params)?;
    let draws = (0..params.n_u)
        .into_par_iter()
        .map(|r| simulate_draw(&rdm.matrix, params, r, shots))
        .collect::<Result<Vec<_>>>()?;
    Ok(Campaign {
        params: params.clone(),
        draws,
    })
}

/// Simulated campaign with `n_m` shots per experiment, starting from ρ_I.
///
/// Draw `r` takes its unitaries from stream `r` and its shots from streams
/// `2r` and `2r + 1`, so the records do not depend on scheduling.
pub fn run_campaign_on_rdm(rdm: &ReducedDensityMatrix, params: &ProtocolParams) -> Result<Vec<MeasurementRecord>> {
    let campaign = simulate(rdm, params, true)?;
    let dim = rdm.dim();
    let mut records = Vec::with_capacity(campaign.draws.len() * params.kind.experiments());
    for d in campaign.draws {
        for (e, dist) in d.experiments.into_iter().enumerate() {
            let m = dist.shots.expect("sampled") as f64;
            let counts = (0..dim)
                .filter_map(|s| {
                    let c = (dist.probs[s] * m).round() as u32;
                    (c > 0).then_some((s as u64, c))
                })
                .collect();
            records.push(MeasurementRecord {
                unitary_index: d.unitary_index,
                experiment: e as u8 + 1,
                counts,
            });
        }
    }
    Ok(records)
}

/// Simulated measurement campaign on `state`.
pub fn run_campaign(state: &StateVector, params: &ProtocolParams) -> Result<Vec<MeasurementRecord>> {
    params.validate()?;
    let rdm = reduced_density_matrix(state, &params.partition)?;
    run_campaign_on_rdm(&rdm, params)
}

/// Infinite-shot campaign: each draw carries the exact Born probabilities.
pub fn exact_campaign(rdm: &ReducedDensityMatrix, params: &ProtocolParams) -> Result<Campaign> {
    simulate(rdm, params, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::ProtocolKind;
    use crate::rdm::PartitionSpec;
    use crate::spin::{apply_in_place, marginal_probabilities};

    fn params(kind: ProtocolKind, partition: PartitionSpec, n_u: usize, n_m: usize) -> ProtocolParams {
        ProtocolParams {
            kind,
            n_u,
            n_m,
            partition,
            master_seed: 42,
        }
    }

    #[test]
    fn born_probabilities_match_statevector_route() {
        let psi = StateVector::random(6, &mut rng::stream(1, Domain::Test, 0)).unwrap();
        let part = PartitionSpec::reflection(6, 2).unwrap();
        let rdm = reduced_density_matrix(&psi, &part).unwrap();
        let mut r = rng::stream(2, Domain::Test, 0);
        let us: Vec<Mat2> = (0..4).map(|_| crate::protocols::sample_cue(&mut r)).collect();
        let mut amps = psi.clone().into_amplitudes();
        for (k, &site) in part.sites().iter().enumerate() {
            apply_in_place(&mut amps, 6, site, &us[k]).unwrap();
        }
        let rotated = StateVector::from_raw(6, amps).unwrap();
        let direct = marginal_probabilities(&rotated, &part.sites()).unwrap();
        let via_rdm = born_probabilities(&rdm.matrix, &us);
        for (a, b) in direct.iter().zip(&via_rdm) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn bookkeeping_for_reflection_and_time_reversal() {
        let psi = StateVector::product(&[false; 6]).unwrap();
        let part = PartitionSpec::reflection(6, 2).unwrap();
        let recs = run_campaign(&psi, &params(ProtocolKind::Reflection, part.clone(), 3, 5)).unwrap();
        assert_eq!(recs.len(), 3);
        assert!(recs.iter().all(|r| r.total() == 5 && r.experiment == 1));
        let recs = run_campaign(&psi, &params(ProtocolKind::TimeReversal, part, 3, 5)).unwrap();
        assert_eq!(recs.len(), 6);
    }

    #[test]
    fn campaigns_are_seed_deterministic() {
        let psi = StateVector::random(8, &mut rng::stream(3, Domain::Test, 0)).unwrap();
        let p = params(ProtocolKind::TimeReversal, PartitionSpec::reflection(8, 2).unwrap(), 20, 50);
        assert_eq!(run_campaign(&psi, &p).unwrap(), run_campaign(&psi, &p).unwrap());
        let mut q = p.clone();
        q.master_seed += 1;
        assert_ne!(run_campaign(&psi, &p).unwrap(), run_campaign(&psi, &q).unwrap());
    }

    #[test]
    fn records_roundtrip_through_campaign() {
        let psi = StateVector::random(8, &mut rng::stream(4, Domain::Test, 0)).unwrap();
        let p = params(ProtocolKind::KleinBottle, PartitionSpec::three_segments(8, 1).unwrap(), 6, 9);
        let recs = run_campaign(&psi, &p).unwrap();
        let c = Campaign::from_records(&p, &recs).unwrap();
        assert_eq!(c.n_draws(), 6);
        assert!(c.draws.iter().all(|d| d.experiments.len() == 2 && d.experiments[0].shots == Some(9)));
    }

    #[test]
    fn malformed_records_are_rejected() {
        let psi = StateVector::random(8, &mut rng::stream(5, Domain::Test, 0)).unwrap();
        let p = params(ProtocolKind::TimeReversal, PartitionSpec::reflection(8, 2).unwrap(), 4, 7);
        let mut recs = run_campaign(&psi, &p).unwrap();
        recs.pop();
        assert!(Campaign::from_records(&p, &recs).is_err());
        let mut recs = run_campaign(&psi, &p).unwrap();
        *recs[0].counts.values_mut().next().unwrap() += 1;
        assert!(Campaign::from_records(&p, &recs).is_err());
    }
}
