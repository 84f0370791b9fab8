//! Randomized-measurement protocols.
//!
//! A protocol draws correlated local CUE unitaries on the measured interval
//! ([`build_pattern`]), rotates the state with them, records projective
//! measurement histograms ([`run_campaign`]) and turns the statistics into
//! estimates of the invariants ([`estimate_zr`], [`estimate_zt`], …).

mod campaign;
mod cue;
mod estimators;
mod kernel;
mod pattern;
mod records;
mod twirl;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rdm::{InvariantKind, PartitionSpec};

pub use campaign::{
    born_probabilities, exact_campaign, run_campaign, run_campaign_on_rdm, Campaign, Distribution, Draw,
};
pub use cue::sample_cue;
pub use estimators::{
    estimate, estimate_normalized, estimate_purity, estimate_raw, estimate_zd2, estimate_zkb, estimate_zr,
    estimate_zt, EstimatorResult, Quantity,
};
pub use kernel::{hamming_kernel_sum, reflection_weight};
pub use pattern::{build_pattern, UnitaryPattern};
pub use records::{read_records, write_records, MeasurementRecord, RecordLine};
pub use twirl::{
    phi_closed_form, psi_closed_form, swap_operator, transpose_swap_operator, twirl_check, weight_operator,
    TwirlChannel, TwirlReport,
};

/// Which correlated-unitary protocol a campaign runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProtocolKind {
    #[serde(rename = "R")]
    Reflection,
    #[serde(rename = "T")]
    TimeReversal,
    #[serde(rename = "D2")]
    D2,
    #[serde(rename = "KB")]
    KleinBottle,
    /// Independent unitaries on every site; purities only.
    #[serde(rename = "purity")]
    Purity,
}

impl ProtocolKind {
    pub fn invariant(self) -> Option<InvariantKind> {
        match self {
            ProtocolKind::Reflection => Some(InvariantKind::Reflection),
            ProtocolKind::TimeReversal => Some(InvariantKind::TimeReversal),
            ProtocolKind::D2 => Some(InvariantKind::D2),
            ProtocolKind::KleinBottle => Some(InvariantKind::KleinBottle),
            ProtocolKind::Purity => None,
        }
    }

    pub fn experiments(self) -> usize {
        match self {
            ProtocolKind::Reflection | ProtocolKind::Purity => 1,
            _ => 2,
        }
    }

    pub fn check_partition(self, p: &PartitionSpec) -> Result<()> {
        match self {
            ProtocolKind::Reflection | ProtocolKind::TimeReversal => p.require_pair().map(|_| ()),
            ProtocolKind::D2 | ProtocolKind::KleinBottle => p.require_triple(),
            ProtocolKind::Purity => Ok(()),
        }
    }
}

impl From<InvariantKind> for ProtocolKind {
    fn from(k: InvariantKind) -> Self {
        match k {
            InvariantKind::Reflection => ProtocolKind::Reflection,
            InvariantKind::TimeReversal => ProtocolKind::TimeReversal,
            InvariantKind::D2 => ProtocolKind::D2,
            InvariantKind::KleinBottle => ProtocolKind::KleinBottle,
        }
    }
}

impl std::fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.invariant() {
            Some(k) => k.fmt(f),
            None => f.write_str("purity"),
        }
    }
}

impl std::str::FromStr for ProtocolKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("purity") {
            Ok(ProtocolKind::Purity)
        } else {
            s.parse::<InvariantKind>().map(Into::into)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub kind: ProtocolKind,
    /// Number of random-unitary draws.
    pub n_u: usize,
    /// Projective shots per draw and experiment.
    pub n_m: usize,
    pub partition: PartitionSpec,
    pub master_seed: u64,
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_u < 2 {
            return Err(Error::invalid("n_u", format!("must be ≥ 2, got {}", self.n_u)));
        }
        if self.n_m < 2 {
            return Err(Error::invalid("n_m", format!("must be ≥ 2, got {}", self.n_m)));
        }
        if self.n_m > u32::MAX as usize {
            return Err(Error::invalid("n_m", "too large"));
        }
        self.kind.check_partition(&self.partition)
    }
}
