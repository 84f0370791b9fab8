//! TOML run configuration.

use std::ops::Range;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rmtopo::analysis::{partition_for, ScanAxis, SweepAxis};
use rmtopo::dynamics::{RampSpec, DEFAULT_DT};
use rmtopo::hamiltonian::DEFAULT_PINNING_RATIO;
use rmtopo::{HamiltonianSpec, InvariantKind, PartitionSpec, ProtocolKind, ProtocolParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub master_seed: Option<u64>,
    pub hamiltonian: Option<HamiltonianSection>,
    pub partition: Option<PartitionSection>,
    pub protocol: Option<ProtocolSection>,
    pub ramp: Option<RampSection>,
    pub sweep: Option<SweepSection>,
    pub scan: Option<ScanSection>,
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSection {
    pub n_sites: usize,
    #[serde(default = "one")]
    pub j: f64,
    pub j_prime: f64,
    pub delta: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub neel: f64,
    /// Defaults to `0.05 j`.
    pub pinning: Option<f64>,
}

fn one() -> f64 {
    1.0
}

/// Either a segment length `n` placed by the invariant's layout, or explicit
/// `[start, end)` site ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSection {
    pub n: Option<usize>,
    pub segments: Option<Vec<[usize; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub kind: ProtocolKind,
    pub n_u: usize,
    pub n_m: usize,
    /// Attach the exact value to sampled estimates.
    #[serde(default)]
    pub exact_reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampSection {
    pub t_f: f64,
    pub dt: Option<f64>,
    pub delta_neel: f64,
    #[serde(default = "four")]
    pub ramp_exponent: u32,
    #[serde(default)]
    pub sample_times: Vec<f64>,
    /// Invariants monitored along the ramp.
    #[serde(default = "default_monitor")]
    pub monitor: Vec<InvariantKind>,
    /// Segment lengths monitored along the ramp.
    #[serde(default)]
    pub segment_lengths: Vec<usize>,
    /// Add sampled estimates using the protocol section's `n_u`, `n_m`.
    #[serde(default)]
    pub sampled: bool,
}

fn four() -> u32 {
    4
}

fn default_monitor() -> Vec<InvariantKind> {
    vec![InvariantKind::Reflection]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepModeName {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub kinds: Vec<InvariantKind>,
    /// Segment length when `n` is not an axis.
    pub n: usize,
    pub mode: SweepModeName,
    #[serde(default = "one_rep")]
    pub repetitions: usize,
    /// Fit a correlation length over the `n` axis for every other point.
    #[serde(default)]
    pub fit_lambda: bool,
    pub axes: Vec<SweepAxis>,
}

fn one_rep() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub axis: ScanAxis,
    pub values: Vec<usize>,
    pub repetitions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub prefix: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn hamiltonian(&self) -> Result<HamiltonianSpec> {
        let h = self.hamiltonian.as_ref().context("missing [hamiltonian] section")?;
        let spec = HamiltonianSpec::xxz(h.n_sites, h.j, h.j_prime, h.delta)
            .with_b(h.b)
            .with_neel(h.neel, 1.0)
            .with_pinning(h.pinning.unwrap_or(DEFAULT_PINNING_RATIO * h.j));
        spec.validate()?;
        Ok(spec)
    }

    pub fn seed(&self) -> Result<u64> {
        self.master_seed
            .context("master_seed is required for sampled runs (set it in the config or pass --seed)")
    }

    /// Partition for `kind`; purity campaigns take the explicit segments or
    /// the reflection layout.
    pub fn partition(&self, n_sites: usize, kind: ProtocolKind) -> Result<PartitionSpec> {
        let p = self.partition.as_ref().context("missing [partition] section")?;
        match (&p.n, &p.segments) {
            (Some(_), Some(_)) => bail!("partition: give either `n` or `segments`, not both"),
            (None, None) => bail!("partition: one of `n` or `segments` is required"),
            (None, Some(segs)) => {
                let ranges: Vec<Range<usize>> = segs.iter().map(|s| s[0]..s[1]).collect();
                Ok(PartitionSpec::new(n_sites, ranges)?)
            }
            (Some(n), None) => Ok(match kind.invariant() {
                Some(k) => partition_for(k, n_sites, *n)?,
                None => PartitionSpec::reflection(n_sites, *n)?,
            }),
        }
    }

    pub fn protocol(&self) -> Result<&ProtocolSection> {
        self.protocol.as_ref().context("missing [protocol] section")
    }

    pub fn protocol_params(&self, n_sites: usize) -> Result<ProtocolParams> {
        let p = self.protocol()?;
        let params = ProtocolParams {
            kind: p.kind,
            n_u: p.n_u,
            n_m: p.n_m,
            partition: self.partition(n_sites, p.kind)?,
            master_seed: self.seed()?,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn ramp(&self) -> Result<Option<RampSpec>> {
        let Some(r) = &self.ramp else { return Ok(None) };
        let spec = RampSpec {
            t_f: r.t_f,
            dt: r.dt.unwrap_or(DEFAULT_DT.min(r.t_f)),
            delta_neel: r.delta_neel,
            ramp_exponent: r.ramp_exponent,
            sample_times: r.sample_times.clone(),
        };
        spec.validate()?;
        Ok(Some(spec))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output
            .as_ref()
            .and_then(|o| o.dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn prefix(&self, default: &str) -> String {
        self.output
            .as_ref()
            .and_then(|o| o.prefix.clone())
            .unwrap_or_else(|| default.to_string())
    }
}
