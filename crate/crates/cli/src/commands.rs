use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use rmtopo::analysis::{
    argmax_lambda, error_scaling_scan, fit_correlation_length, run_sweep, CorrelationLengthFit, SweepMode, SweepParam,
    SweepRow, SweepSpec,
};
use rmtopo::dynamics::{adiabatic_evolve, monitor_invariants, MonitorMode};
use rmtopo::protocols::{
    estimate, read_records, run_campaign, twirl_check, write_records, Campaign, Quantity, TwirlChannel, TwirlReport,
};
use rmtopo::rdm::{exact_invariant, reduced_density_matrix};
use rmtopo::rng::{self, Domain};
use rmtopo::{ground_state, EstimatorResult, InvariantKind, InvariantValue, LanczosOptions, PartitionSpec};
use serde::Serialize;

use crate::config::{RunConfig, SweepModeName};
use crate::output::Sink;

#[derive(Serialize)]
struct GroundStateOut {
    energy: f64,
    residual_norm: f64,
    iterations: usize,
    sz_site0: f64,
}

pub fn ground_state_cmd(cfg: &RunConfig, sink: &Sink) -> Result<()> {
    let spec = cfg.hamiltonian()?;
    let gs = ground_state(&spec, &LanczosOptions::default())?;
    let out = GroundStateOut {
        energy: gs.energy,
        residual_norm: gs.residual_norm,
        iterations: gs.iterations,
        sz_site0: gs.state.sz_expectation(0)?,
    };
    report(sink.json("ground-state", cfg, &out)?);
    Ok(())
}

#[derive(Serialize)]
struct InvariantsOut {
    exact: Option<InvariantValue>,
    sampled: Option<SampledOut>,
}

#[derive(Serialize)]
struct SampledOut {
    raw: EstimatorResult,
    normalized: EstimatorResult,
}

pub fn invariants_cmd(cfg: &RunConfig, sink: &Sink, sampled: bool) -> Result<()> {
    let spec = cfg.hamiltonian()?;
    let proto = cfg.protocol()?;
    let kind = proto
        .kind
        .invariant()
        .context("protocol.kind must be R, T, D2 or KB for the invariants command")?;
    let partition = cfg.partition(spec.n_sites, proto.kind)?;
    let gs = ground_state(&spec, &LanczosOptions::default())?;
    let exact = exact_invariant(kind, &reduced_density_matrix(&gs.state, &partition)?)?;
    let out = if sampled {
        let params = cfg.protocol_params(spec.n_sites)?;
        let campaign = Campaign::from_records(&params, &run_campaign(&gs.state, &params)?)?;
        let mut raw = estimate(&campaign, Quantity::Raw)?;
        let mut normalized = estimate(&campaign, Quantity::Normalized)?;
        if proto.exact_reference {
            raw = raw.with_reference(exact.raw);
            normalized = normalized.with_reference(exact.normalized);
        }
        InvariantsOut {
            exact: proto.exact_reference.then_some(exact),
            sampled: Some(SampledOut { raw, normalized }),
        }
    } else {
        InvariantsOut {
            exact: Some(exact),
            sampled: None,
        }
    };
    report(sink.json("invariants", cfg, &out)?);
    Ok(())
}

#[derive(Serialize)]
struct LambdaRow {
    kind: InvariantKind,
    j_prime: f64,
    delta: f64,
    b: f64,
    fit: Option<CorrelationLengthFit>,
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepOut {
    rows: usize,
    failed_points: usize,
    lambda: Vec<LambdaRow>,
    /// Index into `lambda` of the largest correlation length, per kind.
    lambda_argmax: BTreeMap<String, Option<usize>>,
}

pub fn sweep_cmd(cfg: &RunConfig, sink: &Sink) -> Result<()> {
    let base = cfg.hamiltonian()?;
    let sw = cfg.sweep.as_ref().context("missing [sweep] section")?;
    if sw.kinds.is_empty() {
        bail!("sweep.kinds must list at least one invariant");
    }
    let mode = match sw.mode {
        SweepModeName::Exact => SweepMode::Exact,
        SweepModeName::Sampled => {
            let p = cfg.protocol()?;
            cfg.seed()?;
            SweepMode::Sampled { n_u: p.n_u, n_m: p.n_m }
        }
    };
    let mut rows: Vec<SweepRow> = Vec::new();
    for &kind in &sw.kinds {
        let spec = SweepSpec {
            base: base.clone(),
            kind,
            n: sw.n,
            axes: sw.axes.clone(),
            mode,
            repetitions: sw.repetitions,
            master_seed: cfg.master_seed.unwrap_or(0),
            ramp: cfg.ramp()?,
        };
        rows.extend(run_sweep(&spec)?);
    }
    let mut out = SweepOut {
        rows: rows.len(),
        failed_points: rows.iter().filter(|r| r.error.is_some()).count(),
        lambda: Vec::new(),
        lambda_argmax: BTreeMap::new(),
    };
    if sw.fit_lambda {
        if !sw.axes.iter().any(|a| a.param == SweepParam::N) {
            bail!("sweep.fit_lambda needs an `n` axis");
        }
        for &kind in &sw.kinds {
            let start = out.lambda.len();
            let mut groups: BTreeMap<[u64; 3], Vec<(f64, f64)>> = BTreeMap::new();
            for r in rows.iter().filter(|r| r.kind == kind && r.repetition == 0) {
                if let Some(z) = r.exact_normalized {
                    let key = [r.j_prime.to_bits(), r.delta.to_bits(), r.b.to_bits()];
                    groups.entry(key).or_default().push((r.n as f64, z));
                }
            }
            for (key, series) in groups {
                let [j_prime, delta, b] = key.map(f64::from_bits);
                let (fit, error) = match fit_correlation_length(&series, None) {
                    Ok(f) => (Some(f), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                out.lambda.push(LambdaRow {
                    kind,
                    j_prime,
                    delta,
                    b,
                    fit,
                    error,
                });
            }
            let fits: Vec<CorrelationLengthFit> =
                out.lambda[start..].iter().filter_map(|l| l.fit.clone()).collect();
            let best = argmax_lambda(&fits).map(|i| {
                // Map back to the index in `lambda`, skipping failed fits.
                out.lambda[start..]
                    .iter()
                    .enumerate()
                    .filter(|(_, l)| l.fit.is_some())
                    .nth(i)
                    .map(|(k, _)| start + k)
                    .expect("fit index in range")
            });
            out.lambda_argmax.insert(kind.to_string(), best);
        }
    }
    report(sink.csv(&rows)?);
    report(sink.json("sweep", cfg, &out)?);
    Ok(())
}

#[derive(Serialize)]
struct RampRow {
    time: f64,
    kind: InvariantKind,
    n: usize,
    exact_raw: f64,
    exact_normalized: f64,
    ground_normalized: f64,
    estimate: Option<f64>,
    std_error: Option<f64>,
    overlap: f64,
}

pub fn adiabatic_cmd(cfg: &RunConfig, sink: &Sink) -> Result<()> {
    let spec = cfg.hamiltonian()?;
    let ramp = cfg.ramp()?.context("missing [ramp] section")?;
    let section = cfg.ramp.as_ref().expect("checked above");
    let mode = if section.sampled {
        let p = cfg.protocol()?;
        MonitorMode::Sampled {
            n_u: p.n_u,
            n_m: p.n_m,
            master_seed: cfg.seed()?,
        }
    } else {
        MonitorMode::Exact
    };
    let lengths = if section.segment_lengths.is_empty() {
        vec![cfg.partition.as_ref().and_then(|p| p.n).context("ramp.segment_lengths or partition.n is required")?]
    } else {
        section.segment_lengths.clone()
    };
    let snaps = adiabatic_evolve(&spec, &ramp)?;
    let gs = ground_state(&spec, &LanczosOptions::default())?;
    let overlaps: Vec<f64> = snaps.iter().map(|s| s.state.overlap(&gs.state)).collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for &n in &lengths {
        for &kind in &section.monitor {
            let partition = rmtopo::analysis::partition_for(kind, spec.n_sites, n)?;
            let ground = exact_invariant(kind, &reduced_density_matrix(&gs.state, &partition)?)?.normalized;
            // One kind per call keeps the partition matched to the invariant.
            let points = monitor_invariants(&snaps, &partition, &[kind], mode)?;
            for (p, overlap) in points.iter().zip(&overlaps) {
                rows.push(RampRow {
                    time: p.time,
                    kind,
                    n,
                    exact_raw: p.exact.raw,
                    exact_normalized: p.exact.normalized,
                    ground_normalized: ground,
                    estimate: p.sampled.as_ref().map(|s| s.value),
                    std_error: p.sampled.as_ref().map(|s| s.std_error),
                    overlap: *overlap,
                });
            }
        }
    }
    #[derive(Serialize)]
    struct Summary {
        snapshots: usize,
        final_overlap: f64,
        ground_energy: f64,
    }
    report(sink.csv(&rows)?);
    report(sink.json(
        "adiabatic",
        cfg,
        &Summary {
            snapshots: snaps.len(),
            final_overlap: *overlaps.last().expect("at least one snapshot"),
            ground_energy: gs.energy,
        },
    )?);
    Ok(())
}

pub fn error_scan_cmd(cfg: &RunConfig, sink: &Sink) -> Result<()> {
    let spec = cfg.hamiltonian()?;
    let scan = cfg.scan.as_ref().context("missing [scan] section")?;
    let params = cfg.protocol_params(spec.n_sites)?;
    let gs = ground_state(&spec, &LanczosOptions::default())?;
    let rows = error_scaling_scan(&gs.state, &params, scan.axis, &scan.values, scan.repetitions)?;
    #[derive(Serialize)]
    struct Summary {
        points: usize,
        /// Ratios of successive mean errors.
        ratios: Vec<f64>,
    }
    let ratios = rows.windows(2).map(|w| w[1].mean_abs_error / w[0].mean_abs_error).collect();
    report(sink.csv(&rows)?);
    report(sink.json("error-scan", cfg, &Summary { points: rows.len(), ratios })?);
    Ok(())
}

pub fn twirl_cmd(cfg: &RunConfig, sink: &Sink, n_samples: usize) -> Result<()> {
    let seed = cfg.seed()?;
    let reports: Vec<TwirlReport> = [TwirlChannel::Phi, TwirlChannel::Psi]
        .iter()
        .enumerate()
        .map(|(i, &ch)| twirl_check(ch, n_samples, &mut rng::stream(seed, Domain::Twirl, i as u64)))
        .collect::<Result<_, _>>()?;
    report(sink.json("twirl-check", cfg, &reports)?);
    Ok(())
}

pub fn campaign_export_cmd(cfg: &RunConfig, sink: &Sink) -> Result<()> {
    let spec = cfg.hamiltonian()?;
    let params = cfg.protocol_params(spec.n_sites)?;
    let gs = ground_state(&spec, &LanczosOptions::default())?;
    let records = run_campaign(&gs.state, &params)?;
    let path = sink.path("jsonl");
    let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    write_records(&records, &mut w)?;
    w.flush()?;
    report(path);
    #[derive(Serialize)]
    struct Summary<'a> {
        records: usize,
        partition: &'a PartitionSpec,
    }
    report(sink.json(
        "campaign-export",
        cfg,
        &Summary {
            records: records.len(),
            partition: &params.partition,
        },
    )?);
    Ok(())
}

pub fn campaign_analyze_cmd(cfg: &RunConfig, sink: &Sink, records_path: &Path) -> Result<()> {
    let spec = cfg.hamiltonian()?;
    let params = cfg.protocol_params(spec.n_sites)?;
    let file = File::open(records_path).with_context(|| format!("opening {}", records_path.display()))?;
    let records = read_records(BufReader::new(file))?;
    let campaign = Campaign::from_records(&params, &records)?;
    let mut estimates = BTreeMap::new();
    if params.kind.invariant().is_some() {
        estimates.insert("raw", estimate(&campaign, Quantity::Raw)?);
        estimates.insert("normalized", estimate(&campaign, Quantity::Normalized)?);
        let (a, b) = params.kind.invariant().expect("checked").normalization_segments();
        estimates.insert("purity_a", estimate(&campaign, Quantity::Purity { segment: Some(a) })?);
        estimates.insert("purity_b", estimate(&campaign, Quantity::Purity { segment: Some(b) })?);
    } else {
        estimates.insert("purity", estimate(&campaign, Quantity::Purity { segment: None })?);
    }
    report(sink.json("campaign-analyze", cfg, &estimates)?);
    Ok(())
}

fn report(path: std::path::PathBuf) {
    log::info!("wrote {}", path.display());
    println!("{}", path.display());
}
