use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Histogram of one experiment under one unitary draw. Keys are interval
/// bitstrings in the local encoding of [`crate::rdm::PartitionSpec`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementRecord {
    pub unitary_index: usize,
    /// 1 or 2.
    pub experiment: u8,
    pub counts: BTreeMap<u64, u32>,
}

impl MeasurementRecord {
    pub fn total(&self) -> u64 {
        self.counts.values().map(|&c| c as u64).sum()
    }
}

/// One line of a persisted campaign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordLine {
    pub unitary_index: usize,
    pub experiment: u8,
    pub bitstring: u64,
    pub count: u32,
}

/// Writes records as JSON lines, one `(unitary, experiment, bitstring, count)`
/// tuple per line, in record order and ascending bitstring order.
pub fn write_records<W: Write>(records: &[MeasurementRecord], mut w: W) -> std::io::Result<()> {
    for r in records {
        for (&bitstring, &count) in &r.counts {
            let line = RecordLine {
                unitary_index: r.unitary_index,
                experiment: r.experiment,
                bitstring,
                count,
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Reads records written by [`write_records`]. Lines for the same
/// `(unitary_index, experiment)` are merged; records come back sorted.
pub fn read_records<R: BufRead>(r: R) -> Result<Vec<MeasurementRecord>> {
    let mut map: BTreeMap<(usize, u8), BTreeMap<u64, u32>> = BTreeMap::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::MalformedCampaign(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RecordLine = serde_json::from_str(&line)
            .map_err(|e| Error::MalformedCampaign(format!("line {}: {e}", lineno + 1)))?;
        let slot = map
            .entry((rec.unitary_index, rec.experiment))
            .or_default()
            .entry(rec.bitstring)
            .or_insert(0);
        *slot = slot
            .checked_add(rec.count)
            .ok_or_else(|| Error::MalformedCampaign(format!("line {}: count overflow", lineno + 1)))?;
    }
    Ok(map
        .into_iter()
        .map(|((unitary_index, experiment), counts)| MeasurementRecord {
            unitary_index,
            experiment,
            counts,
        })
        .collect())
}
