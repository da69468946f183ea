//! Result persistence: one CSV row per replication and a JSON summary
//! document carrying the configuration echo, pooled statistics, and bound
//! reports. Rows are written in replication order with default float
//! formatting, so identical configurations produce byte-identical files.

use std::fs::File;
use std::io::{self, BufWriter};
use std::path::Path;

use serde::Serialize;

use super::bounds::{BoundReport, SweepCheck, SweepResult};
use super::{RepRecord, Study, Summary};

pub fn write_csv<W: io::Write>(writer: W, records: &[RepRecord]) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(writer);
    for record in records {
        out.serialize(record)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_csv_path(path: &Path, records: &[RepRecord]) -> Result<(), csv::Error> {
    let file = File::create(path).map_err(csv::Error::from)?;
    write_csv(BufWriter::new(file), records)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub graph: String,
    pub policy: String,
    pub budget: f64,
    pub init: String,
    pub replications: u64,
    pub seed: u64,
    pub max_events: u64,
    /// Absent when the run had no time cap.
    pub max_time: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GraphInfo {
    pub nodes: usize,
    pub edges: usize,
    pub max_degree: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutwidth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order_width: Option<usize>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PooledCounts {
    pub attempts: u64,
    pub excursions: u64,
    pub long_excursions: u64,
    pub rate_bound_violations: u64,
    pub completed_excursion_durations: u64,
    pub completed_waits: u64,
}

/// The JSON summary for one experiment.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryDocument {
    pub config: ConfigEcho,
    pub graph: GraphInfo,
    pub extinction_time: Summary,
    pub pooled: PooledCounts,
    pub bounds: Vec<BoundReport>,
}

impl SummaryDocument {
    pub fn new(study: &Study, bounds: Vec<BoundReport>) -> SummaryDocument {
        let cfg = &study.config;
        SummaryDocument {
            config: ConfigEcho {
                graph: cfg.graph.to_string(),
                policy: cfg.policy.to_string(),
                budget: cfg.budget,
                init: cfg.init.to_string(),
                replications: cfg.replications,
                seed: cfg.base_seed,
                max_events: cfg.caps.max_events,
                max_time: cfg.caps.max_time.is_finite().then_some(cfg.caps.max_time),
            },
            graph: GraphInfo {
                nodes: study.graph.node_count(),
                edges: study.graph.edge_count(),
                max_degree: study.graph.max_degree(),
                cutwidth: study.cutwidth,
                order_width: study.order_width,
            },
            extinction_time: study.extinction_time,
            pooled: PooledCounts {
                attempts: study.attempts,
                excursions: study.excursions,
                long_excursions: study.long_excursions,
                rate_bound_violations: study.rate_bound_violations,
                completed_excursion_durations: study.excursion_durations.len() as u64,
                completed_waits: study.waiting_durations.len() as u64,
            },
            bounds,
        }
    }
}

/// The JSON summary for a budget sweep: one per-budget document plus the
/// doubling comparisons.
#[derive(Debug, Clone, Serialize)]
pub struct SweepDocument {
    pub points: Vec<SummaryDocument>,
    pub checks: Vec<SweepCheck>,
}

impl SweepDocument {
    pub fn new(sweep: &SweepResult) -> SweepDocument {
        SweepDocument {
            points: sweep
                .studies
                .iter()
                .map(|s| SummaryDocument::new(s, Vec::new()))
                .collect(),
            checks: sweep.checks.clone(),
        }
    }
}

pub fn write_json<W: io::Write, T: Serialize>(mut writer: W, doc: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut writer, doc)?;
    writer.write_all(b"\n")
}

pub fn write_json_path<T: Serialize>(path: &Path, doc: &T) -> io::Result<()> {
    let file = File::create(path)?;
    write_json(BufWriter::new(file), doc)
}
