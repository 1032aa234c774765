use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assoc::Attachment;
use crate::link::LinkResult;
use crate::power::PowerReport;
use crate::scenario::{SixGConfig, Strategy, Technology, UserTerminal};
use crate::{Error, Result};

use super::{RunOutput, RunSpec};

/// Per-UE record of one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeMetric {
    pub snapshot: usize,
    pub ue_id: u32,
    /// `None` for UEs in outage.
    pub technology: Option<Technology>,
    pub cell_id: Option<u32>,
    pub ssb_beam: Option<usize>,
    pub beam_pair: Option<(usize, usize)>,
    pub rsrp_dbm: Option<f64>,
    pub indoor: bool,
    pub hotspot_id: Option<u32>,
    pub demand_prb: u32,
    pub prbs: usize,
    pub eff_sinr_db: [Option<f64>; 2],
    pub cqi: [Option<u8>; 2],
    pub throughput_mbps: f64,
}

impl UeMetric {
    pub fn new(snapshot: usize, ue: &UserTerminal, att: Option<&Attachment>, result: Option<&LinkResult>) -> Self {
        let finite = |v: f64| v.is_finite().then_some(v);
        Self {
            snapshot,
            ue_id: ue.id,
            technology: att.map(|a| a.technology),
            cell_id: att.map(|a| a.cell_id),
            ssb_beam: att.map(|a| a.ssb_beam),
            beam_pair: att.map(|a| a.csirs_beam_pair),
            rsrp_dbm: att.map(|a| a.rsrp_ssb_dbm),
            indoor: ue.indoor,
            hotspot_id: ue.hotspot_id,
            demand_prb: ue.demand_prb,
            prbs: result.map_or(0, |r| r.prbs),
            eff_sinr_db: result.map_or([None; 2], |r| r.eff_sinr_db.map(finite)),
            cqi: result.map_or([None; 2], |r| r.mcs.map(|m| m.cqi)),
            throughput_mbps: result.map_or(0.0, |r| r.throughput_mbps),
        }
    }
}

/// Nearest-rank percentile of an ascending slice: the value at rank
/// `ceil(p/100 * n)`, with rank at least 1.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub mean: f64,
    pub p5: f64,
    pub p50: f64,
    pub p95: f64,
}

impl Percentiles {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let mean = if v.is_empty() {
            0.0
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        };
        Self {
            mean,
            p5: percentile(&v, 5.0),
            p50: percentile(&v, 50.0),
            p95: percentile(&v, 95.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSummary {
    pub total_kw: f64,
    pub per_layer_kw: BTreeMap<String, f64>,
}

/// Pooled metrics of one run (`summary.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub label: String,
    pub strategy: Strategy,
    pub sixg: SixGConfig,
    pub seed: u64,
    pub n_snapshots: usize,
    pub config_hash: String,
    /// Percentile method used for every statistic below.
    pub percentile_method: String,
    pub n_samples: usize,
    pub throughput_mbps: Percentiles,
    pub throughput_by_tech_mbps: BTreeMap<String, Percentiles>,
    /// Fraction of UE samples per technology, plus `outage`.
    pub attachment_share: BTreeMap<String, f64>,
    pub power: PowerSummary,
}

pub fn run_label(strategy: Strategy, sixg: SixGConfig) -> String {
    if strategy.has_six_g() {
        format!("{}_{}MHz_{}TRX", strategy.tag(), sixg.bandwidth_mhz, sixg.n_trx)
    } else {
        strategy.tag().to_string()
    }
}

impl MetricsReport {
    pub fn build(spec: &RunSpec, ues: &[UeMetric], power: &PowerReport) -> Result<Self> {
        let all: Vec<f64> = ues.iter().map(|u| u.throughput_mbps).collect();
        let n = ues.len().max(1) as f64;
        let mut share = BTreeMap::new();
        let mut by_tech = BTreeMap::new();
        for tech in Technology::ALL {
            let v: Vec<f64> = ues
                .iter()
                .filter(|u| u.technology == Some(tech))
                .map(|u| u.throughput_mbps)
                .collect();
            share.insert(tech.label().to_string(), v.len() as f64 / n);
            if !v.is_empty() {
                by_tech.insert(tech.label().to_string(), Percentiles::of(&v));
            }
        }
        share.insert(
            "outage".to_string(),
            ues.iter().filter(|u| u.technology.is_none()).count() as f64 / n,
        );
        Ok(Self {
            label: run_label(spec.strategy, spec.sixg),
            strategy: spec.strategy,
            sixg: spec.sixg,
            seed: spec.seed,
            n_snapshots: spec.n_snapshots,
            config_hash: spec.config_hash()?,
            percentile_method: "nearest-rank over pooled per-UE samples".to_string(),
            n_samples: ues.len(),
            throughput_mbps: Percentiles::of(&all),
            throughput_by_tech_mbps: by_tech,
            attachment_share: share,
            power: PowerSummary {
                total_kw: power.total_kw,
                per_layer_kw: power
                    .per_layer_kw
                    .iter()
                    .map(|(t, kw)| (t.label().to_string(), *kw))
                    .collect(),
            },
        })
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn opt_f(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.4}"))
}

/// Writes the pooled per-UE records.
pub fn write_ue_metrics<W: Write>(w: W, ues: &[UeMetric]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "snapshot",
        "ue_id",
        "tech",
        "cell",
        "ssb_idx",
        "beam_l0",
        "beam_l1",
        "rsrp_dbm",
        "indoor",
        "hotspot",
        "demand_prb",
        "prbs",
        "eff_sinr_l0",
        "eff_sinr_l1",
        "mcs_l0",
        "mcs_l1",
        "throughput_mbps",
    ])?;
    for u in ues {
        out.write_record([
            u.snapshot.to_string(),
            u.ue_id.to_string(),
            u.technology.map_or("outage", Technology::label).to_string(),
            opt(u.cell_id),
            opt(u.ssb_beam),
            opt(u.beam_pair.map(|p| p.0)),
            opt(u.beam_pair.map(|p| p.1)),
            opt_f(u.rsrp_dbm),
            u.indoor.to_string(),
            opt(u.hotspot_id),
            u.demand_prb.to_string(),
            u.prbs.to_string(),
            opt_f(u.eff_sinr_db[0]),
            opt_f(u.eff_sinr_db[1]),
            opt(u.cqi[0]),
            opt(u.cqi[1]),
            format!("{:.6}", u.throughput_mbps),
        ])?;
    }
    out.flush()?;
    Ok(())
}

impl RunOutput {
    /// Writes `summary.json`, `ue_metrics.csv`, `power.csv`, plus the
    /// attachment and allocation tables of the first snapshot.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.report.write_json(fs::File::create(dir.join("summary.json"))?)?;
        write_ue_metrics(fs::File::create(dir.join("ue_metrics.csv"))?, &self.ue_metrics)?;
        self.power.write_csv(fs::File::create(dir.join("power.csv"))?)?;
        if let Some(first) = self.snapshots.first() {
            crate::assoc::write_attachments_csv(fs::File::create(dir.join("attachments.csv"))?, &first.attachments)?;
            first.allocation.write_csv(fs::File::create(dir.join("allocation.csv"))?)?;
        }
        Ok(())
    }
}

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub strategy: Strategy,
    pub sixg_bandwidth_mhz: u32,
    pub sixg_trx: u32,
    pub seed: u64,
    pub mean_mbps: f64,
    pub p5_mbps: f64,
    pub p50_mbps: f64,
    pub p95_mbps: f64,
    pub power_kw: f64,
    pub mean_ratio: f64,
    pub p5_ratio: f64,
    pub p50_ratio: f64,
    pub p95_ratio: f64,
    pub power_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: String,
    pub rows: Vec<ComparisonRow>,
    pub warnings: Vec<String>,
}

fn ratio(v: f64, base: f64) -> f64 {
    if v == base {
        1.0
    } else {
        v / base
    }
}

/// Tabulates reports against the one labelled `baseline`.
pub fn compare(reports: &[MetricsReport], baseline: &str) -> Result<Comparison> {
    if reports.len() < 2 {
        return Err(Error::Contract("comparison needs at least two runs".into()));
    }
    let base = reports
        .iter()
        .find(|r| r.label == baseline)
        .ok_or_else(|| Error::Config(format!("baseline '{baseline}' is not among the compared runs")))?;
    let mut warnings = Vec::new();
    for r in reports {
        if r.seed != base.seed {
            warnings.push(format!("{} uses seed {} but the baseline uses {}", r.label, r.seed, base.seed));
        }
    }
    let b = &base.throughput_mbps;
    let rows = reports
        .iter()
        .map(|r| {
            let t = &r.throughput_mbps;
            ComparisonRow {
                label: r.label.clone(),
                strategy: r.strategy,
                sixg_bandwidth_mhz: r.sixg.bandwidth_mhz,
                sixg_trx: r.sixg.n_trx,
                seed: r.seed,
                mean_mbps: t.mean,
                p5_mbps: t.p5,
                p50_mbps: t.p50,
                p95_mbps: t.p95,
                power_kw: r.power.total_kw,
                mean_ratio: ratio(t.mean, b.mean),
                p5_ratio: ratio(t.p5, b.p5),
                p50_ratio: ratio(t.p50, b.p50),
                p95_ratio: ratio(t.p95, b.p95),
                power_ratio: ratio(r.power.total_kw, base.power.total_kw),
            }
        })
        .collect();
    Ok(Comparison {
        baseline: baseline.to_string(),
        rows,
        warnings,
    })
}

impl Comparison {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for row in &self.rows {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank() {
        let v: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(percentile(&v, 5.0), 1.0);
        assert_eq!(percentile(&v, 50.0), 10.0);
        assert_eq!(percentile(&v, 95.0), 19.0);
        assert_eq!(percentile(&v, 100.0), 20.0);
        assert_eq!(percentile(&[4.0], 5.0), 4.0);
    }

    #[test]
    fn percentiles_are_ordered() {
        let p = Percentiles::of(&[5.0, 1.0, 3.0, 9.0, 0.0]);
        assert!(p.p5 <= p.p50 && p.p50 <= p.p95);
        assert_eq!(p.mean, 3.6);
    }
}
