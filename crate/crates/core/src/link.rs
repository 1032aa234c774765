//! Per-PRB SINR, effective SINR and throughput.
//!
//! A cell's per-PRB power `P_tx / n_prb` is shared equally by every stream on
//! that PRB: each scheduled beam pair carries one stream per polarization.
//! Streams interfere only with streams on the same polarization of
//! co-channel cells, including other beams of the serving cell.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::antenna::{BeamCodebook, PanelResponse};
use crate::channel::LinkState;
use crate::scenario::Cell;
use crate::sched::BeamAllocation;
use crate::{Error, Result};

pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

const DEFAULT_MCS_TABLE: &str = include_str!("../data/mcs_cqi_table2.toml");

/// Largest spectral efficiency an MCS entry may carry (256-QAM, r ~ 0.926).
pub const MAX_SPECTRAL_EFFICIENCY: f64 = 7.4063;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McsEntry {
    pub cqi: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code_rate_x1024: Option<u32>,
    pub spectral_efficiency: f64,
    pub sinr_threshold_db: f64,
}

/// Ordered (threshold, efficiency) pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McsTable {
    pub entry: Vec<McsEntry>,
}

impl Default for McsTable {
    fn default() -> Self {
        McsTable::parse(DEFAULT_MCS_TABLE).expect("bundled MCS table is valid")
    }
}

impl McsTable {
    pub fn parse(text: &str) -> Result<Self> {
        let t: McsTable = toml::from_str(text).map_err(|e| Error::Parse {
            path: "mcs table".into(),
            message: e.to_string(),
        })?;
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        McsTable::parse(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.entry.is_empty() {
            return Err(Error::Config("MCS table is empty".into()));
        }
        for w in self.entry.windows(2) {
            if !(w[1].sinr_threshold_db > w[0].sinr_threshold_db) || !(w[1].spectral_efficiency > w[0].spectral_efficiency) {
                return Err(Error::Config(format!(
                    "MCS table must be strictly increasing (entries {} and {})",
                    w[0].cqi, w[1].cqi
                )));
            }
        }
        let top = self.entry.last().unwrap().spectral_efficiency;
        if self.entry[0].spectral_efficiency <= 0.0 || top > MAX_SPECTRAL_EFFICIENCY {
            return Err(Error::Config(format!(
                "MCS efficiencies must lie in (0, {MAX_SPECTRAL_EFFICIENCY}]"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsChoice {
    /// CQI index of the selected entry, `None` when below the table.
    pub cqi: Option<u8>,
    pub spectral_efficiency: f64,
}

/// Highest entry whose threshold is at or below `eff_db` (inclusive).
pub fn sinr_to_mcs(eff_db: f64, table: &McsTable) -> McsChoice {
    match table.entry.iter().rev().find(|e| e.sinr_threshold_db <= eff_db) {
        Some(e) => McsChoice {
            cqi: Some(e.cqi),
            spectral_efficiency: e.spectral_efficiency,
        },
        None => McsChoice {
            cqi: None,
            spectral_efficiency: 0.0,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkParams {
    pub noise_figure_db: f64,
    /// Control and reference-signal overhead factor on throughput.
    pub overhead: f64,
    pub miesm_beta: f64,
    pub mcs_table: McsTable,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            noise_figure_db: 9.0,
            overhead: 0.86,
            miesm_beta: 1.0,
            mcs_table: McsTable::default(),
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.overhead > 0.0 && self.overhead <= 1.0) {
            return Err(Error::Config("link.overhead must lie in (0, 1]".into()));
        }
        if !(self.miesm_beta > 0.0) {
            return Err(Error::Config("link.miesm_beta must be positive".into()));
        }
        self.mcs_table.validate()
    }

    /// Thermal noise power (mW) over `bandwidth_hz`.
    pub fn noise_mw(&self, bandwidth_hz: f64) -> f64 {
        db_to_lin(THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10() + self.noise_figure_db)
    }

    pub fn noise_dbm(&self, bandwidth_hz: f64) -> f64 {
        THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10() + self.noise_figure_db
    }
}

#[inline]
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Transmit state of one cell in a snapshot.
#[derive(Debug, Clone)]
pub struct CellTx<'a> {
    pub cell: &'a Cell,
    pub csirs: &'a BeamCodebook,
    /// Beam pairs transmitting on each PRB.
    pub prb_streams: Vec<Vec<(usize, usize)>>,
}

impl<'a> CellTx<'a> {
    pub fn new<'b>(cell: &'a Cell, csirs: &'a BeamCodebook, beams: impl IntoIterator<Item = &'b BeamAllocation>) -> Self {
        let mut prb_streams = vec![Vec::new(); cell.n_prb as usize];
        for b in beams {
            for g in &b.grants {
                for &p in &g.prbs {
                    prb_streams[p as usize].push(b.beam_pair);
                }
            }
        }
        Self {
            cell,
            csirs,
            prb_streams,
        }
    }

    /// This cell's PRB overlapping PRB `prb` of a co-channel carrier with
    /// `n_prb` PRBs. Both carriers share a center frequency and PRB width.
    #[inline]
    pub fn aligned_prb(&self, n_prb: u32, prb: u32) -> Option<u32> {
        let q = prb as i64 + (self.cell.n_prb as i64 - n_prb as i64) / 2;
        (0..self.cell.n_prb as i64).contains(&q).then_some(q as u32)
    }

    /// Power (mW) of one stream on `prb`; zero if the PRB is idle.
    #[inline]
    pub fn stream_power_mw(&self, prb: u32) -> f64 {
        let k = self.prb_streams[prb as usize].len();
        if k == 0 {
            return 0.0;
        }
        self.cell.tx_power_mw() / self.cell.n_prb as f64 / (2 * k) as f64
    }
}

/// A UE's view of one co-channel cell.
#[derive(Debug, Clone)]
pub struct UeLink {
    /// Index of the cell in the snapshot's `CellTx` slice.
    pub tx: usize,
    pub link: LinkState,
    pub response: PanelResponse,
}

impl UeLink {
    /// Received power (mW) of a stream sent on `beam`, `prb`, polarization `pol`.
    #[inline]
    pub fn received_mw(&self, tx: &CellTx, beam: usize, prb: u32, pol: usize) -> f64 {
        tx.stream_power_mw(prb)
            * self.response.gain_linear(&tx.csirs.codewords[beam])
            * self.link.large_scale_gain()
            * self.link.fading.power(prb as usize, pol)
    }
}

/// Everything needed to evaluate one scheduled UE.
#[derive(Debug, Clone)]
pub struct UeView {
    pub ue_id: u32,
    /// Index into `links` of the serving cell.
    pub serving: usize,
    pub beam_pair: (usize, usize),
    pub prbs: Vec<u32>,
    /// Serving cell plus every co-channel cell.
    pub links: Vec<UeLink>,
    /// Noise power per PRB (mW).
    pub noise_mw: f64,
}

#[inline]
fn layer_beam(pair: (usize, usize), layer: usize) -> usize {
    if layer == 0 {
        pair.0
    } else {
        pair.1
    }
}

/// `S / (I + N)` on one PRB and layer (linear).
pub fn per_prb_sinr(view: &UeView, txs: &[CellTx], prb: u32, layer: usize) -> f64 {
    let serving = &view.links[view.serving];
    let s_tx = &txs[serving.tx];
    let signal = serving.received_mw(s_tx, layer_beam(view.beam_pair, layer), prb, layer);
    let n_prb = s_tx.cell.n_prb;
    let mut interference = 0.0;
    for (i, ul) in view.links.iter().enumerate() {
        let tx = &txs[ul.tx];
        let Some(q) = tx.aligned_prb(n_prb, prb) else {
            continue;
        };
        for &pair in &tx.prb_streams[q as usize] {
            if i == view.serving && pair == view.beam_pair {
                continue;
            }
            interference += ul.received_mw(tx, layer_beam(pair, layer), q, layer);
        }
    }
    signal / (interference + view.noise_mw)
}

/// Per-layer, per-allocated-PRB SINR of one UE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrGrid {
    pub ue_id: u32,
    pub prbs: Vec<u32>,
    pub sinr: [Vec<f64>; 2],
}

pub fn sinr_grid(view: &UeView, txs: &[CellTx]) -> SinrGrid {
    let per_layer = |layer| view.prbs.iter().map(|&p| per_prb_sinr(view, txs, p, layer)).collect();
    SinrGrid {
        ue_id: view.ue_id,
        prbs: view.prbs.clone(),
        sinr: [per_layer(0), per_layer(1)],
    }
}

/// MIESM compression of linear SINRs with the capacity proxy
/// `beta * log2(1 + s / beta)`. Returns `None` for an empty slice.
pub fn effective_sinr(values: &[f64], beta: f64) -> Option<f64> {
    let first = *values.first()?;
    if values.iter().all(|&v| v == first) {
        return Some(first);
    }
    let mean = values.iter().map(|&s| (s / beta).ln_1p()).sum::<f64>() / values.len() as f64;
    let eff = beta * mean.exp_m1();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some(eff.clamp(lo, hi))
}

/// Effective SINR of one layer in dB.
pub fn effective_sinr_db(grid: &SinrGrid, layer: usize, beta: f64) -> Option<f64> {
    effective_sinr(&grid.sinr[layer], beta).map(lin_to_db)
}

/// `sum(SE) * n_prb * prb_bandwidth * overhead`, in Mbps.
pub fn ue_throughput_mbps(spectral_efficiency: &[f64], n_prb: usize, prb_bandwidth_hz: f64, overhead: f64) -> f64 {
    spectral_efficiency.iter().sum::<f64>() * n_prb as f64 * prb_bandwidth_hz * overhead / 1e6
}

/// Link-level outcome of one UE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkResult {
    pub prbs: usize,
    pub eff_sinr_db: [f64; 2],
    pub mcs: [McsChoice; 2],
    pub throughput_mbps: f64,
}

pub fn evaluate(view: &UeView, txs: &[CellTx], params: &LinkParams) -> LinkResult {
    if view.prbs.is_empty() {
        let none = McsChoice {
            cqi: None,
            spectral_efficiency: 0.0,
        };
        return LinkResult {
            prbs: 0,
            eff_sinr_db: [f64::NAN; 2],
            mcs: [none; 2],
            throughput_mbps: 0.0,
        };
    }
    let grid = sinr_grid(view, txs);
    let eff = [0, 1].map(|l| effective_sinr_db(&grid, l, params.miesm_beta).expect("non-empty grid"));
    let mcs = eff.map(|e| sinr_to_mcs(e, &params.mcs_table));
    let se = mcs.map(|m| m.spectral_efficiency);
    let serving = txs[view.links[view.serving].tx].cell;
    LinkResult {
        prbs: view.prbs.len(),
        eff_sinr_db: eff,
        mcs,
        throughput_mbps: ue_throughput_mbps(&se, view.prbs.len(), serving.prb_bandwidth_hz(), params.overhead),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bundled_table_is_cqi_table_2() {
        let t = McsTable::default();
        assert_eq!(t.entry.len(), 15);
        assert_eq!(t.entry[0].spectral_efficiency, 0.1523);
        assert_eq!(t.entry[14].spectral_efficiency, 7.4063);
    }

    #[test]
    fn mcs_boundaries() {
        let t = McsTable::default();
        assert_eq!(sinr_to_mcs(-30.0, &t).spectral_efficiency, 0.0);
        assert_eq!(sinr_to_mcs(60.0, &t).spectral_efficiency, 7.4063);
        let thr = t.entry[4].sinr_threshold_db;
        assert_eq!(sinr_to_mcs(thr, &t).cqi, Some(5));
        assert_eq!(sinr_to_mcs(thr - 1e-9, &t).cqi, Some(4));
    }

    #[test]
    fn worked_miesm_example() {
        let eff = effective_sinr(&[1.0, 10.0], 1.0).unwrap();
        assert_abs_diff_eq!(lin_to_db(eff), 5.67, epsilon = 0.01);
        assert_eq!(effective_sinr(&[3.7; 5], 1.0), Some(3.7));
        assert_eq!(effective_sinr(&[], 1.0), None);
    }

    #[test]
    fn throughput_arithmetic() {
        assert_abs_diff_eq!(ue_throughput_mbps(&[2.0], 100, 180e3, 1.0), 36.0, epsilon = 1e-9);
        assert_eq!(ue_throughput_mbps(&[2.0, 2.0], 0, 180e3, 1.0), 0.0);
        let one = ue_throughput_mbps(&[3.0], 10, 360e3, 0.86);
        let two = ue_throughput_mbps(&[3.0, 3.0], 10, 360e3, 0.86);
        assert_eq!(two, 2.0 * one);
    }

    #[test]
    fn noise_per_prb() {
        let p = LinkParams::default();
        assert_abs_diff_eq!(p.noise_dbm(180e3), -174.0 + 52.5527 + 9.0, epsilon = 1e-3);
    }

    #[test]
    fn rejects_non_monotone_table() {
        let text = "[[entry]]\ncqi = 1\nspectral_efficiency = 1.0\nsinr_threshold_db = 2.0\n\
                    [[entry]]\ncqi = 2\nspectral_efficiency = 0.5\nsinr_threshold_db = 3.0\n";
        assert!(McsTable::parse(text).is_err());
    }
}
