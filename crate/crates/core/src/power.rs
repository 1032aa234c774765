//! Parametric radio power model.
//!
//! Each radio draws five components: a static baseline, baseband processing
//! proportional to bandwidth, per-TRX chain power, power-amplifier overhead
//! and the supply power of the radiated output, `P_out / pa_efficiency` with
//! `P_out = P_tx * load`. Legacy 4G multicarrier PAs are shared by adjacent
//! carriers of a sector, so their overhead is charged once per group.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::scenario::{Cell, Technology};
use crate::{Error, Result};

const DEFAULT_PRESETS: &str = include_str!("../data/power_presets.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    /// Multicarrier PA shared across adjacent bands.
    McpaShared,
    /// Active antenna unit with a dedicated PA per TRX.
    AauPerTrx,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerParams {
    pub architecture: Architecture,
    pub p_baseline_w: f64,
    pub p_baseband_per_mhz_w: f64,
    pub p_per_trx_w: f64,
    pub p_pa_overhead_per_chain_w: f64,
    pub pa_efficiency: f64,
}

impl PowerParams {
    pub fn validate(&self) -> Result<()> {
        let parts = [
            self.p_baseline_w,
            self.p_baseband_per_mhz_w,
            self.p_per_trx_w,
            self.p_pa_overhead_per_chain_w,
        ];
        if parts.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::Config("power components must be non-negative".into()));
        }
        if !(self.pa_efficiency > 0.0 && self.pa_efficiency <= 1.0) {
            return Err(Error::Config(format!(
                "pa_efficiency = {} outside (0, 1]",
                self.pa_efficiency
            )));
        }
        Ok(())
    }

    /// Marginal static power of one more TRX (W).
    pub fn per_trx_marginal_w(&self) -> f64 {
        self.p_per_trx_w + self.p_pa_overhead_per_chain_w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerPresets {
    pub mcpa_adjacency_ghz: f64,
    pub four_g: PowerParams,
    pub five_g: PowerParams,
    pub six_g: PowerParams,
}

impl Default for PowerPresets {
    fn default() -> Self {
        PowerPresets::parse(DEFAULT_PRESETS).expect("bundled power presets are valid")
    }
}

impl PowerPresets {
    pub fn parse(text: &str) -> Result<Self> {
        let p: PowerPresets = toml::from_str(text).map_err(|e| Error::Parse {
            path: "power presets".into(),
            message: e.to_string(),
        })?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        PowerPresets::parse(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mcpa_adjacency_ghz >= 0.0) {
            return Err(Error::Config("mcpa_adjacency_ghz must be non-negative".into()));
        }
        self.four_g.validate()?;
        self.five_g.validate()?;
        self.six_g.validate()
    }

    pub fn for_technology(&self, tech: Technology) -> &PowerParams {
        match tech {
            Technology::FourG => &self.four_g,
            Technology::FiveG => &self.five_g,
            Technology::SixG => &self.six_g,
        }
    }
}

/// Five-component breakdown of one radio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioPower {
    pub cell_id: u32,
    pub technology: Technology,
    pub load_fraction: f64,
    pub baseline_w: f64,
    pub baseband_w: f64,
    pub trx_w: f64,
    pub pa_overhead_w: f64,
    pub radiated_w: f64,
    pub total_w: f64,
}

impl RadioPower {
    fn with_total(mut self) -> Self {
        self.total_w = self.baseline_w + self.baseband_w + self.trx_w + self.pa_overhead_w + self.radiated_w;
        self
    }

    pub fn components(&self) -> [f64; 5] {
        [
            self.baseline_w,
            self.baseband_w,
            self.trx_w,
            self.pa_overhead_w,
            self.radiated_w,
        ]
    }
}

/// Power of a stand-alone radio at `load_fraction`.
pub fn radio_power(cell: &Cell, load_fraction: f64, params: &PowerParams) -> Result<RadioPower> {
    if !(0.0..=1.0).contains(&load_fraction) {
        return Err(Error::Contract(format!(
            "cell {}: load fraction {load_fraction} outside [0, 1]",
            cell.id
        )));
    }
    let n_trx = cell.n_trx as f64;
    let p_out_w = cell.tx_power_mw() / 1e3 * load_fraction;
    Ok(RadioPower {
        cell_id: cell.id,
        technology: cell.technology,
        load_fraction,
        baseline_w: params.p_baseline_w,
        baseband_w: params.p_baseband_per_mhz_w * cell.bandwidth_mhz,
        trx_w: n_trx * params.p_per_trx_w,
        pa_overhead_w: n_trx * params.p_pa_overhead_per_chain_w,
        radiated_w: p_out_w / params.pa_efficiency,
        total_w: 0.0,
    }
    .with_total())
}

/// Groups of cell indices sharing a multicarrier PA: same site, same sector
/// azimuth, carriers chained within `adjacency_ghz`.
pub fn mcpa_groups(cells: &[Cell], presets: &PowerPresets) -> Vec<Vec<usize>> {
    let mut by_sector: BTreeMap<(u32, i64), Vec<usize>> = BTreeMap::new();
    for (i, c) in cells.iter().enumerate() {
        if c.technology == Technology::FourG && presets.four_g.architecture == Architecture::McpaShared {
            let az = (crate::antenna::wrap_deg(c.azimuth_deg) * 1e3).round() as i64;
            by_sector.entry((c.site_id, az)).or_default().push(i);
        }
    }
    let mut groups = Vec::new();
    for (_, mut idx) in by_sector {
        idx.sort_by(|&a, &b| cells[a].carrier_ghz.total_cmp(&cells[b].carrier_ghz).then(cells[a].id.cmp(&cells[b].id)));
        let mut cur = vec![idx[0]];
        for w in idx.windows(2) {
            if cells[w[1]].carrier_ghz - cells[w[0]].carrier_ghz <= presets.mcpa_adjacency_ghz + 1e-9 {
                cur.push(w[1]);
            } else {
                groups.push(std::mem::take(&mut cur));
                cur.push(w[1]);
            }
        }
        groups.push(cur);
    }
    groups
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub radios: Vec<RadioPower>,
    pub per_layer_kw: BTreeMap<Technology, f64>,
    pub total_kw: f64,
}

impl PowerReport {
    pub fn from_radios(radios: Vec<RadioPower>) -> Self {
        let mut per_layer_kw = BTreeMap::new();
        for r in &radios {
            *per_layer_kw.entry(r.technology).or_insert(0.0) += r.total_w / 1e3;
        }
        let total_kw = radios.iter().map(|r| r.total_w).sum::<f64>() / 1e3;
        Self {
            radios,
            per_layer_kw,
            total_kw,
        }
    }

    /// Component-wise mean of several reports over the same radios.
    pub fn mean(reports: &[PowerReport]) -> Result<Self> {
        let first = reports
            .first()
            .ok_or_else(|| Error::Contract("cannot average zero power reports".into()))?;
        let n = reports.len() as f64;
        let mut radios = first.radios.clone();
        for (i, r) in radios.iter_mut().enumerate() {
            let avg = |f: fn(&RadioPower) -> f64| reports.iter().map(|rep| f(&rep.radios[i])).sum::<f64>() / n;
            r.load_fraction = avg(|x| x.load_fraction);
            r.baseline_w = avg(|x| x.baseline_w);
            r.baseband_w = avg(|x| x.baseband_w);
            r.trx_w = avg(|x| x.trx_w);
            r.pa_overhead_w = avg(|x| x.pa_overhead_w);
            r.radiated_w = avg(|x| x.radiated_w);
            *r = r.with_total();
        }
        Ok(Self::from_radios(radios))
    }

    /// Writes `radio_id,tech,load,<5 components>,total_w` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "radio_id",
            "tech",
            "load",
            "baseline_w",
            "baseband_w",
            "trx_w",
            "pa_overhead_w",
            "radiated_w",
            "total_w",
        ])?;
        for r in &self.radios {
            let mut row = vec![
                r.cell_id.to_string(),
                r.technology.label().to_string(),
                format!("{:.6}", r.load_fraction),
            ];
            row.extend(r.components().iter().map(|c| format!("{c:.6}")));
            row.push(format!("{:.6}", r.total_w));
            out.write_record(row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Network power at the given per-cell loads (same order as `cells`).
pub fn network_power(cells: &[Cell], loads: &[f64], presets: &PowerPresets) -> Result<PowerReport> {
    if cells.len() != loads.len() {
        return Err(Error::Contract(format!(
            "{} cells but {} load values",
            cells.len(),
            loads.len()
        )));
    }
    let mut radios = cells
        .iter()
        .zip(loads)
        .map(|(c, &l)| radio_power(c, l, presets.for_technology(c.technology)))
        .collect::<Result<Vec<_>>>()?;
    let per_chain = presets.four_g.p_pa_overhead_per_chain_w;
    for group in mcpa_groups(cells, presets) {
        let owner = *group.iter().min_by_key(|&&i| cells[i].id).expect("non-empty group");
        let max_trx = group.iter().map(|&i| cells[i].n_trx).max().unwrap_or(0);
        for &i in &group {
            radios[i].pa_overhead_w = if i == owner {
                max_trx as f64 * per_chain
            } else {
                0.0
            };
            radios[i] = radios[i].with_total();
        }
    }
    Ok(PowerReport::from_radios(radios))
}
