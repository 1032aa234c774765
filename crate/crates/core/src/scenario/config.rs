use serde::{Deserialize, Serialize};

use crate::{Error, Result};

use super::Strategy;

/// A probability in `[0, 1]`. Rejected at parse time otherwise.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Fraction(f64);

impl Fraction {
    pub fn new(v: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&v) {
            Ok(Self(v))
        } else {
            Err(Error::Config(format!("{v} is not a fraction in [0, 1]")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Fraction {
    type Error = String;

    fn try_from(v: f64) -> std::result::Result<Self, String> {
        Fraction::new(v).map_err(|_| format!("expected a value in [0, 1], got {v}"))
    }
}

impl From<Fraction> for f64 {
    fn from(f: Fraction) -> f64 {
        f.0
    }
}

/// 6G radio configuration: one of the four evaluated blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SixGConfig {
    #[serde(deserialize_with = "de_bandwidth")]
    pub bandwidth_mhz: u32,
    #[serde(deserialize_with = "de_trx")]
    pub n_trx: u32,
}

fn de_bandwidth<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<u32, D::Error> {
    let v = u32::deserialize(d)?;
    SixGConfig::check_bandwidth(v).map_err(serde::de::Error::custom)?;
    Ok(v)
}

fn de_trx<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<u32, D::Error> {
    let v = u32::deserialize(d)?;
    SixGConfig::check_trx(v).map_err(serde::de::Error::custom)?;
    Ok(v)
}

impl Default for SixGConfig {
    fn default() -> Self {
        Self {
            bandwidth_mhz: 200,
            n_trx: 128,
        }
    }
}

impl SixGConfig {
    pub fn new(bandwidth_mhz: u32, n_trx: u32) -> Result<Self> {
        Self::check_bandwidth(bandwidth_mhz).map_err(Error::Config)?;
        Self::check_trx(n_trx).map_err(Error::Config)?;
        Ok(Self { bandwidth_mhz, n_trx })
    }

    fn check_bandwidth(v: u32) -> std::result::Result<(), String> {
        match v {
            200 | 400 => Ok(()),
            _ => Err(format!("6G bandwidth must be 200 or 400 MHz, got {v}")),
        }
    }

    fn check_trx(v: u32) -> std::result::Result<(), String> {
        match v {
            128 | 256 => Ok(()),
            _ => Err(format!("6G TRX count must be 128 or 256, got {v}")),
        }
    }

    /// SSB beams: 16 at 128 TRX, 32 at 256 TRX.
    pub fn n_ssb_beams(&self) -> u32 {
        self.n_trx / 8
    }

    pub fn n_csirs_beams(&self) -> u32 {
        self.n_trx
    }

    pub fn label(&self) -> String {
        format!("{}MHz/{}TRX", self.bandwidth_mhz, self.n_trx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AreaConfig {
    pub area_km2: f64,
    /// Width over height of the rectangular service area.
    pub aspect_ratio: f64,
}

impl Default for AreaConfig {
    fn default() -> Self {
        Self {
            area_km2: 6.2,
            aspect_ratio: 1.0,
        }
    }
}

/// Transmit-power distribution given by its support and median.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerRange {
    pub min_dbm: f64,
    pub median_dbm: f64,
    pub max_dbm: f64,
}

impl PowerRange {
    /// Quantile of the piecewise-linear CDF through (min, 0), (median, 0.5), (max, 1).
    pub fn quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        if q < 0.5 {
            self.min_dbm + (self.median_dbm - self.min_dbm) * q / 0.5
        } else {
            self.median_dbm + (self.max_dbm - self.median_dbm) * (q - 0.5) / 0.5
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        if self.min_dbm <= self.median_dbm && self.median_dbm <= self.max_dbm {
            Ok(())
        } else {
            Err(Error::Config(format!("{what}: require min <= median <= max")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrxShare {
    pub n_trx: u32,
    pub share: f64,
}

/// Legacy LTE layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LteConfig {
    pub n_sites: u32,
    pub n_cells: u32,
    pub sectors_per_site: u32,
    pub bands_ghz: Vec<f64>,
    pub bandwidth_mhz: f64,
    pub n_prb: u32,
    /// Cells running the narrow carrier instead of `bandwidth_mhz`.
    pub narrow_cells: u32,
    pub narrow_bandwidth_mhz: f64,
    pub narrow_n_prb: u32,
    pub tx_power: PowerRange,
    pub trx_mix: Vec<TrxShare>,
    pub height_range_m: [f64; 2],
    pub min_site_distance_m: f64,
}

impl Default for LteConfig {
    fn default() -> Self {
        Self {
            n_sites: 47,
            n_cells: 204,
            sectors_per_site: 3,
            bands_ghz: vec![1.815, 1.89, 2.02, 2.33, 2.62],
            bandwidth_mhz: 20.0,
            n_prb: 100,
            narrow_cells: 20,
            narrow_bandwidth_mhz: 10.0,
            narrow_n_prb: 50,
            tx_power: PowerRange {
                min_dbm: 40.0,
                median_dbm: 45.9,
                max_dbm: 52.0,
            },
            trx_mix: vec![
                TrxShare { n_trx: 2, share: 0.30 },
                TrxShare { n_trx: 4, share: 0.40 },
                TrxShare { n_trx: 8, share: 0.25 },
                TrxShare { n_trx: 64, share: 0.05 },
            ],
            height_range_m: [20.0, 40.0],
            min_site_distance_m: 150.0,
        }
    }
}

/// NR layer at 2.7 GHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NrConfig {
    pub n_sites: u32,
    pub sectors_per_site: u32,
    pub carrier_ghz: f64,
    pub bandwidth_mhz: f64,
    pub n_prb: u32,
    pub n_trx: u32,
    pub n_ssb_beams: u32,
    pub n_csirs_beams: u32,
    pub tx_power: PowerRange,
    pub height_range_m: [f64; 2],
    pub min_site_distance_m: f64,
    /// NR sites are never co-located with LTE sites.
    pub min_distance_to_lte_m: f64,
}

impl Default for NrConfig {
    fn default() -> Self {
        Self {
            n_sites: 15,
            sectors_per_site: 3,
            carrier_ghz: 2.703,
            bandwidth_mhz: 100.0,
            n_prb: 273,
            n_trx: 64,
            n_ssb_beams: 8,
            n_csirs_beams: 64,
            tx_power: PowerRange {
                min_dbm: 51.3,
                median_dbm: 53.2,
                max_dbm: 54.7,
            },
            height_range_m: [20.0, 40.0],
            min_site_distance_m: 150.0,
            min_distance_to_lte_m: 50.0,
        }
    }
}

/// Synthetic 6G layer in the upper mid-band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SixGLayerConfig {
    pub carrier_ghz: f64,
    pub n_cells: u32,
    pub n_prb: u32,
    pub macro_tx_power_dbm: f64,
    pub pico_tx_power_dbm: f64,
    /// Added to the transmit power when running the 400 MHz carrier.
    pub wideband_power_boost_db: f64,
    pub umi_height_m: f64,
    pub upi_height_m: f64,
    /// Minimum distance between non-co-located 6G sites.
    pub min_site_distance_m: f64,
}

impl Default for SixGLayerConfig {
    fn default() -> Self {
        Self {
            carrier_ghz: 10.0,
            n_cells: 45,
            n_prb: 273,
            macro_tx_power_dbm: 55.0,
            pico_tx_power_dbm: 52.0,
            wideband_power_boost_db: 3.0,
            umi_height_m: 10.0,
            upi_height_m: 6.0,
            min_site_distance_m: 80.0,
        }
    }
}

/// Per-cell busy-hour statistics standing in for operator counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    pub baseline_ues: u32,
    /// Log-normal sigma of the per-cell UE-count weights.
    pub ue_count_sigma: f64,
    pub prb_utilization_median: f64,
    pub prb_utilization_sigma: f64,
    /// Explicit per-cell UE counts, legacy cells in id order.
    pub ue_counts: Option<Vec<u32>>,
    /// Explicit per-cell PRB usage, legacy cells in id order.
    pub prb_used: Option<Vec<u32>>,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            baseline_ues: 3604,
            ue_count_sigma: 0.8,
            prb_utilization_median: 0.7,
            prb_utilization_sigma: 0.3,
            ue_counts: None,
            prb_used: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HotspotConfig {
    pub count: u32,
    pub ues_per_hotspot: u32,
    pub radius_m: f64,
    pub min_separation_m: f64,
    pub max_attempts: u32,
}

impl Default for HotspotConfig {
    fn default() -> Self {
        Self {
            count: 15,
            ues_per_hotspot: 40,
            radius_m: 40.0,
            min_separation_m: 80.0,
            max_attempts: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub strategy: Strategy,
    pub sixg: SixGConfig,
    pub area: AreaConfig,
    pub lte: LteConfig,
    pub nr: NrConfig,
    pub sixg_layer: SixGLayerConfig,
    pub traffic: TrafficConfig,
    pub hotspots: HotspotConfig,
    pub indoor_probability: Fraction,
    pub ue_height_m: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            strategy: Strategy::default(),
            sixg: SixGConfig::default(),
            area: AreaConfig::default(),
            lte: LteConfig::default(),
            nr: NrConfig::default(),
            sixg_layer: SixGLayerConfig::default(),
            traffic: TrafficConfig::default(),
            hotspots: HotspotConfig::default(),
            indoor_probability: Fraction(0.8),
            ue_height_m: 1.5,
        }
    }
}

impl ScenarioConfig {
    pub fn legacy_cell_count(&self) -> u32 {
        self.lte.n_cells + self.nr.n_sites * self.nr.sectors_per_site
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        let lte = &self.lte;
        if lte.sectors_per_site == 0 || lte.n_cells % lte.sectors_per_site != 0 {
            return cfg(format!(
                "lte.n_cells = {} is not a multiple of lte.sectors_per_site = {}",
                lte.n_cells, lte.sectors_per_site
            ));
        }
        let groups = lte.n_cells / lte.sectors_per_site;
        if lte.n_sites == 0 || groups < lte.n_sites || groups > lte.n_sites * lte.bands_ghz.len() as u32 {
            return cfg(format!(
                "{} LTE band groups cannot cover {} sites with {} bands",
                groups,
                lte.n_sites,
                lte.bands_ghz.len()
            ));
        }
        if lte.narrow_cells > lte.n_cells {
            return cfg("lte.narrow_cells exceeds lte.n_cells".into());
        }
        if lte.n_prb == 0 || lte.narrow_n_prb == 0 {
            return cfg("lte PRB counts must be positive".into());
        }
        lte.tx_power.validate("lte.tx_power")?;
        if lte.trx_mix.is_empty() || lte.trx_mix.iter().any(|t| !(t.share >= 0.0)) {
            return cfg("lte.trx_mix must list non-negative shares".into());
        }
        if lte.trx_mix.iter().map(|t| t.share).sum::<f64>() <= 0.0 {
            return cfg("lte.trx_mix shares sum to zero".into());
        }
        let nr = &self.nr;
        nr.tx_power.validate("nr.tx_power")?;
        if nr.sectors_per_site == 0 || nr.n_prb == 0 || nr.n_csirs_beams > nr.n_trx {
            return cfg("nr layer: invalid sector, PRB or beam counts".into());
        }
        for (name, r) in [("lte.height_range_m", lte.height_range_m), ("nr.height_range_m", nr.height_range_m)] {
            if !(r[0] > 0.0 && r[0] <= r[1]) {
                return cfg(format!("{name} must be a positive, ordered range"));
            }
        }
        for (name, d) in [
            ("lte.min_site_distance_m", lte.min_site_distance_m),
            ("nr.min_site_distance_m", nr.min_site_distance_m),
            ("sixg_layer.min_site_distance_m", self.sixg_layer.min_site_distance_m),
        ] {
            if !(d > 0.0) {
                return cfg(format!("{name} must be positive"));
            }
        }
        let hs = &self.hotspots;
        if !(hs.min_separation_m > 0.0) || !(hs.radius_m >= 0.0) {
            return cfg("hotspots: separation must be positive and radius non-negative".into());
        }
        if hs.count > self.legacy_cell_count() {
            return cfg("hotspots.count exceeds the number of legacy cells".into());
        }
        let legacy = self.legacy_cell_count() as usize;
        if let Some(v) = &self.traffic.ue_counts {
            if v.len() != legacy {
                return cfg(format!("traffic.ue_counts has {} entries, expected {legacy}", v.len()));
            }
        }
        if let Some(v) = &self.traffic.prb_used {
            if v.len() != legacy {
                return cfg(format!("traffic.prb_used has {} entries, expected {legacy}", v.len()));
            }
        }
        if !(self.ue_height_m > 0.0) {
            return cfg("ue_height_m must be positive".into());
        }
        Ok(())
    }
}
