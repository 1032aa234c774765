//! Multi-layer topology and UE population.
//!
//! A [`Deployment`] holds everything that is fixed for a seed: the legacy
//! 4G/5G layers with their per-cell traffic statistics, the hotspot centers
//! and the candidate 6G site locations. [`Deployment::topology`] selects the
//! radios active under a [`Strategy`]; [`drop_users`] places the UE
//! population for one snapshot.

mod config;
mod file;
mod generate;
mod users;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::antenna::ArrayGeometry;
use crate::channel::{self, PropagationModel};
use crate::{Error, Result};

pub use config::{
    AreaConfig, Fraction, HotspotConfig, LteConfig, NrConfig, PowerRange, ScenarioConfig, SixGConfig,
    SixGLayerConfig, TrafficConfig, TrxShare,
};
pub use file::{load_scenario, save_scenario, CellRecord, ScenarioFile, SiteRecord, UeRecord};
pub use generate::{generate_topology, Deployment};
pub use users::{drop_users, CoverageRegions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Technology {
    FourG,
    FiveG,
    SixG,
}

impl Technology {
    pub const ALL: [Technology; 3] = [Technology::FourG, Technology::FiveG, Technology::SixG];

    /// Reselection priority: 0 for 4G, 1 for 5G, 2 for 6G.
    pub fn priority(self) -> u8 {
        match self {
            Technology::FourG => 0,
            Technology::FiveG => 1,
            Technology::SixG => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Technology::FourG => "4G",
            Technology::FiveG => "5G",
            Technology::SixG => "6G",
        }
    }
}

impl fmt::Display for Technology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DeploymentClass {
    UMa,
    UMi,
    UPi,
}

impl DeploymentClass {
    pub fn propagation(self) -> PropagationModel {
        match self {
            DeploymentClass::UMa => PropagationModel::UMa,
            DeploymentClass::UMi | DeploymentClass::UPi => PropagationModel::UMi,
        }
    }

    /// Default mechanical downtilt: 6 degrees for macro, none for small cells.
    pub fn default_downtilt_deg(self) -> f64 {
        match self {
            DeploymentClass::UMa => 6.0,
            DeploymentClass::UMi | DeploymentClass::UPi => 0.0,
        }
    }
}

/// The five evaluated deployment strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Strategy {
    FourG,
    #[default]
    #[serde(rename = "FourG_FiveG")]
    FourGFiveG,
    #[serde(rename = "CoLoc6G_UMa")]
    CoLoc6GUMa,
    #[serde(rename = "NonCoLoc6G_UMi")]
    NonCoLoc6GUMi,
    #[serde(rename = "NonCoLoc6G_UPi")]
    NonCoLoc6GUPi,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::FourG,
        Strategy::FourGFiveG,
        Strategy::CoLoc6GUMa,
        Strategy::NonCoLoc6GUMi,
        Strategy::NonCoLoc6GUPi,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Strategy::FourG => "FourG",
            Strategy::FourGFiveG => "FourG_FiveG",
            Strategy::CoLoc6GUMa => "CoLoc6G_UMa",
            Strategy::NonCoLoc6GUMi => "NonCoLoc6G_UMi",
            Strategy::NonCoLoc6GUPi => "NonCoLoc6G_UPi",
        }
    }

    pub fn has_five_g(self) -> bool {
        self != Strategy::FourG
    }

    pub fn has_six_g(self) -> bool {
        matches!(
            self,
            Strategy::CoLoc6GUMa | Strategy::NonCoLoc6GUMi | Strategy::NonCoLoc6GUPi
        )
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let tags: Vec<_> = Strategy::ALL.iter().map(|s| s.tag()).collect();
                Error::Config(format!("unknown strategy '{s}', expected one of {}", tags.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Bearing toward `other` in degrees from +x, counter-clockwise.
    pub fn bearing_deg(&self, other: &Point) -> f64 {
        (other.y - self.y).atan2(other.x - self.x).to_degrees()
    }
}

/// Rectangular service area anchored at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceArea {
    pub width_m: f64,
    pub height_m: f64,
}

impl ServiceArea {
    pub fn from_km2(area_km2: f64, aspect_ratio: f64) -> Result<Self> {
        if !(area_km2 > 0.0 && aspect_ratio > 0.0) {
            return Err(Error::Config(format!(
                "area must be positive (area_km2 = {area_km2}, aspect_ratio = {aspect_ratio})"
            )));
        }
        let height_m = (area_km2 * 1e6 / aspect_ratio).sqrt();
        Ok(Self {
            width_m: height_m * aspect_ratio,
            height_m,
        })
    }

    pub fn area_km2(&self) -> f64 {
        self.width_m * self.height_m / 1e6
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0.0..=self.width_m).contains(&p.x) && (0.0..=self.height_m).contains(&p.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub id: u32,
    pub position: Point,
    pub height_m: f64,
    pub layer: Technology,
}

/// One radio sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: u32,
    pub site_id: u32,
    pub azimuth_deg: f64,
    pub technology: Technology,
    pub carrier_ghz: f64,
    pub bandwidth_mhz: f64,
    pub n_prb: u32,
    pub n_trx: u32,
    pub tx_power_dbm: f64,
    pub array: ArrayGeometry,
    pub n_ssb_beams: u32,
    pub n_csirs_beams: u32,
    pub deployment_class: DeploymentClass,
    /// Active UEs in the traffic statistics (zero for synthetic layers).
    pub ue_count: u32,
    /// PRBs in use in the traffic statistics.
    pub prb_used: u32,
}

impl Cell {
    /// Subcarrier spacing: LTE is fixed at 15 kHz; NR-style carriers pick the
    /// numerology that fits the configured PRB count into the bandwidth.
    pub fn subcarrier_spacing_khz(&self) -> f64 {
        if self.technology == Technology::FourG {
            return 15.0;
        }
        let mut scs = 15.0;
        while (self.n_prb as f64) * 12.0 * scs * 2.0 <= self.bandwidth_mhz * 1e3 + 1e-9 && scs < 960.0 {
            scs *= 2.0;
        }
        scs
    }

    pub fn prb_bandwidth_hz(&self) -> f64 {
        12.0 * self.subcarrier_spacing_khz() * 1e3
    }

    /// Reference-signal EPRE: total power spread evenly over all subcarriers.
    pub fn rs_epre_dbm(&self) -> f64 {
        self.tx_power_dbm - 10.0 * (12.0 * self.n_prb as f64).log10()
    }

    pub fn tx_power_mw(&self) -> f64 {
        10f64.powf(self.tx_power_dbm / 10.0)
    }

    /// Cells sharing a carrier interfere with each other; nothing else does.
    pub fn co_channel(&self, other: &Cell) -> bool {
        self.technology == other.technology && (self.carrier_ghz - other.carrier_ghz).abs() < 1e-6
    }

    pub fn validate(&self, site: &Site) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("cell {}: {msg}", self.id)));
        if self.n_prb == 0 {
            return bad("n_prb must be positive".into());
        }
        if !(self.bandwidth_mhz > 0.0) {
            return bad("bandwidth_mhz must be positive".into());
        }
        if ![2, 4, 8, 64, 128, 256].contains(&self.n_trx) {
            return bad(format!("n_trx = {} not in {{2,4,8,64,128,256}}", self.n_trx));
        }
        if self.n_csirs_beams > self.n_trx {
            return bad(format!(
                "n_csirs_beams = {} exceeds n_trx = {}",
                self.n_csirs_beams, self.n_trx
            ));
        }
        if self.n_ssb_beams == 0 || self.n_csirs_beams == 0 {
            return bad("beam counts must be positive".into());
        }
        let uma = channel::classify_model(site.height_m) == PropagationModel::UMa;
        if uma != (self.deployment_class == DeploymentClass::UMa) {
            return bad(format!(
                "deployment_class {:?} inconsistent with site height {} m",
                self.deployment_class, site.height_m
            ));
        }
        if self.deployment_class == DeploymentClass::UPi && self.technology != Technology::SixG {
            return bad("UPi is reserved for 6G pico cells".into());
        }
        self.array.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hotspot {
    pub id: u32,
    pub center: Point,
    /// Legacy cell whose coverage region hosts the hotspot.
    pub host_cell: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserTerminal {
    pub id: u32,
    pub position: Point,
    pub height_m: f64,
    pub indoor: bool,
    pub demand_prb: u32,
    pub hotspot_id: Option<u32>,
    /// Cell whose traffic statistics generated this UE.
    pub home_cell: Option<u32>,
}

/// Radios active under one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub area: ServiceArea,
    pub sites: Vec<Site>,
    pub cells: Vec<Cell>,
    pub hotspots: Vec<Hotspot>,
}

impl Topology {
    pub fn site(&self, id: u32) -> Option<&Site> {
        self.sites.iter().find(|s| s.id == id)
    }

    pub fn cells_of(&self, tech: Technology) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(move |c| c.technology == tech)
    }

    pub fn validate(&self) -> Result<()> {
        for c in &self.cells {
            let site = self
                .site(c.site_id)
                .ok_or_else(|| Error::Config(format!("cell {} references unknown site {}", c.id, c.site_id)))?;
            c.validate(site)?;
        }
        for s in &self.sites {
            if !(s.height_m > 0.0) {
                return Err(Error::Config(format!("site {}: height must be positive", s.id)));
            }
            if !self.area.contains(&s.position) {
                return Err(Error::Config(format!("site {} lies outside the service area", s.id)));
            }
        }
        Ok(())
    }
}
