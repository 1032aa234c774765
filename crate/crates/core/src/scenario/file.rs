//! TOML scenario files.
//!
//! ```toml
//! [scenario]
//! seed = 7
//! strategy = "CoLoc6G_UMa"
//! sixg = { bandwidth_mhz = 400, n_trx = 256 }
//!
//! [model.link]
//! noise_figure_db = 9.0
//! ```
//!
//! Adding `[[site]]` and `[[cell]]` tables (and optionally `[[ue]]`) turns
//! the file into an explicit topology that bypasses the generator.

use std::fs;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::antenna::ArrayGeometry;
use crate::channel::{classify_model, PropagationModel};
use crate::engine::ModelParams;
use crate::{Error, Result};

use super::{Cell, Deployment, DeploymentClass, Point, ScenarioConfig, Site, Technology, UserTerminal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteRecord {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub height_m: f64,
    pub layer: Technology,
}

/// One cell row, mirroring the per-layer parameter table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellRecord {
    pub id: u32,
    pub site_id: u32,
    pub technology: Technology,
    pub azimuth_deg: f64,
    pub carrier_ghz: f64,
    pub bandwidth_mhz: f64,
    pub n_prb: u32,
    pub n_trx: u32,
    pub tx_power_dbm: f64,
    pub n_ssb_beams: u32,
    pub n_csirs_beams: u32,
    /// Derived from the site height when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deployment_class: Option<DeploymentClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub downtilt_deg: Option<f64>,
    #[serde(default)]
    pub ue_count: u32,
    #[serde(default)]
    pub prb_used: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UeRecord {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub indoor: bool,
    pub demand_prb: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hotspot_id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub home_cell: Option<u32>,
}

/// A parsed scenario file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub model: ModelParams,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub site: Vec<SiteRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cell: Vec<CellRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ue: Vec<UeRecord>,
}

/// Same layout as [`ScenarioFile`] but keeps record spans for diagnostics.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    #[serde(default)]
    scenario: ScenarioConfig,
    #[serde(default)]
    model: ModelParams,
    #[serde(default)]
    site: Vec<Spanned<SiteRecord>>,
    #[serde(default)]
    cell: Vec<Spanned<CellRecord>>,
    #[serde(default)]
    ue: Vec<Spanned<UeRecord>>,
}

fn line_of(text: &str, span: Range<usize>) -> usize {
    text[..span.start.min(text.len())].matches('\n').count() + 1
}

impl ScenarioFile {
    /// Parses TOML text; `origin` names the source in diagnostics.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let parse_err = |message: String| Error::Parse {
            path: origin.to_string(),
            message,
        };
        let raw: RawFile = toml::from_str(text).map_err(|e| parse_err(e.to_string().trim_end().to_string()))?;
        raw.scenario
            .validate()
            .map_err(|e| parse_err(format!("[scenario]: {e}")))?;

        let mut file = ScenarioFile {
            scenario: raw.scenario,
            model: raw.model,
            ..Default::default()
        };
        file.model.validate().map_err(|e| parse_err(format!("[model]: {e}")))?;
        let check = |span: Range<usize>, what: &str, r: Result<()>| {
            r.map_err(|e| parse_err(format!("line {}: {what}: {e}", line_of(text, span))))
        };
        file.site = raw.site.into_iter().map(Spanned::into_inner).collect();
        for rec in raw.cell {
            let span = rec.span();
            let rec = rec.into_inner();
            let site = file.site.iter().find(|s| s.id == rec.site_id).copied();
            let res = match site {
                None => Err(Error::Config(format!("site_id {} is not listed", rec.site_id))),
                Some(s) => rec.to_cell(&s).and_then(|c| c.validate(&s.to_site())),
            };
            check(span, &format!("cell {}", rec.id), res)?;
            file.cell.push(rec);
        }
        for rec in raw.ue {
            let span = rec.span();
            let rec = rec.into_inner();
            let res = if rec.demand_prb == 0 {
                Err(Error::Config("demand_prb must be >= 1".into()))
            } else {
                Ok(())
            };
            check(span, &format!("ue {}", rec.id), res)?;
            file.ue.push(rec);
        }
        if !file.ue.is_empty() && file.cell.is_empty() {
            return Err(parse_err("[[ue]] records require an explicit [[cell]] listing".into()));
        }
        if !file.cell.is_empty() {
            file.deployment().map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(file)
    }

    pub fn is_explicit(&self) -> bool {
        !self.cell.is_empty()
    }

    /// Builds the deployment: the generator, or the explicit listing.
    pub fn deployment(&self) -> Result<Deployment> {
        if !self.is_explicit() {
            return Deployment::generate(&self.scenario);
        }
        let sites: Vec<Site> = self.site.iter().map(SiteRecord::to_site).collect();
        let mut cells = Vec::with_capacity(self.cell.len());
        for rec in &self.cell {
            let site = self
                .site
                .iter()
                .find(|s| s.id == rec.site_id)
                .ok_or_else(|| Error::Config(format!("cell {}: site_id {} is not listed", rec.id, rec.site_id)))?;
            cells.push(rec.to_cell(site)?);
        }
        let ues = (!self.ue.is_empty()).then(|| {
            self.ue
                .iter()
                .map(|u| UserTerminal {
                    id: u.id,
                    position: Point::new(u.x, u.y),
                    height_m: u.height_m.unwrap_or(self.scenario.ue_height_m),
                    indoor: u.indoor,
                    demand_prb: u.demand_prb,
                    hotspot_id: u.hotspot_id,
                    home_cell: u.home_cell,
                })
                .collect()
        });
        Deployment::explicit(self.scenario.clone(), sites, cells, ues)
    }

    /// Explicit listing of a deployment's active radios (and optionally UEs).
    pub fn from_topology(
        scenario: ScenarioConfig,
        model: ModelParams,
        sites: &[Site],
        cells: &[Cell],
        ues: Option<&[UserTerminal]>,
    ) -> Self {
        Self {
            scenario,
            model,
            site: sites.iter().map(SiteRecord::from_site).collect(),
            cell: cells.iter().map(CellRecord::from_cell).collect(),
            ue: ues
                .unwrap_or_default()
                .iter()
                .map(|u| UeRecord {
                    id: u.id,
                    x: u.position.x,
                    y: u.position.y,
                    indoor: u.indoor,
                    demand_prb: u.demand_prb,
                    height_m: Some(u.height_m),
                    hotspot_id: u.hotspot_id,
                    home_cell: u.home_cell,
                })
                .collect(),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize scenario: {e}")))
    }
}

impl SiteRecord {
    pub fn to_site(&self) -> Site {
        Site {
            id: self.id,
            position: Point::new(self.x, self.y),
            height_m: self.height_m,
            layer: self.layer,
        }
    }

    pub fn from_site(s: &Site) -> Self {
        Self {
            id: s.id,
            x: s.position.x,
            y: s.position.y,
            height_m: s.height_m,
            layer: s.layer,
        }
    }
}

impl CellRecord {
    pub fn to_cell(&self, site: &SiteRecord) -> Result<Cell> {
        let class = self.deployment_class.unwrap_or(match classify_model(site.height_m) {
            PropagationModel::UMa => DeploymentClass::UMa,
            PropagationModel::UMi => DeploymentClass::UMi,
        });
        let tilt = self.downtilt_deg.unwrap_or(class.default_downtilt_deg());
        Ok(Cell {
            id: self.id,
            site_id: self.site_id,
            azimuth_deg: self.azimuth_deg,
            technology: self.technology,
            carrier_ghz: self.carrier_ghz,
            bandwidth_mhz: self.bandwidth_mhz,
            n_prb: self.n_prb,
            n_trx: self.n_trx,
            tx_power_dbm: self.tx_power_dbm,
            array: ArrayGeometry::for_trx(self.n_trx, tilt)?,
            n_ssb_beams: self.n_ssb_beams,
            n_csirs_beams: self.n_csirs_beams,
            deployment_class: class,
            ue_count: self.ue_count,
            prb_used: self.prb_used.min(self.n_prb),
        })
    }

    pub fn from_cell(c: &Cell) -> Self {
        Self {
            id: c.id,
            site_id: c.site_id,
            technology: c.technology,
            azimuth_deg: c.azimuth_deg,
            carrier_ghz: c.carrier_ghz,
            bandwidth_mhz: c.bandwidth_mhz,
            n_prb: c.n_prb,
            n_trx: c.n_trx,
            tx_power_dbm: c.tx_power_dbm,
            n_ssb_beams: c.n_ssb_beams,
            n_csirs_beams: c.n_csirs_beams,
            deployment_class: Some(c.deployment_class),
            downtilt_deg: Some(c.array.downtilt_deg),
            ue_count: c.ue_count,
            prb_used: c.prb_used,
        }
    }
}

/// Reads a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    ScenarioFile::parse(&text, &path.display().to_string())
}

pub fn save_scenario(path: impl AsRef<Path>, file: &ScenarioFile) -> Result<()> {
    fs::write(path, file.to_toml()?)?;
    Ok(())
}
