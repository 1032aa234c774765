use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::antenna::ArrayGeometry;
use crate::channel::{classify_model, PropagationModel};
use crate::rng::{self, TAG_HOTSPOT, TAG_LTE, TAG_NR, TAG_SIXG, TAG_TRAFFIC};
use crate::{Error, Result};

use super::users::CoverageRegions;
use super::{
    Cell, DeploymentClass, Hotspot, Point, ScenarioConfig, ServiceArea, Site, SixGConfig, Strategy, Technology,
    Topology, UserTerminal,
};

const SITE_PLACEMENT_ATTEMPTS: u32 = 200_000;

/// LTE radios refine over at most 8 CSI-RS beams whatever their TRX count.
const LTE_MAX_CSIRS_BEAMS: u32 = 8;

/// Location and orientation of a non-co-located 6G radio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SixGAnchor {
    pub position: Point,
    pub azimuth_deg: f64,
}

/// Everything fixed for a seed: legacy layers, traffic, hotspots and the
/// candidate 6G locations. Strategies only choose which radios are active.
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub config: ScenarioConfig,
    pub area: ServiceArea,
    /// Legacy sites (4G then 5G), or every site of an explicit listing.
    pub sites: Vec<Site>,
    /// Legacy cells (4G then 5G), or every cell of an explicit listing.
    pub cells: Vec<Cell>,
    pub hotspots: Vec<Hotspot>,
    pub sixg_anchors: Vec<SixGAnchor>,
    /// Explicit listings bypass strategy selection.
    pub explicit: bool,
    /// Fixed UE population from an explicit listing.
    pub explicit_ues: Option<Vec<UserTerminal>>,
}

/// Generates the topology active under `config.strategy`.
pub fn generate_topology(config: &ScenarioConfig) -> Result<Topology> {
    Deployment::generate(config)?.topology(config.strategy, config.sixg)
}

impl Deployment {
    pub fn generate(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let area = ServiceArea::from_km2(config.area.area_km2, config.area.aspect_ratio)?;

        let mut rng = rng::stream(config.seed, &[TAG_LTE]);
        let (lte_sites, lte_cells) = build_lte(config, &area, &mut rng)?;

        let mut rng = rng::stream(config.seed, &[TAG_NR]);
        let lte_points: Vec<Point> = lte_sites.iter().map(|s| s.position).collect();
        let (nr_sites, nr_cells) = build_nr(config, &area, &lte_points, lte_sites.len() as u32, lte_cells.len() as u32, &mut rng)?;

        let mut sites = lte_sites;
        sites.extend(nr_sites);
        let mut cells = lte_cells;
        cells.extend(nr_cells);

        let mut rng = rng::stream(config.seed, &[TAG_TRAFFIC]);
        assign_traffic(config, &mut cells, &mut rng);

        let regions = CoverageRegions::new(area, &sites, &cells);
        let mut rng = rng::stream(config.seed, &[TAG_HOTSPOT]);
        let hotspots = place_hotspots(config, &cells, &regions, &mut rng)?;

        let mut rng = rng::stream(config.seed, &[TAG_SIXG]);
        let sixg_anchors = place_sixg_anchors(config, &cells, &hotspots, &regions, &mut rng)?;

        Ok(Self {
            config: config.clone(),
            area,
            sites,
            cells,
            hotspots,
            sixg_anchors,
            explicit: false,
            explicit_ues: None,
        })
    }

    /// Wraps an explicit site/cell (and optionally UE) listing.
    pub fn explicit(
        config: ScenarioConfig,
        sites: Vec<Site>,
        cells: Vec<Cell>,
        ues: Option<Vec<UserTerminal>>,
    ) -> Result<Self> {
        let area = ServiceArea::from_km2(config.area.area_km2, config.area.aspect_ratio)?;
        let topo = Topology {
            area,
            sites: sites.clone(),
            cells: cells.clone(),
            hotspots: Vec::new(),
        };
        topo.validate()?;
        if let Some(ues) = &ues {
            for u in ues {
                if u.demand_prb == 0 {
                    return Err(Error::Config(format!("ue {}: demand_prb must be >= 1", u.id)));
                }
            }
        }
        Ok(Self {
            config,
            area,
            sites,
            cells,
            hotspots: Vec::new(),
            sixg_anchors: Vec::new(),
            explicit: true,
            explicit_ues: ues,
        })
    }

    pub fn legacy_cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| c.technology != Technology::SixG)
    }

    /// Radios active under `strategy` with the given 6G radio block.
    pub fn topology(&self, strategy: Strategy, sixg: SixGConfig) -> Result<Topology> {
        if self.explicit {
            return Ok(Topology {
                area: self.area,
                sites: self.sites.clone(),
                cells: self.cells.clone(),
                hotspots: self.hotspots.clone(),
            });
        }
        let keep = |t: Technology| t == Technology::FourG || (t == Technology::FiveG && strategy.has_five_g());
        let mut sites: Vec<Site> = self.sites.iter().filter(|s| keep(s.layer)).copied().collect();
        let mut cells: Vec<Cell> = self.cells.iter().filter(|c| keep(c.technology)).cloned().collect();
        if strategy.has_six_g() {
            let (new_sites, new_cells) = self.sixg_layer(strategy, sixg)?;
            sites.extend(new_sites);
            cells.extend(new_cells);
        }
        let topo = Topology {
            area: self.area,
            sites,
            cells,
            hotspots: self.hotspots.clone(),
        };
        topo.validate()?;
        Ok(topo)
    }

    fn sixg_layer(&self, strategy: Strategy, sixg: SixGConfig) -> Result<(Vec<Site>, Vec<Cell>)> {
        let layer = &self.config.sixg_layer;
        let boost = if sixg.bandwidth_mhz >= 400 {
            layer.wideband_power_boost_db
        } else {
            0.0
        };
        let first_cell = self.cells.iter().map(|c| c.id + 1).max().unwrap_or(0);
        let first_site = self.sites.iter().map(|s| s.id + 1).max().unwrap_or(0);
        let make_cell = |id: u32, site_id: u32, azimuth_deg: f64, class: DeploymentClass| -> Result<Cell> {
            let power = match class {
                DeploymentClass::UPi => layer.pico_tx_power_dbm,
                _ => layer.macro_tx_power_dbm,
            };
            Ok(Cell {
                id,
                site_id,
                azimuth_deg,
                technology: Technology::SixG,
                carrier_ghz: layer.carrier_ghz,
                bandwidth_mhz: sixg.bandwidth_mhz as f64,
                n_prb: layer.n_prb,
                n_trx: sixg.n_trx,
                tx_power_dbm: power + boost,
                array: ArrayGeometry::for_trx(sixg.n_trx, class.default_downtilt_deg())?,
                n_ssb_beams: sixg.n_ssb_beams(),
                n_csirs_beams: sixg.n_csirs_beams(),
                deployment_class: class,
                ue_count: 0,
                prb_used: 0,
            })
        };

        let mut sites = Vec::new();
        let mut cells = Vec::new();
        match strategy {
            Strategy::CoLoc6GUMa => {
                for nr in self.cells.iter().filter(|c| c.technology == Technology::FiveG) {
                    let site = self.sites.iter().find(|s| s.id == nr.site_id).expect("nr site");
                    let class = match classify_model(site.height_m) {
                        PropagationModel::UMa => DeploymentClass::UMa,
                        PropagationModel::UMi => DeploymentClass::UMi,
                    };
                    cells.push(make_cell(first_cell + cells.len() as u32, nr.site_id, nr.azimuth_deg, class)?);
                }
            }
            Strategy::NonCoLoc6GUMi | Strategy::NonCoLoc6GUPi => {
                let (class, height) = if strategy == Strategy::NonCoLoc6GUMi {
                    (DeploymentClass::UMi, layer.umi_height_m)
                } else {
                    (DeploymentClass::UPi, layer.upi_height_m)
                };
                for (i, a) in self.sixg_anchors.iter().enumerate() {
                    let site_id = first_site + i as u32;
                    sites.push(Site {
                        id: site_id,
                        position: a.position,
                        height_m: height,
                        layer: Technology::SixG,
                    });
                    cells.push(make_cell(first_cell + i as u32, site_id, a.azimuth_deg, class)?);
                }
            }
            Strategy::FourG | Strategy::FourGFiveG => {}
        }
        Ok((sites, cells))
    }
}

/// Largest-remainder apportionment of `total` over `weights`; ties go to
/// the lower index.
pub(crate) fn apportion(total: u32, weights: &[f64]) -> Vec<u32> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut out: Vec<u32> = exact.iter().map(|e| e.floor() as u32).collect();
    let assigned: u32 = out.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned) as usize) {
        out[i] += 1;
    }
    out
}

fn place_sites(
    rng: &mut ChaCha8Rng,
    area: &ServiceArea,
    n: u32,
    min_dist: f64,
    avoid: &[Point],
    avoid_dist: f64,
    layer: &str,
) -> Result<Vec<Point>> {
    let mut placed: Vec<Point> = Vec::with_capacity(n as usize);
    let mut attempts = 0u32;
    while placed.len() < n as usize {
        if attempts >= SITE_PLACEMENT_ATTEMPTS {
            return Err(Error::Config(format!(
                "area of {:.2} km2 too small to place {n} {layer} sites {min_dist} m apart \
                 (placed {})",
                area.area_km2(),
                placed.len()
            )));
        }
        attempts += 1;
        let p = Point::new(rng.random::<f64>() * area.width_m, rng.random::<f64>() * area.height_m);
        if placed.iter().all(|q| q.distance(&p) >= min_dist) && avoid.iter().all(|q| q.distance(&p) >= avoid_dist) {
            placed.push(p);
        }
    }
    Ok(placed)
}

fn class_for_height(h: f64) -> DeploymentClass {
    match classify_model(h) {
        PropagationModel::UMa => DeploymentClass::UMa,
        PropagationModel::UMi => DeploymentClass::UMi,
    }
}

fn sector_offsets(rng: &mut ChaCha8Rng, sectors: u32) -> Vec<f64> {
    let step = 360.0 / sectors as f64;
    let base = rng.random::<f64>() * step;
    (0..sectors).map(|k| base + step * k as f64).collect()
}

fn build_lte(config: &ScenarioConfig, area: &ServiceArea, rng: &mut ChaCha8Rng) -> Result<(Vec<Site>, Vec<Cell>)> {
    let lte = &config.lte;
    let points = place_sites(rng, area, lte.n_sites, lte.min_site_distance_m, &[], 0.0, "4G")?;
    let sites: Vec<Site> = points
        .iter()
        .enumerate()
        .map(|(i, &position)| Site {
            id: i as u32,
            position,
            height_m: rng.random_range(lte.height_range_m[0]..=lte.height_range_m[1]),
            layer: Technology::FourG,
        })
        .collect();

    // Band groups per site: one each, then the surplus spread over sites
    // that still have a free band.
    let n_bands = lte.bands_ghz.len() as u32;
    let mut groups = vec![1u32; sites.len()];
    let surplus = lte.n_cells / lte.sectors_per_site - lte.n_sites;
    for _ in 0..surplus {
        let open: Vec<usize> = (0..sites.len()).filter(|&i| groups[i] < n_bands).collect();
        let pick = open[rng.random_range(0..open.len())];
        groups[pick] += 1;
    }

    let mut cells = Vec::with_capacity(lte.n_cells as usize);
    for (site, &n_groups) in sites.iter().zip(&groups) {
        let mut bands: Vec<usize> = (0..lte.bands_ghz.len()).collect();
        bands.shuffle(rng);
        let mut chosen: Vec<usize> = bands[..n_groups as usize].to_vec();
        chosen.sort_unstable();
        let azimuths = sector_offsets(rng, lte.sectors_per_site);
        let class = class_for_height(site.height_m);
        for &b in &chosen {
            for &az in &azimuths {
                cells.push(Cell {
                    id: cells.len() as u32,
                    site_id: site.id,
                    azimuth_deg: az,
                    technology: Technology::FourG,
                    carrier_ghz: lte.bands_ghz[b],
                    bandwidth_mhz: lte.bandwidth_mhz,
                    n_prb: lte.n_prb,
                    n_trx: 0,
                    tx_power_dbm: 0.0,
                    array: ArrayGeometry::panel(1, 1),
                    n_ssb_beams: 1,
                    n_csirs_beams: 0,
                    deployment_class: class,
                    ue_count: 0,
                    prb_used: 0,
                });
            }
        }
    }

    let n = cells.len();
    let mut narrow: Vec<usize> = (0..n).collect();
    narrow.shuffle(rng);
    for &i in &narrow[..lte.narrow_cells as usize] {
        cells[i].bandwidth_mhz = lte.narrow_bandwidth_mhz;
        cells[i].n_prb = lte.narrow_n_prb;
    }

    for (cell, p) in cells.iter_mut().zip(stratified(rng, n, |q| lte.tx_power.quantile(q))) {
        cell.tx_power_dbm = p;
    }

    let shares: Vec<f64> = lte.trx_mix.iter().map(|t| t.share).collect();
    let mut trx: Vec<u32> = apportion(n as u32, &shares)
        .iter()
        .zip(&lte.trx_mix)
        .flat_map(|(&k, t)| std::iter::repeat_n(t.n_trx, k as usize))
        .collect();
    trx.shuffle(rng);
    for (cell, t) in cells.iter_mut().zip(trx) {
        cell.n_trx = t;
        cell.n_csirs_beams = t.min(LTE_MAX_CSIRS_BEAMS);
        cell.array = ArrayGeometry::for_trx(t, cell.deployment_class.default_downtilt_deg())?;
    }
    Ok((sites, cells))
}

fn build_nr(
    config: &ScenarioConfig,
    area: &ServiceArea,
    lte_points: &[Point],
    first_site: u32,
    first_cell: u32,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Site>, Vec<Cell>)> {
    let nr = &config.nr;
    let points = place_sites(
        rng,
        area,
        nr.n_sites,
        nr.min_site_distance_m,
        lte_points,
        nr.min_distance_to_lte_m,
        "5G",
    )?;
    let sites: Vec<Site> = points
        .iter()
        .enumerate()
        .map(|(i, &position)| Site {
            id: first_site + i as u32,
            position,
            height_m: rng.random_range(nr.height_range_m[0]..=nr.height_range_m[1]),
            layer: Technology::FiveG,
        })
        .collect();
    let mut cells = Vec::new();
    for site in &sites {
        let class = class_for_height(site.height_m);
        for az in sector_offsets(rng, nr.sectors_per_site) {
            cells.push(Cell {
                id: first_cell + cells.len() as u32,
                site_id: site.id,
                azimuth_deg: az,
                technology: Technology::FiveG,
                carrier_ghz: nr.carrier_ghz,
                bandwidth_mhz: nr.bandwidth_mhz,
                n_prb: nr.n_prb,
                n_trx: nr.n_trx,
                tx_power_dbm: 0.0,
                array: ArrayGeometry::for_trx(nr.n_trx, class.default_downtilt_deg())?,
                n_ssb_beams: nr.n_ssb_beams,
                n_csirs_beams: nr.n_csirs_beams,
                deployment_class: class,
                ue_count: 0,
                prb_used: 0,
            });
        }
    }
    let n = cells.len();
    for (cell, p) in cells.iter_mut().zip(stratified(rng, n, |q| nr.tx_power.quantile(q))) {
        cell.tx_power_dbm = p;
    }
    Ok((sites, cells))
}

/// One draw per equal-probability stratum, shuffled across cells.
fn stratified(rng: &mut ChaCha8Rng, n: usize, quantile: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|i| quantile((i as f64 + rng.random::<f64>()) / n as f64))
        .collect();
    v.shuffle(rng);
    v
}

fn assign_traffic(config: &ScenarioConfig, cells: &mut [Cell], rng: &mut ChaCha8Rng) {
    let t = &config.traffic;
    let n = cells.len();
    // Draw both series unconditionally so overrides never shift the stream.
    let weights: Vec<f64> = (0..n)
        .map(|_| (t.ue_count_sigma * rng.sample::<f64, _>(StandardNormal)).exp())
        .collect();
    let utilization: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            (t.prb_utilization_median * (t.prb_utilization_sigma * z).exp()).clamp(0.01, 1.0)
        })
        .collect();

    let counts = match &t.ue_counts {
        Some(v) => v.clone(),
        None => {
            let floor = (t.baseline_ues as usize).min(n) as u32;
            let mut c = apportion(t.baseline_ues - floor, &weights);
            if floor as usize == n {
                c.iter_mut().for_each(|x| *x += 1);
            }
            c
        }
    };
    for (i, cell) in cells.iter_mut().enumerate() {
        cell.ue_count = counts[i];
        cell.prb_used = match &t.prb_used {
            Some(v) => v[i].min(cell.n_prb),
            None => ((utilization[i] * cell.n_prb as f64).round() as u32).clamp(1, cell.n_prb),
        };
    }
}

/// Ranks cells by baseline UE count, heaviest first, ties to the lower id.
fn by_load(cells: &[Cell]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&a, &b| cells[b].ue_count.cmp(&cells[a].ue_count).then(cells[a].id.cmp(&cells[b].id)));
    order
}

fn place_hotspots(
    config: &ScenarioConfig,
    cells: &[Cell],
    regions: &CoverageRegions,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Hotspot>> {
    let hs = &config.hotspots;
    let mut out: Vec<Hotspot> = Vec::with_capacity(hs.count as usize);
    for &ci in by_load(cells).iter().take(hs.count as usize) {
        let cell = &cells[ci];
        let mut found = None;
        for _ in 0..hs.max_attempts {
            let Some(p) = regions.sample(ci, rng) else { break };
            if out.iter().all(|h| h.center.distance(&p) >= hs.min_separation_m) {
                found = Some(p);
                break;
            }
        }
        let center = found.ok_or_else(|| {
            Error::Generation(format!(
                "could not place hotspot {} in cell {} ({} UEs) at least {} m from {} earlier \
                 hotspots after {} attempts",
                out.len(),
                cell.id,
                cell.ue_count,
                hs.min_separation_m,
                out.len(),
                hs.max_attempts
            ))
        })?;
        out.push(Hotspot {
            id: out.len() as u32,
            center,
            host_cell: cell.id,
        });
    }
    Ok(out)
}

/// Non-co-located 6G radios: one at each hotspot center, then one at the
/// coverage centroid of each next most loaded legacy cell.
fn place_sixg_anchors(
    config: &ScenarioConfig,
    cells: &[Cell],
    hotspots: &[Hotspot],
    regions: &CoverageRegions,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<SixGAnchor>> {
    let want = config.sixg_layer.n_cells as usize;
    let min_d = config.sixg_layer.min_site_distance_m;
    let azimuth_of = |id: u32| cells.iter().find(|c| c.id == id).map_or(0.0, |c| c.azimuth_deg);
    let mut anchors: Vec<SixGAnchor> = hotspots
        .iter()
        .take(want)
        .map(|h| SixGAnchor {
            position: h.center,
            azimuth_deg: azimuth_of(h.host_cell),
        })
        .collect();
    let hosts: Vec<u32> = hotspots.iter().map(|h| h.host_cell).collect();
    let far = |p: &Point, a: &[SixGAnchor]| a.iter().all(|x| x.position.distance(p) >= min_d);
    for ci in by_load(cells) {
        if anchors.len() >= want {
            break;
        }
        if hosts.contains(&cells[ci].id) {
            continue;
        }
        let mut pos = regions.centroid(ci, rng).filter(|p| far(p, &anchors));
        for _ in 0..config.hotspots.max_attempts {
            if pos.is_some() {
                break;
            }
            pos = regions.sample(ci, rng).filter(|p| far(p, &anchors));
        }
        if let Some(position) = pos {
            anchors.push(SixGAnchor {
                position,
                azimuth_deg: cells[ci].azimuth_deg,
            });
        }
    }
    if anchors.len() < want {
        return Err(Error::Generation(format!(
            "placed only {} of {want} non-co-located 6G sites {min_d} m apart",
            anchors.len()
        )));
    }
    Ok(anchors)
}
