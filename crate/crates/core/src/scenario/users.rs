use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::antenna::wrap_deg;
use crate::rng::{self, TAG_USERS};
use crate::sched::estimate_demand;
use crate::Result;

use super::{Cell, Deployment, Point, ServiceArea, Site, UserTerminal};

const GRID_STEP_M: f64 = 20.0;
const SAMPLE_ATTEMPTS: u32 = 100_000;
const CENTROID_SAMPLES: usize = 256;

/// Per-cell coverage regions: the Voronoi cell of the serving site among
/// sites of the same layer, cut to the cell's azimuth sector and the area.
#[derive(Debug, Clone)]
pub struct CoverageRegions {
    area: ServiceArea,
    entries: Vec<RegionEntry>,
    layers: BTreeMap<u8, Vec<(u32, Point)>>,
}

#[derive(Debug, Clone)]
struct RegionEntry {
    site_id: u32,
    layer: u8,
    origin: Point,
    azimuth_deg: f64,
    half_width_deg: f64,
    /// Bounding box (x0, y0, x1, y1), empty if the grid scan found nothing.
    bbox: Option<[f64; 4]>,
}

impl CoverageRegions {
    pub fn new(area: ServiceArea, sites: &[Site], cells: &[Cell]) -> Self {
        let mut layers: BTreeMap<u8, Vec<(u32, Point)>> = BTreeMap::new();
        for s in sites {
            layers.entry(s.layer.priority()).or_default().push((s.id, s.position));
        }
        // Sector width follows the number of distinct azimuths at the site.
        let mut azimuths: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
        for c in cells {
            let v = azimuths.entry(c.site_id).or_default();
            if v.iter().all(|a| wrap_deg(a - c.azimuth_deg).abs() > 1e-6) {
                v.push(c.azimuth_deg);
            }
        }
        let mut entries: Vec<RegionEntry> = cells
            .iter()
            .map(|c| {
                let site = sites.iter().find(|s| s.id == c.site_id).expect("cell site");
                let sectors = azimuths[&c.site_id].len().max(1);
                RegionEntry {
                    site_id: c.site_id,
                    layer: site.layer.priority(),
                    origin: site.position,
                    azimuth_deg: c.azimuth_deg,
                    half_width_deg: if sectors == 1 { 180.0 } else { 180.0 / sectors as f64 },
                    bbox: None,
                }
            })
            .collect();

        let mut regions = Self {
            area,
            entries: Vec::new(),
            layers,
        };
        let mut by_site: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            by_site.entry(e.site_id).or_default().push(i);
        }
        let nx = (area.width_m / GRID_STEP_M).ceil() as usize;
        let ny = (area.height_m / GRID_STEP_M).ceil() as usize;
        for ix in 0..=nx {
            for iy in 0..=ny {
                let p = Point::new(
                    (ix as f64 * GRID_STEP_M).min(area.width_m),
                    (iy as f64 * GRID_STEP_M).min(area.height_m),
                );
                for &layer in regions.layers.keys() {
                    let Some(site) = regions.nearest_site(layer, &p) else { continue };
                    for &i in by_site.get(&site).map(Vec::as_slice).unwrap_or(&[]) {
                        let e = &mut entries[i];
                        if e.layer == layer && in_sector(e, &p) {
                            let b = e.bbox.get_or_insert([p.x, p.y, p.x, p.y]);
                            b[0] = b[0].min(p.x);
                            b[1] = b[1].min(p.y);
                            b[2] = b[2].max(p.x);
                            b[3] = b[3].max(p.y);
                        }
                    }
                }
            }
        }
        let pad = 2.0 * GRID_STEP_M;
        for e in entries.iter_mut() {
            if let Some(b) = e.bbox.as_mut() {
                b[0] = (b[0] - pad).max(0.0);
                b[1] = (b[1] - pad).max(0.0);
                b[2] = (b[2] + pad).min(area.width_m);
                b[3] = (b[3] + pad).min(area.height_m);
            }
        }
        regions.entries = entries;
        regions
    }

    fn nearest_site(&self, layer: u8, p: &Point) -> Option<u32> {
        self.layers[&layer]
            .iter()
            .min_by(|a, b| a.1.distance(p).total_cmp(&b.1.distance(p)).then(a.0.cmp(&b.0)))
            .map(|s| s.0)
    }

    fn entry_contains(&self, e: &RegionEntry, p: &Point) -> bool {
        if !self.area.contains(p) || self.nearest_site(e.layer, p) != Some(e.site_id) {
            return false;
        }
        in_sector(e, p)
    }

    /// Whether `p` lies in the region of the `idx`-th cell.
    pub fn contains(&self, idx: usize, p: &Point) -> bool {
        self.entries.get(idx).is_some_and(|e| self.entry_contains(e, p))
    }

    /// Uniform point in the region, `None` if rejection sampling gives up.
    pub fn sample(&self, idx: usize, rng: &mut ChaCha8Rng) -> Option<Point> {
        let e = &self.entries[idx];
        let [x0, y0, x1, y1] = e.bbox.unwrap_or([0.0, 0.0, self.area.width_m, self.area.height_m]);
        for _ in 0..SAMPLE_ATTEMPTS {
            let p = Point::new(x0 + rng.random::<f64>() * (x1 - x0), y0 + rng.random::<f64>() * (y1 - y0));
            if self.entry_contains(e, &p) {
                return Some(p);
            }
        }
        None
    }

    /// Monte-Carlo centroid of the region.
    pub fn centroid(&self, idx: usize, rng: &mut ChaCha8Rng) -> Option<Point> {
        let mut sx = 0.0;
        let mut sy = 0.0;
        for _ in 0..CENTROID_SAMPLES {
            let p = self.sample(idx, rng)?;
            sx += p.x;
            sy += p.y;
        }
        let n = CENTROID_SAMPLES as f64;
        Some(Point::new(sx / n, sy / n))
    }

    /// Uniform point near the site, used when a region is too thin to hit.
    fn fallback(&self, idx: usize, rng: &mut ChaCha8Rng) -> Point {
        let o = self.entries[idx].origin;
        loop {
            let r = 50.0 * rng.random::<f64>().sqrt();
            let t = rng.random::<f64>() * std::f64::consts::TAU;
            let p = Point::new(o.x + r * t.cos(), o.y + r * t.sin());
            if self.area.contains(&p) {
                return p;
            }
        }
    }
}

fn in_sector(e: &RegionEntry, p: &Point) -> bool {
    if e.half_width_deg >= 180.0 || e.origin.distance(p) < 1e-9 {
        return true;
    }
    wrap_deg(e.origin.bearing_deg(p) - e.azimuth_deg).abs() <= e.half_width_deg
}

/// Drops the UE population for one snapshot: the baseline users of every
/// legacy cell inside its coverage region plus the hotspot clusters.
///
/// Positions and indoor flags are redrawn per snapshot; per-cell counts and
/// demand come from the deployment's traffic statistics.
pub fn drop_users(deployment: &Deployment, snapshot: u64) -> Result<Vec<UserTerminal>> {
    if let Some(ues) = &deployment.explicit_ues {
        return Ok(ues.clone());
    }
    let config = &deployment.config;
    let mut rng = rng::stream(config.seed, &[TAG_USERS, snapshot]);
    let p_indoor = config.indoor_probability.get();
    let legacy: Vec<Cell> = deployment.legacy_cells().cloned().collect();
    let sites: Vec<Site> = deployment
        .sites
        .iter()
        .filter(|s| legacy.iter().any(|c| c.site_id == s.id))
        .copied()
        .collect();
    let regions = CoverageRegions::new(deployment.area, &sites, &legacy);

    let demand_of = |c: &Cell| estimate_demand(c.prb_used, c.ue_count).unwrap_or(1);
    let mut ues = Vec::new();
    for (idx, cell) in legacy.iter().enumerate() {
        let demand = demand_of(cell);
        for _ in 0..cell.ue_count {
            let position = regions
                .sample(idx, &mut rng)
                .unwrap_or_else(|| regions.fallback(idx, &mut rng));
            ues.push(UserTerminal {
                id: ues.len() as u32,
                position,
                height_m: config.ue_height_m,
                indoor: rng.random::<f64>() < p_indoor,
                demand_prb: demand,
                hotspot_id: None,
                home_cell: Some(cell.id),
            });
        }
    }

    let radius = config.hotspots.radius_m;
    for h in &deployment.hotspots {
        let host = legacy.iter().find(|c| c.id == h.host_cell).expect("hotspot host");
        let demand = demand_of(host);
        for _ in 0..config.hotspots.ues_per_hotspot {
            let position = loop {
                let r = radius * rng.random::<f64>().sqrt();
                let t = rng.random::<f64>() * std::f64::consts::TAU;
                let p = Point::new(h.center.x + r * t.cos(), h.center.y + r * t.sin());
                if deployment.area.contains(&p) {
                    break p;
                }
            };
            ues.push(UserTerminal {
                id: ues.len() as u32,
                position,
                height_m: config.ue_height_m,
                indoor: rng.random::<f64>() < p_indoor,
                demand_prb: demand,
                hotspot_id: Some(h.id),
                home_cell: Some(host.id),
            });
        }
    }
    Ok(ues)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Technology;

    fn site(id: u32, x: f64, y: f64) -> Site {
        Site {
            id,
            position: Point::new(x, y),
            height_m: 25.0,
            layer: Technology::FourG,
        }
    }

    #[test]
    fn voronoi_and_sector_membership() {
        let area = ServiceArea {
            width_m: 1000.0,
            height_m: 1000.0,
        };
        let sites = [site(0, 250.0, 500.0), site(1, 750.0, 500.0)];
        let mk = |id, site_id, az| {
            let mut c = crate::scenario::tests_support::cell(id, site_id);
            c.azimuth_deg = az;
            c
        };
        let cells = vec![mk(0, 0, 0.0), mk(1, 0, 120.0), mk(2, 0, 240.0), mk(3, 1, 0.0)];
        let r = CoverageRegions::new(area, &sites, &cells);
        // East of site 0 but nearer site 1.
        assert!(!r.contains(0, &Point::new(600.0, 500.0)));
        assert!(r.contains(0, &Point::new(400.0, 500.0)));
        // North of site 0 sits in the 120-degree sector.
        assert!(r.contains(1, &Point::new(200.0, 800.0)));
        assert!(!r.contains(0, &Point::new(200.0, 800.0)));
        // A lone single-sector cell covers its full Voronoi cell.
        assert!(r.contains(3, &Point::new(900.0, 100.0)));
        let mut rng = rng::stream(3, &[1]);
        for _ in 0..200 {
            let p = r.sample(2, &mut rng).unwrap();
            assert!(r.contains(2, &p));
        }
    }
}
