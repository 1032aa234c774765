#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hetsim::antenna::ArrayGeometry;
use hetsim::engine::{self, ModelParams, Network, UeState};
use hetsim::par::Execution;
use hetsim::scenario::{Cell, DeploymentClass, Point, ServiceArea, Site, Technology, Topology, UserTerminal};
use hetsim::sched::Allocation;

/// Three single-cell sites on one carrier, facing the middle of a 600 m square.
pub fn three_cells(seed: u64, technology: Technology) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (carrier, n_trx, class, height, bw, n_prb) = match technology {
        Technology::FourG => (1.815, 8, DeploymentClass::UMa, 25.0, 20.0, 100),
        Technology::FiveG => (2.703, 64, DeploymentClass::UMa, 25.0, 100.0, 273),
        Technology::SixG => (10.0, 64, DeploymentClass::UMi, 10.0, 200.0, 273),
    };
    let anchors = [(150.0, 150.0, 30.0), (450.0, 180.0, 150.0), (300.0, 450.0, 270.0)];
    let sites = anchors
        .iter()
        .enumerate()
        .map(|(i, &(x, y, _))| Site {
            id: i as u32,
            position: Point::new(x, y),
            height_m: height,
            layer: technology,
        })
        .collect();
    let cells = anchors
        .iter()
        .enumerate()
        .map(|(i, &(_, _, az))| Cell {
            id: 10 + i as u32,
            site_id: i as u32,
            azimuth_deg: az,
            technology,
            carrier_ghz: carrier,
            bandwidth_mhz: bw,
            n_prb,
            n_trx,
            tx_power_dbm: rng.random_range(40.0..50.0),
            array: ArrayGeometry::for_trx(n_trx, class.default_downtilt_deg()).unwrap(),
            n_ssb_beams: if n_trx > 8 { 8 } else { 1 },
            n_csirs_beams: n_trx.min(32),
            deployment_class: class,
            ue_count: 0,
            prb_used: 0,
        })
        .collect();
    Topology {
        area: ServiceArea::from_km2(0.36, 1.0).unwrap(),
        sites,
        cells,
        hotspots: Vec::new(),
    }
}

pub fn random_ues(seed: u64, n: u32, max_demand: u32) -> Vec<UserTerminal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
    (0..n)
        .map(|id| UserTerminal {
            id,
            position: Point::new(rng.random_range(0.0..600.0), rng.random_range(0.0..600.0)),
            height_m: 1.5,
            indoor: rng.random_bool(0.5),
            demand_prb: rng.random_range(1..=max_demand),
            hotspot_id: None,
            home_cell: None,
        })
        .collect()
}

/// Default model with thresholds and detection disabled, so every UE attaches.
pub fn permissive() -> ModelParams {
    let mut p = ModelParams::default();
    p.assoc.five_g_threshold_dbm = -400.0;
    p.assoc.six_g_threshold_dbm = -400.0;
    p.assoc.detection_snr_db = -400.0;
    p
}

pub struct Snapshot {
    pub net: Network,
    pub params: ModelParams,
    pub states: Vec<UeState>,
    pub allocation: Allocation,
}

pub fn snapshot(topology: Topology, ues: &[UserTerminal], params: ModelParams, seed: u64) -> Snapshot {
    let net = Network::new(topology, &params).unwrap();
    let states: Vec<UeState> = ues.iter().map(|u| net.attach(u, &params, seed, 0)).collect();
    let allocation = engine::schedule(&net, &states, seed, 0, Execution::Sequential);
    Snapshot {
        net,
        params,
        states,
        allocation,
    }
}
