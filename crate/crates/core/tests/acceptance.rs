//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the lines are printed even when everything
//! passes. The strategy sweep behind criteria 8 and 9 uses the seeds in
//! `HETSIM_ACCEPT_SEEDS` (comma separated, default `1,2`) with 10 snapshots
//! each.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hetsim::antenna::{beam_gain_db, build_codebook, ArrayGeometry, BeamKind, Direction};
use hetsim::assoc::{associate, AssocParams, Measurement};
use hetsim::channel::{pathloss, PropagationModel};
use hetsim::engine::{self, ModelParams, Network, RunSpec};
use hetsim::link::{effective_sinr, per_prb_sinr};
use hetsim::par::Execution;
use hetsim::power::{radio_power, PowerPresets};
use hetsim::scenario::{
    Cell, Deployment, DeploymentClass, Point, ScenarioFile, ServiceArea, Site, SixGConfig, Strategy, Technology, Topology,
    UserTerminal,
};
use hetsim::sched::{allocate, Request};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn lin(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

// ---------------------------------------------------------------------------
// 1. Codebooks

/// (n_trx, downtilt bits, is CSI-RS, size) of every codebook in use, plus
/// the critically sampled CSI-RS codebook of each radio.
fn shipped_codebooks() -> BTreeSet<(u32, u64, bool, usize)> {
    let mut set = BTreeSet::new();
    let file = ScenarioFile::default();
    let deployment = file.deployment().expect("default deployment");
    for bw in [200, 400] {
        for trx in [128, 256] {
            let sixg = SixGConfig::new(bw, trx).unwrap();
            for s in Strategy::ALL {
                let topo = deployment.topology(s, sixg).unwrap();
                for c in &topo.cells {
                    let tilt = c.array.downtilt_deg.to_bits();
                    set.insert((c.n_trx, tilt, false, c.n_ssb_beams as usize));
                    set.insert((c.n_trx, tilt, true, c.n_csirs_beams as usize));
                    let ports = c.array.ports_per_panel();
                    set.insert((c.n_trx, tilt, true, ports));
                }
            }
        }
    }
    set
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let mut worst_norm: f64 = 0.0;
    let mut worst_parseval: f64 = 0.0;
    let books = shipped_codebooks();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0DE);
    for &(n_trx, tilt, csirs, size) in &books {
        let kind = if csirs { BeamKind::CsiRs } else { BeamKind::Ssb };
        let array = ArrayGeometry::for_trx(n_trx, f64::from_bits(tilt)).unwrap();
        let cb = build_codebook(&array, kind, size).unwrap();
        assert_eq!(cb.len(), size);
        for cw in &cb.codewords {
            let n: f64 = cw.weights.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
            worst_norm = worst_norm.max((n - 1.0).abs());
        }
        let critical = kind == BeamKind::CsiRs && size == array.ports_per_panel();
        if critical {
            for _ in 0..1000 {
                let dir = Direction::new(rng.random_range(-180.0..180.0), rng.random_range(-90.0..90.0));
                let a = array.steering_vector(dir);
                let a_norm: f64 = a.iter().map(|z| z.norm_sqr()).sum();
                let total: f64 = cb
                    .codewords
                    .iter()
                    .map(|cw| a.iter().zip(&cw.weights).map(|(a, w)| a.conj() * w).sum::<Complex64>().norm_sqr())
                    .sum();
                worst_parseval = worst_parseval.max((total - a_norm).abs());
            }
        }
    }
    let elapsed = t0.elapsed();
    Outcome::new(
        worst_norm <= 1e-12 && worst_parseval <= 1e-9 && elapsed < Duration::from_secs(10),
        format!(
            "{} codebooks, max |norm-1| = {worst_norm:.1e} (<= 1e-12), max Parseval error = {worst_parseval:.1e} (<= 1e-9), {elapsed:.2?} (< 10 s)",
            books.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// 2. Pathloss frequency gap

fn criterion_2() -> Outcome {
    let expected = 20.0 * (10.0f64 / 3.5).log10();
    let mut worst: f64 = 0.0;
    // Breakpoint at 3.5 GHz with a 25 m mast is about 560 m.
    for d in (10..=500).step_by(7) {
        let d = d as f64;
        let hi = pathloss(PropagationModel::UMa, true, 10.0, d, 25.0, 1.5).db;
        let lo = pathloss(PropagationModel::UMa, true, 3.5, d, 25.0, 1.5).db;
        worst = worst.max((hi - lo - 9.12).abs());
    }
    Outcome::new(
        worst <= 0.01,
        format!("gap = {expected:.4} dB, max |gap - 9.12| = {worst:.4} dB (<= 0.01)"),
    )
}

// ---------------------------------------------------------------------------
// 3. SINR against exhaustive enumeration

fn oracle_topology(rng: &mut ChaCha8Rng, technology: Technology, widths: &[(f64, u32)]) -> Topology {
    let area = ServiceArea::from_km2(0.36, 1.0).unwrap();
    let (carrier, n_trx, class, height) = match technology {
        Technology::FourG => (1.815, 8, DeploymentClass::UMa, 25.0),
        _ => (10.0, 64, DeploymentClass::UMi, 10.0),
    };
    let anchors = [(150.0, 150.0, 30.0), (450.0, 180.0, 150.0), (300.0, 450.0, 270.0)];
    let mut sites = Vec::new();
    let mut cells = Vec::new();
    for (i, &(x, y, az)) in anchors.iter().enumerate() {
        let (bw, n_prb) = widths[i % widths.len()];
        sites.push(Site {
            id: i as u32,
            position: Point::new(x, y),
            height_m: height,
            layer: technology,
        });
        cells.push(Cell {
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
        });
    }
    Topology {
        area,
        sites,
        cells,
        hotspots: Vec::new(),
    }
}

fn oracle_ues(rng: &mut ChaCha8Rng, n_prb: u32) -> Vec<UserTerminal> {
    (0..10)
        .map(|id| UserTerminal {
            id,
            position: Point::new(rng.random_range(0.0..600.0), rng.random_range(0.0..600.0)),
            height_m: 1.5,
            indoor: rng.random_bool(0.5),
            demand_prb: rng.random_range(1..=n_prb),
            hotspot_id: None,
            home_cell: None,
        })
        .collect()
}

/// Center frequency offset of PRB `p` from the carrier center, in PRB widths.
fn prb_center(p: u32, n_prb: u32) -> f64 {
    p as f64 + 0.5 - n_prb as f64 / 2.0
}

/// Maximum relative error over every allocated (UE, PRB, layer).
fn sinr_oracle_error(technology: Technology, widths: &[(f64, u32)], seed: u64) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topo = oracle_topology(&mut rng, technology, widths);
    let max_prb = topo.cells.iter().map(|c| c.n_prb).max().unwrap();
    let ues = oracle_ues(&mut rng, max_prb);
    let mut params = ModelParams::default();
    // Keep every UE attached regardless of the reselection thresholds.
    params.assoc.five_g_threshold_dbm = -400.0;
    params.assoc.six_g_threshold_dbm = -400.0;
    params.assoc.detection_snr_db = -400.0;
    let net = Network::new(topo, &params).unwrap();
    let states: Vec<_> = ues.iter().map(|u| net.attach(u, &params, seed, 0)).collect();
    let allocation = engine::schedule(&net, &states, seed, 0, Execution::Sequential);
    let txs = engine::transmitters(&net, &allocation);
    let views = engine::ue_views(&net, states, &allocation);
    let cells = net.cells();
    let noise_figure = params.link.noise_figure_db;

    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (_, att, view) in &views {
        let (Some(att), Some(view)) = (att, view) else { continue };
        let s = net.cell_index(att.cell_id).unwrap();
        let serving = &cells[s];
        for &p in &view.prbs {
            for layer in 0..2 {
                let mut signal = 0.0;
                let mut interference = 0.0;
                for b in &allocation.beams {
                    let j = net.cell_index(b.cell_id).unwrap();
                    let cell = &cells[j];
                    if cell.technology != serving.technology || cell.carrier_ghz != serving.carrier_ghz {
                        continue;
                    }
                    let f = prb_center(p, serving.n_prb);
                    let Some(q) = (0..cell.n_prb).find(|&q| prb_center(q, cell.n_prb) == f) else {
                        continue;
                    };
                    let streams = allocation
                        .beams
                        .iter()
                        .filter(|o| o.cell_id == cell.id)
                        .flat_map(|o| &o.grants)
                        .filter(|g| g.prbs.contains(&q))
                        .count();
                    let ul = view
                        .links
                        .iter()
                        .find(|l| l.tx == j)
                        .expect("every co-channel cell is linked");
                    let beam = if layer == 0 { b.beam_pair.0 } else { b.beam_pair.1 };
                    let cw = &net.csirs[j].codewords[beam];
                    let dir = Direction::new(
                        ((ul.link.azimuth_deg - cell.azimuth_deg + 540.0) % 360.0) - 180.0,
                        ul.link.elevation_deg + cell.array.downtilt_deg,
                    );
                    let gain = lin(beam_gain_db(&cell.array, cw, dir));
                    let loss = lin(-(ul.link.pathloss_db + ul.link.shadowing_db + ul.link.o2i_db));
                    let fading = ul.link.fading.power(q as usize, layer);
                    for g in &b.grants {
                        if !g.prbs.contains(&q) {
                            continue;
                        }
                        let power = lin(cell.tx_power_dbm) / cell.n_prb as f64 / (2 * streams) as f64;
                        let rx = power * gain * loss * fading;
                        if j == s && g.ue_id == att.ue_id {
                            signal += rx;
                        } else {
                            interference += rx;
                        }
                    }
                }
                let noise = lin(-174.0 + db(serving.prb_bandwidth_hz()) + noise_figure);
                let expected = signal / (interference + noise);
                let got = per_prb_sinr(view, &txs, p, layer);
                worst = worst.max(((got - expected) / expected).abs());
                checked += 1;
            }
        }
    }
    (worst, checked)
}

fn criterion_3() -> Outcome {
    let (nr, n1) = sinr_oracle_error(Technology::SixG, &[(200.0, 273)], 3);
    // Co-channel carriers of different width share a center frequency.
    let (lte, n2) = sinr_oracle_error(Technology::FourG, &[(20.0, 100), (10.0, 50)], 4);
    let worst = nr.max(lte);
    Outcome::new(
        worst <= 1e-9 && n1 > 0 && n2 > 0,
        format!("max relative error {worst:.1e} (<= 1e-9) over {} (UE, PRB, layer) samples", n1 + n2),
    )
}

// ---------------------------------------------------------------------------
// 4. Scheduler conservation

fn criterion_4() -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (
        1u32..300,
        prop::collection::vec((0usize..4, 0u32..120), 0..40),
        any::<u64>(),
    );
    let result = runner.run(&strategy, |(n_prb, demands, seed)| {
        let requests: Vec<Request> = demands
            .iter()
            .enumerate()
            .map(|(i, &(beam, d))| Request {
                ue_id: i as u32,
                beam_pair: (beam, beam),
                demand_prb: d,
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let beams = allocate(7, n_prb, &requests, &mut rng);
        for b in &beams {
            let mut seen = BTreeSet::new();
            for g in &b.grants {
                let demand = requests[g.ue_id as usize].demand_prb;
                prop_assert!(g.prbs.len() as u32 <= demand);
                for &p in &g.prbs {
                    prop_assert!(p < n_prb);
                    prop_assert!(seen.insert(p), "PRB {} granted twice on beam {:?}", p, b.beam_pair);
                }
            }
            let total: u32 = b.grants.iter().map(|g| requests[g.ue_id as usize].demand_prb).sum();
            let allocated = b.allocated() as u32;
            prop_assert!(allocated <= n_prb);
            prop_assert_eq!(allocated == n_prb, total >= n_prb);
        }
        Ok(())
    });
    match result {
        Ok(()) => Outcome::new(true, "1000 random instances: disjoint per beam, sum <= pool, equality iff demand >= pool"),
        Err(e) => Outcome::new(false, format!("{e}")),
    }
}

// ---------------------------------------------------------------------------
// 5. Effective SINR

fn criterion_5() -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let grids = prop::collection::vec(-30.0f64..40.0, 1..64);
    let bounded = runner.run(&grids, |g| {
        let values: Vec<f64> = g.iter().map(|&d| lin(d)).collect();
        let eff = effective_sinr(&values, 1.0).unwrap();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= eff && eff <= hi);
        let constant = vec![values[0]; values.len()];
        prop_assert_eq!(effective_sinr(&constant, 1.0).unwrap(), values[0]);
        Ok(())
    });
    // Oracle: capacity average of {1, 10} is (1 + log2 11) / 2.
    let oracle = db(2f64.powf((1.0 + 11f64.log2()) / 2.0) - 1.0);
    let worked = db(effective_sinr(&[1.0, 10.0], 1.0).unwrap());
    let ok = (worked - 5.67).abs() <= 0.01 && (worked - oracle).abs() < 1e-9;
    match bounded {
        Ok(()) => Outcome::new(
            ok,
            format!("1000 grids bounded and fixed-point exact; {{0, 10}} dB -> {worked:.4} dB (5.67 +/- 0.01)"),
        ),
        Err(e) => Outcome::new(false, format!("{e}")),
    }
}

// ---------------------------------------------------------------------------
// 6. Association thresholds

fn m(cell_id: u32, technology: Technology, rsrp_dbm: f64) -> Measurement {
    Measurement {
        cell_id,
        technology,
        ssb_beam: 0,
        rsrp_dbm,
        noise_floor_dbm: -200.0,
    }
}

fn criterion_6() -> Outcome {
    use Technology::*;
    let p = AssocParams::default();
    let pick = |ms: &[Measurement]| associate(ms, &p).map(|x| x.cell_id);
    let cases: Vec<(&str, Vec<Measurement>, Option<u32>)> = vec![
        ("6G above threshold wins over stronger 5G/4G", vec![m(1, FourG, -50.0), m(2, FiveG, -60.0), m(3, SixG, -107.9)], Some(3)),
        ("6G at threshold is not eligible", vec![m(1, FourG, -50.0), m(2, FiveG, -60.0), m(3, SixG, -108.0)], Some(2)),
        ("5G at threshold is not eligible", vec![m(1, FourG, -50.0), m(2, FiveG, -110.0), m(3, SixG, -120.0)], Some(1)),
        ("5G just above threshold", vec![m(1, FourG, -50.0), m(2, FiveG, -109.999)], Some(2)),
        ("5G beats 4G regardless of power", vec![m(1, FourG, -40.0), m(2, FiveG, -100.0)], Some(2)),
        ("4G has no threshold", vec![m(1, FourG, -130.0), m(3, SixG, -108.0)], Some(1)),
        ("nothing eligible", vec![m(2, FiveG, -110.0), m(3, SixG, -108.0)], None),
        ("strongest cell within the winning layer", vec![m(4, SixG, -90.0), m(5, SixG, -80.0), m(2, FiveG, -30.0)], Some(5)),
    ];
    let mut failed = Vec::new();
    for (name, ms, want) in &cases {
        if pick(ms) != *want {
            failed.push(*name);
        }
    }
    let boundary = !p.eligible(SixG, -108.0) && p.eligible(SixG, -107.999) && !p.eligible(FiveG, -110.0) && p.eligible(FiveG, -109.999);
    Outcome::new(
        failed.is_empty() && boundary,
        if failed.is_empty() {
            format!("{} fixtures, thresholds -110/-108 dBm strict, priority 6G > 5G > 4G", cases.len())
        } else {
            format!("failed: {}", failed.join("; "))
        },
    )
}

// ---------------------------------------------------------------------------
// 7. Scenario calibration

fn median_u32(mut v: Vec<u32>) -> u32 {
    v.sort_unstable();
    v[(v.len() + 1) / 2 - 1]
}

fn median_f64(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[(v.len() + 1) / 2 - 1]
}

fn criterion_7() -> Outcome {
    let mut problems = Vec::new();
    let mut lte_medians = Vec::new();
    for seed in 1..=5u64 {
        let mut file = ScenarioFile::default();
        file.scenario.seed = seed;
        let deployment = Deployment::generate(&file.scenario).unwrap();
        for s in Strategy::ALL {
            let topo = deployment.topology(s, SixGConfig::default()).unwrap();
            let n = |t| topo.cells_of(t).count();
            let sites = |t| topo.sites.iter().filter(|x| x.layer == t).count();
            let want = (204, if s.has_five_g() { 45 } else { 0 }, if s.has_six_g() { 45 } else { 0 });
            if (n(Technology::FourG), n(Technology::FiveG), n(Technology::SixG)) != want {
                problems.push(format!("seed {seed} {}: cell counts", s.tag()));
            }
            if sites(Technology::FourG) != 47 || (s.has_five_g() && sites(Technology::FiveG) != 15) {
                problems.push(format!("seed {seed} {}: site counts", s.tag()));
            }
        }
        let lte: Vec<&Cell> = deployment.cells.iter().filter(|c| c.technology == Technology::FourG).collect();
        let nr: Vec<&Cell> = deployment.cells.iter().filter(|c| c.technology == Technology::FiveG).collect();
        if median_u32(lte.iter().map(|c| c.n_trx).collect()) != 4 {
            problems.push(format!("seed {seed}: 4G median TRX"));
        }
        let wide = lte.iter().filter(|c| c.bandwidth_mhz == 20.0).count();
        let narrow = lte.iter().filter(|c| c.bandwidth_mhz == 10.0).count();
        if (wide, narrow) != (184, 20) {
            problems.push(format!("seed {seed}: bandwidth split {wide}/{narrow}"));
        }
        if lte.iter().any(|c| !(40.0..=52.0).contains(&c.tx_power_dbm)) {
            problems.push(format!("seed {seed}: 4G power outside 40-52 dBm"));
        }
        if nr.iter().any(|c| c.n_prb != 273 || c.n_trx != 64 || c.carrier_ghz != 2.703) {
            problems.push(format!("seed {seed}: 5G carrier"));
        }
        let med = median_f64(lte.iter().map(|c| c.tx_power_dbm).collect());
        if (med - 45.9).abs() > 0.5 {
            problems.push(format!("seed {seed}: 4G median power {med:.2} dBm"));
        }
        lte_medians.push(med);
    }
    Outcome::new(
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "5 seeds: 204/45/45 cells, 47/15 sites, median TRX 4, 184/20 split, 4G median power {:.2}-{:.2} dBm",
                lte_medians.iter().copied().fold(f64::INFINITY, f64::min),
                lte_medians.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            )
        } else {
            problems.join("; ")
        },
    )
}

// ---------------------------------------------------------------------------
// Strategy sweep shared by criteria 8 and 9

#[derive(Default)]
struct Sweep {
    /// (label) -> per-seed (mean, p50, power kW)
    runs: BTreeMap<String, Vec<(f64, f64, f64)>>,
    first_seed_time: Duration,
}

const CONFIGS: [(u32, u32); 4] = [(200, 128), (200, 256), (400, 128), (400, 256)];

fn seeds() -> Vec<u64> {
    std::env::var("HETSIM_ACCEPT_SEEDS")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect::<Vec<u64>>())
        .filter(|v| !v.is_empty())
        .unwrap_or_else(|| vec![1, 2])
}

fn label(s: Strategy, bw: u32, trx: u32) -> String {
    engine::run_label(s, SixGConfig::new(bw, trx).unwrap())
}

fn sweep() -> Sweep {
    let mut out = Sweep::default();
    for (i, seed) in seeds().into_iter().enumerate() {
        let t0 = Instant::now();
        let mut specs = Vec::new();
        for s in [Strategy::FourG, Strategy::FourGFiveG] {
            specs.push((s, SixGConfig::default()));
        }
        for (bw, trx) in CONFIGS {
            for s in [Strategy::CoLoc6GUMa, Strategy::NonCoLoc6GUMi, Strategy::NonCoLoc6GUPi] {
                specs.push((s, SixGConfig::new(bw, trx).unwrap()));
            }
        }
        for (s, sixg) in specs {
            let spec = RunSpec::new(ScenarioFile::default())
                .with_strategy(s, sixg)
                .with_seed(seed)
                .with_snapshots(10);
            let r = engine::run(&spec).expect("sweep run").report;
            eprintln!(
                "  seed {seed} {:<28} mean {:>7.2} Mbps  p50 {:>7.2}  power {:>6.1} kW",
                r.label, r.throughput_mbps.mean, r.throughput_mbps.p50, r.power.total_kw
            );
            out.runs
                .entry(r.label.clone())
                .or_default()
                .push((r.throughput_mbps.mean, r.throughput_mbps.p50, r.power.total_kw));
        }
        if i == 0 {
            out.first_seed_time = t0.elapsed();
        }
    }
    out
}

impl Sweep {
    fn avg(&self, label: &str) -> (f64, f64, f64) {
        let v = &self.runs[label];
        let n = v.len() as f64;
        (
            v.iter().map(|x| x.0).sum::<f64>() / n,
            v.iter().map(|x| x.1).sum::<f64>() / n,
            v.iter().map(|x| x.2).sum::<f64>() / n,
        )
    }
}

// ---------------------------------------------------------------------------
// 8. Power anchors

fn criterion_8(sweep: &Sweep) -> Outcome {
    let presets = PowerPresets::default();
    let deployment = ScenarioFile::default().deployment().unwrap();
    let nr = deployment.cells.iter().find(|c| c.technology == Technology::FiveG).unwrap();
    let idle = radio_power(nr, 0.0, presets.for_technology(Technology::FiveG)).unwrap().total_w;
    let marginals: Vec<f64> = Technology::ALL
        .iter()
        .map(|&t| presets.for_technology(t).per_trx_marginal_w())
        .collect();
    let marginal_ok = marginals.iter().all(|w| (1.5..=3.0).contains(w));

    let topo = deployment.topology(Strategy::CoLoc6GUMa, SixGConfig::new(200, 128).unwrap()).unwrap();
    let mut six = topo.cells_of(Technology::SixG).next().unwrap().clone();
    let params = presets.for_technology(Technology::SixG);
    let p128 = radio_power(&six, 0.5, params).unwrap().total_w;
    six.n_trx = 256;
    let p256 = radio_power(&six, 0.5, params).unwrap().total_w;
    let step_ok = (128.0 * 1.5..=128.0 * 3.0).contains(&(p256 - p128));

    let four = sweep.avg("FourG").2;
    let base = sweep.avg("FourG_FiveG").2;
    let ratio = four / base;
    Outcome::new(
        idle > 250.0 && marginal_ok && step_ok && (ratio - 0.70).abs() <= 0.07,
        format!(
            "5G idle {idle:.0} W (> 250), per-TRX marginal {:?} W (1.5-3), 6G 128->256 TRX +{:.0} W (192-384), FourG/FourG_FiveG = {ratio:.3} (0.70 +/- 0.07)",
            marginals,
            p256 - p128
        ),
    )
}

// ---------------------------------------------------------------------------
// 9. Strategy ordering

fn criterion_9(sweep: &Sweep) -> Vec<(String, Outcome)> {
    let four = sweep.avg("FourG");
    let base = sweep.avg("FourG_FiveG");
    let at = |s, bw, trx| sweep.avg(&label(s, bw, trx));

    let coloc = at(Strategy::CoLoc6GUMa, 200, 128);
    let umi = at(Strategy::NonCoLoc6GUMi, 200, 128);
    let median_ratio = umi.1 / coloc.1;
    let a = Outcome::new(
        four.0 < base.0 && base.0 < coloc.0 && coloc.0 < umi.0 && median_ratio >= 1.2,
        format!(
            "mean {:.2} < {:.2} < {:.2} < {:.2} Mbps, UMi/CoLoc median {median_ratio:.2} (>= 1.2)",
            four.0, base.0, coloc.0, umi.0
        ),
    );

    let mut b_ok = true;
    let mut b_detail = Vec::new();
    for (bw, trx) in CONFIGS {
        let (c, u, p) = (
            at(Strategy::CoLoc6GUMa, bw, trx).2,
            at(Strategy::NonCoLoc6GUMi, bw, trx).2,
            at(Strategy::NonCoLoc6GUPi, bw, trx).2,
        );
        b_ok &= p < u && u < c;
        b_detail.push(format!("{bw}/{trx}: {p:.1} < {u:.1} < {c:.1}"));
    }
    let b = Outcome::new(b_ok, format!("UPi < UMi < CoLoc kW: {}", b_detail.join(", ")));

    let six = [Strategy::CoLoc6GUMa, Strategy::NonCoLoc6GUMi, Strategy::NonCoLoc6GUPi];
    let uplift = |bw, trx| six.map(|s| at(s, bw, trx).0 / base.0);
    let low = uplift(200, 128);
    let high = uplift(400, 256);
    let min = |v: [f64; 3]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let c = Outcome::new(
        min(low) >= 2.5 && min(high) >= 6.0,
        format!(
            "CoLoc/UMi/UPi uplift 200/128 = {:.2}/{:.2}/{:.2} (>= 2.5), 400/256 = {:.2}/{:.2}/{:.2} (>= 6)",
            low[0], low[1], low[2], high[0], high[1], high[2]
        ),
    );

    let mut ratios = Vec::new();
    for (bw, trx) in CONFIGS {
        for s in six {
            ratios.push(at(s, bw, trx).2 / base.2);
        }
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let d = Outcome::new(
        lo >= 1.2 && hi <= 2.2,
        format!("power uplift over 12 rows in [{lo:.2}, {hi:.2}] (within [1.2, 2.2])"),
    );

    let t = sweep.first_seed_time;
    let runtime = Outcome::new(
        t < Duration::from_secs(600),
        format!("14 runs x 10 snapshots, one seed: {t:.1?} (< 10 min)"),
    );
    vec![
        ("9a".into(), a),
        ("9b".into(), b),
        ("9c".into(), c),
        ("9d".into(), d),
        ("9-runtime".into(), runtime),
    ]
}

// ---------------------------------------------------------------------------
// 10. Determinism

fn summary_bytes(spec: &RunSpec) -> Vec<u8> {
    let out = engine::run(spec).unwrap();
    let mut buf = Vec::new();
    out.report.write_json(&mut buf).unwrap();
    buf
}

fn criterion_10() -> Outcome {
    let spec = RunSpec::new(ScenarioFile::default())
        .with_strategy(Strategy::NonCoLoc6GUMi, SixGConfig::default())
        .with_seed(11)
        .with_snapshots(2);
    let first = summary_bytes(&spec);
    let second = summary_bytes(&spec);
    let sequential = summary_bytes(&spec.clone().with_execution(Execution::Sequential));
    Outcome::new(
        first == second && first == sequential,
        format!(
            "summary.json identical across repeats ({}) and execution modes ({})",
            first == second,
            first == sequential
        ),
    )
}

// ---------------------------------------------------------------------------

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(o) => o,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        }
    }
}

fn main() -> ExitCode {
    // `cargo test -- --list` and filters are not meaningful here.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut results: Vec<(String, Outcome)> = vec![
        ("1".into(), guarded(criterion_1)),
        ("2".into(), guarded(criterion_2)),
        ("3".into(), guarded(criterion_3)),
        ("4".into(), guarded(criterion_4)),
        ("5".into(), guarded(criterion_5)),
        ("6".into(), guarded(criterion_6)),
        ("7".into(), guarded(criterion_7)),
    ];
    eprintln!("running strategy sweep over seeds {:?}", seeds());
    match panic::catch_unwind(sweep) {
        Ok(sweep) => {
            results.push(("8".into(), guarded(|| criterion_8(&sweep))));
            results.extend(criterion_9(&sweep));
        }
        Err(_) => {
            results.push(("8".into(), Outcome::new(false, "sweep panicked")));
            results.push(("9".into(), Outcome::new(false, "sweep panicked")));
        }
    }
    results.push(("10".into(), guarded(criterion_10)));

    let mut failed = 0;
    for (id, o) in &results {
        println!("criterion {id:<9} {}  {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
