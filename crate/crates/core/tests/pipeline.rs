mod common;

use std::collections::HashSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hetsim::assoc::{associate, AssocParams, Measurement};
use hetsim::engine::{self, compare, RunSpec};
use hetsim::link;
use hetsim::par::Execution;
use hetsim::power::{network_power, radio_power, PowerPresets};
use hetsim::scenario::{ScenarioFile, SixGConfig, Strategy, Technology};
use hetsim::sched::allocate_beam;

#[test]
fn ues_are_scheduled_only_on_their_refined_beams() {
    let snap = common::snapshot(common::three_cells(1, Technology::SixG), &common::random_ues(1, 40, 80), common::permissive(), 1);
    let mut seen = HashSet::new();
    for b in &snap.allocation.beams {
        for g in &b.grants {
            let st = snap.states.iter().find(|s| s.ue.id == g.ue_id).unwrap();
            let att = st.attachment.unwrap();
            assert_eq!(att.cell_id, b.cell_id);
            assert_eq!(att.csirs_beam_pair, b.beam_pair);
            assert!(seen.insert(g.ue_id), "ue {} granted twice", g.ue_id);
        }
    }
    let attached: HashSet<u32> = snap.states.iter().filter_map(|s| s.attachment.map(|a| a.ue_id)).collect();
    assert_eq!(seen, attached);
}

#[test]
fn service_order_is_uniform() {
    // Three UEs wanting 60 of 100 PRBs: only the first served gets it all.
    let ues = [(0, 60), (1, 60), (2, 60)];
    let trials = 3000;
    let mut full = [0u32; 3];
    for seed in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for g in allocate_beam(100, &ues, &mut rng) {
            if g.prbs.len() == 60 {
                full[g.ue_id as usize] += 1;
            }
        }
    }
    assert_eq!(full.iter().sum::<u32>(), trials as u32);
    let expected = trials as f64 / 3.0;
    let chi2: f64 = full.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    // 99.9 % quantile of chi-square with 2 degrees of freedom.
    assert!(chi2 < 13.82, "chi2 = {chi2}, counts {full:?}");
}

#[test]
fn every_attached_ue_has_one_attachment() {
    let spec = RunSpec::new(ScenarioFile::default())
        .with_strategy(Strategy::NonCoLoc6GUMi, SixGConfig::default())
        .with_snapshots(1);
    let out = engine::run(&spec).unwrap();
    let snap = &out.snapshots[0];
    let ids: HashSet<u32> = snap.attachments.iter().map(|a| a.ue_id).collect();
    assert_eq!(ids.len(), snap.attachments.len());
    let attached = snap.ues.iter().filter(|u| u.technology.is_some()).count();
    assert_eq!(attached, snap.attachments.len());
    let p = AssocParams::default();
    for a in &snap.attachments {
        assert!(p.eligible(a.technology, a.rsrp_ssb_dbm));
    }
}

#[test]
fn link_stage_is_pure() {
    let snap = common::snapshot(common::three_cells(2, Technology::FiveG), &common::random_ues(2, 25, 150), common::permissive(), 2);
    let txs = engine::transmitters(&snap.net, &snap.allocation);
    let views = engine::ue_views(&snap.net, snap.states.clone(), &snap.allocation);
    let eval = || {
        views
            .iter()
            .map(|(_, _, v)| v.as_ref().map(|v| link::evaluate(v, &txs, &snap.params.link)))
            .collect::<Vec<_>>()
    };
    let a = eval();
    assert!(a.iter().flatten().any(|r| r.throughput_mbps > 0.0));
    assert_eq!(format!("{a:?}"), format!("{:?}", eval()));
}

#[test]
fn wider_and_larger_six_g_radios_raise_throughput() {
    let run = |s: Strategy, bw, trx| {
        let spec = RunSpec::new(ScenarioFile::default())
            .with_strategy(s, SixGConfig::new(bw, trx).unwrap())
            .with_seed(3)
            .with_snapshots(1);
        engine::run(&spec).unwrap().report
    };
    let small = run(Strategy::NonCoLoc6GUMi, 200, 128);
    let large = run(Strategy::NonCoLoc6GUMi, 400, 256);
    assert!(large.throughput_mbps.mean >= small.throughput_mbps.mean);
    let four = run(Strategy::FourG, 200, 128);
    let base = run(Strategy::FourGFiveG, 200, 128);
    assert!(four.throughput_mbps.mean < base.throughput_mbps.mean);
    assert!(base.throughput_mbps.mean < small.throughput_mbps.mean);

    let table = compare(&[four.clone(), base.clone(), small], "FourG_FiveG").unwrap();
    assert_eq!(table.rows.len(), 3);
    assert!(table.warnings.is_empty());
    assert_eq!(table.rows[1].mean_ratio, 1.0);
    assert!(compare(&[four.clone(), base], "NoSuchRun").is_err());
    let mut other = four.clone();
    other.seed = 99;
    other.label = "other".into();
    assert_eq!(compare(&[four, other], "FourG").unwrap().warnings.len(), 1);
}

#[test]
fn run_output_files_are_written() {
    let spec = RunSpec::new(ScenarioFile::default())
        .with_strategy(Strategy::FourG, SixGConfig::default())
        .with_snapshots(1)
        .with_execution(Execution::Sequential);
    let out = engine::run(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    out.write(dir.path()).unwrap();
    for f in ["summary.json", "ue_metrics.csv", "power.csv", "attachments.csv", "allocation.csv"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["label"], "FourG");
    let csv = std::fs::read_to_string(dir.path().join("ue_metrics.csv")).unwrap();
    assert!(csv.starts_with("snapshot,ue_id,tech,cell,"));
    assert_eq!(csv.lines().count(), 1 + out.ue_metrics.len());
    let power = std::fs::read_to_string(dir.path().join("power.csv")).unwrap();
    assert_eq!(power.lines().count(), 1 + 204);
}

fn measurement(cell_id: u32, technology: Technology, rsrp_dbm: f64) -> Measurement {
    Measurement {
        cell_id,
        technology,
        ssb_beam: 0,
        rsrp_dbm,
        noise_floor_dbm: -150.0,
    }
}

proptest! {
    #[test]
    fn raising_six_g_above_threshold_never_demotes(
        four in prop::option::of(-140.0f64..-40.0),
        five in prop::option::of(-140.0f64..-40.0),
        below in -140.0f64..=-108.0,
        above in -107.99f64..-40.0,
    ) {
        let p = AssocParams::default();
        let mut ms = Vec::new();
        if let Some(r) = four { ms.push(measurement(1, Technology::FourG, r)); }
        if let Some(r) = five { ms.push(measurement(2, Technology::FiveG, r)); }
        ms.push(measurement(3, Technology::SixG, below));
        let before = associate(&ms, &p).map(|m| m.technology.priority());
        ms.last_mut().unwrap().rsrp_dbm = above;
        let after = associate(&ms, &p).map(|m| m.technology);
        prop_assert_eq!(after, Some(Technology::SixG));
        prop_assert!(before.is_none_or(|b| b <= Technology::SixG.priority()));
    }

    #[test]
    fn network_power_is_monotone(
        load in 0.0f64..0.9,
        dl in 0.0f64..0.1,
        dp in 0.0f64..3.0,
        pick in 0usize..50,
    ) {
        let presets = PowerPresets::default();
        let d = ScenarioFile::default().deployment().unwrap();
        let topo = d.topology(Strategy::CoLoc6GUMa, SixGConfig::default()).unwrap();
        let cells = topo.cells;
        let loads = vec![load; cells.len()];
        let base = network_power(&cells, &loads, &presets).unwrap().total_kw;

        let more_load = vec![load + dl; cells.len()];
        prop_assert!(network_power(&cells, &more_load, &presets).unwrap().total_kw >= base);

        let i = pick * cells.len() / 50;
        let mut louder = cells.clone();
        louder[i].tx_power_dbm += dp;
        prop_assert!(network_power(&louder, &loads, &presets).unwrap().total_kw >= base);

        let mut wider = cells.clone();
        wider[i].bandwidth_mhz *= 2.0;
        prop_assert!(network_power(&wider, &loads, &presets).unwrap().total_kw >= base);

        let c = &cells[i];
        let bigger = [2, 4, 8, 64, 128, 256].into_iter().find(|&t| t > c.n_trx);
        if let Some(t) = bigger {
            let mut more = cells.clone();
            more[i].n_trx = t;
            prop_assert!(network_power(&more, &loads, &presets).unwrap().total_kw >= base);
        }
        let params = presets.for_technology(c.technology);
        let r = radio_power(c, load, params).unwrap();
        prop_assert!((r.components().iter().sum::<f64>() - r.total_w).abs() < 1e-9);
    }
}
