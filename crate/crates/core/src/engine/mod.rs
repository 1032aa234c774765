//! Snapshot pipeline and Monte-Carlo driver.
//!
//! Each snapshot drops UEs, samples every UE-cell link, associates, schedules,
//! evaluates SINR and throughput and finally the network power. Snapshots are
//! independent and run in parallel; every stage inside a snapshot is a
//! keyed, order-preserving map, so results do not depend on the execution
//! mode.

mod report;

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::antenna::{build_codebook, ArrayGeometry, BeamCodebook, BeamKind, PanelResponse};
use crate::assoc::{self, AssocParams, Attachment, SsbPower};
use crate::channel::{ChannelParams, LinkState, RxEnd, SiteDraw, TxEnd};
use crate::link::{self, CellTx, LinkParams, UeLink, UeView};
use crate::par::{self, Execution};
use crate::power::{self, PowerPresets, PowerReport};
use crate::rng::{self, TAG_SCHED};
use crate::scenario::{drop_users, Cell, Deployment, ScenarioFile, SixGConfig, Strategy, Topology, UserTerminal};
use crate::sched::{self, Allocation, Request};
use crate::{Error, Result, Stage};

pub use report::{compare, percentile, run_label, write_ue_metrics, Comparison, ComparisonRow, MetricsReport, Percentiles, UeMetric};

/// Model parameters shared by every stage.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub channel: ChannelParams,
    pub assoc: AssocParams,
    pub link: LinkParams,
    pub power: PowerPresets,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        self.link.validate()?;
        self.power.validate()
    }
}

/// One simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub scenario: ScenarioFile,
    pub strategy: Strategy,
    pub sixg: SixGConfig,
    pub seed: u64,
    pub n_snapshots: usize,
    #[serde(skip)]
    pub execution: Execution,
}

pub const DEFAULT_SNAPSHOTS: usize = 10;

impl RunSpec {
    /// Takes strategy, 6G block and seed from the scenario file.
    pub fn new(scenario: ScenarioFile) -> Self {
        Self {
            strategy: scenario.scenario.strategy,
            sixg: scenario.scenario.sixg,
            seed: scenario.scenario.seed,
            scenario,
            n_snapshots: DEFAULT_SNAPSHOTS,
            execution: Execution::default(),
        }
    }

    pub fn with_strategy(mut self, strategy: Strategy, sixg: SixGConfig) -> Self {
        self.strategy = strategy;
        self.sixg = sixg;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_snapshots(mut self, n: usize) -> Self {
        self.n_snapshots = n;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_snapshots == 0 {
            return Err(Error::Config("n_snapshots must be at least 1".into()));
        }
        self.scenario.model.validate()
    }

    /// Scenario config with the spec's seed, strategy and 6G block applied.
    pub fn effective_scenario(&self) -> ScenarioFile {
        let mut f = self.scenario.clone();
        f.scenario.seed = self.seed;
        f.scenario.strategy = self.strategy;
        f.scenario.sixg = self.sixg;
        f
    }

    /// SHA-256 over the canonical JSON form of everything that affects results.
    pub fn config_hash(&self) -> Result<String> {
        let mut spec = self.clone();
        spec.scenario = self.effective_scenario();
        let bytes = serde_json::to_vec(&spec)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }
}

/// Radios of one topology with their codebooks and link-budget constants.
#[derive(Debug, Clone)]
pub struct Network {
    pub topology: Topology,
    pub ssb: Vec<Arc<BeamCodebook>>,
    pub csirs: Vec<Arc<BeamCodebook>>,
    tx: Vec<TxEnd>,
    /// Cell indices grouped by site, sites in id order.
    by_site: Vec<(u32, Vec<usize>)>,
    /// Co-channel cell indices (including itself) per cell.
    cochannel: Vec<Vec<usize>>,
    ssb_dbm: Vec<f64>,
    noise_ssb_dbm: Vec<f64>,
    noise_prb_mw: Vec<f64>,
    index: HashMap<u32, usize>,
}

impl Network {
    pub fn new(topology: Topology, params: &ModelParams) -> Result<Self> {
        topology.validate()?;
        let mut cache: Vec<(ArrayGeometry, BeamKind, u32, Arc<BeamCodebook>)> = Vec::new();
        let mut book = |array: &ArrayGeometry, kind: BeamKind, size: u32| -> Result<Arc<BeamCodebook>> {
            if let Some(hit) = cache.iter().find(|(a, k, s, _)| a == array && *k == kind && *s == size) {
                return Ok(hit.3.clone());
            }
            let cb = Arc::new(build_codebook(array, kind, size as usize)?);
            cache.push((*array, kind, size, cb.clone()));
            Ok(cb)
        };
        let cells = &topology.cells;
        let mut ssb = Vec::with_capacity(cells.len());
        let mut csirs = Vec::with_capacity(cells.len());
        let mut tx = Vec::with_capacity(cells.len());
        for c in cells {
            ssb.push(book(&c.array, BeamKind::Ssb, c.n_ssb_beams)?);
            csirs.push(book(&c.array, BeamKind::CsiRs, c.n_csirs_beams)?);
            let site = topology.site(c.site_id).expect("validated topology");
            tx.push(TxEnd {
                cell_id: c.id,
                site_id: c.site_id,
                x: site.position.x,
                y: site.position.y,
                height_m: site.height_m,
                carrier_ghz: c.carrier_ghz,
            });
        }
        let mut by_site: Vec<(u32, Vec<usize>)> = Vec::new();
        let mut site_ids: Vec<u32> = cells.iter().map(|c| c.site_id).collect();
        site_ids.sort_unstable();
        site_ids.dedup();
        for s in site_ids {
            // Same-carrier cells adjacent, so their links can be shared.
            let mut idx: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].site_id == s).collect();
            idx.sort_by(|&a, &b| cells[a].carrier_ghz.total_cmp(&cells[b].carrier_ghz).then(cells[a].id.cmp(&cells[b].id)));
            by_site.push((s, idx));
        }
        let cochannel = cells
            .iter()
            .map(|c| (0..cells.len()).filter(|&j| c.co_channel(&cells[j])).collect())
            .collect();
        let lp = &params.link;
        let (ssb_dbm, noise_ssb_dbm) = match params.assoc.ssb_power {
            SsbPower::Total => (
                cells.iter().map(|c| c.tx_power_dbm).collect(),
                cells.iter().map(|c| lp.noise_dbm(c.prb_bandwidth_hz() * c.n_prb as f64)).collect(),
            ),
            SsbPower::PerRe => (
                cells.iter().map(Cell::rs_epre_dbm).collect(),
                cells.iter().map(|c| lp.noise_dbm(c.subcarrier_spacing_khz() * 1e3)).collect(),
            ),
        };
        Ok(Self {
            ssb_dbm,
            noise_ssb_dbm,
            noise_prb_mw: cells.iter().map(|c| lp.noise_mw(c.prb_bandwidth_hz())).collect(),
            index: cells.iter().enumerate().map(|(i, c)| (c.id, i)).collect(),
            topology,
            ssb,
            csirs,
            tx,
            by_site,
            cochannel,
        })
    }

    pub fn cells(&self) -> &[Cell] {
        &self.topology.cells
    }

    pub fn cell_index(&self, cell_id: u32) -> Option<usize> {
        self.index.get(&cell_id).copied()
    }

    /// Links, measurements and serving choice of one UE.
    pub fn attach(&self, ue: &UserTerminal, params: &ModelParams, seed: u64, snapshot: u64) -> UeState {
        let rx = RxEnd {
            ue_id: ue.id,
            x: ue.position.x,
            y: ue.position.y,
            height_m: ue.height_m,
            indoor: ue.indoor,
        };
        let cells = self.cells();
        let mut views: Vec<Option<(LinkState, PanelResponse)>> = vec![None; cells.len()];
        let mut measurements = Vec::with_capacity(cells.len());
        for (site_id, idx) in &self.by_site {
            let draw = SiteDraw::sample(seed, snapshot, ue.id, *site_id);
            let mut prev: Option<(usize, LinkState)> = None;
            for &i in idx {
                let c = &cells[i];
                let link = match &prev {
                    Some((j, l)) if self.tx[*j].same_origin(&self.tx[i]) => l.for_cell(c.id, seed, snapshot),
                    _ => LinkState::from_draw(&self.tx[i], &rx, &params.channel, &draw, seed, snapshot),
                };
                prev = Some((i, link));
                let dir = c.array.local_direction(c.azimuth_deg, link.azimuth_deg, link.elevation_deg);
                let resp = c.array.response(dir);
                measurements.push(assoc::measure(
                    c.id,
                    c.technology,
                    self.ssb_dbm[i],
                    &self.ssb[i],
                    &resp,
                    &link,
                    self.noise_ssb_dbm[i],
                ));
                views[i] = Some((link, resp));
            }
        }
        let Some(best) = assoc::associate(&measurements, &params.assoc).copied() else {
            return UeState {
                ue: ue.clone(),
                attachment: None,
                serving: 0,
                links: Vec::new(),
            };
        };
        let s = self.index[&best.cell_id];
        let resp = views[s].as_ref().expect("sampled").1;
        let beam_pair = assoc::refine_beams(&self.csirs[s], [&resp, &resp]);
        let mut links = Vec::with_capacity(self.cochannel[s].len());
        let mut serving = 0;
        for &j in &self.cochannel[s] {
            let (link, response) = views[j].take().expect("sampled");
            if j == s {
                serving = links.len();
            }
            links.push(UeLink { tx: j, link, response });
        }
        UeState {
            ue: ue.clone(),
            attachment: Some(Attachment {
                ue_id: ue.id,
                cell_id: best.cell_id,
                technology: best.technology,
                ssb_beam: best.ssb_beam,
                csirs_beam_pair: beam_pair,
                rsrp_ssb_dbm: best.rsrp_dbm,
            }),
            serving,
            links,
        }
    }
}

/// Association outcome of one UE plus its co-channel links.
#[derive(Debug, Clone)]
pub struct UeState {
    pub ue: UserTerminal,
    pub attachment: Option<Attachment>,
    /// Index into `links` of the serving cell.
    pub serving: usize,
    pub links: Vec<UeLink>,
}

/// Everything one snapshot produces.
#[derive(Debug, Clone)]
pub struct SnapshotOutput {
    pub snapshot: usize,
    pub ues: Vec<UeMetric>,
    pub attachments: Vec<Attachment>,
    pub allocation: Allocation,
    pub power: PowerReport,
}

/// Schedules every cell of the network.
pub fn schedule(net: &Network, states: &[UeState], seed: u64, snapshot: u64, exec: Execution) -> Allocation {
    let mut requests: Vec<Vec<Request>> = vec![Vec::new(); net.cells().len()];
    for st in states {
        if let Some(a) = &st.attachment {
            requests[net.index[&a.cell_id]].push(Request {
                ue_id: a.ue_id,
                beam_pair: a.csirs_beam_pair,
                demand_prb: st.ue.demand_prb,
            });
        }
    }
    let per_cell = par::map_range(exec, net.cells().len(), |i| {
        let c = &net.cells()[i];
        let mut r = rng::stream(seed, &[TAG_SCHED, snapshot, c.id as u64]);
        sched::allocate(c.id, c.n_prb, &requests[i], &mut r)
    });
    Allocation::new(per_cell.into_iter().flatten().collect())
}

/// Per-cell transmit states for an allocation.
pub fn transmitters<'a>(net: &'a Network, allocation: &Allocation) -> Vec<CellTx<'a>> {
    let mut per_cell: Vec<Vec<&crate::sched::BeamAllocation>> = vec![Vec::new(); net.cells().len()];
    for b in &allocation.beams {
        per_cell[net.index[&b.cell_id]].push(b);
    }
    net.cells()
        .iter()
        .zip(&net.csirs)
        .zip(per_cell)
        .map(|((c, cb), beams)| CellTx::new(c, cb, beams))
        .collect()
}

/// Builds the link-stage view of every attached UE.
pub fn ue_views(net: &Network, states: Vec<UeState>, allocation: &Allocation) -> Vec<(UserTerminal, Option<Attachment>, Option<UeView>)> {
    let mut grants: HashMap<u32, Vec<u32>> = HashMap::new();
    for b in &allocation.beams {
        for g in &b.grants {
            grants.insert(g.ue_id, g.prbs.clone());
        }
    }
    states
        .into_iter()
        .map(|st| {
            let view = st.attachment.map(|a| UeView {
                ue_id: a.ue_id,
                serving: st.serving,
                beam_pair: a.csirs_beam_pair,
                prbs: grants.remove(&a.ue_id).unwrap_or_default(),
                noise_mw: net.noise_prb_mw[st.links[st.serving].tx],
                links: st.links,
            });
            (st.ue, st.attachment, view)
        })
        .collect()
}

fn run_snapshot(spec: &RunSpec, deployment: &Deployment, net: &Network, snapshot: usize) -> Result<SnapshotOutput> {
    let params = &spec.scenario.model;
    let exec = spec.execution;
    let s = snapshot as u64;
    let ues = drop_users(deployment, s).map_err(|e| e.at(snapshot, Stage::Scenario))?;

    let states = par::map(exec, &ues, |ue| net.attach(ue, params, spec.seed, s));
    let attachments: Vec<Attachment> = states.iter().filter_map(|st| st.attachment).collect();
    for a in &attachments {
        if !params.assoc.eligible(a.technology, a.rsrp_ssb_dbm) {
            return Err(Error::Contract(format!("ue {} attached below threshold", a.ue_id)).at(snapshot, Stage::Association));
        }
    }

    let allocation = schedule(net, &states, spec.seed, s, exec);
    for b in &allocation.beams {
        let n_prb = net.cells()[net.index[&b.cell_id]].n_prb as usize;
        if b.allocated() > n_prb {
            return Err(Error::Contract(format!("cell {} beam {:?} over-allocated", b.cell_id, b.beam_pair))
                .at(snapshot, Stage::Scheduling));
        }
    }

    let txs = transmitters(net, &allocation);
    let views = ue_views(net, states, &allocation);
    let metrics = par::map(exec, &views, |(ue, att, view)| {
        let result = view.as_ref().map(|v| link::evaluate(v, &txs, &params.link));
        UeMetric::new(snapshot, ue, att.as_ref(), result.as_ref())
    });
    if let Some(bad) = metrics.iter().find(|m| !(m.throughput_mbps >= 0.0 && m.throughput_mbps.is_finite())) {
        return Err(Error::Contract(format!("ue {} has invalid throughput", bad.ue_id)).at(snapshot, Stage::Link));
    }

    let loads: Vec<f64> = net
        .cells()
        .iter()
        .map(|c| allocation.beam_load(c.id, c.n_prb))
        .collect();
    let power = power::network_power(net.cells(), &loads, &params.power).map_err(|e| e.at(snapshot, Stage::Power))?;

    Ok(SnapshotOutput {
        snapshot,
        ues: metrics,
        attachments,
        allocation,
        power,
    })
}

/// Result of a full run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MetricsReport,
    /// Pooled per-UE records, snapshot-major.
    pub ue_metrics: Vec<UeMetric>,
    /// Per-radio power averaged over snapshots.
    pub power: PowerReport,
    pub snapshots: Vec<SnapshotOutput>,
}

/// Builds the deployment and the network active under the spec.
pub fn prepare(spec: &RunSpec) -> Result<(Deployment, Network)> {
    spec.validate().map_err(|e| e.at(0, Stage::Scenario))?;
    let file = spec.effective_scenario();
    let deployment = file.deployment().map_err(|e| e.at(0, Stage::Scenario))?;
    let topology = deployment
        .topology(spec.strategy, spec.sixg)
        .map_err(|e| e.at(0, Stage::Scenario))?;
    let net = Network::new(topology, &file.model).map_err(|e| e.at(0, Stage::Channel))?;
    Ok((deployment, net))
}

/// Runs every snapshot of the spec and pools the metrics.
pub fn run(spec: &RunSpec) -> Result<RunOutput> {
    let (deployment, net) = prepare(spec)?;
    let snapshots = par::map_range(spec.execution, spec.n_snapshots, |s| run_snapshot(spec, &deployment, &net, s))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let ue_metrics: Vec<UeMetric> = snapshots.iter().flat_map(|s| s.ues.iter().cloned()).collect();
    let reports: Vec<PowerReport> = snapshots.iter().map(|s| s.power.clone()).collect();
    let power = PowerReport::mean(&reports).map_err(|e| e.at(0, Stage::Power))?;
    let report = MetricsReport::build(spec, &ue_metrics, &power).map_err(|e| e.at(0, Stage::Report))?;
    Ok(RunOutput {
        report,
        ue_metrics,
        power,
        snapshots,
    })
}
