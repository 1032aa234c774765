//! Demand-driven PRB allocation per serving beam.
//!
//! Every (cell, CSI-RS beam pair) owns a full copy of the cell's PRBs. UEs on
//! a beam are served in random order; each draws `min(demand, remaining)`
//! PRBs uniformly without replacement from what is left of the pool. Both
//! layers of a UE use the same PRB set.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::Result;

/// `ceil(prb_used / active_ues)`, at least one. `None` for an idle cell.
pub fn estimate_demand(cell_prb_used: u32, active_ues: u32) -> Option<u32> {
    if active_ues == 0 {
        return None;
    }
    Some(cell_prb_used.div_ceil(active_ues).max(1))
}

/// One UE asking for PRBs on a beam of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub ue_id: u32,
    pub beam_pair: (usize, usize),
    pub demand_prb: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grant {
    pub ue_id: u32,
    /// Sorted PRB indices.
    pub prbs: Vec<u32>,
}

/// Allocation of one (cell, beam pair) pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeamAllocation {
    pub cell_id: u32,
    pub beam_pair: (usize, usize),
    /// Grants in service order.
    pub grants: Vec<Grant>,
}

impl BeamAllocation {
    pub fn allocated(&self) -> usize {
        self.grants.iter().map(|g| g.prbs.len()).sum()
    }
}

/// Serves `ues` (id, demand) from a pool of `n_prb` PRBs.
pub fn allocate_beam<R: Rng + ?Sized>(n_prb: u32, ues: &[(u32, u32)], rng: &mut R) -> Vec<Grant> {
    let mut order: Vec<usize> = (0..ues.len()).collect();
    order.shuffle(rng);
    // A uniformly shuffled pool consumed front to back is the same as
    // repeated uniform draws without replacement.
    let mut pool: Vec<u32> = (0..n_prb).collect();
    pool.shuffle(rng);
    let mut next = 0usize;
    order
        .into_iter()
        .map(|i| {
            let (ue_id, demand) = ues[i];
            let take = (demand as usize).min(pool.len() - next);
            let mut prbs = pool[next..next + take].to_vec();
            next += take;
            prbs.sort_unstable();
            Grant { ue_id, prbs }
        })
        .collect()
}

/// Allocates every beam of one cell. Beams are visited in index order so a
/// cell's result depends only on its own requests and RNG stream.
pub fn allocate<R: Rng + ?Sized>(cell_id: u32, n_prb: u32, requests: &[Request], rng: &mut R) -> Vec<BeamAllocation> {
    let mut beams: BTreeMap<(usize, usize), Vec<(u32, u32)>> = BTreeMap::new();
    for r in requests {
        beams.entry(r.beam_pair).or_default().push((r.ue_id, r.demand_prb));
    }
    beams
        .into_iter()
        .map(|(beam_pair, ues)| BeamAllocation {
            cell_id,
            beam_pair,
            grants: allocate_beam(n_prb, &ues, rng),
        })
        .collect()
}

/// All beam allocations of a snapshot, ordered by (cell, beam pair).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub beams: Vec<BeamAllocation>,
}

impl Allocation {
    pub fn new(mut beams: Vec<BeamAllocation>) -> Self {
        beams.sort_by_key(|b| (b.cell_id, b.beam_pair));
        Self { beams }
    }

    pub fn of_cell(&self, cell_id: u32) -> impl Iterator<Item = &BeamAllocation> {
        self.beams.iter().filter(move |b| b.cell_id == cell_id)
    }

    /// Fraction of the PRB x active-beam resources of a cell carrying data:
    /// allocated PRBs summed over beams, over `n_prb` times the number of
    /// beams with at least one grant. Zero for an idle cell.
    pub fn beam_load(&self, cell_id: u32, n_prb: u32) -> f64 {
        let (mut used, mut beams) = (0usize, 0usize);
        for b in self.of_cell(cell_id) {
            let n = b.allocated();
            if n > 0 {
                used += n;
                beams += 1;
            }
        }
        if beams == 0 {
            0.0
        } else {
            used as f64 / (beams as f64 * n_prb as f64)
        }
    }

    /// PRBs in use on a cell by at least one beam.
    pub fn occupied_prbs(&self, cell_id: u32, n_prb: u32) -> u32 {
        let mut used = vec![false; n_prb as usize];
        for b in self.of_cell(cell_id) {
            for g in &b.grants {
                for &p in &g.prbs {
                    used[p as usize] = true;
                }
            }
        }
        used.iter().filter(|&&u| u).count() as u32
    }

    /// Writes `cell,beam,ue,prb_count` rows; beam is `pol0/pol1`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["cell", "beam", "ue", "prb_count"])?;
        for b in &self.beams {
            for g in &b.grants {
                out.write_record([
                    b.cell_id.to_string(),
                    format!("{}/{}", b.beam_pair.0, b.beam_pair.1),
                    g.ue_id.to_string(),
                    g.prbs.len().to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}
