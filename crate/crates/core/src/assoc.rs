//! SSB initial access, priority reselection and CSI-RS beam refinement.
//!
//! RSRP is measured on the frozen large-scale channel (no fast fading): the
//! SSB transmit power plus the SSB beam gain, minus coupling loss. SSB beams
//! are swept in time, so each beam carries the full cell power. By default
//! RSRP is per resource element, where the reselection thresholds are
//! meaningful; [`SsbPower::Total`] uses the total cell power instead.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::antenna::{BeamCodebook, PanelResponse};
use crate::channel::LinkState;
use crate::scenario::Technology;
use crate::Result;

/// Power reference of an SSB measurement.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SsbPower {
    /// Total cell power; noise taken over the whole carrier.
    Total,
    /// Energy per resource element; noise taken over one subcarrier.
    #[default]
    PerRe,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssocParams {
    pub five_g_threshold_dbm: f64,
    pub six_g_threshold_dbm: f64,
    /// A cell is detectable when its RSRP exceeds the noise floor by this
    /// margin.
    pub detection_snr_db: f64,
    pub ssb_power: SsbPower,
}

impl Default for AssocParams {
    fn default() -> Self {
        Self {
            five_g_threshold_dbm: -110.0,
            six_g_threshold_dbm: -108.0,
            detection_snr_db: 0.0,
            ssb_power: SsbPower::PerRe,
        }
    }
}

impl AssocParams {
    /// Reselection threshold of a technology; 4G has none.
    pub fn threshold_dbm(&self, tech: Technology) -> Option<f64> {
        match tech {
            Technology::FourG => None,
            Technology::FiveG => Some(self.five_g_threshold_dbm),
            Technology::SixG => Some(self.six_g_threshold_dbm),
        }
    }

    /// Strict comparison: RSRP equal to the threshold does not qualify.
    pub fn eligible(&self, tech: Technology, rsrp_dbm: f64) -> bool {
        self.threshold_dbm(tech).is_none_or(|t| rsrp_dbm > t)
    }
}

/// RSRP (dBm) of one SSB beam.
#[inline]
pub fn ssb_rsrp(tx_dbm: f64, beam_gain_db: f64, link: &LinkState) -> f64 {
    tx_dbm + beam_gain_db - link.coupling_loss_db()
}

/// Strongest SSB beam of one cell as seen by a UE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub cell_id: u32,
    pub technology: Technology,
    pub ssb_beam: usize,
    pub rsrp_dbm: f64,
    /// Thermal noise at the UE, on the same reference as the RSRP.
    pub noise_floor_dbm: f64,
}

/// Measures every SSB beam of a cell and keeps the strongest.
pub fn measure(
    cell_id: u32,
    technology: Technology,
    tx_dbm: f64,
    ssb: &BeamCodebook,
    response: &PanelResponse,
    link: &LinkState,
    noise_floor_dbm: f64,
) -> Measurement {
    let (beam, gain) = ssb.best_beam(response);
    Measurement {
        cell_id,
        technology,
        ssb_beam: beam,
        rsrp_dbm: ssb_rsrp(tx_dbm, gain, link),
        noise_floor_dbm,
    }
}

/// Picks the serving cell: the highest-priority technology whose best RSRP
/// exceeds its threshold, then the strongest cell within it (ties to the
/// lower cell id). `None` means no cell is detectable: outage.
pub fn associate<'a>(measurements: &'a [Measurement], params: &AssocParams) -> Option<&'a Measurement> {
    let detectable = |m: &&Measurement| m.rsrp_dbm > m.noise_floor_dbm + params.detection_snr_db;
    [Technology::SixG, Technology::FiveG, Technology::FourG]
        .into_iter()
        .filter_map(|tech| {
            measurements
                .iter()
                .filter(detectable)
                .filter(|m| m.technology == tech)
                .min_by(|a, b| b.rsrp_dbm.total_cmp(&a.rsrp_dbm).then(a.cell_id.cmp(&b.cell_id)))
        })
        .find(|best| params.eligible(best.technology, best.rsrp_dbm))
}

/// Preferred CSI-RS beam per polarization panel.
pub fn refine_beams(csirs: &BeamCodebook, responses: [&PanelResponse; 2]) -> (usize, usize) {
    (csirs.best_beam(responses[0]).0, csirs.best_beam(responses[1]).0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attachment {
    pub ue_id: u32,
    pub cell_id: u32,
    pub technology: Technology,
    pub ssb_beam: usize,
    pub csirs_beam_pair: (usize, usize),
    pub rsrp_ssb_dbm: f64,
}

/// Writes `ue_id,cell_id,tech,ssb_idx,csirs_pair,rsrp` rows.
pub fn write_attachments_csv<W: Write>(w: W, attachments: &[Attachment]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["ue_id", "cell_id", "tech", "ssb_idx", "csirs_pair", "rsrp"])?;
    for a in attachments {
        out.write_record([
            a.ue_id.to_string(),
            a.cell_id.to_string(),
            a.technology.label().to_string(),
            a.ssb_beam.to_string(),
            format!("{}/{}", a.csirs_beam_pair.0, a.csirs_beam_pair.1),
            format!("{:.3}", a.rsrp_ssb_dbm),
        ])?;
    }
    out.flush()?;
    Ok(())
}
