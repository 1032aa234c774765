//! Large-scale propagation (UMa / UMi pathloss, LoS probability, shadowing,
//! outdoor-to-indoor penetration) and Rician small-scale fading.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::rng::{self, CounterStream};

/// Speed of light in m/s.
const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Minimum 2D distance covered by the pathloss formulas.
pub const MIN_DISTANCE_2D_M: f64 = 10.0;

/// Antenna height above which a site is treated as urban macro.
pub const UMA_HEIGHT_THRESHOLD_M: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PropagationModel {
    UMa,
    UMi,
}

/// UMa iff the antenna sits strictly above 15 m.
pub fn classify_model(antenna_height_m: f64) -> PropagationModel {
    if antenna_height_m > UMA_HEIGHT_THRESHOLD_M {
        PropagationModel::UMa
    } else {
        PropagationModel::UMi
    }
}

/// LoS probability for a UE at or below 13 m.
pub fn los_probability(model: PropagationModel, distance_2d_m: f64, _ue_height_m: f64) -> f64 {
    let d = distance_2d_m.max(0.0);
    if d <= 18.0 {
        return 1.0;
    }
    let decay = match model {
        PropagationModel::UMa => 63.0,
        PropagationModel::UMi => 36.0,
    };
    18.0 / d + (-d / decay).exp() * (1.0 - 18.0 / d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pathloss {
    pub db: f64,
    /// The 2D distance was below the model minimum and was clamped to it.
    pub clamped: bool,
}

/// Breakpoint distance with 1 m effective environment height.
fn breakpoint_m(freq_ghz: f64, h_bs: f64, h_ut: f64) -> f64 {
    4.0 * (h_bs - 1.0) * (h_ut - 1.0) * freq_ghz * 1e9 / SPEED_OF_LIGHT
}

fn los_pathloss(model: PropagationModel, freq_ghz: f64, d2d: f64, d3d: f64, h_bs: f64, h_ut: f64) -> f64 {
    let d_bp = breakpoint_m(freq_ghz, h_bs, h_ut);
    let f_term = 20.0 * freq_ghz.log10();
    let dh2 = (h_bs - h_ut).powi(2);
    match model {
        PropagationModel::UMa => {
            if d2d <= d_bp {
                28.0 + 22.0 * d3d.log10() + f_term
            } else {
                28.0 + 40.0 * d3d.log10() + f_term - 9.0 * (d_bp * d_bp + dh2).log10()
            }
        }
        PropagationModel::UMi => {
            if d2d <= d_bp {
                32.4 + 21.0 * d3d.log10() + f_term
            } else {
                32.4 + 40.0 * d3d.log10() + f_term - 9.5 * (d_bp * d_bp + dh2).log10()
            }
        }
    }
}

/// UMa / UMi pathloss in dB. NLoS is the maximum of the LoS value and the
/// NLoS fit, so it never undercuts LoS.
pub fn pathloss(
    model: PropagationModel,
    los: bool,
    freq_ghz: f64,
    distance_2d_m: f64,
    bs_height_m: f64,
    ue_height_m: f64,
) -> Pathloss {
    let clamped = distance_2d_m < MIN_DISTANCE_2D_M;
    let d2d = distance_2d_m.max(MIN_DISTANCE_2D_M);
    let d3d = (d2d * d2d + (bs_height_m - ue_height_m).powi(2)).sqrt();
    let pl_los = los_pathloss(model, freq_ghz, d2d, d3d, bs_height_m, ue_height_m);
    let db = if los {
        pl_los
    } else {
        let nlos = match model {
            PropagationModel::UMa => {
                13.54 + 39.08 * d3d.log10() + 20.0 * freq_ghz.log10() - 0.6 * (ue_height_m - 1.5)
            }
            PropagationModel::UMi => {
                22.4 + 35.3 * d3d.log10() + 21.3 * freq_ghz.log10() - 0.3 * (ue_height_m - 1.5)
            }
        };
        pl_los.max(nlos)
    };
    Pathloss { db, clamped }
}

/// Shadow-fading standard deviation in dB.
pub fn shadowing_std_db(model: PropagationModel, los: bool) -> f64 {
    match (model, los) {
        (PropagationModel::UMa, true) => 4.0,
        (PropagationModel::UMa, false) => 6.0,
        (PropagationModel::UMi, true) => 4.0,
        (PropagationModel::UMi, false) => 7.82,
    }
}

pub fn sample_shadowing<R: Rng + ?Sized>(model: PropagationModel, los: bool, rng: &mut R) -> f64 {
    Normal::new(0.0, shadowing_std_db(model, los))
        .expect("positive std")
        .sample(rng)
}

/// Deterministic part of the low-loss building penetration (glass + concrete).
pub fn o2i_wall_loss_db(freq_ghz: f64) -> f64 {
    let l_glass = 2.0 + 0.2 * freq_ghz;
    let l_concrete = 5.0 + 4.0 * freq_ghz;
    5.0 - 10.0 * (0.3 * 10f64.powf(-l_glass / 10.0) + 0.7 * 10f64.powf(-l_concrete / 10.0)).log10()
}

/// Random building-specific draws of the O2I model, shared by every carrier a
/// UE sees from the same site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct O2iDraw {
    /// Indoor distance in m, min of two U(0, 25).
    pub inside_distance_m: f64,
    /// Standard normal, scaled by the 4.4 dB penetration spread.
    pub spread: f64,
}

impl O2iDraw {
    pub const O2I_STD_DB: f64 = 4.4;

    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let a: f64 = rng.random_range(0.0..25.0);
        let b: f64 = rng.random_range(0.0..25.0);
        Self {
            inside_distance_m: a.min(b),
            spread: StandardNormal.sample(rng),
        }
    }

    /// Total penetration loss (dB), floored at zero.
    pub fn loss_db(&self, freq_ghz: f64) -> f64 {
        (o2i_wall_loss_db(freq_ghz) + 0.5 * self.inside_distance_m + Self::O2I_STD_DB * self.spread)
            .max(0.0)
    }
}

/// Outdoor-to-indoor penetration: zero outdoors, low-loss model indoors.
pub fn o2i_penetration<R: Rng + ?Sized>(freq_ghz: f64, rng: &mut R, indoor: bool) -> f64 {
    if !indoor {
        return 0.0;
    }
    O2iDraw::sample(rng).loss_db(freq_ghz)
}

/// Per-PRB, per-polarization Rician fading of one link.
///
/// `h = sqrt(K/(K+1)) e^{j phi} + sqrt(1/(K+1)) g` with `g ~ CN(0,1)` drawn
/// independently per (PRB, polarization); `phi` is fixed per link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicianFading {
    los_amplitude: f64,
    scatter_amplitude: f64,
    los_phasor: Complex64,
    stream: CounterStream,
}

impl RicianFading {
    /// `k_db = -inf` gives Rayleigh, `+inf` a pure LoS unit gain.
    pub fn new(k_db: f64, los_phase: f64, key: u64) -> Self {
        let (los_amplitude, scatter_amplitude) = if k_db == f64::INFINITY {
            (1.0, 0.0)
        } else {
            let k = 10f64.powf(k_db / 10.0);
            ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
        };
        Self {
            los_amplitude,
            scatter_amplitude,
            los_phasor: Complex64::from_polar(1.0, los_phase),
            stream: CounterStream::new(key),
        }
    }

    #[inline]
    pub fn gain(&self, prb: usize, pol: usize) -> Complex64 {
        let mut h = self.los_phasor * self.los_amplitude;
        if self.scatter_amplitude > 0.0 {
            h += self.stream.complex_normal((prb * 2 + pol) as u64) * self.scatter_amplitude;
        }
        h
    }

    #[inline]
    pub fn power(&self, prb: usize, pol: usize) -> f64 {
        self.gain(prb, pol).norm_sqr()
    }
}

/// Draws `n_prb` x 2 polarization Rician gains with K-factor `rician_k_db`.
pub fn sample_fading<R: Rng + ?Sized>(n_prb: usize, rician_k_db: f64, rng: &mut R) -> Vec<[Complex64; 2]> {
    let fading = RicianFading::new(
        rician_k_db,
        rng.random_range(0.0..std::f64::consts::TAU),
        rng.random(),
    );
    (0..n_prb).map(|p| [fading.gain(p, 0), fading.gain(p, 1)]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    /// Rician K-factor of LoS links (dB); NLoS links are Rayleigh.
    pub rician_k_db_los: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self { rician_k_db_los: 9.0 }
    }
}

/// Transmitter side of a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxEnd {
    pub cell_id: u32,
    pub site_id: u32,
    pub x: f64,
    pub y: f64,
    pub height_m: f64,
    pub carrier_ghz: f64,
}

impl TxEnd {
    /// Same position, height and carrier: identical large-scale link.
    pub fn same_origin(&self, other: &TxEnd) -> bool {
        self.site_id == other.site_id
            && self.x == other.x
            && self.y == other.y
            && self.height_m == other.height_m
            && self.carrier_ghz == other.carrier_ghz
    }
}

/// Receiver side of a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RxEnd {
    pub ue_id: u32,
    pub x: f64,
    pub y: f64,
    pub height_m: f64,
    pub indoor: bool,
}

/// Frozen propagation state of one UE-cell pair for a snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    pub ue_id: u32,
    pub cell_id: u32,
    pub model: PropagationModel,
    pub los: bool,
    pub distance_2d: f64,
    pub distance_3d: f64,
    pub pathloss_db: f64,
    pub pathloss_clamped: bool,
    pub shadowing_db: f64,
    pub o2i_db: f64,
    /// `-inf` for NLoS (Rayleigh).
    pub rician_k_db: f64,
    /// Global azimuth from the site toward the UE, degrees from +x.
    pub azimuth_deg: f64,
    /// Elevation from the site antenna toward the UE, degrees.
    pub elevation_deg: f64,
    pub fading: RicianFading,
}

/// Per (UE, site) random draws shared by every cell of the site: LoS
/// uniform, shadowing deviate and the building penetration draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteDraw {
    pub los_uniform: f64,
    pub shadow_z: f64,
    pub building: O2iDraw,
}

impl SiteDraw {
    pub fn sample(seed: u64, snapshot: u64, ue_id: u32, site_id: u32) -> Self {
        let mut r = rng::stream(seed, &[rng::TAG_LINK, snapshot, ue_id as u64, site_id as u64]);
        let los_uniform = r.random::<f64>();
        let shadow_z: f64 = StandardNormal.sample(&mut r);
        let building = O2iDraw::sample(&mut r);
        Self {
            los_uniform,
            shadow_z,
            building,
        }
    }
}

impl LinkState {
    /// Draws the link for one snapshot.
    ///
    /// LoS state, shadowing and the building draw are keyed by (UE, site) so
    /// that co-sited sectors and carriers see the same physical path; the
    /// fading stream is keyed by (UE, cell).
    pub fn sample(tx: &TxEnd, rx: &RxEnd, params: &ChannelParams, seed: u64, snapshot: u64) -> Self {
        let draw = SiteDraw::sample(seed, snapshot, rx.ue_id, tx.site_id);
        Self::from_draw(tx, rx, params, &draw, seed, snapshot)
    }

    /// Builds the link from an existing (UE, site) draw.
    pub fn from_draw(tx: &TxEnd, rx: &RxEnd, params: &ChannelParams, draw: &SiteDraw, seed: u64, snapshot: u64) -> Self {
        let dx = rx.x - tx.x;
        let dy = rx.y - tx.y;
        let d2d = (dx * dx + dy * dy).sqrt();
        let dh = rx.height_m - tx.height_m;
        let model = classify_model(tx.height_m);
        let los = draw.los_uniform < los_probability(model, d2d, rx.height_m);

        let pl = pathloss(model, los, tx.carrier_ghz, d2d, tx.height_m, rx.height_m);
        let o2i_db = if rx.indoor {
            draw.building.loss_db(tx.carrier_ghz)
        } else {
            0.0
        };
        let rician_k_db = if los {
            params.rician_k_db_los
        } else {
            f64::NEG_INFINITY
        };
        let fading = Self::fading_of(rician_k_db, seed, snapshot, rx.ue_id, tx.cell_id);
        Self {
            ue_id: rx.ue_id,
            cell_id: tx.cell_id,
            model,
            los,
            distance_2d: d2d,
            distance_3d: (d2d * d2d + dh * dh).sqrt(),
            pathloss_db: pl.db,
            pathloss_clamped: pl.clamped,
            shadowing_db: draw.shadow_z * shadowing_std_db(model, los),
            o2i_db,
            rician_k_db,
            azimuth_deg: dy.atan2(dx).to_degrees(),
            elevation_deg: dh.atan2(d2d.max(1e-9)).to_degrees(),
            fading,
        }
    }

    fn fading_of(rician_k_db: f64, seed: u64, snapshot: u64, ue_id: u32, cell_id: u32) -> RicianFading {
        let key = rng::derive_seed(seed, &[rng::TAG_FADING, snapshot, ue_id as u64, cell_id as u64]);
        let los_phase = rng::CounterStream::new(key).uniform(u64::MAX) * std::f64::consts::TAU;
        RicianFading::new(rician_k_db, los_phase, key)
    }

    /// The same large-scale link seen from another cell of the same site and
    /// carrier: only the fading stream changes.
    pub fn for_cell(&self, cell_id: u32, seed: u64, snapshot: u64) -> Self {
        Self {
            cell_id,
            fading: Self::fading_of(self.rician_k_db, seed, snapshot, self.ue_id, cell_id),
            ..*self
        }
    }

    /// Pathloss + shadowing + penetration (dB).
    #[inline]
    pub fn coupling_loss_db(&self) -> f64 {
        self.pathloss_db + self.shadowing_db + self.o2i_db
    }

    /// Linear large-scale gain `10^(-loss/10)`.
    #[inline]
    pub fn large_scale_gain(&self) -> f64 {
        10f64.powf(-self.coupling_loss_db() / 10.0)
    }
}
