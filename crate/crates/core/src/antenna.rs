//! Antenna elements, cross-polarized panels and 2D-DFT beam codebooks.
//!
//! A panel is a grid of `n_rows x n_cols` ports per polarization. Each port
//! may drive a passive vertical column of `vertical_subarray` elements (the
//! compact 4G columns), otherwise one port feeds one element. Angles passed
//! to this module are relative to the panel boresight: azimuth positive
//! counter-clockwise, elevation positive upwards, both in degrees.
//!
//! Codewords are Kronecker products of a vertical and a horizontal DFT
//! steering vector, so their array factor factorizes into two Dirichlet
//! kernels. [`PanelResponse`] uses that closed form; [`beam_gain_db`] keeps the
//! explicit inner product as the reference route.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const ELEMENT_PEAK_GAIN_DBI: f64 = 8.0;
pub const ELEMENT_HPBW_DEG: f64 = 65.0;
pub const ELEMENT_FRONT_TO_BACK_DB: f64 = 30.0;
pub const ELEMENT_SIDE_LOBE_DB: f64 = 30.0;

/// Largest integer oversampling accepted when building a codebook.
pub const MAX_OVERSAMPLING: usize = 4;

/// Floor applied to the array factor magnitude so gains stay finite in nulls.
const AF_FLOOR: f64 = 1e-10;

/// Wraps an angle in degrees to (-180, 180].
pub fn wrap_deg(a: f64) -> f64 {
    let mut x = a % 360.0;
    if x > 180.0 {
        x -= 360.0;
    } else if x <= -180.0 {
        x += 360.0;
    }
    x
}

/// Single-element pattern (dBi): 8 dBi peak, 65 degree half-power beamwidths,
/// 30 dB vertical side-lobe and front-to-back floors.
pub fn element_gain_db(azimuth_off_deg: f64, elevation_off_deg: f64) -> f64 {
    let az = wrap_deg(azimuth_off_deg);
    let a_v = -(12.0 * (elevation_off_deg / ELEMENT_HPBW_DEG).powi(2)).min(ELEMENT_SIDE_LOBE_DB);
    let a_h = -(12.0 * (az / ELEMENT_HPBW_DEG).powi(2)).min(ELEMENT_FRONT_TO_BACK_DB);
    -(-(a_v + a_h)).min(ELEMENT_FRONT_TO_BACK_DB) + ELEMENT_PEAK_GAIN_DBI
}

/// Direction relative to a panel boresight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

impl Direction {
    pub const BORESIGHT: Direction = Direction {
        azimuth_deg: 0.0,
        elevation_deg: 0.0,
    };

    pub fn new(azimuth_deg: f64, elevation_deg: f64) -> Self {
        Self {
            azimuth_deg,
            elevation_deg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    /// Port rows per polarization (vertical).
    pub n_rows: usize,
    /// Port columns per polarization (horizontal).
    pub n_cols: usize,
    pub dual_polarized: bool,
    /// Horizontal element spacing in wavelengths.
    pub spacing_h: f64,
    /// Vertical element spacing in wavelengths.
    pub spacing_v: f64,
    /// Passive elements stacked vertically behind each port.
    pub vertical_subarray: usize,
    /// Mechanical downtilt in degrees (positive points below the horizon).
    pub downtilt_deg: f64,
}

impl ArrayGeometry {
    /// Dual-polarized panel with half-wavelength spacing and no tilt.
    pub fn panel(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            dual_polarized: true,
            spacing_h: 0.5,
            spacing_v: 0.5,
            vertical_subarray: 1,
            downtilt_deg: 0.0,
        }
    }

    /// Panel layout inferred from the transceiver count.
    ///
    /// Up to 8 TRX the radio is a compact cross-polarized column set with
    /// 4-element passive columns (`2T -> 1x1`, `4T -> 1x2`, `8T -> 1x4`);
    /// larger radios are fully digital 4-row planar arrays (`64T -> 4x8`,
    /// `128T -> 4x16`, `256T -> 4x32`).
    pub fn for_trx(n_trx: u32, downtilt_deg: f64) -> Result<Self> {
        let ports = match n_trx {
            2 | 4 | 8 | 64 | 128 | 256 => (n_trx / 2) as usize,
            _ => {
                return Err(Error::Config(format!(
                    "n_trx = {n_trx} is not one of 2, 4, 8, 64, 128, 256"
                )))
            }
        };
        let mut geom = if ports <= 4 {
            let mut g = Self::panel(1, ports);
            g.vertical_subarray = 4;
            g
        } else {
            Self::panel(4, ports / 4)
        };
        geom.downtilt_deg = downtilt_deg;
        Ok(geom)
    }

    /// Ports (digital chains) per polarization panel.
    pub fn ports_per_panel(&self) -> usize {
        self.n_rows * self.n_cols
    }

    /// Total radiating elements including both polarizations.
    pub fn element_count(&self) -> usize {
        let pol = if self.dual_polarized { 2 } else { 1 };
        self.n_rows * self.n_cols * self.vertical_subarray * pol
    }

    fn port_spacing_v(&self) -> f64 {
        self.spacing_v * self.vertical_subarray as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 || self.n_cols == 0 || self.vertical_subarray == 0 {
            return Err(Error::Config(format!("degenerate array geometry {self:?}")));
        }
        if !(self.spacing_h > 0.0 && self.spacing_v > 0.0) {
            return Err(Error::Config("element spacing must be positive".into()));
        }
        Ok(())
    }

    /// Element pattern plus the fixed vertical column factor (dBi).
    pub fn port_gain_db(&self, dir: Direction) -> f64 {
        let element = element_gain_db(dir.azimuth_deg, dir.elevation_deg);
        if self.vertical_subarray == 1 {
            return element;
        }
        let k = self.vertical_subarray;
        let u = self.spacing_v * dir.elevation_deg.to_radians().sin();
        let d = dirichlet(k, u);
        element + 10.0 * ((d * d * k as f64).max(AF_FLOOR * AF_FLOOR)).log10()
    }

    /// Normalized spatial frequencies `(u_v, u_h)` in cycles per port.
    fn spatial_freq(&self, dir: Direction) -> (f64, f64) {
        let az = dir.azimuth_deg.to_radians();
        let el = dir.elevation_deg.to_radians();
        (
            self.port_spacing_v() * el.sin(),
            self.spacing_h * az.sin() * el.cos(),
        )
    }

    /// Unit-norm steering vector over one polarization panel, row-major
    /// (vertical index outer).
    pub fn steering_vector(&self, dir: Direction) -> Vec<Complex64> {
        let (u_v, u_h) = self.spatial_freq(dir);
        dft_vector(self.n_rows, self.n_cols, u_v, u_h)
    }

    /// Direction of a global bearing/elevation in this panel's frame, for a
    /// panel facing `boresight_azimuth_deg`.
    pub fn local_direction(&self, boresight_azimuth_deg: f64, azimuth_deg: f64, elevation_deg: f64) -> Direction {
        Direction::new(
            wrap_deg(azimuth_deg - boresight_azimuth_deg),
            elevation_deg + self.downtilt_deg,
        )
    }

    /// Precomputes what is needed to evaluate any codeword toward `dir`.
    pub fn response(&self, dir: Direction) -> PanelResponse {
        let (u_v, u_h) = self.spatial_freq(dir);
        let port_gain_db = self.port_gain_db(dir);
        PanelResponse {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            u_v,
            u_h,
            port_gain_db,
            port_gain_lin: 10f64.powf(port_gain_db / 10.0),
        }
    }
}

fn dft_vector(n_rows: usize, n_cols: usize, f_v: f64, f_h: f64) -> Vec<Complex64> {
    let scale = 1.0 / ((n_rows * n_cols) as f64).sqrt();
    let mut out = Vec::with_capacity(n_rows * n_cols);
    for m in 0..n_rows {
        for n in 0..n_cols {
            let phase = 2.0 * PI * (m as f64 * f_v + n as f64 * f_h);
            out.push(Complex64::from_polar(scale, phase));
        }
    }
    out
}

/// `|sin(pi n x) / (n sin(pi x))|`, the normalized uniform-array factor.
#[inline]
fn dirichlet(n: usize, x: f64) -> f64 {
    if n == 1 {
        return 1.0;
    }
    let den = (PI * x).sin();
    if den.abs() < 1e-12 {
        return 1.0;
    }
    ((PI * n as f64 * x).sin() / (n as f64 * den)).abs()
}

/// Closed-form evaluator of codeword gains toward one direction.
#[derive(Debug, Clone, Copy)]
pub struct PanelResponse {
    n_rows: usize,
    n_cols: usize,
    u_v: f64,
    u_h: f64,
    port_gain_db: f64,
    port_gain_lin: f64,
}

impl PanelResponse {
    /// `|a^H w|` with a unit-norm steering vector, in [0, 1].
    #[inline]
    pub fn array_factor(&self, cw: &Codeword) -> f64 {
        dirichlet(self.n_rows, cw.spatial_freq_v - self.u_v)
            * dirichlet(self.n_cols, cw.spatial_freq_h - self.u_h)
    }

    /// Beam gain in dBi: port pattern plus coherent array gain.
    #[inline]
    pub fn gain_db(&self, cw: &Codeword) -> f64 {
        let n = (self.n_rows * self.n_cols) as f64;
        let af = self.array_factor(cw).max(AF_FLOOR);
        self.port_gain_db + 10.0 * (af * af * n).log10()
    }

    /// Beam gain as a linear power ratio.
    #[inline]
    pub fn gain_linear(&self, cw: &Codeword) -> f64 {
        let n = (self.n_rows * self.n_cols) as f64;
        let af = self.array_factor(cw).max(AF_FLOOR);
        self.port_gain_lin * af * af * n
    }
}

/// Beam gain (dBi) through the explicit steering-vector inner product.
pub fn beam_gain_db(array: &ArrayGeometry, codeword: &Codeword, dir: Direction) -> f64 {
    let a = array.steering_vector(dir);
    let inner: Complex64 = a.iter().zip(&codeword.weights).map(|(a, w)| a.conj() * w).sum();
    let n = array.ports_per_panel() as f64;
    let af = inner.norm().max(AF_FLOOR);
    array.port_gain_db(dir) + 20.0 * (af * n.sqrt()).log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BeamKind {
    Ssb,
    CsiRs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codeword {
    pub index: usize,
    /// Unit-norm weights over one polarization panel (row-major).
    pub weights: Vec<Complex64>,
    /// Beam center relative to the panel boresight.
    pub steering: Direction,
    pub spatial_freq_v: f64,
    pub spatial_freq_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamCodebook {
    pub kind: BeamKind,
    pub beams_v: usize,
    pub beams_h: usize,
    pub codewords: Vec<Codeword>,
    /// Distinct spatial frequencies per axis and each codeword's position in
    /// them; lets `best_beam` evaluate each axis kernel once.
    #[serde(skip)]
    axes: Axes,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Axes {
    freq_v: Vec<f64>,
    freq_h: Vec<f64>,
    index: Vec<(usize, usize)>,
}

impl Axes {
    fn of(codewords: &[Codeword]) -> Self {
        let mut axes = Axes::default();
        let slot = |list: &mut Vec<f64>, f: f64| match list.iter().position(|&x| x == f) {
            Some(i) => i,
            None => {
                list.push(f);
                list.len() - 1
            }
        };
        for cw in codewords {
            let v = slot(&mut axes.freq_v, cw.spatial_freq_v);
            let h = slot(&mut axes.freq_h, cw.spatial_freq_h);
            axes.index.push((v, h));
        }
        axes
    }
}

impl BeamCodebook {
    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    /// Strongest codeword toward `resp` and its gain in dBi; ties go to the
    /// lowest index.
    pub fn best_beam(&self, resp: &PanelResponse) -> (usize, f64) {
        const MAX_AXIS: usize = 64;
        let axes = &self.axes;
        if axes.index.len() != self.codewords.len() || axes.freq_v.len() > MAX_AXIS || axes.freq_h.len() > MAX_AXIS {
            let mut best = (0, f64::NEG_INFINITY);
            for cw in &self.codewords {
                let g = resp.gain_db(cw);
                if g > best.1 {
                    best = (cw.index, g);
                }
            }
            return best;
        }
        let mut dv = [0.0; MAX_AXIS];
        let mut dh = [0.0; MAX_AXIS];
        for (d, &f) in dv.iter_mut().zip(&axes.freq_v) {
            *d = dirichlet(resp.n_rows, f - resp.u_v);
        }
        for (d, &f) in dh.iter_mut().zip(&axes.freq_h) {
            *d = dirichlet(resp.n_cols, f - resp.u_h);
        }
        let mut best = (0, f64::NEG_INFINITY);
        for (cw, &(v, h)) in self.codewords.iter().zip(&axes.index) {
            let af = (dv[v] * dh[h]).max(AF_FLOOR);
            if af > best.1 {
                best = (cw.index, af);
            }
        }
        let n = (resp.n_rows * resp.n_cols) as f64;
        (best.0, resp.port_gain_db + 10.0 * (best.1 * best.1 * n).log10())
    }

    /// Writes the codebook (weights and steering angles) as pretty JSON.
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

fn dim_ok(beams: usize, ports: usize) -> bool {
    beams >= 1
        && (beams <= ports || (beams % ports == 0 && beams / ports <= MAX_OVERSAMPLING))
}

/// Spatial-frequency grid for `beams` DFT beams over `ports` ports.
///
/// With `beams >= ports` the grid is the `beams/ports`-times oversampled DFT;
/// with fewer beams it is the centered subset of the critically sampled DFT.
/// Both contain zero (boresight) and nest, so a coarse grid is a subset of any
/// finer grid over the same ports.
fn dft_grid(beams: usize, ports: usize) -> Vec<f64> {
    let resolution = beams.max(ports) as f64;
    let start = -((beams / 2) as i64);
    (0..beams as i64).map(|k| (start + k) as f64 / resolution).collect()
}

/// Splits a codebook size into a (vertical, horizontal) beam grid.
fn beam_grid(array: &ArrayGeometry, kind: BeamKind, size: usize) -> Result<(usize, usize)> {
    if size == 0 {
        return Err(Error::Config("codebook size must be positive".into()));
    }
    let preferred = match kind {
        BeamKind::Ssb => 1,
        BeamKind::CsiRs => array.n_rows,
    };
    std::iter::once(preferred)
        .chain((1..=size).filter(|d| *d != preferred))
        .filter(|bv| size % bv == 0)
        .map(|bv| (bv, size / bv))
        .find(|&(bv, bh)| dim_ok(bv, array.n_rows) && dim_ok(bh, array.n_cols))
        .ok_or_else(|| {
            Error::Config(format!(
                "{kind:?} codebook of size {size} cannot be factored onto a {}x{} panel \
                 with integer oversampling <= {MAX_OVERSAMPLING}",
                array.n_rows, array.n_cols
            ))
        })
}

/// Builds a 2D-DFT codebook of exactly `size` unit-norm codewords.
///
/// SSB codebooks sweep horizontally with a single vertical beam on the tilted
/// boresight; CSI-RS codebooks are critically sampled vertically and take the
/// remaining factor horizontally (oversampled when it exceeds the columns).
pub fn build_codebook(array: &ArrayGeometry, kind: BeamKind, size: usize) -> Result<BeamCodebook> {
    array.validate()?;
    let (beams_v, beams_h) = beam_grid(array, kind, size)?;
    let grid_v = dft_grid(beams_v, array.n_rows);
    let grid_h = dft_grid(beams_h, array.n_cols);
    let d_v = array.port_spacing_v();
    let mut codewords = Vec::with_capacity(size);
    for &f_v in &grid_v {
        for &f_h in &grid_h {
            let el = (f_v / d_v).clamp(-1.0, 1.0).asin();
            let az = (f_h / (array.spacing_h * el.cos())).clamp(-1.0, 1.0).asin();
            codewords.push(Codeword {
                index: codewords.len(),
                weights: dft_vector(array.n_rows, array.n_cols, f_v, f_h),
                steering: Direction::new(az.to_degrees(), el.to_degrees()),
                spatial_freq_v: f_v,
                spatial_freq_h: f_h,
            });
        }
    }
    Ok(BeamCodebook {
        kind,
        beams_v,
        beams_h,
        axes: Axes::of(&codewords),
        codewords,
    })
}
