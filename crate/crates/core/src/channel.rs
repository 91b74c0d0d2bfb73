//! Channel generation for one realization of the Alice / IRS / Bob / Eves
//! geometry.
//!
//! Every link follows the Rician model
//! `sqrt(L0 d^-c) * (sqrt(β/(1+β)) g_los + sqrt(1/(1+β)) g_nlos)` with
//! far-field planar-wavefront LoS components. The IRS is a uniform
//! rectangular array in the x-z plane centred on its position (facing +y),
//! rows stacked along z, columns along x, elements indexed row-major.
//!
//! # Random streams
//!
//! A realization is fully determined by a `u64` seed. Each channel tensor
//! draws from its own ChaCha8 stream, `ChaCha8Rng::seed_from_u64(seed)` with
//! `set_stream(id)`:
//!
//! | tensor      | stream id       |
//! |-------------|-----------------|
//! | `H_ar`      | `0`             |
//! | `h_ab`      | `1`             |
//! | `h_rb`      | `2`             |
//! | `h_ae[k]`   | `0x100 + k`     |
//! | `h_re[k]`   | `0x200 + k`     |
//!
//! Streams at and above [`OPTIMIZER_STREAM_BASE`] are reserved for the
//! optimizers (initial jamming direction, Gaussian randomization).

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::{cn_matrix, ComplexMatrix, ComplexVector, C64};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub const STREAM_H_AR: u64 = 0;
pub const STREAM_H_AB: u64 = 1;
pub const STREAM_H_RB: u64 = 2;
pub const STREAM_H_AE_BASE: u64 = 0x100;
pub const STREAM_H_RE_BASE: u64 = 0x200;
pub const OPTIMIZER_STREAM_BASE: u64 = 0x1000;

/// Cartesian position in meters.
pub type Position = [f64; 3];

pub fn distance(a: &Position, b: &Position) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// The seeded ChaCha8 stream `stream` of realization `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Eavesdropper placement scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setup {
    /// Eves close to the IRS, LoS IRS-Eve links.
    A,
    /// Eves far from the IRS, Rayleigh IRS-Eve links.
    B,
}

impl Setup {
    pub fn label(self) -> &'static str {
        match self {
            Setup::A => "a",
            Setup::B => "b",
        }
    }
}

impl std::str::FromStr for Setup {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(Setup::A),
            "b" => Ok(Setup::B),
            other => invalid(format!("unknown setup tag {other:?}, expected 'a' or 'b'")),
        }
    }
}

/// Path-loss exponent and Rician factor of one link class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkParams {
    pub exponent: f64,
    /// Rician K-factor; `0` is Rayleigh, `inf` is pure LoS.
    pub rician: f64,
}

impl LinkParams {
    pub const fn new(exponent: f64, rician: f64) -> Self {
        Self { exponent, rician }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    pub carrier_freq_hz: f64,
    /// Path loss at 1 m in dB (negative means attenuation).
    pub l0_db: f64,
    pub alice_bob: LinkParams,
    pub alice_eve: LinkParams,
    pub alice_irs: LinkParams,
    pub irs_bob: LinkParams,
    pub irs_eve_setup_a: LinkParams,
    pub irs_eve_setup_b: LinkParams,
    pub ura_rows: usize,
    /// IRS element spacing in wavelengths.
    pub irs_spacing_wavelengths: f64,
    /// Alice's antennas form a ULA along x with this spacing in wavelengths.
    pub alice_spacing_wavelengths: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            carrier_freq_hz: 750e6,
            l0_db: -30.0,
            alice_bob: LinkParams::new(5.0, 0.0),
            alice_eve: LinkParams::new(5.0, 0.0),
            alice_irs: LinkParams::new(3.5, 0.0),
            irs_bob: LinkParams::new(2.0, f64::INFINITY),
            irs_eve_setup_a: LinkParams::new(2.0, f64::INFINITY),
            irs_eve_setup_b: LinkParams::new(5.0, 0.0),
            ura_rows: 5,
            irs_spacing_wavelengths: 3.0 / 8.0,
            alice_spacing_wavelengths: 0.5,
        }
    }
}

impl ChannelParams {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }

    pub fn l0_linear(&self) -> f64 {
        10f64.powf(self.l0_db / 10.0)
    }

    pub fn irs_eve(&self, setup: Setup) -> LinkParams {
        match setup {
            Setup::A => self.irs_eve_setup_a,
            Setup::B => self.irs_eve_setup_b,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.carrier_freq_hz > 0.0) {
            return invalid("carrier frequency must be positive");
        }
        if !self.l0_db.is_finite() {
            return invalid("L0 must be finite");
        }
        for (name, link) in [
            ("alice_bob", self.alice_bob),
            ("alice_eve", self.alice_eve),
            ("alice_irs", self.alice_irs),
            ("irs_bob", self.irs_bob),
            ("irs_eve_setup_a", self.irs_eve_setup_a),
            ("irs_eve_setup_b", self.irs_eve_setup_b),
        ] {
            if !(link.exponent >= 2.0) || !link.exponent.is_finite() {
                return invalid(format!("{name}: path-loss exponent must be >= 2"));
            }
            if !(link.rician >= 0.0) {
                return invalid(format!("{name}: Rician factor must be >= 0 or inf"));
            }
        }
        if self.ura_rows == 0 || !n.is_multiple_of(self.ura_rows) {
            return invalid(format!("ura_rows = {} must divide N = {n}", self.ura_rows));
        }
        if !(self.irs_spacing_wavelengths > 0.0) || !(self.alice_spacing_wavelengths > 0.0) {
            return invalid("element spacings must be positive");
        }
        Ok(())
    }
}

/// Node positions and the Eve segments of both setups.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub alice: Position,
    pub irs: Position,
    pub bob: Position,
    /// Eves of Setup (a) are spread from the first to the second point.
    pub eve_segment_a: [Position; 2],
    /// Eves of Setup (b); listed as the mirror image of segment (a) so the
    /// k-th Eve of each setup sits at mirrored positions.
    pub eve_segment_b: [Position; 2],
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            alice: [5.0, 0.0, 20.0],
            irs: [0.0, 100.0, 2.0],
            bob: [3.0, 100.0, 0.0],
            eve_segment_a: [[2.0, 95.0, 0.0], [2.0, 105.0, 0.0]],
            eve_segment_b: [[2.0, -95.0, 0.0], [2.0, -105.0, 0.0]],
        }
    }
}

impl GeometryConfig {
    /// `k` Eves equally spaced along the setup's segment, endpoints included;
    /// a single Eve sits at the midpoint.
    pub fn eve_positions(&self, setup: Setup, k: usize) -> Vec<Position> {
        let [start, end] = match setup {
            Setup::A => self.eve_segment_a,
            Setup::B => self.eve_segment_b,
        };
        (0..k)
            .map(|i| {
                let frac = if k == 1 {
                    0.5
                } else {
                    i as f64 / (k - 1) as f64
                };
                [0, 1, 2].map(|d| start[d] + frac * (end[d] - start[d]))
            })
            .collect()
    }

    pub fn nodes(&self, setup: Setup, k: usize) -> Result<NodeGeometry> {
        let g = NodeGeometry {
            alice: self.alice,
            irs: self.irs,
            bob: self.bob,
            eves: self.eve_positions(setup, k),
        };
        g.validate()?;
        Ok(g)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeGeometry {
    pub alice: Position,
    pub irs: Position,
    pub bob: Position,
    pub eves: Vec<Position>,
}

impl NodeGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.eves.is_empty() {
            return invalid("at least one Eve is required");
        }
        let mut named = vec![("alice", self.alice), ("irs", self.irs), ("bob", self.bob)];
        named.extend(self.eves.iter().map(|e| ("eve", *e)));
        for i in 0..named.len() {
            for j in (i + 1)..named.len() {
                // Eves may share a location with each other (duplicated Eve).
                if named[i].0 == "eve" && named[j].0 == "eve" {
                    continue;
                }
                if !(distance(&named[i].1, &named[j].1) > 0.0) {
                    return invalid(format!("{} and {} coincide", named[i].0, named[j].0));
                }
            }
        }
        Ok(())
    }
}

/// Element layout of an antenna array, offsets relative to the array centre.
#[derive(Clone, Debug, PartialEq)]
pub enum ArrayLayout {
    Single,
    /// Uniform linear array along `axis` (unit vector).
    Linear {
        count: usize,
        spacing: f64,
        axis: [f64; 3],
    },
    /// Uniform rectangular array in the x-z plane: rows along z, columns
    /// along x, row-major element order.
    Rectangular {
        rows: usize,
        cols: usize,
        spacing: f64,
    },
}

impl ArrayLayout {
    pub fn len(&self) -> usize {
        match self {
            ArrayLayout::Single => 1,
            ArrayLayout::Linear { count, .. } => *count,
            ArrayLayout::Rectangular { rows, cols, .. } => rows * cols,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn offsets(&self) -> Vec<[f64; 3]> {
        match *self {
            ArrayLayout::Single => vec![[0.0; 3]],
            ArrayLayout::Linear {
                count,
                spacing,
                axis,
            } => {
                let mid = (count as f64 - 1.0) / 2.0;
                (0..count)
                    .map(|i| axis.map(|a| a * (i as f64 - mid) * spacing))
                    .collect()
            }
            ArrayLayout::Rectangular {
                rows,
                cols,
                spacing,
            } => {
                let rmid = (rows as f64 - 1.0) / 2.0;
                let cmid = (cols as f64 - 1.0) / 2.0;
                let mut out = Vec::with_capacity(rows * cols);
                for r in 0..rows {
                    for c in 0..cols {
                        out.push([
                            (c as f64 - cmid) * spacing,
                            0.0,
                            (r as f64 - rmid) * spacing,
                        ]);
                    }
                }
                out
            }
        }
    }

    /// Planar-wavefront phase factors `exp(j 2π/λ <offset, direction>)`.
    pub fn steering(&self, direction: &[f64; 3], wavelength: f64) -> ComplexVector {
        let k = 2.0 * std::f64::consts::PI / wavelength;
        let offs = self.offsets();
        DVector::from_iterator(
            offs.len(),
            offs.iter().map(|p| {
                let proj: f64 = p.iter().zip(direction).map(|(a, b)| a * b).sum();
                C64::from_polar(1.0, k * proj)
            }),
        )
    }
}

/// `L0 * d^-c`.
pub fn path_loss(distance: f64, exponent: f64, l0: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return invalid(format!("distance must be positive, got {distance}"));
    }
    Ok(l0 * distance.powf(-exponent))
}

/// Deterministic LoS matrix (rx elements x tx elements) between two arrays.
///
/// Entry `(i, j)` is `a_rx[i] * a_tx[j]`, where the transmit steering uses the
/// departure direction (tx towards rx) and the receive steering the arrival
/// direction (rx towards tx).
pub fn los_component(
    tx: &Position,
    tx_layout: &ArrayLayout,
    rx: &Position,
    rx_layout: &ArrayLayout,
    wavelength: f64,
) -> Result<ComplexMatrix> {
    let d = distance(tx, rx);
    if !(d > 0.0) {
        return invalid("LoS endpoints coincide");
    }
    let dep = [0, 1, 2].map(|i| (rx[i] - tx[i]) / d);
    let arr = dep.map(|x| -x);
    let a_tx = tx_layout.steering(&dep, wavelength);
    let a_rx = rx_layout.steering(&arr, wavelength);
    Ok(&a_rx * a_tx.transpose())
}

/// One Rician draw `sqrt(gain) (sqrt(β/(1+β)) los + sqrt(1/(1+β)) g_nlos)`.
pub fn sample_channel<R: rand::Rng + ?Sized>(
    gain: f64,
    rician: f64,
    los: &ComplexMatrix,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    if !(gain >= 0.0) {
        return invalid(format!("channel gain must be non-negative, got {gain}"));
    }
    if !(rician >= 0.0) {
        return invalid(format!("Rician factor must be >= 0 or inf, got {rician}"));
    }
    let amp = C64::new(gain.sqrt(), 0.0);
    if rician.is_infinite() {
        return Ok(los * amp);
    }
    let w_los = (rician / (1.0 + rician)).sqrt();
    let w_nlos = (1.0 / (1.0 + rician)).sqrt();
    let nlos = cn_matrix(los.nrows(), los.ncols(), rng);
    Ok((los * C64::new(w_los, 0.0) + nlos * C64::new(w_nlos, 0.0)) * amp)
}

/// `[diag(h_ri^H) H_ar ; h_ai^H]`, an (N+1) x M matrix.
pub fn assemble_composite(
    h_ar: &ComplexMatrix,
    h_ri: &ComplexVector,
    h_ai: &ComplexVector,
) -> Result<ComplexMatrix> {
    let (n, m) = h_ar.shape();
    if h_ri.len() != n || h_ai.len() != m {
        return invalid(format!(
            "composite: H_ar is {n}x{m} but h_ri has {} and h_ai has {} entries",
            h_ri.len(),
            h_ai.len()
        ));
    }
    let mut out = ComplexMatrix::zeros(n + 1, m);
    for r in 0..n {
        let w = h_ri[r].conj();
        for c in 0..m {
            out[(r, c)] = w * h_ar[(r, c)];
        }
    }
    for c in 0..m {
        out[(n, c)] = h_ai[c].conj();
    }
    Ok(out)
}

/// All channels of one realization. Vector channels are stored as column
/// vectors `h`; the physical row channel is `h^H`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    pub h_ar: ComplexMatrix,
    pub h_ab: ComplexVector,
    pub h_ae: Vec<ComplexVector>,
    pub h_rb: ComplexVector,
    pub h_re: Vec<ComplexVector>,
    pub composite_b: ComplexMatrix,
    pub composite_e: Vec<ComplexMatrix>,
}

impl ChannelSet {
    pub fn from_parts(
        h_ar: ComplexMatrix,
        h_ab: ComplexVector,
        h_ae: Vec<ComplexVector>,
        h_rb: ComplexVector,
        h_re: Vec<ComplexVector>,
    ) -> Result<Self> {
        if h_ae.is_empty() || h_ae.len() != h_re.len() {
            return invalid(format!(
                "need K >= 1 matching Eve channels, got {} direct and {} reflected",
                h_ae.len(),
                h_re.len()
            ));
        }
        let composite_b = assemble_composite(&h_ar, &h_rb, &h_ab)?;
        let composite_e = h_re
            .iter()
            .zip(&h_ae)
            .map(|(re, ae)| assemble_composite(&h_ar, re, ae))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            h_ar,
            h_ab,
            h_ae,
            h_rb,
            h_re,
            composite_b,
            composite_e,
        })
    }

    /// Transmit antennas M.
    pub fn m(&self) -> usize {
        self.h_ar.ncols()
    }

    /// IRS elements N.
    pub fn n(&self) -> usize {
        self.h_ar.nrows()
    }

    /// Eavesdroppers K.
    pub fn k(&self) -> usize {
        self.composite_e.len()
    }
}

/// Sizes and parameters needed to draw one realization.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelScenario<'a> {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub setup: Setup,
    pub params: &'a ChannelParams,
    pub geometry: &'a GeometryConfig,
}

/// Draws every channel of one realization from the seeded substreams listed
/// in the module docs and assembles the composite matrices.
pub fn build_scenario(s: &ChannelScenario<'_>, seed: u64) -> Result<ChannelSet> {
    if s.m == 0 || s.n == 0 || s.k == 0 {
        return invalid("M, N and K must all be >= 1");
    }
    s.params.validate(s.n)?;
    let nodes = s.geometry.nodes(s.setup, s.k)?;
    let p = s.params;
    let lambda = p.wavelength();
    let l0 = p.l0_linear();
    let alice = ArrayLayout::Linear {
        count: s.m,
        spacing: p.alice_spacing_wavelengths * lambda,
        axis: [1.0, 0.0, 0.0],
    };
    let irs = ArrayLayout::Rectangular {
        rows: p.ura_rows,
        cols: s.n / p.ura_rows,
        spacing: p.irs_spacing_wavelengths * lambda,
    };
    let single = ArrayLayout::Single;

    let draw = |tx: &Position,
                tx_l: &ArrayLayout,
                rx: &Position,
                rx_l: &ArrayLayout,
                link: LinkParams,
                stream: u64|
     -> Result<ComplexMatrix> {
        let gain = path_loss(distance(tx, rx), link.exponent, l0)?;
        let los = los_component(tx, tx_l, rx, rx_l, lambda)?;
        sample_channel(gain, link.rician, &los, &mut substream(seed, stream))
    };
    // Row channels (1 x cols) become column vectors h with h^H = row.
    let as_column = |row: ComplexMatrix| -> ComplexVector { row.row(0).adjoint() };

    let h_ar = draw(
        &nodes.alice,
        &alice,
        &nodes.irs,
        &irs,
        p.alice_irs,
        STREAM_H_AR,
    )?;
    let h_ab = as_column(draw(
        &nodes.alice,
        &alice,
        &nodes.bob,
        &single,
        p.alice_bob,
        STREAM_H_AB,
    )?);
    let h_rb = as_column(draw(
        &nodes.irs,
        &irs,
        &nodes.bob,
        &single,
        p.irs_bob,
        STREAM_H_RB,
    )?);
    let re_link = p.irs_eve(s.setup);
    let mut h_ae = Vec::with_capacity(s.k);
    let mut h_re = Vec::with_capacity(s.k);
    for (k, eve) in nodes.eves.iter().enumerate() {
        let k = k as u64;
        h_ae.push(as_column(draw(
            &nodes.alice,
            &alice,
            eve,
            &single,
            p.alice_eve,
            STREAM_H_AE_BASE + k,
        )?));
        h_re.push(as_column(draw(
            &nodes.irs,
            &irs,
            eve,
            &single,
            re_link,
            STREAM_H_RE_BASE + k,
        )?));
    }
    ChannelSet::from_parts(h_ar, h_ab, h_ae, h_rb, h_re)
}
