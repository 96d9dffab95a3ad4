//! Multicomponent linear-FM signals, their exact derivatives and sampled captures.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TAU: f64 = 2.0 * PI;

/// Wraps an angle into (-pi, pi].
pub fn wrap_phase(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Absolute angular distance on the circle, in [0, pi].
pub fn phase_distance(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}

/// One chirp `a * exp(j(k t^2 + 2 pi f t + phi))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LfmComponent {
    pub a: f64,
    /// Chirp rate in rad/s^2.
    #[serde(rename = "k_rad_s2")]
    pub k: f64,
    /// Start frequency in Hz.
    #[serde(rename = "f_hz")]
    pub f: f64,
    #[serde(rename = "phi_rad")]
    pub phi: f64,
}

impl LfmComponent {
    /// Validates the parameters and wraps the phase into (-pi, pi].
    pub fn new(a: f64, k: f64, f: f64, phi: f64) -> Result<Self> {
        let c = LfmComponent {
            a,
            k,
            f,
            phi: wrap_phase(phi),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.k.is_finite() && self.f.is_finite() && self.phi.is_finite())
        {
            return Err(Error::input(format!(
                "non-finite component parameter: {self:?}"
            )));
        }
        if self.a <= 0.0 {
            return Err(Error::input(format!(
                "amplitude must be positive, got {}",
                self.a
            )));
        }
        Ok(())
    }

    /// Angular start frequency in rad/s.
    pub fn omega(&self) -> f64 {
        TAU * self.f
    }

    /// Instantaneous angular frequency `2kt + omega`.
    pub fn inst_omega(&self, t: f64) -> f64 {
        2.0 * self.k * t + self.omega()
    }

    /// `a * exp(j phi)`.
    pub fn complex_amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.a, self.phi)
    }

    /// The component's value at time `t`.
    pub fn value(&self, t: f64) -> Complex64 {
        Complex64::from_polar(self.a, self.k * t * t + self.omega() * t + self.phi)
    }
}

/// Uniform sampling grid `t_g = t0 + g dt`, g = 0..count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid {
    pub t0: f64,
    pub dt: f64,
    pub count: usize,
}

impl SamplingGrid {
    pub fn new(t0: f64, dt: f64, count: usize) -> Result<Self> {
        if !t0.is_finite() || !dt.is_finite() || dt <= 0.0 {
            return Err(Error::input(format!("invalid grid: t0={t0}, dt={dt}")));
        }
        if count == 0 {
            return Err(Error::input("grid must contain at least one sample"));
        }
        Ok(SamplingGrid { t0, dt, count })
    }

    /// Time of zero-based sample `g`.
    pub fn time(&self, g: usize) -> f64 {
        self.t0 + g as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.count).map(|g| self.time(g)).collect()
    }

    /// Time of the last sample.
    pub fn end(&self) -> f64 {
        self.time(self.count - 1)
    }

    /// The sub-grid of `len` samples starting at sample `offset`.
    pub fn window(&self, offset: usize, len: usize) -> Result<SamplingGrid> {
        if len == 0 || offset + len > self.count {
            return Err(Error::input(format!(
                "window [{offset}, {}) exceeds grid of {} samples",
                offset + len,
                self.count
            )));
        }
        Ok(SamplingGrid {
            t0: self.time(offset),
            dt: self.dt,
            count: len,
        })
    }
}

/// Complex white Gaussian noise settings; infinite SNR means noiseless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub snr_db: f64,
    /// SNR of the derivative channel; `None` uses `snr_db`.
    #[serde(default)]
    pub xdot_snr_db: Option<f64>,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        NoiseSpec {
            snr_db: f64::INFINITY,
            xdot_snr_db: None,
            seed: 0,
        }
    }

    pub fn new(snr_db: f64, seed: u64) -> Self {
        NoiseSpec {
            snr_db,
            xdot_snr_db: None,
            seed,
        }
    }

    pub fn xdot_snr(&self) -> f64 {
        self.xdot_snr_db.unwrap_or(self.snr_db)
    }

    fn validate(&self) -> Result<()> {
        for s in [self.snr_db, self.xdot_snr()] {
            if s.is_nan() || s == f64::NEG_INFINITY {
                return Err(Error::input(format!("invalid SNR {s}")));
            }
        }
        Ok(())
    }
}

/// How a synthetic capture was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub components: Vec<LfmComponent>,
    pub noise: NoiseSpec,
}

/// Signal and derivative samples on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalCapture {
    pub grid: SamplingGrid,
    pub x: Vec<Complex64>,
    pub xdot: Vec<Complex64>,
    /// `None` for externally loaded data.
    pub provenance: Option<Provenance>,
}

impl SignalCapture {
    /// Builds a capture from raw channels, checking lengths and finiteness.
    pub fn new(grid: SamplingGrid, x: Vec<Complex64>, xdot: Vec<Complex64>) -> Result<Self> {
        if x.len() != grid.count || xdot.len() != grid.count {
            return Err(Error::input(format!(
                "channel lengths {} and {} do not match grid count {}",
                x.len(),
                xdot.len(),
                grid.count
            )));
        }
        if x.iter()
            .chain(xdot.iter())
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::input("capture contains non-finite samples"));
        }
        Ok(SignalCapture {
            grid,
            x,
            xdot,
            provenance: None,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.count
    }

    pub fn is_empty(&self) -> bool {
        self.grid.count == 0
    }

    /// Multiplies both channels by a complex constant.
    pub fn scaled(&self, c: Complex64) -> SignalCapture {
        SignalCapture {
            grid: self.grid,
            x: self.x.iter().map(|z| z * c).collect(),
            xdot: self.xdot.iter().map(|z| z * c).collect(),
            provenance: None,
        }
    }
}

fn check_inputs(components: &[LfmComponent], times: &[f64]) -> Result<()> {
    for c in components {
        c.validate()?;
    }
    if let Some(t) = times.iter().find(|t| !t.is_finite()) {
        return Err(Error::input(format!("non-finite time {t}")));
    }
    Ok(())
}

/// Sum of the components at each time.
pub fn eval_signal(components: &[LfmComponent], times: &[f64]) -> Result<Vec<Complex64>> {
    check_inputs(components, times)?;
    Ok(times
        .iter()
        .map(|&t| components.iter().map(|c| c.value(t)).sum())
        .collect())
}

/// Exact time derivative of [`eval_signal`].
pub fn eval_derivative(components: &[LfmComponent], times: &[f64]) -> Result<Vec<Complex64>> {
    check_inputs(components, times)?;
    Ok(times
        .iter()
        .map(|&t| {
            components
                .iter()
                .map(|c| Complex64::new(0.0, c.inst_omega(t)) * c.value(t))
                .sum()
        })
        .collect())
}

fn add_noise(v: &mut [Complex64], snr_db: f64, rng: &mut ChaCha8Rng) {
    if snr_db == f64::INFINITY {
        return;
    }
    let power = v.iter().map(|z| z.norm_sqr()).sum::<f64>() / v.len() as f64;
    let sigma = (power / 10f64.powf(snr_db / 10.0) / 2.0).sqrt();
    for z in v.iter_mut() {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *z += Complex64::new(sigma * re, sigma * im);
    }
}

/// Samples both channels on `grid` and adds calibrated noise.
///
/// Noise is drawn from a ChaCha8 stream seeded with `noise.seed`: first the
/// x channel, then the derivative channel. Each channel's noise power is set
/// from that channel's own mean sample power.
pub fn sample_capture(
    components: &[LfmComponent],
    grid: SamplingGrid,
    noise: NoiseSpec,
) -> Result<SignalCapture> {
    let grid = SamplingGrid::new(grid.t0, grid.dt, grid.count)?;
    noise.validate()?;
    let times = grid.times();
    let mut x = eval_signal(components, &times)?;
    let mut xdot = eval_derivative(components, &times)?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    add_noise(&mut x, noise.snr_db, &mut rng);
    add_noise(&mut xdot, noise.xdot_snr(), &mut rng);
    Ok(SignalCapture {
        grid,
        x,
        xdot,
        provenance: Some(Provenance {
            components: components.to_vec(),
            noise,
        }),
    })
}

/// Peak instantaneous frequency over the grid divided by the grid's Nyquist frequency.
pub fn nyquist_deficit(components: &[LfmComponent], grid: &SamplingGrid) -> Result<f64> {
    if components.is_empty() {
        return Err(Error::input("nyquist_deficit needs at least one component"));
    }
    let nyquist = 1.0 / (2.0 * grid.dt);
    // |2kt + w| is piecewise linear in t, so its maximum is at an endpoint.
    let peak = components
        .iter()
        .flat_map(|c| [c.inst_omega(grid.t0).abs(), c.inst_omega(grid.end()).abs()])
        .fold(0.0, f64::max);
    Ok(peak / TAU / nyquist)
}

/// Contents of a signal spec JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub components: Vec<LfmComponent>,
}

impl SignalSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SignalSpec = serde_json::from_str(text)?;
        for c in &spec.components {
            c.validate()?;
        }
        Ok(SignalSpec {
            components: spec
                .components
                .iter()
                .map(|c| LfmComponent {
                    phi: wrap_phase(c.phi),
                    ..*c
                })
                .collect(),
        })
    }
}
