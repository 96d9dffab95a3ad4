//! Amplitude and initial phase recovery once (k, f) are known.

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel::{hankel, unit_chirp_source, HankelMatrix};
use crate::linalg::{self, CMat};
use crate::signal::{wrap_phase, SamplingGrid, SignalCapture};

/// Hankel matrix of the unit chirp `exp(j(k t^2 + 2 pi f t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitChirpMatrix {
    pub k: f64,
    pub f: f64,
    pub l: HankelMatrix,
}

pub fn unit_chirp_hankel(k: f64, f: f64, grid: &SamplingGrid, n: usize) -> Result<UnitChirpMatrix> {
    if n == 0 || grid.count < 2 * n - 1 {
        return Err(Error::input(format!(
            "unit chirp of order {n} needs {} samples",
            2 * n - 1
        )));
    }
    let window = grid.window(0, 2 * n - 1)?;
    let l = hankel(&unit_chirp_source(k, f, &window)?)?;
    Ok(UnitChirpMatrix { k, f, l })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeSource {
    Pencil,
    #[serde(rename = "ls")]
    LeastSquares,
}

/// A candidate complex amplitude `beta = a exp(j phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeCandidate {
    pub beta: Complex64,
    pub residual: f64,
    pub source: AmplitudeSource,
}

/// Finite generalized eigenvalues of the pencil (X, L), sorted by residual
/// `||(X - beta L) v|| / (||X v|| + |beta| ||L v||)`.
///
/// The pencil is first restricted to the joint dominant range of X and L
/// (same construction as the two-parameter projection), which discards the
/// common null space. An empty result means the pencil has no finite
/// eigenvalue and the caller should use least squares.
pub fn amplitude_pencil(
    x: &HankelMatrix,
    l: &UnitChirpMatrix,
    rank_tol: f64,
) -> Result<Vec<AmplitudeCandidate>> {
    if x.order() != l.l.order() {
        return Err(Error::structure(
            "signal and unit chirp matrices differ in order",
        ));
    }
    let (xm, lm) = (x.to_mat(), l.l.to_mat());
    let xnorm = linalg::fro_norm(xm.as_ref());
    if xnorm == 0.0 {
        return Ok(vec![]);
    }
    let (u, _) = linalg::joint_range(&[xm.as_ref(), lm.as_ref()], rank_tol, "amplitude_pencil")?;
    let (uh, uc) = (linalg::adjoint(u.as_ref()), linalg::conj(u.as_ref()));
    let xr: CMat = &uh * &xm * &uc;
    let lr: CMat = &uh * &lm * &uc;
    let pairs = linalg::gen_eigen(xr.as_ref(), lr.as_ref(), "amplitude_pencil")?;
    let scale = linalg::fro_norm(lr.as_ref());
    let mut out: Vec<AmplitudeCandidate> = pairs
        .iter()
        .filter_map(|p| {
            let beta = p.value(scale)?;
            let v = linalg::mat_vec(uc.as_ref(), &p.z);
            let xv = linalg::mat_vec(xm.as_ref(), &v);
            let lv = linalg::mat_vec(lm.as_ref(), &v);
            let r: Vec<Complex64> = xv.iter().zip(&lv).map(|(a, b)| a - beta * b).collect();
            let den = linalg::vec_norm(&xv) + beta.norm() * linalg::vec_norm(&lv);
            let residual = if den > 0.0 {
                linalg::vec_norm(&r) / den
            } else {
                f64::INFINITY
            };
            Some(AmplitudeCandidate {
                beta,
                residual,
                source: AmplitudeSource::Pencil,
            })
        })
        .collect();
    out.sort_by(|a, b| a.residual.total_cmp(&b.residual));
    Ok(out)
}

/// Condition number above which derivative rows join the system.
pub const LS_COND_LIMIT: f64 = 1e8;

/// Least-squares complex amplitudes of unit chirps with parameters `(k, f)`
/// over the whole capture.
///
/// When the x-only basis is worse conditioned than [`LS_COND_LIMIT`] (for
/// example chirps that alias onto each other at the sampling rate), the
/// derivative samples are appended as extra equations, scaled by the
/// reciprocal of the peak instantaneous angular frequency.
pub fn least_squares_amplitudes(
    capture: &SignalCapture,
    params: &[(f64, f64)],
) -> Result<Vec<Complex64>> {
    let m = params.len();
    let nrow = capture.len();
    if m == 0 {
        return Ok(vec![]);
    }
    if m > nrow {
        return Err(Error::input(format!(
            "{m} components exceed {nrow} samples"
        )));
    }
    let times = capture.grid.times();
    let mut basis = Vec::with_capacity(m);
    for &(k, f) in params {
        if !k.is_finite() || !f.is_finite() {
            return Err(Error::input("non-finite chirp parameter"));
        }
        basis.push(unit_chirp_source(k, f, &capture.grid)?);
    }
    let bx = Mat::from_fn(nrow, m, |g, i| basis[i][g]);
    let sx = linalg::singular_values(bx.as_ref(), "least_squares_amplitudes")?;
    let cond = |s: &[f64]| {
        if s[s.len() - 1] > 0.0 {
            s[0] / s[s.len() - 1]
        } else {
            f64::INFINITY
        }
    };
    if cond(&sx) <= LS_COND_LIMIT {
        return Ok(linalg::lstsq(bx.as_ref(), &capture.x));
    }
    let inst = |(k, f): (f64, f64), t: f64| 2.0 * k * t + 2.0 * std::f64::consts::PI * f;
    let peak = params
        .iter()
        .flat_map(|&p| times.iter().map(move |&t| inst(p, t).abs()))
        .fold(0.0, f64::max);
    let w = if peak > 0.0 { 1.0 / peak } else { 1.0 };
    let b = Mat::from_fn(2 * nrow, m, |g, i| {
        if g < nrow {
            basis[i][g]
        } else {
            let r = g - nrow;
            Complex64::new(0.0, inst(params[i], times[r]) * w) * basis[i][r]
        }
    });
    let s = linalg::singular_values(b.as_ref(), "least_squares_amplitudes")?;
    if cond(&s) > 1e14 {
        return Err(Error::input(
            "chirp basis is rank deficient (duplicate parameters?)",
        ));
    }
    let y: Vec<Complex64> = capture
        .x
        .iter()
        .cloned()
        .chain(capture.xdot.iter().map(|d| d * w))
        .collect();
    Ok(linalg::lstsq(b.as_ref(), &y))
}

/// `(|beta|, arg beta)` with the phase in (-pi, pi].
pub fn to_amp_phase(beta: Complex64) -> Result<(f64, f64)> {
    if beta.norm() == 0.0 || !beta.re.is_finite() || !beta.im.is_finite() {
        return Err(Error::Degenerate(format!(
            "complex amplitude {beta} has no phase"
        )));
    }
    Ok((beta.norm(), wrap_phase(beta.arg())))
}
