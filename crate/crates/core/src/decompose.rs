//! End-to-end decomposition and the brute-force dechirp oracle.

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::amplitude::{
    amplitude_pencil, least_squares_amplitudes, to_amp_phase, unit_chirp_hankel, AmplitudeSource,
};
use crate::error::{Error, Result};
use crate::hankel::{cadzow_denoise, hankel, numerical_rank, unit_chirp_source, HankelMatrix};
use crate::linalg;
use crate::signal::{eval_derivative, eval_signal, LfmComponent, SamplingGrid, SignalCapture};
use crate::twoparam::{
    build_problem, chirp_distance, filter_and_map, operator_determinants_projected, solve_pencils,
    ClusterCenter, EigenEstimate, FilterConfig, MappedComponent, RejectReason, TwoParamProblem,
};

/// Pipeline settings. Serialized verbatim into every result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeConfig {
    /// Hankel order.
    pub n: usize,
    pub offset_p: usize,
    /// `None` means `offset_p + 2n - 1`, the interval right after P.
    pub offset_q: Option<usize>,
    /// Finest projection tolerance tried; also the rank threshold for amplitude pencils.
    pub rank_tol: f64,
    /// Coarsest projection tolerance tried. Tolerances step down by decades
    /// to `rank_tol` and the best-fitting candidate set wins.
    pub ladder_start: f64,
    /// Rank cut applied to Delta0 inside the projected problem.
    pub pencil_tol: f64,
    /// Singular-value threshold for model-order estimation.
    pub order_tol: f64,
    pub residual_tol: f64,
    pub re_tol: f64,
    pub cluster_tol: f64,
    pub cluster_center: ClusterCenter,
    pub min_cluster_fraction: f64,
    /// Components whose fitted amplitude is below this fraction of the
    /// largest are treated as spurious.
    pub amp_floor: f64,
    /// Largest relative gap between the pencil and least-squares amplitudes
    /// before the least-squares value is reported instead.
    pub amp_pencil_tol: f64,
    pub max_components: Option<usize>,
    pub denoise_iters: usize,
    /// `None` estimates the rank of each window.
    pub denoise_rank: Option<usize>,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        DecomposeConfig {
            n: 16,
            offset_p: 0,
            offset_q: None,
            rank_tol: 1e-10,
            ladder_start: 1e-5,
            pencil_tol: 1e-14,
            order_tol: 1e-10,
            residual_tol: 1e-6,
            re_tol: 1e-3,
            cluster_tol: 1e-4,
            cluster_center: ClusterCenter::MostImaginary,
            min_cluster_fraction: 0.0,
            amp_floor: 1e-6,
            amp_pencil_tol: 1e-7,
            max_components: None,
            denoise_iters: 0,
            denoise_rank: None,
        }
    }
}

impl DecomposeConfig {
    /// Settings for captures with roughly 20-40 dB SNR.
    pub fn noisy() -> Self {
        DecomposeConfig {
            n: 32,
            rank_tol: 0.1,
            ladder_start: 0.1,
            order_tol: 0.05,
            residual_tol: 0.1,
            re_tol: 0.1,
            cluster_tol: 0.1,
            cluster_center: ClusterCenter::Median,
            min_cluster_fraction: 0.1,
            amp_floor: 0.1,
            denoise_iters: 3,
            ..Default::default()
        }
    }

    /// Named preset: `default` or `noisy`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "default" => Ok(Self::default()),
            "noisy" => Ok(Self::noisy()),
            other => Err(Error::input(format!("unknown preset `{other}`"))),
        }
    }

    pub fn offset_q(&self) -> usize {
        self.offset_q.unwrap_or(self.offset_p + 2 * self.n - 1)
    }

    /// Number of samples the configuration reads.
    pub fn required_samples(&self) -> usize {
        self.offset_p.max(self.offset_q()) + 2 * self.n - 1
    }

    /// Projection tolerances from coarse to fine.
    pub fn ladder(&self) -> Vec<f64> {
        let mut out = vec![self.ladder_start];
        let mut t = self.ladder_start;
        while t > self.rank_tol * (1.0 + 1e-9) {
            t = (t / 10.0).max(self.rank_tol);
            out.push(t);
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::input("Hankel order n must be at least 2"));
        }
        if self.offset_q() == self.offset_p {
            return Err(Error::input("offset_q must differ from offset_p"));
        }
        for (name, v) in [
            ("rank_tol", self.rank_tol),
            ("ladder_start", self.ladder_start),
            ("pencil_tol", self.pencil_tol),
            ("order_tol", self.order_tol),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::input(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if self.ladder_start < self.rank_tol {
            return Err(Error::input("ladder_start must not be below rank_tol"));
        }
        for (name, v) in [
            ("residual_tol", self.residual_tol),
            ("re_tol", self.re_tol),
            ("cluster_tol", self.cluster_tol),
            ("amp_floor", self.amp_floor),
            ("amp_pencil_tol", self.amp_pencil_tol),
            ("min_cluster_fraction", self.min_cluster_fraction),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::input(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if let Some(r) = self.denoise_rank {
            if r == 0 || r > self.n {
                return Err(Error::input(format!(
                    "denoise_rank must lie in 1..={}",
                    self.n
                )));
            }
        }
        Ok(())
    }
}

/// One recovered chirp with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentEstimate {
    #[serde(flatten)]
    pub component: LfmComponent,
    pub residual_p: f64,
    pub residual_q: f64,
    pub amp_source: AmplitudeSource,
}

/// Summary of one projection tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderStep {
    pub tol: f64,
    pub side_ranks: [usize; 2],
    pub candidates: usize,
    pub clusters: usize,
    /// Relative misfit of the fitted model over both channels; `None` when
    /// the step produced nothing.
    pub fit_error: Option<f64>,
    /// Why the step failed, if it did.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// An eigenpair that did not survive filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedEigenvalue {
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub mu_re: f64,
    pub mu_im: f64,
    pub residual_p: f64,
    pub residual_q: f64,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Numerical ranks of the signal Hankel matrices of both intervals.
    pub model_order: [usize; 2],
    pub ladder: Vec<LadderStep>,
    pub selected_tol: Option<f64>,
    /// Singular values of Delta0 at the selected tolerance.
    pub delta0_singular_values: Vec<f64>,
    pub rejected: Vec<RejectedEigenvalue>,
    /// Components merged because their parameters coincided.
    pub merged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub components: Vec<ComponentEstimate>,
    pub reconstruction_rel_error: f64,
    pub premise_warning: bool,
    pub diagnostics: Diagnostics,
    pub config: DecomposeConfig,
}

impl DecompositionResult {
    pub fn lfm_components(&self) -> Vec<LfmComponent> {
        self.components.iter().map(|c| c.component).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        crate::format::to_json_string(self)
    }
}

/// Numerical rank of a Hankel matrix, the premise check of the method.
pub fn estimate_model_order(x: &HankelMatrix, tol: f64) -> Result<usize> {
    numerical_rank(x.to_mat().as_ref(), tol)
}

/// Re-evaluates the components on the grid.
pub fn reconstruct(components: &[LfmComponent], grid: &SamplingGrid) -> Result<Vec<Complex64>> {
    eval_signal(components, &grid.times())
}

fn rel_error(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let den = linalg::vec_norm(a);
    if den > 0.0 {
        linalg::vec_norm(&num) / den
    } else {
        linalg::vec_norm(&num)
    }
}

/// Total order on components: amplitude descending, then f, then k ascending.
pub fn component_order(a: &LfmComponent, b: &LfmComponent) -> Ordering {
    b.a.total_cmp(&a.a)
        .then(a.f.total_cmp(&b.f))
        .then(a.k.total_cmp(&b.k))
}

fn denoised(capture: &SignalCapture, cfg: &DecomposeConfig) -> Result<SignalCapture> {
    if cfg.denoise_iters == 0 {
        return Ok(capture.clone());
    }
    let len = 2 * cfg.n - 1;
    let mut out = capture.clone();
    out.provenance = None;
    for offset in [cfg.offset_p, cfg.offset_q()] {
        for (dst, src) in [(&mut out.x, &capture.x), (&mut out.xdot, &capture.xdot)] {
            let window = &src[offset..offset + len];
            let rank = match cfg.denoise_rank {
                Some(r) => r,
                None => estimate_model_order(&hankel(window)?, cfg.order_tol)?.max(1),
            };
            let clean = cadzow_denoise(window, rank, cfg.denoise_iters)?;
            dst[offset..offset + len].copy_from_slice(&clean);
        }
    }
    Ok(out)
}

/// Fitted complex amplitudes and the relative misfit over both channels.
fn fit(capture: &SignalCapture, params: &[(f64, f64)]) -> Result<(Vec<Complex64>, f64)> {
    let c = least_squares_amplitudes(capture, params)?;
    let comps: Vec<LfmComponent> = params
        .iter()
        .zip(&c)
        .map(|(&(k, f), beta)| LfmComponent {
            a: beta.norm().max(f64::MIN_POSITIVE),
            k,
            f,
            phi: beta.arg(),
        })
        .collect();
    let times = capture.grid.times();
    let ex = rel_error(&capture.x, &eval_signal(&comps, &times)?);
    let ed = rel_error(&capture.xdot, &eval_derivative(&comps, &times)?);
    Ok((c, ex.max(ed)))
}

struct Candidate {
    params: Vec<(f64, f64)>,
    mapped: Vec<MappedComponent>,
    amps: Vec<Complex64>,
    score: f64,
    tol: f64,
    delta0_sv: Vec<f64>,
    rejected: Vec<RejectedEigenvalue>,
}

fn rejected_ledger(estimates: &[EigenEstimate]) -> Vec<RejectedEigenvalue> {
    estimates
        .iter()
        .filter_map(|e| {
            e.rejection.map(|reason| RejectedEigenvalue {
                lambda_re: e.lambda.re,
                lambda_im: e.lambda.im,
                mu_re: e.mu.re,
                mu_im: e.mu.im,
                residual_p: e.residual_p,
                residual_q: e.residual_q,
                reason,
            })
        })
        .collect()
}

/// One tolerance of the ladder: project, solve, filter, fit, prune.
fn ladder_step(
    problem: &TwoParamProblem,
    capture: &SignalCapture,
    filter: &FilterConfig,
    cfg: &DecomposeConfig,
    tol: f64,
    diag: &mut Diagnostics,
) -> Result<Option<Candidate>> {
    let deltas = operator_determinants_projected(problem, tol)?;
    let mut step = LadderStep {
        tol,
        side_ranks: [deltas.dims.0, deltas.dims.1],
        candidates: 0,
        clusters: 0,
        fit_error: None,
        failure: None,
    };
    let mut estimates = solve_pencils(&deltas, cfg.pencil_tol)?;
    step.candidates = estimates.len();
    let mapped = if estimates.is_empty() {
        Err(Error::NoComponents)
    } else {
        filter_and_map(&mut estimates, filter)
    };
    let mut mapped = match mapped {
        Ok(m) => m,
        Err(Error::NoComponents) => {
            diag.ladder.push(step);
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    step.clusters = mapped.len();
    let mut params: Vec<(f64, f64)> = mapped.iter().map(|m| (m.k, m.f)).collect();
    let (mut amps, _) = fit(capture, &params)?;
    let peak = amps.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut keep: Vec<bool> = amps
        .iter()
        .map(|c| c.norm() >= cfg.amp_floor * peak && c.norm() > 0.0)
        .collect();
    drop_satellites(capture, &params, &amps, &mut keep)?;
    if keep.iter().any(|k| !k) {
        let mut i = 0;
        mapped.retain(|_| {
            i += 1;
            keep[i - 1]
        });
        params = mapped.iter().map(|m| (m.k, m.f)).collect();
    }
    let (a, score) = fit(capture, &params)?;
    amps = a;
    step.fit_error = Some(score);
    diag.ladder.push(step);
    let delta0_sv = linalg::singular_values(deltas.delta0.as_ref(), "diagnostics")?;
    Ok(Some(Candidate {
        params,
        mapped,
        amps,
        score,
        tol,
        delta0_sv,
        rejected: rejected_ledger(&estimates),
    }))
}

/// Weak components whose sampled atom is this coherent with a stronger one
/// are treated as splinters of it.
const SATELLITE_COHERENCE: f64 = 0.9;
const SATELLITE_AMP_RATIO: f64 = 1e-2;

fn drop_satellites(
    capture: &SignalCapture,
    params: &[(f64, f64)],
    amps: &[Complex64],
    keep: &mut [bool],
) -> Result<()> {
    let atoms = params
        .iter()
        .map(|&(k, f)| unit_chirp_source(k, f, &capture.grid))
        .collect::<Result<Vec<_>>>()?;
    let n = capture.len() as f64;
    for j in 0..params.len() {
        for i in 0..params.len() {
            if i == j || !keep[i] || amps[j].norm() > SATELLITE_AMP_RATIO * amps[i].norm() {
                continue;
            }
            let coh = linalg::dot_h(&atoms[i], &atoms[j]).norm() / n;
            if coh >= SATELLITE_COHERENCE {
                keep[j] = false;
                break;
            }
        }
    }
    Ok(())
}

/// Merges components whose parameters coincide within the cluster tolerance
/// by adding their complex amplitudes.
fn merge_duplicates(cand: &mut Candidate, cfg: &DecomposeConfig, times: [f64; 2]) -> usize {
    let mut merged = 0;
    let mut i = 0;
    while i < cand.params.len() {
        let mut j = i + 1;
        while j < cand.params.len() {
            if chirp_distance(cand.params[i], cand.params[j], times) <= cfg.cluster_tol {
                let extra = cand.amps.remove(j);
                cand.amps[i] += extra;
                cand.params.remove(j);
                cand.mapped.remove(j);
                merged += 1;
            } else {
                j += 1;
            }
        }
        i += 1;
    }
    merged
}

/// Full pipeline: optional Cadzow denoising, two-parameter eigen-analysis,
/// amplitude recovery and reconstruction.
///
/// An all-zero capture yields an empty result. A nonzero capture in which no
/// eigenpair survives filtering yields [`Error::NoComponents`].
pub fn decompose(capture: &SignalCapture, config: &DecomposeConfig) -> Result<DecompositionResult> {
    config.validate()?;
    let need = config.required_samples();
    if capture.len() < need {
        return Err(Error::input(format!(
            "configuration needs {need} samples, capture has {}",
            capture.len()
        )));
    }
    let mut diag = Diagnostics::default();
    if capture
        .x
        .iter()
        .chain(&capture.xdot)
        .all(|z| z.norm() == 0.0)
    {
        return Ok(DecompositionResult {
            components: vec![],
            reconstruction_rel_error: 0.0,
            premise_warning: false,
            diagnostics: diag,
            config: config.clone(),
        });
    }
    let work = denoised(capture, config)?;
    let problem = build_problem(&work, config.n, config.offset_p, config.offset_q())?;
    let order = |offset: usize| -> Result<usize> {
        estimate_model_order(
            &hankel(&work.x[offset..offset + 2 * config.n - 1])?,
            config.order_tol,
        )
    };
    diag.model_order = [order(config.offset_p)?, order(config.offset_q())?];
    let premise_warning = diag.model_order.iter().any(|&r| r + 2 > config.n);

    let ends = [capture.grid.t0, capture.grid.end()];
    let filter = FilterConfig {
        residual_tol: config.residual_tol,
        re_tol: config.re_tol,
        cluster_tol: config.cluster_tol,
        max_components: config.max_components,
        center: config.cluster_center,
        min_cluster_fraction: config.min_cluster_fraction,
        time_span: problem.time_span().unwrap_or(1.0),
        reference_times: ends,
    };
    // A failing rung does not sink the others; its error is kept for the
    // case where no rung succeeds.
    let mut best: Option<Candidate> = None;
    let mut first_err = None;
    for tol in config.ladder() {
        let steps = diag.ladder.len();
        match ladder_step(&problem, capture, &filter, config, tol, &mut diag) {
            Ok(Some(c)) => {
                if best.as_ref().is_none_or(|b| c.score < b.score) {
                    best = Some(c);
                }
            }
            Ok(None) => {}
            Err(e) => {
                diag.ladder.truncate(steps);
                diag.ladder.push(LadderStep {
                    tol,
                    side_ranks: [0, 0],
                    candidates: 0,
                    clusters: 0,
                    fit_error: None,
                    failure: Some(e.to_string()),
                });
                first_err.get_or_insert(e);
            }
        }
    }
    let Some(mut best) = best else {
        return Err(first_err.unwrap_or(Error::NoComponents));
    };
    diag.merged = merge_duplicates(&mut best, config, ends);
    diag.selected_tol = Some(best.tol);
    diag.delta0_singular_values = std::mem::take(&mut best.delta0_sv);
    diag.rejected = std::mem::take(&mut best.rejected);

    // Amplitudes: the pencil on the P interval, kept only when it agrees with
    // the whole-capture least-squares value. The pencil range cut is looser
    // than rank_tol: X and L differ only at rounding level for a correct
    // (k, f), and keeping that direction makes the reduced pencil singular.
    let x_p = hankel(&capture.x[config.offset_p..config.offset_p + 2 * config.n - 1])?;
    let grid_p = capture.grid.window(config.offset_p, 2 * config.n - 1)?;
    let use_pencil = 2 * best.params.len() < config.n;
    let mut components = Vec::with_capacity(best.params.len());
    for (i, &(k, f)) in best.params.iter().enumerate() {
        let mut beta = best.amps[i];
        let mut source = AmplitudeSource::LeastSquares;
        if use_pencil && diag.merged == 0 {
            let l = unit_chirp_hankel(k, f, &grid_p, config.n)?;
            let nearest = amplitude_pencil(&x_p, &l, config.rank_tol.sqrt())?
                .into_iter()
                .min_by(|a, b| (a.beta - beta).norm().total_cmp(&(b.beta - beta).norm()));
            if let Some(c) = nearest {
                if (c.beta - beta).norm() <= config.amp_pencil_tol * beta.norm() {
                    beta = c.beta;
                    source = AmplitudeSource::Pencil;
                }
            }
        }
        let (a, phi) = match to_amp_phase(beta) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let m = &best.mapped[i];
        components.push(ComponentEstimate {
            component: LfmComponent { a, k, f, phi },
            residual_p: m.residual_p,
            residual_q: m.residual_q,
            amp_source: source,
        });
    }
    components.sort_by(|a, b| component_order(&a.component, &b.component));
    let comps: Vec<LfmComponent> = components.iter().map(|c| c.component).collect();
    let reconstruction_rel_error = rel_error(&capture.x, &reconstruct(&comps, &capture.grid)?);
    Ok(DecompositionResult {
        components,
        reconstruction_rel_error,
        premise_warning,
        diagnostics: diag,
        config: config.clone(),
    })
}

/// Result of the exhaustive dechirp search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleHit {
    pub k: f64,
    pub f: f64,
    pub correlation: f64,
}

/// Grid point maximizing `|sum_g x_g conj(l(t_g; k, f))| / N`.
///
/// Ties keep the first maximum in k-major order.
pub fn oracle_dechirp(
    capture: &SignalCapture,
    k_grid: &[f64],
    f_grid: &[f64],
) -> Result<OracleHit> {
    if k_grid.is_empty() || f_grid.is_empty() {
        return Err(Error::input("oracle grids must be nonempty"));
    }
    let n = capture.len() as f64;
    let mut best = OracleHit {
        k: k_grid[0],
        f: f_grid[0],
        correlation: -1.0,
    };
    for &k in k_grid {
        // Dechirp once per k, then correlate against each tone.
        let dechirped: Vec<Complex64> = capture
            .grid
            .times()
            .iter()
            .zip(&capture.x)
            .map(|(&t, &x)| x * Complex64::from_polar(1.0, -k * t * t))
            .collect();
        for &f in f_grid {
            let tone = unit_chirp_source(0.0, f, &capture.grid)?;
            let corr: Complex64 = dechirped.iter().zip(&tone).map(|(d, l)| d * l.conj()).sum();
            let c = corr.norm() / n;
            if c > best.correlation {
                best = OracleHit {
                    k,
                    f,
                    correlation: c,
                };
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{sample_capture, NoiseSpec};

    #[test]
    fn ladder_steps_by_decades() {
        let l = DecomposeConfig::default().ladder();
        assert_eq!(l.len(), 6);
        assert!((l[5] - 1e-10).abs() < 1e-24);
        assert_eq!(DecomposeConfig::noisy().ladder(), vec![0.1]);
    }

    #[test]
    fn zero_capture_is_empty() {
        let g = SamplingGrid::new(0.0, 1e-3, 127).unwrap();
        let cap = SignalCapture::new(
            g,
            vec![Complex64::new(0.0, 0.0); 127],
            vec![Complex64::new(0.0, 0.0); 127],
        )
        .unwrap();
        let r = decompose(&cap, &DecomposeConfig::default()).unwrap();
        assert!(r.components.is_empty());
        assert_eq!(r.reconstruction_rel_error, 0.0);
        assert!(!r.premise_warning);
    }

    #[test]
    fn equal_offsets_rejected() {
        let g = SamplingGrid::new(0.0, 1e-3, 127).unwrap();
        let cap = sample_capture(
            &[LfmComponent::new(1.0, 0.0, 10.0, 0.0).unwrap()],
            g,
            NoiseSpec::noiseless(),
        )
        .unwrap();
        let cfg = DecomposeConfig {
            offset_q: Some(0),
            ..Default::default()
        };
        assert!(matches!(decompose(&cap, &cfg), Err(Error::Input(_))));
    }

    #[test]
    fn ordering_is_total() {
        let c = |a, k, f| LfmComponent { a, k, f, phi: 0.0 };
        let mut v = vec![
            c(1.0, 2.0, 5.0),
            c(2.0, 0.0, 0.0),
            c(1.0, 1.0, 5.0),
            c(1.0, 0.0, 3.0),
        ];
        v.sort_by(component_order);
        assert_eq!(
            v,
            vec![
                c(2.0, 0.0, 0.0),
                c(1.0, 0.0, 3.0),
                c(1.0, 1.0, 5.0),
                c(1.0, 2.0, 5.0)
            ]
        );
    }
}
