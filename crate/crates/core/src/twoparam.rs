//! The coupled two-parameter eigenvalue problem over two time intervals,
//! its operator determinants, and the map from eigenvalues to chirp parameters.

use std::f64::consts::PI;

use faer::{Mat, MatRef};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel::HankelTriplet;
use crate::linalg::{self, CMat};
use crate::signal::{SamplingGrid, SignalCapture};

/// The matrices `(A, B, C)` of one equation `(A - lambda B - mu C) w = 0`.
#[derive(Debug, Clone)]
pub struct Pencil3 {
    /// Derivative Hankel matrix.
    pub a: CMat,
    /// Time-weighted Hankel matrix.
    pub b: CMat,
    /// Signal Hankel matrix.
    pub c: CMat,
}

impl Pencil3 {
    pub fn new(a: CMat, b: CMat, c: CMat) -> Result<Self> {
        let n = a.nrows();
        for m in [&a, &b, &c] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::structure(
                    "pencil matrices must be square and of equal order",
                ));
            }
        }
        Ok(Pencil3 { a, b, c })
    }

    fn from_triplet(t: &HankelTriplet) -> Self {
        Pencil3 {
            a: t.xdot.to_mat(),
            b: t.xh.to_mat(),
            c: t.x.to_mat(),
        }
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// `||(A - lambda B - mu C) w|| / (||A||_F ||w||)`.
    pub fn residual(&self, lambda: Complex64, mu: Complex64, w: &[Complex64]) -> f64 {
        let (aw, bw, cw) = (
            linalg::mat_vec(self.a.as_ref(), w),
            linalg::mat_vec(self.b.as_ref(), w),
            linalg::mat_vec(self.c.as_ref(), w),
        );
        let r: Vec<Complex64> = (0..aw.len())
            .map(|i| aw[i] - lambda * bw[i] - mu * cw[i])
            .collect();
        let scale = linalg::fro_norm(self.a.as_ref()) * linalg::vec_norm(w);
        if scale > 0.0 {
            linalg::vec_norm(&r) / scale
        } else {
            linalg::vec_norm(&r)
        }
    }

    /// Unit vector minimizing `||(A - lambda B - mu C) w||`.
    pub fn null_vector(&self, lambda: Complex64, mu: Complex64) -> Result<Vec<Complex64>> {
        let n = self.order();
        let m = Mat::from_fn(n, n, |i, j| {
            self.a[(i, j)] - lambda * self.b[(i, j)] - mu * self.c[(i, j)]
        });
        let d = linalg::svd(m.as_ref(), "null_vector")?;
        Ok((0..n).map(|i| d.v[(i, n - 1)]).collect())
    }

    /// `U^H M conj(U)` for each matrix.
    fn project(&self, u: MatRef<'_, Complex64>) -> Pencil3 {
        let uh = linalg::adjoint(u);
        let uc = linalg::conj(u);
        let p = |m: &CMat| &uh * m * &uc;
        Pencil3 {
            a: p(&self.a),
            b: p(&self.b),
            c: p(&self.c),
        }
    }
}

/// Both intervals of the two-parameter problem.
#[derive(Debug, Clone)]
pub struct TwoParamProblem {
    pub p: Pencil3,
    pub q: Pencil3,
    /// Interval grids; `None` when built from raw matrices.
    pub grids: Option<(SamplingGrid, SamplingGrid)>,
}

impl TwoParamProblem {
    /// Problem from explicit matrices, without any Hankel structure check.
    pub fn from_matrices(p: Pencil3, q: Pencil3) -> Result<Self> {
        if p.order() != q.order() {
            return Err(Error::structure(
                "both intervals must share the Hankel order",
            ));
        }
        Ok(TwoParamProblem { p, q, grids: None })
    }

    pub fn order(&self) -> usize {
        self.p.order()
    }

    /// Time span covered by the union of the two intervals.
    pub fn time_span(&self) -> Option<f64> {
        self.grids
            .map(|(gp, gq)| gp.end().max(gq.end()) - gp.t0.min(gq.t0))
    }
}

/// Hankel matrices of order `n` from windows at `offset_p` and `offset_q`.
pub fn build_problem(
    capture: &SignalCapture,
    n: usize,
    offset_p: usize,
    offset_q: usize,
) -> Result<TwoParamProblem> {
    if offset_p == offset_q {
        return Err(Error::input(
            "the two intervals must start at different offsets",
        ));
    }
    if n == 0 {
        return Err(Error::input("Hankel order must be positive"));
    }
    let need = offset_p.max(offset_q) + 2 * n - 1;
    if capture.len() < need {
        return Err(Error::input(format!(
            "need {need} samples for n={n}, capture has {}",
            capture.len()
        )));
    }
    let tp = HankelTriplet::from_capture(capture, offset_p, n)?;
    let tq = HankelTriplet::from_capture(capture, offset_q, n)?;
    Ok(TwoParamProblem {
        p: Pencil3::from_triplet(&tp),
        q: Pencil3::from_triplet(&tq),
        grids: Some((tp.grid, tq.grid)),
    })
}

/// Operator determinants of a (possibly projected) problem.
///
/// The original problem and the bases mapping projected eigenvectors back
/// to it travel along so eigenvectors can be lifted and checked.
#[derive(Debug, Clone)]
pub struct OperatorDeterminants {
    pub delta0: CMat,
    pub delta1: CMat,
    pub delta2: CMat,
    /// Orders of the P and Q sides the determinants were built from.
    pub dims: (usize, usize),
    problem: TwoParamProblem,
    /// The sides the determinants were built from.
    sides: (Pencil3, Pencil3),
    basis_p: Option<CMat>,
    basis_q: Option<CMat>,
}

impl OperatorDeterminants {
    pub fn problem(&self) -> &TwoParamProblem {
        &self.problem
    }

    fn lift(basis: &Option<CMat>, w: Vec<Complex64>) -> Vec<Complex64> {
        match basis {
            None => w,
            Some(b) => linalg::mat_vec(linalg::conj(b.as_ref()).as_ref(), &w),
        }
    }
}

fn determinants(p: &Pencil3, q: &Pencil3) -> (CMat, CMat, CMat) {
    use linalg::kron_diff;
    let d0 = kron_diff(p.b.as_ref(), q.c.as_ref(), p.c.as_ref(), q.b.as_ref());
    let d1 = kron_diff(p.a.as_ref(), q.c.as_ref(), p.c.as_ref(), q.a.as_ref());
    let mut d2 = kron_diff(p.b.as_ref(), q.a.as_ref(), p.a.as_ref(), q.b.as_ref());
    if crate::verify::delta2_sign_mutated() {
        d2 = linalg::scale(d2.as_ref(), Complex64::new(-1.0, 0.0));
    }
    (d0, d1, d2)
}

/// `D0 = PH(x)Q - P(x)QH`, `D1 = Pdot(x)Q - P(x)Qdot`, `D2 = PH(x)Qdot - Pdot(x)QH`.
pub fn operator_determinants(problem: &TwoParamProblem) -> OperatorDeterminants {
    let (delta0, delta1, delta2) = determinants(&problem.p, &problem.q);
    let n = problem.order();
    OperatorDeterminants {
        delta0,
        delta1,
        delta2,
        dims: (n, n),
        problem: problem.clone(),
        sides: (problem.p.clone(), problem.q.clone()),
        basis_p: None,
        basis_q: None,
    }
}

/// Operator determinants after projecting each interval onto the dominant
/// joint range of its three matrices.
///
/// Each side keeps the left singular vectors of `[A/|A|, B/|B|, C/|C|]` at or
/// above `tol * sigma_1`. Since the matrices are complex symmetric, the same
/// basis (conjugated) spans their row spaces, so the projected side is
/// `U^H M conj(U)`. This removes the common null space exactly instead of
/// relying on a rank cut of the much worse conditioned Kronecker matrix.
pub fn operator_determinants_projected(
    problem: &TwoParamProblem,
    tol: f64,
) -> Result<OperatorDeterminants> {
    let side = |s: &Pencil3| -> Result<(Pencil3, CMat)> {
        let (u, _) = linalg::joint_range(
            &[s.a.as_ref(), s.b.as_ref(), s.c.as_ref()],
            tol,
            "projection",
        )?;
        Ok((s.project(u.as_ref()), u))
    };
    let (pp, up) = side(&problem.p)?;
    let (pq, uq) = side(&problem.q)?;
    if pp.order() == 0 || pq.order() == 0 {
        return Err(Error::numerical(
            "projection",
            "an interval has no signal content",
        ));
    }
    let (delta0, delta1, delta2) = determinants(&pp, &pq);
    let dims = (pp.order(), pq.order());
    Ok(OperatorDeterminants {
        delta0,
        delta1,
        delta2,
        dims,
        problem: problem.clone(),
        sides: (pp, pq),
        basis_p: Some(up),
        basis_q: Some(uq),
    })
}

/// Why an eigenpair was not accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    CoupledResidual,
    NonImaginaryEigenvalue,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RejectReason::CoupledResidual => "coupled residual",
            RejectReason::NonImaginaryEigenvalue => "non-imaginary eigenvalue",
        })
    }
}

/// One candidate eigenpair with its joint and factored eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenEstimate {
    pub lambda: Complex64,
    pub mu: Complex64,
    /// Joint eigenvector in the space the determinants were built in.
    pub z: Vec<Complex64>,
    /// Per-interval eigenvectors in the original order: the minimizing right
    /// singular vectors of each side's operator at (lambda, mu). They are
    /// taken from the sides rather than factored out of `z`, which is a
    /// mixture whenever the joint eigenspace has dimension above one.
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub residual_p: f64,
    pub residual_q: f64,
    pub accepted: bool,
    pub rejection: Option<RejectReason>,
}

/// Generalized eigenpairs of `D1 z = lambda D0 z` on the dominant singular
/// subspace of `D0`, with `mu` from the Rayleigh quotient of `D2`.
///
/// Only finite eigenvalues are returned; every estimate is unfiltered
/// (`accepted == true`) until [`filter_and_map`] runs.
pub fn solve_pencils(deltas: &OperatorDeterminants, rank_tol: f64) -> Result<Vec<EigenEstimate>> {
    let d0 = deltas.delta0.as_ref();
    if !linalg::all_finite(d0)
        || !linalg::all_finite(deltas.delta1.as_ref())
        || !linalg::all_finite(deltas.delta2.as_ref())
    {
        return Err(Error::numerical(
            "solve_pencils",
            "operator determinants contain non-finite entries",
        ));
    }
    let svd = linalg::svd(d0, "solve_pencils")?;
    let r = linalg::count_rank(&svd.s, rank_tol);
    if r == 0 {
        return Err(Error::numerical(
            "solve_pencils",
            "Delta0 has numerical rank 0",
        ));
    }
    let dim = d0.nrows();
    let ur = Mat::from_fn(dim, r, |i, j| svd.u[(i, j)]);
    let wr = Mat::from_fn(dim, r, |i, j| svd.v[(i, j)]);
    let a = linalg::adjoint(ur.as_ref()) * &deltas.delta1 * &wr;
    // The compressed B is diag(s) with s above the cut. Scaling by s^-1/2 on
    // both sides gives a similar, better balanced standard eigenproblem.
    let rs: Vec<f64> = svd.s[..r].iter().map(|s| 1.0 / s.sqrt()).collect();
    let c = Mat::from_fn(r, r, |i, j| a[(i, j)] * (rs[i] * rs[j]));
    let mut pairs = linalg::std_eigen(c.as_ref(), "solve_pencils")?;
    for p in &mut pairs {
        p.z.iter_mut().zip(&rs).for_each(|(z, s)| *z *= s);
    }
    let scale = svd.s[0].max(linalg::fro_norm(a.as_ref()));
    let problem = &deltas.problem;
    let mut out = Vec::new();
    for pair in pairs {
        let Some(lambda) = pair.value(scale) else {
            continue;
        };
        let mut z = linalg::mat_vec(wr.as_ref(), &pair.z);
        let nz = linalg::vec_norm(&z);
        if nz == 0.0 {
            continue;
        }
        z.iter_mut().for_each(|c| *c /= nz);
        let den = linalg::dot_h(&z, &linalg::mat_vec(d0, &z));
        let num = linalg::dot_h(&z, &linalg::mat_vec(deltas.delta2.as_ref(), &z));
        let mu = num / den;
        if !(mu.re.is_finite() && mu.im.is_finite()) {
            continue;
        }
        let u =
            OperatorDeterminants::lift(&deltas.basis_p, deltas.sides.0.null_vector(lambda, mu)?);
        let v =
            OperatorDeterminants::lift(&deltas.basis_q, deltas.sides.1.null_vector(lambda, mu)?);
        let residual_p = problem.p.residual(lambda, mu, &u);
        let residual_q = problem.q.residual(lambda, mu, &v);
        out.push(EigenEstimate {
            lambda,
            mu,
            z,
            u,
            v,
            residual_p,
            residual_q,
            accepted: true,
            rejection: None,
        });
    }
    Ok(out)
}

/// Relative residuals of `D1 z = lambda D0 z` and `D2 z = mu D0 z`.
pub fn determinant_residuals(deltas: &OperatorDeterminants, est: &EigenEstimate) -> (f64, f64) {
    let d0z = linalg::mat_vec(deltas.delta0.as_ref(), &est.z);
    let d1z = linalg::mat_vec(deltas.delta1.as_ref(), &est.z);
    let d2z = linalg::mat_vec(deltas.delta2.as_ref(), &est.z);
    let rel = |dz: &[Complex64], m: &CMat, ev: Complex64| {
        let r: Vec<Complex64> = dz.iter().zip(&d0z).map(|(a, b)| a - ev * b).collect();
        let scale =
            linalg::fro_norm(m.as_ref()) + ev.norm() * linalg::fro_norm(deltas.delta0.as_ref());
        linalg::vec_norm(&r) / (scale * linalg::vec_norm(&est.z))
    };
    (
        rel(&d1z, &deltas.delta1, est.lambda),
        rel(&d2z, &deltas.delta2, est.mu),
    )
}

/// Normalized residuals of both coupled equations for a given pair.
pub fn coupled_residual(
    problem: &TwoParamProblem,
    lambda: Complex64,
    mu: Complex64,
    u: &[Complex64],
    v: &[Complex64],
) -> Result<(f64, f64)> {
    let n = problem.order();
    if u.len() != n || v.len() != n {
        return Err(Error::input(format!("eigenvectors must have length {n}")));
    }
    if linalg::vec_norm(u) == 0.0 || linalg::vec_norm(v) == 0.0 {
        return Err(Error::input("eigenvectors must be nonzero"));
    }
    Ok((
        problem.p.residual(lambda, mu, u),
        problem.q.residual(lambda, mu, v),
    ))
}

/// How a cluster of surviving estimates is summarized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterCenter {
    /// The member whose eigenvalues are closest to purely imaginary.
    MostImaginary,
    /// Componentwise median of (k, f).
    Median,
}

/// Thresholds for accepting and grouping eigenpairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub residual_tol: f64,
    pub re_tol: f64,
    pub cluster_tol: f64,
    pub max_components: Option<usize>,
    pub center: ClusterCenter,
    /// Clusters with fewer members than this fraction of the largest are dropped.
    pub min_cluster_fraction: f64,
    /// Span of the data the problem was built from, in seconds. Sets the
    /// scale that compares lambda against mu.
    pub time_span: f64,
    /// Times at which instantaneous frequencies are compared when clustering.
    pub reference_times: [f64; 2],
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            residual_tol: 1e-6,
            re_tol: 1e-3,
            cluster_tol: 1e-4,
            max_components: None,
            center: ClusterCenter::MostImaginary,
            min_cluster_fraction: 0.0,
            time_span: 1.0,
            reference_times: [0.0, 1.0],
        }
    }
}

/// Size of the real parts relative to the eigenvalues.
///
/// A zero chirp rate or zero start frequency makes one eigenvalue vanish; the
/// floors tie each scale to the other eigenvalue through the time span so
/// that case is not mistaken for a real-dominated pair.
pub fn imaginarity_defect(lambda: Complex64, mu: Complex64, time_span: f64) -> f64 {
    let sl = lambda.norm().max(1e-6 * mu.norm() / time_span);
    let sm = mu.norm().max(1e-6 * lambda.norm() * time_span);
    let ratio = |re: f64, s: f64| if s > 0.0 { re.abs() / s } else { 0.0 };
    ratio(lambda.re, sl).max(ratio(mu.re, sm))
}

/// Relative divergence of two chirps' instantaneous frequencies at the
/// reference times.
pub fn chirp_distance(a: (f64, f64), b: (f64, f64), times: [f64; 2]) -> f64 {
    let w = |(k, f): (f64, f64), t: f64| 2.0 * k * t + 2.0 * PI * f;
    let num = times
        .iter()
        .map(|&t| (w(a, t) - w(b, t)).abs())
        .fold(0.0, f64::max);
    let den = times
        .iter()
        .map(|&t| w(a, t).abs().max(w(b, t).abs()))
        .fold(0.0, f64::max);
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// A cluster of accepted estimates mapped to chirp parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappedComponent {
    /// Chirp rate in rad/s^2.
    pub k: f64,
    /// Start frequency in Hz.
    pub f: f64,
    /// Imaginarity defect of the best member; smaller is better.
    pub quality: f64,
    pub count: usize,
    pub residual_p: f64,
    pub residual_q: f64,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Rejects spurious eigenpairs, maps survivors to `k = Im(lambda)/2`,
/// `f = Im(mu)/(2 pi)` and merges near-identical survivors.
///
/// Rejections are recorded on the estimates. Clusters come back largest first.
pub fn filter_and_map(
    estimates: &mut [EigenEstimate],
    config: &FilterConfig,
) -> Result<Vec<MappedComponent>> {
    if estimates.is_empty() {
        return Err(Error::input("filter_and_map needs at least one estimate"));
    }
    let mut survivors = Vec::new();
    for (i, e) in estimates.iter_mut().enumerate() {
        let defect = imaginarity_defect(e.lambda, e.mu, config.time_span);
        e.rejection =
            if !(e.residual_p <= config.residual_tol && e.residual_q <= config.residual_tol) {
                Some(RejectReason::CoupledResidual)
            } else if !(defect <= config.re_tol) {
                Some(RejectReason::NonImaginaryEigenvalue)
            } else {
                None
            };
        e.accepted = e.rejection.is_none();
        if e.accepted {
            survivors.push((defect, i));
        }
    }
    if survivors.is_empty() {
        return Err(Error::NoComponents);
    }
    survivors.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    struct Cluster {
        seed: (f64, f64),
        defect: f64,
        residuals: (f64, f64),
        members: Vec<(f64, f64)>,
    }
    let mut clusters: Vec<Cluster> = Vec::new();
    for &(defect, i) in &survivors {
        let e = &estimates[i];
        let kf = (e.lambda.im / 2.0, e.mu.im / (2.0 * PI));
        match clusters
            .iter_mut()
            .find(|c| chirp_distance(kf, c.seed, config.reference_times) <= config.cluster_tol)
        {
            Some(c) => c.members.push(kf),
            None => clusters.push(Cluster {
                seed: kf,
                defect,
                residuals: (e.residual_p, e.residual_q),
                members: vec![kf],
            }),
        }
    }
    let mut mapped: Vec<MappedComponent> = clusters
        .into_iter()
        .map(|c| {
            let (k, f) = match config.center {
                ClusterCenter::MostImaginary => c.seed,
                ClusterCenter::Median => {
                    let mut ks: Vec<f64> = c.members.iter().map(|m| m.0).collect();
                    let mut fs: Vec<f64> = c.members.iter().map(|m| m.1).collect();
                    (median(&mut ks), median(&mut fs))
                }
            };
            MappedComponent {
                k,
                f,
                quality: c.defect,
                count: c.members.len(),
                residual_p: c.residuals.0,
                residual_q: c.residuals.1,
            }
        })
        .collect();
    // Stable: equal counts keep the better-defect cluster first.
    mapped.sort_by(|a, b| b.count.cmp(&a.count));
    let largest = mapped[0].count as f64;
    mapped.retain(|m| m.count as f64 >= config.min_cluster_fraction * largest);
    if let Some(max) = config.max_components {
        mapped.truncate(max);
    }
    Ok(mapped)
}
