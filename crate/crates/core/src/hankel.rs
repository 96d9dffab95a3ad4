//! Hankel matrices of sampled signals, time weighting, numerical rank,
//! Cadzow denoising and the Takagi factorization.

use faer::{Mat, MatRef, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::linalg::{self, CMat};
use crate::signal::{LfmComponent, SamplingGrid, SignalCapture};

/// Default relative singular-value threshold.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

fn order_of(len: usize) -> Result<usize> {
    if len == 0 || len.is_multiple_of(2) {
        return Err(Error::structure(format!(
            "Hankel source length must be odd and positive, got {len}"
        )));
    }
    Ok(len.div_ceil(2))
}

/// Square complex Hankel matrix stored by its 2n-1 generating samples.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelMatrix {
    source: Vec<Complex64>,
}

impl HankelMatrix {
    pub fn order(&self) -> usize {
        self.source.len().div_ceil(2)
    }

    pub fn source(&self) -> &[Complex64] {
        &self.source
    }

    /// Zero-based entry (g, l).
    pub fn get(&self, g: usize, l: usize) -> Complex64 {
        self.source[g + l]
    }

    pub fn to_mat(&self) -> CMat {
        let n = self.order();
        Mat::from_fn(n, n, |g, l| self.source[g + l])
    }
}

/// Builds the n x n Hankel matrix with entry (g, l) = source[g + l].
pub fn hankel(source: &[Complex64]) -> Result<HankelMatrix> {
    order_of(source.len())?;
    Ok(HankelMatrix {
        source: source.to_vec(),
    })
}

/// Real Hankel matrix of sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeHankel {
    source: Vec<f64>,
}

impl TimeHankel {
    pub fn order(&self) -> usize {
        self.source.len().div_ceil(2)
    }

    pub fn source(&self) -> &[f64] {
        &self.source
    }

    pub fn get(&self, g: usize, l: usize) -> f64 {
        self.source[g + l]
    }

    pub fn to_mat(&self) -> CMat {
        let n = self.order();
        Mat::from_fn(n, n, |g, l| Complex64::new(self.source[g + l], 0.0))
    }
}

/// Hankel matrix of the first `len` sample times of `grid`.
pub fn time_hankel(grid: &SamplingGrid, len: usize) -> Result<TimeHankel> {
    order_of(len)?;
    if grid.count < len {
        return Err(Error::input(format!(
            "time_hankel needs {len} samples, grid has {}",
            grid.count
        )));
    }
    Ok(TimeHankel {
        source: (0..len).map(|g| grid.time(g)).collect(),
    })
}

/// Elementwise product T (.) X. Aligned Hankel sources multiply sample by sample.
pub fn hadamard(t: &TimeHankel, x: &HankelMatrix) -> Result<HankelMatrix> {
    if t.order() != x.order() {
        return Err(Error::structure(format!(
            "order mismatch: {} vs {}",
            t.order(),
            x.order()
        )));
    }
    Ok(HankelMatrix {
        source: t
            .source
            .iter()
            .zip(&x.source)
            .map(|(a, b)| b * *a)
            .collect(),
    })
}

/// True when every anti-diagonal of `a` is constant to `tol` relative.
pub fn is_hankel(a: MatRef<'_, Complex64>, tol: f64) -> bool {
    let n = a.nrows();
    if a.ncols() != n {
        return false;
    }
    let scale = linalg::fro_norm(a).max(f64::MIN_POSITIVE);
    // Reference entry of anti-diagonal q sits in the first row or last column.
    let reference = |q: usize| {
        if q < n {
            a[(0, q)]
        } else {
            a[(q + 1 - n, n - 1)]
        }
    };
    (0..n).all(|g| (0..n).all(|l| (a[(g, l)] - reference(g + l)).norm() <= tol * scale))
}

/// True when `a` equals its (unconjugated) transpose to `tol` relative.
pub fn is_complex_symmetric(a: MatRef<'_, Complex64>, tol: f64) -> bool {
    let n = a.nrows();
    if a.ncols() != n {
        return false;
    }
    let scale = linalg::fro_norm(a).max(f64::MIN_POSITIVE);
    let mut d = 0.0;
    for g in 0..n {
        for l in 0..n {
            d += (a[(g, l)] - a[(l, g)]).norm_sqr();
        }
    }
    d.sqrt() <= tol * scale
}

/// The four matrices of one time interval.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelTriplet {
    pub grid: SamplingGrid,
    pub x: HankelMatrix,
    pub xdot: HankelMatrix,
    pub t: TimeHankel,
    pub xh: HankelMatrix,
}

impl HankelTriplet {
    /// Matrices of order `n` from the 2n-1 samples starting at `offset`.
    pub fn from_capture(capture: &SignalCapture, offset: usize, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("Hankel order must be positive"));
        }
        let len = 2 * n - 1;
        let grid = capture.grid.window(offset, len)?;
        let x = hankel(&capture.x[offset..offset + len])?;
        let xdot = hankel(&capture.xdot[offset..offset + len])?;
        let t = time_hankel(&grid, len)?;
        let xh = hadamard(&t, &x)?;
        Ok(HankelTriplet {
            grid,
            x,
            xdot,
            t,
            xh,
        })
    }
}

/// Diagonal factors of the time-weighting identity.
///
/// With `t0` the time of the interval's first sample,
/// `T (.) X = (t0 - dt) X + dt (D1 X + X D2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeWeightFactors {
    /// diag(1..n)
    pub d1: Vec<f64>,
    /// diag(0..n-1)
    pub d2: Vec<f64>,
    pub t0: f64,
    pub dt: f64,
}

pub fn time_weight_factors(n: usize, grid: &SamplingGrid) -> TimeWeightFactors {
    TimeWeightFactors {
        d1: (1..=n).map(|i| i as f64).collect(),
        d2: (0..n).map(|i| i as f64).collect(),
        t0: grid.t0,
        dt: grid.dt,
    }
}

impl TimeWeightFactors {
    /// Right-hand side of the identity, computed from dense products.
    pub fn apply(&self, x: MatRef<'_, Complex64>) -> CMat {
        let n = self.d1.len();
        let diag = |d: &[f64]| {
            Mat::from_fn(n, n, |i, j| {
                Complex64::new(if i == j { d[i] } else { 0.0 }, 0.0)
            })
        };
        let (d1, d2) = (diag(&self.d1), diag(&self.d2));
        let prod = &d1 * x + x * &d2;
        Mat::from_fn(n, n, |i, j| {
            x[(i, j)] * (self.t0 - self.dt) + prod[(i, j)] * self.dt
        })
    }
}

/// Count of singular values at or above `tol * sigma_1`.
pub fn numerical_rank(a: MatRef<'_, Complex64>, tol: f64) -> Result<usize> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::input(format!(
            "rank tolerance must lie in (0, 1), got {tol}"
        )));
    }
    if !linalg::all_finite(a) {
        return Err(Error::input("matrix has non-finite entries"));
    }
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0);
    }
    let s = linalg::singular_values(a, "numerical_rank")?;
    Ok(linalg::count_rank(&s, tol))
}

/// One cell of the rank-to-order table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankScanRow {
    pub k: f64,
    pub dt: f64,
    pub rank: usize,
    pub ratio: f64,
}

/// Rank over order of the Hankel matrix of a unit chirp `exp(j k t^2)`
/// sampled from t = 0, for every (k, dt) pair. Rows are k-major.
pub fn rank_ratio_scan(
    k_values: &[f64],
    dt_values: &[f64],
    n: usize,
    tol: f64,
) -> Result<Vec<RankScanRow>> {
    if k_values.is_empty() || dt_values.is_empty() || n == 0 {
        return Err(Error::input(
            "rank scan needs nonempty k and dt lists and n >= 1",
        ));
    }
    let mut rows = Vec::with_capacity(k_values.len() * dt_values.len());
    for &k in k_values {
        for &dt in dt_values {
            let grid = SamplingGrid::new(0.0, dt, 2 * n - 1)?;
            let l = unit_chirp_source(k, 0.0, &grid)?;
            let rank = numerical_rank(hankel(&l)?.to_mat().as_ref(), tol)?;
            rows.push(RankScanRow {
                k,
                dt,
                rank,
                ratio: rank as f64 / n as f64,
            });
        }
    }
    Ok(rows)
}

pub(crate) fn unit_chirp_source(k: f64, f: f64, grid: &SamplingGrid) -> Result<Vec<Complex64>> {
    let unit = LfmComponent {
        a: 1.0,
        k,
        f,
        phi: 0.0,
    };
    crate::signal::eval_signal(&[unit], &grid.times())
}

/// Averages each anti-diagonal of `a` back into a source vector.
pub fn antidiagonal_average(a: MatRef<'_, Complex64>) -> Vec<Complex64> {
    let n = a.nrows();
    (0..2 * n - 1)
        .map(|q| {
            let lo = q.saturating_sub(n - 1);
            let hi = q.min(n - 1);
            let s: Complex64 = (lo..=hi).map(|g| a[(g, q - g)]).sum();
            s / (hi - lo + 1) as f64
        })
        .collect()
}

/// Alternating projections between rank-`r` matrices and Hankel structure.
pub fn cadzow_denoise(source: &[Complex64], r: usize, iters: usize) -> Result<Vec<Complex64>> {
    let n = order_of(source.len())?;
    if r == 0 || r > n {
        return Err(Error::input(format!(
            "Cadzow rank must lie in 1..={n}, got {r}"
        )));
    }
    let mut s = source.to_vec();
    for _ in 0..iters {
        let h = hankel(&s)?.to_mat();
        let d = linalg::svd(h.as_ref(), "cadzow_denoise")?;
        let low = Mat::from_fn(n, n, |i, j| {
            (0..r)
                .map(|q| d.u[(i, q)] * d.s[q] * d.v[(j, q)].conj())
                .sum()
        });
        s = antidiagonal_average(low.as_ref());
    }
    Ok(s)
}

/// `A = V^T diag(s) V` with V unitary and `s` nonincreasing.
#[derive(Debug, Clone)]
pub struct TakagiFactors {
    pub v: CMat,
    pub s: Vec<f64>,
}

impl TakagiFactors {
    pub fn reconstruct(&self) -> CMat {
        let n = self.s.len();
        Mat::from_fn(n, n, |i, j| {
            (0..n)
                .map(|q| self.v[(q, i)] * self.s[q] * self.v[(q, j)])
                .sum()
        })
    }
}

/// Takagi factorization of a complex symmetric matrix.
///
/// From the SVD `A = U S W^H`, the matrix `D = U^H conj(W)` is unitary,
/// symmetric and commutes with S. Its symmetric unitary square root R gives
/// `A = (U R) S (U R)^T`. R is built from the real orthogonal matrix that
/// diagonalizes both the real and imaginary parts of D.
pub fn takagi(a: MatRef<'_, Complex64>) -> Result<TakagiFactors> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::structure(
            "Takagi factorization needs a square matrix",
        ));
    }
    if !linalg::all_finite(a) {
        return Err(Error::input("matrix has non-finite entries"));
    }
    if !is_complex_symmetric(a, 1e-10) {
        return Err(Error::structure(
            "Takagi factorization needs a complex symmetric matrix",
        ));
    }
    if n == 0 {
        return Ok(TakagiFactors {
            v: Mat::zeros(0, 0),
            s: vec![],
        });
    }
    let d = linalg::svd(a, "takagi")?;
    let s1 = d.s[0];
    // Directions with numerically zero singular value carry no information;
    // any unitary completion works there, so use the identity.
    let live = |i: usize| d.s[i] > 1e-13 * s1;
    let mut dm = Mat::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            dm[(i, j)] = if live(i) && live(j) {
                (0..n)
                    .map(|q| d.u[(q, i)].conj() * d.v[(q, j)].conj())
                    .sum()
            } else if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
    }
    // Symmetrize, then diagonalize Re + c Im with a generic c.
    const C: f64 = 0.739_085_133_215_160_6;
    let m = Mat::<f64>::from_fn(n, n, |i, j| {
        let z = (dm[(i, j)] + dm[(j, i)]) * 0.5;
        z.re + C * z.im
    });
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::numerical("takagi", format!("eigensolver failed: {e:?}")))?;
    let o = evd.U();
    let mut root = Vec::with_capacity(n);
    for q in 0..n {
        // Diagonal entry of O^T D O, normalized to the unit circle.
        let mut w = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                w += dm[(i, j)] * (o[(i, q)] * o[(j, q)]);
            }
        }
        let w = if w.norm() > 0.0 {
            w / w.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        root.push(w.sqrt());
    }
    let r = Mat::from_fn(n, n, |i, j| {
        (0..n)
            .map(|q| root[q] * (o[(i, q)] * o[(j, q)]))
            .sum::<Complex64>()
    });
    let q = &d.u * &r;
    Ok(TakagiFactors {
        v: linalg::transpose(q.as_ref()),
        s: d.s,
    })
}

fn fmt_complex(z: Complex64) -> String {
    let im = fmt_f64(z.im);
    if im.starts_with('-') {
        format!("{}{}j", fmt_f64(z.re), im)
    } else {
        format!("{}+{}j", fmt_f64(z.re), im)
    }
}

/// Row-major CSV dump, one `re+imj` cell per entry, for debugging.
pub fn matrix_to_csv(a: MatRef<'_, Complex64>) -> String {
    let mut out = String::new();
    for i in 0..a.nrows() {
        let row: Vec<String> = (0..a.ncols()).map(|j| fmt_complex(a[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fro_norm, sub};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn hankel_layout() {
        let h = hankel(&[c(1.0), c(2.0), c(3.0), c(4.0), c(5.0)]).unwrap();
        let m = h.to_mat();
        for g in 0..3 {
            for l in 0..3 {
                assert_eq!(m[(g, l)], c((g + l + 1) as f64));
            }
        }
        assert_eq!(hankel(&[c(7.0)]).unwrap().to_mat()[(0, 0)], c(7.0));
        assert!(matches!(hankel(&[c(1.0); 4]), Err(Error::Structure(_))));
        assert!(is_hankel(m.as_ref(), 0.0) && is_complex_symmetric(m.as_ref(), 0.0));
    }

    #[test]
    fn time_hankel_examples() {
        let t = time_hankel(&SamplingGrid::new(1.0, 1.0, 3).unwrap(), 3).unwrap();
        assert_eq!(t.source(), &[1.0, 2.0, 3.0]);
        assert_eq!((t.get(0, 1), t.get(1, 1)), (2.0, 3.0));
        let t = time_hankel(&SamplingGrid::new(0.0, 0.5, 3).unwrap(), 3).unwrap();
        assert_eq!(t.source(), &[0.0, 0.5, 1.0]);
        assert!(time_hankel(&SamplingGrid::new(0.0, 0.5, 2).unwrap(), 3).is_err());
    }

    #[test]
    fn hadamard_examples() {
        let t = TimeHankel { source: vec![2.0] };
        assert_eq!(
            hadamard(&t, &hankel(&[c(3.0)]).unwrap()).unwrap().source(),
            &[c(6.0)]
        );
        let ones = TimeHankel {
            source: vec![1.0; 5],
        };
        let x = hankel(&[c(1.0), Complex64::new(0.0, 2.0), c(3.0), c(-1.0), c(0.5)]).unwrap();
        assert_eq!(hadamard(&ones, &x).unwrap(), x);
        assert!(hadamard(
            &TimeHankel {
                source: vec![1.0; 3]
            },
            &x
        )
        .is_err());
    }

    #[test]
    fn weight_factor_entries() {
        let g = SamplingGrid::new(0.0, 1.0, 5).unwrap();
        let f = time_weight_factors(3, &g);
        assert_eq!(f.d1, vec![1.0, 2.0, 3.0]);
        assert_eq!(f.d2, vec![0.0, 1.0, 2.0]);
        let f = time_weight_factors(1, &g);
        assert_eq!((f.d1, f.d2), (vec![1.0], vec![0.0]));
    }

    #[test]
    fn rank_examples() {
        let ones = Mat::from_fn(8, 8, |_, _| c(1.0));
        assert_eq!(numerical_rank(ones.as_ref(), 1e-10).unwrap(), 1);
        let eye = Mat::from_fn(8, 8, |i, j| c(if i == j { 1.0 } else { 0.0 }));
        assert_eq!(numerical_rank(eye.as_ref(), 1e-10).unwrap(), 8);
        assert_eq!(
            numerical_rank(Mat::<Complex64>::zeros(4, 4).as_ref(), 1e-10).unwrap(),
            0
        );
        assert!(numerical_rank(eye.as_ref(), 1.5).is_err());
    }

    #[test]
    fn cadzow_identity_and_rank_errors() {
        let s: Vec<Complex64> = (0..9)
            .map(|i| Complex64::new(i as f64, -(i as f64).sqrt()))
            .collect();
        assert_eq!(cadzow_denoise(&s, 2, 0).unwrap(), s);
        assert!(cadzow_denoise(&s, 6, 1).is_err());
        assert!(cadzow_denoise(&s, 0, 1).is_err());
    }

    #[test]
    fn takagi_small_cases() {
        let a = Mat::from_fn(2, 2, |i, j| c(if i == j { 2.0 - i as f64 } else { 0.0 }));
        let t = takagi(a.as_ref()).unwrap();
        assert!((t.s[0] - 2.0).abs() < 1e-15 && (t.s[1] - 1.0).abs() < 1e-15);
        assert!(fro_norm(sub(t.reconstruct().as_ref(), a.as_ref()).as_ref()) < 1e-14);
        for (i, j) in [(0, 1), (1, 0)] {
            assert!(t.v[(i, j)].norm() < 1e-14);
        }
        for i in 0..2 {
            assert!((t.v[(i, i)].norm() - 1.0).abs() < 1e-14);
        }
        let j = Mat::from_fn(1, 1, |_, _| Complex64::new(0.0, 1.0));
        let t = takagi(j.as_ref()).unwrap();
        assert!((t.s[0] - 1.0).abs() < 1e-15);
        let v = t.v[(0, 0)];
        assert!((v * v - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        let ns = Mat::from_fn(2, 2, |i, j| c((2 * i + j) as f64));
        assert!(matches!(takagi(ns.as_ref()), Err(Error::Structure(_))));
    }

    #[test]
    fn csv_dump_shape() {
        let m = Mat::from_fn(2, 2, |i, j| Complex64::new(i as f64, -(j as f64)));
        let text = matrix_to_csv(m.as_ref());
        assert_eq!(text.lines().count(), 2);
        let first = text.lines().next().unwrap();
        assert_eq!(
            first,
            "0.0000000000000000e0-0.0000000000000000e0j,0.0000000000000000e0-1.0000000000000000e0j"
        );
    }
}
