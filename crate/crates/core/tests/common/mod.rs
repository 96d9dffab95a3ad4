#![allow(dead_code)]

use faer::Mat;
use num_complex::Complex64;

/// Singular values by one-sided (Hestenes) Jacobi, descending. Slow but
/// independent of the library's SVD.
pub fn jacobi_singular_values(a: &Mat<Complex64>) -> Vec<f64> {
    let (m, n) = (a.nrows(), a.ncols());
    let mut cols: Vec<Vec<Complex64>> = (0..n)
        .map(|j| (0..m).map(|i| a[(i, j)]).collect())
        .collect();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let g: Complex64 = cols[p]
                    .iter()
                    .zip(&cols[q])
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                if g.norm() <= 1e-16 * (alpha * beta).sqrt() || g.norm() == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = g / g.norm();
                let zeta = (beta - alpha) / (2.0 * g.norm());
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let x = cols[p][i];
                    let y = cols[q][i] * phase.conj();
                    cols[p][i] = x * c - y * s;
                    cols[q][i] = (x * s + y * c) * phase;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Rank at `tol` relative to the largest singular value, or `None` when a
/// singular value sits within a factor of 1.5 of the threshold.
pub fn oracle_rank(a: &Mat<Complex64>, tol: f64) -> Option<usize> {
    let s = jacobi_singular_values(a);
    let cut = tol * s[0];
    if s.iter().any(|&x| x > cut / 1.5 && x < cut * 1.5) {
        return None;
    }
    Some(s.iter().filter(|&&x| x >= cut).count())
}

pub fn hankel_of(source: &[Complex64]) -> Mat<Complex64> {
    let n = source.len().div_ceil(2);
    Mat::from_fn(n, n, |i, j| source[i + j])
}

pub fn fro(a: &Mat<Complex64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}
