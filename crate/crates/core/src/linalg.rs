//! Small dense helpers over faer matrices.

use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = Mat<Complex64>;

pub fn adjoint(a: MatRef<'_, Complex64>) -> CMat {
    Mat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conj())
}

pub fn conj(a: MatRef<'_, Complex64>) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].conj())
}

pub fn transpose(a: MatRef<'_, Complex64>) -> CMat {
    Mat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)])
}

pub fn scale(a: MatRef<'_, Complex64>, s: Complex64) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

pub fn sub(a: MatRef<'_, Complex64>, b: MatRef<'_, Complex64>) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] - b[(i, j)])
}

/// Kronecker product `a (x) b`.
pub fn kron(a: MatRef<'_, Complex64>, b: MatRef<'_, Complex64>) -> CMat {
    let (p, q) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * p, a.ncols() * q, |i, j| {
        a[(i / p, j / q)] * b[(i % p, j % q)]
    })
}

/// `a (x) b - c (x) d` without materializing either product.
pub fn kron_diff(
    a: MatRef<'_, Complex64>,
    b: MatRef<'_, Complex64>,
    c: MatRef<'_, Complex64>,
    d: MatRef<'_, Complex64>,
) -> CMat {
    let (p, q) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * p, a.ncols() * q, |i, j| {
        let (i0, i1, j0, j1) = (i / p, i % p, j / q, j % q);
        a[(i0, j0)] * b[(i1, j1)] - c[(i0, j0)] * d[(i1, j1)]
    })
}

pub fn fro_norm(a: MatRef<'_, Complex64>) -> f64 {
    a.norm_l2()
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn mat_vec(a: MatRef<'_, Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)] * v[j]).sum())
        .collect()
}

/// `u^H v`.
pub fn dot_h(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn all_finite(a: MatRef<'_, Complex64>) -> bool {
    (0..a.nrows())
        .all(|i| (0..a.ncols()).all(|j| a[(i, j)].re.is_finite() && a[(i, j)].im.is_finite()))
}

/// Full SVD `a = U diag(s) V^H` with `s` nonincreasing.
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

pub fn svd(a: MatRef<'_, Complex64>, stage: &'static str) -> Result<Svd> {
    let d = a
        .svd()
        .map_err(|e| Error::numerical(stage, format!("SVD did not converge: {e:?}")))?;
    let s: Vec<f64> = d.S().column_vector().iter().map(|z| z.re).collect();
    Ok(Svd {
        u: d.U().to_owned(),
        s,
        v: d.V().to_owned(),
    })
}

pub fn singular_values(a: MatRef<'_, Complex64>, stage: &'static str) -> Result<Vec<f64>> {
    let mut s = a
        .singular_values()
        .map_err(|e| Error::numerical(stage, format!("SVD did not converge: {e:?}")))?;
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

/// Number of singular values at or above `tol * s[0]`.
pub fn count_rank(s: &[f64], tol: f64) -> usize {
    match s.first() {
        Some(&s1) if s1 > 0.0 => s.iter().filter(|&&x| x >= tol * s1).count(),
        _ => 0,
    }
}

/// One generalized eigenpair of `A z = (alpha / beta) B z`.
pub struct GenEigenpair {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub z: Vec<Complex64>,
}

impl GenEigenpair {
    /// Finite eigenvalue, or `None` when `beta` is negligible against `alpha`.
    pub fn value(&self, scale: f64) -> Option<Complex64> {
        if self.beta.norm() <= 1e3 * f64::EPSILON * (self.alpha.norm() + scale) {
            None
        } else {
            let v = self.alpha / self.beta;
            (v.re.is_finite() && v.im.is_finite()).then_some(v)
        }
    }
}

/// QZ-based generalized eigendecomposition of the pencil (a, b).
pub fn gen_eigen(
    a: MatRef<'_, Complex64>,
    b: MatRef<'_, Complex64>,
    stage: &'static str,
) -> Result<Vec<GenEigenpair>> {
    // faer's QZ workspace sizing fails for 1x1 pencils.
    if a.nrows() == 1 {
        return Ok(vec![GenEigenpair {
            alpha: a[(0, 0)],
            beta: b[(0, 0)],
            z: vec![Complex64::new(1.0, 0.0)],
        }]);
    }
    let e = a
        .generalized_eigen(b)
        .map_err(|e| Error::numerical(stage, format!("QZ did not converge: {e:?}")))?;
    let (u, sa, sb) = (e.U(), e.S_a().column_vector(), e.S_b().column_vector());
    let pairs: Vec<GenEigenpair> = (0..a.nrows())
        .map(|i| GenEigenpair {
            alpha: sa[i],
            beta: sb[i],
            z: (0..u.nrows()).map(|r| u[(r, i)]).collect(),
        })
        .collect();
    let broken = pairs.iter().any(|p| {
        (p.alpha.norm() == 0.0 && p.beta.norm() == 0.0)
            || !(p.alpha.is_finite() && p.beta.is_finite())
    });
    if !broken {
        return Ok(pairs);
    }
    // QZ can break down on pencils with a single repeated eigenvalue (A = cB),
    // returning 0/0. Fall back to a standard problem on whichever side inverts.
    if let Some(inv_b_a) = solve_if_conditioned(b, a, stage)? {
        return std_eigen(inv_b_a.as_ref(), stage);
    }
    if let Some(inv_a_b) = solve_if_conditioned(a, b, stage)? {
        return Ok(std_eigen(inv_a_b.as_ref(), stage)?
            .into_iter()
            .map(|p| GenEigenpair {
                alpha: Complex64::new(1.0, 0.0),
                beta: p.alpha,
                z: p.z,
            })
            .collect());
    }
    Ok(pairs)
}

/// `m^{-1} rhs` when `m` is comfortably invertible.
fn solve_if_conditioned(
    m: MatRef<'_, Complex64>,
    rhs: MatRef<'_, Complex64>,
    stage: &'static str,
) -> Result<Option<CMat>> {
    use faer::linalg::solvers::Solve;
    let s = singular_values(m, stage)?;
    let (hi, lo) = (s[0], s[s.len() - 1]);
    if !(hi > 0.0 && lo > 1e-12 * hi) {
        return Ok(None);
    }
    Ok(Some(m.partial_piv_lu().solve(rhs)))
}

/// Eigenpairs of a square matrix, reported as pencil pairs with `beta = 1`.
pub fn std_eigen(a: MatRef<'_, Complex64>, stage: &'static str) -> Result<Vec<GenEigenpair>> {
    let e = a
        .eigen()
        .map_err(|e| Error::numerical(stage, format!("eigensolver did not converge: {e:?}")))?;
    let (u, s) = (e.U(), e.S().column_vector());
    Ok((0..a.nrows())
        .map(|i| GenEigenpair {
            alpha: s[i],
            beta: Complex64::new(1.0, 0.0),
            z: (0..u.nrows()).map(|r| u[(r, i)]).collect(),
        })
        .collect())
}

/// Orthonormal basis of the dominant left singular subspace of the
/// horizontally stacked, individually normalized blocks.
pub fn joint_range(
    blocks: &[MatRef<'_, Complex64>],
    tol: f64,
    stage: &'static str,
) -> Result<(CMat, Vec<f64>)> {
    let n = blocks[0].nrows();
    let total: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut stacked = Mat::<Complex64>::zeros(n, total);
    let mut col = 0;
    for b in blocks {
        let nrm = fro_norm(*b);
        let inv = if nrm > 0.0 { 1.0 / nrm } else { 0.0 };
        for j in 0..b.ncols() {
            for i in 0..n {
                stacked[(i, col + j)] = b[(i, j)] * inv;
            }
        }
        col += b.ncols();
    }
    let d = svd(stacked.as_ref(), stage)?;
    let r = count_rank(&d.s, tol);
    let u = Mat::from_fn(n, r, |i, j| d.u[(i, j)]);
    Ok((u, d.s))
}

/// Solves `min ||a c - y||` via QR.
pub fn lstsq(a: MatRef<'_, Complex64>, y: &[Complex64]) -> Vec<Complex64> {
    use faer::linalg::solvers::SolveLstsq;
    let rhs = Mat::from_fn(y.len(), 1, |i, _| y[i]);
    let sol = a.qr().solve_lstsq(&rhs);
    (0..a.ncols()).map(|i| sol[(i, 0)]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_diff_matches_explicit_products() {
        let a = Mat::from_fn(2, 2, |i, j| c(i as f64 + 1.0, j as f64));
        let b = Mat::from_fn(2, 2, |i, j| c(j as f64 - 1.0, i as f64 * 0.5));
        let e = sub(
            kron(a.as_ref(), b.as_ref()).as_ref(),
            kron(b.as_ref(), a.as_ref()).as_ref(),
        );
        let f = kron_diff(a.as_ref(), b.as_ref(), b.as_ref(), a.as_ref());
        assert!(fro_norm(sub(e.as_ref(), f.as_ref()).as_ref()) < 1e-15);
        assert_eq!(kron(a.as_ref(), b.as_ref())[(3, 1)], a[(1, 0)] * b[(1, 1)]);
    }

    #[test]
    fn svd_values_are_sorted_and_reconstruct() {
        let a = Mat::from_fn(5, 5, |i, j| {
            c(((i * 7 + j * 3) % 5) as f64, (i as f64 - j as f64) * 0.3)
        });
        let d = svd(a.as_ref(), "test").unwrap();
        assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        let sig = Mat::from_fn(
            5,
            5,
            |i, j| if i == j { c(d.s[i], 0.0) } else { c(0.0, 0.0) },
        );
        let r = &d.u * &sig * adjoint(d.v.as_ref());
        assert!(fro_norm(sub(r.as_ref(), a.as_ref()).as_ref()) < 1e-12 * fro_norm(a.as_ref()));
    }

    #[test]
    fn gen_eigen_diagonal_pencil() {
        let a = Mat::from_fn(2, 2, |i, j| {
            if i == j {
                c(3.0 * (i as f64 + 1.0), 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let b = Mat::from_fn(2, 2, |i, j| if i == j { c(1.5, 0.0) } else { c(0.0, 0.0) });
        let mut v: Vec<f64> = gen_eigen(a.as_ref(), b.as_ref(), "test")
            .unwrap()
            .iter()
            .map(|p| p.value(1.0).unwrap().re)
            .collect();
        v.sort_by(f64::total_cmp);
        assert!((v[0] - 2.0).abs() < 1e-14 && (v[1] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn gen_eigen_proportional_pencil() {
        let beta = c(0.7, -0.2);
        for n in 1..=8 {
            let b = Mat::from_fn(n, n, |i, j| {
                c(
                    ((i * 7 + j * 3) % 5) as f64 - 1.7,
                    (i as f64 - j as f64) * 0.3,
                ) + if i == j { c(3.0, 0.0) } else { c(0.0, 0.0) }
            });
            let a = Mat::from_fn(n, n, |i, j| beta * b[(i, j)]);
            let pairs = gen_eigen(a.as_ref(), b.as_ref(), "test").unwrap();
            assert_eq!(pairs.len(), n);
            for p in pairs {
                assert!(
                    (p.value(1.0).unwrap() - beta).norm() < 1e-12,
                    "n {n}: {:?}",
                    p.value(1.0)
                );
            }
        }
    }
}
