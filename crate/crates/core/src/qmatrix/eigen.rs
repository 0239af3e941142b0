//! Complex eigen-solvers behind the quaternionic spectrum.
//!
//! Hermitian problems use cyclic Jacobi. Normal matrices are split into their
//! commuting Hermitian and skew parts so they reuse the same solver; anything
//! else goes through a complex Schur factorization.

use std::cmp::Ordering;

use nalgebra::linalg::Schur;
use num_complex::Complex64;

use super::complex::ComplexMatrix;
use crate::error::{Error, Result};
use crate::quaternion::ComplexRep;

/// Relative off-diagonal tolerance for Jacobi convergence.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
/// Maximum number of Jacobi sweeps before reporting non-convergence.
pub const JACOBI_MAX_SWEEPS: usize = 10_000;
/// Normality defect (relative to `‖M‖²`) under which the normal route is used.
const NORMALITY_TOLERANCE: f64 = 1e-10;
/// Relative gap under which Hermitian-part eigenvalues are treated as one cluster.
const CLUSTER_TOLERANCE: f64 = 1e-6;
/// Conjugate-pair matching tolerance, relative to the spectral scale.
pub const PAIRING_TOLERANCE: f64 = 1e-8;
/// Relative size under which Schur coupling between equal eigenvalues is dropped.
const SEMISIMPLE_TOLERANCE: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

fn off_diagonal_norm(h: &ComplexMatrix) -> f64 {
    let n = h.rows();
    let mut s = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                s += h[(p, q)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi diagonalization of a Hermitian matrix.
///
/// The input is symmetrized as `(H + H*)/2` first, so tiny rounding
/// asymmetries from upstream products are harmless.
pub fn hermitian_eigen(h: &ComplexMatrix) -> Result<HermitianEigen> {
    if !h.is_square() {
        return Err(Error::NotSquare {
            rows: h.rows(),
            cols: h.cols(),
        });
    }
    let n = h.rows();
    let mut a = h.add(&h.adjoint()).scale(Complex64::new(0.5, 0.0));
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius();
    let target = JACOBI_TOLERANCE * scale;
    let tiny = f64::EPSILON * f64::EPSILON * scale;

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= target || scale == 0.0 {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::EigenNoConvergence {
                iterations: sweeps,
                residual: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let hpq = a[(p, q)];
                let mag = hpq.norm();
                if mag <= tiny {
                    continue;
                }
                let phase = hpq / mag; // e^{iφ}
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // G = [[c, s], [-s e^{-iφ}, c e^{-iφ}]] on (p, q).
                let g_pp = Complex64::new(c, 0.0);
                let g_pq = Complex64::new(s, 0.0);
                let g_qp = -phase.conj() * s;
                let g_qq = phase.conj() * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * g_pp + akq * g_qp;
                    a[(k, q)] = akp * g_pq + akq * g_qq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
                    a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

pub fn hermitian_eigenvalues(h: &ComplexMatrix) -> Result<Vec<f64>> {
    hermitian_eigen(h).map(|e| e.values)
}

pub fn normality_defect(m: &ComplexMatrix) -> f64 {
    let ma = m.adjoint();
    (&(m * &ma) - &(&ma * m)).max_abs()
}

pub fn is_normal(m: &ComplexMatrix) -> bool {
    let s = m.max_abs().max(1.0);
    normality_defect(m) <= NORMALITY_TOLERANCE * s * s
}

fn columns_of(m: &ComplexMatrix, cols: &[usize]) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.rows(), cols.len(), |r, c| m[(r, cols[c])])
}

fn rayleigh(m: &ComplexMatrix, v: &[Complex64]) -> Complex64 {
    let n = v.len();
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for r in 0..n {
        let mut mv = Complex64::new(0.0, 0.0);
        for c in 0..n {
            mv += m[(r, c)] * v[c];
        }
        num += v[r].conj() * mv;
        den += v[r].norm_sqr();
    }
    num / den
}

/// Eigenvalues of a normal matrix through its Hermitian/skew split.
///
/// `N = H + iS` with `H`, `S` Hermitian and commuting. Eigenvectors of `H`
/// are refined inside each cluster of nearly equal `H`-eigenvalues by
/// diagonalizing the compression of `S`; eigenvalues are Rayleigh quotients.
pub fn normal_eigenvalues(m: &ComplexMatrix) -> Result<Vec<Complex64>> {
    let half = Complex64::new(0.5, 0.0);
    let ma = m.adjoint();
    let herm = m.add(&ma).scale(half);
    let skew = (m - &ma).scale(Complex64::new(0.0, -0.5));
    let he = hermitian_eigen(&herm)?;
    let n = m.rows();
    let gap = CLUSTER_TOLERANCE * m.max_abs().max(1.0);

    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && he.values[end] - he.values[end - 1] <= gap {
            end += 1;
        }
        let idx: Vec<usize> = (start..end).collect();
        let basis = columns_of(&he.vectors, &idx);
        let vectors = if idx.len() == 1 {
            basis
        } else {
            let compressed = &(&basis.adjoint() * &skew) * &basis;
            let inner = hermitian_eigen(&compressed)?;
            &basis * &inner.vectors
        };
        for c in 0..vectors.cols() {
            out.push(rayleigh(m, &vectors.column(c)));
        }
        start = end;
    }
    Ok(out)
}

/// Eigenvalues and Schur-derived eigenvectors of a general complex matrix.
pub struct GeneralEigen {
    pub values: Vec<Complex64>,
    /// Unit eigenvectors as columns.
    pub vectors: ComplexMatrix,
}

pub fn schur_eigen(m: &ComplexMatrix) -> Result<GeneralEigen> {
    const SCHUR_MAX_ITER: usize = 10_000;
    let n = m.rows();
    let schur = Schur::try_new(m.to_nalgebra(), f64::EPSILON, SCHUR_MAX_ITER).ok_or(
        Error::EigenNoConvergence {
            iterations: SCHUR_MAX_ITER,
            residual: f64::NAN,
        },
    )?;
    let (q, t) = schur.unpack();
    let q = ComplexMatrix::from_nalgebra(&q);
    let t = ComplexMatrix::from_nalgebra(&t);
    let values: Vec<Complex64> = (0..n).map(|k| t[(k, k)]).collect();

    // Back substitution on T. Inside a cluster of equal eigenvalues a
    // negligible numerator means a semisimple eigenvalue and the coupling is
    // dropped; otherwise the denominator is lifted to eps·‖T‖, which leaves
    // the eigenvectors of a Jordan block nearly parallel.
    let t_scale = t.frobenius().max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * t_scale;
    let cluster = SEMISIMPLE_TOLERANCE * t_scale;
    let mut y = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        y[(k, k)] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut y_max: f64 = 0.0;
            for j in (i + 1)..=k {
                acc += t[(i, j)] * y[(j, k)];
                y_max = y_max.max(y[(j, k)].norm());
            }
            let mut den = t[(i, i)] - t[(k, k)];
            if den.norm() < cluster && acc.norm() <= cluster * y_max {
                y[(i, k)] = Complex64::new(0.0, 0.0);
                continue;
            }
            if den.norm() < small {
                den = Complex64::new(small, 0.0);
            }
            y[(i, k)] = -acc / den;
        }
    }
    let mut vectors = &q * &y;
    for c in 0..n {
        let norm = vectors.column(c).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for r in 0..n {
            vectors[(r, c)] /= norm;
        }
    }
    Ok(GeneralEigen { values, vectors })
}

/// Condition number `λ_max / λ_min` of the Gram matrix `V*V` of unit eigenvectors.
pub fn gram_condition(vectors: &ComplexMatrix) -> Result<f64> {
    let gram = &vectors.adjoint() * vectors;
    let vals = hermitian_eigenvalues(&gram)?;
    let (lo, hi) = (vals[0], vals[vals.len() - 1]);
    Ok(if lo <= 0.0 { f64::INFINITY } else { hi / lo })
}

/// Eigenvalues of a square complex matrix; normal input uses the Jacobi route.
pub fn complex_eigenvalues(m: &ComplexMatrix) -> Result<Vec<Complex64>> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if is_normal(m) {
        normal_eigenvalues(m)
    } else {
        schur_eigen(m).map(|e| e.values)
    }
}

fn by_re_then_abs_im(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.abs().total_cmp(&b.im.abs()))
}

/// Collapses the `2m` eigenvalues of a complex adjoint image into `m`
/// conjugacy-class representatives with non-negative imaginary part.
///
/// Sorted by `(re, |im|)`; each unmatched value is paired with the nearest
/// remaining value to its conjugate.
pub fn pair_conjugates(values: &[Complex64]) -> Result<Vec<ComplexRep>> {
    if !values.len().is_multiple_of(2) {
        return Err(Error::PairingFailure { gap: f64::INFINITY });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(by_re_then_abs_im);
    let scale = sorted.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = PAIRING_TOLERANCE * scale;

    let mut used = vec![false; sorted.len()];
    let mut reps = Vec::with_capacity(sorted.len() / 2);
    for i in 0..sorted.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let target = sorted[i].conj();
        let (j, dist) = sorted
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, z)| (j, (z - target).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or(Error::PairingFailure { gap: f64::INFINITY })?;
        if dist > tol {
            return Err(Error::PairingFailure { gap: dist });
        }
        used[j] = true;
        reps.push(ComplexRep {
            re: 0.5 * (sorted[i].re + sorted[j].re),
            im: 0.5 * (sorted[i].im.abs() + sorted[j].im.abs()),
        });
    }
    Ok(reps)
}
