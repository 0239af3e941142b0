//! Matrices over the quaternions.
//!
//! All spectral quantities go through the complex adjoint image
//! `A = A₁ + A₂ j ↦ [[A₁, A₂], [-Ā₂, Ā₁]]`, which is multiplicative and whose
//! eigenvalues come in conjugate pairs, one pair per quaternionic eigenvalue
//! class.

pub mod complex;
pub mod eigen;

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use complex::ComplexMatrix;

use crate::error::{Error, Result};
use crate::quaternion::{ComplexRep, Quaternion};

/// Dense row-major quaternionic matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QMatrixJson", into = "QMatrixJson")]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Quaternion>,
}

/// Wire format `{ "rows": m, "cols": m, "entries": [[w,x,y,z], ...] }`.
#[derive(Serialize, Deserialize)]
struct QMatrixJson {
    rows: usize,
    cols: usize,
    entries: Vec<Quaternion>,
}

impl TryFrom<QMatrixJson> for QMatrix {
    type Error = Error;
    fn try_from(j: QMatrixJson) -> Result<Self> {
        QMatrix::new(j.rows, j.cols, j.entries)
    }
}

impl From<QMatrix> for QMatrixJson {
    fn from(m: QMatrix) -> Self {
        QMatrixJson {
            rows: m.rows,
            cols: m.cols,
            entries: m.entries,
        }
    }
}

/// Quaternion conjugacy classes of eigenvalues, one per row of the matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spectrum {
    pub values: Vec<ComplexRep>,
}

impl Spectrum {
    pub fn radius(&self) -> f64 {
        self.values.iter().map(|v| v.modulus()).fold(0.0, f64::max)
    }
}

impl QMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Quaternion>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::BadShape {
                rows,
                cols,
                len: entries.len(),
            });
        }
        if entries.iter().any(|q| !q.is_finite()) {
            return Err(Error::InvalidParameter("non-finite matrix entry".into()));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Quaternion::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![Quaternion::ONE; n])
    }

    pub fn from_diagonal(diag: &[Quaternion]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (k, &d) in diag.iter().enumerate() {
            m[(k, k)] = d;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<Quaternion> = diag.iter().map(|&x| Quaternion::real(x)).collect();
        Self::from_diagonal(&d)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Quaternion) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                entries.push(f(r, c));
            }
        }
        Self { rows, cols, entries }
    }

    /// Block-diagonal matrix `[[a, 0], [0, b]]`.
    pub fn block_diagonal(a: &QMatrix, b: &QMatrix) -> Self {
        let n = a.rows + b.rows;
        let m = a.cols + b.cols;
        Self::from_fn(n, m, |r, c| {
            if r < a.rows && c < a.cols {
                a[(r, c)]
            } else if r >= a.rows && c >= a.cols {
                b[(r - a.rows, c - a.cols)]
            } else {
                Quaternion::ZERO
            }
        })
    }

    /// Column vector from a slice.
    pub fn column_vector(v: &[Quaternion]) -> Self {
        Self::from_fn(v.len(), 1, |r, _| v[r])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Quaternion] {
        &self.entries
    }

    pub fn column(&self, c: usize) -> Vec<Quaternion> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    /// Transconjugate `A* = ᵗĀ`.
    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&q| q * s).collect(),
        }
    }

    pub fn mul_vec(&self, v: &[Quaternion]) -> Vec<Quaternion> {
        assert_eq!(self.cols, v.len(), "vector length does not match columns");
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self[(r, c)] * v[c]).sum())
            .collect()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|q| q.modulus()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &QMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (*a - *b).modulus())
            .fold(0.0, f64::max)
    }

    /// `A - I` for square `A`.
    pub fn minus_identity(&self) -> Self {
        assert!(self.is_square());
        let mut m = self.clone();
        for k in 0..self.rows {
            m[(k, k)] -= Quaternion::ONE;
        }
        m
    }

    /// Complex adjoint image `[[A₁, A₂], [-conj(A₂), conj(A₁)]]` of a square matrix.
    pub fn adjoint_embed(&self) -> Result<ComplexMatrix> {
        let m = self.require_square()?;
        let mut out = ComplexMatrix::zeros(2 * m, 2 * m);
        for r in 0..m {
            for c in 0..m {
                let (a1, a2) = self[(r, c)].split();
                out[(r, c)] = a1;
                out[(r, c + m)] = a2;
                out[(r + m, c)] = -a2.conj();
                out[(r + m, c + m)] = a1.conj();
            }
        }
        Ok(out)
    }

    /// Inverse of [`QMatrix::adjoint_embed`]; fails if the block structure is violated.
    pub fn from_adjoint_image(m: &ComplexMatrix, tol: f64) -> Result<Self> {
        if !m.is_square() || !m.rows().is_multiple_of(2) {
            return Err(Error::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        let n = m.rows() / 2;
        let mut defect: f64 = 0.0;
        let q = Self::from_fn(n, n, |r, c| {
            let a1 = m[(r, c)];
            let a2 = m[(r, c + n)];
            defect = defect
                .max((m[(r + n, c)] + a2.conj()).norm())
                .max((m[(r + n, c + n)] - a1.conj()).norm());
            Quaternion::from_split(a1, a2)
        });
        if defect > tol {
            return Err(Error::InvalidParameter(format!(
                "not a quaternionic adjoint image (defect {defect:e})"
            )));
        }
        Ok(q)
    }

    /// Inverse by Gauss-Jordan elimination with left row operations.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.require_square()?;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&i, &j| a[(i, col)].modulus().total_cmp(&a[(j, col)].modulus()))
                .expect("non-empty range");
            let pivot = a[(pivot_row, col)];
            if pivot.modulus() <= 1e-14 * scale {
                return Err(Error::Singular {
                    pivot: pivot.modulus(),
                });
            }
            if pivot_row != col {
                for c in 0..n {
                    a.entries.swap(pivot_row * n + c, col * n + c);
                    inv.entries.swap(pivot_row * n + c, col * n + c);
                }
            }
            let pinv = pivot.inverse().expect("non-zero pivot");
            for c in 0..n {
                a[(col, c)] = pinv * a[(col, c)];
                inv[(col, c)] = pinv * inv[(col, c)];
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[(r, col)];
                if factor == Quaternion::ZERO {
                    continue;
                }
                for c in 0..n {
                    let ac = a[(col, c)];
                    let ic = inv[(col, c)];
                    a[(r, c)] -= factor * ac;
                    inv[(r, c)] -= factor * ic;
                }
            }
        }
        Ok(inv)
    }

    /// `A^k` by binary exponentiation.
    pub fn pow(&self, mut k: u64) -> Self {
        assert!(self.is_square());
        let mut result = Self::identity(self.rows);
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Right eigenvalue classes, computed on the complex adjoint image.
    pub fn spectrum(&self) -> Result<Spectrum> {
        let embedded = self.adjoint_embed()?;
        let values = eigen::complex_eigenvalues(&embedded)?;
        let values = eigen::pair_conjugates(&values)?;
        Ok(Spectrum { values })
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        self.spectrum().map(|s| s.radius())
    }

    /// `‖A‖ = sqrt(r_σ(A*A))`; rectangular input is allowed.
    pub fn spectral_norm(&self) -> Result<f64> {
        let gram = &self.conj_transpose() * self;
        let embedded = gram.adjoint_embed()?;
        let values = eigen::hermitian_eigenvalues(&embedded)?;
        let top = values.last().copied().unwrap_or(0.0);
        Ok(top.max(0.0).sqrt())
    }

    /// Largest entry modulus of `A*A - I`.
    pub fn unitary_defect(&self) -> Result<f64> {
        self.require_square()?;
        Ok((&self.conj_transpose() * self).minus_identity().max_abs())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitary_defect().map(|d| d <= tol).unwrap_or(false)
    }

    /// Eigen-angles in `[0, π]`, ascending, of a unitary matrix.
    pub fn unitary_angles(&self) -> Result<Vec<f64>> {
        let defect = self.unitary_defect()?;
        if defect > 1e-9 {
            return Err(Error::NotUnitary { defect });
        }
        let mut angles: Vec<f64> = self.spectrum()?.values.iter().map(|v| v.arg()).collect();
        angles.sort_by(f64::total_cmp);
        Ok(angles)
    }

    /// Column orthonormalization under the standard positive Hermitian pairing.
    ///
    /// Modified Gram-Schmidt with one re-orthogonalization pass per column.
    pub fn gram_schmidt_unitary(&self) -> Result<Self> {
        let n = self.require_square()?;
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let mut basis: Vec<Vec<Quaternion>> = Vec::with_capacity(n);
        for c in 0..n {
            let mut v = self.column(c);
            let original = vector_norm(&v);
            for _pass in 0..2 {
                for e in &basis {
                    let coeff = inner(e, &v);
                    for (vi, ei) in v.iter_mut().zip(e) {
                        *vi -= *ei * coeff;
                    }
                }
            }
            let norm = vector_norm(&v);
            if norm <= 1e-12 * scale.max(original) {
                return Err(Error::RankDeficient { column: c, pivot: norm });
            }
            v.iter_mut().for_each(|x| *x = *x / norm);
            basis.push(v);
        }
        Ok(Self::from_fn(n, n, |r, c| basis[c][r]))
    }
}

/// `e* v = Σ conj(e_i) v_i`.
pub fn inner(e: &[Quaternion], v: &[Quaternion]) -> Quaternion {
    e.iter().zip(v).map(|(a, b)| a.conj() * *b).sum()
}

pub fn vector_norm(v: &[Quaternion]) -> f64 {
    v.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt()
}

impl Index<(usize, usize)> for QMatrix {
    type Output = Quaternion;
    fn index(&self, (r, c): (usize, usize)) -> &Quaternion {
        &self.entries[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Quaternion {
        &mut self.entries[r * self.cols + c]
    }
}

impl Mul for &QMatrix {
    type Output = QMatrix;
    fn mul(self, rhs: &QMatrix) -> QMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = QMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == Quaternion::ZERO {
                    continue;
                }
                for c in 0..rhs.cols {
                    out[(r, c)] += a * rhs[(k, c)];
                }
            }
        }
        out
    }
}

impl Add for &QMatrix {
    type Output = QMatrix;
    fn add(self, rhs: &QMatrix) -> QMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| *a + *b).collect(),
        }
    }
}

impl Sub for &QMatrix {
    type Output = QMatrix;
    fn sub(self, rhs: &QMatrix) -> QMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| *a - *b).collect(),
        }
    }
}

impl Neg for &QMatrix {
    type Output = QMatrix;
    fn neg(self) -> QMatrix {
        self.scale(-1.0)
    }
}

/// `e^{iθ}` as a quaternion on the `i` axis.
pub fn unit_complex(theta: f64) -> Quaternion {
    Quaternion::from_complex(Complex64::from_polar(1.0, theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_qmatrix, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{E, PI};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn embed_identity_and_j() {
        let e = QMatrix::identity(3).adjoint_embed().unwrap();
        assert_eq!(e, ComplexMatrix::identity(6));
        let j = QMatrix::from_diagonal(&[Quaternion::J]).adjoint_embed().unwrap();
        let want = ComplexMatrix::new(
            2,
            2,
            vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        )
        .unwrap();
        assert_eq!(j, want);
    }

    #[test]
    fn embed_rejects_rectangular() {
        assert!(matches!(QMatrix::zeros(2, 3).adjoint_embed(), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn embed_is_multiplicative() {
        let mut r = rng(1);
        for k in 0..1000 {
            let n = 1 + k % 4;
            let a = random_qmatrix(&mut r, n, n);
            let b = random_qmatrix(&mut r, n, n);
            let lhs = (&a * &b).adjoint_embed().unwrap();
            let rhs = &a.adjoint_embed().unwrap() * &b.adjoint_embed().unwrap();
            assert!((&lhs - &rhs).max_abs() <= 1e-12);
            let back = QMatrix::from_adjoint_image(&lhs, 1e-12).unwrap();
            assert!(back.max_abs_diff(&(&a * &b)) <= 1e-12);
        }
    }

    #[test]
    fn conj_transpose_reverses_products() {
        let mut r = rng(2);
        for _ in 0..100 {
            let a = random_qmatrix(&mut r, 3, 4);
            let b = random_qmatrix(&mut r, 4, 2);
            let lhs = (&a * &b).conj_transpose();
            let rhs = &b.conj_transpose() * &a.conj_transpose();
            assert!(lhs.max_abs_diff(&rhs) <= 1e-13);
        }
    }

    #[test]
    fn spectrum_examples() {
        let s = QMatrix::from_diagonal(&[Quaternion::I, Quaternion::J]).spectrum().unwrap();
        assert_eq!(s.values.len(), 2);
        for v in &s.values {
            assert!((v.re).abs() < 1e-14 && (v.im - 1.0).abs() < 1e-14);
        }
        let s = QMatrix::identity(4).spectrum().unwrap();
        assert_eq!(s.values.len(), 4);
        assert!(s.values.iter().all(|v| (v.re - 1.0).abs() < 1e-14 && v.im.abs() < 1e-14));
        let mut s = QMatrix::from_real_diagonal(&[2.0, 3.0]).spectrum().unwrap().values;
        s.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((s[0].re - 2.0).abs() < 1e-14 && (s[1].re - 3.0).abs() < 1e-14);
    }

    #[test]
    fn spectrum_of_non_normal_matrix() {
        // Upper triangular with diagonal (2, 1 + j): classes (2, 0) and (1, 1).
        let mut m = QMatrix::from_diagonal(&[Quaternion::real(2.0), Quaternion::new(1.0, 0.0, 1.0, 0.0)]);
        m[(0, 1)] = Quaternion::new(0.5, 1.0, -2.0, 0.25);
        let mut s = m.spectrum().unwrap().values;
        s.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((s[0].re - 1.0).abs() < 1e-12 && (s[0].im - 1.0).abs() < 1e-12);
        assert!((s[1].re - 2.0).abs() < 1e-12 && s[1].im.abs() < 1e-12);
    }

    #[test]
    fn spectral_radius_examples() {
        assert!((QMatrix::identity(3).spectral_radius().unwrap() - 1.0).abs() < 1e-14);
        let m = QMatrix::from_diagonal(&[Quaternion::real(2.0), Quaternion::I]);
        assert!((m.spectral_radius().unwrap() - 2.0).abs() < 1e-14);
        let d = QMatrix::from_real_diagonal(&[E, 1.0, 1.0 / E]);
        assert!((d.spectral_radius().unwrap() - E).abs() < 1e-14);
    }

    #[test]
    fn spectral_norm_examples() {
        let mut r = rng(3);
        for n in 1..5 {
            let u = random_unitary(&mut r, n);
            assert!((u.spectral_norm().unwrap() - 1.0).abs() < 1e-10);
        }
        let rr = 3.5;
        let d = QMatrix::from_real_diagonal(&[rr, 1.0, 1.0 / rr]);
        assert!((d.spectral_norm().unwrap() - rr).abs() < 1e-12);
        assert!((d.minus_identity().spectral_norm().unwrap() - (rr - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_of_rectangular_column() {
        let v = QMatrix::column_vector(&[Quaternion::new(1.0, 1.0, 1.0, 1.0), Quaternion::real(2.0)]);
        assert!((v.spectral_norm().unwrap() - 8f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn unitary_conjugation_preserves_norm() {
        let mut r = rng(4);
        for _ in 0..100 {
            let a = random_qmatrix(&mut r, 3, 3);
            let u = random_unitary(&mut r, 3);
            let c = &(&u * &a) * &u.conj_transpose();
            let (na, nc) = (a.spectral_norm().unwrap(), c.spectral_norm().unwrap());
            assert!((na - nc).abs() <= 1e-10 * na.max(1.0));
        }
    }

    #[test]
    fn norm_inequalities_on_random_matrices() {
        let mut r = rng(5);
        for k in 0..200 {
            let n = 1 + k % 4;
            let a = random_qmatrix(&mut r, n, n);
            let b = random_qmatrix(&mut r, n, n);
            let (na, nb) = (a.spectral_norm().unwrap(), b.spectral_norm().unwrap());
            assert!((&a * &b).spectral_norm().unwrap() <= na * nb + 1e-10);
            assert!((a.conj_transpose().spectral_norm().unwrap() - na).abs() <= 1e-10);
            assert!(a.spectral_radius().unwrap() <= na + 1e-10);
        }
    }

    #[test]
    fn is_unitary_examples() {
        assert!(QMatrix::identity(3).is_unitary(1e-12));
        assert!(!QMatrix::from_real_diagonal(&[2.0]).is_unitary(2.9));
        assert!(!QMatrix::zeros(2, 3).is_unitary(1.0));
    }

    #[test]
    fn unitary_angles_examples() {
        let angles = QMatrix::identity(3).unitary_angles().unwrap();
        assert!(angles.iter().all(|a| a.abs() < 1e-12));
        let m = QMatrix::from_diagonal(&[unit_complex(1.1), unit_complex(0.3)]);
        let angles = m.unitary_angles().unwrap();
        assert!((angles[0] - 0.3).abs() < 1e-12 && (angles[1] - 1.1).abs() < 1e-12);
        let angles = QMatrix::identity(2).scale(-1.0).unitary_angles().unwrap();
        assert!(angles.iter().all(|a| (a - PI).abs() < 1e-7));
        assert!(matches!(
            QMatrix::from_real_diagonal(&[2.0, 1.0]).unitary_angles(),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn unitary_angles_are_conjugation_invariant() {
        let mut r = rng(6);
        let d = QMatrix::from_diagonal(&[unit_complex(0.4), unit_complex(2.0), unit_complex(2.9)]);
        for _ in 0..20 {
            let u = random_unitary(&mut r, 3);
            let m = &(&u * &d) * &u.conj_transpose();
            let angles = m.unitary_angles().unwrap();
            for (got, want) in angles.iter().zip([0.4, 2.0, 2.9]) {
                assert!((got - want).abs() < 1e-9, "{got} vs {want}");
            }
        }
    }

    #[test]
    fn gram_schmidt_examples() {
        let i3 = QMatrix::identity(3);
        assert!(i3.gram_schmidt_unitary().unwrap().max_abs_diff(&i3) < 1e-15);
        let d = QMatrix::from_real_diagonal(&[2.0, 3.0]);
        assert!(d.gram_schmidt_unitary().unwrap().max_abs_diff(&QMatrix::identity(2)) < 1e-15);
        let mut r = rng(7);
        for _ in 0..100 {
            let u = random_qmatrix(&mut r, 3, 3).gram_schmidt_unitary().unwrap();
            assert!(u.unitary_defect().unwrap() <= 1e-10);
        }
        let mut sing = QMatrix::identity(2);
        sing[(1, 1)] = Quaternion::ZERO;
        assert!(matches!(sing.gram_schmidt_unitary(), Err(Error::RankDeficient { column: 1, .. })));
    }

    #[test]
    fn inverse_and_power() {
        let mut r = rng(8);
        for _ in 0..100 {
            let a = random_qmatrix(&mut r, 3, 3);
            let inv = a.inverse().unwrap();
            assert!((&a * &inv).max_abs_diff(&QMatrix::identity(3)) < 1e-9);
            assert!((&inv * &a).max_abs_diff(&QMatrix::identity(3)) < 1e-9);
        }
        let a = random_qmatrix(&mut r, 2, 2);
        let mut naive = QMatrix::identity(2);
        for _ in 0..13 {
            naive = &naive * &a;
        }
        assert!(a.pow(13).max_abs_diff(&naive) <= 1e-12 * naive.max_abs());
        assert_eq!(a.pow(0), QMatrix::identity(2));
        assert!(matches!(QMatrix::zeros(2, 2).inverse(), Err(Error::Singular { .. })));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let m = QMatrix::from_diagonal(&[Quaternion::I, Quaternion::real(2.0)]);
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.starts_with("{\"rows\":2,\"cols\":2,\"entries\":[[0.0,1.0,0.0,0.0]"));
        let back: QMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"rows":2,"cols":2,"entries":[[1,0,0,0]]}"#;
        assert!(serde_json::from_str::<QMatrix>(bad).is_err());
    }
}
