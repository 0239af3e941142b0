//! Reference computations that avoid the library's own embedding and eigen-solvers.

#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};
use qhyper::{QMatrix, Quaternion};

pub type CMat = DMatrix<Complex<f64>>;

/// `M = A + B j ↦ [[A, B], [-conj B, conj A]]`, built from raw components.
pub fn embed(m: &QMatrix) -> CMat {
    let (r, c) = (m.rows(), m.cols());
    let mut out = CMat::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let q = m.entries()[i * c + j];
            let a = Complex::new(q.w, q.x);
            let b = Complex::new(q.y, q.z);
            out[(i, j)] = a;
            out[(i, j + c)] = b;
            out[(i + r, j)] = -b.conj();
            out[(i + r, j + c)] = a.conj();
        }
    }
    out
}

/// Largest singular value from nalgebra's SVD.
pub fn norm2(m: &CMat) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

pub fn qnorm(m: &QMatrix) -> f64 {
    norm2(&embed(m))
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn inverse(m: &CMat) -> CMat {
    m.clone().try_inverse().expect("invertible")
}

/// Power by repeated squaring on the complex image.
pub fn pow(m: &CMat, mut k: u64) -> CMat {
    let mut base = m.clone();
    let mut acc = identity(m.nrows());
    while k > 0 {
        if k & 1 == 1 {
            acc = &acc * &base;
        }
        base = &base * &base;
        k >>= 1;
    }
    acc
}

/// Half-space form: ones on the anti-diagonal corners, identity in between.
pub fn half_space_form(n: usize) -> Vec<Vec<f64>> {
    let d = n + 1;
    let mut j = vec![vec![0.0; d]; d];
    j[0][d - 1] = 1.0;
    j[d - 1][0] = 1.0;
    for (k, row) in j.iter_mut().enumerate().take(d - 1).skip(1) {
        row[k] = 1.0;
    }
    j
}

/// Ball form `diag(1, ..., 1, -1)`.
pub fn ball_form(n: usize) -> Vec<Vec<f64>> {
    let d = n + 1;
    let mut j = vec![vec![0.0; d]; d];
    for (k, row) in j.iter_mut().enumerate() {
        row[k] = if k == d - 1 { -1.0 } else { 1.0 };
    }
    j
}

/// `w* J z` for a real symmetric `J`.
pub fn pairing(form: &[Vec<f64>], z: &[Quaternion], w: &[Quaternion]) -> Quaternion {
    let mut acc = Quaternion::ZERO;
    for (i, row) in form.iter().enumerate() {
        for (k, &coef) in row.iter().enumerate() {
            if coef != 0.0 {
                acc += w[i].conj() * z[k] * coef;
            }
        }
    }
    acc
}

/// `ρ` from `cosh²(ρ/2) = ⟨X,Y⟩⟨Y,X⟩ / (⟨X,X⟩⟨Y,Y⟩)`.
pub fn reference_distance(form: &[Vec<f64>], x: &[Quaternion], y: &[Quaternion]) -> f64 {
    let xy = pairing(form, x, y);
    let xx = pairing(form, x, x).w;
    let yy = pairing(form, y, y).w;
    let c = xy.norm_sqr() / (xx * yy);
    2.0 * c.sqrt().max(1.0).acosh()
}

pub fn apply(m: &QMatrix, z: &[Quaternion]) -> Vec<Quaternion> {
    m.mul_vec(z)
}
