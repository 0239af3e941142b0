//! Quaternionic hyperbolic space in its half-space and ball models.
//!
//! Points are right-projective classes of negative vectors in `ℍⁿ⁺¹`. The
//! half-space form pairs `⟨Z, W⟩ = W* J Z` with `J` the anti-diagonal block
//! matrix `[[0, 0, 1], [0, I, 0], [1, 0, 0]]`; the ball form uses
//! `J₁ = diag(I, -1)`. The Cayley matrix `C` carries one to the other.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qmatrix::eigen::{gram_condition, schur_eigen};
use crate::qmatrix::{inner, vector_norm, QMatrix};
use crate::quaternion::Quaternion;
use crate::random::{gaussian_quaternion, random_qmatrix, random_unitary, unit_quaternion};

/// Sign tolerance for point classification, on unit-normalized lifts.
pub const NULL_TOLERANCE: f64 = 1e-10;
/// Largest admissible entry of `A*JA - J` for an isometry.
pub const FORM_TOLERANCE: f64 = 1e-9;
/// Margin on `|spectral radius - 1|` separating loxodromic elements.
pub const CLASSIFY_TOLERANCE: f64 = 1e-8;
/// Gram condition below which the eigenbasis counts as complete.
pub const ELLIPTIC_GRAM_LIMIT: f64 = 1e8;
/// Gram condition above which the eigenbasis counts as defective.
pub const PARABOLIC_GRAM_LIMIT: f64 = 1e12;
/// Displacement of `o` under which an isometry is taken to fix it.
pub const FIXED_POINT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    HalfSpace,
    Ball,
}

/// Hermitian form of signature `(n, 1)` on `ℍⁿ⁺¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelForm {
    n: usize,
    kind: ModelKind,
    matrix: QMatrix,
}

impl ModelForm {
    pub fn half_space(n: usize) -> Result<Self> {
        Self::new(n, ModelKind::HalfSpace)
    }

    pub fn ball(n: usize) -> Result<Self> {
        Self::new(n, ModelKind::Ball)
    }

    pub fn new(n: usize, kind: ModelKind) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("dimension n must be at least 1".into()));
        }
        let matrix = match kind {
            ModelKind::HalfSpace => half_space_matrix(n),
            ModelKind::Ball => {
                let mut d = vec![1.0; n + 1];
                d[n] = -1.0;
                QMatrix::from_real_diagonal(&d)
            }
        };
        Ok(Self { n, kind, matrix })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Length `n + 1` of homogeneous vectors.
    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn matrix(&self) -> &QMatrix {
        &self.matrix
    }

    fn check_len(&self, v: &[Quaternion]) -> Result<()> {
        if v.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            })
        }
    }

    /// `⟨Z, W⟩ = W* J Z`.
    pub fn pairing(&self, z: &[Quaternion], w: &[Quaternion]) -> Result<Quaternion> {
        self.check_len(z)?;
        self.check_len(w)?;
        Ok(inner(w, &self.matrix.mul_vec(z)))
    }

    /// Real self-pairing `⟨Z, Z⟩`.
    pub fn self_pairing(&self, z: &[Quaternion]) -> Result<f64> {
        self.pairing(z, z).map(|q| q.re())
    }

    /// The origin: `(-1, 0, …, 0, 1)` in the half-space model, `(0, …, 0, 1)` in the ball.
    pub fn origin(&self) -> Vec<Quaternion> {
        let mut v = vec![Quaternion::ZERO; self.dim()];
        v[self.n] = Quaternion::ONE;
        if self.kind == ModelKind::HalfSpace {
            v[0] = Quaternion::real(-1.0);
        }
        v
    }
}

fn half_space_matrix(n: usize) -> QMatrix {
    QMatrix::from_fn(n + 1, n + 1, |r, c| {
        let anti = (r == 0 && c == n) || (r == n && c == 0);
        let middle = r == c && r != 0 && r != n;
        if anti || middle {
            Quaternion::ONE
        } else {
            Quaternion::ZERO
        }
    })
}

/// The distinguished boundary point `q_∞ = (1, 0, …, 0)`.
pub fn point_at_infinity(n: usize) -> Vec<Quaternion> {
    let mut v = vec![Quaternion::ZERO; n + 1];
    v[0] = Quaternion::ONE;
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PointClass {
    Negative,
    Null,
    Positive,
}

impl fmt::Display for PointClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PointClass::Negative => "negative",
            PointClass::Null => "null",
            PointClass::Positive => "positive",
        })
    }
}

/// Sign of the self-pairing of the unit-normalized lift.
pub fn classify_point(z: &[Quaternion], form: &ModelForm) -> Result<PointClass> {
    form.check_len(z)?;
    let norm = vector_norm(z);
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let unit: Vec<Quaternion> = z.iter().map(|&q| q / norm).collect();
    let s = form.self_pairing(&unit)?;
    Ok(if s < -NULL_TOLERANCE {
        PointClass::Negative
    } else if s > NULL_TOLERANCE {
        PointClass::Positive
    } else {
        PointClass::Null
    })
}

/// Homogeneous vector with its cached sign class.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectivePoint {
    coords: Vec<Quaternion>,
    class: PointClass,
}

impl ProjectivePoint {
    pub fn new(coords: Vec<Quaternion>, form: &ModelForm) -> Result<Self> {
        let class = classify_point(&coords, form)?;
        Ok(Self { coords, class })
    }

    pub fn coords(&self) -> &[Quaternion] {
        &self.coords
    }

    pub fn class(&self) -> PointClass {
        self.class
    }

    /// Same projective point, lift multiplied on the right by `q`.
    pub fn scaled(&self, q: Quaternion) -> Self {
        Self {
            coords: self.coords.iter().map(|&z| z * q).collect(),
            class: self.class,
        }
    }
}

/// Horospherical chart `(ξ, v, u)` of the half-space model.
#[derive(Clone, Debug, PartialEq)]
pub struct HorosphericalCoords {
    pub xi: Vec<Quaternion>,
    /// Purely imaginary.
    pub v: Quaternion,
    /// Height; positive exactly for interior points.
    pub u: f64,
}

impl HorosphericalCoords {
    /// Builds coordinates from the imaginary components of `v`.
    pub fn new(xi: Vec<Quaternion>, v: [f64; 3], u: f64) -> Self {
        Self {
            xi,
            v: Quaternion::imaginary(v[0], v[1], v[2]),
            u,
        }
    }

    pub fn n(&self) -> usize {
        self.xi.len() + 1
    }

    fn xi_norm_sqr(&self) -> f64 {
        self.xi.iter().map(|q| q.norm_sqr()).sum()
    }
}

/// Chart coordinates of a half-space vector other than `q_∞`.
pub fn to_horospherical(z: &[Quaternion], form: &ModelForm) -> Result<HorosphericalCoords> {
    if form.kind != ModelKind::HalfSpace {
        return Err(Error::WrongModel);
    }
    form.check_len(z)?;
    let n = form.n;
    let last = z[n];
    let norm = vector_norm(z);
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    if last.modulus() <= 1e-14 * norm {
        return Err(Error::PointAtInfinity);
    }
    let scale = last.inverse().expect("non-zero last coordinate");
    let chart: Vec<Quaternion> = z.iter().map(|&q| q * scale).collect();
    let z1 = chart[0];
    let xi = chart[1..n].to_vec();
    let xi_sqr: f64 = xi.iter().map(|q| q.norm_sqr()).sum();
    Ok(HorosphericalCoords {
        xi,
        v: z1.im() * 2.0,
        u: -(2.0 * z1.re() + xi_sqr),
    })
}

/// Chart vector `(z₁, ξ, 1)` with `z₁ = (-u - |ξ|² + v)/2`.
pub fn from_horospherical(h: &HorosphericalCoords) -> Vec<Quaternion> {
    let z1 = (Quaternion::real(-h.u - h.xi_norm_sqr()) + h.v.im()) * 0.5;
    let mut out = Vec::with_capacity(h.xi.len() + 2);
    out.push(z1);
    out.extend_from_slice(&h.xi);
    out.push(Quaternion::ONE);
    out
}

/// `sinh²(ρ/2)` between interior chart points, free of cancellation.
pub fn horospherical_sinh_sq(a: &HorosphericalCoords, b: &HorosphericalCoords) -> Result<f64> {
    if a.xi.len() != b.xi.len() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            found: b.n(),
        });
    }
    let dxi: f64 = a.xi.iter().zip(&b.xi).map(|(p, q)| (*p - *q).norm_sqr()).sum();
    let cross: Quaternion = inner(&b.xi, &a.xi);
    let twist = (a.v - b.v + cross.im() * 2.0).norm_sqr();
    let du = a.u - b.u;
    let num = du * du + 2.0 * dxi * (a.u + b.u) + dxi * dxi + twist;
    Ok(num / (4.0 * a.u * b.u))
}

/// Literal `|⟨X, Y⟩|² / (⟨X, X⟩⟨Y, Y⟩)`, which equals `cosh²(ρ/2)`.
pub fn cosh_sq_half_distance(x: &[Quaternion], y: &[Quaternion], form: &ModelForm) -> Result<f64> {
    let (nx, ny) = (vector_norm(x), vector_norm(y));
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::ZeroVector);
    }
    let xs: Vec<Quaternion> = x.iter().map(|&q| q / nx).collect();
    let ys: Vec<Quaternion> = y.iter().map(|&q| q / ny).collect();
    let xy = form.pairing(&xs, &ys)?.norm_sqr();
    Ok(xy / (form.self_pairing(&xs)? * form.self_pairing(&ys)?))
}

/// Hyperbolic distance `ρ` with `cosh²(ρ/2) = |⟨X,Y⟩|²/(⟨X,X⟩⟨Y,Y⟩)`.
///
/// Evaluated as `2 asinh(sqrt(sinh²(ρ/2)))` through the horospherical chart,
/// which keeps small distances accurate.
pub fn distance(x: &ProjectivePoint, y: &ProjectivePoint, form: &ModelForm) -> Result<f64> {
    for p in [x, y] {
        if p.class != PointClass::Negative {
            return Err(Error::NotNegative { class: p.class });
        }
    }
    let c = cosh_sq_half_distance(&x.coords, &y.coords, form)?;
    if !(c >= 1.0 - 1e-10) {
        return Err(Error::AcoshDomain { value: c });
    }
    let (hx, hy) = match form.kind {
        ModelKind::HalfSpace => (
            to_horospherical(&x.coords, form)?,
            to_horospherical(&y.coords, form)?,
        ),
        ModelKind::Ball => {
            let hs = ModelForm::half_space(form.n)?;
            (
                to_horospherical(&cayley_to_half_space(&x.coords)?, &hs)?,
                to_horospherical(&cayley_to_half_space(&y.coords)?, &hs)?,
            )
        }
    };
    let s = horospherical_sinh_sq(&hx, &hy)?;
    Ok(2.0 * s.max(0.0).sqrt().asinh())
}

/// Distance between two raw lifts, classifying both first.
pub fn distance_between(x: &[Quaternion], y: &[Quaternion], form: &ModelForm) -> Result<f64> {
    let px = ProjectivePoint::new(x.to_vec(), form)?;
    let py = ProjectivePoint::new(y.to_vec(), form)?;
    distance(&px, &py, form)
}

/// The Cayley matrix; real, symmetric, orthogonal and its own inverse.
pub fn cayley_matrix(n: usize) -> QMatrix {
    let a = FRAC_1_SQRT_2;
    QMatrix::from_fn(n + 1, n + 1, |r, c| {
        let v = if (r == 0 || r == n) && (c == 0 || c == n) {
            if r == n && c == n {
                -a
            } else {
                a
            }
        } else if r == c {
            1.0
        } else {
            0.0
        };
        Quaternion::real(v)
    })
}

/// Ball-model vector to half-space vector. Also the inverse map, since `C² = I`.
pub fn cayley_to_half_space(z: &[Quaternion]) -> Result<Vec<Quaternion>> {
    if z.len() < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: z.len(),
        });
    }
    Ok(cayley_matrix(z.len() - 1).mul_vec(z))
}

/// Dynamical type of an isometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IsometryClass {
    Identity,
    Elliptic,
    Parabolic,
    Loxodromic,
}

impl fmt::Display for IsometryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IsometryClass::Identity => "identity",
            IsometryClass::Elliptic => "elliptic",
            IsometryClass::Parabolic => "parabolic",
            IsometryClass::Loxodromic => "loxodromic",
        })
    }
}

/// Largest entry of `A*JA - J`.
pub fn form_defect(matrix: &QMatrix, form: &ModelForm) -> Result<f64> {
    if matrix.rows() != form.dim() || matrix.cols() != form.dim() {
        return Err(Error::DimensionMismatch {
            expected: form.dim(),
            found: matrix.rows().max(matrix.cols()),
        });
    }
    let j = form.matrix();
    Ok((&(&matrix.conj_transpose() * j) * matrix).max_abs_diff(j))
}

/// Form-preserving matrix, with its class computed on first request.
#[derive(Clone, Debug)]
pub struct Isometry {
    matrix: QMatrix,
    form: ModelForm,
    class: OnceLock<IsometryClass>,
}

impl PartialEq for Isometry {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix && self.form == other.form
    }
}

impl Isometry {
    pub fn new(matrix: QMatrix, form: ModelForm) -> Result<Self> {
        Self::with_tolerance(matrix, form, FORM_TOLERANCE)
    }

    pub fn with_tolerance(matrix: QMatrix, form: ModelForm, tol: f64) -> Result<Self> {
        let defect = form_defect(&matrix, &form)?;
        if !(defect <= tol) {
            return Err(Error::NotFormPreserving { defect });
        }
        Ok(Self::unchecked(matrix, form))
    }

    fn unchecked(matrix: QMatrix, form: ModelForm) -> Self {
        Self {
            matrix,
            form,
            class: OnceLock::new(),
        }
    }

    pub fn identity(form: ModelForm) -> Self {
        Self::unchecked(QMatrix::identity(form.dim()), form)
    }

    /// `diag(r, 1, …, 1, 1/r)` in the half-space model.
    pub fn dilation(n: usize, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("dilation factor {r} must be positive")));
        }
        let mut d = vec![1.0; n + 1];
        d[0] = r;
        d[n] = 1.0 / r;
        Ok(Self::unchecked(QMatrix::from_real_diagonal(&d), ModelForm::half_space(n)?))
    }

    /// Boundary translation fixing `q_∞`, by `ξ` horizontally and `v` vertically.
    pub fn heisenberg_translation(xi: &[Quaternion], v: Quaternion) -> Result<Self> {
        let n = xi.len() + 1;
        let form = ModelForm::half_space(n)?;
        let xi_sqr: f64 = xi.iter().map(|q| q.norm_sqr()).sum();
        let mut m = QMatrix::identity(n + 1);
        for (k, &x) in xi.iter().enumerate() {
            m[(0, k + 1)] = -x.conj();
            m[(k + 1, n)] = x;
        }
        m[(0, n)] = (Quaternion::real(-xi_sqr) + v.im()) * 0.5;
        Self::new(m, form)
    }

    pub fn matrix(&self) -> &QMatrix {
        &self.matrix
    }

    pub fn form(&self) -> &ModelForm {
        &self.form
    }

    pub fn into_matrix(self) -> QMatrix {
        self.matrix
    }

    pub fn form_defect(&self) -> f64 {
        form_defect(&self.matrix, &self.form).expect("dimensions checked on construction")
    }

    fn require_same_form(&self, other: &Isometry) -> Result<()> {
        if self.form == other.form {
            Ok(())
        } else if self.form.n != other.form.n {
            Err(Error::DimensionMismatch {
                expected: self.form.dim(),
                found: other.form.dim(),
            })
        } else {
            Err(Error::WrongModel)
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Result<Isometry> {
        self.require_same_form(other)?;
        Ok(Self::unchecked(&self.matrix * &other.matrix, self.form.clone()))
    }

    /// `A⁻¹ = J A* J`, valid because `J² = I` for both forms.
    pub fn inverse(&self) -> Isometry {
        let j = self.form.matrix();
        Self::unchecked(&(j * &self.matrix.conj_transpose()) * j, self.form.clone())
    }

    /// `G A G⁻¹`.
    pub fn conjugate_by(&self, g: &Isometry) -> Result<Isometry> {
        g.compose(self)?.compose(&g.inverse())
    }

    pub fn pow(&self, k: u64) -> Isometry {
        Self::unchecked(self.matrix.pow(k), self.form.clone())
    }

    pub fn apply(&self, z: &[Quaternion]) -> Result<Vec<Quaternion>> {
        self.form.check_len(z)?;
        Ok(self.matrix.mul_vec(z))
    }

    /// Same transformation in the other model, conjugated by the Cayley matrix.
    pub fn to_model(&self, kind: ModelKind) -> Result<Isometry> {
        if kind == self.form.kind {
            return Ok(self.clone());
        }
        let c = cayley_matrix(self.form.n);
        Ok(Self::unchecked(
            &(&c * &self.matrix) * &c,
            ModelForm::new(self.form.n, kind)?,
        ))
    }

    /// Distance from the origin to its image.
    pub fn displacement(&self) -> Result<f64> {
        let o = self.form.origin();
        distance_between(&o, &self.apply(&o)?, &self.form)
    }

    pub fn class(&self) -> Result<IsometryClass> {
        if let Some(c) = self.class.get() {
            return Ok(*c);
        }
        let c = classify_isometry(self)?;
        Ok(*self.class.get_or_init(|| c))
    }
}

/// Identity, elliptic, parabolic or loxodromic.
///
/// Projectively `±I` is the identity. Otherwise a spectral radius above
/// `1 + 1e-8` with a complete eigenbasis is loxodromic; at radius one a
/// complete eigenbasis (Gram condition below `1e8`) is elliptic and a
/// defective one (above `1e12`) is parabolic. Anything in between is
/// reported as indeterminate.
pub fn classify_isometry(a: &Isometry) -> Result<IsometryClass> {
    let m = a.matrix();
    let id = QMatrix::identity(m.rows());
    if m.max_abs_diff(&id) <= 1e-10 || m.max_abs_diff(&id.scale(-1.0)) <= 1e-10 {
        return Ok(IsometryClass::Identity);
    }
    let eig = schur_eigen(&m.adjoint_embed()?)?;
    let radius = eig.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let gram = gram_condition(&eig.vectors)?;
    let excess = radius - 1.0;
    let indeterminate = Error::IndeterminateClass {
        spectral_radius: radius,
        gram_condition: gram,
    };
    if gram < ELLIPTIC_GRAM_LIMIT {
        return Ok(if excess > CLASSIFY_TOLERANCE {
            IsometryClass::Loxodromic
        } else {
            IsometryClass::Elliptic
        });
    }
    // A Jordan block at eigenvalue one splits into a small circle of
    // eigenvalues, so a defective basis tolerates a wider radius margin.
    if gram > PARABOLIC_GRAM_LIMIT && excess <= 1e-3 {
        return Ok(IsometryClass::Parabolic);
    }
    Err(indeterminate)
}

/// `A = D·R` (`A·o` above `o`) or `A = R·D` (`A⁻¹·o` below `o`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorOrder {
    DilationLeft,
    DilationRight,
}

/// Split of a displacement into the dilation along the vertical geodesic and a rotation about `o`.
#[derive(Clone, Debug)]
pub struct DilationDecomposition {
    /// `r = e^{δ/2}`.
    pub r: f64,
    /// Displacement `δ` of the origin.
    pub delta: f64,
    pub dilation: Isometry,
    pub stabilizer: Isometry,
    pub order: FactorOrder,
}

fn vertical_offset(h: &HorosphericalCoords) -> f64 {
    let u = h.u.max(1.0);
    (h.xi_norm_sqr().sqrt() / u.sqrt()).max(h.v.im_norm() / u)
}

/// Displacement of the origin through the horospherical chart.
fn origin_displacement(a: &Isometry) -> Result<(f64, HorosphericalCoords)> {
    let form = a.form();
    let o = form.origin();
    let image = a.apply(&o)?;
    let h = to_horospherical(&image, form)?;
    let base = HorosphericalCoords::new(vec![Quaternion::ZERO; form.n - 1], [0.0; 3], 2.0);
    let s = horospherical_sinh_sq(&base, &h)?;
    Ok((2.0 * s.max(0.0).sqrt().asinh(), h))
}

/// Factors a vertically normalized half-space isometry through `D = diag(r, 1, …, 1, 1/r)`.
pub fn dilation_decompose(a: &Isometry) -> Result<DilationDecomposition> {
    if a.form().kind != ModelKind::HalfSpace {
        return Err(Error::WrongModel);
    }
    let n = a.form().n;
    let (delta, image) = origin_displacement(a)?;
    if delta <= FIXED_POINT_TOLERANCE {
        return Err(Error::FixesOrigin { displacement: delta });
    }
    let r = (0.5 * delta).exp();
    let dilation = Isometry::dilation(n, r)?;
    let tol = 1e-8;

    let (stabilizer, order) = if image.u > 2.0 && vertical_offset(&image) <= tol {
        (dilation.inverse().compose(a)?, FactorOrder::DilationLeft)
    } else {
        let (_, back) = origin_displacement(&a.inverse())?;
        if back.u < 2.0 && vertical_offset(&back) <= tol {
            (a.compose(&dilation.inverse())?, FactorOrder::DilationRight)
        } else {
            return Err(Error::NotVertical {
                offset: vertical_offset(&image).min(vertical_offset(&back)),
            });
        }
    };
    let (moved, _) = origin_displacement(&stabilizer)?;
    if moved > 1e-8 * delta.max(1.0) {
        return Err(Error::NotFixingOrigin { displacement: moved });
    }
    Ok(DilationDecomposition {
        r,
        delta,
        dilation,
        stabilizer,
        order,
    })
}

/// Unitary whose first column is the unit vector `b`.
fn unitary_with_first_column(b: &[Quaternion]) -> QMatrix {
    let n = b.len();
    let mut basis = vec![b.to_vec()];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| b[i].modulus().total_cmp(&b[j].modulus()));
    for k in order {
        if basis.len() == n {
            break;
        }
        let mut v = vec![Quaternion::ZERO; n];
        v[k] = Quaternion::ONE;
        for _pass in 0..2 {
            for e in &basis {
                let coeff = inner(e, &v);
                for (vi, ei) in v.iter_mut().zip(e) {
                    *vi -= *ei * coeff;
                }
            }
        }
        let norm = vector_norm(&v);
        if norm > 1e-6 {
            basis.push(v.iter().map(|&q| q / norm).collect());
        }
    }
    QMatrix::from_fn(n, n, |r, c| basis[c][r])
}

/// Half-space stabilizer of `o` from a ball-model block `diag(Θ, u)`.
pub fn stabilizer_from_blocks(theta: &QMatrix, u: Quaternion) -> Result<Isometry> {
    let n = theta.rows();
    let block = QMatrix::block_diagonal(theta, &QMatrix::from_diagonal(&[u]));
    Isometry::new(block, ModelForm::ball(n)?)?.to_model(ModelKind::HalfSpace)
}

/// Conjugates by a rotation about `o` so that `A·o` lands on the vertical geodesic above `o`.
///
/// Returns the conjugated isometry and the conjugator `G`.
pub fn normalize_to_vertical_with(a: &Isometry) -> Result<(Isometry, Isometry)> {
    if a.form().kind != ModelKind::HalfSpace {
        return Err(Error::WrongModel);
    }
    let n = a.form().n;
    let (delta, _) = origin_displacement(a)?;
    if delta <= FIXED_POINT_TOLERANCE {
        return Err(Error::FixesOrigin { displacement: delta });
    }
    let ball = cayley_to_half_space(&a.apply(&a.form().origin())?)?;
    let last = ball[n].inverse().ok_or(Error::PointAtInfinity)?;
    let b: Vec<Quaternion> = ball[..n].iter().map(|&q| q * last).collect();
    let len = vector_norm(&b);
    let unit: Vec<Quaternion> = b.iter().map(|&q| q / len).collect();
    let u = unitary_with_first_column(&unit);
    let g = stabilizer_from_blocks(&u.conj_transpose(), Quaternion::ONE)?;
    Ok((a.conjugate_by(&g)?, g))
}

pub fn normalize_to_vertical(a: &Isometry) -> Result<Isometry> {
    normalize_to_vertical_with(a).map(|(v, _)| v)
}

/// Random stabilizer of `o`: `diag(Θ, u)` with Haar `Θ ∈ Sp(n)`, `u ∈ Sp(1)`, moved to the half-space model.
pub fn random_stabilizer(rng: &mut impl Rng, n: usize) -> Isometry {
    let theta = random_unitary(rng, n);
    stabilizer_from_blocks(&theta, unit_quaternion(rng)).expect("unitary blocks preserve the ball form")
}

/// `K₁·D(r)·K₂` with `ln r` uniform on `[0, spread]`.
pub fn random_isometry_with(rng: &mut impl Rng, n: usize, spread: f64) -> Result<Isometry> {
    if n == 0 || !(spread >= 0.0 && spread.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "random isometry needs n >= 1 and finite spread >= 0 (got n = {n}, spread = {spread})"
        )));
    }
    let k1 = random_stabilizer(rng, n);
    let log_r = spread * rng.random::<f64>();
    let k2 = random_stabilizer(rng, n);
    let d = Isometry::dilation(n, log_r.exp())?;
    k1.compose(&d)?.compose(&k2)
}

/// Deterministic in `seed`.
pub fn random_isometry(n: usize, seed: u64, spread: f64) -> Result<Isometry> {
    random_isometry_with(&mut ChaCha8Rng::seed_from_u64(seed), n, spread)
}

fn near_identity_stabilizer(rng: &mut impl Rng, n: usize, scale: f64) -> Isometry {
    let perturbed = &QMatrix::identity(n) + &random_qmatrix(rng, n, n).scale(scale);
    let theta = perturbed
        .gram_schmidt_unitary()
        .unwrap_or_else(|_| QMatrix::identity(n));
    let u = (Quaternion::ONE + gaussian_quaternion(rng) * scale)
        .normalized()
        .unwrap_or(Quaternion::ONE);
    stabilizer_from_blocks(&theta, u).expect("unitary blocks preserve the ball form")
}

/// Isometry close to the identity: rotations perturbed by `scale`, dilation with `ln r ≤ scale`.
pub fn random_near_identity(rng: &mut impl Rng, n: usize, scale: f64) -> Result<Isometry> {
    if n == 0 || !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("bad near-identity scale {scale}")));
    }
    let k1 = near_identity_stabilizer(rng, n, scale);
    let d = Isometry::dilation(n, (scale * rng.random::<f64>()).exp())?;
    let k2 = near_identity_stabilizer(rng, n, scale);
    k1.compose(&d)?.compose(&k2)
}

/// Interior half-space point at distance at most `spread` from `o`.
pub fn random_interior_point(rng: &mut impl Rng, n: usize, spread: f64) -> Result<Vec<Quaternion>> {
    let g = random_isometry_with(rng, n, spread)?;
    let p = g.apply(&g.form().origin())?;
    let q = unit_quaternion(rng) * (0.5 + rng.random::<f64>());
    Ok(p.into_iter().map(|z| z * q).collect())
}
