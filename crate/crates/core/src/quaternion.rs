//! Hamilton quaternions `w + x i + y j + z k`.
//!
//! The product follows `i² = j² = k² = -1`, `ij = k = -ji`. Quaternions act
//! on column vectors of `ℍⁿ` from the right, so eigenvalues are right
//! eigenvalues and are only defined up to conjugacy; [`ComplexRep`] is the
//! canonical representative of such a class in the closed upper half-plane.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub const fn real(w: f64) -> Self {
        Self::new(w, 0.0, 0.0, 0.0)
    }

    /// Purely imaginary quaternion `x i + y j + z k`.
    pub const fn imaginary(x: f64, y: f64, z: f64) -> Self {
        Self::new(0.0, x, y, z)
    }

    /// Embeds `a + b i` along the `i` axis.
    pub fn from_complex(c: Complex64) -> Self {
        Self::new(c.re, c.im, 0.0, 0.0)
    }

    /// Symplectic split `q = a + b·j` with `a = w + x i`, `b = y + z i`.
    pub fn split(self) -> (Complex64, Complex64) {
        (Complex64::new(self.w, self.x), Complex64::new(self.y, self.z))
    }

    pub fn from_split(a: Complex64, b: Complex64) -> Self {
        Self::new(a.re, a.im, b.re, b.im)
    }

    pub fn conj(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm_sqr(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn modulus(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Real part `w`.
    pub fn re(self) -> f64 {
        self.w
    }

    /// Imaginary part as a purely imaginary quaternion.
    pub fn im(self) -> Self {
        Self::new(0.0, self.x, self.y, self.z)
    }

    pub fn im_norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn inverse(self) -> Option<Self> {
        let n = self.norm_sqr();
        if n == 0.0 {
            None
        } else {
            Some(self.conj() / n)
        }
    }

    pub fn is_finite(self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Rescales to modulus one, `None` for the zero quaternion.
    pub fn normalized(self) -> Option<Self> {
        let m = self.modulus();
        (m > 0.0).then(|| self / m)
    }

    /// `cos θ + μ sin θ` for a unit imaginary axis `μ`.
    pub fn exp_mu(axis: UnitImaginary, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c, axis.x * s, axis.y * s, axis.z * s)
    }

    /// Representative of the conjugacy class of `self` in `ℂ⁺ ∪ ℝ`.
    ///
    /// No thresholding: a near-real quaternion keeps its tiny imaginary norm.
    pub fn canonical_rep(self) -> ComplexRep {
        ComplexRep {
            re: self.w,
            im: self.im_norm(),
        }
    }

    pub fn max_abs_diff(self, other: Self) -> f64 {
        (self.w - other.w)
            .abs()
            .max((self.x - other.x).abs())
            .max((self.y - other.y).abs())
            .max((self.z - other.z).abs())
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:+}i {:+}j {:+}k", self.w, self.x, self.y, self.z)
    }
}

impl From<f64> for Quaternion {
    fn from(w: f64) -> Self {
        Self::real(w)
    }
}

impl Add for Quaternion {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.w + rhs.w, self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for Quaternion {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.w - rhs.w, self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl SubAssign for Quaternion {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl Neg for Quaternion {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl Mul for Quaternion {
    type Output = Self;
    // Basis table: ij = k, jk = i, ki = j, and the reversed products negate.
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (self, rhs);
        Self::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}

impl Mul<f64> for Quaternion {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Quaternion> for f64 {
    type Output = Quaternion;
    fn mul(self, q: Quaternion) -> Quaternion {
        q * self
    }
}

impl Div<f64> for Quaternion {
    type Output = Self;
    fn div(self, s: f64) -> Self {
        Self::new(self.w / s, self.x / s, self.y / s, self.z / s)
    }
}

impl std::iter::Sum for Quaternion {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |acc, q| acc + q)
    }
}

// JSON form is the 4-array [w, x, y, z].
impl Serialize for Quaternion {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        [self.w, self.x, self.y, self.z].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Quaternion {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [w, x, y, z] = <[f64; 4]>::deserialize(deserializer)?;
        Ok(Self::new(w, x, y, z))
    }
}

/// A unit purely imaginary quaternion `μ`, so that `μ² = -1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitImaginary {
    x: f64,
    y: f64,
    z: f64,
}

impl UnitImaginary {
    pub const I: UnitImaginary = UnitImaginary {
        x: 1.0,
        y: 0.0,
        z: 0.0,
    };
    pub const J: UnitImaginary = UnitImaginary {
        x: 0.0,
        y: 1.0,
        z: 0.0,
    };
    pub const K: UnitImaginary = UnitImaginary {
        x: 0.0,
        y: 0.0,
        z: 1.0,
    };

    /// Normalizes `(x, y, z)`; `None` for the zero vector.
    pub fn new(x: f64, y: f64, z: f64) -> Option<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        (n > 0.0 && n.is_finite()).then(|| Self {
            x: x / n,
            y: y / n,
            z: z / n,
        })
    }

    pub fn as_quaternion(self) -> Quaternion {
        Quaternion::imaginary(self.x, self.y, self.z)
    }

    pub fn components(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// Conjugacy-class representative `re + i·im` with `im ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexRep {
    pub re: f64,
    pub im: f64,
}

impl ComplexRep {
    pub fn modulus(self) -> f64 {
        self.re.hypot(self.im)
    }

    /// Argument in `[0, π]`.
    pub fn arg(self) -> f64 {
        self.im.atan2(self.re)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}
