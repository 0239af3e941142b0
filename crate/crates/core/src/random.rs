//! Seeded sampling of quaternions, matrices and unitary groups.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::qmatrix::QMatrix;
use crate::quaternion::Quaternion;

/// Quaternion with independent standard normal components.
pub fn gaussian_quaternion(rng: &mut impl Rng) -> Quaternion {
    Quaternion::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    )
}

/// Haar-distributed unit quaternion.
pub fn unit_quaternion(rng: &mut impl Rng) -> Quaternion {
    loop {
        if let Some(u) = gaussian_quaternion(rng).normalized() {
            return u;
        }
    }
}

pub fn random_qmatrix(rng: &mut impl Rng, rows: usize, cols: usize) -> QMatrix {
    QMatrix::from_fn(rows, cols, |_, _| gaussian_quaternion(rng))
}

/// Element of Sp(n), orthonormalized from a Gaussian matrix.
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> QMatrix {
    loop {
        if let Ok(u) = random_qmatrix(rng, n, n).gram_schmidt_unitary() {
            return u;
        }
    }
}

/// Gaussian vector in ℍⁿ.
pub fn random_vector(rng: &mut impl Rng, n: usize) -> Vec<Quaternion> {
    (0..n).map(|_| gaussian_quaternion(rng)).collect()
}
