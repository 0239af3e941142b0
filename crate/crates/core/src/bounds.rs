//! Displacement bounds: the Zassenhaus constants, commutator estimates,
//! simultaneous Dirichlet approximation, powers of rotations close to the
//! identity, and the per-isometry certificate that chains them together.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    dilation_decompose, normalize_to_vertical, FactorOrder, Isometry, ModelKind,
};
use crate::qmatrix::QMatrix;

/// Default approximation parameter.
pub const DEFAULT_Q: u64 = 9;
/// Displacement of `o` tolerated by [`approximate_rotation`].
pub const ROTATION_FIX_TOLERANCE: f64 = 1e-9;

/// Root of `2t(1+t)² = 1` on `[0, 1]`, Newton steps safeguarded by bisection.
pub fn solve_tau() -> f64 {
    let f = |t: f64| 2.0 * t * (1.0 + t) * (1.0 + t) - 1.0;
    let df = |t: f64| 2.0 * (1.0 + t) * (1.0 + 3.0 * t);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut t = 0.5;
    for _ in 0..200 {
        let ft = f(t);
        if ft == 0.0 {
            return t;
        }
        if ft < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t - ft / df(t);
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - t).abs() <= 1e-16 || hi - lo <= 1e-16 {
            return next;
        }
        t = next;
    }
    t
}

/// `0.05 / 9^{n+1}`.
pub fn lambda_n(n: usize) -> f64 {
    0.05 / 9f64.powi(n as i32 + 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundConstants {
    pub n: usize,
    pub tau: f64,
    /// `sqrt(τ/2)`, the root of `2ω(2ω² + 1) = 1`.
    pub omega: f64,
    pub lambda_n: f64,
}

pub fn solve_constants(n: usize) -> Result<BoundConstants> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n must be at least 2, got {n}")));
    }
    let tau = solve_tau();
    Ok(BoundConstants {
        n,
        tau,
        omega: (0.5 * tau).sqrt(),
        lambda_n: lambda_n(n),
    })
}

fn require_pair(a: &QMatrix, b: &QMatrix) -> Result<()> {
    for m in [a, b] {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
    }
    if a.rows() != b.rows() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: b.rows(),
        });
    }
    Ok(())
}

/// `‖ABA⁻¹B⁻¹ - I‖`.
pub fn commutator_defect(a: &QMatrix, b: &QMatrix) -> Result<f64> {
    require_pair(a, b)?;
    let (ai, bi) = (a.inverse()?, b.inverse()?);
    let c = &(&(a * b) * &ai) * &bi;
    c.minus_identity().spectral_norm()
}

/// `2‖A - I‖‖B - I‖‖A⁻¹‖‖B⁻¹‖`.
pub fn commutator_bound(a: &QMatrix, b: &QMatrix) -> Result<f64> {
    require_pair(a, b)?;
    let (ai, bi) = (a.inverse()?, b.inverse()?);
    Ok(2.0
        * a.minus_identity().spectral_norm()?
        * b.minus_identity().spectral_norm()?
        * ai.spectral_norm()?
        * bi.spectral_norm()?)
}

/// `‖A‖‖A - I‖`.
pub fn displacement_product(a: &QMatrix) -> Result<f64> {
    Ok(a.spectral_norm()? * a.minus_identity().spectral_norm()?)
}

/// `max(‖A‖‖A - I‖, ‖B‖‖B - I‖)`, to be compared against `ω`.
pub fn jorgensen_martin_test(a: &Isometry, b: &Isometry) -> Result<f64> {
    if a.form() != b.form() {
        return Err(Error::WrongModel);
    }
    Ok(displacement_product(a.matrix())?.max(displacement_product(b.matrix())?))
}

/// How `p_i` is derived from `q θ_i` during the Dirichlet search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirichletRounding {
    #[default]
    Nearest,
    /// Deliberately wrong (`floor`); exists to exercise failure paths.
    Truncate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirichletResult {
    pub q: u64,
    pub p: Vec<i64>,
    /// `|θ_i - p_i/q|`.
    pub errors: Vec<f64>,
}

/// Whether `(q, p)` meets `|θ_i - p_i/q| < 1/(qQ)` for every `i`.
pub fn dirichlet_admissible(thetas: &[f64], q: u64, p: &[i64], big_q: u64) -> bool {
    let qf = q as f64;
    let limit = 1.0 / (qf * big_q as f64);
    thetas.iter().zip(p).all(|(&t, &pi)| (t - pi as f64 / qf).abs() < limit)
}

fn dirichlet_range(m: usize, big_q: u64) -> Result<u64> {
    u32::try_from(m)
        .ok()
        .and_then(|m| big_q.checked_pow(m))
        .ok_or_else(|| Error::InvalidParameter(format!("Q^m overflows for Q = {big_q}, m = {m}")))
}

fn check_dirichlet_input(thetas: &[f64], big_q: u64) -> Result<u64> {
    if thetas.is_empty() {
        return Err(Error::InvalidParameter("at least one angle is required".into()));
    }
    if big_q < 2 {
        return Err(Error::InvalidParameter(format!("Q must be at least 2, got {big_q}")));
    }
    if let Some(t) = thetas.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::InvalidParameter(format!("angle {t} outside [0, 1]")));
    }
    dirichlet_range(thetas.len(), big_q)
}

/// Smallest `q ≤ Q^m` with `|θ_i - p_i/q| < 1/(qQ)`, `p_i` the nearest integer to `q θ_i`.
pub fn dirichlet_approximate(thetas: &[f64], big_q: u64) -> Result<DirichletResult> {
    dirichlet_approximate_with(thetas, big_q, DirichletRounding::Nearest)
}

pub fn dirichlet_approximate_with(
    thetas: &[f64],
    big_q: u64,
    rounding: DirichletRounding,
) -> Result<DirichletResult> {
    let q_max = check_dirichlet_input(thetas, big_q)?;
    let mut p = vec![0i64; thetas.len()];
    for q in 1..=q_max {
        let qf = q as f64;
        for (pi, &t) in p.iter_mut().zip(thetas) {
            let x = qf * t;
            *pi = match rounding {
                DirichletRounding::Nearest => x.round(),
                DirichletRounding::Truncate => x.floor(),
            } as i64;
        }
        if dirichlet_admissible(thetas, q, &p, big_q) {
            let errors = thetas.iter().zip(&p).map(|(&t, &pi)| (t - pi as f64 / qf).abs()).collect();
            return Ok(DirichletResult { q, p, errors });
        }
    }
    Err(Error::DirichletExhausted { q_max })
}

/// Independent check of a Dirichlet result: bound, range and minimality.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirichletAudit {
    pub within_bound: bool,
    pub within_range: bool,
    pub minimal: bool,
    /// `1/(qQ) - max_i |θ_i - p_i/q|`.
    pub slack: f64,
}

impl DirichletAudit {
    pub fn passed(&self) -> bool {
        self.within_bound && self.within_range && self.minimal
    }
}

/// Re-derives the bound and scans every smaller denominator with all nearby numerators.
pub fn audit_dirichlet(thetas: &[f64], big_q: u64, result: &DirichletResult) -> Result<DirichletAudit> {
    let q_max = check_dirichlet_input(thetas, big_q)?;
    let q = result.q;
    let worst = thetas
        .iter()
        .zip(&result.p)
        .map(|(&t, &pi)| (t - pi as f64 / q as f64).abs())
        .fold(0.0, f64::max);
    let slack = 1.0 / (q as f64 * big_q as f64) - worst;
    let minimal = (1..q).all(|q2| {
        let q2f = q2 as f64;
        !thetas.iter().all(|&t| {
            let base = (q2f * t).floor() as i64;
            (base - 1..=base + 2).any(|pi| dirichlet_admissible(&[t], q2, &[pi], big_q))
        })
    });
    Ok(DirichletAudit {
        within_bound: result.p.len() == thetas.len() && slack >= 0.0,
        within_range: (1..=q_max).contains(&q),
        minimal,
        slack,
    })
}

/// Map from an eigen-angle in `[0, π]` to the Dirichlet input.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngleScaling {
    /// `θ = angle/π`, with parameter `Q` and `q ≤ Q^{n+1}`.
    #[default]
    HalfTurn,
    /// `θ = angle/(2π)`, with parameter `2Q` and `q ≤ (2Q)^{n+1}`; guarantees `‖R^q - I‖ ≤ π/Q`.
    FullTurn,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApproximationCertificate {
    pub q: u64,
    /// Largest `q` the search was allowed to return.
    pub q_max: u64,
    pub p: Vec<i64>,
    /// Eigen-angles in `[0, π]`, ascending.
    pub angles: Vec<f64>,
    pub thetas: Vec<f64>,
    /// `π/Q`.
    pub bound: f64,
    /// `‖R^q - I‖` from the explicit matrix power.
    pub achieved: f64,
    /// `max_i |e^{i q angle_i} - 1|`.
    pub achieved_from_angles: f64,
    pub within_bound: bool,
    pub scaling: AngleScaling,
}

/// Power of a rotation about `o` close to the identity, via Dirichlet on its eigen-angles.
pub fn approximate_rotation(r: &Isometry, big_q: u64) -> Result<ApproximationCertificate> {
    approximate_rotation_with(r, big_q, AngleScaling::HalfTurn, DirichletRounding::Nearest)
}

pub fn approximate_rotation_with(
    r: &Isometry,
    big_q: u64,
    scaling: AngleScaling,
    rounding: DirichletRounding,
) -> Result<ApproximationCertificate> {
    if big_q < 2 {
        return Err(Error::InvalidParameter(format!("Q must be at least 2, got {big_q}")));
    }
    let moved = r.displacement()?;
    if moved > ROTATION_FIX_TOLERANCE {
        return Err(Error::NotFixingOrigin { displacement: moved });
    }
    let ball = r.to_model(ModelKind::Ball)?;
    let angles = ball.matrix().unitary_angles()?;
    let (divisor, dirichlet_q) = match scaling {
        AngleScaling::HalfTurn => (PI, big_q),
        AngleScaling::FullTurn => (2.0 * PI, 2 * big_q),
    };
    let thetas: Vec<f64> = angles.iter().map(|a| (a / divisor).clamp(0.0, 1.0)).collect();
    let q_max = dirichlet_range(thetas.len(), dirichlet_q)?;
    let d = dirichlet_approximate_with(&thetas, dirichlet_q, rounding)?;

    let achieved = r.matrix().pow(d.q).minus_identity().spectral_norm()?;
    let qf = d.q as f64;
    let achieved_from_angles = angles
        .iter()
        .map(|a| 2.0 * (0.5 * qf * a).sin().abs())
        .fold(0.0, f64::max);
    let bound = PI / big_q as f64;
    Ok(ApproximationCertificate {
        q: d.q,
        q_max,
        p: d.p,
        angles,
        thetas,
        bound,
        achieved,
        achieved_from_angles,
        within_bound: achieved <= bound + 1e-9,
        scaling,
    })
}

/// `r^q (r (r^q - 1) + π/Q)`.
pub fn resume_bound(r: f64, q: u64, big_q: u64) -> f64 {
    let growth = (q as f64 * r.ln()).exp_m1();
    (growth + 1.0) * (r * growth + PI / big_q as f64)
}

/// Closing numeric step of the main theorem, under both exponent readings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoremMargin {
    pub n: usize,
    /// `e^{0.025}(e^{0.025/9^n}(e^{0.025} - 1) + π/9)`.
    pub bound: f64,
    /// Same with `r < e^{λ_n/2} = e^{0.025/9^{n+1}}`.
    pub bound_tight: f64,
    pub omega: f64,
    /// `bound < omega`.
    pub verdict: bool,
}

pub fn main_theorem_margin(n: usize) -> Result<TheoremMargin> {
    let omega = solve_constants(n)?.omega;
    main_theorem_margin_with_omega(n, omega)
}

/// As [`main_theorem_margin`] with a caller-supplied threshold.
pub fn main_theorem_margin_with_omega(n: usize, omega: f64) -> Result<TheoremMargin> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n must be at least 2, got {n}")));
    }
    let power = 0.025f64.exp();
    let tail = 0.025f64.exp_m1();
    let step = |exponent: i32| 0.025 / 9f64.powi(exponent);
    let bound = power * (step(n as i32).exp() * tail + PI / 9.0);
    let bound_tight = power * (step(n as i32 + 1).exp() * tail + PI / 9.0);
    Ok(TheoremMargin {
        n,
        bound,
        bound_tight,
        omega,
        verdict: bound < omega,
    })
}

/// Options for [`certify_displacement_with`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CertifyOptions {
    pub scaling: AngleScaling,
    pub rounding: DirichletRounding,
}

/// Every quantity of the displacement chain for one isometry.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub n: usize,
    #[serde(rename = "Q")]
    pub big_q: u64,
    pub q: u64,
    pub r: f64,
    pub delta: f64,
    pub norm_a: f64,
    pub norm_aq: f64,
    pub norm_aq_minus_i: f64,
    pub norm_aq_minus_rq: f64,
    pub norm_rq_minus_i: f64,
    /// `r^q (r (r^q - 1) + π/Q)`.
    pub lemma_bound: f64,
    /// `‖A^q‖ ‖A^q - I‖`.
    pub product: f64,
    pub omega: f64,
    /// `product < omega`.
    pub verdict: bool,
    /// `r - ‖A‖`.
    pub norm_slack: f64,
    /// `r (r^q - 1) - ‖A^q - R^q‖`.
    pub power_distance_slack: f64,
    /// `π/Q - ‖R^q - I‖`.
    pub rotation_slack: f64,
    /// `lemma_bound - product`.
    pub resume_slack: f64,
    /// `omega - product`.
    pub omega_slack: f64,
    pub factor_order: FactorOrder,
    pub angle_scaling: AngleScaling,
    pub theorem_bound: f64,
    pub theorem_bound_tight: f64,
}

impl BoundReport {
    pub const CSV_HEADER: &'static str = "n,Q,q,delta,r,product,lemma_bound,omega,verdict";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:e},{},{},{},{},{}",
            self.n, self.big_q, self.q, self.delta, self.r, self.product, self.lemma_bound, self.omega, self.verdict
        )
    }

    pub fn norm_ok(&self) -> bool {
        self.norm_slack >= -1e-9
    }

    pub fn power_distance_ok(&self) -> bool {
        self.power_distance_slack >= -1e-8
    }

    pub fn rotation_ok(&self) -> bool {
        self.rotation_slack >= -1e-9
    }

    pub fn resume_ok(&self) -> bool {
        self.resume_slack >= -1e-8
    }
}

/// Normalizes, decomposes and measures every inequality of the chain.
pub fn certify_displacement(a: &Isometry, big_q: u64) -> Result<BoundReport> {
    certify_displacement_with(a, big_q, CertifyOptions::default())
}

pub fn certify_displacement_with(a: &Isometry, big_q: u64, options: CertifyOptions) -> Result<BoundReport> {
    let n = a.form().n();
    let constants = solve_constants(n)?;
    let a = a.to_model(ModelKind::HalfSpace)?;
    let vertical = normalize_to_vertical(&a)?;
    let dec = dilation_decompose(&vertical)?;
    let cert = approximate_rotation_with(&dec.stabilizer, big_q, options.scaling, options.rounding)?;

    let q = cert.q;
    let r = dec.r;
    let aq = vertical.matrix().pow(q);
    let rq = dec.stabilizer.matrix().pow(q);
    let norm_a = vertical.matrix().spectral_norm()?;
    let norm_aq = aq.spectral_norm()?;
    let norm_aq_minus_i = aq.minus_identity().spectral_norm()?;
    let norm_aq_minus_rq = (&aq - &rq).spectral_norm()?;
    let growth = (q as f64 * r.ln()).exp_m1();
    let lemma_bound = resume_bound(r, q, big_q);
    let product = norm_aq * norm_aq_minus_i;
    let margin = main_theorem_margin_with_omega(n, constants.omega)?;

    Ok(BoundReport {
        n,
        big_q,
        q,
        r,
        delta: dec.delta,
        norm_a,
        norm_aq,
        norm_aq_minus_i,
        norm_aq_minus_rq,
        norm_rq_minus_i: cert.achieved,
        lemma_bound,
        product,
        omega: constants.omega,
        verdict: product < constants.omega,
        norm_slack: r - norm_a,
        power_distance_slack: r * growth - norm_aq_minus_rq,
        rotation_slack: cert.bound - cert.achieved,
        resume_slack: lemma_bound - product,
        omega_slack: constants.omega - product,
        factor_order: dec.order,
        angle_scaling: cert.scaling,
        theorem_bound: margin.bound,
        theorem_bound_tight: margin.bound_tight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{random_isometry_with, random_near_identity, random_stabilizer, stabilizer_from_blocks, ModelForm};
    use crate::qmatrix::unit_complex;
    use crate::quaternion::Quaternion;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn constants_solve_their_equations() {
        let c = solve_constants(2).unwrap();
        assert!((2.0 * c.tau * (1.0 + c.tau).powi(2) - 1.0).abs() <= 1e-12);
        assert!(c.tau > 0.2971 && c.tau < 0.2972);
        assert!((2.0 * c.omega * (2.0 * c.omega * c.omega + 1.0) - 1.0).abs() <= 1e-12);
        assert!(c.omega > 0.3854 && c.omega < 0.3855);
        assert!((2.0 * c.omega * c.omega - c.tau).abs() <= 1e-15);
        assert!((c.omega - 0.5 / (1.0 + c.tau)).abs() <= 1e-15);
        assert_eq!(c.lambda_n, 0.05 / 729.0);
        assert!(solve_constants(1).is_err());
    }

    #[test]
    fn commutator_examples() {
        let mut r = rng(1);
        let a = random_isometry_with(&mut r, 2, 1.0).unwrap();
        let id = QMatrix::identity(3);
        assert!(commutator_defect(a.matrix(), &id).unwrap() <= 1e-12);
        let d1 = QMatrix::from_real_diagonal(&[2.0, 1.0, 0.5]);
        let d2 = QMatrix::from_diagonal(&[unit_complex(0.3), unit_complex(1.0), unit_complex(0.3)]);
        assert!(commutator_defect(&d1, &d2).unwrap() <= 1e-12);
        assert!(matches!(commutator_defect(&QMatrix::zeros(3, 3), &id), Err(Error::Singular { .. })));
    }

    #[test]
    fn commutator_inequality_on_random_pairs() {
        let mut r = rng(2);
        let mut worst = f64::INFINITY;
        for k in 0..200 {
            let n = 2 + k % 2;
            let a = random_isometry_with(&mut r, n, 1.0).unwrap();
            let b = random_isometry_with(&mut r, n, 1.0).unwrap();
            let slack = commutator_bound(a.matrix(), b.matrix()).unwrap()
                - commutator_defect(a.matrix(), b.matrix()).unwrap();
            worst = worst.min(slack);
        }
        assert!(worst >= -1e-8, "{worst}");
    }

    #[test]
    fn zassenhaus_neighbourhood_is_closed_under_commutators() {
        let tau = solve_tau();
        let mut r = rng(3);
        let mut tested = 0;
        while tested < 100 {
            let scale = 0.15 * r.random::<f64>();
            let a = random_near_identity(&mut r, 2, scale).unwrap();
            let b = random_near_identity(&mut r, 2, scale).unwrap();
            let inside = |m: &QMatrix| {
                m.minus_identity().spectral_norm().unwrap() < tau && m.spectral_norm().unwrap() <= 1.0 + tau
            };
            if inside(a.matrix()) && inside(b.matrix()) {
                assert!(commutator_defect(a.matrix(), b.matrix()).unwrap() < tau);
                tested += 1;
            }
        }
    }

    #[test]
    fn jorgensen_martin_examples() {
        let form = ModelForm::half_space(2).unwrap();
        let id = Isometry::identity(form);
        assert_eq!(jorgensen_martin_test(&id, &id).unwrap(), 0.0);
        let rr = 1.3;
        let d = Isometry::dilation(2, rr).unwrap();
        assert!((jorgensen_martin_test(&d, &id).unwrap() - rr * (rr - 1.0)).abs() <= 1e-10);
        let mut g = rng(4);
        let a = random_isometry_with(&mut g, 2, 1.0).unwrap();
        let b = random_isometry_with(&mut g, 2, 1.0).unwrap();
        let direct = (a.matrix().spectral_norm().unwrap() * a.matrix().minus_identity().spectral_norm().unwrap())
            .max(b.matrix().spectral_norm().unwrap() * b.matrix().minus_identity().spectral_norm().unwrap());
        assert!((jorgensen_martin_test(&a, &b).unwrap() - direct).abs() <= 1e-10);
        let ball = Isometry::identity(ModelForm::ball(2).unwrap());
        assert_eq!(jorgensen_martin_test(&a, &ball), Err(Error::WrongModel));
    }

    #[test]
    fn dirichlet_examples() {
        let d = dirichlet_approximate(&[0.5], 2).unwrap();
        assert_eq!((d.q, d.p.clone()), (2, vec![1]));
        assert_eq!(d.errors, vec![0.0]);
        let d = dirichlet_approximate(&[0.0], 7).unwrap();
        assert_eq!((d.q, d.p), (1, vec![0]));
        let theta = 0.6180339887;
        let d = dirichlet_approximate(&[theta], 10).unwrap();
        assert!(d.q <= 10);
        let brute = (1..=10u64)
            .find(|&q| {
                let p = (q as f64 * theta).round();
                (theta - p / q as f64).abs() < 1.0 / (10.0 * q as f64)
            })
            .unwrap();
        assert_eq!(d.q, brute);
        assert!(dirichlet_approximate(&[1.5], 3).is_err());
        assert!(dirichlet_approximate(&[0.5], 1).is_err());
        assert!(dirichlet_approximate(&[], 3).is_err());
        assert!(dirichlet_approximate(&[0.1; 40], 9).is_err());
    }

    #[test]
    fn truncated_rounding_is_caught_by_the_audit() {
        let mut r = rng(5);
        let mut caught = 0;
        for _ in 0..50 {
            let thetas: Vec<f64> = (0..2).map(|_| r.random::<f64>()).collect();
            match dirichlet_approximate_with(&thetas, 5, DirichletRounding::Truncate) {
                Ok(d) => caught += usize::from(!audit_dirichlet(&thetas, 5, &d).unwrap().passed()),
                Err(Error::DirichletExhausted { .. }) => caught += 1,
                Err(e) => panic!("{e}"),
            }
        }
        assert!(caught > 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn dirichlet_results_pass_their_audit(
            thetas in prop::collection::vec(0.0f64..=1.0, 1..4),
            big_q in 2u64..8,
        ) {
            let d = dirichlet_approximate(&thetas, big_q).unwrap();
            let audit = audit_dirichlet(&thetas, big_q, &d).unwrap();
            prop_assert!(audit.passed(), "{audit:?}");
        }
    }

    #[test]
    fn rotation_of_identity() {
        let id = Isometry::identity(ModelForm::half_space(2).unwrap());
        let c = approximate_rotation(&id, 9).unwrap();
        assert_eq!(c.q, 1);
        assert!(c.achieved <= 1e-15);
        assert!(c.within_bound);
    }

    #[test]
    fn rotation_by_a_quarter_turn() {
        let theta = QMatrix::from_diagonal(&[unit_complex(0.5 * PI), Quaternion::ONE]);
        let r = stabilizer_from_blocks(&theta, Quaternion::ONE).unwrap();
        let c = approximate_rotation(&r, 9).unwrap();
        let d = dirichlet_approximate(&[0.0, 0.0, 0.5], 9).unwrap();
        assert_eq!(c.q, d.q);
        let closed = (unit_complex(0.5 * PI * c.q as f64) - Quaternion::ONE).modulus();
        assert!((c.achieved - closed).abs() <= 1e-10);
    }

    #[test]
    fn rotation_rejects_moving_isometries() {
        let d = Isometry::dilation(2, 1.1).unwrap();
        assert!(matches!(approximate_rotation(&d, 9), Err(Error::NotFixingOrigin { .. })));
        let id = Isometry::identity(ModelForm::half_space(2).unwrap());
        assert!(approximate_rotation(&id, 1).is_err());
    }

    #[test]
    fn matrix_power_matches_angle_arithmetic() {
        let mut r = rng(6);
        for n in [2, 3] {
            for _ in 0..20 {
                let k = random_stabilizer(&mut r, n);
                let c = approximate_rotation(&k, 9).unwrap();
                assert!(c.q <= 9u64.pow(n as u32 + 1));
                assert!((c.achieved - c.achieved_from_angles).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn full_turn_scaling_meets_the_rotation_bound() {
        let mut r = rng(7);
        for _ in 0..20 {
            let k = random_stabilizer(&mut r, 2);
            let c = approximate_rotation_with(&k, 9, AngleScaling::FullTurn, DirichletRounding::Nearest).unwrap();
            assert!(c.q <= 18u64.pow(3));
            assert!(c.achieved <= PI / 9.0 + 1e-9);
        }
    }

    #[test]
    fn resume_bound_examples() {
        assert!((resume_bound(1.0, 5, 9) - PI / 9.0).abs() <= 1e-15);
        let r = 0.0125f64.exp();
        let direct = r * (r * (r - 1.0) + PI / 7.0);
        assert!((resume_bound(r, 1, 7) - direct).abs() <= 1e-14);
        let r = (0.025f64 / 81.0).exp();
        let q = 81;
        assert!(r.powi(q as i32) <= 0.025f64.exp() + 1e-15);
        assert!(resume_bound(r, q, 9) < 0.3845);
    }

    #[test]
    fn margin_examples() {
        let m = main_theorem_margin(2).unwrap();
        assert!(m.bound > 0.3830 && m.bound < 0.3845);
        assert!(m.verdict);
        assert!(m.bound_tight < m.bound);
        let m10 = main_theorem_margin(10).unwrap();
        assert!(m10.bound < m.bound && m10.verdict);
        assert!(!main_theorem_margin_with_omega(2, 0.38).unwrap().verdict);
        assert!((2..=50).all(|n| main_theorem_margin(n).unwrap().verdict));
        assert!(main_theorem_margin(1).is_err());
    }

    #[test]
    fn certify_a_pure_dilation() {
        let rr = 0.01f64.exp();
        let d = Isometry::dilation(2, rr).unwrap();
        let rep = certify_displacement(&d, 9).unwrap();
        assert_eq!(rep.q, 1);
        assert!((rep.r - rr).abs() <= 1e-12);
        assert!((rep.norm_a - rr).abs() <= 1e-10);
        assert!((rep.product - rr * (rr - 1.0)).abs() <= 1e-10);
        assert!(rep.verdict && rep.norm_ok() && rep.power_distance_ok() && rep.resume_ok());
        assert!(rep.csv_row().starts_with("2,9,1,"));
    }

    #[test]
    fn certify_respects_the_norm_and_power_lemmas() {
        let mut r = rng(8);
        for _ in 0..20 {
            let a = random_isometry_with(&mut r, 2, 0.5 * lambda_n(2)).unwrap();
            let rep = certify_displacement(&a, 9).unwrap();
            assert!(rep.norm_ok(), "{rep:?}");
            assert!(rep.power_distance_ok(), "{rep:?}");
            assert!(rep.q <= 729);
            assert!((rep.norm_rq_minus_i + rep.rotation_slack - PI / 9.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn certify_with_full_turn_scaling_clears_omega() {
        let mut r = rng(9);
        let options = CertifyOptions {
            scaling: AngleScaling::FullTurn,
            rounding: DirichletRounding::Nearest,
        };
        // Doubling Q inflates q to (2Q)^{n+1}, so the radius shrinks to 0.05/18^{n+1}.
        let radius = 0.05 / 18f64.powi(3);
        for _ in 0..10 {
            let a = random_isometry_with(&mut r, 2, 0.5 * radius).unwrap();
            let rep = certify_displacement_with(&a, 9, options).unwrap();
            assert!(rep.rotation_ok() && rep.resume_ok(), "{rep:?}");
            assert!(rep.verdict, "{rep:?}");
        }
    }

    #[test]
    fn certify_rejects_origin_fixing_input() {
        let id = Isometry::identity(ModelForm::half_space(2).unwrap());
        assert!(matches!(certify_displacement(&id, 9), Err(Error::FixesOrigin { .. })));
    }
}
