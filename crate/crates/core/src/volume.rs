//! Volumes of metric balls in `H^n_ℍ` and the embedded-ball lower bound for
//! manifold volume.
//!
//! Everything is carried in log space as well, since radii of order `9^{-n}`
//! underflow double precision once raised to the power `4n`.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::bounds::lambda_n;
use crate::error::{Error, Result};

/// Relative tolerance of the adaptive Simpson rule.
pub const QUADRATURE_TOLERANCE: f64 = 1e-12;
/// Maximum number of interval subdivisions.
pub const QUADRATURE_MAX_SUBDIVISIONS: usize = 1_000_000;

/// `ln(π^{2n}/(2n)!)`.
pub fn ln_sigma_4n(n: usize) -> f64 {
    2.0 * n as f64 * PI.ln() - ln_gamma(2.0 * n as f64 + 1.0)
}

/// Volume `π^{2n}/(2n)!` of the Euclidean unit ball in `ℝ^{4n}`.
pub fn sigma_4n(n: usize) -> f64 {
    ln_sigma_4n(n).exp()
}

fn check_n(n: usize, min: usize) -> Result<()> {
    if n < min {
        Err(Error::InvalidParameter(format!("n must be at least {min}, got {n}")))
    } else {
        Ok(())
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r >= 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("radius must be finite and non-negative, got {r}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VolumeResult {
    pub n: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    /// Underflows to zero for tiny radii in high dimension; see `ln_volume`.
    pub volume: f64,
    /// `-inf` at radius zero.
    pub ln_volume: f64,
    pub sigma_4n: f64,
}

/// `ln(16ⁿ/(4n) sinh^{4n}(R/2) (1 + (2n/(2n+1)) sinh²(R/2)))`.
fn ln_shape(n: usize, radius: f64) -> f64 {
    let nf = n as f64;
    let s = (0.5 * radius).sinh();
    4.0 * nf * LN_2 + 4.0 * nf * s.ln() - (4.0 * nf).ln()
        + (2.0 * nf / (2.0 * nf + 1.0) * s * s).ln_1p()
}

/// Volume of a ball of radius `R`:
/// `σ_{4n} (16ⁿ/(4n)) sinh^{4n}(R/2) (1 + (2n/(2n+1)) sinh²(R/2))`.
pub fn ball_volume(n: usize, radius: f64) -> Result<VolumeResult> {
    check_n(n, 1)?;
    check_radius(radius)?;
    let ln_sigma = ln_sigma_4n(n);
    let (volume, ln_volume) = if radius == 0.0 {
        (0.0, f64::NEG_INFINITY)
    } else {
        let ln_v = ln_sigma + ln_shape(n, radius);
        (ln_v.exp(), ln_v)
    };
    Ok(VolumeResult {
        n,
        radius,
        volume,
        ln_volume,
        sigma_4n: ln_sigma.exp(),
    })
}

/// Radial density `σ_{4n} 2^{4n-1} cosh³(r/2) sinh^{4n-1}(r/2)`; integrates to [`ball_volume`].
pub fn volume_density(n: usize, r: f64) -> Result<f64> {
    check_n(n, 1)?;
    check_radius(r)?;
    if r == 0.0 {
        return Ok(0.0);
    }
    let nf = n as f64;
    let (s, c) = ((0.5 * r).sinh(), (0.5 * r).cosh());
    let ln = ln_sigma_4n(n) + (4.0 * nf - 1.0) * LN_2 + 3.0 * c.ln() + (4.0 * nf - 1.0) * s.ln();
    Ok(ln.exp())
}

/// The same density written as `σ_{4n} 2^{4n-4} sinh³(r) sinh^{4n-4}(r/2)`.
pub fn volume_density_double_angle(n: usize, r: f64) -> Result<f64> {
    check_n(n, 1)?;
    check_radius(r)?;
    let nf = n as f64;
    Ok(sigma_4n(n) * 2f64.powf(4.0 * nf - 4.0) * r.sinh().powi(3) * (0.5 * r).sinh().powf(4.0 * nf - 4.0))
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to relative tolerance `rel_tol`.
pub fn adaptive_simpson(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<f64> {
    struct Panel {
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    }
    let simpson = |fa: f64, fm: f64, fb: f64, h: f64| h / 6.0 * (fa + 4.0 * fm + fb);

    if a == b {
        return Ok(0.0);
    }
    // A fixed composite pass sets the scale for the relative tolerance.
    let coarse_panels = 16;
    let width = (b - a) / coarse_panels as f64;
    let mut stack = Vec::new();
    let mut scale = 0.0;
    for k in 0..coarse_panels {
        let pa = a + k as f64 * width;
        let pb = if k + 1 == coarse_panels { b } else { pa + width };
        let (fa, fm, fb) = (f(pa), f(0.5 * (pa + pb)), f(pb));
        let whole = simpson(fa, fm, fb, pb - pa);
        scale += whole.abs();
        stack.push(Panel { a: pa, b: pb, fa, fm, fb, whole, tol: 0.0, depth: 0 });
    }
    let total_tol = rel_tol * scale.max(f64::MIN_POSITIVE);
    for p in &mut stack {
        p.tol = total_tol * (p.b - p.a) / (b - a);
    }

    let mut sum = 0.0;
    let mut subdivisions = 0usize;
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let (lm, rm) = (f(0.5 * (p.a + m)), f(0.5 * (m + p.b)));
        let left = simpson(p.fa, lm, p.fm, m - p.a);
        let right = simpson(p.fm, rm, p.fb, p.b - m);
        let delta = left + right - p.whole;
        if delta.abs() <= 15.0 * p.tol || p.depth >= 60 {
            sum += left + right + delta / 15.0;
            continue;
        }
        subdivisions += 1;
        if subdivisions > max_subdivisions {
            return Err(Error::QuadratureCap { cap: max_subdivisions });
        }
        let tol = 0.5 * p.tol;
        stack.push(Panel { a: p.a, b: m, fa: p.fa, fm: lm, fb: p.fm, whole: left, tol, depth: p.depth + 1 });
        stack.push(Panel { a: m, b: p.b, fa: p.fm, fm: rm, fb: p.fb, whole: right, tol, depth: p.depth + 1 });
    }
    Ok(sum)
}

/// `∫₀ᴿ volume_density(n, r) dr` by adaptive Simpson.
pub fn integrate_density(n: usize, radius: f64) -> Result<f64> {
    check_n(n, 1)?;
    check_radius(radius)?;
    adaptive_simpson(
        |r| volume_density(n, r).unwrap_or(f64::NAN),
        0.0,
        radius,
        QUADRATURE_TOLERANCE,
        QUADRATURE_MAX_SUBDIVISIONS,
    )
}

/// Volume of the embedded ball of radius `λ_n/2`, next to the closed form with sinh argument `0.0175/9^{n+1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ManifoldVolumeBound {
    pub n: usize,
    pub lambda_n: f64,
    /// `λ_n / 2`.
    pub radius: f64,
    pub volume_recomputed: f64,
    pub ln_volume_recomputed: f64,
    /// `(2π^{2n}/(2n)!) (16ⁿ/(4n)) sinh^{4n}(0.0175/9^{n+1})`.
    pub volume_printed: f64,
    pub ln_volume_printed: f64,
}

pub fn manifold_volume_lower_bound(n: usize) -> Result<ManifoldVolumeBound> {
    check_n(n, 2)?;
    let lambda = lambda_n(n);
    let radius = 0.5 * lambda;
    let ball = ball_volume(n, radius)?;
    let nf = n as f64;
    let arg = 0.0175 / 9f64.powi(n as i32 + 1);
    let ln_printed = LN_2 + ln_sigma_4n(n) + 4.0 * nf * LN_2 - (4.0 * nf).ln() + 4.0 * nf * arg.sinh().ln();
    Ok(ManifoldVolumeBound {
        n,
        lambda_n: lambda,
        radius,
        volume_recomputed: ball.volume,
        ln_volume_recomputed: ball.ln_volume,
        volume_printed: ln_printed.exp(),
        ln_volume_printed: ln_printed,
    })
}
