//! Spherical caps and the probability lower bounds assembled from them.
//!
//! `mu_n` is the normalized rotation-invariant measure on `S^n in R^(n+1)`. A
//! cap of spherical radius `delta <= pi/2` has height `h = 1 - cos(delta)` and
//! measure `1/2 * I_x(n/2, 1/2)` with `x = 2h - h^2`, where `I` is the
//! regularized incomplete Beta function. Caps wider than a hemisphere are
//! handled through their complement.
//!
//! The closed-form bounds are evaluated in log space so that exponents of
//! order `r d^2` neither overflow nor lose precision before the final `exp`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance of the incomplete Beta quadrature.
pub const BETA_REL_TOL: f64 = 1e-10;

const UNIT_TOL: f64 = 1e-10;

/// Great-circle distance `arccos <x, y>` between unit vectors.
pub fn spherical_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    for v in [x, y] {
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::Domain(format!("vector norm {n} is not 1")));
        }
    }
    let c: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok(c.clamp(-1.0, 1.0).acos())
}

/// Spherical radius of the cap cut out by a Euclidean ball of radius `eps`
/// around a point of the unit sphere: `2 arcsin(eps / 2)`.
pub fn euclidean_to_spherical_radius(eps: f64) -> f64 {
    2.0 * (eps / 2.0).min(1.0).asin()
}

/// A cap of spherical radius `delta` on `S^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapQuery {
    pub n: usize,
    pub delta: f64,
}

impl CapQuery {
    pub fn new(n: usize, delta: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain("sphere dimension n must be >= 1".into()));
        }
        if !(delta > 0.0 && delta < PI) {
            return Err(Error::Domain(format!("cap radius {delta} outside (0, pi)")));
        }
        Ok(Self { n, delta })
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, eps / 2.0, depth - 1)
        + adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, eps / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `eps`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, eps, 48)
}

/// `int_0^theta sin(t)^p dt` to relative accuracy `rel_tol`.
fn sine_power_integral(p: f64, theta: f64, rel_tol: f64) -> f64 {
    let f = move |t: f64| t.sin().powf(p);
    // Coarse pass sets the absolute scale; the refined pass uses it.
    let coarse = adaptive_simpson(&f, 0.0, theta, 1e-6 * theta);
    adaptive_simpson(&f, 0.0, theta, rel_tol * coarse.abs().max(f64::MIN_POSITIVE))
}

/// Regularized incomplete Beta function `I_x(a, 1/2)` for `a > 0`.
///
/// The substitution `t = sin^2(theta)` turns
/// `t^(a-1) (1-t)^(-1/2) dt` into `2 sin(theta)^(2a-1) d(theta)`, which removes
/// the endpoint singularity at `t = 1` (and at `t = 0` when `a < 1`).
pub fn incomplete_beta_half(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("Beta parameter a={a} must be positive")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("Beta argument x={x} outside [0, 1]")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let p = 2.0 * a - 1.0;
    let upper = x.sqrt().asin();
    let num = sine_power_integral(p, upper, BETA_REL_TOL);
    let den = sine_power_integral(p, FRAC_PI_2, BETA_REL_TOL);
    Ok((num / den).clamp(0.0, 1.0))
}

/// Normalized measure of the cap.
pub fn cap_measure_exact(q: &CapQuery) -> Result<f64> {
    let q = CapQuery::new(q.n, q.delta)?;
    if q.delta > FRAC_PI_2 {
        let complement = CapQuery::new(q.n, PI - q.delta)?;
        return Ok(1.0 - cap_measure_exact(&complement)?);
    }
    // h = 1 - cos(delta), written to avoid cancellation for small delta.
    let h = 2.0 * (q.delta / 2.0).sin().powi(2);
    let x = (2.0 * h - h * h).min(1.0);
    Ok(0.5 * incomplete_beta_half(q.n as f64 / 2.0, x)?)
}

/// Which closed form produced a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormulaId {
    /// `(1/(2 sqrt(pi))) (delta/2)^n / sqrt(n)`.
    CapLowerBound,
    /// Probability that `r` Haar vectors land within `eps` of fixed targets.
    LandingProbability,
    /// First-vector step bound.
    FirstStep,
    /// Conditional step bound for the `i`-th vector, `i >= 2`.
    ConditionalStep,
    /// Probability that the chain gap exceeds `1 - 8 r eps`.
    GapProbability,
}

/// An exact value (when known) next to a closed-form lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub exact: Option<f64>,
    pub lower_bound: Option<f64>,
    pub formula_id: FormulaId,
}

impl BoundReport {
    pub fn is_consistent(&self) -> bool {
        match (self.exact, self.lower_bound) {
            (Some(e), Some(b)) => e >= b,
            _ => true,
        }
    }
}

fn ln_factorial(r: usize) -> f64 {
    (2..=r).map(|k| (k as f64).ln()).sum()
}

fn ln_sqrt_pi() -> f64 {
    0.5 * PI.ln()
}

/// Natural log of the cap lower bound; requires `0 < delta < 1/4`.
pub fn ln_cap_lower_bound(q: &CapQuery) -> Result<f64> {
    if !(q.delta > 0.0 && q.delta < 0.25) {
        return Err(Error::Domain(format!(
            "cap lower bound needs 0 < delta < 1/4 (got {})",
            q.delta
        )));
    }
    if q.n < 1 {
        return Err(Error::Domain("sphere dimension n must be >= 1".into()));
    }
    let n = q.n as f64;
    Ok(-(2.0f64.ln() + ln_sqrt_pi()) + n * (q.delta / 2.0).ln() - 0.5 * n.ln())
}

/// `mu_n(C) > (1/(2 sqrt(pi))) (delta/2)^n / sqrt(n)` for `0 < delta < 1/4`.
pub fn cap_lower_bound(q: &CapQuery) -> Result<f64> {
    Ok(ln_cap_lower_bound(q)?.exp())
}

/// Exact cap measure together with the lower bound where it applies.
pub fn cap_report(q: &CapQuery) -> Result<BoundReport> {
    let lower_bound = if q.delta < 0.25 {
        Some(cap_lower_bound(q)?)
    } else {
        None
    };
    Ok(BoundReport {
        exact: Some(cap_measure_exact(q)?),
        lower_bound,
        formula_id: FormulaId::CapLowerBound,
    })
}

/// `r d^2 - r(r+1)/2`, the exponent shared by the landing and gap bounds.
pub fn bound_exponent(d: usize, r: usize) -> usize {
    r * d * d - r * (r + 1) / 2
}

fn check_d_r(d: usize, r: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::Domain(format!("local dimension d={d} < 2")));
    }
    if r < 1 || r > d * d {
        return Err(Error::Domain(format!("rank r={r} outside 1..=d^2")));
    }
    Ok(())
}

/// Natural log of [`landing_probability_bound`].
pub fn ln_landing_probability_bound(d: usize, r: usize, epsilon: f64) -> Result<f64> {
    check_d_r(d, r)?;
    if !(epsilon > 0.0 && epsilon < 0.25) {
        return Err(Error::Domain(format!("epsilon={epsilon} outside (0, 1/4)")));
    }
    let rf = r as f64;
    let prefactor = -rf * ((2.0 * d as f64).ln() + ln_sqrt_pi());
    let ln_base = (epsilon / 8.0).ln() - rf * 4.0f64.ln() - 0.5 * ln_factorial(r);
    Ok(prefactor + bound_exponent(d, r) as f64 * ln_base)
}

/// Lower bound on `P(max_i ||phi_i - v_i|| < eps)`:
/// `(2 d sqrt(pi))^(-r) ((eps/8) / (4^r sqrt(r!)))^(r d^2 - C(r+1, 2))`.
pub fn landing_probability_bound(d: usize, r: usize, epsilon: f64) -> Result<f64> {
    Ok(ln_landing_probability_bound(d, r, epsilon)?.exp())
}

/// Natural log of [`step_bound`].
pub fn ln_step_bound(d: usize, i: usize, delta: f64) -> Result<f64> {
    check_d_r(d, i.max(1))?;
    let df = d as f64;
    let n2 = (d * d) as f64;
    match i {
        0 => Err(Error::Domain("step index starts at 1".into())),
        1 => {
            if !(delta > 0.0 && delta < 0.25) {
                return Err(Error::Domain(format!("delta={delta} outside (0, 1/4)")));
            }
            Ok(-(2.0f64.ln() + ln_sqrt_pi()) + (n2 - 1.0) * (delta / 2.0).ln() - df.ln())
        }
        _ => {
            let ln_window = -((i + 1) as f64) * 4.0f64.ln() - 0.5 * ln_factorial(i);
            if !(delta > 0.0 && delta.ln() < ln_window) {
                return Err(Error::Domain(format!(
                    "delta={delta} outside (0, 1/(4^(i+1) sqrt(i!))) = (0, {}) for i={i}",
                    ln_window.exp()
                )));
            }
            Ok(-((2.0 * df).ln() + ln_sqrt_pi()) + (n2 - i as f64) * (delta / 8.0).ln())
        }
    }
}

/// Per-vector probability bounds: `i = 1` gives
/// `(1/(2 sqrt(pi))) (delta/2)^(d^2-1) / d`, `i >= 2` gives the conditional
/// bound `(1/(2 d sqrt(pi))) (delta/8)^(d^2-i)`.
pub fn step_bound(d: usize, i: usize, delta: f64) -> Result<f64> {
    Ok(ln_step_bound(d, i, delta)?.exp())
}

/// Step bounds for `i = 1..=r` as a report tagged with the formula used.
pub fn step_report(d: usize, i: usize, delta: f64) -> Result<BoundReport> {
    Ok(BoundReport {
        exact: None,
        lower_bound: Some(step_bound(d, i, delta)?),
        formula_id: if i == 1 {
            FormulaId::FirstStep
        } else {
            FormulaId::ConditionalStep
        },
    })
}

/// Natural log of [`gap_probability_bound`].
pub fn ln_gap_probability_bound(d: usize, r: usize, epsilon: f64) -> Result<f64> {
    check_d_r(d, r)?;
    let limit = 1.0 / (8.0 * r as f64);
    if !(epsilon > 0.0 && epsilon < limit) {
        return Err(Error::Domain(format!(
            "epsilon={epsilon} outside (0, 1/(8r)) = (0, {limit})"
        )));
    }
    let rf = r as f64;
    let prefactor = -rf * ((2.0 * d as f64).ln() + ln_sqrt_pi());
    let ln_base = 8.0f64.ln() + 2.0 * epsilon.ln() - 2.0 * rf * 4.0f64.ln();
    Ok(prefactor + bound_exponent(d, r) as f64 * ln_base)
}

/// Lower bound on `P(gamma_L > 1 - 8 r eps)`:
/// `(2 d sqrt(pi))^(-r) (8 eps^2 4^(-2r))^(r d^2 - C(r+1, 2))`.
pub fn gap_probability_bound(d: usize, r: usize, epsilon: f64) -> Result<f64> {
    Ok(ln_gap_probability_bound(d, r, epsilon)?.exp())
}

/// The gap level `1 - 8 r eps` that the probability bound refers to.
pub fn gap_threshold(r: usize, epsilon: f64) -> f64 {
    1.0 - 8.0 * r as f64 * epsilon
}
