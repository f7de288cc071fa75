//! Special functions, quadrature and root finding used by the other modules.
//!
//! Everything here is self-contained scalar `f64` math: the regularized lower
//! incomplete gamma function (chi-square tails of the energy detector), the
//! Gaussian Q-function, expectations over an exponentially distributed fading
//! power, and a bracketed scalar root finder for the power-constraint
//! equations.

use crate::error::{Error, Result};

/// Convergence control for quadrature and root finding.
///
/// `abs_tol` and `rel_tol` must lie in (0, 1); `max_iter` bounds function
/// evaluations (quadrature) or iterations (root finding).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: u32,
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64, max_iter: u32) -> Result<Self> {
        if !(abs_tol > 0.0 && abs_tol < 1.0) {
            return Err(Error::Param(format!(
                "abs_tol must lie in (0, 1), got {abs_tol}"
            )));
        }
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(Error::Param(format!(
                "rel_tol must lie in (0, 1), got {rel_tol}"
            )));
        }
        if max_iter == 0 {
            return Err(Error::Param("max_iter must be at least 1".into()));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_iter,
        })
    }

    /// Default tolerance for expectation integrals: 1e-10 absolute.
    pub fn quadrature() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_iter: 400_000,
        }
    }

    /// Default tolerance for cutoff/threshold root solves: 1e-9 relative.
    pub fn root() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            max_iter: 200,
        }
    }
}

const GAMMA_MAX_ITER: usize = 20_000;

/// Regularized lower incomplete gamma function `P(x, a)`.
///
/// The first argument is the integration limit and the second the shape, so
/// `P(x, a) = gamma(x, a) / Gamma(a)` with `gamma(x, a) = ∫_0^x t^(a-1) e^(-t) dt`.
/// Monotone nondecreasing in `x`, with `P(0, a) = 0` and `P(∞, a) = 1`.
///
/// ```
/// use cogcap::numerics::reg_lower_gamma;
/// // shape 1 reduces to the exponential CDF
/// let p = reg_lower_gamma(1.0, 1.0).unwrap();
/// assert!((p - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
/// ```
pub fn reg_lower_gamma(x: f64, a: f64) -> Result<f64> {
    reg_gamma_pair(x, a).map(|(p, _)| p)
}

/// Both tails at once: `(P(x, a), Q(x, a))` with `Q = 1 - P`, each computed
/// on its numerically stable side (series below `a + 1`, continued fraction
/// above) so deep tails keep full relative accuracy.
pub(crate) fn reg_gamma_pair(x: f64, a: f64) -> Result<(f64, f64)> {
    if !a.is_finite() || a <= 0.0 {
        return Err(Error::Domain(format!(
            "gamma shape must be positive, got {a}"
        )));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!(
            "gamma integration limit must be nonnegative, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x.is_infinite() {
        return Ok((1.0, 0.0));
    }
    // log of x^a e^{-x} / Gamma(a)
    let log_prefactor = a * x.ln() - x - libm::lgamma(a);
    if x < a + 1.0 {
        let p = lower_series(x, a, log_prefactor)?;
        Ok((p, 1.0 - p))
    } else {
        let q = upper_continued_fraction(x, a, log_prefactor)?;
        Ok((1.0 - q, q))
    }
}

/// P(x, a) = prefactor * sum_n x^n / (a (a+1) ... (a+n)), for x < a + 1.
fn lower_series(x: f64, a: f64, log_prefactor: f64) -> Result<f64> {
    let mut denom = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..GAMMA_MAX_ITER {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term < sum * 1e-17 {
            return Ok((log_prefactor + sum.ln()).exp().min(1.0));
        }
    }
    Err(Error::Convergence(format!(
        "incomplete gamma series stalled at x = {x}, a = {a}"
    )))
}

/// Q(x, a) by the modified Lentz continued fraction, for x >= a + 1.
fn upper_continued_fraction(x: f64, a: f64, log_prefactor: f64) -> Result<f64> {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / if b.abs() < tiny { tiny } else { b };
    let mut f = d;
    for n in 1..=GAMMA_MAX_ITER {
        let an = -(n as f64) * (n as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            return Ok((log_prefactor + f.ln()).exp().min(1.0));
        }
    }
    Err(Error::Convergence(format!(
        "incomplete gamma continued fraction stalled at x = {x}, a = {a}"
    )))
}

/// Upper tail of the standard normal distribution, `Q(x) = P(Z > x)`.
///
/// `Q(0) = 0.5` and `Q(-x) = 1 - Q(x)`.
pub fn gaussian_q(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Expectation of `g(z)` where `z` is exponential with mean `fading_mean`.
///
/// Computes `∫_0^∞ g(z) (1/m) e^(-z/m) dz` to `tol.abs_tol`. The domain is
/// split at every supplied breakpoint so that kinks (power-policy cutoffs)
/// never sit inside one quadrature panel, and each piece is integrated in the
/// coordinate that resolves it: linear near the origin, logarithmic for wide
/// positive spans (cutoffs can sit hundreds of decades below the fading
/// mean), and through the exponential weight for the unbounded tail.
pub fn integrate_expectation<F>(
    g: F,
    fading_mean: f64,
    breakpoints: &[f64],
    tol: &Tolerance,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(fading_mean > 0.0) || !fading_mean.is_finite() {
        return Err(Error::Param(format!(
            "fading_mean must be positive and finite, got {fading_mean}"
        )));
    }
    let m = fading_mean;
    // weight below 1e-19 beyond this point; the tail transform still covers it
    let far = 45.0 * m;

    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|b| b.is_finite() && *b > 0.0)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut edges = vec![0.0];
    edges.extend(cuts);
    if *edges.last().unwrap() < far {
        edges.push(far);
    }
    let tail_start = *edges.last().unwrap();

    // the Richardson error estimate is not a strict bound; leave headroom.
    // the relative target keeps probes with huge values (constraint
    // evaluations far from their root) from chasing impossible absolute
    // precision.
    let eps_abs = tol.abs_tol / (4.0 * edges.len() as f64);
    let eps_rel = tol.rel_tol / 4.0;
    let mut budget = tol.max_iter as i64;
    let weight = |z: f64| (-z / m).exp() / m;

    let mut total = 0.0;
    for pair in edges.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi <= lo {
            continue;
        }
        if lo > 0.0 && hi / lo > 10.0 {
            // z = e^t
            let f_t = |t: f64| {
                let z = t.exp();
                g(z) * weight(z) * z
            };
            total += adaptive_simpson(&f_t, lo.ln(), hi.ln(), eps_abs, eps_rel, &mut budget)?;
        } else {
            let f_z = |z: f64| g(z) * weight(z);
            total += adaptive_simpson(&f_z, lo, hi, eps_abs, eps_rel, &mut budget)?;
        }
    }

    // ∫_T^∞ g w dz = e^(-T/m) ∫_0^1 g(T - m ln u) du
    let scale = (-tail_start / m).exp();
    if scale > 0.0 {
        let f_u = |u: f64| {
            let z = if u > 0.0 {
                tail_start - m * u.ln()
            } else {
                tail_start + 745.0 * m
            };
            g(z)
        };
        total += scale * adaptive_simpson(&f_u, 0.0, 1.0, eps_abs / scale, eps_rel, &mut budget)?;
    }
    Ok(total)
}

/// Adaptive Simpson with an explicit work stack and an evaluation budget.
///
/// The acceptance tolerance is `eps_abs` or `eps_rel` relative to the
/// first whole-interval estimate, whichever is larger.
fn adaptive_simpson<F>(
    f: &F,
    a: f64,
    b: f64,
    eps_abs: f64,
    eps_rel: f64,
    budget: &mut i64,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    let mid = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(mid), f(b));
    *budget -= 3;
    if fa.is_nan() || fm.is_nan() || fb.is_nan() {
        return Err(Error::Domain(format!("integrand is NaN inside [{a}, {b}]")));
    }
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let eps = eps_abs.max(eps_rel * whole.abs());
    let mut total = 0.0;
    let mut stack = vec![(a, mid, b, fa, fm, fb, whole, eps)];
    while let Some((a, mid, b, fa, fm, fb, whole, eps)) = stack.pop() {
        if *budget <= 0 {
            return Err(Error::Convergence(format!(
                "quadrature budget exhausted near [{a}, {b}]"
            )));
        }
        let lm = 0.5 * (a + mid);
        let rm = 0.5 * (mid + b);
        let (flm, frm) = (f(lm), f(rm));
        *budget -= 2;
        if flm.is_nan() || frm.is_nan() {
            return Err(Error::Domain(format!("integrand is NaN inside [{a}, {b}]")));
        }
        let left = (mid - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - mid) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        let width_floor = (b - a).abs() <= 1e-14 * (a.abs() + b.abs() + 1.0);
        // second condition: the panel disagreement is at rounding level, a
        // tighter split cannot improve it
        if delta.abs() <= 2.0 * eps
            || delta.abs() <= 4e-15 * (left.abs() + right.abs() + whole.abs())
            || width_floor
        {
            total += left + right + delta / 15.0;
        } else {
            stack.push((a, lm, mid, fa, flm, fm, left, 0.5 * eps));
            stack.push((mid, rm, b, fm, frm, fb, right, 0.5 * eps));
        }
    }
    Ok(total)
}

/// Root of a continuous, sign-changing function inside a bracket.
///
/// Accepts `x` once `|h(x)| <= abs_tol` or the bracket has shrunk below
/// `rel_tol * |x|`. If the initial bracket does not straddle a sign change it
/// is widened geometrically a bounded number of times before giving up.
/// Interpolation (secant) steps are alternated with bisection so progress is
/// guaranteed on poorly scaled functions.
pub fn find_root<F>(h: F, bracket: (f64, f64), tol: &Tolerance) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = if bracket.0 <= bracket.1 {
        bracket
    } else {
        (bracket.1, bracket.0)
    };
    if !lo.is_finite() || !hi.is_finite() || lo == hi {
        return Err(Error::Param(format!("invalid bracket [{lo}, {hi}]")));
    }
    let eval = |x: f64| -> Result<f64> {
        let v = h(x);
        if v.is_nan() {
            Err(Error::Domain(format!("objective is NaN at x = {x}")))
        } else {
            Ok(v)
        }
    };
    let mut flo = eval(lo)?;
    let mut fhi = eval(hi)?;

    const MAX_EXPANSIONS: u32 = 64;
    const LIMIT: f64 = 1e306;
    let mut expansions = 0;
    while flo * fhi > 0.0 {
        if expansions >= MAX_EXPANSIONS || (lo <= -LIMIT && hi >= LIMIT) {
            return Err(Error::NoSignChange { lo, hi });
        }
        let w = (hi - lo).max(f64::MIN_POSITIVE);
        lo = (lo - w).max(-LIMIT);
        hi = (hi + w).min(LIMIT);
        flo = eval(lo)?;
        fhi = eval(hi)?;
        expansions += 1;
    }
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }

    let mut use_secant = true;
    for _ in 0..tol.max_iter {
        let width = hi - lo;
        let mut x = if use_secant && fhi != flo {
            lo - flo * width / (fhi - flo)
        } else {
            0.5 * (lo + hi)
        };
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        use_secant = !use_secant;

        let fx = eval(x)?;
        if fx.abs() <= tol.abs_tol {
            return Ok(x);
        }
        if flo * fx < 0.0 {
            hi = x;
            fhi = fx;
        } else {
            lo = x;
            flo = fx;
        }
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol.rel_tol * mid.abs() + 1e-300 {
            return Ok(mid);
        }
    }
    Err(Error::Convergence(format!(
        "root search exceeded {} iterations, bracket [{lo:e}, {hi:e}]",
        tol.max_iter
    )))
}
