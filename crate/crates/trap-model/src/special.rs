//! Special functions and quadrature: the Mittag-Leffler function on the
//! negative real axis, the arcsine-law aging function, and the integrators
//! the rest of the crate leans on.

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Adaptive Simpson on a finite interval, absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Tanh-sinh (double-exponential) quadrature on (0, 1); handles integrable
/// endpoint singularities. The integrand receives both `x` and `1 - x`,
/// each computed in its own cancellation-free sigmoid form, so singular
/// factors at either endpoint stay fully resolved.
pub fn tanh_sinh_01_pair(f: &impl Fn(f64, f64) -> f64, tol: f64) -> f64 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let eval = |t: f64| -> f64 {
        let s = half_pi * t.sinh();
        // x = (1 + tanh s)/2 without cancellation at either end.
        let x = 1.0 / (1.0 + (-2.0 * s).exp());
        let omx = 1.0 / (1.0 + (2.0 * s).exp());
        // x * omx = 1 / (4 cosh^2 s)
        let w = 2.0 * half_pi * t.cosh() * x * omx;
        if x <= 0.0 || omx <= 0.0 || w == 0.0 || !w.is_finite() {
            return 0.0;
        }
        let v = w * f(x, omx);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let t_max = 6.0;
    let mut h = 1.0f64;
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * h <= t_max {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut integral = h * sum;
    for _ in 0..12 {
        h *= 0.5;
        // add the new midpoints
        let mut extra = 0.0;
        let mut j = 1;
        while (j as f64) * h <= t_max {
            let t = j as f64 * h;
            extra += eval(t) + eval(-t);
            j += 2; // only odd multiples are new
        }
        let refined = 0.5 * integral + h * extra;
        if (refined - integral).abs() <= tol * refined.abs().max(1e-300) {
            return refined;
        }
        integral = refined;
    }
    integral
}

/// [`tanh_sinh_01_pair`] for integrands that only need `x`.
pub fn tanh_sinh_01(f: &impl Fn(f64) -> f64, tol: f64) -> f64 {
    tanh_sinh_01_pair(&|x, _| f(x), tol)
}

/// Largest `|z|` for which the defining series is evaluated directly; beyond
/// it the intermediate terms outgrow f64 cancellation headroom and the
/// integral representation takes over.
fn series_radius(alpha: f64) -> f64 {
    5.0f64.powf(alpha)
}

/// Mittag-Leffler function `E_alpha(z)` for `alpha` in (0, 1] and `z <= 0`.
///
/// Series for small `|z|`, the spectral integral representation for large
/// `|z|`; the two are cross-validated on their overlap band. Absolute error
/// is below 1e-10 on `z` in `[-50, 0]`.
pub fn mittag_leffler(alpha: f64, z: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(format!(
            "mittag_leffler needs alpha in (0, 1], got {alpha}"
        )));
    }
    if z > 0.0 {
        return Err(Error::Parameter(format!(
            "mittag_leffler is restricted to z <= 0, got {z}"
        )));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if alpha == 1.0 {
        return Ok(z.exp());
    }
    if (-z) <= series_radius(alpha) {
        Ok(mittag_leffler_series(alpha, z))
    } else {
        Ok(mittag_leffler_integral(alpha, -z))
    }
}

/// Direct series `sum z^m / Gamma(1 + m alpha)`.
pub fn mittag_leffler_series(alpha: f64, z: f64) -> f64 {
    let mut sum = 0.0f64;
    let mut z_pow = 1.0f64;
    for m in 0..400 {
        let term = z_pow / gamma(1.0 + alpha * m as f64);
        sum += term;
        z_pow *= z;
        if m > 4 && term.abs() < 1e-17 * sum.abs().max(1e-3) {
            break;
        }
    }
    sum
}

/// Spectral representation of `E_alpha(-x)` for `x > 0`:
/// a completely monotone Laplace transform of the stable spectral density.
pub fn mittag_leffler_integral(alpha: f64, x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let sin_api = (alpha * std::f64::consts::PI).sin();
    let cos_api = (alpha * std::f64::consts::PI).cos();
    let x_eff = x.powf(1.0 / alpha);
    // integrand over w = ln r
    let g = |w: f64| -> f64 {
        let e_aw = (alpha * w).exp();
        let density = sin_api / std::f64::consts::PI * e_aw
            / (e_aw * e_aw + 2.0 * e_aw * cos_api + 1.0);
        density * (-x_eff * w.exp()).exp()
    };
    let w_lo = -42.0 / alpha;
    let w_hi = (45.0 / x_eff).ln().max(0.0) + 3.0;
    adaptive_simpson(&g, w_lo, w_hi, 1e-13)
}

/// The aging function: the probability that the fractional-kinetics process
/// has not moved during `[t_w, (1 + theta) t_w]`, which depends on `theta`
/// alone. Equals the regularized incomplete beta `I_{1/(1+theta)}(alpha,
/// 1 - alpha)`, evaluated here by direct quadrature of the arcsine-law
/// integral with relative error <= 1e-8.
pub fn aging_function(alpha: f64, theta: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!(
            "aging_function needs alpha in (0, 1), got {alpha}"
        )));
    }
    if theta < 0.0 {
        return Err(Error::Parameter(format!("theta must be >= 0, got {theta}")));
    }
    let x = 1.0 / (1.0 + theta);
    let norm = (alpha * std::f64::consts::PI).sin() / std::f64::consts::PI;
    if theta == 0.0 {
        // Full Beta(alpha, 1 - alpha) integral: exactly 1 after normalizing.
        return Ok(1.0);
    }
    // u = x v maps the domain to (0, 1); only v = 0 stays singular.
    let integrand = |v: f64| v.powf(alpha - 1.0) * (1.0 - x * v).powf(-alpha);
    let value = x.powf(alpha) * tanh_sinh_01(&integrand, 1e-10);
    Ok(norm * value)
}

/// Regularized incomplete beta oracle for the aging function.
pub fn aging_function_beta_oracle(alpha: f64, theta: f64) -> f64 {
    statrs::function::beta::beta_reg(alpha, 1.0 - alpha, 1.0 / (1.0 + theta))
}
