//! The scale hierarchy at level `n`: spatial scale `r`, depth scale `g`,
//! coarse-graining scale `rho`, proximity scale `nu`, and the ratio
//! `h = r / rho`. For `d >= 3` all scales are pure powers of two; for
//! `d = 2` they carry logarithmic corrections and the exponent `gamma`
//! is a free parameter constrained by `gamma < 1 - alpha`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ScaleSet {
    pub n: u32,
    pub d: usize,
    pub alpha: f64,
    /// Spatial scale of the region `D(m r)`.
    pub r: f64,
    /// Depth scale: traps of depth around `g` dominate the clock.
    pub g: f64,
    /// Coarse-graining scale: one part of the trajectory spans `rho`.
    pub rho: f64,
    /// Proximity scale: deep traps closer than `nu` to anything are suspect.
    pub nu: f64,
    /// `r / rho`, the number of coarse parts per region crossing (squared).
    pub h: f64,
    pub gamma: f64,
    pub kappa: f64,
}

/// Default `gamma` for `d = 2`, safely inside the `gamma < 1 - alpha` window.
pub fn default_gamma_2d(alpha: f64) -> f64 {
    (1.0 - alpha) / 2.0
}

/// Evaluate the scale hierarchy at `(n, d, alpha)`.
pub fn scales(n: u32, d: usize, alpha: f64) -> Result<ScaleSet> {
    scales_with_gamma(n, d, alpha, None)
}

/// As [`scales`], with an explicit `gamma` for `d = 2` (ignored for `d >= 3`,
/// where `gamma = 1 - 1/(3d)` is fixed).
pub fn scales_with_gamma(n: u32, d: usize, alpha: f64, gamma_2d: Option<f64>) -> Result<ScaleSet> {
    if d < 2 {
        return Err(Error::UnsupportedDimension(d, 2));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if n < 1 {
        return Err(Error::Parameter("n must be >= 1".into()));
    }
    let nf = n as f64;
    let (gamma, kappa) = if d == 2 {
        let gamma = gamma_2d.unwrap_or_else(|| default_gamma_2d(alpha));
        if !(gamma > 0.0 && gamma < 1.0 - alpha) {
            return Err(Error::Parameter(format!(
                "for d = 2, gamma must lie in (0, 1 - alpha) = (0, {}), got {gamma}",
                1.0 - alpha
            )));
        }
        (gamma, 5.0 / (1.0 - alpha))
    } else {
        (1.0 - 1.0 / (3.0 * d as f64), 1.0 / d as f64)
    };

    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    let (r, g, rho, nu) = if d == 2 {
        (
            inv_sqrt_pi * (nf / 2.0).exp2() * nf.powf((1.0 - alpha) / 2.0),
            (nf / alpha).exp2() / nf,
            inv_sqrt_pi * (nf / 2.0).exp2() * nf.powf(gamma / 2.0),
            inv_sqrt_pi * (nf / 2.0).exp2() * nf.powf(-kappa / 2.0),
        )
    } else {
        (
            (nf / 2.0).exp2(),
            (nf / alpha).exp2(),
            (gamma * nf / 2.0).exp2(),
            (kappa * nf / 2.0).exp2(),
        )
    };
    let h = r / rho;

    let set = ScaleSet {
        n,
        d,
        alpha,
        r,
        g,
        rho,
        nu,
        h,
        gamma,
        kappa,
    };
    // The hierarchy nu < rho < r must hold at usable levels (for d = 2 it
    // degenerates at n = 1 where every power of n is 1).
    if !(set.nu < set.rho && set.rho < set.r) {
        return Err(Error::Parameter(format!(
            "scale ordering nu < rho < r fails at n = {n} (nu = {}, rho = {}, r = {})",
            set.nu, set.rho, set.r
        )));
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn d3_scales_match_hand_values() {
        let sc = scales(10, 3, 0.5).unwrap();
        assert_eq!(sc.r, 32.0); // 2^5
        assert_eq!(sc.g, 1_048_576.0); // 2^20
        assert_relative_eq!(sc.gamma, 8.0 / 9.0, max_relative = 1e-15);
        assert_relative_eq!(sc.rho, f64::exp2((8.0 / 9.0) * 5.0), max_relative = 1e-15);
        assert_relative_eq!(sc.rho, 21.77, max_relative = 1e-3);
        assert_relative_eq!(sc.nu, f64::exp2(5.0 / 3.0), max_relative = 1e-15);
        assert_relative_eq!(sc.nu, 3.1748, max_relative = 1e-4);
    }

    #[test]
    fn h_identity_is_exact() {
        for n in [4u32, 8, 10, 14, 20] {
            let sc = scales(n, 3, 0.5).unwrap();
            assert_eq!(sc.h, sc.r / sc.rho);
            assert_relative_eq!(sc.r * sc.r / (sc.rho * sc.rho), sc.h * sc.h, max_relative = 1e-15);
        }
    }

    #[test]
    fn d2_scales_carry_log_corrections() {
        let alpha = 0.5;
        let sc = scales(16, 2, alpha).unwrap();
        let nf = 16.0f64;
        let isp = 1.0 / std::f64::consts::PI.sqrt();
        assert_relative_eq!(sc.r, isp * 256.0 * nf.powf(0.25), max_relative = 1e-15);
        assert_relative_eq!(sc.g, f64::exp2(32.0) / 16.0, max_relative = 1e-15);
        assert_relative_eq!(sc.kappa, 10.0, max_relative = 1e-15);
        assert!(sc.gamma < 1.0 - alpha);
        assert!(sc.nu < sc.rho && sc.rho < sc.r);
    }

    #[test]
    fn ordering_violations_are_rejected() {
        assert!(matches!(scales(1, 2, 0.5), Err(Error::Parameter(_))));
        assert!(matches!(scales(10, 1, 0.5), Err(Error::UnsupportedDimension(1, 2))));
        assert!(scales_with_gamma(12, 2, 0.5, Some(0.7)).is_err()); // gamma > 1 - alpha
    }
}
