//! The fractional-kinetics process: a d-dimensional Brownian motion time
//! changed by the inverse of an independent one-sided stable subordinator.
//!
//! Brownian values are produced by an exact lazy sampler: when a new time
//! falls between two already-sampled times the value is drawn from the
//! Brownian bridge, when it extends the frontier a fresh increment is used.
//! No interpolation ever happens, so path statistics are exact in law at
//! the sampled times.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::subordinator::{
    invert_subordinator, inverse_at_fixed_time, sample_stable_subordinator, SubordinatorPath,
};

/// Exact lazy Brownian sampler over `t >= 0` with `B(0) = 0`.
#[derive(Debug)]
pub struct BrownianSampler<const D: usize> {
    // Keyed by the IEEE bits of the (nonnegative) time: bit order equals
    // numeric order for nonnegative floats.
    points: BTreeMap<u64, [f64; D]>,
    stream: Stream,
}

impl<const D: usize> BrownianSampler<D> {
    pub fn new(stream: Stream) -> Self {
        let mut points = BTreeMap::new();
        points.insert(0f64.to_bits(), [0.0; D]);
        BrownianSampler { points, stream }
    }

    /// Value of the Brownian path at `t`, sampling lazily.
    pub fn at(&mut self, t: f64) -> [f64; D] {
        assert!(t >= 0.0 && t.is_finite());
        let key = t.to_bits();
        if let Some(v) = self.points.get(&key) {
            return *v;
        }
        let (t0, b0) = {
            let (k, v) = self
                .points
                .range(..=key)
                .next_back()
                .expect("B(0) is always present");
            (f64::from_bits(*k), *v)
        };
        let succ = self
            .points
            .range(key..)
            .next()
            .map(|(k, v)| (f64::from_bits(*k), *v));
        let value = match succ {
            None => {
                let sd = (t - t0).sqrt();
                let mut v = [0.0; D];
                for i in 0..D {
                    v[i] = b0[i] + sd * self.stream.next_normal();
                }
                v
            }
            Some((t1, b1)) => {
                // Brownian bridge between (t0, b0) and (t1, b1).
                let frac = (t - t0) / (t1 - t0);
                let var = (t - t0) * (t1 - t) / (t1 - t0);
                let sd = var.max(0.0).sqrt();
                let mut v = [0.0; D];
                for i in 0..D {
                    v[i] = b0[i] + frac * (b1[i] - b0[i]) + sd * self.stream.next_normal();
                }
                v
            }
        };
        self.points.insert(key, value);
        value
    }
}

/// A sampled fractional-kinetics path on an `s`-grid.
#[derive(Debug)]
pub struct FKPath<const D: usize> {
    pub s_grid: Vec<f64>,
    pub values: Vec<[f64; D]>,
    /// The inverse times `V^{-1}(s)` actually used.
    pub inverse_times: Vec<f64>,
    pub subordinator: SubordinatorPath,
}

/// Sample the process on `s_grid` with the default subordinator resolution.
pub fn sample_fk_path<const D: usize>(
    alpha: f64,
    s_grid: &[f64],
    stream: &mut Stream,
) -> Result<FKPath<D>> {
    let s_max = s_grid.iter().cloned().fold(0.0f64, f64::max);
    // Inverse times live on the scale s^alpha; resolve well below it.
    let t_estimate = (2.0 * s_max).powf(alpha).max(1.0);
    sample_fk_path_with_resolution(alpha, s_grid, t_estimate / 4096.0, stream)
}

/// Sample the process on `s_grid` with subordinator grid step `dt`.
pub fn sample_fk_path_with_resolution<const D: usize>(
    alpha: f64,
    s_grid: &[f64],
    dt: f64,
    stream: &mut Stream,
) -> Result<FKPath<D>> {
    if s_grid.is_empty() {
        return Err(Error::EmptyInput("s grid"));
    }
    if s_grid.iter().any(|&s| s < 0.0) {
        return Err(Error::Parameter("s grid must be nonnegative".into()));
    }
    let s_max = s_grid.iter().cloned().fold(0.0f64, f64::max);
    let mut sub_stream = stream.derive(1);
    let grid: Vec<f64> = (0..=8).map(|i| i as f64 * dt).collect();
    let mut path = sample_stable_subordinator(alpha, &grid, &mut sub_stream)?;
    path.extend_past(s_max, dt, &mut sub_stream);
    let brownian_stream = stream.derive(2);
    fk_path_from_subordinator(path, s_grid, brownian_stream)
}

/// Evaluate the process for a given (possibly hand-built) subordinator path.
pub fn fk_path_from_subordinator<const D: usize>(
    subordinator: SubordinatorPath,
    s_grid: &[f64],
    brownian_stream: Stream,
) -> Result<FKPath<D>> {
    let mut brownian = BrownianSampler::<D>::new(brownian_stream);
    let mut inverse_times = Vec::with_capacity(s_grid.len());
    let mut values = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        // The continuum subordinator is strictly positive on t > 0, so the
        // inverse at s = 0 is exactly 0 regardless of grid resolution.
        let t = if s == 0.0 {
            0.0
        } else {
            invert_subordinator(&subordinator, s)?
        };
        inverse_times.push(t);
        values.push(brownian.at(t));
    }
    Ok(FKPath {
        s_grid: s_grid.to_vec(),
        values,
        inverse_times,
        subordinator,
    })
}

/// Exact draw of the fixed-time marginal `Z(s)`: conditionally on
/// `V^{-1}(s) = v` the value is a centered Gaussian with variance `v` per
/// coordinate, and `V^{-1}(s)` itself admits a single-draw exact sampler.
pub fn fk_fixed_time<const D: usize>(alpha: f64, s: f64, stream: &mut Stream) -> [f64; D] {
    let v = inverse_at_fixed_time(alpha, s, stream);
    let sd = v.sqrt();
    let mut out = [0.0; D];
    for slot in out.iter_mut() {
        *slot = sd * stream.next_normal();
    }
    out
}

/// Target fixed-time characteristic function: the Fourier transform of
/// `Z(t)` at frequency `xi` equals `E_alpha(-|xi|^2 t^alpha / 2)`.
pub fn fk_charfn_target(alpha: f64, t: f64, xi_norm2: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::Parameter(format!("time must be >= 0, got {t}")));
    }
    if xi_norm2 == 0.0 {
        return Ok(1.0);
    }
    crate::special::mittag_leffler(alpha, -xi_norm2 * t.powf(alpha) / 2.0)
}
