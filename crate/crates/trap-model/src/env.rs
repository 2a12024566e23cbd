//! The quenched random environment: a field of trap depths `tau_x > 0`.
//!
//! Depths are heavy-tailed, `P[tau_x >= u] = u^{-alpha} (1 + L(u))` with
//! `alpha` in (0,1) and a slowly-vanishing correction `L`. The field is never
//! stored: `tau_x` is a pure hash of `(master_seed, x)`, so any replica, on
//! any thread, querying any subset of sites in any order sees the same
//! environment. Depths are normalized so that `tau_x >= 1` always.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{norm2, Site};
use crate::rng::site_uniform;
use crate::scales::ScaleSet;

/// The slowly varying correction `L` in the tail law.
#[derive(Clone)]
pub enum TailMode {
    /// `L = 0`: exact Pareto tails, `tau = U^{-1/alpha}`.
    Zero,
    /// A user-supplied bounded perturbation with `L(u) -> 0`. The perturbed
    /// tail `u^{-alpha}(1 + L(u))` must remain decreasing; depths are found
    /// by numerical inversion. Intended for robustness experiments only.
    Perturbed(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for TailMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TailMode::Zero => write!(f, "Zero"),
            TailMode::Perturbed(_) => write!(f, "Perturbed(..)"),
        }
    }
}

/// Tail law of the trap depths.
#[derive(Clone, Debug)]
pub struct TailSpec {
    pub alpha: f64,
    pub mode: TailMode,
}

impl TailSpec {
    pub fn pareto(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Parameter(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        Ok(TailSpec {
            alpha,
            mode: TailMode::Zero,
        })
    }

    pub fn perturbed(
        alpha: f64,
        l: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    ) -> Result<Self> {
        let mut spec = TailSpec::pareto(alpha)?;
        spec.mode = TailMode::Perturbed(l);
        Ok(spec)
    }
}

#[derive(Clone, Debug)]
enum FieldKind {
    HeavyTail(TailSpec),
    /// Degenerate constant field `tau = c`: a testing hook, not part of the
    /// model. Flagged in the serialized descriptor.
    Constant(f64),
}

/// The quenched environment over a lattice ball `D(m * r(n))`.
#[derive(Clone, Debug)]
pub struct Environment<const D: usize> {
    master_seed: u64,
    field: FieldKind,
    n: u32,
    m: f64,
    radius: f64,
    overrides: HashMap<Site<D>, f64>,
}

/// Serialized form: `{d, alpha, L_mode, master_seed, n, m}`. No field data
/// is ever written; the seed reproduces the environment exactly.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EnvDescriptor {
    pub d: usize,
    pub alpha: f64,
    #[serde(rename = "L_mode")]
    pub l_mode: String,
    pub master_seed: u64,
    pub n: u32,
    pub m: f64,
}

impl<const D: usize> Environment<D> {
    /// Environment on `D(m * r(n))` for the scales at level `n`.
    pub fn new(tail: TailSpec, master_seed: u64, scales: &ScaleSet, m: f64) -> Result<Self> {
        if D != scales.d {
            return Err(Error::Parameter(format!(
                "scale set built for d = {}, environment is d = {}",
                scales.d, D
            )));
        }
        if m < 1.0 {
            return Err(Error::Parameter(format!("multiplier m must be >= 1, got {m}")));
        }
        Ok(Environment {
            master_seed,
            field: FieldKind::HeavyTail(tail),
            n: scales.n,
            m,
            radius: m * scales.r,
            overrides: HashMap::new(),
        })
    }

    /// Constant-depth testing hook, `tau = c` everywhere.
    pub fn constant(c: f64, master_seed: u64, scales: &ScaleSet, m: f64) -> Result<Self> {
        if c <= 0.0 {
            return Err(Error::Parameter(format!("constant depth must be > 0, got {c}")));
        }
        let mut env = Environment::new(TailSpec::pareto(0.5)?, master_seed, scales, m)?;
        env.field = FieldKind::Constant(c);
        Ok(env)
    }

    /// Plant explicit depths at chosen sites on top of the base field
    /// (testing hook for hand-built configurations).
    pub fn with_overrides(mut self, overrides: impl IntoIterator<Item = (Site<D>, f64)>) -> Self {
        self.overrides.extend(overrides);
        self
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// The same environment law with a different seed (a fresh disorder
    /// realization); used by environment-averaged estimates.
    pub fn clone_with_seed(&self, master_seed: u64) -> Self {
        let mut fresh = self.clone();
        fresh.master_seed = master_seed;
        fresh
    }

    pub fn alpha(&self) -> f64 {
        match &self.field {
            FieldKind::HeavyTail(t) => t.alpha,
            FieldKind::Constant(_) => f64::NAN,
        }
    }

    pub fn level(&self) -> u32 {
        self.n
    }

    pub fn multiplier(&self) -> f64 {
        self.m
    }

    /// Radius of the addressable ball `D(m * r(n))`.
    pub fn region_radius(&self) -> f64 {
        self.radius
    }

    pub fn contains(&self, x: &Site<D>) -> bool {
        (norm2(x) as f64) <= self.radius * self.radius
    }

    pub fn is_constant_mode(&self) -> bool {
        matches!(self.field, FieldKind::Constant(_))
    }

    fn check_region(&self, x: &Site<D>) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::RegionViolation {
                site: format!("{x:?}"),
                radius: self.radius,
            })
        }
    }

    /// The trap depth at `x`. Pure in `(master_seed, x)`.
    pub fn tau_at(&self, x: &Site<D>) -> Result<f64> {
        self.check_region(x)?;
        if let Some(&tau) = self.overrides.get(x) {
            return Ok(tau);
        }
        Ok(match &self.field {
            FieldKind::Constant(c) => *c,
            FieldKind::HeavyTail(tail) => {
                let u = site_uniform(self.master_seed, x.as_slice());
                match &tail.mode {
                    TailMode::Zero => u.powf(-1.0 / tail.alpha),
                    TailMode::Perturbed(l) => invert_perturbed_tail(tail.alpha, l.as_ref(), u),
                }
            }
        })
    }

    /// `tau_x >= level`, avoiding the `powf` of `tau_at` in the exact-Pareto
    /// case. This is the hot path of trap classification.
    pub fn depth_at_least(&self, x: &Site<D>, level: f64) -> Result<bool> {
        self.check_region(x)?;
        if let Some(&tau) = self.overrides.get(x) {
            return Ok(tau >= level);
        }
        Ok(match &self.field {
            FieldKind::Constant(c) => *c >= level,
            FieldKind::HeavyTail(tail) => match &tail.mode {
                TailMode::Zero => {
                    if level <= 1.0 {
                        true
                    } else {
                        site_uniform(self.master_seed, x.as_slice()) <= level.powf(-tail.alpha)
                    }
                }
                TailMode::Perturbed(_) => self.tau_at(x)? >= level,
            },
        })
    }

    /// `lo <= tau_x < hi` with a single field evaluation in the hot path.
    pub fn depth_in_window(&self, x: &Site<D>, lo: f64, hi: f64) -> Result<bool> {
        self.check_region(x)?;
        if let Some(&tau) = self.overrides.get(x) {
            return Ok(tau >= lo && tau < hi);
        }
        Ok(match &self.field {
            FieldKind::Constant(c) => *c >= lo && *c < hi,
            FieldKind::HeavyTail(tail) => match &tail.mode {
                TailMode::Zero => {
                    let u = site_uniform(self.master_seed, x.as_slice());
                    let u_hi = if lo <= 1.0 { 1.0 } else { lo.powf(-tail.alpha) };
                    let u_lo = hi.powf(-tail.alpha);
                    u > u_lo && u <= u_hi
                }
                TailMode::Perturbed(_) => {
                    let tau = self.tau_at(x)?;
                    tau >= lo && tau < hi
                }
            },
        })
    }

    pub fn descriptor(&self) -> EnvDescriptor {
        let (alpha, l_mode) = match &self.field {
            FieldKind::HeavyTail(t) => (
                t.alpha,
                match t.mode {
                    TailMode::Zero => "zero".to_string(),
                    TailMode::Perturbed(_) => "perturbed".to_string(),
                },
            ),
            FieldKind::Constant(c) => (f64::NAN, format!("constant({c})")),
        };
        EnvDescriptor {
            d: D,
            alpha,
            l_mode,
            master_seed: self.master_seed,
            n: self.n,
            m: self.m,
        }
    }

    pub fn descriptor_json(&self) -> String {
        serde_json::to_string(&self.descriptor()).expect("descriptor serializes")
    }
}

/// Solve `t^{-alpha} (1 + L(t)) = u` for `t >= 1` by bisection on `ln t`.
/// The tail is normalized to 1 at `t = 1`, i.e. depths below 1 never occur;
/// the tail law only constrains large `u`, so this choice is admissible.
fn invert_perturbed_tail(alpha: f64, l: &(dyn Fn(f64) -> f64 + Send + Sync), u: f64) -> f64 {
    let survival = |t: f64| (t.powf(-alpha) * (1.0 + l(t))).min(1.0);
    if u >= survival(1.0) {
        return 1.0;
    }
    // Bracket in log-space; survival decreases to 0.
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while survival(hi.exp()) > u {
        lo = hi;
        hi *= 2.0;
        if hi > 800.0 {
            break;
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if survival(mid.exp()) > u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}
