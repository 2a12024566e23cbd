//! Trap classification at level `n`.
//!
//! *Deep* traps have depth in `[eps g(n), M g(n))`. A site is *safe* when no
//! deep trap lies within the proximity scale `nu(n)`; the *safe interior*
//! additionally keeps distance `rho(n)` from the region boundary. For
//! `d >= 3` a deep trap is *bad* when another deep trap sits within `nu(n)`
//! of it (for `d = 2` the bad set is empty by definition).
//!
//! Sets are lazy views over the hashed environment: membership is recomputed
//! from `tau` on demand, so regions with billions of sites cost nothing until
//! queried. `materialize` realizes the sets explicitly for small regions.

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::lattice::{ball_sites, dist2, norm2, Site};
use crate::scales::ScaleSet;

const MATERIALIZE_LIMIT: usize = 20_000_000;

/// Lazy view of the trap sets `T_eps^M`, safe set, safe interior and bad set.
#[derive(Clone, Debug)]
pub struct TrapSets<const D: usize> {
    env: Environment<D>,
    scales: ScaleSet,
    pub epsilon: f64,
    pub m_cap: f64,
    depth_lo: f64,
    depth_hi: f64,
}

/// Explicit listing of the four sets, for small regions and oracle tests.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterializedTrapSets<const D: usize> {
    pub deep: Vec<Site<D>>,
    pub safe: Vec<Site<D>>,
    pub safe_interior: Vec<Site<D>>,
    pub bad: Vec<Site<D>>,
}

/// Build the trap classification for `(env, scales)` at window `[eps, M)`.
pub fn classify_traps<const D: usize>(
    env: &Environment<D>,
    scales: &ScaleSet,
    epsilon: f64,
    m_cap: f64,
) -> Result<TrapSets<D>> {
    TrapSets::new(env.clone(), scales.clone(), epsilon, m_cap)
}

impl<const D: usize> TrapSets<D> {
    pub fn new(env: Environment<D>, scales: ScaleSet, epsilon: f64, m_cap: f64) -> Result<Self> {
        if !(epsilon < 1.0 && 1.0 < m_cap) {
            return Err(Error::Precondition(format!(
                "depth window requires eps < 1 < M, got eps = {epsilon}, M = {m_cap}"
            )));
        }
        if epsilon <= 0.0 {
            return Err(Error::Precondition("eps must be positive".into()));
        }
        let depth_lo = epsilon * scales.g;
        let depth_hi = m_cap * scales.g;
        Ok(TrapSets {
            env,
            scales,
            epsilon,
            m_cap,
            depth_lo,
            depth_hi,
        })
    }

    pub fn env(&self) -> &Environment<D> {
        &self.env
    }

    pub fn scales(&self) -> &ScaleSet {
        &self.scales
    }

    /// `eps^{-alpha} - M^{-alpha}`, the limiting deep-trap mass.
    pub fn p_eps_m(&self) -> f64 {
        let a = self.env.alpha();
        self.epsilon.powf(-a) - self.m_cap.powf(-a)
    }

    pub fn in_region(&self, x: &Site<D>) -> bool {
        self.env.contains(x)
    }

    /// Distance from `x` to the region boundary.
    pub fn boundary_distance(&self, x: &Site<D>) -> f64 {
        self.env.region_radius() - (norm2(x) as f64).sqrt()
    }

    /// Membership in `T_eps^M`.
    pub fn is_deep(&self, x: &Site<D>) -> Result<bool> {
        if !self.in_region(x) {
            return Ok(false);
        }
        self.env.depth_in_window(x, self.depth_lo, self.depth_hi)
    }

    /// A deep trap with another deep trap within `nu` (empty set for d = 2).
    pub fn is_bad(&self, x: &Site<D>) -> Result<bool> {
        if D == 2 || !self.is_deep(x)? {
            return Ok(false);
        }
        for y in ball_sites(*x, self.scales.nu) {
            if y != *x && self.in_region(&y) && self.is_deep(&y)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Membership in the safe set: in the region, with every deep trap
    /// strictly further than `nu`.
    pub fn in_safe(&self, x: &Site<D>) -> Result<bool> {
        if !self.in_region(x) {
            return Ok(false);
        }
        for y in ball_sites(*x, self.scales.nu) {
            if self.in_region(&y) && self.is_deep(&y)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Safe and further than `rho` from the region boundary.
    pub fn in_safe_interior(&self, x: &Site<D>) -> Result<bool> {
        Ok(self.boundary_distance(x) > self.scales.rho && self.in_safe(x)?)
    }

    /// All deep traps within `D_center(radius)` (clipped to the region).
    pub fn deep_in_ball(&self, center: &Site<D>, radius: f64) -> Result<Vec<Site<D>>> {
        let mut out = Vec::new();
        for y in ball_sites(*center, radius) {
            if self.in_region(&y) && self.is_deep(&y)? {
                out.push(y);
            }
        }
        Ok(out)
    }

    /// Realize all four sets by scanning the whole region. Guarded by a site
    /// budget; intended for small-`n` verification.
    pub fn materialize(&self) -> Result<MaterializedTrapSets<D>> {
        let radius = self.env.region_radius();
        let count = crate::lattice::ball_site_count::<D>(radius);
        if count > MATERIALIZE_LIMIT {
            return Err(Error::Capacity {
                sites: count,
                limit: MATERIALIZE_LIMIT,
            });
        }
        let mut deep = Vec::new();
        for x in ball_sites([0i64; D], radius) {
            if self.is_deep(&x)? {
                deep.push(x);
            }
        }
        let nu2 = self.scales.nu * self.scales.nu;
        let mut safe = Vec::new();
        let mut safe_interior = Vec::new();
        for x in ball_sites([0i64; D], radius) {
            let near_deep = deep.iter().any(|y| (dist2(&x, y) as f64) <= nu2);
            if !near_deep {
                safe.push(x);
                if self.boundary_distance(&x) > self.scales.rho {
                    safe_interior.push(x);
                }
            }
        }
        let mut bad = Vec::new();
        if D >= 3 {
            for x in &deep {
                if deep
                    .iter()
                    .any(|y| y != x && (dist2(x, y) as f64) <= nu2)
                {
                    bad.push(*x);
                }
            }
        }
        Ok(MaterializedTrapSets {
            deep,
            safe,
            safe_interior,
            bad,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::TailSpec;
    use crate::scales::scales;

    fn setup(seed: u64) -> (Environment<3>, ScaleSet) {
        let sc = scales(6, 3, 0.5).unwrap();
        let env = Environment::new(TailSpec::pareto(0.5).unwrap(), seed, &sc, 2.0).unwrap();
        (env, sc)
    }

    #[test]
    fn constant_mode_has_no_deep_traps() {
        let sc = scales(6, 3, 0.5).unwrap();
        // eps g(n) = 0.5 * 4096 > 1 = tau everywhere.
        let env: Environment<3> = Environment::constant(1.0, 0, &sc, 2.0).unwrap();
        let sets = classify_traps(&env, &sc, 0.5, 4.0).unwrap();
        let mat = sets.materialize().unwrap();
        assert!(mat.deep.is_empty());
        assert!(mat.bad.is_empty());
        let region_count = crate::lattice::ball_site_count::<3>(env.region_radius());
        assert_eq!(mat.safe.len(), region_count);
    }

    #[test]
    fn lazy_view_agrees_with_brute_force_scan() {
        for seed in [1u64, 7, 99] {
            let (env, sc) = setup(seed);
            // A window low enough that a few deep traps exist in the region.
            let sets = classify_traps(&env, &sc, 1e-4, 10.0).unwrap();
            let mat = sets.materialize().unwrap();
            assert!(!mat.deep.is_empty(), "seed {seed}: want some deep traps");

            // Brute force from tau alone.
            let (lo, hi) = (1e-4 * sc.g, 10.0 * sc.g);
            let mut brute_deep = Vec::new();
            for x in crate::lattice::ball_sites([0i64; 3], env.region_radius()) {
                let tau = env.tau_at(&x).unwrap();
                if tau >= lo && tau < hi {
                    brute_deep.push(x);
                }
            }
            assert_eq!(mat.deep, brute_deep);

            for x in &mat.deep {
                assert!(sets.is_deep(x).unwrap());
            }
            for x in &mat.safe {
                assert!(sets.in_safe(x).unwrap());
            }
            for x in &mat.bad {
                assert!(sets.is_bad(x).unwrap());
            }
            for x in &mat.safe_interior {
                assert!(sets.in_safe_interior(x).unwrap());
            }

            // Invariants: safe_interior within safe; bad within deep;
            // safe sites keep distance > nu from every deep trap.
            assert!(mat
                .safe_interior
                .iter()
                .all(|x| mat.safe.contains(x)));
            assert!(mat.bad.iter().all(|x| mat.deep.contains(x)));
            let nu2 = sc.nu * sc.nu;
            for x in &mat.safe {
                for y in &mat.deep {
                    assert!((dist2(x, y) as f64) > nu2);
                }
            }
        }
    }

    #[test]
    fn single_planted_trap_excludes_its_nu_ball() {
        let (_, sc) = setup(3);
        // Empty the field (constant 1), then plant one deep trap at origin.
        let env: Environment<3> = Environment::constant(1.0, 0, &sc, 2.0)
            .unwrap()
            .with_overrides([([0i64, 0, 0], 0.7 * sc.g)]);
        let sets = classify_traps(&env, &sc, 0.5, 4.0).unwrap();
        let mat = sets.materialize().unwrap();
        assert_eq!(mat.deep, vec![[0, 0, 0]]);
        assert!(mat.bad.is_empty());
        let nu2 = sc.nu * sc.nu;
        for x in crate::lattice::ball_sites([0i64; 3], env.region_radius()) {
            let inside_nu_ball = (norm2(&x) as f64) <= nu2;
            assert_eq!(mat.safe.contains(&x), !inside_nu_ball);
        }
    }

    #[test]
    fn two_close_planted_traps_are_both_bad() {
        let (_, sc) = setup(4);
        let gap = sc.nu.floor() as i64 - 1; // distance nu - 1 < nu
        let a = [0i64, 0, 0];
        let b = [gap, 0, 0];
        let env: Environment<3> = Environment::constant(1.0, 0, &sc, 2.0)
            .unwrap()
            .with_overrides([(a, 0.9 * sc.g), (b, 0.9 * sc.g)]);
        let sets = classify_traps(&env, &sc, 0.5, 4.0).unwrap();
        let mat = sets.materialize().unwrap();
        assert_eq!(mat.deep.len(), 2);
        assert_eq!(mat.bad.len(), 2);
        assert!(sets.is_bad(&a).unwrap() && sets.is_bad(&b).unwrap());

        // The same pair in d = 2 would be exempt: bad is empty by definition.
        let sc2 = scales(12, 2, 0.5).unwrap();
        let env2: Environment<2> = Environment::constant(1.0, 0, &sc2, 2.0)
            .unwrap()
            .with_overrides([([0i64, 0], 0.9 * sc2.g), ([1i64, 0], 0.9 * sc2.g)]);
        let sets2 = classify_traps(&env2, &sc2, 0.5, 4.0).unwrap();
        assert!(!sets2.is_bad(&[0, 0]).unwrap());
    }

    #[test]
    fn depth_window_bounds_are_enforced() {
        let (env, sc) = setup(5);
        assert!(classify_traps(&env, &sc, 1.5, 4.0).is_err());
        assert!(classify_traps(&env, &sc, 0.5, 0.9).is_err());
        assert!(classify_traps(&env, &sc, -0.1, 4.0).is_err());
    }
}
