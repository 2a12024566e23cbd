//! Lattice potential theory for the simple random walk: the free Green's
//! function at the origin, killed-ball Green's functions by exact sparse
//! solves, hitting probabilities, and the deep-trap hitting sum.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::lattice::{ball_sites, dist2, neighbors, Site};
use crate::rng::Stream;
use crate::special::adaptive_simpson;
use crate::traps::TrapSets;

/// Capacity limit for exact killed-ball solves.
pub const EXACT_SITE_LIMIT: usize = 1_000_000;

/// A value with a certified error bound.
#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    pub value: f64,
    pub error: f64,
}

impl Bracket {
    pub fn contains(&self, x: f64) -> bool {
        (self.value - x).abs() <= self.error
    }

    pub fn low(&self) -> f64 {
        self.value - self.error
    }

    pub fn high(&self) -> f64 {
        self.value + self.error
    }
}

/// `a_d = (d/2) Gamma(d/2 - 1) pi^{-d/2}`, the free-Green decay constant.
pub fn a_d(d: usize) -> Result<f64> {
    if d < 3 {
        return Err(Error::UnsupportedDimension(d, 3));
    }
    let df = d as f64;
    Ok(df / 2.0 * statrs::function::gamma::gamma(df / 2.0 - 1.0)
        * std::f64::consts::PI.powf(-df / 2.0))
}

/// `e^{-x} I_0(x)`: series for moderate `x`, asymptotic expansion beyond.
fn bessel_i0_scaled(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x <= 15.0 {
        let q = x * x / 4.0;
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        for m in 1..200 {
            term *= q / ((m * m) as f64);
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        sum * (-x).exp()
    } else {
        // I_0(x) ~ e^x / sqrt(2 pi x) * sum a_j x^{-j},
        // a_j = prod_{i<=j} (2i-1)^2 / (j! 8^j).
        let inv = 1.0 / x;
        let mut sum = 1.0f64;
        let mut a = 1.0f64;
        let mut pw = 1.0f64;
        for j in 1..=6u32 {
            let odd = (2 * j - 1) as f64;
            a *= odd * odd / (8.0 * j as f64);
            pw *= inv;
            sum += a * pw;
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}

/// Asymptotic coefficients of `[e^{-x} I_0(x) sqrt(2 pi x)]^d` as a series in
/// `1/x`, up to the requested order.
fn scaled_power_series(d: usize, order: usize) -> Vec<f64> {
    let mut base = vec![0.0; order + 2];
    base[0] = 1.0;
    let mut a = 1.0f64;
    for j in 1..base.len() {
        let odd = (2 * j - 1) as f64;
        a *= odd * odd / (8.0 * j as f64);
        base[j] = a;
    }
    let mut pow = vec![0.0; order + 2];
    pow[0] = 1.0;
    for _ in 0..d {
        let mut next = vec![0.0; order + 2];
        for (i, &pi) in pow.iter().enumerate() {
            if pi == 0.0 {
                continue;
            }
            for (j, &bj) in base.iter().enumerate() {
                if i + j < next.len() {
                    next[i + j] += pi * bj;
                }
            }
        }
        pow = next;
    }
    pow
}

/// The free Green's function `G_d(0)`: the expected number of visits to the
/// origin, equal to the integral over time of the continuous-time return
/// probability `[e^{-t/d} I_0(t/d)]^d`. The head is integrated adaptively;
/// the tail uses the asymptotic expansion of the integrand (which decays
/// like `t^{-d/2}`, the local-CLT rate) with the first omitted term, times a
/// safety factor, charged to the error bracket.
pub fn green_free(d: usize, precision: f64) -> Result<Bracket> {
    let tight = green_free_with_cutoff(d, precision, 80.0 * d as f64)?;
    // The certified bound is the requested precision; the internal bound is
    // usually far smaller (see `green_free_with_cutoff`, which reports it).
    Ok(Bracket {
        value: tight.value,
        error: precision,
    })
}

/// As [`green_free`] with an explicit head/tail split point (exposed so the
/// nesting of brackets across cutoffs is testable).
pub fn green_free_with_cutoff(d: usize, precision: f64, cutoff: f64) -> Result<Bracket> {
    if d <= 2 {
        return Err(Error::Divergent(d));
    }
    if precision <= 0.0 {
        return Err(Error::Parameter("precision must be positive".into()));
    }
    let df = d as f64;
    let quad_tol = (precision / 10.0).min(1e-9);
    let integrand = |t: f64| bessel_i0_scaled(t / df).powi(d as i32);
    let head = adaptive_simpson(&integrand, 0.0, cutoff, quad_tol);

    // Tail: integrand = (d / (2 pi t))^{d/2} * sum_j c_j (d/t)^j + remainder.
    let order = 3usize;
    let series = scaled_power_series(d, order);
    let lead = (df / (2.0 * std::f64::consts::PI)).powf(df / 2.0);
    let mut tail = 0.0;
    for (j, &c) in series.iter().take(order + 1).enumerate() {
        // int_T^inf t^{-d/2 - j} dt
        let expo = df / 2.0 + j as f64 - 1.0;
        tail += lead * c * df.powi(j as i32) * cutoff.powf(-expo) / expo;
    }
    // First omitted term bounds the expansion remainder (empirically by a
    // wide margin at these cutoffs); double it for safety.
    let j = order + 1;
    let expo = df / 2.0 + j as f64 - 1.0;
    let remainder =
        2.0 * lead * series[j].abs() * df.powi(j as i32) * cutoff.powf(-expo) / expo;

    let error = quad_tol + remainder;
    if error > precision {
        return Err(Error::Parameter(format!(
            "requested precision {precision} unattainable at cutoff {cutoff} (error {error})"
        )));
    }
    Ok(Bracket {
        value: head + tail,
        error,
    })
}

/// Exact Green's function of the walk killed on exit from `D(r)`, by
/// conjugate-gradient solves of the killed-walk linear system. Sites are
/// indexed lexicographically inside the ball; solved columns are cached by
/// source site.
pub struct BallGreen<const D: usize> {
    radius: f64,
    sites: Vec<Site<D>>,
    index: HashMap<Site<D>, u32>,
    adjacency: Vec<[u32; 8]>, // 2D entries used; u32::MAX = killed
    columns: HashMap<Site<D>, Vec<f64>>,
}

impl<const D: usize> BallGreen<D> {
    pub fn new(r: f64) -> Result<Self> {
        assert!(D >= 2 && D <= 4, "killed-ball solver supports d in 2..=4");
        let sites: Vec<Site<D>> = ball_sites([0i64; D], r).collect();
        if sites.len() > EXACT_SITE_LIMIT {
            return Err(Error::Capacity {
                sites: sites.len(),
                limit: EXACT_SITE_LIMIT,
            });
        }
        let mut index = HashMap::with_capacity(sites.len());
        for (i, s) in sites.iter().enumerate() {
            index.insert(*s, i as u32);
        }
        let mut adjacency = vec![[u32::MAX; 8]; sites.len()];
        for (i, s) in sites.iter().enumerate() {
            for (k, nb) in neighbors(s).enumerate() {
                if let Some(&j) = index.get(&nb) {
                    adjacency[i][k] = j;
                }
            }
        }
        Ok(BallGreen {
            radius: r,
            sites,
            index,
            adjacency,
            columns: HashMap::new(),
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn site_count(&self) -> usize {
        self.sites.len()
    }

    pub fn contains(&self, x: &Site<D>) -> bool {
        self.index.contains_key(x)
    }

    fn require(&self, x: &Site<D>) -> Result<u32> {
        self.index.get(x).copied().ok_or_else(|| Error::RegionViolation {
            site: format!("{x:?}"),
            radius: self.radius,
        })
    }

    /// Apply `v -> (I - P) v` for the killed transition kernel.
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let inv2d = 1.0 / (2.0 * D as f64);
        for (i, row) in self.adjacency.iter().enumerate() {
            let mut acc = 0.0;
            for &j in row.iter().take(2 * D) {
                if j != u32::MAX {
                    acc += v[j as usize];
                }
            }
            out[i] = v[i] - inv2d * acc;
        }
    }

    /// Solve `(I - P) u = e_source` by conjugate gradients to a residual of
    /// 1e-13, caching the column.
    fn column(&mut self, source: &Site<D>) -> Result<&Vec<f64>> {
        let src = self.require(source)?;
        if !self.columns.contains_key(source) {
            let n = self.sites.len();
            let mut u = vec![0.0f64; n];
            let mut r = vec![0.0f64; n];
            r[src as usize] = 1.0;
            let mut p = r.clone();
            let mut ap = vec![0.0f64; n];
            let mut rs = 1.0f64;
            let tol2 = 1e-13f64 * 1e-13;
            let max_iters = 60_000;
            let mut converged = false;
            for _ in 0..max_iters {
                self.apply(&p, &mut ap);
                let pap: f64 = p.iter().zip(ap.iter()).map(|(a, b)| a * b).sum();
                let alpha = rs / pap;
                for i in 0..n {
                    u[i] += alpha * p[i];
                    r[i] -= alpha * ap[i];
                }
                let rs_new: f64 = r.iter().map(|x| x * x).sum();
                if rs_new < tol2 {
                    converged = true;
                    break;
                }
                let beta = rs_new / rs;
                for i in 0..n {
                    p[i] = r[i] + beta * p[i];
                }
                rs = rs_new;
            }
            assert!(converged, "conjugate gradients failed to reach tolerance");
            self.columns.insert(*source, u);
        }
        Ok(self.columns.get(source).unwrap())
    }

    /// `G_{D(r)}(x, y)`.
    pub fn value(&mut self, x: &Site<D>, y: &Site<D>) -> Result<f64> {
        let xi = self.require(x)?;
        let col = self.column(y)?;
        Ok(col[xi as usize])
    }

    /// Probability that the walk from `x` hits `y` before leaving the ball.
    pub fn hitting_prob(&mut self, x: &Site<D>, y: &Site<D>) -> Result<f64> {
        if x == y {
            return Ok(1.0);
        }
        let xi = self.require(x)?;
        let yi = self.require(y)?;
        let col = self.column(y)?;
        Ok(col[xi as usize] / col[yi as usize])
    }

    /// Max over interior sites of the defect in the harmonicity relation
    /// `G(x, y) = delta_xy + (2d)^{-1} sum_{z ~ x} G(z, y)`.
    pub fn harmonic_residual(&mut self, y: &Site<D>) -> Result<f64> {
        let yi = self.require(y)? as usize;
        let col = self.column(y)?.clone();
        let inv2d = 1.0 / (2.0 * D as f64);
        let mut worst = 0.0f64;
        for (i, row) in self.adjacency.iter().enumerate() {
            let mut acc = 0.0;
            for &j in row.iter().take(2 * D) {
                if j != u32::MAX {
                    acc += col[j as usize];
                }
            }
            let delta = if i == yi { 1.0 } else { 0.0 };
            worst = worst.max((col[i] - delta - inv2d * acc).abs());
        }
        Ok(worst)
    }
}

/// Monte Carlo estimate of `G_{D(r)}(x, y)`: mean number of visits to `y`
/// before exiting the ball, over `walks` independent walks from `x`.
pub fn green_ball_mc<const D: usize>(
    r: f64,
    x: &Site<D>,
    y: &Site<D>,
    walks: usize,
    stream: &mut Stream,
) -> crate::stats::StatsSummary {
    let r2 = r * r;
    let mut counts = Vec::with_capacity(walks);
    for _ in 0..walks {
        let mut pos = *x;
        let mut visits = if pos == *y { 1u64 } else { 0 };
        loop {
            step(&mut pos, stream);
            if (dist2(&pos, &[0i64; D]) as f64) > r2 {
                break;
            }
            if pos == *y {
                visits += 1;
            }
        }
        counts.push(visits as f64);
    }
    crate::stats::StatsSummary::from_sample(&counts, 0.95, "green-ball-mc").unwrap()
}

/// Monte Carlo estimate of the hitting probability `p_r(0, x)`.
pub fn hitting_prob_mc<const D: usize>(
    r: f64,
    target: &Site<D>,
    walks: usize,
    stream: &mut Stream,
) -> crate::stats::StatsSummary {
    let r2 = r * r;
    let mut hits = 0usize;
    for _ in 0..walks {
        let mut pos = [0i64; D];
        loop {
            step(&mut pos, stream);
            if pos == *target {
                hits += 1;
                break;
            }
            if (dist2(&pos, &[0i64; D]) as f64) > r2 {
                break;
            }
        }
    }
    crate::stats::StatsSummary::from_proportion(hits, walks, 0.95, "hitting-prob-mc").unwrap()
}

pub(crate) use crate::walk::random_step as step;

/// Method selector for the hitting-sum diagnostic.
pub enum HittingMethod {
    Exact,
    MonteCarlo { walks: usize },
}

/// The hitting sum `V_x`: the sum over deep traps `y` in `D_x(rho)` of the
/// probability that the walk from `x` hits `y` before leaving `D_x(rho)`.
/// The Monte Carlo route uses the identity `V_x = E[# distinct deep traps
/// visited before exit]`.
pub fn hitting_sum_v<const D: usize>(
    sets: &TrapSets<D>,
    x: &Site<D>,
    method: HittingMethod,
    stream: &mut Stream,
) -> Result<f64> {
    let rho = sets.scales().rho;
    match method {
        HittingMethod::Exact => {
            let mut solver = BallGreen::<D>::new(rho)?;
            let deep = sets.deep_in_ball(x, rho)?;
            let mut total = 0.0;
            for y in deep {
                let rel = relative_to(&y, x);
                if solver.contains(&rel) {
                    total += solver.hitting_prob(&[0i64; D], &rel)?;
                }
            }
            Ok(total)
        }
        HittingMethod::MonteCarlo { walks } => {
            let rho2 = rho * rho;
            let mut acc = 0.0f64;
            let mut visited: Vec<Site<D>> = Vec::new();
            for _ in 0..walks {
                visited.clear();
                let mut pos = *x;
                loop {
                    step(&mut pos, stream);
                    if (dist2(&pos, x) as f64) > rho2 {
                        break;
                    }
                    if sets.in_region(&pos)
                        && sets.is_deep(&pos)?
                        && !visited.contains(&pos)
                    {
                        visited.push(pos);
                    }
                }
                acc += visited.len() as f64;
            }
            Ok(acc / walks as f64)
        }
    }
}

fn relative_to<const D: usize>(y: &Site<D>, x: &Site<D>) -> Site<D> {
    let mut out = [0i64; D];
    for i in 0..D {
        out[i] = y[i] - x[i];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn green_free_first_term_dominates() {
        for d in [3, 4] {
            let g = green_free(d, 1e-4).unwrap();
            assert!(g.value >= 1.0);
        }
    }

    #[test]
    fn green_free_matches_watson_values() {
        let g3 = green_free(3, 1e-4).unwrap();
        assert!(g3.error <= 1e-4);
        assert!(g3.contains(1.5163860), "bracket {:?}", g3);
        assert_relative_eq!(g3.value, 1.516386059, max_relative = 3e-7);

        let g4 = green_free(4, 1e-4).unwrap();
        assert!(g4.contains(1.2394671), "bracket {:?}", g4);
    }

    #[test]
    fn green_free_diverges_below_three() {
        assert!(matches!(green_free(2, 1e-4), Err(Error::Divergent(2))));
        assert!(matches!(green_free(1, 1e-4), Err(Error::Divergent(1))));
    }

    #[test]
    fn green_free_brackets_nest() {
        // Larger cutoffs must give tighter brackets contained in looser ones.
        let loose = green_free_with_cutoff(3, 1e-2, 60.0).unwrap();
        let mid = green_free_with_cutoff(3, 1e-3, 150.0).unwrap();
        let tight = green_free_with_cutoff(3, 1e-4, 400.0).unwrap();
        assert!(loose.error > mid.error && mid.error > tight.error);
        assert!(loose.low() <= mid.low() && mid.high() <= loose.high());
        assert!(mid.low() <= tight.low() && tight.high() <= mid.high());
    }

    #[test]
    fn killed_green_small_ball_harmonicity() {
        let mut solver = BallGreen::<3>::new(6.0).unwrap();
        let y = [1i64, 0, 0];
        assert!(solver.harmonic_residual(&y).unwrap() < 1e-12);
    }

    #[test]
    fn killed_green_symmetry_and_positivity() {
        let mut solver = BallGreen::<3>::new(8.0).unwrap();
        let pairs = [
            ([0i64, 0, 0], [1i64, 2, 0]),
            ([3i64, 1, 1], [-2i64, 0, 4]),
            ([0i64, 0, 5], [0i64, 0, -5]),
        ];
        for (x, y) in pairs {
            let a = solver.value(&x, &y).unwrap();
            let b = solver.value(&y, &x).unwrap();
            assert!(a >= 0.0);
            assert!((a - b).abs() < 1e-11, "G({x:?},{y:?}) {a} != {b}");
        }
        // Diagonal at least one (the starting visit).
        assert!(solver.value(&[0, 0, 0], &[0, 0, 0]).unwrap() >= 1.0);
    }

    #[test]
    fn killed_green_monotone_in_radius() {
        let mut prev = 0.0;
        for r in [4.0, 8.0, 12.0] {
            let mut solver = BallGreen::<3>::new(r).unwrap();
            let g = solver.value(&[0, 0, 0], &[0, 0, 0]).unwrap();
            assert!(g > prev);
            prev = g;
        }
        assert!(prev < 1.5163861);
    }

    #[test]
    fn ratio_identity_is_algebraically_exact() {
        let mut solver = BallGreen::<3>::new(10.0).unwrap();
        for x in [[2i64, 1, 0], [4i64, -3, 1], [0i64, 0, 7]] {
            let p = solver.hitting_prob(&[0, 0, 0], &x).unwrap();
            let gxx = solver.value(&x, &x).unwrap();
            let g0x = solver.value(&[0, 0, 0], &x).unwrap();
            assert!((p * gxx - g0x).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn off_center_green_matches_decay_constant() {
        // G_{D(30)}(0, x) at |x| = 5 against a_3 (|x|^{-1} - r^{-1}),
        // a_3 = 3/(2 pi) ~ 0.4775, within the O(|x|^{-2}) envelope.
        let mut solver = BallGreen::<3>::new(30.0).unwrap();
        let x = [5i64, 0, 0];
        let g = solver.value(&[0, 0, 0], &x).unwrap();
        let a3 = a_d(3).unwrap();
        assert_relative_eq!(a3, 0.4775, max_relative = 1e-4);
        let predicted = a3 * (1.0 / 5.0 - 1.0 / 30.0);
        assert!(
            (g - predicted).abs() <= 0.1 / 25.0,
            "G(0,x) = {g} vs {predicted}"
        );
    }

    #[test]
    fn capacity_guard_triggers() {
        // d = 3, r = 70 has ~1.4e6 sites.
        assert!(matches!(
            BallGreen::<3>::new(70.0),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn mc_and_exact_green_agree() {
        let r = 8.0;
        let mut solver = BallGreen::<3>::new(r).unwrap();
        let mut stream = Stream::new(7, "green-mc", 0);
        for (x, y) in [([0i64, 0, 0], [0i64, 0, 0]), ([0i64, 0, 0], [2i64, 1, 0])] {
            let exact = solver.value(&x, &y).unwrap();
            let mc = green_ball_mc(r, &x, &y, 40_000, &mut stream);
            assert!(
                (mc.estimate - exact).abs() <= 4.0 * mc.std_error,
                "exact {exact} mc {} +- {}",
                mc.estimate,
                mc.std_error
            );
        }
    }

    #[test]
    fn mc_and_exact_hitting_agree() {
        // Two-method cross-check on a spread of (target, radius) pairs.
        let mut stream = Stream::new(8, "hit-mc", 0);
        let cases: [(f64, [i64; 3]); 6] = [
            (10.0, [2, 0, 0]),
            (10.0, [3, 3, 0]),
            (10.0, [1, 2, 2]),
            (14.0, [5, 0, 0]),
            (14.0, [2, 2, 1]),
            (8.0, [0, 4, 0]),
        ];
        for (r, target) in cases {
            let mut solver = BallGreen::<3>::new(r).unwrap();
            let exact = solver.hitting_prob(&[0, 0, 0], &target).unwrap();
            let mc = hitting_prob_mc(r, &target, 40_000, &mut stream);
            assert!(
                (mc.estimate - exact).abs() <= 4.0 * mc.std_error.max(1e-4),
                "target {target:?} r {r}: exact {exact} mc {} +- {}",
                mc.estimate,
                mc.std_error
            );
        }
    }

    #[test]
    fn hitting_sum_empty_and_single() {
        use crate::env::Environment;
        use crate::scales::scales;
        use crate::traps::classify_traps;

        let sc = scales(8, 3, 0.5).unwrap();
        let flat: Environment<3> = Environment::constant(1.0, 0, &sc, 2.0).unwrap();
        let sets = classify_traps(&flat, &sc, 0.5, 4.0).unwrap();
        let mut stream = Stream::new(9, "vx", 0);
        let v = hitting_sum_v(&sets, &[0, 0, 0], HittingMethod::Exact, &mut stream).unwrap();
        assert_eq!(v, 0.0);

        // One planted trap: the sum reduces to a single hitting probability.
        let y = [3i64, 0, 0];
        let planted: Environment<3> = Environment::constant(1.0, 0, &sc, 2.0)
            .unwrap()
            .with_overrides([(y, 0.9 * sc.g)]);
        let sets = classify_traps(&planted, &sc, 0.5, 4.0).unwrap();
        let v = hitting_sum_v(&sets, &[0, 0, 0], HittingMethod::Exact, &mut stream).unwrap();
        let mut solver = BallGreen::<3>::new(sc.rho).unwrap();
        let p = solver.hitting_prob(&[0, 0, 0], &y).unwrap();
        assert_relative_eq!(v, p, max_relative = 1e-12);

        let v_mc =
            hitting_sum_v(&sets, &[0, 0, 0], HittingMethod::MonteCarlo { walks: 60_000 }, &mut stream)
                .unwrap();
        assert!((v_mc - p).abs() < 0.01, "mc {v_mc} exact {p}");
    }
}
