//! Lattice sites, balls and boxes in `Z^d`.
//!
//! "Ball" means the Euclidean ball intersected with the lattice; "box" the
//! axis-aligned cube. Distances are Euclidean throughout; comparisons against
//! fractional radii are done on squared integers so membership is exact.

/// A lattice site in `Z^D`.
pub type Site<const D: usize> = [i64; D];

/// Squared Euclidean distance.
#[inline]
pub fn dist2<const D: usize>(a: &Site<D>, b: &Site<D>) -> i128 {
    let mut s = 0i128;
    for i in 0..D {
        let d = (a[i] - b[i]) as i128;
        s += d * d;
    }
    s
}

#[inline]
pub fn norm2<const D: usize>(a: &Site<D>) -> i128 {
    dist2(a, &[0; D])
}

#[inline]
pub fn norm<const D: usize>(a: &Site<D>) -> f64 {
    (norm2(a) as f64).sqrt()
}

/// `|a - b| <= r` with exact integer arithmetic on the left-hand side.
#[inline]
pub fn within<const D: usize>(a: &Site<D>, b: &Site<D>, r: f64) -> bool {
    (dist2(a, b) as f64) <= r * r
}

/// The 2D nearest neighbors of a site.
pub fn neighbors<const D: usize>(x: &Site<D>) -> impl Iterator<Item = Site<D>> + '_ {
    (0..D).flat_map(move |axis| {
        [1i64, -1].into_iter().map(move |step| {
            let mut y = *x;
            y[axis] += step;
            y
        })
    })
}

/// Iterate over every site of the ball `D_center(r)`.
pub fn ball_sites<const D: usize>(center: Site<D>, r: f64) -> BallIter<D> {
    let ri = r.floor() as i64;
    let mut cursor = center;
    for c in cursor.iter_mut() {
        *c -= ri;
    }
    BallIter {
        center,
        r2: r * r,
        lo: ri,
        cursor,
        done: false,
    }
}

/// Number of sites in `D(r)` (exact count by slicing; used for capacity checks).
pub fn ball_site_count<const D: usize>(r: f64) -> usize {
    ball_sites::<D>([0; D], r).count()
}

pub struct BallIter<const D: usize> {
    center: Site<D>,
    r2: f64,
    lo: i64,
    cursor: Site<D>,
    done: bool,
}

impl<const D: usize> Iterator for BallIter<D> {
    type Item = Site<D>;

    fn next(&mut self) -> Option<Site<D>> {
        while !self.done {
            let current = self.cursor;
            // advance odometer
            let mut axis = D;
            loop {
                if axis == 0 {
                    self.done = true;
                    break;
                }
                axis -= 1;
                self.cursor[axis] += 1;
                if self.cursor[axis] - self.center[axis] <= self.lo {
                    break;
                }
                self.cursor[axis] = self.center[axis] - self.lo;
            }
            if (dist2(&current, &self.center) as f64) <= self.r2 {
                return Some(current);
            }
        }
        None
    }
}
