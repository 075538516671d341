//! Parabolic rectangles `Q(x, L) x (t - L^p, t + L^p)`, their halves,
//! quarters, and fragments, parabolic scalings, the parabolic quasi-metric,
//! and exact box measures.
//!
//! All boxes are half-open (closed at the past/low face) so that clipped
//! measures tile without double counting. "Center" of a sub-region means the
//! center of the corresponding metric ball.

use crate::error::{Error, Result};

/// Default fragment scale: fragments are the (1/8)-parabolic-scaling of the
/// quarters. Configurable where fragments are consumed.
pub const FRAGMENT_FACTOR: f64 = 0.125;

/// A point of the space-time cylinder; `t` carries length^p units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParabolicPoint {
    pub x: [f64; 2],
    pub t: f64,
}

impl ParabolicPoint {
    pub fn new(x: [f64; 2], t: f64) -> Self {
        ParabolicPoint { x, t }
    }
}

/// `max(||x_a - x_b||_inf, C_p |t_a - t_b|^(1/p))` over the first `n`
/// spatial coordinates.
pub fn parabolic_distance(a: ParabolicPoint, b: ParabolicPoint, n: usize, p: f64, c_p: f64) -> f64 {
    let mut spatial = 0.0f64;
    for d in 0..n {
        spatial = spatial.max((a.x[d] - b.x[d]).abs());
    }
    spatial.max(c_p * (a.t - b.t).abs().powf(1.0 / p))
}

/// The value of C_p for which the upper quarter is a metric ball.
pub fn ball_c_p(p: f64) -> f64 {
    2f64.powf((2.0 - p) / p)
}

/// Half-open axis-aligned space-time box. Spatial coordinates beyond `n` are
/// inert and held at zero extent conventions by the constructors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaceTimeBox {
    pub n: usize,
    pub x_lo: [f64; 2],
    pub x_hi: [f64; 2],
    pub t_lo: f64,
    pub t_hi: f64,
}

impl SpaceTimeBox {
    pub fn contains(&self, pt: ParabolicPoint) -> bool {
        (0..self.n).all(|d| self.x_lo[d] <= pt.x[d] && pt.x[d] < self.x_hi[d])
            && self.t_lo <= pt.t
            && pt.t < self.t_hi
    }

    /// Product of side extents; zero when any extent is nonpositive.
    pub fn measure(&self) -> f64 {
        let mut m = (self.t_hi - self.t_lo).max(0.0);
        for d in 0..self.n {
            m *= (self.x_hi[d] - self.x_lo[d]).max(0.0);
        }
        m
    }

    /// Intersection with another box (same dimension).
    pub fn intersect(&self, other: &SpaceTimeBox) -> SpaceTimeBox {
        let mut x_lo = [0.0; 2];
        let mut x_hi = [0.0; 2];
        for d in 0..self.n {
            x_lo[d] = self.x_lo[d].max(other.x_lo[d]);
            x_hi[d] = self.x_hi[d].min(other.x_hi[d]);
        }
        SpaceTimeBox {
            n: self.n,
            x_lo,
            x_hi,
            t_lo: self.t_lo.max(other.t_lo),
            t_hi: self.t_hi.min(other.t_hi),
        }
    }

    /// Measure after clipping to a cylinder given as a box.
    pub fn measure_clipped(&self, cylinder: &SpaceTimeBox) -> f64 {
        self.intersect(cylinder).measure()
    }
}

/// Sign selector for the upper/lower halves, quarters and fragments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeSide {
    Upper,
    Lower,
}

/// Lag selector for the power-oscillation functionals: halves or quarters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LagSet {
    Halves,
    Quarters,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParabolicRectangle {
    pub center_x: [f64; 2],
    pub center_t: f64,
    /// Spatial sidelength L.
    pub l: f64,
    pub p: f64,
    pub n: usize,
}

/// The six generated sub-regions of a rectangle.
#[derive(Clone, Debug)]
pub struct SubRegions {
    pub upper_half: SpaceTimeBox,
    pub lower_half: SpaceTimeBox,
    pub upper_quarter: SpaceTimeBox,
    pub lower_quarter: SpaceTimeBox,
    pub upper_fragment: SpaceTimeBox,
    pub lower_fragment: SpaceTimeBox,
}

impl ParabolicRectangle {
    pub fn new(center_x: [f64; 2], center_t: f64, l: f64, p: f64, n: usize) -> Result<Self> {
        if !(l > 0.0) {
            return Err(Error::InvalidParameter(format!("sidelength L = {l}")));
        }
        if !(p > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "exponent p = {p} must exceed 1"
            )));
        }
        if n != 1 && n != 2 {
            return Err(Error::InvalidParameter(format!("dimension n = {n}")));
        }
        Ok(ParabolicRectangle {
            center_x,
            center_t,
            l,
            p,
            n,
        })
    }

    fn spatial_box(&self, side: f64) -> ([f64; 2], [f64; 2]) {
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        for d in 0..self.n {
            lo[d] = self.center_x[d] - side / 2.0;
            hi[d] = self.center_x[d] + side / 2.0;
        }
        (lo, hi)
    }

    fn boxed(&self, side: f64, t_lo: f64, t_hi: f64) -> SpaceTimeBox {
        let (x_lo, x_hi) = self.spatial_box(side);
        SpaceTimeBox {
            n: self.n,
            x_lo,
            x_hi,
            t_lo,
            t_hi,
        }
    }

    pub fn temporal_half_extent(&self) -> f64 {
        self.l.powf(self.p)
    }

    /// The whole rectangle as a box.
    pub fn whole(&self) -> SpaceTimeBox {
        let e = self.temporal_half_extent();
        self.boxed(self.l, self.center_t - e, self.center_t + e)
    }

    /// Upper or lower half `R^+/-`.
    pub fn half(&self, side: TimeSide) -> SpaceTimeBox {
        let e = self.temporal_half_extent();
        match side {
            TimeSide::Upper => self.boxed(self.l, self.center_t, self.center_t + e),
            TimeSide::Lower => self.boxed(self.l, self.center_t - e, self.center_t),
        }
    }

    /// Upper or lower quarter `S^+/-`.
    pub fn quarter(&self, side: TimeSide) -> SpaceTimeBox {
        let e = self.temporal_half_extent();
        match side {
            TimeSide::Upper => self.boxed(self.l, self.center_t + 0.5 * e, self.center_t + e),
            TimeSide::Lower => self.boxed(self.l, self.center_t - e, self.center_t - 0.5 * e),
        }
    }

    /// Parabolic scaling of the whole rectangle.
    pub fn scaled(&self, lambda: f64) -> Result<ParabolicRectangle> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("scale lambda = {lambda}")));
        }
        ParabolicRectangle::new(
            self.center_x,
            self.center_t,
            lambda * self.l,
            self.p,
            self.n,
        )
    }

    /// Parabolic scaling of a quarter: spatial cube `lambda Q` around the
    /// rectangle center, temporal interval of half-length `(lambda L)^p / 4`
    /// around the quarter's ball center `t +/- (3/4) L^p`.
    pub fn scaled_quarter(&self, lambda: f64, side: TimeSide) -> SpaceTimeBox {
        let e = self.temporal_half_extent();
        let se = (lambda * self.l).powf(self.p) / 4.0;
        let tc = match side {
            TimeSide::Upper => self.center_t + 0.75 * e,
            TimeSide::Lower => self.center_t - 0.75 * e,
        };
        self.boxed(lambda * self.l, tc - se, tc + se)
    }

    /// Fragment with a configurable scale factor (default 1/8).
    pub fn fragment(&self, side: TimeSide, factor: f64) -> SpaceTimeBox {
        self.scaled_quarter(factor, side)
    }

    /// The selected pair of lag sets.
    pub fn lag_pair(&self, lag: LagSet) -> (SpaceTimeBox, SpaceTimeBox) {
        match lag {
            LagSet::Halves => (self.half(TimeSide::Upper), self.half(TimeSide::Lower)),
            LagSet::Quarters => (self.quarter(TimeSide::Upper), self.quarter(TimeSide::Lower)),
        }
    }

    pub fn sub_regions(&self) -> SubRegions {
        SubRegions {
            upper_half: self.half(TimeSide::Upper),
            lower_half: self.half(TimeSide::Lower),
            upper_quarter: self.quarter(TimeSide::Upper),
            lower_quarter: self.quarter(TimeSide::Lower),
            upper_fragment: self.fragment(TimeSide::Upper, FRAGMENT_FACTOR),
            lower_fragment: self.fragment(TimeSide::Lower, FRAGMENT_FACTOR),
        }
    }

    /// `|R| = L^n * 2 L^p`, closed form. Factors multiply in the same order
    /// a box-measure computation would, so the two routes agree to the bit
    /// when the extents are exact.
    pub fn measure(&self) -> f64 {
        let mut m = 2.0 * self.l.powf(self.p);
        for _ in 0..self.n {
            m *= self.l;
        }
        m
    }

    /// Parse a rectangle literal `cx[,cy],t,L,p`; dimension from arity.
    pub fn parse(s: &str) -> Result<ParabolicRectangle> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad rectangle literal '{s}'")))
            })
            .collect::<Result<_>>()?;
        match parts.len() {
            4 => ParabolicRectangle::new([parts[0], 0.0], parts[1], parts[2], parts[3], 1),
            5 => ParabolicRectangle::new([parts[0], parts[1]], parts[2], parts[3], parts[4], 2),
            _ => Err(Error::Parse(format!(
                "rectangle literal '{s}' needs 4 or 5 fields"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ulps_apart(a: f64, b: f64) -> u64 {
        let (ia, ib) = (a.to_bits() as i64, b.to_bits() as i64);
        ia.abs_diff(ib)
    }

    #[test]
    fn metric_basics() {
        let a = ParabolicPoint::new([0.0, 0.0], 0.0);
        assert_eq!(parabolic_distance(a, a, 2, 2.0, 1.0), 0.0);
        let b = ParabolicPoint::new([1.0, 0.0], 4.0);
        assert_eq!(parabolic_distance(a, b, 1, 2.0, 1.0), 2.0);
    }

    #[test]
    fn metric_axioms_random_triples() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            let p = 1.0 + 2.0 * next();
            let cp = 0.5 + next();
            let pt = |next: &mut dyn FnMut() -> f64| {
                ParabolicPoint::new([4.0 * next() - 2.0, 4.0 * next() - 2.0], 4.0 * next() - 2.0)
            };
            let (a, b, c) = (pt(&mut next), pt(&mut next), pt(&mut next));
            let dab = parabolic_distance(a, b, 2, p, cp);
            let dba = parabolic_distance(b, a, 2, p, cp);
            assert_eq!(dab.to_bits(), dba.to_bits());
            let dac = parabolic_distance(a, c, 2, p, cp);
            let dcb = parabolic_distance(c, b, 2, p, cp);
            assert!(dab <= dac + dcb + 1e-15);
        }
    }

    #[test]
    fn explicit_subregions_1d() {
        let r = ParabolicRectangle::new([0.0, 0.0], 0.0, 1.0, 2.0, 1).unwrap();
        let up = r.half(TimeSide::Upper);
        assert_eq!((up.x_lo[0], up.x_hi[0]), (-0.5, 0.5));
        assert_eq!((up.t_lo, up.t_hi), (0.0, 1.0));
        let sq = r.quarter(TimeSide::Upper);
        assert_eq!((sq.t_lo, sq.t_hi), (0.5, 1.0));
        let sl = r.quarter(TimeSide::Lower);
        assert_eq!((sl.t_lo, sl.t_hi), (-1.0, -0.5));
        assert_eq!(r.measure(), 2.0);
    }

    #[test]
    fn fragment_to_quarter_measure_ratio() {
        for (n, p) in [(1usize, 2.0f64), (2, 1.5), (2, 3.0)] {
            let r = ParabolicRectangle::new([0.1, -0.2], 0.3, 0.7, p, n).unwrap();
            let s = r.quarter(TimeSide::Upper).measure();
            let u = r.fragment(TimeSide::Upper, 0.125).measure();
            let expect = 0.125f64.powf(n as f64 + p);
            assert!((u / s - expect).abs() <= 1e-12 * expect);
        }
    }

    #[test]
    fn ball_membership_equivalence() {
        // upper quarter == metric ball of radius L/2 centered at
        // (x, t + (3/4) L^p) when C_p = 2^((2-p)/p)
        let mut state = 7u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for &(n, p) in &[(1usize, 2.0f64), (2, 1.5), (2, 2.7)] {
            let r = ParabolicRectangle::new([0.0, 0.0], 0.0, 1.3, p, n).unwrap();
            let sq = r.quarter(TimeSide::Upper);
            let cp = ball_c_p(p);
            let ball_center =
                ParabolicPoint::new(r.center_x, r.center_t + 0.75 * r.temporal_half_extent());
            let mut mismatches = 0;
            for _ in 0..10_000 {
                let pt = ParabolicPoint::new(
                    [3.0 * next() - 1.5, 3.0 * next() - 1.5],
                    4.0 * next() - 1.0,
                );
                let in_box = sq.contains(pt);
                let in_ball = parabolic_distance(pt, ball_center, n, p, cp) < r.l / 2.0;
                if in_box != in_ball {
                    mismatches += 1;
                }
            }
            assert_eq!(mismatches, 0, "n = {n}, p = {p}");
        }
    }

    #[test]
    fn scaling_identity_and_quarter() {
        let r = ParabolicRectangle::new([0.25, 0.0], 1.0, 0.5, 2.0, 1).unwrap();
        assert_eq!(r.scaled(1.0).unwrap(), r);
        // 1/8-scaled quarter equals the fragment, definitionally
        let u = r.fragment(TimeSide::Upper, 0.125);
        let s = r.scaled_quarter(0.125, TimeSide::Upper);
        assert_eq!(u, s);
    }

    #[test]
    fn clipped_measures() {
        let r = ParabolicRectangle::new([0.0, 0.0], 0.0, 1.0, 2.0, 1).unwrap();
        let whole = r.whole();
        assert_eq!(whole.measure(), 2.0);
        let far = SpaceTimeBox {
            n: 1,
            x_lo: [10.0, 0.0],
            x_hi: [11.0, 0.0],
            t_lo: 0.0,
            t_hi: 1.0,
        };
        assert_eq!(whole.measure_clipped(&far), 0.0);
    }

    proptest! {
        #[test]
        fn measure_formulas_hold(
            l in 0.05f64..4.0,
            p in 1.05f64..3.5,
            n in 1usize..3,
        ) {
            // centered at the origin the half-open extents are exact, so the
            // closed forms match the product of extents to the last bit
            let r = ParabolicRectangle::new([0.0, 0.0], 0.0, l, p, n).unwrap();
            let lp = l.powf(p);
            let closed = |t_extent: f64, side: f64| {
                let mut m = t_extent;
                for _ in 0..n {
                    m *= side;
                }
                m
            };
            prop_assert!(ulps_apart(r.measure(), closed(2.0 * lp, l)) <= 1);
            prop_assert!(ulps_apart(r.whole().measure(), closed(2.0 * lp, l)) <= 1);
            prop_assert!(ulps_apart(r.half(TimeSide::Upper).measure(), closed(lp, l)) <= 1);
            prop_assert!(ulps_apart(r.quarter(TimeSide::Upper).measure(), closed(lp / 2.0, l)) <= 1);
            prop_assert!(ulps_apart(r.quarter(TimeSide::Lower).measure(), closed(lp / 2.0, l)) <= 1);
            // the fragment's box extent subtracts endpoints of size 3/4 L^p,
            // so the budget carries that cancellation scale
            let u = r.fragment(TimeSide::Upper, 0.125).measure();
            let u_expect = closed((l / 8.0).powf(p) / 2.0, l / 8.0);
            let cancel_scale = closed(0.75 * lp, l / 8.0);
            prop_assert!((u - u_expect).abs() <= 8.0 * f64::EPSILON * (u_expect + cancel_scale));
        }

        #[test]
        fn scale_roundtrip(
            l in 0.05f64..4.0,
            p in 1.05f64..3.5,
            lambda in 0.1f64..8.0,
        ) {
            let r = ParabolicRectangle::new([0.3, -0.1], 0.7, l, p, 2).unwrap();
            let back = r.scaled(lambda).unwrap().scaled(1.0 / lambda).unwrap();
            prop_assert!(ulps_apart(back.l, r.l) <= 1);
            prop_assert_eq!(back.center_x, r.center_x);
            prop_assert_eq!(back.center_t, r.center_t);
        }

        #[test]
        fn dilate_nesting(
            l in 0.05f64..2.0,
            p in 1.05f64..3.5,
            s1 in 1.0f64..2.0,
            extra in 0.0f64..2.0,
            px in -3.0f64..3.0,
            pt in -9.0f64..9.0,
        ) {
            // sigma R inside sigma' R for sigma <= sigma', on sampled points
            let r = ParabolicRectangle::new([0.0, 0.0], 0.0, l, p, 1).unwrap();
            let small = r.scaled(s1).unwrap().whole();
            let big = r.scaled(s1 + extra).unwrap().whole();
            let q = ParabolicPoint::new([px, 0.0], pt);
            if small.contains(q) {
                prop_assert!(big.contains(q));
            }
        }
    }

    #[test]
    fn rectangle_literal_parsing() {
        let r = ParabolicRectangle::parse("0.5,1.0,0.25,2.0").unwrap();
        assert_eq!(r.n, 1);
        assert_eq!(r.center_t, 1.0);
        let r2 = ParabolicRectangle::parse("0.5,0.5,1.0,0.25,2.0").unwrap();
        assert_eq!(r2.n, 2);
        assert!(ParabolicRectangle::parse("1,2,3").is_err());
    }
}
