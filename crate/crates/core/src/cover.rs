//! Whitney-type spatial covers via the greedy 5r construction: seed cubes
//! sized by distance to the boundary, select a maximal disjoint subfamily in
//! decreasing size order, expand by 5.

use crate::error::{Error, Result};
use crate::grid::{Cell, DistanceField, SpatialDomain};

/// Axis-aligned spatial cube, full sidelength `l`, center `c`.
#[derive(Clone, Copy, Debug)]
pub struct SpatialCube {
    pub center: [f64; 2],
    pub l: f64,
}

impl SpatialCube {
    pub fn contains(&self, n: usize, p: [f64; 2]) -> bool {
        (0..n).all(|d| (p[d] - self.center[d]).abs() < self.l / 2.0)
    }

    fn disjoint_from(&self, n: usize, other: &SpatialCube) -> bool {
        (0..n).any(|d| (self.center[d] - other.center[d]).abs() >= (self.l + other.l) / 2.0)
    }
}

#[derive(Clone, Debug)]
pub struct SpatialCover {
    /// Expanded cubes `5 Q_i`; their union covers every interior cell center.
    pub cubes: Vec<SpatialCube>,
    /// Max over interior cell centers of the number of covering cubes.
    pub max_overlap: usize,
    pub mean_overlap: f64,
}

/// Greedy 5r-covering. Every interior cell seeds a candidate cube with
/// `5 l_y = min(beta d(y), cap)`; candidates are taken largest-first, kept if
/// disjoint from all kept cubes, and the kept cubes are returned expanded by
/// 5. When `first` is given, the candidate at that point is selected before
/// all others.
pub fn whitney_cover(
    dom: &SpatialDomain,
    df: &DistanceField,
    beta: f64,
    cap: f64,
    first: Option<[f64; 2]>,
) -> Result<SpatialCover> {
    if !(0.0 < beta && beta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "beta = {beta} outside (0,1)"
        )));
    }
    if !(cap > 0.0) {
        return Err(Error::InvalidParameter(format!("cap = {cap} must be > 0")));
    }
    let n = dom.dim();
    let seed = |c: Cell| -> SpatialCube {
        SpatialCube {
            center: dom.center(c),
            l: (beta * df.value(dom, c)).min(cap) / 5.0,
        }
    };
    let mut candidates: Vec<(Cell, f64)> = dom.interior_cells().map(|c| (c, seed(c).l)).collect();
    // largest first; ties by cell index for determinism
    candidates.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| (a.0.iy, a.0.ix).cmp(&(b.0.iy, b.0.ix)))
    });

    let mut kept: Vec<SpatialCube> = Vec::new();
    // bucket index over kept cubes for the disjointness test
    let bucket = cap.max(dom.h());
    let key = |p: [f64; 2]| -> (i64, i64) {
        (
            (p[0] / bucket).floor() as i64,
            (p[1] / bucket).floor() as i64,
        )
    };
    let mut buckets: std::collections::HashMap<(i64, i64), Vec<usize>> =
        std::collections::HashMap::new();
    let push = |kept: &mut Vec<SpatialCube>,
                buckets: &mut std::collections::HashMap<(i64, i64), Vec<usize>>,
                q: SpatialCube| {
        let id = kept.len();
        kept.push(q);
        buckets.entry(key(q.center)).or_default().push(id);
    };
    let disjoint_from_kept = |kept: &[SpatialCube],
                              buckets: &std::collections::HashMap<(i64, i64), Vec<usize>>,
                              q: &SpatialCube|
     -> bool {
        let (kx, ky) = key(q.center);
        for bx in kx - 1..=kx + 1 {
            for by in ky - 1..=ky + 1 {
                if let Some(ids) = buckets.get(&(bx, by)) {
                    for &i in ids {
                        if !q.disjoint_from(n, &kept[i]) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    };

    if let Some(p) = first {
        let c = dom.nearest_interior_cell(p[0], p[1])?;
        push(&mut kept, &mut buckets, seed(c));
    }
    for (c, _) in &candidates {
        let q = seed(*c);
        if disjoint_from_kept(&kept, &buckets, &q) {
            push(&mut kept, &mut buckets, q);
        }
    }

    let cubes: Vec<SpatialCube> = kept
        .iter()
        .map(|q| SpatialCube {
            center: q.center,
            l: 5.0 * q.l,
        })
        .collect();

    // Overlap statistics over interior cell centers; also verifies coverage.
    let mut max_overlap = 0usize;
    let mut sum = 0usize;
    let mut cells = 0usize;
    for c in dom.interior_cells() {
        let p = dom.center(c);
        // closed containment here: points on a cube face still count as
        // covered, which matches the Vitali argument on cell centers
        let count = cubes
            .iter()
            .filter(|q| (0..n).all(|d| (p[d] - q.center[d]).abs() <= q.l / 2.0))
            .count();
        if count == 0 {
            return Err(Error::InvalidParameter(format!(
                "cover construction left cell {c:?} uncovered"
            )));
        }
        max_overlap = max_overlap.max(count);
        sum += count;
        cells += 1;
    }
    Ok(SpatialCover {
        cubes,
        max_overlap,
        mean_overlap: sum as f64 / cells as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::distance_to_boundary;

    #[test]
    fn parameter_validation() {
        let dom = SpatialDomain::disk(0.0, 0.0, 0.5, 1.0 / 16.0).unwrap();
        let df = distance_to_boundary(&dom).unwrap();
        assert!(whitney_cover(&dom, &df, 0.0, 1.0, None).is_err());
        assert!(whitney_cover(&dom, &df, 1.5, 1.0, None).is_err());
        assert!(whitney_cover(&dom, &df, 0.5, 0.0, None).is_err());
    }

    #[test]
    fn covers_and_shrunk_disjoint() {
        let dom = SpatialDomain::disk(0.0, 0.0, 0.5, 1.0 / 32.0).unwrap();
        let df = distance_to_boundary(&dom).unwrap();
        let cover = whitney_cover(&dom, &df, 0.5, 0.25, Some([0.0, 0.0])).unwrap();
        // construction already asserts coverage of every interior center
        assert!(cover.max_overlap >= 1);
        // shrunk cubes pairwise disjoint
        let shrunk: Vec<SpatialCube> = cover
            .cubes
            .iter()
            .map(|q| SpatialCube {
                center: q.center,
                l: q.l / 5.0,
            })
            .collect();
        for (i, a) in shrunk.iter().enumerate() {
            for b in shrunk.iter().skip(i + 1) {
                assert!(a.disjoint_from(2, b));
            }
        }
        // first cube centered at the distinguished point
        let z = dom.nearest_interior_cell(0.0, 0.0).unwrap();
        let zc = dom.center(z);
        assert_eq!(cover.cubes[0].center, zc);
    }

    #[test]
    fn overlap_bounded_on_disk() {
        let dom = SpatialDomain::disk(0.0, 0.0, 0.5, 1.0 / 48.0).unwrap();
        let df = distance_to_boundary(&dom).unwrap();
        let cover = whitney_cover(&dom, &df, 0.5, 0.2, None).unwrap();
        // direct max-overlap count as oracle; dimensional bound
        assert!(
            cover.max_overlap <= 48,
            "max overlap {} too large",
            cover.max_overlap
        );
    }

    #[test]
    fn interval_cover() {
        let dom = SpatialDomain::interval(0.0, 1.0, 1.0 / 64.0).unwrap();
        let df = distance_to_boundary(&dom).unwrap();
        let cover = whitney_cover(&dom, &df, 0.5, 0.5, None).unwrap();
        assert!(cover.max_overlap <= 16);
    }
}
