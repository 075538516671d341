//! Quasihyperbolic metric on a discretized domain: single-source shortest
//! paths on the grid graph with density 1/d, geodesic extraction, and the
//! boundary-condition fit `k(z, y) <= K log(K / d(y))`.
//!
//! Edge weight between adjacent cell centers a, b is the Euclidean edge
//! length times the trapezoidal average of 1/d at the endpoints.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::grid::{Cell, DistanceField, SpatialDomain};

const NO_PRED: u32 = u32::MAX;

/// Single-source quasihyperbolic distances plus predecessor map.
#[derive(Clone, Debug)]
pub struct QHResult {
    pub source: Cell,
    dist: Vec<f64>,
    pred: Vec<u32>,
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    cost: f64,
    node: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed for a min-heap; ties broken on node index for determinism
        other
            .cost
            .partial_cmp(&self.cost)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn edge_weight(
    dom: &SpatialDomain,
    inv_d: &[f64],
    from: usize,
    to: usize,
    dx: isize,
    dy: isize,
) -> f64 {
    let len = if dx != 0 && dy != 0 {
        dom.h() * std::f64::consts::SQRT_2
    } else {
        dom.h()
    };
    len * 0.5 * (inv_d[from] + inv_d[to])
}

/// Dijkstra from the interior cell nearest to `(x0, y0)`.
pub fn quasihyperbolic_distances(
    dom: &SpatialDomain,
    df: &DistanceField,
    x0: f64,
    y0: f64,
) -> Result<QHResult> {
    let source = dom.nearest_interior_cell(x0, y0)?;
    Ok(quasihyperbolic_from_cell(dom, df, source))
}

/// Dijkstra rooted at an interior cell.
pub fn quasihyperbolic_from_cell(
    dom: &SpatialDomain,
    df: &DistanceField,
    source: Cell,
) -> QHResult {
    let total = dom.nx() * dom.ny();
    let inv_d: Vec<f64> = df
        .values()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 })
        .collect();
    let mut dist = vec![f64::INFINITY; total];
    let mut pred = vec![NO_PRED; total];
    let mut heap = BinaryHeap::new();
    let s = dom.idx(source);
    dist[s] = 0.0;
    heap.push(HeapEntry {
        cost: 0.0,
        node: s as u32,
    });
    let offsets = dom.neighbor_offsets();
    while let Some(HeapEntry { cost, node }) = heap.pop() {
        let u = node as usize;
        if cost > dist[u] {
            continue;
        }
        let (ix, iy) = (u % dom.nx(), u / dom.nx());
        for &(dx, dy) in offsets {
            let (jx, jy) = (ix as isize + dx, iy as isize + dy);
            if jx < 0 || jy < 0 || jx as usize >= dom.nx() || jy as usize >= dom.ny() {
                continue;
            }
            let c = Cell {
                ix: jx as usize,
                iy: jy as usize,
            };
            if !dom.is_interior(c) {
                continue;
            }
            let v = dom.idx(c);
            let next = cost + edge_weight(dom, &inv_d, u, v, dx, dy);
            if next < dist[v] {
                dist[v] = next;
                pred[v] = u as u32;
                heap.push(HeapEntry {
                    cost: next,
                    node: v as u32,
                });
            }
        }
    }
    QHResult { source, dist, pred }
}

impl QHResult {
    pub fn distance(&self, dom: &SpatialDomain, c: Cell) -> f64 {
        self.dist[dom.idx(c)]
    }

    pub fn distance_at(&self, dom: &SpatialDomain, x: f64, y: f64) -> Result<f64> {
        let c = dom.nearest_interior_cell(x, y)?;
        Ok(self.dist[dom.idx(c)])
    }

    pub fn distances(&self) -> &[f64] {
        &self.dist
    }
}

/// Geodesic polyline from `y` back to the source, returned source-first as a
/// list of cells. Errors when `y` was never reached (disconnected graph).
pub fn geodesic(dom: &SpatialDomain, qh: &QHResult, y: Cell) -> Result<Vec<Cell>> {
    if !dom.is_interior(y) || !qh.dist[dom.idx(y)].is_finite() {
        return Err(Error::GeodesicUnavailable { ix: y.ix, iy: y.iy });
    }
    let mut rev = vec![y];
    let mut cur = dom.idx(y);
    let src = dom.idx(qh.source);
    while cur != src {
        let p = qh.pred[cur];
        if p == NO_PRED {
            return Err(Error::GeodesicUnavailable { ix: y.ix, iy: y.iy });
        }
        cur = p as usize;
        rev.push(Cell {
            ix: cur % dom.nx(),
            iy: cur / dom.nx(),
        });
    }
    rev.reverse();
    Ok(rev)
}

/// Weighted length of a cell polyline. Summed source-to-end, which is the
/// same association order Dijkstra used, so the value reproduces `k` exactly.
pub fn polyline_weighted_length(dom: &SpatialDomain, df: &DistanceField, path: &[Cell]) -> f64 {
    let inv = |c: Cell| 1.0 / df.value(dom, c);
    let mut acc = 0.0;
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        let dx = a.ix as isize - b.ix as isize;
        let dy = a.iy as isize - b.iy as isize;
        let len = if dx != 0 && dy != 0 {
            dom.h() * std::f64::consts::SQRT_2
        } else {
            dom.h()
        };
        acc += len * 0.5 * (inv(a) + inv(b));
    }
    acc
}

/// Euclidean arclength of a cell polyline.
pub fn polyline_arclength(dom: &SpatialDomain, path: &[Cell]) -> f64 {
    let mut acc = 0.0;
    for w in path.windows(2) {
        let [ax, ay] = dom.center(w[0]);
        let [bx, by] = dom.center(w[1]);
        acc += (ax - bx).hypot(ay - by);
    }
    acc
}

/// Supremum over interior cells of the Euclidean arclength of the extracted
/// geodesic back to the source. Computed by accumulating along the
/// predecessor forest in order of increasing k.
pub fn max_geodesic_length(dom: &SpatialDomain, qh: &QHResult) -> f64 {
    let total = dom.nx() * dom.ny();
    let mut order: Vec<usize> = (0..total).filter(|&i| qh.dist[i].is_finite()).collect();
    order.sort_by(|&a, &b| qh.dist[a].partial_cmp(&qh.dist[b]).unwrap());
    let mut arclen = vec![0.0f64; total];
    let mut q = 0.0f64;
    for &i in &order {
        let p = qh.pred[i];
        if p == NO_PRED {
            continue; // the source
        }
        let a = Cell {
            ix: i % dom.nx(),
            iy: i / dom.nx(),
        };
        let b = Cell {
            ix: p as usize % dom.nx(),
            iy: p as usize / dom.nx(),
        };
        let [ax, ay] = dom.center(a);
        let [bx, by] = dom.center(b);
        arclen[i] = arclen[p as usize] + (ax - bx).hypot(ay - by);
        q = q.max(arclen[i]);
    }
    q
}

/// Fitted quasihyperbolic boundary condition at a distinguished point.
#[derive(Clone, Debug)]
pub struct QHBCFit {
    pub z: Cell,
    /// Smallest constant on the search grid with all residuals <= 0.
    pub k_const: f64,
    /// Maximal Euclidean geodesic length from z.
    pub q: f64,
    /// Decay exponent of the dyadic boundary shells `|{d < 2^-k}|`.
    pub nu: f64,
    /// max over cells of `k(z,y) - K log(K / d(y))`; <= 0 by construction.
    pub worst_residual: f64,
    /// (shell index, shell measure) pairs used in the nu fit.
    pub shells: Vec<(i32, f64)>,
}

fn max_residual(dom: &SpatialDomain, df: &DistanceField, qh: &QHResult, k_const: f64) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for c in dom.interior_cells() {
        let i = dom.idx(c);
        let r = qh.dist[i] - k_const * (k_const / df.values()[i]).ln();
        if r > worst {
            worst = r;
        }
    }
    worst
}

/// Fit the quasihyperbolic boundary condition: scan `K = 2^(j/4)` up to
/// `2^20` for the smallest constant whose residual is nonpositive everywhere,
/// then fit the shell-decay exponent nu by least squares on log2-measures.
pub fn fit_qhbc(dom: &SpatialDomain, df: &DistanceField, qh: &QHResult) -> Result<QHBCFit> {
    const K_MAX_EXP: i32 = 20;
    let mut fitted: Option<(f64, f64)> = None;
    for j in 0..=(4 * K_MAX_EXP) {
        let k_const = 2f64.powf(j as f64 / 4.0);
        let worst = max_residual(dom, df, qh, k_const);
        if worst <= 0.0 {
            fitted = Some((k_const, worst));
            break;
        }
    }
    let (k_const, worst_residual) = fitted.ok_or(Error::QhbcFitFailed {
        k_max: 2f64.powi(K_MAX_EXP),
    })?;

    let q = max_geodesic_length(dom, qh);

    // Dyadic shells by distance threshold; empty shells skipped.
    let d_max = df.max();
    let k_lo = (-d_max.log2()).ceil() as i32;
    let cellvol = dom.cell_volume();
    let mut shells = Vec::new();
    for k in k_lo..k_lo + 40 {
        let thr = 2f64.powi(-k);
        let count = dom
            .interior_cells()
            .filter(|&c| df.value(dom, c) < thr)
            .count();
        if count == 0 {
            break;
        }
        shells.push((k, count as f64 * cellvol));
    }
    let nu = if shells.len() >= 2 {
        // least squares slope of log2 measure vs k, negated
        let n = shells.len() as f64;
        let sx: f64 = shells.iter().map(|&(k, _)| k as f64).sum();
        let sy: f64 = shells.iter().map(|&(_, m)| m.log2()).sum();
        let sxx: f64 = shells.iter().map(|&(k, _)| (k as f64) * (k as f64)).sum();
        let sxy: f64 = shells.iter().map(|&(k, m)| k as f64 * m.log2()).sum();
        -(n * sxy - sx * sy) / (n * sxx - sx * sx)
    } else {
        0.0
    };

    Ok(QHBCFit {
        z: qh.source,
        k_const,
        q,
        nu,
        worst_residual,
        shells,
    })
}
