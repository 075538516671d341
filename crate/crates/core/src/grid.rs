//! Discretized bounded spatial domains in one or two dimensions and their
//! Euclidean distance-to-boundary fields.
//!
//! A domain is a cell complex: an `nx x ny` lattice of closed cells of side
//! `h` anchored at `origin`, with a boolean interior mask. Everything outside
//! the bounding box counts as complement, so distances stay finite even when
//! the mask fills the whole box. "Point" arguments snap to the nearest
//! interior cell center and error out if none lies within `h`.

use crate::error::{Error, Result};

/// Lattice cell index. In one dimension `iy` is always 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cell {
    pub ix: usize,
    pub iy: usize,
}

#[derive(Clone, Debug)]
pub struct SpatialDomain {
    n: usize,
    nx: usize,
    ny: usize,
    h: f64,
    origin: [f64; 2],
    interior: Vec<bool>,
    interior_count: usize,
}

impl SpatialDomain {
    /// Build a domain from an explicit mask, checking the invariants:
    /// nonempty interior, single 8-connected component.
    pub fn from_mask(
        n: usize,
        nx: usize,
        ny: usize,
        h: f64,
        origin: [f64; 2],
        interior: Vec<bool>,
    ) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::InvalidParameter(format!(
                "dimension must be 1 or 2, got {n}"
            )));
        }
        if n == 1 && ny != 1 {
            return Err(Error::InvalidParameter("1-d domain needs ny = 1".into()));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParameter(format!("grid spacing h = {h}")));
        }
        if interior.len() != nx * ny {
            return Err(Error::InvalidParameter("mask length != nx*ny".into()));
        }
        let interior_count = interior.iter().filter(|&&b| b).count();
        if interior_count == 0 {
            return Err(Error::EmptyInterior);
        }
        let dom = SpatialDomain {
            n,
            nx,
            ny,
            h,
            origin,
            interior,
            interior_count,
        };
        let components = dom.component_count();
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(dom)
    }

    /// Axis-aligned box domain covering `[x0, x1] x [y0, y1]`; every cell is
    /// interior. Cell counts round extent/h to the nearest integer.
    pub fn rect(x0: f64, x1: f64, y0: f64, y1: f64, h: f64) -> Result<Self> {
        let nx = ((x1 - x0) / h).round() as usize;
        let ny = ((y1 - y0) / h).round() as usize;
        if nx == 0 || ny == 0 {
            return Err(Error::EmptyInterior);
        }
        Self::from_mask(2, nx, ny, h, [x0, y0], vec![true; nx * ny])
    }

    /// One-dimensional interval domain `[x0, x1]`, all interior.
    pub fn interval(x0: f64, x1: f64, h: f64) -> Result<Self> {
        let nx = ((x1 - x0) / h).round() as usize;
        if nx == 0 {
            return Err(Error::EmptyInterior);
        }
        Self::from_mask(1, nx, 1, h, [x0, 0.0], vec![true; nx])
    }

    /// Disk of given center and radius; interior cells are those whose
    /// centers lie strictly inside the disk.
    pub fn disk(cx: f64, cy: f64, radius: f64, h: f64) -> Result<Self> {
        let m = (2.0 * radius / h).round() as usize;
        let origin = [cx - radius, cy - radius];
        let mut mask = vec![false; m * m];
        for iy in 0..m {
            for ix in 0..m {
                let x = origin[0] + (ix as f64 + 0.5) * h;
                let y = origin[1] + (iy as f64 + 0.5) * h;
                if (x - cx).hypot(y - cy) < radius {
                    mask[iy * m + ix] = true;
                }
            }
        }
        Self::from_mask(2, m, m, h, origin, mask)
    }

    /// L-shaped domain: `[0, s]^2` minus the open upper-right quadrant.
    pub fn l_shape(s: f64, h: f64) -> Result<Self> {
        let m = (s / h).round() as usize;
        let mut mask = vec![false; m * m];
        for iy in 0..m {
            for ix in 0..m {
                let x = (ix as f64 + 0.5) * h;
                let y = (iy as f64 + 0.5) * h;
                if !(x > s / 2.0 && y > s / 2.0) {
                    mask[iy * m + ix] = true;
                }
            }
        }
        Self::from_mask(2, m, m, h, [0.0, 0.0], mask)
    }

    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }
    pub fn interior_count(&self) -> usize {
        self.interior_count
    }

    /// Volume of one spatial cell, `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.n as i32)
    }

    pub fn idx(&self, c: Cell) -> usize {
        c.iy * self.nx + c.ix
    }

    pub fn is_interior(&self, c: Cell) -> bool {
        c.ix < self.nx && c.iy < self.ny && self.interior[self.idx(c)]
    }

    pub fn center(&self, c: Cell) -> [f64; 2] {
        [
            self.origin[0] + (c.ix as f64 + 0.5) * self.h,
            self.origin[1] + (c.iy as f64 + 0.5) * self.h,
        ]
    }

    /// Iterate interior cells in row-major order (iy outer, ix inner).
    pub fn interior_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.ny).flat_map(move |iy| {
            (0..self.nx).filter_map(move |ix| {
                let c = Cell { ix, iy };
                if self.interior[iy * self.nx + ix] {
                    Some(c)
                } else {
                    None
                }
            })
        })
    }

    /// Cell whose closed square contains the point, if inside the bounding box.
    pub fn cell_at(&self, x: f64, y: f64) -> Option<Cell> {
        let fx = (x - self.origin[0]) / self.h;
        let fy = if self.n == 1 {
            0.5
        } else {
            (y - self.origin[1]) / self.h
        };
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let ix = fx.floor() as usize;
        let iy = fy.floor() as usize;
        if ix >= self.nx || iy >= self.ny {
            return None;
        }
        Some(Cell { ix, iy })
    }

    /// Snap a point to the nearest interior cell center; error when none lies
    /// within one grid spacing.
    pub fn nearest_interior_cell(&self, x: f64, y: f64) -> Result<Cell> {
        let mut best: Option<(f64, Cell)> = None;
        // A cell center within distance h must index-wise be within 2 of the
        // containing cell, so scan a small window around the clamped index.
        let fx = ((x - self.origin[0]) / self.h).floor();
        let fy = if self.n == 1 {
            0.0
        } else {
            ((y - self.origin[1]) / self.h).floor()
        };
        let cx = fx.clamp(0.0, (self.nx - 1) as f64) as usize;
        let cy = fy.clamp(0.0, (self.ny - 1) as f64) as usize;
        let x0 = cx.saturating_sub(2);
        let y0 = cy.saturating_sub(2);
        for iy in y0..(cy + 3).min(self.ny) {
            for ix in x0..(cx + 3).min(self.nx) {
                let c = Cell { ix, iy };
                if !self.is_interior(c) {
                    continue;
                }
                let [px, py] = self.center(c);
                let d = if self.n == 1 {
                    (px - x).abs()
                } else {
                    (px - x).hypot(py - y)
                };
                if best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, c));
                }
            }
        }
        match best {
            Some((d, c)) if d <= self.h * (1.0 + 1e-12) => Ok(c),
            _ => Err(Error::PointOutsideDomain { x, y }),
        }
    }

    /// Does the open cube of full side `side` around `center` stay inside the
    /// union of interior cells? Every lattice cell meeting the cube must be
    /// interior and the cube must fit in the bounding box. Ranges are shaved
    /// by a relative epsilon so a face that grazes a cell boundary by
    /// floating-point dust does not reject the cube.
    pub fn cube_inside(&self, center: [f64; 2], side: f64) -> bool {
        let eps = 1e-9 * self.h;
        for dim in 0..self.n {
            let (count, origin) = if dim == 0 {
                (self.nx, self.origin[0])
            } else {
                (self.ny, self.origin[1])
            };
            let lo = center[dim] - side / 2.0 + eps;
            let hi = center[dim] + side / 2.0 - eps;
            if lo < origin || hi > origin + count as f64 * self.h {
                return false;
            }
        }
        let cell_range = |lo: f64, hi: f64, origin: f64, count: usize| -> (usize, usize) {
            let a = ((lo - origin) / self.h).floor().max(0.0) as usize;
            let b = (((hi - origin) / self.h).ceil() as usize).min(count);
            (a, b)
        };
        let (x0, x1) = cell_range(
            center[0] - side / 2.0 + eps,
            center[0] + side / 2.0 - eps,
            self.origin[0],
            self.nx,
        );
        let (y0, y1) = if self.n == 1 {
            (0, 1)
        } else {
            cell_range(
                center[1] - side / 2.0 + eps,
                center[1] + side / 2.0 - eps,
                self.origin[1],
                self.ny,
            )
        };
        for iy in y0..y1 {
            for ix in x0..x1 {
                if !self.interior[iy * self.nx + ix] {
                    return false;
                }
            }
        }
        true
    }

    /// Neighbor offsets of the grid graph: 8 in 2-d, 2 in 1-d.
    pub fn neighbor_offsets(&self) -> &'static [(isize, isize)] {
        if self.n == 1 {
            &[(-1, 0), (1, 0)]
        } else {
            &[
                (-1, -1),
                (0, -1),
                (1, -1),
                (-1, 0),
                (1, 0),
                (-1, 1),
                (0, 1),
                (1, 1),
            ]
        }
    }

    fn component_count(&self) -> usize {
        let mut seen = vec![false; self.nx * self.ny];
        let mut components = 0;
        let offsets = self.neighbor_offsets();
        for start in 0..self.interior.len() {
            if !self.interior[start] || seen[start] {
                continue;
            }
            components += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                let (ix, iy) = (i % self.nx, i / self.nx);
                for &(dx, dy) in offsets {
                    let (jx, jy) = (ix as isize + dx, iy as isize + dy);
                    if jx < 0 || jy < 0 || jx as usize >= self.nx || jy as usize >= self.ny {
                        continue;
                    }
                    let j = jy as usize * self.nx + jx as usize;
                    if self.interior[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        components
    }

    /// Parse the mask file format: line 1 is `n nx [ny] h`, then `ny` rows of
    /// `#` (interior) / `.` (complement), top row (largest y) first.
    pub fn parse_mask(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty mask file".into()))?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        let n: usize = toks
            .first()
            .ok_or_else(|| Error::Parse("missing dimension".into()))?
            .parse()
            .map_err(|_| Error::Parse("bad dimension".into()))?;
        let (nx, ny, h) = match (n, toks.len()) {
            (1, 3) => (
                toks[1].parse().map_err(|_| Error::Parse("bad nx".into()))?,
                1usize,
                toks[2].parse().map_err(|_| Error::Parse("bad h".into()))?,
            ),
            (2, 4) => (
                toks[1].parse().map_err(|_| Error::Parse("bad nx".into()))?,
                toks[2].parse().map_err(|_| Error::Parse("bad ny".into()))?,
                toks[3].parse().map_err(|_| Error::Parse("bad h".into()))?,
            ),
            _ => {
                return Err(Error::Parse(format!(
                    "mask header must be 'n nx [ny] h', got '{header}'"
                )))
            }
        };
        let mut mask = vec![false; nx * ny];
        let mut rows = 0;
        for (row, line) in lines.enumerate() {
            if row >= ny {
                return Err(Error::Parse("too many mask rows".into()));
            }
            let iy = ny - 1 - row; // top row first
            let line = line.trim_end();
            if line.chars().count() != nx {
                return Err(Error::Parse(format!(
                    "mask row {row} has {} cells, expected {nx}",
                    line.chars().count()
                )));
            }
            for (ix, ch) in line.chars().enumerate() {
                mask[iy * nx + ix] = match ch {
                    '#' => true,
                    '.' => false,
                    _ => return Err(Error::Parse(format!("bad mask char '{ch}'"))),
                };
            }
            rows += 1;
        }
        if rows != ny {
            return Err(Error::Parse(format!("expected {ny} mask rows, got {rows}")));
        }
        Self::from_mask(n, nx, ny, h, [0.0, 0.0], mask)
    }

    /// Serialize in the mask file format (origin is not recorded).
    pub fn write_mask(&self) -> String {
        let mut out = String::new();
        if self.n == 1 {
            out.push_str(&format!("1 {} {}\n", self.nx, self.h));
        } else {
            out.push_str(&format!("2 {} {} {}\n", self.nx, self.ny, self.h));
        }
        for row in 0..self.ny {
            let iy = self.ny - 1 - row;
            for ix in 0..self.nx {
                out.push(if self.interior[iy * self.nx + ix] {
                    '#'
                } else {
                    '.'
                });
            }
            out.push('\n');
        }
        out
    }
}

/// Per-cell Euclidean distance from the cell center to the nearest complement
/// cell center, counting the infinite tiling outside the bounding box as
/// complement. Complement cells hold 0.
#[derive(Clone, Debug)]
pub struct DistanceField {
    d: Vec<f64>,
}

impl DistanceField {
    pub fn value(&self, dom: &SpatialDomain, c: Cell) -> f64 {
        self.d[dom.idx(c)]
    }

    pub fn values(&self) -> &[f64] {
        &self.d
    }

    pub fn max(&self) -> f64 {
        self.d.iter().cloned().fold(0.0, f64::max)
    }

    /// Distance at an arbitrary point: the value at the containing cell.
    /// Outside the bounding box the distance is 0.
    pub fn at_point(&self, dom: &SpatialDomain, x: f64, y: f64) -> f64 {
        match dom.cell_at(x, y) {
            Some(c) => self.d[dom.idx(c)],
            None => 0.0,
        }
    }
}

/// Exact squared Euclidean distance transform along one axis: lower envelope
/// of the parabolas `(q - p)^2 + f[p]` over sites with finite `f`. Values are
/// integers in squared cell units; `INF` marks "no site". At integer query
/// points the envelope choice is exact despite the f64 break points, because
/// two parabolas with integer data differ by an integer there.
fn edt_1d(f: &[i64], out: &mut [i64]) {
    const INF: i64 = i64::MAX / 4;
    let n = f.len();
    // v: site indices on the hull; zs: boundaries, zs[i] is the left edge of
    // v[i]'s interval, with zs[v.len()] = +inf.
    let mut v: Vec<usize> = Vec::with_capacity(n);
    let mut zs: Vec<f64> = Vec::with_capacity(n + 1);
    for q in 0..n {
        if f[q] >= INF {
            continue;
        }
        loop {
            if v.is_empty() {
                v.push(q);
                zs.clear();
                zs.push(f64::NEG_INFINITY);
                zs.push(f64::INFINITY);
                break;
            }
            let p = *v.last().unwrap();
            let s =
                ((f[q] + (q * q) as i64) - (f[p] + (p * p) as i64)) as f64 / (2 * (q - p)) as f64;
            if s <= zs[v.len() - 1] {
                v.pop();
                zs.pop();
                zs.pop();
                zs.push(f64::INFINITY);
            } else {
                *zs.last_mut().unwrap() = s;
                v.push(q);
                zs.push(f64::INFINITY);
                break;
            }
        }
    }
    if v.is_empty() {
        out.iter_mut().for_each(|o| *o = INF);
        return;
    }
    let mut j = 0usize;
    for q in 0..n {
        while zs[j + 1] < q as f64 {
            j += 1;
        }
        let p = v[j];
        let dq = q as i64 - p as i64;
        out[q] = f[p] + dq * dq;
    }
}

/// Exact Euclidean distance from each interior cell center to the nearest
/// complement cell center. The virtual complement outside the bounding box
/// contributes `min(ix+1, nx-ix, iy+1, ny-iy) * h` (same-row/column outside
/// centers). All arithmetic is integer until the final sqrt, so results match
/// a brute-force scan bit for bit.
pub fn distance_to_boundary(dom: &SpatialDomain) -> Result<DistanceField> {
    const INF: i64 = i64::MAX / 4;
    let (nx, ny) = (dom.nx(), dom.ny());
    if dom.interior_count() == 0 {
        return Err(Error::EmptyInterior);
    }
    // Row pass: squared distance to nearest in-row complement cell.
    let mut rowsq = vec![INF; nx * ny];
    for iy in 0..ny {
        let mut f = vec![INF; nx];
        for ix in 0..nx {
            if !dom.is_interior(Cell { ix, iy }) {
                f[ix] = 0;
            }
        }
        let mut out = vec![0i64; nx];
        if f.iter().any(|&v| v < INF) {
            edt_1d(&f, &mut out);
        } else {
            out.iter_mut().for_each(|v| *v = INF);
        }
        rowsq[iy * nx..(iy + 1) * nx].copy_from_slice(&out);
    }
    // Column pass over the row results.
    let mut sq = vec![INF; nx * ny];
    let mut col = vec![0i64; ny];
    let mut colout = vec![0i64; ny];
    for ix in 0..nx {
        for iy in 0..ny {
            col[iy] = rowsq[iy * nx + ix];
        }
        if col.iter().any(|&v| v < INF) {
            edt_1d(&col, &mut colout);
        } else {
            colout.iter_mut().for_each(|v| *v = INF);
        }
        for iy in 0..ny {
            sq[iy * nx + ix] = colout[iy];
        }
    }
    let mut d = vec![0.0f64; nx * ny];
    for iy in 0..ny {
        for ix in 0..nx {
            let c = Cell { ix, iy };
            let i = dom.idx(c);
            if !dom.is_interior(c) {
                continue;
            }
            let outside = if dom.dim() == 1 {
                ((ix + 1).min(nx - ix)) as i64
            } else {
                ((ix + 1).min(nx - ix).min(iy + 1).min(ny - iy)) as i64
            };
            let best = sq[i].min(outside * outside);
            d[i] = (best as f64).sqrt() * dom.h();
        }
    }
    Ok(DistanceField { d })
}

/// Brute-force reference for the distance transform: identical integer
/// arithmetic, quadratic scan. Test oracle only; exported for the acceptance
/// suite.
pub fn distance_to_boundary_brute(dom: &SpatialDomain) -> Result<DistanceField> {
    if dom.interior_count() == 0 {
        return Err(Error::EmptyInterior);
    }
    let (nx, ny) = (dom.nx(), dom.ny());
    let mut complement = Vec::new();
    for iy in 0..ny {
        for ix in 0..nx {
            if !dom.is_interior(Cell { ix, iy }) {
                complement.push((ix as i64, iy as i64));
            }
        }
    }
    let mut d = vec![0.0f64; nx * ny];
    for iy in 0..ny {
        for ix in 0..nx {
            let c = Cell { ix, iy };
            if !dom.is_interior(c) {
                continue;
            }
            let outside = if dom.dim() == 1 {
                ((ix + 1).min(nx - ix)) as i64
            } else {
                ((ix + 1).min(nx - ix).min(iy + 1).min(ny - iy)) as i64
            };
            let mut best = outside * outside;
            for &(jx, jy) in &complement {
                let (dx, dy) = (ix as i64 - jx, iy as i64 - jy);
                best = best.min(dx * dx + dy * dy);
            }
            d[dom.idx(c)] = (best as f64).sqrt() * dom.h();
        }
    }
    Ok(DistanceField { d })
}
