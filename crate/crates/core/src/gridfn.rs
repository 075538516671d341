//! Real-valued functions on a space-time lattice over `Omega x (0, T)`.
//!
//! Cells are centered in both space and time: the temporal sample `it` lives
//! at `(it + 0.5) * tstep`. Time-independent fields (the `-log d` benchmarks)
//! store a single spatial slice; the accessor is uniform either way.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Cell, DistanceField, SpatialDomain};
use crate::parabolic::SpaceTimeBox;

#[derive(Clone, Debug)]
enum Storage {
    /// Layout `[it][iy][ix]`.
    Full(Vec<f64>),
    /// One spatial slice, replicated conceptually across all time layers.
    TimeConstant(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct GridFunction {
    domain: Arc<SpatialDomain>,
    nt: usize,
    tstep: f64,
    storage: Storage,
}

/// Half-open index ranges of lattice cells whose centers fall in a box.
#[derive(Clone, Copy, Debug)]
pub struct LatticeRange {
    pub ix: (usize, usize),
    pub iy: (usize, usize),
    pub it: (usize, usize),
}

impl LatticeRange {
    pub fn is_empty(&self) -> bool {
        self.ix.0 >= self.ix.1 || self.iy.0 >= self.iy.1 || self.it.0 >= self.it.1
    }
}

fn centered_range(lo: f64, hi: f64, origin: f64, step: f64, count: usize) -> (usize, usize) {
    // centers at origin + (i + 0.5) step, membership lo <= c < hi
    let a = ((lo - origin) / step - 0.5).ceil().max(0.0);
    let b = ((hi - origin) / step - 0.5).ceil().clamp(0.0, count as f64);
    if a >= b {
        (0, 0)
    } else {
        (a as usize, b as usize)
    }
}

impl GridFunction {
    pub fn full(
        domain: Arc<SpatialDomain>,
        nt: usize,
        tstep: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        if nt == 0 || !(tstep > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "nt = {nt}, tstep = {tstep}"
            )));
        }
        if values.len() != nt * domain.nx() * domain.ny() {
            return Err(Error::InvalidParameter("value count != nt*nx*ny".into()));
        }
        Ok(GridFunction {
            domain,
            nt,
            tstep,
            storage: Storage::Full(values),
        })
    }

    pub fn time_constant(
        domain: Arc<SpatialDomain>,
        nt: usize,
        tstep: f64,
        slice: Vec<f64>,
    ) -> Result<Self> {
        if nt == 0 || !(tstep > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "nt = {nt}, tstep = {tstep}"
            )));
        }
        if slice.len() != domain.nx() * domain.ny() {
            return Err(Error::InvalidParameter("slice length != nx*ny".into()));
        }
        Ok(GridFunction {
            domain,
            nt,
            tstep,
            storage: Storage::TimeConstant(slice),
        })
    }

    pub fn constant(domain: Arc<SpatialDomain>, nt: usize, tstep: f64, value: f64) -> Result<Self> {
        let len = domain.nx() * domain.ny();
        Self::time_constant(domain, nt, tstep, vec![value; len])
    }

    /// `-log d(x, complement)` as a time-constant field.
    pub fn neg_log_distance(
        domain: Arc<SpatialDomain>,
        df: &DistanceField,
        nt: usize,
        tstep: f64,
    ) -> Result<Self> {
        let slice: Vec<f64> = df
            .values()
            .iter()
            .map(|&d| if d > 0.0 { -d.ln() } else { 0.0 })
            .collect();
        Self::time_constant(domain, nt, tstep, slice)
    }

    pub fn domain(&self) -> &SpatialDomain {
        &self.domain
    }
    pub fn domain_arc(&self) -> Arc<SpatialDomain> {
        self.domain.clone()
    }
    pub fn nt(&self) -> usize {
        self.nt
    }
    pub fn tstep(&self) -> f64 {
        self.tstep
    }
    pub fn horizon(&self) -> f64 {
        self.nt as f64 * self.tstep
    }
    pub fn time_center(&self, it: usize) -> f64 {
        (it as f64 + 0.5) * self.tstep
    }

    /// Space-time cell volume `h^n * tstep`.
    pub fn cell_volume(&self) -> f64 {
        self.domain.cell_volume() * self.tstep
    }

    #[inline]
    pub fn value(&self, c: Cell, it: usize) -> f64 {
        let i = self.domain.idx(c);
        match &self.storage {
            Storage::Full(v) => v[it * self.domain.nx() * self.domain.ny() + i],
            Storage::TimeConstant(v) => v[i],
        }
    }

    pub fn is_time_constant(&self) -> bool {
        matches!(self.storage, Storage::TimeConstant(_))
    }

    /// Apply a pointwise map, preserving the storage kind.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        let storage = match &self.storage {
            Storage::Full(v) => Storage::Full(v.iter().map(|&x| f(x)).collect()),
            Storage::TimeConstant(v) => Storage::TimeConstant(v.iter().map(|&x| f(x)).collect()),
        };
        GridFunction {
            domain: self.domain.clone(),
            nt: self.nt,
            tstep: self.tstep,
            storage,
        }
    }

    /// The full cylinder as a box.
    pub fn cylinder(&self) -> SpaceTimeBox {
        let d = &self.domain;
        let mut x_lo = [0.0; 2];
        let mut x_hi = [0.0; 2];
        for k in 0..d.dim() {
            x_lo[k] = d.origin()[k];
            x_hi[k] = d.origin()[k] + if k == 0 { d.nx() } else { d.ny() } as f64 * d.h();
        }
        SpaceTimeBox {
            n: d.dim(),
            x_lo,
            x_hi,
            t_lo: 0.0,
            t_hi: self.horizon(),
        }
    }

    /// Lattice index ranges of cells with centers inside the box.
    pub fn range(&self, bx: &SpaceTimeBox) -> LatticeRange {
        let d = &self.domain;
        let ix = centered_range(bx.x_lo[0], bx.x_hi[0], d.origin()[0], d.h(), d.nx());
        let iy = if d.dim() == 1 {
            (0, 1)
        } else {
            centered_range(bx.x_lo[1], bx.x_hi[1], d.origin()[1], d.h(), d.ny())
        };
        let it = centered_range(bx.t_lo, bx.t_hi, 0.0, self.tstep, self.nt);
        LatticeRange { ix, iy, it }
    }

    /// Values at interior cells inside the box, in (it, iy, ix) order.
    pub fn collect_box(&self, bx: &SpaceTimeBox) -> Vec<f64> {
        let r = self.range(bx);
        let mut out = Vec::new();
        if r.is_empty() {
            return out;
        }
        for it in r.it.0..r.it.1 {
            for iy in r.iy.0..r.iy.1 {
                for ix in r.ix.0..r.ix.1 {
                    let c = Cell { ix, iy };
                    if self.domain.is_interior(c) {
                        out.push(self.value(c, it));
                    }
                }
            }
        }
        out
    }

    /// Box values for mean-type functionals: a time-constant field yields a
    /// single layer (the mean over repeated layers is the layer mean), empty
    /// when the box holds no time layer at all.
    pub fn collect_box_mean_support(&self, bx: &SpaceTimeBox) -> Vec<f64> {
        if !self.is_time_constant() {
            return self.collect_box(bx);
        }
        let r = self.range(bx);
        let mut out = Vec::new();
        if r.is_empty() {
            return out;
        }
        for iy in r.iy.0..r.iy.1 {
            for ix in r.ix.0..r.ix.1 {
                let c = Cell { ix, iy };
                if self.domain.is_interior(c) {
                    out.push(self.value(c, 0));
                }
            }
        }
        out
    }

    /// Grid measure of the box intersected with the interior cylinder:
    /// interior-cell count times cell volume.
    pub fn grid_measure(&self, bx: &SpaceTimeBox) -> f64 {
        let r = self.range(bx);
        if r.is_empty() {
            return 0.0;
        }
        let mut spatial = 0usize;
        for iy in r.iy.0..r.iy.1 {
            for ix in r.ix.0..r.ix.1 {
                if self.domain.is_interior(Cell { ix, iy }) {
                    spatial += 1;
                }
            }
        }
        (spatial * (r.it.1 - r.it.0)) as f64 * self.cell_volume()
    }

    /// Iterate interior cells of a time slab `t in [t_lo, t_hi)`.
    pub fn slab_cells(&self, t_lo: f64, t_hi: f64) -> Vec<(Cell, usize)> {
        let it = centered_range(t_lo, t_hi, 0.0, self.tstep, self.nt);
        let mut out = Vec::new();
        for iti in it.0..it.1 {
            for c in self.domain.interior_cells() {
                out.push((c, iti));
            }
        }
        out
    }

    /// Number of time layers whose centers fall in `[t_lo, t_hi)`.
    pub fn slab_layer_count(&self, t_lo: f64, t_hi: f64) -> usize {
        let it = centered_range(t_lo, t_hi, 0.0, self.tstep, self.nt);
        it.1 - it.0
    }

    /// Serialize: metadata line `n nx [ny] nt h tstep T`, a column header,
    /// then one row per interior space-time cell.
    pub fn write_csv(&self) -> String {
        let d = &self.domain;
        let mut out = String::new();
        if d.dim() == 1 {
            out.push_str(&format!(
                "1 {} {} {} {} {}\n",
                d.nx(),
                self.nt,
                d.h(),
                self.tstep,
                self.horizon()
            ));
            out.push_str("ix,it,value\n");
        } else {
            out.push_str(&format!(
                "2 {} {} {} {} {} {}\n",
                d.nx(),
                d.ny(),
                self.nt,
                d.h(),
                self.tstep,
                self.horizon()
            ));
            out.push_str("ix,iy,it,value\n");
        }
        for it in 0..self.nt {
            for c in d.interior_cells() {
                if d.dim() == 1 {
                    out.push_str(&format!("{},{},{}\n", c.ix, it, self.value(c, it)));
                } else {
                    out.push_str(&format!("{},{},{},{}\n", c.ix, c.iy, it, self.value(c, it)));
                }
            }
        }
        out
    }

    /// Parse the CSV format written by `write_csv`. Cells not listed stay 0.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let meta = lines
            .next()
            .ok_or_else(|| Error::Parse("empty grid csv".into()))?;
        let toks: Vec<&str> = meta.split_whitespace().collect();
        let n: usize = toks
            .first()
            .ok_or_else(|| Error::Parse("missing dimension".into()))?
            .parse()
            .map_err(|_| Error::Parse("bad dimension".into()))?;
        let parse_f = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number '{s}'")))
        };
        let parse_u = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad count '{s}'")))
        };
        let (nx, ny, nt, h, tstep) = match (n, toks.len()) {
            (1, 6) => (
                parse_u(toks[1])?,
                1,
                parse_u(toks[2])?,
                parse_f(toks[3])?,
                parse_f(toks[4])?,
            ),
            (2, 7) => (
                parse_u(toks[1])?,
                parse_u(toks[2])?,
                parse_u(toks[3])?,
                parse_f(toks[4])?,
                parse_f(toks[5])?,
            ),
            _ => return Err(Error::Parse(format!("bad grid metadata '{meta}'"))),
        };
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header".into()))?;
        let expect_header = if n == 1 {
            "ix,it,value"
        } else {
            "ix,iy,it,value"
        };
        if header.trim() != expect_header {
            return Err(Error::Parse(format!("expected header '{expect_header}'")));
        }
        let mut values = vec![0.0f64; nt * nx * ny];
        let mut mask = vec![false; nx * ny];
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            let (ix, iy, it, v) = if n == 1 {
                if f.len() != 3 {
                    return Err(Error::Parse(format!("bad row '{line}'")));
                }
                (parse_u(f[0])?, 0, parse_u(f[1])?, parse_f(f[2])?)
            } else {
                if f.len() != 4 {
                    return Err(Error::Parse(format!("bad row '{line}'")));
                }
                (
                    parse_u(f[0])?,
                    parse_u(f[1])?,
                    parse_u(f[2])?,
                    parse_f(f[3])?,
                )
            };
            if ix >= nx || iy >= ny || it >= nt {
                return Err(Error::Parse(format!("indices out of range in '{line}'")));
            }
            values[(it * ny + iy) * nx + ix] = v;
            mask[iy * nx + ix] = true;
        }
        let domain = SpatialDomain::from_mask(n, nx, ny, h, [0.0, 0.0], mask)?;
        GridFunction::full(Arc::new(domain), nt, tstep, values)
    }
}
