//! Explicit finite-difference solver for the doubly nonlinear model equation
//! `d(u^(p-1))/dt = div(|Du|^(p-2) Du)` with Dirichlet data, weak-form
//! supersolution verification against smooth bumps, and the downstream
//! checks: per-rectangle measure decay of log f, the power-b seminorm of
//! -log f, and the small-power global integral.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Cell, SpatialDomain};
use crate::gridfn::GridFunction;
use crate::oscillation::{
    pbmo_seminorm, power_oscillation, rectangle_oscillation, seminorm_with, sigma_admissible,
    PowerOscillationParams, SeminormEstimate,
};
use crate::parabolic::{LagSet, ParabolicRectangle, TimeSide};

/// Growth constants of the operator. For the model `A = |Du|^(p-2) Du` both
/// are exactly 1.
#[derive(Clone, Copy, Debug)]
pub struct StructuralConstants {
    pub c0: f64,
    pub c1: f64,
    pub p: f64,
}

impl StructuralConstants {
    pub fn model(p: f64) -> Self {
        StructuralConstants {
            c0: 1.0,
            c1: 1.0,
            p,
        }
    }

    /// Worst relative errors of `A(g) . g = |g|^p` and `|A(g)| = |g|^(p-1)`
    /// over seeded sample gradients.
    pub fn growth_identity_errors(&self, samples: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = self.p;
        let mut worst0 = 0.0f64;
        let mut worst1 = 0.0f64;
        for _ in 0..samples {
            let g: [f64; 2] = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let norm = g[0].hypot(g[1]);
            if norm == 0.0 {
                continue;
            }
            let scale = norm.powf(p - 2.0);
            let a = [scale * g[0], scale * g[1]];
            let dot = a[0] * g[0] + a[1] * g[1];
            let target0 = norm.powf(p);
            worst0 = worst0.max((dot - target0).abs() / target0);
            let a_norm = a[0].hypot(a[1]);
            let target1 = norm.powf(p - 1.0);
            worst1 = worst1.max((a_norm - target1).abs() / target1);
        }
        (worst0, worst1)
    }
}

/// Dirichlet data on ghost cells, also usable as initial data.
#[derive(Clone, Debug)]
pub enum BoundarySpec {
    Constant(f64),
    /// `e^(x + t)` in 1-d, `e^((x + y)/sqrt(2) + t)` in 2-d; exact solutions
    /// of the p = 2 equation.
    HeatExp,
    /// Nearest-cell, nearest-layer samples of a stored field. The field's
    /// lattice should cover the ghost ring (a one-cell-padded domain).
    Sampled(Arc<GridFunction>),
}

impl BoundarySpec {
    pub fn value(&self, n: usize, x: [f64; 2], t: f64) -> f64 {
        match self {
            BoundarySpec::Constant(v) => *v,
            BoundarySpec::HeatExp => {
                if n == 1 {
                    (x[0] + t).exp()
                } else {
                    ((x[0] + x[1]) / std::f64::consts::SQRT_2 + t).exp()
                }
            }
            BoundarySpec::Sampled(g) => {
                let d = g.domain();
                let h = d.h();
                let clamp = |v: f64, lo: f64, n_cells: usize| {
                    v.clamp(lo + h / 2.0, lo + (n_cells as f64 - 0.5) * h)
                };
                let cx = clamp(x[0], d.origin()[0], d.nx());
                let cy = if d.dim() == 1 {
                    d.origin()[1] + h / 2.0
                } else {
                    clamp(x[1], d.origin()[1], d.ny())
                };
                let cell = d.cell_at(cx, cy).expect("clamped point is inside the box");
                let it = ((t / g.tstep() - 0.5).round().max(0.0) as usize).min(g.nt() - 1);
                g.value(cell, it)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct SchemeParams {
    /// Base internal step; capped at `h^2/(2n)` when p = 2 and halved on
    /// positivity rejections.
    pub tau0: f64,
    /// Gradient regularization floor for p < 2.
    pub eps_reg: f64,
    /// Output layers; the output step is `T / nt_out`.
    pub nt_out: usize,
}

impl SchemeParams {
    pub fn new(tau0: f64, nt_out: usize) -> Self {
        SchemeParams {
            tau0,
            eps_reg: 1e-8,
            nt_out,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SchemeMeta {
    pub steps: usize,
    pub rejections: usize,
    pub tau_final: f64,
    pub eps_reg: f64,
}

/// Positive solution field with its measured lower bound and the structural
/// constants of the operator it solves.
#[derive(Clone, Debug)]
pub struct SupersolutionField {
    pub f: GridFunction,
    pub gamma_low: f64,
    pub constants: StructuralConstants,
    pub meta: SchemeMeta,
}

struct Stepper<'a> {
    dom: &'a SpatialDomain,
    p: f64,
    eps_reg: f64,
    boundary: &'a BoundarySpec,
    /// padded (nx+2) x (ny+2) work arrays of u values
    padded: Vec<f64>,
    pnx: usize,
}

impl<'a> Stepper<'a> {
    fn new(dom: &'a SpatialDomain, p: f64, eps_reg: f64, boundary: &'a BoundarySpec) -> Self {
        let pnx = dom.nx() + 2;
        let pny = dom.ny() + 2;
        Stepper {
            dom,
            p,
            eps_reg,
            boundary,
            padded: vec![0.0; pnx * pny],
            pnx,
        }
    }

    fn pad_index(&self, ix: isize, iy: isize) -> usize {
        ((iy + 1) as usize) * self.pnx + (ix + 1) as usize
    }

    /// Fill the padded array: interior cells from `u`, everything else from
    /// the Dirichlet data at time `t`.
    fn fill(&mut self, u: &[f64], t: f64) {
        let d = self.dom;
        let (nx, ny) = (d.nx() as isize, d.ny() as isize);
        for iy in -1..=ny {
            for ix in -1..=nx {
                let idx = self.pad_index(ix, iy);
                let inside = ix >= 0
                    && iy >= 0
                    && d.is_interior(Cell {
                        ix: ix as usize,
                        iy: iy as usize,
                    });
                if inside {
                    self.padded[idx] = u[(iy as usize) * d.nx() + ix as usize];
                } else {
                    let x = [
                        d.origin()[0] + (ix as f64 + 0.5) * d.h(),
                        d.origin()[1] + (iy as f64 + 0.5) * d.h(),
                    ];
                    self.padded[idx] = self.boundary.value(d.dim(), x, t);
                }
            }
        }
    }

    fn flux(&self, du_axis: f64, du_other: f64) -> f64 {
        if self.p == 2.0 {
            return du_axis;
        }
        let mut mag = du_axis.hypot(du_other);
        if self.p < 2.0 {
            mag = mag.max(self.eps_reg);
        }
        if mag == 0.0 {
            return 0.0;
        }
        mag.powf(self.p - 2.0) * du_axis
    }

    /// One explicit step `w += tau * div(|Du|^(p-2) Du)`; returns false when
    /// positivity is lost.
    fn step(&mut self, w: &mut [f64], u: &mut [f64], t: f64, tau: f64) -> bool {
        let d = self.dom;
        let h = d.h();
        self.fill(u, t);
        let pm1 = self.p - 1.0;
        let mut ok = true;
        for iy in 0..d.ny() {
            for ix in 0..d.nx() {
                let c = Cell { ix, iy };
                if !d.is_interior(c) {
                    continue;
                }
                let (jx, jy) = (ix as isize, iy as isize);
                let at = |ax: isize, ay: isize| self.padded[self.pad_index(ax, ay)];
                let div = if d.dim() == 1 {
                    let fe = self.flux((at(jx + 1, 0) - at(jx, 0)) / h, 0.0);
                    let fw = self.flux((at(jx, 0) - at(jx - 1, 0)) / h, 0.0);
                    (fe - fw) / h
                } else {
                    // transverse slope at a face: average of the two central
                    // differences beside it
                    let dy_e =
                        (at(jx, jy + 1) + at(jx + 1, jy + 1) - at(jx, jy - 1) - at(jx + 1, jy - 1))
                            / (4.0 * h);
                    let dy_w =
                        (at(jx - 1, jy + 1) + at(jx, jy + 1) - at(jx - 1, jy - 1) - at(jx, jy - 1))
                            / (4.0 * h);
                    let dx_n =
                        (at(jx + 1, jy) + at(jx + 1, jy + 1) - at(jx - 1, jy) - at(jx - 1, jy + 1))
                            / (4.0 * h);
                    let dx_s =
                        (at(jx + 1, jy - 1) + at(jx + 1, jy) - at(jx - 1, jy - 1) - at(jx - 1, jy))
                            / (4.0 * h);
                    let fe = self.flux((at(jx + 1, jy) - at(jx, jy)) / h, dy_e);
                    let fw = self.flux((at(jx, jy) - at(jx - 1, jy)) / h, dy_w);
                    let fn_ = self.flux((at(jx, jy + 1) - at(jx, jy)) / h, dx_n);
                    let fs = self.flux((at(jx, jy) - at(jx, jy - 1)) / h, dx_s);
                    (fe - fw) / h + (fn_ - fs) / h
                };
                let i = iy * d.nx() + ix;
                let wn = w[i] + tau * div;
                if !(wn > 0.0) || !wn.is_finite() {
                    ok = false;
                }
                w[i] = wn;
            }
        }
        if ok {
            for iy in 0..d.ny() {
                for ix in 0..d.nx() {
                    let c = Cell { ix, iy };
                    if !d.is_interior(c) {
                        continue;
                    }
                    let i = iy * d.nx() + ix;
                    u[i] = if pm1 == 1.0 {
                        w[i]
                    } else {
                        w[i].powf(1.0 / pm1)
                    };
                }
            }
        }
        ok
    }
}

/// Evolve `w = u^(p-1)` explicitly from positive initial data and record the
/// solution at the cell-centered output times.
pub fn solve_model_equation(
    dom: Arc<SpatialDomain>,
    horizon: f64,
    p: f64,
    initial: &BoundarySpec,
    boundary: &BoundarySpec,
    scheme: &SchemeParams,
) -> Result<SupersolutionField> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must exceed 1")));
    }
    if !(horizon > 0.0) || scheme.nt_out == 0 {
        return Err(Error::InvalidParameter("empty time horizon".into()));
    }
    let d = &*dom;
    let n = d.dim();
    let ncells = d.nx() * d.ny();
    let mut u = vec![0.0f64; ncells];
    for c in d.interior_cells() {
        let v = initial.value(n, d.center(c), 0.0);
        if !(v > 0.0) {
            return Err(Error::InvalidParameter(
                "initial data must be positive".into(),
            ));
        }
        u[d.idx(c)] = v;
    }
    let mut w: Vec<f64> = u
        .iter()
        .map(|&v| if p == 2.0 { v } else { v.powf(p - 1.0) })
        .collect();

    let cap = if p == 2.0 {
        d.h() * d.h() / (2.0 * n as f64)
    } else {
        f64::INFINITY
    };
    let mut tau = scheme.tau0.min(cap);
    let tau_floor = scheme.tau0 / 2f64.powi(30);
    let tstep_out = horizon / scheme.nt_out as f64;

    let mut stepper = Stepper::new(d, p, scheme.eps_reg, boundary);
    let mut values = vec![0.0f64; scheme.nt_out * ncells];
    let mut t = 0.0f64;
    let mut steps = 0usize;
    let mut rejections = 0usize;
    let mut w_backup = w.clone();
    let mut u_backup = u.clone();

    for k in 0..scheme.nt_out {
        let target = (k as f64 + 0.5) * tstep_out;
        while t < target - 1e-15 * horizon {
            let dt = tau.min(target - t);
            w_backup.copy_from_slice(&w);
            u_backup.copy_from_slice(&u);
            if stepper.step(&mut w, &mut u, t, dt) {
                t += dt;
                steps += 1;
            } else {
                w.copy_from_slice(&w_backup);
                u.copy_from_slice(&u_backup);
                rejections += 1;
                tau /= 2.0;
                if tau < tau_floor {
                    return Err(Error::PositivityLoss { t, tau });
                }
            }
        }
        values[k * ncells..(k + 1) * ncells].copy_from_slice(&u);
    }

    let f = GridFunction::full(dom.clone(), scheme.nt_out, tstep_out, values)?;
    let mut gamma_low = f64::INFINITY;
    for it in 0..f.nt() {
        for c in d.interior_cells() {
            gamma_low = gamma_low.min(f.value(c, it));
        }
    }
    if !(gamma_low > 0.0) {
        return Err(Error::PositivityLoss { t, tau });
    }
    Ok(SupersolutionField {
        f,
        gamma_low,
        constants: StructuralConstants::model(p),
        meta: SchemeMeta {
            steps,
            rejections,
            tau_final: tau,
            eps_reg: scheme.eps_reg,
        },
    })
}

/// Smooth compactly supported test bumps: tensor products of `(1 - s^2)^3`.
#[derive(Clone, Debug)]
pub struct BumpFamily {
    pub count: usize,
    pub seed: u64,
    /// Verdict tolerance as a fraction of (bump mass x field scale).
    pub tol_factor: f64,
}

impl Default for BumpFamily {
    fn default() -> Self {
        BumpFamily {
            count: 24,
            seed: 1,
            tol_factor: 1e-3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SupersolutionVerdict {
    pub pass: bool,
    pub evaluated: usize,
    pub skipped: usize,
    /// Smallest weak-form value across bumps, with its tolerance.
    pub worst_value: f64,
    pub worst_tol: f64,
}

fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - s * s;
        q * q * q
    }
}

/// Evaluate `int (|Du|^(p-2) Du . Dphi - u^(p-1) phi_t)` for each seeded
/// bump; pass when every value clears `-tol`. Bumps whose padded support
/// leaves the open cylinder are skipped.
pub fn verify_supersolution(
    u: &GridFunction,
    constants: &StructuralConstants,
    bumps: &BumpFamily,
) -> Result<SupersolutionVerdict> {
    let d = u.domain();
    let n = d.dim();
    let p = constants.p;
    let h = d.h();
    let horizon = u.horizon();
    let mut rng = ChaCha8Rng::seed_from_u64(bumps.seed);
    let extent_x = d.nx() as f64 * h;
    let extent_y = d.ny() as f64 * h;
    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    let mut worst = f64::INFINITY;
    let mut worst_tol = 0.0f64;
    let mut field_scale = 0.0f64;
    for it in 0..u.nt() {
        for c in d.interior_cells() {
            field_scale = field_scale.max(u.value(c, it).abs());
        }
    }
    let field_scale = field_scale.powf(p - 1.0).max(1e-30);

    for _ in 0..bumps.count {
        let cx = d.origin()[0] + rng.gen_range(0.0..extent_x);
        let cy = if n == 1 {
            d.origin()[1] + 0.5 * h
        } else {
            d.origin()[1] + rng.gen_range(0.0..extent_y)
        };
        let ct = rng.gen_range(0.0..horizon);
        let rx = (4.0 * h)
            * ((extent_x / 16.0) / (4.0 * h))
                .max(1.0)
                .powf(rng.gen_range(0.0..1.0f64));
        let rt = (4.0 * u.tstep())
            * ((horizon / 8.0) / (4.0 * u.tstep()))
                .max(1.0)
                .powf(rng.gen_range(0.0..1.0f64));

        // padded support must stay inside the open cylinder
        let pad = 2.0 * h;
        let side = 2.0 * rx + 2.0 * pad;
        let spatial_ok = d.cube_inside([cx, cy], side);
        let temporal_ok = ct - rt > u.tstep() && ct + rt < horizon - u.tstep();
        if !(spatial_ok && temporal_ok) {
            skipped += 1;
            continue;
        }

        let r = u.range(&crate::parabolic::SpaceTimeBox {
            n,
            x_lo: [cx - rx, cy - rx],
            x_hi: [cx + rx, cy + rx],
            t_lo: ct - rt,
            t_hi: ct + rt,
        });
        let vol = u.cell_volume();
        let mut integral = 0.0f64;
        let mut mass = 0.0f64;
        let phi_at = |c: Cell, st: f64| -> f64 {
            let [x, y] = d.center(c);
            let sx = (x - cx) / rx;
            let sy = if n == 1 { 0.0 } else { (y - cy) / rx };
            bump(sx) * bump(sy) * bump(st)
        };
        let flux = |du_axis: f64, du_other: f64| -> f64 {
            if p == 2.0 {
                return du_axis;
            }
            let mag = du_axis.hypot(du_other).max(1e-300);
            mag.powf(p - 2.0) * du_axis
        };
        // one layer of slack on each end so the exact layer increments of
        // the temporal factor telescope all the way to zero
        let it_lo = r.it.0.saturating_sub(1);
        let it_hi = (r.it.1 + 1).min(u.nt());
        for it in it_lo..it_hi {
            let t = u.time_center(it);
            let st = (t - ct) / rt;
            // exact increment of the temporal factor across the layer, so
            // the phi_t quadrature telescopes instead of sampling midpoints
            let st_lo = (t - 0.5 * u.tstep() - ct) / rt;
            let st_hi = (t + 0.5 * u.tstep() - ct) / rt;
            let dbump_t = (bump(st_hi) - bump(st_lo)) / u.tstep();
            for iy in r.iy.0..r.iy.1 {
                for ix in r.ix.0..r.ix.1 {
                    let c = Cell { ix, iy };
                    let [x, y] = d.center(c);
                    let sx = (x - cx) / rx;
                    let sy = if n == 1 { 0.0 } else { (y - cy) / rx };
                    let phi_t = bump(sx) * bump(sy) * dbump_t;
                    let val = u.value(c, it);
                    let upow = if p == 2.0 { val } else { val.powf(p - 1.0) };
                    integral -= upow * phi_t * vol;
                    mass += bump(sx) * bump(sy) * bump(st) * vol;
                }
            }
            // flux form of the elliptic pairing: A at faces against exact
            // face differences of phi, which are exact averages of Dphi
            for iy in r.iy.0..r.iy.1 {
                for ix in r.ix.0.saturating_sub(1)..r.ix.1 {
                    let a = Cell { ix, iy };
                    let b = Cell { ix: ix + 1, iy };
                    let (pa, pb) = (phi_at(a, st), phi_at(b, st));
                    if pa == 0.0 && pb == 0.0 {
                        continue;
                    }
                    let du = (u.value(b, it) - u.value(a, it)) / h;
                    let du_other = if n == 1 {
                        0.0
                    } else {
                        (u.value(Cell { ix, iy: iy + 1 }, it)
                            + u.value(
                                Cell {
                                    ix: ix + 1,
                                    iy: iy + 1,
                                },
                                it,
                            )
                            - u.value(Cell { ix, iy: iy - 1 }, it)
                            - u.value(
                                Cell {
                                    ix: ix + 1,
                                    iy: iy - 1,
                                },
                                it,
                            ))
                            / (4.0 * h)
                    };
                    integral += flux(du, du_other) * (pb - pa) / h * vol;
                }
            }
            if n == 2 {
                for iy in r.iy.0.saturating_sub(1)..r.iy.1 {
                    for ix in r.ix.0..r.ix.1 {
                        let a = Cell { ix, iy };
                        let b = Cell { ix, iy: iy + 1 };
                        let (pa, pb) = (phi_at(a, st), phi_at(b, st));
                        if pa == 0.0 && pb == 0.0 {
                            continue;
                        }
                        let du = (u.value(b, it) - u.value(a, it)) / h;
                        let du_other = (u.value(Cell { ix: ix + 1, iy }, it)
                            + u.value(
                                Cell {
                                    ix: ix + 1,
                                    iy: iy + 1,
                                },
                                it,
                            )
                            - u.value(Cell { ix: ix - 1, iy }, it)
                            - u.value(
                                Cell {
                                    ix: ix - 1,
                                    iy: iy + 1,
                                },
                                it,
                            ))
                            / (4.0 * h);
                        integral += flux(du, du_other) * (pb - pa) / h * vol;
                    }
                }
            }
        }
        let tol = bumps.tol_factor * mass * field_scale;
        evaluated += 1;
        if integral + tol < worst + worst_tol {
            worst = integral;
            worst_tol = tol;
        }
    }
    if evaluated == 0 {
        return Err(Error::EmptySet);
    }
    Ok(SupersolutionVerdict {
        pass: worst >= -worst_tol,
        evaluated,
        skipped,
        worst_value: worst,
        worst_tol,
    })
}

/// Per-rectangle power-decay report for the log of a positive field.
#[derive(Clone, Debug)]
pub struct Lemma62Report {
    pub rect: ParabolicRectangle,
    /// Offset: median of log f over the rectangle.
    pub beta: f64,
    /// Offset shift inside the level sets; fixed to 0 here and reported.
    pub c_prime: f64,
    /// Fitted multiplicative constant of the power bound.
    pub c_fit: Option<f64>,
    /// Fitted decay exponent of the superlevel measures.
    pub exponent: Option<f64>,
    pub samples: usize,
    pub vacuous: bool,
    pub pass: bool,
}

fn median(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    }
}

/// Check the two-sided superlevel decay of `log f` around its median on each
/// admissible rectangle: fitted exponent at least `p - 1 - slack`, vacuously
/// passing when the tail carries no usable samples.
pub fn lemma62_check(
    f: &GridFunction,
    p: f64,
    sigma: f64,
    family: &[ParabolicRectangle],
    slack: f64,
) -> Vec<Lemma62Report> {
    let vol = f.cell_volume();
    let floor = crate::jn::NOISE_FLOOR_CELLS * vol;
    family
        .iter()
        .filter(|r| sigma_admissible(f, r, sigma))
        .map(|r| {
            let mut logs = f.collect_box(&r.whole());
            logs.iter_mut().for_each(|v| *v = v.ln());
            logs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let beta = median(&logs);
            let spread = logs
                .iter()
                .map(|&v| (v - beta).abs())
                .fold(0.0f64, f64::max);
            if spread == 0.0 {
                return Lemma62Report {
                    rect: *r,
                    beta,
                    c_prime: 0.0,
                    c_fit: None,
                    exponent: None,
                    samples: 0,
                    vacuous: true,
                    pass: true,
                };
            }
            let lambdas = crate::jn::lambda_grid(spread / 4.0);
            let mut lower = f.collect_box(&r.half(TimeSide::Lower));
            lower.iter_mut().for_each(|v| *v = v.ln());
            lower.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut upper = f.collect_box(&r.half(TimeSide::Upper));
            upper.iter_mut().for_each(|v| *v = v.ln());
            upper.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let base = (lower.len() + upper.len()) as f64 * vol;
            let mut raw = Vec::new();
            for &lam in &lambdas {
                // {log f > lambda + beta} on the past half
                let lo_count = lower.len() - lower.partition_point(|&v| v <= lam + beta);
                // {log f < beta - lambda} on the future half
                let up_count = upper.partition_point(|&v| v < beta - lam);
                let m = (lo_count + up_count) as f64 * vol;
                if m > 0.0 && m >= floor {
                    raw.push((lam, m));
                }
            }
            // the power bound is a tail statement; fit only the decaying
            // suffix, dropping the plateau where the measure has not yet
            // fallen to half its first value
            let m0 = raw.first().map(|&(_, m)| m).unwrap_or(0.0);
            let suffix_start = raw
                .iter()
                .position(|&(_, m)| m <= 0.5 * m0)
                .unwrap_or(raw.len());
            let pts: Vec<(f64, f64)> = raw[suffix_start..]
                .iter()
                .map(|&(lam, m)| (lam.ln(), (m / base).ln()))
                .collect();
            if pts.len() < 4 {
                return Lemma62Report {
                    rect: *r,
                    beta,
                    c_prime: 0.0,
                    c_fit: None,
                    exponent: None,
                    samples: pts.len(),
                    vacuous: true,
                    pass: true,
                };
            }
            let n = pts.len() as f64;
            let sx: f64 = pts.iter().map(|p| p.0).sum();
            let sy: f64 = pts.iter().map(|p| p.1).sum();
            let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
            let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
            let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            let intercept = (sy - slope * sx) / n;
            let exponent = -slope;
            Lemma62Report {
                rect: *r,
                beta,
                c_prime: 0.0,
                c_fit: Some(intercept.exp()),
                exponent: Some(exponent),
                samples: pts.len(),
                vacuous: false,
                pass: exponent >= (p - 1.0) - slack,
            }
        })
        .collect()
}

/// Seminorms of `-log f`: the power-b variant on the halves (the natural
/// exponent is `min((p-1)/2, 1)`) and the plain b = 1 seminorm.
#[derive(Clone, Debug)]
pub struct LogPbmo {
    pub b: f64,
    pub power: SeminormEstimate,
    pub pbmo: SeminormEstimate,
}

pub fn log_pbmo_check(
    f: &GridFunction,
    p: f64,
    sigma: f64,
    family: &[ParabolicRectangle],
) -> Result<LogPbmo> {
    let u = f.map(|v| -v.ln());
    let b = ((p - 1.0) / 2.0).min(1.0);
    let params = PowerOscillationParams {
        b,
        lag: LagSet::Halves,
    };
    let power = seminorm_with(&u, sigma, family, |u, r| {
        power_oscillation(u, r, params, None)
    })?;
    let pbmo = pbmo_seminorm(&u, sigma, family)?;
    Ok(LogPbmo { b, power, pbmo })
}

#[derive(Clone, Debug)]
pub struct GlobalIntegrabilityReport {
    pub eps: f64,
    pub integral: f64,
    pub integral_refined: f64,
    pub c: f64,
    pub stable: bool,
    /// (eps, coarse, refined) trail of the search.
    pub history: Vec<(f64, f64, f64)>,
}

fn power_integral(f: &GridFunction, eps: f64, delta: f64) -> f64 {
    let vol = f.cell_volume();
    let mut acc = 0.0;
    for (c, it) in f.slab_cells(0.0, f.horizon() - delta) {
        acc += f.value(c, it).powf(eps) * vol;
    }
    acc
}

/// Find a power eps (from 1 downward, floor `eps_floor`) whose integral of
/// `f^eps` over `Omega x (0, T - delta)` is stable within 10% under the
/// supplied refinement, then bisect back up toward the largest stable value.
pub fn global_integrability(
    coarse: &GridFunction,
    refined: &GridFunction,
    sigma: f64,
    p: f64,
    delta: f64,
    eps_floor: f64,
) -> Result<GlobalIntegrabilityReport> {
    if !(delta > 0.0 && delta < coarse.horizon()) {
        return Err(Error::InvalidParameter(format!("delta = {delta}")));
    }
    let stability = 0.10;
    let mut history = Vec::new();
    let check = |eps: f64, history: &mut Vec<(f64, f64, f64)>| -> (bool, f64, f64) {
        let ic = power_integral(coarse, eps, delta);
        let ir = power_integral(refined, eps, delta);
        history.push((eps, ic, ir));
        let stable = ic.is_finite() && ir.is_finite() && (ir / ic - 1.0).abs() <= stability;
        (stable, ic, ir)
    };
    let mut eps = 1.0f64;
    let (mut stable, mut ic, mut ir) = check(eps, &mut history);
    let mut eps_bad = None;
    while !stable {
        eps_bad = Some(eps);
        eps /= 2.0;
        if eps < eps_floor {
            // reference constant still reported; see below
            let c = reference_log_constant(coarse, p, sigma)?;
            return Ok(GlobalIntegrabilityReport {
                eps,
                integral: ic,
                integral_refined: ir,
                c,
                stable: false,
                history,
            });
        }
        let r = check(eps, &mut history);
        stable = r.0;
        ic = r.1;
        ir = r.2;
    }
    if let Some(bad) = eps_bad {
        // largest stable eps between the last failure and the first success
        let mut lo = eps;
        let mut hi = bad;
        for _ in 0..8 {
            let mid = 0.5 * (lo + hi);
            let (ok, mic, mir) = check(mid, &mut history);
            if ok {
                lo = mid;
                ic = mic;
                ir = mir;
            } else {
                hi = mid;
            }
        }
        eps = lo;
    }
    let c = reference_log_constant(coarse, p, sigma)?;
    Ok(GlobalIntegrabilityReport {
        eps,
        integral: ic,
        integral_refined: ir,
        c,
        stable: true,
        history,
    })
}

/// Optimal constant of `-log f` on the deepest-cell reference rectangle.
fn reference_log_constant(f: &GridFunction, p: f64, sigma: f64) -> Result<f64> {
    let d = f.domain();
    let df = crate::grid::distance_to_boundary(d)?;
    let mut deep = None;
    for c in d.interior_cells() {
        let v = df.value(d, c);
        if deep.map_or(true, |(b, _)| v > b) {
            deep = Some((v, c));
        }
    }
    let (_, z) = deep.ok_or(Error::EmptyInterior)?;
    let u = f.map(|v| -v.ln());
    let reference = crate::jn::reference_rectangle(&u, p, sigma, z)?;
    Ok(rectangle_oscillation(&u, &reference, None)?.a)
}
