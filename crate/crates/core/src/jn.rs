//! Level-set decay machinery: distribution functions of positive parts over
//! lattice regions, exponential-tail least squares, the local and global
//! decay checks, exponential integrals with a layer-cake cross-check, and
//! the local-to-global seminorm ratio.

use crate::error::{Error, Result};
use crate::grid::Cell;
use crate::gridfn::GridFunction;
use crate::oscillation::{
    pbmo_seminorm, rectangle_oscillation, sigma_admissible, SeminormEstimate,
};
use crate::parabolic::{ParabolicRectangle, SpaceTimeBox, TimeSide};
use crate::qh::QHBCFit;

/// Region of the cylinder a distribution is measured over.
#[derive(Clone, Debug)]
pub enum Region {
    Box(SpaceTimeBox),
    /// Whole spatial domain over a time slab `(t_lo, t_hi)`.
    Slab {
        t_lo: f64,
        t_hi: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Superlevel-set measures of `(u - c)^+` or `(c - u)^+` on a geometric
/// lambda grid.
#[derive(Clone, Debug)]
pub struct DistributionSamples {
    pub c: f64,
    pub sign: Sign,
    pub base_measure: f64,
    pub lambdas: Vec<f64>,
    pub measures: Vec<f64>,
    /// Space-time volume of one lattice cell, for noise-floor decisions.
    pub cell_volume: f64,
}

/// 32 geometric points spanning `[0.05, 20] x scale`.
pub fn lambda_grid(scale: f64) -> Vec<f64> {
    let lo = 0.05 * scale;
    let hi = 20.0 * scale;
    let n = 32;
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

fn deviation(u: f64, c: f64, sign: Sign) -> f64 {
    match sign {
        Sign::Plus => (u - c).max(0.0),
        Sign::Minus => (c - u).max(0.0),
    }
}

/// Values of a region, with time-constant fields over slabs kept as one
/// spatial slice plus a layer multiplicity.
enum RegionValues {
    Plain(Vec<f64>),
    Repeated { spatial: Vec<f64>, layers: usize },
}

impl RegionValues {
    fn count(&self) -> usize {
        match self {
            RegionValues::Plain(v) => v.len(),
            RegionValues::Repeated { spatial, layers } => spatial.len() * layers,
        }
    }

    fn multiplicity(&self) -> usize {
        match self {
            RegionValues::Plain(_) => 1,
            RegionValues::Repeated { layers, .. } => *layers,
        }
    }

    fn base(&self) -> &[f64] {
        match self {
            RegionValues::Plain(v) => v,
            RegionValues::Repeated { spatial, .. } => spatial,
        }
    }
}

fn region_values(u: &GridFunction, region: &Region) -> RegionValues {
    match region {
        Region::Box(bx) => RegionValues::Plain(u.collect_box(bx)),
        Region::Slab { t_lo, t_hi } => {
            let layers = u.slab_layer_count(*t_lo, *t_hi);
            if u.is_time_constant() {
                let spatial: Vec<f64> =
                    u.domain().interior_cells().map(|c| u.value(c, 0)).collect();
                RegionValues::Repeated { spatial, layers }
            } else {
                RegionValues::Plain(
                    u.slab_cells(*t_lo, *t_hi)
                        .into_iter()
                        .map(|(c, it)| u.value(c, it))
                        .collect(),
                )
            }
        }
    }
}

/// Superlevel measures of the signed deviation over the region for each
/// lambda on the grid.
pub fn distribution_function(
    u: &GridFunction,
    region: &Region,
    c: f64,
    sign: Sign,
    lambdas: &[f64],
) -> Result<DistributionSamples> {
    let vals = region_values(u, region);
    if vals.count() == 0 {
        return Err(Error::EmptySet);
    }
    let vol = u.cell_volume();
    let mult = vals.multiplicity() as f64;
    let base_measure = vals.count() as f64 * vol;
    let mut devs: Vec<f64> = vals.base().iter().map(|&v| deviation(v, c, sign)).collect();
    devs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // count strictly above lambda by binary search on the sorted deviations
    let measures = lambdas
        .iter()
        .map(|&lam| {
            let idx = devs.partition_point(|&d| d <= lam);
            (devs.len() - idx) as f64 * mult * vol
        })
        .collect();
    Ok(DistributionSamples {
        c,
        sign,
        base_measure,
        lambdas: lambdas.to_vec(),
        measures,
        cell_volume: vol,
    })
}

/// Exponential tail fit `measure ~= A e^(-B lambda) |base|`.
#[derive(Clone, Copy, Debug)]
pub struct JNFit {
    pub a: f64,
    pub b: f64,
    /// Root-mean-square residual of the log-scale least squares.
    pub residual: f64,
    pub lambda_range: (f64, f64),
    pub n_samples: usize,
}

/// Samples with fewer than this many cells are quadrature noise and are
/// dropped before fitting.
pub const NOISE_FLOOR_CELLS: f64 = 10.0;

/// Least squares of `log(measure / base)` against lambda over the samples
/// above the noise floor. Needs at least 4 usable samples.
pub fn fit_exponential_tail(samples: &DistributionSamples) -> Result<JNFit> {
    let floor = NOISE_FLOOR_CELLS * samples.cell_volume;
    let pts: Vec<(f64, f64)> = samples
        .lambdas
        .iter()
        .zip(&samples.measures)
        .filter(|&(_, &m)| m > 0.0 && m >= floor)
        .map(|(&l, &m)| (l, (m / samples.base_measure).ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::TailTooShort {
            positive: pts.len(),
            required: 4,
        });
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let ss: f64 = pts
        .iter()
        .map(|&(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    Ok(JNFit {
        a: intercept.exp(),
        b: -slope,
        residual: (ss / n).sqrt(),
        lambda_range: (pts[0].0, pts[pts.len() - 1].0),
        n_samples: pts.len(),
    })
}

/// Local decay on the fragments of one rectangle: plus-part on the upper
/// fragment and minus-part on the lower, around the rectangle's optimal
/// constant. A side whose tail carries fewer than 4 usable samples is
/// reported as `None`: its decay inequality holds vacuously (this is the
/// generic situation for the plus side of time-independent benchmark
/// functions, whose fragment values sit below the rectangle constant).
pub struct LocalJN {
    pub a_r: f64,
    pub oscillation: f64,
    pub plus: Option<JNFit>,
    pub minus: Option<JNFit>,
    pub plus_samples: usize,
    pub minus_samples: usize,
    /// Lattice cells inside each fragment; zero when the fragment is thinner
    /// than the grid.
    pub plus_cells: usize,
    pub minus_cells: usize,
}

impl LocalJN {
    /// At least one side fitted, and every fitted side decays cleanly.
    pub fn passes(&self, max_residual: f64) -> bool {
        let side_ok = |f: &Option<JNFit>| {
            f.as_ref()
                .map_or(true, |fit| fit.b > 0.0 && fit.residual <= max_residual)
        };
        (self.plus.is_some() || self.minus.is_some()) && side_ok(&self.plus) && side_ok(&self.minus)
    }

    /// Does the grid resolve either fragment at all?
    pub fn resolved(&self) -> bool {
        self.plus_cells > 0 || self.minus_cells > 0
    }

    /// Nothing contradicts the decay inequality: every side that could be
    /// fitted decays cleanly. A rectangle with no tail mass at all (the
    /// generic case under the time lag for functions nonincreasing in time)
    /// is consistent vacuously.
    pub fn consistent(&self, max_residual: f64) -> bool {
        let side_ok = |f: &Option<JNFit>| {
            f.as_ref()
                .map_or(true, |fit| fit.b > 0.0 && fit.residual <= max_residual)
        };
        side_ok(&self.plus) && side_ok(&self.minus)
    }
}

fn usable_samples(samples: &DistributionSamples) -> usize {
    let floor = NOISE_FLOOR_CELLS * samples.cell_volume;
    samples
        .measures
        .iter()
        .filter(|&&m| m > 0.0 && m >= floor)
        .count()
}

pub fn local_jn(
    u: &GridFunction,
    r: &ParabolicRectangle,
    sigma: f64,
    fragment_factor: f64,
) -> Result<LocalJN> {
    let osc = rectangle_oscillation(u, r, Some(sigma))?;
    let lambdas = lambda_grid(osc.value.max(f64::MIN_POSITIVE));
    // a fragment thinner than the lattice is vacuous at this resolution,
    // not an error
    let side = |bx, sign| -> Result<(Option<DistributionSamples>, usize)> {
        let region = Region::Box(bx);
        match distribution_function(u, &region, osc.a, sign, &lambdas) {
            Ok(s) => {
                let cells = (s.base_measure / s.cell_volume).round() as usize;
                Ok((Some(s), cells))
            }
            Err(Error::EmptySet) => Ok((None, 0)),
            Err(e) => Err(e),
        }
    };
    let (up, plus_cells) = side(r.fragment(TimeSide::Upper, fragment_factor), Sign::Plus)?;
    let (lo, minus_cells) = side(r.fragment(TimeSide::Lower, fragment_factor), Sign::Minus)?;
    let samples = |s: &Option<DistributionSamples>| s.as_ref().map_or(0, usable_samples);
    Ok(LocalJN {
        a_r: osc.a,
        oscillation: osc.value,
        plus_samples: samples(&up),
        minus_samples: samples(&lo),
        plus: up.and_then(|s| fit_exponential_tail(&s).ok()),
        minus: lo.and_then(|s| fit_exponential_tail(&s).ok()),
        plus_cells,
        minus_cells,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GlobalVariant {
    /// Base set `Omega x (delta q^p, T)`.
    Cylinder,
    /// Base set `Q x (tau - (1 - delta) L^p, tau + L^p)` of a reference
    /// rectangle.
    Rectangle,
}

/// Global decay fit plus the reference constant it is measured against.
pub struct GlobalJN {
    pub fit: JNFit,
    pub c: f64,
    pub reference: ParabolicRectangle,
    pub base: Region,
}

/// Largest sigma-admissible rectangle centered at the distinguished cell at
/// mid-height of the cylinder; its optimal constant is the global reference.
pub fn reference_rectangle(
    u: &GridFunction,
    p: f64,
    sigma: f64,
    z: Cell,
) -> Result<ParabolicRectangle> {
    let d = u.domain();
    let center = d.center(z);
    let t_mid = u.horizon() / 2.0;
    let mut lo = 0.0f64;
    let mut hi = (u.horizon() / 2.0).powf(1.0 / p) / sigma + 2.0 * d.h();
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let r = ParabolicRectangle::new(center, t_mid, mid, p, d.dim());
        let ok = r.map(|r| sigma_admissible(u, &r, sigma)).unwrap_or(false);
        if ok {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo == 0.0 {
        return Err(Error::NoAdmissibleRectangle { sigma });
    }
    ParabolicRectangle::new(center, t_mid, lo * (1.0 - 1e-9), p, d.dim())
}

/// Global decay of `(u - c)^+` over the cylinder above `delta q^p` (or over
/// the delta-trimmed reference rectangle), with `c` the optimal constant of
/// the reference rectangle. When no reference is supplied, the largest
/// admissible rectangle at the distinguished cell is used.
pub fn global_jn(
    u: &GridFunction,
    qhbc: &QHBCFit,
    p: f64,
    sigma: f64,
    delta: f64,
    variant: GlobalVariant,
    scale: f64,
    reference: Option<ParabolicRectangle>,
) -> Result<GlobalJN> {
    let reference = match reference {
        Some(r) => r,
        None => reference_rectangle(u, p, sigma, qhbc.z)?,
    };
    let osc = rectangle_oscillation(u, &reference, None)?;
    let c = osc.a;
    let base = match variant {
        GlobalVariant::Cylinder => {
            let t_lo = delta * qhbc.q.powf(p);
            if t_lo >= u.horizon() {
                return Err(Error::InvalidParameter(format!(
                    "delta q^p = {t_lo} at or above the horizon {}",
                    u.horizon()
                )));
            }
            Region::Slab {
                t_lo,
                t_hi: u.horizon(),
            }
        }
        GlobalVariant::Rectangle => {
            let e = reference.temporal_half_extent();
            let mut bx = reference.whole();
            bx.t_lo = reference.center_t - (1.0 - delta) * e;
            Region::Box(bx)
        }
    };
    let lambdas = lambda_grid(scale);
    let samples = distribution_function(u, &base, c, Sign::Plus, &lambdas)?;
    Ok(GlobalJN {
        fit: fit_exponential_tail(&samples)?,
        c,
        reference,
        base,
    })
}

/// Exponential integral report; `layer_cake` is the independent quadrature
/// of the same quantity through superlevel measures.
#[derive(Clone, Debug)]
pub struct IntegrabilityReport {
    pub gamma: f64,
    pub c: f64,
    pub delta: f64,
    pub integral: f64,
    pub layer_cake: f64,
    pub base_measure: f64,
}

/// `integral of exp(gamma (u - c)^+-) over the delta-trimmed cylinder`.
/// The plus sign trims the past (`t > delta`), the minus sign trims the
/// future (`t < T - delta`).
pub fn exp_integral(
    u: &GridFunction,
    delta: f64,
    gamma: f64,
    c: f64,
    sign: Sign,
) -> Result<IntegrabilityReport> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma = {gamma} must be positive"
        )));
    }
    let region = match sign {
        Sign::Plus => Region::Slab {
            t_lo: delta,
            t_hi: u.horizon(),
        },
        Sign::Minus => Region::Slab {
            t_lo: 0.0,
            t_hi: u.horizon() - delta,
        },
    };
    let vals = region_values(u, &region);
    if vals.count() == 0 {
        return Err(Error::EmptySet);
    }
    let vol = u.cell_volume();
    let mult = vals.multiplicity() as f64;
    let base_measure = vals.count() as f64 * vol;
    let mut integral = 0.0;
    let mut devs: Vec<f64> = Vec::with_capacity(vals.base().len());
    for &v in vals.base() {
        let w = deviation(v, c, sign);
        integral += (gamma * w).exp() * vol;
        devs.push(w);
    }
    integral *= mult;
    // layer cake: |base| + gamma * int_0^inf e^(gamma s) m(s) ds on a dense
    // uniform grid, m from sorted deviations
    devs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let w_max = *devs.last().unwrap();
    let layer_cake = if w_max == 0.0 {
        base_measure
    } else {
        let n = 4096usize;
        let ds = w_max / n as f64;
        let m_at = |s: f64| -> f64 {
            let idx = devs.partition_point(|&d| d <= s);
            (devs.len() - idx) as f64 * mult * vol
        };
        let mut tail = 0.0;
        for i in 0..=n {
            let s = i as f64 * ds;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            tail += w * (gamma * s).exp() * m_at(s);
        }
        base_measure + gamma * tail * ds
    };
    Ok(IntegrabilityReport {
        gamma,
        c,
        delta,
        integral,
        layer_cake,
        base_measure,
    })
}

/// Ratio of the sigma = 1 seminorm to the sigma > 1 seminorm on matched
/// families. 0/0 counts as 1; a nonzero numerator over a zero denominator is
/// flagged as infinite.
#[derive(Clone, Debug)]
pub struct NormEquivalence {
    pub local: SeminormEstimate,
    pub global: SeminormEstimate,
    pub ratio: f64,
    pub infinite: bool,
}

pub fn norm_equivalence(
    u: &GridFunction,
    sigma: f64,
    family: &[ParabolicRectangle],
) -> Result<NormEquivalence> {
    if !(sigma > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma = {sigma} must exceed 1"
        )));
    }
    let global = pbmo_seminorm(u, 1.0, family)?;
    let local = pbmo_seminorm(u, sigma, family)?;
    let (ratio, infinite) = if local.value == 0.0 {
        if global.value == 0.0 {
            (1.0, false)
        } else {
            (f64::INFINITY, true)
        }
    } else {
        (global.value / local.value, false)
    };
    Ok(NormEquivalence {
        local,
        global,
        ratio,
        infinite,
    })
}
