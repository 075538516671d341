//! Chains of parabolic rectangles marching backward in time along
//! quasihyperbolic geodesics, the constant-cube vertical chains, and the
//! measured certificates for the four chain properties.
//!
//! The marching cube is the spatial cube of the fragment, so consecutive
//! fragments always overlap; sidelengths follow the rule
//! `l = min(beta d(x), beta (T - t)^(1/p), alpha q)` with the start
//! optionally capped at `alpha' q` and grown by doubling until the rule
//! takes over.

use crate::error::{Error, Result};
use crate::grid::{Cell, DistanceField, SpatialDomain};
use crate::parabolic::{ParabolicPoint, ParabolicRectangle, TimeSide};
use crate::qh::{geodesic, QHResult};

/// Chain construction parameters. `alpha` is derived, not chosen: it is the
/// largest value compatible with the displacement budget `eta` (given the
/// calibration constant `n_bound` with `sum l_i <= n_bound * q`) and with
/// keeping dilated rectangles above the cylinder bottom.
#[derive(Clone, Copy, Debug)]
pub struct ChainParams {
    pub beta: f64,
    pub alpha: f64,
    pub alpha_prime: f64,
    pub delta: f64,
    pub eta: f64,
    pub n_bound: f64,
    /// Distinguished point; chains end at its cell.
    pub z: [f64; 2],
    /// Fragment scale used for overlap and for the marching cube.
    pub fragment_factor: f64,
    pub p: f64,
}

impl ChainParams {
    /// Derive alpha from the displacement budget:
    /// `alpha^(p-1) <= eta / (2 N)` and `alpha <= beta ((delta - eta)/2)^(1/p)`.
    pub fn derive(
        beta: f64,
        delta: f64,
        eta: f64,
        n_bound: f64,
        p: f64,
        z: [f64; 2],
        fragment_factor: f64,
        alpha_prime: Option<f64>,
    ) -> Result<Self> {
        if !(0.0 < beta && beta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta = {beta} outside (0,1)"
            )));
        }
        if !(p > 1.0) {
            return Err(Error::InvalidParameter(format!("p = {p} must exceed 1")));
        }
        if !(eta > 0.0 && delta > eta) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < eta < delta, got eta = {eta}, delta = {delta}"
            )));
        }
        if !(n_bound >= 1.0) {
            return Err(Error::InvalidParameter(format!("n_bound = {n_bound}")));
        }
        if !(0.0 < fragment_factor && fragment_factor <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "fragment factor = {fragment_factor}"
            )));
        }
        let a_disp = (eta / (2.0 * n_bound)).powf(1.0 / (p - 1.0));
        let a_bottom = beta * ((delta - eta).max(0.0) / 2.0).powf(1.0 / p);
        let alpha = a_disp.min(a_bottom);
        let alpha_prime = alpha_prime.unwrap_or(alpha);
        if !(alpha > 0.0 && alpha_prime > 0.0) {
            return Err(Error::InvalidParameter("derived alpha is zero".into()));
        }
        Ok(ChainParams {
            beta,
            alpha,
            alpha_prime,
            delta,
            eta,
            n_bound,
            z,
            fragment_factor,
            p,
        })
    }

    /// The displacement budget used in the global decay argument.
    pub fn reference_eta(sigma: f64, delta: f64) -> f64 {
        (10.0 * sigma).powi(-10) * delta
    }
}

/// `min(beta d(x), beta (T - t)^(1/p), alpha q)` evaluated at the nearest
/// interior cell center.
pub fn sidelength_rule(
    dom: &SpatialDomain,
    df: &DistanceField,
    x: [f64; 2],
    t: f64,
    params: &ChainParams,
    q: f64,
    horizon: f64,
) -> Result<f64> {
    let cell = dom.nearest_interior_cell(x[0], x[1]).map_err(|_| {
        Error::OutsideCylinder(format!("x = ({}, {}) outside the domain", x[0], x[1]))
    })?;
    sidelength_rule_at_cell(dom, df, cell, t, params, q, horizon)
}

fn sidelength_rule_at_cell(
    dom: &SpatialDomain,
    df: &DistanceField,
    cell: Cell,
    t: f64,
    params: &ChainParams,
    q: f64,
    horizon: f64,
) -> Result<f64> {
    if t >= horizon || t <= 0.0 {
        return Err(Error::OutsideCylinder(format!(
            "t = {t} outside (0, {horizon})"
        )));
    }
    let d = df.value(dom, cell);
    Ok((params.beta * d)
        .min(params.beta * (horizon - t).powf(1.0 / params.p))
        .min(params.alpha * q))
}

/// The capped start variant `min(l, alpha' q)`.
pub fn sidelength_rule_capped(
    dom: &SpatialDomain,
    df: &DistanceField,
    x: [f64; 2],
    t: f64,
    params: &ChainParams,
    q: f64,
    horizon: f64,
) -> Result<f64> {
    Ok(sidelength_rule(dom, df, x, t, params, q, horizon)?.min(params.alpha_prime * q))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainKind {
    Geodesic,
    Vertical,
}

#[derive(Clone, Debug)]
pub struct Chain {
    pub links: Vec<ParabolicRectangle>,
    pub kind: ChainKind,
    pub start: ParabolicPoint,
    /// Center time of the final rectangle.
    pub tau: f64,
    /// Links built while the alpha' cap was still active.
    pub capped_prefix: usize,
}

fn inf_dist(n: usize, a: [f64; 2], b: [f64; 2]) -> f64 {
    (0..n).fold(0.0f64, |m, d| m.max((a[d] - b[d]).abs()))
}

/// Build the geodesic chain from `start` down to the distinguished cell the
/// shortest-path tree is rooted at.
pub fn build_chain(
    dom: &SpatialDomain,
    df: &DistanceField,
    qh: &QHResult,
    params: &ChainParams,
    q: f64,
    horizon: f64,
    start: ParabolicPoint,
) -> Result<Chain> {
    let n = dom.dim();
    let p = params.p;
    let z_cell = qh.source;
    let z_center = dom.center(z_cell);
    let start_cell = dom
        .nearest_interior_cell(start.x[0], start.x[1])
        .map_err(|_| Error::OutsideCylinder("start point outside the domain".into()))?;
    let t_floor = params.delta * q.powf(p);
    if !(start.t > t_floor && start.t < horizon) {
        return Err(Error::OutsideCylinder(format!(
            "start time {} outside ({t_floor}, {horizon})",
            start.t
        )));
    }

    let rule0 = sidelength_rule_at_cell(dom, df, start_cell, start.t, params, q, horizon)?;
    let cap = params.alpha_prime * q;
    let mut capped = cap < rule0;
    let mut capped_prefix = 0usize;

    let mut y_cell = start_cell;
    let mut y = dom.center(start_cell);
    let mut t = start.t;
    let mut l = rule0.min(cap);
    let mut links = vec![ParabolicRectangle::new(y, t, l, p, n)?];
    if capped {
        capped_prefix = 1;
    }

    const MAX_LINKS: usize = 400_000;
    loop {
        if links.len() > MAX_LINKS {
            return Err(Error::InvalidParameter(format!(
                "chain exceeded {MAX_LINKS} links without terminating"
            )));
        }
        let cube_half = params.fragment_factor * l / 2.0;
        let at_z = y_cell == z_cell;
        let t_next_frag = t - 0.75 * l.powf(p);

        if at_z && !capped {
            let rule_here = sidelength_rule_at_cell(dom, df, y_cell, t, params, q, horizon)?;
            if (l - rule_here).abs() <= 1e-12 * rule_here {
                // already the terminal rectangle
                return Ok(Chain {
                    links,
                    kind: ChainKind::Geodesic,
                    start,
                    tau: t,
                    capped_prefix,
                });
            }
        }
        if inf_dist(n, y, z_center) <= cube_half {
            // the cube reached z; recenter there if the sidelengths match
            if t_next_frag <= 0.0 {
                return Err(Error::ChainExitedBottom { t: t_next_frag });
            }
            let l_z = sidelength_rule_at_cell(dom, df, z_cell, t_next_frag, params, q, horizon)?;
            if !capped && l >= 0.5 * l_z && l <= 2.0 * l_z {
                let tau = t_next_frag - 0.75 * l_z.powf(p);
                if tau <= 0.0 {
                    return Err(Error::ChainExitedBottom { t: tau });
                }
                links.push(ParabolicRectangle::new(z_center, tau, l_z, p, n)?);
                return Ok(Chain {
                    links,
                    kind: ChainKind::Geodesic,
                    start,
                    tau,
                    capped_prefix,
                });
            }
        }

        // march: exit point of the geodesic from the marching cube, i.e. the
        // first polyline vertex outside the closed cube walking toward z
        let next_cell = if at_z {
            z_cell
        } else {
            let path_from_z = geodesic(dom, qh, y_cell)?;
            path_from_z
                .iter()
                .rev()
                .find(|c| inf_dist(n, dom.center(**c), y) > cube_half)
                .copied()
                .unwrap_or(z_cell)
        };

        if t_next_frag <= 0.0 {
            return Err(Error::ChainExitedBottom { t: t_next_frag });
        }
        let rule_next =
            sidelength_rule_at_cell(dom, df, next_cell, t_next_frag, params, q, horizon)?;
        let l_next = if capped {
            let doubled = (2.0 * l).min(rule_next);
            if doubled >= rule_next {
                capped = false;
            }
            doubled
        } else {
            rule_next
        };
        let t_next = t_next_frag - 0.75 * l_next.powf(p);
        if t_next <= 0.0 {
            return Err(Error::ChainExitedBottom { t: t_next });
        }
        y_cell = next_cell;
        y = dom.center(next_cell);
        t = t_next;
        l = l_next;
        links.push(ParabolicRectangle::new(y, t, l, p, n)?);
        if capped {
            capped_prefix = links.len();
        }
    }
}

/// Constant-cube chain between two rectangles sharing the spatial cube,
/// marching forward in time with temporal overlap at least `L^p / M`.
pub fn vertical_chain(r: &ParabolicRectangle, t_prime: f64, m: f64) -> Result<Chain> {
    if !(m >= 100.0) {
        return Err(Error::InvalidParameter(format!(
            "M = {m} must be at least 100"
        )));
    }
    let start = ParabolicPoint::new(r.center_x, r.center_t);
    if t_prime == r.center_t {
        return Ok(Chain {
            links: vec![*r],
            kind: ChainKind::Vertical,
            start,
            tau: r.center_t,
            capped_prefix: 0,
        });
    }
    let gap = t_prime - r.center_t;
    if gap < m * r.l {
        return Err(Error::InvalidParameter(format!(
            "t' - t = {gap} below the threshold M L = {}",
            m * r.l
        )));
    }
    let lp = r.l.powf(r.p);
    let max_step = 2.0 * lp - lp / m;
    let k = (gap / max_step).ceil() as usize + 1;
    let step = gap / (k - 1) as f64;
    let mut links = Vec::with_capacity(k);
    for i in 0..k {
        let t = if i + 1 == k {
            t_prime
        } else {
            r.center_t + i as f64 * step
        };
        links.push(ParabolicRectangle::new(r.center_x, t, r.l, r.p, r.n)?);
    }
    Ok(Chain {
        links,
        kind: ChainKind::Vertical,
        start,
        tau: t_prime,
        capped_prefix: 0,
    })
}

/// Seeded benchmark start points: uniform over the continuum region
/// `{d(x) >= d_min} x (t_lo, t_hi)`, snapped to cells. Sampling in continuum
/// coordinates keeps the start distribution comparable across resolutions.
pub fn seeded_starts(
    dom: &SpatialDomain,
    df: &DistanceField,
    count: usize,
    d_min: f64,
    t_lo: f64,
    t_hi: f64,
    seed: u64,
) -> Vec<ParabolicPoint> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let x0 = dom.origin();
    let ex = dom.nx() as f64 * dom.h();
    let ey = dom.ny() as f64 * dom.h();
    let mut out = Vec::with_capacity(count);
    let mut guard = 0usize;
    while out.len() < count && guard < 100_000 {
        guard += 1;
        let x = x0[0] + rng.gen_range(0.0..ex);
        let y = if dom.dim() == 1 {
            x0[1]
        } else {
            x0[1] + rng.gen_range(0.0..ey)
        };
        let t = rng.gen_range(t_lo..t_hi);
        let cell = match dom.nearest_interior_cell(x, y) {
            Ok(c) => c,
            Err(_) => continue,
        };
        if df.value(dom, cell) < d_min {
            continue;
        }
        out.push(ParabolicPoint::new(dom.center(cell), t));
    }
    out
}

/// Pass thresholds for the measured certificate.
#[derive(Clone, Copy, Debug)]
pub struct CertificateThresholds {
    pub min_overlap_ratio: f64,
    pub max_bound_constant: f64,
}

impl Default for CertificateThresholds {
    fn default() -> Self {
        CertificateThresholds {
            min_overlap_ratio: 1e-6,
            max_bound_constant: 1e4,
        }
    }
}

/// Measured evidence for the four chain properties.
#[derive(Clone, Debug)]
pub struct ChainCertificate {
    /// (ii) per-link `|U_i^- cap U_{i+1}^+| / max(|R_i|, |R_{i+1}|)`.
    pub overlap_ratios: Vec<f64>,
    pub min_overlap_ratio: f64,
    /// (i) every `beta^{-1} R_j` inside the cylinder.
    pub inclusion_ok: bool,
    /// (iii) `t - tau` and its budget `q^p eta`.
    pub displacement: f64,
    pub displacement_bound: f64,
    pub displacement_ok: bool,
    /// (iv) measured constant `k / expr`.
    pub link_count: usize,
    pub bound_expr: f64,
    pub bound_constant: f64,
    pub valid: bool,
}

/// Evaluate the certificate for a geodesic chain.
pub fn verify_chain(
    dom: &SpatialDomain,
    qh: &QHResult,
    chain: &Chain,
    params: &ChainParams,
    q: f64,
    horizon: f64,
    thresholds: &CertificateThresholds,
) -> Result<ChainCertificate> {
    let p = params.p;
    // (i) exact box inclusion of the beta^{-1} dilates
    let mut inclusion_ok = true;
    for r in &chain.links {
        let dil = r.l / params.beta;
        let e = dil.powf(p);
        let spatial = dom.cube_inside(r.center_x, dil);
        let temporal = r.center_t - e >= 0.0 && r.center_t + e <= horizon;
        if !(spatial && temporal) {
            inclusion_ok = false;
        }
    }

    // (ii) fragment overlaps, exact box intersection measures
    let ff = params.fragment_factor;
    let mut overlap_ratios = Vec::with_capacity(chain.links.len().saturating_sub(1));
    for w in chain.links.windows(2) {
        let lower = w[0].fragment(TimeSide::Lower, ff);
        let upper = w[1].fragment(TimeSide::Upper, ff);
        let inter = lower.intersect(&upper).measure();
        let denom = w[0].measure().max(w[1].measure());
        overlap_ratios.push(inter / denom);
    }
    let min_overlap_ratio = overlap_ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_overlap_ratio = if overlap_ratios.is_empty() {
        f64::INFINITY
    } else {
        min_overlap_ratio
    };

    // (iii)
    let displacement = chain.start.t - chain.tau;
    let displacement_bound = q.powf(p) * params.eta;
    let displacement_ok = displacement >= 0.0 && displacement <= displacement_bound;

    // (iv)
    let start_cell = dom.nearest_interior_cell(chain.start.x[0], chain.start.x[1])?;
    let k_xz = qh.distance(dom, start_cell);
    let bound_expr = k_xz
        + (horizon / (horizon - chain.start.t)).ln()
        + (params.alpha / params.alpha_prime + 1.0).ln()
        + 1.0 / params.alpha
        + 1.0;
    let link_count = chain.links.len();
    let bound_constant = link_count as f64 / bound_expr;

    let overlap_ok = overlap_ratios.is_empty() || min_overlap_ratio >= thresholds.min_overlap_ratio;
    let valid = inclusion_ok
        && overlap_ok
        && displacement_ok
        && bound_constant <= thresholds.max_bound_constant;
    Ok(ChainCertificate {
        overlap_ratios,
        min_overlap_ratio,
        inclusion_ok,
        displacement,
        displacement_bound,
        displacement_ok,
        link_count,
        bound_expr,
        bound_constant,
        valid,
    })
}

/// CSV export: one row per link, then a certificate summary row.
pub fn chain_csv(chain: &Chain, cert: Option<&ChainCertificate>) -> String {
    let n = chain.links.first().map(|r| r.n).unwrap_or(1);
    let mut out = String::new();
    if n == 1 {
        out.push_str("j,yx,t,l\n");
        for (j, r) in chain.links.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                j + 1,
                r.center_x[0],
                r.center_t,
                r.l
            ));
        }
    } else {
        out.push_str("j,yx,yy,t,l\n");
        for (j, r) in chain.links.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                j + 1,
                r.center_x[0],
                r.center_x[1],
                r.center_t,
                r.l
            ));
        }
    }
    if let Some(c) = cert {
        out.push_str(&format!(
            "# certificate,valid={},min_overlap={},inclusion={},displacement={},bound={},links={},C={}\n",
            c.valid,
            c.min_overlap_ratio,
            c.inclusion_ok,
            c.displacement,
            c.displacement_bound,
            c.link_count,
            c.bound_constant
        ));
    }
    out
}
