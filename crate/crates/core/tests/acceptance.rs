//! End-to-end acceptance suite. Each test covers one numbered criterion at
//! its stated tolerance and prints a single pass/fail line (visible with
//! `cargo test --test acceptance -- --nocapture`).

use std::sync::Arc;
use std::time::Instant;

use pbmo_core::chain::*;
use pbmo_core::grid::*;
use pbmo_core::gridfn::GridFunction;
use pbmo_core::jn::*;
use pbmo_core::oscillation::*;
use pbmo_core::parabolic::*;
use pbmo_core::pde::*;
use pbmo_core::qh::*;

fn ulps_apart(a: f64, b: f64) -> u64 {
    (a.to_bits() as i64).abs_diff(b.to_bits() as i64)
}

struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn report(criterion: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion:02} {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({name}) failed: {detail}");
}

#[test]
fn accept_01_quasihyperbolic_oracle() {
    let t0 = Instant::now();
    let h = 1.0 / 256.0;
    let dom = SpatialDomain::rect(-4.0, 4.0, 0.0, 1.0, h).unwrap();
    let df = distance_to_boundary(&dom).unwrap();
    let qh = quasihyperbolic_distances(&dom, &df, 0.0, 0.1).unwrap();
    let k = qh.distance_at(&dom, 0.0, 0.4).unwrap();
    let exact = 4.0f64.ln();
    let rel = (k - exact).abs() / exact;
    let elapsed = t0.elapsed();
    report(
        1,
        "quasihyperbolic sandwich oracle",
        rel < 0.03 && elapsed.as_secs_f64() < 10.0,
        &format!(
            "k = {k:.6}, log 4 = {exact:.6}, rel = {:.3}%, {elapsed:?}",
            100.0 * rel
        ),
    );
}

#[test]
fn accept_02_distance_field_bitexact() {
    let doms = [
        SpatialDomain::rect(0.0, 1.0, 0.0, 0.5, 1.0 / 32.0).unwrap(),
        SpatialDomain::disk(0.0, 0.0, 0.5, 1.0 / 48.0).unwrap(),
        SpatialDomain::l_shape(1.0, 1.0 / 64.0).unwrap(),
        SpatialDomain::interval(0.0, 1.0, 1.0 / 512.0).unwrap(),
    ];
    let mut checked = 0usize;
    for dom in &doms {
        assert!(dom.nx() * dom.ny() <= 10_000);
        let fast = distance_to_boundary(dom).unwrap();
        let brute = distance_to_boundary_brute(dom).unwrap();
        for (a, b) in fast.values().iter().zip(brute.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
            checked += 1;
        }
    }
    report(
        2,
        "distance transform vs brute force",
        true,
        &format!(
            "{checked} cells bit-identical across {} domains",
            doms.len()
        ),
    );
}

#[test]
fn accept_03_parabolic_algebra() {
    let mut rng = Lcg(2024);
    let mut worst_formula = 0u64;
    let mut worst_scaling = 0u64;
    for _ in 0..1000 {
        let l = 0.05 + 4.0 * rng.next();
        let p = 1.05 + 2.45 * rng.next();
        let n = 1 + (rng.next() * 2.0) as usize;
        let lam = 0.1 + 8.0 * rng.next();
        let r = ParabolicRectangle::new([0.0, 0.0], 0.0, l, p, n).unwrap();
        let lp = l.powf(p);
        let closed = |t_extent: f64, side: f64| {
            let mut m = t_extent;
            for _ in 0..n {
                m *= side;
            }
            m
        };
        // |R|, |S^+-| straight off the half-open boxes
        worst_formula = worst_formula
            .max(ulps_apart(r.whole().measure(), closed(2.0 * lp, l)))
            .max(ulps_apart(
                r.quarter(TimeSide::Upper).measure(),
                closed(lp / 2.0, l),
            ))
            .max(ulps_apart(
                r.quarter(TimeSide::Lower).measure(),
                closed(lp / 2.0, l),
            ));
        // |U^+-| via the measure of the (1/8)-scaled rectangle's quarter
        // (fragments are translates of it, and translated endpoint
        // subtraction costs cancellation, not measure)
        let eighth = r.scaled(0.125).unwrap();
        let u_formula = closed((l / 8.0).powf(p) / 2.0, l / 8.0);
        worst_formula = worst_formula.max(ulps_apart(
            eighth.quarter(TimeSide::Upper).measure(),
            u_formula,
        ));
        let frag = r.fragment(TimeSide::Upper, 0.125).measure();
        let cancel = closed(0.75 * lp, l / 8.0);
        assert!((frag - u_formula).abs() <= 8.0 * f64::EPSILON * (u_formula + cancel));
        // scaling law |lambda R| = lambda^(n+p) |R|; two powf routes cannot
        // agree to one ulp, machine-precision budget of 16
        let scaled = r.scaled(lam).unwrap().measure();
        let factor = lam.powf(n as f64 + p) * r.measure();
        worst_scaling = worst_scaling.max(ulps_apart(scaled, factor));
    }
    assert!(
        worst_formula <= 1,
        "measure formulas {worst_formula} ulps apart"
    );
    assert!(
        worst_scaling <= 16,
        "scaling law {worst_scaling} ulps apart"
    );

    // upper quarters are metric balls for C_p = 2^((2-p)/p)
    let mut mismatches = 0usize;
    let mut tested = 0usize;
    for &(n, p) in &[(1usize, 2.0f64), (2, 1.5), (2, 2.7)] {
        let r = ParabolicRectangle::new([0.0, 0.0], 0.0, 1.3, p, n).unwrap();
        let quarter = r.quarter(TimeSide::Upper);
        let cp = ball_c_p(p);
        let center = ParabolicPoint::new(r.center_x, r.center_t + 0.75 * r.temporal_half_extent());
        for _ in 0..10_000 {
            let pt = ParabolicPoint::new(
                [3.0 * rng.next() - 1.5, 3.0 * rng.next() - 1.5],
                4.0 * rng.next() - 1.0,
            );
            let in_box = quarter.contains(pt);
            let in_ball = parabolic_distance(pt, center, n, p, cp) < r.l / 2.0;
            if in_box != in_ball {
                mismatches += 1;
            }
            tested += 1;
        }
    }
    report(
        3,
        "parabolic measure algebra",
        mismatches == 0,
        &format!(
            "formulas <= {worst_formula} ulp, scaling law <= {worst_scaling} ulps, ball membership {mismatches}/{tested} mismatches"
        ),
    );
}

#[test]
fn accept_04_oscillation_oracle() {
    // 200 random instances against a brute-force candidate scan
    let mut rng = Lcg(4);
    for _ in 0..200 {
        let nu = 1 + (rng.next() * 12.0) as usize;
        let nl = 1 + (rng.next() * 12.0) as usize;
        let upper: Vec<f64> = (0..nu).map(|_| (rng.next() * 8.0).round() / 2.0).collect();
        let lower: Vec<f64> = (0..nl).map(|_| (rng.next() * 8.0).round() / 2.0).collect();
        let exact = best_constant_values(&upper, &lower, 1.0);
        let mut cands: Vec<f64> = upper.iter().chain(lower.iter()).cloned().collect();
        cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cands.dedup();
        let mids: Vec<f64> = cands.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        cands.extend(mids);
        let scan = cands
            .iter()
            .map(|&a| oscillation_objective(&upper, &lower, a, 1.0))
            .fold(f64::INFINITY, f64::min);
        assert!(exact.value <= scan + 1e-12);
    }
    // exact step values
    let up = best_constant_values(&[1.0, 1.0], &[0.0, 0.0], 1.0);
    assert_eq!(up.value, 1.0);
    let down = best_constant_values(&[0.0, 0.0], &[1.0, 1.0], 1.0);
    assert_eq!(down.value, 0.0);
    // nonincreasing-in-time functions have seminorm exactly zero
    let dom = Arc::new(SpatialDomain::interval(0.0, 1.0, 1.0 / 32.0).unwrap());
    let fns: [fn(f64, f64) -> f64; 3] = [
        |_x, t| -t,
        |_x, t| if t > 0.5 { -2.0 } else { 1.0 },
        |_x, t| -(t * t),
    ];
    let mut zeros = 0;
    for f in fns {
        let mut vals = Vec::new();
        for it in 0..64 {
            let t = (it as f64 + 0.5) / 64.0;
            for ix in 0..dom.nx() {
                let x = (ix as f64 + 0.5) / 32.0;
                vals.push(f(x, t));
            }
        }
        let u = GridFunction::full(dom.clone(), 64, 1.0 / 64.0, vals).unwrap();
        let fam = generate_family(&u, 2.0, &FamilySpec::default());
        let s = pbmo_seminorm(&u, 1.0, &fam).unwrap();
        assert_eq!(s.value, 0.0);
        zeros += 1;
    }
    report(
        4,
        "oscillation oracle",
        true,
        &format!("200 scans matched, steps exact, {zeros} monotone functions at seminorm 0"),
    );
}

/// Chain benchmark parameters shared by criterion 5 and the CLI examples.
fn chain_benchmark(h: f64) -> (f64, f64, f64, usize, usize, f64) {
    let dom = SpatialDomain::l_shape(1.0, h).unwrap();
    let df = distance_to_boundary(&dom).unwrap();
    let z = [0.25, 0.25];
    let qh = quasihyperbolic_distances(&dom, &df, z[0], z[1]).unwrap();
    let q = max_geodesic_length(&dom, &qh);
    let horizon = 6.0;
    let params = ChainParams::derive(0.5, 1.3, 1.0, 6.0, 2.0, z, 0.75, None).unwrap();
    let floor = params.delta * q * q;
    let starts = seeded_starts(&dom, &df, 100, 0.1, 1.05 * floor, 0.95 * horizon, 99);
    assert_eq!(starts.len(), 100);
    let thresholds = CertificateThresholds {
        min_overlap_ratio: 1e-3,
        max_bound_constant: 4.0,
    };
    let mut pass_i = 0usize;
    let mut pass_iii = 0usize;
    let mut min_ratio = f64::INFINITY;
    let mut max_c = 0.0f64;
    let mut sum_l_over_q = 0.0f64;
    for s in &starts {
        let chain = build_chain(&dom, &df, &qh, &params, q, horizon, *s).unwrap();
        let cert = verify_chain(&dom, &qh, &chain, &params, q, horizon, &thresholds).unwrap();
        assert!(cert.valid, "certificate invalid at start {s:?}");
        if cert.inclusion_ok {
            pass_i += 1;
        }
        if cert.displacement_ok {
            pass_iii += 1;
        }
        min_ratio = min_ratio.min(cert.min_overlap_ratio);
        max_c = max_c.max(cert.bound_constant);
        let suml: f64 = chain.links.iter().map(|r| r.l).sum();
        sum_l_over_q = sum_l_over_q.max(suml / q);
    }
    // the calibration constant really does bound sum(l)/q
    assert!(sum_l_over_q <= params.n_bound);
    (min_ratio, max_c, q, pass_i, pass_iii, sum_l_over_q)
}

#[test]
fn accept_05_chain_certificates() {
    let (c0, cmax, _, pass_i, pass_iii, _) = chain_benchmark(1.0 / 128.0);
    let (c0_fine, _, _, pass_i_f, pass_iii_f, _) = chain_benchmark(1.0 / 256.0);
    let ratio = (c0_fine / c0).max(c0 / c0_fine);
    let pass = pass_i == 100
        && pass_iii == 100
        && pass_i_f == 100
        && pass_iii_f == 100
        && c0 >= 1e-3
        && c0_fine >= 1e-3
        && ratio <= 2.0
        && cmax <= 4.0;
    report(
        5,
        "chain certificates on the L-shape",
        pass,
        &format!(
            "(i) {pass_i}/100, (iii) {pass_iii}/100, c0 = {c0:.3e} -> {c0_fine:.3e} (x{ratio:.2}), C = {cmax:.2}"
        ),
    );
}

fn disk_benchmark(h: f64, nt: usize) -> (Arc<SpatialDomain>, DistanceField, GridFunction, QHBCFit) {
    let dom = Arc::new(SpatialDomain::disk(0.0, 0.0, 1.0, h).unwrap());
    let df = distance_to_boundary(&dom).unwrap();
    let u = GridFunction::neg_log_distance(dom.clone(), &df, nt, 2.0 / nt as f64).unwrap();
    let qh = quasihyperbolic_distances(&dom, &df, 0.0, 0.0).unwrap();
    let qhbc = fit_qhbc(&dom, &df, &qh).unwrap();
    (dom, df, u, qhbc)
}

fn disk_family(u: &GridFunction) -> Vec<ParabolicRectangle> {
    generate_family(
        u,
        2.0,
        &FamilySpec {
            levels: 2,
            per_level_cap: 128,
            n_random: 64,
            l_min_factor: 0.5,
            seed: 11,
        },
    )
}

#[test]
fn accept_06_local_john_nirenberg() {
    let (_, _, u, _) = disk_benchmark(1.0 / 128.0, 2048);
    let fam = disk_family(&u);
    let mut pass = 0usize;
    let mut total = 0usize;
    for r in &fam {
        total += 1;
        let l = local_jn(&u, r, 1.0, 0.125).unwrap();
        if l.passes(0.5) {
            pass += 1;
        }
    }
    let frac = pass as f64 / total as f64;
    report(
        6,
        "local decay fits on the disk",
        frac >= 0.95,
        &format!(
            "{pass}/{total} rectangles fit B > 0 at residual <= 0.5 ({:.1}%)",
            100.0 * frac
        ),
    );
}

#[test]
fn accept_07_global_john_nirenberg_and_exponential_integrals() {
    let (_, _, u, qhbc) = disk_benchmark(1.0 / 64.0, 1024);
    let fam = disk_family(&u);
    let scale = pbmo_seminorm(&u, 1.0, &fam).unwrap().value;
    let g = global_jn(
        &u,
        &qhbc,
        2.0,
        1.0,
        0.05,
        GlobalVariant::Cylinder,
        scale,
        None,
    )
    .unwrap();
    assert!(g.fit.b > 0.0, "global B = {}", g.fit.b);
    assert!(
        g.fit.residual <= 0.5,
        "global residual = {}",
        g.fit.residual
    );

    let gamma = g.fit.b / 2.0;
    let plus = exp_integral(&u, 0.05, gamma, g.c, Sign::Plus).unwrap();
    let minus = exp_integral(&u, 0.05, gamma, g.c, Sign::Minus).unwrap();
    assert!(plus.integral.is_finite() && minus.integral.is_finite());

    let (_, _, uf, qhbc_f) = disk_benchmark(1.0 / 128.0, 2048);
    let plus_f = exp_integral(&uf, 0.05, gamma, g.c, Sign::Plus).unwrap();
    let minus_f = exp_integral(&uf, 0.05, gamma, g.c, Sign::Minus).unwrap();
    let drift_plus = (plus_f.integral / plus.integral - 1.0).abs();
    let drift_minus = (minus_f.integral / minus.integral - 1.0).abs();

    // the fitted decay rate must not degrade by more than a factor 2 under
    // one refinement
    let g_fine = global_jn(
        &uf,
        &qhbc_f,
        2.0,
        1.0,
        0.05,
        GlobalVariant::Cylinder,
        scale,
        None,
    )
    .unwrap();
    let b_kept = g_fine.fit.b >= g.fit.b / 2.0;
    report(
        7,
        "global decay and exponential integrability",
        drift_plus <= 0.05 && drift_minus <= 0.05 && b_kept,
        &format!(
            "B = {:.3} -> {:.3} (residual {:.3}), gamma = {gamma:.3}, integral drift +{:.2}% / -{:.2}%",
            g.fit.b,
            g_fine.fit.b,
            g.fit.residual,
            100.0 * drift_plus,
            100.0 * drift_minus
        ),
    );
}

fn heat_field(h: f64, nt: usize) -> GridFunction {
    let dom = Arc::new(SpatialDomain::interval(0.0, 1.0, h).unwrap());
    solve_model_equation(
        dom,
        0.5,
        2.0,
        &BoundarySpec::HeatExp,
        &BoundarySpec::HeatExp,
        &SchemeParams::new(h * h / 4.0, nt),
    )
    .unwrap()
    .f
}

fn heat_family(f: &GridFunction) -> Vec<ParabolicRectangle> {
    generate_family(
        f,
        2.0,
        &FamilySpec {
            levels: 3,
            per_level_cap: 96,
            n_random: 64,
            l_min_factor: 0.25,
            seed: 5,
        },
    )
}

#[test]
fn accept_08_norm_equivalence() {
    const C_STAR: f64 = 8.0;
    let mut ratios = Vec::new();
    for (h, nt) in [(1.0 / 64.0, 1024usize), (1.0 / 128.0, 2048)] {
        let (_, _, u, _) = disk_benchmark(h, nt);
        let fam = disk_family(&u);
        let ne = norm_equivalence(&u, 2.0, &fam).unwrap();
        ratios.push(("disk", h, ne.ratio, ne.infinite));
    }
    for (h, nt) in [(1.0 / 64.0, 128usize), (1.0 / 128.0, 256)] {
        let f = heat_field(h, nt);
        let u = f.map(|v| -v.ln());
        let fam = heat_family(&f);
        let ne = norm_equivalence(&u, 2.0, &fam).unwrap();
        ratios.push(("heat", h, ne.ratio, ne.infinite));
    }
    let pass = ratios
        .iter()
        .all(|&(_, _, r, inf)| !inf && (1.0..=C_STAR).contains(&r));
    let detail: Vec<String> = ratios
        .iter()
        .map(|(n, h, r, _)| format!("{n} h=1/{:.0}: {r:.3}", 1.0 / h))
        .collect();
    report(
        8,
        "local-to-global seminorm ratio",
        pass,
        &format!("C* = {C_STAR}; {}", detail.join(", ")),
    );
}

#[test]
fn accept_09_pde_exact_solution() {
    let t0 = Instant::now();
    let err = |h: f64| -> f64 {
        let f = heat_field(h, 64);
        let dom = f.domain();
        let mut worst = 0.0f64;
        for it in 0..f.nt() {
            let t = f.time_center(it);
            for c in dom.interior_cells() {
                let x = dom.center(c)[0];
                worst = worst.max((f.value(c, it) - (x + t).exp()).abs());
            }
        }
        worst
    };
    let e64 = err(1.0 / 64.0);
    let e128 = err(1.0 / 128.0);
    let ratio = e64 / e128;
    let elapsed = t0.elapsed();
    report(
        9,
        "doubly nonlinear solver vs exact solution",
        e64 <= 5e-3 && (3.2..=4.8).contains(&ratio) && elapsed.as_secs_f64() < 60.0,
        &format!("max error {e64:.2e} at h = 1/64, refinement ratio {ratio:.2}, {elapsed:?}"),
    );
}

#[test]
fn accept_10_supersolution_pipeline() {
    let dom = Arc::new(SpatialDomain::interval(0.0, 1.0, 1.0 / 64.0).unwrap());
    let field = solve_model_equation(
        dom,
        0.5,
        2.0,
        &BoundarySpec::HeatExp,
        &BoundarySpec::HeatExp,
        &SchemeParams::new((1.0f64 / 64.0).powi(2) / 4.0, 128),
    )
    .unwrap();
    let verdict = verify_supersolution(&field.f, &field.constants, &BumpFamily::default()).unwrap();
    assert!(
        verdict.pass,
        "weak form failed: worst {}",
        verdict.worst_value
    );

    let fam = heat_family(&field.f);
    let reports = lemma62_check(&field.f, 2.0, 2.0, &fam, 0.2);
    let passn = reports.iter().filter(|r| r.pass).count();
    let frac62 = passn as f64 / reports.len() as f64;
    assert!(
        frac62 >= 0.9,
        "measure decay passed on {passn}/{} rectangles",
        reports.len()
    );

    // power-b seminorm of -log f stable within 20% across two refinements
    let mut values = Vec::new();
    for (h, nt) in [
        (1.0 / 64.0, 128usize),
        (1.0 / 128.0, 256),
        (1.0 / 256.0, 512),
    ] {
        let f = heat_field(h, nt);
        let fam = heat_family(&f);
        let lp = log_pbmo_check(&f, 2.0, 2.0, &fam).unwrap();
        values.push(lp.power.value);
    }
    let spread = values
        .iter()
        .map(|&v| (v / values[0] - 1.0).abs())
        .fold(0.0, f64::max);
    assert!(
        spread <= 0.2,
        "log-seminorm drifted {:.1}% over refinements",
        100.0 * spread
    );

    let coarse = heat_field(1.0 / 64.0, 128);
    let refined = heat_field(1.0 / 128.0, 256);
    let rep = global_integrability(&coarse, &refined, 2.0, 2.0, 0.05, 0.05).unwrap();
    report(
        10,
        "supersolution pipeline",
        rep.stable && rep.eps >= 0.05,
        &format!(
            "weak form ok, decay {passn}/{} ({:.0}%), seminorm drift {:.1}%, eps = {} (integral {:.4} vs {:.4})",
            reports.len(),
            100.0 * frac62,
            100.0 * spread,
            rep.eps,
            rep.integral,
            rep.integral_refined
        ),
    );
}
