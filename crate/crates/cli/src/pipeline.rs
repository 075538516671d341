//! Builds lab objects from a config, runs subcommand pipelines, and emits
//! CSV reports plus a run manifest. Output files are written atomically
//! (write to a temp name, then rename).

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use pbmo_core::chain::*;
use pbmo_core::cover::whitney_cover;
use pbmo_core::grid::{distance_to_boundary, Cell, DistanceField, SpatialDomain};
use pbmo_core::gridfn::GridFunction;
use pbmo_core::jn::*;
use pbmo_core::oscillation::*;
use pbmo_core::parabolic::ParabolicRectangle;
use pbmo_core::pde::*;
use pbmo_core::qh::*;
use pbmo_core::{Error, Result};

use crate::config::Config;

pub struct Lab {
    cfg: Config,
    out: PathBuf,
    pub seed: u64,
    refine: u32,
    files: Vec<String>,
    timings: Vec<(String, f64)>,
    // lazily built shared state
    domain: Option<Arc<SpatialDomain>>,
    df: Option<DistanceField>,
    qh: Option<QHResult>,
    field: Option<GridFunction>,
    solved: Option<SupersolutionField>,
}

fn scale(base: f64, refine: u32, factor: f64) -> f64 {
    base * factor.powi(refine as i32)
}

impl Lab {
    pub fn new(cfg: Config, out: PathBuf, seed_override: Option<u64>, refine: u32) -> Result<Lab> {
        let seed = match seed_override {
            Some(s) => s,
            None => cfg.u64_or("", "seed", 0)?,
        };
        std::fs::create_dir_all(&out)?;
        Ok(Lab {
            cfg,
            out,
            seed,
            refine,
            files: Vec::new(),
            timings: Vec::new(),
            domain: None,
            df: None,
            qh: None,
            field: None,
            solved: None,
        })
    }

    fn h(&self) -> Result<f64> {
        let base = self.cfg.f64_or("domain", "h", 1.0 / 64.0)?;
        Ok(scale(base, self.refine, 0.5))
    }

    fn nt(&self) -> Result<usize> {
        let base = self.cfg.usize_or("cylinder", "nt", 256)?;
        Ok(base << self.refine)
    }

    fn horizon(&self) -> Result<f64> {
        self.cfg.f64_or("cylinder", "T", 1.0)
    }

    fn p(&self) -> Result<f64> {
        self.cfg.f64_or("cylinder", "p", 2.0)
    }

    fn sigma(&self) -> Result<f64> {
        self.cfg.f64_or("cylinder", "sigma", 1.0)
    }

    fn z(&self) -> Result<[f64; 2]> {
        Ok([
            self.cfg.f64_or("point", "zx", f64::NAN)?,
            self.cfg.f64_or("point", "zy", 0.0)?,
        ])
    }

    pub fn domain(&mut self) -> Result<Arc<SpatialDomain>> {
        if let Some(d) = &self.domain {
            return Ok(d.clone());
        }
        let h = self.h()?;
        let kind = self.cfg.str_or("domain", "kind", "interval").to_string();
        let dom = match kind.as_str() {
            "interval" => SpatialDomain::interval(
                self.cfg.f64_or("domain", "x0", 0.0)?,
                self.cfg.f64_or("domain", "x1", 1.0)?,
                h,
            )?,
            "rect" => SpatialDomain::rect(
                self.cfg.f64_or("domain", "x0", 0.0)?,
                self.cfg.f64_or("domain", "x1", 1.0)?,
                self.cfg.f64_or("domain", "y0", 0.0)?,
                self.cfg.f64_or("domain", "y1", 1.0)?,
                h,
            )?,
            "disk" => SpatialDomain::disk(
                self.cfg.f64_or("domain", "cx", 0.0)?,
                self.cfg.f64_or("domain", "cy", 0.0)?,
                self.cfg.f64_or("domain", "radius", 1.0)?,
                h,
            )?,
            "lshape" => SpatialDomain::l_shape(self.cfg.f64_or("domain", "size", 1.0)?, h)?,
            "file" => {
                let path = self.cfg.require("domain", "path")?;
                if self.refine > 0 {
                    return Err(Error::InvalidParameter(
                        "--refine is unsupported for mask-file domains".into(),
                    ));
                }
                SpatialDomain::parse_mask(&std::fs::read_to_string(path)?)?
            }
            other => {
                return Err(Error::Parse(format!("unknown domain kind '{other}'")));
            }
        };
        let dom = Arc::new(dom);
        self.domain = Some(dom.clone());
        Ok(dom)
    }

    fn distance_field(&mut self) -> Result<DistanceField> {
        if self.df.is_none() {
            let dom = self.domain()?;
            self.df = Some(distance_to_boundary(&dom)?);
        }
        Ok(self.df.clone().unwrap())
    }

    fn qh_result(&mut self) -> Result<QHResult> {
        if self.qh.is_none() {
            let dom = self.domain()?;
            let df = self.distance_field()?;
            let z = self.z()?;
            let (zx, zy) = if z[0].is_nan() {
                // default: the deepest interior cell
                let mut best = (0.0f64, Cell { ix: 0, iy: 0 });
                for c in dom.interior_cells() {
                    let v = df.value(&dom, c);
                    if v > best.0 {
                        best = (v, c);
                    }
                }
                let [x, y] = dom.center(best.1);
                (x, y)
            } else {
                (z[0], z[1])
            };
            self.qh = Some(quasihyperbolic_distances(&dom, &df, zx, zy)?);
        }
        Ok(self.qh.clone().unwrap())
    }

    pub fn field(&mut self) -> Result<GridFunction> {
        if let Some(f) = &self.field {
            return Ok(f.clone());
        }
        let kind = self.cfg.str_or("field", "kind", "logdist").to_string();
        let nt = self.nt()?;
        let horizon = self.horizon()?;
        let tstep = horizon / nt as f64;
        let f = match kind.as_str() {
            "logdist" => {
                let dom = self.domain()?;
                let df = self.distance_field()?;
                GridFunction::neg_log_distance(dom, &df, nt, tstep)?
            }
            "constant" => {
                let dom = self.domain()?;
                let v = self.cfg.f64_or("field", "value", 1.0)?;
                GridFunction::constant(dom, nt, tstep, v)?
            }
            "solve" => self.solve_field()?.f,
            "file" => {
                let path = self.cfg.require("field", "path")?;
                GridFunction::parse_csv(&std::fs::read_to_string(path)?)?
            }
            other => {
                return Err(Error::Parse(format!("unknown field kind '{other}'")));
            }
        };
        self.field = Some(f.clone());
        Ok(f)
    }

    fn boundary_spec(&self, key: &str) -> Result<BoundarySpec> {
        let raw = self.cfg.str_or("pde", key, "exact:heat_exp");
        if raw == "exact:heat_exp" || raw == "heat_exp" {
            return Ok(BoundarySpec::HeatExp);
        }
        if let Some(v) = raw.strip_prefix("constant:") {
            let v: f64 = v
                .parse()
                .map_err(|_| Error::Parse(format!("[pde] {key} = {raw}")))?;
            return Ok(BoundarySpec::Constant(v));
        }
        if let Some(path) = raw.strip_prefix("file:") {
            let text = std::fs::read_to_string(path)?;
            return Ok(BoundarySpec::Sampled(Arc::new(GridFunction::parse_csv(
                &text,
            )?)));
        }
        Err(Error::Parse(format!("unknown [pde] {key} spec '{raw}'")))
    }

    fn scheme(&self) -> Result<SchemeParams> {
        let h = self.h()?;
        let tau_base = self.cfg.f64_or("pde", "tau", h * h / 4.0)?;
        let tau = if self.cfg.get("pde", "tau").is_some() {
            scale(tau_base, self.refine, 0.25)
        } else {
            tau_base // already includes the refined h
        };
        let mut scheme = SchemeParams::new(tau, self.nt()?);
        scheme.eps_reg = self.cfg.f64_or("pde", "eps_reg", 1e-8)?;
        Ok(scheme)
    }

    fn solve_field(&mut self) -> Result<SupersolutionField> {
        if let Some(s) = &self.solved {
            return Ok(s.clone());
        }
        let dom = self.domain()?;
        let field = solve_model_equation(
            dom,
            self.horizon()?,
            self.p()?,
            &self.boundary_spec("initial")?,
            &self.boundary_spec("boundary")?,
            &self.scheme()?,
        )?;
        self.solved = Some(field.clone());
        Ok(field)
    }

    /// The function the oscillation pipelines act on: the field itself, or
    /// `-log f` for solver output (the natural membership candidate).
    fn bmo_field(&mut self) -> Result<GridFunction> {
        let f = self.field()?;
        let default = if self.cfg.str_or("field", "kind", "logdist") == "solve" {
            "neglog"
        } else {
            "identity"
        };
        match self.cfg.str_or("field", "bmo", default) {
            "identity" => Ok(f),
            "neglog" => Ok(f.map(|v| -v.ln())),
            other => Err(Error::Parse(format!(
                "unknown [field] bmo transform '{other}'"
            ))),
        }
    }

    fn family_spec(&self) -> Result<FamilySpec> {
        Ok(FamilySpec {
            levels: self.cfg.usize_or("seminorm", "levels", 3)?,
            per_level_cap: self.cfg.usize_or("seminorm", "per_level", 128)?,
            n_random: self.cfg.usize_or("seminorm", "random", 64)?,
            l_min_factor: self.cfg.f64_or("seminorm", "l_min_factor", 0.25)?,
            seed: self.seed,
        })
    }

    fn family(&mut self) -> Result<Vec<ParabolicRectangle>> {
        let f = self.field()?;
        let p = self.p()?;
        Ok(generate_family(&f, p, &self.family_spec()?))
    }

    /// Fragment fits need chunkier rectangles than the seminorm; [jn] keys
    /// override the [seminorm] family shape when present.
    fn jn_family(&mut self) -> Result<Vec<ParabolicRectangle>> {
        let base = self.family_spec()?;
        let spec = FamilySpec {
            levels: self.cfg.usize_or("jn", "levels", base.levels)?,
            per_level_cap: self.cfg.usize_or("jn", "per_level", base.per_level_cap)?,
            n_random: self.cfg.usize_or("jn", "random", base.n_random)?,
            l_min_factor: self.cfg.f64_or("jn", "l_min_factor", base.l_min_factor)?,
            seed: base.seed,
        };
        let f = self.field()?;
        let p = self.p()?;
        Ok(generate_family(&f, p, &spec))
    }

    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.out.join(name);
        let tmp = self.out.join(format!(".{name}.tmp"));
        std::fs::write(&tmp, content)?;
        std::fs::rename(&tmp, &path)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn timed<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let t0 = Instant::now();
        let r = f(self);
        self.timings
            .push((name.to_string(), t0.elapsed().as_secs_f64()));
        r
    }

    // ----- subcommand pipelines; each returns its verdict -----

    pub fn run_qh(&mut self) -> Result<bool> {
        self.timed("qh", |lab| {
            let dom = lab.domain()?;
            let df = lab.distance_field()?;
            let qh = lab.qh_result()?;
            let mut csv = String::from("ix,iy,d,k\n");
            for c in dom.interior_cells() {
                let i = dom.idx(c);
                writeln!(
                    csv,
                    "{},{},{},{}",
                    c.ix,
                    c.iy,
                    df.values()[i],
                    qh.distances()[i]
                )
                .unwrap();
            }
            lab.write("qh.csv", &csv)?;
            let fit = fit_qhbc(&dom, &df, &qh)?;
            let mut summary = String::from("K,q,nu,worst_residual\n");
            writeln!(
                summary,
                "{},{},{},{}",
                fit.k_const, fit.q, fit.nu, fit.worst_residual
            )
            .unwrap();
            lab.write("qhbc.csv", &summary)?;
            let mut shells = String::from("shell,measure\n");
            for (k, m) in &fit.shells {
                writeln!(shells, "{k},{m}").unwrap();
            }
            lab.write("qhbc_shells.csv", &shells)?;
            Ok(fit.worst_residual <= 0.0)
        })
    }

    pub fn run_cover(&mut self) -> Result<bool> {
        self.timed("cover", |lab| {
            let dom = lab.domain()?;
            let df = lab.distance_field()?;
            let beta = lab.cfg.f64_or("cover", "beta", 0.5)?;
            let cap = lab.cfg.f64_or("cover", "cap", 0.25)?;
            let z = lab.z()?;
            let first = if z[0].is_nan() { None } else { Some(z) };
            let cover = whitney_cover(&dom, &df, beta, cap, first)?;
            let mut csv = if dom.dim() == 1 {
                String::from("cx,l\n")
            } else {
                String::from("cx,cy,l\n")
            };
            for q in &cover.cubes {
                if dom.dim() == 1 {
                    writeln!(csv, "{},{}", q.center[0], q.l).unwrap();
                } else {
                    writeln!(csv, "{},{},{}", q.center[0], q.center[1], q.l).unwrap();
                }
            }
            lab.write("cover.csv", &csv)?;
            let mut stats = String::from("cubes,max_overlap,mean_overlap\n");
            writeln!(
                stats,
                "{},{},{}",
                cover.cubes.len(),
                cover.max_overlap,
                cover.mean_overlap
            )
            .unwrap();
            lab.write("cover_stats.csv", &stats)?;
            Ok(true)
        })
    }

    fn chain_params(&mut self) -> Result<(ChainParams, f64, f64)> {
        let dom = self.domain()?;
        let qh = self.qh_result()?;
        let q = max_geodesic_length(&dom, &qh);
        let horizon = self.horizon()?;
        let beta = self.cfg.f64_or("chain", "beta", 0.5)?;
        let delta =
            self.cfg
                .f64_or("chain", "delta", self.cfg.f64_or("cylinder", "delta", 0.1)?)?;
        let eta = self.cfg.f64_or("chain", "eta", 0.9 * delta)?;
        let n_bound = self.cfg.f64_or("chain", "n_bound", 8.0)?;
        let fragment = self.cfg.f64_or("chain", "fragment", 0.75)?;
        let z_cell = qh.source;
        let z = dom.center(z_cell);
        let mut params =
            ChainParams::derive(beta, delta, eta, n_bound, self.p()?, z, fragment, None)?;
        let ratio = self.cfg.f64_or("chain", "alpha_prime_ratio", 1.0)?;
        params.alpha_prime = params.alpha * ratio;
        if delta * q.powf(params.p) >= horizon {
            return Err(Error::OutsideCylinder(format!(
                "delta q^p = {} reaches past the horizon {horizon}",
                delta * q.powf(params.p)
            )));
        }
        Ok((params, q, horizon))
    }

    pub fn run_chain(&mut self) -> Result<bool> {
        self.timed("chain", |lab| {
            let dom = lab.domain()?;
            let df = lab.distance_field()?;
            let qh = lab.qh_result()?;
            let (params, q, horizon) = lab.chain_params()?;
            let count = lab.cfg.usize_or("chain", "starts", 100)?;
            let d_min = lab.cfg.f64_or("chain", "d_min", 0.1)?;
            let floor = params.delta * q.powf(params.p);
            let starts = seeded_starts(
                &dom,
                &df,
                count,
                d_min,
                1.05 * floor,
                0.95 * horizon,
                lab.seed,
            );
            if starts.is_empty() {
                return Err(Error::OutsideCylinder(
                    "no admissible start points in the trimmed cylinder".into(),
                ));
            }
            let thresholds = CertificateThresholds {
                min_overlap_ratio: lab.cfg.f64_or("chain", "min_overlap", 1e-6)?,
                max_bound_constant: lab.cfg.f64_or("chain", "max_bound_constant", 1e4)?,
            };
            let mut summary = String::from(
                "start_x,start_y,start_t,links,min_overlap,inclusion,displacement,bound_constant,valid\n",
            );
            let mut all_valid = true;
            let mut first_csv: Option<String> = None;
            for s in &starts {
                let chain = build_chain(&dom, &df, &qh, &params, q, horizon, *s)?;
                let cert = verify_chain(&dom, &qh, &chain, &params, q, horizon, &thresholds)?;
                all_valid &= cert.valid;
                writeln!(
                    summary,
                    "{},{},{},{},{},{},{},{},{}",
                    s.x[0],
                    s.x[1],
                    s.t,
                    cert.link_count,
                    cert.min_overlap_ratio,
                    cert.inclusion_ok,
                    cert.displacement,
                    cert.bound_constant,
                    cert.valid
                )
                .unwrap();
                if first_csv.is_none() {
                    first_csv = Some(chain_csv(&chain, Some(&cert)));
                }
            }
            lab.write("chain.csv", &first_csv.unwrap())?;
            lab.write("chains_summary.csv", &summary)?;
            Ok(all_valid)
        })
    }

    pub fn run_pbmo(&mut self) -> Result<bool> {
        self.timed("pbmo", |lab| {
            let f = lab.bmo_field()?;
            let fam = lab.family()?;
            let sigma = lab.sigma()?;
            let est = pbmo_seminorm(&f, sigma, &fam)?;
            lab.write("seminorm.csv", &seminorm_csv(&[est]))?;
            Ok(true)
        })
    }

    pub fn run_local_jn(&mut self) -> Result<bool> {
        self.timed("jn", |lab| {
            let f = lab.bmo_field()?;
            let fam = lab.jn_family()?;
            let sigma = lab.sigma()?;
            let fragment = lab.cfg.f64_or("jn", "fragment", 0.125)?;
            let max_residual = lab.cfg.f64_or("jn", "max_residual", 0.5)?;
            let min_pass = lab.cfg.f64_or("jn", "min_pass", 0.95)?;
            let mut csv = String::from(
                "cx,cy,t,L,a,oscillation,plus_A,plus_B,plus_residual,plus_samples,minus_A,minus_B,minus_residual,minus_samples,consistent\n",
            );
            let mut pass = 0usize;
            let mut total = 0usize;
            for r in &fam {
                if !sigma_admissible(&f, r, sigma) {
                    continue;
                }
                let l = local_jn(&f, r, sigma, fragment)?;
                if !l.resolved() {
                    continue; // fragment thinner than the lattice
                }
                total += 1;
                let ok = l.consistent(max_residual);
                pass += ok as usize;
                let side = |fit: &Option<JNFit>, samples: usize| match fit {
                    Some(j) => format!("{},{},{},{samples}", j.a, j.b, j.residual),
                    None => format!(",,,{samples}"),
                };
                writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{}",
                    r.center_x[0],
                    r.center_x[1],
                    r.center_t,
                    r.l,
                    l.a_r,
                    l.oscillation,
                    side(&l.plus, l.plus_samples),
                    side(&l.minus, l.minus_samples),
                    ok
                )
                .unwrap();
            }
            lab.write("localjn.csv", &csv)?;
            if total == 0 {
                return Err(Error::NoAdmissibleRectangle { sigma });
            }
            Ok(pass as f64 / total as f64 >= min_pass)
        })
    }

    fn global_fit(&mut self) -> Result<GlobalJN> {
        let f = self.bmo_field()?;
        let dom = self.domain()?;
        let df = self.distance_field()?;
        let qh = self.qh_result()?;
        let fit = fit_qhbc(&dom, &df, &qh)?;
        let fam = self.family()?;
        let sigma = self.sigma()?;
        let scale = pbmo_seminorm(&f, sigma, &fam)?.value;
        let delta = self.cfg.f64_or("cylinder", "delta", 0.05)?;
        let variant = match self.cfg.str_or("jn", "variant", "cylinder") {
            "cylinder" => GlobalVariant::Cylinder,
            "rectangle" => GlobalVariant::Rectangle,
            other => return Err(Error::Parse(format!("unknown global variant '{other}'"))),
        };
        // optional explicit reference rectangle, as a "cx[,cy],t,L,p" literal
        let reference = match self.cfg.get("jn", "rectangle") {
            Some(lit) => Some(ParabolicRectangle::parse(lit)?),
            None => None,
        };
        global_jn(
            &f,
            &fit,
            self.p()?,
            sigma,
            delta,
            variant,
            scale.max(f64::MIN_POSITIVE),
            reference,
        )
    }

    pub fn run_global_jn(&mut self) -> Result<bool> {
        self.timed("global-jn", |lab| {
            let g = lab.global_fit()?;
            let max_residual = lab.cfg.f64_or("jn", "max_residual", 0.5)?;
            let delta = lab.cfg.f64_or("cylinder", "delta", 0.05)?;
            let mut csv = String::from("A,B,residual,gamma,c,delta\n");
            writeln!(
                csv,
                "{},{},{},{},{},{}",
                g.fit.a,
                g.fit.b,
                g.fit.residual,
                g.fit.b / 2.0,
                g.c,
                delta
            )
            .unwrap();
            lab.write("globaljn.csv", &csv)?;
            // distribution table for external plotting
            let f = lab.bmo_field()?;
            let lambdas = lambda_grid(g.fit.lambda_range.1 / 10.0);
            let samples = distribution_function(&f, &g.base, g.c, Sign::Plus, &lambdas)?;
            let mut table = String::from("lambda,measure\n");
            for (l, m) in samples.lambdas.iter().zip(&samples.measures) {
                writeln!(table, "{l},{m}").unwrap();
            }
            lab.write("globaljn_dist.csv", &table)?;
            Ok(g.fit.b > 0.0 && g.fit.residual <= max_residual)
        })
    }

    pub fn run_expint(&mut self) -> Result<bool> {
        self.timed("expint", |lab| {
            let f = lab.bmo_field()?;
            let delta = lab.cfg.f64_or("cylinder", "delta", 0.05)?;
            let cfg_gamma = lab.cfg.f64_or("jn", "gamma", 0.0)?;
            let (gamma, c) = if cfg_gamma > 0.0 && lab.cfg.get("jn", "c").is_some() {
                (cfg_gamma, lab.cfg.f64_or("jn", "c", 0.0)?)
            } else {
                let g = lab.global_fit()?;
                let gamma = if cfg_gamma > 0.0 {
                    cfg_gamma
                } else {
                    g.fit.b / 2.0
                };
                (gamma, g.c)
            };
            let plus = exp_integral(&f, delta, gamma, c, Sign::Plus)?;
            let minus = exp_integral(&f, delta, gamma, c, Sign::Minus)?;
            let mut csv = String::from("sign,gamma,c,delta,integral,layer_cake,base_measure\n");
            for (name, r) in [("plus", &plus), ("minus", &minus)] {
                writeln!(
                    csv,
                    "{name},{},{},{},{},{},{}",
                    r.gamma, r.c, r.delta, r.integral, r.layer_cake, r.base_measure
                )
                .unwrap();
            }
            lab.write("expint.csv", &csv)?;
            Ok(plus.integral.is_finite() && minus.integral.is_finite())
        })
    }

    pub fn run_solve(&mut self) -> Result<bool> {
        self.timed("solve", |lab| {
            let field = lab.solve_field()?;
            lab.write("field.csv", &field.f.write_csv())?;
            let mut meta = String::from("gamma_low,steps,rejections,tau_final,eps_reg\n");
            writeln!(
                meta,
                "{},{},{},{},{}",
                field.gamma_low,
                field.meta.steps,
                field.meta.rejections,
                field.meta.tau_final,
                field.meta.eps_reg
            )
            .unwrap();
            lab.write("solve_meta.csv", &meta)?;
            Ok(field.gamma_low > 0.0)
        })
    }

    fn positive_field(&mut self) -> Result<GridFunction> {
        let f = self.field()?;
        let mut positive = true;
        for it in 0..f.nt() {
            for c in f.domain().interior_cells() {
                if !(f.value(c, it) > 0.0) {
                    positive = false;
                }
            }
            if !positive {
                break;
            }
        }
        if !positive {
            return Err(Error::InvalidParameter(
                "this pipeline needs a positive field; check [field]".into(),
            ));
        }
        Ok(f)
    }

    pub fn run_verify_super(&mut self) -> Result<bool> {
        self.timed("verify-super", |lab| {
            let f = lab.positive_field()?;
            let constants = StructuralConstants::model(lab.p()?);
            let bumps = BumpFamily {
                count: lab.cfg.usize_or("super", "bumps", 24)?,
                seed: lab.seed,
                tol_factor: lab.cfg.f64_or("super", "tol_factor", 1e-3)?,
            };
            let v = verify_supersolution(&f, &constants, &bumps)?;
            let mut csv = String::from("pass,evaluated,skipped,worst_value,worst_tol\n");
            writeln!(
                csv,
                "{},{},{},{},{}",
                v.pass, v.evaluated, v.skipped, v.worst_value, v.worst_tol
            )
            .unwrap();
            lab.write("super.csv", &csv)?;
            Ok(v.pass)
        })
    }

    pub fn run_lemma62(&mut self) -> Result<bool> {
        self.timed("lemma62", |lab| {
            let f = lab.positive_field()?;
            let fam = lab.family()?;
            let sigma = lab.cfg.f64_or("lemma62", "sigma", 2.0)?;
            let slack = lab.cfg.f64_or("lemma62", "slack", 0.2)?;
            let min_pass = lab.cfg.f64_or("lemma62", "min_pass", 0.9)?;
            let reports = lemma62_check(&f, lab.p()?, sigma, &fam, slack);
            if reports.is_empty() {
                return Err(Error::NoAdmissibleRectangle { sigma });
            }
            let mut csv =
                String::from("cx,cy,t,L,beta,c_prime,c_fit,exponent,samples,vacuous,pass\n");
            for r in &reports {
                writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    r.rect.center_x[0],
                    r.rect.center_x[1],
                    r.rect.center_t,
                    r.rect.l,
                    r.beta,
                    r.c_prime,
                    r.c_fit.map(|v| v.to_string()).unwrap_or_default(),
                    r.exponent.map(|v| v.to_string()).unwrap_or_default(),
                    r.samples,
                    r.vacuous,
                    r.pass
                )
                .unwrap();
            }
            lab.write("lemma62.csv", &csv)?;
            let passn = reports.iter().filter(|r| r.pass).count();
            Ok(passn as f64 / reports.len() as f64 >= min_pass)
        })
    }

    pub fn run_log_pbmo(&mut self) -> Result<bool> {
        self.timed("log-pbmo", |lab| {
            let f = lab.positive_field()?;
            let fam = lab.family()?;
            let sigma = lab.sigma()?;
            let lp = log_pbmo_check(&f, lab.p()?, sigma, &fam)?;
            let mut csv = String::from("b,sigma,power_value,pbmo_value\n");
            writeln!(
                csv,
                "{},{},{},{}",
                lp.b, sigma, lp.power.value, lp.pbmo.value
            )
            .unwrap();
            lab.write("logpbmo.csv", &csv)?;
            Ok(true)
        })
    }

    pub fn run_integrability(&mut self) -> Result<bool> {
        self.timed("integrability", |lab| {
            if lab.cfg.str_or("field", "kind", "logdist") != "solve" {
                return Err(Error::InvalidParameter(
                    "integrability refines the solver; set [field] kind = solve".into(),
                ));
            }
            let coarse = lab.positive_field()?;
            // one refinement level deeper, same config otherwise
            let mut fine_lab = Lab::new(
                lab.cfg.clone(),
                lab.out.clone(),
                Some(lab.seed),
                lab.refine + 1,
            )?;
            let refined = fine_lab.positive_field()?;
            let delta = lab.cfg.f64_or("cylinder", "delta", 0.05)?;
            let eps_floor = lab.cfg.f64_or("integrability", "eps_floor", 0.05)?;
            let rep = global_integrability(
                &coarse,
                &refined,
                lab.cfg.f64_or("lemma62", "sigma", 2.0)?,
                lab.p()?,
                delta,
                eps_floor,
            )?;
            let mut csv = String::from("eps,integral,integral_refined,c,stable\n");
            writeln!(
                csv,
                "{},{},{},{},{}",
                rep.eps, rep.integral, rep.integral_refined, rep.c, rep.stable
            )
            .unwrap();
            lab.write("integrability.csv", &csv)?;
            Ok(rep.stable && rep.eps >= eps_floor)
        })
    }

    pub fn run_all(&mut self) -> Result<bool> {
        let mut ok = true;
        ok &= self.run_qh()?;
        ok &= self.run_cover()?;
        ok &= self.run_chain()?;
        ok &= self.run_pbmo()?;
        ok &= self.run_local_jn()?;
        ok &= self.run_global_jn()?;
        ok &= self.run_expint()?;
        if self.cfg.str_or("field", "kind", "logdist") == "solve" {
            ok &= self.run_solve()?;
            ok &= self.run_verify_super()?;
            ok &= self.run_lemma62()?;
            ok &= self.run_log_pbmo()?;
            ok &= self.run_integrability()?;
        }
        Ok(ok)
    }

    /// Config hash, version, output files, wall-clock timings.
    pub fn write_manifest(&mut self, subcommand: &str, config_text: &str) -> Result<()> {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(config_text.as_bytes());
        hasher.update(self.seed.to_le_bytes());
        hasher.update(self.refine.to_le_bytes());
        let hash = hasher.finalize();
        let mut text = String::new();
        writeln!(text, "config_hash = {}", hex(&hash)).unwrap();
        writeln!(text, "version = {}", env!("CARGO_PKG_VERSION")).unwrap();
        writeln!(text, "subcommand = {subcommand}").unwrap();
        writeln!(text, "seed = {}", self.seed).unwrap();
        writeln!(text, "refine = {}", self.refine).unwrap();
        for f in &self.files {
            writeln!(text, "file = {f}").unwrap();
        }
        for (name, secs) in &self.timings {
            writeln!(text, "timing {name} = {secs:.6}s").unwrap();
        }
        let path = self.out.join("manifest.txt");
        let tmp = self.out.join(".manifest.txt.tmp");
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, &path)?;
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn seminorm_csv(estimates: &[SeminormEstimate]) -> String {
    let mut out = String::from("sigma,value,argmax_center,argmax_L\n");
    for e in estimates {
        let (center, l) = match &e.argmax {
            Some(r) => {
                let c = if r.n == 1 {
                    format!("{} {}", r.center_x[0], r.center_t)
                } else {
                    format!("{} {} {}", r.center_x[0], r.center_x[1], r.center_t)
                };
                (c, r.l.to_string())
            }
            None => (String::new(), String::new()),
        };
        let _ = writeln!(out, "{},{},{},{}", e.sigma, e.value, center, l);
    }
    out
}

/// Exit-code mapping: input-shaped errors are 2, failed verifications 1.
pub fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::QhbcFitFailed { .. } | Error::PositivityLoss { .. } | Error::TailTooShort { .. } => {
            1
        }
        _ => 2,
    }
}
