use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;

use super::{interrupted, CliError, RunConfig};
use crate::data::{Dataset, Label, Observations};
use crate::harness::{
    assouad_check, concentration_probe, exponential_probe, finish_sweep, mix64, sweep_row, tag,
    Bandwidth, ClassifierSpec, ExponentMode, HypercubeSchedule, LineFit, OracleSpec, RateResult,
    SweepConfig, Theory,
};
use crate::lp::{eta_star_detail, KernelSpec, LpConfig};
use crate::sieve::{
    epsilon_schedule, log_cardinality, recorded_a_prime, select_sieve, Net, NetSpec, SieveConfig,
    SieveError, DEFAULT_BUDGET,
};
use crate::synth::{DensityMode, HypercubeParams, OracleDistribution};

/// Largest evaluation grid `fit` will write.
const MAX_GRID: usize = 1_000_000;

/// One invocation: the merged configuration and where outputs go.
#[derive(Debug, Clone)]
pub struct Context {
    command: &'static str,
    cfg: RunConfig,
    out: PathBuf,
    hash: String,
}

impl Context {
    pub fn new(command: &'static str, cfg: RunConfig, out: PathBuf) -> Self {
        let hash = cfg.hash(command);
        Self {
            command,
            cfg,
            out,
            hash,
        }
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    fn seed(&self) -> u64 {
        self.cfg.u64_or("seed", 0)
    }

    fn name(&self) -> &str {
        self.cfg.get("out.name").unwrap_or(self.command)
    }

    fn provenance(&self) -> String {
        format!(
            "# plugin-rates {} config-hash={}\n",
            env!("CARGO_PKG_VERSION"),
            self.hash
        )
    }

    /// Writes `<out>/<name>.<ext>` with the provenance line first.
    fn write(&self, ext: &str, body: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.out)
            .map_err(|e| CliError::Data(format!("{}: {e}", self.out.display())))?;
        let path = self.out.join(format!("{}.{ext}", self.name()));
        let text = self.provenance() + body;
        std::fs::write(&path, text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    fn write_meta(&self, pairs: &[(String, String)]) -> Result<PathBuf, CliError> {
        let mut body = format!("command = {}\nconfig_hash = {}\n", self.command, self.hash);
        for (k, v) in pairs {
            let _ = writeln!(body, "{k} = {v}");
        }
        self.write("meta", &body)
    }
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn density_mode(cfg: &RunConfig) -> DensityMode {
    match cfg.get("oracle.mode") {
        Some("strong") => DensityMode::Strong,
        _ => DensityMode::Mild,
    }
}

fn oracle_spec(cfg: &RunConfig) -> Result<OracleSpec, CliError> {
    let d = cfg.usize_or("oracle.d", 1);
    Ok(match cfg.require("oracle.kind")? {
        "parabola" => OracleSpec::Parabola {
            d,
            coef: cfg.f64_or("oracle.coef", 0.5),
            radius: cfg.f64_or("oracle.radius", 1.0),
        },
        "corridor" => OracleSpec::Corridor {
            d,
            t0: cfg.f64_or("oracle.t0", 0.1),
            gap: cfg.f64_or("oracle.gap", 0.2),
        },
        "hypercube" => {
            let m = cfg.usize_req("oracle.m")?;
            let sigma = cfg.signs_opt("oracle.sigma").unwrap_or_else(|| vec![1; m]);
            let mut p = HypercubeParams::new(
                d,
                cfg.usize_req("oracle.q")?,
                m,
                cfg.f64_req("oracle.w")?,
                cfg.f64_or("oracle.beta", 1.0),
                cfg.f64_or("oracle.lip", 1.0),
                sigma,
                density_mode(cfg),
            )?;
            if let Some(a) = cfg.f64_opt("oracle.alpha") {
                p = p.with_alpha(a)?;
            }
            if let Some(c) = cfg.f64_opt("oracle.c_phi") {
                p = p.with_c_phi(c)?;
            }
            OracleSpec::Hypercube(p)
        }
        _ => OracleSpec::HypercubeSchedule(HypercubeSchedule {
            d,
            beta: cfg.f64_or("oracle.beta", 1.0),
            lip: cfg.f64_or("oracle.lip", 1.0),
            alpha: cfg.f64_or("oracle.alpha", 0.0),
            mode: density_mode(cfg),
            c_q: cfg.f64_or("oracle.c_q", 1.0),
            c_w: cfg.f64_or("oracle.c_w", 0.5),
            c_m: cfg.f64_or("oracle.c_m", 0.5),
            c_phi: cfg.f64_opt("oracle.c_phi"),
        }),
    })
}

fn kernel(cfg: &RunConfig) -> KernelSpec {
    match cfg.get("lp.kernel") {
        Some("uniform") => KernelSpec::UniformBall {
            radius: cfg.f64_or("lp.kernel_radius", 1.0),
        },
        _ => KernelSpec::GaussianRadial,
    }
}

/// `lp.h` if given, else `lp.h_c · n^{−lp.h_exponent}` with defaults 1 and
/// `1/(2β + d)`.
fn bandwidth(cfg: &RunConfig, d: usize) -> Bandwidth {
    match cfg.f64_opt("lp.h") {
        Some(h) => Bandwidth::Fixed(h),
        None => {
            let beta = cfg.f64_or("lp.beta", 1.0);
            Bandwidth::Power {
                c: cfg.f64_or("lp.h_c", 1.0),
                exponent: cfg.f64_or("lp.h_exponent", 1.0 / (2.0 * beta + d as f64)),
            }
        }
    }
}

fn lp_config(cfg: &RunConfig, d: usize, n: usize) -> Result<LpConfig, CliError> {
    LpConfig::new(
        cfg.f64_or("lp.beta", 1.0),
        bandwidth(cfg, d).at(n),
        kernel(cfg),
    )
    .map(|c| c.with_sample_size_hint(n))
    .map_err(|e| CliError::Usage(format!("lp: {e}")))
}

fn sieve_config(cfg: &RunConfig, d: usize) -> Result<SieveConfig, CliError> {
    let beta = cfg.f64_or("sieve.beta", 1.0);
    let mut sc = SieveConfig::new(
        cfg.f64_or("sieve.alpha", 0.0),
        cfg.f64_or("sieve.rho", d as f64 / beta),
        cfg.norm_index_or("sieve.p", f64::INFINITY),
    )?;
    if let Some(c) = cfg.f64_opt("sieve.c_eps") {
        sc = sc.with_c_eps(c)?;
    }
    Ok(sc)
}

/// Net from `sieve.*`: explicit when both `sieve.k` and `sieve.tau` are
/// set, otherwise sized for `epsilon`.
fn net_spec(cfg: &RunConfig, d: usize, epsilon: f64) -> Result<NetSpec, CliError> {
    let (beta, lip) = (cfg.f64_or("sieve.beta", 1.0), cfg.f64_or("sieve.lip", 1.0));
    let spec = match (cfg.get("sieve.k"), cfg.f64_opt("sieve.tau")) {
        (Some(_), Some(tau)) => NetSpec::explicit(beta, lip, d, cfg.usize_req("sieve.k")?, tau)?,
        (None, None) => NetSpec::sized(beta, lip, d, epsilon)?,
        _ => {
            return Err(CliError::Usage(
                "sieve.k and sieve.tau must be given together".into(),
            ))
        }
    };
    let spec = spec.with_domain(cfg.f64_or("sieve.lo", 0.0), cfg.f64_or("sieve.hi", 1.0))?;
    let spec = spec.with_p(cfg.norm_index_or("sieve.p", f64::INFINITY))?;
    Ok(spec.with_budget(
        cfg.get("sieve.budget")
            .map_or(DEFAULT_BUDGET, |v| v.parse().expect("validated")),
    ))
}

fn is_explicit(cfg: &RunConfig) -> bool {
    cfg.has("sieve.k") || cfg.has("sieve.epsilon")
}

fn classifier(cfg: &RunConfig, key: &str, d: usize) -> Result<ClassifierSpec, CliError> {
    Ok(match cfg.get(key).unwrap_or("lp") {
        "lp" => ClassifierSpec::LpPlugIn {
            beta: cfg.f64_or("lp.beta", 1.0),
            kernel: kernel(cfg),
            bandwidth: bandwidth(cfg, d),
        },
        "sieve" => {
            if is_explicit(cfg) {
                return Err(CliError::Usage(format!(
                    "{key} = sieve sizes the net from n; drop sieve.k, sieve.tau and sieve.epsilon"
                )));
            }
            ClassifierSpec::Sieve {
                cfg: sieve_config(cfg, d)?,
                net: net_spec(cfg, d, 0.5)?,
            }
        }
        "constant0" => ClassifierSpec::Constant(0),
        "constant1" => ClassifierSpec::Constant(1),
        _ => ClassifierSpec::Bayes,
    })
}

fn oracle_parameters(oracle: &dyn OracleDistribution) -> Vec<(String, String)> {
    let (m, h, den) = (oracle.margin(), oracle.holder(), oracle.density());
    let mut out = vec![
        kv("generator", oracle.descriptor()),
        kv("dim", oracle.dim()),
    ];
    out.extend(
        oracle
            .parameters()
            .into_iter()
            .map(|(k, v)| (format!("param.{k}"), v)),
    );
    out.extend([
        kv("margin.alpha", m.alpha),
        kv("margin.c0", m.c0),
        kv("holder.beta", h.beta),
        kv("holder.lip", h.lip),
        kv("density.c0", den.c0_reg),
        kv("density.r0", den.r0),
        kv("density.mu_min", den.mu_min),
        kv("density.mu_max", den.mu_max),
        kv("density.support", den.support),
    ]);
    out
}

fn fit_pairs(prefix: &str, fit: Option<&LineFit>) -> Vec<(String, String)> {
    match fit {
        Some(f) => vec![
            kv(&format!("{prefix}.slope"), f.slope),
            kv(&format!("{prefix}.intercept"), f.intercept),
            kv(&format!("{prefix}.r_squared"), f.r_squared),
            kv(&format!("{prefix}.slope_se"), f.slope_se),
            kv(&format!("{prefix}.points_used"), f.used()),
        ],
        None => vec![kv(&format!("{prefix}.slope"), "nan")],
    }
}

/// `synth`: writes `<name>.csv` and `<name>.meta`.
pub fn cmd_synth(ctx: &Context) -> Result<String, CliError> {
    let cfg = ctx.config();
    let n = cfg.usize_req("synth.n")?;
    let seed = ctx.seed();
    let oracle = oracle_spec(cfg)?.instantiate(n, mix64(seed, n as u64, 0, tag::VERTEX))?;
    let data = oracle.sample(mix64(seed, n as u64, 0, tag::TRAIN), n);
    let csv = ctx.write("csv", &data.to_csv())?;
    let mut meta = vec![kv("seed", seed), kv("n", n)];
    meta.extend(oracle_parameters(oracle.as_ref()));
    meta.push(kv(
        "positives",
        data.labels().iter().filter(|&&y| y == 1).count(),
    ));
    let meta_path = ctx.write_meta(&meta)?;
    Ok(format!(
        "wrote {n} rows to {}\nwrote {}\n",
        csv.display(),
        meta_path.display()
    ))
}

fn eval_grid(cfg: &RunConfig, data: &Dataset) -> Result<Vec<Vec<f64>>, CliError> {
    let d = data.dim();
    let coords = data.points().flatten().copied();
    let (lo, hi) = coords.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    let lo = cfg.f64_or("fit.grid_lo", lo);
    let hi = cfg.f64_or("fit.grid_hi", hi);
    let k = cfg.usize_or("fit.grid_points", 11);
    if lo > hi {
        return Err(CliError::Usage(format!(
            "fit.grid_lo = {lo} exceeds fit.grid_hi = {hi}"
        )));
    }
    let total = (0..d)
        .try_fold(1usize, |acc, _| acc.checked_mul(k))
        .filter(|&t| t <= MAX_GRID);
    let total = total
        .ok_or_else(|| CliError::Usage(format!("grid of {k}^{d} points exceeds {MAX_GRID}")))?;
    let axis: Vec<f64> = if k == 1 {
        vec![(lo + hi) / 2.0]
    } else {
        (0..k)
            .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
            .collect()
    };
    Ok((0..total)
        .map(|mut idx| {
            let mut x = vec![0.0; d];
            for slot in x.iter_mut().rev() {
                *slot = axis[idx % k];
                idx /= k;
            }
            x
        })
        .collect())
}

fn grid_csv(d: usize, extra: &str, rows: impl Iterator<Item = String>) -> String {
    let mut out: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    out.push(extra.into());
    let mut text = out.join(",") + "\n";
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    text
}

fn join(x: &[f64]) -> String {
    x.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// `fit`: trains on `fit.data` and writes the fitted values on a grid.
pub fn cmd_fit(ctx: &Context) -> Result<String, CliError> {
    let cfg = ctx.config();
    let path = cfg.require("fit.data")?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{path}: {e}")))?;
    let data = Dataset::from_csv(&text).map_err(|e| CliError::Data(format!("{path}: {e}")))?;
    let d = data.dim();
    let n = data.len();
    let grid = eval_grid(cfg, &data)?;
    let mut meta = vec![
        kv("data", path),
        kv("n", n),
        kv("dim", d),
        kv("grid_points", grid.len()),
    ];
    let mut report = String::new();
    let body = match cfg.get("fit.classifier").unwrap_or("lp") {
        "lp" => {
            if n < 3 {
                return Err(CliError::Data(format!(
                    "{path}: the local polynomial estimator needs at least 3 rows, got {n}"
                )));
            }
            let lp = lp_config(cfg, d, n)?;
            let est = grid
                .par_iter()
                .map(|x| eta_star_detail(&data, x, &lp))
                .collect::<Result<Vec<_>, _>>()?;
            let guarded = est.iter().filter(|e| e.guarded).count();
            meta.extend([
                kv("classifier", "lp"),
                kv("bandwidth", lp.bandwidth()),
                kv("degree", lp.degree()),
                kv("guarded", guarded),
            ]);
            let _ = writeln!(
                report,
                "local polynomial fit, degree {}, h = {}, {guarded} guarded grid points",
                lp.degree(),
                lp.bandwidth()
            );
            grid_csv(
                d,
                "eta_hat,label,guarded",
                grid.iter().zip(&est).map(|(x, e)| {
                    format!(
                        "{},{},{},{}",
                        join(x),
                        e.value,
                        Label::from(e.value >= 0.5),
                        u8::from(e.guarded)
                    )
                }),
            )
        }
        _ => {
            let sc = sieve_config(cfg, d)?;
            let eps = cfg
                .f64_opt("sieve.epsilon")
                .unwrap_or_else(|| epsilon_schedule(n, &sc));
            let net = Net::build(net_spec(cfg, d, eps)?)?;
            let sel = select_sieve(&data, &net)?;
            meta.extend([
                kv("classifier", "sieve"),
                kv("epsilon", net.spec().epsilon),
                kv("net_card", net.card()),
                kv("member_index", sel.index),
                kv("training_errors", sel.errors),
                kv("empirical_risk", sel.risk),
            ]);
            let _ = writeln!(
                report,
                "sieve net of {} members, selected index {}, empirical risk {}",
                net.card(),
                sel.index,
                sel.risk
            );
            grid_csv(
                d,
                "eta_hat,label",
                grid.iter().map(|x| {
                    let v = sel.member.eval(x);
                    format!("{},{v},{}", join(x), Label::from(v >= 0.5))
                }),
            )
        }
    };
    let csv = ctx.write("csv", &body)?;
    let meta_path = ctx.write_meta(&meta)?;
    let _ = writeln!(
        report,
        "wrote {}\nwrote {}",
        csv.display(),
        meta_path.display()
    );
    Ok(report)
}

fn theory(cfg: &RunConfig, oracle: &dyn OracleDistribution) -> Result<Option<Theory>, CliError> {
    let Some(tag) = cfg.get("sweep.theory") else {
        return Ok(None);
    };
    let mode = ExponentMode::from_tag(tag).expect("validated");
    let (alpha, beta, d) = (
        oracle.margin().alpha,
        oracle.holder().beta,
        oracle.dim() as f64,
    );
    let p = cfg.norm_index_or("sieve.p", f64::INFINITY);
    if mode == ExponentMode::SieveP && p.is_infinite() {
        return Err(CliError::Usage(
            "sweep.theory = sieve_p needs a finite sieve.p".into(),
        ));
    }
    let rho = cfg.f64_or("sieve.rho", d / cfg.f64_or("sieve.beta", beta));
    Ok(Some(Theory {
        mode,
        alpha,
        beta,
        d,
        rho,
        p,
    }))
}

fn gnuplot(result: &RateResult) -> String {
    let mut out = String::from("# n mean_excess se\n");
    for r in &result.rows {
        let _ = writeln!(out, "{} {} {}", r.n, r.mean_excess, r.se);
    }
    out
}

/// `sweep`: excess risk at every `n`, rewriting `<name>.csv` after each
/// completed sample size. Interrupting keeps the completed rows.
pub fn cmd_sweep(ctx: &Context) -> Result<String, CliError> {
    let cfg = ctx.config();
    let oracle = oracle_spec(cfg)?;
    let n_grid = cfg.ints_req("sweep.n_grid")?;
    let probe = oracle.instantiate(n_grid[0], ctx.seed())?;
    let d = probe.dim();
    let sweep = SweepConfig {
        classifier: classifier(cfg, "sweep.classifier", d)?,
        oracle,
        n_grid,
        replicates: cfg.usize_or("sweep.replicates", 10),
        mc_points: cfg.usize_or("sweep.mc", 10_000),
        base_seed: ctx.seed(),
        theory: theory(cfg, probe.as_ref())?,
    };
    sweep.validate()?;
    let exponent = sweep.theory.map(|t| t.exponent());
    let mut rows = Vec::new();
    for &n in &sweep.n_grid {
        if interrupted() {
            return Err(CliError::Interrupted);
        }
        rows.push(sweep_row(&sweep, n)?);
        let done = rows.len();
        let mut body = String::new();
        if done < sweep.n_grid.len() {
            let _ = writeln!(
                body,
                "# partial: {done} of {} sample sizes",
                sweep.n_grid.len()
            );
        }
        body.push_str(RateResult::CSV_HEADER);
        body.push('\n');
        for r in &rows {
            body.push_str(&RateResult::csv_row(r, exponent, None));
            body.push('\n');
        }
        ctx.write("csv", &body)?;
    }
    let result = finish_sweep(&sweep, rows);
    let csv = ctx.write("csv", &result.to_csv())?;
    ctx.write("dat", &gnuplot(&result))?;
    let mut meta = vec![
        kv("seed", ctx.seed()),
        kv("replicates", sweep.replicates),
        kv("mc_points", sweep.mc_points),
    ];
    if let Some((mode, e)) = result.theory {
        meta.extend([
            kv("theory.mode", mode.tag()),
            kv("theory.exponent", e),
            kv("theory.slope", -e),
        ]);
    }
    meta.extend(fit_pairs("fit", result.fit.as_ref()));
    meta.push(kv("fit.masked_rows", result.masked()));
    let meta_path = ctx.write_meta(&meta)?;
    let mut report = String::new();
    for r in &result.rows {
        let _ = writeln!(
            report,
            "n = {:>8}  excess = {} ± {}",
            r.n, r.mean_excess, r.se
        );
    }
    let _ = writeln!(report, "fitted slope {}", result.slope());
    if let Some((mode, e)) = result.theory {
        let _ = writeln!(report, "theoretical slope ({}) {}", mode.tag(), -e);
    }
    let _ = writeln!(
        report,
        "wrote {}\nwrote {}",
        csv.display(),
        meta_path.display()
    );
    Ok(report)
}

/// `probe`: one of the concentration, exponential or Assouad probes.
pub fn cmd_probe(ctx: &Context) -> Result<String, CliError> {
    let cfg = ctx.config();
    let seed = ctx.seed();
    let oracle = oracle_spec(cfg)?;
    let reps = cfg.usize_or("probe.reps", 100);
    let mut report = String::new();
    let (body, meta) = match cfg.get("probe.kind").unwrap_or("concentration") {
        "concentration" => {
            let n_grid = cfg.ints_req("probe.n_grid")?;
            let law = oracle.instantiate(n_grid[0], mix64(seed, 0, 0, tag::VERTEX))?;
            let d = law.dim();
            let xs = cfg.points_req("probe.x")?;
            if xs.iter().any(|x| x.len() != d) {
                return Err(CliError::Usage(format!(
                    "probe.x points must have {d} coordinates"
                )));
            }
            let h = cfg.f64_opt("lp.h").ok_or_else(|| {
                CliError::Usage("the concentration probe needs a fixed lp.h".into())
            })?;
            let lp = LpConfig::new(cfg.f64_or("lp.beta", 1.0), h, kernel(cfg))
                .map_err(|e| CliError::Usage(format!("lp: {e}")))?;
            let table = concentration_probe(
                law.as_ref(),
                &lp,
                &xs,
                &cfg.reals_req("probe.delta")?,
                &n_grid,
                reps,
                seed,
            )?;
            let _ = writeln!(
                report,
                "{} cells, fit of log p_hat on n h^d delta^2: slope {}",
                table.cells.len(),
                table.fit.as_ref().map_or(f64::NAN, |f| f.slope)
            );
            let mut meta = vec![
                kv("probe", "concentration"),
                kv("reps", reps),
                kv("bandwidth", h),
            ];
            meta.extend(fit_pairs("fit", table.fit.as_ref()));
            (table.to_csv(), meta)
        }
        "exponential" => {
            let n_grid = cfg.ints_req("probe.n_grid")?;
            let h = cfg.f64_opt("lp.h").ok_or_else(|| {
                CliError::Usage("the exponential probe needs a fixed lp.h".into())
            })?;
            let lp = LpConfig::new(cfg.f64_or("lp.beta", 1.0), h, kernel(cfg))
                .map_err(|e| CliError::Usage(format!("lp: {e}")))?;
            let mc = cfg.usize_or("probe.mc", 10_000);
            let table = exponential_probe(&oracle, &lp, &n_grid, reps, mc, seed)?;
            for r in &table.rows {
                let _ = writeln!(
                    report,
                    "n = {:>8}  excess = {} ± {}",
                    r.n, r.mean_excess, r.se
                );
            }
            let _ = writeln!(
                report,
                "fit of log excess on n: slope {}",
                table.fit.as_ref().map_or(f64::NAN, |f| f.slope)
            );
            let mut meta = vec![
                kv("probe", "exponential"),
                kv("reps", reps),
                kv("mc_points", mc),
                kv("bandwidth", h),
            ];
            meta.extend(fit_pairs("fit", table.fit.as_ref()));
            (table.to_csv(), meta)
        }
        _ => {
            let OracleSpec::Hypercube(params) = &oracle else {
                return Err(CliError::Usage(
                    "the assouad probe needs oracle.kind = hypercube".into(),
                ));
            };
            let n = cfg.usize_req("probe.n")?;
            let mc = cfg.usize_or("probe.mc", 10_000);
            let clf = classifier(cfg, "probe.classifier", params.d())?;
            let rep = assouad_check(params, &clf, n, reps, mc, seed)?;
            let mut body = String::from("vertex,mean_excess,se\n");
            for (v, e) in rep.per_vertex.iter().enumerate() {
                let _ = writeln!(body, "{v},{},{}", e.mean, e.se);
            }
            let _ = writeln!(
                report,
                "worst vertex {}: excess {} ± {}, bound {}, dominance {}",
                rep.argmax, rep.sup.mean, rep.sup.se, rep.bound, rep.dominance
            );
            let meta = vec![
                kv("probe", "assouad"),
                kv("n", n),
                kv("reps", reps),
                kv("mc_points", mc),
                kv("argmax", rep.argmax),
                kv("sup", rep.sup.mean),
                kv("sup_se", rep.sup.se),
                kv("bound", rep.bound),
                kv("dominance", rep.dominance),
            ];
            (body, meta)
        }
    };
    let csv = ctx.write("csv", &body)?;
    let mut meta = meta;
    meta.insert(0, kv("seed", seed));
    let meta_path = ctx.write_meta(&meta)?;
    let _ = writeln!(
        report,
        "wrote {}\nwrote {}",
        csv.display(),
        meta_path.display()
    );
    Ok(report)
}

/// `netinfo`: cardinality and covering constants of the net described by
/// `sieve.*`, sized for `sieve.epsilon` or for `ε_n` at `sieve.n`.
pub fn cmd_netinfo(ctx: &Context) -> Result<String, CliError> {
    let cfg = ctx.config();
    let d = cfg.usize_or("sieve.d", 1);
    let sc = sieve_config(cfg, d)?;
    let eps_n = cfg
        .get("sieve.n")
        .map(|_| cfg.usize_req("sieve.n").map(|n| epsilon_schedule(n, &sc)))
        .transpose()?;
    let eps = match (cfg.f64_opt("sieve.epsilon"), eps_n) {
        (Some(e), _) => e,
        (None, Some(e)) => e,
        (None, None) if cfg.has("sieve.k") => 1.0,
        _ => {
            return Err(CliError::Usage(
                "netinfo needs sieve.epsilon, sieve.n, or sieve.k with sieve.tau".into(),
            ))
        }
    };
    let spec = net_spec(cfg, d, eps)?;
    let log_card = log_cardinality(&spec);
    let mut pairs = vec![
        kv("dim", d),
        kv("degree", spec.degree()),
        kv("epsilon", spec.epsilon),
        kv("cells_per_axis", spec.k),
        kv("tau", spec.tau),
        kv("log_card", log_card),
        kv("implied_a_prime", log_card * spec.epsilon.powf(sc.rho)),
    ];
    if let Some(e) = eps_n {
        pairs.push(kv("epsilon_n", e));
    }
    if let Some((a, rho)) = recorded_a_prime(&spec) {
        pairs.extend([kv("recorded_a_prime", a), kv("recorded_rho", rho)]);
    }
    let built = Net::build(spec);
    match &built {
        Ok(net) => pairs.push(kv("card", net.card())),
        Err(SieveError::NetBudgetExceeded { count, budget, .. }) => {
            pairs.push(kv(
                "card",
                count.map_or_else(|| format!("> {budget}"), |c| c.to_string()),
            ));
            pairs.push(kv("budget_exceeded", true));
        }
        Err(_) => {}
    }
    let mut body = String::new();
    for (k, v) in &pairs {
        let _ = writeln!(body, "{k} = {v}");
    }
    let path = ctx.write("txt", &body)?;
    built?;
    Ok(format!("{body}wrote {}\n", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(text: &str, out: &std::path::Path) -> Context {
        Context::new("test", RunConfig::parse(text).unwrap(), out.to_path_buf())
    }

    #[test]
    fn grid_covers_the_box_in_row_major_order() {
        let dir = tempfile::tempdir().unwrap();
        let c = ctx(
            "fit.grid_lo = 0\nfit.grid_hi = 1\nfit.grid_points = 3",
            dir.path(),
        );
        let mut data = Dataset::new(2).unwrap();
        data.push(&[0.5, 0.5], 1).unwrap();
        let g = eval_grid(c.config(), &data).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[1], vec![0.0, 0.5]);
        assert_eq!(g[3], vec![0.5, 0.0]);
        assert_eq!(g[8], vec![1.0, 1.0]);
    }

    #[test]
    fn sieve_keys_must_pair_up() {
        let dir = tempfile::tempdir().unwrap();
        let c = ctx("sieve.k = 4", dir.path());
        assert!(matches!(
            net_spec(c.config(), 1, 0.5),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn outputs_start_with_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let c = ctx("out.name = x", dir.path());
        let p = c.write("csv", "a\n").unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert!(text.starts_with("# plugin-rates "));
        assert!(text.contains("config-hash="));
        assert!(text.ends_with("\na\n"));
    }
}
