//! Rate experiments: sweeps over sample sizes, log-log fits, theoretical
//! exponents and the probes in [`probe`].

mod probe;

pub use probe::{
    assouad_check, concentration_probe, exponential_probe, AssouadReport, ConcentrationCell,
    ConcentrationTable, DecayTable,
};

use std::sync::Arc;

use num_traits::Num;
use rand::SeedableRng;
use rayon::prelude::*;
use thiserror::Error;

use crate::classify::{excess_risk_mc, plug_in, DecisionRule, McEstimate, Provenance};
use crate::data::{Dataset, Label, Observations};
use crate::lp::{eta_star, KernelSpec, LpConfig, LpError};
use crate::sieve::{fit_sieve, NetSpec, SieveConfig, SieveError};
use crate::synth::{
    make_corridor, make_parabola, DensityMode, HypercubeParams, OracleDistribution, SimRng,
    SynthError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("need at least 2 positive risks for a log-log fit, got {0}")]
    InsufficientPoints(usize),
    #[error("m = {0} gives more than 2^12 vertices")]
    TooManyVertices(usize),
    #[error("generator failed at n = {n}, replicate {rep}: {source}")]
    Synth {
        n: usize,
        rep: usize,
        source: SynthError,
    },
    #[error("estimator failed at n = {n}, replicate {rep}: {source}")]
    Lp {
        n: usize,
        rep: usize,
        source: LpError,
    },
    #[error("sieve failed at n = {n}, replicate {rep}: {source}")]
    Sieve {
        n: usize,
        rep: usize,
        source: SieveError,
    },
}

/// Which convergence regime an exponent refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentMode {
    /// Plug-in rule under the strong density assumption.
    Strong,
    /// Plug-in rule under the mild density assumption.
    Mild,
    /// Sieve with a sup-norm net.
    SieveInf,
    /// Sieve with an `L_p` net, `p < ∞`.
    SieveP,
}

impl ExponentMode {
    pub fn tag(&self) -> &'static str {
        match self {
            ExponentMode::Strong => "strong",
            ExponentMode::Mild => "mild",
            ExponentMode::SieveInf => "sieve_inf",
            ExponentMode::SieveP => "sieve_p",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "strong" => Some(ExponentMode::Strong),
            "mild" => Some(ExponentMode::Mild),
            "sieve_inf" => Some(ExponentMode::SieveInf),
            "sieve_p" => Some(ExponentMode::SieveP),
            _ => None,
        }
    }
}

/// Exponent `e` of the excess-risk rate `n^{−e}` and whether `e > 1`.
///
/// Generic so that exact rational arithmetic can be used; `p` only matters
/// for [`ExponentMode::SieveP`] and `rho` only for the sieve modes.
pub fn theoretical_exponent<T: Num + Clone + PartialOrd>(
    mode: ExponentMode,
    alpha: T,
    beta: T,
    d: T,
    rho: T,
    p: T,
) -> (T, bool) {
    let one = T::one();
    let two = one.clone() + one.clone();
    let e = match mode {
        ExponentMode::Strong => beta.clone() * (one.clone() + alpha) / (two * beta + d),
        ExponentMode::Mild => {
            (one.clone() + alpha.clone()) * beta.clone() / ((two + alpha) * beta + d)
        }
        ExponentMode::SieveInf => (one.clone() + alpha.clone()) / (two + alpha + rho),
        ExponentMode::SieveP => {
            (one.clone() + alpha.clone()) * p.clone()
                / ((two + alpha.clone()) * p.clone() + rho * (p + alpha))
        }
    };
    let fast = e > one;
    (e, fast)
}

/// Parameters from which a sweep's reference exponent is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theory {
    pub mode: ExponentMode,
    pub alpha: f64,
    pub beta: f64,
    pub d: f64,
    pub rho: f64,
    pub p: f64,
}

impl Theory {
    pub fn exponent(&self) -> f64 {
        theoretical_exponent(self.mode, self.alpha, self.beta, self.d, self.rho, self.p).0
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Purpose tags for [`mix64`].
pub mod tag {
    pub const TRAIN: u64 = 1;
    pub const RISK: u64 = 2;
    pub const VERTEX: u64 = 3;
    pub const PROBE: u64 = 4;
}

/// Seed for one task: SplitMix64 applied along `base, n, rep, tag`. Each
/// step is a bijection of the running state, so adding replicates never
/// changes the seeds of existing ones.
pub fn mix64(base: u64, n: u64, rep: u64, tag: u64) -> u64 {
    splitmix(splitmix(splitmix(splitmix(base) ^ n) ^ rep) ^ tag)
}

/// Ordinary least-squares line.
#[derive(Debug, Clone, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope (0 with two points).
    pub slope_se: f64,
    /// Which input pairs were used.
    pub mask: Vec<bool>,
}

impl LineFit {
    pub fn used(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Least squares of `ys` on `xs` over pairs with `keep` true.
pub fn fit_line(xs: &[f64], ys: &[f64], mask: Vec<bool>) -> Result<LineFit, HarnessError> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .zip(&mask)
        .filter(|(_, &k)| k)
        .map(|((&x, &y), _)| (x, y))
        .collect();
    let k = pts.len();
    if k < 2 {
        return Err(HarnessError::InsufficientPoints(k));
    }
    let kf = k as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / kf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / kf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(HarnessError::InsufficientPoints(1));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_se = if k > 2 {
        (sse / (kf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
        slope_se,
        mask,
    })
}

/// Least squares of `log risk` on `log n`, skipping nonpositive risks.
pub fn fit_loglog(ns: &[f64], risks: &[f64]) -> Result<LineFit, HarnessError> {
    let mask: Vec<bool> = ns
        .iter()
        .zip(risks)
        .map(|(&n, &r)| n > 0.0 && r > 0.0 && r.is_finite())
        .collect();
    let lx: Vec<f64> = ns.iter().map(|n| n.max(f64::MIN_POSITIVE).ln()).collect();
    let ly: Vec<f64> = risks
        .iter()
        .map(|r| r.max(f64::MIN_POSITIVE).ln())
        .collect();
    fit_line(&lx, &ly, mask)
}

/// Hypercube whose grid follows a sample-size schedule; every replicate
/// draws its own vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct HypercubeSchedule {
    pub d: usize,
    pub beta: f64,
    pub lip: f64,
    pub alpha: f64,
    pub mode: DensityMode,
    /// `C̄` (strong) or `C` (mild) in the grid size.
    pub c_q: f64,
    /// `C′` in the ball mass.
    pub c_w: f64,
    /// `C″` in the number of perturbed cells (strong only).
    pub c_m: f64,
    pub c_phi: Option<f64>,
}

impl HypercubeSchedule {
    pub fn params(&self, n: usize) -> Result<HypercubeParams, SynthError> {
        let (q, m, w) = match self.mode {
            DensityMode::Strong => HypercubeParams::strong_schedule(
                n, self.alpha, self.beta, self.d, self.c_q, self.c_w, self.c_m,
            )?,
            DensityMode::Mild => HypercubeParams::mild_schedule(
                n, self.alpha, self.beta, self.d, self.c_q, self.c_w,
            )?,
        };
        let mut p =
            HypercubeParams::new(self.d, q, m, w, self.beta, self.lip, vec![1; m], self.mode)?
                .with_alpha(self.alpha)?;
        if let Some(c) = self.c_phi {
            p = p.with_c_phi(c)?;
        }
        Ok(p)
    }
}

/// A law to sample from, possibly depending on `n` and a seed.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleSpec {
    Parabola { d: usize, coef: f64, radius: f64 },
    Corridor { d: usize, t0: f64, gap: f64 },
    Hypercube(HypercubeParams),
    HypercubeSchedule(HypercubeSchedule),
}

impl OracleSpec {
    /// The law used for sample size `n`; `seed` picks the vertex of a
    /// scheduled hypercube.
    pub fn instantiate(
        &self,
        n: usize,
        seed: u64,
    ) -> Result<Arc<dyn OracleDistribution>, SynthError> {
        Ok(match self {
            OracleSpec::Parabola { d, coef, radius } => {
                Arc::new(make_parabola(*d, *coef, *radius)?)
            }
            OracleSpec::Corridor { d, t0, gap } => Arc::new(make_corridor(*d, *t0, *gap)?),
            OracleSpec::Hypercube(p) => Arc::new(p.clone()),
            OracleSpec::HypercubeSchedule(s) => {
                let mut rng = SimRng::seed_from_u64(seed);
                Arc::new(s.params(n)?.random_vertex(&mut rng))
            }
        })
    }
}

/// Bandwidth as a function of `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Fixed(f64),
    /// `h = c n^{−exponent}`.
    Power {
        c: f64,
        exponent: f64,
    },
}

impl Bandwidth {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            Bandwidth::Fixed(h) => h,
            Bandwidth::Power { c, exponent } => c * (n as f64).powf(-exponent),
        }
    }
}

/// How a classifier is trained from a sample.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierSpec {
    /// `1{η̂* ≥ 1/2}` with the guarded local polynomial estimator.
    LpPlugIn {
        beta: f64,
        kernel: KernelSpec,
        bandwidth: Bandwidth,
    },
    /// Empirical risk minimizer over the net sized for `ε_n`.
    Sieve {
        cfg: SieveConfig,
        net: NetSpec,
    },
    Constant(Label),
    /// The oracle's own Bayes rule.
    Bayes,
}

impl ClassifierSpec {
    pub fn lp_config(&self, n: usize) -> Option<Result<LpConfig, LpError>> {
        match self {
            ClassifierSpec::LpPlugIn {
                beta,
                kernel,
                bandwidth,
            } => Some(
                LpConfig::new(*beta, bandwidth.at(n), *kernel).map(|c| c.with_sample_size_hint(n)),
            ),
            _ => None,
        }
    }

    /// Trains on `data`; `rep` only labels errors.
    pub fn train(
        &self,
        data: Dataset,
        oracle: &Arc<dyn OracleDistribution>,
        rep: usize,
    ) -> Result<DecisionRule, HarnessError> {
        let n = data.len();
        match self {
            ClassifierSpec::LpPlugIn { .. } => {
                let cfg = self
                    .lp_config(n)
                    .expect("LP spec")
                    .map_err(|source| HarnessError::Lp { n, rep, source })?;
                if n < 3 {
                    return Err(HarnessError::Lp {
                        n,
                        rep,
                        source: LpError::InvalidSampleSize(n),
                    });
                }
                let data = Arc::new(data);
                Ok(plug_in(move |x: &[f64]| {
                    eta_star(data.as_ref(), x, &cfg).unwrap_or(0.0)
                }))
            }
            ClassifierSpec::Sieve { cfg, net } => {
                let sel = fit_sieve(&data, cfg, net).map_err(|source| HarnessError::Sieve {
                    n,
                    rep,
                    source,
                })?;
                Ok(sel.member.into_rule())
            }
            ClassifierSpec::Constant(label) => Ok(DecisionRule::constant(*label)),
            ClassifierSpec::Bayes => {
                let oracle = oracle.clone();
                Ok(DecisionRule::new(Provenance::OracleBayes, move |x| {
                    oracle.bayes(x)
                }))
            }
        }
    }
}

/// A rate experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub oracle: OracleSpec,
    pub classifier: ClassifierSpec,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub mc_points: usize,
    pub base_seed: u64,
    pub theory: Option<Theory>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n_grid.is_empty()
            || self.n_grid.windows(2).any(|w| w[0] >= w[1])
            || self.n_grid[0] == 0
        {
            return Err(HarnessError::InvalidConfig(
                "n grid must be nonempty, positive and strictly increasing".into(),
            ));
        }
        if self.replicates == 0 {
            return Err(HarnessError::InvalidConfig(
                "need at least one replicate".into(),
            ));
        }
        if self.mc_points == 0 {
            return Err(HarnessError::InvalidConfig(
                "need at least one Monte Carlo point".into(),
            ));
        }
        Ok(())
    }
}

/// Excess risk at one sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub n: usize,
    pub mean_excess: f64,
    pub se: f64,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    pub rows: Vec<RateRow>,
    /// `None` when fewer than two sample sizes had positive risk.
    pub fit: Option<LineFit>,
    pub theory: Option<(ExponentMode, f64)>,
}

impl RateResult {
    pub fn slope(&self) -> f64 {
        self.fit.as_ref().map_or(f64::NAN, |f| f.slope)
    }

    /// Rows with zero risk, left out of the fit.
    pub fn masked(&self) -> usize {
        self.fit
            .as_ref()
            .map_or(self.rows.len(), |f| f.mask.iter().filter(|&&m| !m).count())
    }

    pub const CSV_HEADER: &'static str =
        "n,mean_excess,se,replicates,theoretical_exponent,fitted_slope,r_squared";

    pub fn csv_row(row: &RateRow, theory: Option<f64>, fit: Option<&LineFit>) -> String {
        let theory = theory.map_or("nan".into(), |e| e.to_string());
        let (slope, r2) = fit.map_or(("nan".into(), "nan".into()), |f| {
            (f.slope.to_string(), f.r_squared.to_string())
        });
        format!(
            "{},{},{},{},{theory},{slope},{r2}",
            row.n, row.mean_excess, row.se, row.replicates
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&Self::csv_row(
                row,
                self.theory.map(|t| t.1),
                self.fit.as_ref(),
            ));
            out.push('\n');
        }
        out
    }
}

/// Trains and scores one replicate at sample size `n`.
pub fn run_replicate(cfg: &SweepConfig, n: usize, rep: usize) -> Result<McEstimate, HarnessError> {
    let (nn, rr) = (n as u64, rep as u64);
    let oracle = cfg
        .oracle
        .instantiate(n, mix64(cfg.base_seed, nn, rr, tag::VERTEX))
        .map_err(|source| HarnessError::Synth { n, rep, source })?;
    let data = oracle.sample(mix64(cfg.base_seed, nn, rr, tag::TRAIN), n);
    let rule = cfg.classifier.train(data, &oracle, rep)?;
    Ok(excess_risk_mc(
        &rule,
        oracle.as_ref(),
        cfg.mc_points,
        mix64(cfg.base_seed, nn, rr, tag::RISK),
    ))
}

/// Mean over replicates; the standard error is the between-replicate one,
/// or the Monte Carlo one for a single replicate.
pub fn aggregate(n: usize, reps: &[McEstimate]) -> RateRow {
    let k = reps.len();
    let mean = reps.iter().map(|e| e.mean).sum::<f64>() / k as f64;
    let se = if k > 1 {
        let var = reps.iter().map(|e| (e.mean - mean).powi(2)).sum::<f64>() / (k as f64 - 1.0);
        (var / k as f64).sqrt()
    } else {
        reps[0].se
    };
    RateRow {
        n,
        mean_excess: mean,
        se,
        replicates: k,
    }
}

/// One row of a sweep.
pub fn sweep_row(cfg: &SweepConfig, n: usize) -> Result<RateRow, HarnessError> {
    let reps: Vec<McEstimate> = (0..cfg.replicates)
        .into_par_iter()
        .map(|rep| run_replicate(cfg, n, rep))
        .collect::<Result<_, _>>()?;
    Ok(aggregate(n, &reps))
}

/// Fits and attaches the theoretical exponent to completed rows.
pub fn finish_sweep(cfg: &SweepConfig, rows: Vec<RateRow>) -> RateResult {
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let risks: Vec<f64> = rows.iter().map(|r| r.mean_excess).collect();
    let fit = fit_loglog(&ns, &risks).ok();
    RateResult {
        rows,
        fit,
        theory: cfg.theory.map(|t| (t.mode, t.exponent())),
    }
}

/// Runs every `(n, replicate)` task and fits the log-log slope. Deterministic
/// in `base_seed`.
pub fn run_sweep(cfg: &SweepConfig) -> Result<RateResult, HarnessError> {
    cfg.validate()?;
    let rows = cfg
        .n_grid
        .iter()
        .map(|&n| sweep_row(cfg, n))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(finish_sweep(cfg, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn exponent_examples() {
        let r = |a: i64, b: i64| Ratio::new(a, b);
        let one = r(1, 1);
        let zero = r(0, 1);
        assert_eq!(
            theoretical_exponent(ExponentMode::Strong, one, one, one, zero, zero),
            (r(2, 3), false)
        );
        assert_eq!(
            theoretical_exponent(ExponentMode::Strong, zero, one, one, zero, zero),
            (r(1, 3), false)
        );
        assert_eq!(
            theoretical_exponent(ExponentMode::Mild, one, one, one, zero, zero),
            (r(1, 2), false)
        );
        assert_eq!(
            theoretical_exponent(ExponentMode::Strong, r(3, 1), r(2, 1), one, zero, zero),
            (r(8, 5), true)
        );
        let (e, _) = theoretical_exponent(ExponentMode::Strong, 0.5f64, 2.0, 1.0, 0.0, 0.0);
        assert!((e - 0.6).abs() < 1e-15);
        assert_eq!(
            ExponentMode::from_tag("sieve_p"),
            Some(ExponentMode::SieveP)
        );
    }

    #[test]
    fn seeds_never_collide_on_a_grid() {
        let mut seen = HashSet::new();
        for n in (11..=20).map(|k| 1u64 << k).chain(1..=1000) {
            for rep in 0..200 {
                for t in [tag::TRAIN, tag::RISK, tag::VERTEX] {
                    assert!(seen.insert(mix64(42, n, rep, t)));
                }
            }
        }
    }

    #[test]
    fn exact_power_laws() {
        let ns = [100.0, 200.0, 400.0, 800.0, 1600.0];
        let risks: Vec<f64> = ns.iter().map(|n: &f64| 3.0 * n.powf(-2.0 / 3.0)).collect();
        let fit = fit_loglog(&ns, &risks).unwrap();
        assert!((fit.slope + 2.0 / 3.0).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-10);
        let flat = fit_loglog(&ns, &[0.2; 5]).unwrap();
        assert!(flat.slope.abs() < 1e-12);
        let masked = fit_loglog(&ns, &[0.0, 0.1, 0.0, 0.05, 0.025]).unwrap();
        assert_eq!(masked.used(), 3);
        assert!(matches!(
            fit_loglog(&ns, &[0.0, 0.0, 0.0, 0.0, 1.0]),
            Err(HarnessError::InsufficientPoints(1))
        ));
    }

    #[test]
    fn noisy_power_law_within_three_se() {
        use rand::Rng;
        let mut rng = SimRng::seed_from_u64(9);
        let ns: Vec<f64> = (0..12).map(|k| 64.0 * 2f64.powi(k)).collect();
        let mut hits = 0;
        for _ in 0..50 {
            let risks: Vec<f64> = ns
                .iter()
                .map(|n| 0.7 * n.powf(-0.45) * (rng.random_range(-0.1..0.1f64)).exp())
                .collect();
            let fit = fit_loglog(&ns, &risks).unwrap();
            if (fit.slope + 0.45).abs() <= 3.0 * fit.slope_se {
                hits += 1;
            }
        }
        assert!(hits >= 48, "{hits}");
    }

    fn parabola_sweep(classifier: ClassifierSpec, reps: usize) -> SweepConfig {
        SweepConfig {
            oracle: OracleSpec::Parabola {
                d: 1,
                coef: 0.5,
                radius: 1.0,
            },
            classifier,
            n_grid: vec![100, 200],
            replicates: reps,
            mc_points: 500,
            base_seed: 3,
            theory: Some(Theory {
                mode: ExponentMode::Strong,
                alpha: 0.5,
                beta: 2.0,
                d: 1.0,
                rho: 0.0,
                p: 0.0,
            }),
        }
    }

    #[test]
    fn bayes_sweep_has_zero_risk_and_no_slope() {
        let res = run_sweep(&parabola_sweep(ClassifierSpec::Bayes, 2)).unwrap();
        assert!(res.rows.iter().all(|r| r.mean_excess == 0.0 && r.se == 0.0));
        assert!(res.slope().is_nan());
        assert_eq!(res.masked(), 2);
        assert!(res
            .to_csv()
            .lines()
            .nth(1)
            .unwrap()
            .ends_with(",0.6,nan,nan"));
    }

    #[test]
    fn sweeps_are_deterministic_and_se_shrinks() {
        let lp = ClassifierSpec::LpPlugIn {
            beta: 2.0,
            kernel: KernelSpec::UniformBall { radius: 1.0 },
            bandwidth: Bandwidth::Power {
                c: 1.0,
                exponent: 0.2,
            },
        };
        let a = run_sweep(&parabola_sweep(lp.clone(), 4)).unwrap();
        let b = run_sweep(&parabola_sweep(lp.clone(), 4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 2);
        assert!(a.rows.iter().all(|r| r.mean_excess >= 0.0));
        // extra replicates leave the first ones untouched
        let c = parabola_sweep(lp.clone(), 8);
        let first = run_replicate(&c, 100, 0).unwrap();
        assert_eq!(
            first,
            run_replicate(&parabola_sweep(lp, 4), 100, 0).unwrap()
        );
    }

    #[test]
    fn constant_rule_on_the_parabola() {
        let mut cfg = parabola_sweep(ClassifierSpec::Constant(1), 1);
        cfg.mc_points = 100_000;
        let res = run_sweep(&cfg).unwrap();
        for r in &res.rows {
            assert!((r.mean_excess - 1.0 / 3.0).abs() < 3.0 * r.se);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        let mut cfg = parabola_sweep(ClassifierSpec::Bayes, 1);
        cfg.n_grid = vec![200, 100];
        assert!(run_sweep(&cfg).is_err());
        cfg.n_grid = vec![100];
        cfg.replicates = 0;
        assert!(run_sweep(&cfg).is_err());
    }

    proptest! {
        #[test]
        fn exact_slopes_are_recovered(e in -3.0f64..3.0, c in 0.01f64..10.0) {
            let ns = [10.0, 50.0, 300.0, 1000.0];
            let risks: Vec<f64> = ns.iter().map(|n: &f64| c * n.powf(e)).collect();
            let fit = fit_loglog(&ns, &risks).unwrap();
            prop_assert!((fit.slope - e).abs() < 1e-12);
        }
    }
}
