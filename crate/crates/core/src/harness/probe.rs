use std::sync::Arc;

use rayon::prelude::*;

use super::{
    aggregate, fit_line, mix64, tag, Bandwidth, ClassifierSpec, HarnessError, LineFit, OracleSpec,
    RateRow, SweepConfig,
};
use crate::classify::{excess_risk_mc, McEstimate};
use crate::lp::{eta_star, LpConfig};
use crate::synth::{assouad_bound, HypercubeParams, OracleDistribution};

/// Exceedance frequency at one `(n, x, δ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationCell {
    pub n: usize,
    pub x_index: usize,
    pub delta: f64,
    pub reps: usize,
    pub exceedances: usize,
    pub p_hat: f64,
    pub se: f64,
    /// `n hᵈ δ²`.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationTable {
    pub cells: Vec<ConcentrationCell>,
    /// `log p̂` against `n hᵈ δ²` over cells with `p̂ > 0`.
    pub fit: Option<LineFit>,
}

impl ConcentrationTable {
    pub const CSV_HEADER: &'static str = "n,x_index,delta,reps,exceedances,p_hat,se,n_hd_delta2";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                c.n, c.x_index, c.delta, c.reps, c.exceedances, c.p_hat, c.se, c.scale
            ));
        }
        out
    }
}

/// Frequency of `|η̂*(x) − η(x)| ≥ δ` over `reps` fresh samples, for every
/// `n`, `x` and `δ`, with the bandwidth of `cfg` held fixed.
pub fn concentration_probe(
    oracle: &dyn OracleDistribution,
    cfg: &LpConfig,
    x_list: &[Vec<f64>],
    delta_grid: &[f64],
    n_grid: &[usize],
    reps: usize,
    seed: u64,
) -> Result<ConcentrationTable, HarnessError> {
    if reps == 0 || x_list.is_empty() || delta_grid.iter().any(|&d| !(d > 0.0)) {
        return Err(HarnessError::InvalidConfig(
            "probe needs reps ≥ 1, query points and positive deltas".into(),
        ));
    }
    if n_grid.iter().any(|&n| n < 3) {
        return Err(HarnessError::InvalidConfig(
            "probe sample sizes must be at least 3".into(),
        ));
    }
    let truth: Vec<f64> = x_list.iter().map(|x| oracle.eta(x)).collect();
    let hd = cfg.bandwidth().powi(oracle.dim() as i32);
    let mut cells = Vec::new();
    for &n in n_grid {
        let lp = cfg.clone().with_sample_size_hint(n);
        let errors: Vec<Vec<f64>> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let data = oracle.sample(mix64(seed, n as u64, rep as u64, tag::PROBE), n);
                x_list
                    .iter()
                    .zip(&truth)
                    .map(|(x, t)| eta_star(&data, x, &lp).map(|e| (e - t).abs()))
                    .collect::<Result<Vec<f64>, _>>()
                    .map_err(|source| HarnessError::Lp { n, rep, source })
            })
            .collect::<Result<_, _>>()?;
        for (xi, _) in x_list.iter().enumerate() {
            for &delta in delta_grid {
                let exceedances = errors.iter().filter(|e| e[xi] >= delta).count();
                let p_hat = exceedances as f64 / reps as f64;
                cells.push(ConcentrationCell {
                    n,
                    x_index: xi,
                    delta,
                    reps,
                    exceedances,
                    p_hat,
                    se: (p_hat * (1.0 - p_hat) / reps as f64).sqrt(),
                    scale: n as f64 * hd * delta * delta,
                });
            }
        }
    }
    let xs: Vec<f64> = cells.iter().map(|c| c.scale).collect();
    let ys: Vec<f64> = cells
        .iter()
        .map(|c| c.p_hat.max(f64::MIN_POSITIVE).ln())
        .collect();
    let mask = cells.iter().map(|c| c.p_hat > 0.0).collect();
    let fit = fit_line(&xs, &ys, mask).ok();
    Ok(ConcentrationTable { cells, fit })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayTable {
    pub rows: Vec<RateRow>,
    /// `log risk` against `n` over rows with positive risk.
    pub fit: Option<LineFit>,
}

impl DecayTable {
    pub const CSV_HEADER: &'static str = "n,mean_excess,se,replicates";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.n, r.mean_excess, r.se, r.replicates
            ));
        }
        out
    }
}

/// Excess risk of the plug-in rule with the bandwidth of `cfg` held fixed
/// as `n` grows, and a fit of `log risk` on `n`.
pub fn exponential_probe(
    oracle: &OracleSpec,
    cfg: &LpConfig,
    n_grid: &[usize],
    reps: usize,
    mc_points: usize,
    seed: u64,
) -> Result<DecayTable, HarnessError> {
    let sweep = SweepConfig {
        oracle: oracle.clone(),
        classifier: ClassifierSpec::LpPlugIn {
            beta: cfg.beta(),
            kernel: cfg.kernel(),
            bandwidth: Bandwidth::Fixed(cfg.bandwidth()),
        },
        n_grid: n_grid.to_vec(),
        replicates: reps,
        mc_points,
        base_seed: seed,
        theory: None,
    };
    let res = super::run_sweep(&sweep)?;
    let xs: Vec<f64> = res.rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = res
        .rows
        .iter()
        .map(|r| r.mean_excess.max(f64::MIN_POSITIVE).ln())
        .collect();
    let mask = res.rows.iter().map(|r| r.mean_excess > 0.0).collect();
    let fit = fit_line(&xs, &ys, mask).ok();
    Ok(DecayTable {
        rows: res.rows,
        fit,
    })
}

/// Worst vertex of the hypercube for a classifier, against the lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct AssouadReport {
    /// Expected excess risk at each vertex, indexed as in
    /// [`HypercubeParams::vertex`].
    pub per_vertex: Vec<McEstimate>,
    pub argmax: u64,
    pub sup: McEstimate,
    pub bound: f64,
    /// `sup + 3 se ≥ bound`.
    pub dominance: bool,
}

/// Trains `classifier` on `reps` samples of size `n` from every vertex of
/// `params` and compares the largest mean excess risk with
/// [`assouad_bound`].
pub fn assouad_check(
    params: &HypercubeParams,
    classifier: &ClassifierSpec,
    n: usize,
    reps: usize,
    mc_points: usize,
    seed: u64,
) -> Result<AssouadReport, HarnessError> {
    let m = params.m();
    if m > 12 {
        return Err(HarnessError::TooManyVertices(m));
    }
    if reps == 0 || mc_points == 0 {
        return Err(HarnessError::InvalidConfig(
            "need reps ≥ 1 and mc points ≥ 1".into(),
        ));
    }
    let per_vertex: Vec<McEstimate> = (0..1u64 << m)
        .into_par_iter()
        .map(|v| {
            let oracle: Arc<dyn OracleDistribution> = Arc::new(params.vertex(v));
            let runs = (0..reps)
                .map(|rep| {
                    let data = oracle.sample(mix64(seed, v, rep as u64, tag::TRAIN), n);
                    let rule = classifier.train(data, &oracle, rep)?;
                    Ok(excess_risk_mc(
                        &rule,
                        oracle.as_ref(),
                        mc_points,
                        mix64(seed, v, rep as u64, tag::RISK),
                    ))
                })
                .collect::<Result<Vec<_>, HarnessError>>()?;
            let row = aggregate(n, &runs);
            Ok(McEstimate {
                mean: row.mean_excess,
                se: row.se,
            })
        })
        .collect::<Result<_, HarnessError>>()?;
    let (argmax, sup) =
        per_vertex
            .iter()
            .enumerate()
            .fold((0u64, per_vertex[0]), |best, (v, e)| {
                if e.mean > best.1.mean {
                    (v as u64, *e)
                } else {
                    best
                }
            });
    let bound = assouad_bound(params, n);
    Ok(AssouadReport {
        dominance: sup.mean + 3.0 * sup.se >= bound,
        per_vertex,
        argmax,
        sup,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::KernelSpec;
    use crate::synth::{make_parabola, DensityMode};

    #[test]
    fn large_deltas_never_exceed() {
        let p = make_parabola(1, 0.5, 1.0).unwrap();
        let cfg = LpConfig::new(2.0, 0.3, KernelSpec::UniformBall { radius: 1.0 }).unwrap();
        let table = concentration_probe(
            &p,
            &cfg,
            &[vec![0.0], vec![0.3]],
            &[1.01, 2.0],
            &[50, 100],
            20,
            1,
        )
        .unwrap();
        assert!(table
            .cells
            .iter()
            .all(|c| c.exceedances == 0 && c.p_hat == 0.0));
        assert!(table.fit.is_none());
        assert_eq!(table.to_csv().lines().count(), 1 + 8);
    }

    #[test]
    fn concentration_tightens_with_n() {
        let p = make_parabola(1, 0.5, 1.0).unwrap();
        let cfg = LpConfig::new(2.0, 0.2, KernelSpec::UniformBall { radius: 1.0 }).unwrap();
        let table = concentration_probe(
            &p,
            &cfg,
            &[vec![0.2]],
            &[0.05, 0.1],
            &[50, 200, 800],
            200,
            2,
        )
        .unwrap();
        for delta in [0.05, 0.1] {
            let ps: Vec<&ConcentrationCell> =
                table.cells.iter().filter(|c| c.delta == delta).collect();
            for w in ps.windows(2) {
                assert!(w[1].p_hat <= w[0].p_hat + 3.0 * (w[0].se + w[1].se) + 1e-12);
            }
        }
        assert!(table.fit.unwrap().slope < 0.0);
    }

    #[test]
    fn assouad_examples() {
        let params = HypercubeParams::new(
            1,
            4,
            4,
            1.0 / 64.0,
            1.0,
            50.0,
            vec![1; 4],
            DensityMode::Mild,
        )
        .unwrap();
        let zero = assouad_check(&params, &ClassifierSpec::Constant(0), 64, 1, 2000, 5).unwrap();
        assert!(zero.dominance);
        assert_eq!(zero.argmax, 0);
        // all σ = +1: every ball sits on the plateau, so the excess is m w b
        let exact = 4.0 * params.w() * params.b();
        assert!((zero.sup.mean - exact).abs() <= 3.0 * zero.sup.se + 1e-12);
        assert!(zero.sup.mean >= zero.bound);
        let big = HypercubeParams::new(1, 16, 13, 0.01, 1.0, 1.0, vec![1; 13], DensityMode::Mild)
            .unwrap();
        assert_eq!(
            assouad_check(&big, &ClassifierSpec::Constant(0), 10, 1, 10, 0),
            Err(HarnessError::TooManyVertices(13))
        );
    }

    #[test]
    fn trivial_dominance_when_the_bound_vanishes() {
        let params =
            HypercubeParams::new(1, 2, 1, 0.25, 1.0, 1.0, vec![1], DensityMode::Strong).unwrap();
        let n = 100_000;
        assert_eq!(assouad_bound(&params, n), 0.0);
        let rep = assouad_check(&params, &ClassifierSpec::Bayes, n, 1, 100, 1).unwrap();
        assert!(rep.dominance);
        assert_eq!(rep.sup.mean, 0.0);
    }
}
