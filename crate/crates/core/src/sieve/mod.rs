//! Hybrid plug-in/ERM classification over a finite net of piecewise
//! polynomials.
//!
//! A [`Net`] covers a Hölder ball on a cube with polynomials of degree
//! `⌈β⌉ − 1` on `kᵈ` equal cells, coefficients quantized on a grid. Members
//! are never materialized in bulk: the net is a counted, ranked family, and
//! [`select_sieve`] finds the empirical risk minimizer by dynamic
//! programming over cells.

mod net;

pub use net::{log_cardinality, recorded_a_prime, Net, NetMember, NetSpec, DEFAULT_BUDGET};

use rayon::prelude::*;
use thiserror::Error;

use crate::classify::DecisionRule;
use crate::data::{Dataset, Observations};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SieveError {
    #[error("invalid net specification: {0}")]
    InvalidSpec(String),
    #[error("net has {} members (log-card {log_card:.3}), over the budget of {budget}", count.map_or_else(|| "more than 2^128".to_string(), |c| c.to_string()))]
    NetBudgetExceeded {
        count: Option<u128>,
        log_card: f64,
        budget: u128,
    },
    #[error("index {index} is outside a net of {card} members")]
    IndexOutOfRange { index: u128, card: u128 },
    #[error("dataset dimension {data} does not match net dimension {net}")]
    DimensionMismatch { data: usize, net: usize },
    #[error("empty dataset")]
    EmptyData,
}

/// Parameters of the `ε_n` schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SieveConfig {
    pub alpha: f64,
    pub rho: f64,
    /// Norm index in `[1, ∞]`.
    pub p: f64,
    pub c_eps: f64,
}

impl SieveConfig {
    pub fn new(alpha: f64, rho: f64, p: f64) -> Result<Self, SieveError> {
        if !(alpha >= 0.0 && !alpha.is_nan()) {
            return Err(SieveError::InvalidSpec(format!(
                "alpha must be nonnegative, got {alpha}"
            )));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(SieveError::InvalidSpec(format!(
                "rho must be positive, got {rho}"
            )));
        }
        if !(p >= 1.0) {
            return Err(SieveError::InvalidSpec(format!(
                "p must lie in [1, inf], got {p}"
            )));
        }
        Ok(Self {
            alpha,
            rho,
            p,
            c_eps: 1.0,
        })
    }

    pub fn with_c_eps(mut self, c_eps: f64) -> Result<Self, SieveError> {
        if !(c_eps > 0.0 && c_eps.is_finite()) {
            return Err(SieveError::InvalidSpec(format!(
                "c_eps must be positive, got {c_eps}"
            )));
        }
        self.c_eps = c_eps;
        Ok(self)
    }

    /// Exponent `e` with `ε_n = c_ε n^{−e}`.
    pub fn exponent(&self) -> f64 {
        let (a, r, p) = (self.alpha, self.rho, self.p);
        if p.is_infinite() {
            1.0 / (2.0 + a + r)
        } else {
            (p + a) / ((2.0 + a) * p + r * (p + a))
        }
    }
}

/// `ε_n = c_ε n^{−1/(2+α+ρ)}` for `p = ∞`, else
/// `c_ε n^{−(p+α)/((2+α)p+ρ(p+α))}`.
pub fn epsilon_schedule(n: usize, cfg: &SieveConfig) -> f64 {
    assert!(n >= 1, "epsilon_schedule needs n >= 1");
    cfg.c_eps * (n as f64).powf(-cfg.exponent())
}

/// Number of points with `f(Xᵢ) ≠ Yᵢ`.
pub fn error_count(f: &DecisionRule, data: &Dataset) -> usize {
    (0..data.len())
        .filter(|&i| f.eval(data.point(i)) != data.label(i))
        .count()
}

/// `(1/n) Σ 1{f(Xᵢ) ≠ Yᵢ}`.
pub fn empirical_risk(f: &DecisionRule, data: &Dataset) -> f64 {
    assert!(!data.is_empty(), "empirical risk of an empty sample");
    error_count(f, data) as f64 / data.len() as f64
}

/// Outcome of a sieve fit.
#[derive(Debug, Clone)]
pub struct SieveSelection {
    pub member: NetMember,
    pub index: u128,
    pub errors: usize,
    pub risk: f64,
}

fn check_data(data: &Dataset, net: &Net) -> Result<(), SieveError> {
    if data.is_empty() {
        return Err(SieveError::EmptyData);
    }
    if data.dim() != net.dim() {
        return Err(SieveError::DimensionMismatch {
            data: data.dim(),
            net: net.dim(),
        });
    }
    Ok(())
}

/// The member whose plug-in rule has the fewest training errors, the
/// smallest canonical index among ties.
///
/// Errors add up over cells and members are sequences of per-cell choices
/// linked only through the neighbour constraint on constant levels, so a
/// backward pass computes the optimal suffix cost for each level and a
/// forward pass picks the lexicographically first optimal sequence, which
/// is also the one of smallest index.
pub fn select_sieve(data: &Dataset, net: &Net) -> Result<SieveSelection, SieveError> {
    check_data(data, net)?;
    let cells = net.cell_count();
    let levels = net.level_count();
    let options = net.options_per_cell();
    let mut errs = vec![vec![0u32; levels * options]; cells];
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); cells];
    for i in 0..data.len() {
        buckets[net.locate(data.point(i)).0].push(i);
    }
    let mut mono = vec![0.0; net.basis_len()];
    for (pos, members) in buckets.iter().enumerate() {
        let table = &mut errs[pos];
        for &i in members {
            let (_, v) = net.locate(data.point(i));
            net.monomials(&v, &mut mono);
            let y = data.label(i);
            for a in 0..levels {
                for c in 0..options {
                    let label = u8::from(net.raw_value(a, c, &mono) >= 0.5);
                    table[a * options + c] += u32::from(label != y);
                }
            }
        }
    }
    let best_per_level: Vec<Vec<u64>> = errs
        .iter()
        .map(|t| {
            (0..levels)
                .map(|a| u64::from(*t[a * options..(a + 1) * options].iter().min().unwrap()))
                .collect()
        })
        .collect();
    // suffix[i][a]: least errors on cells i.. given cell i uses level a
    let mut suffix = vec![vec![0u64; levels]; cells + 1];
    for pos in (0..cells).rev() {
        for a in 0..levels {
            let tail = if pos + 1 == cells {
                0
            } else {
                min_over_window(&suffix[pos + 1], a, net.jump())
            };
            suffix[pos][a] = best_per_level[pos][a] + tail;
        }
    }
    let total = *suffix[0].iter().min().unwrap();
    let mut remaining = total;
    let mut choice = Vec::with_capacity(cells);
    let mut prev: Option<usize> = None;
    for pos in 0..cells {
        let (lo, hi) = match prev {
            None => (0, levels - 1),
            Some(p) => (
                p.saturating_sub(net.jump()),
                (p + net.jump()).min(levels - 1),
            ),
        };
        let tail = |a: usize| {
            if pos + 1 == cells {
                0
            } else {
                min_over_window(&suffix[pos + 1], a, net.jump())
            }
        };
        let picked = (lo..=hi)
            .flat_map(|a| (0..options).map(move |c| (a, c)))
            .find(|&(a, c)| u64::from(errs[pos][a * options + c]) + tail(a) == remaining)
            .expect("an optimal continuation exists");
        remaining -= u64::from(errs[pos][picked.0 * options + picked.1]);
        prev = Some(picked.0);
        choice.push(picked);
    }
    let member = net.member_from_choices(choice)?;
    let index = net.rank(&member);
    let errors = total as usize;
    Ok(SieveSelection {
        risk: errors as f64 / data.len() as f64,
        member,
        index,
        errors,
    })
}

fn min_over_window(row: &[u64], a: usize, jump: usize) -> u64 {
    let lo = a.saturating_sub(jump);
    let hi = (a + jump).min(row.len() - 1);
    *row[lo..=hi].iter().min().unwrap()
}

/// Brute-force argmin of the training error over every member, minimizing
/// `(errors, index)`. Only for nets small enough to enumerate.
pub fn select_sieve_exhaustive(data: &Dataset, net: &Net) -> Result<SieveSelection, SieveError> {
    check_data(data, net)?;
    let card = u64::try_from(net.card()).map_err(|_| SieveError::NetBudgetExceeded {
        count: Some(net.card()),
        log_card: net.log_card(),
        budget: u64::MAX.into(),
    })?;
    let (errors, index) = (0..card)
        .into_par_iter()
        .map(|idx| {
            let rule = net
                .member(u128::from(idx))
                .expect("index below card")
                .into_rule();
            (error_count(&rule, data), idx)
        })
        .min()
        .expect("nets are nonempty");
    let member = net.member(u128::from(index))?;
    Ok(SieveSelection {
        member,
        index: u128::from(index),
        errors,
        risk: errors as f64 / data.len() as f64,
    })
}

/// Builds the net for `ε_n` under `cfg` and selects from it.
pub fn fit_sieve(
    data: &Dataset,
    cfg: &SieveConfig,
    base: &NetSpec,
) -> Result<SieveSelection, SieveError> {
    let eps = epsilon_schedule(data.len().max(1), cfg);
    let net = Net::build(base.resized(eps)?)?;
    select_sieve(data, &net)
}
