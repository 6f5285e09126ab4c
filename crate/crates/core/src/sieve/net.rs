use std::sync::Arc;

use crate::classify::{DecisionRule, Provenance};
use crate::lp::{degree_for, multi_index_basis, MultiIndex};

use super::SieveError;

/// Default cap on the number of members a net may have.
pub const DEFAULT_BUDGET: u128 = 1_000_000_000_000_000_000;

/// Beyond this many cells no budget can be met.
const MAX_CELLS: u128 = 1 << 20;

/// Geometry and quantization of a net over the cube `[lo, hi]ᵈ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetSpec {
    pub beta: f64,
    pub lip: f64,
    pub lo: f64,
    pub hi: f64,
    pub d: usize,
    /// Norm index of the target cover; a sup-norm cover serves every `p`.
    pub p: f64,
    pub epsilon: f64,
    /// Cells per axis.
    pub k: usize,
    /// Coefficient quantization step.
    pub tau: f64,
    pub size_budget: u128,
    sized: bool,
}

impl NetSpec {
    /// Net sized for an `ε`-cover of `Σ(β, L)` on `[0, 1]ᵈ`: cell side at
    /// most `(ε/L)^{1/β}` with `k` a power of two, and `τ = 1/⌈2/ε⌉`, the
    /// largest step at most `ε/2` that divides 1.
    pub fn sized(beta: f64, lip: f64, d: usize, epsilon: f64) -> Result<Self, SieveError> {
        let mut spec = Self {
            beta,
            lip,
            lo: 0.0,
            hi: 1.0,
            d,
            p: f64::INFINITY,
            epsilon,
            k: 1,
            tau: 1.0,
            size_budget: DEFAULT_BUDGET,
            sized: true,
        };
        spec.validate_shape()?;
        spec.apply_sizing()?;
        spec.validate()?;
        Ok(spec)
    }

    /// Net with a given cell count and step on `[0, 1]ᵈ`; `ε` is recorded as
    /// `2τ`.
    pub fn explicit(beta: f64, lip: f64, d: usize, k: usize, tau: f64) -> Result<Self, SieveError> {
        let spec = Self {
            beta,
            lip,
            lo: 0.0,
            hi: 1.0,
            d,
            p: f64::INFINITY,
            epsilon: 2.0 * tau,
            k,
            tau,
            size_budget: DEFAULT_BUDGET,
            sized: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_domain(mut self, lo: f64, hi: f64) -> Result<Self, SieveError> {
        self.lo = lo;
        self.hi = hi;
        self.validate_shape()?;
        if self.sized {
            self.apply_sizing()?;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn with_budget(mut self, budget: u128) -> Self {
        self.size_budget = budget;
        self
    }

    pub fn with_p(mut self, p: f64) -> Result<Self, SieveError> {
        self.p = p;
        self.validate()?;
        Ok(self)
    }

    /// Same ball, domain and budget, sized for a new `ε`.
    pub fn resized(&self, epsilon: f64) -> Result<Self, SieveError> {
        let mut spec = self.clone();
        spec.epsilon = epsilon;
        spec.sized = true;
        spec.validate_shape()?;
        spec.apply_sizing()?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn degree(&self) -> u32 {
        degree_for(self.beta)
    }

    pub fn side(&self) -> f64 {
        (self.hi - self.lo) / self.k as f64
    }

    fn apply_sizing(&mut self) -> Result<(), SieveError> {
        let target = (self.epsilon / self.lip).powf(1.0 / self.beta);
        let ratio = (self.hi - self.lo) / target;
        let exp = if ratio <= 1.0 {
            0.0
        } else {
            (ratio * (1.0 - 1e-12)).log2().ceil()
        };
        if exp > 40.0 {
            return Err(SieveError::InvalidSpec(format!(
                "epsilon = {} needs 2^{exp} cells per axis",
                self.epsilon
            )));
        }
        self.k = 1usize << exp as u32;
        self.tau = 1.0 / (2.0 / self.epsilon - 1e-9).ceil();
        Ok(())
    }

    fn validate_shape(&self) -> Result<(), SieveError> {
        let bad = |m: String| Err(SieveError::InvalidSpec(m));
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if !(self.lip > 0.0 && self.lip.is_finite()) {
            return bad(format!("L must be positive, got {}", self.lip));
        }
        if self.d == 0 {
            return bad("dimension must be at least 1".into());
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return bad(format!(
                "domain [{}, {}] is empty or unbounded",
                self.lo, self.hi
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), SieveError> {
        self.validate_shape()?;
        if self.k == 0 {
            return Err(SieveError::InvalidSpec("k must be at least 1".into()));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(SieveError::InvalidSpec(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if !(self.p >= 1.0) {
            return Err(SieveError::InvalidSpec(format!(
                "p must lie in [1, inf], got {}",
                self.p
            )));
        }
        Ok(())
    }
}

/// `A′` with `log card ≤ A′ ε^{−ρ}`, `ρ = d/β`, for sized degree-0 nets with
/// `ε < 1`: at most `(2·len)ᵈ (L/ε)^{d/β}` cells, `⌈2/ε⌉ + 1 ≤ 4^{1/ε}`
/// levels in the first cell and at most 7 in each later one.
pub fn recorded_a_prime(spec: &NetSpec) -> Option<(f64, f64)> {
    if !spec.sized || spec.degree() != 0 || spec.epsilon >= 1.0 {
        return None;
    }
    let d = spec.d as f64;
    let len = spec.hi - spec.lo;
    let rho = d / spec.beta;
    let a = (2.0 * len).powf(d) * spec.lip.powf(rho) * 7f64.ln() + 4f64.ln();
    Some((a, rho))
}

/// Everything a member needs to evaluate itself.
#[derive(Debug)]
struct Layout {
    d: usize,
    k: usize,
    lo: f64,
    side: f64,
    tau: f64,
    levels: usize,
    basis: Vec<MultiIndex>,
    /// Coefficient vector (excluding the constant) of each per-cell option.
    options: Vec<Vec<f64>>,
}

impl Layout {
    fn locate(&self, x: &[f64], v: &mut [f64]) -> usize {
        let half = 0.5 * self.side;
        let mut pos = 0usize;
        let mut parity = 0usize;
        for (&xj, vj) in x.iter().zip(v.iter_mut()) {
            let g = (((xj - self.lo) / self.side).floor().max(0.0) as usize).min(self.k - 1);
            *vj = (xj - (self.lo + (g as f64 + 0.5) * self.side)) / half;
            // reflected k-ary Gray order: consecutive cells share a face
            let t = if parity % 2 == 0 { g } else { self.k - 1 - g };
            parity += g;
            pos = pos * self.k + t;
        }
        pos
    }

    fn level(&self, a: usize) -> f64 {
        (a as f64 * self.tau).min(1.0)
    }

    fn monomials(&self, v: &[f64], out: &mut [f64]) {
        for (o, s) in out.iter_mut().zip(&self.basis) {
            *o = s.monomial(v);
        }
    }

    fn raw_value(&self, a: usize, c: usize, mono: &[f64]) -> f64 {
        self.level(a)
            + self.options[c]
                .iter()
                .zip(&mono[1..])
                .map(|(co, m)| co * m)
                .sum::<f64>()
    }
}

/// A quantized piecewise polynomial in the net.
#[derive(Debug, Clone)]
pub struct NetMember {
    layout: Arc<Layout>,
    /// `(level, option)` for each cell in traversal order.
    choices: Vec<(usize, usize)>,
    index: u128,
}

impl NetMember {
    pub fn index(&self) -> u128 {
        self.index
    }

    /// Value at `x`, clamped to `[0, 1]`. Points outside the domain use the
    /// polynomial of the nearest cell.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let lay = &self.layout;
        let mut v = vec![0.0; lay.d];
        let pos = lay.locate(x, &mut v);
        let mut mono = vec![0.0; lay.basis.len()];
        lay.monomials(&v, &mut mono);
        let (a, c) = self.choices[pos];
        lay.raw_value(a, c, &mono).clamp(0.0, 1.0)
    }

    /// The constant level used on each cell, in traversal order.
    pub fn levels(&self) -> Vec<f64> {
        self.choices
            .iter()
            .map(|&(a, _)| self.layout.level(a))
            .collect()
    }

    /// Plug-in rule `1{η̄ ≥ 1/2}`.
    pub fn into_rule(self) -> DecisionRule {
        let index = self.index;
        DecisionRule::new(Provenance::NetMember { index }, move |x| {
            u8::from(self.eval(x) >= 0.5)
        })
    }
}

/// A counted, ranked family of piecewise polynomials.
///
/// Cells are visited in reflected Gray order so that consecutive cells are
/// adjacent. For degree 0 the constant levels of consecutive cells may
/// differ by at most `jump` grid steps, which is what a Lipschitz function
/// allows up to rounding; higher degree nets leave levels unconstrained and
/// bound the other coefficients by `L (side/2)^{|s|} / s!` in coordinates
/// scaled to `[−1, 1]` on each cell. Members are ordered by their sequence
/// of `(level, coefficients)` choices, cell by cell, lexicographically.
#[derive(Debug, Clone)]
pub struct Net {
    spec: NetSpec,
    layout: Arc<Layout>,
    cells: usize,
    jump: usize,
    /// `completions[i][a]`: members restricted to cells `i..` with level `a`
    /// on cell `i`.
    completions: Vec<Vec<u128>>,
    card: u128,
    log_card: f64,
}

fn log_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.collect();
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Counts shared by [`Net::build`] and [`log_cardinality`].
struct Shape {
    basis: Vec<MultiIndex>,
    levels: usize,
    radii: Vec<usize>,
    jump: usize,
    cells: Option<usize>,
    log_card: f64,
}

impl Shape {
    fn of(spec: &NetSpec) -> Self {
        let d = spec.d;
        let side = spec.side();
        let degree = spec.degree();
        let basis = multi_index_basis(degree, d);
        let levels = (1.0 / spec.tau + 1e-9).floor() as usize + 1;
        let radii: Vec<usize> = basis[1..]
            .iter()
            .map(|s| {
                let bound = spec.lip * (0.5 * side).powi(s.order() as i32) / s.factorial();
                (bound / spec.tau + 1e-9).floor() as usize
            })
            .collect();
        let jump = if degree == 0 {
            ((spec.lip * side.powf(spec.beta)) / spec.tau + 1.0 + 1e-9).floor() as usize
        } else {
            levels
        };
        let per_cell_log: f64 = radii.iter().map(|&r| ((2 * r + 1) as f64).ln()).sum();
        let cells = (spec.k as u128)
            .checked_pow(d as u32)
            .filter(|&c| c <= MAX_CELLS)
            .map(|c| c as usize);
        let log_card = match cells {
            None => {
                // lower bound: every cell has at least min(levels, 2·jump + 1) choices
                let per = (levels.min(2 * jump + 1) as f64).ln() + per_cell_log;
                (spec.k as f64).powi(d as i32) * per
            }
            Some(cells) => {
                let mut log_w = vec![per_cell_log; levels];
                for _ in 1..cells {
                    log_w = (0..levels)
                        .map(|a| {
                            let (lo, hi) = (a.saturating_sub(jump), (a + jump).min(levels - 1));
                            per_cell_log + log_sum_exp(log_w[lo..=hi].iter().cloned())
                        })
                        .collect();
                }
                log_sum_exp(log_w.into_iter())
            }
        };
        Self {
            basis,
            levels,
            radii,
            jump,
            cells,
            log_card,
        }
    }
}

/// `log card` of the net `spec` describes, without building it.
pub fn log_cardinality(spec: &NetSpec) -> f64 {
    Shape::of(spec).log_card
}

impl Net {
    pub fn build(spec: NetSpec) -> Result<Self, SieveError> {
        spec.validate()?;
        let d = spec.d;
        let side = spec.side();
        let Shape {
            basis,
            levels,
            radii,
            jump,
            cells,
            log_card,
        } = Shape::of(&spec);
        let exceeded = |count| SieveError::NetBudgetExceeded {
            count,
            log_card,
            budget: spec.size_budget,
        };
        let cells = cells.ok_or_else(|| exceeded(None))?;
        if log_card > (spec.size_budget as f64).ln() + 1.0 {
            return Err(exceeded(None));
        }
        let window = |a: usize| (a.saturating_sub(jump), (a + jump).min(levels - 1));

        let per_cell = radii
            .iter()
            .try_fold(1u128, |acc, &r| acc.checked_mul(2 * r as u128 + 1));
        let per_cell = per_cell.ok_or_else(|| exceeded(None))?;
        let mut completions = vec![vec![0u128; levels]; cells];
        completions[cells - 1] = vec![per_cell; levels];
        for pos in (0..cells - 1).rev() {
            for a in 0..levels {
                let (lo, hi) = window(a);
                let tail = completions[pos + 1][lo..=hi]
                    .iter()
                    .try_fold(0u128, |acc, &w| acc.checked_add(w));
                completions[pos][a] = tail
                    .and_then(|t| t.checked_mul(per_cell))
                    .ok_or_else(|| exceeded(None))?;
            }
        }
        let card = completions[0]
            .iter()
            .try_fold(0u128, |acc, &w| acc.checked_add(w))
            .ok_or_else(|| exceeded(None))?;
        if card > spec.size_budget {
            return Err(exceeded(Some(card)));
        }

        let option_count = usize::try_from(per_cell).map_err(|_| exceeded(Some(card)))?;
        let options = (0..option_count)
            .map(|mut c| {
                let mut coefs = vec![0.0; radii.len()];
                for (j, &r) in radii.iter().enumerate().rev() {
                    let base = 2 * r + 1;
                    coefs[j] = ((c % base) as f64 - r as f64) * spec.tau;
                    c /= base;
                }
                coefs
            })
            .collect();
        let layout = Arc::new(Layout {
            d,
            k: spec.k,
            lo: spec.lo,
            side,
            tau: spec.tau,
            levels,
            basis,
            options,
        });
        Ok(Self {
            spec,
            layout,
            cells,
            jump,
            completions,
            card,
            log_card,
        })
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.d
    }

    pub fn degree(&self) -> u32 {
        self.spec.degree()
    }

    pub fn card(&self) -> u128 {
        self.card
    }

    pub fn log_card(&self) -> f64 {
        self.log_card
    }

    /// `log card · ε^ρ`, the smallest `A′` this net satisfies.
    pub fn implied_a_prime(&self, rho: f64) -> f64 {
        self.log_card * self.spec.epsilon.powf(rho)
    }

    pub fn cell_count(&self) -> usize {
        self.cells
    }

    pub fn level_count(&self) -> usize {
        self.layout.levels
    }

    /// Coefficient choices besides the constant, per cell.
    pub fn options_per_cell(&self) -> usize {
        self.layout.options.len()
    }

    /// Largest allowed change of level index between consecutive cells.
    pub fn jump(&self) -> usize {
        self.jump
    }

    pub fn basis_len(&self) -> usize {
        self.layout.basis.len()
    }

    /// Traversal position of the cell holding `x` and the scaled local
    /// coordinates of `x` in it.
    pub(crate) fn locate(&self, x: &[f64]) -> (usize, Vec<f64>) {
        let mut v = vec![0.0; self.spec.d];
        let pos = self.layout.locate(x, &mut v);
        (pos, v)
    }

    pub(crate) fn monomials(&self, v: &[f64], out: &mut [f64]) {
        self.layout.monomials(v, out)
    }

    /// Unclamped member value on a cell given its choice and monomials.
    pub(crate) fn raw_value(&self, a: usize, c: usize, mono: &[f64]) -> f64 {
        self.layout.raw_value(a, c, mono)
    }

    fn window(&self, prev: Option<usize>) -> (usize, usize) {
        match prev {
            None => (0, self.layout.levels - 1),
            Some(p) => (
                p.saturating_sub(self.jump),
                (p + self.jump).min(self.layout.levels - 1),
            ),
        }
    }

    pub(crate) fn member_from_choices(
        &self,
        choices: Vec<(usize, usize)>,
    ) -> Result<NetMember, SieveError> {
        if choices.len() != self.cells {
            return Err(SieveError::InvalidSpec(format!(
                "{} choices for {} cells",
                choices.len(),
                self.cells
            )));
        }
        let mut prev = None;
        for &(a, c) in &choices {
            let (lo, hi) = self.window(prev);
            if a < lo || a > hi || c >= self.options_per_cell() {
                return Err(SieveError::InvalidSpec(format!(
                    "choice ({a}, {c}) is not in the net"
                )));
            }
            prev = Some(a);
        }
        let mut member = NetMember {
            layout: self.layout.clone(),
            choices,
            index: 0,
        };
        member.index = self.rank(&member);
        Ok(member)
    }

    /// Canonical index of a member of this net.
    pub fn rank(&self, member: &NetMember) -> u128 {
        let per_cell = self.options_per_cell() as u128;
        let mut idx = 0u128;
        let mut prev = None;
        for (pos, &(a, c)) in member.choices.iter().enumerate() {
            let (lo, _) = self.window(prev);
            idx += self.completions[pos][lo..a].iter().sum::<u128>();
            idx += c as u128 * (self.completions[pos][a] / per_cell);
            prev = Some(a);
        }
        idx
    }

    /// The member with canonical index `index`.
    pub fn member(&self, index: u128) -> Result<NetMember, SieveError> {
        if index >= self.card {
            return Err(SieveError::IndexOutOfRange {
                index,
                card: self.card,
            });
        }
        let per_cell = self.options_per_cell() as u128;
        let mut rest = index;
        let mut prev = None;
        let mut choices = Vec::with_capacity(self.cells);
        for pos in 0..self.cells {
            let (lo, hi) = self.window(prev);
            let mut a = lo;
            while rest >= self.completions[pos][a] {
                rest -= self.completions[pos][a];
                a += 1;
                debug_assert!(a <= hi);
            }
            let tail = self.completions[pos][a] / per_cell;
            choices.push((a, (rest / tail) as usize));
            rest %= tail;
            prev = Some(a);
        }
        Ok(NetMember {
            layout: self.layout.clone(),
            choices,
            index,
        })
    }

    /// Members in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = NetMember> + '_ {
        (0..self.card).map(|i| self.member(i).expect("index below card"))
    }
}
