//! Maximum-likelihood fitting of inner models.
//!
//! Mixture weights are fitted by EM over a cached table of per-component
//! probabilities; PFP exponents and recency windows are grid-searched.
//!
//! The cached table is organised by *factor*: one draw of one node. A
//! new-node choice is a single factor. An internal edge is two draws, and
//! when unordered it has two paths (either endpoint drawn first), so its
//! probability is a sum of products of mixtures rather than one mixture.
//! Components with no support in a draw's choice set are dropped and the
//! rest renormalised, exactly as in the likelihood engine. The EM below
//! treats each draw as repeated draws of a component until one with
//! support is found, which keeps it a true EM for that likelihood.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::events::EdgeEvent;
use crate::events::EventKind;
use crate::graph::EvolvingGraph;
use crate::likelihood::{sequence_log_likelihood_with, LikelihoodReport, Scope, ScoreOptions, SpecPair};
use crate::models::probability::{choice_set_size, restricted_total};
use crate::models::{Component, EdgeMode, Exclusion, ModelSpec, Term, WeightSums};

/// Candidate component families; parameters come from the config grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Null,
    Degree,
    Triangle,
    Singleton,
    Doubleton,
    Recent,
    Pfp,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "null" | "random" => Family::Null,
            "degree" => Family::Degree,
            "triangle" => Family::Triangle,
            "singleton" => Family::Singleton,
            "doubleton" => Family::Doubleton,
            "recent" => Family::Recent,
            "pfp" => Family::Pfp,
            other => return Err(Error::Config(format!("unknown component family `{other}`"))),
        })
    }
}

impl Family {
    fn fixed(self) -> Option<Component> {
        match self {
            Family::Null => Some(Component::Null),
            Family::Degree => Some(Component::Degree),
            Family::Triangle => Some(Component::Triangle),
            Family::Singleton => Some(Component::Singleton),
            Family::Doubleton => Some(Component::Doubleton),
            Family::Recent | Family::Pfp => None,
        }
    }
}

/// The kind of choice a model is fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    NewNode,
    Internal,
}

impl Role {
    pub fn scope(self) -> Scope {
        match self {
            Role::NewNode => Scope::NewNode,
            Role::Internal => Scope::Internal,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.scope().as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub candidates: Vec<Family>,
    /// `(lo, hi, step)`, inclusive of both ends.
    pub delta_grid: (f64, f64, f64),
    pub windows: Vec<usize>,
    pub em_max_iters: usize,
    pub em_tol: f64,
    /// Terms fitted below this weight are dropped and the rest refitted.
    pub min_weight: f64,
    pub role: Role,
    pub edge_mode: EdgeMode,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            candidates: vec![
                Family::Null,
                Family::Degree,
                Family::Triangle,
                Family::Singleton,
                Family::Doubleton,
                Family::Recent,
                Family::Pfp,
            ],
            delta_grid: (-0.5, 0.5, 0.005),
            windows: vec![1, 2, 3, 5, 10],
            em_max_iters: 1000,
            em_tol: 1e-6,
            min_weight: 0.005,
            role: Role::NewNode,
            edge_mode: EdgeMode::Unordered,
        }
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::Config(format!("{key}: bad entry `{s}`"))))
        .collect()
}

impl FitConfig {
    pub fn with_candidates(mut self, candidates: &[Family]) -> Self {
        self.candidates = candidates.to_vec();
        self
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    /// Parses `key=value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = FitConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| -> Result<f64> {
                v.trim().parse().map_err(|_| Error::Config(format!("{key}: bad number `{v}`")))
            };
            match key {
                "candidates" => cfg.candidates = parse_list(key, value)?,
                "delta_grid" => {
                    let v: Vec<f64> = parse_list(key, value)?;
                    let [lo, hi, step] = v[..] else {
                        return Err(Error::Config("delta_grid: expected lo,hi,step".into()));
                    };
                    cfg.delta_grid = (lo, hi, step);
                }
                "windows" => cfg.windows = parse_list(key, value)?,
                "em_max_iters" => {
                    cfg.em_max_iters =
                        value.parse().map_err(|_| Error::Config(format!("{key}: bad integer `{value}`")))?
                }
                "em_tol" => cfg.em_tol = num(value)?,
                "min_weight" => cfg.min_weight = num(value)?,
                "role" => {
                    cfg.role = match value {
                        "new_node" => Role::NewNode,
                        "internal" => Role::Internal,
                        _ => return Err(Error::Config(format!("role: expected new_node or internal, got `{value}`"))),
                    }
                }
                "edge_mode" => {
                    cfg.edge_mode = match value {
                        "unordered" => EdgeMode::Unordered,
                        "ordered" => EdgeMode::Ordered,
                        _ => {
                            return Err(Error::Config(format!(
                                "edge_mode: expected unordered or ordered, got `{value}`"
                            )))
                        }
                    }
                }
                _ => return Err(Error::Config(format!("unknown key `{key}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi, step) = self.delta_grid;
        if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || lo > hi || step <= 0.0 {
            return Err(Error::Config(format!("delta_grid ({lo}, {hi}, {step}) is not a valid range")));
        }
        if self.em_tol.is_nan() || self.em_tol <= 0.0 {
            return Err(Error::Config("em_tol must be positive".into()));
        }
        if self.em_max_iters == 0 {
            return Err(Error::Config("em_max_iters must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.min_weight) {
            return Err(Error::Config("min_weight must lie in [0, 1)".into()));
        }
        if self.candidates.is_empty() {
            return Err(Error::Config("no candidate components".into()));
        }
        let distinct: BTreeSet<_> = self.candidates.iter().collect();
        if distinct.len() != self.candidates.len() {
            return Err(Error::Config("repeated candidate family".into()));
        }
        if self.candidates.contains(&Family::Recent) && (self.windows.is_empty() || self.windows.contains(&0)) {
            return Err(Error::Config("windows must be a non-empty list of positive integers".into()));
        }
        Ok(())
    }

    /// Grid values of the PFP exponent, rounded to suppress accumulation
    /// noise so that `0.05` prints as `0.05`.
    pub fn deltas(&self) -> Vec<f64> {
        let (lo, hi, step) = self.delta_grid;
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9 + 0.0).collect()
    }

    fn count_windows(&self) -> bool {
        self.candidates.contains(&Family::Recent) && self.windows.len() > 1
    }
}

#[derive(Debug, Clone, Copy)]
struct StepShape {
    first_factor: usize,
    paths: usize,
    factors_per_path: usize,
    index: usize,
}

/// Probability each candidate component gives the observed draw, for every
/// draw of every scored choice.
#[derive(Debug, Clone)]
pub struct StepProbs {
    columns: Vec<Component>,
    /// Row-major, one row per factor; NaN where the component has no support.
    q: Vec<f64>,
    /// Uniform probability over the factor's choice set.
    fallback: Vec<f64>,
    steps: Vec<StepShape>,
}

impl StepProbs {
    pub fn columns(&self) -> &[Component] {
        &self.columns
    }

    /// Number of scored choices.
    pub fn steps(&self) -> usize {
        self.steps.len()
    }

    pub fn factors(&self) -> usize {
        self.fallback.len()
    }

    /// Cached probability of `column` at `factor`; `None` without support.
    pub fn q(&self, factor: usize, column: usize) -> Option<f64> {
        let v = self.q[factor * self.columns.len() + column];
        (!v.is_nan()).then_some(v)
    }

    fn row(&self, factor: usize) -> &[f64] {
        let k = self.columns.len();
        &self.q[factor * k..(factor + 1) * k]
    }

    pub fn column_index(&self, c: &Component) -> Option<usize> {
        self.columns.iter().position(|x| x.key() == c.key())
    }

    /// Log-likelihood of the uniform model over the same choices.
    pub fn null_log_likelihood(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| {
                (0..s.paths)
                    .map(|p| {
                        let f0 = s.first_factor + p * s.factors_per_path;
                        (f0..f0 + s.factors_per_path).map(|f| self.fallback[f]).product::<f64>()
                    })
                    .sum::<f64>()
                    .ln()
            })
            .sum()
    }

    /// Probability of one factor under the mixture `betas` over `cols`,
    /// and the weight mass of the terms with support.
    #[inline]
    fn factor(&self, f: usize, cols: &[usize], betas: &[f64]) -> (f64, f64) {
        let row = self.row(f);
        let mut active = 0.0;
        let mut acc = 0.0;
        for (&c, &b) in cols.iter().zip(betas) {
            let q = row[c];
            if b > 0.0 && !q.is_nan() {
                active += b;
                acc += b * q;
            }
        }
        if active > 0.0 {
            (acc / active, active)
        } else {
            (self.fallback[f], 0.0)
        }
    }

    fn step_probability(&self, s: &StepShape, cols: &[usize], betas: &[f64], path_probs: &mut Vec<f64>) -> f64 {
        path_probs.clear();
        for p in 0..s.paths {
            let f0 = s.first_factor + p * s.factors_per_path;
            path_probs.push((f0..f0 + s.factors_per_path).map(|f| self.factor(f, cols, betas).0).product());
        }
        path_probs.iter().sum()
    }

    /// Log-likelihood of the mixture `betas` over columns `cols`. The first
    /// zero-probability step is returned as an error.
    pub fn log_likelihood(&self, cols: &[usize], betas: &[f64]) -> Result<f64> {
        let mut scratch = Vec::with_capacity(2);
        let mut ll = 0.0;
        for s in &self.steps {
            let p = self.step_probability(s, cols, betas, &mut scratch);
            if p.is_nan() || p <= 0.0 {
                return Err(Error::AllZeroSteps { index: s.index });
            }
            ll += p.ln();
        }
        Ok(ll)
    }

    /// Log-likelihood of `betas` together with the expected number of draws
    /// made by each component, written to `counts`. Draws rejected by an
    /// unsupported component count towards that component. Returns -inf if
    /// some step has probability zero.
    fn em_pass(&self, cols: &[usize], betas: &[f64], counts: &mut [f64]) -> f64 {
        counts.iter_mut().for_each(|c| *c = 0.0);
        // (probability, supported mass) of each factor of the current step
        let mut factors: Vec<(f64, f64)> = Vec::with_capacity(4);
        let mut ll = 0.0;
        for s in &self.steps {
            let first = s.first_factor;
            factors.clear();
            factors.extend((first..first + s.paths * s.factors_per_path).map(|f| self.factor(f, cols, betas)));
            let path = |p: usize| factors[p * s.factors_per_path..(p + 1) * s.factors_per_path].iter().map(|x| x.0);
            let total: f64 = (0..s.paths).map(|p| path(p).product::<f64>()).sum();
            if total.is_nan() || total <= 0.0 {
                return f64::NEG_INFINITY;
            }
            ll += total.ln();
            for p in 0..s.paths {
                let r = path(p).product::<f64>() / total;
                if r == 0.0 {
                    continue;
                }
                let span = p * s.factors_per_path..(p + 1) * s.factors_per_path;
                for (i, &(pf, active)) in span.clone().zip(&factors[span]) {
                    if active == 0.0 {
                        continue;
                    }
                    let row = self.row(first + i);
                    for (j, (&c, &b)) in cols.iter().zip(betas).enumerate() {
                        let q = row[c];
                        counts[j] += if q.is_nan() { r * b / active } else { r * b * q / (active * pf) };
                    }
                }
            }
        }
        ll
    }

    /// True when two of the selected columns agree on every factor.
    pub fn has_identical_columns(&self, cols: &[usize]) -> bool {
        let same = |a: f64, b: f64| a == b || (a.is_nan() && b.is_nan());
        cols.iter().enumerate().any(|(i, &a)| {
            cols[i + 1..].iter().any(|&b| (0..self.factors()).all(|f| same(self.row(f)[a], self.row(f)[b])))
        })
    }
}

fn push_factor(
    q: &mut Vec<f64>,
    fallback: &mut Vec<f64>,
    columns: &[(Component, Option<usize>)],
    sums: &WeightSums,
    g: &EvolvingGraph,
    node: crate::graph::NodeId,
    excl: &Exclusion<'_>,
) -> Result<()> {
    fallback.push(1.0 / choice_set_size(g, excl)? as f64);
    for (c, slot) in columns {
        let v = match restricted_total(c, *slot, sums, g, excl) {
            Some(z) => sums.weight_at(c, *slot, g, node) / z,
            None => f64::NAN,
        };
        q.push(v);
    }
    Ok(())
}

/// Replays `events` once from `g0` and caches, for every choice in `scope`,
/// the probability each pure component in `columns` gives the observed draw.
pub fn per_step_component_probs(
    columns: &[Component],
    g0: &EvolvingGraph,
    events: &[EdgeEvent],
    scope: Scope,
    mode: EdgeMode,
) -> Result<StepProbs> {
    let mut g = g0.clone();
    let mut sums = WeightSums::default();
    let resolved: Vec<(Component, Option<usize>)> = columns.iter().map(|c| (*c, sums.slot(c, &g))).collect();
    let mut q = Vec::new();
    let mut fallback = Vec::new();
    let mut steps = Vec::new();
    for ev in events {
        let idx = ev.original_index;
        ev.validate(&g)?;
        let wrap = |e: Error| Error::malformed(idx, e);
        match &ev.kind {
            EventKind::NewNode { targets } if matches!(scope, Scope::All | Scope::NewNode) => {
                for (j, &t) in targets.iter().enumerate() {
                    steps.push(StepShape { first_factor: fallback.len(), paths: 1, factors_per_path: 1, index: idx });
                    push_factor(&mut q, &mut fallback, &resolved, &sums, &g, t, &Exclusion::Nodes(&targets[..j]))
                        .map_err(wrap)?;
                }
            }
            &EventKind::InternalEdge { a, b } if matches!(scope, Scope::All | Scope::Internal) => {
                let saturated = g.saturated_nodes();
                let first = Exclusion::Nodes(&saturated);
                let orders: &[(_, _)] = match mode {
                    EdgeMode::Ordered => &[(a, b)],
                    EdgeMode::Unordered => &[(a, b), (b, a)],
                };
                steps.push(StepShape {
                    first_factor: fallback.len(),
                    paths: orders.len(),
                    factors_per_path: 2,
                    index: idx,
                });
                for &(x, y) in orders {
                    push_factor(&mut q, &mut fallback, &resolved, &sums, &g, x, &first).map_err(wrap)?;
                    push_factor(&mut q, &mut fallback, &resolved, &sums, &g, y, &Exclusion::Closed(x)).map_err(wrap)?;
                }
            }
            _ => {}
        }
        ev.apply_with(&mut g, |g, d| sums.on_edge(g, d))?;
    }
    Ok(StepProbs { columns: columns.to_vec(), q, fallback, steps })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightFit {
    pub betas: Vec<f64>,
    /// Log-likelihood before the first update and after each accepted one.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Two columns are identical, so the optimum is not unique.
    pub degenerate: bool,
}

impl WeightFit {
    pub fn log_likelihood(&self) -> f64 {
        *self.trace.last().expect("trace is never empty")
    }
}

/// EM for the weights of a mixture over `cols`, starting from uniform.
///
/// Stops when no weight moves by more than `tol`, after `max_iters`
/// updates, or when an update fails to raise the log-likelihood (which can
/// only be rounding); in the last case the update is discarded.
pub fn fit_weights(probs: &StepProbs, cols: &[usize], max_iters: usize, tol: f64) -> Result<WeightFit> {
    let k = cols.len().max(1);
    fit_weights_from(probs, cols, &vec![1.0 / k as f64; cols.len()], max_iters, tol)
}

/// As [`fit_weights`], starting from `init` (normalized here).
pub fn fit_weights_from(
    probs: &StepProbs,
    cols: &[usize],
    init: &[f64],
    max_iters: usize,
    tol: f64,
) -> Result<WeightFit> {
    if cols.is_empty() {
        return Err(Error::Config("no components to fit".into()));
    }
    if init.len() != cols.len() || init.iter().any(|b| b.is_nan() || *b < 0.0) {
        return Err(Error::Config("initial weights must be nonnegative, one per component".into()));
    }
    let total: f64 = init.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Config("initial weights sum to zero".into()));
    }
    let mut betas: Vec<f64> = init.iter().map(|b| b / total).collect();
    // reports the first zero-probability step, if any
    probs.log_likelihood(cols, &betas)?;
    let degenerate = probs.has_identical_columns(cols);
    let mut em = Em { probs, cols, counts: vec![0.0; cols.len()], ll: 0.0 };
    em.ll = probs.em_pass(cols, &betas, &mut em.counts);
    let mut trace = vec![em.ll];
    let mut converged = false;
    // Plain EM steps, every second one followed by a squared extrapolation
    // that is kept only if it does not lower the likelihood.
    let mut anchor: Option<(Vec<f64>, Vec<f64>)> = None;
    while trace.len() <= max_iters {
        let Some(next) = em.step() else {
            converged = true;
            break;
        };
        let change = max_change(&next.0, &betas);
        let previous = std::mem::replace(&mut betas, next.0);
        em.accept(next.1, next.2);
        trace.push(em.ll);
        if change < tol {
            converged = true;
            break;
        }
        match anchor.take() {
            None => anchor = Some((previous, betas.clone())),
            Some((b0, b1)) => {
                if let Some(jump) = squarem(&b0, &b1, &betas) {
                    let mut counts = vec![0.0; cols.len()];
                    let ll = probs.em_pass(cols, &jump, &mut counts);
                    if ll >= em.ll && trace.len() <= max_iters {
                        let change = max_change(&jump, &betas);
                        betas = jump;
                        em.accept(counts, ll);
                        trace.push(ll);
                        if change < tol {
                            converged = true;
                            break;
                        }
                    }
                }
            }
        }
    }
    let iterations = trace.len() - 1;
    Ok(WeightFit { betas, trace, iterations, converged, degenerate })
}

/// EM state: the expected counts and log-likelihood of the current weights.
struct Em<'a> {
    probs: &'a StepProbs,
    cols: &'a [usize],
    counts: Vec<f64>,
    ll: f64,
}

impl Em<'_> {
    /// The EM update of the current weights with its counts and
    /// log-likelihood, or `None` if it would not raise the likelihood.
    fn step(&self) -> Option<(Vec<f64>, Vec<f64>, f64)> {
        let norm: f64 = self.counts.iter().sum();
        if norm.is_nan() || norm <= 0.0 {
            return None;
        }
        let next: Vec<f64> = self.counts.iter().map(|c| c / norm).collect();
        let mut counts = vec![0.0; self.cols.len()];
        let ll = self.probs.em_pass(self.cols, &next, &mut counts);
        (ll >= self.ll).then_some((next, counts, ll))
    }

    fn accept(&mut self, counts: Vec<f64>, ll: f64) {
        self.counts = counts;
        self.ll = ll;
    }
}

fn max_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Squared extrapolation from three successive EM iterates, projected back
/// onto the simplex. `None` when it would not move past `b2`.
fn squarem(b0: &[f64], b1: &[f64], b2: &[f64]) -> Option<Vec<f64>> {
    let r: Vec<f64> = b1.iter().zip(b0).map(|(x, y)| x - y).collect();
    let v: Vec<f64> = b2.iter().zip(b1).zip(&r).map(|((x, y), r)| x - y - r).collect();
    let (rn, vn) = (r.iter().map(|x| x * x).sum::<f64>().sqrt(), v.iter().map(|x| x * x).sum::<f64>().sqrt());
    if vn == 0.0 || rn == 0.0 {
        return None;
    }
    let alpha = -rn / vn;
    if alpha >= -1.0 {
        return None;
    }
    let jump: Vec<f64> =
        b0.iter().zip(&r).zip(&v).map(|((b, r), v)| (b - 2.0 * alpha * r + alpha * alpha * v).max(0.0)).collect();
    let total: f64 = jump.iter().sum();
    (total > 0.0 && total.is_finite()).then(|| jump.iter().map(|x| x / total).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub report: LikelihoodReport,
    /// EM trace of the selected model's final fit.
    pub trace: Vec<f64>,
    pub degenerate: bool,
    /// Grid points evaluated.
    pub evaluated: usize,
}

/// A fitted candidate: columns, weights and log-likelihood.
#[derive(Debug, Clone)]
struct Candidate {
    components: Vec<Component>,
    fit: WeightFit,
}

impl Candidate {
    fn parameters(&self, count_windows: bool) -> usize {
        let nonlinear = self
            .components
            .iter()
            .filter(|c| match c {
                Component::Pfp(_) => true,
                Component::Recent(_) => count_windows,
                _ => false,
            })
            .count();
        self.components.len() - 1 + nonlinear
    }

    fn aic(&self, count_windows: bool) -> f64 {
        2.0 * self.parameters(count_windows) as f64 - 2.0 * self.fit.log_likelihood()
    }
}

/// Log-likelihoods closer than this per choice count as tied.
const TIE_PER_CHOICE: f64 = 1e-9;

fn better(a: &Candidate, b: &Candidate, t: usize, count_windows: bool) -> bool {
    let tie = TIE_PER_CHOICE * t.max(1) as f64;
    let (la, lb) = (a.fit.log_likelihood(), b.fit.log_likelihood());
    if (la - lb).abs() > tie {
        return la > lb;
    }
    if a.components.len() != b.components.len() {
        return a.components.len() < b.components.len();
    }
    a.aic(count_windows) < b.aic(count_windows)
}

/// Fits the weights of `components`, starting from `init` or uniform.
fn fit_columns(
    probs: &StepProbs,
    components: &[Component],
    init: Option<&[f64]>,
    cfg: &FitConfig,
) -> Result<Candidate> {
    let cols: Vec<usize> =
        components.iter().map(|c| probs.column_index(c).expect("column cached for every grid point")).collect();
    let fit = match init {
        Some(b) if b.iter().sum::<f64>() > 0.0 => fit_weights_from(probs, &cols, b, cfg.em_max_iters, cfg.em_tol)?,
        _ => fit_weights(probs, &cols, cfg.em_max_iters, cfg.em_tol)?,
    };
    Ok(Candidate { components: components.to_vec(), fit })
}

/// `c` without term `i`, with the remaining weights as a warm start.
fn without(c: &Candidate, i: usize) -> (Vec<Component>, Vec<f64>) {
    let mut comps = c.components.clone();
    let mut betas = c.fit.betas.clone();
    comps.remove(i);
    betas.remove(i);
    (comps, betas)
}

/// Fits, prunes terms below `min_weight`, then drops any term whose removal
/// leaves the log-likelihood unchanged.
fn fit_and_prune(probs: &StepProbs, components: &[Component], cfg: &FitConfig) -> Result<Candidate> {
    // a component with no support anywhere leaves the likelihood unchanged
    let supported: Vec<Component> = components
        .iter()
        .filter(|c| {
            let col = probs.column_index(c).expect("column cached for every grid point");
            (0..probs.factors()).any(|f| probs.q(f, col).is_some())
        })
        .copied()
        .collect();
    let components = if supported.is_empty() { &components[..1] } else { &supported[..] };
    let mut best = fit_columns(probs, components, None, cfg)?;
    loop {
        let (kept, kept_betas): (Vec<Component>, Vec<f64>) = best
            .components
            .iter()
            .zip(&best.fit.betas)
            .filter(|(_, &b)| b >= cfg.min_weight)
            .map(|(c, b)| (*c, *b))
            .unzip();
        if kept.is_empty() || kept.len() == best.components.len() {
            break;
        }
        // a pruned model can hit a zero-probability step the full one avoided
        match fit_columns(probs, &kept, Some(&kept_betas), cfg) {
            Ok(refit) => best = refit,
            Err(_) => break,
        }
    }
    let tie = TIE_PER_CHOICE * probs.steps().max(1) as f64;
    // lightest terms first; start over after each removal
    let mut tried = 0;
    while best.components.len() > 1 && tried < best.components.len() {
        let mut order: Vec<usize> = (0..best.components.len()).collect();
        order.sort_by(|&a, &b| best.fit.betas[a].total_cmp(&best.fit.betas[b]));
        let (fewer, init) = without(&best, order[tried]);
        match fit_columns(probs, &fewer, Some(&init), cfg) {
            Ok(c) if c.fit.log_likelihood() >= best.fit.log_likelihood() - tie => {
                best = c;
                tried = 0;
            }
            _ => tried += 1,
        }
    }
    Ok(best)
}

/// Number of PFP exponents cached per replay of the stream.
const DELTA_CHUNK: usize = 32;

/// Grid search over the PFP exponent and recency window, with the mixture
/// weights fitted by EM at every grid point. Returns the spec with the
/// highest per-choice likelihood ratio for the configured role.
pub fn fit_model(g0: &EvolvingGraph, events: &[EdgeEvent], cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    let scope = cfg.role.scope();
    let count_windows = cfg.count_windows();
    let fixed: Vec<Component> = cfg.candidates.iter().filter_map(|f| f.fixed()).collect();
    let windows: Vec<Option<usize>> = if cfg.candidates.contains(&Family::Recent) {
        cfg.windows.iter().copied().map(Some).collect()
    } else {
        vec![None]
    };
    let deltas: Vec<Option<f64>> =
        if cfg.candidates.contains(&Family::Pfp) { cfg.deltas().into_iter().map(Some).collect() } else { vec![None] };
    let mut base = fixed.clone();
    base.extend(windows.iter().flatten().map(|&w| Component::Recent(w)));

    let mut best: Option<Candidate> = None;
    let mut evaluated = 0;
    let mut last_error = None;
    let mut t = 0;
    for chunk in deltas.chunks(DELTA_CHUNK) {
        let mut columns = base.clone();
        columns.extend(chunk.iter().flatten().map(|&d| Component::Pfp(d)));
        let probs = per_step_component_probs(&columns, g0, events, scope, cfg.edge_mode)?;
        t = probs.steps();
        if t == 0 {
            break;
        }
        let grid: Vec<Vec<Component>> = chunk
            .iter()
            .flat_map(|d| windows.iter().map(move |w| (*d, *w)))
            .map(|(d, w)| {
                let mut comps = fixed.clone();
                comps.extend(w.map(Component::Recent));
                comps.extend(d.map(Component::Pfp));
                comps
            })
            .collect();
        evaluated += grid.len();
        let fits: Vec<Result<Candidate>> = grid.par_iter().map(|comps| fit_and_prune(&probs, comps, cfg)).collect();
        for fit in fits {
            match fit {
                Ok(c) => {
                    if best.as_ref().is_none_or(|b| better(&c, b, t, count_windows)) {
                        best = Some(c);
                    }
                }
                Err(e) => last_error = Some(e),
            }
        }
        log::debug!("fitted {evaluated}/{} grid points", deltas.len() * windows.len());
    }

    let opts = ScoreOptions { scope, edge_mode: cfg.edge_mode, count_windows };
    let (spec, trace, degenerate) = match best {
        Some(c) => {
            let terms = c.components.iter().zip(&c.fit.betas).map(|(&component, &beta)| Term { beta, component });
            (ModelSpec::new(terms.collect())?, c.fit.trace, c.fit.degenerate)
        }
        None if t == 0 => (ModelSpec::null(), vec![0.0], false),
        None => return Err(last_error.unwrap_or(Error::EmptyStream)),
    };
    let pair = match cfg.role {
        Role::NewNode => SpecPair::new(spec.clone(), ModelSpec::null()),
        Role::Internal => SpecPair::new(ModelSpec::null(), spec.clone()),
    };
    let report = sequence_log_likelihood_with(&pair, g0, events, opts)?;
    Ok(FitResult { spec, report, trace, degenerate, evaluated })
}

/// Separate fits for the two roles and the joint report of the pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFit {
    pub new_node: FitResult,
    pub internal: FitResult,
    pub specs: SpecPair,
    pub report: LikelihoodReport,
}

pub fn fit_pair(g0: &EvolvingGraph, events: &[EdgeEvent], cfg: &FitConfig) -> Result<PairFit> {
    let new_node = fit_model(g0, events, &cfg.clone().with_role(Role::NewNode))?;
    let internal = fit_model(g0, events, &cfg.clone().with_role(Role::Internal))?;
    let specs = SpecPair::new(new_node.spec.clone(), internal.spec.clone());
    let opts = ScoreOptions { scope: Scope::All, edge_mode: cfg.edge_mode, count_windows: cfg.count_windows() };
    let report = sequence_log_likelihood_with(&specs, g0, events, opts)?;
    Ok(PairFit { new_node, internal, specs, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::build_graph;
    use crate::generator::{grow, CountDistribution, OuterModel};
    use crate::graph::NodeId;

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    fn star_stream() -> Vec<EdgeEvent> {
        vec![
            EdgeEvent::new_node(vec![n(0)], 0),
            EdgeEvent::new_node(vec![n(0)], 1),
            EdgeEvent::new_node(vec![n(0)], 2),
            EdgeEvent::new_node(vec![n(3)], 3),
        ]
    }

    #[test]
    fn config_parsing() {
        let cfg = FitConfig::parse(
            "# comment\ncandidates = degree, pfp\ndelta_grid=-0.1,0.1,0.05\nwindows=2\nem_tol=1e-8\nrole=internal\n",
        )
        .unwrap();
        assert_eq!(cfg.candidates, vec![Family::Degree, Family::Pfp]);
        assert_eq!(cfg.deltas(), vec![-0.1, -0.05, 0.0, 0.05, 0.1]);
        assert_eq!(cfg.role, Role::Internal);
        assert!(FitConfig::parse("em_tol=0").is_err());
        assert!(FitConfig::parse("delta_grid=1,0,0.1").is_err());
        assert!(FitConfig::parse("colour=blue").is_err());
        assert!(FitConfig::parse("candidates=degree,degree").is_err());
        assert_eq!(FitConfig::default().deltas().len(), 201);
    }

    #[test]
    fn cached_probabilities() {
        let cols = [Component::Null, Component::Degree, Component::Recent(1), Component::Singleton];
        let probs = per_step_component_probs(
            &cols,
            &EvolvingGraph::with_root(),
            &star_stream(),
            Scope::All,
            EdgeMode::Unordered,
        )
        .unwrap();
        assert_eq!(probs.steps(), 4);
        // second arrival: root has degree 1, so degree and null both give 1/2
        assert_eq!(probs.q(1, 0), Some(0.5));
        assert_eq!(probs.q(1, 1), Some(0.5));
        // the root was the previous selection
        assert_eq!(probs.q(1, 2), Some(1.0));
        // leaf of a three-leaf star: degree 1/6
        assert_eq!(probs.q(3, 1), Some(1.0 / 6.0));
        assert_eq!(probs.q(3, 3), Some(1.0 / 3.0));
        // a lone root has no degree-1 nodes
        assert_eq!(probs.q(0, 3), None);
    }

    #[test]
    fn single_component_converges_immediately() {
        let probs = per_step_component_probs(
            &[Component::Degree],
            &build_graph(&star_stream()[..1]).unwrap(),
            &star_stream()[1..],
            Scope::All,
            EdgeMode::Unordered,
        )
        .unwrap();
        let fit = fit_weights(&probs, &[0], 100, 1e-9).unwrap();
        assert_eq!(fit.betas, vec![1.0]);
        assert_eq!(fit.iterations, 1);
    }

    #[test]
    fn warm_and_cold_starts_agree() {
        let outer = OuterModel::empirical(CountDistribution::point(1), CountDistribution::point(0)).unwrap();
        let truth: ModelSpec = "0.5*degree + 0.5*null".parse().unwrap();
        let events = grow(&EvolvingGraph::with_root(), &outer, &SpecPair::same(truth), 2000, 3).unwrap().events;
        let cols = [Component::Degree, Component::Null, Component::Singleton];
        let probs =
            per_step_component_probs(&cols, &EvolvingGraph::with_root(), &events, Scope::All, EdgeMode::Unordered)
                .unwrap();
        let cold = fit_weights(&probs, &[0, 1, 2], 5000, 1e-10).unwrap();
        let warm = fit_weights_from(&probs, &[0, 1, 2], &[0.2, 0.5, 0.3], 5000, 1e-10).unwrap();
        assert!(cold.converged && warm.converged);
        assert!((cold.log_likelihood() - warm.log_likelihood()).abs() < 1e-6);
        assert!(max_change(&cold.betas, &warm.betas) < 1e-4, "{:?} {:?}", cold.betas, warm.betas);
        for t in [&cold.trace, &warm.trace] {
            assert!(t.windows(2).all(|w| w[1] >= w[0]));
        }
        assert!(fit_weights_from(&probs, &[0, 1], &[0.0, 0.0], 10, 1e-6).is_err());
    }

    #[test]
    fn identical_columns_are_reported() {
        let cols = [Component::Degree, Component::Pfp(0.0)];
        let g0 = build_graph(&star_stream()[..1]).unwrap();
        let probs = per_step_component_probs(&cols, &g0, &star_stream()[1..], Scope::All, EdgeMode::Unordered).unwrap();
        let fit = fit_weights(&probs, &[0, 1], 100, 1e-9).unwrap();
        assert!(fit.degenerate);
        assert!(fit.converged);
        assert!((fit.betas.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_zero_step_is_reported() {
        // the second arrival targets node 1 while recent(1) holds only the root
        let events = vec![
            EdgeEvent::new_node(vec![n(0)], 0),
            EdgeEvent::new_node(vec![n(1)], 1),
            EdgeEvent::new_node(vec![n(0)], 2),
        ];
        let g0 = EvolvingGraph::with_root();
        let probs =
            per_step_component_probs(&[Component::Recent(1)], &g0, &events, Scope::All, EdgeMode::Unordered).unwrap();
        let r = fit_weights(&probs, &[0], 10, 1e-6);
        assert!(matches!(r, Err(Error::AllZeroSteps { index: 1 })), "{r:?}");
    }

    #[test]
    fn matrix_likelihood_matches_engine() {
        let mut events = star_stream();
        events.push(EdgeEvent::internal(n(1), n(2), 4));
        events.push(EdgeEvent::new_node(vec![n(1), n(4)], 5));
        events.push(EdgeEvent::internal(n(3), n(5), 6));
        let cols = [Component::Degree, Component::Singleton, Component::Pfp(-0.2)];
        let g0 = EvolvingGraph::with_root();
        for mode in [EdgeMode::Unordered, EdgeMode::Ordered] {
            let probs = per_step_component_probs(&cols, &g0, &events, Scope::All, mode).unwrap();
            let betas = [0.5, 0.3, 0.2];
            let spec = ModelSpec::mixture(betas.iter().copied().zip(cols)).unwrap();
            let opts = ScoreOptions { edge_mode: mode, ..Default::default() };
            let r = sequence_log_likelihood_with(&SpecPair::same(spec), &g0, &events, opts).unwrap();
            let ll = probs.log_likelihood(&[0, 1, 2], &betas).unwrap();
            assert!((ll - r.log_likelihood).abs() < 1e-12, "{ll} vs {}", r.log_likelihood);
            assert!((probs.null_log_likelihood() - r.null_log_likelihood).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_on_empty_role_is_null() {
        let cfg = FitConfig::default().with_candidates(&[Family::Degree]).with_role(Role::Internal);
        let fit = fit_model(&EvolvingGraph::with_root(), &star_stream(), &cfg).unwrap();
        assert_eq!(fit.spec, ModelSpec::null());
        assert_eq!(fit.report.t, 0);
    }
}
