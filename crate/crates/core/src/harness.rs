//! Layout generation and filtering, simulated observers, and evaluation metrics.
//!
//! Evaluation cells are independent: each `(layout, planner t, observed k)`
//! cell draws its samples from its own RNG stream, derived by hashing the run
//! seed with the cell key, so results do not depend on scheduling.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{Bounds, Layout, Plan, Point2};
use crate::lbest::{lbest_with_matrix, approx_from_lbest, NearestNeighborBound, DEFAULT_L};
use crate::observer::{prefix_mask, Rationality, RemainderTable};
use crate::planner::{choose_approx, choose_exact, Mode, PlannerSpec};

/// Where the start point of generated layouts comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StartPlacement {
    /// Drawn from the same distribution as the targets.
    Uniform,
    Fixed(Point2),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub count: usize,
    pub targets_min: usize,
    pub targets_max: usize,
    pub bounds: Bounds,
    pub min_separation: f64,
    pub start: StartPlacement,
    pub seed: u64,
    /// Rejected draws allowed per point before giving up.
    pub max_attempts: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            count: 270,
            targets_min: 5,
            targets_max: 6,
            bounds: Bounds::unit(),
            min_separation: 0.1,
            start: StartPlacement::Uniform,
            seed: 0,
            max_attempts: 10_000,
        }
    }
}

/// Side length of the square domain used by the evaluation presets. At this
/// scale a `beta = 1` observer is sharp enough that the `l = 2` denominator
/// tracks the exact objective closely.
pub const REFERENCE_DOMAIN_SIZE: f64 = 75.0;

impl GeneratorConfig {
    /// Defaults on the square `[0, side]²`, with the separation scaled to match.
    pub fn square(side: f64) -> Result<Self> {
        Ok(Self {
            bounds: Bounds::square(side)?,
            min_separation: 0.1 * side,
            ..Default::default()
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.targets_min < 2 {
            return Err(Error::InvalidArgument("targets_min must be at least 2".into()));
        }
        if self.targets_max < self.targets_min {
            return Err(Error::InvalidArgument("targets_max is below targets_min".into()));
        }
        if !(self.min_separation.is_finite() && self.min_separation > 0.0) {
            return Err(Error::InvalidArgument("min_separation must be positive".into()));
        }
        if self.max_attempts == 0 {
            return Err(Error::InvalidArgument("max_attempts must be positive".into()));
        }
        if let StartPlacement::Fixed(p) = self.start {
            if !self.bounds.contains(&p) {
                return Err(Error::InvalidArgument("fixed start lies outside the bounds".into()));
            }
        }
        Ok(())
    }
}

fn layout_id(index: usize, count: usize) -> String {
    let width = count.to_string().len().max(3);
    format!("L{:0width$}", index + 1)
}

/// Random layouts with targets drawn uniformly under a minimum-separation constraint.
pub fn generate_layouts(config: &GeneratorConfig) -> Result<Vec<Layout>> {
    config.validate()?;
    (0..config.count)
        .map(|i| generate_one(config, i))
        .collect()
}

fn generate_one(config: &GeneratorConfig, index: usize) -> Result<Layout> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);
    let b = config.bounds;
    let n = rng.random_range(config.targets_min..=config.targets_max);

    let mut placed: Vec<Point2> = Vec::with_capacity(n + 1);
    if let StartPlacement::Fixed(p) = config.start {
        placed.push(p);
    }
    let wanted = n + 1;
    while placed.len() < wanted {
        let mut attempts = 0;
        let p = loop {
            if attempts == config.max_attempts {
                return Err(Error::GenerationStalled {
                    layout: index,
                    attempts,
                });
            }
            attempts += 1;
            let p = Point2::new(
                b.min.x + rng.random::<f64>() * b.width(),
                b.min.y + rng.random::<f64>() * b.height(),
            );
            if placed.iter().all(|q| q.distance(&p) >= config.min_separation) {
                break p;
            }
        };
        placed.push(p);
    }
    let start = placed[0];
    Layout::with_bounds(
        layout_id(index, config.count),
        start,
        placed[1..].to_vec(),
        &b,
    )
}

/// Plans chosen by exact `t`-predictable planners, one per entry of `planner_ts`.
fn exact_plans(layout: &Layout, planner_ts: &[usize], rationality: Rationality) -> Result<Vec<Plan>> {
    let table = RemainderTable::new(layout, rationality)?;
    planner_ts
        .iter()
        .map(|&t| choose_exact(&table, t).map(|c| c.plan))
        .collect()
}

/// Keeps layouts on which every planner picks a different plan.
pub fn filter_distinguishable(
    layouts: &[Layout],
    planner_ts: &[usize],
    rationality: Rationality,
) -> Result<Vec<Layout>> {
    if planner_ts.len() < 2 {
        return Err(Error::InvalidArgument(
            "distinguishability needs at least two planners".into(),
        ));
    }
    let keep = layouts
        .par_iter()
        .map(|l| {
            let plans = exact_plans(l, planner_ts, rationality)?;
            Ok((0..plans.len()).all(|i| (i + 1..plans.len()).all(|j| plans[i] != plans[j])))
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(select(layouts, &keep))
}

fn select(layouts: &[Layout], keep: &[bool]) -> Vec<Layout> {
    layouts
        .iter()
        .zip(keep)
        .filter(|(_, &k)| k)
        .map(|(l, _)| l.clone())
        .collect()
}

/// True if some leg of `plan` passes within `radius` of a target it has not visited yet.
pub fn has_confound(layout: &Layout, plan: &Plan, radius: f64) -> bool {
    let order = plan.order();
    let mut from = layout.start();
    for (i, &j) in order.iter().enumerate() {
        let to = layout.targets()[j];
        if order[i + 1..]
            .iter()
            .any(|&u| layout.targets()[u].distance_to_segment(&from, &to) < radius)
        {
            return true;
        }
        from = to;
    }
    false
}

/// Drops layouts where any planner's path grazes a target without capturing it.
pub fn filter_no_confounds(
    layouts: &[Layout],
    capture_radius: f64,
    planner_ts: &[usize],
    rationality: Rationality,
) -> Result<Vec<Layout>> {
    if !(capture_radius.is_finite() && capture_radius > 0.0) {
        return Err(Error::InvalidArgument("capture radius must be positive".into()));
    }
    let keep = layouts
        .par_iter()
        .map(|l| {
            let plans = exact_plans(l, planner_ts, rationality)?;
            Ok(!plans.iter().any(|p| has_confound(l, p, capture_radius)))
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(select(layouts, &keep))
}

/// How the gain from 1- to 2-predictability is scored when ranking layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainStatistic {
    /// `[P1(plan1) - P1(plan0)] + [P2(plan2) - P2(plan0)]`
    #[default]
    Sum,
    /// `[P2(plan2) - P2(plan0)] - [P1(plan1) - P1(plan0)]`
    Difference,
}

impl FromStr for GainStatistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Self::Sum),
            "difference" | "diff" => Ok(Self::Difference),
            other => Err(Error::InvalidArgument(format!("unknown gain statistic {other:?}"))),
        }
    }
}

impl fmt::Display for GainStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sum => "sum",
            Self::Difference => "difference",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedLayout {
    pub layout: Layout,
    pub gain: f64,
}

pub fn info_gain(layout: &Layout, rationality: Rationality, statistic: GainStatistic) -> Result<f64> {
    let table = RemainderTable::new(layout, rationality)?;
    let plans = [0, 1, 2]
        .iter()
        .map(|&t| choose_exact(&table, t).map(|c| c.plan))
        .collect::<Result<Vec<_>>>()?;
    let gain1 = table.t_predictability(&plans[1], 1)? - table.t_predictability(&plans[0], 1)?;
    let gain2 = table.t_predictability(&plans[2], 2)? - table.t_predictability(&plans[0], 2)?;
    Ok(match statistic {
        GainStatistic::Sum => gain1 + gain2,
        GainStatistic::Difference => gain2 - gain1,
    })
}

/// Stable sort by descending gain.
pub fn rank_by_info_gain(
    layouts: &[Layout],
    rationality: Rationality,
    statistic: GainStatistic,
) -> Result<Vec<RankedLayout>> {
    let gains = layouts
        .par_iter()
        .map(|l| info_gain(l, rationality, statistic))
        .collect::<Result<Vec<f64>>>()?;
    let mut ranked: Vec<RankedLayout> = layouts
        .iter()
        .zip(gains)
        .map(|(l, gain)| RankedLayout {
            layout: l.clone(),
            gain,
        })
        .collect();
    ranked.sort_by(|a, b| b.gain.total_cmp(&a.gain));
    Ok(ranked)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub planner_ts: Vec<usize>,
    pub rationality: Rationality,
    pub capture_radius: f64,
    pub statistic: GainStatistic,
    /// Keep only this many layouts after ranking.
    pub top: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            planner_ts: vec![0, 1, 2],
            rationality: Rationality::default(),
            capture_radius: 0.05,
            statistic: GainStatistic::Sum,
            top: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    pub generated: usize,
    pub distinguishable: usize,
    pub no_confounds: usize,
    pub selected: usize,
    /// Selected layouts, highest gain first.
    pub layouts: Vec<RankedLayout>,
}

/// Distinguishability filter, confound filter, then ranking by gain.
pub fn run_pipeline(layouts: &[Layout], config: &PipelineConfig) -> Result<PipelineReport> {
    let distinct = filter_distinguishable(layouts, &config.planner_ts, config.rationality)?;
    let clean = filter_no_confounds(
        &distinct,
        config.capture_radius,
        &config.planner_ts,
        config.rationality,
    )?;
    let mut ranked = rank_by_info_gain(&clean, config.rationality, config.statistic)?;
    if let Some(top) = config.top {
        ranked.truncate(top);
    }
    Ok(PipelineReport {
        generated: layouts.len(),
        distinguishable: distinct.len(),
        no_confounds: clean.len(),
        selected: ranked.len(),
        layouts: ranked,
    })
}

/// Draws one remainder from the observer's posterior after `prefix`.
///
/// Targets are drawn one at a time from the exact conditional of the next
/// target, which yields the same joint distribution as enumerating remainders.
pub fn sample_observer<R: Rng + ?Sized>(
    layout: &Layout,
    prefix: &[usize],
    rationality: Rationality,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let table = RemainderTable::new(layout, rationality)?;
    sample_from_table(&table, prefix, rng)
}

pub fn sample_from_table<R: Rng + ?Sized>(
    table: &RemainderTable,
    prefix: &[usize],
    rng: &mut R,
) -> Result<Vec<usize>> {
    let n = table.targets();
    let mut mask = prefix_mask(n, prefix)?;
    let mut end = prefix.last().copied().unwrap_or(n);
    let beta = table.rationality().beta();
    let dm = table.distances();
    let full = (1u64 << n) - 1;
    let mut out = Vec::with_capacity(n - prefix.len());
    while mask != full {
        let log_z = table.log_partition(mask, end);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = None;
        for j in (0..n).filter(|j| mask & (1 << j) == 0) {
            pick = Some(j);
            acc += (-beta * dm.get(end, j) + table.log_partition(mask | (1 << j), j) - log_z).exp();
            if u < acc {
                break;
            }
        }
        let j = pick.expect("an unvisited target remains");
        out.push(j);
        mask |= 1 << j;
        end = j;
    }
    Ok(out)
}

/// Edit distance with unit-cost insertions, deletions and substitutions.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - LD / max(len)`, in `[0, 1]`; two empty sequences score 1.
pub fn levenshtein_similarity<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    let longest = a.len().max(b.len()).max(1);
    1.0 - levenshtein(a, b) as f64 / longest as f64
}

/// Sample Pearson correlation coefficient.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need two equal-length series of at least 2 values, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateVariance(
            "one of the series is constant".into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub planner_ts: Vec<usize>,
    pub ks: Vec<usize>,
    pub rationality: Rationality,
    pub mode: Mode,
    pub l: usize,
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            planner_ts: vec![0, 1, 2],
            ks: vec![0, 1, 2],
            rationality: Rationality::default(),
            mode: Mode::Exact,
            l: DEFAULT_L,
            n_samples: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub layout_id: String,
    pub planner_t: usize,
    pub k_observed: usize,
    /// Exact `k`-predictability of the planner's plan.
    pub theoretical_k_pred: f64,
    pub n_samples: usize,
    pub exact_match_rate: f64,
    pub mean_lev_similarity: f64,
}

/// RNG stream for one evaluation cell; sample `i` is the `i`-th draw from it.
pub fn cell_rng(seed: u64, layout_id: &str, planner_t: usize, k: usize) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((layout_id.len() as u64).to_le_bytes());
    h.update(layout_id.as_bytes());
    h.update((planner_t as u64).to_le_bytes());
    h.update((k as u64).to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Plans each layout with every planner, shows `k` targets to simulated
/// observers and scores their guesses.
pub fn evaluate(pool: &[Layout], config: &EvalConfig) -> Result<Vec<EvalRecord>> {
    if config.n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    let per_layout = pool
        .par_iter()
        .map(|layout| evaluate_layout(layout, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_layout.into_iter().flatten().collect())
}

fn evaluate_layout(layout: &Layout, config: &EvalConfig) -> Result<Vec<EvalRecord>> {
    let n = layout.len();
    for &k in &config.ks {
        if k > n {
            return Err(Error::HorizonExceeded { t: k, targets: n });
        }
    }
    let table = RemainderTable::new(layout, config.rationality)?;
    let mut out = Vec::with_capacity(config.planner_ts.len() * config.ks.len());
    for &t in &config.planner_ts {
        let plan = match config.mode {
            Mode::Exact => choose_exact(&table, t)?.plan,
            Mode::Approximate => {
                let spec = PlannerSpec::approximate(t, config.rationality, config.l);
                choose_approx(table.distances(), &spec)?.plan
            }
        };
        for &k in &config.ks {
            let (prefix, truth) = plan.order().split_at(k);
            let mut rng = cell_rng(config.seed, layout.id(), t, k);
            let mut hits = 0usize;
            let mut similarity = 0.0;
            for _ in 0..config.n_samples {
                let guess = sample_from_table(&table, prefix, &mut rng)?;
                hits += usize::from(guess == truth);
                similarity += levenshtein_similarity(&guess, truth);
            }
            out.push(EvalRecord {
                layout_id: layout.id().to_string(),
                planner_t: t,
                k_observed: k,
                theoretical_k_pred: table.t_predictability(&plan, k)?,
                n_samples: config.n_samples,
                exact_match_rate: hits as f64 / config.n_samples as f64,
                mean_lev_similarity: similarity / config.n_samples as f64,
            });
        }
    }
    Ok(out)
}

/// Pooled exact-match rate of the `t = k` planner against the best `t != k` planner.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalCheck {
    pub k: usize,
    pub diagonal_rate: f64,
    pub best_off_diagonal_rate: f64,
}

impl DiagonalCheck {
    pub fn holds(&self) -> bool {
        self.diagonal_rate >= self.best_off_diagonal_rate
    }
}

pub fn diagonal_checks(records: &[EvalRecord]) -> Vec<DiagonalCheck> {
    let mut ks: Vec<usize> = records.iter().map(|r| r.k_observed).collect();
    ks.sort_unstable();
    ks.dedup();
    let mut ts: Vec<usize> = records.iter().map(|r| r.planner_t).collect();
    ts.sort_unstable();
    ts.dedup();
    let pooled = |t: usize, k: usize| {
        let cell: Vec<f64> = records
            .iter()
            .filter(|r| r.planner_t == t && r.k_observed == k)
            .map(|r| r.exact_match_rate)
            .collect();
        (!cell.is_empty()).then(|| cell.iter().sum::<f64>() / cell.len() as f64)
    };
    ks.into_iter()
        .filter_map(|k| {
            let diagonal_rate = pooled(k, k)?;
            let best_off_diagonal_rate = ts
                .iter()
                .filter(|&&t| t != k)
                .filter_map(|&t| pooled(t, k))
                .fold(f64::NEG_INFINITY, f64::max);
            Some(DiagonalCheck {
                k,
                diagonal_rate,
                best_off_diagonal_rate,
            })
        })
        .collect()
}

/// Correlation between theoretical `k`-predictability and simulated exact-match rate.
pub fn model_validity(records: &[EvalRecord]) -> Result<f64> {
    let xs: Vec<f64> = records.iter().map(|r| r.theoretical_k_pred).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.exact_match_rate).collect();
    pearson_correlation(&xs, &ys)
}

/// One grid point of an approximation sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub layout_id: String,
    pub t: usize,
    pub beta: f64,
    pub l: usize,
    /// Plan of the exact `t`-predictable planner.
    pub plan: Plan,
    pub exact_p: f64,
    /// Truncated-denominator value for the same plan.
    pub approx_p: f64,
    /// `exact_p / approx_p`, in `(0, 1]`.
    pub ratio: f64,
    /// Plan of the approximate planner at this `l`.
    pub approx_plan: Plan,
    pub approx_plan_exact_p: f64,
}

/// Exact vs. approximate predictability over a grid of `beta` and `l` values.
pub fn sweep(pool: &[Layout], t: usize, betas: &[f64], ls: &[usize]) -> Result<Vec<SweepRow>> {
    if betas.is_empty() || ls.is_empty() {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    let rationalities = betas
        .iter()
        .map(|&b| Rationality::from_beta(b))
        .collect::<Result<Vec<_>>>()?;
    if ls.contains(&0) {
        return Err(Error::InvalidArgument("l must be at least 1".into()));
    }
    let rows = pool
        .par_iter()
        .map(|layout| {
            let mut rows = Vec::new();
            for &r in &rationalities {
                let table = RemainderTable::new(layout, r)?;
                let exact = choose_exact(&table, t)?;
                let (prefix, remainder) = exact.plan.order().split_at(t);
                let dm = table.distances();
                let own_cost = dm.walk(prefix.last().copied().unwrap_or(layout.len()), remainder);
                let exact_p = table.t_predictability(&exact.plan, t)?;
                for &l in ls {
                    let lbest = lbest_with_matrix(dm, prefix, l, &NearestNeighborBound)?;
                    let approx_p = approx_from_lbest(&lbest, remainder, own_cost, r);
                    let approx = choose_approx(dm, &PlannerSpec::approximate(t, r, l))?;
                    rows.push(SweepRow {
                        layout_id: layout.id().to_string(),
                        t,
                        beta: r.beta(),
                        l,
                        plan: exact.plan.clone(),
                        exact_p,
                        approx_p,
                        ratio: exact_p / approx_p,
                        approx_plan_exact_p: table.t_predictability(&approx.plan, t)?,
                        approx_plan: approx.plan,
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}
