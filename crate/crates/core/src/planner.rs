//! Optimal and `t`-predictable planners.
//!
//! Candidates are ranked by predictability, then by total path cost, then by
//! lexicographic order of the visiting sequence.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::geometry::{DistanceMatrix, Layout, Plan};
use crate::lbest::{lbest_with_matrix, NearestNeighborBound, DEFAULT_L};
use crate::observer::{log_sum_exp, prefix_mask, tie_eps, Rationality, RemainderTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Exact,
    Approximate,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Approximate => "approx",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "approx" | "approximate" => Ok(Mode::Approximate),
            other => Err(Error::InvalidArgument(format!("unknown mode {other:?}"))),
        }
    }
}

/// Which objective a planner maximizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerSpec {
    /// Number of targets the observer is assumed to have seen.
    pub t: usize,
    pub rationality: Rationality,
    pub mode: Mode,
    /// Size of the truncated denominator in approximate mode.
    pub l: usize,
}

impl PlannerSpec {
    pub fn exact(t: usize, rationality: Rationality) -> Self {
        Self {
            t,
            rationality,
            mode: Mode::Exact,
            l: DEFAULT_L,
        }
    }

    pub fn approximate(t: usize, rationality: Rationality, l: usize) -> Self {
        Self {
            t,
            rationality,
            mode: Mode::Approximate,
            l,
        }
    }
}

/// A chosen plan together with the score it was chosen by.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanChoice {
    pub plan: Plan,
    pub cost: f64,
    /// `ln P_t` under the planner's mode (approximate mode: truncated denominator).
    pub log_score: f64,
}

impl PlanChoice {
    pub fn score(&self) -> f64 {
        self.log_score.exp()
    }
}

struct Candidate {
    log_p: f64,
    cost: f64,
    order: Vec<usize>,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        if (self.log_p - other.log_p).abs() > tie_eps(other.log_p) {
            return self.log_p > other.log_p;
        }
        if (self.cost - other.cost).abs() > tie_eps(other.cost) {
            return self.cost < other.cost;
        }
        self.order < other.order
    }
}

fn keep_best(best: &mut Option<Candidate>, cand: Candidate) {
    if best.as_ref().is_none_or(|b| cand.beats(b)) {
        *best = Some(cand);
    }
}

fn check_horizon(t: usize, targets: usize) -> Result<()> {
    if t > targets {
        return Err(Error::HorizonExceeded { t, targets });
    }
    Ok(())
}

/// Minimum-cost open path from the start through every target.
pub fn plan_optimal(layout: &Layout) -> Result<Plan> {
    let table = RemainderTable::new(layout, Rationality::default())?;
    Ok(optimal_from_table(&table))
}

fn optimal_from_table(table: &RemainderTable) -> Plan {
    Plan::new(table.best_remainder(0, table.targets()))
}

/// The plan maximizing `P_t` (exact or approximate, per `spec`).
pub fn plan_t_predictable(layout: &Layout, spec: &PlannerSpec) -> Result<Plan> {
    Ok(choose_plan(layout, spec)?.plan)
}

pub fn choose_plan(layout: &Layout, spec: &PlannerSpec) -> Result<PlanChoice> {
    check_horizon(spec.t, layout.len())?;
    match spec.mode {
        Mode::Exact => {
            let table = RemainderTable::new(layout, spec.rationality)?;
            choose_exact(&table, spec.t)
        }
        Mode::Approximate => choose_approx(&DistanceMatrix::new(layout), spec),
    }
}

/// Exact planner over a prebuilt table.
///
/// Within a fixed prefix `P_t` falls with remainder cost, so the best
/// completion of every prefix is its cheapest remainder. Only the
/// `T!/(T-t)!` prefixes need to be scanned.
pub fn choose_exact(table: &RemainderTable, t: usize) -> Result<PlanChoice> {
    let n = table.targets();
    check_horizon(t, n)?;
    let dm = table.distances();
    let beta = table.rationality().beta();
    if t == n {
        // Every plan scores 1; the cost tie-break selects the optimum.
        let plan = optimal_from_table(table);
        let cost = dm.walk(n, plan.order());
        return Ok(PlanChoice {
            plan,
            cost,
            log_score: 0.0,
        });
    }
    let mut best: Option<Candidate> = None;
    for prefix in (0..n).permutations(t) {
        let mask = prefix_mask(n, &prefix)?;
        let end = prefix.last().copied().unwrap_or(n);
        let rem = table.min_cost(mask, end);
        let log_p = -beta * rem - table.log_partition(mask, end);
        let cand = Candidate {
            log_p,
            cost: dm.walk(n, &prefix) + rem,
            order: prefix,
        };
        keep_best(&mut best, cand);
    }
    let best = best.expect("at least one prefix");
    let mut order = best.order;
    let mask = prefix_mask(n, &order)?;
    let end = order.last().copied().unwrap_or(n);
    order.extend(table.best_remainder(mask, end));
    let cost = dm.walk(n, &order);
    Ok(PlanChoice {
        plan: Plan::new(order),
        cost,
        log_score: best.log_p,
    })
}

/// Approximate planner: each prefix is completed only by its l-best remainders.
pub fn choose_approx(dm: &DistanceMatrix, spec: &PlannerSpec) -> Result<PlanChoice> {
    let n = dm.targets();
    check_horizon(spec.t, n)?;
    let beta = spec.rationality.beta();
    let mut best: Option<Candidate> = None;
    for prefix in (0..n).permutations(spec.t) {
        let lbest = lbest_with_matrix(dm, &prefix, spec.l, &NearestNeighborBound)?;
        let terms: Vec<f64> = lbest.costs.iter().map(|c| -beta * c).collect();
        let log_z = log_sum_exp(&terms);
        let prefix_cost = dm.walk(n, &prefix);
        for (rem, cost) in lbest.remainders.iter().zip(&lbest.costs) {
            let mut order = prefix.clone();
            order.extend_from_slice(rem);
            keep_best(
                &mut best,
                Candidate {
                    log_p: -beta * cost - log_z,
                    cost: prefix_cost + cost,
                    order,
                },
            );
        }
    }
    let best = best.expect("at least one prefix");
    let cost = dm.walk(n, &best.order);
    Ok(PlanChoice {
        plan: Plan::new(best.order),
        cost,
        log_score: best.log_p,
    })
}

/// Exact `k`-predictability of the plans chosen by several `t`-predictable planners.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictabilityMatrix {
    pub planner_ts: Vec<usize>,
    pub ks: Vec<usize>,
    pub plans: Vec<Plan>,
    /// `entries[row][col]` is `P_{ks[col]}` of the plan chosen by `planner_ts[row]`.
    pub entries: Vec<Vec<f64>>,
}

impl PredictabilityMatrix {
    pub fn get(&self, t: usize, k: usize) -> Option<f64> {
        let row = self.planner_ts.iter().position(|&x| x == t)?;
        let col = self.ks.iter().position(|&x| x == k)?;
        Some(self.entries[row][col])
    }
}

pub fn k_predictability_matrix(
    layout: &Layout,
    planner_ts: &[usize],
    ks: &[usize],
    rationality: Rationality,
) -> Result<PredictabilityMatrix> {
    let table = RemainderTable::new(layout, rationality)?;
    matrix_from_table(&table, planner_ts, ks)
}

pub fn matrix_from_table(
    table: &RemainderTable,
    planner_ts: &[usize],
    ks: &[usize],
) -> Result<PredictabilityMatrix> {
    for &k in ks {
        check_horizon(k, table.targets())?;
    }
    let plans = planner_ts
        .iter()
        .map(|&t| choose_exact(table, t).map(|c| c.plan))
        .collect::<Result<Vec<_>>>()?;
    let entries = plans
        .iter()
        .map(|p| ks.iter().map(|&k| table.t_predictability(p, k)).collect())
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(PredictabilityMatrix {
        planner_ts: planner_ts.to_vec(),
        ks: ks.to_vec(),
        plans,
        entries,
    })
}
