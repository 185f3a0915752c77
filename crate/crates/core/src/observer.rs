//! Boltzmann noisy-rational observer.
//!
//! The observer expects the agent to pick a remainder `r` with probability
//! proportional to `exp(-beta * cost(r))`, where the cost is measured from the
//! state reached after the observed prefix. All weights are handled in the
//! log domain.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::geometry::{DistanceMatrix, Layout, Plan, PrefixSplit};

/// Largest layout the subset tables are built for.
pub const MAX_TABLE_TARGETS: usize = 16;

/// Rationality coefficient `beta` of the observer model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rationality {
    beta: f64,
}

impl Rationality {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidRationality(beta));
        }
        Ok(Self { beta })
    }

    /// The `beta -> 0` limit: every remainder is equally likely.
    pub const fn uniform() -> Self {
        Self { beta: 0.0 }
    }

    /// Accepts `0` as the uniform limit, otherwise behaves like [`Rationality::new`].
    pub fn from_beta(beta: f64) -> Result<Self> {
        if beta == 0.0 {
            Ok(Self::uniform())
        } else {
            Self::new(beta)
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_uniform(&self) -> bool {
        self.beta == 0.0
    }
}

impl Default for Rationality {
    fn default() -> Self {
        Self { beta: 1.0 }
    }
}

/// `ln(sum(exp(x)))` with max subtraction. Returns `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn check_costs(costs: &[f64]) -> Result<()> {
    if costs.is_empty() {
        return Err(Error::EmptyCostList);
    }
    if let Some(i) = costs.iter().position(|c| !c.is_finite()) {
        return Err(Error::NonFiniteCost(i));
    }
    Ok(())
}

/// Normalizes log-weights with max subtraction.
fn normalize_log_weights(logw: &[f64]) -> Vec<f64> {
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|x| (x - max).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// Boltzmann probabilities `p_i ∝ exp(-beta * c_i)`.
pub fn boltzmann_distribution(costs: &[f64], rationality: Rationality) -> Result<Vec<f64>> {
    check_costs(costs)?;
    let logw: Vec<f64> = costs.iter().map(|c| -rationality.beta * c).collect();
    Ok(normalize_log_weights(&logw))
}

/// Validates a prefix against `targets` and returns the visited-set bitmask.
pub(crate) fn prefix_mask(targets: usize, prefix: &[usize]) -> Result<u64> {
    if targets > 63 {
        return Err(Error::InvalidArgument(format!("{targets} targets is too many")));
    }
    if prefix.len() > targets {
        return Err(Error::InvalidPrefix(format!(
            "prefix of length {} exceeds {} targets",
            prefix.len(),
            targets
        )));
    }
    let mut mask = 0u64;
    for &i in prefix {
        if i >= targets {
            return Err(Error::InvalidPrefix(format!("target index {i} out of range")));
        }
        if mask & (1 << i) != 0 {
            return Err(Error::InvalidPrefix(format!("target {i} appears twice")));
        }
        mask |= 1 << i;
    }
    Ok(mask)
}

/// Node the remainder departs from after `prefix`.
pub(crate) fn endpoint(targets: usize, prefix: &[usize]) -> usize {
    prefix.last().copied().unwrap_or(targets)
}

/// Every ordering of the targets not yet visited by `prefix`, in lexicographic order.
pub fn enumerate_remainders(layout: &Layout, prefix: &[usize]) -> Result<Vec<Vec<usize>>> {
    let mask = prefix_mask(layout.len(), prefix)?;
    let unvisited: Vec<usize> = (0..layout.len()).filter(|i| mask & (1 << i) == 0).collect();
    let k = unvisited.len();
    Ok(unvisited.into_iter().permutations(k).collect())
}

/// Conditional distribution over remainders given an observed prefix.
#[derive(Debug, Clone)]
pub struct RemainderDistribution {
    pub remainders: Vec<Vec<usize>>,
    pub costs: Vec<f64>,
    pub log_weights: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl RemainderDistribution {
    pub fn len(&self) -> usize {
        self.remainders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.remainders.is_empty()
    }

    pub fn probability_of(&self, remainder: &[usize]) -> Option<f64> {
        self.remainders
            .iter()
            .position(|r| r == remainder)
            .map(|i| self.probabilities[i])
    }
}

/// Full posterior `P(remainder | start, goal, prefix)` by enumeration.
pub fn posterior_over_remainders(
    layout: &Layout,
    prefix: &[usize],
    rationality: Rationality,
) -> Result<RemainderDistribution> {
    let remainders = enumerate_remainders(layout, prefix)?;
    let dm = DistanceMatrix::new(layout);
    let from = endpoint(layout.len(), prefix);
    let costs: Vec<f64> = remainders.iter().map(|r| dm.walk(from, r)).collect();
    let log_weights: Vec<f64> = costs.iter().map(|c| -rationality.beta * c).collect();
    let probabilities = normalize_log_weights(&log_weights);
    Ok(RemainderDistribution {
        remainders,
        costs,
        log_weights,
        probabilities,
    })
}

/// Absolute slack under which two costs or log-probabilities count as tied.
pub(crate) fn tie_eps(a: f64) -> f64 {
    1e-10 * a.abs().max(1.0)
}

/// Per-state tables over `(visited set, endpoint)`.
///
/// `log_partition` is `ln Σ_r exp(-beta * cost(r))` over every remainder `r`
/// from the state, `min_cost` the cheapest remainder cost. Both are filled by
/// a subset recursion, so each suffix is summed once.
#[derive(Debug, Clone)]
pub struct RemainderTable {
    targets: usize,
    rationality: Rationality,
    dm: DistanceMatrix,
    log_z: Vec<f64>,
    min_cost: Vec<f64>,
}

impl RemainderTable {
    pub fn new(layout: &Layout, rationality: Rationality) -> Result<Self> {
        let n = layout.len();
        if n > MAX_TABLE_TARGETS {
            return Err(Error::InvalidArgument(format!(
                "{n} targets exceeds the table limit of {MAX_TABLE_TARGETS}"
            )));
        }
        let dm = DistanceMatrix::new(layout);
        let nodes = n + 1;
        let full = (1usize << n) - 1;
        let mut log_z = vec![0.0; (full + 1) * nodes];
        let mut min_cost = vec![0.0; (full + 1) * nodes];
        let beta = rationality.beta;
        let mut terms = Vec::with_capacity(n);
        for mask in (0..full).rev() {
            for end in 0..nodes {
                terms.clear();
                let mut best = f64::INFINITY;
                for j in (0..n).filter(|j| mask & (1 << j) == 0) {
                    let next = (mask | (1 << j)) * nodes + j;
                    let step = dm.get(end, j);
                    terms.push(-beta * step + log_z[next]);
                    best = best.min(step + min_cost[next]);
                }
                log_z[mask * nodes + end] = log_sum_exp(&terms);
                min_cost[mask * nodes + end] = best;
            }
        }
        Ok(Self {
            targets: n,
            rationality,
            dm,
            log_z,
            min_cost,
        })
    }

    pub fn targets(&self) -> usize {
        self.targets
    }

    pub fn rationality(&self) -> Rationality {
        self.rationality
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.dm
    }

    fn idx(&self, mask: u64, end: usize) -> usize {
        mask as usize * (self.targets + 1) + end
    }

    pub fn log_partition(&self, mask: u64, end: usize) -> f64 {
        self.log_z[self.idx(mask, end)]
    }

    pub fn min_cost(&self, mask: u64, end: usize) -> f64 {
        self.min_cost[self.idx(mask, end)]
    }

    /// Lexicographically smallest remainder of minimum cost from the given state.
    pub fn best_remainder(&self, mut mask: u64, mut end: usize) -> Vec<usize> {
        let full = (1u64 << self.targets) - 1;
        let mut out = Vec::with_capacity(self.targets);
        while mask != full {
            let target = self.min_cost(mask, end);
            let j = (0..self.targets)
                .filter(|j| mask & (1 << j) == 0)
                .find(|&j| {
                    self.dm.get(end, j) + self.min_cost(mask | (1 << j), j)
                        <= target + tie_eps(target)
                })
                .expect("some successor attains the minimum");
            out.push(j);
            mask |= 1 << j;
            end = j;
        }
        out
    }

    /// `ln P_t` for the remainder `remainder` after `prefix`.
    pub fn log_predictability(&self, prefix: &[usize], remainder: &[usize]) -> Result<f64> {
        let mask = prefix_mask(self.targets, prefix)?;
        let from = endpoint(self.targets, prefix);
        let cost = self.dm.walk(from, remainder);
        Ok(-self.rationality.beta * cost - self.log_partition(mask, from))
    }

    /// Exact `t`-predictability of a full plan.
    pub fn t_predictability(&self, plan: &Plan, t: usize) -> Result<f64> {
        plan.check(self.targets)?;
        let split = PrefixSplit::new(plan.clone(), t)?;
        if t == self.targets {
            return Ok(1.0);
        }
        Ok(self
            .log_predictability(split.prefix(), split.remainder())?
            .exp())
    }
}

/// Probability that an observer who saw the first `t` targets of `plan`
/// correctly infers the rest of it.
pub fn t_predictability_exact(
    layout: &Layout,
    plan: &Plan,
    t: usize,
    rationality: Rationality,
) -> Result<f64> {
    plan.check(layout.len())?;
    if t > layout.len() {
        return Err(Error::HorizonExceeded {
            t,
            targets: layout.len(),
        });
    }
    if t == layout.len() {
        return Ok(1.0);
    }
    if layout.len() <= MAX_TABLE_TARGETS {
        RemainderTable::new(layout, rationality)?.t_predictability(plan, t)
    } else {
        let split = PrefixSplit::new(plan.clone(), t)?;
        let dist = posterior_over_remainders(layout, split.prefix(), rationality)?;
        Ok(dist.probability_of(split.remainder()).unwrap_or(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Bounds, Point2};
    use crate::testutil::{collinear, random_layout};

    #[test]
    fn rationality_rejects_nonpositive() {
        assert!(Rationality::new(0.0).is_err());
        assert!(Rationality::new(-1.0).is_err());
        assert!(Rationality::new(f64::NAN).is_err());
        assert!(Rationality::from_beta(0.0).unwrap().is_uniform());
        assert_eq!(Rationality::default().beta(), 1.0);
    }

    #[test]
    fn enumerate_examples() {
        let l = collinear();
        assert_eq!(enumerate_remainders(&l, &[0]).unwrap(), vec![vec![1, 2], vec![2, 1]]);
        let all = enumerate_remainders(&l, &[]).unwrap();
        assert_eq!(all.len(), 6);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(enumerate_remainders(&l, &[2, 0, 1]).unwrap(), vec![Vec::<usize>::new()]);
        assert!(matches!(
            enumerate_remainders(&l, &[0, 0]),
            Err(Error::InvalidPrefix(_))
        ));
        assert!(matches!(
            enumerate_remainders(&l, &[3]),
            Err(Error::InvalidPrefix(_))
        ));
    }

    #[test]
    fn boltzmann_examples() {
        let r1 = Rationality::default();
        assert_eq!(boltzmann_distribution(&[5.0, 5.0], r1).unwrap(), vec![0.5, 0.5]);
        assert_eq!(
            boltzmann_distribution(&[5.0, 5.0], Rationality::new(37.0).unwrap()).unwrap(),
            vec![0.5, 0.5]
        );

        let p = boltzmann_distribution(&[0.0, 2f64.ln()], r1).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);

        let p = boltzmann_distribution(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], Rationality::uniform())
            .unwrap();
        assert!(p.iter().all(|x| (x - 1.0 / 6.0).abs() < 1e-15));

        let p = boltzmann_distribution(&[0.0, 1000.0], r1).unwrap();
        assert!(p.iter().all(|x| x.is_finite()));
        assert_eq!(p[0], 1.0);
        assert!((0.0..1e-300).contains(&p[1]));

        assert!(matches!(boltzmann_distribution(&[], r1), Err(Error::EmptyCostList)));
        assert!(matches!(
            boltzmann_distribution(&[1.0, f64::INFINITY], r1),
            Err(Error::NonFiniteCost(1))
        ));
    }

    // Expected values come from brute force over the collinear layout:
    // remainders after [A] cost {2, 3}; full plans cost {3, 4, 5, 5, 5, 6}.
    #[test]
    fn exact_predictability_collinear() {
        let l = collinear();
        let plan = Plan::new(vec![0, 1, 2]);
        let p1 = t_predictability_exact(&l, &plan, 1, Rationality::default()).unwrap();
        let oracle1 = 1.0 / (1.0 + (-1f64).exp());
        assert!((p1 - oracle1).abs() < 1e-12);
        assert!((p1 - 0.7311).abs() < 1e-4);

        let p0 = t_predictability_exact(&l, &plan, 0, Rationality::default()).unwrap();
        let z: f64 = [3.0f64, 4.0, 5.0, 5.0, 5.0, 6.0].iter().map(|c| (-c).exp()).sum();
        assert!((p0 - (-3f64).exp() / z).abs() < 1e-12);
        assert!((p0 - 0.5484).abs() < 1e-4);

        assert_eq!(t_predictability_exact(&l, &plan, 3, Rationality::default()).unwrap(), 1.0);
        assert!(matches!(
            t_predictability_exact(&l, &plan, 4, Rationality::default()),
            Err(Error::HorizonExceeded { .. })
        ));
    }

    #[test]
    fn uniform_limit_is_inverse_factorial() {
        let l = random_layout(11, 6);
        let plan = Plan::new(vec![3, 1, 0, 5, 2, 4]);
        let mut fact = 1.0;
        for t in (0..=6).rev() {
            let p = t_predictability_exact(&l, &plan, t, Rationality::uniform()).unwrap();
            assert!((p - 1.0 / fact).abs() < 1e-12, "t={t}: {p}");
            fact *= (6 - t + 1) as f64;
        }
    }

    #[test]
    fn posterior_examples() {
        let l = collinear();
        let d = posterior_over_remainders(&l, &[0], Rationality::default()).unwrap();
        assert_eq!(d.remainders, vec![vec![1, 2], vec![2, 1]]);
        assert!((d.probabilities[0] - 0.7311).abs() < 1e-4);
        assert!((d.probabilities[1] - 0.2689).abs() < 1e-4);

        let sym = Layout::new(
            "sym",
            Point2::new(0.5, 0.2),
            vec![Point2::new(0.25, 0.6), Point2::new(0.75, 0.6)],
        )
        .unwrap();
        let d = posterior_over_remainders(&sym, &[], Rationality::default()).unwrap();
        assert_eq!(d.remainders, vec![vec![0, 1], vec![1, 0]]);
        assert!((d.probabilities[0] - 0.5).abs() < 1e-12);

        let d = posterior_over_remainders(&l, &[1, 0, 2], Rationality::default()).unwrap();
        assert_eq!(d.remainders, vec![Vec::<usize>::new()]);
        assert_eq!(d.probabilities, vec![1.0]);
    }

    #[test]
    fn table_matches_enumeration() {
        for seed in 0..20 {
            let l = random_layout(seed, 3 + (seed as usize % 4));
            let table = RemainderTable::new(&l, Rationality::default()).unwrap();
            let n = l.len();
            for prefix in [vec![], vec![n - 1], vec![0, n - 1]] {
                let d = posterior_over_remainders(&l, &prefix, Rationality::default()).unwrap();
                let mask = prefix_mask(n, &prefix).unwrap();
                let end = endpoint(n, &prefix);
                let min = d.costs.iter().copied().fold(f64::INFINITY, f64::min);
                assert!((table.min_cost(mask, end) - min).abs() < 1e-12);
                assert!((table.log_partition(mask, end) - log_sum_exp(&d.log_weights)).abs() < 1e-12);
                let best = table.best_remainder(mask, end);
                assert!((table.distances().walk(end, &best) - min).abs() < 1e-12);
                for (r, p) in d.remainders.iter().zip(&d.probabilities) {
                    let lp = table.log_predictability(&prefix, r).unwrap();
                    assert!((lp.exp() - p).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn table_rejects_oversized_layouts() {
        let bounds = Bounds::unit();
        let targets = (0..17)
            .map(|i| Point2::new(0.05 * i as f64 + 0.01, 0.5))
            .collect();
        let l = Layout::with_bounds("big", Point2::new(0.0, 0.0), targets, &bounds).unwrap();
        assert!(RemainderTable::new(&l, Rationality::default()).is_err());
    }
}
