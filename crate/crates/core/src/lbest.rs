//! Branch-and-bound search for the `l` cheapest remainders, and the
//! truncated-denominator predictability built on top of it.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geometry::{DistanceMatrix, Layout, Plan, PrefixSplit};
use crate::observer::{endpoint, log_sum_exp, prefix_mask, Rationality};

/// Default number of remainders kept in the truncated denominator.
pub const DEFAULT_L: usize = 2;

/// Admissible lower bound on the cost of completing a partial remainder.
pub trait LowerBound {
    /// Lower bound on the cost of visiting every node in `unvisited`,
    /// in any order, starting from `end`.
    fn bound(&self, dm: &DistanceMatrix, end: usize, unvisited: &[usize]) -> f64;
}

/// Every unvisited target must be entered by some edge, and that edge starts
/// either at the current endpoint or at another unvisited target. Summing the
/// cheapest such in-edge per target never overestimates.
#[derive(Debug, Clone, Copy, Default)]
pub struct NearestNeighborBound;

impl LowerBound for NearestNeighborBound {
    fn bound(&self, dm: &DistanceMatrix, end: usize, unvisited: &[usize]) -> f64 {
        unvisited
            .iter()
            .map(|&j| {
                unvisited
                    .iter()
                    .filter(|&&k| k != j)
                    .map(|&k| dm.get(k, j))
                    .fold(dm.get(end, j), f64::min)
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LBestResult {
    /// Remainders in ascending (cost, lexicographic) order.
    pub remainders: Vec<Vec<usize>>,
    pub costs: Vec<f64>,
    /// Search-tree nodes visited, root and leaves included.
    pub nodes_expanded: u64,
    /// `(T - t)!`, the number of leaves exhaustive enumeration would visit.
    pub exhaustive_equivalent: u64,
    /// Some remainder left out of the list has the same cost as the last one kept.
    pub boundary_tie: bool,
}

impl LBestResult {
    pub fn len(&self) -> usize {
        self.remainders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.remainders.is_empty()
    }
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).fold(1u64, |a, b| a.saturating_mul(b))
}

fn cmp_entry(a: &(f64, Vec<usize>), b: &(f64, Vec<usize>)) -> Ordering {
    a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1))
}

struct Search<'a, B> {
    dm: &'a DistanceMatrix,
    bound: &'a B,
    l: usize,
    best: Vec<(f64, Vec<usize>)>,
    min_excluded: f64,
    nodes: u64,
    path: Vec<usize>,
}

impl<B: LowerBound> Search<'_, B> {
    fn worst(&self) -> Option<f64> {
        (self.best.len() == self.l).then(|| self.best[self.l - 1].0)
    }

    fn offer(&mut self, cost: f64) {
        let entry = (cost, self.path.clone());
        let pos = self
            .best
            .binary_search_by(|e| cmp_entry(e, &entry))
            .unwrap_or_else(|p| p);
        if pos >= self.l {
            self.min_excluded = self.min_excluded.min(cost);
            return;
        }
        self.best.insert(pos, entry);
        if self.best.len() > self.l {
            let (evicted, _) = self.best.pop().expect("over capacity");
            self.min_excluded = self.min_excluded.min(evicted);
        }
    }

    fn descend(&mut self, end: usize, acc: f64, unvisited: &mut Vec<usize>) {
        self.nodes += 1;
        if unvisited.is_empty() {
            self.offer(acc);
            return;
        }
        if let Some(worst) = self.worst() {
            // Equal-cost subtrees are kept so lexicographic tie-breaking stays exact.
            let lb = acc + self.bound.bound(self.dm, end, unvisited);
            if lb > worst + 1e-12 * worst.max(1.0) {
                return;
            }
        }
        // Nearest first, so good incumbents are found early.
        let mut children = unvisited.clone();
        children.sort_by(|&a, &b| {
            self.dm
                .get(end, a)
                .total_cmp(&self.dm.get(end, b))
                .then(a.cmp(&b))
        });
        for j in children {
            let pos = unvisited.iter().position(|&u| u == j).expect("child is unvisited");
            unvisited.remove(pos);
            self.path.push(j);
            self.descend(j, acc + self.dm.get(end, j), unvisited);
            self.path.pop();
            unvisited.insert(pos, j);
        }
    }
}

/// The `l` lowest-cost remainders after `prefix`, using the nearest-neighbour bound.
pub fn lbest_remainders(layout: &Layout, prefix: &[usize], l: usize) -> Result<LBestResult> {
    lbest_remainders_with(layout, prefix, l, &NearestNeighborBound)
}

pub fn lbest_remainders_with<B: LowerBound>(
    layout: &Layout,
    prefix: &[usize],
    l: usize,
    bound: &B,
) -> Result<LBestResult> {
    let dm = DistanceMatrix::new(layout);
    lbest_with_matrix(&dm, prefix, l, bound)
}

pub(crate) fn lbest_with_matrix<B: LowerBound>(
    dm: &DistanceMatrix,
    prefix: &[usize],
    l: usize,
    bound: &B,
) -> Result<LBestResult> {
    if l == 0 {
        return Err(Error::InvalidArgument("l must be at least 1".into()));
    }
    let n = dm.targets();
    let mask = prefix_mask(n, prefix)?;
    let mut unvisited: Vec<usize> = (0..n).filter(|i| mask & (1 << i) == 0).collect();
    let mut search = Search {
        dm,
        bound,
        l,
        best: Vec::with_capacity(l + 1),
        min_excluded: f64::INFINITY,
        nodes: 0,
        path: Vec::with_capacity(unvisited.len()),
    };
    search.descend(endpoint(n, prefix), 0.0, &mut unvisited);

    let last = search.best.last().map(|e| e.0).unwrap_or(0.0);
    let boundary_tie = search.min_excluded.is_finite()
        && (search.min_excluded - last).abs() <= 1e-12 * last.max(1.0);
    let (costs, remainders) = search.best.into_iter().unzip();
    Ok(LBestResult {
        remainders,
        costs,
        nodes_expanded: search.nodes,
        exhaustive_equivalent: factorial(n - prefix.len()),
        boundary_tie,
    })
}

/// Approximate `P_t` from an already computed l-best set for the plan's prefix.
///
/// The denominator sums over the l-best remainders plus the plan's own
/// remainder when it is not among them, so the value never exceeds one.
pub fn approx_from_lbest(
    lbest: &LBestResult,
    own_remainder: &[usize],
    own_cost: f64,
    rationality: Rationality,
) -> f64 {
    let beta = rationality.beta();
    let mut terms: Vec<f64> = lbest.costs.iter().map(|c| -beta * c).collect();
    if !lbest.remainders.iter().any(|r| r == own_remainder) {
        terms.push(-beta * own_cost);
    }
    (-beta * own_cost - log_sum_exp(&terms)).exp()
}

/// `t`-predictability with the denominator restricted to the `l` cheapest remainders.
pub fn t_predictability_approx(
    layout: &Layout,
    plan: &Plan,
    t: usize,
    rationality: Rationality,
    l: usize,
) -> Result<f64> {
    plan.check(layout.len())?;
    let split = PrefixSplit::new(plan.clone(), t)?;
    let dm = DistanceMatrix::new(layout);
    let lbest = lbest_with_matrix(&dm, split.prefix(), l, &NearestNeighborBound)?;
    let own_cost = dm.walk(split.endpoint(), split.remainder());
    Ok(approx_from_lbest(&lbest, split.remainder(), own_cost, rationality))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observer::{enumerate_remainders, t_predictability_exact};
    use crate::testutil::{collinear, random_layout};

    fn exhaustive_sorted(layout: &Layout, prefix: &[usize]) -> Vec<(f64, Vec<usize>)> {
        let dm = DistanceMatrix::new(layout);
        let from = prefix.last().copied().unwrap_or(layout.len());
        let mut all: Vec<_> = enumerate_remainders(layout, prefix)
            .unwrap()
            .into_iter()
            .map(|r| (dm.walk(from, &r), r))
            .collect();
        all.sort_by(cmp_entry);
        all
    }

    #[test]
    fn collinear_examples() {
        let l = collinear();
        let r = lbest_remainders(&l, &[0], 1).unwrap();
        assert_eq!(r.remainders, vec![vec![1, 2]]);
        assert_eq!(r.costs, vec![2.0]);
        assert_eq!(r.exhaustive_equivalent, 2);

        let r = lbest_remainders(&l, &[0, 2, 1], 5).unwrap();
        assert_eq!(r.remainders, vec![Vec::<usize>::new()]);
        assert_eq!(r.costs, vec![0.0]);

        assert!(lbest_remainders(&l, &[0], 0).is_err());
        assert!(matches!(
            lbest_remainders(&l, &[0, 0], 1),
            Err(Error::InvalidPrefix(_))
        ));
    }

    #[test]
    fn exhaustive_l_returns_everything() {
        let l = random_layout(3, 5);
        for prefix in [vec![], vec![2], vec![4, 0]] {
            let all = exhaustive_sorted(&l, &prefix);
            let r = lbest_remainders(&l, &prefix, 1000).unwrap();
            assert_eq!(r.len(), all.len());
            let (costs, rems): (Vec<f64>, Vec<Vec<usize>>) = all.into_iter().unzip();
            assert_eq!(r.costs, costs);
            assert_eq!(r.remainders, rems);
        }
    }

    #[test]
    fn matches_exhaustive_prefix_of_sorted_list() {
        for seed in 0..15 {
            let l = random_layout(100 + seed, 7);
            let prefix: Vec<usize> = (0..(seed as usize % 3)).collect();
            let all = exhaustive_sorted(&l, &prefix);
            for k in [1, 2, 5] {
                let r = lbest_remainders(&l, &prefix, k).unwrap();
                assert_eq!(r.len(), k);
                for (i, c) in r.costs.iter().enumerate() {
                    assert!((c - all[i].0).abs() < 1e-12);
                }
                assert!(r.costs.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn approx_examples() {
        let l = collinear();
        let plan = Plan::new(vec![0, 1, 2]);
        let beta = Rationality::default();
        let exact = t_predictability_exact(&l, &plan, 1, beta).unwrap();
        let a2 = t_predictability_approx(&l, &plan, 1, beta, 2).unwrap();
        assert!((a2 - exact).abs() < 1e-12);
        assert!((a2 - 0.7311).abs() < 1e-4);
        assert_eq!(t_predictability_approx(&l, &plan, 1, beta, 1).unwrap(), 1.0);
    }

    #[test]
    fn own_remainder_outside_lbest_is_counted() {
        let l = collinear();
        // remainder [2, 1] costs 3, the 1-best [1, 2] costs 2
        let plan = Plan::new(vec![0, 2, 1]);
        let beta = Rationality::default();
        let approx = t_predictability_approx(&l, &plan, 1, beta, 1).unwrap();
        let exact = t_predictability_exact(&l, &plan, 1, beta).unwrap();
        assert!((approx - exact).abs() < 1e-12);
        assert!(approx < 1.0);
    }
}
