use proptest::prelude::*;

use tpred::harness::{filter_distinguishable, levenshtein, levenshtein_similarity};
use tpred::{
    path_cost, plan_optimal, posterior_over_remainders, prefix_cost, remainder_cost,
    t_predictability_approx, t_predictability_exact, Bounds, Layout, Plan, Point2, PrefixSplit,
    Rationality,
};

fn layout_strategy(max_targets: usize) -> impl Strategy<Value = Layout> {
    prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 3..=max_targets + 1).prop_filter_map(
        "points too close",
        |pts| {
            let start = Point2::new(pts[0].0, pts[0].1);
            let targets = pts[1..].iter().map(|&(x, y)| Point2::new(x, y)).collect();
            Layout::new("p", start, targets).ok()
        },
    )
}

fn layout_and_plan(max_targets: usize) -> impl Strategy<Value = (Layout, Plan)> {
    layout_strategy(max_targets).prop_flat_map(|l| {
        let order: Vec<usize> = (0..l.len()).collect();
        (Just(l), Just(order).prop_shuffle().prop_map(Plan::new))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cost_is_additive((layout, plan) in layout_and_plan(7)) {
        let total = path_cost(&layout, &plan).unwrap();
        for t in 0..=plan.len() {
            let split = PrefixSplit::new(plan.clone(), t).unwrap();
            let sum = prefix_cost(&layout, &split).unwrap() + remainder_cost(&layout, &split).unwrap();
            prop_assert!((total - sum).abs() <= 1e-12);
        }
    }

    #[test]
    fn predictability_is_translation_invariant(
        (layout, plan) in layout_and_plan(6),
        dx in -50.0f64..50.0,
        dy in -50.0f64..50.0,
        beta in 0.1f64..20.0,
    ) {
        let moved = layout.translated(dx, dy, &Bounds::unbounded()).unwrap();
        let r = Rationality::new(beta).unwrap();
        for t in 0..=plan.len() {
            let a = t_predictability_exact(&layout, &plan, t, r).unwrap();
            let b = t_predictability_exact(&moved, &plan, t, r).unwrap();
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn posterior_is_normalized((layout, plan) in layout_and_plan(6), t in 0usize..4, beta in 0.0f64..50.0) {
        let t = t.min(plan.len());
        let r = Rationality::from_beta(beta).unwrap();
        let post = posterior_over_remainders(&layout, &plan.order()[..t], r).unwrap();
        let sum: f64 = post.probabilities.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        prop_assert!(post.probabilities.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn optimal_plan_gets_sharper_with_beta(layout in layout_strategy(6), t in 0usize..3) {
        let plan = plan_optimal(&layout).unwrap();
        let mut last = 0.0;
        for beta in [0.0, 0.5, 1.0, 4.0, 16.0, 64.0] {
            let p = t_predictability_exact(&layout, &plan, t, Rationality::from_beta(beta).unwrap()).unwrap();
            prop_assert!(p >= last - 1e-12);
            last = p;
        }
    }

    #[test]
    fn approximation_bounds_exact(
        (layout, plan) in layout_and_plan(7),
        t in 0usize..3,
        l in 1usize..6,
        beta in 0.0f64..30.0,
    ) {
        let r = Rationality::from_beta(beta).unwrap();
        let exact = t_predictability_exact(&layout, &plan, t, r).unwrap();
        let approx = t_predictability_approx(&layout, &plan, t, r, l).unwrap();
        prop_assert!(approx >= exact * (1.0 - 1e-12));
        prop_assert!(approx <= 1.0);
    }

    #[test]
    fn distinguishable_filter_keeps_an_ordered_subset(
        layouts in prop::collection::vec(layout_strategy(5), 0..8),
        beta in 0.1f64..40.0,
    ) {
        let layouts: Vec<Layout> = layouts
            .into_iter()
            .enumerate()
            .map(|(i, l)| {
                Layout::new(format!("L{i}"), l.start(), l.targets().to_vec()).unwrap()
            })
            .collect();
        let kept = filter_distinguishable(&layouts, &[0, 1, 2], Rationality::new(beta).unwrap()).unwrap();
        let mut rest = layouts.iter();
        for k in &kept {
            prop_assert!(rest.any(|l| l == k));
        }
    }

    #[test]
    fn similarity_is_bounded(
        a in prop::collection::vec(0u8..5, 0..8),
        b in prop::collection::vec(0u8..5, 0..8),
        c in prop::collection::vec(0u8..5, 0..8),
    ) {
        let s = levenshtein_similarity(&a, &b);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s == 1.0, a == b);
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
        prop_assert!(levenshtein(&a, &b) <= a.len().max(b.len()));
    }
}
