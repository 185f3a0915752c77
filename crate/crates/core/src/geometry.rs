//! Layouts, plans and the Euclidean open-path cost model.
//!
//! A [`Layout`] is a start point plus `T` targets. A [`Plan`] visits every
//! target exactly once starting from the start point; its cost is the length
//! of the open polyline through the visited points (no return leg).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum distance between any two points of a valid layout.
pub const MIN_SEPARATION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Distance from `self` to the closed segment `a`-`b`.
    pub fn distance_to_segment(&self, a: &Point2, b: &Point2) -> f64 {
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let len2 = dx * dx + dy * dy;
        if len2 == 0.0 {
            return self.distance(a);
        }
        let s = (((self.x - a.x) * dx + (self.y - a.y) * dy) / len2).clamp(0.0, 1.0);
        self.distance(&Point2::new(a.x + s * dx, a.y + s * dy))
    }
}

/// Axis-aligned rectangle that layout points must lie in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Point2,
    pub max: Point2,
}

impl Bounds {
    pub fn new(min: Point2, max: Point2) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() || min.x >= max.x || min.y >= max.y {
            return Err(Error::InvalidArgument(format!(
                "bounding box [{:?}, {:?}] is empty or not finite",
                min, max
            )));
        }
        Ok(Self { min, max })
    }

    /// The unit square `[0, 1]²`.
    pub const fn unit() -> Self {
        Self {
            min: Point2::new(0.0, 0.0),
            max: Point2::new(1.0, 1.0),
        }
    }

    /// The square `[0, side]²`.
    pub fn square(side: f64) -> Result<Self> {
        Self::new(Point2::new(0.0, 0.0), Point2::new(side, side))
    }

    /// Accepts every finite point. Used when reading layouts from files,
    /// which do not record the box they were drawn from.
    pub const fn unbounded() -> Self {
        Self {
            min: Point2::new(f64::MIN, f64::MIN),
            max: Point2::new(f64::MAX, f64::MAX),
        }
    }

    pub fn contains(&self, p: &Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

impl Default for Bounds {
    fn default() -> Self {
        Self::unit()
    }
}

/// A start point and the targets that every plan must visit.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    id: String,
    start: Point2,
    targets: Vec<Point2>,
}

impl Layout {
    /// Builds a layout and validates it against the unit square.
    pub fn new(id: impl Into<String>, start: Point2, targets: Vec<Point2>) -> Result<Self> {
        Self::with_bounds(id, start, targets, &Bounds::unit())
    }

    pub fn with_bounds(
        id: impl Into<String>,
        start: Point2,
        targets: Vec<Point2>,
        bounds: &Bounds,
    ) -> Result<Self> {
        validate_layout(
            Self {
                id: id.into(),
                start,
                targets,
            },
            bounds,
        )
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn start(&self) -> Point2 {
        self.start
    }

    pub fn targets(&self) -> &[Point2] {
        &self.targets
    }

    /// Number of targets, which is also the plan horizon.
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Point for a node index: targets are `0..T`, the start is `T`.
    pub fn node(&self, index: usize) -> Point2 {
        if index == self.targets.len() {
            self.start
        } else {
            self.targets[index]
        }
    }

    /// Copy of this layout with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64, bounds: &Bounds) -> Result<Self> {
        let s = |p: &Point2| Point2::new(p.x * factor, p.y * factor);
        Self::with_bounds(
            self.id.clone(),
            s(&self.start),
            self.targets.iter().map(s).collect(),
            bounds,
        )
    }

    /// Copy of this layout shifted by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64, bounds: &Bounds) -> Result<Self> {
        let s = |p: &Point2| Point2::new(p.x + dx, p.y + dy);
        Self::with_bounds(
            self.id.clone(),
            s(&self.start),
            self.targets.iter().map(s).collect(),
            bounds,
        )
    }
}

/// Checks every layout invariant and hands the layout back if they hold.
pub fn validate_layout(layout: Layout, bounds: &Bounds) -> Result<Layout> {
    let degenerate = |index: Option<usize>, reason: String| Error::DegenerateLayout { index, reason };

    if layout.targets.len() < 2 {
        return Err(degenerate(
            None,
            format!("need at least 2 targets, got {}", layout.targets.len()),
        ));
    }
    if !layout.start.is_finite() {
        return Err(degenerate(None, "start point is not finite".into()));
    }
    if !bounds.contains(&layout.start) {
        return Err(degenerate(None, "start point lies outside the bounding box".into()));
    }
    for (i, p) in layout.targets.iter().enumerate() {
        if !p.is_finite() {
            return Err(degenerate(Some(i), "target is not finite".into()));
        }
        if !bounds.contains(p) {
            return Err(degenerate(Some(i), "target lies outside the bounding box".into()));
        }
        if p.distance(&layout.start) < MIN_SEPARATION {
            return Err(degenerate(Some(i), "target coincides with the start point".into()));
        }
        for (j, q) in layout.targets[..i].iter().enumerate() {
            if p.distance(q) < MIN_SEPARATION {
                return Err(degenerate(Some(i), format!("target coincides with target {j}")));
            }
        }
    }
    Ok(layout)
}

/// Order in which targets are visited.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Plan(Vec<usize>);

impl Plan {
    pub fn new(order: Vec<usize>) -> Self {
        Self(order)
    }

    pub fn order(&self) -> &[usize] {
        &self.0
    }

    pub fn into_order(self) -> Vec<usize> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Ensures the plan is a permutation of `0..targets`.
    pub fn check(&self, targets: usize) -> Result<()> {
        if self.0.len() != targets {
            return Err(Error::InvalidPlan(format!(
                "plan has {} entries, layout has {} targets",
                self.0.len(),
                targets
            )));
        }
        let mut seen = vec![false; targets];
        for &i in &self.0 {
            if i >= targets {
                return Err(Error::InvalidPlan(format!("target index {i} out of range")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidPlan(format!("target {i} visited twice")));
            }
        }
        Ok(())
    }
}

impl From<Vec<usize>> for Plan {
    fn from(order: Vec<usize>) -> Self {
        Self(order)
    }
}

impl std::fmt::Display for Plan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for (n, i) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "]")
    }
}

/// A plan cut into the observed prefix `order[..t]` and hidden remainder `order[t..]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixSplit {
    plan: Plan,
    t: usize,
}

impl PrefixSplit {
    pub fn new(plan: Plan, t: usize) -> Result<Self> {
        if t > plan.len() {
            return Err(Error::HorizonExceeded {
                t,
                targets: plan.len(),
            });
        }
        Ok(Self { plan, t })
    }

    pub fn plan(&self) -> &Plan {
        &self.plan
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn prefix(&self) -> &[usize] {
        &self.plan.0[..self.t]
    }

    pub fn remainder(&self) -> &[usize] {
        &self.plan.0[self.t..]
    }

    /// Node index the remainder starts from: the last prefix target, or the start.
    pub fn endpoint(&self) -> usize {
        match self.t {
            0 => self.plan.len(),
            t => self.plan.0[t - 1],
        }
    }
}

/// Pairwise Euclidean distances between all nodes; node `T` is the start.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(layout: &Layout) -> Self {
        let n = layout.len() + 1;
        let mut d = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                d[a * n + b] = layout.node(a).distance(&layout.node(b));
            }
        }
        Self { n, d }
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.d[a * self.n + b]
    }

    pub fn targets(&self) -> usize {
        self.n - 1
    }

    pub fn start(&self) -> usize {
        self.n - 1
    }

    /// Length of the path `from -> seq[0] -> ... -> seq[last]`.
    pub fn walk(&self, from: usize, seq: &[usize]) -> f64 {
        let mut cost = 0.0;
        let mut at = from;
        for &j in seq {
            cost += self.get(at, j);
            at = j;
        }
        cost
    }
}

/// Open-path length of a full plan, starting at the layout's start point.
pub fn path_cost(layout: &Layout, plan: &Plan) -> Result<f64> {
    plan.check(layout.len())?;
    Ok(DistanceMatrix::new(layout).walk(layout.len(), plan.order()))
}

/// Length of the observed prefix path, from the start to the `t`-th target.
pub fn prefix_cost(layout: &Layout, split: &PrefixSplit) -> Result<f64> {
    split.plan().check(layout.len())?;
    Ok(DistanceMatrix::new(layout).walk(layout.len(), split.prefix()))
}

/// Length of the remainder path, starting from the state reached after the prefix.
pub fn remainder_cost(layout: &Layout, split: &PrefixSplit) -> Result<f64> {
    split.plan().check(layout.len())?;
    Ok(DistanceMatrix::new(layout).walk(split.endpoint(), split.remainder()))
}
