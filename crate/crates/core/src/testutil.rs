use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Bounds, Layout, Point2};

/// Start (0,0) with targets A=(1,0), B=(2,0), C=(3,0).
pub fn collinear() -> Layout {
    Layout::with_bounds(
        "collinear",
        Point2::new(0.0, 0.0),
        vec![Point2::new(1.0, 0.0), Point2::new(2.0, 0.0), Point2::new(3.0, 0.0)],
        &Bounds::new(Point2::new(0.0, -1.0), Point2::new(4.0, 1.0)).unwrap(),
    )
    .unwrap()
}

pub fn random_layout(seed: u64, targets: usize) -> Layout {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pt = || Point2::new(rng.random::<f64>(), rng.random::<f64>());
    Layout::new(format!("r{seed}"), pt(), (0..targets).map(|_| pt()).collect()).unwrap()
}
