//! Lipschitz machinery: pointwise envelopes implied by past observations and
//! a constant L, the pairwise-slope under-estimate of L, the growing
//! over-estimate, and the pruning predicate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::domain::{BoxDomain, ObservationHistory, Point};
use crate::error::{Error, Result};

/// Pairs closer than this are excluded from slope estimates (duplicate points
/// would contribute an infinite ratio under numerical noise).
pub const MIN_PAIR_DISTANCE: f64 = 1e-12;

/// How the current Lipschitz constant is obtained.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum LipschitzMode {
    /// Externally supplied constant, trusted as an over-estimate.
    Known(f64),
    /// kappa * t * L_lb, the growing over-estimate.
    Growing { kappa: f64 },
    /// Constant estimated offline from dense random sampling.
    OfflineTrue(f64),
}

/// Current L estimate plus the bookkeeping needed to grow it.
#[derive(Debug, Clone)]
pub struct LipschitzState {
    mode: LipschitzMode,
    estimator: SlopeEstimator,
    iteration: usize,
    current: f64,
}

impl LipschitzState {
    pub fn new(mode: LipschitzMode) -> Self {
        let current = match mode {
            LipschitzMode::Known(l) | LipschitzMode::OfflineTrue(l) => l,
            LipschitzMode::Growing { .. } => 0.0,
        };
        LipschitzState { mode, estimator: SlopeEstimator::new(), iteration: 0, current }
    }

    pub fn mode(&self) -> LipschitzMode {
        self.mode
    }

    /// Feed one new observation; `iteration` becomes the number of points seen.
    pub fn observe(&mut self, point: &Point, value: f64) {
        self.estimator.observe(point, value);
        self.iteration = self.estimator.len();
        if let LipschitzMode::Growing { kappa } = self.mode {
            let grown = growing_l(self.iteration, self.estimator.l_lb(), kappa);
            // Nondecreasing along a run by construction; keep the max anyway
            // so the invariant survives any future mode extension.
            self.current = self.current.max(grown);
        }
    }

    pub fn current(&self) -> f64 {
        self.current
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn l_lb(&self) -> f64 {
        self.estimator.l_lb()
    }

    pub fn degenerate_pairs(&self) -> bool {
        self.estimator.degenerate()
    }
}

/// Online maximum pairwise slope: O(t) per new point, identical to the batch
/// O(t^2) definition.
#[derive(Debug, Clone, Default)]
pub struct SlopeEstimator {
    points: Vec<Point>,
    values: Vec<f64>,
    l_lb: f64,
    degenerate: bool,
}

impl SlopeEstimator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn observe(&mut self, point: &Point, value: f64) {
        for (p, v) in self.points.iter().zip(&self.values) {
            let d = p.dist(point);
            if d < MIN_PAIR_DISTANCE {
                self.degenerate = true;
                continue;
            }
            let slope = (v - value).abs() / d;
            if slope > self.l_lb {
                self.l_lb = slope;
            }
        }
        self.points.push(point.clone());
        self.values.push(value);
    }

    pub fn l_lb(&self) -> f64 {
        self.l_lb
    }

    pub fn degenerate(&self) -> bool {
        self.degenerate
    }
}

/// Lower/upper bounds on f at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeValues {
    pub lower: f64,
    pub upper: f64,
}

impl EnvelopeValues {
    /// The no-information envelope; turns every mixed acquisition back into
    /// its base form.
    pub fn unbounded() -> Self {
        EnvelopeValues { lower: f64::NEG_INFINITY, upper: f64::INFINITY }
    }
}

/// Envelope at `x` from the history under constant `L`:
/// lower = max_i (y_i - L d(x, x_i)), upper = min_i (y_i + L d(x, x_i)).
pub fn envelope(history: &ObservationHistory, l: f64, x: &Point) -> Result<EnvelopeValues> {
    if history.is_empty() {
        return Err(Error::EmptyHistory);
    }
    if l < 0.0 {
        return Err(Error::InvalidArgument("Lipschitz constant must be >= 0".into()));
    }
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for (p, y) in history.points().iter().zip(history.values()) {
        let slack = l * p.dist(x);
        lower = lower.max(y - slack);
        upper = upper.min(y + slack);
    }
    Ok(EnvelopeValues { lower, upper })
}

/// A point whose upper bound cannot beat the incumbent is pruned.
pub fn is_pruned(env: EnvelopeValues, y_star: f64) -> bool {
    env.upper <= y_star
}

/// Batch maximum pairwise slope over the history.
pub fn estimate_l_lb(history: &ObservationHistory) -> Result<(f64, bool)> {
    if history.len() < 2 {
        return Err(Error::InvalidArgument("L_lb needs >= 2 observations".into()));
    }
    let mut est = SlopeEstimator::new();
    for (p, y) in history.points().iter().zip(history.values()) {
        est.observe(p, *y);
    }
    Ok((est.l_lb(), est.degenerate()))
}

/// Growing over-estimate kappa * t * L_lb.
pub fn growing_l(t: usize, l_lb: f64, kappa: f64) -> f64 {
    debug_assert!(t >= 1);
    debug_assert!(kappa > 0.0);
    debug_assert!(l_lb >= 0.0);
    kappa * t as f64 * l_lb
}

/// Offline estimate of the true constant: pairwise slopes over `n` uniform
/// random evaluations in the box. Deterministic given `seed`.
pub fn estimate_true_l<F>(f: F, bounds: &BoxDomain, n: usize, seed: u64) -> f64
where
    F: Fn(&Point) -> f64 + Sync,
{
    assert!(n >= 2, "need at least two samples");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Point> = (0..n).map(|_| bounds.sample(&mut rng)).collect();
    let vals: Vec<f64> = pts.par_iter().map(|p| f(p)).collect();
    let dim = bounds.dim();
    let min_d2 = MIN_PAIR_DISTANCE * MIN_PAIR_DISTANCE;
    // O(n^2) pairs; parallel over the anchor index, comparing squared slopes
    // so the hot loop has no sqrt or division.
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best2 = 0.0f64;
            let pi = pts[i].coords();
            let yi = vals[i];
            for j in (i + 1)..n {
                let pj = pts[j].coords();
                let mut d2 = 0.0;
                for k in 0..dim {
                    let dd = pi[k] - pj[k];
                    d2 += dd * dd;
                }
                if d2 < min_d2 {
                    continue;
                }
                let dy = yi - vals[j];
                if dy * dy > best2 * d2 {
                    best2 = dy * dy / d2;
                }
            }
            best2
        })
        .reduce(|| 0.0, f64::max)
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn history_1d(pairs: &[(f64, f64)]) -> ObservationHistory {
        ObservationHistory::from_pairs(
            pairs.iter().map(|(x, _)| Point(vec![*x])).collect(),
            pairs.iter().map(|(_, y)| *y).collect(),
        )
        .unwrap()
    }

    #[test]
    fn envelope_single_point() {
        let h = history_1d(&[(0.0, 0.0)]);
        let e = envelope(&h, 1.0, &Point(vec![0.5])).unwrap();
        assert_eq!(e.lower, -0.5);
        assert_eq!(e.upper, 0.5);
    }

    #[test]
    fn envelope_collapses_at_observed_point() {
        let h = history_1d(&[(0.0, 1.0), (1.0, 2.0)]);
        // L = 2 covers the true slope 1 of this pair.
        let e = envelope(&h, 2.0, &Point(vec![1.0])).unwrap();
        assert_eq!(e.lower, 2.0);
        assert_eq!(e.upper, 2.0);
    }

    #[test]
    fn envelope_two_point_hand_oracle() {
        // Both bounds enumerated by hand: lower = max(-1, 1), upper = min(1, 3).
        let h = history_1d(&[(0.0, 0.0), (1.0, 2.0)]);
        let e = envelope(&h, 2.0, &Point(vec![0.5])).unwrap();
        assert_eq!(e.lower, 1.0);
        assert_eq!(e.upper, 1.0);
    }

    #[test]
    fn envelope_empty_history_is_error() {
        let h = ObservationHistory::new();
        assert!(envelope(&h, 1.0, &Point(vec![0.0])).is_err());
    }

    #[test]
    fn pruning_boundary_is_inclusive() {
        assert!(is_pruned(EnvelopeValues { lower: 0.0, upper: 0.8 }, 1.0));
        assert!(!is_pruned(EnvelopeValues { lower: 0.0, upper: 1.2 }, 1.0));
        assert!(is_pruned(EnvelopeValues { lower: 0.0, upper: 1.0 }, 1.0));
    }

    #[test]
    fn l_lb_single_pair() {
        let h = history_1d(&[(0.0, 0.0), (1.0, 2.0)]);
        assert_eq!(estimate_l_lb(&h).unwrap().0, 2.0);
    }

    #[test]
    fn l_lb_three_points_enumerated() {
        let h = history_1d(&[(0.0, 0.0), (1.0, 2.0), (2.0, 2.0)]);
        // pairs: |0-2|/1 = 2, |0-2|/2 = 1, |2-2|/1 = 0
        assert_eq!(estimate_l_lb(&h).unwrap().0, 2.0);
    }

    #[test]
    fn l_lb_monotone_in_observations() {
        let mut est = SlopeEstimator::new();
        let mut prev = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..30 {
            est.observe(&Point(vec![rng.random_range(0.0..1.0)]), rng.random_range(-1.0..1.0));
            assert!(est.l_lb() >= prev);
            prev = est.l_lb();
        }
    }

    #[test]
    fn l_lb_duplicate_points_flagged_not_infinite() {
        let mut est = SlopeEstimator::new();
        est.observe(&Point(vec![0.5]), 1.0);
        est.observe(&Point(vec![0.5]), 1.0 + 1e-15);
        assert!(est.degenerate());
        assert!(est.l_lb().is_finite());
        assert_eq!(est.l_lb(), 0.0);
    }

    #[test]
    fn online_estimator_matches_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let pairs: Vec<(f64, f64)> =
            (0..25).map(|_| (rng.random_range(0.0..2.0), rng.random_range(-3.0..3.0))).collect();
        let h = history_1d(&pairs);
        let mut online = SlopeEstimator::new();
        for (x, y) in &pairs {
            online.observe(&Point(vec![*x]), *y);
        }
        assert_eq!(online.l_lb(), estimate_l_lb(&h).unwrap().0);
    }

    #[test]
    fn growing_l_arithmetic() {
        assert_eq!(growing_l(3, 2.0, 10.0), 60.0);
        assert_eq!(growing_l(1, 0.0, 10.0), 0.0);
    }

    #[test]
    fn growing_state_nondecreasing() {
        let mut st = LipschitzState::new(LipschitzMode::Growing { kappa: 10.0 });
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut prev = 0.0;
        for _ in 0..20 {
            st.observe(&Point(vec![rng.random_range(0.0..1.0)]), rng.random_range(-1.0..1.0));
            assert!(st.current() >= prev);
            prev = st.current();
        }
    }

    #[test]
    fn true_l_of_linear_function() {
        let b = BoxDomain::new(vec![0.0], vec![1.0]).unwrap();
        let l = estimate_true_l(|p| 3.0 * p.coords()[0], &b, 100, 7);
        assert!(l >= 2.9 && l <= 3.0 + 1e-9, "estimate {l}");
        let lc = estimate_true_l(|_| 5.0, &b, 100, 7);
        assert_eq!(lc, 0.0);
    }

    #[test]
    fn true_l_monotone_in_samples() {
        let b = BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let f = |p: &Point| (3.0 * p.coords()[0]).sin() + p.coords()[1] * p.coords()[1];
        let l1 = estimate_true_l(f, &b, 50, 99);
        let l2 = estimate_true_l(f, &b, 200, 99);
        // Same seed: the first 50 draws are a prefix of the 200.
        assert!(l2 >= l1);
    }

    #[test]
    fn l_lb_never_exceeds_true_constant() {
        // f(x) = 2x + 1 has exact Lipschitz constant 2.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let pairs: Vec<(f64, f64)> = (0..40)
            .map(|_| {
                let x: f64 = rng.random_range(-5.0..5.0);
                (x, 2.0 * x + 1.0)
            })
            .collect();
        let (l, _) = estimate_l_lb(&history_1d(&pairs)).unwrap();
        assert!(l <= 2.0 + 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        /// With L at least the true constant of an affine function, the
        /// envelope brackets the function everywhere and improvers are never
        /// pruned.
        #[test]
        fn prop_envelope_sound_for_affine(
            slope in -4.0f64..4.0,
            intercept in -2.0f64..2.0,
            l_extra in 0.0f64..3.0,
            seed in 0u64..200,
        ) {
            let f = |x: f64| slope * x + intercept;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pairs: Vec<(f64, f64)> = (0..6)
                .map(|_| { let x = rng.random_range(-2.0..2.0); (x, f(x)) })
                .collect();
            let h = history_1d(&pairs);
            let l = slope.abs() + l_extra;
            let y_star = h.best_value().unwrap();
            for _ in 0..50 {
                let x = rng.random_range(-2.0..2.0);
                let e = envelope(&h, l, &Point(vec![x])).unwrap();
                let fx = f(x);
                prop_assert!(e.lower <= fx + 1e-9);
                prop_assert!(fx <= e.upper + 1e-9);
                if fx > y_star {
                    prop_assert!(!is_pruned(e, y_star));
                }
            }
        }

        /// Adding an observation tightens the envelope pointwise.
        #[test]
        fn prop_envelope_tightens(seed in 0u64..300) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pairs: Vec<(f64, f64)> = (0..5)
                .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let h_small = history_1d(&pairs[..4]);
            let h_full = history_1d(&pairs);
            for _ in 0..30 {
                let x = Point(vec![rng.random_range(-1.5..1.5)]);
                let a = envelope(&h_small, 2.0, &x).unwrap();
                let b = envelope(&h_full, 2.0, &x).unwrap();
                prop_assert!(b.upper <= a.upper + 1e-12);
                prop_assert!(b.lower >= a.lower - 1e-12);
            }
        }
    }
}
