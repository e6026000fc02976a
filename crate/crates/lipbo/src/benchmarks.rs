//! Synthetic benchmark registry. All functions follow the maximization
//! convention (classical minimization forms are negated), so absolute error
//! is always `ref_optimum - best_found >= 0`.
//!
//! Closed forms and domains follow the standard global-optimization
//! compendium; reference optima were re-derived numerically (dense scan plus
//! local refinement) rather than copied, and are audited by
//! [`reference_optima_audit`].

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::{BoxDomain, Point};
use crate::error::{Error, Result};

/// Steepness of the Michalewicz ridges (the standard choice).
const MICHALEWICZ_M: i32 = 10;

#[derive(Clone)]
enum EvalFn {
    Branin,
    Camel,
    Goldstein,
    Michalewicz,
    Hartmann3,
    Hartmann6,
    Rosenbrock,
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

/// A registered benchmark: box domain, maximization-convention evaluator and
/// audited reference optimum.
#[derive(Clone)]
pub struct BenchmarkFn {
    pub name: String,
    pub dim: usize,
    pub bounds: BoxDomain,
    /// Best achievable value (maximization convention).
    pub ref_optimum: f64,
    /// Report quantile error bands on a log axis for this function.
    pub log_scale_error: bool,
    eval: EvalFn,
}

impl std::fmt::Debug for BenchmarkFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BenchmarkFn")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("ref_optimum", &self.ref_optimum)
            .finish()
    }
}

pub const REGISTRY: [&str; 12] = [
    "branin-2",
    "camel-2",
    "goldstein-2",
    "michalewicz-2",
    "michalewicz-5",
    "michalewicz-10",
    "hartmann-3",
    "hartmann-6",
    "rosenbrock-2",
    "rosenbrock-3",
    "rosenbrock-4",
    "rosenbrock-5",
];

/// Look a benchmark up by its registry name.
pub fn lookup(name: &str) -> Result<BenchmarkFn> {
    let unknown = || Error::UnknownBenchmark { name: name.to_string(), known: REGISTRY.join(", ") };
    let mk = |dim: usize, lower: f64, upper: f64, ref_opt: f64, log_scale: bool, eval: EvalFn| {
        Ok(BenchmarkFn {
            name: name.to_string(),
            dim,
            bounds: BoxDomain::new(vec![lower; dim], vec![upper; dim]).expect("static bounds"),
            ref_optimum: ref_opt,
            log_scale_error: log_scale,
            eval,
        })
    };
    match name {
        "branin-2" => Ok(BenchmarkFn {
            name: name.to_string(),
            dim: 2,
            bounds: BoxDomain::new(vec![-5.0, 0.0], vec![10.0, 15.0]).expect("static bounds"),
            ref_optimum: -0.397_887_357_729_738_16,
            log_scale_error: false,
            eval: EvalFn::Branin,
        }),
        "camel-2" => Ok(BenchmarkFn {
            name: name.to_string(),
            dim: 2,
            bounds: BoxDomain::new(vec![-3.0, -2.0], vec![3.0, 2.0]).expect("static bounds"),
            ref_optimum: 1.031_628_453_489_877_4,
            log_scale_error: false,
            eval: EvalFn::Camel,
        }),
        "goldstein-2" => mk(2, -2.0, 2.0, -3.0, true, EvalFn::Goldstein),
        "michalewicz-2" => mk(2, 0.0, std::f64::consts::PI, 1.801_303_410_098_553_2, false, EvalFn::Michalewicz),
        "michalewicz-5" => mk(5, 0.0, std::f64::consts::PI, 4.687_658_179_088_148, false, EvalFn::Michalewicz),
        "michalewicz-10" => mk(10, 0.0, std::f64::consts::PI, 9.660_151_715_641_343, false, EvalFn::Michalewicz),
        "hartmann-3" => mk(3, 0.0, 1.0, 3.862_779_787_332_666, false, EvalFn::Hartmann3),
        "hartmann-6" => mk(6, 0.0, 1.0, 3.322_368_011_415_515, false, EvalFn::Hartmann6),
        "rosenbrock-2" => mk(2, -5.0, 10.0, 0.0, true, EvalFn::Rosenbrock),
        "rosenbrock-3" => mk(3, -5.0, 10.0, 0.0, true, EvalFn::Rosenbrock),
        "rosenbrock-4" => mk(4, -5.0, 10.0, 0.0, true, EvalFn::Rosenbrock),
        "rosenbrock-5" => mk(5, -5.0, 10.0, 0.0, true, EvalFn::Rosenbrock),
        _ => Err(unknown()),
    }
}

impl BenchmarkFn {
    /// A hand-built benchmark, mainly for tests and negative controls.
    pub fn custom<F>(name: &str, bounds: BoxDomain, ref_optimum: f64, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        BenchmarkFn {
            name: name.to_string(),
            dim: bounds.dim(),
            bounds,
            ref_optimum,
            log_scale_error: false,
            eval: EvalFn::Custom(Arc::new(f)),
        }
    }

    /// Evaluate at `x` (maximization convention). Errors outside the box.
    pub fn evaluate(&self, x: &Point) -> Result<f64> {
        if !self.bounds.contains(x) {
            return Err(Error::OutsideBox { point: x.coords().to_vec() });
        }
        Ok(self.evaluate_unchecked(x))
    }

    /// Evaluate without the box check (the harness samples inside the box by
    /// construction).
    pub fn evaluate_unchecked(&self, x: &Point) -> f64 {
        let v = x.coords();
        match &self.eval {
            EvalFn::Branin => -branin(v),
            EvalFn::Camel => -camel(v),
            EvalFn::Goldstein => -goldstein_price(v),
            EvalFn::Michalewicz => -michalewicz(v),
            EvalFn::Hartmann3 => -hartmann(v, &HARTMANN3_A, &HARTMANN3_P),
            EvalFn::Hartmann6 => -hartmann(v, &HARTMANN6_A, &HARTMANN6_P),
            EvalFn::Rosenbrock => -rosenbrock(v),
            EvalFn::Custom(f) => f(v),
        }
    }
}

fn branin(x: &[f64]) -> f64 {
    use std::f64::consts::PI;
    let (x1, x2) = (x[0], x[1]);
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    let inner = x2 - b * x1 * x1 + c * x1 - 6.0;
    inner * inner + 10.0 * (1.0 - t) * x1.cos() + 10.0
}

fn camel(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    (4.0 - 2.1 * x1 * x1 + x1.powi(4) / 3.0) * x1 * x1
        + x1 * x2
        + (-4.0 + 4.0 * x2 * x2) * x2 * x2
}

fn goldstein_price(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    let a = 1.0
        + (x1 + x2 + 1.0).powi(2)
            * (19.0 - 14.0 * x1 + 3.0 * x1 * x1 - 14.0 * x2 + 6.0 * x1 * x2 + 3.0 * x2 * x2);
    let b = 30.0
        + (2.0 * x1 - 3.0 * x2).powi(2)
            * (18.0 - 32.0 * x1 + 12.0 * x1 * x1 + 48.0 * x2 - 36.0 * x1 * x2 + 27.0 * x2 * x2);
    a * b
}

fn michalewicz(x: &[f64]) -> f64 {
    use std::f64::consts::PI;
    -x.iter()
        .enumerate()
        .map(|(j, xi)| {
            let i = (j + 1) as f64;
            xi.sin() * (i * xi * xi / PI).sin().powi(2 * MICHALEWICZ_M)
        })
        .sum::<f64>()
}

fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| {
            let gap = w[1] - w[0] * w[0];
            100.0 * gap * gap + (1.0 - w[0]) * (1.0 - w[0])
        })
        .sum()
}

const HARTMANN_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];

const HARTMANN3_A: [[f64; 3]; 4] =
    [[3.0, 10.0, 30.0], [0.1, 10.0, 35.0], [3.0, 10.0, 30.0], [0.1, 10.0, 35.0]];
const HARTMANN3_P: [[f64; 3]; 4] = [
    [0.3689, 0.1170, 0.2673],
    [0.4699, 0.4387, 0.7470],
    [0.1091, 0.8732, 0.5547],
    [0.0381, 0.5743, 0.8828],
];

const HARTMANN6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HARTMANN6_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

fn hartmann<const D: usize>(x: &[f64], a: &[[f64; D]; 4], p: &[[f64; D]; 4]) -> f64 {
    -(0..4)
        .map(|i| {
            let expo: f64 =
                (0..D).map(|j| a[i][j] * (x[j] - p[i][j]) * (x[j] - p[i][j])).sum();
            HARTMANN_ALPHA[i] * (-expo).exp()
        })
        .sum::<f64>()
}

/// Result of scanning a benchmark against its registered optimum.
#[derive(Debug, Clone)]
pub struct AuditReport {
    pub name: String,
    pub samples: usize,
    /// Best value seen across the scan.
    pub max_found: f64,
    /// ref_optimum - max_found (how much of the optimum the scan recovered).
    pub gap: f64,
    /// A sampled point exceeding ref_optimum beyond tolerance, if any.
    pub violation: Option<(Vec<f64>, f64)>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Scan `n` uniform random points plus a coarse grid and check that nothing
/// beats `ref_optimum` (tolerance 1e-9). Reports the best value found and the
/// remaining gap.
pub fn reference_optima_audit(bench: &BenchmarkFn, n: usize, seed: u64) -> AuditReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_found = f64::NEG_INFINITY;
    let mut violation = None;
    let mut consider = |coords: Vec<f64>, v: f64, max_found: &mut f64| {
        if v > *max_found {
            *max_found = v;
        }
        if v > bench.ref_optimum + 1e-9 && violation.is_none() {
            violation = Some((coords, v));
        }
    };

    for _ in 0..n {
        let p = bench.bounds.sample(&mut rng);
        let v = bench.evaluate_unchecked(&p);
        consider(p.0, v, &mut max_found);
    }

    // Coarse grid scan, capped so the audit stays cheap in high dimension.
    let per_dim = (n as f64).powf(1.0 / bench.dim as f64).floor().max(2.0) as usize;
    let per_dim = per_dim.min(64);
    let mut idx = vec![0usize; bench.dim];
    let total = per_dim.pow(bench.dim.min(6) as u32).min(n);
    for _ in 0..total {
        let coords: Vec<f64> = idx
            .iter()
            .zip(bench.bounds.lower.iter().zip(&bench.bounds.upper))
            .map(|(i, (l, u))| l + (u - l) * (*i as f64 + 0.5) / per_dim as f64)
            .collect();
        let p = Point(coords);
        let v = bench.evaluate_unchecked(&p);
        consider(p.0, v, &mut max_found);
        for d in 0..bench.dim {
            idx[d] += 1;
            if idx[d] < per_dim {
                break;
            }
            idx[d] = 0;
        }
    }

    AuditReport {
        name: bench.name.clone(),
        samples: n + total,
        max_found,
        gap: bench.ref_optimum - max_found,
        violation,
    }
}
