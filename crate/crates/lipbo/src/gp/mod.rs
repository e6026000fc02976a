//! Exact Gaussian-process regression: ARD kernels, Cholesky-factorized
//! posterior with incremental updates, predictive moments, and joint sampling
//! at finite candidate sets.

mod chol;
mod fit;

pub use chol::CholFactor;
pub use fit::{fit_hyperparams, FitConfig, FitOutcome};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::{ObservationHistory, Point};
use crate::error::{Error, Result};
use crate::stats::sample_standard_normal;

/// Kernel family. The squared exponential exists for the finite-decision-space
/// regret experiments; everything else uses Matérn-5/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum KernelKind {
    #[default]
    Matern52,
    SquaredExponential,
}

/// ARD kernel hyperparameters plus observation noise.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KernelParams {
    pub kernel: KernelKind,
    /// One positive length scale per input dimension.
    pub length_scales: Vec<f64>,
    /// Signal scale sigma_0 (prior standard deviation).
    pub signal_scale: f64,
    /// Observation noise standard deviation (>= 0; the default keeps a small
    /// jitter so factorizations stay stable in the noiseless setting).
    pub noise_sd: f64,
}

/// Default noise variance 1e-6.
pub const DEFAULT_NOISE_SD: f64 = 1e-3;

impl KernelParams {
    pub fn new(length_scales: Vec<f64>, signal_scale: f64, noise_sd: f64) -> Result<Self> {
        Self::with_kernel(KernelKind::Matern52, length_scales, signal_scale, noise_sd)
    }

    pub fn with_kernel(
        kernel: KernelKind,
        length_scales: Vec<f64>,
        signal_scale: f64,
        noise_sd: f64,
    ) -> Result<Self> {
        if length_scales.iter().any(|l| !l.is_finite() || *l <= 0.0) {
            return Err(Error::InvalidArgument("length scales must be positive".into()));
        }
        if !signal_scale.is_finite() || signal_scale <= 0.0 {
            return Err(Error::InvalidArgument("signal scale must be positive".into()));
        }
        if !noise_sd.is_finite() || noise_sd < 0.0 {
            return Err(Error::InvalidArgument("noise sd must be nonnegative".into()));
        }
        Ok(KernelParams { kernel, length_scales, signal_scale, noise_sd })
    }

    pub fn dim(&self) -> usize {
        self.length_scales.len()
    }
}

/// Kernel value k(a, b).
pub fn kernel_eval(params: &KernelParams, a: &Point, b: &Point) -> Result<f64> {
    if a.dim() != params.dim() {
        return Err(Error::DimensionMismatch { expected: params.dim(), got: a.dim() });
    }
    if b.dim() != params.dim() {
        return Err(Error::DimensionMismatch { expected: params.dim(), got: b.dim() });
    }
    if a.coords().iter().chain(b.coords()).any(|c| !c.is_finite()) {
        return Err(Error::NonFinite { context: "kernel input" });
    }
    let r2: f64 = a
        .coords()
        .iter()
        .zip(b.coords())
        .zip(&params.length_scales)
        .map(|((x, y), l)| {
            let d = (x - y) / l;
            d * d
        })
        .sum();
    let s2 = params.signal_scale * params.signal_scale;
    Ok(match params.kernel {
        KernelKind::Matern52 => {
            let r = r2.sqrt();
            let sqrt5_r = 5.0_f64.sqrt() * r;
            s2 * (-sqrt5_r).exp() * (1.0 + sqrt5_r + 5.0 * r2 / 3.0)
        }
        KernelKind::SquaredExponential => s2 * (-0.5 * r2).exp(),
    })
}

/// Predictive mean and standard deviation at a query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictiveMoments {
    pub mu: f64,
    pub sigma: f64,
}

/// Factorized GP posterior. Immutable after construction; updates return a
/// new posterior.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    history: ObservationHistory,
    params: KernelParams,
    chol: CholFactor,
    alpha: Vec<f64>,
}

/// Gram matrix K + sigma^2 I for the history under `params`.
fn gram(history: &ObservationHistory, params: &KernelParams) -> Result<DMatrix<f64>> {
    let t = history.len();
    let pts = history.points();
    let noise_var = params.noise_sd * params.noise_sd;
    let mut k = DMatrix::zeros(t, t);
    for i in 0..t {
        for j in 0..=i {
            let v = kernel_eval(params, &pts[i], &pts[j])?;
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, i)] += noise_var;
    }
    Ok(k)
}

/// Log marginal likelihood of the history under the kernel:
/// -1/2 y^T (K + s^2 I)^-1 y - 1/2 log det(K + s^2 I) - (t/2) log 2pi.
pub fn log_marginal_likelihood(history: &ObservationHistory, params: &KernelParams) -> Result<f64> {
    if history.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let t = history.len() as f64;
    let k = gram(history, params)?;
    let chol = CholFactor::factor(&k)?;
    let alpha = chol.solve(history.values());
    let quad: f64 = history.values().iter().zip(&alpha).map(|(y, a)| y * a).sum();
    Ok(-0.5 * quad - chol.half_log_det() - 0.5 * t * (2.0 * std::f64::consts::PI).ln())
}

impl GpPosterior {
    /// Build from scratch: O(t^3). An empty history yields the prior GP(0, k).
    pub fn build(history: ObservationHistory, params: KernelParams) -> Result<Self> {
        if history.is_empty() {
            return Ok(GpPosterior { history, params, chol: CholFactor::empty(), alpha: Vec::new() });
        }
        let k = gram(&history, &params)?;
        let chol = CholFactor::factor(&k)?;
        let alpha = chol.solve(history.values());
        Ok(GpPosterior { history, params, chol, alpha })
    }

    pub fn history(&self) -> &ObservationHistory {
        &self.history
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn chol(&self) -> &CholFactor {
        &self.chol
    }

    fn cross_kernel(&self, x: &Point) -> Result<Vec<f64>> {
        self.history.points().iter().map(|p| kernel_eval(&self.params, x, p)).collect()
    }

    /// Posterior moments at `x`. Falls back to the prior (0, sigma_0) when the
    /// history is empty.
    pub fn predict(&self, x: &Point) -> Result<PredictiveMoments> {
        if self.history.is_empty() {
            return Ok(PredictiveMoments { mu: 0.0, sigma: self.params.signal_scale });
        }
        let k_vec = self.cross_kernel(x)?;
        let mu: f64 = k_vec.iter().zip(&self.alpha).map(|(k, a)| k * a).sum();
        let v = self.chol.forward(&k_vec);
        let prior = kernel_eval(&self.params, x, x)?;
        let mut var = prior - v.iter().map(|c| c * c).sum::<f64>();
        if var < 0.0 {
            if var >= -1e-10 {
                var = 0.0;
            } else {
                return Err(Error::NonFinite { context: "negative predictive variance" });
            }
        }
        Ok(PredictiveMoments { mu, sigma: var.sqrt() })
    }

    /// Absorb one observation in O(t^2). Falls back to a full rebuild if the
    /// incremental factor update is numerically rejected.
    pub fn update(&self, x: Point, y: f64) -> Result<GpPosterior> {
        let mut history = self.history.clone();
        history.push(x, y)?;
        if self.history.is_empty() {
            return GpPosterior::build(history, self.params.clone());
        }
        let new = history.points().last().expect("just pushed");
        let cross = self.cross_kernel(new)?;
        let diag = kernel_eval(&self.params, new, new)? + self.params.noise_sd * self.params.noise_sd;
        let mut chol = self.chol.clone();
        match chol.extend(&cross, diag) {
            Ok(()) => {
                let alpha = chol.solve(history.values());
                Ok(GpPosterior { history, params: self.params.clone(), chol, alpha })
            }
            Err(_) => GpPosterior::build(history, self.params.clone()),
        }
    }

    /// One joint draw from the posterior at `candidates`. Exactly duplicated
    /// candidates receive exactly equal values. Deterministic given `seed`.
    pub fn sample_joint(&self, candidates: &[Point], seed: u64) -> Result<Vec<f64>> {
        if candidates.is_empty() {
            return Err(Error::InvalidArgument("sample_joint needs candidates".into()));
        }
        // Deduplicate coordinate-identical candidates so perfectly correlated
        // coordinates stay identical in the draw despite jitter.
        let mut unique: Vec<&Point> = Vec::new();
        let mut index_of = Vec::with_capacity(candidates.len());
        for c in candidates {
            match unique.iter().position(|u| u.coords() == c.coords()) {
                Some(i) => index_of.push(i),
                None => {
                    unique.push(c);
                    index_of.push(unique.len() - 1);
                }
            }
        }
        let m = unique.len();
        let mut mean = Vec::with_capacity(m);
        let mut cov = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = kernel_eval(&self.params, unique[i], unique[j])?;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        if self.history.is_empty() {
            mean.resize(m, 0.0);
        } else {
            // cov -= V^T V with V_i = L^-1 k_t(c_i)
            let mut v_cols = Vec::with_capacity(m);
            for c in &unique {
                let k_vec = self.cross_kernel(c)?;
                mean.push(k_vec.iter().zip(&self.alpha).map(|(k, a)| k * a).sum());
                v_cols.push(self.chol.forward(&k_vec));
            }
            for i in 0..m {
                for j in 0..=i {
                    let dot: f64 = v_cols[i].iter().zip(&v_cols[j]).map(|(a, b)| a * b).sum();
                    cov[(i, j)] -= dot;
                    cov[(j, i)] = cov[(i, j)];
                }
            }
        }
        let chol = CholFactor::factor(&cov)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<f64> = (0..m).map(|_| sample_standard_normal(&mut rng)).collect();
        let mut draw = mean;
        for i in 0..m {
            for j in 0..=i {
                draw[i] += chol.lower()[(i, j)] * z[j];
            }
        }
        Ok(index_of.into_iter().map(|i| draw[i]).collect())
    }
}
