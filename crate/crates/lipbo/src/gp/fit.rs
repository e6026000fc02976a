//! MAP hyperparameter fitting: multi-start Nelder-Mead over log-parameterized
//! (length scales, signal scale) with Gaussian priors in log space. Noise is
//! held fixed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::ObservationHistory;
use crate::error::{Error, Result};
use crate::stats::sample_standard_normal;

use super::{log_marginal_likelihood, KernelKind, KernelParams, DEFAULT_NOISE_SD};

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub kernel: KernelKind,
    /// Fixed observation-noise standard deviation during the fit.
    pub noise_sd: f64,
    /// Prior mode for each length scale (domain width / 4 in the harness).
    pub length_scale_modes: Vec<f64>,
    /// Prior mode for the signal scale (1.0 after standardization).
    pub signal_scale_mode: f64,
    /// Standard deviation of the log-space Gaussian priors.
    pub prior_log_sd: f64,
    pub n_starts: usize,
    /// Objective-evaluation budget per start.
    pub max_evals_per_start: usize,
    pub seed: u64,
    /// Optional previous fit used as the first start.
    pub warm_start: Option<KernelParams>,
}

impl FitConfig {
    pub fn for_widths(widths: &[f64], seed: u64) -> Self {
        FitConfig {
            kernel: KernelKind::Matern52,
            noise_sd: DEFAULT_NOISE_SD,
            length_scale_modes: widths.iter().map(|w| w / 4.0).collect(),
            signal_scale_mode: 1.0,
            prior_log_sd: 1.0,
            n_starts: 5,
            max_evals_per_start: 120,
            seed,
            warm_start: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub params: KernelParams,
    /// Set when no start improved on the initialization.
    pub no_improvement: bool,
}

/// Penalized objective in theta = [ln l_1..d, ln sigma_0].
fn map_objective(history: &ObservationHistory, cfg: &FitConfig, theta: &[f64]) -> f64 {
    let d = cfg.length_scale_modes.len();
    if theta.iter().any(|t| !t.is_finite() || t.abs() > 25.0) {
        return f64::NEG_INFINITY;
    }
    let params = match KernelParams::with_kernel(
        cfg.kernel,
        theta[..d].iter().map(|t| t.exp()).collect(),
        theta[d].exp(),
        cfg.noise_sd,
    ) {
        Ok(p) => p,
        Err(_) => return f64::NEG_INFINITY,
    };
    let lml = match log_marginal_likelihood(history, &params) {
        Ok(v) if v.is_finite() => v,
        _ => return f64::NEG_INFINITY,
    };
    let s2 = 2.0 * cfg.prior_log_sd * cfg.prior_log_sd;
    let mut prior = 0.0;
    for (t, m) in theta[..d].iter().zip(&cfg.length_scale_modes) {
        let dlt = t - m.ln();
        prior -= dlt * dlt / s2;
    }
    let dls = theta[d] - cfg.signal_scale_mode.ln();
    prior -= dls * dls / s2;
    lml + prior
}

/// Nelder-Mead maximization with a fixed evaluation budget. Returns the best
/// vertex found. Deterministic.
fn nelder_mead<F: FnMut(&[f64]) -> f64>(start: &[f64], step: f64, budget: usize, mut f: F) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        f(x)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(start, &mut evals);
    simplex.push((start.to_vec(), v0));
    for i in 0..n {
        let mut x = start.to_vec();
        x[i] += step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    while evals < budget {
        // descending by value: best first (maximization)
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let worst = simplex[n].clone();
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let reflect: Vec<f64> =
            centroid.iter().zip(&worst.0).map(|(c, w)| c + alpha * (c - w)).collect();
        let fr = eval(&reflect, &mut evals);
        if fr > simplex[0].1 {
            let expand: Vec<f64> =
                centroid.iter().zip(&reflect).map(|(c, r)| c + gamma * (r - c)).collect();
            let fe = eval(&expand, &mut evals);
            simplex[n] = if fe > fr { (expand, fe) } else { (reflect, fr) };
        } else if fr > simplex[n - 1].1 {
            simplex[n] = (reflect, fr);
        } else {
            let contract: Vec<f64> =
                centroid.iter().zip(&worst.0).map(|(c, w)| c + rho * (w - c)).collect();
            let fc = eval(&contract, &mut evals);
            if fc > worst.1 {
                simplex[n] = (contract, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let shrunk: Vec<f64> =
                        best.iter().zip(&entry.0).map(|(b, x)| b + sigma * (x - b)).collect();
                    let fv = eval(&shrunk, &mut evals);
                    *entry = (shrunk, fv);
                }
            }
        }
    }
    simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
    simplex.swap_remove(0)
}

#[cfg(test)]
pub(crate) fn map_objective_for_tests(
    history: &ObservationHistory,
    cfg: &FitConfig,
    theta: &[f64],
) -> f64 {
    map_objective(history, cfg, theta)
}

/// Multi-start MAP fit. The first start is the warm start (or the prior
/// modes); the rest perturb the modes with seeded Gaussian noise.
pub fn fit_hyperparams(history: &ObservationHistory, cfg: &FitConfig) -> Result<FitOutcome> {
    if history.len() < 2 {
        return Err(Error::InvalidArgument("hyperparameter fit needs >= 2 observations".into()));
    }
    let d = cfg.length_scale_modes.len();
    let init_theta: Vec<f64> = match &cfg.warm_start {
        Some(p) if p.length_scales.len() == d => p
            .length_scales
            .iter()
            .map(|l| l.ln())
            .chain(std::iter::once(p.signal_scale.ln()))
            .collect(),
        _ => cfg
            .length_scale_modes
            .iter()
            .map(|m| m.ln())
            .chain(std::iter::once(cfg.signal_scale_mode.ln()))
            .collect(),
    };
    let init_value = map_objective(history, cfg, &init_theta);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best = (init_theta.clone(), init_value);
    for s in 0..cfg.n_starts {
        let start: Vec<f64> = if s == 0 {
            init_theta.clone()
        } else {
            let mut t: Vec<f64> = cfg.length_scale_modes.iter().map(|m| m.ln()).collect();
            t.push(cfg.signal_scale_mode.ln());
            for v in t.iter_mut() {
                *v += 0.8 * sample_standard_normal(&mut rng);
            }
            t
        };
        let (theta, value) =
            nelder_mead(&start, 0.3, cfg.max_evals_per_start, |t| map_objective(history, cfg, t));
        if value > best.1 {
            best = (theta, value);
        }
    }

    let no_improvement = !(best.1 > init_value) || !best.1.is_finite();
    let theta = if no_improvement && init_value.is_finite() { init_theta } else { best.0 };
    let params = KernelParams::with_kernel(
        cfg.kernel,
        theta[..d].iter().map(|t| t.exp()).collect(),
        theta[d].exp(),
        cfg.noise_sd,
    )?;
    Ok(FitOutcome { params, no_improvement })
}
