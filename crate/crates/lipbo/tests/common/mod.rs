//! Shared oracles for the integration suites: adaptive quadrature of the
//! truncated improvement integrals and dense grid scans. Everything here is
//! independent of the library's closed forms.

#![allow(dead_code)]

/// Standard normal density (local copy so the oracle does not share code with
/// the implementation under test).
pub fn phi(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Adaptive Simpson quadrature with absolute tolerance `eps`.
pub fn adaptive_simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, eps: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        eps: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth >= 60 || delta.abs() <= 15.0 * eps {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * eps, depth + 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * eps, depth + 1)
        }
    }
    if a >= b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(&f, a, fa, b, fb);
    recurse(&f, a, fa, b, fb, whole, m, fm, eps, 0)
}

/// Oracle for the truncated expected improvement:
/// integral over [lo, hi] of (f - y_star) N(f; mu, sigma^2) df,
/// integrated in standardized coordinates.
pub fn tei_by_quadrature(mu: f64, sigma: f64, y_star: f64, lo: f64, hi: f64) -> f64 {
    let alpha = ((lo - mu) / sigma).max(-40.0);
    let beta = ((hi - mu) / sigma).min(40.0);
    adaptive_simpson(|u| (mu + sigma * u - y_star) * phi(u), alpha, beta, 1e-11)
}

/// Oracle for the truncated probability of improvement:
/// integral over [lo, hi] of N(f; mu, sigma^2) df.
pub fn tpi_by_quadrature(mu: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    let alpha = ((lo - mu) / sigma).max(-40.0);
    let beta = ((hi - mu) / sigma).min(40.0);
    adaptive_simpson(phi, alpha, beta, 1e-11)
}

/// Best value of `f` over a uniform grid with `per_dim` points per dimension.
pub fn grid_maximum<F: Fn(&[f64]) -> f64>(
    f: F,
    lower: &[f64],
    upper: &[f64],
    per_dim: usize,
) -> f64 {
    let d = lower.len();
    let total = per_dim.pow(d as u32);
    let mut best = f64::NEG_INFINITY;
    let mut coords = vec![0.0f64; d];
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        for k in 0..d {
            coords[k] =
                lower[k] + (upper[k] - lower[k]) * idx[k] as f64 / (per_dim - 1) as f64;
        }
        let v = f(&coords);
        if v > best {
            best = v;
        }
        for k in 0..d {
            idx[k] += 1;
            if idx[k] < per_dim {
                break;
            }
            idx[k] = 0;
        }
    }
    best
}

#[cfg(test)]
mod self_checks {
    use super::*;

    #[test]
    fn simpson_integrates_polynomials_exactly() {
        let v = adaptive_simpson(|x| x * x, 0.0, 3.0, 1e-12);
        assert!((v - 9.0).abs() < 1e-10);
    }

    #[test]
    fn gaussian_total_mass() {
        let v = adaptive_simpson(phi, -40.0, 40.0, 1e-12);
        assert!((v - 1.0).abs() < 1e-10);
    }
}
