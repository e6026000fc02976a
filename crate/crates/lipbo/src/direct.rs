//! DIRECT (DIviding RECTangles) maximization over a box domain, plus a
//! seeded random-candidate fallback. The search runs on the unit cube and
//! maps probes affinely into the box. Division levels are kept as integers,
//! so side lengths stay exactly on the 3^-k ladder.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::{BoxDomain, Point};

/// Finite stand-in for rejected (-inf) probes so hull arithmetic stays NaN-free.
const NEG_SENTINEL: f64 = -f64::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectParams {
    /// Epsilon of the potentially-optimal improvement condition.
    pub epsilon: f64,
}

impl Default for DirectParams {
    fn default() -> Self {
        DirectParams { epsilon: 1e-4 }
    }
}

/// One hyper-rectangle of the partition, in unit-cube coordinates.
#[derive(Debug, Clone)]
pub struct Rectangle {
    center: Vec<f64>,
    /// Per-dimension division level k; the side length is 3^-k.
    levels: Vec<u32>,
    /// Objective at the center (NEG_SENTINEL encodes a rejected probe).
    value: f64,
}

impl Rectangle {
    pub fn root(dim: usize, value: f64) -> Self {
        Rectangle { center: vec![0.5; dim], levels: vec![0; dim], value }
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn side_lengths(&self) -> Vec<f64> {
        self.levels.iter().map(|k| 3.0_f64.powi(-(*k as i32))).collect()
    }

    /// Center-to-vertex distance, the size used for rectangle selection.
    pub fn size(&self) -> f64 {
        0.5 * self.side_lengths().iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    pub fn volume(&self) -> f64 {
        self.side_lengths().iter().product()
    }
}

/// Indices of rectangles that are potentially optimal: on the upper-right
/// convex hull of (size, value) and able to beat `f_best + epsilon |f_best|`
/// for some slope K > 0.
pub fn potentially_optimal(rects: &[Rectangle], f_best: f64, epsilon: f64) -> Vec<usize> {
    assert!(!rects.is_empty());
    // Best rectangle per distinct size, lowest index winning ties.
    let mut by_size: Vec<(f64, usize)> = Vec::new();
    for (i, r) in rects.iter().enumerate() {
        let s = r.size();
        match by_size.iter_mut().find(|(sz, _)| (*sz - s).abs() <= 1e-12 * s.max(1e-300)) {
            Some(entry) => {
                if r.value > rects[entry.1].value {
                    entry.1 = i;
                }
            }
            None => by_size.push((s, i)),
        }
    }
    by_size.sort_by(|a, b| a.0.total_cmp(&b.0));

    let threshold = if f_best.is_finite() && f_best != NEG_SENTINEL {
        f_best + epsilon * f_best.abs()
    } else {
        f64::NEG_INFINITY
    };

    let mut out = Vec::new();
    for (j, &(d_j, idx_j)) in by_size.iter().enumerate() {
        let f_j = rects[idx_j].value;
        // K must dominate every smaller size and stay below what larger
        // sizes permit.
        let mut k_min = 0.0f64;
        for &(d_i, idx_i) in &by_size[..j] {
            k_min = k_min.max((rects[idx_i].value - f_j) / (d_j - d_i));
        }
        let mut k_max = f64::INFINITY;
        for &(d_i, idx_i) in &by_size[j + 1..] {
            k_max = k_max.min((rects[idx_i].value - f_j) / (d_j - d_i));
        }
        if k_min > k_max {
            continue;
        }
        let beats_threshold = if k_max.is_infinite() {
            true
        } else {
            f_j + k_max * d_j >= threshold
        };
        if beats_threshold {
            out.push(idx_j);
        }
    }
    out.sort_unstable();
    out
}

/// Split a rectangle along its longest sides, evaluating the two new centers
/// per split dimension. Dimensions with better probe values are divided
/// first, so they end up in the larger children. Returns the replacement
/// rectangles (children plus the shrunk parent); `evals` is decremented as
/// probes are spent and splitting stops early when it runs out.
pub fn trisect<F: FnMut(&[f64]) -> f64>(
    rect: &Rectangle,
    mut objective: F,
    evals_left: &mut usize,
) -> Vec<Rectangle> {
    let min_level = *rect.levels.iter().min().expect("nonempty levels");
    let long_dims: Vec<usize> =
        (0..rect.levels.len()).filter(|&j| rect.levels[j] == min_level).collect();
    let delta = 3.0_f64.powi(-(min_level as i32 + 1));

    // Probe c +/- delta e_j for as many long dimensions as the budget allows.
    let mut probes: Vec<(usize, (Vec<f64>, f64), (Vec<f64>, f64))> = Vec::new();
    for &j in &long_dims {
        if *evals_left < 2 {
            break;
        }
        let mut plus = rect.center.to_vec();
        plus[j] += delta;
        let mut minus = rect.center.to_vec();
        minus[j] -= delta;
        let v_plus = sanitize(objective(&plus));
        let v_minus = sanitize(objective(&minus));
        *evals_left -= 2;
        probes.push((j, (plus, v_plus), (minus, v_minus)));
    }
    if probes.is_empty() {
        return vec![rect.clone()];
    }
    // Best probe first; ties keep the lower dimension index (stable sort).
    probes.sort_by(|a, b| {
        let wa = a.1 .1.max(a.2 .1);
        let wb = b.1 .1.max(b.2 .1);
        wb.total_cmp(&wa)
    });

    let mut out = Vec::with_capacity(2 * probes.len() + 1);
    let mut current_levels = rect.levels.clone();
    for (j, (plus, v_plus), (minus, v_minus)) in probes {
        current_levels[j] += 1;
        out.push(Rectangle { center: plus, levels: current_levels.clone(), value: v_plus });
        out.push(Rectangle { center: minus, levels: current_levels.clone(), value: v_minus });
    }
    out.push(Rectangle { center: rect.center.clone(), levels: current_levels, value: rect.value });
    out
}

fn sanitize(v: f64) -> f64 {
    if v.is_finite() { v.max(NEG_SENTINEL) } else { NEG_SENTINEL }
}

/// Maximize `objective` over `box_domain` with at most `budget` evaluations.
/// The first probe is the box center; non-finite objective values are treated
/// as rejected probes rather than errors. Deterministic.
pub fn direct_maximize<F: FnMut(&Point) -> f64>(
    mut objective: F,
    box_domain: &BoxDomain,
    budget: usize,
    params: DirectParams,
) -> (Point, f64) {
    assert!(budget >= 1);
    let mut evals_left = budget;
    let mut eval_unit = |unit: &[f64], evals_left_inner: Option<&mut usize>| {
        if let Some(e) = evals_left_inner {
            *e -= 1;
        }
        objective(&box_domain.from_unit(unit))
    };

    let root_center = vec![0.5; box_domain.dim()];
    let v0 = sanitize(eval_unit(&root_center, Some(&mut evals_left)));
    let mut rects = vec![Rectangle::root(box_domain.dim(), v0)];
    let mut best_idx = 0usize;

    while evals_left >= 2 {
        let f_best = rects[best_idx].value;
        let mut po = potentially_optimal(&rects, f_best, params.epsilon);
        // Splice from the back so earlier indices stay valid.
        po.sort_unstable_by(|a, b| b.cmp(a));
        let mut progressed = false;
        for &idx in &po {
            if evals_left < 2 {
                break;
            }
            let pieces = trisect(&rects[idx], |u| eval_unit(u, None), &mut evals_left);
            if pieces.len() == 1 {
                continue;
            }
            progressed = true;
            rects.splice(idx..idx + 1, pieces);
        }
        if !progressed {
            break;
        }
        best_idx = argmax_value(&rects);
    }

    best_idx = argmax_value(&rects);
    let best = &rects[best_idx];
    let value = if best.value == NEG_SENTINEL { f64::NEG_INFINITY } else { best.value };
    (box_domain.from_unit(best.center()), value)
}

fn argmax_value(rects: &[Rectangle]) -> usize {
    let mut best = 0usize;
    for (i, r) in rects.iter().enumerate() {
        if r.value > rects[best].value {
            best = i;
        }
    }
    best
}

/// Best of `n` uniform random probes. Deterministic given `seed`; for a fixed
/// seed the first n draws are a prefix of any larger n.
pub fn random_candidate_maximize<F: FnMut(&Point) -> f64>(
    mut objective: F,
    box_domain: &BoxDomain,
    n: usize,
    seed: u64,
) -> (Point, f64) {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Point, f64)> = None;
    for _ in 0..n {
        let p = box_domain.sample(&mut rng);
        let v = objective(&p);
        let v = if v.is_finite() { v } else { f64::NEG_INFINITY };
        if best.as_ref().map_or(true, |(_, bv)| v > *bv) {
            best = Some((p, v));
        }
    }
    best.expect("n >= 1")
}
