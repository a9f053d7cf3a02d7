//! Fit of the low-dimensional similarity curve `1 / (1 + a t^(2b))`.

use super::ReductionError;

const GRID_POINTS: usize = 300;
const MAX_ITER: usize = 500;

/// Target membership as a function of distance: flat at 1 up to
/// `min_dist`, exponential decay with scale `spread` afterwards.
fn target(t: f64, min_dist: f64, spread: f64) -> f64 {
    if t <= min_dist {
        1.0
    } else {
        libm::exp(-(t - min_dist) / spread)
    }
}

/// `1 / (1 + a t^(2b))`, defined as 1 at `t = 0`.
pub fn curve(t: f64, a: f64, b: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    1.0 / (1.0 + a * libm::pow(t, 2.0 * b))
}

fn sse(a: f64, b: f64, grid: &[(f64, f64)]) -> f64 {
    grid.iter()
        .map(|&(t, y)| {
            let r = curve(t, a, b) - y;
            r * r
        })
        .sum()
}

/// Levenberg-Marquardt least squares of the curve against the target on
/// 300 evenly spaced points of `[0, 3 * spread]`.
pub fn fit_ab(min_dist: f64, spread: f64) -> Result<(f64, f64), ReductionError> {
    if !(min_dist > 0.0 && min_dist < spread && spread.is_finite()) {
        return Err(ReductionError::Fit {
            reason: "require 0 < min_dist < spread",
        });
    }
    let step = 3.0 * spread / (GRID_POINTS - 1) as f64;
    let mut grid = [(0.0, 0.0); GRID_POINTS];
    for (i, g) in grid.iter_mut().enumerate() {
        let t = i as f64 * step;
        *g = (t, target(t, min_dist, spread));
    }

    let (mut a, mut b) = (1.0f64, 1.0f64);
    let mut lambda = 1e-3;
    let mut cost = sse(a, b, &grid);
    for _ in 0..MAX_ITER {
        // Normal equations J^T J delta = -J^T r for the two parameters.
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(t, y) in &grid {
            if t <= 0.0 {
                continue;
            }
            let s = libm::pow(t, 2.0 * b);
            let denom = 1.0 + a * s;
            let f = 1.0 / denom;
            let r = f - y;
            let da = -s / (denom * denom);
            let db = -a * s * 2.0 * libm::log(t) / (denom * denom);
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        let mut improved = false;
        while lambda < 1e12 {
            let (maa, mbb) = (jaa * (1.0 + lambda), jbb * (1.0 + lambda));
            let det = maa * mbb - jab * jab;
            if det.abs() < f64::MIN_POSITIVE {
                lambda *= 10.0;
                continue;
            }
            let step_a = -(mbb * ga - jab * gb) / det;
            let step_b = -(maa * gb - jab * ga) / det;
            let (na, nb) = (a + step_a, b + step_b);
            if na > 0.0 && nb > 0.0 {
                let new_cost = sse(na, nb, &grid);
                if new_cost.is_finite() && new_cost <= cost {
                    let converged = (step_a.abs() <= 1e-12 * (1.0 + a.abs()))
                        && (step_b.abs() <= 1e-12 * (1.0 + b.abs()));
                    let rel = (cost - new_cost) / cost.max(f64::MIN_POSITIVE);
                    a = na;
                    b = nb;
                    cost = new_cost;
                    lambda = (lambda / 10.0).max(1e-12);
                    improved = true;
                    if converged || rel < 1e-15 {
                        return Ok((a, b));
                    }
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            // No downhill step at any damping: a stationary point.
            let grad = libm::sqrt(ga * ga + gb * gb);
            if grad < 1e-8 * (1.0 + cost) {
                return Ok((a, b));
            }
            return Err(ReductionError::Fit {
                reason: "damping exhausted before convergence",
            });
        }
    }
    Err(ReductionError::Fit {
        reason: "iteration limit reached",
    })
}
