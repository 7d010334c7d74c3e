use super::{ManifoldError, Result};
use crate::Scalar;

pub const CURVE_POINTS: usize = 300;
pub const CURVE_MAX_ITER: usize = 200;
pub const CURVE_STEP_TOL: f64 = 1e-8;

/// Sample grid `d_i = 3·spread·i/300` for `i = 1..=300` and the target membership
/// `1` below `min_dist`, `exp(−(d − min_dist)/spread)` above.
pub fn curve_targets(min_dist: f64, spread: f64) -> (Vec<f64>, Vec<f64>) {
    (1..=CURVE_POINTS)
        .map(|i| {
            let d = 3.0 * spread * i as f64 / CURVE_POINTS as f64;
            let y = if d < min_dist {
                1.0
            } else {
                (-(d - min_dist) / spread).exp()
            };
            (d, y)
        })
        .unzip()
}

/// Sum of squared residuals of `1/(1 + a·d^{2b})` against the target curve.
pub fn curve_loss(a: f64, b: f64, min_dist: f64, spread: f64) -> f64 {
    let (xs, ys) = curve_targets(min_dist, spread);
    xs.iter()
        .zip(&ys)
        .map(|(&x, &y)| {
            let r = 1.0 / (1.0 + a * x.powf(2.0 * b)) - y;
            r * r
        })
        .sum()
}

/// Least-squares fit of `(a, b)` in the low-dimensional membership curve
/// `1/(1 + a·d^{2b})`, by damped Gauss–Newton starting from `a = b = 1`.
pub fn fit_ab<T: Scalar>(min_dist: T, spread: T) -> Result<(T, T)> {
    let (min_dist, spread) = (min_dist.as_f64(), spread.as_f64());
    if !(spread > 0.0) || !(min_dist >= 0.0) || !spread.is_finite() || !min_dist.is_finite() {
        return Err(ManifoldError::InvalidParameter(format!(
            "curve fit needs spread > 0 and min_dist >= 0, got spread={spread}, min_dist={min_dist}"
        )));
    }
    let (xs, ys) = curve_targets(min_dist, spread);
    let cost = |a: f64, b: f64| -> f64 {
        xs.iter()
            .zip(&ys)
            .map(|(&x, &y)| {
                let r = 1.0 / (1.0 + a * x.powf(2.0 * b)) - y;
                r * r
            })
            .sum()
    };
    let (mut a, mut b) = (1.0f64, 1.0f64);
    let mut current = cost(a, b);
    let mut lambda = 1e-3;
    for _ in 0..CURVE_MAX_ITER {
        // normal equations J^T J δ = −J^T r
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(&ys) {
            let u = x.powf(2.0 * b);
            let den = 1.0 + a * u;
            let r = 1.0 / den - y;
            let da = -u / (den * den);
            let db = -a * u * 2.0 * x.ln() / (den * den);
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        let mut accepted = false;
        while lambda < 1e12 {
            let (m00, m11) = (jaa * (1.0 + lambda), jbb * (1.0 + lambda));
            let det = m00 * m11 - jab * jab;
            if det.abs() < f64::MIN_POSITIVE {
                lambda *= 10.0;
                continue;
            }
            let step_a = -(m11 * ga - jab * gb) / det;
            let step_b = -(m00 * gb - jab * ga) / det;
            let (na, nb) = (a + step_a, b + step_b);
            let trial = if na > 0.0 && nb > 0.0 {
                cost(na, nb)
            } else {
                f64::INFINITY
            };
            if trial <= current {
                a = na;
                b = nb;
                current = trial;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if step_a.hypot(step_b) < CURVE_STEP_TOL {
                    return Ok((T::lit(a), T::lit(b)));
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no descent direction left: the iterate is a stationary point
            return Ok((T::lit(a), T::lit(b)));
        }
    }
    Err(ManifoldError::CurveFit {
        a,
        b,
        iterations: CURVE_MAX_ITER,
    })
}
