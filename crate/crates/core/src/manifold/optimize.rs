use super::fuzzy::FuzzyGraph;
use super::rng::LayoutRng;
use super::{ManifoldError, Result};
use crate::Scalar;

const GRAD_CLIP: f64 = 4.0;
const REPULSION_EPS: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutParams<T> {
    pub a: T,
    pub b: T,
    pub epochs: usize,
    pub learning_rate: T,
    pub negative_samples: usize,
    /// Repulsion strength.
    pub gamma: T,
    pub seed: u64,
}

fn clip<T: Scalar>(v: T) -> T {
    let c = T::lit(GRAD_CLIP);
    v.max(-c).min(c)
}

fn dist_sq<T: Scalar>(p: [T; 2], q: [T; 2]) -> T {
    (p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1])
}

struct Sgd<'a, T> {
    coords: Vec<[T; 2]>,
    params: &'a LayoutParams<T>,
    rng: LayoutRng,
}

impl<T: Scalar> Sgd<'_, T> {
    fn check(&self, epoch: usize, point: usize) -> Result<()> {
        if self.coords[point].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(ManifoldError::NonFinite { epoch, point })
        }
    }

    fn attract(&mut self, i: usize, j: usize, alpha: T, epoch: usize) -> Result<()> {
        let (a, b) = (self.params.a, self.params.b);
        let d2 = dist_sq(self.coords[i], self.coords[j]);
        if d2 > T::zero() {
            let coeff = T::lit(-2.0) * a * b * d2.powf(b - T::one()) / (a * d2.powf(b) + T::one());
            for d in 0..2 {
                let g = clip(coeff * (self.coords[i][d] - self.coords[j][d]));
                self.coords[i][d] += g * alpha;
                self.coords[j][d] -= g * alpha;
            }
        }
        self.check(epoch, i)?;
        self.check(epoch, j)
    }

    fn repel(&mut self, i: usize, skip: Option<usize>, alpha: T, epoch: usize) -> Result<()> {
        let n = self.coords.len();
        let (a, b) = (self.params.a, self.params.b);
        let k = self.rng.index(n);
        if k == i || Some(k) == skip {
            return Ok(());
        }
        let d2 = dist_sq(self.coords[i], self.coords[k]);
        let coeff = if d2 > T::zero() {
            T::lit(2.0) * self.params.gamma * b
                / ((T::lit(REPULSION_EPS) + d2) * (a * d2.powf(b) + T::one()))
        } else {
            T::zero()
        };
        for d in 0..2 {
            let g = if coeff > T::zero() {
                clip(coeff * (self.coords[i][d] - self.coords[k][d]))
            } else {
                T::lit(GRAD_CLIP)
            };
            self.coords[i][d] += g * alpha;
        }
        self.check(epoch, i)
    }
}

/// Stochastic gradient descent on the fuzzy cross-entropy between `graph` and the
/// low-dimensional membership `1/(1 + a·d^{2b})`.
///
/// Each directed edge is sampled with a frequency proportional to its weight; edges
/// weaker than `max_weight / epochs` are never sampled. A sample pulls both endpoints
/// together and pushes the head away from `negative_samples` random points per
/// sample. Points without sampled edges get one round of repulsion per epoch so
/// they do not collapse. The learning rate decays linearly to zero. Single-threaded,
/// so a fixed seed gives bit-identical output.
pub fn optimize_layout<T: Scalar>(
    graph: &FuzzyGraph<T>,
    init: Vec<[T; 2]>,
    params: &LayoutParams<T>,
) -> Result<Vec<[T; 2]>> {
    let n = graph.n_points();
    if init.len() != n {
        return Err(ManifoldError::DimensionMismatch {
            expected: n,
            actual: init.len(),
        });
    }
    if params.epochs == 0 || n < 2 {
        return Ok(init);
    }
    let max_w = graph
        .edges()
        .map(|(_, _, w)| w)
        .fold(T::zero(), |m, w| m.max(w));
    let cutoff = max_w / T::from_count(params.epochs);
    let edges: Vec<(usize, usize, T)> = graph
        .edges()
        .filter(|&(_, _, w)| w > T::zero() && w >= cutoff)
        .collect();
    let eps: Vec<T> = edges.iter().map(|&(_, _, w)| max_w / w).collect();
    let neg = T::from_count(params.negative_samples);
    let eps_neg: Vec<T> = eps.iter().map(|&e| e / neg).collect();
    let mut next = eps.clone();
    let mut next_neg = eps_neg.clone();
    let mut connected = vec![false; n];
    for &(i, j, _) in &edges {
        connected[i] = true;
        connected[j] = true;
    }
    let isolated: Vec<usize> = (0..n).filter(|&i| !connected[i]).collect();

    let mut sgd = Sgd {
        coords: init,
        params,
        rng: LayoutRng::for_optimization(params.seed, n),
    };
    for epoch in 0..params.epochs {
        let alpha =
            params.learning_rate * (T::one() - T::from_count(epoch) / T::from_count(params.epochs));
        let now = T::from_count(epoch);
        for (e, &(i, j, _)) in edges.iter().enumerate() {
            if next[e] > now {
                continue;
            }
            sgd.attract(i, j, alpha, epoch)?;
            next[e] += eps[e];
            if params.negative_samples > 0 {
                let draws = ((now - next_neg[e]) / eps_neg[e])
                    .floor()
                    .to_usize()
                    .unwrap_or(0);
                for _ in 0..draws {
                    sgd.repel(i, Some(j), alpha, epoch)?;
                }
                next_neg[e] += T::from_count(draws) * eps_neg[e];
            }
        }
        for &i in &isolated {
            for _ in 0..params.negative_samples {
                sgd.repel(i, None, alpha, epoch)?;
            }
        }
    }
    Ok(sgd.coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::fuzzy::fuzzy_union;

    fn params(epochs: usize) -> LayoutParams<f64> {
        LayoutParams {
            a: 1.577,
            b: 0.895,
            epochs,
            learning_rate: 1.0,
            negative_samples: 5,
            gamma: 1.0,
            seed: 42,
        }
    }

    #[test]
    fn zero_epochs_returns_init() {
        let g = fuzzy_union(2, &[(0, 1, 1.0)]).unwrap();
        let init = vec![[0.0, 0.0], [3.0, 4.0]];
        assert_eq!(optimize_layout(&g, init.clone(), &params(0)).unwrap(), init);
    }

    #[test]
    fn connected_pair_moves_together_and_stays_finite() {
        let g = fuzzy_union(2, &[(0, 1, 1.0)]).unwrap();
        let out = optimize_layout(&g, vec![[-5.0, 0.0], [5.0, 0.0]], &params(50)).unwrap();
        let d = dist_sq(out[0], out[1]).sqrt();
        assert!(d < 10.0, "{d}");
        assert!(out.iter().flatten().all(|v| v.is_finite()));
    }

    #[test]
    fn edgeless_points_spread_out() {
        let g = fuzzy_union::<f64>(4, &[]).unwrap();
        let init = vec![[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [0.1, 0.1]];
        let out = optimize_layout(&g, init.clone(), &params(20)).unwrap();
        let spread = |c: &[[f64; 2]]| {
            let mut s = 0.0;
            for i in 0..c.len() {
                for j in 0..i {
                    s += dist_sq(c[i], c[j]).sqrt();
                }
            }
            s
        };
        assert!(spread(&out) > spread(&init));
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let g = fuzzy_union(5, &[(0, 1, 1.0), (1, 2, 0.5), (3, 4, 0.8), (2, 3, 0.1)]).unwrap();
        let init: Vec<[f64; 2]> = (0..5).map(|i| [i as f64, (i * i) as f64 / 3.0]).collect();
        let a = optimize_layout(&g, init.clone(), &params(100)).unwrap();
        let b = optimize_layout(&g, init, &params(100)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_start_is_reported() {
        let g = fuzzy_union(2, &[(0, 1, 1.0)]).unwrap();
        let err = optimize_layout(&g, vec![[f64::NAN, 0.0], [1.0, 0.0]], &params(5)).unwrap_err();
        assert!(matches!(err, ManifoldError::NonFinite { point: 0, .. }));
    }

    #[test]
    fn wrong_init_length() {
        let g = fuzzy_union::<f64>(3, &[]).unwrap();
        assert!(optimize_layout(&g, vec![[0.0, 0.0]], &params(1)).is_err());
    }
}
