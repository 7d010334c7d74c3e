use ndarray::{Array2, ArrayView2, Axis};

use crate::scalar::total_cmp;
use crate::Scalar;

const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues (unsorted) and eigenvectors as columns.
pub(crate) fn jacobi_eigen<T: Scalar>(mut a: Array2<T>) -> (Vec<T>, Array2<T>) {
    let n = a.nrows();
    let mut v = Array2::<T>::eye(n);
    let two = T::lit(2.0);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[[i, j]] * a[[i, j]])
            .sum();
        let total: T = a.iter().map(|&x| x * x).sum();
        if !(off > T::epsilon() * T::epsilon() * total) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[[k, p]], a[[k, q]]);
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[[p, k]], a[[q, k]]);
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[[i, i]]).collect(), v)
}

/// Projection onto the first two principal components of the column-centred data.
///
/// Each component is oriented so that its largest-magnitude loading is positive.
/// Missing components (one feature, or rank below two) project to zero.
pub fn pca_project<T: Scalar>(points: ArrayView2<'_, T>) -> Vec<[T; 2]> {
    let (p, f) = points.dim();
    if p == 0 {
        return Vec::new();
    }
    let mean = points.mean_axis(Axis(0)).expect("non-empty");
    let x = &points - &mean;
    // eigenvectors of the smaller of XᵀX (f×f) and XXᵀ (p×p)
    let use_gram = p < f;
    let m = if use_gram {
        x.dot(&x.t())
    } else {
        x.t().dot(&x)
    };
    let (vals, vecs) = jacobi_eigen(m);
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| total_cmp(vals[j], vals[i]).then(i.cmp(&j)));

    let mut loadings: Vec<Vec<T>> = Vec::new();
    for &c in order.iter().take(2) {
        let mut l: Vec<T> = if use_gram {
            let u = vecs.column(c);
            (0..f).map(|k| x.column(k).dot(&u)).collect()
        } else {
            vecs.column(c).to_vec()
        };
        let norm = l.iter().map(|&v| v * v).sum::<T>().sqrt();
        let scale_ref = vals[order[0]].abs().max(T::min_positive_value());
        if !(vals[c] > scale_ref * T::epsilon() * T::from_count(p.max(f))) || !(norm > T::zero()) {
            l = vec![T::zero(); f];
        } else {
            l.iter_mut().for_each(|v| *v /= norm);
            let mut big = 0;
            for k in 1..f {
                if l[k].abs() > l[big].abs() {
                    big = k;
                }
            }
            if l[big] < T::zero() {
                l.iter_mut().for_each(|v| *v = -*v);
            }
        }
        loadings.push(l);
    }
    while loadings.len() < 2 {
        loadings.push(vec![T::zero(); f]);
    }
    x.rows()
        .into_iter()
        .map(|r| {
            let proj = |l: &[T]| r.iter().zip(l).map(|(&a, &b)| a * b).sum::<T>();
            [proj(&loadings[0]), proj(&loadings[1])]
        })
        .collect()
}
