//! Solvers for the symmetric interior system `(D - W) v = b`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Gaussian elimination on the dense matrix. Symmetric positive definite, so
/// no pivoting is needed and exact scalars stay exact.
pub(super) fn dense_solve<T: Scalar>(cols: &[Vec<(usize, T)>], diag: &[T], rhs: &[T]) -> Result<Vec<T>> {
    let m = diag.len();
    let mut a = vec![T::zero(); m * m];
    for (i, row) in cols.iter().enumerate() {
        a[i * m + i] = diag[i].clone();
        for (j, w) in row {
            a[i * m + j] = a[i * m + j].clone() - w.clone();
        }
    }
    let mut b = rhs.to_vec();
    for k in 0..m {
        let pivot = a[k * m + k].clone();
        if !(pivot > T::zero()) {
            return Err(Error::Numeric(format!("non-positive pivot at row {k}")));
        }
        let (upper, lower) = a.split_at_mut((k + 1) * m);
        let row_k = &upper[k * m..];
        let bk = b[k].clone();
        let factors: Vec<(usize, T)> = (k + 1..m)
            .filter_map(|i| {
                let f = lower[(i - k - 1) * m + k].clone();
                (!f.is_zero()).then(|| (i, f / pivot.clone()))
            })
            .collect();
        lower.par_chunks_mut(m).enumerate().for_each(|(off, row)| {
            let i = k + 1 + off;
            if let Ok(idx) = factors.binary_search_by_key(&i, |(i, _)| *i) {
                let f = &factors[idx].1;
                for j in k..m {
                    if !row_k[j].is_zero() {
                        row[j] = row[j].clone() - f.clone() * row_k[j].clone();
                    }
                }
            }
        });
        for (i, f) in factors {
            b[i] = b[i].clone() - f * bk.clone();
        }
    }
    let mut x = vec![T::zero(); m];
    for k in (0..m).rev() {
        let mut s = b[k].clone();
        for j in k + 1..m {
            if !a[k * m + j].is_zero() {
                s = s - a[k * m + j].clone() * x[j].clone();
            }
        }
        x[k] = s / a[k * m + k].clone();
    }
    Ok(x)
}

const CHUNK: usize = 1024;

/// Sum in fixed chunks, so the result does not depend on the thread count.
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).fold(T::zero(), |s, (p, q)| s + p.clone() * q.clone()))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(T::zero(), |s, v| s + v)
}

fn apply<T: Scalar>(cols: &[Vec<(usize, T)>], diag: &[T], v: &[T]) -> Vec<T> {
    cols.par_iter()
        .zip(diag.par_iter())
        .enumerate()
        .map(|(i, (row, d))| row.iter().fold(d.clone() * v[i].clone(), |s, (j, w)| s - w.clone() * v[*j].clone()))
        .collect()
}

/// Jacobi-preconditioned conjugate gradients from `v = 0`. Stops once
/// `max_i |b - A v|_i / mass_i <= tol`.
pub(super) fn conjugate_gradient<T: Scalar>(
    cols: &[Vec<(usize, T)>],
    diag: &[T],
    rhs: &[T],
    masses: &[f64],
    tol: f64,
) -> Result<(Vec<T>, usize)> {
    let m = diag.len();
    let converged =
        |res: &[T]| res.iter().zip(masses).all(|(r, w)| r.abs_value().to_f64_lossy() / w <= tol);
    let mut x = vec![T::zero(); m];
    let mut res = rhs.to_vec();
    if converged(&res) {
        return Ok((x, 0));
    }
    let precondition = |r: &[T]| -> Vec<T> { r.par_iter().zip(diag).map(|(a, d)| a.clone() / d.clone()).collect() };
    let mut z = precondition(&res);
    let mut p = z.clone();
    let mut rz = dot(&res, &z);
    let max_iter = 20 * m + 1000;
    for it in 1..=max_iter {
        let ap = apply(cols, diag, &p);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            return Err(Error::Numeric(format!("conjugate gradients lost positivity at iteration {it}")));
        }
        let alpha = rz.clone() / pap;
        x.par_iter_mut().zip(&p).for_each(|(xi, pi)| *xi = xi.clone() + alpha.clone() * pi.clone());
        res.par_iter_mut().zip(&ap).for_each(|(ri, ai)| *ri = ri.clone() - alpha.clone() * ai.clone());
        // Replace the recursive residual periodically to shed drift.
        if it % 50 == 0 {
            let ax = apply(cols, diag, &x);
            res = rhs.iter().zip(ax).map(|(b, a)| b.clone() - a).collect();
        }
        if converged(&res) {
            let ax = apply(cols, diag, &x);
            let true_res: Vec<T> = rhs.iter().zip(ax).map(|(b, a)| b.clone() - a).collect();
            if converged(&true_res) {
                return Ok((x, it));
            }
            res = true_res;
        }
        z = precondition(&res);
        let rz_next = dot(&res, &z);
        let beta = rz_next.clone() / rz;
        rz = rz_next;
        p.par_iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi.clone() + beta.clone() * pi.clone());
    }
    Err(Error::Numeric(format!("conjugate gradients did not converge in {max_iter} iterations")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(m: usize) -> (Vec<Vec<(usize, f64)>>, Vec<f64>, Vec<f64>) {
        // Path Laplacian with both ends tied to the boundary.
        let cols = (0..m)
            .map(|i| {
                let mut c = Vec::new();
                if i > 0 {
                    c.push((i - 1, 1.0));
                }
                if i + 1 < m {
                    c.push((i + 1, 1.0));
                }
                c
            })
            .collect();
        let mut rhs = vec![0.0; m];
        rhs[m - 1] = (m + 1) as f64;
        (cols, vec![2.0; m], rhs)
    }

    #[test]
    fn both_solvers_give_the_linear_profile() {
        let (cols, diag, rhs) = chain(40);
        let direct = dense_solve(&cols, &diag, &rhs).unwrap();
        let (cg, _) = conjugate_gradient(&cols, &diag, &rhs, &vec![1.0; 40], 1e-12).unwrap();
        for i in 0..40 {
            assert!((direct[i] - (i + 1) as f64).abs() < 1e-10);
            assert!((cg[i] - (i + 1) as f64).abs() < 1e-8);
        }
    }
}
