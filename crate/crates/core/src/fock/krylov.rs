//! Lanczos routines for Hermitian sparse matrices: extreme eigenpairs and
//! the action of `exp(τA)` on a vector.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use thiserror::Error;

use super::sparse::Csr;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KrylovError {
    #[error("Lanczos iteration did not converge (residual {0:.3e})")]
    NotConverged(f64),
    #[error("exponential step rejected: error estimate {estimate:.3e} above tolerance after {halvings} halvings")]
    StepRejected { estimate: f64, halvings: u32 },
    #[error("start vector is zero")]
    DegenerateStart,
}

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn orthogonalize(w: &mut [C64], basis: &[Vec<C64>]) {
    for _ in 0..2 {
        for b in basis {
            let h = dot(b, w);
            for (x, y) in w.iter_mut().zip(b) {
                *x -= h * y;
            }
        }
    }
}

struct Lanczos {
    basis: Vec<Vec<C64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// The next basis vector, unnormalized; `None` after breakdown.
    tail: Option<Vec<C64>>,
}

impl Lanczos {
    /// `m` steps of `op` with full reorthogonalization.
    fn run(op: &dyn Fn(&[C64], &mut [C64]), scale: f64, start: &[C64], m: usize) -> Result<Self, KrylovError> {
        let n0 = norm(start);
        if n0 == 0.0 {
            return Err(KrylovError::DegenerateStart);
        }
        let mut v: Vec<C64> = start.iter().map(|x| x / n0).collect();
        let mut l = Lanczos { basis: Vec::with_capacity(m), alpha: Vec::new(), beta: Vec::new(), tail: None };
        let mut w = vec![C64::new(0.0, 0.0); v.len()];
        loop {
            op(&v, &mut w);
            let alpha = dot(&v, &w).re;
            l.basis.push(v);
            l.alpha.push(alpha);
            orthogonalize(&mut w, &l.basis);
            let beta = norm(&w);
            if beta <= 1e-14 * scale || l.basis.len() == start.len() {
                return Ok(l);
            }
            if l.basis.len() == m {
                l.beta.push(beta);
                l.tail = Some(w);
                return Ok(l);
            }
            l.beta.push(beta);
            v = w.iter().map(|x| x / beta).collect();
        }
    }

    fn tridiagonal(&self) -> SymmetricEigen<f64, nalgebra::Dyn> {
        let k = self.alpha.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = self.alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = self.beta[i];
                t[(i + 1, i)] = self.beta[i];
            }
        }
        SymmetricEigen::new(t)
    }

    /// `β_m` coupling to the discarded direction (0 after breakdown).
    fn beta_tail(&self) -> f64 {
        if self.tail.is_some() {
            *self.beta.last().unwrap()
        } else {
            0.0
        }
    }

    fn combine(&self, coeffs: impl Iterator<Item = C64>) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.basis[0].len()];
        for (b, c) in self.basis.iter().zip(coeffs) {
            for (o, x) in out.iter_mut().zip(b) {
                *o += c * x;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<C64>,
    /// `‖A v − λ v‖`.
    pub residual: f64,
}

/// Lowest eigenpair of a Hermitian `a` after lifting the orthonormal vectors
/// in `deflate` above the spectrum. Restarts from the current Ritz vector
/// until `‖A v − λ v‖ ≤ tol · max(1, ‖A‖)`.
pub fn lowest_eigenpair(a: &Csr, start: &[C64], deflate: &[Vec<C64>], tol: f64) -> Result<Eigenpair, KrylovError> {
    let n = a.rows();
    let m = n.min(160);
    let bound = a.norm_bound().max(1.0);
    let shift = 2.0 * bound;
    let op = |x: &[C64], y: &mut [C64]| {
        a.matvec_into(x, y);
        for d in deflate {
            let h = dot(d, x) * shift;
            for (o, di) in y.iter_mut().zip(d) {
                *o += h * di;
            }
        }
    };
    let scale = bound + shift * deflate.len().min(1) as f64;
    let target = tol * bound;
    let mut v = start.to_vec();
    orthogonalize(&mut v, deflate);
    let mut best = f64::INFINITY;
    let mut ay = vec![C64::new(0.0, 0.0); n];
    for _ in 0..60 {
        let l = Lanczos::run(&op, scale, &v, m)?;
        let eig = l.tridiagonal();
        let (k, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .unwrap();
        let s = eig.eigenvectors.column(k);
        let mut y = l.combine(s.iter().map(|x| C64::new(*x, 0.0)));
        let ny = norm(&y);
        y.iter_mut().for_each(|x| *x /= ny);
        op(&y, &mut ay);
        let r: Vec<C64> = ay.iter().zip(&y).map(|(p, q)| p - q * theta).collect();
        let residual = norm(&r);
        if residual <= target || l.tail.is_none() {
            return Ok(Eigenpair { value: theta, vector: y, residual });
        }
        best = best.min(residual);
        v = y;
    }
    Err(KrylovError::NotConverged(best))
}

/// `exp(τ·A)·v` for Hermitian `A`, by Lanczos on sub-steps chosen so the
/// accumulated error estimate stays below `tol·‖v‖`.
pub fn expm_action(a: &Csr, v: &[C64], tau: C64, tol: f64) -> Result<Vec<C64>, KrylovError> {
    let n = a.rows();
    let m = n.min(48);
    let scale = norm(v);
    if scale == 0.0 {
        return Ok(v.to_vec());
    }
    let mut cur = v.to_vec();
    let mut remaining = 1.0f64;
    let mut frac = 1.0f64;
    while remaining > 0.0 {
        let beta0 = norm(&cur);
        let l = Lanczos::run(&|x: &[C64], y: &mut [C64]| a.matvec_into(x, y), a.norm_bound().max(1.0), &cur, m)?;
        let eig = l.tridiagonal();
        let first_row: Vec<f64> = (0..eig.eigenvalues.len()).map(|j| eig.eigenvectors[(0, j)]).collect();
        let mut halvings = 0;
        frac = frac.min(remaining);
        loop {
            let step = tau * frac;
            let w: Vec<C64> = eig
                .eigenvalues
                .iter()
                .zip(&first_row)
                .map(|(lam, s0)| (step * lam).exp() * s0)
                .collect();
            let y = &eig.eigenvectors.map(|x| C64::new(x, 0.0)) * DVector::from_vec(w);
            let est = beta0 * l.beta_tail() * y[y.len() - 1].norm();
            if est <= tol * scale * frac {
                let mut next = l.combine(y.iter().copied());
                next.iter_mut().for_each(|x| *x *= beta0);
                cur = next;
                remaining -= frac;
                if remaining < 1e-15 {
                    remaining = 0.0;
                }
                if halvings == 0 {
                    frac = (frac * 2.0).min(1.0);
                }
                break;
            }
            halvings += 1;
            if halvings > 50 {
                return Err(KrylovError::StepRejected { estimate: est, halvings });
            }
            frac /= 2.0;
        }
    }
    Ok(cur)
}

/// Dense Hermitian eigendecomposition, ascending eigenvalues.
pub fn dense_hermitian_eigen(a: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(a.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// `exp(τ·A)·v` by dense eigendecomposition; the oracle for small spaces.
pub fn dense_expm_action(a: &DMatrix<C64>, v: &[C64], tau: C64) -> Vec<C64> {
    let (vals, u) = dense_hermitian_eigen(a);
    let x = u.adjoint() * DVector::from_column_slice(v);
    let y = DVector::from_iterator(vals.len(), vals.iter().zip(x.iter()).map(|(l, c)| (tau * l).exp() * c));
    (u * y).as_slice().to_vec()
}
