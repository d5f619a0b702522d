//! Linear algebra for the weighted Laplacian pencil `K u = lambda M u`.
//!
//! `K` is a grounded (one node pinned) symmetric band matrix factorized by a
//! band Cholesky; the smallest nonzero eigenvalue of the pencil is found as
//! the largest eigenvalue of the compact operator `P S K^+ S P`, where
//! `S = diag(sqrt(m))` and `P` projects out the constant mode. Lanczos with
//! full reorthogonalization drives the iteration.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

/// Lower band of a symmetric matrix; row `i` stores columns `i - bw ..= i`.
pub(crate) struct Band {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl Band {
    pub(crate) fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw - (i - j))
    }

    /// Adds `v` at `(i, j)` (and implicitly `(j, i)`).
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    /// Replaces row and column `p` by the identity row.
    pub(crate) fn ground(&mut self, p: usize) {
        for j in p.saturating_sub(self.bw)..p {
            let s = self.slot(p, j);
            self.data[s] = 0.0;
        }
        for i in p + 1..(p + self.bw + 1).min(self.n) {
            let s = self.slot(i, p);
            self.data[s] = 0.0;
        }
        let s = self.slot(p, p);
        self.data[s] = 1.0;
    }

    /// In-place Cholesky `A = L L^T`.
    pub(crate) fn factor(mut self) -> Result<Cholesky> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                // entries of rows i and j for columns lo .. j
                let (ri, rj) = (i * w + (bw - (i - lo)), j * w + (bw - (j - lo)));
                let k = j - lo;
                let mut s = self.data[i * w + (bw - (i - j))];
                let dot: f64 = self.data[ri..ri + k].iter().zip(&self.data[rj..rj + k]).map(|(a, b)| a * b).sum();
                s -= dot;
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::Degenerate(format!("stiffness matrix is not positive definite at node {i}")));
                    }
                    self.data[i * w + bw] = s.sqrt();
                } else {
                    self.data[i * w + (bw - (i - j))] = s / self.data[j * w + bw];
                }
            }
        }
        Ok(Cholesky { band: self })
    }
}

pub(crate) struct Cholesky {
    band: Band,
}

impl Cholesky {
    pub(crate) fn solve(&self, b: &mut [f64]) {
        let (n, bw) = (self.band.n, self.band.bw);
        let w = bw + 1;
        let d = &self.band.data;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let row = i * w + (bw - (i - lo));
            let s: f64 = d[row..row + (i - lo)].iter().zip(&b[lo..i]).map(|(a, x)| a * x).sum();
            b[i] = (b[i] - s) / d[i * w + bw];
        }
        for i in (0..n).rev() {
            b[i] /= d[i * w + bw];
            let bi = b[i];
            let lo = i.saturating_sub(bw);
            let row = i * w + (bw - (i - lo));
            for (k, x) in b[lo..i].iter_mut().enumerate() {
                *x -= d[row + k] * bi;
            }
        }
    }
}

/// Largest eigenpair of a symmetric operator by Lanczos with full
/// reorthogonalization.
pub(crate) struct LanczosResult {
    pub theta: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (u, v) in y.iter_mut().zip(x) {
        *u += a * v;
    }
}

pub(crate) fn lanczos_top(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    start: Vec<f64>,
    max_iter: usize,
    tol: f64,
) -> Result<LanczosResult> {
    let n = start.len();
    let norm = dot(&start, &start).sqrt();
    if !(norm > 0.0) {
        return Err(Error::Degenerate("Lanczos start vector vanishes".into()));
    }
    let mut basis: Vec<Vec<f64>> = vec![start.iter().map(|v| v / norm).collect()];
    let (mut alphas, mut betas) = (Vec::new(), Vec::new());
    let max_iter = max_iter.min(n).max(1);
    let mut last = (0.0, f64::INFINITY, Vec::new());
    for k in 0..max_iter {
        let mut w = apply(&basis[k]);
        let a = dot(&w, &basis[k]);
        alphas.push(a);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                axpy(&mut w, -c, q);
            }
        }
        let b = dot(&w, &w).sqrt();
        let m = alphas.len();
        let check = m % 4 == 0 || m == max_iter || b <= 1e-14 * a.abs().max(1e-300);
        if check {
            let mut t = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alphas[i];
                if i + 1 < m {
                    t[(i, i + 1)] = betas[i];
                    t[(i + 1, i)] = betas[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let (idx, &theta) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.total_cmp(y.1))
                .expect("nonempty tridiagonal");
            let y: Vec<f64> = eig.eigenvectors.column(idx).iter().cloned().collect();
            let residual = b * y[m - 1].abs();
            last = (theta, residual, y);
            if residual <= tol * theta.abs() || b <= 1e-14 * theta.abs().max(1e-300) {
                return Ok(finish(&basis, last, k + 1));
            }
        }
        if b == 0.0 {
            break;
        }
        betas.push(b);
        basis.push(w.into_iter().map(|v| v / b).collect());
    }
    if last.2.is_empty() {
        return Err(Error::NoConvergence { iterations: max_iter, residual: f64::INFINITY });
    }
    if last.1 <= 1e-6 * last.0.abs() {
        // budget exhausted but the Ritz value is already accurate to 1e-6
        let it = alphas.len();
        return Ok(finish(&basis, last, it));
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: last.1 })
}

fn finish(basis: &[Vec<f64>], (theta, residual, y): (f64, f64, Vec<f64>), iterations: usize) -> LanczosResult {
    let n = basis[0].len();
    let mut vector = vec![0.0; n];
    for (q, c) in basis.iter().zip(&y) {
        axpy(&mut vector, *c, q);
    }
    LanczosResult { theta, vector, iterations, residual }
}

/// Smallest nonzero eigenvalue of `K u = lambda diag(m) u` by a dense
/// symmetric eigensolve. The correctness reference for the iterative path.
pub(crate) fn dense_smallest_nonzero(k: &DMatrix<f64>, m: &[f64]) -> Result<f64> {
    let n = m.len();
    if m.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Degenerate("dense oracle needs a strictly positive mass".into()));
    }
    let s: Vec<f64> = m.iter().map(|v| v.sqrt()).collect();
    let a = DMatrix::from_fn(n, n, |i, j| k[(i, j)] / (s[i] * s[j]));
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    // the constant mode gives the (numerically) zero eigenvalue
    ev.get(1).copied().ok_or(Error::Empty("need at least two nodes"))
}
