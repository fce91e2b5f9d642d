//! Leading eigenpairs of Hermitian positive semi-definite matrices.
//!
//! Small matrices go through a full dense Hermitian decomposition. Above
//! [`EigenOptions::dense_threshold`] a thick-restart Lanczos iteration with
//! full reorthogonalization extracts only the top `k` pairs. The projected
//! matrix is formed explicitly as `V* A V`, so after a restart the kept Ritz
//! vectors and the continuation direction need no special bookkeeping.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HermitianSource;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverPath {
    Dense,
    Lanczos,
}

#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Largest dimension handled by the dense solver.
    pub dense_threshold: usize,
    /// Residual tolerance relative to the spectral norm.
    pub tol: f64,
    pub max_restarts: usize,
    /// Krylov basis size; `None` picks from `k`.
    pub krylov_dim: Option<usize>,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            dense_threshold: 512,
            tol: 1e-8,
            max_restarts: 300,
            krylov_dim: None,
            seed: 0x6b6f_6f70,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    /// `d_0 >= d_1 >= ...`
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors; the largest-magnitude entry of each is real positive.
    pub eigenvectors: Vec<Vec<Complex64>>,
    /// `d_i / (N + 1)`
    pub renormalized: Vec<f64>,
    pub top_k: usize,
    pub dim: usize,
    pub residuals: Vec<f64>,
    pub path: SolverPath,
}

impl EigenResult {
    /// Singular values of the trajectory matrix, `δ_i = sqrt(M d_i)`.
    pub fn singular_values(&self, m_avg: usize) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .map(|&d| (m_avg as f64 * d.max(0.0)).sqrt())
            .collect()
    }
}

pub fn top_eigen<H: HermitianSource + ?Sized>(matrix: &H, k: usize) -> Result<EigenResult> {
    top_eigen_with(matrix, k, &EigenOptions::default())
}

pub fn top_eigen_with<H: HermitianSource + ?Sized>(
    matrix: &H,
    k: usize,
    opts: &EigenOptions,
) -> Result<EigenResult> {
    let dim = matrix.dim();
    if k == 0 || k > dim {
        return Err(invalid(format!(
            "requested {k} eigenpairs of a {dim}x{dim} matrix"
        )));
    }
    let a = matrix.dense();
    let (values, vectors, path) = if dim <= opts.dense_threshold {
        let (v, u) = dense_top(&a, k);
        (v, u, SolverPath::Dense)
    } else {
        let (v, u) = lanczos_top(&a, k, opts)?;
        (v, u, SolverPath::Lanczos)
    };

    let mut eigenvectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for (col, &d) in vectors.column_iter().zip(&values) {
        let mut v: DVector<Complex64> = col.into_owned();
        fix_phase(&mut v);
        let r = &*a * &v - &v * Complex64::new(d, 0.0);
        residuals.push(r.norm());
        eigenvectors.push(v.iter().copied().collect());
    }
    let scale = dim as f64;
    Ok(EigenResult {
        renormalized: values.iter().map(|d| d / scale).collect(),
        eigenvalues: values,
        eigenvectors,
        top_k: k,
        dim,
        residuals,
        path,
    })
}

// Largest-magnitude entry made real positive; the first index within 1e-9 of
// the maximum wins so ties resolve the same way every time.
fn fix_phase(v: &mut DVector<Complex64>) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-9))
        .unwrap_or(0);
    let p = v[pivot];
    let rot = p.conj() / p.norm();
    v.iter_mut().for_each(|z| *z *= rot);
    v[pivot] = Complex64::new(v[pivot].norm(), 0.0);
}

fn sorted_eigen(h: DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

fn dense_top(a: &DMatrix<Complex64>, k: usize) -> (Vec<f64>, DMatrix<Complex64>) {
    let (mut values, vectors) = sorted_eigen(a.clone());
    values.truncate(k);
    (values, vectors.columns(0, k).into_owned())
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> DVector<Complex64> {
    let v = DVector::from_fn(dim, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

// Two passes of classical Gram-Schmidt against the basis; returns the norm
// left over.
fn orthogonalize(v: &mut DVector<Complex64>, basis: &[DVector<Complex64>]) -> f64 {
    for _ in 0..2 {
        for b in basis {
            let proj = b.dotc(v);
            v.axpy(-proj, b, Complex64::new(1.0, 0.0));
        }
    }
    v.norm()
}

fn lanczos_top(
    a: &DMatrix<Complex64>,
    k: usize,
    opts: &EigenOptions,
) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let dim = a.nrows();
    let m = opts
        .krylov_dim
        .unwrap_or_else(|| (3 * k).max(k + 48))
        .clamp(k + 2, dim);
    if m >= dim {
        return Ok(dense_top(a, k));
    }
    let keep = (k + (m - k) / 2).min(m - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut basis: Vec<DVector<Complex64>> = Vec::with_capacity(m);
    let mut images: Vec<DVector<Complex64>> = Vec::with_capacity(m);
    let mut next = random_unit(dim, &mut rng);
    let mut best = f64::INFINITY;

    for _restart in 0..opts.max_restarts {
        while basis.len() < m {
            let mut v = next.clone();
            let mut norm = orthogonalize(&mut v, &basis);
            // Krylov space exhausted: continue from a fresh random direction.
            while norm < 1e-10 {
                v = random_unit(dim, &mut rng);
                norm = orthogonalize(&mut v, &basis);
            }
            v /= Complex64::new(norm, 0.0);
            let w = a * &v;
            next = w.clone();
            basis.push(v);
            images.push(w);
        }

        let vmat = DMatrix::from_columns(&basis);
        let wmat = DMatrix::from_columns(&images);
        let mut h = vmat.adjoint() * &wmat;
        h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
        let (theta, s) = sorted_eigen(h.clone());
        let anorm = theta
            .iter()
            .fold(0.0_f64, |acc, t| acc.max(t.abs()))
            .max(f64::MIN_POSITIVE);

        let s_keep = s.columns(0, keep).into_owned();
        let y = &vmat * &s_keep;
        let ay = &wmat * &s_keep;
        let mut worst: f64 = 0.0;
        for (i, &t) in theta.iter().enumerate().take(k) {
            let r = ay.column(i) - y.column(i) * Complex64::new(t, 0.0);
            worst = worst.max(r.norm());
        }
        best = best.min(worst / anorm);
        if worst <= opts.tol * anorm {
            return Ok((theta[..k].to_vec(), y.columns(0, k).into_owned()));
        }

        // The Krylov residual W - V H is rank one in exact arithmetic; its
        // dominant column continues the expansion after the restart.
        let resid = &wmat - &vmat * &h;
        let col = (0..m)
            .max_by(|&i, &j| resid.column(i).norm().total_cmp(&resid.column(j).norm()))
            .unwrap_or(m - 1);
        next = resid.column(col).into_owned();

        basis = (0..keep).map(|i| y.column(i).into_owned()).collect();
        images = (0..keep).map(|i| ay.column(i).into_owned()).collect();
    }
    Err(Error::NoConvergence {
        iterations: opts.max_restarts,
        residual: best,
    })
}
