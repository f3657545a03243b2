//! Lowest eigenpairs of sparse symmetric chain Hamiltonians.
//!
//! Small problems go through a dense solver; larger ones use a restarted
//! Lanczos iteration with reorthogonalization and deflation against already
//! converged vectors. Starting vectors are drawn from a fixed-seed generator
//! so results are bit-reproducible regardless of scheduling.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::{SparseHamiltonian, SparseSymmetric};
use crate::symeig::{symmetric_eigen, tridiagonal_eigen};

/// Energy and unit-norm real eigenvector over the Hamiltonian's basis.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub energy: f64,
    pub vector: Vec<f64>,
}

const DENSE_DIM_LIMIT: usize = 64;
/// Seed behind every Lanczos starting vector (fixed for reproducibility).
pub const LANCZOS_SEED: u64 = 0x5eed_1234_abcd_0042;

/// The `k` lowest eigenpairs, energies ascending, vectors orthonormal with
/// the largest-magnitude component of each made positive.
pub fn lowest_eigenpairs(h: &SparseHamiltonian, k: usize) -> Result<Vec<EigenPair>> {
    lowest_of_matrix(&h.matrix, k)
}

pub fn lowest_of_matrix(m: &SparseSymmetric, k: usize) -> Result<Vec<EigenPair>> {
    let dim = m.dim();
    if k == 0 {
        return Err(Error::domain("need k >= 1 eigenpairs".to_string()));
    }
    if k > dim {
        return Err(Error::domain(format!(
            "requested {k} eigenpairs from a {dim}-dimensional space"
        )));
    }
    if dim <= DENSE_DIM_LIMIT || 4 * k >= dim {
        if dim > 4 * DENSE_DIM_LIMIT {
            return Err(Error::config(format!(
                "k = {k} is too close to dim = {dim} for the iterative solver; \
                 request fewer pairs"
            )));
        }
        return dense_lowest(m, k);
    }
    lanczos_lowest(m, k)
}

fn dense_lowest(m: &SparseSymmetric, k: usize) -> Result<Vec<EigenPair>> {
    let eig = symmetric_eigen(&m.to_dense())?;
    Ok(eig
        .values
        .into_iter()
        .zip(eig.vectors)
        .take(k)
        .map(|(energy, mut vector)| {
            fix_sign(&mut vector);
            EigenPair { energy, vector }
        })
        .collect())
}

/// Make the largest-magnitude component positive (first such index wins).
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    let mut mag = 0.0f64;
    for (i, &z) in v.iter().enumerate() {
        if z.abs() > mag {
            mag = z.abs();
            best = i;
        }
    }
    if v[best] < 0.0 {
        for z in v.iter_mut() {
            *z = -*z;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn scale(v: &mut [f64], s: f64) {
    for z in v.iter_mut() {
        *z *= s;
    }
}

/// Remove the components of `v` along each vector in `others`; second pass
/// when the first one removed a large fraction of the norm.
fn orthogonalize(v: &mut [f64], others: &[Vec<f64>]) {
    if others.is_empty() {
        return;
    }
    for _ in 0..2 {
        let before = norm(v);
        for o in others {
            let p = dot(v, o);
            axpy(v, -p, o);
        }
        let after = norm(v);
        if after > 0.5 * before {
            break;
        }
    }
}

fn seeded_start(dim: usize, salt: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(LANCZOS_SEED ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
    let n = norm(&v);
    scale(&mut v, 1.0 / n);
    v
}

struct LanczosOutcome {
    theta: f64,
    vector: Vec<f64>,
    residual: f64,
}

/// One restarted Lanczos pass targeting the lowest eigenvalue in the
/// orthogonal complement of `locked`.
fn lanczos_pass(
    m: &SparseSymmetric,
    locked: &[Vec<f64>],
    start: &[f64],
    max_steps: usize,
) -> Result<LanczosOutcome> {
    let dim = m.dim();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_steps);
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    let mut v = start.to_vec();
    orthogonalize(&mut v, locked);
    let n = norm(&v);
    scale(&mut v, 1.0 / n);
    basis.push(v);

    let mut w = vec![0.0; dim];
    let breakdown = 1e-13 * m.norm_inf().max(1.0);
    for j in 0..max_steps {
        m.matvec(&basis[j], &mut w);
        let a = dot(&w, &basis[j]);
        alphas.push(a);
        axpy(&mut w, -a, &basis[j]);
        if j > 0 {
            let b_prev = betas[j - 1];
            axpy(&mut w, -b_prev, &basis[j - 1]);
        }
        orthogonalize(&mut w, locked);
        orthogonalize(&mut w, &basis);
        let b = norm(&w);
        if b < breakdown || j + 1 == max_steps {
            break;
        }
        betas.push(b);
        let mut next = w.clone();
        scale(&mut next, 1.0 / b);
        basis.push(next);
    }

    // Ritz extraction from the tridiagonal matrix.
    let eig = tridiagonal_eigen(&alphas, &betas)?;
    let min = eig.values[0];
    let y = &eig.vectors[0];
    let mut u = vec![0.0; dim];
    for (j, col) in basis.iter().enumerate() {
        axpy(&mut u, y[j], col);
    }
    let un = norm(&u);
    scale(&mut u, 1.0 / un);

    // True residual || H u - theta u || with locked directions removed.
    let mut r = vec![0.0; dim];
    m.matvec(&u, &mut r);
    axpy(&mut r, -min, &u);
    orthogonalize(&mut r, locked);
    Ok(LanczosOutcome {
        theta: min,
        vector: u,
        residual: norm(&r),
    })
}

fn lanczos_lowest(m: &SparseSymmetric, k: usize) -> Result<Vec<EigenPair>> {
    let dim = m.dim();
    let scale_norm = m.norm_inf().max(1.0);
    let tol = 1e-10 * scale_norm;
    let max_steps = if dim > 10_000 { 250 } else { 160 };
    let max_restarts = 80;

    let mut locked: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut energies: Vec<f64> = Vec::with_capacity(k);
    for target in 0..k {
        let mut start = seeded_start(dim, target as u64);
        let mut last_residual = f64::INFINITY;
        let mut converged = false;
        for _ in 0..max_restarts {
            let out = lanczos_pass(m, &locked, &start, max_steps.min(dim - locked.len()))?;
            last_residual = out.residual;
            if out.residual <= tol {
                let mut v = out.vector;
                fix_sign(&mut v);
                energies.push(out.theta);
                locked.push(v);
                converged = true;
                break;
            }
            start = out.vector;
        }
        if !converged {
            return Err(Error::Convergence {
                what: format!("Lanczos eigensolver (pair {target} of {k}, dim {dim})"),
                residual: last_residual,
                iterations: max_restarts * max_steps,
            });
        }
    }
    Ok(energies
        .into_iter()
        .zip(locked)
        .map(|(energy, vector)| EigenPair { energy, vector })
        .collect())
}
