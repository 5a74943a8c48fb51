//! Sparse direct solves and the Newton iteration for the discrete
//! von Kármán system.

use std::time::Instant;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Col, Side};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{AssemblyError, Discretization, SparseOperator, StateVector};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("right-hand side has length {got}, matrix is {n}x{n}")]
    DimensionMismatch { n: usize, got: usize },
    #[error("matrix is singular: {detail}")]
    Singular { detail: String },
    #[error("Newton iteration did not converge in {} iterations (last update norm {:.3e})", .log.iterations.len(), .log.last_update())]
    NotConverged { state: StateVector, log: NewtonLog },
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

fn euclid(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn frobenius(a: &SparseOperator) -> f64 {
    a.values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Solves A x = b by sparse Cholesky when `a.symmetric`, falling back to
/// sparse LU with partial pivoting. The result is accepted only if
/// ‖Ax - b‖ ≤ 1e-10 (‖A‖ ‖x‖ + ‖b‖).
pub fn linear_solve(a: &SparseOperator, b: &[f64]) -> Result<Vec<f64>, SolverError> {
    let n = a.n;
    if b.len() != n {
        return Err(SolverError::DimensionMismatch { n, got: b.len() });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let triplets: Vec<Triplet<usize, usize, f64>> = a.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets).map_err(|e| SolverError::Singular {
        detail: format!("could not build sparse matrix: {e:?}"),
    })?;

    let mut attempt: Option<Vec<f64>> = None;
    if a.symmetric {
        if let Ok(llt) = mat.sp_cholesky(Side::Lower) {
            attempt = Some(refined(a, b, |r| llt.solve(r)));
        }
    }
    let x = match attempt.filter(|x| residual_ok(a, x, b).is_ok()) {
        Some(x) => x,
        None => {
            // faer's simplicial LU panics on an exact zero pivot instead of erroring
            let lu = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| mat.sp_lu()))
                .map_err(|_| SolverError::Singular {
                    detail: "exact zero pivot in the LU factorisation".into(),
                })?
                .map_err(|e| SolverError::Singular {
                    detail: format!("structurally singular ({e:?})"),
                })?;
            refined(a, b, |r| lu.solve(r))
        }
    };
    residual_ok(a, &x, b).map_err(|detail| SolverError::Singular { detail })?;
    Ok(x)
}

/// Direct solve followed by one step of iterative refinement with the same
/// factorisation, which pulls the error down to the rounding level of the
/// residual rather than that of the factors.
fn refined(a: &SparseOperator, b: &[f64], solve: impl Fn(&Col<f64>) -> Col<f64>) -> Vec<f64> {
    let n = a.n;
    let rhs = Col::<f64>::from_fn(n, |i| b[i]);
    let first = solve(&rhs);
    let mut x: Vec<f64> = (0..n).map(|i| first[i]).collect();
    let ax = a.mul_vec(&x);
    let r = Col::<f64>::from_fn(n, |i| b[i] - ax[i]);
    let d = solve(&r);
    for (i, xi) in x.iter_mut().enumerate() {
        *xi += d[i];
    }
    x
}

fn residual_ok(a: &SparseOperator, x: &[f64], b: &[f64]) -> Result<(), String> {
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(format!("zero pivot produced a non-finite solution entry at row {i}"));
    }
    let ax = a.mul_vec(x);
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    let res = euclid(&r);
    let bound = 1e-10 * (frobenius(a) * euclid(x) + euclid(b));
    if res <= bound {
        Ok(())
    } else {
        Err(format!("residual {res:.3e} exceeds {bound:.3e}; the factorisation hit a (near) zero pivot"))
    }
}

/// Biharmonic start: blockdiag(A_h, A_h) X = F_h.
pub fn initial_guess(a: &SparseOperator, load: &[f64]) -> Result<StateVector, SolverError> {
    let n = a.n;
    if load.len() != 2 * n {
        return Err(SolverError::DimensionMismatch { n: 2 * n, got: load.len() });
    }
    let u = linear_solve(a, &load[..n])?;
    let v = linear_solve(a, &load[n..])?;
    Ok(StateVector::from_parts(&u, &v))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonStep {
    pub iteration: usize,
    /// √(δᵀ blockdiag(A_h, A_h) δ) for δ = X^j - X^{j-1}.
    pub update_norm: f64,
    /// ‖F_h - A_h X^j - B_h(X^j, X^j, ·)‖₂.
    pub residual_norm: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NewtonLog {
    pub iterations: Vec<NewtonStep>,
    pub converged: bool,
}

impl NewtonLog {
    pub fn last_update(&self) -> f64 {
        self.iterations.last().map_or(f64::NAN, |s| s.update_norm)
    }

    pub fn last_residual(&self) -> f64 {
        self.iterations.last().map_or(f64::NAN, |s| s.residual_norm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-8, max_iter: 20 }
    }
}

fn energy_norm(a: &SparseOperator, x: &[f64]) -> f64 {
    let n = a.n;
    let (u, v) = x.split_at(n);
    let au = a.mul_vec(u);
    let av = a.mul_vec(v);
    let e: f64 = au.iter().zip(u).chain(av.iter().zip(v)).map(|(p, q)| p * q).sum();
    e.max(0.0).sqrt()
}

/// ‖F - A X - B_h(X, X, ·)‖₂.
pub fn nonlinear_residual(
    disc: &Discretization,
    a: &SparseOperator,
    load: &[f64],
    x: &StateVector,
) -> Result<f64, SolverError> {
    let n = a.n;
    let (r, _) = disc.trilinear_scatter(x)?;
    let au = a.mul_vec(x.u());
    let av = a.mul_vec(x.v());
    let res: Vec<f64> = (0..2 * n)
        .map(|i| {
            let ax = if i < n { au[i] } else { av[i - n] };
            load[i] - ax - r[i]
        })
        .collect();
    Ok(euclid(&res))
}

/// Newton iteration
/// (blockdiag(A, A) + J(X^{j-1})) X^j = F + B_h(X^{j-1}, X^{j-1}, ·),
/// started from the biharmonic solution and stopped once the energy norm of
/// the update is at most `tol`.
pub fn newton_solve(
    disc: &Discretization,
    load: &[f64],
    opts: NewtonOptions,
) -> Result<(StateVector, NewtonLog), SolverError> {
    let a = disc.assemble_stiffness();
    let blocks = SparseOperator::block_diag(&a, &a);
    let mut x = initial_guess(&a, load)?;
    let mut log = NewtonLog::default();
    for j in 1..=opts.max_iter.max(1) {
        let start = Instant::now();
        let (r, jac) = disc.trilinear_scatter(&x)?;
        let system = blocks.add(&jac);
        let rhs: Vec<f64> = load.iter().zip(&r).map(|(f, b)| f + b).collect();
        let next = StateVector { data: linear_solve(&system, &rhs)? };
        let delta: Vec<f64> = next.data.iter().zip(&x.data).map(|(p, q)| p - q).collect();
        let update_norm = energy_norm(&a, &delta);
        x = next;
        let residual_norm = nonlinear_residual(disc, &a, load, &x)?;
        log.iterations.push(NewtonStep {
            iteration: j,
            update_norm,
            residual_norm,
            wall_seconds: start.elapsed().as_secs_f64(),
        });
        if update_norm <= opts.tol {
            log.converged = true;
            return Ok((x, log));
        }
    }
    Err(SolverError::NotConverged { state: x, log })
}
