use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::ldlt::factor::LdltRegularization;
use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, CholeskySymbolicParams, SymmetricOrdering};
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat, Par, Side};
use nalgebra::DMatrix;

use super::sparse::{dot, norm, CsrMatrix};
use crate::assembly::SaddleSystem;
use crate::error::{Error, Result};
use crate::spaces::{MorleyFunction, P0Function};

pub const SADDLE_TOLERANCE: f64 = 1e-10;
const MAX_REFINEMENT: usize = 30;
pub const DENSE_LIMIT: usize = 5000;

fn solve_vec(solver: &impl SolveCore<f64>, rhs: &[f64]) -> Vec<f64> {
    let mut x = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    solver.solve_in_place_with_conj(Conj::No, x.as_mut());
    (0..rhs.len()).map(|i| x[(i, 0)]).collect()
}

fn lower_triangle(a: &CsrMatrix, scale: &[f64]) -> SparseColMat<usize, f64> {
    let mut trips = Vec::with_capacity(a.nnz() / 2 + a.nrows);
    for i in 0..a.nrows {
        for (j, v) in a.row(i) {
            if j <= i {
                trips.push(Triplet::new(i, j, scale[i] * v * scale[j]));
            }
        }
    }
    SparseColMat::try_new_from_triplets(a.nrows, a.ncols, &trips).expect("valid triplets")
}

/// Sparse Cholesky factor of an SPD matrix.
pub struct SpdSolver {
    n: usize,
    llt: Llt<usize, f64>,
}

impl SpdSolver {
    pub fn new(a: &CsrMatrix) -> Result<SpdSolver> {
        if a.nrows != a.ncols {
            return Err(Error::InvalidInput(format!("matrix is {}x{}", a.nrows, a.ncols)));
        }
        let lower = lower_triangle(a, &vec![1.0; a.nrows]);
        let llt = lower.sp_cholesky(Side::Lower).map_err(|_| Error::NotPositiveDefinite)?;
        Ok(SpdSolver { n: a.nrows, llt })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        solve_vec(&self.llt, rhs)
    }

    /// √(rᵀ A⁻¹ r).
    pub fn dual_norm(&self, r: &[f64]) -> f64 {
        dot(r, &self.solve(r)).max(0.0).sqrt()
    }
}

/// √(rᵀ G⁻¹ r) via one SPD solve.
pub fn dual_norm(r: &[f64], g: &CsrMatrix) -> Result<f64> {
    Ok(SpdSolver::new(g)?.dual_norm(r))
}

/// Solution of the block system [[G, B], [Bᵀ, −C]] (y, x) = (f, h).
#[derive(Clone, Debug)]
pub struct KktSolution {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    /// Relative algebraic residual ‖K s − b‖ / ‖b‖.
    pub residual: f64,
}

/// Symmetric indefinite matrix of the saddle-point layout, Y block first.
pub fn kkt_matrix(g: &CsrMatrix, b: &CsrMatrix, c: &CsrMatrix) -> CsrMatrix {
    let (ny, nx) = (g.nrows, c.nrows);
    assert_eq!((b.nrows, b.ncols), (ny, nx));
    let mut t = super::Triplets::with_capacity(ny + nx, ny + nx, g.nnz() + 2 * b.nnz() + c.nnz());
    for i in 0..ny {
        for (j, v) in g.row(i) {
            t.push(i, j, v);
        }
        for (j, v) in b.row(i) {
            t.push(i, ny + j, v);
            t.push(ny + j, i, v);
        }
    }
    for i in 0..nx {
        for (j, v) in c.row(i) {
            t.push(ny + i, ny + j, -v);
        }
    }
    t.into_csr()
}

enum Factor {
    Ldlt {
        symbolic: faer::sparse::linalg::cholesky::SymbolicCholesky<usize>,
        values: Vec<f64>,
    },
    Lu(Lu<usize, f64>),
}

impl Factor {
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        match self {
            Factor::Ldlt { symbolic, values } => {
                let ldlt = faer::sparse::linalg::cholesky::LdltRef::new(symbolic, values);
                let mut x = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
                let mut mem = MemBuffer::new(symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
                ldlt.solve_in_place_with_conj(Conj::No, x.as_mut(), Par::Seq, MemStack::new(&mut mem));
                (0..rhs.len()).map(|i| x[(i, 0)]).collect()
            }
            Factor::Lu(lu) => solve_vec(lu, rhs),
        }
    }
}

/// Signed LDLᵀ with pivots forced to +/− on the Y/X blocks.
fn factor_ldlt(k: &SparseColMat<usize, f64>, ny: usize) -> Option<Factor> {
    let n = k.nrows();
    let symbolic = factorize_symbolic_cholesky(
        k.symbolic(),
        Side::Lower,
        SymmetricOrdering::Amd,
        CholeskySymbolicParams::default(),
    )
    .ok()?;
    let signs: Vec<i8> = (0..n).map(|i| if i < ny { 1 } else { -1 }).collect();
    let mut values = vec![0.0; symbolic.len_val()];
    let mut mem = MemBuffer::new(symbolic.factorize_numeric_ldlt_scratch::<f64>(Par::Seq, Default::default()));
    symbolic
        .factorize_numeric_ldlt(
            &mut values,
            k.as_ref(),
            Side::Lower,
            LdltRegularization {
                dynamic_regularization_signs: Some(&signs),
                dynamic_regularization_delta: 1e-10,
                dynamic_regularization_epsilon: 1e-14,
            },
            Par::Seq,
            MemStack::new(&mut mem),
            Default::default(),
        )
        .ok()?;
    Some(Factor::Ldlt { symbolic, values })
}

/// b − K s with each row accumulated in doubled precision (TwoSum / FMA TwoProduct).
fn residual(k: &CsrMatrix, s: &[f64], b: &[f64]) -> Vec<f64> {
    (0..k.nrows)
        .map(|i| {
            let (mut hi, mut lo) = (b[i], 0.0);
            for (j, v) in k.row(i) {
                let p = -v * s[j];
                let pe = (-v).mul_add(s[j], -p);
                let t = hi + p;
                let z = t - hi;
                lo += (hi - (t - z)) + (p - z) + pe;
                hi = t;
            }
            hi + lo
        })
        .collect()
}

/// Iterative refinement in the equilibrated variables; returns the relative residual.
fn refine(factor: &Factor, k: &CsrMatrix, b: &[f64], s: &mut [f64]) -> f64 {
    let bn = norm(b);
    let mut best = f64::INFINITY;
    for _ in 0..MAX_REFINEMENT {
        let r = residual(k, s, b);
        let rel = norm(&r) / bn;
        if !rel.is_finite() {
            return f64::INFINITY;
        }
        if rel <= 0.01 * SADDLE_TOLERANCE || rel >= 0.5 * best {
            return rel.min(best);
        }
        best = rel;
        let d = factor.solve(&r);
        s.iter_mut().zip(&d).for_each(|(a, b)| *a += b);
    }
    norm(&residual(k, s, b)) / bn
}

/// Solves the saddle-point system by a signed sparse LDLᵀ with iterative refinement,
/// falling back to sparse LU with partial pivoting.
pub fn solve_kkt(g: &CsrMatrix, b: &CsrMatrix, c: &CsrMatrix, f: &[f64], h: &[f64]) -> Result<KktSolution> {
    let (ny, nx) = (g.nrows, c.nrows);
    assert_eq!(f.len(), ny);
    assert_eq!(h.len(), nx);
    let full = kkt_matrix(g, b, c);
    let rhs: Vec<f64> = f.iter().chain(h).copied().collect();
    if norm(&rhs) == 0.0 {
        return Ok(KktSolution { y: vec![0.0; ny], x: vec![0.0; nx], residual: 0.0 });
    }

    // Symmetric diagonal equilibration: Y by √G_ii, X by the row norm of the Schur-type diagonal.
    let gd: Vec<f64> = (0..ny).map(|i| g.get(i, i)).collect();
    let mut xd: Vec<f64> = (0..nx).map(|j| c.get(j, j)).collect();
    for i in 0..ny {
        for (j, v) in b.row(i) {
            xd[j] += v * v / gd[i].abs().max(f64::MIN_POSITIVE);
        }
    }
    let scale: Vec<f64> =
        gd.iter().chain(&xd).map(|&d| if d.abs() > 0.0 { 1.0 / d.abs().sqrt() } else { 1.0 }).collect();
    let mut scaled = full.clone();
    for i in 0..scaled.nrows {
        for p in scaled.indptr[i]..scaled.indptr[i + 1] {
            scaled.values[p] *= scale[i] * scale[scaled.indices[p]];
        }
    }
    let sb: Vec<f64> = rhs.iter().zip(&scale).map(|(a, s)| a * s).collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    if let Some(factor) = factor_ldlt(&lower_triangle(&full, &scale), ny) {
        let mut s = factor.solve(&sb);
        refine(&factor, &scaled, &sb, &mut s);
        best = Some((unscaled_residual(&full, &s, &scale, &rhs), s));
    }
    if best.as_ref().is_none_or(|(r, _)| *r > SADDLE_TOLERANCE) {
        log::debug!("saddle LDLT residual {:?}; retrying with LU", best.as_ref().map(|b| b.0));
        let lu = scaled.to_faer().sp_lu().map_err(|e| match e {
            faer::sparse::linalg::LuError::SymbolicSingular { index } => Error::SingularFactorization { pivot: index },
            faer::sparse::linalg::LuError::Generic(_) => Error::SingularFactorization { pivot: 0 },
        })?;
        let factor = Factor::Lu(lu);
        let mut s = factor.solve(&sb);
        refine(&factor, &scaled, &sb, &mut s);
        let r = unscaled_residual(&full, &s, &scale, &rhs);
        if best.as_ref().is_none_or(|(rb, _)| r < *rb) {
            best = Some((r, s));
        }
    }
    let (res, s) = best.expect("at least one factorization attempted");
    if !res.is_finite() {
        let pivot = s.iter().position(|v| !v.is_finite()).unwrap_or(0);
        return Err(Error::SingularFactorization { pivot });
    }
    if res > SADDLE_TOLERANCE {
        return Err(Error::InaccurateSolve { residual: res });
    }
    let sol: Vec<f64> = s.iter().zip(&scale).map(|(a, s)| a * s).collect();
    Ok(KktSolution { y: sol[..ny].to_vec(), x: sol[ny..].to_vec(), residual: res })
}

/// First and second component of the saddle-point solution.
#[derive(Clone, Debug)]
pub struct SaddleSolution {
    pub u: P0Function,
    pub v: MorleyFunction,
    pub residual: f64,
}

pub fn solve_saddle(system: &SaddleSystem) -> Result<SaddleSolution> {
    let sol = solve_kkt(&system.g, &system.b, &system.lower_block(), &system.rhs_y, &system.rhs_x)?;
    Ok(SaddleSolution { u: P0Function(sol.x), v: MorleyFunction(sol.y), residual: sol.residual })
}

fn unscaled_residual(full: &CsrMatrix, s: &[f64], scale: &[f64], rhs: &[f64]) -> f64 {
    let sol: Vec<f64> = s.iter().zip(scale).map(|(a, s)| a * s).collect();
    norm(&residual(full, &sol, rhs)) / norm(rhs)
}

/// Smallest eigenvalue λ of A x = λ B x for symmetric A and SPD B (dense).
pub fn generalized_eig_min(a: &CsrMatrix, b: &CsrMatrix) -> Result<f64> {
    generalized_eig_min_dense(&a.to_dense(), &b.to_dense())
}

pub fn generalized_eig_min_dense(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let n = a.nrows();
    if n > DENSE_LIMIT {
        return Err(Error::DimensionTooLarge { dim: n, limit: DENSE_LIMIT });
    }
    assert_eq!((a.ncols(), b.nrows(), b.ncols()), (n, n, n));
    let chol = b.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    // M = L⁻¹ A L⁻ᵀ
    let y = l.solve_lower_triangular(a).ok_or(Error::NotPositiveDefinite)?;
    let m = l.solve_lower_triangular(&y.transpose()).ok_or(Error::NotPositiveDefinite)?;
    let m = (&m + m.transpose()) * 0.5;
    let eig = m.symmetric_eigen();
    eig.eigenvalues.iter().copied().reduce(f64::min).ok_or(Error::InvalidInput("empty matrix".into()))
}
