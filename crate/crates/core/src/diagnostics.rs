//! Numerical checks of the structural hypotheses: discrete inf-sup stability,
//! companion bounds, the right-inverse identity and residual certificates.

use std::fmt;

use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{assemble_b, assemble_gram, integrate_polygon, Field, SaddleSystem};
pub use crate::companion::companion_boundedness;
use crate::companion::{CompanionOperator, HctField};
use crate::error::{Error, Result};
use crate::linalg::{dot, generalized_eig_min_dense, CsrMatrix, SpdSolver};
use crate::mesh::{initial_mesh, uniform_refine, uniform_refine_with_parents, Mesh, Problem, RegionMap};
use crate::spaces::{build_spaces, morley_interpolate, MorleyFunction, P0Function};

pub const INFSUP_DIM_LIMIT: usize = 1500;

#[derive(Clone, Debug, PartialEq)]
pub struct InfSupReport {
    pub trial_dim: usize,
    pub test_dim: usize,
    pub enriched_test_dim: usize,
    pub ratio: f64,
}

/// Dense BᵀG⁻¹B for the given coupling columns.
fn dual_gram(g: &CsrMatrix, b: &CsrMatrix) -> Result<DMatrix<f64>> {
    let solver = SpdSolver::new(g)?;
    let n = b.ncols;
    let bt = b.transpose();
    let mut cols = Vec::with_capacity(n);
    let mut col = vec![0.0; b.nrows];
    for j in 0..n {
        col.iter_mut().for_each(|c| *c = 0.0);
        for (i, v) in bt.row(j) {
            col[i] = v;
        }
        cols.push(solver.solve(&col));
    }
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let bi: Vec<(usize, f64)> = bt.row(i).collect();
        for j in 0..n {
            a[(i, j)] = bi.iter().map(|&(r, v)| v * cols[j][r]).sum();
        }
    }
    Ok((&a + a.transpose()) * 0.5)
}

/// min_z ‖B^δ z‖_{(Y^δ)'} / ‖B^{δ_j} z‖_{(Y^{δ_j})'} over z ∈ X^δ outside the common kernel,
/// where δ_j is `mesh` refined uniformly `j` times.
pub fn infsup_ratio(mesh: &Mesh, j: usize) -> Result<InfSupReport> {
    let n = mesh.n_elements();
    if n > INFSUP_DIM_LIMIT {
        return Err(Error::DimensionTooLarge { dim: n, limit: INFSUP_DIM_LIMIT });
    }
    let (x, y) = build_spaces(mesh);
    let coarse = dual_gram(&assemble_gram(mesh, &y)?, &assemble_b(mesh, &x, &y)?)?;

    let mut fine = mesh.clone();
    let mut ancestor: Vec<usize> = (0..n).collect();
    for _ in 0..j {
        let (next, parents) = uniform_refine_with_parents(&fine);
        ancestor = parents.iter().map(|&p| ancestor[p]).collect();
        fine = next;
    }
    let (xf, yf) = build_spaces(&fine);
    let bf = assemble_b(&fine, &xf, &yf)?;
    // Prolongation of coarse piecewise constants.
    let mut p = crate::linalg::Triplets::new(fine.n_elements(), n);
    for (k, &a) in ancestor.iter().enumerate() {
        p.push(k, a, 1.0);
    }
    let enriched = dual_gram(&assemble_gram(&fine, &yf)?, &bf.matmul(&p.into_csr()))?;

    // Restrict both forms to the range of the enriched one.
    let eig = enriched.clone().symmetric_eigen();
    let top = eig.eigenvalues.amax();
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 1e-10 * top).collect();
    if keep.is_empty() || top <= 0.0 {
        return Err(Error::AllInKernel);
    }
    let basis = DMatrix::from_fn(n, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])]);
    let a = basis.transpose() * &coarse * &basis;
    let b = basis.transpose() * &enriched * &basis;
    let lambda = generalized_eig_min_dense(&((&a + a.transpose()) * 0.5), &((&b + b.transpose()) * 0.5))?;
    Ok(InfSupReport { trial_dim: n, test_dim: y.dim(), enriched_test_dim: yf.dim(), ratio: lambda.max(0.0).sqrt() })
}

/// The three terms of the least-squares objective
/// ‖ℓ − Bu‖²_{(Y^δ)'} + ‖u − q‖²_{L2(ω)} + ε²‖u‖²_{L2(Ω)}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveTerms {
    pub dual: f64,
    pub omega: f64,
    pub epsilon: f64,
}

impl ObjectiveTerms {
    pub fn total(&self) -> f64 {
        self.dual + self.omega + self.epsilon
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub terms: ObjectiveTerms,
    /// Smallest objective over the random competitors.
    pub best_competitor: f64,
    pub certificate: bool,
}

/// ∫_ω q².
pub fn data_norm_sq(mesh: &Mesh, omega: &RegionMap, q: &Field) -> Result<f64> {
    let mut s = 0.0;
    for k in 0..mesh.n_elements() {
        if let Some(poly) = omega.polygon(mesh, k) {
            s += integrate_polygon(&poly, q, mesh.diameter(k), 10, |_, v| v * v)?;
        }
    }
    Ok(s)
}

/// Objective terms at `u`; `q_norm_sq` is ∫_ω q² (zero for Cauchy problems).
pub fn objective(system: &SaddleSystem, g: &SpdSolver, u: &[f64], q_norm_sq: f64) -> ObjectiveTerms {
    let mut r = system.rhs_y.clone();
    r.iter_mut().zip(system.b.mul_vec(u)).for_each(|(a, b)| *a -= b);
    let dual = g.dual_norm(&r).powi(2);
    // rhs_X = −∫_ω q z, so ‖u − q‖²_ω = uᵀMωu + 2 uᵀrhs_X + ‖q‖²_ω.
    let omega = (dot(u, &system.m_omega.mul_vec(u)) + 2.0 * dot(u, &system.rhs_x) + q_norm_sq).max(0.0);
    let epsilon = system.epsilon.powi(2) * dot(u, &system.m_full.mul_vec(u));
    ObjectiveTerms { dual, omega, epsilon }
}

/// Objective terms at the computed minimizer and a check against 20 random competitors.
pub fn residual_report(system: &SaddleSystem, u: &P0Function, q_norm_sq: f64, seed: u64) -> Result<ResidualReport> {
    let g = SpdSolver::new(&system.g)?;
    let terms = objective(system, &g, &u.0, q_norm_sq);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = u.0.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut best = f64::INFINITY;
    for i in 0..20 {
        let t = scale * 10f64.powi(-(i % 5));
        let c: Vec<f64> = u.0.iter().map(|v| v + t * rng.random_range(-1.0..1.0)).collect();
        best = best.min(objective(system, &g, &c, q_norm_sq).total());
    }
    let tol = 1e-10 * (terms.total() + q_norm_sq + 1.0);
    Ok(ResidualReport { terms, best_competitor: best, certificate: terms.total() <= best + tol })
}

/// max |Q E v − v| over `samples` random Morley functions.
pub fn right_inverse_defect(mesh: &Mesh, samples: usize, seed: u64) -> Result<f64> {
    let (_, y) = build_spaces(mesh);
    let op = CompanionOperator::new(mesh, &y)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let v = MorleyFunction((0..y.dim()).map(|_| rng.random_range(-1.0..1.0)).collect());
        let image = op.apply(&v);
        let back = morley_interpolate(mesh, &y, &HctField { image: &image });
        worst = v.0.iter().zip(&back.0).fold(worst, |m, (a, b)| m.max((a - b).abs()));
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn push(&mut self, name: impl Into<String>, value: f64, pass: bool) {
        self.checks.push(Check { name: name.into(), value, pass });
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{:<40} {:>14.6e}  {}", c.name, c.value, if c.pass { "PASS" } else { "FAIL" })?;
        }
        Ok(())
    }
}

/// Inf-sup ratios on `levels` successive uniform refinements (starting from one refinement).
pub fn infsup_sequence(problem: Problem, levels: usize, j: usize) -> Result<Vec<InfSupReport>> {
    let mut mesh = uniform_refine(&initial_mesh(problem));
    let mut out = Vec::with_capacity(levels);
    for _ in 0..levels {
        out.push(infsup_ratio(&mesh, j)?);
        mesh = uniform_refine(&mesh);
    }
    Ok(out)
}

/// Relative spread (max − min)/max.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    (max - min) / max
}

/// The structural diagnostic suite for one problem geometry.
pub fn run_suite(problem: Problem, levels: usize, seed: u64) -> Result<Report> {
    let mut report = Report::default();
    let tag = problem.name();
    let mut mesh = uniform_refine(&initial_mesh(problem));
    for level in 1..=levels.min(3) {
        let (_, y) = build_spaces(&mesh);
        let bound = companion_boundedness(&mesh, &y)?;
        report.push(format!("{tag}/companion_bound/L{level}"), bound, bound.is_finite());
        let d = right_inverse_defect(&mesh, 100, seed)?;
        report.push(format!("{tag}/right_inverse/L{level}"), d, d <= 1e-10);
        mesh = uniform_refine(&mesh);
    }
    let seq = infsup_sequence(problem, levels, 2)?;
    for (i, r) in seq.iter().enumerate() {
        report.push(format!("{tag}/infsup_ratio/L{}", i + 1), r.ratio, r.ratio > 0.0);
    }
    let ratios: Vec<f64> = seq.iter().map(|r| r.ratio).collect();
    let s = spread(&ratios);
    report.push(format!("{tag}/infsup_spread"), s, s < 0.15);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_blocks, build_saddle};
    use crate::linalg::solve_saddle;
    use crate::mesh::Rect;

    #[test]
    fn infsup_ratio_is_positive_on_first_refinement() {
        let m = uniform_refine(&initial_mesh(Problem::Uc));
        let r = infsup_ratio(&m, 2).unwrap();
        assert_eq!(r.trial_dim, 16);
        assert!(r.ratio > 0.05 && r.ratio.is_finite(), "{}", r.ratio);
    }

    #[test]
    fn infsup_dimension_guard() {
        let mut m = initial_mesh(Problem::Uc);
        while m.n_elements() <= INFSUP_DIM_LIMIT {
            m = uniform_refine(&m);
        }
        assert!(matches!(infsup_ratio(&m, 1), Err(Error::DimensionTooLarge { .. })));
    }

    #[test]
    fn enrichment_by_zero_levels_gives_one() {
        let m = uniform_refine(&initial_mesh(Problem::Cauchy));
        let r = infsup_ratio(&m, 0).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-8);
    }

    fn manufactured(problem: Problem, eps: f64) -> (SaddleSystem, Vec<f64>, f64, Mesh) {
        let m = uniform_refine(&uniform_refine(&initial_mesh(problem)));
        let (x, y) = build_spaces(&m);
        let omega = RegionMap::classify(&m, Rect::new(-0.5, 0.5, -0.5, 0.5));
        let blocks = assemble_blocks(&m, &y, Some(&omega)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let z: Vec<f64> = (0..x.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let rhs_y = blocks.b.mul_vec(&z);
        let (rhs_x, qn) = match problem {
            Problem::Uc => {
                let mz = blocks.m_omega.mul_vec(&z);
                (mz.iter().map(|v| -v).collect(), dot(&z, &mz))
            }
            Problem::Cauchy => (vec![0.0; x.dim], 0.0),
        };
        (build_saddle(blocks, rhs_y, rhs_x, eps, problem).unwrap(), z, qn, m)
    }

    #[test]
    fn exact_discrete_data_gives_vanishing_residuals() {
        for problem in [Problem::Uc, Problem::Cauchy] {
            let (sys, z, qn, _) = manufactured(problem, 1e-10);
            let sol = solve_saddle(&sys).unwrap();
            let rep = residual_report(&sys, &sol.u, qn, 5).unwrap();
            assert!(rep.terms.dual <= 1e-18 && rep.terms.omega <= 1e-18 && rep.terms.epsilon <= 1e-18, "{problem:?}: {:?}", rep.terms);
            assert!(rep.certificate);
            let g = SpdSolver::new(&sys.g).unwrap();
            let at_z = objective(&sys, &g, &z, qn);
            assert!(at_z.dual < 1e-24 && at_z.omega < 1e-12);
        }
    }

    #[test]
    fn certificate_on_inconsistent_data() {
        let (mut sys, _, _, m) = manufactured(Problem::Uc, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        sys.rhs_y.iter_mut().for_each(|v| *v += rng.random_range(-0.1..0.1));
        let q = Field::new(|p| p[0].sin() + p[1]);
        let omega = RegionMap::classify(&m, Rect::new(-0.5, 0.5, -0.5, 0.5));
        sys.rhs_x = crate::assembly::assemble_rhs_x(&m, &omega, &q).unwrap();
        let qn = data_norm_sq(&m, &omega, &q).unwrap();
        let sol = solve_saddle(&sys).unwrap();
        let rep = residual_report(&sys, &sol.u, qn, 1).unwrap();
        assert!(rep.certificate && rep.terms.total() > 0.0);
        // The ω-term agrees with a direct L2 computation.
        let direct = crate::benchmarks::l2_region_error(&m, &sol.u, &q, &omega).unwrap().powi(2);
        assert!((rep.terms.omega - direct).abs() < 1e-10 * (1.0 + direct));
        // ε-term consistent with ε²‖u‖².
        let un: f64 = (0..m.n_elements()).map(|k| m.area(k) * sol.u.0[k].powi(2)).sum();
        assert!((rep.terms.epsilon - 0.01 * un).abs() < 1e-14);
    }

    #[test]
    fn right_inverse_suite() {
        let m = uniform_refine(&initial_mesh(Problem::Cauchy));
        assert!(right_inverse_defect(&m, 100, 3).unwrap() < 1e-10);
    }

    #[test]
    fn report_formatting() {
        let mut r = Report::default();
        r.push("a", 1.0, true);
        r.push("b", 2.0, false);
        assert!(!r.all_pass());
        let s = r.to_string();
        assert!(s.contains("PASS") && s.contains("FAIL"));
        assert!((spread(&[1.0, 0.9, 0.95]) - 0.1).abs() < 1e-15);
    }
}
