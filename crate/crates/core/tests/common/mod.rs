use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ultraweak::assembly::assemble_b;
use ultraweak::companion::{edge_row, gradient_rows, hct_dim, local_hct_dofs, value_row, CompanionImage, HctField};
use ultraweak::fe_basis::{ElementGeometry, HctElement};
use ultraweak::mesh::{bisect, initial_mesh, signed_area, uniform_refine, EdgeTag, Mesh, Problem};
use ultraweak::spaces::{build_spaces, morley_interpolate, MorleyFunction, TestSpace};

pub fn random_mesh(problem: Problem, rng: &mut ChaCha8Rng) -> Mesh {
    let mut m = uniform_refine(&initial_mesh(problem));
    for _ in 0..rng.random_range(1..4) {
        let marked: Vec<usize> = (0..m.n_elements()).filter(|_| rng.random_range(0.0..1.0) < 0.3).collect();
        m = bisect(&m, &marked);
    }
    m
}

fn random_morley(y: &TestSpace, rng: &mut ChaCha8Rng) -> MorleyFunction {
    MorleyFunction((0..y.dim()).map(|_| rng.random_range(-1.0..1.0)).collect())
}

/// −Σ_e h_e ∂_{n_e}v(m_e) Σ_{K∋e} ±z_K, with the sign making n_e outward from K.
fn jump_form(mesh: &Mesh, y: &TestSpace, z: &[f64], v: &MorleyFunction) -> f64 {
    let mut jumps = vec![0.0; mesh.n_edges()];
    for k in 0..mesh.n_elements() {
        for (i, &e) in mesh.element_edges[k].iter().enumerate() {
            jumps[e] += mesh.outward_sign(k, i) * z[k];
        }
    }
    -(0..mesh.n_edges()).map(|e| jumps[e] * mesh.edges[e].length * v.dof(y, y.edge_dof(e))).sum::<f64>()
}

/// Largest relative gap between the assembled B and the jump formula over random meshes.
pub fn jump_defect(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let problem = if case % 2 == 0 { Problem::Uc } else { Problem::Cauchy };
        let m = random_mesh(problem, &mut rng);
        let (x, y) = build_spaces(&m);
        let b = assemble_b(&m, &x, &y).unwrap();
        let z: Vec<f64> = (0..x.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v = random_morley(&y, &mut rng);
        let lhs: f64 = v.0.iter().zip(b.mul_vec(&z)).map(|(a, b)| a * b).sum();
        let rhs = jump_form(&m, &y, &z, &v);
        worst = worst.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
    }
    worst
}

/// Random global HCT vector vanishing with its gradient on the clamped boundary part.
fn random_hct(mesh: &Mesh, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let nv = mesh.n_vertices();
    let mut w: Vec<f64> = (0..hct_dim(mesh)).map(|_| rng.random_range(-1.0..1.0)).collect();
    for v in 0..nv {
        let clamped = match mesh.problem {
            Problem::Uc => mesh.is_boundary_vertex(v),
            Problem::Cauchy => mesh.is_sigma_c_vertex(v),
        };
        if clamped {
            w[value_row(v)] = 0.0;
            for r in gradient_rows(nv, v) {
                w[r] = 0.0;
            }
        }
    }
    for (e, edge) in mesh.edges.iter().enumerate() {
        if matches!(edge.tag, EdgeTag::Boundary | EdgeTag::SigmaC) {
            w[edge_row(nv, e)] = 0.0;
        }
    }
    w
}

/// Largest relative gap between (Bz)(w) for HCT w and (Bz)(I_M w) over random meshes.
pub fn fortin_defect(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rule = ultraweak::fe_basis::tri_quad(2).unwrap();
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let problem = if case % 2 == 0 { Problem::Uc } else { Problem::Cauchy };
        let m = random_mesh(problem, &mut rng);
        let (x, y) = build_spaces(&m);
        let w = random_hct(&m, &mut rng);
        let z: Vec<f64> = (0..x.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        // (Bz)(w) = −Σ_K z_K ∫_K Δw over the Clough–Tocher pieces.
        let mut exact = 0.0;
        for k in 0..m.n_elements() {
            let el = HctElement::new(&ElementGeometry::from_mesh(&m, k)).unwrap();
            let f = el.piecewise(&local_hct_dofs(&m, k, &w));
            for (s, tri) in el.sub_triangles().iter().enumerate() {
                let jac = 2.0 * signed_area(tri[0], tri[1], tri[2]).abs();
                for (l, wt) in rule.points.iter().zip(&rule.weights) {
                    let p = [0, 1].map(|t| l[0] * tri[0][t] + l[1] * tri[1][t] + l[2] * tri[2][t]);
                    let h = f.hessian_on(s, p);
                    exact -= z[k] * wt * jac * (h[0] + h[2]);
                }
            }
        }
        let image = CompanionImage { n_vertices: m.n_vertices(), dofs: w, gradient_source: vec![None; m.n_vertices()] };
        let q = morley_interpolate(&m, &y, &HctField { image: &image });
        let b = assemble_b(&m, &x, &y).unwrap();
        let discrete: f64 = q.0.iter().zip(b.mul_vec(&z)).map(|(a, b)| a * b).sum();
        worst = worst.max((exact - discrete).abs() / (1.0 + exact.abs()));
    }
    worst
}
