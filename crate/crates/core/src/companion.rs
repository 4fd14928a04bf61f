//! Companion operator from the Morley space into the HCT space.
//!
//! Global HCT DoFs are laid out as vertex values [0, nv), vertex gradients
//! [nv, 3nv) (x then y per vertex), and edge-midpoint normal derivatives [3nv, 3nv + ne).

use crate::error::{Error, Result};
use crate::fe_basis::{integrate_segment, ElementGeometry, HctDofs, HctElement};
use crate::linalg::{CsrMatrix, Triplets};
use crate::mesh::{EdgeTag, Mesh};
use crate::spaces::{element_basis, Interpolable, MorleyFunction, TestSpace};

/// Sparse linear map from free Morley DoFs to global HCT DoFs.
#[derive(Clone, Debug)]
pub struct CompanionOperator {
    pub n_vertices: usize,
    pub n_edges: usize,
    pub matrix: CsrMatrix,
    /// Element whose Morley gradient defines the HCT gradient at each vertex (None if constrained).
    pub gradient_source: Vec<Option<usize>>,
    /// Per vertex: free Morley column and gradient of that basis function at the vertex.
    gradient_weights: Vec<Vec<(usize, [f64; 2])>>,
}

/// E v as global HCT DoFs.
#[derive(Clone, Debug)]
pub struct CompanionImage {
    pub n_vertices: usize,
    pub dofs: Vec<f64>,
    pub gradient_source: Vec<Option<usize>>,
}

pub fn hct_dim(mesh: &Mesh) -> usize {
    3 * mesh.n_vertices() + mesh.n_edges()
}

pub fn value_row(v: usize) -> usize {
    v
}

pub fn gradient_rows(nv: usize, v: usize) -> [usize; 2] {
    [nv + 2 * v, nv + 2 * v + 1]
}

pub fn edge_row(nv: usize, e: usize) -> usize {
    3 * nv + e
}

impl CompanionOperator {
    pub fn new(mesh: &Mesh, space: &TestSpace) -> Result<CompanionOperator> {
        let nv = mesh.n_vertices();
        let mut gradient_source = vec![None; nv];
        let mut gradient_weights = vec![Vec::new(); nv];
        for v in 0..nv {
            if space.constrained[v] {
                continue;
            }
            let k = *mesh.vertex_elements(v).iter().min().expect("vertex has an element");
            gradient_source[v] = Some(k);
            let basis = element_basis(mesh, k)?;
            let p = mesh.vertices[v];
            for (j, f) in space.element_free(mesh, k).into_iter().enumerate() {
                if let Some(col) = f {
                    let g = basis.gradient(j, p);
                    gradient_weights[v].push((col, g));
                }
            }
        }

        let mut t = Triplets::new(hct_dim(mesh), space.dim());
        for v in 0..nv {
            if let Some(col) = space.free(v) {
                t.push(value_row(v), col, 1.0);
            }
            let [rx, ry] = gradient_rows(nv, v);
            for &(col, g) in &gradient_weights[v] {
                t.push(rx, col, g[0]);
                t.push(ry, col, g[1]);
            }
        }
        for (e, edge) in mesh.edges.iter().enumerate() {
            let Some(col) = space.free(space.edge_dof(e)) else { continue };
            // Midpoint DoF m plus the bubble correction m/2 - (a + b)/4, where a, b are the
            // normal derivatives of the HCT function at the endpoints.
            let row = edge_row(nv, e);
            t.push(row, col, 1.5);
            let n = edge.normal;
            for &w in &edge.endpoints {
                for &(c, g) in &gradient_weights[w] {
                    t.push(row, c, -0.25 * (n[0] * g[0] + n[1] * g[1]));
                }
            }
        }
        Ok(CompanionOperator {
            n_vertices: nv,
            n_edges: mesh.n_edges(),
            matrix: t.into_csr(),
            gradient_source,
            gradient_weights,
        })
    }

    pub fn apply(&self, v: &MorleyFunction) -> CompanionImage {
        CompanionImage {
            n_vertices: self.n_vertices,
            dofs: self.matrix.mul_vec(&v.0),
            gradient_source: self.gradient_source.clone(),
        }
    }

    /// Eᵀ applied to a functional on the HCT DoFs, giving a functional on the Morley DoFs.
    pub fn pull_back(&self, hct_functional: &[f64]) -> Vec<f64> {
        self.matrix.transpose_mul_vec(hct_functional)
    }

    /// Morley columns and gradients defining the HCT gradient at vertex `v`.
    pub fn gradient_weights(&self, v: usize) -> &[(usize, [f64; 2])] {
        &self.gradient_weights[v]
    }
}

impl CompanionImage {
    pub fn value(&self, v: usize) -> f64 {
        self.dofs[value_row(v)]
    }

    pub fn gradient(&self, v: usize) -> [f64; 2] {
        let [rx, ry] = gradient_rows(self.n_vertices, v);
        [self.dofs[rx], self.dofs[ry]]
    }

    pub fn edge_normal_derivative(&self, e: usize) -> f64 {
        self.dofs[edge_row(self.n_vertices, e)]
    }

    /// Local HCT DoFs of element `k` (global edge normals).
    pub fn local_dofs(&self, mesh: &Mesh, k: usize) -> HctDofs {
        local_hct_dofs(mesh, k, &self.dofs)
    }
}

/// Extracts the 12 local DoFs of element `k` from a global HCT vector.
pub fn local_hct_dofs(mesh: &Mesh, k: usize, global: &[f64]) -> HctDofs {
    let nv = mesh.n_vertices();
    let el = &mesh.elements[k];
    let mut d = [0.0; 12];
    for i in 0..3 {
        let v = el.v[i];
        d[i] = global[value_row(v)];
        let [rx, ry] = gradient_rows(nv, v);
        d[3 + 2 * i] = global[rx];
        d[4 + 2 * i] = global[ry];
        d[9 + i] = global[edge_row(nv, mesh.element_edges[k][i])];
    }
    HctDofs(d)
}

/// Global HCT rows of the 12 local DoFs of element `k`.
pub fn local_hct_rows(mesh: &Mesh, k: usize) -> [usize; 12] {
    let nv = mesh.n_vertices();
    let el = &mesh.elements[k];
    let mut r = [0; 12];
    for i in 0..3 {
        r[i] = value_row(el.v[i]);
        let [rx, ry] = gradient_rows(nv, el.v[i]);
        r[3 + 2 * i] = rx;
        r[4 + 2 * i] = ry;
        r[9 + i] = edge_row(nv, mesh.element_edges[k][i]);
    }
    r
}

pub fn companion(mesh: &Mesh, space: &TestSpace, v: &MorleyFunction) -> Result<CompanionImage> {
    Ok(CompanionOperator::new(mesh, space)?.apply(v))
}

/// (E v)(vertex): the companion copies vertex values.
pub fn companion_vertex_value(mesh: &Mesh, space: &TestSpace, v: &MorleyFunction, vertex: usize) -> Result<f64> {
    if vertex >= mesh.n_vertices() {
        return Err(Error::InvalidInput(format!("vertex {vertex} not in mesh")));
    }
    Ok(v.dof(space, space.vertex_dof(vertex)))
}

/// Value and normal-derivative traces of E v on one edge, parametrized by s ∈ [0,1]
/// from the lower-id endpoint to the higher-id endpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeTraces {
    pub start: [f64; 2],
    pub end: [f64; 2],
    /// Cubic coefficients in s of the value trace.
    pub value: [f64; 4],
    /// Quadratic coefficients in s of the normal derivative (global edge normal).
    pub normal: [f64; 3],
}

impl EdgeTraces {
    pub fn value_at(&self, s: f64) -> f64 {
        let c = &self.value;
        c[0] + s * (c[1] + s * (c[2] + s * c[3]))
    }

    pub fn normal_at(&self, s: f64) -> f64 {
        let c = &self.normal;
        c[0] + s * (c[1] + s * c[2])
    }

    pub fn point(&self, s: f64) -> [f64; 2] {
        [self.start[0] + s * (self.end[0] - self.start[0]), self.start[1] + s * (self.end[1] - self.start[1])]
    }
}

/// Trace data of one edge in terms of endpoint values, endpoint gradients and the Morley edge DoF.
#[derive(Clone, Copy, Debug)]
pub struct TraceData {
    pub values: [f64; 2],
    pub gradients: [[f64; 2]; 2],
    pub edge_dof: f64,
}

/// Hermite and quadratic bases of the traces: the value trace is
/// Σ values[i]·VALUE_BASIS[i] + (h t·gradients[i])·SLOPE_BASIS[i]; the normal trace is
/// Σ (n·gradients[i])·NORMAL_END_BASIS[i] + edge_dof·NORMAL_MID_BASIS.
pub const VALUE_BASIS: [[f64; 4]; 2] = [[1.0, 0.0, -3.0, 2.0], [0.0, 0.0, 3.0, -2.0]];
pub const SLOPE_BASIS: [[f64; 4]; 2] = [[0.0, 1.0, -2.0, 1.0], [0.0, 0.0, -1.0, 1.0]];
/// (1-s) - 3s(1-s) and s - 3s(1-s).
pub const NORMAL_END_BASIS: [[f64; 3]; 2] = [[1.0, -4.0, 3.0], [0.0, -2.0, 3.0]];
/// 6s(1-s).
pub const NORMAL_MID_BASIS: [f64; 3] = [0.0, 6.0, -6.0];

pub fn traces_from_data(mesh: &Mesh, e: usize, data: &TraceData) -> EdgeTraces {
    let edge = &mesh.edges[e];
    let [a, b] = edge.endpoints.map(|i| mesh.vertices[i]);
    let h = edge.length;
    let t = edge.tangent();
    let n = edge.normal;
    let mut value = [0.0; 4];
    let mut normal = [0.0; 3];
    for i in 0..2 {
        let g = data.gradients[i];
        let slope = h * (t[0] * g[0] + t[1] * g[1]);
        let dn = n[0] * g[0] + n[1] * g[1];
        for r in 0..4 {
            value[r] += data.values[i] * VALUE_BASIS[i][r] + slope * SLOPE_BASIS[i][r];
        }
        for r in 0..3 {
            normal[r] += dn * NORMAL_END_BASIS[i][r];
        }
    }
    for r in 0..3 {
        normal[r] += data.edge_dof * NORMAL_MID_BASIS[r];
    }
    EdgeTraces { start: a, end: b, value, normal }
}

/// Closed-form traces of E v on an edge of Σ.
pub fn companion_edge_traces(mesh: &Mesh, space: &TestSpace, v: &MorleyFunction, e: usize) -> Result<EdgeTraces> {
    if mesh.edges[e].tag != EdgeTag::Sigma {
        return Err(Error::EdgeNotOnSigma(e));
    }
    let mut data = TraceData { values: [0.0; 2], gradients: [[0.0; 2]; 2], edge_dof: v.dof(space, space.edge_dof(e)) };
    for (i, &w) in mesh.edges[e].endpoints.iter().enumerate() {
        data.values[i] = v.dof(space, w);
        if space.constrained[w] {
            continue;
        }
        let k = *mesh.vertex_elements(w).iter().min().expect("vertex has an element");
        let basis = element_basis(mesh, k)?;
        let c = v.local_coeffs(space, mesh, k);
        data.gradients[i] = basis.combine_gradient(&c, mesh.vertices[w]);
    }
    Ok(traces_from_data(mesh, e, &data))
}

/// A companion image viewed as an H² function for Fortin interpolation.
pub struct HctField<'a> {
    pub image: &'a CompanionImage,
}

impl Interpolable for HctField<'_> {
    fn vertex_value(&self, _mesh: &Mesh, v: usize) -> f64 {
        self.image.value(v)
    }

    fn edge_normal_integral(&self, mesh: &Mesh, e: usize) -> f64 {
        hct_edge_normal_integral(mesh, &self.image.dofs, e).expect("mesh elements are non-degenerate")
    }
}

/// ∫_e ∂_{n_e} w ds for a global HCT vector `w`, by quadrature on the adjacent element.
pub fn hct_edge_normal_integral(mesh: &Mesh, global: &[f64], e: usize) -> Result<f64> {
    let edge = &mesh.edges[e];
    let k = edge.elements.0;
    let i = mesh.element_edges[k].iter().position(|&x| x == e).expect("edge of element");
    let element = HctElement::new(&ElementGeometry::from_mesh(mesh, k))?;
    let f = element.piecewise(&local_hct_dofs(mesh, k, global));
    let [a, b] = edge.endpoints.map(|v| mesh.vertices[v]);
    let n = edge.normal;
    Ok(integrate_segment(a, b, 10, |x, _| {
        let g = f.gradient_on(i, x);
        g[0] * n[0] + g[1] * n[1]
    }))
}

/// Maximum over Morley basis functions φ and elements K of
/// [h⁻⁴‖φ−Eφ‖²_K + h⁻²|φ−Eφ|²_{H¹(K)} + |Eφ|²_{H²(K)}] / Σ_{K'∈ω(K)} |φ|²_{H²(K')}.
pub fn companion_boundedness(mesh: &Mesh, space: &TestSpace) -> Result<f64> {
    let op = CompanionOperator::new(mesh, space)?;
    let columns = op.matrix.transpose();
    let ne = mesh.n_elements();
    let bases = (0..ne).map(|k| element_basis(mesh, k)).collect::<Result<Vec<_>>>()?;
    let hcts = (0..ne).map(|k| HctElement::new(&ElementGeometry::from_mesh(mesh, k))).collect::<Result<Vec<_>>>()?;
    let rows: Vec<[usize; 12]> = (0..ne).map(|k| local_hct_rows(mesh, k)).collect();
    // Elements touching each HCT row, and vertex patches.
    let mut row_elements = vec![Vec::new(); hct_dim(mesh)];
    for (k, r) in rows.iter().enumerate() {
        for &x in r {
            row_elements[x].push(k);
        }
    }
    let rule = crate::fe_basis::tri_quad(6)?;

    let mut worst: f64 = 0.0;
    let mut hct_global = vec![0.0; hct_dim(mesh)];
    for col in 0..space.dim() {
        let g = space.global(col);
        let mut morley_support: Vec<usize> = if g < space.n_vertices {
            mesh.vertex_elements(g).to_vec()
        } else {
            let (k1, k2) = mesh.edges[g - space.n_vertices].elements;
            std::iter::once(k1).chain(k2).collect()
        };
        morley_support.sort_unstable();
        let local_coeffs = |k: usize| -> [f64; 6] {
            let d = space.element_dofs(mesh, k);
            d.map(|x| if x == g { 1.0 } else { 0.0 })
        };
        let h2_seminorm_sq = |k: usize| -> f64 {
            if morley_support.binary_search(&k).is_err() {
                return 0.0;
            }
            let h = bases[k].combine_hessian(&local_coeffs(k));
            mesh.area(k) * (h[0] * h[0] + 2.0 * h[1] * h[1] + h[2] * h[2])
        };
        let touched: Vec<usize> = columns.row(col).map(|(r, _)| r).collect();
        for (r, val) in columns.row(col) {
            hct_global[r] = val;
        }
        let mut elements: Vec<usize> = touched.iter().flat_map(|&r| row_elements[r].iter().copied()).chain(morley_support.iter().copied()).collect();
        elements.sort_unstable();
        elements.dedup();

        for &k in &elements {
            let c = local_coeffs(k);
            let f = hcts[k].piecewise(&local_hct_dofs(mesh, k, &hct_global));
            let hk = mesh.diameter(k);
            let (mut l2, mut h1, mut h2) = (0.0, 0.0, 0.0);
            for (s, tri) in hcts[k].sub_triangles().iter().enumerate() {
                let jac = 2.0 * crate::mesh::signed_area(tri[0], tri[1], tri[2]).abs();
                for (l, w) in rule.points.iter().zip(&rule.weights) {
                    let x = [0, 1].map(|t| l[0] * tri[0][t] + l[1] * tri[1][t] + l[2] * tri[2][t]);
                    let d = bases[k].combine(&c, x) - f.value_on(s, x);
                    let gm = bases[k].combine_gradient(&c, x);
                    let ge = f.gradient_on(s, x);
                    let he = f.hessian_on(s, x);
                    l2 += w * jac * d * d;
                    h1 += w * jac * ((gm[0] - ge[0]).powi(2) + (gm[1] - ge[1]).powi(2));
                    h2 += w * jac * (he[0] * he[0] + 2.0 * he[1] * he[1] + he[2] * he[2]);
                }
            }
            let num = l2 / hk.powi(4) + h1 / (hk * hk) + h2;
            let mut patch: Vec<usize> = mesh.elements[k].v.iter().flat_map(|&v| mesh.vertex_elements(v).iter().copied()).collect();
            patch.sort_unstable();
            patch.dedup();
            let den: f64 = patch.iter().map(|&kk| h2_seminorm_sq(kk)).sum();
            if num > 1e-14 * den.max(f64::MIN_POSITIVE) {
                worst = worst.max(num / den);
            }
        }
        for &r in &touched {
            hct_global[r] = 0.0;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{initial_mesh, uniform_refine, Problem};
    use crate::spaces::{build_spaces, morley_interpolate, SmoothFunction};
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_morley(space: &TestSpace, rng: &mut ChaCha8Rng) -> MorleyFunction {
        MorleyFunction((0..space.dim()).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    #[test]
    fn zero_maps_to_zero() {
        let m = uniform_refine(&initial_mesh(Problem::Uc));
        let (_, y) = build_spaces(&m);
        let img = companion(&m, &y, &MorleyFunction::zeros(&y)).unwrap();
        assert!(img.dofs.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn right_inverse_of_fortin_interpolation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for problem in [Problem::Uc, Problem::Cauchy] {
            let m = uniform_refine(&uniform_refine(&initial_mesh(problem)));
            let (_, y) = build_spaces(&m);
            let op = CompanionOperator::new(&m, &y).unwrap();
            for _ in 0..20 {
                let v = random_morley(&y, &mut rng);
                let img = op.apply(&v);
                let back = morley_interpolate(&m, &y, &HctField { image: &img });
                for (a, b) in v.0.iter().zip(&back.0) {
                    assert!((a - b).abs() < 1e-10, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn vertex_values_are_copied() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = uniform_refine(&initial_mesh(Problem::Cauchy));
        let (_, y) = build_spaces(&m);
        let v = random_morley(&y, &mut rng);
        let img = companion(&m, &y, &v).unwrap();
        for w in 0..m.n_vertices() {
            let expected = companion_vertex_value(&m, &y, &v, w).unwrap();
            assert_eq!(img.value(w), expected);
            if y.constrained[w] {
                assert_eq!(expected, 0.0);
            }
            let k = m.vertex_elements(w)[0];
            let el = HctElement::new(&ElementGeometry::from_mesh(&m, k)).unwrap();
            let f = el.piecewise(&img.local_dofs(&m, k));
            assert!((f.value(m.vertices[w]).unwrap() - expected).abs() < 1e-12);
        }
        assert!(companion_vertex_value(&m, &y, &v, m.n_vertices()).is_err());
    }

    #[test]
    fn quadratic_gradients_and_edge_averages() {
        // A quadratic vanishing with its gradient on the boundary is impossible, so check
        // only vertices and edges away from the constraints.
        let m = uniform_refine(&uniform_refine(&initial_mesh(Problem::Uc)));
        let (_, y) = build_spaces(&m);
        let p = |q: [f64; 2]| 0.3 + q[0] - 0.5 * q[1] + q[0] * q[0] - 0.7 * q[0] * q[1] + 0.4 * q[1] * q[1];
        let dp = |q: [f64; 2]| [1.0 + 2.0 * q[0] - 0.7 * q[1], -0.5 - 0.7 * q[0] + 0.8 * q[1]];
        let v = morley_interpolate(&m, &y, &SmoothFunction { value: p, gradient: dp });
        let img = companion(&m, &y, &v).unwrap();
        for w in 0..m.n_vertices() {
            let k = m.vertex_elements(w).iter().min().copied().unwrap();
            let touches_boundary = y.element_dofs(&m, k).iter().any(|&d| y.constrained[d]);
            if y.constrained[w] || touches_boundary {
                continue;
            }
            let g = img.gradient(w);
            let e = dp(m.vertices[w]);
            assert!((g[0] - e[0]).abs() < 1e-11 && (g[1] - e[1]).abs() < 1e-11);
        }
        for e in 0..m.n_edges() {
            if y.constrained[y.edge_dof(e)] {
                continue;
            }
            let got = hct_edge_normal_integral(&m, &img.dofs, e).unwrap();
            let exact = SmoothFunction { value: p, gradient: dp }.edge_normal_integral(&m, e);
            assert!((got - exact).abs() < 1e-11);
        }
    }

    #[test]
    fn edge_traces_match_full_hct() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = uniform_refine(&uniform_refine(&initial_mesh(Problem::Cauchy)));
        let (_, y) = build_spaces(&m);
        let v = random_morley(&y, &mut rng);
        let img = companion(&m, &y, &v).unwrap();
        for e in (0..m.n_edges()).filter(|&e| m.edges[e].tag == EdgeTag::Sigma) {
            let tr = companion_edge_traces(&m, &y, &v, e).unwrap();
            let k = m.edges[e].elements.0;
            let el = HctElement::new(&ElementGeometry::from_mesh(&m, k)).unwrap();
            let f = el.piecewise(&img.local_dofs(&m, k));
            let n = m.edges[e].normal;
            for i in 0..10 {
                let s = i as f64 / 9.0;
                let x = tr.point(s);
                assert!((tr.value_at(s) - f.value(x).unwrap()).abs() < 1e-9);
                let g = f.gradient(x).unwrap();
                assert!((tr.normal_at(s) - (g[0] * n[0] + g[1] * n[1])).abs() < 1e-9);
            }
        }
        let interior = (0..m.n_edges()).find(|&e| m.edges[e].tag == EdgeTag::Interior).unwrap();
        assert!(matches!(companion_edge_traces(&m, &y, &v, interior), Err(Error::EdgeNotOnSigma(_))));
    }

    #[test]
    fn traces_reproduce_quadratic() {
        let m = uniform_refine(&uniform_refine(&initial_mesh(Problem::Cauchy)));
        let (_, y) = build_spaces(&m);
        let p = |q: [f64; 2]| q[0] * q[1] + 0.5 * q[1] * q[1] + q[1];
        let dp = |q: [f64; 2]| [q[1], q[0] + q[1] + 1.0];
        let v = morley_interpolate(&m, &y, &SmoothFunction { value: p, gradient: dp });
        let mut checked = 0;
        for e in (0..m.n_edges()).filter(|&e| m.edges[e].tag == EdgeTag::Sigma) {
            // The gradient source elements must carry the unconstrained interpolant.
            let clean = m.edges[e].endpoints.iter().all(|&w| {
                let k = m.vertex_elements(w).iter().min().copied().unwrap();
                !y.constrained[w] && y.element_dofs(&m, k).iter().all(|&d| !y.constrained[d])
            });
            if !clean {
                continue;
            }
            checked += 1;
            let tr = companion_edge_traces(&m, &y, &v, e).unwrap();
            for i in 0..5 {
                let s = i as f64 / 4.0;
                assert!((tr.value_at(s) - p(tr.point(s))).abs() < 1e-12);
            }
        }
        assert!(checked > 0);
    }
}
