//! Global DoF layout of the piecewise-constant trial space and the Morley test space.

use crate::error::Result;
use crate::fe_basis::{integrate_segment, ElementGeometry, MorleyLocalBasis};
use crate::mesh::{EdgeTag, Mesh, Problem};

/// Piecewise constants, one DoF per element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialSpace {
    pub dim: usize,
}

/// Morley space: global DoFs are vertex values [0, nv) followed by edge-midpoint
/// normal derivatives [nv, nv + ne); constrained DoFs are fixed to zero.
#[derive(Clone, Debug)]
pub struct TestSpace {
    pub n_vertices: usize,
    pub n_edges: usize,
    pub constrained: Vec<bool>,
    free_index: Vec<Option<usize>>,
    free_dofs: Vec<usize>,
}

impl TestSpace {
    pub fn new(mesh: &Mesh) -> TestSpace {
        let (nv, ne) = (mesh.n_vertices(), mesh.n_edges());
        let mut constrained = vec![false; nv + ne];
        for v in 0..nv {
            constrained[v] = match mesh.problem {
                Problem::Uc => mesh.is_boundary_vertex(v),
                Problem::Cauchy => mesh.is_sigma_c_vertex(v),
            };
        }
        for (e, edge) in mesh.edges.iter().enumerate() {
            constrained[nv + e] = matches!(edge.tag, EdgeTag::Boundary | EdgeTag::SigmaC);
        }
        let mut free_index = vec![None; nv + ne];
        let mut free_dofs = Vec::new();
        for (g, &c) in constrained.iter().enumerate() {
            if !c {
                free_index[g] = Some(free_dofs.len());
                free_dofs.push(g);
            }
        }
        TestSpace { n_vertices: nv, n_edges: ne, constrained, free_index, free_dofs }
    }

    pub fn dim(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn vertex_dof(&self, v: usize) -> usize {
        v
    }

    pub fn edge_dof(&self, e: usize) -> usize {
        self.n_vertices + e
    }

    /// Free index of a global DoF.
    pub fn free(&self, global: usize) -> Option<usize> {
        self.free_index[global]
    }

    /// Global DoF of a free index.
    pub fn global(&self, free: usize) -> usize {
        self.free_dofs[free]
    }

    /// Global DoFs of element `k` in local Morley order.
    pub fn element_dofs(&self, mesh: &Mesh, k: usize) -> [usize; 6] {
        let v = mesh.elements[k].v;
        let e = mesh.element_edges[k];
        [v[0], v[1], v[2], self.n_vertices + e[0], self.n_vertices + e[1], self.n_vertices + e[2]]
    }

    /// Free indices of element `k` in local order.
    pub fn element_free(&self, mesh: &Mesh, k: usize) -> [Option<usize>; 6] {
        self.element_dofs(mesh, k).map(|g| self.free_index[g])
    }
}

pub fn build_spaces(mesh: &Mesh) -> (TrialSpace, TestSpace) {
    (TrialSpace { dim: mesh.n_elements() }, TestSpace::new(mesh))
}

#[derive(Clone, Debug, PartialEq)]
pub struct P0Function(pub Vec<f64>);

/// Coefficients over the free DoFs of a [`TestSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct MorleyFunction(pub Vec<f64>);

impl MorleyFunction {
    pub fn zeros(space: &TestSpace) -> MorleyFunction {
        MorleyFunction(vec![0.0; space.dim()])
    }

    /// Value of a global DoF (zero if constrained).
    pub fn dof(&self, space: &TestSpace, global: usize) -> f64 {
        space.free(global).map_or(0.0, |i| self.0[i])
    }

    pub fn local_coeffs(&self, space: &TestSpace, mesh: &Mesh, k: usize) -> [f64; 6] {
        space.element_free(mesh, k).map(|f| f.map_or(0.0, |i| self.0[i]))
    }
}

/// Morley basis of element `k` with the global edge normals.
pub fn element_basis(mesh: &Mesh, k: usize) -> Result<MorleyLocalBasis> {
    MorleyLocalBasis::new(&ElementGeometry::from_mesh(mesh, k), k)
}

/// Functions that can be interpolated into the Morley space.
pub trait Interpolable {
    fn vertex_value(&self, mesh: &Mesh, v: usize) -> f64;
    /// ∫_e ∂_{n_e} f ds with the global edge normal.
    fn edge_normal_integral(&self, mesh: &Mesh, e: usize) -> f64;
}

/// A smooth function given by closures for its value and gradient.
pub struct SmoothFunction<F, G> {
    pub value: F,
    pub gradient: G,
}

impl<F, G> Interpolable for SmoothFunction<F, G>
where
    F: Fn([f64; 2]) -> f64,
    G: Fn([f64; 2]) -> [f64; 2],
{
    fn vertex_value(&self, mesh: &Mesh, v: usize) -> f64 {
        (self.value)(mesh.vertices[v])
    }

    fn edge_normal_integral(&self, mesh: &Mesh, e: usize) -> f64 {
        let edge = &mesh.edges[e];
        let n = edge.normal;
        let [a, b] = edge.endpoints.map(|i| mesh.vertices[i]);
        integrate_segment(a, b, 10, |x, _| {
            let g = (self.gradient)(x);
            g[0] * n[0] + g[1] * n[1]
        })
    }
}

/// Fortin interpolation: vertex values and edge averages of the normal derivative.
pub fn morley_interpolate(mesh: &Mesh, space: &TestSpace, f: &impl Interpolable) -> MorleyFunction {
    let mut out = MorleyFunction::zeros(space);
    for (i, c) in out.0.iter_mut().enumerate() {
        let g = space.global(i);
        *c = if g < space.n_vertices {
            f.vertex_value(mesh, g)
        } else {
            let e = g - space.n_vertices;
            f.edge_normal_integral(mesh, e) / mesh.edges[e].length
        };
    }
    out
}

/// The Morley function itself, evaluated elementwise.
impl Interpolable for (&TestSpace, &MorleyFunction) {
    fn vertex_value(&self, _mesh: &Mesh, v: usize) -> f64 {
        self.1.dof(self.0, v)
    }

    fn edge_normal_integral(&self, mesh: &Mesh, e: usize) -> f64 {
        // The normal trace from either side is affine with the shared midpoint value.
        self.1.dof(self.0, self.0.edge_dof(e)) * mesh.edges[e].length
    }
}
