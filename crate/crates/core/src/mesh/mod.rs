//! Conforming triangulations with newest-vertex bisection.

mod io;
mod refine;
mod region;

pub use region::{classify_regions, clip_to_rect, polygon_area, Coverage, Rect, RegionMap, Regions};

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Benchmark family; decides the domain, the boundary tags and the essential constraints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Problem {
    /// Ω = (-1,1)², data on the interior subdomain ω.
    Uc,
    /// Ω = (-1,1)×(0,1), Cauchy data on Σ = (-1,1)×{0}.
    Cauchy,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Uc => "uc",
            Problem::Cauchy => "cauchy",
        }
    }

    pub fn domain(self) -> Rect {
        match self {
            Problem::Uc => Rect::new(-1.0, 1.0, -1.0, 1.0),
            Problem::Cauchy => Rect::new(-1.0, 1.0, 0.0, 1.0),
        }
    }
}

impl std::str::FromStr for Problem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uc" => Ok(Problem::Uc),
            "cauchy" => Ok(Problem::Cauchy),
            other => Err(Error::InvalidInput(format!("unknown problem `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Element {
    /// Vertex ids in counterclockwise order.
    pub v: [usize; 3],
    /// Local index of the refinement edge; local edge i is opposite vertex i.
    pub refinement_edge: u8,
    pub generation: u32,
}

impl Element {
    /// Endpoints of local edge `i` in counterclockwise order.
    pub fn edge_vertices(&self, i: usize) -> (usize, usize) {
        (self.v[(i + 1) % 3], self.v[(i + 2) % 3])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeTag {
    Interior,
    /// Data-carrying boundary part of the Cauchy problem.
    Sigma,
    /// Remaining boundary of the Cauchy problem.
    SigmaC,
    /// Boundary of the unique continuation problem.
    Boundary,
}

impl EdgeTag {
    pub fn is_boundary(self) -> bool {
        self != EdgeTag::Interior
    }

    fn code(self) -> &'static str {
        match self {
            EdgeTag::Interior => "interior",
            EdgeTag::Sigma => "sigma",
            EdgeTag::SigmaC => "sigma_c",
            EdgeTag::Boundary => "boundary",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    /// Vertex ids, lower id first.
    pub endpoints: [usize; 2],
    /// First adjacent element and, for interior edges, the second one.
    pub elements: (usize, Option<usize>),
    /// Counterclockwise rotation of the unit tangent from `endpoints[0]` to `endpoints[1]`.
    pub normal: [f64; 2],
    pub length: f64,
    pub tag: EdgeTag,
}

impl Edge {
    pub fn tangent(&self) -> [f64; 2] {
        [self.normal[1], -self.normal[0]]
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub problem: Problem,
    pub vertices: Vec<[f64; 2]>,
    pub elements: Vec<Element>,
    pub edges: Vec<Edge>,
    /// Global edge id of local edge i for every element.
    pub element_edges: Vec<[usize; 3]>,
    vertex_elements: Vec<Vec<usize>>,
    vertex_on_sigma_c: Vec<bool>,
    vertex_on_boundary: Vec<bool>,
}

const SIGMA_TOL: f64 = 1e-12;

impl Mesh {
    /// Builds the topology from raw vertices and elements.
    pub fn from_parts(problem: Problem, vertices: Vec<[f64; 2]>, elements: Vec<Element>) -> Result<Mesh> {
        let nv = vertices.len();
        for (k, el) in elements.iter().enumerate() {
            if el.v.iter().any(|&i| i >= nv) {
                return Err(Error::InvalidMesh(format!("element {k} references a missing vertex")));
            }
            if el.refinement_edge > 2 {
                return Err(Error::InvalidMesh(format!("element {k} has refinement edge {}", el.refinement_edge)));
            }
            let [a, b, c] = el.v.map(|i| vertices[i]);
            if signed_area(a, b, c) <= 0.0 {
                return Err(Error::InvalidMesh(format!("element {k} is not counterclockwise")));
            }
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(elements.len() * 2);
        let mut edges: Vec<Edge> = Vec::with_capacity(elements.len() * 3 / 2 + 4);
        let mut element_edges = Vec::with_capacity(elements.len());
        for (k, el) in elements.iter().enumerate() {
            let mut ids = [0; 3];
            for (i, id) in ids.iter_mut().enumerate() {
                let (p, q) = el.edge_vertices(i);
                let key = (p.min(q), p.max(q));
                *id = match lookup.get(&key) {
                    Some(&e) => {
                        let edge = &mut edges[e];
                        if edge.elements.1.is_some() {
                            return Err(Error::InvalidMesh(format!("edge {key:?} shared by more than two elements")));
                        }
                        edge.elements.1 = Some(k);
                        e
                    }
                    None => {
                        let e = edges.len();
                        let (pa, pb) = (vertices[key.0], vertices[key.1]);
                        let d = [pb[0] - pa[0], pb[1] - pa[1]];
                        let length = d[0].hypot(d[1]);
                        edges.push(Edge {
                            endpoints: [key.0, key.1],
                            elements: (k, None),
                            normal: [-d[1] / length, d[0] / length],
                            length,
                            tag: EdgeTag::Interior,
                        });
                        lookup.insert(key, e);
                        e
                    }
                };
            }
            element_edges.push(ids);
        }

        let mut vertex_on_sigma_c = vec![false; nv];
        let mut vertex_on_boundary = vec![false; nv];
        for edge in edges.iter_mut() {
            if edge.elements.1.is_some() {
                continue;
            }
            let [a, b] = edge.endpoints;
            edge.tag = match problem {
                Problem::Uc => EdgeTag::Boundary,
                Problem::Cauchy => {
                    if vertices[a][1].abs() < SIGMA_TOL && vertices[b][1].abs() < SIGMA_TOL {
                        EdgeTag::Sigma
                    } else {
                        EdgeTag::SigmaC
                    }
                }
            };
            vertex_on_boundary[a] = true;
            vertex_on_boundary[b] = true;
            if edge.tag == EdgeTag::SigmaC {
                vertex_on_sigma_c[a] = true;
                vertex_on_sigma_c[b] = true;
            }
        }

        let mut vertex_elements = vec![Vec::new(); nv];
        for (k, el) in elements.iter().enumerate() {
            for &i in &el.v {
                vertex_elements[i].push(k);
            }
        }
        if let Some(i) = vertex_elements.iter().position(|l| l.is_empty()) {
            return Err(Error::InvalidMesh(format!("vertex {i} belongs to no element")));
        }

        Ok(Mesh {
            problem,
            vertices,
            elements,
            edges,
            element_edges,
            vertex_elements,
            vertex_on_sigma_c,
            vertex_on_boundary,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn points(&self, k: usize) -> [[f64; 2]; 3] {
        self.elements[k].v.map(|i| self.vertices[i])
    }

    pub fn area(&self, k: usize) -> f64 {
        let [a, b, c] = self.points(k);
        signed_area(a, b, c)
    }

    /// Longest edge length of element `k`.
    pub fn diameter(&self, k: usize) -> f64 {
        self.element_edges[k].iter().map(|&e| self.edges[e].length).fold(0.0, f64::max)
    }

    pub fn centroid(&self, k: usize) -> [f64; 2] {
        let [a, b, c] = self.points(k);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Global normals of the three local edges of element `k`.
    pub fn edge_normals(&self, k: usize) -> [[f64; 2]; 3] {
        self.element_edges[k].map(|e| self.edges[e].normal)
    }

    /// +1 if the global normal of local edge `i` points out of element `k`, -1 otherwise.
    pub fn outward_sign(&self, k: usize, i: usize) -> f64 {
        let (p, q) = self.elements[k].edge_vertices(i);
        // Traversing lower id to higher id counterclockwise means the
        // counterclockwise rotated tangent points into the element.
        if p < q {
            -1.0
        } else {
            1.0
        }
    }

    pub fn edge_midpoint(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e].endpoints;
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }

    pub fn vertex_elements(&self, v: usize) -> &[usize] {
        &self.vertex_elements[v]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.vertex_on_boundary[v]
    }

    /// Whether the vertex lies on the closure of Σ^c (Cauchy) — always false for UC.
    pub fn is_sigma_c_vertex(&self, v: usize) -> bool {
        self.vertex_on_sigma_c[v]
    }

    /// Vertex id at the given coordinates, if any.
    pub fn find_vertex(&self, p: [f64; 2]) -> Option<usize> {
        let tol = 1e-12 * (1.0 + p[0].abs() + p[1].abs());
        self.vertices.iter().position(|q| (q[0] - p[0]).abs() <= tol && (q[1] - p[1]).abs() <= tol)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_elements()).map(|k| self.area(k)).sum()
    }

    pub fn min_angle_degrees(&self) -> f64 {
        let mut min = f64::INFINITY;
        for k in 0..self.n_elements() {
            let p = self.points(k);
            for i in 0..3 {
                let (a, b, c) = (p[i], p[(i + 1) % 3], p[(i + 2) % 3]);
                let u = [b[0] - a[0], b[1] - a[1]];
                let w = [c[0] - a[0], c[1] - a[1]];
                let cos = (u[0] * w[0] + u[1] * w[1]) / (u[0].hypot(u[1]) * w[0].hypot(w[1]));
                min = min.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        min
    }

    /// Conformity check: every interior edge is traversed in opposite directions by its two elements.
    pub fn check_conforming(&self) -> Result<()> {
        for (e, edge) in self.edges.iter().enumerate() {
            if let (k1, Some(k2)) = edge.elements {
                let dir = |k: usize| {
                    let i = self.element_edges[k].iter().position(|&x| x == e).expect("edge listed by element");
                    self.elements[k].edge_vertices(i)
                };
                let (p1, q1) = dir(k1);
                let (p2, q2) = dir(k2);
                if !(p1 == q2 && q1 == p2) {
                    return Err(Error::InvalidMesh(format!("edge {e} not traversed oppositely")));
                }
            } else if edge.tag == EdgeTag::Interior {
                return Err(Error::InvalidMesh(format!("edge {e} has one element but interior tag")));
            }
        }
        // A hanging vertex would show up as a boundary edge strictly inside the domain.
        let dom = self.problem.domain();
        for (e, edge) in self.edges.iter().enumerate() {
            if edge.tag.is_boundary() {
                let m = self.edge_midpoint(e);
                let on = (m[0] - dom.x0).abs() < 1e-12
                    || (m[0] - dom.x1).abs() < 1e-12
                    || (m[1] - dom.y0).abs() < 1e-12
                    || (m[1] - dom.y1).abs() < 1e-12;
                if !on {
                    return Err(Error::InvalidMesh(format!("edge {e} has a hanging vertex")));
                }
            }
        }
        Ok(())
    }
}

pub fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Initial triangulation with every interior vertex labelled as the newest vertex.
pub fn initial_mesh(problem: Problem) -> Mesh {
    let el = |v: [usize; 3]| Element { v, refinement_edge: 2, generation: 0 };
    let (vertices, elements) = match problem {
        Problem::Uc => (
            vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [0.0, 0.0]],
            vec![el([0, 1, 4]), el([1, 2, 4]), el([2, 3, 4]), el([3, 0, 4])],
        ),
        Problem::Cauchy => (
            vec![
                [-1.0, 0.0],
                [0.0, 0.0],
                [1.0, 0.0],
                [1.0, 1.0],
                [0.0, 1.0],
                [-1.0, 1.0],
                [-0.5, 0.5],
                [0.5, 0.5],
            ],
            vec![
                el([0, 1, 6]),
                el([1, 4, 6]),
                el([4, 5, 6]),
                el([5, 0, 6]),
                el([1, 2, 7]),
                el([2, 3, 7]),
                el([3, 4, 7]),
                el([4, 1, 7]),
            ],
        ),
    };
    Mesh::from_parts(problem, vertices, elements).expect("initial mesh is valid")
}

pub use refine::{bisect, bisect_with_parents, uniform_refine, uniform_refine_with_parents};
