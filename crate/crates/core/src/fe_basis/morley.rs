use nalgebra::Matrix6;

use crate::error::{Error, Result};

pub const MAX_CONDITION: f64 = 1e12;

/// Triangle vertices (counterclockwise) and the global normals of local edges (edge i opposite vertex i).
#[derive(Clone, Copy, Debug)]
pub struct ElementGeometry {
    pub points: [[f64; 2]; 3],
    pub normals: [[f64; 2]; 3],
}

impl ElementGeometry {
    /// Geometry with outward normals; convenient for standalone triangles.
    pub fn with_outward_normals(points: [[f64; 2]; 3]) -> ElementGeometry {
        let mut normals = [[0.0; 2]; 3];
        for (i, n) in normals.iter_mut().enumerate() {
            let (a, b) = (points[(i + 1) % 3], points[(i + 2) % 3]);
            let (tx, ty) = (b[0] - a[0], b[1] - a[1]);
            let l = tx.hypot(ty);
            *n = [ty / l, -tx / l];
        }
        ElementGeometry { points, normals }
    }

    pub fn from_mesh(mesh: &crate::mesh::Mesh, k: usize) -> ElementGeometry {
        ElementGeometry { points: mesh.points(k), normals: mesh.edge_normals(k) }
    }

    pub fn centroid(&self) -> [f64; 2] {
        let p = &self.points;
        [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
    }

    pub fn diameter(&self) -> f64 {
        let p = &self.points;
        (0..3).map(|i| (p[i][0] - p[(i + 1) % 3][0]).hypot(p[i][1] - p[(i + 1) % 3][1])).fold(0.0, f64::max)
    }

    pub fn edge_midpoint(&self, i: usize) -> [f64; 2] {
        let (a, b) = (self.points[(i + 1) % 3], self.points[(i + 2) % 3]);
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }

    pub fn edge_length(&self, i: usize) -> f64 {
        let (a, b) = (self.points[(i + 1) % 3], self.points[(i + 2) % 3]);
        (b[0] - a[0]).hypot(b[1] - a[1])
    }

    pub fn area(&self) -> f64 {
        crate::mesh::signed_area(self.points[0], self.points[1], self.points[2])
    }

    /// Barycentric coordinates of `x`.
    pub fn barycentric(&self, x: [f64; 2]) -> [f64; 3] {
        let p = &self.points;
        let a = self.area();
        let l0 = crate::mesh::signed_area(x, p[1], p[2]) / a;
        let l1 = crate::mesh::signed_area(p[0], x, p[2]) / a;
        [l0, l1, 1.0 - l0 - l1]
    }
}

/// The six Morley quadratics of one element, as coefficients of the monomials
/// 1, ξ, η, ξ², ξη, η² in the scaled coordinates ξ = (x - x_c)/h, η = (y - y_c)/h.
#[derive(Clone, Debug)]
pub struct MorleyLocalBasis {
    pub geometry: ElementGeometry,
    center: [f64; 2],
    h: f64,
    /// coeffs[j] are the monomial coefficients of basis function j.
    coeffs: [[f64; 6]; 6],
}

fn norm1(m: &Matrix6<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn monomials(xi: f64, eta: f64) -> [f64; 6] {
    [1.0, xi, eta, xi * xi, xi * eta, eta * eta]
}

fn monomial_gradients(xi: f64, eta: f64) -> ([f64; 6], [f64; 6]) {
    ([0.0, 1.0, 0.0, 2.0 * xi, eta, 0.0], [0.0, 0.0, 1.0, 0.0, xi, 2.0 * eta])
}

pub fn morley_basis(geometry: &ElementGeometry) -> Result<MorleyLocalBasis> {
    MorleyLocalBasis::new(geometry, usize::MAX)
}

impl MorleyLocalBasis {
    /// `element` only labels the error for degenerate triangles.
    pub fn new(geometry: &ElementGeometry, element: usize) -> Result<MorleyLocalBasis> {
        let center = geometry.centroid();
        let h = geometry.diameter();
        let local = |p: [f64; 2]| ((p[0] - center[0]) / h, (p[1] - center[1]) / h);
        // Rows: DoF functionals applied to the monomials, normal derivatives scaled by h.
        let mut v = Matrix6::<f64>::zeros();
        for i in 0..3 {
            let (xi, eta) = local(geometry.points[i]);
            let m = monomials(xi, eta);
            for k in 0..6 {
                v[(i, k)] = m[k];
            }
            let (xi, eta) = local(geometry.edge_midpoint(i));
            let (gx, gy) = monomial_gradients(xi, eta);
            let n = geometry.normals[i];
            for k in 0..6 {
                v[(3 + i, k)] = n[0] * gx[k] + n[1] * gy[k];
            }
        }
        let inv = v.try_inverse().ok_or(Error::DegenerateElement { element, condition: f64::INFINITY })?;
        let condition = norm1(&v) * norm1(&inv);
        if !condition.is_finite() || condition > MAX_CONDITION {
            return Err(Error::DegenerateElement { element, condition });
        }
        let mut coeffs = [[0.0; 6]; 6];
        for (j, c) in coeffs.iter_mut().enumerate() {
            // Undo the row scaling of the normal-derivative functionals.
            let s = if j >= 3 { h } else { 1.0 };
            for k in 0..6 {
                c[k] = inv[(k, j)] * s;
            }
        }
        Ok(MorleyLocalBasis { geometry: *geometry, center, h, coeffs })
    }

    fn local(&self, p: [f64; 2]) -> (f64, f64) {
        ((p[0] - self.center[0]) / self.h, (p[1] - self.center[1]) / self.h)
    }

    pub fn value(&self, j: usize, p: [f64; 2]) -> f64 {
        let (xi, eta) = self.local(p);
        let m = monomials(xi, eta);
        (0..6).map(|k| self.coeffs[j][k] * m[k]).sum()
    }

    pub fn values(&self, p: [f64; 2]) -> [f64; 6] {
        let (xi, eta) = self.local(p);
        let m = monomials(xi, eta);
        std::array::from_fn(|j| (0..6).map(|k| self.coeffs[j][k] * m[k]).sum())
    }

    pub fn gradient(&self, j: usize, p: [f64; 2]) -> [f64; 2] {
        let (xi, eta) = self.local(p);
        let (gx, gy) = monomial_gradients(xi, eta);
        let c = &self.coeffs[j];
        let dx: f64 = (0..6).map(|k| c[k] * gx[k]).sum();
        let dy: f64 = (0..6).map(|k| c[k] * gy[k]).sum();
        [dx / self.h, dy / self.h]
    }

    /// Constant Hessian (xx, xy, yy).
    pub fn hessian(&self, j: usize) -> [f64; 3] {
        let c = &self.coeffs[j];
        let s = 1.0 / (self.h * self.h);
        [2.0 * c[3] * s, c[4] * s, 2.0 * c[5] * s]
    }

    pub fn laplacian(&self, j: usize) -> f64 {
        let [xx, _, yy] = self.hessian(j);
        xx + yy
    }

    /// The six DoFs of a function given by its value and gradient.
    pub fn dofs_of(&self, value: impl Fn([f64; 2]) -> f64, gradient: impl Fn([f64; 2]) -> [f64; 2]) -> [f64; 6] {
        let g = &self.geometry;
        let mut d = [0.0; 6];
        for i in 0..3 {
            d[i] = value(g.points[i]);
            let gr = gradient(g.edge_midpoint(i));
            d[3 + i] = g.normals[i][0] * gr[0] + g.normals[i][1] * gr[1];
        }
        d
    }

    /// Evaluates Σ_j c_j φ_j at `p`.
    pub fn combine(&self, c: &[f64; 6], p: [f64; 2]) -> f64 {
        self.values(p).iter().zip(c).map(|(v, c)| v * c).sum()
    }

    pub fn combine_gradient(&self, c: &[f64; 6], p: [f64; 2]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for j in 0..6 {
            let gj = self.gradient(j, p);
            g[0] += c[j] * gj[0];
            g[1] += c[j] * gj[1];
        }
        g
    }

    pub fn combine_hessian(&self, c: &[f64; 6]) -> [f64; 3] {
        let mut h = [0.0; 3];
        for j in 0..6 {
            let hj = self.hessian(j);
            for t in 0..3 {
                h[t] += c[j] * hj[t];
            }
        }
        h
    }
}
