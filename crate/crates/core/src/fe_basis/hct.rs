use nalgebra::DMatrix;

use super::morley::ElementGeometry;
use crate::error::{Error, Result};

/// Local HCT DoFs: values at the three vertices, gradients (x, y) at the three vertices,
/// normal derivatives (global edge normal) at the three edge midpoints.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HctDofs(pub [f64; 12]);

impl HctDofs {
    pub fn value(&self, i: usize) -> f64 {
        self.0[i]
    }
    pub fn gradient(&self, i: usize) -> [f64; 2] {
        [self.0[3 + 2 * i], self.0[4 + 2 * i]]
    }
    pub fn normal_derivative(&self, i: usize) -> f64 {
        self.0[9 + i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HctOrder {
    Value,
    Gradient,
    Hessian,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HctValue {
    Value(f64),
    Gradient([f64; 2]),
    /// (xx, xy, yy)
    Hessian([f64; 3]),
}

const EXPONENTS: [(i32, i32); 10] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)];

fn powi(x: f64, n: i32) -> f64 {
    if n <= 0 {
        1.0
    } else {
        x.powi(n)
    }
}

fn cubic_values(xi: f64, eta: f64) -> [f64; 10] {
    EXPONENTS.map(|(a, b)| powi(xi, a) * powi(eta, b))
}

fn cubic_gradients(xi: f64, eta: f64) -> [[f64; 10]; 2] {
    [
        EXPONENTS.map(|(a, b)| a as f64 * powi(xi, a - 1) * powi(eta, b)),
        EXPONENTS.map(|(a, b)| b as f64 * powi(xi, a) * powi(eta, b - 1)),
    ]
}

fn cubic_hessians(xi: f64, eta: f64) -> [[f64; 10]; 3] {
    [
        EXPONENTS.map(|(a, b)| (a * (a - 1)) as f64 * powi(xi, a - 2) * powi(eta, b)),
        EXPONENTS.map(|(a, b)| (a * b) as f64 * powi(xi, a - 1) * powi(eta, b - 1)),
        EXPONENTS.map(|(a, b)| (b * (b - 1)) as f64 * powi(xi, a) * powi(eta, b - 2)),
    ]
}

fn dot10(a: &[f64; 10], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Clough–Tocher macro-element: the triangle split at its centroid into sub-triangles
/// T_i = (c, p_{i+1}, p_{i+2}); cubic coefficients per sub-triangle in scaled coordinates.
#[derive(Clone, Debug)]
pub struct HctElement {
    pub geometry: ElementGeometry,
    center: [f64; 2],
    h: f64,
    /// map[10 s + r][j]: coefficient of monomial r on sub-triangle s for local DoF j.
    map: Vec<[f64; 12]>,
}

/// Cubic coefficients of a concrete HCT function on one element.
#[derive(Clone, Debug)]
pub struct HctPiecewise<'a> {
    element: &'a HctElement,
    coeffs: [[f64; 10]; 3],
}

impl HctElement {
    pub fn new(geometry: &ElementGeometry) -> Result<HctElement> {
        let center = geometry.centroid();
        let h = geometry.diameter();
        let local = |p: [f64; 2]| ((p[0] - center[0]) / h, (p[1] - center[1]) / h);
        let p = geometry.points;
        let mut a = DMatrix::<f64>::zeros(33, 30);
        let mut rhs = DMatrix::<f64>::zeros(33, 12);
        let mut row = 0;

        // C1 continuity across the internal edge c → p_{i+2} shared by T_i and T_{i+1}.
        for i in 0..3 {
            let (s, t) = (i, (i + 1) % 3);
            let q = p[(i + 2) % 3];
            let d = [q[0] - center[0], q[1] - center[1]];
            let len = d[0].hypot(d[1]);
            let n = [-d[1] / len, d[0] / len];
            for k in 0..4 {
                let x = [center[0] + d[0] * k as f64 / 3.0, center[1] + d[1] * k as f64 / 3.0];
                let (xi, eta) = local(x);
                let v = cubic_values(xi, eta);
                for r in 0..10 {
                    a[(row, 10 * s + r)] = v[r];
                    a[(row, 10 * t + r)] = -v[r];
                }
                row += 1;
            }
            for k in 0..3 {
                let x = [center[0] + d[0] * k as f64 / 2.0, center[1] + d[1] * k as f64 / 2.0];
                let (xi, eta) = local(x);
                let g = cubic_gradients(xi, eta);
                for r in 0..10 {
                    let dn = n[0] * g[0][r] + n[1] * g[1][r];
                    a[(row, 10 * s + r)] = dn;
                    a[(row, 10 * t + r)] = -dn;
                }
                row += 1;
            }
        }
        // Vertex DoFs imposed on T_{k+2}, which contains p_k; derivatives in ξ carry a factor h.
        for k in 0..3 {
            let s = (k + 2) % 3;
            let (xi, eta) = local(p[k]);
            let v = cubic_values(xi, eta);
            let g = cubic_gradients(xi, eta);
            for r in 0..10 {
                a[(row, 10 * s + r)] = v[r];
                a[(row + 1, 10 * s + r)] = g[0][r];
                a[(row + 2, 10 * s + r)] = g[1][r];
            }
            rhs[(row, k)] = 1.0;
            rhs[(row + 1, 3 + 2 * k)] = h;
            rhs[(row + 2, 4 + 2 * k)] = h;
            row += 3;
        }
        for i in 0..3 {
            let (xi, eta) = local(geometry.edge_midpoint(i));
            let g = cubic_gradients(xi, eta);
            let n = geometry.normals[i];
            for r in 0..10 {
                a[(row, 10 * i + r)] = n[0] * g[0][r] + n[1] * g[1][r];
            }
            rhs[(row, 9 + i)] = h;
            row += 1;
        }
        debug_assert_eq!(row, 33);

        let svd = a.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 1e-10 * smax) {
            return Err(Error::SingularLocalSystem { sigma_min: smin / smax });
        }
        let x = svd.solve(&rhs, 0.0).map_err(|_| Error::SingularLocalSystem { sigma_min: smin / smax })?;
        let map = (0..30).map(|r| std::array::from_fn(|j| x[(r, j)])).collect();
        Ok(HctElement { geometry: *geometry, center, h, map })
    }

    pub fn sub_triangles(&self) -> [[[f64; 2]; 3]; 3] {
        let p = self.geometry.points;
        std::array::from_fn(|i| [self.center, p[(i + 1) % 3], p[(i + 2) % 3]])
    }

    pub fn piecewise(&self, dofs: &HctDofs) -> HctPiecewise<'_> {
        let mut coeffs = [[0.0; 10]; 3];
        for (s, c) in coeffs.iter_mut().enumerate() {
            for (r, cr) in c.iter_mut().enumerate() {
                *cr = dot12(&self.map[10 * s + r], &dofs.0);
            }
        }
        HctPiecewise { element: self, coeffs }
    }

    /// The twelve local basis functions as piecewise cubics.
    pub fn basis(&self, j: usize) -> HctPiecewise<'_> {
        let mut d = HctDofs::default();
        d.0[j] = 1.0;
        self.piecewise(&d)
    }

    /// Sub-triangle containing `p`, or an error if `p` is outside the element.
    pub fn locate(&self, p: [f64; 2]) -> Result<usize> {
        let l = self.geometry.barycentric(p);
        if l.iter().any(|&x| x < -1e-12) {
            return Err(Error::PointOutsideElement { x: p[0], y: p[1] });
        }
        let mut s = 0;
        for i in 1..3 {
            if l[i] < l[s] {
                s = i;
            }
        }
        Ok(s)
    }

    pub fn evaluate(&self, dofs: &HctDofs, p: [f64; 2], order: HctOrder) -> Result<HctValue> {
        self.piecewise(dofs).evaluate(p, order)
    }

    /// HCT DoFs of a smooth function.
    pub fn dofs_of(&self, value: impl Fn([f64; 2]) -> f64, gradient: impl Fn([f64; 2]) -> [f64; 2]) -> HctDofs {
        let g = &self.geometry;
        let mut d = [0.0; 12];
        for k in 0..3 {
            d[k] = value(g.points[k]);
            let gr = gradient(g.points[k]);
            d[3 + 2 * k] = gr[0];
            d[4 + 2 * k] = gr[1];
            let gm = gradient(g.edge_midpoint(k));
            d[9 + k] = g.normals[k][0] * gm[0] + g.normals[k][1] * gm[1];
        }
        HctDofs(d)
    }
}

fn dot12(a: &[f64; 12], b: &[f64; 12]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl HctPiecewise<'_> {
    fn local(&self, p: [f64; 2]) -> (f64, f64) {
        let e = self.element;
        ((p[0] - e.center[0]) / e.h, (p[1] - e.center[1]) / e.h)
    }

    /// Value on sub-triangle `s` (no location check; the cubic extends polynomially).
    pub fn value_on(&self, s: usize, p: [f64; 2]) -> f64 {
        let (xi, eta) = self.local(p);
        dot10(&cubic_values(xi, eta), &self.coeffs[s])
    }

    pub fn gradient_on(&self, s: usize, p: [f64; 2]) -> [f64; 2] {
        let (xi, eta) = self.local(p);
        let g = cubic_gradients(xi, eta);
        let h = self.element.h;
        [dot10(&g[0], &self.coeffs[s]) / h, dot10(&g[1], &self.coeffs[s]) / h]
    }

    pub fn hessian_on(&self, s: usize, p: [f64; 2]) -> [f64; 3] {
        let (xi, eta) = self.local(p);
        let hh = cubic_hessians(xi, eta);
        let h2 = self.element.h * self.element.h;
        hh.map(|row| dot10(&row, &self.coeffs[s]) / h2)
    }

    pub fn evaluate(&self, p: [f64; 2], order: HctOrder) -> Result<HctValue> {
        let s = self.element.locate(p)?;
        Ok(match order {
            HctOrder::Value => HctValue::Value(self.value_on(s, p)),
            HctOrder::Gradient => HctValue::Gradient(self.gradient_on(s, p)),
            HctOrder::Hessian => HctValue::Hessian(self.hessian_on(s, p)),
        })
    }

    pub fn value(&self, p: [f64; 2]) -> Result<f64> {
        Ok(self.value_on(self.element.locate(p)?, p))
    }

    pub fn gradient(&self, p: [f64; 2]) -> Result<[f64; 2]> {
        Ok(self.gradient_on(self.element.locate(p)?, p))
    }
}

/// One-shot evaluation; builds the local element each call.
pub fn hct_evaluate(geometry: &ElementGeometry, dofs: &HctDofs, point: [f64; 2], order: HctOrder) -> Result<HctValue> {
    HctElement::new(geometry)?.evaluate(dofs, point, order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe_basis::quadrature::integrate_segment;
    use proptest::prelude::*;

    fn triangle() -> impl Strategy<Value = ElementGeometry> {
        (-3.0..3.0f64, -3.0..3.0f64, 0.05..2.0f64, 0.0..6.3f64, -1.0..1.0f64, 0.4..1.5f64).prop_map(
            |(x, y, s, rot, shear, aspect)| {
                let (c, sn) = (rot.cos(), rot.sin());
                let local = [[0.0, 0.0], [1.0, 0.0], [0.5 + 0.4 * shear, aspect]];
                let pts = local.map(|p| [x + s * (c * p[0] - sn * p[1]), y + s * (sn * p[0] + c * p[1])]);
                ElementGeometry::with_outward_normals(pts)
            },
        )
    }

    fn at(g: &ElementGeometry, l: [f64; 3]) -> [f64; 2] {
        [0, 1].map(|t| l[0] * g.points[0][t] + l[1] * g.points[1][t] + l[2] * g.points[2][t])
    }

    #[test]
    fn constant_dofs() {
        let g = ElementGeometry::with_outward_normals([[0.0, 0.0], [1.0, 0.0], [0.3, 0.8]]);
        let mut d = HctDofs::default();
        d.0[..3].copy_from_slice(&[1.0; 3]);
        for l in [[0.2, 0.3, 0.5], [0.9, 0.05, 0.05], [0.0, 0.5, 0.5]] {
            let p = at(&g, l);
            let HctValue::Value(v) = hct_evaluate(&g, &d, p, HctOrder::Value).unwrap() else { unreachable!() };
            let HctValue::Gradient(gr) = hct_evaluate(&g, &d, p, HctOrder::Gradient).unwrap() else { unreachable!() };
            assert!((v - 1.0).abs() < 1e-12 && gr[0].abs() < 1e-11 && gr[1].abs() < 1e-11);
        }
    }

    #[test]
    fn outside_point_rejected() {
        let g = ElementGeometry::with_outward_normals([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let r = hct_evaluate(&g, &HctDofs::default(), [1.0, 1.0], HctOrder::Value);
        assert!(matches!(r, Err(Error::PointOutsideElement { .. })));
    }

    #[test]
    fn nodal_bubble_edge_integral() {
        let g = ElementGeometry::with_outward_normals([[0.1, -0.2], [1.3, 0.1], [0.4, 0.9]]);
        let e = HctElement::new(&g).unwrap();
        for i in 0..3 {
            let b = e.basis(9 + i);
            let (a, c) = (g.points[(i + 1) % 3], g.points[(i + 2) % 3]);
            let n = g.normals[i];
            // The normal trace is quadratic; sub-triangle i holds the whole edge.
            let v = integrate_segment(a, c, 4, |x, _| {
                let gr = b.gradient_on(i, x);
                gr[0] * n[0] + gr[1] * n[1]
            });
            let h = g.edge_length(i);
            assert!((v - 2.0 / 3.0 * h).abs() < 1e-12 * h, "edge {i}: {v} vs {}", 2.0 / 3.0 * h);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn reproduces_cubics(g in triangle(), c in prop::array::uniform10(-1.0..1.0f64)) {
            let p = |x: [f64; 2]| {
                let v = cubic_values(x[0], x[1]);
                dot10(&v, &c)
            };
            let dp = |x: [f64; 2]| {
                let gr = cubic_gradients(x[0], x[1]);
                [dot10(&gr[0], &c), dot10(&gr[1], &c)]
            };
            let e = HctElement::new(&g).unwrap();
            let f = e.piecewise(&e.dofs_of(p, dp));
            let scale = 1.0 + g.points.iter().map(|x| p(*x).abs() + dp(*x)[0].abs() + dp(*x)[1].abs()).fold(0.0, f64::max);
            for l in [[0.2, 0.3, 0.5], [0.6, 0.2, 0.2], [1.0, 0.0, 0.0], [0.34, 0.33, 0.33], [0.05, 0.05, 0.9]] {
                let x = at(&g, l);
                prop_assert!((f.value(x).unwrap() - p(x)).abs() < 1e-10 * scale);
                let gr = f.gradient(x).unwrap();
                let ex = dp(x);
                prop_assert!((gr[0] - ex[0]).abs() < 1e-10 * scale && (gr[1] - ex[1]).abs() < 1e-10 * scale);
            }
        }

        #[test]
        fn c1_across_internal_edges(g in triangle(), d in prop::array::uniform12(-1.0..1.0f64)) {
            let e = HctElement::new(&g).unwrap();
            let f = e.piecewise(&HctDofs(d));
            let c = g.centroid();
            let h = g.diameter();
            for i in 0..3 {
                let q = g.points[(i + 2) % 3];
                for k in 0..10 {
                    let t = k as f64 / 9.0;
                    let x = [c[0] + t * (q[0] - c[0]), c[1] + t * (q[1] - c[1])];
                    let (s1, s2) = (i, (i + 1) % 3);
                    prop_assert!((f.value_on(s1, x) - f.value_on(s2, x)).abs() < 1e-9 * (1.0 + h));
                    let (g1, g2) = (f.gradient_on(s1, x), f.gradient_on(s2, x));
                    prop_assert!((g1[0] - g2[0]).abs() < 1e-9 * (1.0 + 1.0 / h) && (g1[1] - g2[1]).abs() < 1e-9 * (1.0 + 1.0 / h));
                }
            }
        }
    }
}
