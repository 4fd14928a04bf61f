use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Rule on the reference triangle (0,0),(1,0),(0,1): barycentric points, weights summing to 1/2.
#[derive(Clone, Debug)]
pub struct TriRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Rule on [0,1]: weights sum to 1.
#[derive(Clone, Debug)]
pub struct LineRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Rule with physical points and weights, e.g. for a clipped polygon.
#[derive(Clone, Debug, Default)]
pub struct PhysicalRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl PhysicalRule {
    pub fn integrate(&self, mut f: impl FnMut([f64; 2]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }
}

pub const TRI_DEGREES: [usize; 4] = [2, 4, 6, 10];

/// Triangle rule of exactly the requested degree ∈ {2,4,6,10}.
pub fn tri_quad(degree: usize) -> Result<&'static TriRule> {
    static RULES: [OnceLock<TriRule>; 4] = [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let i = TRI_DEGREES.iter().position(|&d| d == degree).ok_or(Error::UnsupportedDegree(degree))?;
    Ok(RULES[i].get_or_init(|| build_tri_rule(degree)))
}

/// Smallest available triangle rule exact to at least `degree`.
pub fn tri_quad_at_least(degree: usize) -> Result<&'static TriRule> {
    let d = TRI_DEGREES.iter().copied().find(|&d| d >= degree).ok_or(Error::UnsupportedDegree(degree))?;
    tri_quad(d)
}

fn symmetric_orbits(orbits: &[(&[f64], f64)]) -> TriRule {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for &(coords, w) in orbits {
        let pts: Vec<[f64; 3]> = match *coords {
            [a] => vec![[a, a, 1.0 - 2.0 * a], [a, 1.0 - 2.0 * a, a], [1.0 - 2.0 * a, a, a]],
            [a, b] => {
                let c = 1.0 - a - b;
                vec![[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
            }
            _ => unreachable!(),
        };
        for p in pts {
            points.push(p);
            weights.push(0.5 * w);
        }
    }
    TriRule { points, weights, degree: 0 }
}

fn build_tri_rule(degree: usize) -> TriRule {
    let mut rule = match degree {
        2 => symmetric_orbits(&[(&[1.0 / 6.0], 1.0 / 3.0)]),
        4 => symmetric_orbits(&[
            (&[0.445948490915965], 0.223381589678011),
            (&[0.091576213509771], 0.109951743655322),
        ]),
        6 => symmetric_orbits(&[
            (&[0.249286745170910], 0.116786275726379),
            (&[0.063089014491502], 0.050844906370207),
            (&[0.310352451033785, 0.053145049844816], 0.082851075618374),
        ]),
        _ => collapsed_rule(degree),
    };
    rule.degree = degree;
    rule
}

/// Conical product rule: x = u, y = v(1-u), exact to `degree`.
fn collapsed_rule(degree: usize) -> TriRule {
    let n = degree / 2 + 1;
    let g = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&u, &wu) in g.points.iter().zip(&g.weights) {
        for (&v, &wv) in g.points.iter().zip(&g.weights) {
            let x = u;
            let y = v * (1.0 - u);
            points.push([1.0 - x - y, x, y]);
            weights.push(wu * wv * (1.0 - u));
        }
    }
    TriRule { points, weights, degree }
}

/// n-point Gauss–Legendre rule on [0,1] (exact to degree 2n-1).
pub fn gauss_legendre(n: usize) -> LineRule {
    assert!(n >= 1);
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let dp = legendre(n, x).1;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map from [-1,1] to [0,1].
        points[i] = 0.5 * (1.0 - x);
        points[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    LineRule { points, weights, degree: 2 * n - 1 }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule on [0,1] exact to `degree`.
pub fn edge_quad(degree: usize) -> &'static LineRule {
    static RULES: OnceLock<Vec<LineRule>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (1..=40).map(gauss_legendre).collect());
    let n = (degree + 2) / 2;
    &rules[n.clamp(1, 40) - 1]
}

/// Maps a reference triangle rule onto the triangle `p`.
pub fn map_tri_rule(rule: &TriRule, p: &[[f64; 2]; 3]) -> PhysicalRule {
    let jac = 2.0 * crate::mesh::signed_area(p[0], p[1], p[2]).abs();
    let points = rule
        .points
        .iter()
        .map(|l| {
            [
                l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
                l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
            ]
        })
        .collect();
    let weights = rule.weights.iter().map(|w| w * jac).collect();
    PhysicalRule { points, weights }
}

/// ∫ over triangle `p` of `f` with the rule of the given degree.
pub fn integrate_triangle(p: &[[f64; 2]; 3], degree: usize, mut f: impl FnMut([f64; 2]) -> f64) -> Result<f64> {
    let rule = tri_quad_at_least(degree)?;
    let jac = 2.0 * crate::mesh::signed_area(p[0], p[1], p[2]).abs();
    let mut s = 0.0;
    for (l, w) in rule.points.iter().zip(&rule.weights) {
        let x = [
            l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
            l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
        ];
        s += w * f(x);
    }
    Ok(s * jac)
}

/// Fan triangulation of a convex polygon from its first vertex, mapped rule per triangle.
pub fn polygon_quad(poly: &[[f64; 2]], degree: usize) -> Result<PhysicalRule> {
    let rule = tri_quad_at_least(degree)?;
    let mut out = PhysicalRule::default();
    for i in 1..poly.len().saturating_sub(1) {
        let tri = [poly[0], poly[i], poly[i + 1]];
        if crate::mesh::signed_area(tri[0], tri[1], tri[2]).abs() == 0.0 {
            continue;
        }
        let r = map_tri_rule(rule, &tri);
        out.points.extend(r.points);
        out.weights.extend(r.weights);
    }
    Ok(out)
}

/// ∫ over the segment a→b of `f`, exact for polynomials up to `degree` along the segment.
pub fn integrate_segment(a: [f64; 2], b: [f64; 2], degree: usize, mut f: impl FnMut([f64; 2], f64) -> f64) -> f64 {
    let rule = edge_quad(degree);
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    let mut s = 0.0;
    for (&t, &w) in rule.points.iter().zip(&rule.weights) {
        s += w * f([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])], t);
    }
    s * len
}
