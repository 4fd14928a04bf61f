use super::quadrature::{gauss_legendre, tri_quad, LineRule};
use crate::error::{Error, Result};
use crate::mesh::signed_area;

pub const DEFAULT_REL_TOL: f64 = 1e-8;
const MAX_LEVELS: usize = 40;
const GAUSS_POINTS: usize = 10;

/// ∫ over a convex polygon of an integrand singular at `singular`.
///
/// If the singular point lies in the closed polygon, the polygon is fanned from it and every
/// fan triangle is integrated with a Duffy map graded dyadically toward the singular vertex.
/// Otherwise the polygon is fanned from its first vertex and integrated by adaptive quadrisection.
pub fn singular_quad(poly: &[[f64; 2]], f: impl Fn([f64; 2]) -> f64, singular: [f64; 2], rel_tol: f64) -> Result<f64> {
    let g = gauss_legendre(GAUSS_POINTS);
    let scale = poly.iter().fold(0.0f64, |s, p| s.max((p[0] - singular[0]).abs()).max((p[1] - singular[1]).abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    let tol = 1e-12 * scale;
    let contains = (0..poly.len()).all(|i| {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        signed_area(a, b, singular) >= -tol * (b[0] - a[0]).hypot(b[1] - a[1])
    });
    let mut total = 0.0;
    if contains {
        for i in 0..poly.len() {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            if signed_area(singular, a, b).abs() <= tol * scale {
                continue;
            }
            total += duffy_graded(singular, a, b, &f, rel_tol, &g)?;
        }
    } else {
        let rule = tri_quad(10)?;
        for i in 1..poly.len().saturating_sub(1) {
            let tri = [poly[0], poly[i], poly[i + 1]];
            total += adaptive_triangle(&tri, &f, rel_tol, rule, 0)?;
        }
    }
    Ok(total)
}

fn duffy_graded(s: [f64; 2], a: [f64; 2], b: [f64; 2], f: &impl Fn([f64; 2]) -> f64, rel_tol: f64, g: &LineRule) -> Result<f64> {
    // x(u,v) = s + u[(a - s) + v(b - a)], dx = 2|T| u du dv.
    let jac = 2.0 * signed_area(s, a, b).abs();
    let layer = |lo: f64, hi: f64| {
        let mut sum = 0.0;
        for (&tu, &wu) in g.points.iter().zip(&g.weights) {
            let u = lo + (hi - lo) * tu;
            let mut inner = 0.0;
            for (&v, &wv) in g.points.iter().zip(&g.weights) {
                let x = [s[0] + u * (a[0] - s[0] + v * (b[0] - a[0])), s[1] + u * (a[1] - s[1] + v * (b[1] - a[1]))];
                inner += wv * f(x);
            }
            sum += wu * u * inner;
        }
        sum * (hi - lo) * jac
    };
    let mut total = 0.0;
    let mut hi = 1.0;
    let mut quiet = 0;
    for _ in 0..MAX_LEVELS {
        let lo = 0.5 * hi;
        let c = layer(lo, hi);
        total += c;
        hi = lo;
        if c.abs() <= 0.1 * rel_tol * total.abs() || (c == 0.0 && total == 0.0) {
            quiet += 1;
            if quiet == 2 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::QuadratureNotConverged { levels: MAX_LEVELS, partial: total })
}

fn adaptive_triangle(
    tri: &[[f64; 2]; 3],
    f: &impl Fn([f64; 2]) -> f64,
    rel_tol: f64,
    rule: &super::quadrature::TriRule,
    depth: usize,
) -> Result<f64> {
    let whole = apply(tri, f, rule);
    let m = |p: [f64; 2], q: [f64; 2]| [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
    let (m01, m12, m20) = (m(tri[0], tri[1]), m(tri[1], tri[2]), m(tri[2], tri[0]));
    let kids = [[tri[0], m01, m20], [m01, tri[1], m12], [m20, m12, tri[2]], [m12, m20, m01]];
    let parts: f64 = kids.iter().map(|k| apply(k, f, rule)).sum();
    if (parts - whole).abs() <= rel_tol * parts.abs() || (parts - whole).abs() < 1e-300 {
        return Ok(parts);
    }
    if depth >= MAX_LEVELS {
        return Err(Error::QuadratureNotConverged { levels: MAX_LEVELS, partial: parts });
    }
    let mut s = 0.0;
    for k in &kids {
        s += adaptive_triangle(k, f, rel_tol, rule, depth + 1)?;
    }
    Ok(s)
}

fn apply(tri: &[[f64; 2]; 3], f: &impl Fn([f64; 2]) -> f64, rule: &super::quadrature::TriRule) -> f64 {
    let jac = 2.0 * signed_area(tri[0], tri[1], tri[2]).abs();
    let mut s = 0.0;
    for (l, w) in rule.points.iter().zip(&rule.weights) {
        let x = [
            l[0] * tri[0][0] + l[1] * tri[1][0] + l[2] * tri[2][0],
            l[0] * tri[0][1] + l[1] * tri[1][1] + l[2] * tri[2][1],
        ];
        s += w * f(x);
    }
    s * jac
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn inverse_radius_over_unit_square() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let v = singular_quad(&sq, |p| 1.0 / p[0].hypot(p[1]), [0.0, 0.0], DEFAULT_REL_TOL).unwrap();
        let exact = 2.0 * (1.0 + 2f64.sqrt()).ln();
        assert!((v - exact).abs() < 1e-8 * exact, "{v} vs {exact}");
    }

    #[test]
    fn inverse_radius_over_quarter_disk() {
        // Polygonal quarter disk with many vertices; the exact polygon value is Σ over fan
        // triangles of ∫ r^{-1} = ∫_θ ρ(θ) dθ with ρ the distance to the chord.
        let n = 2000;
        let mut poly = vec![[0.0, 0.0]];
        for i in 0..=n {
            let t = 0.5 * PI * i as f64 / n as f64;
            poly.push([t.cos(), t.sin()]);
        }
        let v = singular_quad(&poly, |p| 1.0 / p[0].hypot(p[1]), [0.0, 0.0], DEFAULT_REL_TOL).unwrap();
        // Each chord triangle with half-angle a contributes 2 ln(sec a + tan a) cos a.
        let a = 0.25 * PI / n as f64;
        let chord = n as f64 * 2.0 * a.cos() * (1.0 / a.cos() + a.tan()).ln();
        assert!((v - chord).abs() < 1e-8 * chord);
        assert!((v - PI / 2.0).abs() < 1e-6);
    }

    #[test]
    fn smooth_integrand_matches_plain_rule() {
        let tri = [[0.0, 0.0], [2.0, 0.0], [0.5, 1.0]];
        let f = |p: [f64; 2]| (p[0] * p[1]).exp();
        let plain = super::super::quadrature::integrate_triangle(&tri, 10, f).unwrap();
        let v = singular_quad(&tri, f, [0.0, 0.0], DEFAULT_REL_TOL).unwrap();
        assert!((v - plain).abs() < 1e-8 * plain.abs());
        let w = singular_quad(&tri, f, [-1.0, -1.0], DEFAULT_REL_TOL).unwrap();
        assert!((w - plain).abs() < 1e-8 * plain.abs());
    }

    #[test]
    fn outside_singularity_close_to_polygon() {
        // ∫_{(0,1)²} r^{-1} about (-d, 0) for small d approaches the corner value.
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let d = 1e-3;
        let v = singular_quad(&sq, |p| 1.0 / (p[0] + d).hypot(p[1]), [-d, 0.0], 1e-9).unwrap();
        let corner = 2.0 * (1.0 + 2f64.sqrt()).ln();
        assert!(v < corner && v > corner - 0.01);
    }

    #[test]
    fn non_integrable_reports_partial_value() {
        let tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let r = singular_quad(&tri, |p| 1.0 / (p[0] * p[0] + p[1] * p[1]), [0.0, 0.0], 1e-8);
        assert!(matches!(r, Err(Error::QuadratureNotConverged { partial, .. }) if partial > 0.0));
    }
}
