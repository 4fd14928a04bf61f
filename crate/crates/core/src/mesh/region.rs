use super::Mesh;

/// Closed axis-aligned rectangle [x0,x1]×[y0,y1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Rect {
        Rect { x0, x1, y0, y1 }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        p[0] >= self.x0 - tol && p[0] <= self.x1 + tol && p[1] >= self.y0 - tol && p[1] <= self.y1 + tol
    }
}

impl std::str::FromStr for Rect {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> crate::error::Result<Rect> {
        let v: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| crate::error::Error::InvalidInput(format!("rectangle `{s}`: {e}")))?;
        match v[..] {
            [x0, x1, y0, y1] if x0 < x1 && y0 < y1 => Ok(Rect::new(x0, x1, y0, y1)),
            _ => Err(crate::error::Error::InvalidInput(format!("rectangle `{s}` must be x0,x1,y0,y1 with x0<x1, y0<y1"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Coverage {
    Empty,
    Full,
    /// Convex clip polygon, counterclockwise.
    Partial(Vec<[f64; 2]>),
}

/// Per-element intersection with one rectangle.
#[derive(Clone, Debug)]
pub struct RegionMap {
    pub rect: Rect,
    pub coverage: Vec<Coverage>,
    /// |K ∩ rect| per element.
    pub area: Vec<f64>,
}

impl RegionMap {
    pub fn classify(mesh: &Mesh, rect: Rect) -> RegionMap {
        let mut coverage = Vec::with_capacity(mesh.n_elements());
        let mut area = Vec::with_capacity(mesh.n_elements());
        for k in 0..mesh.n_elements() {
            let pts = mesh.points(k);
            let ak = mesh.area(k);
            let tol = 1e-13 * mesh.diameter(k);
            if pts.iter().all(|&p| rect.contains(p, tol)) {
                coverage.push(Coverage::Full);
                area.push(ak);
                continue;
            }
            let poly = clip_to_rect(&pts, rect);
            let a = polygon_area(&poly);
            if poly.len() < 3 || a <= 1e-12 * ak {
                coverage.push(Coverage::Empty);
                area.push(0.0);
            } else {
                coverage.push(Coverage::Partial(poly));
                area.push(a);
            }
        }
        RegionMap { rect, coverage, area }
    }

    /// Polygon of K ∩ rect, or None when empty.
    pub fn polygon(&self, mesh: &Mesh, k: usize) -> Option<Vec<[f64; 2]>> {
        match &self.coverage[k] {
            Coverage::Empty => None,
            Coverage::Full => Some(mesh.points(k).to_vec()),
            Coverage::Partial(p) => Some(p.clone()),
        }
    }

    pub fn total_area(&self) -> f64 {
        self.area.iter().sum()
    }
}

#[derive(Clone, Debug)]
pub struct Regions {
    pub omega: RegionMap,
    pub g: RegionMap,
}

pub fn classify_regions(mesh: &Mesh, omega: Rect, g_region: Rect) -> Regions {
    Regions { omega: RegionMap::classify(mesh, omega), g: RegionMap::classify(mesh, g_region) }
}

/// Sutherland–Hodgman clipping of a convex polygon against a rectangle.
pub fn clip_to_rect(poly: &[[f64; 2]], rect: Rect) -> Vec<[f64; 2]> {
    // Each half-plane as (axis, bound, keep-greater).
    let planes = [(0, rect.x0, true), (0, rect.x1, false), (1, rect.y0, true), (1, rect.y1, false)];
    let mut out: Vec<[f64; 2]> = poly.to_vec();
    for &(axis, bound, greater) in &planes {
        if out.is_empty() {
            break;
        }
        let inside = |p: &[f64; 2]| if greater { p[axis] >= bound } else { p[axis] <= bound };
        let input = std::mem::take(&mut out);
        for i in 0..input.len() {
            let cur = input[i];
            let prev = input[(i + input.len() - 1) % input.len()];
            let (ci, pi) = (inside(&cur), inside(&prev));
            if ci != pi {
                let t = (bound - prev[axis]) / (cur[axis] - prev[axis]);
                let mut x = [prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])];
                x[axis] = bound;
                out.push(x);
            }
            if ci {
                out.push(cur);
            }
        }
    }
    dedup_polygon(out)
}

fn dedup_polygon(mut poly: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    let scale = poly.iter().fold(0.0f64, |s, p| s.max(p[0].abs()).max(p[1].abs())).max(1.0);
    let tol = 1e-14 * scale;
    let same = |a: &[f64; 2], b: &[f64; 2]| (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol;
    poly.dedup_by(|a, b| same(a, b));
    while poly.len() > 1 && same(&poly[0], &poly[poly.len() - 1]) {
        poly.pop();
    }
    poly
}

/// Signed shoelace area.
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        s += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{initial_mesh, uniform_refine, Problem};

    #[test]
    fn unit_triangle_clip() {
        let tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        // The square [0,1/2]² touches the hypotenuse only at (1/2,1/2).
        let poly = clip_to_rect(&tri, Rect::new(0.0, 0.5, 0.0, 0.5));
        assert_eq!(poly.len(), 4);
        assert!((polygon_area(&poly) - 0.25).abs() < 1e-15);
        let poly = clip_to_rect(&tri, Rect::new(0.0, 1.0, 0.0, 0.5));
        assert_eq!(poly.len(), 4);
        assert!((polygon_area(&poly) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn inside_and_outside() {
        let poly = clip_to_rect(&[[0.0, 0.0], [0.1, 0.0], [0.0, 0.1]], Rect::new(-1.0, 1.0, -1.0, 1.0));
        assert_eq!(poly.len(), 3);
        let poly = clip_to_rect(&[[2.0, 2.0], [3.0, 2.0], [2.0, 3.0]], Rect::new(-1.0, 1.0, -1.0, 1.0));
        assert!(poly.len() < 3 || polygon_area(&poly).abs() < 1e-15);
    }

    #[test]
    fn clip_areas_sum_to_rect_area() {
        let mut m = initial_mesh(Problem::Uc);
        for _ in 0..3 {
            let map = RegionMap::classify(&m, Rect::new(-0.5, 0.5, -0.5, 0.5));
            assert!((map.total_area() - 1.0).abs() < 1e-10);
            let odd = RegionMap::classify(&m, Rect::new(-0.3, 0.7, -0.61, 0.2));
            assert!((odd.total_area() - 0.81).abs() < 1e-10);
            m = uniform_refine(&m);
        }
    }

    #[test]
    fn rect_parse() {
        let r: Rect = "-0.5,0.5,0,0.5".parse().unwrap();
        assert_eq!(r, Rect::new(-0.5, 0.5, 0.0, 0.5));
        assert!("1,0,0,1".parse::<Rect>().is_err());
    }
}
