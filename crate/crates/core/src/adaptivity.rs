//! ZZ-type recovery, elementwise indicators and bulk-chasing marking.

use crate::mesh::Mesh;
use crate::spaces::P0Function;

/// Per-element indicators η_K ≥ 0 (squared L2 units).
#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorField(pub Vec<f64>);

impl IndicatorField {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Area-weighted vertex averages of a piecewise constant.
pub fn zz_recover(mesh: &Mesh, u: &P0Function) -> Vec<f64> {
    let nv = mesh.n_vertices();
    let mut num = vec![0.0; nv];
    let mut den = vec![0.0; nv];
    for (k, el) in mesh.elements.iter().enumerate() {
        let a = mesh.area(k);
        for &v in &el.v {
            num[v] += a * u.0[k];
            den[v] += a;
        }
    }
    num.iter().zip(&den).map(|(n, d)| n / d).collect()
}

/// η_K = ∫_K (û − u|_K)² for the P1 interpolant û of the vertex values.
pub fn indicators(mesh: &Mesh, u: &P0Function, recovered: &[f64]) -> IndicatorField {
    IndicatorField(
        mesh.elements
            .iter()
            .enumerate()
            .map(|(k, el)| {
                // (û − c) is linear with vertex values d_i; ∫_K = |K|/6 (Σ d_i² + Σ_{i<j} d_i d_j).
                let d = el.v.map(|v| recovered[v] - u.0[k]);
                let sq = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                let cross = d[0] * d[1] + d[1] * d[2] + d[0] * d[2];
                (mesh.area(k) / 6.0 * (sq + cross)).max(0.0)
            })
            .collect(),
    )
}

/// Greedy descending selection until the marked sum reaches θ·Σ η_K; ties by smaller id.
pub fn dorfler_mark(eta: &IndicatorField, theta: f64) -> Vec<usize> {
    assert!(theta > 0.0 && theta <= 1.0, "theta must lie in (0, 1]");
    let total = eta.total();
    if total <= 0.0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..eta.0.len()).filter(|&k| eta.0[k] > 0.0).collect();
    order.sort_by(|&a, &b| eta.0[b].total_cmp(&eta.0[a]).then(a.cmp(&b)));
    let target = theta * total;
    let mut sum = 0.0;
    let mut marked = Vec::new();
    for k in order {
        if sum >= target {
            break;
        }
        sum += eta.0[k];
        marked.push(k);
    }
    marked
}
