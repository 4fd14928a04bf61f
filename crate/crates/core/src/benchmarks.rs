//! Exact solutions, data, perturbations, H^{-1/2}(Σ) norms and error functionals.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{integrate_polygon, CauchyData, Field, SigmaData, SigmaTerm, UcForcing};
use crate::error::{Error, Result};
use crate::fe_basis::gauss_legendre;
use crate::fe_basis::quadrature::{map_tri_rule, tri_quad_at_least};
use crate::mesh::{EdgeTag, Mesh, Problem, Rect, RegionMap};
use crate::spaces::P0Function;

pub type GradientFn = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

pub const OMEGA: Rect = Rect::new(-0.5, 0.5, -0.5, 0.5);
pub const CAUCHY_G: Rect = Rect::new(-0.5, 0.5, 0.0, 0.5);

#[derive(Clone, Debug)]
pub enum BenchmarkData {
    Uc { forcing: UcForcing, q: Field, omega: Rect },
    Cauchy(CauchyData),
}

#[derive(Clone)]
pub struct BenchmarkProblem {
    pub name: &'static str,
    pub problem: Problem,
    pub exact: Field,
    pub gradient: GradientFn,
    pub data: BenchmarkData,
    /// Default error region G.
    pub g_region: Rect,
}

impl std::fmt::Debug for BenchmarkProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BenchmarkProblem").field("name", &self.name).field("data", &self.data).finish_non_exhaustive()
    }
}

pub const NAMES: [&str; 4] = ["uc-smooth", "uc-log", "cauchy-smooth", "cauchy-singular"];

/// u = r^{-1/2}(cos(θ/2) − sin(θ/2)) on the upper half plane.
fn singular_value(p: [f64; 2]) -> f64 {
    let r = p[0].hypot(p[1]);
    if r == 0.0 {
        return 0.0;
    }
    (((r + p[0]) / 2.0).max(0.0).sqrt() - ((r - p[0]) / 2.0).max(0.0).sqrt()) / r
}

fn singular_gradient(p: [f64; 2]) -> [f64; 2] {
    let r = p[0].hypot(p[1]);
    let th = p[1].atan2(p[0]);
    let a = (th / 2.0).cos() - (th / 2.0).sin();
    let da = -0.5 * (th / 2.0).sin() - 0.5 * (th / 2.0).cos();
    let s = r.powf(-1.5);
    [s * (-0.5 * a * th.cos() - da * th.sin()), s * (-0.5 * a * th.sin() + da * th.cos())]
}

pub fn catalogue(name: &str) -> Result<BenchmarkProblem> {
    let c = (2.0 / PI).sqrt();
    Ok(match name {
        "uc-smooth" => {
            let u = |p: [f64; 2]| p[0].exp() * p[1].cos();
            BenchmarkProblem {
                name: "uc-smooth",
                problem: Problem::Uc,
                exact: Field::new(u),
                gradient: Arc::new(|p| [p[0].exp() * p[1].cos(), -p[0].exp() * p[1].sin()]),
                data: BenchmarkData::Uc { forcing: UcForcing::Zero, q: Field::new(u), omega: OMEGA },
                g_region: OMEGA,
            }
        }
        "uc-log" => {
            let u = |p: [f64; 2]| (p[0] * p[0] + p[1] * p[1]).ln() / (4.0 * PI);
            let field = Field::new(u).singular_at([0.0, 0.0]);
            BenchmarkProblem {
                name: "uc-log",
                problem: Problem::Uc,
                exact: field.clone(),
                gradient: Arc::new(|p| {
                    let r2 = p[0] * p[0] + p[1] * p[1];
                    [p[0] / (2.0 * PI * r2), p[1] / (2.0 * PI * r2)]
                }),
                // Δ((1/4π) log r²) = δ₀, so ℓ = −Δu = −δ₀.
                data: BenchmarkData::Uc {
                    forcing: UcForcing::Dirac { point: [0.0, 0.0], weight: -1.0 },
                    q: field,
                    omega: OMEGA,
                },
                g_region: OMEGA,
            }
        }
        "cauchy-smooth" => BenchmarkProblem {
            name: "cauchy-smooth",
            problem: Problem::Cauchy,
            exact: Field::new(move |p| c * p[0].sin() * p[1].sinh()),
            gradient: Arc::new(move |p| [c * p[0].cos() * p[1].sinh(), c * p[0].sin() * p[1].cosh()]),
            data: BenchmarkData::Cauchy(CauchyData {
                ell: None,
                g: SigmaData::zero(),
                psi: SigmaData::smooth(move |x| -c * x.sin(), 1.0),
            }),
            g_region: CAUCHY_G,
        },
        "cauchy-singular" => BenchmarkProblem {
            name: "cauchy-singular",
            problem: Problem::Cauchy,
            exact: Field::new(singular_value).singular_at([0.0, 0.0]),
            gradient: Arc::new(singular_gradient),
            data: BenchmarkData::Cauchy(CauchyData {
                ell: None,
                g: SigmaData(vec![SigmaTerm::OddPower { x0: 0.0, coeff: 1.0, power: -0.5 }]),
                psi: SigmaData(vec![SigmaTerm::OddPower { x0: 0.0, coeff: 0.5, power: -1.5 }]),
            }),
            g_region: CAUCHY_G,
        },
        other => return Err(Error::UnknownBenchmark(other.to_string())),
    })
}

/// Sine coefficient ∫_{−1}^{1} g(x) sin(kπ(x+1)/2) dx for k = 1..=k_max.
fn sine_coefficients(g: &SigmaData, k_max: usize) -> Result<Vec<f64>> {
    let mut coef = vec![0.0; k_max];
    let mut smooth: Vec<&SigmaTerm> = Vec::new();
    for term in &g.0 {
        match term {
            SigmaTerm::PiecewiseConstant { breaks, values } => {
                for (k, c) in coef.iter_mut().enumerate() {
                    let w = (k + 1) as f64 * PI / 2.0;
                    for (i, v) in values.iter().enumerate() {
                        let (a, b) = (breaks[i].max(-1.0), breaks[i + 1].min(1.0));
                        if b > a {
                            *c += v * (((w * (a + 1.0)).cos() - (w * (b + 1.0)).cos()) / w);
                        }
                    }
                }
            }
            SigmaTerm::SineMode { m, amplitude } => {
                if *m >= 1 && *m <= k_max {
                    coef[m - 1] += amplitude * (*m as f64 * PI / 2.0).sqrt();
                }
            }
            SigmaTerm::Smooth { .. } => smooth.push(term),
            SigmaTerm::OddPower { .. } => {
                return Err(Error::InvalidInput("H^{-1/2} norm of a power singularity is not supported".into()))
            }
        }
    }
    if !smooth.is_empty() {
        // Composite Gauss with two panels per half-period of the highest mode.
        let panels = k_max.max(64);
        let rule = gauss_legendre(8);
        let h = 2.0 / panels as f64;
        for p in 0..panels {
            for (&t, &w) in rule.points.iter().zip(&rule.weights) {
                let x = -1.0 + h * (p as f64 + t);
                let gx: f64 = smooth.iter().map(|s| s.eval(x)).sum::<f64>() * w * h;
                for (k, c) in coef.iter_mut().enumerate() {
                    *c += gx * ((k + 1) as f64 * PI / 2.0 * (x + 1.0)).sin();
                }
            }
        }
    }
    Ok(coef)
}

pub fn default_k_max(n_sigma_edges: usize) -> usize {
    1000.max(20 * n_sigma_edges)
}

/// Spectral H^{-1/2}(Σ) norm: ‖g‖² = Σ_k (kπ/2)^{-1} ĝ_k².
pub fn hminushalf_norm_with(g: &SigmaData, k_max: usize) -> Result<f64> {
    let coef = sine_coefficients(g, k_max)?;
    Ok(coef.iter().enumerate().map(|(k, c)| c * c * 2.0 / ((k + 1) as f64 * PI)).sum::<f64>().sqrt())
}

pub fn hminushalf_norm(g: &SigmaData, n_sigma_edges: usize) -> Result<f64> {
    hminushalf_norm_with(g, default_k_max(n_sigma_edges))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PerturbationKind {
    None,
    Random { amplitude: f64 },
    Mode { m: usize, amplitude: f64 },
}

impl std::str::FromStr for PerturbationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<PerturbationKind> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number in perturbation '{s}'")));
        match parts.as_slice() {
            ["none"] => Ok(PerturbationKind::None),
            ["random", a] => Ok(PerturbationKind::Random { amplitude: num(a)? }),
            ["mode", m, a] => Ok(PerturbationKind::Mode {
                m: m.trim().parse().map_err(|_| Error::Config(format!("bad mode in perturbation '{s}'")))?,
                amplitude: num(a)?,
            }),
            _ => Err(Error::Config(format!("unknown perturbation '{s}' (none | random:AMP | mode:M:AMP)"))),
        }
    }
}

impl std::fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PerturbationKind::None => write!(f, "none"),
            PerturbationKind::Random { amplitude } => write!(f, "random:{amplitude}"),
            PerturbationKind::Mode { m, amplitude } => write!(f, "mode:{m}:{amplitude}"),
        }
    }
}

impl PerturbationKind {
    pub fn amplitude(&self) -> f64 {
        match *self {
            PerturbationKind::None => 0.0,
            PerturbationKind::Random { amplitude } | PerturbationKind::Mode { amplitude, .. } => amplitude,
        }
    }
}

/// Realized perturbation of the Dirichlet datum g.
#[derive(Clone, Debug)]
pub struct Perturbation {
    pub kind: PerturbationKind,
    pub g: SigmaData,
    /// Exact solution of the Cauchy problem with data (0, g, 0), when known in closed form.
    pub solution: Option<Field>,
}

/// x-coordinates of the Σ vertices in increasing order.
pub fn sigma_breaks(mesh: &Mesh) -> Vec<f64> {
    let mut xs: Vec<f64> = mesh
        .edges
        .iter()
        .filter(|e| e.tag == EdgeTag::Sigma)
        .flat_map(|e| e.endpoints.map(|v| mesh.vertices[v][0]))
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// Random piecewise constant on the current Σ-edges with H^{-1/2} norm `amplitude`.
pub fn random_perturbation(mesh: &Mesh, amplitude: f64, rng: &mut ChaCha8Rng) -> Result<Perturbation> {
    let breaks = sigma_breaks(mesh);
    if breaks.len() < 2 {
        return Err(Error::InvalidInput("mesh has no Σ-edges".into()));
    }
    let values: Vec<f64> = (0..breaks.len() - 1).map(|_| rng.random_range(0.0..1.0)).collect();
    let n_edges = values.len();
    let raw = SigmaData(vec![SigmaTerm::PiecewiseConstant { breaks: breaks.clone(), values: values.clone() }]);
    let norm = hminushalf_norm(&raw, n_edges)?;
    let values = values.iter().map(|v| v * amplitude / norm).collect();
    Ok(Perturbation {
        kind: PerturbationKind::Random { amplitude },
        g: SigmaData(vec![SigmaTerm::PiecewiseConstant { breaks, values }]),
        solution: None,
    })
}

pub fn random_perturbation_seeded(mesh: &Mesh, amplitude: f64, seed: u64) -> Result<Perturbation> {
    random_perturbation(mesh, amplitude, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// u^{(m)}(x,y) = √(mπ/2) sin(mπ(x+1)/2) cosh(mπy/2).
pub fn mode_solution(m: usize) -> Field {
    let k = m as f64 * PI / 2.0;
    Field::new(move |p| k.sqrt() * (k * (p[0] + 1.0)).sin() * (k * p[1]).cosh())
}

/// ‖u^{(m)}‖_{L2(Ω)} for Ω = (−1,1)×(0,1), in closed form.
pub fn mode_solution_norm(m: usize) -> f64 {
    let k = m as f64 * PI / 2.0;
    (k * (0.5 + (2.0 * k).sinh() / (4.0 * k))).sqrt()
}

pub fn mode_perturbation(m: usize, amplitude: f64) -> Result<Perturbation> {
    if m == 0 {
        return Err(Error::InvalidInput("mode number must be at least 1".into()));
    }
    let u = mode_solution(m);
    Ok(Perturbation {
        kind: PerturbationKind::Mode { m, amplitude },
        g: SigmaData(vec![SigmaTerm::SineMode { m, amplitude }]),
        solution: Some(Field { f: Arc::new(move |p| amplitude * u.eval(p)), singular: None }),
    })
}

pub fn realize_perturbation(kind: PerturbationKind, mesh: &Mesh, rng: &mut ChaCha8Rng) -> Result<Option<Perturbation>> {
    match kind {
        PerturbationKind::None => Ok(None),
        PerturbationKind::Random { amplitude } => random_perturbation(mesh, amplitude, rng).map(Some),
        PerturbationKind::Mode { m, amplitude } => mode_perturbation(m, amplitude).map(Some),
    }
}

/// √(Σ_K ∫_{K∩R} (exact − u|_K)²).
pub fn l2_region_error(mesh: &Mesh, u: &P0Function, exact: &Field, region: &RegionMap) -> Result<f64> {
    let mut s = 0.0;
    for k in 0..mesh.n_elements() {
        if let Some(poly) = region.polygon(mesh, k) {
            let c = u.0[k];
            s += integrate_polygon(&poly, exact, mesh.diameter(k), 10, |_, v| (v - c) * (v - c))?;
        }
    }
    Ok(s.sqrt())
}

/// Elementwise means of `exact` (the L2 projection onto piecewise constants).
pub fn elementwise_means(mesh: &Mesh, exact: &Field) -> Result<P0Function> {
    (0..mesh.n_elements())
        .map(|k| Ok(integrate_polygon(&mesh.points(k), exact, mesh.diameter(k), 10, |_, v| v)? / mesh.area(k)))
        .collect::<Result<Vec<_>>>()
        .map(P0Function)
}

/// ‖u − Π₀u‖_{L2(Ω)}.
pub fn projection_error(mesh: &Mesh, exact: &Field) -> Result<f64> {
    let means = elementwise_means(mesh, exact)?;
    let all = RegionMap::classify(mesh, mesh.problem.domain());
    l2_region_error(mesh, &means, exact, &all)
}

/// osc(ℓ) = √(Σ_K h_K⁴ min_{p∈P_r} ‖ℓ − p‖²_{L2(K)}).
pub fn oscillation(mesh: &Mesh, ell: &Field, r: usize) -> Result<f64> {
    if r > 2 {
        return Err(Error::UnsupportedDegree(r));
    }
    let exps: Vec<(i32, i32)> = (0..=r as i32).flat_map(|d| (0..=d).map(move |b| (d - b, b))).collect();
    let n = exps.len();
    let rule = tri_quad_at_least(2 * r + 4)?;
    let mut total = 0.0;
    for k in 0..mesh.n_elements() {
        let pts = mesh.points(k);
        let c = mesh.centroid(k);
        let h = mesh.diameter(k);
        let phys = map_tri_rule(rule, &pts);
        let mono = |x: [f64; 2]| -> Vec<f64> {
            let (sx, sy) = ((x[0] - c[0]) / h, (x[1] - c[1]) / h);
            exps.iter().map(|&(a, b)| sx.powi(a) * sy.powi(b)).collect()
        };
        let mut gram = nalgebra::DMatrix::<f64>::zeros(n, n);
        let mut rhs = nalgebra::DVector::<f64>::zeros(n);
        let values: Vec<f64> = phys.points.iter().map(|&x| ell.eval(x)).collect();
        for ((x, w), l) in phys.points.iter().zip(&phys.weights).zip(&values) {
            let m = mono(*x);
            for i in 0..n {
                rhs[i] += w * l * m[i];
                for j in 0..n {
                    gram[(i, j)] += w * m[i] * m[j];
                }
            }
        }
        let coef = gram.cholesky().ok_or(Error::DegenerateElement { element: k, condition: f64::INFINITY })?.solve(&rhs);
        let mut res = 0.0;
        for ((x, w), l) in phys.points.iter().zip(&phys.weights).zip(&values) {
            let p: f64 = mono(*x).iter().zip(coef.iter()).map(|(a, b)| a * b).sum();
            res += w * (l - p) * (l - p);
        }
        total += h.powi(4) * res;
    }
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{initial_mesh, uniform_refine};

    fn laplacian_fd(f: &Field, p: [f64; 2], h: f64) -> f64 {
        let v = |dx: f64, dy: f64| f.eval([p[0] + dx, p[1] + dy]);
        (v(h, 0.0) + v(-h, 0.0) + v(0.0, h) + v(0.0, -h) - 4.0 * v(0.0, 0.0)) / (h * h)
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(catalogue("nope"), Err(Error::UnknownBenchmark(_))));
        for n in NAMES {
            assert_eq!(catalogue(n).unwrap().name, n);
        }
    }

    #[test]
    fn exact_solutions_are_harmonic_and_gradients_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for name in NAMES {
            let b = catalogue(name).unwrap();
            let dom = b.problem.domain();
            let mut checked = 0;
            while checked < 20 {
                let p = [rng.random_range(dom.x0..dom.x1), rng.random_range(dom.y0..dom.y1)];
                if p[0].hypot(p[1]) < 0.1 || p[1] < 1e-3 {
                    continue;
                }
                checked += 1;
                assert!(laplacian_fd(&b.exact, p, 1e-4).abs() < 1e-4 * (1.0 + b.exact.eval(p).abs()), "{name} at {p:?}");
                let g = (b.gradient)(p);
                let h = 1e-6;
                let fx = (b.exact.eval([p[0] + h, p[1]]) - b.exact.eval([p[0] - h, p[1]])) / (2.0 * h);
                let fy = (b.exact.eval([p[0], p[1] + h]) - b.exact.eval([p[0], p[1] - h])) / (2.0 * h);
                let scale = 1.0 + g[0].abs() + g[1].abs();
                assert!((fx - g[0]).abs() < 1e-6 * scale && (fy - g[1]).abs() < 1e-6 * scale, "{name}");
            }
        }
    }

    #[test]
    fn cauchy_data_match_exact_solutions() {
        for name in ["cauchy-smooth", "cauchy-singular"] {
            let b = catalogue(name).unwrap();
            let BenchmarkData::Cauchy(d) = &b.data else { panic!() };
            for x in [-0.9, -0.37, 0.21, 0.8] {
                let p = [x, 0.0];
                assert!((d.g.eval(x) - b.exact.eval(p)).abs() < 1e-12, "{name} g at {x}");
                // ψ = ∂_n u with n = (0,−1).
                let psi = -(b.gradient)(p)[1];
                assert!((d.psi.eval(x) - psi).abs() < 1e-10 * (1.0 + psi.abs()), "{name} ψ at {x}");
            }
        }
        let b = catalogue("cauchy-smooth").unwrap();
        let BenchmarkData::Cauchy(d) = &b.data else { panic!() };
        assert!((d.psi.eval(0.5) + (2.0 / PI).sqrt() * 0.5f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn mode_norms_are_one() {
        for m in [1, 4, 6, 16] {
            let p = mode_perturbation(m, 1.0).unwrap();
            assert!((hminushalf_norm(&p.g, 8).unwrap() - 1.0).abs() < 1e-6);
            let s = SigmaData::smooth(move |x| p.g.eval(x), 0.0);
            assert!((hminushalf_norm(&s, 8).unwrap() - 1.0).abs() < 1e-6);
        }
        assert_eq!(hminushalf_norm(&SigmaData::zero(), 4).unwrap(), 0.0);
    }

    #[test]
    fn constant_coefficients_match_trapezoid() {
        let one = SigmaData(vec![SigmaTerm::PiecewiseConstant { breaks: vec![-1.0, 1.0], values: vec![1.0] }]);
        let coef = sine_coefficients(&one, 50).unwrap();
        let n = 100_000;
        for (k, c) in coef.iter().enumerate() {
            let w = (k + 1) as f64 * PI / 2.0;
            let trap: f64 = (0..=n)
                .map(|i| {
                    let x = -1.0 + 2.0 * i as f64 / n as f64;
                    let f = (w * (x + 1.0)).sin();
                    if i == 0 || i == n {
                        0.5 * f
                    } else {
                        f
                    }
                })
                .sum::<f64>()
                * 2.0
                / n as f64;
            assert!((c - trap).abs() < 1e-6);
        }
    }

    #[test]
    fn norm_is_homogeneous_and_subadditive() {
        let m = uniform_refine(&uniform_refine(&initial_mesh(Problem::Cauchy)));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let a = random_perturbation(&m, 1.0, &mut rng).unwrap().g;
            let b = random_perturbation(&m, 0.3, &mut rng).unwrap().g;
            let na = hminushalf_norm(&a, 16).unwrap();
            let nb = hminushalf_norm(&b, 16).unwrap();
            let sum = SigmaData(a.0.iter().chain(&b.0).cloned().collect());
            assert!(hminushalf_norm(&sum, 16).unwrap() <= na + nb + 1e-12);
            let SigmaTerm::PiecewiseConstant { breaks, values } = &a.0[0] else { panic!() };
            let scaled = SigmaData(vec![SigmaTerm::PiecewiseConstant {
                breaks: breaks.clone(),
                values: values.iter().map(|v| -2.5 * v).collect(),
            }]);
            assert!((hminushalf_norm(&scaled, 16).unwrap() - 2.5 * na).abs() < 1e-12);
        }
    }

    #[test]
    fn random_perturbation_is_normalized_and_deterministic() {
        let m = uniform_refine(&initial_mesh(Problem::Cauchy));
        let a = random_perturbation_seeded(&m, 0.05, 42).unwrap();
        let b = random_perturbation_seeded(&m, 0.05, 42).unwrap();
        let n = sigma_breaks(&m).len() - 1;
        assert!((hminushalf_norm(&a.g, n).unwrap() - 0.05).abs() < 1e-10);
        let (SigmaTerm::PiecewiseConstant { values: va, .. }, SigmaTerm::PiecewiseConstant { values: vb, .. }) =
            (&a.g.0[0], &b.g.0[0])
        else {
            panic!()
        };
        assert_eq!(va, vb);
    }

    #[test]
    fn mode_solution_properties() {
        for m in [1, 4] {
            let u = mode_solution(m);
            let k = m as f64 * PI / 2.0;
            for x in [-0.5, 0.3] {
                let dy = (u.eval([x, 1e-6]) - u.eval([x, -1e-6])) / 2e-6;
                assert!(dy.abs() < 1e-6);
                assert!((u.eval([x, 0.0]) - k.sqrt() * (k * (x + 1.0)).sin()).abs() < 1e-14);
            }
        }
        // ‖u^{(m)}‖ ~ e^{mπ/2}/(2√2): ratio between m = 6 and m = 4.
        let ratio = mode_solution_norm(6) / mode_solution_norm(4);
        assert!((ratio / PI.exp() - 1.0).abs() < 1e-3);
        let direct = {
            let m = uniform_refine(&uniform_refine(&uniform_refine(&initial_mesh(Problem::Cauchy))));
            let zero = P0Function(vec![0.0; m.n_elements()]);
            let all = RegionMap::classify(&m, Problem::Cauchy.domain());
            l2_region_error(&m, &zero, &mode_solution(4), &all).unwrap()
        };
        assert!((direct - mode_solution_norm(4)).abs() < 1e-6 * direct);
    }

    #[test]
    fn region_errors() {
        let m = uniform_refine(&uniform_refine(&initial_mesh(Problem::Uc)));
        let all = RegionMap::classify(&m, Problem::Uc.domain());
        let u = P0Function(vec![3.0; m.n_elements()]);
        assert!(l2_region_error(&m, &u, &Field::new(|_| 3.0), &all).unwrap() < 1e-12);
        // exact = x on (0,1)², u = 1/2: √(1/12).
        let quad = RegionMap::classify(&m, Rect::new(0.0, 1.0, 0.0, 1.0));
        let half = P0Function(vec![0.5; m.n_elements()]);
        let e = l2_region_error(&m, &half, &Field::new(|p| p[0]), &quad).unwrap();
        assert!((e - (1.0f64 / 12.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn singular_solution_has_finite_norm_on_g() {
        // ∫_G u² with |u| ≤ √2 r^{-1/2}: bounded by ∫_0^{π} ∫_0^{R} 2 r^{-1} r dr dθ = 2πR, R = √(1/2).
        let m = uniform_refine(&uniform_refine(&initial_mesh(Problem::Cauchy)));
        let b = catalogue("cauchy-singular").unwrap();
        let g = RegionMap::classify(&m, CAUCHY_G);
        let zero = P0Function(vec![0.0; m.n_elements()]);
        let n = l2_region_error(&m, &zero, &b.exact, &g).unwrap();
        assert!(n.is_finite() && n > 0.0);
        assert!(n * n <= 2.0 * PI * 0.5f64.sqrt());
        let finer = uniform_refine(&m);
        let g2 = RegionMap::classify(&finer, CAUCHY_G);
        let n2 = l2_region_error(&finer, &P0Function(vec![0.0; finer.n_elements()]), &b.exact, &g2).unwrap();
        assert!((n - n2).abs() < 1e-6 * n);
    }

    #[test]
    fn projection_of_affine_function() {
        let m = uniform_refine(&initial_mesh(Problem::Uc));
        let means = elementwise_means(&m, &Field::new(|p| p[0])).unwrap();
        for k in 0..m.n_elements() {
            assert!((means.0[k] - m.centroid(k)[0]).abs() < 1e-14);
        }
        assert!(projection_error(&m, &Field::new(|_| 2.0)).unwrap() < 1e-13);
    }

    #[test]
    fn oscillation_vanishes_on_polynomials_and_matches_closed_form() {
        let m = uniform_refine(&initial_mesh(Problem::Uc));
        for r in 0..=2 {
            let ell = Field::new(move |p| if r == 0 { 2.0 } else if r == 1 { 1.0 + p[0] - 3.0 * p[1] } else { p[0] * p[1] + p[1] * p[1] });
            assert!(oscillation(&m, &ell, r).unwrap() < 1e-12);
        }
        let one = Mesh::from_parts(
            Problem::Uc,
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![crate::mesh::Element { v: [0, 1, 2], refinement_edge: 0, generation: 0 }],
        )
        .unwrap();
        let osc = oscillation(&one, &Field::new(|p| p[0] * p[0]), 1).unwrap();
        let h: f64 = 2.0f64.sqrt();
        let expected = (h.powi(4) * X2_P1_RESIDUAL).sqrt();
        assert!((osc - expected).abs() < 1e-12, "{osc} vs {expected}");
    }

    /// min_{p∈P1} ‖x² − p‖²_{L2(T)} on T = conv{(0,0),(1,0),(0,1)}.
    const X2_P1_RESIDUAL: f64 = 1.0 / 600.0;
}
