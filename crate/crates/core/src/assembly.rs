//! Sparse blocks and right-hand sides of the mixed least-squares system.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use crate::companion::{CompanionOperator, NORMAL_END_BASIS, NORMAL_MID_BASIS, SLOPE_BASIS, VALUE_BASIS};
use crate::error::{Error, Result};
use crate::fe_basis::{
    edge_quad, gauss_legendre, polygon_quad, singular_quad, tri_quad, ElementGeometry, HctElement, DEFAULT_REL_TOL,
};
use crate::linalg::{CsrMatrix, Triplets};
use crate::mesh::{EdgeTag, Mesh, Problem, RegionMap};
use crate::spaces::{element_basis, TestSpace, TrialSpace};

pub type ScalarFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
pub type LineFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A function on Ω, optionally singular at one point.
#[derive(Clone)]
pub struct Field {
    pub f: ScalarFn,
    pub singular: Option<[f64; 2]>,
}

impl Field {
    pub fn new(f: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static) -> Field {
        Field { f: Arc::new(f), singular: None }
    }

    pub fn singular_at(mut self, p: [f64; 2]) -> Field {
        self.singular = Some(p);
        self
    }

    pub fn zero() -> Field {
        Field::new(|_| 0.0)
    }

    pub fn eval(&self, p: [f64; 2]) -> f64 {
        (self.f)(p)
    }
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field").field("singular", &self.singular).finish_non_exhaustive()
    }
}

fn point_polygon_distance(p: [f64; 2], poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    let mut inside = true;
    let mut d = f64::INFINITY;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
        let (px, py) = (p[0] - a[0], p[1] - a[1]);
        if ex * py - ey * px < 0.0 {
            inside = false;
        }
        let len2 = ex * ex + ey * ey;
        let t = if len2 > 0.0 { ((px * ex + py * ey) / len2).clamp(0.0, 1.0) } else { 0.0 };
        d = d.min((px - t * ex).hypot(py - t * ey));
    }
    if inside {
        0.0
    } else {
        d
    }
}

/// ∫ over a convex polygon of `g`, switching to adaptive singular quadrature when the
/// singular point of `field` lies within 2h of the polygon.
pub fn integrate_polygon(
    poly: &[[f64; 2]],
    field: &Field,
    h: f64,
    degree: usize,
    g: impl Fn([f64; 2], f64) -> f64,
) -> Result<f64> {
    if let Some(s) = field.singular {
        if point_polygon_distance(s, poly) <= 2.0 * h {
            return singular_quad(poly, |x| g(x, field.eval(x)), s, DEFAULT_REL_TOL);
        }
    }
    Ok(polygon_quad(poly, degree)?.integrate(|x| g(x, field.eval(x))))
}

/// Y×Y Gram matrix of the broken H² product and the Y×X coupling block.
#[derive(Clone, Debug)]
pub struct Blocks {
    pub g: CsrMatrix,
    pub b: CsrMatrix,
    /// Diagonal |K ∩ ω|; all zeros for the Cauchy problem.
    pub m_omega: CsrMatrix,
    /// Diagonal |K|.
    pub m_full: CsrMatrix,
}

fn gram_and_coupling(mesh: &Mesh, y: &TestSpace, want_gram: bool, want_b: bool) -> Result<(CsrMatrix, CsrMatrix)> {
    let ne = mesh.n_elements();
    let mut g = Triplets::with_capacity(y.dim(), y.dim(), if want_gram { 36 * ne } else { 0 });
    let mut b = Triplets::with_capacity(y.dim(), ne, if want_b { 6 * ne } else { 0 });
    for k in 0..ne {
        let basis = element_basis(mesh, k)?;
        let area = mesh.area(k);
        let free = y.element_free(mesh, k);
        let hess: [[f64; 3]; 6] = std::array::from_fn(|j| basis.hessian(j));
        for (i, fi) in free.iter().enumerate() {
            let Some(fi) = *fi else { continue };
            if want_b {
                b.push(fi, k, -area * (hess[i][0] + hess[i][2]));
            }
            if want_gram {
                for (j, fj) in free.iter().enumerate() {
                    let Some(fj) = *fj else { continue };
                    let (p, q) = (hess[i], hess[j]);
                    g.push(fi, fj, area * (p[0] * q[0] + 2.0 * p[1] * q[1] + p[2] * q[2]));
                }
            }
        }
    }
    Ok((g.into_csr(), b.into_csr()))
}

/// Σ_K ∫_K (v_xx ṽ_xx + 2 v_xy ṽ_xy + v_yy ṽ_yy) over the free Morley DoFs.
pub fn assemble_gram(mesh: &Mesh, y: &TestSpace) -> Result<CsrMatrix> {
    Ok(gram_and_coupling(mesh, y, true, false)?.0)
}

/// (B z)(v) = −Σ_K ∫_K z Δv, rows indexed by free Morley DoFs, columns by elements.
pub fn assemble_b(mesh: &Mesh, _x: &TrialSpace, y: &TestSpace) -> Result<CsrMatrix> {
    Ok(gram_and_coupling(mesh, y, false, true)?.1)
}

/// Diagonal ω-mass (zero without ω) and Ω-mass.
pub fn assemble_masses(mesh: &Mesh, omega: Option<&RegionMap>) -> (CsrMatrix, CsrMatrix) {
    let m_full = CsrMatrix::diagonal(&(0..mesh.n_elements()).map(|k| mesh.area(k)).collect::<Vec<_>>());
    let m_omega = match omega {
        Some(r) => CsrMatrix::diagonal(&r.area),
        None => CsrMatrix::zeros(mesh.n_elements(), mesh.n_elements()),
    };
    (m_omega, m_full)
}

pub fn assemble_blocks(mesh: &Mesh, y: &TestSpace, omega: Option<&RegionMap>) -> Result<Blocks> {
    let (g, b) = gram_and_coupling(mesh, y, true, true)?;
    let (m_omega, m_full) = assemble_masses(mesh, omega);
    Ok(Blocks { g, b, m_omega, m_full })
}

/// Forcing ℓ of the UC problem.
#[derive(Clone, Debug)]
pub enum UcForcing {
    Zero,
    /// ℓ ∈ L2 tested against the Morley function itself.
    Density(Field),
    /// weight · δ_point, tested against the companion (which copies vertex values).
    Dirac { point: [f64; 2], weight: f64 },
    /// ℓ ∈ L2 tested against the companion E v.
    Smoothed(Field),
}

/// ∫_Ω ℓ v for every free Morley basis function v.
fn density_rhs(mesh: &Mesh, y: &TestSpace, ell: &Field) -> Result<Vec<f64>> {
    let mut rhs = vec![0.0; y.dim()];
    let rule = tri_quad(6)?;
    for k in 0..mesh.n_elements() {
        let basis = element_basis(mesh, k)?;
        let pts = mesh.points(k);
        let h = mesh.diameter(k);
        let free = y.element_free(mesh, k);
        let near_singular = ell.singular.is_some_and(|s| point_polygon_distance(s, &pts) <= 2.0 * h);
        for (j, fj) in free.iter().enumerate() {
            let Some(fj) = *fj else { continue };
            rhs[fj] += if near_singular {
                integrate_polygon(&pts, ell, h, 6, |x, l| l * basis.value(j, x))?
            } else {
                crate::fe_basis::quadrature::map_tri_rule(rule, &pts).integrate(|x| ell.eval(x) * basis.value(j, x))
            };
        }
    }
    Ok(rhs)
}

/// ∫_Ω ℓ E v, assembled as a functional on the global HCT DoFs and pulled back through Eᵀ.
fn smoothed_rhs(mesh: &Mesh, y: &TestSpace, ell: &Field) -> Result<Vec<f64>> {
    let op = CompanionOperator::new(mesh, y)?;
    let mut hct = vec![0.0; crate::companion::hct_dim(mesh)];
    for k in 0..mesh.n_elements() {
        let element = HctElement::new(&ElementGeometry::from_mesh(mesh, k))?;
        let rows = crate::companion::local_hct_rows(mesh, k);
        let subs = element.sub_triangles();
        let h = mesh.diameter(k);
        for (j, &row) in rows.iter().enumerate() {
            let f = element.basis(j);
            let mut s = 0.0;
            for (t, tri) in subs.iter().enumerate() {
                s += integrate_polygon(tri, ell, h, 6, |x, l| l * f.value_on(t, x))?;
            }
            hct[row] += s;
        }
    }
    Ok(op.pull_back(&hct))
}

/// Functional ℓ^δ on the free Morley DoFs for the UC problem.
pub fn assemble_rhs_uc_y(mesh: &Mesh, y: &TestSpace, forcing: &UcForcing) -> Result<Vec<f64>> {
    match forcing {
        UcForcing::Zero => Ok(vec![0.0; y.dim()]),
        UcForcing::Density(ell) => density_rhs(mesh, y, ell),
        UcForcing::Smoothed(ell) => smoothed_rhs(mesh, y, ell),
        UcForcing::Dirac { point, weight } => {
            let v = mesh.find_vertex(*point).ok_or(Error::NotAVertex { x: point[0], y: point[1] })?;
            let mut rhs = vec![0.0; y.dim()];
            if let Some(i) = y.free(y.vertex_dof(v)) {
                rhs[i] = *weight;
            }
            Ok(rhs)
        }
    }
}

/// −∫_{K∩ω} q per element.
pub fn assemble_rhs_x(mesh: &Mesh, omega: &RegionMap, q: &Field) -> Result<Vec<f64>> {
    (0..mesh.n_elements())
        .map(|k| match omega.polygon(mesh, k) {
            None => Ok(0.0),
            Some(poly) => Ok(-integrate_polygon(&poly, q, mesh.diameter(k), 10, |_, v| v)?),
        })
        .collect()
}

/// UC right-hand sides (rhs_Y, rhs_X).
pub fn assemble_rhs_uc(
    mesh: &Mesh,
    y: &TestSpace,
    forcing: &UcForcing,
    omega: &RegionMap,
    q: &Field,
) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok((assemble_rhs_uc_y(mesh, y, forcing)?, assemble_rhs_x(mesh, omega, q)?))
}

/// One additive term of a function on Σ = (−1,1)×{0}, as a function of x.
#[derive(Clone)]
pub enum SigmaTerm {
    /// Smooth function; `wavenumber` (angular frequency) decides edge subdivision.
    Smooth { f: LineFn, wavenumber: f64 },
    /// coeff · sign(x − x0) · |x − x0|^power, with power > −2.
    OddPower { x0: f64, coeff: f64, power: f64 },
    /// values[i] on [breaks[i], breaks[i+1]).
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
    /// amplitude · √(mπ/2) sin(mπ(x+1)/2).
    SineMode { m: usize, amplitude: f64 },
}

impl std::fmt::Debug for SigmaTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SigmaTerm::Smooth { wavenumber, .. } => write!(f, "Smooth {{ wavenumber: {wavenumber} }}"),
            SigmaTerm::OddPower { x0, coeff, power } => write!(f, "OddPower({coeff}·|x-{x0}|^{power})"),
            SigmaTerm::PiecewiseConstant { breaks, .. } => write!(f, "PiecewiseConstant({} pieces)", breaks.len() - 1),
            SigmaTerm::SineMode { m, amplitude } => write!(f, "SineMode({amplitude}·g_{m})"),
        }
    }
}

impl SigmaTerm {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SigmaTerm::Smooth { f, .. } => f(x),
            SigmaTerm::OddPower { x0, coeff, power } => {
                let d = x - x0;
                if d == 0.0 {
                    0.0
                } else {
                    coeff * d.signum() * d.abs().powf(*power)
                }
            }
            SigmaTerm::PiecewiseConstant { breaks, values } => {
                match breaks.windows(2).position(|w| x >= w[0] && x < w[1]) {
                    Some(i) => values[i],
                    None if x == *breaks.last().unwrap() => *values.last().unwrap(),
                    None => 0.0,
                }
            }
            SigmaTerm::SineMode { m, amplitude } => {
                let k = *m as f64 * std::f64::consts::PI / 2.0;
                amplitude * k.sqrt() * (k * (x + 1.0)).sin()
            }
        }
    }
}

/// A function on Σ as a sum of terms.
#[derive(Clone, Debug, Default)]
pub struct SigmaData(pub Vec<SigmaTerm>);

impl SigmaData {
    pub fn zero() -> SigmaData {
        SigmaData(Vec::new())
    }

    pub fn smooth(f: impl Fn(f64) -> f64 + Send + Sync + 'static, wavenumber: f64) -> SigmaData {
        SigmaData(vec![SigmaTerm::Smooth { f: Arc::new(f), wavenumber }])
    }

    pub fn with(mut self, term: SigmaTerm) -> SigmaData {
        self.0.push(term);
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().map(|t| t.eval(x)).sum()
    }
}

fn poly_eval(c: &[f64], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * s + a)
}

/// ∫_{[xa,xb]} w(x) P(s(x)) dx for each polynomial P in s = (x − xa)/(xb − xa).
/// For OddPower terms with power ≤ −1 singular at an endpoint, P − P(s0) replaces P; the
/// caller adds the value at the singular vertex times the principal value.
fn term_moments(term: &SigmaTerm, xa: f64, xb: f64, polys: &[&[f64]]) -> Vec<f64> {
    let (lo, hi) = (xa.min(xb), xa.max(xb));
    let s_of = |x: f64| (x - xa) / (xb - xa);
    let mut out = vec![0.0; polys.len()];
    let gauss = |a: f64, b: f64, n: usize, w: &dyn Fn(f64) -> f64, out: &mut [f64]| {
        let rule = gauss_legendre(n);
        for (&t, &wt) in rule.points.iter().zip(&rule.weights) {
            let x = a + t * (b - a);
            let wx = wt * (b - a) * w(x);
            for (o, p) in out.iter_mut().zip(polys) {
                *o += wx * poly_eval(p, s_of(x));
            }
        }
    };
    let smooth = |wavenumber: f64, f: &dyn Fn(f64) -> f64, out: &mut [f64]| {
        let h = hi - lo;
        let pieces = if wavenumber * h > 1.0 { 4 * (wavenumber * h).ceil() as usize } else { 1 };
        let n = edge_quad(10).points.len();
        for i in 0..pieces {
            let a = lo + h * i as f64 / pieces as f64;
            let b = lo + h * (i + 1) as f64 / pieces as f64;
            gauss(a, b, n, f, out);
        }
    };
    match term {
        SigmaTerm::Smooth { f, wavenumber } => smooth(*wavenumber, &|x| f(x), &mut out),
        SigmaTerm::SineMode { m, .. } => smooth(*m as f64 * std::f64::consts::PI / 2.0, &|x| term.eval(x), &mut out),
        SigmaTerm::PiecewiseConstant { breaks, values } => {
            for (i, v) in values.iter().enumerate() {
                let (a, b) = (breaks[i].max(lo), breaks[i + 1].min(hi));
                if b > a {
                    gauss(a, b, 3, &|_| *v, &mut out);
                }
            }
        }
        SigmaTerm::OddPower { x0, coeff, power } => {
            let tol = 1e-12 * (hi - lo);
            let mut pieces = vec![];
            if *x0 > lo + tol && *x0 < hi - tol {
                pieces.push((lo, *x0));
                pieces.push((*x0, hi));
            } else {
                pieces.push((lo, hi));
            }
            let singular_at_end = |a: f64, b: f64| (a - x0).abs() <= tol || (b - x0).abs() <= tol;
            for (a, b) in pieces {
                if !singular_at_end(a, b) {
                    gauss(a, b, 20, &|x| term.eval(x), &mut out);
                    continue;
                }
                // x = x0 ± t², dx = 2t dt, t ∈ [0, √L].
                let (dir, len) = if (a - x0).abs() <= tol { (1.0, b - a) } else { (-1.0, b - a) };
                let subtract = *power <= -1.0;
                let s0 = s_of(*x0);
                let rule = gauss_legendre(12);
                let tmax = len.sqrt();
                for (&u, &wt) in rule.points.iter().zip(&rule.weights) {
                    let t = u * tmax;
                    let x = x0 + dir * t * t;
                    // w(x)·2t = coeff·dir·t^(2p+1)·2
                    let jac = wt * tmax * 2.0 * coeff * dir * t.powf(2.0 * power + 1.0);
                    let s = s_of(x);
                    for (o, p) in out.iter_mut().zip(polys) {
                        let pv = poly_eval(p, s) - if subtract { poly_eval(p, s0) } else { 0.0 };
                        *o += jac * pv;
                    }
                }
            }
            // Interior singularity of a non-integrable term: principal value over this edge.
            if *power <= -1.0 && *x0 > lo + tol && *x0 < hi - tol {
                let pv = odd_power_pv(*coeff, *power, x0 - lo, hi - x0);
                let s0 = s_of(*x0);
                for (o, p) in out.iter_mut().zip(polys) {
                    *o += pv * poly_eval(p, s0);
                }
            }
        }
    }
    out
}

/// PV ∫_{x0−h1}^{x0+h2} c·sign(x−x0)|x−x0|^p dx.
pub fn odd_power_pv(c: f64, p: f64, h1: f64, h2: f64) -> f64 {
    if (p + 1.0).abs() < 1e-14 {
        c * (h2 / h1).ln()
    } else {
        c * (h2.powf(p + 1.0) - h1.powf(p + 1.0)) / (p + 1.0)
    }
}

/// Cauchy data ℓ, g = u|_Σ, ψ = ∂_n u|_Σ (outward normal (0,−1)).
#[derive(Clone, Debug)]
pub struct CauchyData {
    pub ell: Option<Field>,
    pub g: SigmaData,
    pub psi: SigmaData,
}

/// f^δ(v) = ∫_Ω ℓ v + ∫_Σ ψ E v − g ∂_n E v over the free Morley DoFs.
pub fn assemble_rhs_cauchy(mesh: &Mesh, y: &TestSpace, data: &CauchyData) -> Result<Vec<f64>> {
    let mut rhs = match &data.ell {
        Some(ell) => density_rhs(mesh, y, ell)?,
        None => vec![0.0; y.dim()],
    };
    if data.g.0.is_empty() && data.psi.0.is_empty() {
        return Ok(rhs);
    }
    let op = CompanionOperator::new(mesh, y)?;
    let value_polys: [&[f64]; 4] = [&VALUE_BASIS[0], &VALUE_BASIS[1], &SLOPE_BASIS[0], &SLOPE_BASIS[1]];
    let normal_polys: [&[f64]; 3] = [&NORMAL_END_BASIS[0], &NORMAL_END_BASIS[1], &NORMAL_MID_BASIS];

    // Singular vertices of non-integrable ψ terms: PV over the adjacent Σ edges.
    let mut pv_corrections: Vec<(f64, f64, f64, f64)> = Vec::new();
    for term in &data.psi.0 {
        if let SigmaTerm::OddPower { x0, coeff, power } = term {
            if *power <= -1.0 {
                pv_corrections.push((*x0, *coeff, *power, 0.0));
            }
        }
    }
    let mut adjacent: Vec<[f64; 2]> = vec![[0.0, 0.0]; pv_corrections.len()];

    for (e, edge) in mesh.edges.iter().enumerate() {
        if edge.tag != EdgeTag::Sigma {
            continue;
        }
        let [a, b] = edge.endpoints;
        let (xa, xb) = (mesh.vertices[a][0], mesh.vertices[b][0]);
        let h = edge.length;
        let sigma = -edge.normal[1];
        let mut mv = [0.0; 4];
        for term in &data.psi.0 {
            let m = term_moments(term, xa, xb, &value_polys);
            mv.iter_mut().zip(&m).for_each(|(a, b)| *a += b);
        }
        let mut mn = [0.0; 3];
        for term in &data.g.0 {
            let m = term_moments(term, xa, xb, &normal_polys);
            mn.iter_mut().zip(&m).for_each(|(a, b)| *a += b);
        }
        for (i, (x0, ..)) in pv_corrections.iter().enumerate() {
            let tol = 1e-12 * h;
            if (xa.min(xb) - x0).abs() <= tol {
                adjacent[i][1] = h;
            } else if (xa.max(xb) - x0).abs() <= tol {
                adjacent[i][0] = h;
            }
        }

        let t = edge.tangent();
        let n = edge.normal;
        for (i, &w) in [a, b].iter().enumerate() {
            if let Some(c) = y.free(y.vertex_dof(w)) {
                rhs[c] += mv[i];
            }
            let slope = mv[2 + i] * h;
            let dn = -sigma * mn[i];
            for &(col, gr) in op.gradient_weights(w) {
                rhs[col] += slope * (t[0] * gr[0] + t[1] * gr[1]) + dn * (n[0] * gr[0] + n[1] * gr[1]);
            }
        }
        if let Some(c) = y.free(y.edge_dof(e)) {
            rhs[c] += -sigma * mn[2];
        }
    }

    for (i, &(x0, coeff, power, _)) in pv_corrections.iter().enumerate() {
        let [h1, h2] = adjacent[i];
        if h1 == 0.0 && h2 == 0.0 {
            continue;
        }
        let Some(v) = mesh.find_vertex([x0, 0.0]) else { continue };
        if let Some(c) = y.free(y.vertex_dof(v)) {
            rhs[c] += odd_power_pv(coeff, power, h1, h2);
        }
    }
    Ok(rhs)
}

/// The assembled saddle-point system [[G, B], [Bᵀ, −(Mω + ε²MΩ)]] (v, u) = (rhs_Y, rhs_X).
#[derive(Clone, Debug)]
pub struct SaddleSystem {
    pub problem: Problem,
    pub g: CsrMatrix,
    pub b: CsrMatrix,
    pub m_omega: CsrMatrix,
    pub m_full: CsrMatrix,
    pub rhs_y: Vec<f64>,
    pub rhs_x: Vec<f64>,
    pub epsilon: f64,
    /// Set when ε = 0 and the lower-right block has a kernel.
    pub possibly_singular: bool,
}

pub fn build_saddle(blocks: Blocks, rhs_y: Vec<f64>, rhs_x: Vec<f64>, epsilon: f64, problem: Problem) -> Result<SaddleSystem> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be non-negative, got {epsilon}")));
    }
    let m_omega = match problem {
        Problem::Uc => blocks.m_omega,
        Problem::Cauchy => CsrMatrix::zeros(blocks.m_full.nrows, blocks.m_full.ncols),
    };
    let possibly_singular = epsilon == 0.0 && (0..m_omega.nrows).any(|k| m_omega.get(k, k) == 0.0);
    if possibly_singular {
        log::warn!("epsilon = 0 with a kernel in the ω-mass; the saddle system may be singular");
    }
    Ok(SaddleSystem {
        problem,
        g: blocks.g,
        b: blocks.b,
        m_omega,
        m_full: blocks.m_full,
        rhs_y,
        rhs_x,
        epsilon,
        possibly_singular,
    })
}

impl SaddleSystem {
    /// Mω + ε²MΩ.
    pub fn lower_block(&self) -> CsrMatrix {
        self.m_omega.add_scaled(&self.m_full, self.epsilon * self.epsilon)
    }

    pub fn matrix(&self) -> CsrMatrix {
        crate::linalg::kkt_matrix(&self.g, &self.b, &self.lower_block())
    }

    /// Forward multiplication (v, u) ↦ (G v + B u, Bᵀ v − (Mω + ε²MΩ) u).
    pub fn apply(&self, v: &[f64], u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut f = self.g.mul_vec(v);
        f.iter_mut().zip(self.b.mul_vec(u)).for_each(|(a, b)| *a += b);
        let mut h = self.b.transpose_mul_vec(v);
        h.iter_mut().zip(self.lower_block().mul_vec(u)).for_each(|(a, b)| *a -= b);
        (f, h)
    }

    /// Writes each block in coordinate text format into `dir`.
    pub fn dump_blocks(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, m) in [("G", &self.g), ("B", &self.b), ("M_omega", &self.m_omega), ("M_full", &self.m_full)] {
            m.dump(std::io::BufWriter::new(std::fs::File::create(dir.join(format!("{name}.txt")))?))?;
        }
        for (name, r) in [("rhs_Y", &self.rhs_y), ("rhs_X", &self.rhs_x)] {
            let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("{name}.txt")))?);
            for v in r {
                writeln!(w, "{v:e}")?;
            }
        }
        Ok(())
    }
}
