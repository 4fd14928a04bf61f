//! Experiment runner: refinement loops, ε-rules, CSV output and rate fitting.

mod config;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use config::{parse_rect, EpsRule, ExperimentConfig, RefineMode};

use crate::adaptivity::{dorfler_mark, indicators, zz_recover};
use crate::assembly::{assemble_blocks, assemble_rhs_cauchy, assemble_rhs_uc, build_saddle, SaddleSystem};
use crate::benchmarks::{catalogue, l2_region_error, projection_error, realize_perturbation, BenchmarkData, BenchmarkProblem, OMEGA};
use crate::error::{Error, Result};
use crate::linalg::solve_saddle;
use crate::mesh::{bisect, initial_mesh, uniform_refine, Mesh, RegionMap};
use crate::spaces::{build_spaces, P0Function};

pub const CSV_HEADER: &str = "level,ndof_x,ndof_y,epsilon,err_g,err_omega,eta,seconds";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRecord {
    pub level: usize,
    pub ndof_x: usize,
    pub ndof_y: usize,
    pub epsilon: f64,
    /// L2(G) error.
    pub err_g: f64,
    /// L2(Ω) error.
    pub err_omega: f64,
    /// √(Σ_K η_K).
    pub eta: f64,
    pub seconds: f64,
}

impl ConvergenceRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.10e},{:.10e},{:.10e},{:.10e},{:.3}",
            self.level, self.ndof_x, self.ndof_y, self.epsilon, self.err_g, self.err_omega, self.eta, self.seconds
        )
    }

    pub fn parse_row(line: &str) -> Result<ConvergenceRecord> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 8 {
            return Err(Error::InvalidInput(format!("expected 8 CSV fields, got {}", f.len())));
        }
        let bad = |_| Error::InvalidInput(format!("bad CSV row '{line}'"));
        let num = |s: &str| s.parse::<f64>().map_err(bad);
        Ok(ConvergenceRecord {
            level: f[0].parse().map_err(|_| Error::InvalidInput(format!("bad level in '{line}'")))?,
            ndof_x: f[1].parse().map_err(|_| Error::InvalidInput(format!("bad ndof_x in '{line}'")))?,
            ndof_y: f[2].parse().map_err(|_| Error::InvalidInput(format!("bad ndof_y in '{line}'")))?,
            epsilon: num(f[3])?,
            err_g: num(f[4])?,
            err_omega: num(f[5])?,
            eta: num(f[6])?,
            seconds: num(f[7])?,
        })
    }
}

pub fn write_csv(records: &[ConvergenceRecord], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

pub fn read_csv(text: &str) -> Result<Vec<ConvergenceRecord>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::InvalidInput("missing CSV header".into())),
    }
    lines.map(ConvergenceRecord::parse_row).collect()
}

/// Everything computed on one level, handed to observers.
pub struct LevelState<'a> {
    pub mesh: &'a Mesh,
    pub system: &'a SaddleSystem,
    pub u: &'a P0Function,
    pub record: &'a ConvergenceRecord,
    pub benchmark: &'a BenchmarkProblem,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub records: Vec<ConvergenceRecord>,
    pub meshes: Vec<Mesh>,
}

fn assemble(mesh: &Mesh, bench: &BenchmarkProblem, cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<SaddleSystem> {
    let (x, y) = build_spaces(mesh);
    let perturbation = realize_perturbation(cfg.perturb, mesh, rng)?;
    let epsilon = cfg.eps_rule.epsilon(x.dim, cfg.perturb.amplitude());
    match &bench.data {
        BenchmarkData::Uc { forcing, q, omega } => {
            let omega = RegionMap::classify(mesh, *omega);
            let blocks = assemble_blocks(mesh, &y, Some(&omega))?;
            let (ry, rx) = assemble_rhs_uc(mesh, &y, forcing, &omega, q)?;
            build_saddle(blocks, ry, rx, epsilon, bench.problem)
        }
        BenchmarkData::Cauchy(data) => {
            let mut data = data.clone();
            if let Some(p) = perturbation {
                data.g.0.extend(p.g.0);
            }
            let blocks = assemble_blocks(mesh, &y, None)?;
            let ry = assemble_rhs_cauchy(mesh, &y, &data)?;
            build_saddle(blocks, ry, vec![0.0; x.dim], epsilon, bench.problem)
        }
    }
}

fn write_failure_row(out: &mut Option<std::io::BufWriter<std::fs::File>>, level: usize, err: &Error) {
    if let Some(w) = out.as_mut() {
        let _ = writeln!(w, "{level},0,0,NaN,NaN,NaN,NaN,NaN");
        let _ = writeln!(w, "# failed at level {level}: {err}");
        let _ = w.flush();
    }
}

/// Runs the refinement loop, calling `observer` after every solve.
pub fn run_with(cfg: &ExperimentConfig, mut observer: impl FnMut(&LevelState) -> Result<()>) -> Result<RunOutput> {
    cfg.validate()?;
    let bench = catalogue(&cfg.solution)?;
    let g_rect = cfg.g_region.unwrap_or(bench.g_region);
    let domain = bench.problem.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = match &cfg.out {
        Some(p) => {
            let mut w = std::io::BufWriter::new(std::fs::File::create(p)?);
            writeln!(w, "{CSV_HEADER}")?;
            w.flush()?;
            Some(w)
        }
        None => None,
    };
    if let (Some(script), Some(csv)) = (&cfg.plot_script, &cfg.out) {
        write_plot_script(script, csv, &cfg.solution)?;
    }

    let mut mesh = initial_mesh(bench.problem);
    let mut records = Vec::new();
    let mut meshes = Vec::new();
    let mut level = 0;
    loop {
        let start = Instant::now();
        let step = (|| -> Result<(SaddleSystem, P0Function)> {
            let system = assemble(&mesh, &bench, cfg, &mut rng)?;
            let sol = solve_saddle(&system)?;
            Ok((system, sol.u))
        })();
        let (system, u) = match step {
            Ok(s) => s,
            Err(e) => {
                write_failure_row(&mut out, level, &e);
                return Err(e);
            }
        };
        let seconds = start.elapsed().as_secs_f64();
        let err_g = l2_region_error(&mesh, &u, &bench.exact, &RegionMap::classify(&mesh, g_rect))?;
        let err_omega = l2_region_error(&mesh, &u, &bench.exact, &RegionMap::classify(&mesh, domain))?;
        let recovered = zz_recover(&mesh, &u);
        let eta = indicators(&mesh, &u, &recovered);
        let record = ConvergenceRecord {
            level,
            ndof_x: mesh.n_elements(),
            ndof_y: system.rhs_y.len(),
            epsilon: system.epsilon,
            err_g,
            err_omega,
            eta: eta.total().sqrt(),
            seconds,
        };
        log::info!(
            "{} level {level}: dim X = {}, dim Y = {}, eps = {:.3e}, err_G = {:.4e}, err_Omega = {:.4e}, {:.2}s",
            cfg.solution,
            record.ndof_x,
            record.ndof_y,
            record.epsilon,
            err_g,
            err_omega,
            seconds
        );
        if let Some(w) = out.as_mut() {
            writeln!(w, "{}", record.csv_row())?;
            w.flush()?;
        }
        observer(&LevelState { mesh: &mesh, system: &system, u: &u, record: &record, benchmark: &bench })?;
        records.push(record);

        if level >= cfg.levels || mesh.n_elements() >= cfg.max_dofs {
            meshes.push(mesh);
            break;
        }
        let next = match cfg.refine {
            RefineMode::Uniform => uniform_refine(&mesh),
            RefineMode::Adaptive { theta } => {
                let marked = dorfler_mark(&eta, theta);
                if marked.is_empty() {
                    meshes.push(mesh);
                    break;
                }
                bisect(&mesh, &marked)
            }
        };
        meshes.push(std::mem::replace(&mut mesh, next));
        level += 1;
    }
    Ok(RunOutput { records, meshes })
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    run_with(cfg, |_| Ok(()))
}

/// Decay rate from the last `tail` records: −slope of log(err) against log(DoFs).
pub fn fit_rate(dofs: &[f64], errors: &[f64], tail: usize) -> Result<f64> {
    if tail < 3 {
        return Err(Error::RateFit(format!("tail must be at least 3, got {tail}")));
    }
    if dofs.len() != errors.len() || dofs.len() < tail {
        return Err(Error::RateFit(format!("need {tail} points, have {}", dofs.len().min(errors.len()))));
    }
    let n = dofs.len();
    let (xs, ys): (Vec<f64>, Vec<f64>) = (n - tail..n)
        .map(|i| {
            if errors[i] <= 0.0 || dofs[i] <= 0.0 || !errors[i].is_finite() {
                Err(Error::RateFit(format!("non-positive value at point {i}")))
            } else {
                Ok((dofs[i].ln(), errors[i].ln()))
            }
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let mx = xs.iter().sum::<f64>() / tail as f64;
    let my = ys.iter().sum::<f64>() / tail as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::RateFit("all DoF counts are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(-sxy / sxx)
}

pub fn fit_rate_records(records: &[ConvergenceRecord], tail: usize, err: impl Fn(&ConvergenceRecord) -> f64) -> Result<f64> {
    let dofs: Vec<f64> = records.iter().map(|r| r.ndof_x as f64).collect();
    let errs: Vec<f64> = records.iter().map(err).collect();
    fit_rate(&dofs, &errs, tail)
}

/// ‖u − Π₀u‖_{L2(Ω)} on each mesh of a completed run.
pub fn l2_projection_reference(solution: &str, meshes: &[Mesh]) -> Result<Vec<(usize, f64)>> {
    let bench = catalogue(solution)?;
    meshes.iter().map(|m| Ok((m.n_elements(), projection_error(m, &bench.exact)?))).collect()
}

/// gnuplot script for a log-log plot of err_g and err_omega against DoFs.
pub fn write_plot_script(path: &Path, csv: &Path, title: &str) -> Result<()> {
    let mut w = std::fs::File::create(path)?;
    writeln!(w, "set datafile separator ','")?;
    writeln!(w, "set logscale xy")?;
    writeln!(w, "set key autotitle columnhead")?;
    writeln!(w, "set xlabel 'DoFs in X'")?;
    writeln!(w, "set ylabel 'L2 error'")?;
    writeln!(w, "set title '{title}'")?;
    writeln!(
        w,
        "plot '{0}' using 2:5 with linespoints, '{0}' using 2:6 with linespoints, '{0}' using 2:(0.5*$2**-0.5) with lines title 'rate 1/2'",
        csv.display()
    )?;
    Ok(())
}

/// The default error regions for the UC experiments, from ω outward to Ω.
pub fn uc_regions() -> Vec<crate::mesh::Rect> {
    use crate::mesh::Rect;
    vec![OMEGA, Rect::new(-0.75, 0.75, -0.75, 0.75), Rect::new(-0.9, 0.9, -0.9, 0.9), Rect::new(-1.0, 1.0, -1.0, 1.0)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_rate_examples() {
        assert!((fit_rate(&[100.0, 400.0, 1600.0], &[1.0, 0.5, 0.25], 3).unwrap() - 0.5).abs() < 1e-14);
        assert!(fit_rate(&[100.0, 400.0, 1600.0], &[2.0, 2.0, 2.0], 3).unwrap().abs() < 1e-14);
        assert!(fit_rate(&[1.0, 2.0, 3.0], &[1.0, 0.0, 1.0], 3).is_err());
        assert!(fit_rate(&[1.0, 2.0], &[1.0, 1.0], 2).is_err());
        // Only the tail counts.
        let r = fit_rate(&[1.0, 10.0, 100.0, 1000.0], &[7.0, 1.0, 0.1, 0.01], 3).unwrap();
        assert!((r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn csv_roundtrip() {
        let r = ConvergenceRecord { level: 2, ndof_x: 64, ndof_y: 100, epsilon: 0.125, err_g: 1e-3, err_omega: 2e-2, eta: 3e-3, seconds: 0.5 };
        let mut buf = Vec::new();
        write_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        let back = read_csv(&text).unwrap();
        assert_eq!(back[0].ndof_x, 64);
        assert!((back[0].err_g - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn short_uniform_run_is_deterministic() {
        let mut cfg = ExperimentConfig::new("cauchy-smooth").unwrap();
        cfg.levels = 2;
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.records.len(), 3);
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!((x.err_g, x.err_omega, x.eta), (y.err_g, y.err_omega, y.eta));
        }
        for w in a.records.windows(2) {
            assert!(w[1].ndof_x > w[0].ndof_x);
        }
    }

    #[test]
    fn adaptive_run_grows_and_random_perturbation_is_reproducible() {
        let mut cfg = ExperimentConfig::new("cauchy-singular").unwrap().adaptive(0.6);
        cfg.max_dofs = 200;
        cfg.perturb = crate::benchmarks::PerturbationKind::Random { amplitude: 0.05 };
        cfg.eps_rule = EpsRule::DataPlusDofs;
        cfg.seed = 3;
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.records.last().unwrap().err_g, b.records.last().unwrap().err_g);
        for w in a.records.windows(2) {
            assert!(w[1].ndof_x > w[0].ndof_x);
        }
        assert!(a.records.last().unwrap().ndof_x >= 200);
        assert_eq!(a.meshes.len(), a.records.len());
    }

    #[test]
    fn projection_reference_of_affine_function_is_small() {
        let m = uniform_refine(&initial_mesh(crate::mesh::Problem::Uc));
        let r = l2_projection_reference("uc-smooth", &[m.clone(), uniform_refine(&m)]).unwrap();
        assert!(r[1].1 < r[0].1);
    }
}
