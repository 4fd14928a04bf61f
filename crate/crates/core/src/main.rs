use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ultraweak::diagnostics::run_suite;
use ultraweak::driver::{fit_rate_records, l2_projection_reference, run, ExperimentConfig};
use ultraweak::mesh::Problem;
use ultraweak::{Error, Result};

#[derive(Parser)]
#[command(name = "ultraweak", version, about = "Ultra-weak least-squares FEM for unique continuation and Cauchy problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Unique continuation experiment.
    RunUc(RunArgs),
    /// Cauchy problem experiment.
    RunCauchy(RunArgs),
    /// Structural diagnostics (companion bounds, right inverse, inf-sup ratios).
    Diagnose {
        #[arg(long, default_value = "uc")]
        problem: String,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// key = value configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    solution: Option<String>,
    /// uniform | adaptive
    #[arg(long)]
    refine: Option<String>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    max_dofs: Option<f64>,
    /// zero | dofs | data_plus_dofs
    #[arg(long)]
    eps_rule: Option<String>,
    /// none | random:AMP | mode:M:AMP
    #[arg(long)]
    perturb: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// x0,x1,y0,y1
    #[arg(long, allow_hyphen_values = true)]
    g_region: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    plot_script: Option<PathBuf>,
    /// Also report the L2-projection reference on the computed meshes.
    #[arg(long)]
    projection: bool,
}

fn build_config(args: &RunArgs, default_solution: &str, problem: Problem) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::parse(&std::fs::read_to_string(p)?)?,
        None => ExperimentConfig::new(args.solution.as_deref().unwrap_or(default_solution))?,
    };
    if let Some(s) = &args.solution {
        cfg.set("solution", s)?;
    }
    if args.refine.as_deref() == Some("adaptive") && cfg.refine == ultraweak::driver::RefineMode::Uniform {
        cfg = cfg.adaptive(0.6);
    }
    let pairs = [
        ("refine", args.refine.clone()),
        ("theta", args.theta.map(|v| v.to_string())),
        ("levels", args.levels.map(|v| v.to_string())),
        ("max_dofs", args.max_dofs.map(|v| v.to_string())),
        ("eps_rule", args.eps_rule.clone()),
        ("perturb", args.perturb.clone()),
        ("seed", args.seed.map(|v| v.to_string())),
        ("g_region", args.g_region.clone()),
        ("out", args.out.as_ref().map(|p| p.display().to_string())),
        ("plot_script", args.plot_script.as_ref().map(|p| p.display().to_string())),
    ];
    for (k, v) in pairs {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    let actual = ultraweak::benchmarks::catalogue(&cfg.solution)?.problem;
    if actual != problem {
        return Err(Error::Config(format!("solution '{}' is not a {} benchmark", cfg.solution, problem.name())));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_experiment(args: &RunArgs, default_solution: &str, problem: Problem) -> Result<()> {
    let cfg = build_config(args, default_solution, problem)?;
    let out = run(&cfg)?;
    println!("{}", ultraweak::driver::CSV_HEADER);
    for r in &out.records {
        println!("{}", r.csv_row());
    }
    let tail = out.records.len().min(4);
    if tail >= 3 {
        let g = fit_rate_records(&out.records, tail, |r| r.err_g)?;
        let o = fit_rate_records(&out.records, tail, |r| r.err_omega)?;
        println!("# rate err_g {g:.3}, err_omega {o:.3} (last {tail} levels)");
    }
    if args.projection {
        for (n, e) in l2_projection_reference(&cfg.solution, &out.meshes)? {
            println!("# projection {n} {e:.6e}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::RunUc(a) => run_experiment(a, "uc-smooth", Problem::Uc),
        Command::RunCauchy(a) => run_experiment(a, "cauchy-smooth", Problem::Cauchy),
        Command::Diagnose { problem, levels, seed } => (|| {
            let p = match problem.as_str() {
                "uc" => Problem::Uc,
                "cauchy" => Problem::Cauchy,
                other => return Err(Error::Config(format!("unknown problem '{other}' (uc | cauchy)"))),
            };
            let report = run_suite(p, *levels, *seed)?;
            print!("{report}");
            if report.all_pass() {
                Ok(())
            } else {
                Err(Error::InvalidInput("diagnostic checks failed".into()))
            }
        })(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
