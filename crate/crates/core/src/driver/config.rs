use std::path::PathBuf;
use std::str::FromStr;

use crate::benchmarks::{catalogue, PerturbationKind};
use crate::error::{Error, Result};
use crate::mesh::{Problem, Rect};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RefineMode {
    Uniform,
    Adaptive { theta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EpsRule {
    Zero,
    /// (dim X^δ)^{-1/2}
    Dofs,
    /// E_data + (dim X^δ)^{-1/2}, E_data the perturbation amplitude.
    DataPlusDofs,
}

impl FromStr for EpsRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<EpsRule> {
        match s.trim() {
            "zero" => Ok(EpsRule::Zero),
            "dofs" | "dofs^(-1/2)" => Ok(EpsRule::Dofs),
            "data_plus_dofs" => Ok(EpsRule::DataPlusDofs),
            other => Err(Error::Config(format!("unknown eps rule '{other}' (zero | dofs | data_plus_dofs)"))),
        }
    }
}

impl std::fmt::Display for EpsRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EpsRule::Zero => "zero",
            EpsRule::Dofs => "dofs",
            EpsRule::DataPlusDofs => "data_plus_dofs",
        })
    }
}

impl EpsRule {
    pub fn epsilon(self, ndof_x: usize, data_error: f64) -> f64 {
        let d = 1.0 / (ndof_x as f64).sqrt();
        match self {
            EpsRule::Zero => 0.0,
            EpsRule::Dofs => d,
            EpsRule::DataPlusDofs => data_error + d,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub solution: String,
    pub refine: RefineMode,
    /// Number of refinement steps after the initial mesh.
    pub levels: usize,
    /// Stop once dim X^δ reaches this value.
    pub max_dofs: usize,
    pub eps_rule: EpsRule,
    pub perturb: PerturbationKind,
    pub seed: u64,
    pub g_region: Option<Rect>,
    pub out: Option<PathBuf>,
    pub plot_script: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults for a benchmark: uniform refinement, 8 levels (UC) or 7 (Cauchy).
    pub fn new(solution: &str) -> Result<ExperimentConfig> {
        let b = catalogue(solution)?;
        Ok(ExperimentConfig {
            solution: solution.to_string(),
            refine: RefineMode::Uniform,
            levels: match b.problem {
                Problem::Uc => 8,
                Problem::Cauchy => 7,
            },
            max_dofs: usize::MAX,
            eps_rule: EpsRule::Dofs,
            perturb: PerturbationKind::None,
            seed: 0,
            g_region: None,
            out: None,
            plot_script: None,
        })
    }

    pub fn adaptive(mut self, theta: f64) -> Self {
        self.refine = RefineMode::Adaptive { theta };
        if self.max_dofs == usize::MAX {
            self.max_dofs = 200_000;
        }
        self.levels = usize::MAX;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let b = catalogue(&self.solution)?;
        if let RefineMode::Adaptive { theta } = self.refine {
            if !(theta > 0.0 && theta <= 1.0) {
                return Err(Error::Config(format!("theta must lie in (0, 1], got {theta}")));
            }
        }
        if self.levels == 0 && self.max_dofs == 0 {
            return Err(Error::Config("the budget must allow at least one level".into()));
        }
        if b.problem == Problem::Uc && self.perturb != PerturbationKind::None {
            return Err(Error::Config("perturbations apply to the Cauchy datum g only".into()));
        }
        if self.perturb.amplitude() < 0.0 {
            return Err(Error::Config("perturbation amplitude must be non-negative".into()));
        }
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let bad = |what: &str| Error::Config(format!("invalid {what} '{v}'"));
        match key.trim().replace('-', "_").as_str() {
            "solution" => {
                catalogue(v)?;
                self.solution = v.to_string();
            }
            "refine" => {
                self.refine = match v {
                    "uniform" => RefineMode::Uniform,
                    "adaptive" => RefineMode::Adaptive {
                        theta: match self.refine {
                            RefineMode::Adaptive { theta } => theta,
                            RefineMode::Uniform => 0.6,
                        },
                    },
                    _ => return Err(bad("refine mode")),
                }
            }
            "theta" => {
                let t: f64 = v.parse().map_err(|_| bad("theta"))?;
                if let RefineMode::Adaptive { theta } = &mut self.refine {
                    *theta = t;
                } else {
                    self.refine = RefineMode::Adaptive { theta: t };
                }
            }
            "levels" => self.levels = v.parse().map_err(|_| bad("levels"))?,
            "max_dofs" => self.max_dofs = v.parse::<f64>().map_err(|_| bad("max_dofs"))? as usize,
            "eps_rule" => self.eps_rule = v.parse()?,
            "perturb" => self.perturb = v.parse()?,
            "seed" => self.seed = v.parse().map_err(|_| bad("seed"))?,
            "g_region" => self.g_region = Some(parse_rect(v)?),
            "out" => self.out = Some(PathBuf::from(v)),
            "plot_script" => self.plot_script = Some(PathBuf::from(v)),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parses line-oriented `key = value` text; `#` starts a comment.
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut pairs = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let solution = pairs
            .iter()
            .find(|(k, _)| k == "solution")
            .map(|(_, v)| v.clone())
            .ok_or_else(|| Error::Config("missing 'solution'".into()))?;
        let mut cfg = ExperimentConfig::new(&solution)?;
        let adaptive = pairs.iter().any(|(k, v)| k == "refine" && v == "adaptive");
        if adaptive {
            cfg = cfg.adaptive(0.6);
        }
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("solution = {}\n", self.solution);
        match self.refine {
            RefineMode::Uniform => s.push_str("refine = uniform\n"),
            RefineMode::Adaptive { theta } => s.push_str(&format!("refine = adaptive\ntheta = {theta}\n")),
        }
        if self.levels != usize::MAX {
            s.push_str(&format!("levels = {}\n", self.levels));
        }
        if self.max_dofs != usize::MAX {
            s.push_str(&format!("max_dofs = {}\n", self.max_dofs));
        }
        s.push_str(&format!("eps_rule = {}\nperturb = {}\nseed = {}\n", self.eps_rule, self.perturb, self.seed));
        if let Some(r) = self.g_region {
            s.push_str(&format!("g_region = {},{},{},{}\n", r.x0, r.x1, r.y0, r.y1));
        }
        if let Some(p) = &self.out {
            s.push_str(&format!("out = {}\n", p.display()));
        }
        if let Some(p) = &self.plot_script {
            s.push_str(&format!("plot_script = {}\n", p.display()));
        }
        s
    }
}

/// `x0,x1,y0,y1`.
pub fn parse_rect(s: &str) -> Result<Rect> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("invalid rectangle '{s}'")))?;
    match v.as_slice() {
        &[x0, x1, y0, y1] if x0 < x1 && y0 < y1 => Ok(Rect::new(x0, x1, y0, y1)),
        _ => Err(Error::Config(format!("rectangle must be x0,x1,y0,y1 with x0<x1, y0<y1: '{s}'"))),
    }
}
