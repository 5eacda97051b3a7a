use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use scaledgrad::{
    eigenvector_start, load_problem, BatchSize, CapMode, Constants, EigenSelector, Error,
    MomentumSchedule, Problem, RuleKind, StepRule,
};

use crate::CliError;

/// Writes `bytes` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let io = |e: std::io::Error| CliError::Usage(format!("cannot write {}: {e}", path.display()));
    let mut file = fs::File::create(&tmp).map_err(io)?;
    file.write_all(bytes).map_err(io)?;
    file.sync_all().map_err(io)?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}

pub fn read_problem_file(path: &Path) -> Result<Problem, CliError> {
    load_problem(path).map_err(CliError::from)
}

/// `--eta`: a number or `auto`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EtaArg {
    Auto,
    Value(f64),
}

impl FromStr for EtaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(EtaArg::Auto);
        }
        s.parse::<f64>()
            .map(EtaArg::Value)
            .map_err(|_| format!("expected a number or `auto`, got `{s}`"))
    }
}

/// Default `η`: `1/L_f` for plain gradient descent, `1/L` for the corrected
/// diversity rule and `1/(2L)` for the plain diversity rule and momentum.
pub fn auto_eta(kind: RuleKind, momentum: bool, c: &Constants) -> f64 {
    match kind {
        _ if momentum => 0.5 / c.l,
        RuleKind::Constant => 1.0 / c.l_f,
        RuleKind::Grads => 1.0 / c.l,
        RuleKind::Grad => 0.5 / c.l,
        _ => 1.0,
    }
}

/// Default `γ_min` for theorem-mode caps: the `1/L` lower bound for the
/// Polyak-type rules and 1 for the diversity rules.
pub fn default_gamma_min(kind: RuleKind, c: &Constants) -> f64 {
    match kind {
        RuleKind::Grad | RuleKind::Grads | RuleKind::Constant => 1.0,
        _ => 1.0 / c.l,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BatchArg {
    Full,
    Size(usize),
}

impl FromStr for BatchArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "full" {
            return Ok(BatchArg::Full);
        }
        s.parse::<usize>()
            .map(BatchArg::Size)
            .map_err(|_| format!("expected `full` or a batch size, got `{s}`"))
    }
}

impl BatchArg {
    pub fn resolve(self) -> BatchSize {
        match self {
            BatchArg::Full => BatchSize::Full,
            BatchArg::Size(n) => BatchSize::Sampled(n),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MomentumArg {
    None,
    Constant(f64),
    Nesterov,
}

impl FromStr for MomentumArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(MomentumArg::None),
            "nesterov" => Ok(MomentumArg::Nesterov),
            _ => {
                let beta = s
                    .strip_prefix("const:")
                    .and_then(|b| b.parse::<f64>().ok())
                    .ok_or_else(|| format!("expected none, const:BETA or nesterov, got `{s}`"))?;
                if !(0.0..1.0).contains(&beta) {
                    return Err(format!("momentum must lie in [0, 1), got {beta}"));
                }
                Ok(MomentumArg::Constant(beta))
            }
        }
    }
}

impl MomentumArg {
    pub fn resolve(self) -> MomentumSchedule<f64> {
        match self {
            MomentumArg::None => MomentumSchedule::None,
            MomentumArg::Constant(b) => MomentumSchedule::Constant(b),
            MomentumArg::Nesterov => MomentumSchedule::NesterovLike,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StartArg {
    Zeros,
    Eig(EigenSelector),
    File(PathBuf),
}

impl FromStr for StartArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "zeros" {
            return Ok(StartArg::Zeros);
        }
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(StartArg::File(PathBuf::from(path)));
        }
        match s.strip_prefix("eig:") {
            Some("min") => Ok(StartArg::Eig(EigenSelector::Min)),
            Some("max") => Ok(StartArg::Eig(EigenSelector::Max)),
            Some(k) => k
                .parse::<usize>()
                .map(|k| StartArg::Eig(EigenSelector::Index(k)))
                .map_err(|_| format!("bad eigenvector index `{k}`")),
            None => Err(format!(
                "expected zeros, eig:min, eig:max, eig:K or file:PATH, got `{s}`"
            )),
        }
    }
}

impl StartArg {
    pub fn label(&self) -> String {
        match self {
            StartArg::Zeros => "zeros".into(),
            StartArg::Eig(EigenSelector::Min) => "eig_min".into(),
            StartArg::Eig(EigenSelector::Max) => "eig_max".into(),
            StartArg::Eig(EigenSelector::Index(k)) => format!("eig_{k}"),
            StartArg::File(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "file".into()),
        }
    }

    pub fn resolve(&self, problem: &Problem, scale: f64) -> Result<Vec<f64>, CliError> {
        let d = problem.dimension();
        let x = match self {
            StartArg::Zeros => vec![0.0; d],
            StartArg::Eig(which) => eigenvector_start(problem, *which, scale)?,
            StartArg::File(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
                text.split_whitespace()
                    .map(|t| {
                        t.parse::<f64>().map_err(|_| {
                            CliError::Usage(format!("bad value `{t}` in {}", path.display()))
                        })
                    })
                    .collect::<Result<Vec<f64>, _>>()?
            }
        };
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() }.into());
        }
        Ok(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum CapArg {
    None,
    Theorem,
    Smoothing,
}

/// Settings shared by every command that builds a step rule.
pub struct RuleSettings {
    pub kind: RuleKind,
    pub eta: EtaArg,
    pub delta: Option<f64>,
    pub cap: CapArg,
    pub tau: f64,
    pub gamma_max0: Option<f64>,
    pub mu: Option<f64>,
    pub gamma_min: Option<f64>,
    pub momentum: bool,
}

impl RuleSettings {
    pub fn plain(kind: RuleKind) -> Self {
        Self {
            kind,
            eta: EtaArg::Auto,
            delta: None,
            cap: CapArg::None,
            tau: scaledgrad::stepsizes::DEFAULT_TAU,
            gamma_max0: None,
            mu: None,
            gamma_min: None,
            momentum: false,
        }
    }

    pub fn build(&self, batch: BatchSize, total: usize, constants: &Constants) -> StepRule<f64> {
        let eta = match self.eta {
            EtaArg::Auto => auto_eta(self.kind, self.momentum, constants),
            EtaArg::Value(v) => v,
        };
        let mut rule = StepRule::new(self.kind).with_eta(eta);
        if let Some(delta) = self.delta {
            rule = rule.with_delta(delta);
        }
        let cap = match self.cap {
            CapArg::None => CapMode::None,
            CapArg::Theorem => CapMode::Theorem {
                mu: Some(self.mu.unwrap_or(constants.mu)),
                gamma_min: Some(
                    self.gamma_min
                        .unwrap_or_else(|| default_gamma_min(self.kind, constants)),
                ),
            },
            CapArg::Smoothing => CapMode::Smoothing {
                tau: self.tau,
                batch: batch.len(total),
                total,
            },
        };
        rule = rule.with_cap(cap);
        if let Some(g) = self.gamma_max0 {
            rule = rule.with_gamma_max0(g);
        }
        rule
    }
}
