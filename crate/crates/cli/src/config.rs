//! Experiment manifests: a TOML file whose fields can be overridden by
//! command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use advhyp_core::adversary_sim::StrategyKind;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::formats::read_file;

/// Solver tolerance used when neither the manifest nor a flag sets one.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Stein,
    Chernoff,
    Simulate,
    QuantumStein,
    QuantumChernoff,
    Audit,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Stein => "stein",
            Mode::Chernoff => "chernoff",
            Mode::Simulate => "simulate",
            Mode::QuantumStein => "quantum-stein",
            Mode::QuantumChernoff => "quantum-chernoff",
            Mode::Audit => "audit",
        })
    }
}

/// Which likelihood-ratio test a simulation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Stein,
    Chernoff,
}

/// Unit of every reported entropic quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Nats,
    Bits,
}

impl LogBase {
    pub fn unit(self) -> &'static str {
        match self {
            LogBase::Nats => "nats",
            LogBase::Bits => "bits",
        }
    }

    /// Factor converting a value in nats to this unit.
    pub fn factor(self) -> f64 {
        match self {
            LogBase::Nats => 1.0,
            LogBase::Bits => std::f64::consts::LOG2_E,
        }
    }
}

fn default_strategy() -> String {
    "static-optimal".into()
}

fn default_block_size() -> usize {
    1
}

/// Two classical classes given by class files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalSection {
    pub p: PathBuf,
    pub q: PathBuf,
    #[serde(default = "default_strategy")]
    pub p_strategy: String,
    #[serde(default = "default_strategy")]
    pub q_strategy: String,
}

/// Two state classes (one file per vertex) and a measurement menu.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumSection {
    pub r: Vec<PathBuf>,
    pub s: Vec<PathBuf>,
    pub menu: PathBuf,
    /// Menu element to reduce with; the best one for the mode when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub povm: Option<usize>,
    /// Copies each menu element acts on.
    #[serde(default = "default_block_size")]
    pub block_size: usize,
    #[serde(default = "default_strategy")]
    pub p_strategy: String,
    #[serde(default = "default_strategy")]
    pub q_strategy: String,
}

/// Residuals of `states` after measuring their first factor with `menu`,
/// tested against either the separable states of `separable` or the hull
/// of the `hull` states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompatibilityAudit {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub menu: PathBuf,
    pub states: Vec<PathBuf>,
    /// Dimensions of the measured factor and the rest.
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separable: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hull: Option<Vec<PathBuf>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperadditivityAudit {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub rho: PathBuf,
    pub sigma: PathBuf,
    pub dims: Vec<usize>,
    pub m_x: PathBuf,
    pub m_y: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimaxAudit {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub r: Vec<PathBuf>,
    pub s: Vec<PathBuf>,
    pub menu: PathBuf,
}

/// One one-way LOCC measurement: Alice's POVM and Bob's POVM per outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoccSpec {
    pub alice: PathBuf,
    pub bob: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsaAudit {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub rho: PathBuf,
    /// Dimensions of `A`, `B` and `C`.
    pub dims: Vec<usize>,
    pub locc: Vec<LoccSpec>,
    /// Separable generators on `A ⊗ B`.
    pub proxy: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonotonicityAudit {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub rho: PathBuf,
    pub sigma: PathBuf,
    pub povm: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSection {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub compatibility: Vec<CompatibilityAudit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub superadditivity: Vec<SuperadditivityAudit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub minimax: Vec<MinimaxAudit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ssa: Vec<SsaAudit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub monotonicity: Vec<MonotonicityAudit>,
}

impl AuditSection {
    fn is_empty(&self) -> bool {
        self.compatibility.is_empty()
            && self.superadditivity.is_empty()
            && self.minimax.is_empty()
            && self.ssa.is_empty()
            && self.monotonicity.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    /// Test family for simulations in `simulate` mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<TestKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub log_base: LogBase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_json: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classical: Option<ClassicalSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantum: Option<QuantumSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditSection>,
    /// Directory that relative instance paths are resolved against.
    #[serde(skip)]
    pub base: PathBuf,
}

/// Command-line values that replace manifest fields when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub n: Vec<usize>,
    pub epsilon: Option<f64>,
    pub log_base: Option<LogBase>,
    pub out_json: Option<PathBuf>,
    pub out_csv: Option<PathBuf>,
    pub tol: Option<f64>,
}

impl ExperimentConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_file(path)?, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifests serialize")
    }

    /// Flags win over manifest fields. Output paths from flags are taken
    /// relative to the working directory, so they are stored absolute.
    pub fn apply(&mut self, o: Overrides) {
        let cwd = std::env::current_dir().unwrap_or_default();
        self.mode = o.mode.or(self.mode);
        self.seed = o.seed.unwrap_or(self.seed);
        self.trials = o.trials.or(self.trials);
        if !o.n.is_empty() {
            self.n = o.n;
        }
        self.epsilon = o.epsilon.or(self.epsilon);
        self.log_base = o.log_base.unwrap_or(self.log_base);
        self.tol = o.tol.or(self.tol);
        if let Some(p) = o.out_json {
            self.out_json = Some(cwd.join(p));
        }
        if let Some(p) = o.out_csv {
            self.out_csv = Some(cwd.join(p));
        }
    }

    /// `path` resolved against the manifest's directory.
    pub fn path(&self, path: &Path) -> PathBuf {
        self.base.join(path)
    }

    pub fn paths(&self, paths: &[PathBuf]) -> Vec<PathBuf> {
        paths.iter().map(|p| self.path(p)).collect()
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }

    pub fn mode(&self) -> Result<Mode> {
        self.mode.ok_or_else(|| CliError::field("mode", "is required (set it in the manifest or pass --mode)"))
    }

    /// Checks that the fields the mode needs are present and sensible.
    pub fn validate(&self) -> Result<()> {
        let mode = self.mode()?;
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(CliError::field("tol", format!("must be positive, got {tol}")));
            }
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(CliError::field("epsilon", format!("must be positive, got {eps}")));
            }
        }
        if self.trials == Some(0) {
            return Err(CliError::field("trials", "must be positive"));
        }
        if self.n.contains(&0) {
            return Err(CliError::field("n", "sample lengths must be positive"));
        }
        match mode {
            Mode::Stein | Mode::Chernoff => {
                self.classical("classical")?;
            }
            Mode::Simulate => {
                let c = self.classical("classical")?;
                parse_strategy(&c.p_strategy, "classical.p_strategy")?;
                parse_strategy(&c.q_strategy, "classical.q_strategy")?;
                let test = self.test.ok_or_else(|| CliError::field("test", "is required in simulate mode"))?;
                if test == TestKind::Stein && self.epsilon.is_none() {
                    return Err(CliError::field("epsilon", "is required for a simulated Stein test"));
                }
                self.simulation_fields()?;
            }
            Mode::QuantumStein | Mode::QuantumChernoff => {
                let q = self
                    .quantum
                    .as_ref()
                    .ok_or_else(|| CliError::field("quantum", format!("section is required in {mode} mode")))?;
                if q.block_size == 0 {
                    return Err(CliError::field("quantum.block_size", "must be positive"));
                }
                if q.r.is_empty() || q.s.is_empty() {
                    let which = if q.r.is_empty() { "quantum.r" } else { "quantum.s" };
                    return Err(CliError::field(which, "lists no state files"));
                }
                parse_strategy(&q.p_strategy, "quantum.p_strategy")?;
                parse_strategy(&q.q_strategy, "quantum.q_strategy")?;
                if self.simulates() {
                    self.simulation_fields()?;
                    if mode == Mode::QuantumStein && self.epsilon.is_none() {
                        return Err(CliError::field("epsilon", "is required for a simulated Stein test"));
                    }
                }
            }
            Mode::Audit => {
                let a = self.audit.as_ref().filter(|a| !a.is_empty()).ok_or_else(|| {
                    CliError::field("audit", "section with at least one audit is required in audit mode")
                })?;
                for (i, c) in a.compatibility.iter().enumerate() {
                    if c.separable.is_some() == c.hull.is_some() {
                        return Err(CliError::field(
                            format!("audit.compatibility[{i}]"),
                            "set exactly one of `separable` and `hull`",
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Quantum modes also simulate when trials or sample lengths are given.
    pub fn simulates(&self) -> bool {
        self.trials.is_some() || !self.n.is_empty()
    }

    fn simulation_fields(&self) -> Result<()> {
        if self.trials.is_none() {
            return Err(CliError::field("trials", "is required to simulate"));
        }
        if self.n.is_empty() {
            return Err(CliError::field("n", "needs at least one sample length to simulate"));
        }
        Ok(())
    }

    fn classical(&self, field: &str) -> Result<&ClassicalSection> {
        self.classical
            .as_ref()
            .ok_or_else(|| CliError::field(field, format!("section is required in {} mode", self.mode.unwrap_or(Mode::Stein))))
    }
}

pub fn parse_strategy(name: &str, field: &str) -> Result<StrategyKind> {
    StrategyKind::from_str(name).map_err(|e| CliError::field(field, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_manifest() {
        let mut cfg = ExperimentConfig::parse("mode = \"stein\"\nseed = 3\nn = [5]\n", Path::new("x.toml")).unwrap();
        cfg.apply(Overrides {
            seed: Some(9),
            n: vec![1, 2],
            mode: Some(Mode::Chernoff),
            ..Overrides::default()
        });
        assert_eq!((cfg.mode, cfg.seed, cfg.n.as_slice()), (Some(Mode::Chernoff), 9, &[1, 2][..]));
    }

    #[test]
    fn unknown_fields_are_named() {
        let err = ExperimentConfig::parse("mode = \"stein\"\nepsilom = 0.1\n", Path::new("x.toml")).unwrap_err();
        assert!(err.to_string().contains("epsilom"), "{err}");
    }

    #[test]
    fn zero_trials_fail_validation() {
        let text = "mode = \"simulate\"\ntest = \"chernoff\"\ntrials = 0\nn = [5]\n[classical]\np = \"a\"\nq = \"b\"\n";
        let err = ExperimentConfig::parse(text, Path::new("x.toml")).unwrap().validate().unwrap_err();
        assert_eq!(err.to_string(), "field `trials`: must be positive");
    }
}
