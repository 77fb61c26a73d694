//! Scenario files: TOML with one table per concern and one `[[run]]` entry
//! per compared variant.
//!
//! ```toml
//! [graph]
//! kind = "grid"          # or kind = "file", path = "net.edges"
//! rows = 5
//! cols = 5
//! leader = 25            # one-based; defaults to the last agent
//!
//! [gain]
//! policy = "fraction_of_bound"   # or policy = "explicit", gamma = 0.1382
//! fraction = 0.5
//!
//! [sim]
//! dt = 7.5131e-4
//! horizon_steps = 4000
//! band = 0.02
//!
//! [source]
//! kind = "ramp"          # or "step"
//! target = 0.02
//! ramp_duration = 0.5
//!
//! [[run]]
//! name = "standard"
//! law = "standard"
//!
//! [[run]]
//! name = "dsr"
//! law = "dsr"
//! beta = 0.95
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use consensus_core::{GraphSpecF64, SourceProfileF64, UpdateLaw};
use serde::Deserialize;
use thiserror::Error;

/// Scenarios shipped with the binary, addressable by name.
pub const BUNDLED: &[(&str, &str)] = &[(
    "paper_scenario",
    include_str!("../scenarios/paper_scenario.toml"),
)];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSection {
    Grid {
        rows: usize,
        cols: usize,
        leader: Option<usize>,
        #[serde(default = "one")]
        source_weight: f64,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum GammaPolicy {
    Explicit { gamma: f64 },
    FractionOfBound { fraction: f64 },
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    pub horizon_steps: usize,
    #[serde(default = "default_band")]
    pub band: f64,
    #[serde(default)]
    pub momentum_scaled_by_gamma: bool,
    pub initial_state: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SourceKindName {
    Step,
    Ramp,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub kind: SourceKindName,
    pub target: f64,
    pub ramp_duration: Option<f64>,
    #[serde(default = "one_usize")]
    pub start_step: usize,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FormationSection {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "one")]
    pub spacing: f64,
}

impl Default for FormationSection {
    fn default() -> Self {
        Self {
            enabled: false,
            spacing: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_out() }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum LawName {
    Standard,
    AcceleratedMatrix,
    Dsr,
}

impl From<LawName> for UpdateLaw {
    fn from(l: LawName) -> Self {
        match l {
            LawName::Standard => UpdateLaw::Standard,
            LawName::AcceleratedMatrix => UpdateLaw::AcceleratedMatrix,
            LawName::Dsr => UpdateLaw::DsrPerAgent,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub name: String,
    pub law: LawName,
    #[serde(default)]
    pub beta: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    graph: GraphSection,
    gain: GammaPolicy,
    sim: SimSection,
    source: SourceSection,
    #[serde(default)]
    formation: FormationSection,
    #[serde(default)]
    output: OutputSection,
    #[serde(rename = "run", default)]
    runs: Vec<RunSpec>,
}

/// Validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub graph: GraphSection,
    pub gain: GammaPolicy,
    pub sim: SimSection,
    pub source: SourceSection,
    pub formation: FormationSection,
    pub output: OutputSection,
    pub runs: Vec<RunSpec>,
    /// Directory relative graph paths resolve against.
    pub base_dir: PathBuf,
    /// Where the config came from, for messages.
    pub origin: String,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn default_band() -> f64 {
    consensus_core::metrics::DEFAULT_BAND
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ScenarioConfig {
    pub fn parse(text: &str, origin: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            line: e.span().map_or(1, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        let cfg = Self {
            graph: raw.graph,
            gain: raw.gain,
            sim: raw.sim,
            source: raw.source,
            formation: raw.formation,
            output: raw.output,
            runs: raw.runs,
            base_dir: base_dir.to_path_buf(),
            origin: origin.to_string(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file, or a bundled scenario when `name` is not an
    /// existing path but matches one (with or without `.toml`).
    pub fn resolve(name: &str) -> Result<Self, ConfigError> {
        let path = Path::new(name);
        if path.exists() {
            let text = fs::read_to_string(path).map_err(|e| ConfigError::Io {
                path: name.to_string(),
                message: e.to_string(),
            })?;
            let base = path.parent().unwrap_or(Path::new("."));
            return Self::parse(&text, name, base);
        }
        let stem = name.strip_suffix(".toml").unwrap_or(name);
        match BUNDLED.iter().find(|(n, _)| *n == stem) {
            Some((n, text)) => Self::parse(text, n, Path::new(".")),
            None => Err(ConfigError::Io {
                path: name.to_string(),
                message: "no such file or bundled scenario".into(),
            }),
        }
    }

    fn invalid(&self, message: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            path: self.origin.clone(),
            message: message.into(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.gain {
            GammaPolicy::Explicit { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                return Err(self.invalid("gain.gamma must be positive"));
            }
            GammaPolicy::FractionOfBound { fraction } if !(fraction > 0.0 && fraction < 1.0) => {
                return Err(
                    self.invalid(format!("gain.fraction must lie in (0, 1), got {fraction}"))
                );
            }
            _ => {}
        }
        if !(self.sim.dt > 0.0 && self.sim.dt.is_finite()) {
            return Err(self.invalid("sim.dt must be positive"));
        }
        if !(self.sim.band > 0.0 && self.sim.band < 1.0) {
            return Err(self.invalid("sim.band must lie in (0, 1)"));
        }
        if self.source.target == 0.0 || !self.source.target.is_finite() {
            return Err(self.invalid("source.target must be nonzero and finite"));
        }
        match (self.source.kind, self.source.ramp_duration) {
            (SourceKindName::Ramp, None) => {
                return Err(self.invalid("source.ramp_duration required for a ramp"))
            }
            (SourceKindName::Ramp, Some(d)) if !(d > 0.0 && d.is_finite()) => {
                return Err(self.invalid("source.ramp_duration must be positive"))
            }
            _ => {}
        }
        if !(self.formation.spacing > 0.0 && self.formation.spacing.is_finite()) {
            return Err(self.invalid("formation.spacing must be positive"));
        }
        if self.runs.is_empty() {
            return Err(self.invalid("at least one [[run]] is required"));
        }
        let mut names = BTreeSet::new();
        for run in &self.runs {
            if run.name.is_empty()
                || !run
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(self.invalid(format!(
                    "run name {:?} must be non-empty [A-Za-z0-9_-]",
                    run.name
                )));
            }
            if !names.insert(run.name.as_str()) {
                return Err(self.invalid(format!("duplicate run name {:?}", run.name)));
            }
            if !(run.beta >= 0.0 && run.beta.is_finite()) {
                return Err(self.invalid(format!("run {:?}: beta must be >= 0", run.name)));
            }
        }
        if let GraphSection::Grid { rows, cols, .. } = self.graph {
            if rows == 0 || cols == 0 {
                return Err(self.invalid("graph.rows and graph.cols must be positive"));
            }
        }
        Ok(())
    }

    /// Builds (or loads) the graph; structural and reachability errors
    /// surface as validation errors.
    pub fn build_graph(&self) -> Result<GraphSpecF64, ConfigError> {
        let g = match &self.graph {
            GraphSection::Grid {
                rows,
                cols,
                leader,
                source_weight,
            } => GraphSpecF64::grid(*rows, *cols, leader.unwrap_or(rows * cols), *source_weight),
            GraphSection::File { path } => GraphSpecF64::load(self.base_dir.join(path)),
        };
        g.map_err(|e| self.invalid(format!("graph: {e}")))
    }

    pub fn source_profile(&self) -> SourceProfileF64 {
        let mut p = match self.source.kind {
            SourceKindName::Step => SourceProfileF64::step(self.source.target),
            SourceKindName::Ramp => {
                SourceProfileF64::ramp(self.source.target, self.source.ramp_duration.unwrap_or(1.0))
            }
        };
        p.start_step = self.source.start_step;
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[graph]
kind = "grid"
rows = 1
cols = 1

[gain]
policy = "explicit"
gamma = 0.5

[sim]
dt = 1.0
horizon_steps = 10

[source]
kind = "step"
target = 1.0

[[run]]
name = "only"
law = "standard"
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = ScenarioConfig::parse(MINIMAL, "mem", Path::new(".")).unwrap();
        assert_eq!(c.sim.band, 0.02);
        assert_eq!(c.source.start_step, 1);
        assert_eq!(c.output.dir, PathBuf::from("out"));
        assert!(!c.formation.enabled);
        assert_eq!(c.build_graph().unwrap().agent_count(), 1);
    }

    #[test]
    fn fraction_outside_unit_interval_rejected() {
        let text = MINIMAL.replace(
            "policy = \"explicit\"\ngamma = 0.5",
            "policy = \"fraction_of_bound\"\nfraction = 1.2",
        );
        let err = ScenarioConfig::parse(&text, "mem", Path::new(".")).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { .. }), "{err}");
        assert!(err.to_string().contains("fraction"));
    }

    #[test]
    fn parse_errors_report_line() {
        let text = MINIMAL.replace("horizon_steps = 10", "horizon_steps = \"ten\"");
        match ScenarioConfig::parse(&text, "mem.toml", Path::new(".")) {
            Err(ConfigError::Parse { line, path, .. }) => {
                assert_eq!(path, "mem.toml");
                assert_eq!(line, 13);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn run_name_rules() {
        let dup = format!("{MINIMAL}\n[[run]]\nname = \"only\"\nlaw = \"dsr\"\n");
        assert!(ScenarioConfig::parse(&dup, "m", Path::new(".")).is_err());
        let bad = MINIMAL.replace("name = \"only\"", "name = \"a/b\"");
        assert!(ScenarioConfig::parse(&bad, "m", Path::new(".")).is_err());
        let none = MINIMAL.replace("[[run]]\nname = \"only\"\nlaw = \"standard\"\n", "");
        assert!(ScenarioConfig::parse(&none, "m", Path::new(".")).is_err());
    }

    #[test]
    fn ramp_requires_duration() {
        let text = MINIMAL.replace("kind = \"step\"", "kind = \"ramp\"");
        assert!(ScenarioConfig::parse(&text, "m", Path::new(".")).is_err());
    }

    #[test]
    fn bundled_paper_scenario_resolves() {
        let c = ScenarioConfig::resolve("paper_scenario").unwrap();
        assert_eq!(c.gain, GammaPolicy::FractionOfBound { fraction: 0.5 });
        assert_eq!(c.runs.len(), 2);
        assert_eq!(c.build_graph().unwrap().agent_count(), 25);
        assert!(ScenarioConfig::resolve("no_such_scenario").is_err());
    }
}
