//! Executes a validated scenario: spectral analysis, one simulation per
//! `[[run]]`, metrics, and optional formation integration.

use std::thread;

use consensus_core::{
    integrate_positions, metrics::spread_growth, simulate, DynamicsError, FormationState,
    GraphSpecF64, MetricsError, MetricsRecordF64, PinnedSystemF64, SimConfigF64,
    SpectralSummaryF64, TrajectoryF64, UpdateLaw,
};
use thiserror::Error;

use crate::config::{ConfigError, GammaPolicy, GraphSection, ScenarioConfig};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("spectral analysis failed: {0}")]
    Spectral(String),
    #[error("run {run}: {source}")]
    Dynamics { run: String, source: DynamicsError },
    #[error("run {run}: {source}")]
    Metrics { run: String, source: MetricsError },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl ScenarioError {
    /// Configuration problems (as opposed to I/O failures).
    pub fn is_validation(&self) -> bool {
        !matches!(self, ScenarioError::Io { .. })
    }
}

#[derive(Debug, Clone)]
pub struct Formation {
    pub initial: FormationState<f64>,
    pub positions: Vec<Vec<f64>>,
    pub spread_growth: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub name: String,
    pub law: UpdateLaw,
    pub gamma: f64,
    pub beta: f64,
    pub trajectory: TrajectoryF64,
    pub metrics: MetricsRecordF64,
    pub formation: Option<Formation>,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub graph: GraphSpecF64,
    pub spectral: SpectralSummaryF64,
    pub gamma: f64,
    pub perron_radius: f64,
    pub runs: Vec<RunResult>,
}

/// Graph, pinned system, spectrum and chosen gain, without simulating.
pub fn prepare(
    cfg: &ScenarioConfig,
) -> Result<(GraphSpecF64, PinnedSystemF64, SpectralSummaryF64, f64), ScenarioError> {
    let graph = cfg.build_graph()?;
    let system = PinnedSystemF64::new(&graph).map_err(|e| ConfigError::Invalid {
        path: cfg.origin.clone(),
        message: format!("graph: {e}"),
    })?;
    let spectral =
        SpectralSummaryF64::analyze(&system).map_err(|e| ScenarioError::Spectral(e.to_string()))?;
    let gamma = match cfg.gain {
        GammaPolicy::Explicit { gamma } => gamma,
        GammaPolicy::FractionOfBound { fraction } => fraction * spectral.gain_bound,
    };
    Ok((graph, system, spectral, gamma))
}

fn initial_formation(cfg: &ScenarioConfig, n: usize) -> FormationState<f64> {
    let spacing = cfg.formation.spacing;
    match cfg.graph {
        GraphSection::Grid { rows, cols, .. } => FormationState::grid(rows, cols, spacing),
        GraphSection::File { .. } => FormationState::grid(1, n, spacing),
    }
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutcome, ScenarioError> {
    let (graph, system, spectral, gamma) = prepare(cfg)?;
    let perron_radius = spectral
        .perron(gamma)
        .map_err(|e| ScenarioError::Spectral(e.to_string()))?
        .spectral_radius;
    let profile = cfg.source_profile();

    let runs = thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .runs
            .iter()
            .map(|spec| {
                let system = &system;
                let profile = &profile;
                scope.spawn(move || -> Result<RunResult, ScenarioError> {
                    let mut sim = SimConfigF64::new(
                        gamma,
                        spec.beta,
                        cfg.sim.dt,
                        cfg.sim.horizon_steps,
                        spec.law.into(),
                    );
                    sim.momentum_scaled_by_gamma = cfg.sim.momentum_scaled_by_gamma;
                    sim.initial_state = cfg.sim.initial_state.clone();
                    let trajectory = simulate(system, &sim, profile).map_err(|source| {
                        ScenarioError::Dynamics {
                            run: spec.name.clone(),
                            source,
                        }
                    })?;
                    let metrics =
                        MetricsRecordF64::evaluate(&trajectory, profile.target, cfg.sim.band)
                            .map_err(|source| ScenarioError::Metrics {
                                run: spec.name.clone(),
                                source,
                            })?;
                    let formation = if cfg.formation.enabled {
                        let initial = initial_formation(cfg, system.n());
                        let positions = integrate_positions(&trajectory, &initial.x, cfg.sim.dt)
                            .map_err(|source| ScenarioError::Metrics {
                                run: spec.name.clone(),
                                source,
                            })?;
                        let growth = spread_growth(&positions);
                        Some(Formation {
                            initial,
                            positions,
                            spread_growth: growth,
                        })
                    } else {
                        None
                    };
                    Ok(RunResult {
                        name: spec.name.clone(),
                        law: spec.law.into(),
                        gamma,
                        beta: spec.beta,
                        trajectory,
                        metrics,
                        formation,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect::<Result<Vec<_>, _>>()
    })?;

    Ok(ScenarioOutcome {
        graph,
        spectral,
        gamma,
        perron_radius,
        runs,
    })
}
