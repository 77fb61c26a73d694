//! Discrete-time consensus update laws and the simulation loop.
//!
//! Three laws drive the non-source agents:
//!
//! * [`UpdateLaw::Standard`]: `Z[k+1] = (I - gamma K) Z[k] + gamma B Zs[k]`.
//! * [`UpdateLaw::AcceleratedMatrix`]: the Nesterov-accelerated network update
//!   written with the whole pinned Laplacian,
//!   `Z[k+1] = Z[k] - gamma K (Z[k] + beta dZ) + beta dZ + gamma B Zs[k]`
//!   with `dZ = Z[k] - Z[k-1]`.
//! * [`UpdateLaw::DsrPerAgent`]: the same update realized locally by delayed
//!   self reinforcement. Agent `i` only sees its network aggregate
//!   `v_i = gamma K_i Z`, its own previous state and previous aggregate.

use thiserror::Error;

use crate::graph::{GraphSpec, PinnedSystem};
use crate::matrix::{dot, Matrix};
use crate::scalar::Scalar;

/// States beyond this multiple of `max(|Z_d|, 1)` count as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UpdateLaw {
    Standard,
    AcceleratedMatrix,
    DsrPerAgent,
}

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("potential requires an undirected graph (a_ij = a_ji)")]
    Directed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T> {
    pub gamma: T,
    pub beta: T,
    /// Seconds between updates.
    pub dt: T,
    /// Number of updates; the trajectory holds `horizon_steps + 1` states.
    pub horizon_steps: usize,
    pub law: UpdateLaw,
    /// Scale the self-reinforcement term by `gamma` (`gamma beta dZ`
    /// instead of `beta dZ`).
    pub momentum_scaled_by_gamma: bool,
    /// `Z[0]`; zeros when `None`.
    pub initial_state: Option<Vec<T>>,
}

impl<T: Scalar> SimConfig<T> {
    pub fn new(gamma: T, beta: T, dt: T, horizon_steps: usize, law: UpdateLaw) -> Self {
        Self {
            gamma,
            beta,
            dt,
            horizon_steps,
            law,
            momentum_scaled_by_gamma: false,
            initial_state: None,
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), DynamicsError> {
        let bad = |m: &str| Err(DynamicsError::InvalidConfig(m.to_string()));
        if !(self.gamma > T::zero() && self.gamma.is_finite()) {
            return bad("gamma must be positive");
        }
        if !(self.beta >= T::zero() && self.beta.is_finite()) {
            return bad("beta must be non-negative");
        }
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if let Some(z0) = &self.initial_state {
            if z0.len() != n {
                return Err(DynamicsError::Dimension {
                    expected: n,
                    got: z0.len(),
                });
            }
            if z0.iter().any(|v| !v.is_finite()) {
                return bad("initial state must be finite");
            }
        }
        Ok(())
    }

    fn momentum_gain(&self) -> T {
        if self.momentum_scaled_by_gamma {
            self.gamma * self.beta
        } else {
            self.beta
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceKind<T> {
    Step,
    /// Half-sine acceleration from zero to the target over `duration` seconds.
    SinusoidalRamp {
        duration: T,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceProfile<T> {
    pub kind: SourceKind<T>,
    /// Desired consensus value `Z_d`.
    pub target: T,
    /// First step at which a step source is on.
    pub start_step: usize,
}

impl<T: Scalar> SourceProfile<T> {
    pub fn step(target: T) -> Self {
        Self {
            kind: SourceKind::Step,
            target,
            start_step: 1,
        }
    }

    pub fn ramp(target: T, duration: T) -> Self {
        Self {
            kind: SourceKind::SinusoidalRamp { duration },
            target,
            start_step: 1,
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !self.target.is_finite() {
            return Err(DynamicsError::InvalidConfig("target must be finite".into()));
        }
        if let SourceKind::SinusoidalRamp { duration } = self.kind {
            if !(duration > T::zero() && duration.is_finite()) {
                return Err(DynamicsError::InvalidConfig(
                    "ramp duration must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// Source value `Zs[k]`.
    pub fn value(&self, k: usize, dt: T) -> T {
        match self.kind {
            SourceKind::Step => {
                if k >= self.start_step {
                    self.target
                } else {
                    T::zero()
                }
            }
            SourceKind::SinusoidalRamp { duration } => {
                let t = T::from_count(k) * dt;
                if t >= duration {
                    self.target
                } else {
                    let half = T::lit(0.5);
                    self.target * half * (T::one() - (T::PI() * t / duration).cos())
                }
            }
        }
    }
}

/// Free-function form of [`SourceProfile::value`].
pub fn source_value<T: Scalar>(profile: &SourceProfile<T>, k: usize, dt: T) -> T {
    profile.value(k, dt)
}

fn check_len<T>(v: &[T], n: usize) {
    assert_eq!(v.len(), n, "state dimension mismatch");
}

/// `Z[k+1] = Z[k] - gamma K Z[k] + gamma B Zs[k]`.
pub fn step_standard<T: Scalar>(
    sys: &PinnedSystem<T>,
    cfg: &SimConfig<T>,
    z: &[T],
    zs: T,
) -> Vec<T> {
    check_len(z, sys.n());
    let kz = sys.pinned_laplacian().mul_vec(z);
    z.iter()
        .zip(&kz)
        .zip(sys.source_gains())
        .map(|((&zi, &kzi), &bi)| zi - cfg.gamma * kzi + cfg.gamma * bi * zs)
        .collect()
}

/// Accelerated update over the whole network.
pub fn step_accelerated_matrix<T: Scalar>(
    sys: &PinnedSystem<T>,
    cfg: &SimConfig<T>,
    z: &[T],
    z_prev: &[T],
    zs: T,
) -> Vec<T> {
    let n = sys.n();
    check_len(z, n);
    check_len(z_prev, n);
    let dz: Vec<T> = z.iter().zip(z_prev).map(|(&a, &b)| a - b).collect();
    let look_ahead: Vec<T> = z.iter().zip(&dz).map(|(&a, &d)| a + cfg.beta * d).collect();
    let k_ahead = sys.pinned_laplacian().mul_vec(&look_ahead);
    let momentum = cfg.momentum_gain();
    (0..n)
        .map(|i| {
            z[i] - cfg.gamma * k_ahead[i]
                + momentum * dz[i]
                + cfg.gamma * sys.source_gains()[i] * zs
        })
        .collect()
}

/// What agent `i` holds between updates under delayed self reinforcement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentMemory<T> {
    pub state: T,
    pub prev_state: T,
    pub prev_signal: T,
}

/// One agent's update from its network aggregate `v_i[k] = gamma K_i Z[k]`.
/// Returns the next state.
pub fn dsr_agent_update<T: Scalar>(
    memory: AgentMemory<T>,
    signal: T,
    source_term: T,
    beta: T,
    momentum: T,
) -> T {
    memory.state - (signal + beta * (signal - memory.prev_signal))
        + momentum * (memory.state - memory.prev_state)
        + source_term
}

/// Per-agent DSR update. Returns `(Z[k+1], v[k])`; `v[k]` is the delayed
/// signal for the next call.
pub fn step_dsr_per_agent<T: Scalar>(
    sys: &PinnedSystem<T>,
    cfg: &SimConfig<T>,
    z: &[T],
    z_prev: &[T],
    v_prev: &[T],
    zs: T,
) -> (Vec<T>, Vec<T>) {
    let n = sys.n();
    check_len(z, n);
    check_len(z_prev, n);
    check_len(v_prev, n);
    let k = sys.pinned_laplacian();
    let momentum = cfg.momentum_gain();
    let mut next = Vec::with_capacity(n);
    let mut signals = Vec::with_capacity(n);
    for i in 0..n {
        // Only row i of K: the information agent i receives from its neighbours.
        let signal = cfg.gamma * dot(k.row(i), z);
        let memory = AgentMemory {
            state: z[i],
            prev_state: z_prev[i],
            prev_signal: v_prev[i],
        };
        let source_term = cfg.gamma * sys.source_gains()[i] * zs;
        next.push(dsr_agent_update(
            memory,
            signal,
            source_term,
            cfg.beta,
            momentum,
        ));
        signals.push(signal);
    }
    (next, signals)
}

/// Recorded run of one update law.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    /// `Z[0..=K]`; shorter than `horizon_steps + 1` only when diverged.
    pub states: Vec<Vec<T>>,
    /// `Zs[k]` for each recorded state.
    pub source: Vec<T>,
    pub config: SimConfig<T>,
    /// `v[k]` per recorded state (DSR law only).
    pub per_agent_signals: Option<Vec<Vec<T>>>,
    pub diverged: bool,
}

impl<T: Scalar> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn agent_count(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    /// Last recorded step index.
    pub fn last_step(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    /// Average over agents at every step.
    pub fn mean_state(&self) -> Vec<T> {
        self.states.iter().map(|z| mean(z)).collect()
    }

    pub fn time(&self, k: usize) -> T {
        T::from_count(k) * self.config.dt
    }
}

pub(crate) fn mean<T: Scalar>(z: &[T]) -> T {
    z.iter().copied().sum::<T>() / T::from_count(z.len())
}

/// Runs the configured law from `Z[0]` for `horizon_steps` updates.
///
/// The first momentum kick is zero: `Z[-1] = Z[0]` and `v[-1] = gamma K Z[0]`.
/// A state exceeding `DIVERGENCE_FACTOR * max(|Z_d|, 1)` in magnitude (or
/// going non-finite) ends the run with `diverged` set; that state is not
/// stored.
pub fn simulate<T: Scalar>(
    sys: &PinnedSystem<T>,
    cfg: &SimConfig<T>,
    profile: &SourceProfile<T>,
) -> Result<Trajectory<T>, DynamicsError> {
    let n = sys.n();
    cfg.validate(n)?;
    profile.validate()?;
    let limit = T::lit(DIVERGENCE_FACTOR) * profile.target.abs().max(T::one());

    let z0 = cfg
        .initial_state
        .clone()
        .unwrap_or_else(|| vec![T::zero(); n]);
    let initial_signal: Vec<T> = sys
        .pinned_laplacian()
        .mul_vec(&z0)
        .into_iter()
        .map(|v| cfg.gamma * v)
        .collect();

    let mut states = Vec::with_capacity(cfg.horizon_steps + 1);
    let mut source = Vec::with_capacity(cfg.horizon_steps + 1);
    let mut signals = (cfg.law == UpdateLaw::DsrPerAgent).then(Vec::new);
    let mut z_prev = z0.clone();
    let mut v_prev = initial_signal;
    let mut z = z0;
    let mut diverged = false;

    for k in 0..=cfg.horizon_steps {
        let zs = profile.value(k, cfg.dt);
        if k == cfg.horizon_steps {
            states.push(z);
            source.push(zs);
            if let Some(s) = signals.as_mut() {
                // Final aggregate for diagnostics; no update follows.
                let last = states.last().expect("just pushed");
                s.push(
                    sys.pinned_laplacian()
                        .mul_vec(last)
                        .into_iter()
                        .map(|v| cfg.gamma * v)
                        .collect(),
                );
            }
            break;
        }
        let next = match cfg.law {
            UpdateLaw::Standard => step_standard(sys, cfg, &z, zs),
            UpdateLaw::AcceleratedMatrix => step_accelerated_matrix(sys, cfg, &z, &z_prev, zs),
            UpdateLaw::DsrPerAgent => {
                let (next, v) = step_dsr_per_agent(sys, cfg, &z, &z_prev, &v_prev, zs);
                if let Some(s) = signals.as_mut() {
                    s.push(v.clone());
                }
                v_prev = v;
                next
            }
        };
        states.push(z.clone());
        source.push(zs);
        if next.iter().any(|v| !v.is_finite() || v.abs() > limit) {
            diverged = true;
            break;
        }
        z_prev = std::mem::replace(&mut z, next);
    }

    Ok(Trajectory {
        states,
        source,
        config: cfg.clone(),
        per_agent_signals: signals,
        diverged,
    })
}

/// Laplacian potential `1/2 sum_ij a_ij (Z_j - Z_i)^2` over all `n + 1` nodes
/// (source included as the last entry of `z_hat`).
pub fn laplacian_potential<T: Scalar>(
    graph: &GraphSpec<T>,
    z_hat: &[T],
) -> Result<T, DynamicsError> {
    if z_hat.len() != graph.node_count() {
        return Err(DynamicsError::Dimension {
            expected: graph.node_count(),
            got: z_hat.len(),
        });
    }
    if !graph.is_undirected() {
        return Err(DynamicsError::Directed);
    }
    let a = graph.adjacency();
    let mut total = T::zero();
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let d = z_hat[j] - z_hat[i];
            total += a[(i, j)] * d * d;
        }
    }
    Ok(total * T::lit(0.5))
}

/// Closed-form gradient of the Laplacian potential, `2 L Z`.
pub fn potential_gradient<T: Scalar>(laplacian: &Matrix<T>, z_hat: &[T]) -> Vec<T> {
    let two = T::lit(2.0);
    laplacian
        .mul_vec(z_hat)
        .into_iter()
        .map(|v| two * v)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    use crate::graph::{Edge, Node};

    fn scalar_system() -> PinnedSystem<f64> {
        PinnedSystem::new(&GraphSpec::grid(1, 1, 1, 1.0).unwrap()).unwrap()
    }

    fn grid_system() -> PinnedSystem<f64> {
        PinnedSystem::new(&GraphSpec::grid(3, 3, 9, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn ramp_profile_shape() {
        let p = SourceProfile::ramp(0.02, 0.5);
        assert_eq!(p.value(0, 0.01), 0.0);
        assert_relative_eq!(p.value(25, 0.01), 0.01, epsilon = 1e-15);
        assert_eq!(p.value(50, 0.01), 0.02);
        assert_eq!(p.value(500, 0.01), 0.02);
    }

    #[test]
    fn step_profile_starts_at_step_one() {
        let p = SourceProfile::step(0.02);
        assert_eq!(p.value(0, 1.0), 0.0);
        assert_eq!(p.value(1, 1.0), 0.02);
        assert_eq!(source_value(&p, 7, 1.0), 0.02);
    }

    #[test]
    fn scalar_standard_recursion() {
        let sys = scalar_system();
        let cfg = SimConfig::new(0.5, 0.0, 1.0, 10, UpdateLaw::Standard);
        let mut z = vec![0.0];
        for k in 1..=10 {
            z = step_standard(&sys, &cfg, &z, 1.0);
            assert_relative_eq!(z[0], 1.0 - 0.5f64.powi(k), epsilon = 1e-15);
        }
    }

    #[test]
    fn consensus_is_fixed_point_of_every_law() {
        let sys = grid_system();
        let zd = 0.02;
        let z = vec![zd; sys.n()];
        for beta in [0.0, 0.5, 0.95] {
            let mut cfg = SimConfig::new(0.1, beta, 1.0, 1, UpdateLaw::Standard);
            for scaled in [false, true] {
                cfg.momentum_scaled_by_gamma = scaled;
                let a = step_standard(&sys, &cfg, &z, zd);
                let b = step_accelerated_matrix(&sys, &cfg, &z, &z, zd);
                let v = sys
                    .pinned_laplacian()
                    .mul_vec(&z)
                    .iter()
                    .map(|x| 0.1 * x)
                    .collect::<Vec<_>>();
                let (c, _) = step_dsr_per_agent(&sys, &cfg, &z, &z, &v, zd);
                for out in [a, b, c] {
                    for x in out {
                        assert_relative_eq!(x, zd, epsilon = 1e-16);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_beta_reduces_to_standard() {
        let sys = grid_system();
        let cfg = SimConfig::new(0.12, 0.0, 1.0, 1, UpdateLaw::Standard);
        let z: Vec<f64> = (0..9).map(|i| i as f64 * 0.1).collect();
        let zp: Vec<f64> = (0..9).map(|i| (i as f64).sin()).collect();
        let vp: Vec<f64> = (0..9).map(|i| (i as f64).cos()).collect();
        let a = step_standard(&sys, &cfg, &z, 0.3);
        let b = step_accelerated_matrix(&sys, &cfg, &z, &zp, 0.3);
        let (c, v) = step_dsr_per_agent(&sys, &cfg, &z, &zp, &vp, 0.3);
        let kz = sys.pinned_laplacian().mul_vec(&z);
        for i in 0..9 {
            assert_relative_eq!(a[i], b[i], epsilon = 1e-15);
            assert_relative_eq!(a[i], c[i], epsilon = 1e-15);
            assert_relative_eq!(v[i], 0.12 * kz[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn dsr_hand_evaluation() {
        let sys = scalar_system();
        let cfg = SimConfig::new(0.5, 0.5, 1.0, 1, UpdateLaw::DsrPerAgent);
        let (z, v) = step_dsr_per_agent(&sys, &cfg, &[0.0], &[0.0], &[0.0], 1.0);
        assert_eq!(v, vec![0.0]);
        assert_eq!(z, vec![0.5]);
    }

    #[test]
    fn scaled_momentum_variant() {
        let sys = scalar_system();
        let mut cfg = SimConfig::new(0.5, 0.5, 1.0, 1, UpdateLaw::AcceleratedMatrix);
        // dZ = 1: unscaled adds beta*dZ = 0.5, scaled adds gamma*beta*dZ = 0.25.
        let unscaled = step_accelerated_matrix(&sys, &cfg, &[1.0], &[0.0], 0.0)[0];
        cfg.momentum_scaled_by_gamma = true;
        let scaled = step_accelerated_matrix(&sys, &cfg, &[1.0], &[0.0], 0.0)[0];
        assert_relative_eq!(unscaled - scaled, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn zero_horizon_keeps_initial_state_only() {
        let sys = grid_system();
        let cfg = SimConfig::new(0.1, 0.0, 1.0, 0, UpdateLaw::Standard);
        let t = simulate(&sys, &cfg, &SourceProfile::step(1.0)).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.states[0], vec![0.0; 9]);
        assert!(!t.diverged);
    }

    #[test]
    fn trajectory_length_and_signals() {
        let sys = grid_system();
        let cfg = SimConfig::new(0.1, 0.5, 1.0, 20, UpdateLaw::DsrPerAgent);
        let t = simulate(&sys, &cfg, &SourceProfile::step(1.0)).unwrap();
        assert_eq!(t.len(), 21);
        assert_eq!(t.source.len(), 21);
        let signals = t.per_agent_signals.as_ref().unwrap();
        assert_eq!(signals.len(), 21);
        for (z, v) in t.states.iter().zip(signals) {
            let kz = sys.pinned_laplacian().mul_vec(z);
            for i in 0..9 {
                assert_relative_eq!(v[i], 0.1 * kz[i], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn unstable_gain_sets_diverged_flag() {
        let sys = grid_system();
        let cfg = SimConfig::new(0.6, 0.0, 1.0, 10_000, UpdateLaw::Standard);
        let t = simulate(&sys, &cfg, &SourceProfile::step(1.0)).unwrap();
        assert!(t.diverged);
        assert!(t.len() < 10_001);
        assert!(t
            .states
            .iter()
            .flatten()
            .all(|v| v.is_finite() && v.abs() <= 1e6));
    }

    #[test]
    fn invalid_configs_rejected() {
        let sys = grid_system();
        let profile = SourceProfile::step(1.0);
        for cfg in [
            SimConfig::new(0.0, 0.0, 1.0, 1, UpdateLaw::Standard),
            SimConfig::new(0.1, -0.1, 1.0, 1, UpdateLaw::Standard),
            SimConfig::new(0.1, 0.0, 0.0, 1, UpdateLaw::Standard),
        ] {
            assert!(matches!(
                simulate(&sys, &cfg, &profile),
                Err(DynamicsError::InvalidConfig(_))
            ));
        }
        let mut cfg = SimConfig::new(0.1, 0.0, 1.0, 1, UpdateLaw::Standard);
        cfg.initial_state = Some(vec![0.0; 2]);
        assert_eq!(
            simulate(&sys, &cfg, &profile),
            Err(DynamicsError::Dimension {
                expected: 9,
                got: 2
            })
        );
        let cfg = SimConfig::new(0.1, 0.0, 1.0, 1, UpdateLaw::Standard);
        assert!(simulate(&sys, &cfg, &SourceProfile::ramp(1.0, 0.0)).is_err());
    }

    #[test]
    fn potential_examples() {
        let e = |from, to| Edge {
            from,
            to,
            weight: 1.0,
        };
        // Agent 1 and the source, linked both ways.
        let g = GraphSpec::new(
            1,
            vec![
                e(Node::Agent(0), Node::Source),
                e(Node::Source, Node::Agent(0)),
            ],
        )
        .unwrap();
        assert_eq!(laplacian_potential(&g, &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(laplacian_potential(&g, &[3.0, 3.0]).unwrap(), 0.0);

        let directed = GraphSpec::<f64>::grid(2, 2, 4, 1.0).unwrap();
        assert_eq!(
            laplacian_potential(&directed, &[0.0; 5]),
            Err(DynamicsError::Directed)
        );
        assert!(matches!(
            laplacian_potential(&g, &[0.0]),
            Err(DynamicsError::Dimension { .. })
        ));
    }
}
