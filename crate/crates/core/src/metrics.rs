//! Settling time, transition-synchronization deviation and formation drift.

use thiserror::Error;

use crate::dynamics::Trajectory;
use crate::scalar::Scalar;

/// Relative settling band used throughout.
pub const DEFAULT_BAND: f64 = 0.02;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("desired value Z_d must be nonzero for a relative band")]
    ZeroTarget,
    #[error("band must lie in (0, 1)")]
    InvalidBand,
    #[error("settling step {k_ts} beyond recorded horizon {horizon}")]
    BeyondHorizon { k_ts: usize, horizon: usize },
    #[error("trajectory never settled")]
    Unsettled,
    #[error("settling time must be positive")]
    NonPositiveSettlingTime,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settling<T> {
    pub settled: bool,
    pub k_ts: Option<usize>,
    pub t_s: Option<T>,
}

/// Smallest `k` such that every agent stays within `band * |Z_d|` of `Z_d`
/// from step `k` to the end of the recorded horizon.
///
/// A diverged trajectory is never settled.
pub fn settling_time<T: Scalar>(
    traj: &Trajectory<T>,
    z_d: T,
    band: T,
) -> Result<Settling<T>, MetricsError> {
    if z_d == T::zero() {
        return Err(MetricsError::ZeroTarget);
    }
    if !(band > T::zero() && band < T::one()) {
        return Err(MetricsError::InvalidBand);
    }
    let tol = band * z_d.abs();
    let inside = |z: &Vec<T>| z.iter().all(|&v| (v - z_d).abs() <= tol);
    let first_settled = traj
        .states
        .iter()
        .rposition(|z| !inside(z))
        .map_or(0, |last_out| last_out + 1);
    if traj.diverged || first_settled >= traj.states.len() {
        return Ok(Settling {
            settled: false,
            k_ts: None,
            t_s: None,
        });
    }
    Ok(Settling {
        settled: true,
        k_ts: Some(first_settled),
        t_s: Some(traj.time(first_settled)),
    })
}

/// `Delta = dt / Z_d * sum_{k=1..=k_ts} |Z[k] - mean(Z[k]) 1|_1`.
pub fn deviation<T: Scalar>(
    traj: &Trajectory<T>,
    z_d: T,
    k_ts: usize,
    dt: T,
) -> Result<T, MetricsError> {
    if z_d == T::zero() {
        return Err(MetricsError::ZeroTarget);
    }
    if k_ts > traj.last_step() {
        return Err(MetricsError::BeyondHorizon {
            k_ts,
            horizon: traj.last_step(),
        });
    }
    let spread: T = traj.states[1..=k_ts]
        .iter()
        .map(|z| {
            let m = crate::dynamics::mean(z);
            z.iter().map(|&v| (v - m).abs()).sum::<T>()
        })
        .sum();
    Ok(dt / z_d * spread)
}

/// `Delta* = Delta / T_s`.
pub fn normalized_deviation<T: Scalar>(delta: T, t_s: Option<T>) -> Result<T, MetricsError> {
    let t_s = t_s.ok_or(MetricsError::Unsettled)?;
    if !(t_s > T::zero()) {
        return Err(MetricsError::NonPositiveSettlingTime);
    }
    Ok(delta / t_s)
}

/// Settling and synchronization summary for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord<T> {
    pub settled: bool,
    pub diverged: bool,
    pub k_ts: Option<usize>,
    pub t_s: Option<T>,
    /// Over `1..=k_ts`, or the whole recorded horizon when unsettled.
    pub delta: T,
    pub delta_star: Option<T>,
    pub band: T,
}

impl<T: Scalar> MetricsRecord<T> {
    pub fn evaluate(traj: &Trajectory<T>, z_d: T, band: T) -> Result<Self, MetricsError> {
        let settling = settling_time(traj, z_d, band)?;
        let span = settling.k_ts.unwrap_or_else(|| traj.last_step());
        let delta = deviation(traj, z_d, span, traj.config.dt)?;
        let delta_star = match settling.t_s {
            Some(t) if t > T::zero() => Some(delta / t),
            _ => None,
        };
        Ok(Self {
            settled: settling.settled,
            diverged: traj.diverged,
            k_ts: settling.k_ts,
            t_s: settling.t_s,
            delta,
            delta_star,
            band,
        })
    }
}

/// Agent positions for the formation experiment. Only `x` moves.
#[derive(Debug, Clone, PartialEq)]
pub struct FormationState<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub initial_spacing: T,
}

impl<T: Scalar> FormationState<T> {
    /// Row-major grid positions matching the agent numbering of
    /// [`GraphSpec::grid`](crate::graph::GraphSpec::grid); row 0 at the top.
    pub fn grid(rows: usize, cols: usize, spacing: T) -> Self {
        let mut x = Vec::with_capacity(rows * cols);
        let mut y = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                x.push(T::from_count(c) * spacing);
                y.push(T::from_count(rows - 1 - r) * spacing);
            }
        }
        Self {
            x,
            y,
            initial_spacing: spacing,
        }
    }
}

/// Forward-Euler positions `X[k+1] = X[k] + dt Z[k]`, one row per recorded state.
pub fn integrate_positions<T: Scalar>(
    traj: &Trajectory<T>,
    x0: &[T],
    dt: T,
) -> Result<Vec<Vec<T>>, MetricsError> {
    if x0.len() != traj.agent_count() {
        return Err(MetricsError::Dimension {
            expected: traj.agent_count(),
            got: x0.len(),
        });
    }
    let mut out = Vec::with_capacity(traj.len());
    let mut x = x0.to_vec();
    out.push(x.clone());
    for z in traj.states.iter().take(traj.len().saturating_sub(1)) {
        for (xi, &zi) in x.iter_mut().zip(z) {
            *xi += dt * zi;
        }
        out.push(x.clone());
    }
    Ok(out)
}

/// `max x - min x`.
pub fn spread<T: Scalar>(x: &[T]) -> T {
    let max = x.iter().copied().fold(T::neg_infinity(), T::max);
    let min = x.iter().copied().fold(T::infinity(), T::min);
    max - min
}

/// Change of horizontal spread between the first and last positions.
pub fn spread_growth<T: Scalar>(positions: &[Vec<T>]) -> T {
    match (positions.first(), positions.last()) {
        (Some(first), Some(last)) => spread(last) - spread(first),
        _ => T::zero(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    use crate::dynamics::{SimConfig, UpdateLaw};

    fn traj(states: Vec<Vec<f64>>, dt: f64) -> Trajectory<f64> {
        let len = states.len();
        Trajectory {
            states,
            source: vec![0.0; len],
            config: SimConfig::new(0.1, 0.0, dt, len - 1, UpdateLaw::Standard),
            per_agent_signals: None,
            diverged: false,
        }
    }

    #[test]
    fn constant_trajectory_settles_immediately() {
        let t = traj(vec![vec![1.0, 1.0]; 5], 0.1);
        let s = settling_time(&t, 1.0, 0.02).unwrap();
        assert_eq!(s.k_ts, Some(0));
        assert_eq!(s.t_s, Some(0.0));
        assert!(s.settled);
    }

    #[test]
    fn geometric_approach_settles_at_six() {
        let t = traj((0..20).map(|k| vec![1.0 - 0.5f64.powi(k)]).collect(), 0.5);
        let s = settling_time(&t, 1.0, 0.02).unwrap();
        assert_eq!(s.k_ts, Some(6));
        assert_eq!(s.t_s, Some(3.0));
    }

    #[test]
    fn leaving_the_band_resets_settling() {
        let t = traj(
            vec![vec![0.0], vec![1.0], vec![1.1], vec![1.0], vec![1.0]],
            1.0,
        );
        assert_eq!(settling_time(&t, 1.0, 0.02).unwrap().k_ts, Some(3));
        let never = traj(vec![vec![0.0], vec![1.0], vec![0.5]], 1.0);
        let s = settling_time(&never, 1.0, 0.02).unwrap();
        assert!(!s.settled && s.k_ts.is_none() && s.t_s.is_none());
    }

    #[test]
    fn settling_errors() {
        let t = traj(vec![vec![0.0]; 2], 1.0);
        assert_eq!(settling_time(&t, 0.0, 0.02), Err(MetricsError::ZeroTarget));
        assert_eq!(settling_time(&t, 1.0, 1.0), Err(MetricsError::InvalidBand));
        assert_eq!(settling_time(&t, 1.0, 0.0), Err(MetricsError::InvalidBand));
    }

    #[test]
    fn deviation_hand_evaluation() {
        let t = traj(vec![vec![0.0, 0.0], vec![0.0, 0.02]], 1.0);
        assert_relative_eq!(deviation(&t, 0.02, 1, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        let same = traj(vec![vec![0.3, 0.3]; 4], 1.0);
        assert_eq!(deviation(&same, 0.02, 3, 1.0).unwrap(), 0.0);
        assert_eq!(deviation(&t, 0.0, 1, 1.0), Err(MetricsError::ZeroTarget));
        assert!(matches!(
            deviation(&t, 0.02, 2, 1.0),
            Err(MetricsError::BeyondHorizon { .. })
        ));
    }

    #[test]
    fn normalized_deviation_examples() {
        assert_relative_eq!(normalized_deviation(0.0103, Some(1.0)).unwrap(), 0.0103);
        assert_relative_eq!(
            normalized_deviation(0.0006, Some(0.4756)).unwrap(),
            0.0012,
            epsilon = 1e-4
        );
        assert_eq!(normalized_deviation(0.0, Some(2.0)).unwrap(), 0.0);
        assert_eq!(
            normalized_deviation(0.1, None),
            Err(MetricsError::Unsettled)
        );
        assert_eq!(
            normalized_deviation(0.1, Some(0.0)),
            Err(MetricsError::NonPositiveSettlingTime)
        );
    }

    #[test]
    fn unsettled_record_uses_full_horizon() {
        let t = traj(vec![vec![0.0, 1.0]; 3], 0.5);
        let r = MetricsRecord::evaluate(&t, 1.0, 0.02).unwrap();
        assert!(!r.settled);
        assert_eq!(r.delta_star, None);
        assert_relative_eq!(r.delta, 0.5 * 2.0 * 1.0, epsilon = 1e-15);
    }

    #[test]
    fn positions_integrate_forward_euler() {
        let t = traj(vec![vec![0.0, 0.0]; 4], 0.1);
        let x = integrate_positions(&t, &[1.0, 2.0], 0.1).unwrap();
        assert!(x.iter().all(|row| row == &vec![1.0, 2.0]));

        let v = traj(vec![vec![0.5, -1.0]; 4], 0.1);
        let x = integrate_positions(&v, &[0.0, 0.0], 0.1).unwrap();
        for (k, row) in x.iter().enumerate() {
            assert_relative_eq!(row[0], k as f64 * 0.1 * 0.5, epsilon = 1e-15);
            assert_relative_eq!(row[1], -(k as f64) * 0.1, epsilon = 1e-15);
        }
        assert!(matches!(
            integrate_positions(&v, &[0.0], 0.1),
            Err(MetricsError::Dimension { .. })
        ));
    }

    #[test]
    fn grid_formation_layout() {
        let f = FormationState::<f64>::grid(2, 3, 1.0);
        assert_eq!(f.x, vec![0.0, 1.0, 2.0, 0.0, 1.0, 2.0]);
        assert_eq!(f.y, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(spread(&f.x), 2.0);
        assert_eq!(spread_growth(&[f.x.clone(), vec![0.0, 1.0, 2.5]]), 0.5);
    }
}
