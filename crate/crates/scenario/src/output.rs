//! Flat-file outputs. Numbers are written with 17 significant digits so
//! every value re-parses to the same `f64`.

use std::fs;
use std::path::{Path, PathBuf};

use consensus_core::metrics::spread;
use consensus_core::{MetricsRecordF64, SpectralSummaryF64, TrajectoryF64};

use crate::report::{compare_report, RunSummary};
use crate::runner::{ScenarioError, ScenarioOutcome};

pub const TRAJECTORY_HEADER_PREFIX: &str = "step,time,Zs";
pub const METRICS_HEADER: &str = "run,gamma,beta,settled,k_Ts,T_s,delta,delta_star,diverged";
pub const FORMATION_HEADER: &str = "run,initial_spread,final_spread,spread_growth";

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn to_csv<I, R>(header: Vec<String>, rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let record = |w: &mut csv::Writer<Vec<u8>>, fields: Vec<String>| {
        w.write_record(&fields).expect("writing to memory");
    };
    let width = header.len();
    record(&mut w, header);
    for row in rows {
        let fields: Vec<String> = row.into_iter().collect();
        debug_assert_eq!(fields.len(), width);
        record(&mut w, fields);
    }
    let bytes = w.into_inner().expect("flushing to memory");
    String::from_utf8(bytes).expect("fields are ASCII")
}

fn header(fixed: &str, prefix: char, n: usize) -> Vec<String> {
    fixed
        .split(',')
        .map(str::to_string)
        .chain((1..=n).map(|i| format!("{prefix}{i}")))
        .collect()
}

pub fn trajectory_csv(traj: &TrajectoryF64) -> String {
    let rows = traj
        .states
        .iter()
        .zip(&traj.source)
        .enumerate()
        .map(|(k, (z, zs))| {
            [k.to_string(), num(traj.time(k)), num(*zs)]
                .into_iter()
                .chain(z.iter().map(|v| num(*v)))
                .collect::<Vec<_>>()
        });
    to_csv(
        header(TRAJECTORY_HEADER_PREFIX, 'Z', traj.agent_count()),
        rows,
    )
}

pub fn positions_csv(positions: &[Vec<f64>], dt: f64) -> String {
    let n = positions.first().map_or(0, Vec::len);
    let rows = positions.iter().enumerate().map(|(k, x)| {
        [k.to_string(), num(k as f64 * dt)]
            .into_iter()
            .chain(x.iter().map(|v| num(*v)))
            .collect::<Vec<_>>()
    });
    to_csv(header("step,time", 'X', n), rows)
}

pub fn metrics_fields(name: &str, gamma: f64, beta: f64, m: &MetricsRecordF64) -> Vec<String> {
    vec![
        name.to_string(),
        num(gamma),
        num(beta),
        m.settled.to_string(),
        m.k_ts.map(|k| k.to_string()).unwrap_or_default(),
        opt_num(m.t_s),
        num(m.delta),
        opt_num(m.delta_star),
        m.diverged.to_string(),
    ]
}

/// Parsed metrics CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub run: String,
    pub gamma: f64,
    pub beta: f64,
    pub settled: bool,
    pub k_ts: Option<usize>,
    pub t_s: Option<f64>,
    pub delta: f64,
    pub delta_star: Option<f64>,
    pub diverged: bool,
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes())
}

fn field<T: std::str::FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e| format!("{s:?}: {e}"))
}

fn opt_field<T: std::str::FromStr>(s: &str) -> Result<Option<T>, String>
where
    T::Err: std::fmt::Display,
{
    if s.is_empty() {
        Ok(None)
    } else {
        field(s).map(Some)
    }
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricsRow>, String> {
    let mut r = reader(text);
    let header = r.headers().map_err(|e| e.to_string())?;
    if header.iter().collect::<Vec<_>>().join(",") != METRICS_HEADER {
        return Err("unexpected metrics header".into());
    }
    r.records()
        .map(|rec| {
            let c = rec.map_err(|e| e.to_string())?;
            Ok(MetricsRow {
                run: c[0].to_string(),
                gamma: field(&c[1])?,
                beta: field(&c[2])?,
                settled: field(&c[3])?,
                k_ts: opt_field(&c[4])?,
                t_s: opt_field(&c[5])?,
                delta: field(&c[6])?,
                delta_star: opt_field(&c[7])?,
                diverged: field(&c[8])?,
            })
        })
        .collect()
}

/// `(step, time, Zs, Z)`.
pub type TrajectoryRow = (usize, f64, f64, Vec<f64>);

pub fn parse_trajectory_csv(text: &str) -> Result<Vec<TrajectoryRow>, String> {
    let mut r = reader(text);
    let header = r.headers().map_err(|e| e.to_string())?;
    if !header
        .iter()
        .take(3)
        .eq(TRAJECTORY_HEADER_PREFIX.split(','))
    {
        return Err("unexpected trajectory header".into());
    }
    r.records()
        .map(|rec| {
            let c = rec.map_err(|e| e.to_string())?;
            Ok((
                field(&c[0])?,
                field(&c[1])?,
                field(&c[2])?,
                c.iter().skip(3).map(field).collect::<Result<_, _>>()?,
            ))
        })
        .collect()
}

pub fn spectral_summary_text(
    spectral: &SpectralSummaryF64,
    gamma: f64,
    perron_radius: f64,
) -> String {
    let mut out = format!(
        "# pinned Laplacian spectrum\nagents {}\neigenvalues (re, im) ascending\n",
        spectral.eigenvalues.len()
    );
    for l in &spectral.eigenvalues {
        out.push_str(&format!("{}, {}\n", num(l.re), num(l.im)));
    }
    out.push_str(&format!("gain_bound {}\n", num(spectral.gain_bound)));
    out.push_str(&format!("gamma {}\n", num(gamma)));
    out.push_str(&format!("perron_spectral_radius {}\n", num(perron_radius)));
    out
}

pub fn summaries(outcome: &ScenarioOutcome) -> Vec<RunSummary<'_>> {
    outcome
        .runs
        .iter()
        .map(|r| RunSummary {
            name: &r.name,
            gamma: r.gamma,
            beta: r.beta,
            metrics: &r.metrics,
        })
        .collect()
}

/// Writes every output file into `dir`; returns the paths in write order.
pub fn write_outputs(outcome: &ScenarioOutcome, dir: &Path) -> Result<Vec<PathBuf>, ScenarioError> {
    let io = |path: &Path, e: std::io::Error| ScenarioError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written = Vec::new();
    let mut emit = |name: String, contents: String| -> Result<(), ScenarioError> {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|e| io(&path, e))?;
        written.push(path);
        Ok(())
    };

    emit(
        "spectral_summary.txt".into(),
        spectral_summary_text(&outcome.spectral, outcome.gamma, outcome.perron_radius),
    )?;

    let mut metrics = Vec::new();
    let mut formation = Vec::new();
    for run in &outcome.runs {
        emit(
            format!("{}.trajectory.csv", run.name),
            trajectory_csv(&run.trajectory),
        )?;
        metrics.push(metrics_fields(&run.name, run.gamma, run.beta, &run.metrics));
        if let Some(f) = &run.formation {
            emit(
                format!("{}.positions.csv", run.name),
                positions_csv(&f.positions, run.trajectory.config.dt),
            )?;
            let first = f.positions.first().map_or(0.0, |x| spread(x));
            let last = f.positions.last().map_or(0.0, |x| spread(x));
            formation.push(vec![
                run.name.clone(),
                num(first),
                num(last),
                num(f.spread_growth),
            ]);
        }
    }
    let fixed = |h: &str| h.split(',').map(str::to_string).collect::<Vec<_>>();
    emit("metrics.csv".into(), to_csv(fixed(METRICS_HEADER), metrics))?;
    if !formation.is_empty() {
        emit(
            "formation.csv".into(),
            to_csv(fixed(FORMATION_HEADER), formation),
        )?;
    }
    emit("report.txt".into(), compare_report(&summaries(outcome)))?;
    Ok(written)
}
