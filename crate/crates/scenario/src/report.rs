//! Side-by-side comparison table of runs.

use consensus_core::MetricsRecordF64;

#[derive(Debug, Clone, Copy)]
pub struct RunSummary<'a> {
    pub name: &'a str,
    pub gamma: f64,
    pub beta: f64,
    pub metrics: &'a MetricsRecordF64,
}

const COLUMNS: [&str; 8] = [
    "run",
    "gamma",
    "beta",
    "settled",
    "k_Ts",
    "T_s",
    "delta",
    "delta_star",
];

fn cells(run: &RunSummary<'_>) -> Vec<String> {
    let m = run.metrics;
    let mut row = vec![
        run.name.to_string(),
        format!("{:.4}", run.gamma),
        format!("{:.4}", run.beta),
    ];
    if m.diverged {
        row.extend(std::iter::repeat_n("diverged".to_string(), 5));
        return row;
    }
    row.push(if m.settled { "yes" } else { "no" }.to_string());
    row.push(m.k_ts.map_or("-".into(), |k| k.to_string()));
    row.push(m.t_s.map_or("-".into(), |t| format!("{t:.4}")));
    row.push(format!("{:.4e}", m.delta));
    row.push(m.delta_star.map_or("-".into(), |d| format!("{d:.4e}")));
    row
}

fn ratio(a: Option<f64>, b: Option<f64>) -> String {
    match (a, b) {
        (Some(a), Some(b)) if b != 0.0 => format!("{:.4}", a / b),
        _ => "-".into(),
    }
}

/// Aligned table of every run; with more than one run, ratios of settling
/// time and normalized deviation against the first run follow.
pub fn compare_report(runs: &[RunSummary<'_>]) -> String {
    let mut rows = vec![COLUMNS.iter().map(|s| s.to_string()).collect::<Vec<_>>()];
    rows.extend(runs.iter().map(cells));
    let widths: Vec<usize> = (0..COLUMNS.len())
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    if let Some((base, rest)) = runs.split_first() {
        if !rest.is_empty() {
            out.push_str(&format!("\nratios against {}\n", base.name));
            let name_w = rest.iter().map(|r| r.name.len()).max().unwrap_or(0);
            for r in rest {
                let usable = |x: &RunSummary<'_>| !x.metrics.diverged;
                let (ts, ds) = if usable(r) && usable(base) {
                    (
                        ratio(r.metrics.t_s, base.metrics.t_s),
                        ratio(r.metrics.delta_star, base.metrics.delta_star),
                    )
                } else {
                    ("diverged".into(), "diverged".into())
                };
                out.push_str(&format!(
                    "{:<name_w$}  T_s ratio {ts}  delta_star ratio {ds}\n",
                    r.name
                ));
            }
        }
    }
    out
}
