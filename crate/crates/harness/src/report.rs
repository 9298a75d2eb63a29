//! Post-run reporting: a plain-text summary table over compatible traces
//! and gnuplot-ready data files of the cumulative curves.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::RunError;
use crate::ratefit::fit_rate;
use crate::trace::{mean_trace, RunTrace};

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.6}"),
        None => "undefined (empty comparator set)".into(),
    }
}

/// Renders the summary for a set of traces sharing one config digest.
/// Traces may span several horizons (a rate sweep); three or more distinct
/// horizons additionally get fitted growth slopes of the mean curves.
pub fn report(traces: &[RunTrace]) -> Result<String, RunError> {
    let Some(first) = traces.first() else {
        return Err(RunError::Config("report needs at least one trace".into()));
    };
    if traces.iter().any(|t| t.meta.digest != first.meta.digest) {
        return Err(RunError::Config(
            "traces come from different configs; refusing to mix them in one report".into(),
        ));
    }

    let mut horizons: Vec<u64> = traces.iter().map(|t| t.meta.horizon).collect();
    horizons.sort_unstable();
    horizons.dedup();

    let mut out = String::new();
    writeln!(out, "algorithm: {}", first.meta.algorithm.name()).ok();
    writeln!(out, "config digest: {}", first.meta.digest).ok();
    writeln!(out).ok();
    writeln!(
        out,
        "{:>9} {:>6} {:>14} {:>14} {:>14} {:>12}",
        "horizon", "seed", "avg_regret", "avg_violation", "cum_cost", "lambda_T"
    )
    .ok();

    let mut rate_regret = Vec::new();
    let mut rate_violation = Vec::new();
    for &h in &horizons {
        let group: Vec<RunTrace> = traces
            .iter()
            .filter(|t| t.meta.horizon == h && !t.is_aggregate())
            .cloned()
            .collect();
        for t in &group {
            writeln!(
                out,
                "{:>9} {:>6} {:>14} {:>14.6} {:>14.6} {:>12.6}",
                h,
                t.meta.seed.map(|s| s.to_string()).unwrap_or_default(),
                fmt_opt(t.footer.avg_regret),
                t.footer.avg_violation,
                t.rows.last().map(|r| r.cum_cost).unwrap_or(0.0),
                t.rows.last().map(|r| r.lambda).unwrap_or(0.0),
            )
            .ok();
        }
        if !group.is_empty() {
            let mean = mean_trace(&group)?;
            writeln!(
                out,
                "{:>9} {:>6} {:>14} {:>14.6} {:>14.6} {:>12.6}",
                h,
                "mean",
                fmt_opt(mean.footer.avg_regret),
                mean.footer.avg_violation,
                mean.rows.last().map(|r| r.cum_cost).unwrap_or(0.0),
                mean.rows.last().map(|r| r.lambda).unwrap_or(0.0),
            )
            .ok();
            if let Some(r) = mean.footer.cum_regret {
                rate_regret.push((h as f64, r));
            }
            rate_violation.push((h as f64, mean.footer.cum_violation));
        }
    }

    if horizons.len() >= 3 {
        writeln!(out).ok();
        if rate_regret.len() == horizons.len() {
            let fit = fit_rate(&rate_regret)?;
            writeln!(
                out,
                "regret growth: slope {:.4} (r^2 {:.4}) over {} checkpoints",
                fit.slope,
                fit.r_squared,
                rate_regret.len()
            )
            .ok();
        }
        let fit = fit_rate(&rate_violation)?;
        writeln!(
            out,
            "violation growth: slope {:.4} (r^2 {:.4}) over {} checkpoints",
            fit.slope,
            fit.r_squared,
            rate_violation.len()
        )
        .ok();
    }
    Ok(out)
}

/// Writes one `.dat` per trace: `t cum_cost cum_violation lambda`,
/// space-separated, ready for `plot "file.dat" using 1:2 with lines`.
pub fn write_gnuplot_data(traces: &[RunTrace], dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for t in traces {
        let mut body = String::with_capacity(t.rows.len() * 48);
        body.push_str("# t cum_cost cum_violation lambda\n");
        for r in &t.rows {
            writeln!(body, "{} {} {} {}", r.t, r.cum_cost, r.cum_violation, r.lambda).ok();
        }
        let path = dir.join(format!("{}-h{}.dat", t.file_stem(), t.meta.horizon));
        std::fs::write(&path, body)?;
        paths.push(path);
    }
    Ok(paths)
}
