//! Run traces and their byte-exact CSV form.
//!
//! The CSV schema is fixed: header `t,action,inst_cost,inst_risk,cum_cost,
//! cum_violation,lambda`, floats at 17 significant digits. Replaying a
//! seeded run reproduces its file byte for byte. Footers and metadata live
//! in a JSON sidecar next to each CSV, never in the CSV itself.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::Algorithm;
use crate::error::RunError;

pub const CSV_HEADER: &str = "t,action,inst_cost,inst_risk,cum_cost,cum_violation,lambda";

/// 17 significant digits: enough to round-trip any f64 exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: u64,
    /// Bandit arm, or the argmax coordinate of the decision for the
    /// full-information algorithms. Fractional only in seed-averaged
    /// aggregates.
    pub action: f64,
    pub inst_cost: f64,
    pub inst_risk: f64,
    pub cum_cost: f64,
    pub cum_violation: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub algorithm: Algorithm,
    pub digest: String,
    pub horizon: u64,
    /// `None` marks a seed-averaged aggregate.
    pub seed: Option<u64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Summary numbers computed when the run ends. `comparator_value` is the
/// hindsight optimum over the every-round feasible set; `None` means that
/// set was empty and regret is undefined rather than zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFooter {
    pub comparator_value: Option<f64>,
    pub comparator_value_on_average: Option<f64>,
    pub cum_regret: Option<f64>,
    pub avg_regret: Option<f64>,
    pub cum_violation: f64,
    pub avg_violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub meta: TraceMeta,
    pub rows: Vec<TraceRow>,
    pub footer: TraceFooter,
}

/// Sidecar document: everything about a trace that is not a row.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSidecar {
    pub meta: TraceMeta,
    pub footer: TraceFooter,
}

impl RunTrace {
    pub fn is_aggregate(&self) -> bool {
        self.meta.seed.is_none()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        let integral_actions = !self.is_aggregate();
        for r in &self.rows {
            out.push_str(&r.t.to_string());
            out.push(',');
            if integral_actions {
                out.push_str(&(r.action as i64).to_string());
            } else {
                out.push_str(&fmt_f64(r.action));
            }
            for v in [r.inst_cost, r.inst_risk, r.cum_cost, r.cum_violation, r.lambda] {
                out.push(',');
                out.push_str(&fmt_f64(v));
            }
            out.push('\n');
        }
        out
    }

    /// File stem for this trace inside an output directory.
    pub fn file_stem(&self) -> String {
        match self.meta.seed {
            Some(seed) => format!("{}-seed{}", self.meta.algorithm.name(), seed),
            None => format!("{}-aggregate", self.meta.algorithm.name()),
        }
    }

    /// Writes `<stem>.csv` and `<stem>.meta.json`; returns the CSV path.
    pub fn write_to_dir(&self, dir: &Path) -> Result<PathBuf, RunError> {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}.csv", self.file_stem()));
        std::fs::write(&csv_path, self.to_csv_string())?;
        let sidecar = TraceSidecar { meta: self.meta.clone(), footer: self.footer.clone() };
        let meta_path = dir.join(format!("{}.meta.json", self.file_stem()));
        let doc = serde_json::to_string_pretty(&sidecar)
            .map_err(|e| RunError::Io(e.to_string()))?;
        std::fs::write(&meta_path, doc)?;
        Ok(csv_path)
    }

    /// Reads a trace back from its CSV plus sidecar.
    pub fn read_from_csv(csv_path: &Path) -> Result<RunTrace, RunError> {
        let text = std::fs::read_to_string(csv_path)
            .map_err(|e| RunError::Io(format!("cannot read {}: {e}", csv_path.display())))?;
        let meta_path = csv_path.with_extension("").with_extension("meta.json");
        let meta_path = if meta_path.exists() {
            meta_path
        } else {
            // foo.csv -> foo.meta.json
            let stem = csv_path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| RunError::Io(format!("odd path {}", csv_path.display())))?;
            csv_path.with_file_name(format!("{stem}.meta.json"))
        };
        let sidecar: TraceSidecar = serde_json::from_str(
            &std::fs::read_to_string(&meta_path).map_err(|e| {
                RunError::Io(format!("cannot read sidecar {}: {e}", meta_path.display()))
            })?,
        )
        .map_err(|e| RunError::Io(format!("malformed sidecar: {e}")))?;

        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 {
                if line != CSV_HEADER {
                    return Err(RunError::Io(format!(
                        "unexpected header in {}",
                        csv_path.display()
                    )));
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(RunError::Io(format!("bad row {i} in {}", csv_path.display())));
            }
            let parse = |s: &str| -> Result<f64, RunError> {
                s.parse::<f64>()
                    .map_err(|e| RunError::Io(format!("bad number `{s}` in row {i}: {e}")))
            };
            rows.push(TraceRow {
                t: fields[0]
                    .parse::<u64>()
                    .map_err(|e| RunError::Io(format!("bad round index in row {i}: {e}")))?,
                action: parse(fields[1])?,
                inst_cost: parse(fields[2])?,
                inst_risk: parse(fields[3])?,
                cum_cost: parse(fields[4])?,
                cum_violation: parse(fields[5])?,
                lambda: parse(fields[6])?,
            });
        }
        Ok(RunTrace { meta: sidecar.meta, rows, footer: sidecar.footer })
    }
}

/// Columnwise arithmetic mean across seeds. All traces must share the
/// digest, algorithm, and horizon.
pub fn mean_trace(traces: &[RunTrace]) -> Result<RunTrace, RunError> {
    let Some(first) = traces.first() else {
        return Err(RunError::Config("cannot aggregate zero traces".into()));
    };
    for t in traces {
        if t.meta.digest != first.meta.digest
            || t.meta.horizon != first.meta.horizon
            || t.rows.len() != first.rows.len()
        {
            return Err(RunError::Config(
                "traces come from incompatible configs; refusing to aggregate".into(),
            ));
        }
    }
    let m = traces.len() as f64;
    let mut rows = Vec::with_capacity(first.rows.len());
    for i in 0..first.rows.len() {
        let mut acc = TraceRow {
            t: first.rows[i].t,
            action: 0.0,
            inst_cost: 0.0,
            inst_risk: 0.0,
            cum_cost: 0.0,
            cum_violation: 0.0,
            lambda: 0.0,
        };
        for t in traces {
            let r = &t.rows[i];
            acc.action += r.action;
            acc.inst_cost += r.inst_cost;
            acc.inst_risk += r.inst_risk;
            acc.cum_cost += r.cum_cost;
            acc.cum_violation += r.cum_violation;
            acc.lambda += r.lambda;
        }
        acc.action /= m;
        acc.inst_cost /= m;
        acc.inst_risk /= m;
        acc.cum_cost /= m;
        acc.cum_violation /= m;
        acc.lambda /= m;
        rows.push(acc);
    }

    let mean_opt = |f: fn(&TraceFooter) -> Option<f64>| -> Option<f64> {
        let vals: Vec<f64> = traces.iter().filter_map(|t| f(&t.footer)).collect();
        if vals.len() == traces.len() {
            Some(vals.iter().sum::<f64>() / m)
        } else {
            None
        }
    };
    let footer = TraceFooter {
        comparator_value: mean_opt(|f| f.comparator_value),
        comparator_value_on_average: mean_opt(|f| f.comparator_value_on_average),
        cum_regret: mean_opt(|f| f.cum_regret),
        avg_regret: mean_opt(|f| f.avg_regret),
        cum_violation: traces.iter().map(|t| t.footer.cum_violation).sum::<f64>() / m,
        avg_violation: traces.iter().map(|t| t.footer.avg_violation).sum::<f64>() / m,
    };
    Ok(RunTrace {
        meta: TraceMeta { seed: None, warnings: Vec::new(), ..first.meta.clone() },
        rows,
        footer,
    })
}
