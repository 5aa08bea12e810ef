use std::io::Write;

use crate::optimize::{ExperimentSummary, RunRecord};

/// One JSON object per line.
pub fn write_runs_jsonl<W: Write>(runs: &[RunRecord], mut w: W) -> std::io::Result<()> {
    for r in runs {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn opt_field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `iter,objective,grad_norm,aux_norm`; `aux_norm` is blank for runs
/// without added neurons.
pub fn write_trajectory_csv<W: Write>(run: &RunRecord, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["iter", "objective", "grad_norm", "aux_norm"])?;
    for s in &run.trajectory {
        out.write_record([
            s.iter.to_string(),
            s.objective.to_string(),
            s.grad_norm.to_string(),
            opt_field(s.aux_norm),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// `bin_lo,bin_hi,<variant>...`
pub fn write_histogram_csv<W: Write>(summary: &ExperimentSummary, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let names: Vec<&String> = summary.histogram.counts.keys().collect();
    let mut header = vec!["bin_lo".to_string(), "bin_hi".to_string()];
    header.extend(names.iter().map(|s| s.to_string()));
    out.write_record(&header)?;
    for (i, e) in summary.histogram.edges.windows(2).enumerate() {
        let mut row = vec![e[0].to_string(), e[1].to_string()];
        row.extend(names.iter().map(|n| summary.histogram.counts[*n][i].to_string()));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}
