//! CSV exports of a population and of per-step diagnostics.

use std::io::Write;

use serde::Serialize;

use super::ParticleSystem;
use crate::error::Result;

/// Write one row per particle: index, final-state components, then each log-weight track.
pub fn write_snapshot<S: Clone, C: Clone, W: Write>(
    sys: &ParticleSystem<S, C>,
    out: W,
    component_names: &[&str],
    components: impl Fn(&S) -> Vec<f64>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = vec!["index".into()];
    header.extend(component_names.iter().map(|s| s.to_string()));
    header.push("log_w".into());
    if sys.log_aux.is_some() {
        header.push("log_w_aux".into());
    }
    if sys.log_res.is_some() {
        header.push("log_w_res".into());
    }
    w.write_record(&header)?;
    for (j, path) in sys.paths.iter().enumerate() {
        let mut row = vec![j.to_string()];
        let comps = path.last_state().map(&components).unwrap_or_default();
        row.extend(comps.iter().map(|c| c.to_string()));
        row.push(sys.log_w[j].to_string());
        if let Some(a) = &sys.log_aux {
            row.push(a[j].to_string());
        }
        if let Some(r) = &sys.log_res {
            row.push(r[j].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-step record of a filtering run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub t: usize,
    pub ess: f64,
    pub delta: usize,
    pub resampled: bool,
}

pub fn write_diagnostics<W: Write>(rows: &[StepDiagnostics], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
