//! Per-repetition metrics and their CSV form.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowKind {
    Rep,
    /// Mean over repetitions.
    Mean,
    /// Standard error of that mean.
    Se,
    /// Error quantiles pooled over every time step of every repetition.
    Pooled,
}

/// One CSV row: a repetition at one lag, or a summary over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub kind: RowKind,
    pub rep: Option<usize>,
    pub experiment: String,
    pub strategy: String,
    pub particles: usize,
    /// Lookahead-weighting lag `δ`.
    pub lag: usize,
    /// `δ` plus the strategy's configured lookahead.
    pub lookahead: usize,
    /// Root mean squared error against the truth.
    pub rmse1: Option<f64>,
    /// Root mean squared error against the reference run.
    pub rmse2: Option<f64>,
    /// Median absolute error against the truth.
    pub mae1: Option<f64>,
    pub mae2: Option<f64>,
    /// Quantiles of the absolute error against the truth; the median is `mae1`.
    pub abs_q05: Option<f64>,
    pub abs_q25: Option<f64>,
    pub abs_q75: Option<f64>,
    pub abs_q95: Option<f64>,
    pub ber: Option<f64>,
    /// Mean ESS over steps, on the resampling track.
    pub mean_ess: f64,
    /// Mean lookahead actually used per step.
    pub mean_delta: f64,
    pub evaluations: f64,
    pub wall_time: Option<f64>,
}

const COLUMNS: usize = 13;

impl MetricsRow {
    fn numeric(&self) -> [Option<f64>; COLUMNS] {
        [
            self.rmse1,
            self.rmse2,
            self.mae1,
            self.mae2,
            self.abs_q05,
            self.abs_q25,
            self.abs_q75,
            self.abs_q95,
            self.ber,
            Some(self.mean_ess),
            Some(self.mean_delta),
            Some(self.evaluations),
            self.wall_time,
        ]
    }

    fn with_numeric(&self, kind: RowKind, v: [Option<f64>; COLUMNS]) -> MetricsRow {
        MetricsRow {
            kind,
            rep: None,
            rmse1: v[0],
            rmse2: v[1],
            mae1: v[2],
            mae2: v[3],
            abs_q05: v[4],
            abs_q25: v[5],
            abs_q75: v[6],
            abs_q95: v[7],
            ber: v[8],
            mean_ess: v[9].unwrap_or(f64::NAN),
            mean_delta: v[10].unwrap_or(f64::NAN),
            evaluations: v[11].unwrap_or(f64::NAN),
            wall_time: v[12],
            ..self.clone()
        }
    }
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean and standard-error rows for each lag, in lag order of first appearance.
pub fn summarize(rows: &[MetricsRow]) -> Vec<MetricsRow> {
    let mut lags: Vec<usize> = Vec::new();
    for r in rows.iter().filter(|r| r.kind == RowKind::Rep) {
        if !lags.contains(&r.lag) {
            lags.push(r.lag);
        }
    }
    let mut out = Vec::new();
    for lag in lags {
        let group: Vec<&MetricsRow> = rows.iter().filter(|r| r.kind == RowKind::Rep && r.lag == lag).collect();
        let cols: Vec<[Option<f64>; COLUMNS]> = group.iter().map(|r| r.numeric()).collect();
        let mut means = [None; COLUMNS];
        let mut ses = [None; COLUMNS];
        for i in 0..COLUMNS {
            let vals: Vec<f64> = cols.iter().filter_map(|c| c[i]).collect();
            if !vals.is_empty() {
                let (m, s) = mean_se(&vals);
                means[i] = Some(m);
                ses[i] = Some(s);
            }
        }
        out.push(group[0].with_numeric(RowKind::Mean, means));
        out.push(group[0].with_numeric(RowKind::Se, ses));
    }
    out
}

/// Write repetition rows followed by their summaries.
pub fn write_csv<W: Write>(rows: &[MetricsRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    for r in summarize(rows) {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_reader(reader);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(rep: usize, lag: usize, rmse: f64) -> MetricsRow {
        MetricsRow {
            kind: RowKind::Rep,
            rep: Some(rep),
            experiment: "nonlinear".into(),
            strategy: "plain".into(),
            particles: 10,
            lag,
            lookahead: lag,
            rmse1: Some(rmse),
            rmse2: None,
            mae1: None,
            mae2: None,
            abs_q05: None,
            abs_q25: None,
            abs_q75: None,
            abs_q95: None,
            ber: None,
            mean_ess: 5.0,
            mean_delta: 0.0,
            evaluations: 1.0,
            wall_time: None,
        }
    }

    #[test]
    fn summary_rows_per_lag() {
        let rows = vec![row(0, 0, 1.0), row(1, 0, 3.0), row(0, 1, 2.0), row(1, 1, 2.0)];
        let s = summarize(&rows);
        assert_eq!(s.len(), 4);
        assert_eq!(s[0].kind, RowKind::Mean);
        assert_eq!(s[0].rmse1, Some(2.0));
        assert!((s[1].rmse1.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(s[1].rmse2, None);
        assert_eq!(s[3].rmse1, Some(0.0));
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![row(0, 0, 1.25), row(1, 0, 0.1 + 0.2)];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 4);
        assert_eq!(back[..2], rows[..]);
        assert_eq!(back[2].kind, RowKind::Mean);
    }
}
