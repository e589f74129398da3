//! Cached large-sample reference estimates, keyed by data seed and total lookahead.
//!
//! The cache is a CSV with columns `rep, data_seed, lag, t, value`, one row per
//! time `t = 1..=T`. Values are written in shortest round-trip form, so a reloaded
//! cache compares bit for bit.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmcError};
use crate::lookahead::Strategy;
use crate::rng::derive_seed;

use super::config::{ExperimentConfig, ExperimentKind};
use super::{nonlinear, rep_seeds, tracking};

/// Label mixed into the data seed to seed the reference filter.
const REFERENCE_STREAM: u64 = 0x5eed_4ef0;

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    rep: usize,
    data_seed: u64,
    lag: usize,
    t: usize,
    value: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReferenceTable {
    /// `(data_seed, lag) -> (rep, values for t = 1..=T)`.
    series: BTreeMap<(u64, usize), (usize, Vec<f64>)>,
}

impl ReferenceTable {
    /// Run plain SMC with `cfg.reference.particles` on every repetition's data.
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let rc = &cfg.reference;
        if rc.particles == 0 || rc.lags.is_empty() {
            return Err(SmcError::Config("reference needs particles and lags".into()));
        }
        let per_rep: Vec<Vec<((u64, usize), (usize, Vec<f64>))>> = (0..cfg.reps)
            .into_par_iter()
            .map(|rep| {
                let (data_seed, _) = rep_seeds(cfg.seed, rep);
                let seed = derive_seed(data_seed, REFERENCE_STREAM);
                let trace = match cfg.experiment {
                    ExperimentKind::Nonlinear => {
                        let (_, ys) = nonlinear::simulate(cfg, data_seed);
                        nonlinear::filter_means(cfg.nonlinear, &ys, &Strategy::Plain, &cfg.resample, rc.particles, &rc.lags, seed)?
                    }
                    ExperimentKind::Tracking => {
                        let (_, ys) = tracking::simulate(cfg, data_seed)?;
                        tracking::filter_positions(&cfg.tracking, &ys, &Strategy::Plain, &cfg.resample, rc.particles, &rc.lags, seed)?
                    }
                    ExperimentKind::Qam => {
                        return Err(SmcError::Config("the QAM experiment has no reference estimator".into()));
                    }
                };
                Ok(rc
                    .lags
                    .iter()
                    .enumerate()
                    .map(|(i, &lag)| ((data_seed, lag), (rep, trace.series(i).into_iter().copied().collect())))
                    .collect())
            })
            .collect::<Result<_>>()?;
        Ok(ReferenceTable {
            series: per_rep.into_iter().flatten().collect(),
        })
    }

    /// Reference values for `t = 1..=T`.
    pub fn series(&self, data_seed: u64, lag: usize) -> Result<&[f64]> {
        self.series
            .get(&(data_seed, lag))
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| SmcError::Reference(format!("no entry for data seed {data_seed} at lookahead {lag}")))
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (&(data_seed, lag), (rep, values)) in &self.series {
            for (i, &value) in values.iter().enumerate() {
                w.serialize(Record {
                    rep: *rep,
                    data_seed,
                    lag,
                    t: i + 1,
                    value,
                })?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut series: BTreeMap<(u64, usize), (usize, Vec<f64>)> = BTreeMap::new();
        for rec in csv::Reader::from_reader(reader).deserialize() {
            let rec: Record = rec?;
            let entry = series.entry((rec.data_seed, rec.lag)).or_insert((rec.rep, Vec::new()));
            if rec.t != entry.1.len() + 1 {
                return Err(SmcError::Reference(format!(
                    "times out of order for data seed {} at lookahead {}",
                    rec.data_seed, rec.lag
                )));
            }
            entry.1.push(rec.value);
        }
        Ok(ReferenceTable { series })
    }
}
