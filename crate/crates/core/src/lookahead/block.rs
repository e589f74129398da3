//! Block sampling.
//!
//! With paths held to `t+Δ-1`, the block `x_{t:t+Δ-1}` is discarded and a fresh block
//! `x*_{t:t+Δ}` is drawn from `q_t`. An artificial density `λ_t` over the discarded
//! block keeps the weight proper:
//! `w_t = w_{t-1} π_{t+Δ}(x_{0:t-1}, x*) λ_t(x_old | ·) / (π_{t+Δ-1}(x_{0:t-1}, x_old) q_t(x*))`.

use rayon::prelude::*;

use crate::error::{Result, SmcError};
use crate::model::{finite_support, grow, Model, ModelSpec, ObservationSeq, Trajectory};
use crate::numeric::{log_sum_exp, sample_log_categorical};
use crate::particle::{check_population, PathOf, SystemOf};
use crate::rng::{SmcRng, StreamSet};

use super::exact::ENUMERATION_LIMIT;

pub trait BlockProposal<M: Model>: Send + Sync {
    /// Draw `x*_{t:t+Δ}` given the prefix ending at `t-1` and the discarded block.
    fn sample_block(
        &self,
        spec: &ModelSpec<M>,
        prefix: &Trajectory<M::State, M::Carry>,
        old_block: &[M::State],
        ys: &ObservationSeq<M::Obs>,
        delta: usize,
        rng: &mut SmcRng,
    ) -> Result<(Vec<M::State>, f64)>;

    /// `log λ_t(old_block | prefix, new_block)`.
    fn log_artificial(
        &self,
        spec: &ModelSpec<M>,
        prefix: &Trajectory<M::State, M::Carry>,
        old_block: &[M::State],
        new_block: &[M::State],
        ys: &ObservationSeq<M::Obs>,
    ) -> Result<f64>;
}

/// Draw the block from the model's trial chain; `λ` is the same chain's density.
#[derive(Debug, Clone, Copy, Default)]
pub struct SequentialBlock;

impl<M: Model> BlockProposal<M> for SequentialBlock {
    fn sample_block(
        &self,
        spec: &ModelSpec<M>,
        prefix: &Trajectory<M::State, M::Carry>,
        _old_block: &[M::State],
        ys: &ObservationSeq<M::Obs>,
        delta: usize,
        rng: &mut SmcRng,
    ) -> Result<(Vec<M::State>, f64)> {
        let mut path = prefix.clone();
        let mut block = Vec::with_capacity(delta + 1);
        let mut lq = 0.0;
        for _ in 0..=delta {
            let s = path.len();
            let (x, l) = spec
                .trial_at(s)
                .sample_with_log_density(&spec.model, path.last_carry(), s, ys.at(s), rng);
            lq += l;
            path = grow(&spec.model, &path, x.clone(), ys).0;
            block.push(x);
        }
        Ok((block, lq))
    }

    fn log_artificial(
        &self,
        spec: &ModelSpec<M>,
        prefix: &Trajectory<M::State, M::Carry>,
        old_block: &[M::State],
        _new_block: &[M::State],
        ys: &ObservationSeq<M::Obs>,
    ) -> Result<f64> {
        let mut path = prefix.clone();
        let mut l = 0.0;
        for x in old_block {
            let s = path.len();
            l += spec
                .trial_at(s)
                .log_density(&spec.model, path.last_carry(), s, ys.at(s), x);
            path = grow(&spec.model, &path, x.clone(), ys).0;
        }
        Ok(l)
    }
}

/// `q_t = π_{t+Δ}(x_{t:t+Δ} | x_{0:t-1})` and `λ_t = π_{t+Δ-1}(x_{t:t+Δ-1} | x_{0:t-1})`,
/// both by enumeration over a finite support.
#[derive(Debug, Clone, Copy, Default)]
pub struct OptimalBlock;

/// All blocks of `len` states after `prefix`, with their summed log-increments.
fn enumerate_blocks<M: Model>(
    model: &M,
    prefix: &Trajectory<M::State, M::Carry>,
    ys: &ObservationSeq<M::Obs>,
    len: usize,
) -> Result<Vec<(Vec<M::State>, f64)>> {
    let t = prefix.len();
    let width = finite_support(model, t, ys)?.len() as f64;
    let size = width.powi(len as i32);
    if size > ENUMERATION_LIMIT * width {
        return Err(SmcError::EnumerationLimit {
            size,
            limit: ENUMERATION_LIMIT * width,
        });
    }
    let mut out = Vec::new();
    let mut stack: Vec<(Trajectory<M::State, M::Carry>, Vec<M::State>, f64)> = vec![(prefix.clone(), Vec::new(), 0.0)];
    while let Some((path, block, l)) = stack.pop() {
        if block.len() == len {
            out.push((block, l));
            continue;
        }
        let s = path.len();
        let support = finite_support(model, s, ys)?;
        for x in support.iter().rev() {
            let (p, inc) = grow(model, &path, x.clone(), ys);
            let mut b = block.clone();
            b.push(x.clone());
            stack.push((p, b, l + inc));
        }
    }
    Ok(out)
}

impl<M: Model> BlockProposal<M> for OptimalBlock {
    fn sample_block(
        &self,
        spec: &ModelSpec<M>,
        prefix: &Trajectory<M::State, M::Carry>,
        _old_block: &[M::State],
        ys: &ObservationSeq<M::Obs>,
        delta: usize,
        rng: &mut SmcRng,
    ) -> Result<(Vec<M::State>, f64)> {
        let blocks = enumerate_blocks(&spec.model, prefix, ys, delta + 1)?;
        let logs: Vec<f64> = blocks.iter().map(|(_, l)| *l).collect();
        let lse = log_sum_exp(&logs);
        let i = sample_log_categorical(&logs, rng).ok_or(SmcError::DegeneratePopulation { t: prefix.len() })?;
        Ok((blocks[i].0.clone(), logs[i] - lse))
    }

    fn log_artificial(
        &self,
        spec: &ModelSpec<M>,
        prefix: &Trajectory<M::State, M::Carry>,
        old_block: &[M::State],
        _new_block: &[M::State],
        ys: &ObservationSeq<M::Obs>,
    ) -> Result<f64> {
        if old_block.is_empty() {
            return Ok(0.0);
        }
        let blocks = enumerate_blocks(&spec.model, prefix, ys, old_block.len())?;
        let logs: Vec<f64> = blocks.iter().map(|(_, l)| *l).collect();
        let lse = log_sum_exp(&logs);
        Ok(blocks
            .iter()
            .find(|(b, _)| b.as_slice() == old_block)
            .map_or(f64::NEG_INFINITY, |(_, l)| l - lse))
    }
}

/// Report of a block sampling step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BlockReport {
    /// Particles whose new weight is zero because `q` or `λ` vanished.
    pub zero_weight: usize,
}

/// Replace the last `Δ` states of every path (held to `t+Δ-1`) with a fresh block of `Δ+1`.
pub fn block_sampling_step<M: Model>(
    sys: &mut SystemOf<M>,
    spec: &ModelSpec<M>,
    ys: &ObservationSeq<M::Obs>,
    delta: usize,
    proposal: &dyn BlockProposal<M>,
    rng: &mut SmcRng,
) -> Result<BlockReport> {
    let n = sys.path_len();
    if n < delta {
        return Err(SmcError::LagExceedsHistory { lag: delta, depth: n });
    }
    let t = n - delta;
    ys.check_horizon(t + delta)?;
    let streams = StreamSet::from_rng(rng);
    let model = &spec.model;
    let out: Vec<(PathOf<M>, f64)> = sys
        .paths
        .par_iter()
        .enumerate()
        .map(|(j, path)| {
            let mut r = streams.stream(j);
            let prefix = path.truncated(t);
            let old_block = path.states_from(t);
            let (new_block, log_q) = proposal.sample_block(spec, &prefix, &old_block, ys, delta, &mut r)?;
            let log_lambda = proposal.log_artificial(spec, &prefix, &old_block, &new_block, ys)?;
            let mut fresh = prefix.clone();
            let mut log_new = 0.0;
            for x in &new_block {
                let (p, inc) = grow(model, &fresh, x.clone(), ys);
                log_new += inc;
                fresh = p;
            }
            let mut log_old = 0.0;
            let mut old = prefix.clone();
            for x in &old_block {
                let (p, inc) = grow(model, &old, x.clone(), ys);
                log_old += inc;
                old = p;
            }
            let inc = if log_q == f64::NEG_INFINITY || log_lambda == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                log_new + log_lambda - log_old - log_q
            };
            Ok((fresh, inc))
        })
        .collect::<Result<_>>()?;
    let mut report = BlockReport::default();
    for (j, (path, inc)) in out.into_iter().enumerate() {
        if inc == f64::NEG_INFINITY {
            report.zero_weight += 1;
        }
        sys.paths[j] = path;
        sys.log_w[j] += inc;
    }
    sys.log_aux = None;
    sys.log_res = None;
    check_population(&sys.log_w, t)?;
    Ok(report)
}
