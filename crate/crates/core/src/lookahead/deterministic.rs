//! Deterministic pilots.
//!
//! Each symbol of a finite support is followed by a greedy path that maximises
//! `π_s(x_s | x_{0:s-1})` step by step. The greedy weight
//! `U = π_{t+Δ}(x_{0:t-1}, a, pilot) / π_{t-1}(x_{0:t-1})` drives sampling. Three
//! weight tracks result:
//! - the concurrent weight, proper for `π_t`;
//! - the resampling weight `w_{t-1} Σ_i U_i`, used only as resampling priority;
//! - an auxiliary weight from one random pilot after the chosen `x_t`, proper for `π_{t+Δ}`.

use rayon::prelude::*;

use crate::error::Result;
use crate::model::{finite_support, Model, ModelSpec, ObservationSeq, Trajectory};
use crate::numeric::{log_sum_exp, sample_log_categorical};
use crate::particle::{check_population, PathOf, SystemOf};
use crate::rng::{SmcRng, StreamSet};

/// Follow the greedy path from `path` for `steps` steps; returns the summed log-increments.
pub fn greedy_extension<M: Model>(
    model: &M,
    path: &Trajectory<M::State, M::Carry>,
    ys: &ObservationSeq<M::Obs>,
    steps: usize,
) -> Result<(Trajectory<M::State, M::Carry>, f64)> {
    let mut p = path.clone();
    let mut total = 0.0;
    for _ in 0..steps {
        let s = p.len();
        let y = ys.at(s);
        let support = finite_support(model, s, ys)?;
        let i = model.greedy_choice(p.last_carry(), s, y, &support);
        let ext = model.extend(p.last_carry(), s, &support[i], y);
        total += ext.log_increment();
        p = p.push(support[i].clone(), ext.carry);
    }
    Ok((p, total))
}

/// Follow a random pilot from `q^pilot` for `steps` steps; returns `log(Π π-increments / Q)`.
pub fn random_extension<M: Model>(
    spec: &ModelSpec<M>,
    path: &Trajectory<M::State, M::Carry>,
    ys: &ObservationSeq<M::Obs>,
    steps: usize,
    rng: &mut SmcRng,
) -> (Trajectory<M::State, M::Carry>, f64) {
    let mut p = path.clone();
    let mut total = 0.0;
    for _ in 0..steps {
        let s = p.len();
        let y = ys.at(s);
        let (x, lq) = spec.pilot_at(s).sample_with_log_density(&spec.model, p.last_carry(), s, y, rng);
        let ext = spec.model.extend(p.last_carry(), s, &x, y);
        total += if lq == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            ext.log_increment() - lq
        };
        p = p.push(x, ext.carry);
    }
    (p, total)
}

/// Greedy weights of every symbol for one particle.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicScores<S> {
    pub candidates: Vec<S>,
    pub log_u: Vec<f64>,
    pub selected: usize,
}

pub fn deterministic_pilot_step<M: Model>(
    sys: &mut SystemOf<M>,
    spec: &ModelSpec<M>,
    ys: &ObservationSeq<M::Obs>,
    delta: usize,
    rng: &mut SmcRng,
) -> Result<Vec<DeterministicScores<M::State>>> {
    let t = sys.path_len();
    ys.check_horizon(t + delta)?;
    let streams = StreamSet::from_rng(rng);
    let model = &spec.model;
    let y = ys.at(t);
    let support = finite_support(model, t, ys)?.into_owned();
    let out: Vec<(PathOf<M>, [f64; 3], DeterministicScores<M::State>)> = sys
        .paths
        .par_iter()
        .zip(sys.log_w.par_iter())
        .enumerate()
        .map(|(j, (path, &lw))| {
            let mut rng = streams.stream(j);
            let mut heads = Vec::with_capacity(support.len());
            let mut log_now = Vec::with_capacity(support.len());
            let mut log_u = Vec::with_capacity(support.len());
            for a in &support {
                let ext = model.extend(path.last_carry(), t, a, y);
                let now = ext.log_increment();
                let head = path.push(a.clone(), ext.carry);
                let (_, fut) = greedy_extension(model, &head, ys, delta)?;
                heads.push(head);
                log_now.push(now);
                log_u.push(now + fut);
            }
            let lse = log_sum_exp(&log_u);
            let i = sample_log_categorical(&log_u, &mut rng).unwrap_or(0);
            let head = heads[i].clone();
            let weights = if lse.is_finite() {
                let w = lw + log_now[i] + lse - log_u[i];
                let res = lw + lse;
                let (_, aux_fut) = random_extension(spec, &head, ys, delta, &mut rng);
                [w, res, w + aux_fut]
            } else {
                [f64::NEG_INFINITY; 3]
            };
            Ok((
                head,
                weights,
                DeterministicScores {
                    candidates: support.clone(),
                    log_u,
                    selected: i,
                },
            ))
        })
        .collect::<Result<_>>()?;
    let m = out.len();
    let mut res = Vec::with_capacity(m);
    let mut aux = Vec::with_capacity(m);
    let mut scores = Vec::with_capacity(m);
    for (j, (path, [w, r, a], s)) in out.into_iter().enumerate() {
        sys.paths[j] = path;
        sys.log_w[j] = w;
        res.push(r);
        aux.push(a);
        scores.push(s);
    }
    sys.log_res = Some(res);
    sys.log_aux = Some(aux);
    check_population(&sys.log_w, t)?;
    Ok(scores)
}
