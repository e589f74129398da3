//! Multilevel sampling over a nested partition of a finite support.
//!
//! Level `l` splits the subset chosen at level `l-1` into children. Each child is
//! scored by a single pilot: a representative `x_t` from the child (random from the
//! restricted `q^pilot`, or greedy) followed by a path to `t+Δ`. A child is chosen in
//! proportion to its pilot weight and the walk continues until a singleton remains.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmcError};
use crate::model::proposal::sample_restricted;
use crate::model::{finite_support, Model, ModelSpec, ObservationSeq, Trajectory};
use crate::numeric::{log_sum_exp, sample_log_categorical};
use crate::particle::{check_population, PathOf, SystemOf};
use crate::rng::{SmcRng, StreamSet};

use super::deterministic::{greedy_extension, random_extension};

/// Nested partition `C_{l,i}` of support indices `0..n`.
///
/// Level 0 is the whole support and the last level holds singletons.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    levels: Vec<Vec<Vec<usize>>>,
    children: Vec<Vec<Vec<usize>>>,
    size: usize,
}

impl Partition {
    /// Build from the subsets of levels `1..=L`; level 0 is implied.
    pub fn new(size: usize, levels: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        let mut all = vec![vec![(0..size).collect::<Vec<_>>()]];
        all.extend(levels);
        for (l, subsets) in all.iter().enumerate() {
            let mut seen = vec![false; size];
            for s in subsets {
                if s.is_empty() {
                    return Err(SmcError::InvalidPartition(format!("empty subset at level {l}")));
                }
                for &i in s {
                    if i >= size || seen[i] {
                        return Err(SmcError::InvalidPartition(format!(
                            "level {l} is not a partition of 0..{size}"
                        )));
                    }
                    seen[i] = true;
                }
            }
            if seen.iter().any(|s| !s) {
                return Err(SmcError::InvalidPartition(format!("level {l} does not cover the support")));
            }
        }
        if all.last().unwrap().iter().any(|s| s.len() != 1) {
            return Err(SmcError::InvalidPartition("last level must hold singletons".into()));
        }
        let mut children = Vec::with_capacity(all.len() - 1);
        for l in 0..all.len() - 1 {
            let mut kids = vec![Vec::new(); all[l].len()];
            for (c, sub) in all[l + 1].iter().enumerate() {
                let parent = all[l]
                    .iter()
                    .position(|p| sub.iter().all(|i| p.contains(i)))
                    .ok_or_else(|| {
                        SmcError::InvalidPartition(format!("subset {c} of level {} straddles parents", l + 1))
                    })?;
                kids[parent].push(c);
            }
            children.push(kids);
        }
        Ok(Partition {
            levels: all,
            children,
            size,
        })
    }

    /// Every symbol in its own subset at level 1.
    pub fn flat(size: usize) -> Self {
        Partition::new(size, vec![(0..size).map(|i| vec![i]).collect()]).expect("flat partition is valid")
    }

    /// Number of levels below the root.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn subset(&self, level: usize, index: usize) -> &[usize] {
        &self.levels[level][index]
    }

    pub fn children(&self, level: usize, index: usize) -> &[usize] {
        &self.children[level][index]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PilotKind {
    Random,
    Deterministic,
}

/// Per-step summary.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MultilevelReport {
    /// Pilot evaluations per particle, `Σ_l n(I_{l-1})`.
    pub evaluations: usize,
}

fn score_pilot<M: Model>(
    spec: &ModelSpec<M>,
    path: &Trajectory<M::State, M::Carry>,
    ys: &ObservationSeq<M::Obs>,
    members: &[M::State],
    delta: usize,
    kind: PilotKind,
    rng: &mut SmcRng,
) -> Result<(usize, f64)> {
    let model = &spec.model;
    let t = path.len();
    let y = ys.at(t);
    let prev = path.last_carry();
    let (i, log_q) = match kind {
        PilotKind::Random => match sample_restricted(spec.pilot_at(t), model, prev, t, y, members, rng) {
            Some(v) => v,
            None => return Ok((0, f64::NEG_INFINITY)),
        },
        PilotKind::Deterministic => (model.greedy_choice(prev, t, y, members), 0.0),
    };
    let ext = model.extend(prev, t, &members[i], y);
    let now = ext.log_increment() - log_q;
    let head = path.push(members[i].clone(), ext.carry);
    let fut = match kind {
        PilotKind::Random => random_extension(spec, &head, ys, delta, rng).1,
        PilotKind::Deterministic => greedy_extension(model, &head, ys, delta)?.1,
    };
    Ok((i, now + fut))
}

pub fn multilevel_step<M: Model>(
    sys: &mut SystemOf<M>,
    spec: &ModelSpec<M>,
    ys: &ObservationSeq<M::Obs>,
    partition: &Partition,
    delta: usize,
    kind: PilotKind,
    rng: &mut SmcRng,
) -> Result<MultilevelReport> {
    let t = sys.path_len();
    ys.check_horizon(t + delta)?;
    let streams = StreamSet::from_rng(rng);
    let model = &spec.model;
    let y = ys.at(t);
    let support = finite_support(model, t, ys)?.into_owned();
    if support.len() != 1 && support.len() != partition.size() {
        return Err(SmcError::InvalidPartition(format!(
            "partition covers {} symbols but the support has {}",
            partition.size(),
            support.len()
        )));
    }
    let out: Vec<(PathOf<M>, f64, f64, usize)> = sys
        .paths
        .par_iter()
        .zip(sys.log_w.par_iter())
        .enumerate()
        .map(|(j, (path, &lw))| {
            let mut rng = streams.stream(j);
            if support.len() == 1 {
                // A known symbol: nothing to choose, the pilot only informs the auxiliary weight.
                let (_, log_u) = score_pilot(spec, path, ys, &support, delta, kind, &mut rng)?;
                let ext = model.extend(path.last_carry(), t, &support[0], y);
                let w = lw + ext.log_increment();
                return Ok((path.push(support[0].clone(), ext.carry), w, lw + log_u, 1));
            }
            let mut current = 0;
            let mut log_q = 0.0;
            let mut last_u = 0.0;
            let mut evals = 0;
            for level in 1..=partition.depth() {
                let kids = partition.children(level - 1, current);
                let mut scores = Vec::with_capacity(kids.len());
                for &c in kids {
                    let members: Vec<M::State> = partition
                        .subset(level, c)
                        .iter()
                        .map(|&i| support[i].clone())
                        .collect();
                    scores.push(score_pilot(spec, path, ys, &members, delta, kind, &mut rng)?.1);
                }
                evals += kids.len();
                let lse = log_sum_exp(&scores);
                let pick = match sample_log_categorical(&scores, &mut rng) {
                    Some(p) => p,
                    None => {
                        let a = &support[partition.subset(level, kids[0])[0]];
                        let ext = model.extend(path.last_carry(), t, a, y);
                        return Ok((path.push(a.clone(), ext.carry), f64::NEG_INFINITY, f64::NEG_INFINITY, evals));
                    }
                };
                log_q += scores[pick] - lse;
                last_u = scores[pick];
                current = kids[pick];
            }
            let a = &support[partition.subset(partition.depth(), current)[0]];
            let ext = model.extend(path.last_carry(), t, a, y);
            let w = lw + ext.log_increment() - log_q;
            let aux = lw + last_u - log_q;
            Ok((path.push(a.clone(), ext.carry), w, aux, evals))
        })
        .collect::<Result<_>>()?;
    let mut aux = Vec::with_capacity(out.len());
    let mut evaluations = 0;
    for (j, (path, w, a, e)) in out.into_iter().enumerate() {
        sys.paths[j] = path;
        sys.log_w[j] = w;
        aux.push(a);
        evaluations = evaluations.max(e);
    }
    sys.log_aux = Some(aux);
    sys.log_res = None;
    check_population(&sys.log_w, t)?;
    Ok(MultilevelReport { evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lookahead::testing::{grown, hmm};
    use crate::rng::seeded;

    #[test]
    fn flat_partition_has_one_level_of_singletons() {
        let p = Partition::flat(3);
        assert_eq!((p.depth(), p.size()), (1, 3));
        assert_eq!(p.subset(0, 0), &[0, 1, 2]);
        assert_eq!(p.children(0, 0), &[0, 1, 2]);
        assert_eq!(p.subset(1, 2), &[2]);
    }

    #[test]
    fn evaluations_count_children_along_the_walk() {
        let (spec, ys) = hmm(15, 6);
        let mut sys = grown(&spec, &ys, 4, 2);
        let flat = multilevel_step(&mut sys, &spec, &ys, &Partition::flat(3), 1, PilotKind::Random, &mut seeded(1)).unwrap();
        assert_eq!(flat.evaluations, 3);

        let nested = Partition::new(3, vec![vec![vec![0], vec![1, 2]], vec![vec![0], vec![1], vec![2]]]).unwrap();
        let report = multilevel_step(&mut sys, &spec, &ys, &nested, 1, PilotKind::Deterministic, &mut seeded(2)).unwrap();
        assert!(report.evaluations == 2 || report.evaluations == 4);
        assert_eq!(sys.path_len(), 4);
    }

    #[test]
    fn partition_must_cover_the_support() {
        let (spec, ys) = hmm(16, 6);
        let mut sys = grown(&spec, &ys, 2, 1);
        assert!(matches!(
            multilevel_step(&mut sys, &spec, &ys, &Partition::flat(4), 0, PilotKind::Random, &mut seeded(3)),
            Err(SmcError::InvalidPartition(_))
        ));
    }
}
