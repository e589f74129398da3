//! Finite hidden Markov model with discrete emissions.

use std::borrow::Cow;

use rand::Rng;

use crate::error::{Result, SmcError};
use crate::model::{Extension, Model, ObservationSeq};
use crate::rng::SmcRng;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteHmm {
    initial: Vec<f64>,
    transition: Vec<Vec<f64>>,
    emission: Vec<Vec<f64>>,
    states: Vec<usize>,
}

fn check_stochastic(row: &[f64], what: &str) -> Result<()> {
    let s: f64 = row.iter().sum();
    if row.iter().any(|p| *p < 0.0 || !p.is_finite()) || (s - 1.0).abs() > 1e-9 {
        return Err(SmcError::Config(format!("{what} is not a probability vector")));
    }
    Ok(())
}

fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

impl DiscreteHmm {
    pub fn new(initial: Vec<f64>, transition: Vec<Vec<f64>>, emission: Vec<Vec<f64>>) -> Result<Self> {
        let n = initial.len();
        check_stochastic(&initial, "initial distribution")?;
        if transition.len() != n || emission.len() != n {
            return Err(SmcError::Config("matrix sizes disagree".into()));
        }
        for row in &transition {
            if row.len() != n {
                return Err(SmcError::Config("transition matrix is not square".into()));
            }
            check_stochastic(row, "transition row")?;
        }
        let k = emission[0].len();
        for row in &emission {
            if row.len() != k {
                return Err(SmcError::Config("ragged emission matrix".into()));
            }
            check_stochastic(row, "emission row")?;
        }
        Ok(DiscreteHmm {
            initial,
            transition,
            emission,
            states: (0..n).collect(),
        })
    }

    /// A model with Dirichlet(1)-like random rows.
    pub fn random<R: Rng + ?Sized>(n_states: usize, n_symbols: usize, rng: &mut R) -> Self {
        let mut row = |k: usize| -> Vec<f64> {
            let v: Vec<f64> = (0..k).map(|_| -(rng.gen::<f64>().max(1e-12)).ln()).collect();
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        };
        let initial = row(n_states);
        let transition = (0..n_states).map(|_| row(n_states)).collect();
        let emission = (0..n_states).map(|_| row(n_symbols)).collect();
        DiscreteHmm::new(initial, transition, emission).expect("random rows are stochastic")
    }

    pub fn n_states(&self) -> usize {
        self.initial.len()
    }

    pub fn n_symbols(&self) -> usize {
        self.emission[0].len()
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn emission(&self) -> &[Vec<f64>] {
        &self.emission
    }

    /// Draw `x_{0:T}` and `y_{1:T}`.
    pub fn simulate<R: Rng + ?Sized>(&self, horizon: usize, rng: &mut R) -> (Vec<usize>, ObservationSeq<usize>) {
        let mut xs = vec![draw(&self.initial, rng)];
        let mut ys = Vec::with_capacity(horizon);
        for _ in 1..=horizon {
            let x = draw(&self.transition[*xs.last().unwrap()], rng);
            ys.push(draw(&self.emission[x], rng));
            xs.push(x);
        }
        (xs, ObservationSeq::new(ys))
    }
}

impl Model for DiscreteHmm {
    type State = usize;
    type Obs = usize;
    type Carry = usize;

    fn sample_transition(&self, prev: Option<&usize>, _t: usize, rng: &mut SmcRng) -> usize {
        match prev {
            None => draw(&self.initial, rng),
            Some(&p) => draw(&self.transition[p], rng),
        }
    }

    fn extend(&self, prev: Option<&usize>, _t: usize, x: &usize, y: Option<&usize>) -> Extension<usize> {
        let p = match prev {
            None => self.initial[*x],
            Some(&a) => self.transition[a][*x],
        };
        let log_observation = y.map_or(0.0, |&o| self.emission[*x][o].ln());
        Extension {
            log_transition: p.ln(),
            log_observation,
            carry: *x,
        }
    }

    fn support(&self, _t: usize, _y: Option<&usize>) -> Option<Cow<'_, [usize]>> {
        Some(Cow::Borrowed(&self.states))
    }

    fn is_markovian(&self) -> bool {
        true
    }

    fn markov_carry(&self, x: &usize) -> Option<usize> {
        Some(*x)
    }

    fn smoothing_key(&self, x: &usize, _carry: &usize) -> Option<Vec<f64>> {
        Some(vec![*x as f64])
    }

    fn summary_scalar(&self, x: &usize, _carry: &usize) -> Option<f64> {
        Some(*x as f64)
    }
}
