//! Exact mean-squared error of lookahead estimators on a tabular HMM.
//!
//! `II(Δ) = E[(E(h(x_t) | y_{1:t+Δ}) - h(x_t))^2]`, computed by summing over every
//! observation sequence. The arithmetic is generic, so exact rationals can be used.

use std::ops::{Add, Div, Mul, Sub};

use num_traits::{One, Zero};

/// Arithmetic needed by the exact computation.
pub trait Field:
    Clone + Zero + One + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
}

impl<T> Field for T where
    T: Clone + Zero + One + PartialOrd + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Div<Output = T>
{
}

/// HMM given by probability tables: `x_0 ~ initial`, `y_s` emitted for `s >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularHmm<F> {
    pub initial: Vec<F>,
    pub transition: Vec<Vec<F>>,
    pub emission: Vec<Vec<F>>,
}

impl<F: Field> TabularHmm<F> {
    fn n(&self) -> usize {
        self.initial.len()
    }

    /// `p(x_t = a, y_{1:n})` for every `a`.
    fn joint(&self, t: usize, ys: &[usize]) -> Vec<F> {
        let k = self.n();
        let mut alpha = self.initial.clone();
        for &y in ys.iter().take(t) {
            alpha = (0..k)
                .map(|b| {
                    let mut acc = F::zero();
                    for (a, al) in alpha.iter().enumerate() {
                        acc = acc + al.clone() * self.transition[a][b].clone();
                    }
                    acc * self.emission[b][y].clone()
                })
                .collect();
        }
        let mut beta = vec![F::one(); k];
        for &y in ys[t..].iter().rev() {
            beta = (0..k)
                .map(|a| {
                    let mut acc = F::zero();
                    for (b, be) in beta.iter().enumerate() {
                        acc = acc + self.transition[a][b].clone() * self.emission[b][y].clone() * be.clone();
                    }
                    acc
                })
                .collect();
        }
        alpha.into_iter().zip(beta).map(|(a, b)| a * b).collect()
    }

    /// `II(Δ)` for the functional `h` of `x_t`.
    pub fn information_loss(&self, t: usize, delta: usize, h: &[F]) -> F {
        let n = t + delta;
        let symbols = self.emission[0].len();
        let mut ys = vec![0usize; n];
        let mut second_moment = F::zero();
        let mut explained = F::zero();
        loop {
            let joint = self.joint(t, &ys);
            let mut py = F::zero();
            let mut num = F::zero();
            for (a, p) in joint.iter().enumerate() {
                py = py + p.clone();
                num = num + h[a].clone() * p.clone();
                second_moment = second_moment + h[a].clone() * h[a].clone() * p.clone();
            }
            if py > F::zero() {
                explained = explained + num.clone() * num / py;
            }
            let mut pos = n;
            loop {
                if pos == 0 {
                    return second_moment - explained;
                }
                pos -= 1;
                ys[pos] += 1;
                if ys[pos] < symbols {
                    break;
                }
                ys[pos] = 0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uninformative_observations_give_prior_variance() {
        let hmm = TabularHmm {
            initial: vec![0.5, 0.5],
            transition: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            emission: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        };
        for d in 0..3 {
            let v: f64 = hmm.information_loss(1, d, &[0.0, 1.0]);
            assert!((v - 0.25).abs() < 1e-12);
        }
    }
}
