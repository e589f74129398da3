//! Brute-force enumeration of every state sequence of a finite model.

use crate::error::{Result, SmcError};
use crate::model::{finite_support, log_target, Model, ObservationSeq};
use crate::numeric::log_sum_exp;

/// Largest number of sequences enumerated.
pub const PATH_LIMIT: f64 = 1e7;

/// Every sequence `x_{0:len-1}` with its unnormalised `log π_{len-1}`.
pub fn enumerate_paths<M: Model>(model: &M, ys: &ObservationSeq<M::Obs>, len: usize) -> Result<Vec<(Vec<M::State>, f64)>> {
    let supports: Vec<Vec<M::State>> = (0..len)
        .map(|t| finite_support(model, t, ys).map(|s| s.into_owned()))
        .collect::<Result<_>>()?;
    let size: f64 = supports.iter().map(|s| s.len() as f64).product();
    if size > PATH_LIMIT {
        return Err(SmcError::EnumerationLimit { size, limit: PATH_LIMIT });
    }
    let mut out = Vec::with_capacity(size as usize);
    let mut idx = vec![0usize; len];
    loop {
        let states: Vec<M::State> = idx.iter().zip(&supports).map(|(&i, s)| s[i].clone()).collect();
        let lp = log_target(model, &states, ys);
        out.push((states, lp));
        // Odometer increment, last position fastest.
        let mut pos = len;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < supports[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// `E_{π_n}[h(x_{0:n})]` by enumeration.
pub fn expectation<M: Model>(
    model: &M,
    ys: &ObservationSeq<M::Obs>,
    n: usize,
    h: impl Fn(&[M::State]) -> f64,
) -> Result<f64> {
    let paths = enumerate_paths(model, ys, n + 1)?;
    let logs: Vec<f64> = paths.iter().map(|(_, l)| *l).collect();
    let lse = log_sum_exp(&logs);
    Ok(paths.iter().map(|(x, l)| (l - lse).exp() * h(x)).sum())
}

/// `π_n(x_t)` over the support at `t`.
pub fn posterior_marginal<M: Model>(
    model: &M,
    ys: &ObservationSeq<M::Obs>,
    t: usize,
    n: usize,
) -> Result<(Vec<M::State>, Vec<f64>)> {
    let support = finite_support(model, t, ys)?.into_owned();
    let paths = enumerate_paths(model, ys, n + 1)?;
    let logs: Vec<f64> = paths.iter().map(|(_, l)| *l).collect();
    let lse = log_sum_exp(&logs);
    let mut probs = vec![0.0; support.len()];
    for (x, l) in &paths {
        let i = support.iter().position(|s| *s == x[t]).expect("state in support");
        probs[i] += (l - lse).exp();
    }
    Ok((support, probs))
}

/// `π_{t+Δ}(x_t | x_{0:t-1} = prefix)` by enumerating every continuation of `prefix`.
pub fn conditional_lookahead<M: Model>(
    model: &M,
    ys: &ObservationSeq<M::Obs>,
    prefix: &[M::State],
    delta: usize,
) -> Result<(Vec<M::State>, Vec<f64>)> {
    let t = prefix.len();
    let support = finite_support(model, t, ys)?.into_owned();
    let paths = enumerate_paths(model, ys, t + delta + 1)?;
    let mut per = vec![Vec::new(); support.len()];
    for (x, l) in &paths {
        if &x[..t] == prefix {
            let i = support.iter().position(|s| *s == x[t]).expect("state in support");
            per[i].push(*l);
        }
    }
    let masses: Vec<f64> = per.iter().map(|v| log_sum_exp(v)).collect();
    let lse = log_sum_exp(&masses);
    Ok((support, masses.iter().map(|m| (m - lse).exp()).collect()))
}
