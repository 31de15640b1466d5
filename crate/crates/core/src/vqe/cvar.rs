//! Conditional value at risk of a diagonal energy: the mean of the lowest
//! `α` fraction of outcomes. `α = 1` is the plain expectation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::ShotSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvarConfig {
    pub alpha: f64,
    pub shots: usize,
}

impl CvarConfig {
    pub fn new(alpha: f64, shots: usize) -> Result<Self> {
        let c = Self { alpha, shots };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidInput(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if self.shots == 0 {
            return Err(Error::InvalidInput("shots must be at least 1".into()));
        }
        Ok(())
    }
}

/// Number of lowest shots averaged: `ceil(α · shots)`, at least 1.
pub fn tail_count(alpha: f64, shots: usize) -> usize {
    // The slack absorbs products like 0.1 * 30 = 3.0000000000000004.
    let m = (alpha * shots as f64 - 1e-9).ceil() as usize;
    m.clamp(1, shots)
}

/// CVaR over shot energies. With `α = 1` this is the sample mean taken in
/// shot order.
pub fn cvar_cost(sample: &ShotSample, alpha: f64) -> f64 {
    cvar_of_energies(&sample.energies, alpha)
}

pub fn cvar_of_energies(energies: &[f64], alpha: f64) -> f64 {
    assert!(!energies.is_empty(), "CVaR of an empty sample");
    let m = tail_count(alpha, energies.len());
    if m == energies.len() {
        return energies.iter().sum::<f64>() / m as f64;
    }
    let mut sorted = energies.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    sorted[..m].iter().sum::<f64>() / m as f64
}

/// CVaR of the exact outcome distribution: the lowest-energy states filled
/// up to probability mass `α`, the boundary state taken fractionally.
pub fn cvar_exact(probabilities: &[f64], energies: &[f64], alpha: f64) -> f64 {
    if alpha >= 1.0 {
        return probabilities.iter().zip(energies).map(|(p, e)| p * e).sum();
    }
    let mut order: Vec<usize> = (0..energies.len()).collect();
    order.sort_unstable_by(|&a, &b| energies[a].total_cmp(&energies[b]));
    let mut mass = 0.0;
    let mut acc = 0.0;
    for i in order {
        let take = probabilities[i].min(alpha - mass);
        if take <= 0.0 {
            break;
        }
        acc += take * energies[i];
        mass += take;
    }
    acc / mass
}
