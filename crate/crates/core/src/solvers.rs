//! Classical QUBO solvers: exhaustive enumeration (the ground-state oracle)
//! and single-spin-flip simulated annealing.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{mask_to_bits, Assignment, Qubo};
use crate::rng::{derive_seed, rng_from_seed};

/// Largest QUBO the exhaustive solver (and the statevector) will take.
pub const MAX_BRUTE_FORCE_VARIABLES: usize = 24;

/// Absolute energy window within which states count as ground states.
pub const GROUND_STATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverTag {
    Brute,
    Anneal,
    Vqe,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub best: Assignment,
    /// Every minimizing bitstring as a mask (bit `i` = variable `i`).
    /// Only filled by the exhaustive solver.
    pub all_ground_states: Vec<u64>,
    pub solver_tag: SolverTag,
    /// Running best energy after each annealing restart.
    pub restart_best: Vec<f64>,
}

pub fn brute_force(qubo: &Qubo) -> Result<SolveResult> {
    let n = qubo.n();
    if n > MAX_BRUTE_FORCE_VARIABLES {
        return Err(Error::Capacity {
            what: "exhaustive enumeration",
            requested: n,
            limit: MAX_BRUTE_FORCE_VARIABLES,
        });
    }
    let adj = qubo.neighbors();
    // Gray-code walk with incrementally maintained local fields. Candidates
    // near the running minimum are re-evaluated exactly afterwards, so
    // accumulated rounding never decides membership.
    let screen = 1e-6;
    let mut field: Vec<f64> = qubo.linear().to_vec();
    let mut energy = 0.0;
    let mut mask = 0u64;
    let mut running_min = 0.0;
    let mut candidates = vec![0u64];
    for step in 1..1u64 << n {
        let i = step.trailing_zeros() as usize;
        let on = mask >> i & 1 == 0;
        let delta = if on { field[i] } else { -field[i] };
        energy += delta;
        mask ^= 1 << i;
        let sign = if on { 1.0 } else { -1.0 };
        for &(j, b) in &adj[i] {
            field[j] += sign * b;
        }
        if energy < running_min - screen {
            running_min = energy;
            candidates.retain(|&m| qubo.evaluate_mask(m) <= running_min + screen);
            candidates.push(mask);
        } else if energy <= running_min + screen {
            running_min = running_min.min(energy);
            candidates.push(mask);
        }
    }
    let exact: Vec<(u64, f64)> = candidates
        .into_iter()
        .map(|m| (m, qubo.evaluate_mask(m)))
        .collect();
    let min = exact.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    let mut ground: Vec<u64> = exact
        .iter()
        .filter(|e| e.1 <= min + GROUND_STATE_TOLERANCE)
        .map(|e| e.0)
        .collect();
    ground.sort_unstable();
    ground.dedup();
    Ok(SolveResult {
        best: Assignment::from_mask(qubo, ground[0]),
        all_ground_states: ground,
        solver_tag: SolverTag::Brute,
        restart_best: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub sweeps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub restarts: usize,
}

impl AnnealSchedule {
    /// `100 n` sweeps, beta from 0.1 to 10, 10 restarts.
    pub fn for_size(n: usize) -> Self {
        Self {
            sweeps: 100 * n.max(1),
            beta_start: 0.1,
            beta_end: 10.0,
            restarts: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 || self.restarts == 0 {
            return Err(Error::InvalidInput("sweeps and restarts must be at least 1".into()));
        }
        if !(self.beta_start > 0.0 && self.beta_start < self.beta_end && self.beta_end.is_finite())
        {
            return Err(Error::InvalidInput(format!(
                "need 0 < beta_start < beta_end, got {} and {}",
                self.beta_start, self.beta_end
            )));
        }
        Ok(())
    }

    fn beta(&self, sweep: usize) -> f64 {
        if self.sweeps == 1 {
            return self.beta_end;
        }
        let t = sweep as f64 / (self.sweeps - 1) as f64;
        self.beta_start * (self.beta_end / self.beta_start).powf(t)
    }
}

/// Best state over `schedule.restarts` independent geometric-ramp anneals.
/// Restart `r` draws from a generator seeded by `(seed, r)`, so the result
/// does not depend on how restarts are scheduled across threads.
pub fn simulated_annealing(qubo: &Qubo, schedule: &AnnealSchedule, seed: u64) -> Result<SolveResult> {
    schedule.validate()?;
    let n = qubo.n();
    if n == 0 {
        return Err(Error::InvalidInput("cannot anneal an empty QUBO".into()));
    }
    let adj = qubo.neighbors();
    let runs: Vec<(Vec<bool>, f64)> = (0..schedule.restarts)
        .into_par_iter()
        .map(|r| anneal_once(qubo, &adj, schedule, derive_seed(seed, &[r as u64])))
        .collect();

    let mut best = Assignment::evaluate(qubo, vec![false; n])?;
    let mut restart_best = Vec::with_capacity(runs.len());
    for (bits, _) in runs {
        let energy = qubo.evaluate(&bits)?;
        if energy < best.energy {
            best = Assignment { bits, energy };
        }
        restart_best.push(best.energy);
    }
    Ok(SolveResult {
        best,
        all_ground_states: Vec::new(),
        solver_tag: SolverTag::Anneal,
        restart_best,
    })
}

fn anneal_once(
    qubo: &Qubo,
    adj: &[Vec<(usize, f64)>],
    schedule: &AnnealSchedule,
    seed: u64,
) -> (Vec<bool>, f64) {
    let n = qubo.n();
    let mut rng = rng_from_seed(seed);
    let mut state: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
    let mut field = qubo.linear().to_vec();
    for (i, &on) in state.iter().enumerate() {
        if on {
            for &(j, b) in &adj[i] {
                field[j] += b;
            }
        }
    }
    let mut energy = qubo.evaluate(&state).expect("sized state");
    let mut best = (state.clone(), energy);

    for sweep in 0..schedule.sweeps {
        let beta = schedule.beta(sweep);
        for i in 0..n {
            let delta = if state[i] { -field[i] } else { field[i] };
            if delta <= 0.0 || rng.random::<f64>() < (-beta * delta).exp() {
                let sign = if state[i] { -1.0 } else { 1.0 };
                state[i] = !state[i];
                energy += delta;
                for &(j, b) in &adj[i] {
                    field[j] += sign * b;
                }
            }
        }
        if energy < best.1 - 1e-12 {
            best = (state.clone(), energy);
        }
    }
    best
}

/// Convenience used by the CLI and sweeps: masks for the ground states of a
/// small QUBO.
pub fn ground_state_bits(qubo: &Qubo) -> Result<Vec<Vec<bool>>> {
    Ok(brute_force(qubo)?
        .all_ground_states
        .iter()
        .map(|&m| mask_to_bits(m, qubo.n()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::map_to_ising;
    use rand::SeedableRng;

    fn random_qubo(n: usize, seed: u64) -> Qubo {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut q = Qubo::new((0..n).map(|_| rng.random_range(-2.0..2.0)).collect());
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < 0.3 {
                    q.set_coupling(i, j, rng.random_range(-2.0..2.0)).unwrap();
                }
            }
        }
        q
    }

    #[test]
    fn brute_force_small_example() {
        let mut q = Qubo::new(vec![1.0, -2.0]);
        q.set_coupling(0, 1, 3.0).unwrap();
        let r = brute_force(&q).unwrap();
        assert_eq!(r.best.bits, vec![false, true]);
        assert_eq!(r.best.energy, -2.0);
        assert_eq!(r.all_ground_states, vec![0b10]);
    }

    #[test]
    fn brute_force_degenerate_zero_qubo() {
        let q = Qubo::new(vec![0.0; 5]);
        let r = brute_force(&q).unwrap();
        assert_eq!(r.all_ground_states.len(), 32);
        assert_eq!(r.best.energy, 0.0);
    }

    #[test]
    fn brute_force_capacity() {
        let q = Qubo::new(vec![0.0; 25]);
        assert!(matches!(brute_force(&q), Err(Error::Capacity { .. })));
    }

    #[test]
    fn brute_force_matches_ising_energy_table() {
        for seed in 0..20 {
            let q = random_qubo(12, seed);
            // independent route: the Ising diagonal evaluated state by state
            let table = map_to_ising(&q).energy_table();
            let min = table.iter().copied().fold(f64::INFINITY, f64::min);
            let mut oracle: Vec<u64> = (0..table.len() as u64)
                .filter(|&m| table[m as usize] <= min + 1e-9)
                .collect();
            oracle.sort_unstable();
            let r = brute_force(&q).unwrap();
            assert!((r.best.energy - min).abs() < 1e-9);
            assert_eq!(r.all_ground_states, oracle, "seed {seed}");
            assert!((q.evaluate(&r.best.bits).unwrap() - r.best.energy).abs() < 1e-9);
        }
    }

    #[test]
    fn anneal_single_variable() {
        let q = Qubo::new(vec![-1.0]);
        for schedule in [AnnealSchedule::for_size(1), AnnealSchedule { sweeps: 1, beta_start: 0.5, beta_end: 1.0, restarts: 1 }] {
            let r = simulated_annealing(&q, &schedule, 3).unwrap();
            assert_eq!(r.best.bits, vec![true]);
            assert_eq!(r.best.energy, -1.0);
        }
    }

    #[test]
    fn anneal_is_deterministic_and_consistent() {
        let q = random_qubo(30, 9);
        let s = AnnealSchedule::for_size(30);
        let a = simulated_annealing(&q, &s, 17).unwrap();
        let b = simulated_annealing(&q, &s, 17).unwrap();
        assert_eq!(a, b);
        assert!((q.evaluate(&a.best.bits).unwrap() - a.best.energy).abs() < 1e-9);
        assert!(a.best.energy <= 0.0);
        assert!(a.restart_best.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn anneal_rejects_bad_schedules() {
        let q = Qubo::new(vec![1.0]);
        let bad = [
            AnnealSchedule { sweeps: 0, beta_start: 0.1, beta_end: 1.0, restarts: 1 },
            AnnealSchedule { sweeps: 5, beta_start: 1.0, beta_end: 0.1, restarts: 1 },
            AnnealSchedule { sweeps: 5, beta_start: 0.0, beta_end: 1.0, restarts: 1 },
            AnnealSchedule { sweeps: 5, beta_start: 0.1, beta_end: 1.0, restarts: 0 },
        ];
        for s in bad {
            assert!(simulated_annealing(&q, &s, 0).is_err(), "{s:?}");
        }
    }

    #[test]
    fn anneal_finds_random_minima() {
        for seed in 0..10 {
            let q = random_qubo(12, 100 + seed);
            let exact = brute_force(&q).unwrap();
            let sa = simulated_annealing(&q, &AnnealSchedule::for_size(12), seed).unwrap();
            assert!((sa.best.energy - exact.best.energy).abs() < 1e-9, "seed {seed}");
        }
    }
}
