//! Statevector simulation for the `R_Y` + CNOT gate set, shot sampling with
//! an optional global noise model, and ground-state overlap.
//!
//! Amplitude index `b` is the basis state whose qubit `q` reads bit `q` of
//! `b` (qubit 0 least significant).

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::solvers::MAX_BRUTE_FORCE_VARIABLES;

pub const MAX_QUBITS: usize = MAX_BRUTE_FORCE_VARIABLES;

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let mut sv = Self::zero(n_qubits)?;
        if index >= sv.amplitudes.len() {
            return Err(Error::InvalidInput(format!("basis index {index} out of range")));
        }
        sv.amplitudes[0] = Complex64::new(0.0, 0.0);
        sv.amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(sv)
    }

    /// Takes amplitudes as given and renormalizes them.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "amplitude count {dim} is not a power of two"
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_qubits(n_qubits)?;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Numerical("cannot normalize a zero or non-finite state".into()));
        }
        Ok(Self {
            n_qubits,
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    fn ry(&mut self, qubit: usize, theta: f64) {
        let (s, c) = (theta / 2.0).sin_cos();
        let stride = 1 << qubit;
        for block in self.amplitudes.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a0, *a1);
                *a0 = x * c - y * s;
                *a1 = x * s + y * c;
            }
        }
    }

    fn cnot(&mut self, control: usize, target: usize) {
        let (cm, tm) = (1usize << control, 1usize << target);
        for i in 0..self.amplitudes.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amplitudes.swap(i, i | tm);
            }
        }
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.check(self.n_qubits)?;
        match *gate {
            Gate::Ry { qubit, theta } => self.ry(qubit, theta),
            Gate::Cnot { control, target } => self.cnot(control, target),
        }
        Ok(())
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one qubit".into()));
    }
    if n > MAX_QUBITS {
        return Err(Error::Capacity {
            what: "statevector qubits",
            requested: n,
            limit: MAX_QUBITS,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    /// `[[cos θ/2, −sin θ/2], [sin θ/2, cos θ/2]]`
    Ry { qubit: usize, theta: f64 },
    Cnot { control: usize, target: usize },
}

impl Gate {
    fn check(&self, n_qubits: usize) -> Result<()> {
        match *self {
            Gate::Ry { qubit, .. } if qubit >= n_qubits => Err(Error::InvalidInput(format!(
                "RY on qubit {qubit} of a {n_qubits}-qubit register"
            ))),
            Gate::Cnot { control, target } if control >= n_qubits || target >= n_qubits => {
                Err(Error::InvalidInput(format!(
                    "CNOT({control}, {target}) on a {n_qubits}-qubit register"
                )))
            }
            Gate::Cnot { control, target } if control == target => Err(Error::InvalidInput(
                format!("CNOT control and target are both {control}"),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.check(self.n_qubits)?;
        self.gates.push(gate);
        Ok(self)
    }

    pub fn ry(&mut self, qubit: usize, theta: f64) -> Result<&mut Self> {
        self.push(Gate::Ry { qubit, theta })
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> Result<&mut Self> {
        self.push(Gate::Cnot { control, target })
    }

    pub fn extend(&mut self, other: &Circuit) -> Result<&mut Self> {
        for g in &other.gates {
            self.push(*g)?;
        }
        Ok(self)
    }

    pub fn count_ry(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::Ry { .. })).count()
    }

    pub fn count_cnot(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::Cnot { .. })).count()
    }
}

/// Runs `circuit` on `state` in gate order.
pub fn apply(circuit: &Circuit, mut state: Statevector) -> Result<Statevector> {
    if circuit.n_qubits != state.n_qubits {
        return Err(Error::InvalidInput(format!(
            "{}-qubit circuit on a {}-qubit state",
            circuit.n_qubits, state.n_qubits
        )));
    }
    for gate in &circuit.gates {
        state.apply_gate(gate)?;
    }
    Ok(state)
}

/// Global depolarizing mixture followed by independent symmetric readout
/// flips.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    pub readout_flip_prob: f64,
    pub depolarizing_mix: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            readout_flip_prob: 0.01,
            depolarizing_mix: 0.02,
        }
    }
}

impl NoiseModel {
    pub fn new(readout_flip_prob: f64, depolarizing_mix: f64) -> Result<Self> {
        let m = Self {
            readout_flip_prob,
            depolarizing_mix,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if !ok(self.readout_flip_prob) || !ok(self.depolarizing_mix) {
            return Err(Error::InvalidInput(format!(
                "noise probabilities must lie in [0, 1], got p_ro={} lambda={}",
                self.readout_flip_prob, self.depolarizing_mix
            )));
        }
        Ok(())
    }
}

/// Reusable sampler: holds the cumulative distribution of one state.
pub struct Sampler {
    n_qubits: usize,
    cdf: Vec<f64>,
}

impl Sampler {
    pub fn new(state: &Statevector) -> Self {
        Self::from_probabilities(state.n_qubits, state.amplitudes.iter().map(|a| a.norm_sqr()))
    }

    pub fn from_probabilities(n_qubits: usize, probs: impl Iterator<Item = f64>) -> Self {
        let mut acc = 0.0;
        let cdf = probs
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { n_qubits, cdf }
    }

    fn draw_ideal<R: Rng>(&self, rng: &mut R) -> u64 {
        let total = *self.cdf.last().expect("nonempty");
        let u = rng.random::<f64>() * total;
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.cdf.len() - 1) as u64
    }

    /// One measured bitstring per shot.
    pub fn sample<R: Rng>(&self, shots: usize, noise: Option<&NoiseModel>, rng: &mut R) -> Vec<u64> {
        let dim = 1u64 << self.n_qubits;
        (0..shots)
            .map(|_| {
                let Some(noise) = noise else {
                    return self.draw_ideal(rng);
                };
                let mut b = if rng.random::<f64>() < noise.depolarizing_mix {
                    rng.random_range(0..dim)
                } else {
                    self.draw_ideal(rng)
                };
                if noise.readout_flip_prob > 0.0 {
                    for q in 0..self.n_qubits {
                        if rng.random::<f64>() < noise.readout_flip_prob {
                            b ^= 1 << q;
                        }
                    }
                }
                b
            })
            .collect()
    }
}

/// Measured bitstrings together with their energies under the diagonal
/// Hamiltonian being measured.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotSample {
    pub bitstrings: Vec<u64>,
    pub energies: Vec<f64>,
}

impl ShotSample {
    /// Scores bitstrings against an energy table indexed by basis state.
    pub fn score(bitstrings: Vec<u64>, energy_table: &[f64]) -> Self {
        let energies = bitstrings.iter().map(|&b| energy_table[b as usize]).collect();
        Self {
            bitstrings,
            energies,
        }
    }
}

/// `shots` measurements of `state` in the computational basis.
pub fn sample(
    state: &Statevector,
    shots: usize,
    noise: Option<&NoiseModel>,
    seed: u64,
) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::InvalidInput("need at least one shot".into()));
    }
    if let Some(n) = noise {
        n.validate()?;
    }
    let mut rng = rng_from_seed(seed);
    Ok(Sampler::new(state).sample(shots, noise, &mut rng))
}

/// Total probability on the listed basis states.
pub fn ground_state_component(state: &Statevector, ground_states: &[u64]) -> f64 {
    ground_states
        .iter()
        .filter_map(|&g| state.amplitudes.get(g as usize))
        .map(|a| a.norm_sqr())
        .sum()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::SeedableRng;

    use super::*;

    fn random_state(n: usize, seed: u64) -> Statevector {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let amps = (0..1 << n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        Statevector::from_amplitudes(amps).unwrap()
    }

    fn max_diff(a: &Statevector, b: &Statevector) -> f64 {
        a.amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn ry_pi_flips_zero_to_one() {
        let mut c = Circuit::new(1);
        c.ry(0, PI).unwrap();
        let s = apply(&c, Statevector::zero(1).unwrap()).unwrap();
        assert!(s.amplitudes()[0].norm() < 1e-15);
        assert!((s.amplitudes()[1] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn ry_zero_is_identity() {
        let s = random_state(3, 1);
        let mut c = Circuit::new(3);
        c.ry(0, 0.0).unwrap().ry(2, 0.0).unwrap();
        assert_eq!(apply(&c, s.clone()).unwrap(), s);
    }

    #[test]
    fn ry_matrix_convention() {
        let theta = 0.7;
        let mut c = Circuit::new(1);
        c.ry(0, theta).unwrap();
        let s = apply(&c, Statevector::zero(1).unwrap()).unwrap();
        assert!((s.amplitudes()[0].re - (theta / 2.0).cos()).abs() < 1e-15);
        assert!((s.amplitudes()[1].re - (theta / 2.0).sin()).abs() < 1e-15);
    }

    #[test]
    fn cnot_with_control_set() {
        // qubit 0 (control) set, qubit 1 clear
        let mut c = Circuit::new(2);
        c.cnot(0, 1).unwrap();
        let s = apply(&c, Statevector::basis(2, 0b01).unwrap()).unwrap();
        assert_eq!(s, Statevector::basis(2, 0b11).unwrap());
        // control clear: nothing happens
        let s = apply(&c, Statevector::basis(2, 0b10).unwrap()).unwrap();
        assert_eq!(s, Statevector::basis(2, 0b10).unwrap());
    }

    #[test]
    fn gate_index_errors() {
        let mut c = Circuit::new(2);
        assert!(c.ry(2, 0.1).is_err());
        assert!(c.cnot(1, 1).is_err());
        assert!(c.cnot(0, 5).is_err());
        let c3 = Circuit::new(3);
        assert!(apply(&c3, Statevector::zero(2).unwrap()).is_err());
        assert!(matches!(Statevector::zero(25), Err(Error::Capacity { .. })));
    }

    #[test]
    fn norm_survives_long_circuits() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut c = Circuit::new(6);
        for _ in 0..1000 {
            if rng.random::<bool>() {
                c.ry(rng.random_range(0..6), rng.random_range(-6.0..6.0)).unwrap();
            } else {
                let a = rng.random_range(0..6);
                c.cnot(a, (a + 1 + rng.random_range(0..5)) % 6).unwrap();
            }
        }
        let s = apply(&c, random_state(6, 2)).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ry_inverse_and_cnot_involution() {
        let s = random_state(4, 3);
        let mut c = Circuit::new(4);
        c.ry(1, 1.234).unwrap().ry(1, -1.234).unwrap();
        assert!(max_diff(&apply(&c, s.clone()).unwrap(), &s) < 1e-12);
        let mut c = Circuit::new(4);
        c.cnot(3, 0).unwrap().cnot(3, 0).unwrap();
        assert_eq!(apply(&c, s.clone()).unwrap(), s);
    }

    #[test]
    fn ideal_sampling_of_basis_states() {
        let one = Statevector::basis(1, 1).unwrap();
        assert!(sample(&one, 100, None, 5).unwrap().iter().all(|&b| b == 1));
        let zero = Statevector::zero(1).unwrap();
        let flip = NoiseModel::new(1.0, 0.0).unwrap();
        assert!(sample(&zero, 100, Some(&flip), 5).unwrap().iter().all(|&b| b == 1));
        assert!(sample(&zero, 0, None, 5).is_err());
    }

    fn within_binomial(count: usize, shots: usize, p: f64) -> bool {
        let mean = shots as f64 * p;
        let sd = (shots as f64 * p * (1.0 - p)).sqrt();
        (count as f64 - mean).abs() <= 5.0 * sd + 1e-9
    }

    #[test]
    fn full_depolarization_is_uniform() {
        let shots = 10_000;
        let noise = NoiseModel::new(0.0, 1.0).unwrap();
        for s in [Statevector::zero(1).unwrap(), Statevector::basis(1, 1).unwrap()] {
            let zeros = sample(&s, shots, Some(&noise), 8).unwrap().iter().filter(|&&b| b == 0).count();
            assert!(within_binomial(zeros, shots, 0.5), "{zeros}");
        }
    }

    #[test]
    fn ideal_frequencies_match_probabilities() {
        let s = random_state(3, 11);
        let shots = 20_000;
        let draws = sample(&s, shots, None, 12).unwrap();
        for (b, p) in s.probabilities().iter().enumerate() {
            let count = draws.iter().filter(|&&d| d == b as u64).count();
            assert!(within_binomial(count, shots, *p), "state {b}: {count} vs {p}");
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = random_state(4, 2);
        let noise = NoiseModel::default();
        assert_eq!(
            sample(&s, 500, Some(&noise), 1).unwrap(),
            sample(&s, 500, Some(&noise), 1).unwrap()
        );
    }

    #[test]
    fn ground_state_overlap() {
        let uniform = Statevector::from_amplitudes(vec![Complex64::new(1.0, 0.0); 4]).unwrap();
        assert!((ground_state_component(&uniform, &[2]) - 0.25).abs() < 1e-15);
        let g = Statevector::basis(3, 5).unwrap();
        assert_eq!(ground_state_component(&g, &[5]), 1.0);
        assert!((ground_state_component(&uniform, &[0, 3]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn one_percent_component_is_found_in_1024_shots() {
        let p_hit = 1.0 - (1.0f64 - 0.01).powi(1024);
        assert!(p_hit > 0.99996, "{p_hit}");
    }
}
