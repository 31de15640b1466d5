//! Layer-grown VQE with a CVaR cost.
//!
//! Stage 0 optimizes the rotation layer from angles drawn uniformly in
//! `[0, 2π)`. Each later stage appends one layer at zero angles, which
//! leaves the prepared state untouched, and reoptimizes every parameter
//! with a fresh optimizer. All stages but the last get `stage_budget`
//! evaluations; the last one gets whatever remains of `total_budget`.
//! One evaluation is: build circuit → simulate → sample shots → CVaR.

pub mod ansatz;
pub mod cobyla;
pub mod cvar;

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use ansatz::{build_ansatz_circuit, AnsatzSpec, LayerStyle};
pub use cobyla::{Cobyla, Minimum};
pub use cvar::{cvar_cost, cvar_exact, cvar_of_energies, tail_count, CvarConfig};

use crate::error::{Error, Result};
use crate::quantum::{apply, ground_state_component, NoiseModel, Sampler, ShotSample, Statevector};
use crate::qubo::Qubo;
use crate::rng::{derive_seed, rng_from_seed};
use crate::solvers::{brute_force, MAX_BRUTE_FORCE_VARIABLES};

/// How a parameter vector is turned into a cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    /// `shots` measurements per evaluation, optionally through noise.
    Shots { noise: Option<NoiseModel> },
    /// The exact outcome distribution of the noiseless state.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VqeOptions {
    pub extra_layers: usize,
    pub layer_style: LayerStyle,
    pub cvar: CvarConfig,
    pub stage_budget: usize,
    pub total_budget: usize,
    pub estimator: Estimator,
    pub optimizer: Cobyla,
}

impl Default for VqeOptions {
    fn default() -> Self {
        Self {
            extra_layers: 1,
            layer_style: LayerStyle::Full,
            cvar: CvarConfig {
                alpha: 0.1,
                shots: 1024,
            },
            stage_budget: 128,
            total_budget: 1024,
            estimator: Estimator::Shots { noise: None },
            optimizer: Cobyla::default(),
        }
    }
}

impl VqeOptions {
    pub fn validate(&self) -> Result<()> {
        self.cvar.validate()?;
        if self.stage_budget == 0 {
            return Err(Error::InvalidInput("stage budget must be at least 1".into()));
        }
        if self.total_budget < self.extra_layers * self.stage_budget + 1 {
            return Err(Error::InvalidInput(format!(
                "total budget {} leaves nothing for the last stage ({} layers x {})",
                self.total_budget, self.extra_layers, self.stage_budget
            )));
        }
        if let Estimator::Shots { noise: Some(n) } = &self.estimator {
            n.validate()?;
        }
        Ok(())
    }

    /// Evaluations granted to each stage.
    pub fn stage_budgets(&self) -> Vec<usize> {
        let mut b = vec![self.stage_budget; self.extra_layers];
        b.push(self.total_budget - self.extra_layers * self.stage_budget);
        b
    }
}

/// The cost landscape of one QUBO under one estimator. Owns its shot RNG,
/// so successive calls draw fresh measurements.
pub struct VqeObjective<'q> {
    qubo: &'q Qubo,
    energies: Vec<f64>,
    alpha: f64,
    shots: usize,
    estimator: Estimator,
    rng: ChaCha8Rng,
}

impl<'q> VqeObjective<'q> {
    pub fn new(qubo: &'q Qubo, cvar: CvarConfig, estimator: Estimator, seed: u64) -> Result<Self> {
        cvar.validate()?;
        let n = qubo.n();
        if n == 0 {
            return Err(Error::InvalidInput("cannot run VQE on an empty QUBO".into()));
        }
        if n > MAX_BRUTE_FORCE_VARIABLES {
            return Err(Error::Capacity {
                what: "VQE qubits",
                requested: n,
                limit: MAX_BRUTE_FORCE_VARIABLES,
            });
        }
        let energies = (0..1u64 << n).map(|m| qubo.evaluate_mask(m)).collect();
        Ok(Self {
            qubo,
            energies,
            alpha: cvar.alpha,
            shots: cvar.shots,
            estimator,
            rng: rng_from_seed(seed),
        })
    }

    pub fn qubo(&self) -> &Qubo {
        self.qubo
    }

    /// Energy of every basis state, index = bitstring.
    pub fn energy_table(&self) -> &[f64] {
        &self.energies
    }

    pub fn state(&self, spec: &AnsatzSpec) -> Result<Statevector> {
        apply(&build_ansatz_circuit(spec)?, Statevector::zero(self.qubo.n())?)
    }

    pub fn cost(&mut self, spec: &AnsatzSpec) -> Result<f64> {
        let state = self.state(spec)?;
        Ok(match self.estimator {
            Estimator::Exact => cvar_exact(&state.probabilities(), &self.energies, self.alpha),
            Estimator::Shots { noise } => {
                let bits = Sampler::new(&state).sample(self.shots, noise.as_ref(), &mut self.rng);
                cvar_cost(&ShotSample::score(bits, &self.energies), self.alpha)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VqeRun {
    /// Cost of every evaluation, in order.
    pub cost_trace: Vec<f64>,
    /// First evaluation index of each stage.
    pub stage_boundaries: Vec<usize>,
    pub final_parameters: Vec<f64>,
    pub final_ansatz: AnsatzSpec,
    /// Probability of the exact ground states in the noiseless final state.
    pub final_ground_state_component: f64,
    /// Most probable bitstring of the final state.
    pub most_likely: u64,
    pub seed: u64,
}

impl VqeRun {
    pub fn stage_of(&self, iteration: usize) -> usize {
        self.stage_boundaries.partition_point(|&b| b <= iteration) - 1
    }

    /// `iteration,stage,cvar_cost` rows plus a footer row carrying the final
    /// ground-state component.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,stage,cvar_cost\n");
        for (i, c) in self.cost_trace.iter().enumerate() {
            let _ = writeln!(out, "{i},{},{c:.17e}", self.stage_of(i));
        }
        let _ = writeln!(
            out,
            "final_ground_state_component,,{:.17e}",
            self.final_ground_state_component
        );
        out
    }

    pub fn save_trace_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.trace_csv()).map_err(|e| Error::io(path, e))
    }
}

pub fn run_lvqe(qubo: &Qubo, options: &VqeOptions, seed: u64) -> Result<VqeRun> {
    let ground = brute_force(qubo)?.all_ground_states;
    run_lvqe_with_ground_states(qubo, options, seed, &ground)
}

/// [`run_lvqe`] with precomputed ground states, for callers that already
/// enumerated the QUBO.
pub fn run_lvqe_with_ground_states(
    qubo: &Qubo,
    options: &VqeOptions,
    seed: u64,
    ground_states: &[u64],
) -> Result<VqeRun> {
    options.validate()?;
    let n = qubo.n();
    let mut objective =
        VqeObjective::new(qubo, options.cvar, options.estimator, derive_seed(seed, &[1]))?;

    let mut init_rng = rng_from_seed(derive_seed(seed, &[0]));
    let mut params: Vec<f64> = (0..n).map(|_| init_rng.random_range(0.0..TAU)).collect();

    let mut cost_trace = Vec::with_capacity(options.total_budget);
    let mut stage_boundaries = Vec::new();
    let mut spec = AnsatzSpec {
        n_qubits: n,
        n_extra_layers: 0,
        layer_style: options.layer_style,
        parameters: Vec::new(),
    };
    for (stage, budget) in options.stage_budgets().into_iter().enumerate() {
        if stage > 0 {
            params.resize(params.len() + options.layer_style.parameters_per_layer(n), 0.0);
        }
        spec.n_extra_layers = stage;
        stage_boundaries.push(cost_trace.len());

        let mut failure = None;
        let result = options.optimizer.minimize(
            |x| {
                spec.parameters.clear();
                spec.parameters.extend_from_slice(x);
                match objective.cost(&spec) {
                    Ok(c) => c,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                }
            },
            &params,
            budget,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let Minimum { x, trace, .. } = result?;
        cost_trace.extend(trace);
        params = x;
    }

    spec.parameters = params.clone();
    let state = objective.state(&spec)?;
    let probs = state.probabilities();
    let most_likely = probs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i as u64)
        .unwrap_or(0);
    Ok(VqeRun {
        cost_trace,
        stage_boundaries,
        final_parameters: params,
        final_ansatz: spec,
        final_ground_state_component: ground_state_component(&state, ground_states),
        most_likely,
        seed,
    })
}
