//! Layered `R_Y`/CNOT ansatz.
//!
//! The circuit starts with one `R_Y` per qubit. Each extra layer is built so
//! that its CNOTs appear in mirrored pairs; with all of its angles at zero
//! the layer is the identity.
//!
//! * `Full`: for the pairs `(0,1), (2,3), …` and then `(1,2), (3,4), …`,
//!   each group applies `CNOT, R_Y⊗R_Y, CNOT, R_Y⊗R_Y` on its pairs; four
//!   angles per pair, `4 (n − 1)` per layer.
//! * `Reduced`: a CNOT ladder `0→1, 1→2, …`, one `R_Y` per qubit, then the
//!   ladder reversed; `n` angles per layer.
//!
//! Parameters are laid out initial layer first, then each extra layer in
//! gate order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::Circuit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerStyle {
    #[default]
    Full,
    Reduced,
}

impl LayerStyle {
    pub fn parameters_per_layer(self, n_qubits: usize) -> usize {
        match self {
            LayerStyle::Full => 4 * n_qubits.saturating_sub(1),
            LayerStyle::Reduced => n_qubits,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzSpec {
    pub n_qubits: usize,
    pub n_extra_layers: usize,
    pub layer_style: LayerStyle,
    pub parameters: Vec<f64>,
}

impl AnsatzSpec {
    pub fn parameter_count(n_qubits: usize, n_extra_layers: usize, style: LayerStyle) -> usize {
        n_qubits + n_extra_layers * style.parameters_per_layer(n_qubits)
    }

    pub fn expected_parameters(&self) -> usize {
        Self::parameter_count(self.n_qubits, self.n_extra_layers, self.layer_style)
    }
}

fn pairs(n: usize, first: usize) -> Vec<(usize, usize)> {
    (first..n.saturating_sub(1)).step_by(2).map(|a| (a, a + 1)).collect()
}

fn push_full_layer(circuit: &mut Circuit, n: usize, params: &mut impl Iterator<Item = f64>) -> Result<()> {
    for group in [pairs(n, 0), pairs(n, 1)] {
        for _ in 0..2 {
            for &(a, b) in &group {
                circuit.cnot(a, b)?;
            }
            for &(a, b) in &group {
                circuit.ry(a, params.next().expect("counted"))?;
                circuit.ry(b, params.next().expect("counted"))?;
            }
        }
    }
    Ok(())
}

fn push_reduced_layer(
    circuit: &mut Circuit,
    n: usize,
    params: &mut impl Iterator<Item = f64>,
) -> Result<()> {
    for q in 0..n.saturating_sub(1) {
        circuit.cnot(q, q + 1)?;
    }
    for q in 0..n {
        circuit.ry(q, params.next().expect("counted"))?;
    }
    for q in (0..n.saturating_sub(1)).rev() {
        circuit.cnot(q, q + 1)?;
    }
    Ok(())
}

pub fn build_ansatz_circuit(spec: &AnsatzSpec) -> Result<Circuit> {
    let expected = spec.expected_parameters();
    if spec.parameters.len() != expected {
        return Err(Error::InvalidInput(format!(
            "ansatz with {} qubits and {} extra {:?} layers needs {expected} parameters, got {}",
            spec.n_qubits,
            spec.n_extra_layers,
            spec.layer_style,
            spec.parameters.len()
        )));
    }
    let n = spec.n_qubits;
    let mut circuit = Circuit::new(n);
    let mut params = spec.parameters.iter().copied();
    for q in 0..n {
        circuit.ry(q, params.next().expect("counted"))?;
    }
    for _ in 0..spec.n_extra_layers {
        match spec.layer_style {
            LayerStyle::Full => push_full_layer(&mut circuit, n, &mut params)?,
            LayerStyle::Reduced => push_reduced_layer(&mut circuit, n, &mut params)?,
        }
    }
    Ok(circuit)
}
