//! Experiment configuration, read from TOML.
//!
//! Every section and key is optional and falls back to the desk-scale
//! defaults; unknown keys are rejected. `key.path=value` overrides (with
//! `value` in TOML syntax) are applied to the parsed document before it is
//! checked, so they obey the same rules as the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detector::{DetectorGeometry, GeneratorOptions};
use crate::error::{Error, Result};
use crate::quantum::{NoiseModel, MAX_QUBITS};
use crate::qubo::CoefficientWeights;
use crate::seeding::SeedingCuts;
use crate::slicing::SliceReference;
use crate::solvers::{AnnealSchedule, SolverTag};
use crate::vqe::LayerStyle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub layer_radii: Vec<f64>,
    pub half_length_z: f64,
    pub magnetic_field: f64,
    pub smearing_sigma: f64,
    pub hit_efficiency: f64,
    pub noise_hits_per_layer: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        let g = DetectorGeometry::default();
        let o = GeneratorOptions::default();
        Self {
            layer_radii: g.layer_radii().to_vec(),
            half_length_z: g.half_length_z(),
            magnetic_field: g.magnetic_field(),
            smearing_sigma: o.smearing_sigma,
            hit_efficiency: o.hit_efficiency,
            noise_hits_per_layer: o.noise_hits_per_layer,
        }
    }
}

impl DetectorConfig {
    pub fn geometry(&self) -> Result<DetectorGeometry> {
        DetectorGeometry::new(self.layer_radii.clone(), self.half_length_z, self.magnetic_field)
    }

    pub fn generator_options(&self) -> GeneratorOptions {
        GeneratorOptions {
            smearing_sigma: self.smearing_sigma,
            hit_efficiency: self.hit_efficiency,
            noise_hits_per_layer: self.noise_hits_per_layer,
        }
    }
}

/// Annealing schedule with the sweep count scaled by problem size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnealConfig {
    pub sweeps_per_variable: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub restarts: usize,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        let s = AnnealSchedule::for_size(1);
        Self {
            sweeps_per_variable: s.sweeps,
            beta_start: s.beta_start,
            beta_end: s.beta_end,
            restarts: s.restarts,
        }
    }
}

impl AnnealConfig {
    pub fn schedule(&self, n: usize) -> AnnealSchedule {
        AnnealSchedule {
            sweeps: self.sweeps_per_variable * n.max(1),
            beta_start: self.beta_start,
            beta_end: self.beta_end,
            restarts: self.restarts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SizeSweepConfig {
    pub densities: Vec<usize>,
    pub slice_sizes: Vec<usize>,
    pub n_events: usize,
    pub solver: SolverTag,
    /// Also solve each full QUBO and report it as slice size `full`.
    pub include_full: bool,
    pub slice_reference: SliceReference,
}

impl Default for SizeSweepConfig {
    fn default() -> Self {
        Self {
            densities: vec![20, 50, 100, 200],
            slice_sizes: vec![16, 32, 64, 128],
            n_events: 10,
            solver: SolverTag::Anneal,
            include_full: true,
            slice_reference: SliceReference::InnermostHit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VqeSweepConfig {
    /// Track density of the events the sub-QUBOs are cut from.
    pub density: usize,
    pub slice_sizes: Vec<usize>,
    pub alphas: Vec<f64>,
    pub reps: Vec<usize>,
    /// Noise settings to run: `false` ideal, `true` with `noise_model`.
    pub noise: Vec<bool>,
    pub noise_model: NoiseModel,
    pub shots: usize,
    pub stage_budget: usize,
    pub total_budget: usize,
    pub n_slices: usize,
    pub n_seeds: usize,
    pub layer_style: LayerStyle,
    pub slice_reference: SliceReference,
}

impl Default for VqeSweepConfig {
    fn default() -> Self {
        Self {
            density: 50,
            slice_sizes: vec![8, 12, 16, 20],
            alphas: vec![0.1, 1.0],
            reps: vec![0, 1, 2],
            noise: vec![false, true],
            noise_model: NoiseModel::default(),
            shots: 1024,
            stage_budget: 128,
            total_budget: 1024,
            n_slices: 10,
            n_seeds: 5,
            layer_style: LayerStyle::Full,
            slice_reference: SliceReference::InnermostHit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Seed for `generate` and `solve` when none is given on the command
    /// line. Sweeps always take an explicit seed.
    pub master_seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub detector: DetectorConfig,
    pub seeding: SeedingCuts,
    pub qubo: CoefficientWeights,
    pub anneal: AnnealConfig,
    pub size_sweep: SizeSweepConfig,
    pub vqe: VqeSweepConfig,
}

fn nonempty<T>(name: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("{name} must not be empty")));
    }
    Ok(())
}

fn slice_sizes_ok(name: &str, sizes: &[usize]) -> Result<()> {
    nonempty(name, sizes)?;
    if let Some(k) = sizes.iter().find(|&&k| k < 4 || !k.is_multiple_of(2)) {
        return Err(Error::Config(format!("{name}: slice size {k} must be even and at least 4")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: Self = toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, overrides).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.detector.geometry()?;
        let s = &self.size_sweep;
        nonempty("size_sweep.densities", &s.densities)?;
        slice_sizes_ok("size_sweep.slice_sizes", &s.slice_sizes)?;
        if s.n_events == 0 {
            return Err(Error::Config("size_sweep.n_events must be at least 1".into()));
        }
        if s.solver == SolverTag::Vqe {
            return Err(Error::Config(
                "size_sweep.solver must be \"brute\" or \"anneal\"".into(),
            ));
        }
        self.anneal.schedule(1).validate()?;

        let v = &self.vqe;
        slice_sizes_ok("vqe.slice_sizes", &v.slice_sizes)?;
        if let Some(&k) = v.slice_sizes.iter().find(|&&k| k > MAX_QUBITS) {
            return Err(Error::Capacity {
                what: "vqe.slice_sizes",
                requested: k,
                limit: MAX_QUBITS,
            });
        }
        nonempty("vqe.alphas", &v.alphas)?;
        nonempty("vqe.reps", &v.reps)?;
        nonempty("vqe.noise", &v.noise)?;
        for &a in &v.alphas {
            crate::vqe::CvarConfig::new(a, v.shots)?;
        }
        if v.n_slices == 0 || v.n_seeds == 0 || v.density == 0 {
            return Err(Error::Config("vqe.density, n_slices and n_seeds must be at least 1".into()));
        }
        let max_reps = v.reps.iter().copied().max().unwrap_or(0);
        if v.stage_budget == 0 || v.total_budget < max_reps * v.stage_budget + 1 {
            return Err(Error::Config(format!(
                "vqe.total_budget {} is too small for {max_reps} added layers of {} evaluations",
                v.total_budget, v.stage_budget
            )));
        }
        v.noise_model.validate()?;
        Ok(())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Applies one `dotted.key=value` override to a raw document.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let parsed: toml::Table = format!("v = {raw}").parse().or_else(|_| {
        // Bare words are taken as strings: `solver=brute`.
        format!("v = {:?}", raw).parse()
    })
    .map_err(|e: toml::de::Error| Error::Config(format!("override {key}: {e}")))?;
    let value = parsed["v"].clone();

    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed override key {key:?}")));
    }
    let (last, path) = parts.split_last().expect("split yields one part");
    let mut table = doc;
    for p in path {
        table = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {key}: {p} is not a section")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}
