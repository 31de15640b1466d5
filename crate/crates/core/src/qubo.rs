//! The tracking cost function
//!
//! ```text
//! Q(T) = Σ_i a_i T_i + Σ_{i<j} b_ij T_i T_j,   T ∈ {0,1}^n
//! ```
//!
//! with one binary variable per triplet candidate, its diagonal Ising form
//! under `T_i = (1 - Z_i) / 2`, and a line-oriented text serialization.
//!
//! Coefficient scheme: a triplet's linear term grows as its quality drops,
//! `a_i = w_a (1 - q_i)` with `q_i = exp(-|κ_i| / c0) exp(-r_i / r0)`.
//! Quadruplet-linked pairs attract with `b_ij = -w_s (1 - (δ_ij / δ_max)^p)`
//! clamped to `[-w_s, 0]`, where `δ_ij` is the curvature difference. Any
//! other pair sharing a hit repels with `b_ij = +w_conflict`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::seeding::{QuadrupletLink, Triplet};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoefficientWeights {
    pub w_a: f64,
    pub c0: f64,
    pub r0: f64,
    pub w_s: f64,
    pub delta_max: f64,
    pub kappa: f64,
    pub w_conflict: f64,
}

impl Default for CoefficientWeights {
    fn default() -> Self {
        Self {
            w_a: 0.5,
            c0: 4.0,
            r0: 0.1,
            w_s: 1.0,
            delta_max: 1.0,
            kappa: 2.0,
            w_conflict: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Qubo {
    linear: Vec<f64>,
    couplings: BTreeMap<(usize, usize), f64>,
    triplet_ids: Vec<usize>,
}

impl Qubo {
    /// A QUBO with the given linear terms, no couplings and identity
    /// triplet ids.
    pub fn new(linear: Vec<f64>) -> Self {
        let triplet_ids = (0..linear.len()).collect();
        Self {
            linear,
            couplings: BTreeMap::new(),
            triplet_ids,
        }
    }

    pub fn with_triplet_ids(mut self, ids: Vec<usize>) -> Result<Self> {
        if ids.len() != self.n() {
            return Err(Error::InvalidInput(format!(
                "{} triplet ids for {} variables",
                ids.len(),
                self.n()
            )));
        }
        self.triplet_ids = ids;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.linear.len()
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    /// Couplings keyed by `(i, j)` with `i < j`; zeros are never stored.
    pub fn couplings(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.couplings
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.couplings.get(&key).copied().unwrap_or(0.0)
    }

    pub fn triplet_ids(&self) -> &[usize] {
        &self.triplet_ids
    }

    /// Sets `b_ij` (order of `i`, `j` irrelevant). A zero value removes the
    /// entry.
    pub fn set_coupling(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        if i == j || i >= self.n() || j >= self.n() {
            return Err(Error::InvalidInput(format!(
                "coupling ({i}, {j}) invalid for {} variables",
                self.n()
            )));
        }
        let key = if i < j { (i, j) } else { (j, i) };
        if value == 0.0 {
            self.couplings.remove(&key);
        } else {
            self.couplings.insert(key, value);
        }
        Ok(())
    }

    pub fn evaluate(&self, bits: &[bool]) -> Result<f64> {
        if bits.len() != self.n() {
            return Err(Error::InvalidInput(format!(
                "assignment has {} bits, QUBO has {} variables",
                bits.len(),
                self.n()
            )));
        }
        let lin: f64 = self
            .linear
            .iter()
            .zip(bits)
            .filter(|(_, &b)| b)
            .map(|(a, _)| a)
            .sum();
        let quad: f64 = self
            .couplings
            .iter()
            .filter(|(&(i, j), _)| bits[i] && bits[j])
            .map(|(_, b)| b)
            .sum();
        Ok(lin + quad)
    }

    /// Energy of the bitstring whose bit `i` is variable `i`; variables
    /// past bit 63 read as 0.
    pub fn evaluate_mask(&self, mask: u64) -> f64 {
        let lin: f64 = self
            .linear
            .iter()
            .enumerate()
            .filter(|&(i, _)| mask_bit(mask, i))
            .map(|(_, a)| a)
            .sum();
        let quad: f64 = self
            .couplings
            .iter()
            .filter(|(&(i, j), _)| mask_bit(mask, i) && mask_bit(mask, j))
            .map(|(_, b)| b)
            .sum();
        lin + quad
    }

    /// Adjacency lists `i -> [(j, b_ij)]`, symmetric.
    pub fn neighbors(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n()];
        for (&(i, j), &b) in &self.couplings {
            adj[i].push((j, b));
            adj[j].push((i, b));
        }
        adj
    }

    /// Restriction to `members` (full-QUBO variable indices, any order).
    /// Variable `k` of the result is `members[k]`; only couplings with both
    /// ends inside are kept.
    pub fn restrict(&self, members: &[usize]) -> Result<Qubo> {
        let pos: HashMap<usize, usize> = members.iter().enumerate().map(|(k, &m)| (m, k)).collect();
        if pos.len() != members.len() || members.iter().any(|&m| m >= self.n()) {
            return Err(Error::InvalidInput("restriction members invalid".into()));
        }
        let mut sub = Qubo::new(members.iter().map(|&m| self.linear[m]).collect())
            .with_triplet_ids(members.iter().map(|&m| self.triplet_ids[m]).collect())?;
        for (&(i, j), &b) in &self.couplings {
            if let (Some(&pi), Some(&pj)) = (pos.get(&i), pos.get(&j)) {
                sub.set_coupling(pi, pj, b)?;
            }
        }
        Ok(sub)
    }

    /// `n <count>` then `lin i a_i` for every variable and `quad i j b_ij`
    /// for every stored coupling; values carry 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = format!("n {}\n", self.n());
        for (i, a) in self.linear.iter().enumerate() {
            let _ = writeln!(out, "lin {i} {a:.16e}");
        }
        for (&(i, j), b) in &self.couplings {
            let _ = writeln!(out, "quad {i} {j} {b:.16e}");
        }
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Qubo> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut qubo: Option<Qubo> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tok: Vec<&str> = line.split_whitespace().collect();
            let num = |k: usize| -> Result<usize> {
                tok.get(k)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(line_no, format!("bad index in `{line}`")))
            };
            let val = |k: usize| -> Result<f64> {
                tok.get(k)
                    .and_then(|t| t.parse::<f64>().ok())
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(line_no, format!("bad value in `{line}`")))
            };
            match (tok[0], qubo.as_mut()) {
                ("n", None) if tok.len() == 2 => qubo = Some(Qubo::new(vec![0.0; num(1)?])),
                ("n", _) => return Err(err(line_no, "unexpected `n` line".into())),
                (_, None) => return Err(err(line_no, "missing `n <count>` header".into())),
                ("lin", Some(q)) if tok.len() == 3 => {
                    let i = num(1)?;
                    if i >= q.n() {
                        return Err(err(line_no, format!("variable {i} out of range")));
                    }
                    q.linear[i] = val(2)?;
                }
                ("quad", Some(q)) if tok.len() == 4 => {
                    let (i, j, b) = (num(1)?, num(2)?, val(3)?);
                    q.set_coupling(i, j, b).map_err(|e| err(line_no, e.to_string()))?;
                }
                _ => return Err(err(line_no, format!("unrecognized line `{line}`"))),
            }
        }
        qubo.ok_or_else(|| err(0, "empty QUBO file".into()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Qubo> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Qubo::from_text(&text, path)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub bits: Vec<bool>,
    pub energy: f64,
}

impl Assignment {
    pub fn evaluate(qubo: &Qubo, bits: Vec<bool>) -> Result<Self> {
        let energy = qubo.evaluate(&bits)?;
        Ok(Self { bits, energy })
    }

    pub fn from_mask(qubo: &Qubo, mask: u64) -> Self {
        Self {
            bits: mask_to_bits(mask, qubo.n()),
            energy: qubo.evaluate_mask(mask),
        }
    }

    /// `0`/`1` per variable, variable 0 first.
    pub fn bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

fn mask_bit(mask: u64, i: usize) -> bool {
    i < 64 && mask >> i & 1 == 1
}

pub fn mask_to_bits(mask: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| mask_bit(mask, i)).collect()
}

pub fn bits_to_mask(bits: &[bool]) -> u64 {
    bits.iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .fold(0, |m, (i, _)| m | 1 << i)
}

/// Builds the tracking QUBO over `triplets`; variable `i` is `triplets[i]`.
pub fn build_qubo(
    triplets: &[Triplet],
    links: &[QuadrupletLink],
    weights: &CoefficientWeights,
) -> Result<Qubo> {
    for t in triplets {
        if !t.curvature.is_finite() || !t.dz_slope_residual.is_finite() {
            return Err(Error::Numerical(format!(
                "triplet {} (hits {:?}) has non-finite features",
                t.id, t.hits
            )));
        }
    }
    let linear = triplets
        .iter()
        .map(|t| {
            let quality =
                (-(t.curvature.abs() / weights.c0)).exp() * (-(t.dz_slope_residual / weights.r0)).exp();
            weights.w_a * (1.0 - quality)
        })
        .collect();
    let mut qubo = Qubo::new(linear).with_triplet_ids(triplets.iter().map(|t| t.id).collect())?;

    let mut linked = std::collections::HashSet::new();
    for l in links {
        if l.triplet_i >= triplets.len() || l.triplet_j >= triplets.len() {
            return Err(Error::InvalidInput(format!(
                "link ({}, {}) refers past {} triplets",
                l.triplet_i,
                l.triplet_j,
                triplets.len()
            )));
        }
        let delta = (triplets[l.triplet_i].curvature - triplets[l.triplet_j].curvature).abs();
        let b = (-weights.w_s * (1.0 - (delta / weights.delta_max).powf(weights.kappa)))
            .clamp(-weights.w_s, 0.0);
        qubo.set_coupling(l.triplet_i, l.triplet_j, b)?;
        linked.insert((l.triplet_i.min(l.triplet_j), l.triplet_i.max(l.triplet_j)));
    }

    let mut by_hit: HashMap<u64, Vec<usize>> = HashMap::new();
    for (i, t) in triplets.iter().enumerate() {
        for &h in &t.hits {
            by_hit.entry(h).or_default().push(i);
        }
    }
    let mut conflicts = std::collections::BTreeSet::new();
    for members in by_hit.values() {
        for (x, &i) in members.iter().enumerate() {
            for &j in &members[x + 1..] {
                let key = (i.min(j), i.max(j));
                if !linked.contains(&key) {
                    conflicts.insert(key);
                }
            }
        }
    }
    for (i, j) in conflicts {
        qubo.set_coupling(i, j, weights.w_conflict)?;
    }
    Ok(qubo)
}

/// Diagonal Ising operator `offset + Σ c_i Z_i + Σ_{i<j} c_ij Z_i Z_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingHamiltonian {
    pub offset: f64,
    pub z_coeffs: Vec<f64>,
    pub zz_coeffs: BTreeMap<(usize, usize), f64>,
}

impl IsingHamiltonian {
    pub fn n(&self) -> usize {
        self.z_coeffs.len()
    }

    /// Energy of the basis state `mask`; a set bit is `z = -1`.
    pub fn energy_mask(&self, mask: u64) -> f64 {
        let z = |i: usize| if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
        let lin: f64 = self.z_coeffs.iter().enumerate().map(|(i, c)| c * z(i)).sum();
        let quad: f64 = self.zz_coeffs.iter().map(|(&(i, j), c)| c * z(i) * z(j)).sum();
        self.offset + lin + quad
    }

    /// Diagonal of the operator: energy of every basis state, index = mask.
    pub fn energy_table(&self) -> Vec<f64> {
        (0..1u64 << self.n()).map(|m| self.energy_mask(m)).collect()
    }
}

pub fn map_to_ising(qubo: &Qubo) -> IsingHamiltonian {
    let mut offset: f64 = qubo.linear().iter().map(|a| a / 2.0).sum();
    let mut z_coeffs: Vec<f64> = qubo.linear().iter().map(|a| -a / 2.0).collect();
    let mut zz_coeffs = BTreeMap::new();
    for (&(i, j), &b) in qubo.couplings() {
        offset += b / 4.0;
        z_coeffs[i] -= b / 4.0;
        z_coeffs[j] -= b / 4.0;
        zz_coeffs.insert((i, j), b / 4.0);
    }
    IsingHamiltonian {
        offset,
        z_coeffs,
        zz_coeffs,
    }
}
