//! Doublet-level tracking scores and VQE success statistics.

use std::collections::{BTreeSet, HashMap};

use crate::detector::Event;
use crate::error::{Error, Result};
use crate::seeding::Triplet;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Minimum ground-state probability that counts as a VQE success.
pub const SUCCESS_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingScore {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub efficiency: f64,
    pub purity: f64,
    /// Nothing was selected; purity is reported as 1.
    pub no_positives: bool,
    /// No truth doublet was reachable; efficiency is reported as 1.
    pub no_reference: bool,
}

impl TrackingScore {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        Self {
            tp,
            fp,
            fn_,
            efficiency: ratio(tp, tp + fn_),
            purity: ratio(tp, tp + fp),
            no_positives: tp + fp == 0,
            no_reference: tp + fn_ == 0,
        }
    }
}

/// Truth doublets of `event`: consecutive-layer hit pairs of one particle,
/// ordered inner to outer.
fn truth_doublets(event: &Event) -> BTreeSet<(u64, u64)> {
    let mut by_particle: HashMap<u64, Vec<(usize, u64)>> = HashMap::new();
    for h in &event.hits {
        if let Some(p) = h.truth_particle {
            by_particle.entry(p).or_default().push((h.layer, h.id));
        }
    }
    let mut out = BTreeSet::new();
    for hits in by_particle.values_mut() {
        hits.sort_unstable();
        for w in hits.windows(2) {
            if w[1].0 == w[0].0 + 1 {
                out.insert((w[0].1, w[1].1));
            }
        }
    }
    out
}

/// Scores a selection over the candidate list `triplets`, which must be
/// the list the QUBO was built from.
pub fn score_tracking(triplets: &[Triplet], selected: &[bool], event: &Event) -> Result<TrackingScore> {
    if selected.len() != triplets.len() {
        return Err(Error::InvalidInput(format!(
            "{} selection bits for {} triplets",
            selected.len(),
            triplets.len()
        )));
    }
    let truth = truth_doublets(event);
    let reference: BTreeSet<(u64, u64)> = triplets
        .iter()
        .flat_map(Triplet::doublets)
        .filter(|d| truth.contains(d))
        .collect();
    let positives: BTreeSet<(u64, u64)> = triplets
        .iter()
        .zip(selected)
        .filter(|(_, &s)| s)
        .flat_map(|(t, _)| t.doublets())
        .collect();
    let tp = positives.intersection(&reference).count();
    Ok(TrackingScore::from_counts(
        tp,
        positives.len() - tp,
        reference.len() - tp,
    ))
}

/// Like [`score_tracking`] with the selection given as triplet indices.
pub fn score_selected_indices(triplets: &[Triplet], indices: &[usize], event: &Event) -> Result<TrackingScore> {
    let mut selected = vec![false; triplets.len()];
    for &i in indices {
        *selected.get_mut(i).ok_or_else(|| {
            Error::InvalidInput(format!("selected triplet {i} out of range ({} candidates)", triplets.len()))
        })? = true;
    }
    score_tracking(triplets, &selected, event)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VqeSuccessStat {
    pub n_runs: usize,
    pub n_success: usize,
    pub fraction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    // Rounding can push the bounds past p at k = 0 or k = n.
    (
        (center - half).clamp(0.0, p),
        (center + half).clamp(p, 1.0),
    )
}

pub fn vqe_success_fraction(components: &[f64], threshold: f64) -> Result<VqeSuccessStat> {
    if components.is_empty() {
        return Err(Error::InvalidInput("no VQE runs to aggregate".into()));
    }
    if let Some(c) = components.iter().find(|c| !(0.0..=1.0 + 1e-9).contains(*c)) {
        return Err(Error::InvalidInput(format!("ground-state component {c} outside [0, 1]")));
    }
    let n = components.len();
    let k = components.iter().filter(|&&c| c >= threshold).count();
    let (ci_low, ci_high) = wilson_interval(k, n, Z_95);
    Ok(VqeSuccessStat {
        n_runs: n,
        n_success: k,
        fraction: k as f64 / n as f64,
        ci_low,
        ci_high,
    })
}
