//! Azimuthal sub-QUBOs.
//!
//! Triplets are ordered by azimuth (ties by triplet id) and cut into
//! half-blocks of `k/2` consecutive triplets; slice `s` is half-block `s`
//! followed by half-block `s+1`, wrapping around at 2π. Every triplet thus
//! lands in exactly two slices, and consecutive slices share one
//! half-block. When `k/2` does not divide the triplet count the last
//! half-block is short, so the two slices that contain it are short too.
//! A slice covering all triplets (`k == n`) is emitted once.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{Assignment, Qubo};
use crate::seeding::Triplet;

/// Which azimuth orders the triplets before slicing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceReference {
    #[default]
    InnermostHit,
    MeanHit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubQubo {
    pub qubo: Qubo,
    pub slice_index: usize,
    /// Full-QUBO variable indices, ascending. Variable `v` of `qubo` is
    /// `member_global_indices[v]`.
    pub member_global_indices: Vec<usize>,
}

/// Variable order of `triplets` by azimuth, ties broken by triplet id.
pub fn azimuth_order(triplets: &[Triplet], reference: SliceReference) -> Vec<usize> {
    let key = |t: &Triplet| match reference {
        SliceReference::InnermostHit => t.phi,
        SliceReference::MeanHit => t.phi_mean,
    };
    let mut order: Vec<usize> = (0..triplets.len()).collect();
    order.sort_by(|&a, &b| {
        key(&triplets[a])
            .total_cmp(&key(&triplets[b]))
            .then(triplets[a].id.cmp(&triplets[b].id))
    });
    order
}

/// Slices of `k` azimuth-consecutive variables of `qubo`, which must be
/// built over `triplets` (variable `i` is `triplets[i]`).
pub fn slice_subqubos(
    qubo: &Qubo,
    triplets: &[Triplet],
    k: usize,
    reference: SliceReference,
) -> Result<Vec<SubQubo>> {
    let n = triplets.len();
    if qubo.n() != n {
        return Err(Error::InvalidInput(format!(
            "QUBO has {} variables but {} triplets were given",
            qubo.n(),
            n
        )));
    }
    if k < 4 || !k.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "slice size must be even and at least 4, got {k}"
        )));
    }
    if k > n {
        return Err(Error::InvalidInput(format!(
            "slice size {k} exceeds the {n} available triplets"
        )));
    }
    let order = azimuth_order(triplets, reference);
    let groups: Vec<Vec<usize>> = if k == n {
        vec![order]
    } else {
        let half = k / 2;
        let blocks: Vec<&[usize]> = order.chunks(half).collect();
        (0..blocks.len())
            .map(|s| {
                let next = (s + 1) % blocks.len();
                blocks[s].iter().chain(blocks[next]).copied().collect()
            })
            .collect()
    };
    groups
        .into_iter()
        .enumerate()
        .map(|(slice_index, mut members)| {
            members.sort_unstable();
            Ok(SubQubo {
                qubo: qubo.restrict(&members)?,
                slice_index,
                member_global_indices: members,
            })
        })
        .collect()
}

/// OR-merge of per-slice solutions into a global selection over `n`
/// variables: a variable is selected if any slice containing it selects it.
pub fn merge_slice_solutions(
    n: usize,
    slices: &[SubQubo],
    assignments: &[Option<Assignment>],
) -> Result<Vec<bool>> {
    if assignments.len() != slices.len() {
        return Err(Error::InvalidInput(format!(
            "{} assignments for {} slices",
            assignments.len(),
            slices.len()
        )));
    }
    let mut global = vec![false; n];
    for (slice, assignment) in slices.iter().zip(assignments) {
        let a = assignment.as_ref().ok_or_else(|| {
            Error::InvalidInput(format!("slice {} has no assignment", slice.slice_index))
        })?;
        if a.bits.len() != slice.member_global_indices.len() {
            return Err(Error::InvalidInput(format!(
                "slice {} assignment has {} bits for {} members",
                slice.slice_index,
                a.bits.len(),
                slice.member_global_indices.len()
            )));
        }
        for (&g, &bit) in slice.member_global_indices.iter().zip(&a.bits) {
            if g >= n {
                return Err(Error::InvalidInput(format!("member {g} outside {n} variables")));
            }
            global[g] |= bit;
        }
    }
    Ok(global)
}
