//! The two sweeps: tracking quality versus slice size and density, and
//! VQE success fraction versus slice size, α, layers and noise.
//!
//! All randomness is derived from the master seed:
//! * size sweep event `e` at density `d`: `(master, 1, d, e)`; the solver
//!   for slice `j` of that event uses `(event seed, j)` and the full QUBO
//!   uses index 0, so a single slice covering everything reproduces the
//!   full solve;
//! * VQE sweep event `e` for slice size `k`: `(master, 2, k, e)`;
//! * VQE run for slice `j`, seed index `s`: `(master, 3, k, j, s)`, shared
//!   by every (α, reps, noise) cell.
//!
//! Jobs run on the rayon pool and are collected in input order, so the
//! tables do not depend on scheduling. Wall times are kept out of the main
//! table and written to a separate timing file.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::detector::{generate_event_with, Event};
use crate::error::{Error, Result};
use crate::metrics::{score_tracking, vqe_success_fraction, TrackingScore, SUCCESS_THRESHOLD, Z_95};
use crate::qubo::{build_qubo, Qubo};
use crate::rng::derive_seed;
use crate::seeding::{seed_event, Triplet};
use crate::slicing::{merge_slice_solutions, slice_subqubos, SliceReference, SubQubo};
use crate::solvers::{brute_force, simulated_annealing, SolveResult, SolverTag};
use crate::vqe::{run_lvqe_with_ground_states, CvarConfig, Estimator, VqeOptions};

pub const CSV_VERSION_LINE: &str = "# qtrack-sweep v1";
pub const CSV_COLUMNS: &str =
    "experiment,density,slice_size,alpha,reps,noise,metric,value,ci_low,ci_high,n,status";

/// Events tried per slice size before the VQE sweep gives up on a cell.
const MAX_VQE_EVENTS: usize = 200;

const SIZE_STREAM: u64 = 1;
const VQE_EVENT_STREAM: u64 = 2;
const VQE_RUN_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceSize {
    Fixed(usize),
    Full,
}

impl fmt::Display for SliceSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SliceSize::Fixed(k) => write!(f, "{k}"),
            SliceSize::Full => f.write_str("full"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub experiment: &'static str,
    pub density: usize,
    pub slice_size: SliceSize,
    pub alpha: Option<f64>,
    pub reps: Option<usize>,
    pub noise: Option<bool>,
    pub metric: &'static str,
    /// `None` for skipped cells.
    pub value: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    /// Number of samples aggregated.
    pub n: usize,
    pub skipped: bool,
    pub wall_time_s: f64,
}

impl SweepRow {
    fn cell_key(&self) -> String {
        fn opt<T: fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map(ToString::to_string).unwrap_or_default()
        }
        format!(
            "{},{},{},{},{},{}",
            self.experiment,
            self.density,
            self.slice_size,
            opt(&self.alpha),
            opt(&self.reps),
            opt(&self.noise)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_VERSION_LINE}\n{CSV_COLUMNS}\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.cell_key(),
                r.metric,
                opt(r.value),
                opt(r.ci_low),
                opt(r.ci_high),
                r.n,
                if r.skipped { "skipped" } else { "ok" },
            );
        }
        out
    }

    /// Wall time per cell; not deterministic.
    pub fn timing_csv(&self) -> String {
        let mut out = String::from("experiment,density,slice_size,alpha,reps,noise,wall_time_s\n");
        let mut last = None;
        for r in &self.rows {
            let key = r.cell_key();
            if last.as_ref() != Some(&key) {
                let _ = writeln!(out, "{key},{:.3}", r.wall_time_s);
                last = Some(key);
            }
        }
        out
    }

    /// Writes `<stem>.csv` and `<stem>.timing.csv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>, stem: &str) -> Result<PathBuf> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let main = dir.join(format!("{stem}.csv"));
        std::fs::write(&main, self.to_csv()).map_err(|e| Error::io(&main, e))?;
        let timing = dir.join(format!("{stem}.timing.csv"));
        std::fs::write(&timing, self.timing_csv()).map_err(|e| Error::io(&timing, e))?;
        Ok(main)
    }

    pub fn find<'a>(
        &'a self,
        metric: &'a str,
        pred: impl Fn(&SweepRow) -> bool + 'a,
    ) -> impl Iterator<Item = &'a SweepRow> + 'a {
        self.rows.iter().filter(move |r| r.metric == metric && pred(r))
    }
}

/// A seeded event with its candidates and QUBO.
#[derive(Debug, Clone)]
pub struct PreparedEvent {
    pub event: Event,
    pub triplets: Vec<Triplet>,
    pub qubo: Qubo,
}

pub fn prepare_event(config: &ExperimentConfig, density: usize, seed: u64) -> Result<PreparedEvent> {
    let geometry = config.detector.geometry()?;
    let event = generate_event_with(&geometry, density, &config.detector.generator_options(), seed)?;
    let (triplets, links) = seed_event(&event, &config.seeding);
    let qubo = build_qubo(&triplets, &links, &config.qubo)?;
    Ok(PreparedEvent {
        event,
        triplets,
        qubo,
    })
}

fn solve_classical(config: &ExperimentConfig, qubo: &Qubo, seed: u64) -> Result<Vec<bool>> {
    if qubo.n() == 0 {
        return Ok(Vec::new());
    }
    let result: SolveResult = match config.size_sweep.solver {
        SolverTag::Brute => brute_force(qubo)?,
        SolverTag::Anneal => simulated_annealing(qubo, &config.anneal.schedule(qubo.n()), seed)?,
        SolverTag::Vqe => {
            return Err(Error::Config("the size sweep needs a classical solver".into()))
        }
    };
    Ok(result.best.bits)
}

/// Selection from solving every slice of size `k` and OR-merging.
pub fn solve_sliced(
    config: &ExperimentConfig,
    prepared: &PreparedEvent,
    k: usize,
    reference: SliceReference,
    event_seed: u64,
) -> Result<Vec<bool>> {
    let slices = slice_subqubos(&prepared.qubo, &prepared.triplets, k, reference)?;
    let assignments = slices
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let bits = solve_classical(config, &s.qubo, derive_seed(event_seed, &[j as u64]))?;
            crate::qubo::Assignment::evaluate(&s.qubo, bits).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;
    merge_slice_solutions(prepared.qubo.n(), &slices, &assignments)
}

/// Per-event outcome of every configured slice size (then the full solve).
struct EventScores {
    scores: Vec<Option<(TrackingScore, f64)>>,
}

fn score_event(config: &ExperimentConfig, density: usize, e: usize, master: u64) -> Result<EventScores> {
    let sweep = &config.size_sweep;
    let seed = derive_seed(master, &[SIZE_STREAM, density as u64, e as u64]);
    let prepared = prepare_event(config, density, seed)?;
    let n = prepared.qubo.n();
    let mut scores = Vec::new();
    for &k in &sweep.slice_sizes {
        if k > n {
            scores.push(None);
            continue;
        }
        let t0 = Instant::now();
        let sel = solve_sliced(config, &prepared, k, sweep.slice_reference, seed)?;
        let s = score_tracking(&prepared.triplets, &sel, &prepared.event)?;
        scores.push(Some((s, t0.elapsed().as_secs_f64())));
    }
    if sweep.include_full {
        let t0 = Instant::now();
        let full = match solve_classical(config, &prepared.qubo, derive_seed(seed, &[0])) {
            Ok(sel) => Some(sel),
            Err(Error::Capacity { .. }) => None,
            Err(e) => return Err(e),
        };
        scores.push(match full {
            Some(sel) => Some((
                score_tracking(&prepared.triplets, &sel, &prepared.event)?,
                t0.elapsed().as_secs_f64(),
            )),
            None => None,
        });
    }
    Ok(EventScores { scores })
}

/// Mean with a normal-approximation 95% interval.
fn mean_ci(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, mean, mean);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let half = Z_95 * (var / n).sqrt();
    (mean, (mean - half).max(0.0), (mean + half).min(1.0))
}

pub fn run_size_sweep(config: &ExperimentConfig, master_seed: u64) -> Result<SweepTable> {
    config.validate()?;
    let sweep = &config.size_sweep;
    let mut sizes: Vec<SliceSize> = sweep.slice_sizes.iter().map(|&k| SliceSize::Fixed(k)).collect();
    if sweep.include_full {
        sizes.push(SliceSize::Full);
    }
    let mut rows = Vec::new();
    for &density in &sweep.densities {
        let events = (0..sweep.n_events)
            .into_par_iter()
            .map(|e| score_event(config, density, e, master_seed))
            .collect::<Result<Vec<_>>>()?;
        for (c, &size) in sizes.iter().enumerate() {
            let cell: Option<Vec<(TrackingScore, f64)>> = events.iter().map(|ev| ev.scores[c]).collect();
            let wall: f64 = events.iter().filter_map(|ev| ev.scores[c]).map(|s| s.1).sum();
            for metric in ["efficiency", "purity"] {
                let get = |s: &TrackingScore| if metric == "efficiency" { s.efficiency } else { s.purity };
                let stats = cell
                    .as_ref()
                    .map(|c| mean_ci(&c.iter().map(|(s, _)| get(s)).collect::<Vec<_>>()));
                rows.push(SweepRow {
                    experiment: "size",
                    density,
                    slice_size: size,
                    alpha: None,
                    reps: None,
                    noise: None,
                    metric,
                    value: stats.map(|s| s.0),
                    ci_low: stats.map(|s| s.1),
                    ci_high: stats.map(|s| s.2),
                    n: events.iter().filter(|ev| ev.scores[c].is_some()).count(),
                    skipped: cell.is_none(),
                    wall_time_s: wall,
                });
            }
        }
    }
    Ok(SweepTable { rows })
}

/// The first `count` slices of exactly `k` variables cut from fresh events.
pub fn collect_vqe_instances(
    config: &ExperimentConfig,
    k: usize,
    count: usize,
    master_seed: u64,
) -> Result<Vec<SubQubo>> {
    let v = &config.vqe;
    let mut out = Vec::with_capacity(count);
    for e in 0..MAX_VQE_EVENTS {
        if out.len() == count {
            break;
        }
        let seed = derive_seed(master_seed, &[VQE_EVENT_STREAM, k as u64, e as u64]);
        let prepared = prepare_event(config, v.density, seed)?;
        if prepared.qubo.n() < k {
            continue;
        }
        let slices = slice_subqubos(&prepared.qubo, &prepared.triplets, k, v.slice_reference)?;
        out.extend(
            slices
                .into_iter()
                .filter(|s| s.member_global_indices.len() == k)
                .take(count - out.len()),
        );
    }
    Ok(out)
}

struct VqeCell {
    alpha: f64,
    reps: usize,
    noisy: bool,
}

pub fn run_vqe_sweep(config: &ExperimentConfig, master_seed: u64) -> Result<SweepTable> {
    config.validate()?;
    let v = &config.vqe;
    let mut cells = Vec::new();
    for &alpha in &v.alphas {
        for &reps in &v.reps {
            for &noisy in &v.noise {
                cells.push(VqeCell { alpha, reps, noisy });
            }
        }
    }
    let mut rows = Vec::new();
    for &k in &v.slice_sizes {
        let instances = collect_vqe_instances(config, k, v.n_slices, master_seed)?;
        let skipped = instances.len() < v.n_slices;
        let ground: Vec<Vec<u64>> = if skipped {
            Vec::new()
        } else {
            instances
                .par_iter()
                .map(|s| brute_force(&s.qubo).map(|r| r.all_ground_states))
                .collect::<Result<_>>()?
        };
        for cell in &cells {
            let t0 = Instant::now();
            let stat = if skipped {
                None
            } else {
                let options = VqeOptions {
                    extra_layers: cell.reps,
                    layer_style: v.layer_style,
                    cvar: CvarConfig::new(cell.alpha, v.shots)?,
                    stage_budget: v.stage_budget,
                    total_budget: v.total_budget,
                    estimator: Estimator::Shots {
                        noise: cell.noisy.then_some(v.noise_model),
                    },
                    optimizer: Default::default(),
                };
                let jobs: Vec<(usize, usize)> = (0..v.n_slices)
                    .flat_map(|j| (0..v.n_seeds).map(move |s| (j, s)))
                    .collect();
                let components = jobs
                    .par_iter()
                    .map(|&(j, s)| {
                        let seed =
                            derive_seed(master_seed, &[VQE_RUN_STREAM, k as u64, j as u64, s as u64]);
                        run_lvqe_with_ground_states(&instances[j].qubo, &options, seed, &ground[j])
                            .map(|r| r.final_ground_state_component)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(vqe_success_fraction(&components, SUCCESS_THRESHOLD)?)
            };
            rows.push(SweepRow {
                experiment: "vqe",
                density: v.density,
                slice_size: SliceSize::Fixed(k),
                alpha: Some(cell.alpha),
                reps: Some(cell.reps),
                noise: Some(cell.noisy),
                metric: "success_fraction",
                value: stat.map(|s| s.fraction),
                ci_low: stat.map(|s| s.ci_low),
                ci_high: stat.map(|s| s.ci_high),
                n: stat.map_or(0, |s| s.n_runs),
                skipped,
                wall_time_s: t0.elapsed().as_secs_f64(),
            });
        }
    }
    Ok(SweepTable { rows })
}
