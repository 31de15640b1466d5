//! Derivative-free minimization by linear approximation on a simplex
//! (COBYLA without constraints).
//!
//! The optimizer keeps `n + 1` points: the best one (the pole) and `n`
//! vertices given as offsets from it. Their values define a linear model
//! whose steepest-descent step of length `rho` is tried next. When the
//! simplex degenerates a vertex is moved to restore its shape; when steps
//! stop paying off `rho` is halved until it reaches `rho_end`.
//!
//! The objective is called exactly `budget` times. If the trust region
//! collapses before the budget is spent the search restarts from the best
//! point with the initial radius.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cobyla {
    pub rho_begin: f64,
    pub rho_end: f64,
}

impl Default for Cobyla {
    fn default() -> Self {
        Self {
            rho_begin: 1.0,
            rho_end: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    /// Objective value of every evaluation, in call order.
    pub trace: Vec<f64>,
}

const ALPHA: f64 = 0.25;
const BETA: f64 = 2.1;
const GAMMA: f64 = 0.5;

struct Budget<'f, F> {
    objective: &'f mut F,
    left: usize,
    trace: Vec<f64>,
    best: Option<(Vec<f64>, f64)>,
}

struct Exhausted;

impl<F: FnMut(&[f64]) -> f64> Budget<'_, F> {
    fn eval(&mut self, x: &[f64]) -> Result<Result<f64, Exhausted>> {
        if self.left == 0 {
            return Ok(Err(Exhausted));
        }
        self.left -= 1;
        let v = (self.objective)(x);
        if !v.is_finite() {
            return Err(Error::Numerical(format!(
                "objective returned {v} at evaluation {} (x = {x:?})",
                self.trace.len()
            )));
        }
        self.trace.push(v);
        if self.best.as_ref().is_none_or(|b| v < b.1) {
            self.best = Some((x.to_vec(), v));
        }
        Ok(Ok(v))
    }
}

macro_rules! eval_or_finish {
    ($budget:expr, $x:expr) => {
        match $budget.eval($x)? {
            Ok(v) => v,
            Err(Exhausted) => return Ok(()),
        }
    };
}

impl Cobyla {
    pub fn new(rho_begin: f64, rho_end: f64) -> Result<Self> {
        if !(rho_begin > 0.0 && rho_end > 0.0 && rho_end <= rho_begin) {
            return Err(Error::InvalidInput(format!(
                "need 0 < rho_end <= rho_begin, got {rho_end} and {rho_begin}"
            )));
        }
        Ok(Self { rho_begin, rho_end })
    }

    /// Minimizes `objective` from `x0` using exactly `budget` evaluations
    /// and returns the best point seen.
    pub fn minimize<F: FnMut(&[f64]) -> f64>(
        &self,
        mut objective: F,
        x0: &[f64],
        budget: usize,
    ) -> Result<Minimum> {
        if budget == 0 {
            return Err(Error::InvalidInput("optimizer budget must be at least 1".into()));
        }
        let mut b = Budget {
            objective: &mut objective,
            left: budget,
            trace: Vec::with_capacity(budget),
            best: None,
        };
        if x0.is_empty() {
            let v = b.eval(x0)?.ok().expect("budget >= 1");
            while b.left > 0 {
                let _ = b.eval(x0)?;
            }
            return Ok(Minimum {
                x: Vec::new(),
                value: v,
                trace: b.trace,
            });
        }

        let mut start = x0.to_vec();
        let mut start_value = None;
        while b.left > 0 {
            self.run_trust_region(&mut b, &start, start_value)?;
            if let Some((x, v)) = &b.best {
                start = x.clone();
                start_value = Some(*v);
            }
        }
        let (x, value) = b.best.expect("at least one evaluation");
        Ok(Minimum {
            x,
            value,
            trace: b.trace,
        })
    }

    /// One pass from `rho_begin` down to `rho_end`. Returns early when the
    /// budget runs out.
    fn run_trust_region<F: FnMut(&[f64]) -> f64>(
        &self,
        b: &mut Budget<'_, F>,
        start: &[f64],
        start_value: Option<f64>,
    ) -> Result<()> {
        let n = start.len();
        let mut rho = self.rho_begin;
        let mut pole = start.to_vec();
        let mut f_pole = match start_value {
            Some(v) => v,
            None => eval_or_finish!(b, &pole),
        };

        // rows: vertex offsets from the pole
        let mut sim = DMatrix::<f64>::identity(n, n) * rho;
        let mut f_vert = vec![0.0; n];
        for (j, f) in f_vert.iter_mut().enumerate() {
            let x: Vec<f64> = pole.iter().zip(sim.row(j).iter()).map(|(p, d)| p + d).collect();
            *f = eval_or_finish!(b, &x);
        }

        let mut after_geometry_step = false;
        loop {
            // Make the best point the pole.
            let (jmin, &fmin) = f_vert
                .iter()
                .enumerate()
                .min_by(|a, c| a.1.total_cmp(c.1))
                .expect("n >= 1");
            if fmin < f_pole {
                let shift = sim.row(jmin).clone_owned();
                for (p, d) in pole.iter_mut().zip(shift.iter()) {
                    *p += d;
                }
                for i in 0..n {
                    if i == jmin {
                        sim.set_row(i, &(-&shift));
                    } else {
                        let r = sim.row(i) - &shift;
                        sim.set_row(i, &r);
                    }
                }
                f_vert[jmin] = f_pole;
                f_pole = fmin;
            }

            let Some(inv) = sim.clone().try_inverse() else {
                // Degenerate simplex: rebuild it around the pole.
                sim = DMatrix::<f64>::identity(n, n) * rho;
                for (j, f) in f_vert.iter_mut().enumerate() {
                    let x: Vec<f64> =
                        pole.iter().zip(sim.row(j).iter()).map(|(p, d)| p + d).collect();
                    *f = eval_or_finish!(b, &x);
                }
                continue;
            };
            let df = DVector::from_iterator(n, f_vert.iter().map(|f| f - f_pole));
            let grad = &inv * df;

            // Simplex shape: vertex lengths and distances to opposite faces.
            let lengths: Vec<f64> = (0..n).map(|j| sim.row(j).norm()).collect();
            let heights: Vec<f64> = (0..n).map(|j| 1.0 / inv.column(j).norm()).collect();
            let too_long = (0..n)
                .filter(|&j| lengths[j] > BETA * rho)
                .max_by(|&a, &c| lengths[a].total_cmp(&lengths[c]));
            let too_flat = (0..n)
                .filter(|&j| heights[j] < ALPHA * rho)
                .min_by(|&a, &c| heights[a].total_cmp(&heights[c]));
            let acceptable = too_long.is_none() && too_flat.is_none();

            if !acceptable && !after_geometry_step {
                let j = too_long.or(too_flat).expect("unacceptable simplex");
                let normal = inv.column(j);
                let mut step: DVector<f64> = normal * (GAMMA * rho / normal.norm());
                if grad.dot(&step) > 0.0 {
                    step = -step;
                }
                let x: Vec<f64> = pole.iter().zip(step.iter()).map(|(p, d)| p + d).collect();
                f_vert[j] = eval_or_finish!(b, &x);
                sim.set_row(j, &step.transpose());
                after_geometry_step = true;
                continue;
            }
            after_geometry_step = false;

            let gnorm = grad.norm();
            let mut poor = true;
            if gnorm > 0.0 {
                let step: DVector<f64> = &grad * (-rho / gnorm);
                let predicted = rho * gnorm;
                let x: Vec<f64> = pole.iter().zip(step.iter()).map(|(p, d)| p + d).collect();
                let f_new = eval_or_finish!(b, &x);
                let ratio = (f_pole - f_new) / predicted;
                let improved = f_new < f_pole;

                // Vertex to replace: the one the step is most aligned with,
                // weighted by how far it sits from the (new) best point.
                let coeff = inv.transpose() * &step;
                let mut drop = None;
                let mut best_score = if improved { 0.0 } else { 1.0 };
                for j in 0..n {
                    let dist = if improved {
                        (sim.row(j).transpose() - &step).norm()
                    } else {
                        lengths[j]
                    };
                    let score = coeff[j].abs() * (dist / rho).max(1.0).powi(2);
                    if score > best_score {
                        best_score = score;
                        drop = Some(j);
                    }
                }
                if let Some(j) = drop {
                    sim.set_row(j, &step.transpose());
                    f_vert[j] = f_new;
                }
                poor = !(improved && ratio >= 0.1);
            }

            if poor && acceptable {
                if rho <= self.rho_end {
                    return Ok(());
                }
                rho *= 0.5;
                if rho <= 1.5 * self.rho_end {
                    rho = self.rho_end;
                }
            }
        }
    }
}
