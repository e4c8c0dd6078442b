//! Search for modulation parameters `(fm, dm, dphi)` with progressive phasing.
//!
//! A coarse grid over the box is evaluated in parallel, then the best grid
//! point seeds a Nelder-Mead refinement in coordinates normalized to `[0, 1]`.
//! Constraint violations are subtracted from the objective as a dB penalty.

use std::sync::atomic::{AtomicUsize, Ordering};

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use rayon::prelude::*;

use crate::design::Design;
use crate::error::{Error, Result};
use crate::metrics::{bandwidth_at_level, db, directivity_of, Criterion};
use crate::solve::{sweep, SweepGrid};

/// Directivity values above this are clipped so a deep `S12` null cannot dominate.
pub const DIRECTIVITY_CAP_DB: f64 = 60.0;

/// Quantity being maximized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// Directivity at `f0` in dB.
    CenterDirectivity,
    /// `D0` in dB times the width in MHz of the band where `D >= level_db`.
    DirectivityBandwidth { level_db: f64 },
}

/// Search box, constraints and effort.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeSpec {
    /// Modulation frequency bounds in Hz.
    pub fm: [f64; 2],
    pub index: [f64; 2],
    /// Progressive phase bounds in radians.
    pub phase_step: [f64; 2],
    /// Worst allowed return loss inside the constraint band.
    pub min_return_loss_db: f64,
    /// Worst allowed forward insertion loss inside the constraint band.
    pub max_insertion_loss_db: f64,
    pub objective: Objective,
    /// Constraint band is `f0 +- band_fraction * BW / 2`.
    pub band_fraction: f64,
    /// Grid samples per axis in the coarse stage.
    pub grid_steps: usize,
    pub max_iterations: usize,
    /// Objective units lost per dB of constraint violation.
    pub penalty_weight: f64,
    /// Sweep points per evaluation across `f0 +- 0.75 BW`.
    pub points: usize,
}

impl OptimizeSpec {
    pub fn new(fm: [f64; 2], index: [f64; 2], phase_step: [f64; 2]) -> Self {
        Self {
            fm,
            index,
            phase_step,
            min_return_loss_db: 10.0,
            max_insertion_loss_db: 3.5,
            objective: Objective::CenterDirectivity,
            band_fraction: 0.5,
            grid_steps: 5,
            max_iterations: 60,
            penalty_weight: 10.0,
            points: 121,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, [lo, hi]) in [("fm", self.fm), ("index", self.index), ("phase_step", self.phase_step)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::invalid(format!("{name} bounds must be finite and ordered, got [{lo}, {hi}]")));
            }
        }
        if !(self.fm[0] > 0.0) {
            return Err(Error::invalid("fm bounds must be positive"));
        }
        if !(self.index[0] >= 0.0 && self.index[1] < 1.0) {
            return Err(Error::invalid("index bounds must lie in [0, 1)"));
        }
        if self.grid_steps < 1 || self.points < 2 {
            return Err(Error::invalid("grid_steps must be >= 1 and points >= 2"));
        }
        if !(self.band_fraction > 0.0 && self.band_fraction <= 1.5) {
            return Err(Error::invalid("band_fraction must lie in (0, 1.5]"));
        }
        if !(self.penalty_weight >= 0.0) {
            return Err(Error::invalid("penalty weight must be non-negative"));
        }
        Ok(())
    }

    fn point(&self, x: &[f64]) -> [f64; 3] {
        let map = |b: [f64; 2], t: f64| b[0] + t.clamp(0.0, 1.0) * (b[1] - b[0]);
        [map(self.fm, x[0]), map(self.index, x[1]), map(self.phase_step, x[2])]
    }
}

/// Objective and constraint values at one parameter triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub fm: f64,
    pub index: f64,
    pub phase_step: f64,
    pub d0_db: f64,
    pub objective: f64,
    /// Smallest return loss inside the constraint band.
    pub worst_return_loss_db: f64,
    /// Largest forward insertion loss inside the constraint band.
    pub worst_insertion_loss_db: f64,
    pub violation_db: f64,
    pub score: f64,
}

impl Evaluation {
    pub fn feasible(&self) -> bool {
        self.violation_db == 0.0
    }
}

/// Outcome of [`optimize_modulation`].
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub best: Evaluation,
    pub evaluations: usize,
    /// Human-readable constraint violations of `best`, empty when feasible.
    pub violations: Vec<String>,
}

impl OptimizeResult {
    pub fn feasible(&self) -> bool {
        self.best.feasible()
    }
}

/// Evaluate one parameter triple.
pub fn evaluate(design: &Design, spec: &OptimizeSpec, fm: f64, index: f64, phase_step: f64) -> Result<Evaluation> {
    let d = design.with_progressive(fm, index, phase_step)?;
    let f0 = d.bandpass.f0;
    let bw = d.bandpass.bandwidth_hz();
    let grid = SweepGrid::around(f0, bw, 1.5, spec.points)?;
    let s = sweep(&d, &grid)?;
    let center = s.fundamental(s.nearest_index(f0));
    let d0 = directivity_of(&center).min(DIRECTIVITY_CAP_DB);

    let half = 0.5 * spec.band_fraction * bw;
    let mut worst_rl = f64::INFINITY;
    let mut worst_il = f64::NEG_INFINITY;
    for (i, p) in s.points().iter().enumerate() {
        if (p.freq_hz - f0).abs() <= half {
            let sp = s.fundamental(i);
            worst_rl = worst_rl.min(-db(sp.s11));
            worst_il = worst_il.max(-db(sp.s21));
        }
    }
    let violation = (spec.min_return_loss_db - worst_rl).max(0.0) + (worst_il - spec.max_insertion_loss_db).max(0.0);
    let objective = match spec.objective {
        Objective::CenterDirectivity => d0,
        Objective::DirectivityBandwidth { level_db } => {
            d0 * bandwidth_at_level(&s, f0, level_db, Criterion::Directivity, 0.0) / 1e6
        }
    };
    Ok(Evaluation {
        fm,
        index,
        phase_step,
        d0_db: d0,
        objective,
        worst_return_loss_db: worst_rl,
        worst_insertion_loss_db: worst_il,
        violation_db: violation,
        score: objective - spec.penalty_weight * violation,
    })
}

struct Problem<'a> {
    design: &'a Design,
    spec: &'a OptimizeSpec,
    count: &'a AtomicUsize,
}

impl CostFunction for Problem<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        self.count.fetch_add(1, Ordering::Relaxed);
        let [fm, dm, dphi] = self.spec.point(x);
        // Leaving the box costs the distance outside it, so the simplex is pulled back.
        let outside: f64 = x.iter().map(|t| (t - t.clamp(0.0, 1.0)).abs()).sum();
        Ok(match evaluate(self.design, self.spec, fm, dm, dphi) {
            Ok(e) => -e.score + 1e3 * outside,
            Err(_) => f64::MAX / 4.0,
        })
    }
}

fn better(a: &Evaluation, b: &Evaluation) -> bool {
    a.score > b.score
}

/// Maximize the objective over the search box.
///
/// Deterministic: the grid is evaluated in a fixed order and the simplex
/// starts from the best grid point with fixed offsets.
pub fn optimize_modulation(design: &Design, spec: &OptimizeSpec) -> Result<OptimizeResult> {
    spec.validate()?;
    let n = spec.grid_steps;
    let axis = |i: usize| if n == 1 { 0.5 } else { i as f64 / (n - 1) as f64 };
    let starts: Vec<[f64; 3]> = (0..n * n * n)
        .map(|i| [axis(i / (n * n)), axis((i / n) % n), axis(i % n)])
        .collect();
    let evals: Vec<Option<Evaluation>> = starts
        .par_iter()
        .map(|x| {
            let [fm, dm, dphi] = spec.point(x);
            evaluate(design, spec, fm, dm, dphi).ok()
        })
        .collect();
    let mut evaluations = evals.len();
    let (mut best_x, mut best) = starts
        .iter()
        .zip(&evals)
        .filter_map(|(x, e)| e.map(|e| (*x, e)))
        .fold(None, |acc: Option<([f64; 3], Evaluation)>, (x, e)| match acc {
            Some((_, b)) if !better(&e, &b) => acc,
            _ => Some((x, e)),
        })
        .ok_or_else(|| Error::invalid("no grid point could be evaluated"))?;

    if spec.max_iterations > 0 {
        let step = 0.5 / n.max(2) as f64;
        let x0 = best_x.to_vec();
        let mut simplex = vec![x0.clone()];
        for d in 0..3 {
            let mut v = x0.clone();
            v[d] = if v[d] + step <= 1.0 { v[d] + step } else { v[d] - step };
            simplex.push(v);
        }
        let count = AtomicUsize::new(0);
        let problem = Problem {
            design,
            spec,
            count: &count,
        };
        let solver = NelderMead::new(simplex)
            .with_sd_tolerance(1e-6)
            .map_err(|e| Error::invalid(format!("optimizer setup failed: {e}")))?;
        let res = Executor::new(problem, solver)
            .configure(|s| s.max_iters(spec.max_iterations as u64))
            .run()
            .map_err(|e| Error::invalid(format!("optimizer failed: {e}")))?;
        evaluations += count.load(Ordering::Relaxed);
        if let Some(x) = res.state().best_param.as_ref() {
            let clamped = [x[0].clamp(0.0, 1.0), x[1].clamp(0.0, 1.0), x[2].clamp(0.0, 1.0)];
            let [fm, dm, dphi] = spec.point(&clamped);
            if let Ok(e) = evaluate(design, spec, fm, dm, dphi) {
                evaluations += 1;
                if better(&e, &best) {
                    best = e;
                    best_x = clamped;
                }
            }
        }
    }
    let _ = best_x;

    let mut violations = Vec::new();
    if best.worst_return_loss_db < spec.min_return_loss_db {
        violations.push(format!(
            "return loss {:.2} dB below the required {:.2} dB",
            best.worst_return_loss_db, spec.min_return_loss_db
        ));
    }
    if best.worst_insertion_loss_db > spec.max_insertion_loss_db {
        violations.push(format!(
            "insertion loss {:.2} dB above the allowed {:.2} dB",
            best.worst_insertion_loss_db, spec.max_insertion_loss_db
        ));
    }
    Ok(OptimizeResult {
        best,
        evaluations,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_validation() {
        let ok = OptimizeSpec::new([18e6, 25e6], [0.03, 0.07], [0.3, 0.9]);
        assert!(ok.validate().is_ok());
        let mut bad = ok.clone();
        bad.fm = [25e6, 18e6];
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.index = [0.0, 1.0];
        assert!(bad.validate().is_err());
        let mut bad = ok;
        bad.phase_step = [0.0, f64::NAN];
        assert!(bad.validate().is_err());
    }

    #[test]
    fn normalized_mapping_clamps() {
        let spec = OptimizeSpec::new([10e6, 20e6], [0.0, 0.1], [0.0, 1.0]);
        assert_eq!(spec.point(&[0.0, 0.5, 1.0]), [10e6, 0.05, 1.0]);
        assert_eq!(spec.point(&[-1.0, 2.0, 0.5]), [10e6, 0.1, 0.5]);
    }
}
