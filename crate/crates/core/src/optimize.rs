//! Deterministic multi-start Nelder–Mead over angle spaces.
//!
//! Start points come from a Halton sequence on `[0, 2π)^d` shifted by a seeded
//! random offset (Cranley–Patterson rotation), so a given seed always yields
//! the same starts and the same result.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSettings {
    pub starts: usize,
    pub seed: u64,
    /// Objective evaluations allowed per start.
    pub max_evals: usize,
    /// A start stops once the simplex objective spread drops below this.
    pub tolerance: f64,
    /// The best value must be matched this closely by a second start to count as converged.
    pub agreement: f64,
    /// Initial simplex edge, in radians.
    pub initial_step: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self { starts: 24, seed: 0, max_evals: 2000, tolerance: 1e-9, agreement: 1e-6, initial_step: 0.5 }
    }
}

impl OptimizerSettings {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_starts(self, starts: usize) -> Self {
        Self { starts, ..self }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Outcome of a multi-start maximization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub best_value: f64,
    pub best_point: Vec<f64>,
    pub best_start: usize,
    pub start_values: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
}

impl OptimizationReport {
    pub fn starts(&self) -> usize {
        self.start_values.len()
    }
}

/// `count` points of the `dim`-dimensional Halton sequence scaled to `[0, 2π)`,
/// rotated by a seed-dependent offset.
pub fn halton_points(count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "Halton sequence supports up to {} dimensions", PRIMES.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    (1..=count as u64)
        .map(|i| {
            (0..dim)
                .map(|d| TAU * (radical_inverse(i, PRIMES[d]) + shift[d]).fract())
                .collect()
        })
        .collect()
}

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    out
}

/// Minimizes `f` from `x0` with the dimension-adaptive Nelder–Mead coefficients.
///
/// Stops when the spread of objective values over the simplex is below `tol`
/// or after `max_evals` evaluations. A converged run is restarted once from
/// its best vertex; the restart is kept only if it keeps improving.
pub fn nelder_mead(
    f: &mut impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    max_evals: usize,
    tol: f64,
) -> NelderMeadResult {
    let mut run = nelder_mead_once(f, x0, step, max_evals, tol);
    if run.converged && run.evaluations < max_evals {
        let again = nelder_mead_once(f, &run.x, step * 0.25, max_evals - run.evaluations, tol);
        let evaluations = run.evaluations + again.evaluations;
        if again.f < run.f {
            run = again;
        }
        run.evaluations = evaluations;
    }
    run
}

fn nelder_mead_once(
    f: &mut impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    max_evals: usize,
    tol: f64,
) -> NelderMeadResult {
    let n = x0.len();
    let nf = n.max(1) as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);

    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() { f64::INFINITY } else { v }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() <= tol || n == 0 {
            converged = true;
            break;
        }
        if evals >= max_evals {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|(x, _)| x[d]).sum::<f64>() / nf)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (c - w)).collect()
        };

        let xr = along(alpha);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(alpha * gamma);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(alpha * rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(-rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = best.iter().zip(&vertex.0).map(|(b, v)| b + sigma * (v - b)).collect();
                    let v = eval(&x, &mut evals);
                    *vertex = (x, v);
                }
            }
        }
    }

    let (x, f) = simplex.swap_remove(0);
    NelderMeadResult { x, f, evaluations: evals, converged }
}

/// Maximizes `f` over `[0, 2π)^dim` from Halton starts.
pub fn maximize(f: impl Fn(&[f64]) -> f64, dim: usize, settings: &OptimizerSettings) -> OptimizationReport {
    let starts = halton_points(settings.starts.max(1), dim, settings.seed);
    maximize_from(f, &starts, settings)
}

/// Maximizes `f` from the given start points, sequentially and in order.
pub fn maximize_from(f: impl Fn(&[f64]) -> f64, starts: &[Vec<f64>], settings: &OptimizerSettings) -> OptimizationReport {
    assert!(!starts.is_empty(), "at least one start point is required");
    let mut neg = |x: &[f64]| -f(x);
    let runs: Vec<NelderMeadResult> = starts
        .iter()
        .map(|x0| nelder_mead(&mut neg, x0, settings.initial_step, settings.max_evals, settings.tolerance))
        .collect();

    let mut best_start = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.f < runs[best_start].f {
            best_start = i;
        }
    }
    let best_value = -runs[best_start].f;
    let start_values: Vec<f64> = runs.iter().map(|r| -r.f).collect();
    let confirmations = start_values.iter().filter(|&&v| (v - best_value).abs() <= settings.agreement).count();
    let converged = runs[best_start].converged && (confirmations >= 2 || runs.len() == 1);

    OptimizationReport {
        best_value,
        best_point: runs[best_start].x.clone(),
        best_start,
        start_values,
        evaluations: runs.iter().map(|r| r.evaluations).sum(),
        converged,
    }
}
