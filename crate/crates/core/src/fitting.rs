//! Least-squares fits of work curves `W(E)` to the four closed-form families,
//! with linearized 95% confidence half-widths.
//!
//! All families are written in terms of `s(E) = √(2^{E+1} − 2^{2E})`:
//!
//! | model | shape | parameters |
//! |-------|-------|------------|
//! | M1 | `3c(a − s)` | c, a |
//! | M2 | `3c(1 + s) + b·e^{aE}` | c, a, b |
//! | M3 | `3p(1 + s) + q·e^{rE³}` | p, q, r |
//! | M4 | `6c·s + b·e^{aE}` | c, a, b |
//!
//! The exponential in M4 is read as a function of `E`, the only abscissa.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{contract, domain, Result};
use crate::states::EntanglementValue;

/// Two-sided 95% quantile of the standard normal distribution.
const Z95: f64 = 1.959963984540054;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FitModel {
    M1,
    M2,
    M3,
    M4,
}

impl fmt::Display for FitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for FitModel {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "M1" => Ok(FitModel::M1),
            "M2" => Ok(FitModel::M2),
            "M3" => Ok(FitModel::M3),
            "M4" => Ok(FitModel::M4),
            _ => Err(format!("unknown fit model '{s}' (expected M1..M4)")),
        }
    }
}

impl FitModel {
    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            FitModel::M1 => &["c", "a"],
            FitModel::M2 | FitModel::M4 => &["c", "a", "b"],
            FitModel::M3 => &["p", "q", "r"],
        }
    }

    pub fn parameter_count(self) -> usize {
        self.parameter_names().len()
    }

    /// Model value at `e` with parameters in [`Self::parameter_names`] order.
    pub fn eval(self, e: f64, theta: &[f64]) -> f64 {
        self.eval_with_gradient(e, theta).0
    }

    /// Value and analytic gradient with respect to the parameters.
    pub fn eval_with_gradient(self, e: f64, theta: &[f64]) -> (f64, Vec<f64>) {
        let s = imbalance(e);
        match self {
            FitModel::M1 => {
                let (c, a) = (theta[0], theta[1]);
                (3.0 * c * (a - s), vec![3.0 * (a - s), 3.0 * c])
            }
            FitModel::M2 => {
                let (c, a, b) = (theta[0], theta[1], theta[2]);
                let x = (a * e).exp();
                (3.0 * c * (1.0 + s) + b * x, vec![3.0 * (1.0 + s), b * e * x, x])
            }
            FitModel::M3 => {
                let (p, q, r) = (theta[0], theta[1], theta[2]);
                let e3 = e * e * e;
                let x = (r * e3).exp();
                (3.0 * p * (1.0 + s) + q * x, vec![3.0 * (1.0 + s), x, q * e3 * x])
            }
            FitModel::M4 => {
                let (c, a, b) = (theta[0], theta[1], theta[2]);
                let x = (a * e).exp();
                (6.0 * c * s + b * x, vec![6.0 * s, b * e * x, x])
            }
        }
    }

    /// Coefficient of the linear amplitude (`c` or `p`) and the remainder of
    /// the model at `e`, for anchoring the amplitude on one data point.
    fn amplitude_split(self, e: f64, theta: &[f64]) -> (f64, f64) {
        let (value, grad) = self.eval_with_gradient(e, theta);
        (grad[0], value - grad[0] * theta[0])
    }
}

fn imbalance(e: f64) -> f64 {
    EntanglementValue::new(e.clamp(0.0, 1.0)).expect("clamped into range").imbalance()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSettings {
    pub max_iterations: usize,
    /// Converged once an accepted step is shorter than this.
    pub step_tolerance: f64,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self { max_iterations: 500, step_tolerance: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub params: BTreeMap<String, f64>,
    pub confidence95: BTreeMap<String, f64>,
    /// Sum of squared errors at the returned parameters.
    pub residual: f64,
    #[serde(skip)]
    pub iterations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl FitResult {
    /// Parameter values in the model's canonical order.
    pub fn values(&self) -> Vec<f64> {
        self.model.parameter_names().iter().map(|n| self.params[*n]).collect()
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.model.parameter_names().iter().map(|n| self.confidence95[*n]).collect()
    }
}

fn check_data(model: FitModel, data: &[(f64, f64)]) -> Result<()> {
    if data.len() < model.parameter_count() + 1 {
        return Err(domain(format!(
            "{model} needs at least {} data points, got {}",
            model.parameter_count() + 1,
            data.len()
        )));
    }
    for &(e, y) in data {
        if !(0.0..=1.0).contains(&e) || !y.is_finite() {
            return Err(domain(format!("data point ({e}, {y}) outside E in [0, 1] or not finite")));
        }
    }
    Ok(())
}

/// Starting parameters: the amplitude is anchored on the smallest-E point with
/// the other parameters at `a = 0.1`, `b = q = r = −0.1`. M1 has no such
/// remainder, so both of its parameters come from the two extreme-E points.
pub fn default_init(model: FitModel, data: &[(f64, f64)]) -> Result<Vec<f64>> {
    check_data(model, data)?;
    let first = data.iter().copied().min_by(|x, y| x.0.total_cmp(&y.0)).expect("non-empty");
    let last = data.iter().copied().max_by(|x, y| x.0.total_cmp(&y.0)).expect("non-empty");
    if model == FitModel::M1 {
        let (s0, s1) = (imbalance(first.0), imbalance(last.0));
        let c = if s1 != s0 { (first.1 - last.1) / (3.0 * (s1 - s0)) } else { 0.0 };
        let a = if c != 0.0 { first.1 / (3.0 * c) + s0 } else { 1.0 };
        return Ok(vec![c, a]);
    }
    let mut theta = match model {
        FitModel::M3 => vec![0.0, -0.1, -0.1],
        _ => vec![0.0, 0.1, -0.1],
    };
    let (coef, rest) = model.amplitude_split(first.0, &theta);
    theta[0] = (first.1 - rest) / coef;
    Ok(theta)
}

fn sse(model: FitModel, data: &[(f64, f64)], theta: &[f64]) -> f64 {
    data.iter().map(|&(e, y)| (model.eval(e, theta) - y).powi(2)).sum()
}

fn jacobian(model: FitModel, data: &[(f64, f64)], theta: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let (m, p) = (data.len(), model.parameter_count());
    let mut j = DMatrix::zeros(m, p);
    let mut r = DVector::zeros(m);
    for (i, &(e, y)) in data.iter().enumerate() {
        let (f, g) = model.eval_with_gradient(e, theta);
        r[i] = f - y;
        for (k, gk) in g.into_iter().enumerate() {
            j[(i, k)] = gk;
        }
    }
    (j, r)
}

/// Levenberg–Marquardt from `init`.
pub fn fit_curve(model: FitModel, data: &[(f64, f64)], init: &[f64], settings: &FitSettings) -> Result<FitResult> {
    check_data(model, data)?;
    let p = model.parameter_count();
    if init.len() != p || init.iter().any(|x| !x.is_finite()) {
        return Err(contract(format!("{model} needs {p} finite initial parameters")));
    }

    let mut theta = init.to_vec();
    let mut cost = sse(model, data, &theta);
    let mut lambda = 1e-3;
    let mut converged = cost == 0.0;
    let mut iterations = 0;
    let mut diagnostics = Vec::new();

    while !converged && iterations < settings.max_iterations {
        iterations += 1;
        let (j, r) = jacobian(model, data, &theta);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let scale = jtj.diagonal().max().max(f64::MIN_POSITIVE);
        loop {
            let mut a = jtj.clone();
            for k in 0..p {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12 * scale);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 10.0;
                if lambda > 1e20 {
                    diagnostics.push("damped normal equations stayed singular".to_string());
                    break;
                }
                continue;
            };
            let candidate: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, d)| t + d).collect();
            let new_cost = sse(model, data, &candidate);
            let short = step.norm() < settings.step_tolerance;
            if new_cost.is_finite() && new_cost <= cost {
                theta = candidate;
                cost = new_cost;
                lambda = (lambda / 3.0).max(1e-15);
                converged = short || cost == 0.0;
                break;
            }
            if short {
                // no shorter step improves the fit: a stationary point to working precision
                converged = true;
                break;
            }
            lambda *= 4.0;
            if lambda > 1e20 {
                diagnostics.push("step rejected at maximal damping".to_string());
                break;
            }
        }
        if !diagnostics.is_empty() {
            break;
        }
    }
    if !converged && diagnostics.is_empty() {
        diagnostics.push(format!("iteration limit {} reached", settings.max_iterations));
    }

    let half = confidence_half_widths(model, data, &theta, cost, &mut diagnostics);
    let names = model.parameter_names();
    Ok(FitResult {
        model,
        params: names.iter().map(|n| n.to_string()).zip(theta.iter().copied()).collect(),
        confidence95: names.iter().map(|n| n.to_string()).zip(half).collect(),
        residual: cost,
        iterations,
        converged,
        diagnostics,
    })
}

/// `z₀.₉₇₅ · √diag(s² (JᵀJ)⁺)` with `s² = SSE / (m − p)`.
fn confidence_half_widths(
    model: FitModel,
    data: &[(f64, f64)],
    theta: &[f64],
    cost: f64,
    diagnostics: &mut Vec<String>,
) -> Vec<f64> {
    let (j, _) = jacobian(model, data, theta);
    let jtj = j.transpose() * &j;
    let variance = cost / (data.len() - theta.len()) as f64;
    let inverse = match jtj.clone().try_inverse() {
        Some(inv) if inv.iter().all(|x| x.is_finite()) => inv,
        _ => {
            diagnostics.push("rank-deficient Jacobian; confidence from pseudo-inverse".to_string());
            let eps = 1e-12 * jtj.norm().max(f64::MIN_POSITIVE);
            jtj.pseudo_inverse(eps).unwrap_or_else(|_| DMatrix::zeros(theta.len(), theta.len()))
        }
    };
    (0..theta.len()).map(|k| Z95 * (variance * inverse[(k, k)]).max(0.0).sqrt()).collect()
}
