//! Passive states, global and local ergotropy, and maximal work extraction
//! from states of fixed initial entanglement after `n` collisions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::collision::{CollisionChannel, ReducedMap};
use crate::error::{contract, Result};
use crate::model::{battery_hamiltonian, ModelParams};
use crate::numerics::{
    hermitian_eigendecompose, hermitian_eigenvalues, kron, partial_trace_unchecked, ComplexMatrix, Subsystem,
    STATE_TOL, STRUCTURAL_TOL,
};
use crate::optimize::{self, nelder_mead, OptimizationReport, OptimizerSettings};
use crate::states::{
    fixed_entanglement_state, locally_passive_state, locally_passive_state_with_phase, single_qubit_unitary,
    EntanglementValue,
};

const PHASE_GRID: usize = 64;

/// Which extraction protocol to optimize.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantity {
    /// Global extraction from the locally passive state of entanglement E.
    #[serde(rename = "G_p")]
    Gp,
    /// Global extraction, maximized over pure states of entanglement E.
    G,
    /// Local extraction, maximized over pure states of entanglement E.
    L,
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantity::Gp => "G_p",
            Quantity::G => "G",
            Quantity::L => "L",
        })
    }
}

impl FromStr for Quantity {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "G_p" | "Gp" | "g_p" | "gp" => Ok(Quantity::Gp),
            "G" | "g" => Ok(Quantity::G),
            "L" | "l" => Ok(Quantity::L),
            other => Err(format!("unknown quantity '{other}' (expected G_p, G or L)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extraction {
    Global,
    Local,
}

impl Quantity {
    pub fn extraction(self) -> Extraction {
        match self {
            Quantity::Gp | Quantity::G => Extraction::Global,
            Quantity::L => Extraction::Local,
        }
    }
}

/// One extracted-work value together with how it was obtained.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkRecord {
    pub quantity: Quantity,
    pub entanglement: EntanglementValue,
    pub n: usize,
    pub k: f64,
    pub delta_t: f64,
    pub value: f64,
    /// Present whenever a numerical maximization was performed.
    pub optimizer_report: Option<OptimizationReport>,
}

impl WorkRecord {
    /// `(starts, best_start, converged)` as written to CSV.
    pub fn optimizer_summary(&self) -> (usize, usize, bool) {
        match &self.optimizer_report {
            Some(r) => (r.starts(), r.best_start, r.converged),
            None => (0, 0, true),
        }
    }
}

fn check_pair(rho: &ComplexMatrix, h: &ComplexMatrix) -> Result<()> {
    if rho.dim() != h.dim() {
        return Err(contract("state and Hamiltonian dimensions differ"));
    }
    if !rho.is_density_matrix(STATE_TOL) {
        return Err(contract("ergotropy requires a density matrix"));
    }
    if !h.is_hermitian(STRUCTURAL_TOL) {
        return Err(contract("ergotropy requires a Hermitian Hamiltonian"));
    }
    Ok(())
}

/// `Σᵢ rᵢ |εᵢ⟩⟨εᵢ|` with populations descending against energies ascending.
pub fn passive_state(rho: &ComplexMatrix, h: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_pair(rho, h)?;
    let mut populations = hermitian_eigenvalues(rho)?;
    populations.reverse();
    let levels = hermitian_eigendecompose(h)?;
    let n = rho.dim();
    let mut sigma = ComplexMatrix::zeros(n);
    for (i, r) in populations.iter().enumerate() {
        let proj = ComplexMatrix::projector(&levels.vector(i)).scale_real(*r);
        sigma = &sigma + &proj;
    }
    Ok(sigma)
}

/// `Tr(ρH) − Tr(σ_ρ H)`.
pub fn global_ergotropy(rho: &ComplexMatrix, h: &ComplexMatrix) -> Result<f64> {
    check_pair(rho, h)?;
    let energies = hermitian_eigenvalues(h)?;
    Ok(ergotropy_with_levels(rho, h, &energies))
}

/// Ergotropy given the ascending spectrum of `h`; no validation.
fn ergotropy_with_levels(rho: &ComplexMatrix, h: &ComplexMatrix, energies: &[f64]) -> f64 {
    let mean = (rho * h).trace().re;
    let mut populations = hermitian_eigenvalues(&rho.hermitian_part()).expect("Hermitian part");
    populations.reverse();
    let passive: f64 = populations.iter().zip(energies).map(|(r, e)| r * e).sum();
    (mean - passive).max(0.0)
}

/// Ergotropy against a diagonal Hamiltonian with the given diagonal.
fn ergotropy_diagonal(rho: &ComplexMatrix, diag: &[f64]) -> f64 {
    let mean: f64 = diag.iter().enumerate().map(|(i, e)| rho[(i, i)].re * e).sum();
    let mut energies = diag.to_vec();
    energies.sort_by(f64::total_cmp);
    let mut populations = hermitian_eigenvalues(&rho.hermitian_part()).expect("Hermitian part");
    populations.reverse();
    let passive: f64 = populations.iter().zip(&energies).map(|(r, e)| r * e).sum();
    (mean - passive).max(0.0)
}

/// Work extractable with product unitaries `U₁ ⊗ U₂` under the local battery
/// Hamiltonian: the sum of the two marginal ergotropies.
pub fn local_ergotropy(rho12: &ComplexMatrix, p: &ModelParams) -> Result<f64> {
    if rho12.dim() != 4 || !rho12.is_density_matrix(STATE_TOL) {
        return Err(contract("local ergotropy requires a 4x4 density matrix"));
    }
    Ok(local_ergotropy_unchecked(rho12, p))
}

fn local_ergotropy_unchecked(rho12: &ComplexMatrix, p: &ModelParams) -> f64 {
    let rho1 = partial_trace_unchecked(rho12, 2, 2, Subsystem::A);
    let rho2 = partial_trace_unchecked(rho12, 2, 2, Subsystem::B);
    ergotropy_diagonal(&rho1, &[p.e1, -p.e1]) + ergotropy_diagonal(&rho2, &[p.e2, -p.e2])
}

/// Direct maximization of `Tr(ρH) − Tr(UρU†H)` over `U = U₁(θ₁..₃) ⊗ U₂(θ₄..₆)`.
pub fn local_ergotropy_numerical(
    rho12: &ComplexMatrix,
    p: &ModelParams,
    opt: &OptimizerSettings,
) -> Result<OptimizationReport> {
    if rho12.dim() != 4 || !rho12.is_density_matrix(STATE_TOL) {
        return Err(contract("local ergotropy requires a 4x4 density matrix"));
    }
    let h = battery_hamiltonian(p);
    let mean = (rho12 * &h).trace().re;
    let objective = |x: &[f64]| {
        let u = kron(&single_qubit_unitary(x[0], x[1], x[2]), &single_qubit_unitary(x[3], x[4], x[5]));
        mean - (&rho12.conjugate_by(&u) * &h).trace().re
    };
    Ok(optimize::maximize(objective, 6, opt))
}

fn extract(rho: &ComplexMatrix, p: &ModelParams, mode: Extraction, h_diag: &[f64]) -> f64 {
    match mode {
        Extraction::Global => ergotropy_diagonal(rho, h_diag),
        Extraction::Local => local_ergotropy_unchecked(rho, p),
    }
}

/// Ergotropy against `H₁₂` after `n` full collisions.
pub fn ergotropy_after_collisions(rho0: &ComplexMatrix, n: usize, p: &ModelParams, mode: Extraction) -> Result<f64> {
    let channel = CollisionChannel::new(p)?;
    let traj = channel.evolve(rho0, n)?;
    let h_diag = battery_hamiltonian(p).diag_real();
    Ok(extract(traj.last_state(), p, mode, &h_diag))
}

/// Work values along every sample of a trajectory.
pub fn work_along(states: &[ComplexMatrix], p: &ModelParams, mode: Extraction) -> Vec<f64> {
    let h_diag = battery_hamiltonian(p).diag_real();
    states.iter().map(|rho| extract(rho, p, mode, &h_diag)).collect()
}

/// Work extracted after a fixed reduced map, for optimizer inner loops.
pub struct WorkEvaluator {
    params: ModelParams,
    map: ReducedMap,
    h_diag: Vec<f64>,
}

impl WorkEvaluator {
    /// Evaluator for the state after `n` full collisions.
    pub fn after_collisions(p: &ModelParams, n: usize) -> Result<Self> {
        let channel = CollisionChannel::new(p)?;
        Ok(Self::with_map(p, channel.reduced_map(p.delta_t).power(n)))
    }

    pub fn with_map(p: &ModelParams, map: ReducedMap) -> Self {
        Self { params: *p, map, h_diag: battery_hamiltonian(p).diag_real() }
    }

    pub fn work(&self, rho0: &ComplexMatrix, mode: Extraction) -> f64 {
        extract(&self.map.apply(rho0), &self.params, mode, &self.h_diag)
    }
}

/// Maximal work of the requested kind from initial states of entanglement `e`,
/// after `n` collisions.
///
/// `G_p` uses `|ξ_E^l⟩` directly (or, with `phase_sweep`, maximizes over its
/// free relative phase); `G` and `L` run a multi-start search over the six
/// local-unitary angles of the fixed-entanglement family.
pub fn max_work_fixed_entanglement(
    e: EntanglementValue,
    n: usize,
    p: &ModelParams,
    quantity: Quantity,
    opt: &OptimizerSettings,
    phase_sweep: bool,
) -> Result<WorkRecord> {
    let eval = WorkEvaluator::after_collisions(p, n)?;
    let (value, optimizer_report) = maximize_work(&eval, e, quantity, opt, phase_sweep, None);
    Ok(WorkRecord { quantity, entanglement: e, n, k: p.k, delta_t: p.delta_t, value, optimizer_report })
}

/// Maximization behind [`max_work_fixed_entanglement`] for an arbitrary map.
///
/// With `warm_start`, the `G`/`L` search runs a single local search from that
/// angle vector instead of the multi-start grid.
pub fn maximize_work(
    eval: &WorkEvaluator,
    e: EntanglementValue,
    quantity: Quantity,
    opt: &OptimizerSettings,
    phase_sweep: bool,
    warm_start: Option<&[f64]>,
) -> (f64, Option<OptimizationReport>) {
    match quantity {
        Quantity::Gp if !phase_sweep => {
            let rho0 = locally_passive_state(e).density_matrix();
            (eval.work(&rho0, Extraction::Global), None)
        }
        Quantity::Gp => {
            let objective = |theta: f64| {
                let rho0 = locally_passive_state_with_phase(e, theta).density_matrix();
                eval.work(&rho0, Extraction::Global)
            };
            let report = phase_sweep_maximize(objective, opt);
            (report.best_value, Some(report))
        }
        Quantity::G | Quantity::L => {
            let mode = quantity.extraction();
            let objective = |x: &[f64]| {
                let angles: [f64; 6] = x.try_into().expect("six angles");
                let rho0 = fixed_entanglement_state(e, &angles).density_matrix();
                eval.work(&rho0, mode)
            };
            let report = match warm_start {
                Some(x0) => optimize::maximize_from(objective, &[x0.to_vec()], opt),
                None => optimize::maximize(objective, 6, opt),
            };
            (report.best_value, Some(report))
        }
    }
}

/// One sample of [`work_trajectory`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorkSample {
    pub t: f64,
    /// Collision in progress (0 for the initial state).
    pub collision_index: usize,
    pub value: f64,
}

/// Work of the requested kind at `t = 0` and at `substeps` equally spaced
/// times inside each of `n` collisions, starting from entanglement `e`.
///
/// Each sample is propagated from its collision's starting boundary. For `G`
/// and `L` the first sample uses the multi-start search and every later one
/// a single local search warm-started at the previous optimum.
pub fn work_trajectory(
    e: EntanglementValue,
    n: usize,
    substeps: usize,
    p: &ModelParams,
    quantity: Quantity,
    opt: &OptimizerSettings,
    phase_sweep: bool,
) -> Result<Vec<WorkSample>> {
    if substeps == 0 {
        return Err(crate::error::domain("substeps must be at least 1"));
    }
    let channel = CollisionChannel::new(p)?;
    let dt = p.delta_t;
    let partial: Vec<(f64, ReducedMap)> = (1..=substeps)
        .map(|i| {
            let tau = dt * (i as f64 / substeps as f64);
            (tau, channel.reduced_map(tau))
        })
        .collect();
    let full = channel.reduced_map(dt);

    let mut out = Vec::with_capacity(1 + n * substeps);
    let mut warm: Option<Vec<f64>> = None;
    let mut sample = |map: ReducedMap, t: f64, collision_index: usize, warm: &mut Option<Vec<f64>>| {
        let eval = WorkEvaluator::with_map(p, map);
        let (value, report) = maximize_work(&eval, e, quantity, opt, phase_sweep, warm.as_deref());
        if let (Some(r), Quantity::G | Quantity::L) = (&report, quantity) {
            *warm = Some(r.best_point.clone());
        }
        out.push(WorkSample { t, collision_index, value });
    };
    sample(ReducedMap::identity(), 0.0, 0, &mut warm);
    let mut boundary = ReducedMap::identity();
    for m in 1..=n {
        let start = (m - 1) as f64 * dt;
        for (tau, map) in &partial {
            sample(map.after(&boundary), start + tau, m, &mut warm);
        }
        boundary = full.after(&boundary);
    }
    Ok(out)
}

/// 64-point θ grid followed by a one-dimensional simplex refinement from the best grid point.
fn phase_sweep_maximize(objective: impl Fn(f64) -> f64, opt: &OptimizerSettings) -> OptimizationReport {
    let grid: Vec<f64> = (0..PHASE_GRID)
        .map(|i| objective(std::f64::consts::TAU * i as f64 / PHASE_GRID as f64))
        .collect();
    let mut best_start = 0;
    for (i, v) in grid.iter().enumerate() {
        if *v > grid[best_start] {
            best_start = i;
        }
    }
    let theta0 = std::f64::consts::TAU * best_start as f64 / PHASE_GRID as f64;
    let step = std::f64::consts::TAU / PHASE_GRID as f64;
    let mut neg = |x: &[f64]| -objective(x[0]);
    let refined = nelder_mead(&mut neg, &[theta0], step, opt.max_evals, opt.tolerance);
    let (best_value, best_point) = if -refined.f >= grid[best_start] {
        (-refined.f, refined.x)
    } else {
        (grid[best_start], vec![theta0])
    };
    OptimizationReport {
        best_value,
        best_point,
        best_start,
        start_values: grid,
        evaluations: PHASE_GRID + refined.evaluations,
        converged: refined.converged,
    }
}

/// Closed forms at `n = 0`: `(G_p, G, L)` in the same energy units as `p`.
pub fn closed_form_initial_work(e: EntanglementValue, p: &ModelParams) -> (f64, f64, f64) {
    let s = e.imbalance();
    let total = p.e1 + p.e2;
    (total * (1.0 - s), total * (1.0 + s), 2.0 * total * s)
}

/// Passive energy `Tr(σ_ρ H)`.
pub fn passive_energy(rho: &ComplexMatrix, h: &ComplexMatrix) -> Result<f64> {
    let sigma = passive_state(rho, h)?;
    Ok((&sigma * h).trace().re)
}
