//! Physical parameters and the operators of the battery + bath-spin model.
//!
//! Energies are in units of `e` and times in units of ħ/e. Tensor factors are
//! always ordered battery qubit 1, battery qubit 2, active bath spin. Pauli
//! matrices use σᶻ = diag(1, −1), so |0⟩ is the upper level of every positive
//! splitting.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::numerics::{kron, ComplexMatrix, C64};

/// All constants of one simulation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Half-gap of battery qubit 1.
    pub e1: f64,
    /// Half-gap of battery qubit 2 (the one touching the bath).
    pub e2: f64,
    /// Bath spin half-gap.
    pub h: f64,
    /// Flip-flop coupling between qubit 2 and the active spin.
    pub k: f64,
    /// Inverse bath temperature.
    pub beta: f64,
    /// Duration of one collision.
    pub delta_t: f64,
}

impl Default for ModelParams {
    /// `e1 = 2, e2 = 1, k = 1, δt = 0.2`, and a bath spin resonant with qubit 2
    /// (`h = 1`) at `β = 10`, so `βh = 10`.
    fn default() -> Self {
        Self { e1: 2.0, e2: 1.0, h: 1.0, k: 1.0, beta: 10.0, delta_t: 0.2 }
    }
}

impl ModelParams {
    pub fn with_k(self, k: f64) -> Self {
        Self { k, ..self }
    }

    pub fn with_delta_t(self, delta_t: f64) -> Self {
        Self { delta_t, ..self }
    }

    /// Checks `e1 > e2 > 0`, `δt > 0`, `k ≥ 0`, `β ≥ 0`, finite `h`.
    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.e1, self.e2, self.h, self.k, self.beta, self.delta_t]
            .iter()
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(contract("model parameters must be finite"));
        }
        if !(self.e1 > self.e2 && self.e2 > 0.0) {
            return Err(contract(format!("need e1 > e2 > 0, got e1={} e2={}", self.e1, self.e2)));
        }
        if self.delta_t <= 0.0 {
            return Err(contract(format!("delta_t must be positive, got {}", self.delta_t)));
        }
        if self.k < 0.0 || self.beta < 0.0 {
            return Err(contract("k and beta must be non-negative"));
        }
        Ok(())
    }

    /// Thermal populations `(p0, p1)` of the upper and lower spin level.
    pub fn bath_populations(&self) -> (f64, f64) {
        let x = 2.0 * self.beta * self.h;
        (1.0 / (1.0 + x.exp()), 1.0 / (1.0 + (-x).exp()))
    }
}

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_row_major(vec![
        C64::new(0.0, 0.0),
        C64::new(0.0, -1.0),
        C64::new(0.0, 1.0),
        C64::new(0.0, 0.0),
    ])
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_diag(&[1.0, -1.0])
}

/// `H₁₂ = e₁ σᶻ⊗I + e₂ I⊗σᶻ`.
pub fn battery_hamiltonian(p: &ModelParams) -> ComplexMatrix {
    let (e1, e2) = (p.e1, p.e2);
    ComplexMatrix::from_diag(&[e1 + e2, e1 - e2, -e1 + e2, -e1 - e2])
}

/// Local terms `(e₁σᶻ, e₂σᶻ)` of the battery Hamiltonian.
pub fn local_hamiltonians(p: &ModelParams) -> (ComplexMatrix, ComplexMatrix) {
    (sigma_z().scale_real(p.e1), sigma_z().scale_real(p.e2))
}

/// `H_B = h σᶻ`.
pub fn bath_spin_hamiltonian(p: &ModelParams) -> ComplexMatrix {
    sigma_z().scale_real(p.h)
}

/// `k (σˣ⊗σˣ + σʸ⊗σʸ)` on qubit 2 ⊗ spin.
pub fn interaction_hamiltonian(p: &ModelParams) -> ComplexMatrix {
    let xx = kron(&sigma_x(), &sigma_x());
    let yy = kron(&sigma_y(), &sigma_y());
    (&xx + &yy).scale_real(p.k)
}

/// `H₁₂⊗I + I⊗H_int + I₁₂⊗H_B` on qubit 1 ⊗ qubit 2 ⊗ spin.
pub fn total_collision_hamiltonian(p: &ModelParams) -> ComplexMatrix {
    let i2 = ComplexMatrix::identity(2);
    let i4 = ComplexMatrix::identity(4);
    let battery = kron(&battery_hamiltonian(p), &i2);
    let coupling = kron(&i2, &interaction_hamiltonian(p));
    let bath = kron(&i4, &bath_spin_hamiltonian(p));
    &(&battery + &coupling) + &bath
}

/// `diag(p0, p1)` for a single fresh bath spin.
pub fn thermal_spin_state(p: &ModelParams) -> ComplexMatrix {
    let (p0, p1) = p.bath_populations();
    ComplexMatrix::from_diag(&[p0, p1])
}
