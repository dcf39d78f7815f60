//! Two-qubit pure states, their logarithmic negativity and Schmidt data, and the
//! families of states with prescribed entanglement.

use serde::{Deserialize, Serialize};

use crate::error::{contract, domain, Result};
use crate::numerics::{hermitian_eigendecompose, ComplexMatrix, C64, ONE, ZERO};

const NORM_TOL: f64 = 1e-12;

/// Logarithmic negativity of a two-qubit pure state, in ebits.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct EntanglementValue(f64);

impl EntanglementValue {
    pub fn new(e: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&e) {
            Ok(Self(e))
        } else {
            Err(domain(format!("entanglement must lie in [0, 1], got {e}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Concurrence `2^E − 1`.
    pub fn concurrence(self) -> f64 {
        (self.0 * std::f64::consts::LN_2).exp_m1()
    }

    /// `√(2^{E+1} − 2^{2E})`, the Schmidt-population imbalance `λ₁ − λ₂`.
    ///
    /// Evaluated as `√((1 − C)(1 + C))`, which is the same quantity without the
    /// cancellation near `E = 0`.
    pub fn imbalance(self) -> f64 {
        let c = self.concurrence();
        ((1.0 - c) * (1.0 + c)).max(0.0).sqrt()
    }
}

impl TryFrom<f64> for EntanglementValue {
    type Error = crate::Error;
    fn try_from(e: f64) -> Result<Self> {
        Self::new(e)
    }
}

impl From<EntanglementValue> for f64 {
    fn from(e: EntanglementValue) -> f64 {
        e.0
    }
}

/// Normalized amplitudes over |00⟩, |01⟩, |10⟩, |11⟩.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PureState {
    c: [C64; 4],
}

impl PureState {
    pub fn new(c: [C64; 4]) -> Result<Self> {
        let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(contract(format!("state is not normalized (|c|² = {norm})")));
        }
        Ok(Self { c })
    }

    /// Rescales `c` to unit norm. Fails on the zero vector.
    pub fn normalized(c: [C64; 4]) -> Result<Self> {
        let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(contract("cannot normalize a zero or non-finite vector"));
        }
        Ok(Self { c: c.map(|z| z / norm) })
    }

    pub fn basis(index: usize) -> Self {
        let mut c = [ZERO; 4];
        c[index] = ONE;
        Self { c }
    }

    pub fn amplitudes(&self) -> &[C64; 4] {
        &self.c
    }

    pub fn density_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::projector(&self.c)
    }

    /// `(re c0, im c0, …, re c3, im c3)`.
    pub fn to_interleaved(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        for (i, z) in self.c.iter().enumerate() {
            out[2 * i] = z.re;
            out[2 * i + 1] = z.im;
        }
        out
    }

    pub fn from_interleaved(x: &[f64; 8]) -> Result<Self> {
        Self::new(std::array::from_fn(|i| C64::new(x[2 * i], x[2 * i + 1])))
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.c.iter().zip(&other.c).map(|(a, b)| a.conj() * b).sum()
    }
}

/// `Σᵢ √λᵢ |φᵢ⟩|ψᵢ⟩` with `λ₁ ≥ λ₂`; columns of the local bases are `|φᵢ⟩`, `|ψᵢ⟩`.
#[derive(Clone, Debug)]
pub struct SchmidtForm {
    pub lambdas: (f64, f64),
    pub local_basis_1: ComplexMatrix,
    pub local_basis_2: ComplexMatrix,
}

impl SchmidtForm {
    pub fn reconstruct(&self) -> [C64; 4] {
        let (u, v) = (&self.local_basis_1, &self.local_basis_2);
        let w = [self.lambdas.0.sqrt(), self.lambdas.1.sqrt()];
        std::array::from_fn(|idx| {
            let (i, j) = (idx / 2, idx % 2);
            (0..2).map(|k| u[(i, k)] * v[(j, k)] * w[k]).sum()
        })
    }
}

/// `E = log₂(2|c₀c₃ − c₁c₂| + 1)`.
pub fn log_negativity(s: &PureState) -> EntanglementValue {
    let [c0, c1, c2, c3] = s.c;
    let concurrence = (2.0 * (c0 * c3 - c1 * c2).norm()).min(1.0);
    EntanglementValue((concurrence.ln_1p() / std::f64::consts::LN_2).clamp(0.0, 1.0))
}

/// Schmidt populations `(λ₁, λ₂) = ½(1 ± √(2^{E+1} − 2^{2E}))`.
pub fn schmidt_lambdas_from_entanglement(e: EntanglementValue) -> (f64, f64) {
    // λ₂ = ½(1 − s) = C² / (2(1 + s)) since 1 − s² = C²
    let c = e.concurrence();
    let l2 = c * c / (2.0 * (1.0 + e.imbalance()));
    (1.0 - l2, l2)
}

/// `√λ₂|00⟩ + √λ₁|11⟩`: the larger weight sits on the two-qubit ground state.
pub fn locally_passive_state(e: EntanglementValue) -> PureState {
    locally_passive_state_with_phase(e, 0.0)
}

/// `√λ₂|00⟩ + e^{jθ}√λ₁|11⟩`, locally passive for every θ.
pub fn locally_passive_state_with_phase(e: EntanglementValue, theta: f64) -> PureState {
    let (l1, l2) = schmidt_lambdas_from_entanglement(e);
    PureState { c: [C64::new(l2.sqrt(), 0.0), ZERO, ZERO, C64::from_polar(l1.sqrt(), theta)] }
}

/// `Rz(a)·Ry(b)·Rz(c)` with `Rz(θ) = diag(e^{−jθ/2}, e^{jθ/2})`.
pub fn single_qubit_unitary(a: f64, b: f64, c: f64) -> ComplexMatrix {
    let rz = |t: f64| {
        let mut m = ComplexMatrix::zeros(2);
        m[(0, 0)] = C64::from_polar(1.0, -0.5 * t);
        m[(1, 1)] = C64::from_polar(1.0, 0.5 * t);
        m
    };
    let (sb, cb) = (0.5 * b).sin_cos();
    let ry = ComplexMatrix::from_real_rows(&[&[cb, -sb], &[sb, cb]]);
    &(&rz(a) * &ry) * &rz(c)
}

/// `(U₁ ⊗ U₂)(√λ₁|00⟩ + √λ₂|11⟩)` with Euler-angle local unitaries.
pub fn fixed_entanglement_state(e: EntanglementValue, angles: &[f64; 6]) -> PureState {
    let (l1, l2) = schmidt_lambdas_from_entanglement(e);
    let u1 = single_qubit_unitary(angles[0], angles[1], angles[2]);
    let u2 = single_qubit_unitary(angles[3], angles[4], angles[5]);
    let (w1, w2) = (l1.sqrt(), l2.sqrt());
    // column 0 of each unitary is U|0⟩, column 1 is U|1⟩
    let c = std::array::from_fn(|idx| {
        let (i, j) = (idx / 2, idx % 2);
        u1[(i, 0)] * u2[(j, 0)] * w1 + u1[(i, 1)] * u2[(j, 1)] * w2
    });
    PureState { c }
}

/// Unit vector in `C^dim` from `2(dim − 1)` angles: hyperspherical moduli from
/// the first `dim − 1` angles and relative phases from the rest.
pub fn unit_vector_from_angles(dim: usize, angles: &[f64]) -> Vec<C64> {
    assert!(dim >= 1 && angles.len() == 2 * (dim - 1), "need 2(dim-1) angles");
    let (polar, phases) = angles.split_at(dim - 1);
    let mut moduli = Vec::with_capacity(dim);
    let mut remaining = 1.0;
    for &a in polar {
        moduli.push(remaining * a.cos());
        remaining *= a.sin();
    }
    moduli.push(remaining);
    moduli
        .iter()
        .enumerate()
        .map(|(i, &m)| if i == 0 { C64::new(m, 0.0) } else { C64::from_polar(m, phases[i - 1]) })
        .collect()
}

/// Generic two-qubit pure state from six angles.
pub fn pure_state_from_angles(angles: &[f64; 6]) -> PureState {
    let v = unit_vector_from_angles(4, angles);
    PureState { c: [v[0], v[1], v[2], v[3]] }
}

pub fn schmidt_decompose(s: &PureState) -> SchmidtForm {
    // coefficient matrix M[i][j] = c_{2i+j}; ρ₁ = M M†
    let m = ComplexMatrix::from_fn(2, |i, j| s.c[2 * i + j]);
    let rho1 = &m * &m.adjoint();
    let eig = hermitian_eigendecompose(&rho1.hermitian_part()).expect("M M† is Hermitian");
    let l1 = eig.eigenvalues[1].clamp(0.0, 1.0);
    let l2 = (1.0 - l1).max(0.0);
    let phi1 = eig.vector(1);
    let phi2 = eig.vector(0);

    // |ψₖ⟩ ∝ Mᵀ conj(φₖ)
    let partner = |phi: &[C64]| -> [C64; 2] {
        std::array::from_fn(|j| (0..2).map(|i| m[(i, j)] * phi[i].conj()).sum())
    };
    let raw1 = partner(&phi1);
    let n1 = (raw1[0].norm_sqr() + raw1[1].norm_sqr()).sqrt();
    let psi1 = [raw1[0] / n1, raw1[1] / n1];
    let mut psi2 = [-psi1[1].conj(), psi1[0].conj()];
    let raw2 = partner(&phi2);
    let overlap = psi2[0].conj() * raw2[0] + psi2[1].conj() * raw2[1];
    if overlap.norm() > 1e-300 {
        let phase = overlap / overlap.norm();
        psi2 = [psi2[0] * phase, psi2[1] * phase];
    }

    SchmidtForm {
        lambdas: (l1, l2),
        local_basis_1: ComplexMatrix::from_fn(2, |i, k| if k == 0 { phi1[i] } else { phi2[i] }),
        local_basis_2: ComplexMatrix::from_fn(2, |j, k| if k == 0 { psi1[j] } else { psi2[j] }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{partial_trace, Subsystem};
    use crate::sampling;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn ev(e: f64) -> EntanglementValue {
        EntanglementValue::new(e).unwrap()
    }

    fn real_state(c: [f64; 4]) -> PureState {
        PureState::new(c.map(|x| C64::new(x, 0.0))).unwrap()
    }

    fn phase_aligned_distance(a: &[C64; 4], b: &[C64; 4]) -> f64 {
        let overlap: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
        let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { ONE };
        a.iter().zip(b).map(|(x, y)| (x * phase - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn log_negativity_examples() {
        assert_eq!(log_negativity(&PureState::basis(0)).value(), 0.0);
        let bell = real_state([FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]);
        assert!((log_negativity(&bell).value() - 1.0).abs() < 1e-15);
        let s = real_state([0.75f64.sqrt(), 0.0, 0.0, 0.25f64.sqrt()]);
        let expected = (2.0 * 0.1875f64.sqrt() + 1.0).log2();
        assert!((log_negativity(&s).value() - expected).abs() < 1e-15);
        assert!((expected - 0.9000).abs() < 1e-4);
    }

    #[test]
    fn unnormalized_states_are_rejected() {
        let c = [C64::new(1.0, 0.0), C64::new(1.0, 0.0), ZERO, ZERO];
        assert!(matches!(PureState::new(c), Err(crate::Error::ContractViolation(_))));
        assert!(PureState::normalized(c).is_ok());
        assert!(PureState::normalized([ZERO; 4]).is_err());
    }

    #[test]
    fn lambdas_from_entanglement() {
        assert_eq!(schmidt_lambdas_from_entanglement(ev(0.0)), (1.0, 0.0));
        let (a, b) = schmidt_lambdas_from_entanglement(ev(1.0));
        assert!((a - 0.5).abs() < 1e-15 && (b - 0.5).abs() < 1e-15);
        let (l1, l2) = schmidt_lambdas_from_entanglement(ev(0.6));
        let s = (2f64.powf(1.6) - 2f64.powf(1.2)).sqrt();
        assert!((l1 - 0.5 * (1.0 + s)).abs() < 1e-15);
        assert!((l1 - 0.92838).abs() < 1e-5 && (l2 - 0.07162).abs() < 1e-5);
        assert!((l1 + l2 - 1.0).abs() < 1e-15);
        let probe = real_state([l1.sqrt(), 0.0, 0.0, l2.sqrt()]);
        assert!((log_negativity(&probe).value() - 0.6).abs() < 1e-10);
    }

    #[test]
    fn entanglement_domain() {
        assert!(matches!(EntanglementValue::new(1.01), Err(crate::Error::Domain(_))));
        assert!(EntanglementValue::new(-0.1).is_err());
        assert!(EntanglementValue::new(f64::NAN).is_err());
    }

    #[test]
    fn locally_passive_examples() {
        assert!(phase_aligned_distance(locally_passive_state(ev(0.0)).amplitudes(), PureState::basis(3).amplitudes()) < 1e-15);
        let bell = real_state([FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]);
        assert!(phase_aligned_distance(locally_passive_state(ev(1.0)).amplitudes(), bell.amplitudes()) < 1e-15);
        let s = locally_passive_state(ev(0.6));
        let c = s.amplitudes();
        assert!((c[0].re - 0.26766).abs() < 1e-4 && (c[3].re - 0.96351).abs() < 1e-4);
        assert!((log_negativity(&s).value() - 0.6).abs() < 1e-10);
    }

    #[test]
    fn locally_passive_marginals_are_diagonal_and_anti_ordered() {
        for i in 0..=10 {
            for theta in [0.0, 1.3] {
                let s = locally_passive_state_with_phase(ev(i as f64 / 10.0), theta);
                let rho = s.density_matrix();
                for keep in [Subsystem::A, Subsystem::B] {
                    let r = partial_trace(&rho, (2, 2), keep).unwrap();
                    assert!(r[(0, 1)].norm() < 1e-15);
                    // |0⟩ is the upper level
                    assert!(r[(1, 1)].re >= r[(0, 0)].re);
                }
            }
        }
    }

    #[test]
    fn euler_unitary_identity_and_unitarity() {
        assert!(single_qubit_unitary(0.0, 0.0, 0.0).max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
        assert!(single_qubit_unitary(0.3, 2.0, -1.0).is_unitary(1e-14));
    }

    #[test]
    fn fixed_entanglement_zero_angles() {
        let e = ev(0.6);
        let (l1, l2) = schmidt_lambdas_from_entanglement(e);
        let s = fixed_entanglement_state(e, &[0.0; 6]);
        let expected = real_state([l1.sqrt(), 0.0, 0.0, l2.sqrt()]);
        assert!(phase_aligned_distance(s.amplitudes(), expected.amplitudes()) < 1e-15);
    }

    #[test]
    fn schmidt_examples() {
        let f = schmidt_decompose(&PureState::basis(1));
        assert!((f.lambdas.0 - 1.0).abs() < 1e-15 && f.lambdas.1.abs() < 1e-15);
        assert!(phase_aligned_distance(&f.reconstruct(), PureState::basis(1).amplitudes()) < 1e-12);
        let bell = real_state([FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]);
        let f = schmidt_decompose(&bell);
        assert!((f.lambdas.0 - 0.5).abs() < 1e-12 && (f.lambdas.1 - 0.5).abs() < 1e-12);
        assert!(phase_aligned_distance(&f.reconstruct(), bell.amplitudes()) < 1e-10);
    }

    #[test]
    fn schmidt_random_states_match_reduced_spectra() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..200 {
            let v = sampling::random_pure_state(4, &mut rng);
            let s = PureState::normalized([v[0], v[1], v[2], v[3]]).unwrap();
            let f = schmidt_decompose(&s);
            assert!(phase_aligned_distance(&f.reconstruct(), s.amplitudes()) <= 1e-10);
            assert!(f.local_basis_1.is_unitary(1e-10) && f.local_basis_2.is_unitary(1e-10));
            // oracle: eigenvalues of the other marginal
            let rho2 = partial_trace(&s.density_matrix(), (2, 2), Subsystem::B).unwrap();
            let w = crate::numerics::hermitian_eigenvalues(&rho2).unwrap();
            assert!((w[1] - f.lambdas.0).abs() < 1e-10 && (w[0] - f.lambdas.1).abs() < 1e-10);
        }
    }

    #[test]
    fn interleaved_round_trip() {
        let s = fixed_entanglement_state(ev(0.3), &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let back = PureState::from_interleaved(&s.to_interleaved()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn angle_vectors_are_unit() {
        let v = unit_vector_from_angles(3, &[0.4, 1.1, -0.3, 2.0]);
        let n: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert!((n - 1.0).abs() < 1e-15);
        assert_eq!(unit_vector_from_angles(1, &[]), vec![ONE]);
    }

    proptest! {
        #[test]
        fn fixed_entanglement_is_lu_invariant(
            e in 0.0f64..=1.0,
            angles in proptest::array::uniform6(-10.0f64..10.0),
        ) {
            let e = ev(e);
            let s = fixed_entanglement_state(e, &angles);
            let norm: f64 = s.amplitudes().iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((norm - 1.0).abs() < 1e-12);
            prop_assert!((log_negativity(&s).value() - e.value()).abs() < 1e-10);
            let f = schmidt_decompose(&s);
            let (l1, l2) = schmidt_lambdas_from_entanglement(e);
            prop_assert!((f.lambdas.0 - l1).abs() < 1e-10);
            prop_assert!((f.lambdas.1 - l2).abs() < 1e-10);
        }
    }
}
