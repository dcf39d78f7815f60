//! Repeated-interaction dynamics: the battery's second qubit meets one fresh
//! thermal spin per collision of length `δt`, and the spin is discarded
//! afterwards.
//!
//! Samples inside a collision are computed by propagating the joint
//! battery ⊗ spin state from the collision's starting boundary, never by
//! composing reduced maps, so battery–spin correlations built up during the
//! collision are kept.

use std::io::{self, Write};

use crate::error::{contract, domain, Result};
use crate::export::fmt_f64;
use crate::model::{thermal_spin_state, total_collision_hamiltonian, ModelParams};
use crate::numerics::{
    hermitian_eigendecompose, kron, partial_trace_unchecked, ComplexMatrix, HermitianEigen, Subsystem, C64,
    ONE, STATE_TOL, ZERO,
};

/// Precomputed single-collision propagation data for one parameter set.
#[derive(Clone, Debug)]
pub struct CollisionChannel {
    params: ModelParams,
    spectrum: HermitianEigen,
    spin_state: ComplexMatrix,
    full_step: ComplexMatrix,
}

impl CollisionChannel {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let spectrum = hermitian_eigendecompose(&total_collision_hamiltonian(params))?;
        let full_step = spectrum.propagator(params.delta_t);
        Ok(Self { params: *params, spectrum, spin_state: thermal_spin_state(params), full_step })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Spectrum of the 8×8 collision Hamiltonian.
    pub fn spectrum(&self) -> &HermitianEigen {
        &self.spectrum
    }

    pub fn spin_state(&self) -> &ComplexMatrix {
        &self.spin_state
    }

    /// Joint propagator `exp(−j τ H)` on battery ⊗ spin.
    pub fn propagator(&self, tau: f64) -> ComplexMatrix {
        if tau == self.params.delta_t {
            self.full_step.clone()
        } else {
            self.spectrum.propagator(tau)
        }
    }

    /// One full collision.
    pub fn collide_once(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        check_battery_state(rho)?;
        Ok(self.apply_with(rho, &self.full_step))
    }

    /// Battery state a time `tau ∈ (0, δt]` into a collision that started in `rho`.
    pub fn evolve_within_collision(&self, rho: &ComplexMatrix, tau: f64) -> Result<ComplexMatrix> {
        let dt = self.params.delta_t;
        if !(tau > 0.0 && tau <= dt) {
            return Err(domain(format!("intra-collision time {tau} outside (0, {dt}]")));
        }
        check_battery_state(rho)?;
        Ok(self.apply_with(rho, &self.propagator(tau)))
    }

    /// Boundary samples at `0, δt, …, nδt`.
    pub fn evolve(&self, rho0: &ComplexMatrix, n: usize) -> Result<Trajectory> {
        check_battery_state(rho0)?;
        let dt = self.params.delta_t;
        let mut traj = Trajectory::starting_at(rho0.clone(), self.params);
        let mut rho = rho0.clone();
        for m in 1..=n {
            rho = self.apply_with(&rho, &self.full_step);
            traj.push(m as f64 * dt, m, rho.clone());
        }
        Ok(traj)
    }

    /// `substeps` samples per collision plus the initial state.
    pub fn fine_trajectory(&self, rho0: &ComplexMatrix, n: usize, substeps: usize) -> Result<Trajectory> {
        if substeps == 0 {
            return Err(domain("substeps must be at least 1"));
        }
        check_battery_state(rho0)?;
        let dt = self.params.delta_t;
        let steps: Vec<(f64, ComplexMatrix)> = (1..=substeps)
            .map(|i| {
                let tau = dt * (i as f64 / substeps as f64);
                (tau, self.propagator(tau))
            })
            .collect();

        let mut traj = Trajectory::starting_at(rho0.clone(), self.params);
        let mut boundary = rho0.clone();
        for m in 1..=n {
            let start = (m - 1) as f64 * dt;
            let mut last = None;
            for (tau, u) in &steps {
                let rho = self.apply_with(&boundary, u);
                traj.push(start + tau, m, rho.clone());
                last = Some(rho);
            }
            boundary = last.expect("substeps >= 1");
        }
        Ok(traj)
    }

    /// `Tr_spin[U (ρ ⊗ ρ_B) U†]` without input checks.
    /// Reduced map of a partial collision of duration `tau`.
    pub fn reduced_map(&self, tau: f64) -> ReducedMap {
        let (p0, p1) = self.params.bath_populations();
        ReducedMap::from_propagator(&self.propagator(tau), p0, p1)
    }

    pub(crate) fn apply_with(&self, rho: &ComplexMatrix, u: &ComplexMatrix) -> ComplexMatrix {
        let joint = kron(rho, &self.spin_state).conjugate_by(u);
        partial_trace_unchecked(&joint, 4, 2, Subsystem::A).hermitian_part()
    }
}

fn check_battery_state(rho: &ComplexMatrix) -> Result<()> {
    if rho.dim() != 4 || !rho.is_density_matrix(STATE_TOL) {
        return Err(contract("battery input must be a 4x4 density matrix"));
    }
    Ok(())
}

pub fn collide_once(rho: &ComplexMatrix, p: &ModelParams) -> Result<ComplexMatrix> {
    CollisionChannel::new(p)?.collide_once(rho)
}

pub fn evolve_within_collision(rho: &ComplexMatrix, tau: f64, p: &ModelParams) -> Result<ComplexMatrix> {
    CollisionChannel::new(p)?.evolve_within_collision(rho, tau)
}

pub fn evolve(rho0: &ComplexMatrix, n: usize, p: &ModelParams) -> Result<Trajectory> {
    CollisionChannel::new(p)?.evolve(rho0, n)
}

pub fn fine_trajectory(rho0: &ComplexMatrix, n: usize, substeps: usize, p: &ModelParams) -> Result<Trajectory> {
    CollisionChannel::new(p)?.fine_trajectory(rho0, n, substeps)
}

/// Time-stamped battery states along a collision sequence.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ComplexMatrix>,
    /// Spin active during the step that produced each sample (0 for the initial state).
    pub collision_index: Vec<usize>,
    pub meta: ModelParams,
}

impl Trajectory {
    fn starting_at(rho0: ComplexMatrix, meta: ModelParams) -> Self {
        Self { times: vec![0.0], states: vec![rho0], collision_index: vec![0], meta }
    }

    fn push(&mut self, t: f64, index: usize, rho: ComplexMatrix) {
        self.times.push(t);
        self.collision_index.push(index);
        self.states.push(rho);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> &ComplexMatrix {
        self.states.last().expect("a trajectory always holds its initial state")
    }

    /// CSV with `t,collision_index,rho_re_00,rho_im_00,…,rho_re_33,rho_im_33`
    /// followed by any extra named columns.
    pub fn write_csv<W: Write>(&self, mut out: W, extra: &[(&str, &[f64])]) -> io::Result<()> {
        let mut header = vec!["t".to_string(), "collision_index".to_string()];
        for i in 0..4 {
            for j in 0..4 {
                header.push(format!("rho_re_{i}{j}"));
                header.push(format!("rho_im_{i}{j}"));
            }
        }
        header.extend(extra.iter().map(|(name, _)| name.to_string()));
        writeln!(out, "{}", header.join(","))?;
        for (row, rho) in self.states.iter().enumerate() {
            let mut fields = vec![fmt_f64(self.times[row]), self.collision_index[row].to_string()];
            for z in rho.as_slice() {
                fields.push(fmt_f64(z.re));
                fields.push(fmt_f64(z.im));
            }
            for (_, values) in extra {
                fields.push(fmt_f64(values[row]));
            }
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

/// The reduced single-collision map as a 16×16 matrix on row-major `vec(ρ)`.
///
/// `Φ(X) = Σ p_s K_{s's} X K_{s's}†` with Kraus blocks `K_{s's} = ⟨s'|U|s⟩`,
/// so the map also acts on non-positive operators such as state differences.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedMap {
    s: Box<[C64; 256]>,
}

impl ReducedMap {
    pub fn identity() -> Self {
        let mut s = Box::new([ZERO; 256]);
        for i in 0..16 {
            s[17 * i] = ONE;
        }
        Self { s }
    }

    /// Map induced by a joint propagator `u` and spin populations `(p0, p1)`.
    pub fn from_propagator(u: &ComplexMatrix, p0: f64, p1: f64) -> Self {
        let mut s = Box::new([ZERO; 256]);
        for (spin_in, weight) in [(0, p0), (1, p1)] {
            for spin_out in 0..2 {
                let kraus = |a: usize, c: usize| u[(2 * a + spin_out, 2 * c + spin_in)];
                for a in 0..4 {
                    for b in 0..4 {
                        for c in 0..4 {
                            let kac = kraus(a, c) * weight;
                            for d in 0..4 {
                                s[(4 * a + b) * 16 + 4 * c + d] += kac * kraus(b, d).conj();
                            }
                        }
                    }
                }
            }
        }
        Self { s }
    }

    pub fn apply_vec(&self, x: &[C64; 16]) -> [C64; 16] {
        let mut out = [ZERO; 16];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.s[16 * i..16 * i + 16].iter().zip(x).map(|(a, b)| a * b).sum();
        }
        out
    }

    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let v: &[C64; 16] = x.as_slice().try_into().expect("4x4 operator");
        ComplexMatrix::from_row_major(self.apply_vec(v).to_vec())
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &ReducedMap) -> Self {
        let mut s = Box::new([ZERO; 256]);
        for i in 0..16 {
            for k in 0..16 {
                let a = self.s[16 * i + k];
                for j in 0..16 {
                    s[16 * i + j] += a * first.s[16 * k + j];
                }
            }
        }
        Self { s }
    }

    /// `n`-fold composition by repeated squaring.
    pub fn power(&self, mut n: usize) -> Self {
        let mut out = Self::identity();
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                out = out.after(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.after(&base);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sigma_z;
    use crate::numerics::trace_distance;
    use crate::sampling;
    use crate::states::{locally_passive_state, EntanglementValue};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn xi(e: f64) -> ComplexMatrix {
        locally_passive_state(EntanglementValue::new(e).unwrap()).density_matrix()
    }

    /// Taylor-series exponential; only for the tiny steps used by the oracle.
    fn taylor_expm_minus_j(h: &ComplexMatrix, t: f64) -> ComplexMatrix {
        let x = h.scale(C64::new(0.0, -t));
        let mut term = ComplexMatrix::identity(h.dim());
        let mut sum = term.clone();
        for k in 1..20 {
            term = (&term * &x).scale_real(1.0 / k as f64);
            sum = &sum + &term;
        }
        sum
    }

    #[test]
    fn decoupled_collision_keeps_populations() {
        let p = ModelParams::default().with_k(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rho = sampling::random_density_matrix(4, &mut rng);
        let out = collide_once(&rho, &p).unwrap();
        for i in 0..4 {
            assert!((out[(i, i)] - rho[(i, i)]).norm() < 1e-14);
        }
    }

    #[test]
    fn vanishing_collision_is_identity() {
        let p = ModelParams::default().with_delta_t(1e-8);
        let rho = xi(0.6);
        let out = collide_once(&rho, &p).unwrap();
        assert!(out.max_abs_diff(&rho) <= 1e-7);
    }

    #[test]
    fn collision_matches_fine_step_joint_composition() {
        let p = ModelParams::default();
        let rho = xi(0.6);
        let steps = 1000;
        let u = taylor_expm_minus_j(&total_collision_hamiltonian(&p), p.delta_t / steps as f64);
        let (p0, p1) = p.bath_populations();
        let mut joint = ComplexMatrix::from_fn(8, |r, c| {
            let spin = if r % 2 == c % 2 { if r % 2 == 0 { p0 } else { p1 } } else { 0.0 };
            rho[(r / 2, c / 2)] * spin
        });
        for _ in 0..steps {
            joint = &(&u * &joint) * &u.adjoint();
        }
        let oracle = ComplexMatrix::from_fn(4, |i, j| joint[(2 * i, 2 * j)] + joint[(2 * i + 1, 2 * j + 1)]);
        let got = collide_once(&rho, &p).unwrap();
        assert!(got.max_abs_diff(&oracle) <= 1e-9, "{}", got.max_abs_diff(&oracle));
    }

    #[test]
    fn rejects_non_states() {
        let p = ModelParams::default();
        assert!(collide_once(&ComplexMatrix::identity(4), &p).is_err());
        assert!(collide_once(&ComplexMatrix::from_diag(&[0.5, 0.5]), &p).is_err());
    }

    #[test]
    fn within_collision_boundaries_and_memory() {
        let p = ModelParams::default();
        let ch = CollisionChannel::new(&p).unwrap();
        let rho = xi(0.6);
        let full = ch.collide_once(&rho).unwrap();
        assert_eq!(ch.evolve_within_collision(&rho, p.delta_t).unwrap(), full);
        let half = ch.evolve_within_collision(&rho, p.delta_t / 2.0).unwrap();
        let twice = ch.evolve_within_collision(&half, p.delta_t / 2.0).unwrap();
        assert!(twice.max_abs_diff(&full) > 1e-6);
        assert!(matches!(ch.evolve_within_collision(&rho, 0.0), Err(crate::Error::Domain(_))));
        assert!(ch.evolve_within_collision(&rho, 2.0 * p.delta_t).is_err());
    }

    #[test]
    fn decoupled_diagonal_states_are_fixed_points() {
        let p = ModelParams::default().with_k(0.0);
        let ch = CollisionChannel::new(&p).unwrap();
        let rho = ComplexMatrix::from_diag(&[0.1, 0.2, 0.3, 0.4]);
        for tau in [0.01, 0.1, 0.2] {
            assert!(ch.evolve_within_collision(&rho, tau).unwrap().max_abs_diff(&rho) < 1e-14);
        }
    }

    #[test]
    fn evolve_samples() {
        let p = ModelParams::default();
        let ch = CollisionChannel::new(&p).unwrap();
        let rho = xi(0.6);
        let t0 = ch.evolve(&rho, 0).unwrap();
        assert_eq!(t0.len(), 1);
        assert_eq!(t0.states[0], rho);
        let t2 = ch.evolve(&rho, 2).unwrap();
        let twice = ch.collide_once(&ch.collide_once(&rho).unwrap()).unwrap();
        assert!(t2.states[2].max_abs_diff(&twice) < 1e-15);
        assert_eq!(t2.collision_index, vec![0, 1, 2]);
        let t30 = ch.evolve(&rho, 30).unwrap();
        for s in &t30.states {
            assert!(s.is_density_matrix(1e-9));
        }
        assert!(t30.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn fine_trajectory_agrees_with_boundaries() {
        let p = ModelParams::default();
        let ch = CollisionChannel::new(&p).unwrap();
        let rho = xi(0.6);
        let coarse = ch.evolve(&rho, 5).unwrap();
        let same = ch.fine_trajectory(&rho, 5, 1).unwrap();
        assert_eq!(same.times, coarse.times);
        assert_eq!(same.states, coarse.states);

        let fine = ch.fine_trajectory(&rho, 5, 50).unwrap();
        assert_eq!(fine.len(), 5 * 50 + 1);
        for m in 0..=5 {
            assert!(fine.states[m * 50].max_abs_diff(&coarse.states[m]) <= 1e-10);
            assert!((fine.times[m * 50] - coarse.times[m]).abs() < 1e-12);
        }
        assert!(fine.times.windows(2).all(|w| w[0] < w[1]));
        assert!(fine.collision_index.windows(2).all(|w| w[0] <= w[1]));
        assert!(matches!(ch.fine_trajectory(&rho, 1, 0), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn fine_trajectory_is_continuous() {
        let p = ModelParams::default();
        let ch = CollisionChannel::new(&p).unwrap();
        let fine = ch.fine_trajectory(&xi(0.6), 5, 200).unwrap();
        let max_jump = fine
            .states
            .windows(2)
            .map(|w| trace_distance(&w[0], &w[1]).unwrap())
            .fold(0.0, f64::max);
        assert!(max_jump <= 0.1, "{max_jump}");
    }

    #[test]
    fn channel_is_linear_and_contractive() {
        let p = ModelParams::default();
        let ch = CollisionChannel::new(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let r = sampling::random_density_matrix(4, &mut rng);
            let s = sampling::random_density_matrix(4, &mut rng);
            let a = 0.3;
            let mix = &r.scale_real(a) + &s.scale_real(1.0 - a);
            let lhs = ch.collide_once(&mix).unwrap();
            let (fr, fs) = (ch.collide_once(&r).unwrap(), ch.collide_once(&s).unwrap());
            let rhs = &fr.scale_real(a) + &fs.scale_real(1.0 - a);
            assert!(lhs.max_abs_diff(&rhs) <= 1e-10);
            let before = trace_distance(&r, &s).unwrap();
            let after = trace_distance(&fr, &fs).unwrap();
            assert!(after <= before + 1e-9);
        }
    }

    #[test]
    fn excitation_number_conserved_within_collision() {
        let base = ModelParams::default();
        let p = ModelParams { h: base.e2, k: 1.3, ..base };
        let ch = CollisionChannel::new(&p).unwrap();
        let i2 = ComplexMatrix::identity(2);
        let number = &kron(&kron(&i2, &sigma_z()), &i2) + &kron(&ComplexMatrix::identity(4), &sigma_z());
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let rho = sampling::random_density_matrix(4, &mut rng);
        let joint0 = kron(&rho, ch.spin_state());
        let n0 = (&joint0 * &number).trace().re;
        for tau in [0.05, 0.11, 0.2] {
            let joint = joint0.conjugate_by(&ch.propagator(tau));
            assert!(((&joint * &number).trace().re - n0).abs() <= 1e-9);
        }
    }

    #[test]
    fn csv_layout() {
        let traj = evolve(&xi(0.2), 2, &ModelParams::default()).unwrap();
        let mut buf = Vec::new();
        let extra = [0.0, 1.0, 2.0];
        traj.write_csv(&mut buf, &[("value", &extra)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        let header: Vec<&str> = lines[0].split(',').collect();
        assert_eq!(header.len(), 2 + 32 + 1);
        assert_eq!(header[2], "rho_re_00");
        assert_eq!(header[33], "rho_im_33");
        assert_eq!(header[34], "value");
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 35));
    }

    #[test]
    fn reduced_map_matches_joint_evolution() {
        let p = ModelParams::default().with_delta_t(0.7);
        let channel = CollisionChannel::new(&p).unwrap();
        let map = channel.reduced_map(0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let rho = sampling::random_density_matrix(4, &mut rng);
        let direct = channel.collide_once(&rho).unwrap();
        assert!(map.apply(&rho).max_abs_diff(&direct) < 1e-13);

        let three = channel.evolve(&rho, 3).unwrap();
        assert!(map.power(3).apply(&rho).max_abs_diff(three.last_state()) < 1e-12);
        assert_eq!(map.power(0), ReducedMap::identity());

        let half = channel.reduced_map(0.35).after(&map);
        let reference = channel.evolve_within_collision(&direct, 0.35).unwrap();
        assert!(half.apply(&rho).max_abs_diff(&reference) < 1e-13);
    }
}
