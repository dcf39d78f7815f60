//! Information backflow during a single collision: trace-distance traces of
//! pairs of battery states and the BLP measure `Q_N` built from them.

use crate::collision::{CollisionChannel, ReducedMap};
use crate::error::{contract, domain, Result};
use crate::model::ModelParams;
use crate::numerics::{trace_distance, trace_norm_hermitian, ComplexMatrix, C64, ZERO};
use crate::optimize::{self, OptimizationReport, OptimizerSettings};
use crate::states::{pure_state_from_angles, unit_vector_from_angles, PureState};

pub const DEFAULT_GRID_POINTS: usize = 200;

/// Outcome of one BLP maximization.
#[derive(Clone, Debug, PartialEq)]
pub struct BlpResult {
    pub delta_t: f64,
    pub q_n: f64,
    pub optimal_pair: (PureState, PureState),
    /// `D(t)` of the optimal pair at `t = i · grid_step`.
    pub lambda_trace: Vec<f64>,
    pub grid_step: f64,
    pub grid_points: usize,
    /// Number of consecutive collisions the trace spans (1 for the single-spin map).
    pub collisions: usize,
    pub report: OptimizationReport,
}

/// Trace distance of two evolved pure states at `t = i·δt/grid_points`,
/// `i = 0…grid_points`, evaluated state by state through the collision map.
pub fn distinguishability_trace(
    s1: &PureState,
    s2: &PureState,
    delta_t: f64,
    grid_points: usize,
    p: &ModelParams,
) -> Result<Vec<(f64, f64)>> {
    if grid_points < 2 {
        return Err(domain("grid_points must be at least 2"));
    }
    let channel = CollisionChannel::new(&p.with_delta_t(delta_t))?;
    let (r1, r2) = (s1.density_matrix(), s2.density_matrix());
    let mut out = Vec::with_capacity(grid_points + 1);
    out.push((0.0, pure_distance(s1, s2)));
    for i in 1..=grid_points {
        let t = delta_t * (i as f64 / grid_points as f64);
        let a = channel.evolve_within_collision(&r1, t)?;
        let b = channel.evolve_within_collision(&r2, t)?;
        out.push((t, trace_distance(&a, &b)?));
    }
    Ok(out)
}

/// `√(1 − |⟨ψ₁|ψ₂⟩|²)`.
fn pure_distance(s1: &PureState, s2: &PureState) -> f64 {
    (1.0 - s1.inner(s2).norm_sqr()).max(0.0).sqrt()
}

/// `Σᵢ max(D(tᵢ₊₁) − D(tᵢ), 0)`.
pub fn blp_functional(trace: &[(f64, f64)]) -> Result<f64> {
    if trace.len() < 2 {
        return Err(domain("the BLP functional needs at least two samples"));
    }
    if trace.windows(2).any(|w| w[1].0 < w[0].0) {
        return Err(contract("trace times must be ascending"));
    }
    Ok(positive_increments(trace.iter().map(|(_, d)| *d)))
}

fn positive_increments(d: impl IntoIterator<Item = f64>) -> f64 {
    let mut it = d.into_iter();
    let Some(mut prev) = it.next() else { return 0.0 };
    let mut total = 0.0;
    for x in it {
        total += (x - prev).max(0.0);
        prev = x;
    }
    total
}

/// Maps an angle vector to an orthogonal pair: `s₁` from the first six angles,
/// `s₂` from the remaining four inside the orthogonal complement of `s₁`.
pub fn orthogonal_pair(angles: &[f64; 10]) -> (PureState, PureState) {
    let s1 = pure_state_from_angles(angles[..6].try_into().expect("six angles"));
    let basis = complement_basis(s1.amplitudes());
    let w = unit_vector_from_angles(3, &angles[6..]);
    let mut c = [ZERO; 4];
    for (wj, b) in w.iter().zip(&basis) {
        for (ci, bi) in c.iter_mut().zip(b) {
            *ci += wj * bi;
        }
    }
    let s2 = PureState::normalized(c).expect("complement vectors are orthonormal");
    (s1, s2)
}

/// Orthonormal basis of the complement of `v`: the standard basis vector with
/// the smallest residual is dropped and the other three are orthogonalized.
fn complement_basis(v: &[C64; 4]) -> Vec<[C64; 4]> {
    let mut drop = 0;
    for i in 1..4 {
        if v[i].norm_sqr() > v[drop].norm_sqr() {
            drop = i;
        }
    }
    let mut basis: Vec<[C64; 4]> = Vec::with_capacity(3);
    for i in (0..4).filter(|&i| i != drop) {
        let mut e = [ZERO; 4];
        e[i] = C64::new(1.0, 0.0);
        for q in std::iter::once(v).chain(basis.iter()) {
            let overlap: C64 = q.iter().zip(&e).map(|(a, b)| a.conj() * b).sum();
            for (ek, qk) in e.iter_mut().zip(q) {
                *ek -= overlap * qk;
            }
        }
        let norm = e.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        basis.push(e.map(|z| z / norm));
    }
    basis
}

/// Precomputed reduced maps on the grid of one collision, acting linearly on
/// `ρ₁ − ρ₂` so that each `D(t)` costs one 16×16 product and one 4×4 spectrum.
pub struct DistinguishabilityProbe {
    grid_points: usize,
    collisions: usize,
    grid_step: f64,
    partial: Vec<ReducedMap>,
    full: ReducedMap,
}

impl DistinguishabilityProbe {
    pub fn new(p: &ModelParams, grid_points: usize) -> Result<Self> {
        Self::spanning(p, grid_points, 1)
    }

    /// Probe over `collisions` consecutive collisions, each sampled on `grid_points` steps.
    pub fn spanning(p: &ModelParams, grid_points: usize, collisions: usize) -> Result<Self> {
        if grid_points < 2 {
            return Err(domain("grid_points must be at least 2"));
        }
        if collisions == 0 {
            return Err(domain("at least one collision is required"));
        }
        let channel = CollisionChannel::new(p)?;
        let dt = p.delta_t;
        let partial: Vec<ReducedMap> =
            (1..=grid_points).map(|i| channel.reduced_map(dt * (i as f64 / grid_points as f64))).collect();
        let full = channel.reduced_map(dt);
        Ok(Self { grid_points, collisions, grid_step: dt / grid_points as f64, partial, full })
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    /// `D` at every grid time, starting with the exact value at `t = 0`.
    pub fn trace(&self, s1: &PureState, s2: &PureState) -> Vec<f64> {
        let mut out = Vec::with_capacity(1 + self.collisions * self.grid_points);
        out.push(pure_distance(s1, s2));
        let mut boundary = difference_vector(s1, s2);
        for m in 0..self.collisions {
            for map in &self.partial {
                out.push(half_trace_norm(&map.apply_vec(&boundary)));
            }
            if m + 1 < self.collisions {
                boundary = self.full.apply_vec(&boundary);
            }
        }
        out
    }

    /// Time stamps matching [`Self::trace`].
    pub fn times(&self) -> Vec<f64> {
        (0..=self.collisions * self.grid_points).map(|i| i as f64 * self.grid_step).collect()
    }

    pub fn functional(&self, s1: &PureState, s2: &PureState) -> f64 {
        positive_increments(self.trace(s1, s2))
    }
}

fn difference_vector(s1: &PureState, s2: &PureState) -> [C64; 16] {
    let (a, b) = (s1.amplitudes(), s2.amplitudes());
    let mut out = [ZERO; 16];
    for i in 0..4 {
        for j in 0..4 {
            out[4 * i + j] = a[i] * a[j].conj() - b[i] * b[j].conj();
        }
    }
    out
}

fn half_trace_norm(x: &[C64; 16]) -> f64 {
    let m = ComplexMatrix::from_row_major(x.to_vec());
    (0.5 * trace_norm_hermitian(&m)).min(1.0)
}

/// `Q_N` of the single-collision map at collision time `delta_t`, maximized over
/// orthogonal pairs of two-qubit pure states.
pub fn blp_measure(delta_t: f64, p: &ModelParams, opt: &OptimizerSettings, grid_points: usize) -> Result<BlpResult> {
    blp_measure_over(delta_t, p, opt, grid_points, 1)
}

/// As [`blp_measure`], with the trace extended over `collisions` consecutive collisions.
pub fn blp_measure_over(
    delta_t: f64,
    p: &ModelParams,
    opt: &OptimizerSettings,
    grid_points: usize,
    collisions: usize,
) -> Result<BlpResult> {
    if delta_t.is_nan() || delta_t <= 0.0 {
        return Err(domain(format!("delta_t must be positive, got {delta_t}")));
    }
    let params = p.with_delta_t(delta_t);
    let probe = DistinguishabilityProbe::spanning(&params, grid_points, collisions)?;
    let objective = |x: &[f64]| {
        let (s1, s2) = orthogonal_pair(x.try_into().expect("ten angles"));
        probe.functional(&s1, &s2)
    };
    let report = optimize::maximize(objective, 10, opt);
    let (s1, s2) = orthogonal_pair(report.best_point.as_slice().try_into().expect("ten angles"));
    let lambda_trace = probe.trace(&s1, &s2);
    let q_n = positive_increments(lambda_trace.iter().copied());
    Ok(BlpResult {
        delta_t,
        q_n,
        optimal_pair: (s1, s2),
        lambda_trace,
        grid_step: probe.grid_step(),
        grid_points,
        collisions,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::hermitian_eigenvalues;
    use crate::sampling;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_pure(rng: &mut ChaCha8Rng) -> PureState {
        let v = sampling::random_pure_state(4, rng);
        PureState::normalized([v[0], v[1], v[2], v[3]]).unwrap()
    }

    #[test]
    fn functional_examples() {
        assert_eq!(blp_functional(&[(0.0, 0.9), (1.0, 0.5), (2.0, 0.1)]).unwrap(), 0.0);
        assert!((blp_functional(&[(0.0, 0.2), (1.0, 0.5)]).unwrap() - 0.3).abs() < 1e-15);
        let t = [(0.0, 0.5), (1.0, 0.6), (2.0, 0.4), (3.0, 0.45)];
        assert!((blp_functional(&t).unwrap() - 0.15).abs() < 1e-15);
        assert!(blp_functional(&[(0.0, 1.0)]).is_err());
        assert!(blp_functional(&[(1.0, 1.0), (0.0, 1.0)]).is_err());
    }

    #[test]
    fn identical_states_give_zero_trace() {
        let s = PureState::basis(1);
        let trace = distinguishability_trace(&s, &s, 0.5, 10, &ModelParams::default()).unwrap();
        assert_eq!(trace.len(), 11);
        assert!(trace.iter().all(|(_, d)| d.abs() < 1e-12));
        assert!(distinguishability_trace(&s, &s, 0.5, 1, &ModelParams::default()).is_err());
    }

    #[test]
    fn zero_coupling_keeps_distance_constant() {
        let p = ModelParams::default().with_k(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (a, b) = (random_pure(&mut rng), random_pure(&mut rng));
        let trace = distinguishability_trace(&a, &b, 1.3, 20, &p).unwrap();
        for (_, d) in &trace {
            assert!((d - trace[0].1).abs() < 1e-10);
        }
        let opt = OptimizerSettings::default().with_starts(4);
        assert!(blp_measure(1.6, &p, &opt, 50).unwrap().q_n < 1e-10);
    }

    #[test]
    fn short_collisions_only_lose_distinguishability() {
        let p = ModelParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..5 {
            let (a, b) = (random_pure(&mut rng), random_pure(&mut rng));
            let trace = distinguishability_trace(&a, &b, 0.2, 40, &p).unwrap();
            assert!(trace.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12));
        }
    }

    #[test]
    fn probe_agrees_with_statewise_evolution() {
        let p = ModelParams::default().with_delta_t(1.4);
        let probe = DistinguishabilityProbe::new(&p, 30).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let (a, b) = (random_pure(&mut rng), random_pure(&mut rng));
            let reference = distinguishability_trace(&a, &b, 1.4, 30, &p).unwrap();
            let fast = probe.trace(&a, &b);
            for ((t, d), (tf, df)) in reference.iter().zip(probe.times().iter().zip(&fast)) {
                assert!((t - tf).abs() < 1e-14);
                assert!((d - df).abs() < 1e-10, "{d} vs {df}");
            }
        }
    }

    #[test]
    fn multi_collision_probe_continues_from_boundaries() {
        let p = ModelParams::default().with_delta_t(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (a, b) = (random_pure(&mut rng), random_pure(&mut rng));
        let two = DistinguishabilityProbe::spanning(&p, 10, 2).unwrap().trace(&a, &b);
        assert_eq!(two.len(), 21);
        let channel = CollisionChannel::new(&p).unwrap();
        let ra = channel.collide_once(&a.density_matrix()).unwrap();
        let rb = channel.collide_once(&b.density_matrix()).unwrap();
        assert!((two[10] - trace_distance(&ra, &rb).unwrap()).abs() < 1e-10);
        let ra = channel.evolve_within_collision(&ra, 0.5).unwrap();
        let rb = channel.evolve_within_collision(&rb, 0.5).unwrap();
        assert!((two[15] - trace_distance(&ra, &rb).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn reduced_map_preserves_trace_and_hermiticity() {
        let p = ModelParams::default().with_delta_t(0.9);
        let map = CollisionChannel::new(&p).unwrap().reduced_map(0.9);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = sampling::random_hermitian(4, &mut rng);
        let y = map.apply(&x);
        assert!(y.is_hermitian(1e-12));
        assert!((y.trace() - x.trace()).norm() < 1e-12);
    }

    #[test]
    fn orthogonal_pairs_are_orthonormal() {
        let starts = optimize::halton_points(200, 10, 1);
        for x in starts {
            let (a, b) = orthogonal_pair(x.as_slice().try_into().unwrap());
            assert!(a.inner(&b).norm() < 1e-12);
            assert!((b.inner(&b).re - 1.0).abs() < 1e-12);
        }
        // the complement covers every direction orthogonal to s1
        let v = [C64::new(0.5, 0.0), C64::new(0.5, 0.0), C64::new(0.5, 0.0), C64::new(0.0, 0.5)];
        let basis = complement_basis(&v);
        let mut proj = ComplexMatrix::projector(&v);
        for b in &basis {
            proj = &proj + &ComplexMatrix::projector(b);
        }
        assert!(proj.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
        let w = hermitian_eigenvalues(&proj.hermitian_part()).unwrap();
        assert!(w.iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn short_collision_is_markovian() {
        let opt = OptimizerSettings::default().with_starts(6);
        let r = blp_measure(0.4, &ModelParams::default(), &opt, 100).unwrap();
        assert!(r.q_n <= 1e-6, "{}", r.q_n);
        assert!(r.q_n >= 0.0);
        assert_eq!(r.lambda_trace.len(), 101);
    }

    #[test]
    fn long_collision_shows_backflow_and_bookkeeping() {
        let opt = OptimizerSettings::default().with_starts(4);
        let r = blp_measure(1.6, &ModelParams::default(), &opt, 100).unwrap();
        assert!(r.q_n > 1e-4, "{}", r.q_n);
        let times: Vec<(f64, f64)> =
            r.lambda_trace.iter().enumerate().map(|(i, d)| (i as f64 * r.grid_step, *d)).collect();
        assert!((blp_functional(&times).unwrap() - r.q_n).abs() <= 1e-12);
        let (a, b) = r.optimal_pair;
        assert!(a.inner(&b).norm() < 1e-12);
    }
}
