//! White-noise random-unitary trajectories `U = exp(−i W_t n·σ)`.
//!
//! The direction `n` is drawn once per trajectory and `W_t` is a Wiener
//! process. In exact-phase mode `W` is sampled at the output times directly;
//! in pathwise mode the Bloch vector is integrated with a Stratonovich Heun
//! scheme on a finer step.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::direction::{DirectionSampler, DirectionSpec};
use super::rng::parallel_moments;
use crate::integrators::{Method, TimeGrid, TrajectoryPoint, TrajectoryRecord};
use crate::qubit::{BlochVector, DensityMatrix, PauliChannelProbs};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum RuMode {
    ExactPhase,
    Pathwise { step: f64 },
}

/// Monte Carlo estimate of `ρ(t)` and of the channel at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct RuEstimate {
    pub t: f64,
    pub samples: usize,
    pub state: DensityMatrix,
    pub bloch: [f64; 3],
    pub bloch_stderr: [f64; 3],
    /// Channel probabilities `⟨cos²W⟩, ⟨sin²W n_k²⟩` (exact-phase mode only).
    pub probs: Option<PauliChannelProbs>,
    pub probs_stderr: Option<[f64; 4]>,
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Rotation of `b` by `angle` about the unit axis `n`.
pub fn rotate(b: [f64; 3], n: [f64; 3], angle: f64) -> [f64; 3] {
    let (s, c) = angle.sin_cos();
    let nxb = cross(n, b);
    let nb = dot(n, b);
    std::array::from_fn(|k| b[k] * c + nxb[k] * s + n[k] * nb * (1.0 - c))
}

/// One Heun step of `db = 2 (n × b) ∘ dW`, projected back to norm `radius`.
fn heun_step(b: [f64; 3], n: [f64; 3], dw: f64, radius: f64) -> [f64; 3] {
    let f0 = cross(n, b);
    let pred: [f64; 3] = std::array::from_fn(|k| b[k] + 2.0 * f0[k] * dw);
    let f1 = cross(n, pred);
    let out: [f64; 3] = std::array::from_fn(|k| b[k] + (f0[k] + f1[k]) * dw);
    let r = dot(out, out).sqrt();
    if r > 0.0 {
        out.map(|v| v * radius / r)
    } else {
        out
    }
}

/// Mean Bloch vector to state; round-off beyond the unit sphere is removed.
pub(crate) fn state_from_mean_bloch(b: [f64; 3]) -> Result<DensityMatrix> {
    let r = dot(b, b).sqrt();
    let b = if r > 1.0 && r < 1.0 + 1e-9 {
        b.map(|v| v / r)
    } else {
        b
    };
    Ok(DensityMatrix::from_bloch(&BlochVector::new(b)?))
}

/// Observables per output time: three Bloch components, four channel weights.
const WIDTH: usize = 7;

fn sample_path<R: Rng + ?Sized>(
    sampler: &DirectionSampler,
    b0: [f64; 3],
    times: &[f64],
    mode: RuMode,
    rng: &mut R,
    out: &mut [f64],
) {
    let n = sampler.sample(rng);
    let radius = dot(b0, b0).sqrt();
    let mut w = 0.0;
    let mut b = b0;
    let mut t_prev = 0.0;
    for (m, &t) in times.iter().enumerate() {
        let dt = t - t_prev;
        match mode {
            RuMode::ExactPhase => {
                if dt > 0.0 {
                    let z: f64 = StandardNormal.sample(rng);
                    w += dt.sqrt() * z;
                }
                b = rotate(b0, n, 2.0 * w);
            }
            RuMode::Pathwise { step } => {
                let mut left = dt;
                while left > 0.0 {
                    let h = if left < 1.5 * step { left } else { step };
                    let z: f64 = StandardNormal.sample(rng);
                    let dw = h.sqrt() * z;
                    b = heun_step(b, n, dw, radius);
                    w += dw;
                    left -= h;
                }
            }
        }
        t_prev = t;
        let o = &mut out[m * WIDTH..(m + 1) * WIDTH];
        o[..3].copy_from_slice(&b);
        let (s, c) = w.sin_cos();
        o[3] = c * c;
        for k in 0..3 {
            o[4 + k] = s * s * n[k] * n[k];
        }
    }
}

fn validate(rho0: &DensityMatrix, n_traj: usize, mode: RuMode) -> Result<[f64; 3]> {
    if n_traj == 0 {
        return Err(Error::InvalidArgument("need at least one trajectory".into()));
    }
    if let RuMode::Pathwise { step } = mode {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid pathwise step {step}")));
        }
    }
    Ok(rho0.to_bloch()?.components())
}

fn estimates_at(
    times: &[f64],
    rho0: &DensityMatrix,
    spec: &DirectionSpec,
    n_traj: usize,
    seed: u64,
    mode: RuMode,
) -> Result<Vec<RuEstimate>> {
    let b0 = validate(rho0, n_traj, mode)?;
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::NegativeTime(*t));
    }
    let sampler = spec.sampler()?;
    let moments = parallel_moments(seed, n_traj, WIDTH * times.len(), |rng, _, out| {
        sample_path(&sampler, b0, times, mode, rng, out)
    });
    times
        .iter()
        .enumerate()
        .map(|(m, &t)| {
            let col = |k: usize| m * WIDTH + k;
            let bloch: [f64; 3] = std::array::from_fn(|k| moments.mean(col(k)));
            let bloch_stderr = std::array::from_fn(|k| moments.stderr(col(k)));
            let (probs, probs_stderr) = match mode {
                RuMode::ExactPhase => {
                    let p: [f64; 4] = std::array::from_fn(|k| moments.mean(col(3 + k)));
                    let se = std::array::from_fn(|k| moments.stderr(col(3 + k)));
                    (PauliChannelProbs::new(p).ok(), Some(se))
                }
                RuMode::Pathwise { .. } => (None, None),
            };
            Ok(RuEstimate {
                t,
                samples: n_traj,
                state: state_from_mean_bloch(bloch)?,
                bloch,
                bloch_stderr,
                probs,
                probs_stderr,
            })
        })
        .collect()
}

/// Trajectory average at a single time.
pub fn ru_evolve(
    rho0: &DensityMatrix,
    t: f64,
    spec: &DirectionSpec,
    n_traj: usize,
    seed: u64,
    mode: RuMode,
) -> Result<RuEstimate> {
    let mut est = estimates_at(&[t], rho0, spec, n_traj, seed, mode)?;
    Ok(est.remove(0))
}

/// Trajectory averages on a grid, each trajectory sampled along the grid.
pub fn ru_ensemble(
    rho0: &DensityMatrix,
    spec: &DirectionSpec,
    grid: &TimeGrid,
    n_traj: usize,
    seed: u64,
    mode: RuMode,
) -> Result<TrajectoryRecord> {
    let est = estimates_at(&grid.times(), rho0, spec, n_traj, seed, mode)?;
    let mut rec = TrajectoryRecord::new(Method::RandomUnitary).with_sampling(seed, n_traj);
    for e in est {
        rec.push(TrajectoryPoint {
            t: e.t,
            state: e.state,
            probs: e.probs,
            bloch_stderr: Some(e.bloch_stderr),
        })?;
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic;
    use crate::qubit::MixtureWeights;

    fn plus() -> DensityMatrix {
        DensityMatrix::from_bloch(&BlochVector::new([1.0, 0.0, 0.0]).unwrap())
    }

    fn within(est: &RuEstimate, expect: [f64; 3], sigmas: f64) -> bool {
        (0..3).all(|k| (est.bloch[k] - expect[k]).abs() <= sigmas * est.bloch_stderr[k] + 1e-14)
    }

    #[test]
    fn rotation_examples() {
        let b = rotate([1.0, 0.0, 0.0], [0.0, 0.0, 1.0], std::f64::consts::FRAC_PI_2);
        assert!((b[1] - 1.0).abs() < 1e-15 && b[0].abs() < 1e-15);
        // same rotation as conjugation by exp(−iφσ3) with 2φ = π/2
        let phi = std::f64::consts::FRAC_PI_4;
        let u = crate::qubit::pauli(0) * num_complex::Complex64::new(phi.cos(), 0.0)
            - crate::qubit::pauli(3) * num_complex::Complex64::new(0.0, phi.sin());
        let rho = plus();
        let out = &u * rho.matrix() * u.adjoint();
        let bb = crate::qubit::bloch_components(&out);
        for k in 0..3 {
            assert!((bb[k] - b[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn fixed_axis_coherence_decays() {
        let spec = DirectionSpec::DiscreteAxes(MixtureWeights::vertex(2));
        let est = ru_evolve(&plus(), 1.0, &spec, 100_000, 1, RuMode::ExactPhase).unwrap();
        assert!(within(&est, [(-2.0f64).exp(), 0.0, 0.0], 3.0), "{:?}", est.bloch);
    }

    #[test]
    fn maximally_mixed_is_fixed() {
        let spec = DirectionSpec::UniformSphere;
        let rho = DensityMatrix::maximally_mixed(2);
        let est = ru_evolve(&rho, 2.0, &spec, 1000, 2, RuMode::ExactPhase).unwrap();
        assert_eq!(est.bloch, [0.0; 3]);
        assert_eq!(est.bloch_stderr, [0.0; 3]);
    }

    #[test]
    fn enm_mixture_matches_analytic() {
        let x = MixtureWeights::enm();
        let rho0 = DensityMatrix::from_bloch(&BlochVector::new([0.5, -0.4, 0.6]).unwrap());
        let spec = DirectionSpec::DiscreteAxes(x);
        let est = ru_evolve(&rho0, 2.0, &spec, 100_000, 3, RuMode::ExactPhase).unwrap();
        let expect = analytic::evolve(&x, &rho0, 2.0).unwrap().to_bloch().unwrap().components();
        assert!(within(&est, expect, 3.0));
        let p = analytic::channel_probs(&x, 2.0).unwrap().probs();
        let (q, se) = (est.probs.unwrap().probs(), est.probs_stderr.unwrap());
        for k in 0..4 {
            assert!((q[k] - p[k]).abs() <= 3.0 * se[k] + 1e-15);
        }
    }

    #[test]
    fn pathwise_agrees_with_exact_phase() {
        let x = MixtureWeights::new([0.6, 0.3, 0.1]).unwrap();
        let spec = DirectionSpec::GaussianAnisotropic(x);
        let rho0 = DensityMatrix::from_bloch(&BlochVector::new([0.3, 0.7, -0.5]).unwrap());
        let n = 20_000;
        let a = ru_evolve(&rho0, 1.0, &spec, n, 4, RuMode::ExactPhase).unwrap();
        let b = ru_evolve(&rho0, 1.0, &spec, n, 5, RuMode::Pathwise { step: 1e-3 }).unwrap();
        for k in 0..3 {
            let se = (a.bloch_stderr[k].powi(2) + b.bloch_stderr[k].powi(2)).sqrt();
            assert!((a.bloch[k] - b.bloch[k]).abs() < 3.0 * se, "{k}");
        }
        assert!(b.probs.is_none());
    }

    #[test]
    fn reproducible() {
        let spec = DirectionSpec::UniformSphere;
        let a = ru_evolve(&plus(), 0.7, &spec, 3000, 9, RuMode::ExactPhase).unwrap();
        let b = ru_evolve(&plus(), 0.7, &spec, 3000, 9, RuMode::ExactPhase).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_zero_trajectories() {
        let spec = DirectionSpec::UniformSphere;
        assert!(ru_evolve(&plus(), 1.0, &spec, 0, 1, RuMode::ExactPhase).is_err());
    }

    #[test]
    fn ensemble_on_grid() {
        let grid = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let x = MixtureWeights::symmetric();
        let rec = ru_ensemble(&plus(), &DirectionSpec::UniformSphere, &grid, 20_000, 4, RuMode::ExactPhase)
            .unwrap();
        assert_eq!(rec.len(), 5);
        assert_eq!(rec.samples, Some(20_000));
        for p in rec.points() {
            let b = p.state.to_bloch().unwrap().components();
            let e = analytic::evolve(&x, &plus(), p.t).unwrap().to_bloch().unwrap().components();
            let se = p.bloch_stderr.unwrap();
            for k in 0..3 {
                assert!((b[k] - e[k]).abs() <= 3.5 * se[k] + 1e-14);
            }
        }
    }
}
