//! Random dephasing directions with prescribed second moments `⟨n_k²⟩ = x_k`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::quad::adaptive_simpson;
use crate::qubit::{random_unit_vector, MixtureWeights};
use crate::{Error, Result};

const CALIBRATION_TOL: f64 = 1e-12;
const CALIBRATION_MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "weights", rename_all = "kebab-case")]
pub enum DirectionSpec {
    /// `±e_k` with probability `x_k`.
    DiscreteAxes(MixtureWeights),
    /// Normalised anisotropic Gaussian vector, variances calibrated so that
    /// the second moments of the unit vector equal the weights.
    GaussianAnisotropic(MixtureWeights),
    UniformSphere,
}

impl DirectionSpec {
    pub fn weights(&self) -> MixtureWeights {
        match self {
            DirectionSpec::DiscreteAxes(x) | DirectionSpec::GaussianAnisotropic(x) => *x,
            DirectionSpec::UniformSphere => MixtureWeights::symmetric(),
        }
    }

    pub fn sampler(&self) -> Result<DirectionSampler> {
        let variances = match self {
            DirectionSpec::GaussianAnisotropic(x) => calibrate_variances(x)?,
            _ => [0.0; 3],
        };
        Ok(DirectionSampler {
            spec: *self,
            variances,
        })
    }
}

/// A [`DirectionSpec`] with its calibration done once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionSampler {
    spec: DirectionSpec,
    variances: [f64; 3],
}

impl DirectionSampler {
    pub fn spec(&self) -> DirectionSpec {
        self.spec
    }

    /// Calibrated Gaussian variances (zero for the other kinds).
    pub fn variances(&self) -> [f64; 3] {
        self.variances
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 3] {
        match self.spec {
            DirectionSpec::DiscreteAxes(x) => {
                let k = pick_axis(&x, rng);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let mut n = [0.0; 3];
                n[k] = sign;
                n
            }
            DirectionSpec::GaussianAnisotropic(_) => loop {
                let g: [f64; 3] = std::array::from_fn(|k| {
                    let z: f64 = StandardNormal.sample(rng);
                    z * self.variances[k].sqrt()
                });
                let r = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
                if r > 1e-300 {
                    break g.map(|v| v / r);
                }
            },
            DirectionSpec::UniformSphere => random_unit_vector(rng),
        }
    }
}

/// Draws an axis index with probability `x_k`, never returning a zero weight.
pub fn pick_axis<R: Rng + ?Sized>(x: &MixtureWeights, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let w = x.as_array();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, wk) in w.iter().enumerate() {
        if *wk == 0.0 {
            continue;
        }
        acc += wk;
        last = k;
        if u < acc {
            return k;
        }
    }
    last
}

/// One-off sample; builds the sampler each call.
pub fn sample_direction<R: Rng + ?Sized>(spec: &DirectionSpec, rng: &mut R) -> Result<[f64; 3]> {
    Ok(spec.sampler()?.sample(rng))
}

/// `E[n_k²]` for `n = g/|g|`, `g_k ~ N(0, v_k)` independent.
///
/// Uses `1/|g|² = ∫_0^∞ e^{−s|g|²} ds`, which gives
/// `m_k = ∫_0^∞ v_k (1 + 2 v_k s)^{−1} Π_j (1 + 2 v_j s)^{−1/2} ds`.
pub fn normalized_second_moments(v: [f64; 3]) -> [f64; 3] {
    std::array::from_fn(|k| {
        if v[k] == 0.0 {
            return 0.0;
        }
        let integrand = |u: f64| {
            if u >= 1.0 {
                return 0.0;
            }
            let s = u / (1.0 - u);
            let jac = 1.0 / ((1.0 - u) * (1.0 - u));
            let prod: f64 = v.iter().map(|vj| (1.0 + 2.0 * vj * s).powf(-0.5)).product();
            v[k] / (1.0 + 2.0 * v[k] * s) * prod * jac
        };
        adaptive_simpson(integrand, 0.0, 1.0, 1e-14)
    })
}

/// Variances `v` (summing to one) with `normalized_second_moments(v) = x`.
pub fn calibrate_variances(x: &MixtureWeights) -> Result<[f64; 3]> {
    let target = x.as_array();
    if x.is_vertex() {
        return Ok(target);
    }
    let mut v = target;
    for _ in 0..CALIBRATION_MAX_ITER {
        let m = normalized_second_moments(v);
        let err = (0..3).map(|k| (m[k] - target[k]).abs()).fold(0.0, f64::max);
        if err < CALIBRATION_TOL {
            return Ok(v);
        }
        for k in 0..3 {
            if target[k] > 0.0 {
                v[k] *= target[k] / m[k];
            }
        }
        let s: f64 = v.iter().sum();
        v = v.map(|vk| vk / s);
    }
    Err(Error::InvalidArgument(format!(
        "variance calibration did not converge for weights {target:?}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::rng::parallel_moments;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w(x: [f64; 3]) -> MixtureWeights {
        MixtureWeights::new(x).unwrap()
    }

    fn second_moments(spec: DirectionSpec, n: usize, seed: u64) -> crate::stochastic::rng::Moments {
        let sampler = spec.sampler().unwrap();
        parallel_moments(seed, n, 3, |rng, _, out| {
            let d = sampler.sample(rng);
            let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
            for k in 0..3 {
                out[k] = d[k] * d[k];
            }
        })
    }

    #[test]
    fn discrete_vertex_is_fixed_axis() {
        let spec = DirectionSpec::DiscreteAxes(MixtureWeights::vertex(0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let n = sample_direction(&spec, &mut rng).unwrap();
            assert_eq!(n[0].abs(), 1.0);
            assert_eq!(n[1], 0.0);
            assert_eq!(n[2], 0.0);
        }
    }

    #[test]
    fn isotropic_gaussian_moments_are_a_third() {
        let m = normalized_second_moments([1.0 / 3.0; 3]);
        for v in m {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
        // two equal variances: each normalized moment is one half
        let m = normalized_second_moments([0.5, 0.5, 0.0]);
        assert!((m[0] - 0.5).abs() < 1e-12 && m[2] == 0.0);
    }

    #[test]
    fn calibration_hits_targets() {
        for x in [[0.6, 0.3, 0.1], [0.8, 0.15, 0.05], [0.7, 0.3, 0.0]] {
            let v = calibrate_variances(&w(x)).unwrap();
            let m = normalized_second_moments(v);
            for k in 0..3 {
                assert!((m[k] - x[k]).abs() < 1e-11, "{x:?} -> {m:?}");
            }
        }
    }

    #[test]
    fn sphere_moments() {
        let m = second_moments(DirectionSpec::UniformSphere, 1_000_000, 5);
        for k in 0..3 {
            assert!((m.mean(k) - 1.0 / 3.0).abs() < 3.0 * m.stderr(k));
        }
    }

    #[test]
    fn gaussian_edge_has_no_third_component() {
        let m = second_moments(DirectionSpec::GaussianAnisotropic(MixtureWeights::enm()), 200_000, 6);
        assert_eq!(m.mean(2), 0.0);
        assert!((m.mean(0) - 0.5).abs() < 3.0 * m.stderr(0));
    }

    #[test]
    fn calibrated_gaussian_moments() {
        let x = [0.6, 0.3, 0.1];
        let m = second_moments(DirectionSpec::GaussianAnisotropic(w(x)), 400_000, 8);
        for k in 0..3 {
            assert!((m.mean(k) - x[k]).abs() < 3.5 * m.stderr(k), "{k}: {}", m.mean(k));
        }
    }

    #[test]
    fn discrete_moments() {
        let x = [0.6, 0.3, 0.1];
        let m = second_moments(DirectionSpec::DiscreteAxes(w(x)), 200_000, 9);
        for k in 0..3 {
            assert!((m.mean(k) - x[k]).abs() < 3.5 * m.stderr(k));
        }
    }
}
