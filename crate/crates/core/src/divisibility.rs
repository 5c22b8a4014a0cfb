//! CP-divisibility, P-divisibility, trace-distance monotonicity and the
//! geometric criterion for the mixture family, plus the search for a
//! positivity violation of the two-qubit extension `Λ_{t,s} ⊗ id`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{self, cpt_holds, lambdas};
use crate::integrators::TimeGrid;
use crate::qubit::{
    hadamard4, hermitian_eigenvalues, kron, max_abs_diff, pauli, random_density_matrix,
    random_ket, trace_norm, CMatrix, CVector, DensityMatrix, MixtureWeights,
};
use crate::stochastic::rng::stream_rng;
use crate::{Error, Result};

/// Rates below `−NEGATIVE_RATE_TOL` count as negative.
pub const NEGATIVE_RATE_TOL: f64 = 1e-10;
/// Choi eigenvalues below `−CHOI_TOL` make a Pauli map non-CP.
pub const CHOI_TOL: f64 = 1e-12;
/// Trace-distance derivatives above this value count as increase.
pub const BLP_TOL: f64 = 1e-8;
/// Finite-difference step for trace-norm derivatives.
pub const DERIVATIVE_STEP: f64 = 1e-6;
/// A two-qubit derivative above this value is reported as a violation.
pub const VIOLATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeFlags {
    pub t: f64,
    pub cpt: bool,
    pub cp_divisible: bool,
    pub p_divisible: bool,
    pub blp_monotone: bool,
    pub geometric_markov: bool,
    /// Largest sampled trace-distance derivative.
    pub max_blp_derivative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivisibilityReport {
    pub grid: TimeGrid,
    pub flags: Vec<TimeFlags>,
    /// Rate index and grid time where a rate first turns negative.
    pub first_negative_rate: Option<(usize, f64)>,
}

impl DivisibilityReport {
    pub fn all<F: Fn(&TimeFlags) -> bool>(&self, f: F) -> bool {
        self.flags.iter().all(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    /// Number of random state pairs for the trace-distance test.
    pub blp_pairs: usize,
    pub seed: u64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            blp_pairs: 1000,
            seed: 0x5eed,
        }
    }
}

pub fn classify(x: &MixtureWeights, grid: &TimeGrid) -> Result<DivisibilityReport> {
    classify_with(x, grid, &ClassifyOptions::default())
}

/// Random pure and mixed qubit state pairs, half of each kind.
pub fn sample_state_pairs(n: usize, seed: u64) -> Vec<(DensityMatrix, DensityMatrix)> {
    (0..n)
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            loop {
                let (a, b) = if i % 2 == 0 {
                    (
                        DensityMatrix::pure(&random_ket(2, &mut rng)).expect("normalised ket"),
                        DensityMatrix::pure(&random_ket(2, &mut rng)).expect("normalised ket"),
                    )
                } else {
                    (random_density_matrix(2, &mut rng), random_density_matrix(2, &mut rng))
                };
                if max_abs_diff(a.matrix(), b.matrix()) > 1e-6 {
                    break (a, b);
                }
            }
        })
        .collect()
}

pub fn classify_with(
    x: &MixtureWeights,
    grid: &TimeGrid,
    opts: &ClassifyOptions,
) -> Result<DivisibilityReport> {
    let pairs = sample_state_pairs(opts.blp_pairs, opts.seed);
    let flags: Vec<Result<TimeFlags>> = grid
        .times()
        .into_par_iter()
        .map(|t| {
            let r = analytic::rates(x, t)?;
            let g = r.gamma;
            let cp_divisible = g.iter().all(|&v| v >= -NEGATIVE_RATE_TOL);
            let p_divisible = (0..3).all(|i| g[i] + g[(i + 1) % 3] >= -NEGATIVE_RATE_TOL);
            let mut max_blp = f64::NEG_INFINITY;
            for (a, b) in &pairs {
                max_blp = max_blp.max(blp_derivative(x, a, b, t)?);
            }
            Ok(TimeFlags {
                t,
                cpt: cpt_holds(&lambdas(x, t)?),
                cp_divisible,
                p_divisible,
                blp_monotone: max_blp <= BLP_TOL,
                geometric_markov: r.gamma0 > 0.0,
                max_blp_derivative: max_blp,
            })
        })
        .collect();
    let flags = flags.into_iter().collect::<Result<Vec<_>>>()?;
    let mut first_negative_rate = None;
    for f in &flags {
        let r = analytic::rates(x, f.t)?;
        if let Some(&k) = r.negative_indices(NEGATIVE_RATE_TOL).first() {
            first_negative_rate = Some((k, f.t));
            break;
        }
    }
    Ok(DivisibilityReport {
        grid: *grid,
        flags,
        first_negative_rate,
    })
}

/// The propagator `Λ_{t,s}` with `Λ_t = Λ_{t,s} Λ_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntermediateMap {
    pub s: f64,
    pub t: f64,
    /// Bloch eigenvalues `ξ_k = λ_k(t)/λ_k(s)`.
    pub xi: [f64; 3],
    /// Choi eigenvalues `¼ H (1, ξ1, ξ2, ξ3)`, i.e. the Pauli weights.
    pub choi: [f64; 4],
    pub cp: bool,
    pub p: bool,
}

pub fn intermediate_map(x: &MixtureWeights, s: f64, t: f64) -> Result<IntermediateMap> {
    if !(s >= 0.0) {
        return Err(Error::NegativeTime(s));
    }
    if !(s < t) {
        return Err(Error::InvalidArgument(format!("need s < t, got s={s}, t={t}")));
    }
    let ls = lambdas(x, s)?.lambda;
    let lt = lambdas(x, t)?.lambda;
    if ls.contains(&0.0) {
        return Err(Error::InvalidArgument(format!("Λ_s is not invertible at s={s}")));
    }
    let xi: [f64; 3] = std::array::from_fn(|k| lt[k] / ls[k]);
    let choi = hadamard4([1.0, xi[0], xi[1], xi[2]]).map(|v| 0.25 * v);
    Ok(IntermediateMap {
        s,
        t,
        xi,
        choi,
        cp: choi.iter().all(|&c| c >= -CHOI_TOL),
        p: xi.iter().all(|v| v.abs() <= 1.0 + CHOI_TOL),
    })
}

/// `d/dt ‖Λ_t[ρ1 − ρ2]‖₁` by central differences (forward near `t = 0`).
pub fn blp_derivative(
    x: &MixtureWeights,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    t: f64,
) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let d = rho1.matrix() - rho2.matrix();
    if d.iter().all(|z| z.norm() == 0.0) {
        return Err(Error::InvalidArgument("the two states coincide".into()));
    }
    let norm_at = |u: f64| -> Result<f64> {
        let p = analytic::channel_probs(x, u)?;
        trace_norm(&crate::qubit::apply_pauli_operator(&p.probs(), &d))
    };
    let h = DERIVATIVE_STEP;
    if t >= h {
        Ok((norm_at(t + h)? - norm_at(t - h)?) / (2.0 * h))
    } else {
        Ok((norm_at(t + h)? - norm_at(t)?) / h)
    }
}

/// `Σ_j c_j (σ_j ⊗ 𝟙) X (σ_j ⊗ 𝟙)` on a two-qubit operator.
pub fn apply_pauli_on_first(c: &[f64; 4], x: &CMatrix) -> CMatrix {
    let id = CMatrix::identity(2, 2);
    let mut out = CMatrix::zeros(4, 4);
    for (j, cj) in c.iter().enumerate() {
        if *cj != 0.0 {
            let s = kron(&pauli(j), &id);
            out += (&s * x * &s) * Complex64::new(*cj, 0.0);
        }
    }
    out
}

fn extended_norm(x: &MixtureWeights, op: &CMatrix, s: f64, t: f64) -> Result<f64> {
    let m = intermediate_map(x, s, t)?;
    let out = apply_pauli_on_first(&m.choi, op);
    Ok(hermitian_eigenvalues(&out).iter().map(|v| v.abs()).sum())
}

/// `d/dt ‖(Λ_{t,s} ⊗ id)[X]‖₁` by central differences.
pub fn extended_blp_derivative(x: &MixtureWeights, op: &CMatrix, s: f64, t: f64) -> Result<f64> {
    let h = DERIVATIVE_STEP;
    if !(t - h > s) {
        return Err(Error::InvalidArgument(format!("need t > s + {h}, got s={s}, t={t}")));
    }
    Ok((extended_norm(x, op, s, t + h)? - extended_norm(x, op, s, t - h)?) / (2.0 * h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessFamily {
    BellDifference,
    MaximallyEntangledDifference,
    PureStateDifference,
    RandomTraceless,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    /// Traceless Hermitian operator on `C^2 ⊗ C^2`.
    pub operator: CMatrix,
    pub family: WitnessFamily,
    pub s: f64,
    pub t: f64,
    pub derivative: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationResult {
    /// Largest derivative seen over all candidates.
    pub max_derivative: f64,
    /// Best witness, present when `max_derivative > VIOLATION_TOL`.
    pub witness: Option<Witness>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationSearch {
    pub s_values: Vec<f64>,
    /// `t = s + offset` for each offset.
    pub t_offsets: Vec<f64>,
    /// Random candidates per family and `(s, t)` pair.
    pub samples: usize,
    /// Hill-climbing proposals applied to the best candidate.
    pub refine_iters: usize,
    pub seed: u64,
}

impl Default for ViolationSearch {
    fn default() -> Self {
        Self {
            s_values: (0..16).map(|i| 0.5 + 0.1 * i as f64).collect(),
            t_offsets: vec![0.1],
            samples: 64,
            refine_iters: 300,
            seed: 2024,
        }
    }
}

fn projector_of(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

fn bell_states() -> [CVector; 4] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let c = |a: [f64; 4]| CVector::from_iterator(4, a.iter().map(|v| Complex64::new(v * r, 0.0)));
    [
        c([1.0, 0.0, 0.0, 1.0]),
        c([1.0, 0.0, 0.0, -1.0]),
        c([0.0, 1.0, 1.0, 0.0]),
        c([0.0, 1.0, -1.0, 0.0]),
    ]
}

fn random_unitary2<R: Rng + ?Sized>(rng: &mut R) -> CMatrix {
    // normalised quaternion
    let q = random_ket(2, rng);
    let (a, b) = (q[0], q[1]);
    CMatrix::from_row_slice(2, 2, &[a, -b.conj(), b, a.conj()])
}

fn random_traceless<R: Rng + ?Sized>(rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(4, 4, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let mut h = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let tr = h.trace() / Complex64::new(4.0, 0.0);
    for i in 0..4 {
        h[(i, i)] -= tr;
    }
    h
}

/// Candidate generator: either a pair of kets (difference of projectors) or
/// a free traceless operator.
#[derive(Debug, Clone)]
enum Candidate {
    Kets(CVector, CVector),
    Operator(CMatrix),
}

/// Best derivative, candidate, family, `s`, `t` and evaluation count for one `(s, t)`.
type PairBest = (f64, Candidate, WitnessFamily, f64, f64, usize);

impl Candidate {
    fn operator(&self) -> CMatrix {
        match self {
            Candidate::Kets(a, b) => projector_of(a) - projector_of(b),
            Candidate::Operator(m) => m.clone(),
        }
    }

    fn perturb<R: Rng + ?Sized>(&self, scale: f64, rng: &mut R) -> Candidate {
        let jitter = |v: &CVector, rng: &mut R| {
            let d = random_ket(v.len(), rng) * Complex64::new(scale, 0.0);
            let w = v + d;
            let n = w.norm();
            w / Complex64::new(n, 0.0)
        };
        match self {
            Candidate::Kets(a, b) => {
                let a2 = jitter(a, rng);
                let b2 = jitter(b, rng);
                Candidate::Kets(a2, b2)
            }
            Candidate::Operator(m) => {
                Candidate::Operator(m + random_traceless(rng) * Complex64::new(scale, 0.0))
            }
        }
    }
}

fn normalized_derivative(x: &MixtureWeights, c: &Candidate, s: f64, t: f64) -> Result<f64> {
    let op = c.operator();
    let n = trace_norm(&op)?;
    if n < 1e-12 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(extended_blp_derivative(x, &op, s, t)? / n)
}

/// Seeded search for `d/dt ‖(Λ_{t,s} ⊗ id)[X]‖₁ > 0` over traceless
/// Hermitian `X` normalised to unit trace norm.
///
/// Candidates: differences of Bell projectors, of random maximally entangled
/// projectors, of random pure projectors, and random traceless operators.
/// The best candidate is refined by hill climbing at its `(s, t)`.
pub fn two_qubit_violation(x: &MixtureWeights, search: &ViolationSearch) -> Result<ViolationResult> {
    if search.s_values.is_empty() || search.t_offsets.is_empty() {
        return Err(Error::InvalidArgument("empty search grid".into()));
    }
    let pairs: Vec<(f64, f64)> = search
        .s_values
        .iter()
        .flat_map(|&s| search.t_offsets.iter().map(move |&o| (s, s + o)))
        .collect();
    let bell = bell_states();
    let phi_plus = bell[0].clone();

    let per_pair: Vec<Result<PairBest>> = pairs
        .par_iter()
        .enumerate()
        .map(|(idx, &(s, t))| {
            let mut rng = stream_rng(search.seed, idx as u64);
            let mut cands: Vec<(Candidate, WitnessFamily)> = Vec::new();
            for i in 0..4 {
                for j in 0..4 {
                    if i != j {
                        cands.push((
                            Candidate::Kets(bell[i].clone(), bell[j].clone()),
                            WitnessFamily::BellDifference,
                        ));
                    }
                }
            }
            let id = CMatrix::identity(2, 2);
            for _ in 0..search.samples {
                let ua = kron(&random_unitary2(&mut rng), &id);
                let ub = kron(&random_unitary2(&mut rng), &id);
                cands.push((
                    Candidate::Kets(&ua * &phi_plus, &ub * &phi_plus),
                    WitnessFamily::MaximallyEntangledDifference,
                ));
                cands.push((
                    Candidate::Kets(random_ket(4, &mut rng), random_ket(4, &mut rng)),
                    WitnessFamily::PureStateDifference,
                ));
                cands.push((
                    Candidate::Operator(random_traceless(&mut rng)),
                    WitnessFamily::RandomTraceless,
                ));
            }
            let mut best = (f64::NEG_INFINITY, cands[0].0.clone(), cands[0].1);
            for (c, fam) in &cands {
                let d = normalized_derivative(x, c, s, t)?;
                if d > best.0 {
                    best = (d, c.clone(), *fam);
                }
            }
            Ok((best.0, best.1, best.2, s, t, cands.len()))
        })
        .collect();

    let mut evaluations = 0;
    let mut best: Option<(f64, Candidate, WitnessFamily, f64, f64)> = None;
    for r in per_pair {
        let (d, c, fam, s, t, n) = r?;
        evaluations += n;
        if best.as_ref().is_none_or(|b| d > b.0) {
            best = Some((d, c, fam, s, t));
        }
    }
    let (mut d, mut cand, fam, s, t) = best.expect("non-empty search grid");

    let mut rng = stream_rng(search.seed, u64::MAX);
    let mut scale = 0.3;
    for _ in 0..search.refine_iters {
        let trial = cand.perturb(scale, &mut rng);
        let dt = normalized_derivative(x, &trial, s, t)?;
        evaluations += 1;
        if dt > d {
            d = dt;
            cand = trial;
        } else {
            scale = (scale * 0.97).max(1e-3);
        }
    }

    let witness = (d > VIOLATION_TOL).then(|| {
        let op = cand.operator();
        let n = trace_norm(&op).unwrap_or(1.0);
        Witness {
            operator: op / Complex64::new(n, 0.0),
            family: fam,
            s,
            t,
            derivative: d,
        }
    });
    Ok(ViolationResult {
        max_derivative: d,
        witness,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::{projector, BlochVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w(x: [f64; 3]) -> MixtureWeights {
        MixtureWeights::new(x).unwrap()
    }

    fn grid() -> TimeGrid {
        TimeGrid::new(0.0, 5.0, 50).unwrap()
    }

    fn quick() -> ClassifyOptions {
        ClassifyOptions {
            blp_pairs: 100,
            seed: 1,
        }
    }

    #[test]
    fn enm_classification() {
        let r = classify_with(&MixtureWeights::enm(), &grid(), &quick()).unwrap();
        for f in &r.flags {
            assert!(f.cpt && f.p_divisible && f.blp_monotone && f.geometric_markov);
            assert_eq!(f.cp_divisible, f.t == 0.0, "t={}", f.t);
        }
        assert_eq!(r.first_negative_rate, Some((2, 0.1)));
    }

    #[test]
    fn vertex_and_center_are_cp_divisible() {
        for x in [MixtureWeights::vertex(0), MixtureWeights::symmetric()] {
            let r = classify_with(&x, &grid(), &quick()).unwrap();
            assert!(r.all(|f| f.cpt && f.cp_divisible && f.p_divisible && f.blp_monotone));
            assert!(r.first_negative_rate.is_none());
        }
    }

    #[test]
    fn logical_chain_on_random_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let x = MixtureWeights::sample_uniform(&mut rng);
            let r = classify_with(&x, &grid(), &quick()).unwrap();
            for f in &r.flags {
                assert!(!f.cp_divisible || f.p_divisible);
                assert!(!f.p_divisible || f.blp_monotone);
                assert!(f.p_divisible && f.geometric_markov && f.cpt);
            }
        }
    }

    #[test]
    fn intermediate_map_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let x = MixtureWeights::sample_uniform(&mut rng);
            let m = intermediate_map(&x, 0.0, 1.3).unwrap();
            assert!(m.cp && m.p);
        }
        let m = intermediate_map(&MixtureWeights::enm(), 1.0, 2.0).unwrap();
        assert!(!m.cp && m.p);
        assert!(m.choi[3] < 0.0);
        let m = intermediate_map(&MixtureWeights::vertex(0), 0.4, 3.0).unwrap();
        assert!(m.cp);
        assert!(intermediate_map(&MixtureWeights::enm(), 2.0, 2.0).is_err());
    }

    /// The Choi weights are exactly the probabilities of a Pauli channel, so
    /// they must equal the eigenvalues of the brute-force Choi matrix.
    #[test]
    fn choi_weights_match_brute_force_choi() {
        let m = intermediate_map(&w([0.6, 0.3, 0.1]), 0.5, 2.5).unwrap();
        let choi = crate::qubit::choi_matrix(2, |e| crate::qubit::apply_pauli_operator(&m.choi, e));
        let mut ev = hermitian_eigenvalues(&choi);
        let mut expect: Vec<f64> = m.choi.iter().map(|v| 2.0 * v).collect();
        ev.sort_by(f64::total_cmp);
        expect.sort_by(f64::total_cmp);
        for k in 0..4 {
            assert!((ev[k] - expect[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn blp_examples() {
        let x = MixtureWeights::enm();
        let up = DensityMatrix::new(projector(2, 0)).unwrap();
        let down = DensityMatrix::new(projector(2, 1)).unwrap();
        for t in [0.3, 1.0, 2.0] {
            let d = blp_derivative(&x, &up, &down, t).unwrap();
            assert!((d + 4.0 * (-2.0 * t).exp()).abs() < 1e-8, "{d}");
        }
        assert!(blp_derivative(&x, &up, &up, 1.0).is_err());
    }

    #[test]
    fn blp_sweep_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pairs = sample_state_pairs(1000, 6);
        for (a, b) in &pairs {
            let x = MixtureWeights::sample_uniform(&mut rng);
            let t: f64 = 5.0 * rng.random::<f64>();
            assert!(blp_derivative(&x, a, b, t).unwrap() <= BLP_TOL);
        }
    }

    #[test]
    fn cp_flags_agree_with_rate_signs_on_refining_grids() {
        for x in [w([0.6, 0.3, 0.1]), MixtureWeights::enm(), MixtureWeights::symmetric()] {
            let report = classify_with(&x, &grid(), &quick()).unwrap();
            let rate_says_not_cp = report.flags.iter().any(|f| !f.cp_divisible);
            for steps in [10, 40, 160] {
                let g = TimeGrid::new(0.0, 5.0, steps).unwrap().times();
                let any = g
                    .windows(2)
                    .any(|p| !intermediate_map(&x, p[0], p[1]).unwrap().cp);
                assert_eq!(any, rate_says_not_cp, "{x:?} steps={steps}");
            }
        }
    }

    #[test]
    fn bell_diagonal_differences_do_not_witness() {
        let bell = bell_states();
        let x = MixtureWeights::enm();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    let op = projector_of(&bell[i]) - projector_of(&bell[j]);
                    let d = extended_blp_derivative(&x, &op, 1.0, 1.1).unwrap();
                    assert!(d <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn qubit_witness_embedding_is_consistent() {
        // for product operators X ⊗ |0⟩⟨0| the extended norm is the qubit norm
        let x = w([0.6, 0.3, 0.1]);
        let a = DensityMatrix::from_bloch(&BlochVector::new([0.2, 0.1, 0.5]).unwrap());
        let b = DensityMatrix::from_bloch(&BlochVector::new([-0.3, 0.4, 0.1]).unwrap());
        let d = a.matrix() - b.matrix();
        let op = kron(&d, &projector(2, 0));
        let n2 = extended_norm(&x, &op, 0.0, 1.0).unwrap();
        let p = analytic::channel_probs(&x, 1.0).unwrap().probs();
        let n1 = trace_norm(&crate::qubit::apply_pauli_operator(&p, &d)).unwrap();
        assert!((n1 - n2).abs() < 1e-12);
    }

    #[test]
    fn two_qubit_search() {
        let search = ViolationSearch {
            samples: 16,
            refine_iters: 100,
            ..ViolationSearch::default()
        };
        let r = two_qubit_violation(&MixtureWeights::enm(), &search).unwrap();
        let wit = r.witness.expect("violation for ENM weights");
        assert!(wit.derivative > VIOLATION_TOL);
        assert!(wit.operator.trace().norm() < 1e-12);
        let d = extended_blp_derivative(&MixtureWeights::enm(), &wit.operator, wit.s, wit.t).unwrap();
        assert!((d - wit.derivative).abs() < 1e-6);

        let r = two_qubit_violation(&MixtureWeights::vertex(0), &search).unwrap();
        assert!(r.witness.is_none(), "max {}", r.max_derivative);
    }
}
