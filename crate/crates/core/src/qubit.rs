//! Dense complex matrices, qubit states and Pauli channels.
//!
//! Everything here is small (at most 64×64), so matrices are stored densely
//! and eigenvalues are obtained from a direct Hermitian eigensolver.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Maximum tolerated deviation from Hermiticity for states.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Maximum tolerated deviation of a trace from one.
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted for a positive semidefinite state.
pub const PSD_TOL: f64 = 1e-10;
/// Hermiticity tolerance for inputs to [`trace_norm`].
pub const OPERATOR_HERMITIAN_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Pauli matrix σ_k for k = 0..=3 (σ_0 is the identity).
pub fn pauli(k: usize) -> CMatrix {
    match k {
        0 => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE]),
        1 => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        2 => CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        3 => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        _ => panic!("pauli index {k} out of range"),
    }
}

/// `n·σ` for a real 3-vector `n`.
pub fn pauli_along(n: [f64; 3]) -> CMatrix {
    let mut m = CMatrix::zeros(2, 2);
    for (k, nk) in n.iter().enumerate() {
        m += pauli(k + 1) * Complex64::new(*nk, 0.0);
    }
    m
}

/// Projector |i⟩⟨i| on a `dim`-dimensional space.
pub fn projector(dim: usize, i: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(i, i)] = ONE;
    m
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Largest entrywise modulus of `m − m†`.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Largest entrywise modulus of `a − b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Real eigenvalues of a Hermitian matrix in ascending order.
///
/// The anti-Hermitian part of the input is ignored.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    assert!(m.is_square(), "eigenvalues of a non-square matrix");
    let mut ev: Vec<f64> = if m.nrows() == 2 {
        let a = m[(0, 0)].re;
        let d = m[(1, 1)].re;
        let b = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        vec![mean - r, mean + r]
    } else {
        let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().collect()
    };
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of the
/// Hermitian part of `m`.
///
/// When all eigenvalues coincide within `1e-12` the computational basis is
/// returned, so degenerate inputs get a reproducible eigenbasis.
pub fn hermitian_eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    assert!(m.is_square(), "eigendecomposition of a non-square matrix");
    let n = m.nrows();
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if values[n - 1] - values[0] < 1e-12 {
        return (values, CMatrix::identity(n, n));
    }
    let mut vecs = CMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (values, vecs)
}

/// Trace norm `Σ|λ_i|` of a Hermitian operator.
pub fn trace_norm(m: &CMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "trace norm of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let dev = hermiticity_deviation(m);
    if dev > OPERATOR_HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    Ok(hermitian_eigenvalues(m).iter().map(|l| l.abs()).sum())
}

/// Partial trace of an operator on `⊗ dims`, keeping the factors in `keep`.
///
/// Factor 0 is the most significant in the Kronecker ordering. Keeping no
/// factor returns the 1×1 matrix holding the full trace.
pub fn partial_trace_matrix(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.nrows() != total {
        return Err(Error::DimensionMismatch(format!(
            "operator of size {}x{} on factors {:?}",
            m.nrows(),
            m.ncols(),
            dims
        )));
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::DimensionMismatch(format!(
            "keep indices {keep:?} out of range for {} factors",
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let out_dim: usize = keep.iter().map(|&k| dims[k]).product();

    let digits = |mut idx: usize| -> Vec<usize> {
        let mut d = vec![0; dims.len()];
        for k in (0..dims.len()).rev() {
            d[k] = idx % dims[k];
            idx /= dims[k];
        }
        d
    };
    let compose = |digits: &[usize], which: &[usize]| -> usize {
        which.iter().fold(0, |acc, &k| acc * dims[k] + digits[k])
    };

    let all_digits: Vec<Vec<usize>> = (0..total).map(digits).collect();
    let mut out = CMatrix::zeros(out_dim, out_dim);
    for r in 0..total {
        let dr = &all_digits[r];
        for c in 0..total {
            let dc = &all_digits[c];
            if traced.iter().all(|&k| dr[k] == dc[k]) {
                out[(compose(dr, &keep), compose(dc, &keep))] += m[(r, c)];
            }
        }
    }
    Ok(out)
}

/// Real Bloch vector of a qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlochVector([f64; 3]);

impl BlochVector {
    pub fn new(b: [f64; 3]) -> Result<Self> {
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidState(format!("non-finite Bloch vector {b:?}")));
        }
        let norm2: f64 = b.iter().map(|v| v * v).sum();
        if norm2 > 1.0 + 1e-12 {
            return Err(Error::InvalidState(format!(
                "Bloch vector norm {} exceeds one",
                norm2.sqrt()
            )));
        }
        Ok(Self(b))
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    /// Validates `mat` and stores its Hermitian part.
    pub fn new(mat: CMatrix) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let dev = hermiticity_deviation(&mat);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let mat = (&mat + mat.adjoint()) * Complex64::new(0.5, 0.0);
        let tr = mat.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from one")));
        }
        let min_ev = hermitian_eigenvalues(&mat)[0];
        if min_ev < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_ev:e}"
            )));
        }
        Ok(Self(mat))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0))
    }

    /// `|ψ⟩⟨ψ|` for a ket, normalised on the way in.
    pub fn pure(ket: &CVector) -> Result<Self> {
        let norm = ket.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite ket".into()));
        }
        let k = ket / Complex64::new(norm, 0.0);
        Self::new(&k * k.adjoint())
    }

    /// Computational basis state |i⟩⟨i|.
    pub fn basis(dim: usize, i: usize) -> Self {
        Self(projector(dim, i))
    }

    pub fn from_bloch(b: &BlochVector) -> Self {
        let [b1, b2, b3] = b.0;
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.5 * (1.0 + b3), 0.0),
                Complex64::new(0.5 * b1, -0.5 * b2),
                Complex64::new(0.5 * b1, 0.5 * b2),
                Complex64::new(0.5 * (1.0 - b3), 0.0),
            ],
        );
        Self(m)
    }

    /// Bloch vector of a qubit state.
    pub fn to_bloch(&self) -> Result<BlochVector> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "Bloch vector of a {}-dimensional state",
                self.dim()
            )));
        }
        Ok(BlochVector(bloch_components(&self.0)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.0)
    }

    pub fn partial_trace(&self, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
        partial_trace(self, dims, keep)
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "trace distance between dimensions {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(0.5 * trace_norm(&(&self.0 - &other.0))?)
    }

    /// `ρ ⊗ τ`.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self(kron(&self.0, &other.0))
    }
}

/// Pauli expectation values `Tr(ρ σ_k)` of a 2×2 operator.
pub fn bloch_components(m: &CMatrix) -> [f64; 3] {
    [
        2.0 * m[(1, 0)].re,
        2.0 * m[(1, 0)].im,
        (m[(0, 0)] - m[(1, 1)]).re,
    ]
}

pub fn from_bloch(b: &BlochVector) -> DensityMatrix {
    DensityMatrix::from_bloch(b)
}

/// Reduced state on the factors listed in `keep`.
pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    DensityMatrix::new(partial_trace_matrix(rho.matrix(), dims, keep)?)
}

/// `H·v` with the character table of the Klein four-group.
///
/// `¼·H·H` is the identity, so `¼·hadamard4(hadamard4(v)) == v`.
pub fn hadamard4(v: [f64; 4]) -> [f64; 4] {
    [
        v[0] + v[1] + v[2] + v[3],
        v[0] + v[1] - v[2] - v[3],
        v[0] - v[1] + v[2] - v[3],
        v[0] - v[1] - v[2] + v[3],
    ]
}

/// Probabilities `(p0, p1, p2, p3)` of the Pauli channel `ρ ↦ Σ p_j σ_j ρ σ_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PauliChannelProbs([f64; 4]);

impl PauliChannelProbs {
    pub fn new(p: [f64; 4]) -> Result<Self> {
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProbabilities(format!("non-finite entry in {p:?}")));
        }
        if p.iter().any(|&v| v < -1e-12) {
            return Err(Error::InvalidProbabilities(format!("negative entry in {p:?}")));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidProbabilities(format!("entries sum to {s}")));
        }
        Ok(Self(p))
    }

    pub fn identity() -> Self {
        Self([1.0, 0.0, 0.0, 0.0])
    }

    /// Channel with Bloch eigenvalues `(λ1, λ2, λ3)`.
    pub fn from_lambdas(lambda: [f64; 3]) -> Result<Self> {
        let h = hadamard4([1.0, lambda[0], lambda[1], lambda[2]]);
        Self::new(h.map(|v| 0.25 * v))
    }

    pub fn probs(&self) -> [f64; 4] {
        self.0
    }

    /// Bloch eigenvalues `(λ1, λ2, λ3)`.
    pub fn lambdas(&self) -> [f64; 3] {
        let h = hadamard4(self.0);
        [h[1], h[2], h[3]]
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "Pauli channel on a {}-dimensional state",
                rho.dim()
            )));
        }
        DensityMatrix::new(apply_pauli_operator(&self.0, rho.matrix()))
    }
}

pub fn apply_pauli_channel(p: &PauliChannelProbs, rho: &DensityMatrix) -> Result<DensityMatrix> {
    p.apply(rho)
}

/// `Σ c_j σ_j X σ_j` for an arbitrary 2×2 operator and arbitrary real weights.
pub fn apply_pauli_operator(c: &[f64; 4], x: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(2, 2);
    for (j, cj) in c.iter().enumerate() {
        if *cj != 0.0 {
            let s = pauli(j);
            out += (&s * x * &s) * Complex64::new(*cj, 0.0);
        }
    }
    out
}

/// Weights `(x1, x2, x3)` of the three Cartesian dephasing semigroups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixtureWeights([f64; 3]);

impl MixtureWeights {
    pub fn new(x: [f64; 3]) -> Result<Self> {
        Self::with_tolerance(x, 1e-12)
    }

    /// Validates with a custom tolerance on the sum, then renormalises.
    pub fn with_tolerance(x: [f64; 3], tol: f64) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidWeights(format!(
                "weights must be finite and non-negative, got {x:?}"
            )));
        }
        let s: f64 = x.iter().sum();
        if (s - 1.0).abs() > tol {
            return Err(Error::InvalidWeights(format!("weights sum to {s}")));
        }
        Ok(Self(x.map(|v| v / s)))
    }

    /// `(a, b, 1 − a − b)`.
    pub fn from_pair(a: f64, b: f64) -> Result<Self> {
        let c = 1.0 - a - b;
        // round-off from the subtraction
        let c = if c < 0.0 && c > -1e-12 { 0.0 } else { c };
        Self::new([a, b, c])
    }

    pub fn symmetric() -> Self {
        Self([1.0 / 3.0; 3])
    }

    /// The weights `(½, ½, 0)` that produce the eternally non-Markovian rates.
    pub fn enm() -> Self {
        Self([0.5, 0.5, 0.0])
    }

    pub fn vertex(k: usize) -> Self {
        let mut x = [0.0; 3];
        x[k] = 1.0;
        Self(x)
    }

    pub fn get(&self, k: usize) -> f64 {
        self.0[k]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    pub fn zero_count(&self) -> usize {
        self.0.iter().filter(|&&v| v == 0.0).count()
    }

    pub fn is_vertex(&self) -> bool {
        self.zero_count() == 2
    }

    /// Exactly one weight vanishes.
    pub fn is_edge(&self) -> bool {
        self.zero_count() == 1
    }

    pub fn permuted(&self, perm: [usize; 3]) -> Self {
        Self([self.0[perm[0]], self.0[perm[1]], self.0[perm[2]]])
    }

    /// Uniform sample from the simplex via normalised exponential spacings.
    pub fn sample_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let e: [f64; 3] = std::array::from_fn(|_| rand_distr::Exp1.sample(rng));
        let s: f64 = e.iter().sum();
        Self(e.map(|v| v / s))
    }
}

/// Choi matrix `Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)` of a linear map on `dim × dim` matrices.
pub fn choi_matrix(dim: usize, map: impl Fn(&CMatrix) -> CMatrix) -> CMatrix {
    let mut choi = CMatrix::zeros(dim * dim, dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut e = CMatrix::zeros(dim, dim);
            e[(i, j)] = ONE;
            let img = map(&e);
            choi.view_mut((i * dim, j * dim), (dim, dim)).copy_from(&img);
        }
    }
    choi
}

/// Normalised ket with i.i.d. complex Gaussian amplitudes (Haar distributed).
pub fn random_ket<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(dim, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

/// Random full-rank density matrix `G G† / Tr(G G†)` with a Ginibre `G`.
pub fn random_density_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m / tr).expect("Ginibre state is a valid density matrix")
}

/// Uniform point on the unit sphere.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let g: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        if n > 1e-12 {
            return g.map(|v| v / n);
        }
    }
}

/// Uniform point in the Bloch ball.
pub fn random_bloch_ball<R: Rng + ?Sized>(rng: &mut R) -> BlochVector {
    let dir = random_unit_vector(rng);
    let r = rng.random::<f64>().cbrt();
    BlochVector(dir.map(|v| v * r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn bloch_round_trip_and_examples() {
        let mm = from_bloch(&BlochVector::new([0.0, 0.0, 0.0]).unwrap());
        assert!(max_abs_diff(mm.matrix(), DensityMatrix::maximally_mixed(2).matrix()) < 1e-15);

        let up = from_bloch(&BlochVector::new([0.0, 0.0, 1.0]).unwrap());
        assert!(max_abs_diff(up.matrix(), &projector(2, 0)) < 1e-15);

        let b = BlochVector::new([0.3, 0.2, 0.4]).unwrap();
        let rho = from_bloch(&b);
        let back = rho.to_bloch().unwrap().components();
        for k in 0..3 {
            assert!(close(back[k], b.components()[k], 1e-14));
        }
        // eigenvalues of a 2x2 from the characteristic polynomial
        let m = rho.matrix();
        let tr = (m[(0, 0)] + m[(1, 1)]).re;
        let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re;
        let disc = (tr * tr - 4.0 * det).sqrt();
        let ev = rho.eigenvalues();
        assert!(close(ev[0], 0.5 * (tr - disc), 1e-14));
        assert!(close(ev[1], 0.5 * (tr + disc), 1e-14));
        assert!(close(ev[1], 0.5 * (1.0 + 0.29f64.sqrt()), 1e-14));
    }

    #[test]
    fn bloch_vector_outside_ball_rejected() {
        assert!(matches!(
            BlochVector::new([0.8, 0.8, 0.0]),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn density_matrix_validation() {
        let mut m = projector(2, 0);
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotHermitian(_))));

        let m = CMatrix::identity(2, 2);
        assert!(matches!(DensityMatrix::new(m), Err(Error::InvalidState(_))));

        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![
            Complex64::new(1.5, 0.0),
            Complex64::new(-0.5, 0.0),
        ]));
        assert!(matches!(DensityMatrix::new(m), Err(Error::InvalidState(_))));

        // sub-tolerance asymmetry is absorbed
        let mut m = DensityMatrix::maximally_mixed(2).into_matrix();
        m[(0, 1)] = Complex64::new(1e-14, 0.0);
        let rho = DensityMatrix::new(m).unwrap();
        assert_eq!(hermiticity_deviation(rho.matrix()), 0.0);
    }

    #[test]
    fn trace_norm_examples() {
        assert!(close(trace_norm(&pauli(3)).unwrap(), 2.0, 1e-15));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [2, 4, 6] {
            let rho = random_density_matrix(d, &mut rng);
            assert!(close(trace_norm(rho.matrix()).unwrap(), 1.0, 1e-12));
        }
        let a = DensityMatrix::new(CMatrix::from_diagonal(&CVector::from_vec(vec![
            Complex64::new(0.75, 0.0),
            Complex64::new(0.25, 0.0),
        ])))
        .unwrap();
        let b = DensityMatrix::new(CMatrix::from_diagonal(&CVector::from_vec(vec![
            Complex64::new(0.25, 0.0),
            Complex64::new(0.75, 0.0),
        ])))
        .unwrap();
        assert!(close(trace_norm(&(a.matrix() - b.matrix())).unwrap(), 1.0, 1e-15));
        assert!(matches!(
            trace_norm(&(pauli(2) * I)),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn partial_trace_examples() {
        let bell = {
            let mut v = CVector::zeros(4);
            v[0] = ONE;
            v[3] = ONE;
            DensityMatrix::pure(&v).unwrap()
        };
        let red = bell.partial_trace(&[2, 2], &[0]).unwrap();
        assert!(max_abs_diff(red.matrix(), DensityMatrix::maximally_mixed(2).matrix()) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_density_matrix(2, &mut rng);
        let tau = random_density_matrix(3, &mut rng);
        let prod = rho.tensor(&tau);
        let a = prod.partial_trace(&[2, 3], &[0]).unwrap();
        let b = prod.partial_trace(&[2, 3], &[1]).unwrap();
        assert!(max_abs_diff(a.matrix(), rho.matrix()) < 1e-14);
        assert!(max_abs_diff(b.matrix(), tau.matrix()) < 1e-14);

        let x = [0.2, 0.5, 0.3];
        let mut qc = CMatrix::zeros(6, 6);
        for (i, xi) in x.iter().enumerate() {
            let r = random_density_matrix(2, &mut rng);
            qc += kron(r.matrix(), &projector(3, i)) * Complex64::new(*xi, 0.0);
        }
        let anc = partial_trace(&DensityMatrix::new(qc).unwrap(), &[2, 3], &[1]).unwrap();
        for i in 0..3 {
            assert!(close(anc.matrix()[(i, i)].re, x[i], 1e-14));
        }

        let full = partial_trace_matrix(prod.matrix(), &[2, 3], &[]).unwrap();
        assert_eq!(full.shape(), (1, 1));
        assert!(close(full[(0, 0)].re, 1.0, 1e-14));

        assert!(matches!(
            partial_trace(&prod, &[2, 2], &[0]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn partial_trace_keeps_factor_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_density_matrix(2, &mut rng);
        let b = random_density_matrix(2, &mut rng);
        let c = random_density_matrix(3, &mut rng);
        let abc = a.tensor(&b).tensor(&c);
        let ac = abc.partial_trace(&[2, 2, 3], &[2, 0]).unwrap();
        assert!(max_abs_diff(ac.matrix(), a.tensor(&c).matrix()) < 1e-14);
    }

    #[test]
    fn pauli_channel_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = DensityMatrix::from_bloch(&random_bloch_ball(&mut rng));
        let id = PauliChannelProbs::identity().apply(&rho).unwrap();
        assert!(max_abs_diff(id.matrix(), rho.matrix()) < 1e-15);

        let flip = PauliChannelProbs::new([0.0, 1.0, 0.0, 0.0]).unwrap();
        let out = flip.apply(&rho).unwrap();
        let expect = pauli(1) * rho.matrix() * pauli(1);
        assert!(max_abs_diff(out.matrix(), &expect) < 1e-15);

        let twirl = PauliChannelProbs::new([0.25; 4]).unwrap();
        let out = twirl.apply(&rho).unwrap();
        assert!(max_abs_diff(out.matrix(), DensityMatrix::maximally_mixed(2).matrix()) < 1e-15);

        assert!(PauliChannelProbs::new([0.5, 0.6, -0.1, 0.0]).is_err());
        assert!(PauliChannelProbs::new([0.5, 0.6, 0.0, 0.0]).is_err());
    }

    #[test]
    fn hadamard_examples() {
        assert_eq!(hadamard4([1.0, 0.0, 0.0, 0.0]), [1.0; 4]);
        let h = hadamard4([0.25; 4]);
        for (k, v) in h.iter().enumerate() {
            assert!(close(*v, if k == 0 { 1.0 } else { 0.0 }, 1e-15));
        }
        let e = (-2.0f64).exp();
        let h = hadamard4([0.5 * (1.0 + e), 0.25 * (1.0 - e), 0.25 * (1.0 - e), 0.0]);
        // λ_k = x_k + (1 − x_k) e^{−2t} for x = (½, ½, 0) at t = 1
        let expect = [1.0, 0.5 + 0.5 * e, 0.5 + 0.5 * e, e];
        for k in 0..4 {
            assert!(close(h[k], expect[k], 1e-15));
        }
        let v = [0.3, -1.2, 4.0, 0.7];
        let back = hadamard4(hadamard4(v)).map(|x| 0.25 * x);
        for k in 0..4 {
            assert!(close(back[k], v[k], 1e-14));
        }
    }

    #[test]
    fn choi_of_identity_is_unnormalised_bell_projector() {
        let choi = choi_matrix(2, |m| m.clone());
        let ev = hermitian_eigenvalues(&choi);
        assert!(close(ev[3], 2.0, 1e-14));
        assert!(ev[..3].iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn weights_validation() {
        assert!(MixtureWeights::new([0.5, 0.6, 0.0]).is_err());
        assert!(MixtureWeights::new([-0.1, 0.6, 0.5]).is_err());
        let w = MixtureWeights::from_pair(0.6, 0.3).unwrap();
        assert!(close(w.get(2), 0.1, 1e-15));
        assert!(MixtureWeights::enm().is_edge());
        assert!(MixtureWeights::vertex(2).is_vertex());
    }
}
