//! Superoperators on `d×d` matrices in the column-stacking representation,
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use num_complex::Complex64;

use crate::qubit::{kron, CMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: CMatrix,
}

impl Superoperator {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            matrix: CMatrix::zeros(dim * dim, dim * dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            matrix: CMatrix::identity(dim * dim, dim * dim),
        }
    }

    /// `X ↦ A X B`.
    pub fn sandwich(a: &CMatrix, b: &CMatrix) -> Self {
        Self {
            dim: a.nrows(),
            matrix: kron(&b.transpose(), a),
        }
    }

    /// `X ↦ Σ_k (L_k X L_k† − ½{L_k†L_k, X})`.
    pub fn gksl(jumps: &[CMatrix]) -> Result<Self> {
        let dim = jumps
            .first()
            .map(|l| l.nrows())
            .ok_or_else(|| Error::InvalidArgument("no jump operators".into()))?;
        let id = CMatrix::identity(dim, dim);
        let half = Complex64::new(0.5, 0.0);
        let mut out = Self::zero(dim);
        for l in jumps {
            if l.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch(format!(
                    "jump operator of shape {:?} in dimension {dim}",
                    l.shape()
                )));
            }
            let ld = l.adjoint();
            let ldl = &ld * l;
            out.matrix += Self::sandwich(l, &ld).matrix;
            out.matrix -= Self::sandwich(&ldl, &id).matrix * half;
            out.matrix -= Self::sandwich(&id, &ldl).matrix * half;
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        assert_eq!(x.shape(), (self.dim, self.dim), "operator dimension");
        let v = CMatrix::from_column_slice(self.dim * self.dim, 1, x.as_slice());
        let out = &self.matrix * v;
        CMatrix::from_column_slice(self.dim, self.dim, out.as_slice())
    }

    /// `exp(t·G)` for a generator `G`.
    pub fn exp(&self, t: f64) -> Self {
        let scaled = &self.matrix * Complex64::new(t, 0.0);
        Self {
            dim: self.dim,
            matrix: scaled.exp(),
        }
    }

    pub fn compose(&self, other: &Superoperator) -> Self {
        Self {
            dim: self.dim,
            matrix: &self.matrix * &other.matrix,
        }
    }
}

impl std::ops::Add for Superoperator {
    type Output = Superoperator;

    fn add(self, rhs: Self) -> Self {
        Self {
            dim: self.dim,
            matrix: self.matrix + rhs.matrix,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::{max_abs_diff, pauli, random_density_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sandwich_matches_direct_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_density_matrix(3, &mut rng).into_matrix();
        let b = random_density_matrix(3, &mut rng).into_matrix();
        let x = random_density_matrix(3, &mut rng).into_matrix();
        let s = Superoperator::sandwich(&a, &b);
        assert!(max_abs_diff(&s.apply(&x), &(&a * &x * &b)) < 1e-14);
    }

    #[test]
    fn dephasing_semigroup_decays_coherences() {
        let g = Superoperator::gksl(&[pauli(3)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random_density_matrix(2, &mut rng).into_matrix();
        let t = 0.7;
        let out = g.exp(t).apply(&rho);
        assert!((out[(0, 1)] - rho[(0, 1)] * (-2.0 * t).exp()).norm() < 1e-13);
        assert!((out[(0, 0)] - rho[(0, 0)]).norm() < 1e-13);
    }
}
