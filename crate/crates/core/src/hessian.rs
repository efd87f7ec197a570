//! The linearized operator `L_Q = −∂ₓ² + c − f′(Q_{ca})`: action, dense spectrum,
//! and the constrained Rayleigh minimum in the `H¹` metric.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Error, Result};
use crate::grid::{self, dot, Field, Grid};
use crate::profile::{build_profile, NonlinearitySpec, ProfileBundle, SolitonParams};

/// Eigenvalues below `c − SPECTRAL_MARGIN` count as discrete.
pub const SPECTRAL_MARGIN: f64 = 0.05;
/// Penalty placed on constraint directions in the projected eigenproblem.
pub const CONSTRAINT_PENALTY: f64 = 100.0;

#[derive(Clone, Debug)]
pub struct HessianOperator {
    pub params: SolitonParams,
    /// `c − f′(Q_{ca})`.
    pub potential: Field,
}

impl HessianOperator {
    pub fn new(nl: &NonlinearitySpec, pb: &ProfileBundle) -> Self {
        let c = pb.params.c;
        Self { params: pb.params, potential: pb.q.map(|q| c - nl.df(q)) }
    }

    pub fn build(nl: &NonlinearitySpec, params: SolitonParams, grid: &Arc<Grid>) -> Result<Self> {
        Ok(Self::new(nl, &build_profile(nl, params, grid)?))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.potential.grid()
    }

    /// `−v″ + (c − f′(Q))v`.
    pub fn apply(&self, v: &Field) -> Result<Field> {
        if !v.is_finite() {
            return Err(Error::NumericDomain("hessian applied to a non-finite field".into()));
        }
        let vxx = grid::spectral_derivative(v, 2);
        Ok(vxx.zip_map(&self.potential.hadamard(v), |d, p| p - d))
    }

    /// `⟨L v, v⟩`.
    pub fn quadratic_form(&self, v: &Field) -> Result<f64> {
        Ok(dot(&self.apply(v)?, v))
    }

    /// Dense symmetric discretization `−D₂ + diag(c − f′(Q))`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut m = -grid::second_derivative_matrix(self.grid());
        for (i, &p) in self.potential.values().iter().enumerate() {
            m[(i, i)] += p;
        }
        m
    }

    /// Lowest `n_eigs` eigenpairs, eigenvectors normalized in `L²`.
    pub fn spectrum(&self, n_eigs: usize) -> Result<Spectrum> {
        let all = sorted_eigen(self.matrix())?;
        let c = self.params.c;
        let h = self.grid().spacing();
        let discrete_count = all.0.iter().filter(|&&l| l < c - SPECTRAL_MARGIN).count();
        let pairs = (0..n_eigs.min(all.0.len()))
            .map(|i| {
                let v: Vec<f64> = all.1.column(i).iter().map(|x| x / h.sqrt()).collect();
                (all.0[i], Field::from_raw(self.grid(), v))
            })
            .collect();
        Ok(Spectrum { pairs, discrete_count, eigenvalues: all.0 })
    }
}

pub struct Spectrum {
    pub pairs: Vec<(f64, Field)>,
    /// Number of eigenvalues below `c − SPECTRAL_MARGIN`.
    pub discrete_count: usize,
    /// Every eigenvalue, ascending.
    pub eigenvalues: Vec<f64>,
}

fn sorted_eigen(m: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 0)
        .ok_or_else(|| Error::NumericDomain("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Eigenvalues of the free operator `−D₂ + c` on the same grid, ascending.
pub fn free_spectrum(grid: &Grid, c: f64) -> Vec<f64> {
    let mut v: Vec<f64> = grid.wavenumbers().iter().map(|k| c + k * k).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Minimum of `⟨L ξ, ξ⟩ / ‖ξ‖²_{H¹}` over `ξ` orthogonal to every constraint.
///
/// With `S = (1 − D₂)^{−1/2}` the quotient becomes a standard Rayleigh quotient
/// of `S L S`, and the constraints map to `S q`. An empty constraint set gives
/// the unconstrained minimum.
pub fn rayleigh_minimum(lq: &HessianOperator, constraints: &[Field]) -> Result<f64> {
    let grid = lq.grid();
    let n = grid.len();
    let s = grid::circulant_matrix(grid, |k| 1.0 / (1.0 + k * k).sqrt());
    let a = &s * lq.matrix() * &s;
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for q in constraints {
        if !q.grid().same_as(grid) {
            return Err(invalid("constraint lives on a different grid"));
        }
        let mut w = &s * DVector::from_column_slice(q.values());
        for b in &basis {
            let proj = b.dot(&w);
            w -= b * proj;
        }
        let norm = w.norm();
        if norm < 1e-12 {
            return Err(invalid("constraints are linearly dependent"));
        }
        basis.push(w / norm);
    }
    let mut projector = DMatrix::<f64>::identity(n, n);
    for b in &basis {
        projector -= b * b.transpose();
    }
    let mut m = &projector * a * &projector;
    for b in &basis {
        m += CONSTRAINT_PENALTY * (b * b.transpose());
    }
    let m = 0.5 * (&m + m.transpose());
    let (values, _) = sorted_eigen(m)?;
    Ok(values[0])
}

/// `ρ` for the constraint set `{Q_{ca}, ∂ₓ⁻¹ζ^n}`; a non-positive minimum is an error.
pub fn constrained_coercivity(lq: &HessianOperator, pb: &ProfileBundle) -> Result<f64> {
    let rho = rayleigh_minimum(lq, &coercivity_constraints(pb)?)?;
    if rho <= 0.0 {
        return Err(Error::CoercivityViolation { rho });
    }
    Ok(rho)
}

pub fn coercivity_constraints(pb: &ProfileBundle) -> Result<Vec<Field>> {
    Ok(vec![pb.q.clone(), pb.normalization_antiderivative()?])
}
