//! Conditional state preparation from a two-mode squeezed vacuum.
//!
//! Mode B of `|ψ_AB⟩ ∝ Σ λⁿ |n, n⟩` is measured; the outcome `Π` heralds
//! `ρ_A ∝ Tr_B{|ψ⟩⟨ψ| (1 ⊗ Π)}`. Because the resource is Schmidt-diagonal,
//! this equals `Λ Π* Λ` with `Λ = diag(λⁿ)`, which tends to the complex
//! conjugate of the retrodicted state as `λ → 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::PovmElement;
use crate::error::{Error, Result};
use crate::fock::{
    kron, partial_trace_b_matrix, real_trace, same_dim, CMatrix, CVector, DensityMatrix, FockDim,
    HermitianOperator, StateVector, C64,
};
use crate::retrodiction::retrodicted_state;
use crate::tol::{Tolerances, TRACE_FLOOR};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TmsvParams {
    lambda: f64,
    dim: FockDim,
}

impl TmsvParams {
    /// Logs a warning when `λ^{2d}` exceeds `tail_tol`.
    pub fn new(lambda: f64, dim: FockDim, tail_tol: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::param(
                "lambda",
                format!("{lambda} is outside [0, 1)"),
            ));
        }
        let params = TmsvParams { lambda, dim };
        if params.tail_weight() > tail_tol {
            log::warn!(
                "TMSV truncation at dim {} leaves tail weight {:.2e} for λ = {}",
                dim,
                params.tail_weight(),
                lambda
            );
        }
        Ok(params)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> FockDim {
        self.dim
    }

    /// Weight `λ^{2d}` of the untruncated state beyond the retained levels.
    pub fn tail_weight(&self) -> f64 {
        self.lambda.powi(2 * self.dim.get() as i32)
    }

    pub fn ensure_tail_below(&self, limit: f64) -> Result<()> {
        let tail = self.tail_weight();
        if tail > limit {
            return Err(Error::TailViolation {
                lambda: self.lambda,
                dim: self.dim.get(),
                tail,
                limit,
            });
        }
        Ok(())
    }

    /// `λⁿ` for `n < dim` (with `0⁰ = 1`).
    fn schmidt_weights(&self) -> Vec<f64> {
        (0..self.dim.get())
            .map(|n| self.lambda.powi(n as i32))
            .collect()
    }

    /// `1 / Σ_{n<d} λ^{2n}`, the squared normalization after truncation.
    fn norm_sqr(&self) -> f64 {
        1.0 / self.schmidt_weights().iter().map(|w| w * w).sum::<f64>()
    }
}

/// `√(1−λ²) Σ λⁿ |n, n⟩`, renormalized on `dim²` levels.
pub fn tmsv(params: &TmsvParams) -> StateVector {
    let d = params.dim.get();
    let norm = params.norm_sqr().sqrt();
    let mut amps = CVector::zeros(d * d);
    for (n, w) in params.schmidt_weights().into_iter().enumerate() {
        amps[n * d + n] = C64::from(norm * w);
    }
    StateVector::normalized(amps).expect("vacuum term is always present")
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeraldResult {
    pub conditional_state: DensityMatrix,
    pub success_probability: f64,
    pub outcome_label: String,
}

fn finish(unnormalized: CMatrix, label: &str) -> Result<HeraldResult> {
    let probability = real_trace(&unnormalized);
    if probability <= TRACE_FLOOR {
        return Err(Error::HeraldImpossible(probability));
    }
    let op = HermitianOperator::new(unnormalized)?;
    Ok(HeraldResult {
        conditional_state: DensityMatrix::normalize(&op)?,
        success_probability: probability.min(1.0),
        outcome_label: label.to_string(),
    })
}

fn split_dims(total: usize, dim_b: FockDim) -> Result<FockDim> {
    if !total.is_multiple_of(dim_b.get()) {
        return Err(Error::DimensionMismatch {
            expected: dim_b.get() * (total / dim_b.get()).max(1),
            found: total,
        });
    }
    FockDim::new(total / dim_b.get())
}

/// Projection rule on an arbitrary pure joint state of modes A and B.
pub fn heralded_state(psi_ab: &StateVector, pi_b: &PovmElement) -> Result<HeraldResult> {
    let dim_b = pi_b.dim();
    let dim_a = split_dims(psi_ab.dim().get(), dim_b)?;
    let (da, db) = (dim_a.get(), dim_b.get());
    let psi = psi_ab.amplitudes();
    // φ = (1 ⊗ Π) ψ, so that |ψ⟩⟨ψ|(1 ⊗ Π) = |ψ⟩⟨φ|.
    let pi = pi_b.operator().matrix();
    let mut phi = CVector::zeros(da * db);
    for a in 0..da {
        let block = pi * psi.rows(a * db, db);
        phi.rows_mut(a * db, db).copy_from(&block);
    }
    // Tr_B |ψ⟩⟨φ|: (i, j) ↦ Σ_k ψ_(i,k) φ*_(j,k)
    let unnormalized = CMatrix::from_fn(da, da, |i, j| {
        (0..db)
            .map(|k| psi[i * db + k] * phi[j * db + k].conj())
            .sum()
    });
    finish(unnormalized, pi_b.label())
}

/// Projection rule on a mixed joint state, via the full `1 ⊗ Π` operator.
pub fn heralded_state_mixed(rho_ab: &DensityMatrix, pi_b: &PovmElement) -> Result<HeraldResult> {
    let dim_b = pi_b.dim();
    let dim_a = split_dims(rho_ab.dim().get(), dim_b)?;
    let lifted = kron(
        &CMatrix::identity(dim_a.get(), dim_a.get()),
        pi_b.operator().matrix(),
    );
    let product = rho_ab.matrix() * lifted;
    let reduced = partial_trace_b_matrix(&product, dim_a.get(), dim_b.get())?;
    finish(reduced, pi_b.label())
}

/// `ρ_A ∝ Λ Π* Λ`, `Pr = N² Tr{Λ Π* Λ}` with the truncated normalization `N`.
pub fn heralded_closed_form(params: &TmsvParams, pi_b: &PovmElement) -> Result<HeraldResult> {
    same_dim(params.dim, pi_b.dim())?;
    let weights = params.schmidt_weights();
    let conj = pi_b.operator().conjugate();
    let pi = conj.matrix();
    let n2 = params.norm_sqr();
    let d = params.dim.get();
    let unnormalized = CMatrix::from_fn(d, d, |i, j| pi[(i, j)] * (n2 * weights[i] * weights[j]));
    finish(unnormalized, pi_b.label())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub lambda: f64,
    /// Uhlmann fidelity between the heralded state and `(ρ_retr)*`.
    pub fidelity: f64,
    pub success_probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitScan {
    pub outcome_label: String,
    pub dim: usize,
    /// Sorted by ascending `λ`.
    pub points: Vec<ScanPoint>,
    pub monotone_nondecreasing: bool,
    pub strictly_increasing: bool,
}

/// Fidelity of the heralded state to the conjugated retrodicted state for
/// each `λ`. Every `λ` must keep the truncation tail below `tol.tail_refuse`.
pub fn retrodictive_limit_scan(
    pi_b: &PovmElement,
    lambdas: &[f64],
    dim: FockDim,
    tol: &Tolerances,
) -> Result<LimitScan> {
    same_dim(dim, pi_b.dim())?;
    let params = lambdas
        .iter()
        .map(|&l| {
            let p = TmsvParams::new(l, dim, tol.tail_tol)?;
            p.ensure_tail_below(tol.tail_refuse)?;
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    let target = retrodicted_state(pi_b)?.state().conjugate();
    let mut points = params
        .par_iter()
        .map(|p| {
            let h = heralded_closed_form(p, pi_b)?;
            Ok(ScanPoint {
                lambda: p.lambda,
                fidelity: h.conditional_state.fidelity(&target)?,
                success_probability: h.success_probability,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let monotone_nondecreasing = points.windows(2).all(|w| w[1].fidelity >= w[0].fidelity);
    let strictly_increasing = points.windows(2).all(|w| w[1].fidelity > w[0].fidelity);
    Ok(LimitScan {
        outcome_label: pi_b.label().to_string(),
        dim: dim.get(),
        points,
        monotone_nondecreasing,
        strictly_increasing,
    })
}

/// Smallest `λ` with `λ² ≥ 1 − 1/(4⟨n⟩_retr)`, an empirical guideline for
/// when the heralded state is within 1e-3 of the conjugated retrodicted state.
pub fn limit_guideline_lambda(pi_b: &PovmElement) -> Result<f64> {
    let r = retrodicted_state(pi_b)?;
    let d = r.dim().get();
    let mean_n: f64 = (0..d).map(|n| n as f64 * r.state().element(n, n).re).sum();
    if mean_n <= 0.25 {
        return Ok(0.0);
    }
    Ok((1.0 - 1.0 / (4.0 * mean_n)).sqrt())
}
