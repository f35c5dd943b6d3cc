//! Dense linear algebra on a truncated single-mode Fock space.
//!
//! Operators are stored as `nalgebra` complex matrices indexed by photon
//! number. Composite (two-mode) objects use the A-major convention: the pair
//! of levels `(i_a, i_b)` maps to the flat index `i_a * dim_b + i_b`.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol::{HERM_TOL, NORM_TOL, PSD_TOL};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Number of retained Fock levels `0..d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct FockDim(usize);

impl FockDim {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::DimensionTooSmall(d));
        }
        Ok(FockDim(d))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for FockDim {
    type Error = Error;
    fn try_from(d: usize) -> Result<Self> {
        FockDim::new(d)
    }
}

impl From<FockDim> for usize {
    fn from(d: FockDim) -> usize {
        d.0
    }
}

impl fmt::Display for FockDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

fn check_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

fn check_square(m: &CMatrix) -> Result<FockDim> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    FockDim::new(m.nrows())
}

/// Max-norm of `M − M†`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub(crate) fn real_trace(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Eigendecomposition of a Hermitian matrix with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: DVector<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: CMatrix,
}

impl Spectrum {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// `V f(Λ) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= C64::from(f(self.values[k]));
        }
        scaled * self.vectors.adjoint()
    }
}

/// Entries below this fraction of the largest one are flushed to zero before
/// diagonalization; their squares would otherwise underflow inside the
/// Householder reflections and poison the result with NaNs.
const EIGEN_FLUSH: f64 = 1e-32;

/// Hermitian eigendecomposition of the symmetrized input `(M + M†)/2`.
pub fn eigh(m: &CMatrix) -> Result<Spectrum> {
    check_finite(m)?;
    check_square(m)?;
    let scale = max_abs(m);
    if scale == 0.0 {
        let n = m.nrows();
        return Ok(Spectrum {
            values: DVector::zeros(n),
            vectors: CMatrix::identity(n, n),
        });
    }
    let flushed = hermitian_part(m).map(|z| {
        let z = z / scale;
        if z.norm() < EIGEN_FLUSH {
            ZERO
        } else {
            z
        }
    });
    let eig = SymmetricEigen::new(flushed);
    if eig.eigenvalues.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(
        order.len(),
        order.iter().map(|&k| eig.eigenvalues[k] * scale),
    );
    let vectors = CMatrix::from_columns(
        &order
            .iter()
            .map(|&k| eig.eigenvectors.column(k).into_owned())
            .collect::<Vec<_>>(),
    );
    Ok(Spectrum { values, vectors })
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `(Tr_B M)_{ij} = Σ_k M_{(i,k),(j,k)}` for a square matrix on `dim_a·dim_b`.
pub fn partial_trace_b_matrix(m: &CMatrix, dim_a: usize, dim_b: usize) -> Result<CMatrix> {
    let n = dim_a * dim_b;
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.nrows(),
        });
    }
    Ok(CMatrix::from_fn(dim_a, dim_a, |i, j| {
        (0..dim_b).map(|k| m[(i * dim_b + k, j * dim_b + k)]).sum()
    }))
}

/// Normalized pure state in a truncated Fock space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: CVector,
}

impl StateVector {
    /// Wraps amplitudes that are already unit-norm within `NORM_TOL`.
    pub fn new(amps: CVector) -> Result<Self> {
        FockDim::new(amps.len())?;
        if !amps.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(StateVector { amps })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amps: CVector) -> Result<Self> {
        let norm = amps.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotNormalized(norm));
        }
        StateVector::new(amps.unscale(norm))
    }

    pub fn dim(&self) -> FockDim {
        FockDim(self.amps.len())
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn amplitude(&self, n: usize) -> C64 {
        self.amps[n]
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        same_dim(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix {
            m: &self.amps * self.amps.adjoint(),
        }
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        StateVector {
            amps: self.amps.kronecker(&other.amps),
        }
    }

    /// `⟨ψ|A|ψ⟩` for a Hermitian operator.
    pub fn expectation(&self, op: &HermitianOperator) -> Result<f64> {
        same_dim(self.dim(), op.dim())?;
        Ok(self.amps.dotc(&(&op.m * &self.amps)).re)
    }
}

/// Hermitian operator on a truncated Fock space, stored exactly Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    m: CMatrix,
}

impl HermitianOperator {
    /// Accepts `m` if `‖m − m†‖_max ≤ HERM_TOL` and stores its Hermitian part.
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square(&m)?;
        check_finite(&m)?;
        let defect = hermiticity_defect(&m);
        if defect > HERM_TOL {
            return Err(Error::NotHermitian(defect));
        }
        Ok(HermitianOperator {
            m: hermitian_part(&m),
        })
    }

    pub fn identity(dim: FockDim) -> Self {
        HermitianOperator {
            m: CMatrix::identity(dim.get(), dim.get()),
        }
    }

    pub fn zeros(dim: FockDim) -> Self {
        HermitianOperator {
            m: CMatrix::zeros(dim.get(), dim.get()),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        FockDim::new(diag.len())?;
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::from(x)));
        HermitianOperator::new(CMatrix::from_diagonal(&d))
    }

    /// `|ψ⟩⟨ψ|` scaled by `weight`.
    pub fn scaled_projector(psi: &StateVector, weight: f64) -> Self {
        HermitianOperator {
            m: (&psi.amps * psi.amps.adjoint()).scale(weight),
        }
    }

    pub fn dim(&self) -> FockDim {
        FockDim(self.m.nrows())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn trace(&self) -> f64 {
        real_trace(&self.m)
    }

    /// `Tr{A²}`, computed as the squared Frobenius norm.
    pub fn trace_of_square(&self) -> f64 {
        self.m.norm_squared()
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianOperator { m: self.m.scale(s) }
    }

    pub fn add(&self, other: &HermitianOperator) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(HermitianOperator {
            m: &self.m + &other.m,
        })
    }

    pub fn sub(&self, other: &HermitianOperator) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(HermitianOperator {
            m: &self.m - &other.m,
        })
    }

    pub fn tensor(&self, other: &HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            m: kron(&self.m, &other.m),
        }
    }

    pub fn conjugate(&self) -> HermitianOperator {
        HermitianOperator {
            m: self.m.map(|z| z.conj()),
        }
    }

    pub fn eigh(&self) -> Result<Spectrum> {
        eigh(&self.m)
    }

    /// Max-norm distance to another operator.
    pub fn max_diff(&self, other: &HermitianOperator) -> f64 {
        if self.m.shape() != other.m.shape() {
            return f64::INFINITY;
        }
        max_abs(&(&self.m - &other.m))
    }
}

/// Unit-trace positive semidefinite Hermitian operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity at the crate tolerances.
    pub fn new(m: CMatrix) -> Result<Self> {
        let op = HermitianOperator::new(m)?;
        let trace = op.trace();
        if (trace - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(trace));
        }
        let min = op.eigh()?.min();
        if min < -PSD_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(DensityMatrix { m: op.m })
    }

    /// `A / Tr{A}` for a positive operator with nonzero trace.
    pub fn normalize(op: &HermitianOperator) -> Result<Self> {
        let trace = op.trace();
        if !(trace.is_finite() && trace > 0.0) {
            return Err(Error::NotNormalized(trace));
        }
        DensityMatrix::new(op.m.unscale(trace))
    }

    pub fn maximally_mixed(dim: FockDim) -> Self {
        let d = dim.get();
        DensityMatrix {
            m: CMatrix::identity(d, d).unscale(d as f64),
        }
    }

    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        DensityMatrix::new(HermitianOperator::from_diagonal(probs)?.m)
    }

    pub fn dim(&self) -> FockDim {
        FockDim(self.m.nrows())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn element(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn as_operator(&self) -> HermitianOperator {
        HermitianOperator { m: self.m.clone() }
    }

    pub fn trace(&self) -> f64 {
        real_trace(&self.m)
    }

    /// `Tr{ρ²}`.
    pub fn purity(&self) -> f64 {
        self.m.norm_squared()
    }

    /// `Tr{ρ A}`; real for Hermitian `A`.
    pub fn expectation(&self, op: &HermitianOperator) -> Result<f64> {
        same_dim(self.dim(), op.dim())?;
        Ok(trace_of_product(&self.m, &op.m))
    }

    /// `Tr{ρ σ}`.
    pub fn overlap(&self, other: &DensityMatrix) -> Result<f64> {
        same_dim(self.dim(), other.dim())?;
        Ok(trace_of_product(&self.m, &other.m))
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            m: kron(&self.m, &other.m),
        }
    }

    pub fn conjugate(&self) -> DensityMatrix {
        DensityMatrix {
            m: self.m.map(|z| z.conj()),
        }
    }

    pub fn eigh(&self) -> Result<Spectrum> {
        eigh(&self.m)
    }

    /// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`, clamped to `[0, 1]`.
    pub fn fidelity(&self, other: &DensityMatrix) -> Result<f64> {
        same_dim(self.dim(), other.dim())?;
        let sqrt_rho = self.eigh()?.map(|x| x.max(0.0).sqrt());
        let inner = &sqrt_rho * &other.m * &sqrt_rho;
        let root_sum: f64 = eigh(&inner)?
            .values
            .iter()
            .map(|&x| x.max(0.0).sqrt())
            .sum();
        Ok((root_sum * root_sum).clamp(0.0, 1.0))
    }

    /// `½ Σ |eig(ρ − σ)|`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        same_dim(self.dim(), other.dim())?;
        let diff = &self.m - &other.m;
        Ok(0.5 * eigh(&diff)?.values.iter().map(|x| x.abs()).sum::<f64>())
    }
}

/// `Tr{A B}` without forming the product; real part only.
pub(crate) fn trace_of_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

pub(crate) fn same_dim(a: FockDim, b: FockDim) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a.get(),
            found: b.get(),
        });
    }
    Ok(())
}

/// Kronecker product with the A-major composite index convention.
pub trait Tensor {
    fn tensor_with(&self, other: &Self) -> Self;
}

impl Tensor for StateVector {
    fn tensor_with(&self, other: &Self) -> Self {
        self.tensor(other)
    }
}

impl Tensor for HermitianOperator {
    fn tensor_with(&self, other: &Self) -> Self {
        self.tensor(other)
    }
}

impl Tensor for DensityMatrix {
    fn tensor_with(&self, other: &Self) -> Self {
        self.tensor(other)
    }
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> T {
    a.tensor_with(b)
}

/// Photon-number state `|n⟩`.
pub fn fock_state(n: usize, dim: FockDim) -> Result<StateVector> {
    if n >= dim.get() {
        return Err(Error::IndexOutOfRange {
            index: n,
            dim: dim.get(),
        });
    }
    let mut amps = CVector::zeros(dim.get());
    amps[n] = ONE;
    Ok(StateVector { amps })
}

/// Coherent state `|α⟩` truncated to `dim` levels and renormalized.
pub fn coherent_state(alpha: C64, dim: FockDim) -> StateVector {
    let d = dim.get();
    if alpha.norm_sqr() > d as f64 / 4.0 {
        log::warn!(
            "coherent state |α|² = {} is large for dim {}; truncation is weak",
            alpha.norm_sqr(),
            d
        );
    }
    let mut amps = CVector::zeros(d);
    let mut c = C64::from((-0.5 * alpha.norm_sqr()).exp());
    amps[0] = c;
    for n in 1..d {
        c = c * alpha / (n as f64).sqrt();
        amps[n] = c;
    }
    let norm = amps.norm();
    StateVector {
        amps: amps.unscale(norm),
    }
}

/// Squeezed vacuum `S(r)|0⟩` with squeezing along x for `r > 0`.
pub fn squeezed_vacuum(r: f64, dim: FockDim) -> StateVector {
    let d = dim.get();
    let t = r.tanh();
    let mut amps = CVector::zeros(d);
    let mut c = 1.0;
    amps[0] = ONE;
    let mut k = 1;
    while 2 * k < d {
        let two_k = (2 * k) as f64;
        c *= -t * ((two_k - 1.0) / two_k).sqrt();
        amps[2 * k] = C64::from(c);
        k += 1;
    }
    let norm = amps.norm();
    StateVector {
        amps: amps.unscale(norm),
    }
}

/// Partial trace over the second factor of a composite operator.
pub fn partial_trace_b(
    op_ab: &HermitianOperator,
    dim_a: FockDim,
    dim_b: FockDim,
) -> Result<HermitianOperator> {
    let m = partial_trace_b_matrix(&op_ab.m, dim_a.get(), dim_b.get())?;
    Ok(HermitianOperator { m })
}

/// Elementwise complex conjugation in the Fock basis.
pub fn conjugate_in_fock(op: &HermitianOperator) -> HermitianOperator {
    op.conjugate()
}

pub fn eig_hermitian(op: &HermitianOperator) -> Result<Spectrum> {
    op.eigh()
}

/// Annihilation operator truncated to `dim` levels.
pub fn annihilation(dim: FockDim) -> CMatrix {
    let d = dim.get();
    CMatrix::from_fn(d, d, |i, j| {
        if j == i + 1 {
            C64::from((j as f64).sqrt())
        } else {
            ZERO
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, seeded_rng};

    fn dim(d: usize) -> FockDim {
        FockDim::new(d).unwrap()
    }

    #[test]
    fn dimension_below_two_rejected() {
        assert!(matches!(FockDim::new(1), Err(Error::DimensionTooSmall(1))));
        assert!(FockDim::new(2).is_ok());
    }

    #[test]
    fn fock_states() {
        let v = fock_state(0, dim(4)).unwrap();
        assert_eq!(v.amplitudes().as_slice(), &[ONE, ZERO, ZERO, ZERO]);
        let v = fock_state(2, dim(4)).unwrap();
        assert_eq!(v.amplitudes().as_slice(), &[ZERO, ZERO, ONE, ZERO]);
        let a = fock_state(1, dim(8)).unwrap();
        let b = fock_state(2, dim(8)).unwrap();
        assert_eq!(a.inner(&b).unwrap(), ZERO);
        assert!(matches!(
            fock_state(4, dim(4)),
            Err(Error::IndexOutOfRange { index: 4, dim: 4 })
        ));
    }

    #[test]
    fn coherent_vacuum_and_moments() {
        let v = coherent_state(ZERO, dim(10));
        assert_eq!(v, fock_state(0, dim(10)).unwrap());

        let a = coherent_state(C64::new(1.0, 0.0), dim(30));
        let mean: f64 = (0..30).map(|n| n as f64 * a.amplitude(n).norm_sqr()).sum();
        assert!((mean - 1.0).abs() < 1e-6);

        let a = coherent_state(C64::new(0.5, 0.0), dim(30));
        assert!((a.amplitude(0).norm_sqr() - (-0.25f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn squeezed_vacuum_parity_and_variance() {
        assert_eq!(
            squeezed_vacuum(0.0, dim(10)),
            fock_state(0, dim(10)).unwrap()
        );
        let s = squeezed_vacuum(0.5, dim(40));
        for n in (1..40).step_by(2) {
            assert_eq!(s.amplitude(n), ZERO);
        }
        // ⟨x²⟩ with x = (a + a†)/√2 on the truncated vector.
        let a = annihilation(dim(40));
        let x = (&a + a.adjoint()).unscale(2f64.sqrt());
        let amps = s.amplitudes();
        let var = amps.dotc(&(&x * (&x * amps))).re;
        assert!((var - (-1f64).exp() / 2.0).abs() < 1e-4, "var = {var}");
    }

    #[test]
    fn constructors_are_unit_norm() {
        for d in [2, 5, 17, 60] {
            for &alpha in &[C64::new(0.3, -0.2), C64::new(1.5, 0.7)] {
                let v = coherent_state(alpha, dim(d));
                assert!((v.amplitudes().norm() - 1.0).abs() < 1e-12);
            }
            for r in [-0.8, 0.2, 1.1] {
                let v = squeezed_vacuum(r, dim(d));
                assert!((v.amplitudes().norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tensor_index_convention() {
        let i2 = HermitianOperator::identity(dim(2));
        let i3 = HermitianOperator::identity(dim(3));
        assert_eq!(tensor(&i2, &i3), HermitianOperator::identity(dim(6)));

        let v = tensor(
            &fock_state(1, dim(2)).unwrap(),
            &fock_state(0, dim(2)).unwrap(),
        );
        assert_eq!(v, fock_state(2, dim(4)).unwrap());
    }

    #[test]
    fn tensor_trace_is_multiplicative() {
        let mut rng = seeded_rng(11);
        for _ in 0..20 {
            let a = random_hermitian(&mut rng, dim(3));
            let b = random_hermitian(&mut rng, dim(3));
            let ab = tensor(&a, &b);
            // brute-force diagonal sum over the composite index
            let mut brute = 0.0;
            for i in 0..3 {
                for k in 0..3 {
                    brute += (a.matrix()[(i, i)] * b.matrix()[(k, k)]).re;
                }
            }
            assert!((ab.trace() - brute).abs() < 1e-12);
            assert!((ab.trace() - a.trace() * b.trace()).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_of_product_state() {
        let rho_a = coherent_state(C64::new(0.4, 0.1), dim(3)).projector();
        let rho_b = DensityMatrix::from_diagonal(&[0.2, 0.3, 0.5, 0.0]).unwrap();
        let joint = tensor(&rho_a.as_operator(), &rho_b.as_operator());
        let reduced = partial_trace_b(&joint, dim(3), dim(4)).unwrap();
        assert!(reduced.max_diff(&rho_a.as_operator()) < 1e-12);
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let mut rng = seeded_rng(12);
        for _ in 0..10 {
            let m = random_hermitian(&mut rng, dim(12));
            let r = partial_trace_b(&m, dim(3), dim(4)).unwrap();
            assert!((r.trace() - m.trace()).abs() < 1e-12);
        }
        let m = random_hermitian(&mut rng, dim(12));
        assert!(matches!(
            partial_trace_b(&m, dim(5), dim(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn conjugation() {
        let diag = HermitianOperator::from_diagonal(&[0.1, 0.7, 0.2]).unwrap();
        assert_eq!(conjugate_in_fock(&diag), diag);

        let mut rng = seeded_rng(13);
        for _ in 0..10 {
            let m = random_hermitian(&mut rng, dim(7));
            let c = conjugate_in_fock(&m);
            assert_eq!(conjugate_in_fock(&c), m);
            assert!((c.trace() - m.trace()).abs() < 1e-14);
            let (em, ec) = (m.eigh().unwrap(), c.eigh().unwrap());
            for k in 0..7 {
                assert!((em.values[k] - ec.values[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigen_examples() {
        let d = HermitianOperator::from_diagonal(&[3.0, 1.0, 2.0]).unwrap();
        let s = eig_hermitian(&d).unwrap();
        assert_eq!(s.values.as_slice(), &[1.0, 2.0, 3.0]);

        let plus = StateVector::normalized(CVector::from_vec(vec![ONE, ONE])).unwrap();
        let s = eig_hermitian(&plus.projector().as_operator()).unwrap();
        assert!(s.values[0].abs() < 1e-15 && (s.values[1] - 1.0).abs() < 1e-15);

        let mut rng = seeded_rng(14);
        let m = random_hermitian(&mut rng, dim(8));
        let s = m.eigh().unwrap();
        assert!((s.values.sum() - m.trace()).abs() < 1e-10);
    }

    #[test]
    fn eigen_rejects_non_finite() {
        let mut m = CMatrix::identity(3, 3);
        m[(1, 1)] = C64::new(f64::NAN, 0.0);
        assert!(matches!(eigh(&m), Err(Error::NonFinite)));
    }

    #[test]
    fn density_matrix_validation() {
        assert!(matches!(
            DensityMatrix::from_diagonal(&[0.5, 0.6]),
            Err(Error::NotNormalized(_))
        ));
        assert!(matches!(
            DensityMatrix::from_diagonal(&[1.5, -0.5]),
            Err(Error::NotPositive(_))
        ));
        let mut m = CMatrix::identity(2, 2).unscale(2.0);
        m[(0, 1)] = C64::new(0.0, 0.1);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn fidelity_and_trace_distance() {
        let d = dim(5);
        let a = fock_state(1, d).unwrap().projector();
        let b = fock_state(2, d).unwrap().projector();
        assert!((a.fidelity(&a).unwrap() - 1.0).abs() < 1e-12);
        assert!(a.fidelity(&b).unwrap() < 1e-12);
        assert!((a.trace_distance(&b).unwrap() - 1.0).abs() < 1e-12);

        let p = DensityMatrix::from_diagonal(&[0.5, 0.5, 0.0, 0.0, 0.0]).unwrap();
        let q = DensityMatrix::from_diagonal(&[0.2, 0.3, 0.5, 0.0, 0.0]).unwrap();
        let classical = ((0.5f64 * 0.2).sqrt() + (0.5f64 * 0.3).sqrt()).powi(2);
        assert!((p.fidelity(&q).unwrap() - classical).abs() < 1e-12);
        assert!((p.trace_distance(&q).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn eigh_survives_rapidly_decaying_rank_one() {
        for l in [0.05f64, 0.3] {
            let n = 100;
            let phase = C64::from_polar(1.0, 0.7);
            let v =
                CVector::from_iterator(n, (0..n).map(|k| phase.powi(k as i32) * l.powi(k as i32)));
            let m = &v * v.adjoint();
            let s = eigh(&m).unwrap();
            let expected = v.norm_squared();
            assert!(s.values.iter().all(|x| x.is_finite()));
            assert!((s.max() - expected).abs() < 1e-12 * expected);
            assert!(s.values.iter().take(n - 1).all(|x| x.abs() < 1e-12));
            let recon = s.map(|x| x);
            assert!(max_abs(&(recon - &m)) < 1e-12);
        }
    }
}
