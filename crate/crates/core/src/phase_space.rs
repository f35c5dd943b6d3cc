//! Wigner functions, quadrature moments and the non-classicality and
//! Gaussianity criteria applied to retrodicted states.
//!
//! Convention: ħ = 1, `x = (a + a†)/√2`, `p = (a − a†)/(i√2)`, so the vacuum
//! has variance 1/2 in each quadrature and `∫∫ W dx dp = 1`.

use std::f64::consts::{FRAC_1_PI, SQRT_2};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::PovmElement;
use crate::error::{Error, Result};
use crate::fock::{CMatrix, CVector, DensityMatrix, FockDim, C64, ZERO};
use crate::retrodiction::{projectivity, retrodicted_state};
use crate::tol::Tolerances;

pub const CONVENTION: &str =
    "hbar=1; x=(a+a^dag)/sqrt(2); p=(a-a^dag)/(i*sqrt(2)); integral W dx dp = 1";

/// Truncation tail above which a Gaussian reference is not trusted.
pub const REFERENCE_TAIL_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nx: usize,
    pub np: usize,
}

impl PhaseSpaceGrid {
    pub fn new(
        x_min: f64,
        x_max: f64,
        p_min: f64,
        p_max: f64,
        nx: usize,
        np: usize,
    ) -> Result<Self> {
        if [x_min, x_max, p_min, p_max].iter().any(|v| !v.is_finite()) {
            return Err(Error::param("grid", "axis bounds must be finite"));
        }
        if x_max <= x_min || p_max <= p_min {
            return Err(Error::param("grid", "axis maxima must exceed minima"));
        }
        if nx < 2 || np < 2 {
            return Err(Error::param("grid", "at least two points per axis"));
        }
        if ![x_min, x_max, p_min, p_max].iter().all(|v| v.is_finite()) {
            return Err(Error::param("grid", "axis bounds must be finite"));
        }
        Ok(PhaseSpaceGrid {
            x_min,
            x_max,
            p_min,
            p_max,
            nx,
            np,
        })
    }

    /// `[−half, half]²` with `n` points per axis.
    pub fn square(half: f64, n: usize) -> Result<Self> {
        PhaseSpaceGrid::new(-half, half, -half, half, n, n)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.np - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp()
    }

    /// Largest distance of a grid point from the origin.
    pub fn radius(&self) -> f64 {
        let x = self.x_min.abs().max(self.x_max.abs());
        let p = self.p_min.abs().max(self.p_max.abs());
        x.hypot(p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid {
    pub grid: PhaseSpaceGrid,
    /// `values[(i, j)] = W(x_i, p_j)`.
    pub values: DMatrix<f64>,
}

impl WignerGrid {
    pub fn min(&self) -> f64 {
        self.values.min()
    }

    /// Riemann sum `Σ W ΔxΔp`.
    pub fn integral(&self) -> f64 {
        self.values.sum() * self.grid.dx() * self.grid.dp()
    }

    /// Largest `|W|` on the grid boundary.
    pub fn boundary_max(&self) -> f64 {
        let (nx, np) = self.values.shape();
        let mut m = 0.0f64;
        for i in 0..nx {
            m = m
                .max(self.values[(i, 0)].abs())
                .max(self.values[(i, np - 1)].abs());
        }
        for j in 0..np {
            m = m
                .max(self.values[(0, j)].abs())
                .max(self.values[(nx - 1, j)].abs());
        }
        m
    }
}

/// `W(x, p)` by the displaced-parity expansion `Σ ρ_mn W_mn(α)`, where the
/// Fock-pair functions `W_mn` are generated by a stable three-term recursion.
pub fn wigner_at(rho: &CMatrix, x: f64, p: f64) -> f64 {
    let d = rho.nrows();
    let alpha = C64::new(x, p) / SQRT_2;
    let two_alpha = 2.0 * alpha;
    let two_alpha_conj = two_alpha.conj();
    let sqrt: Vec<f64> = (0..d).map(|k| (k as f64).sqrt()).collect();

    let mut wl = vec![ZERO; d];
    wl[0] = C64::from((-2.0 * alpha.norm_sqr()).exp() * FRAC_1_PI);
    let mut w = rho[(0, 0)].re * wl[0].re;
    for n in 1..d {
        wl[n] = two_alpha * wl[n - 1] / sqrt[n];
        w += 2.0 * (rho[(0, n)] * wl[n]).re;
    }
    for m in 1..d {
        let mut temp = wl[m];
        wl[m] = (two_alpha_conj * temp - sqrt[m] * wl[m - 1]) / sqrt[m];
        w += (rho[(m, m)] * wl[m]).re;
        for n in m + 1..d {
            let next = (two_alpha * wl[n - 1] - sqrt[m] * temp) / sqrt[n];
            temp = wl[n];
            wl[n] = next;
            w += 2.0 * (rho[(m, n)] * wl[n]).re;
        }
    }
    w
}

/// `W(0, 0) = (1/π) Σ (−1)ⁿ ρ_nn`, the parity expectation value.
pub fn wigner_origin_parity(rho: &DensityMatrix) -> f64 {
    let d = rho.dim().get();
    FRAC_1_PI
        * (0..d)
            .map(|n| if n % 2 == 0 { 1.0 } else { -1.0 } * rho.element(n, n).re)
            .sum::<f64>()
}

pub fn wigner(rho: &DensityMatrix, grid: &PhaseSpaceGrid) -> WignerGrid {
    let d = rho.dim().get();
    if grid.radius().powi(2) > 2.0 * d as f64 {
        log::debug!(
            "grid radius {:.2} exceeds the phase-space extent resolved by {} Fock levels",
            grid.radius(),
            d
        );
    }
    let m = rho.matrix();
    let values: Vec<f64> = (0..grid.nx * grid.np)
        .into_par_iter()
        .map(|k| {
            let (j, i) = (k / grid.nx, k % grid.nx);
            wigner_at(m, grid.x(i), grid.p(j))
        })
        .collect();
    WignerGrid {
        grid: *grid,
        values: DMatrix::from_vec(grid.nx, grid.np, values),
    }
}

/// `∫∫|W| − ∫∫W` by Riemann sum.
pub fn negativity_volume(w: &WignerGrid) -> f64 {
    if w.boundary_max() >= 1e-6 {
        log::warn!(
            "Wigner function reaches {:.2e} on the grid boundary; negativity volume may be truncated",
            w.boundary_max()
        );
    }
    let cell = w.grid.dx() * w.grid.dp();
    w.values.iter().map(|v| v.abs() - v).sum::<f64>() * cell
}

/// First and second quadrature moments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    /// `(⟨x⟩, ⟨p⟩)`.
    pub mean: [f64; 2],
    /// Symmetrized covariance `[[Vxx, Vxp], [Vxp, Vpp]]`.
    pub cov: [[f64; 2]; 2],
}

impl Moments {
    pub fn det(&self) -> f64 {
        self.cov[0][0] * self.cov[1][1] - self.cov[0][1] * self.cov[1][0]
    }

    /// Eigenvalues of the covariance, ascending.
    pub fn cov_eigenvalues(&self) -> [f64; 2] {
        let [[a, b], [_, c]] = self.cov;
        let half_trace = 0.5 * (a + c);
        let radius = (0.25 * (a - c).powi(2) + b * b).sqrt();
        [half_trace - radius, half_trace + radius]
    }
}

/// Quadrature mean and covariance from exact Fock-basis ladder moments.
pub fn covariance_matrix(rho: &DensityMatrix) -> Moments {
    let d = rho.dim().get();
    let mut a = ZERO;
    let mut a2 = ZERO;
    let mut n = 0.0;
    for k in 0..d {
        n += k as f64 * rho.element(k, k).re;
        if k >= 1 {
            // Tr{ρ a} = Σ_k √k ρ_{k,k−1}
            a += (k as f64).sqrt() * rho.element(k, k - 1);
        }
        if k >= 2 {
            a2 += ((k * (k - 1)) as f64).sqrt() * rho.element(k, k - 2);
        }
    }
    let mx = SQRT_2 * a.re;
    let mp = SQRT_2 * a.im;
    let vxx = a2.re + n + 0.5 - mx * mx;
    let vpp = -a2.re + n + 0.5 - mp * mp;
    let vxp = a2.im - mx * mp;
    Moments {
        mean: [mx, mp],
        cov: [[vxx, vxp], [vxp, vpp]],
    }
}

/// True iff some quadrature variance falls below the vacuum level 1/2.
pub fn squeezing_witness(rho: &DensityMatrix, sq_tol: f64) -> bool {
    covariance_matrix(rho).cov_eigenvalues()[0] < 0.5 - sq_tol
}

/// Moment-matched displaced squeezed thermal state restricted to a Fock block.
#[derive(Clone, Debug)]
pub struct GaussianReference {
    /// Renormalized density matrix on the retained levels.
    pub state: DensityMatrix,
    /// Weight lost to the truncation before renormalization.
    pub tail: f64,
    pub thermal_photons: f64,
    pub squeezing: f64,
    pub squeezing_angle: f64,
    pub displacement: C64,
}

const THERMAL_NEGLECT: f64 = 1e-10;
const MAX_THERMAL_TERMS: usize = 4000;
const MAX_WORK_DIM: usize = 20_000;

/// Builds `D(β) S(ξ) ρ_th S(ξ)† D(β)†` with the given first and second
/// moments on `dim` levels.
///
/// `S(ξ)|0⟩` displaced by `β` has Fock amplitudes obeying a three-term
/// recursion that follows from `b|ψ⟩ = 0` for the transformed annihilation
/// operator `b = (a − β) cosh r + (a† − β*) e^{iθ} sinh r`; excited thermal
/// components are `(b†)^k / √k!` applied to it.
pub fn gaussian_reference(moments: &Moments, dim: FockDim) -> Result<GaussianReference> {
    let d = dim.get();
    let det = moments.det();
    if !(det.is_finite() && det > 0.0) {
        return Err(Error::param(
            "cov",
            format!("covariance determinant {det} is not positive"),
        ));
    }
    let nu = det.sqrt();
    let nbar = (nu - 0.5).max(0.0);
    let [[vxx, vxp], [_, vpp]] = moments.cov;
    let cosh_2r = ((vxx + vpp) / (2.0 * nu)).max(1.0);
    let r = 0.5 * cosh_2r.acosh();
    let theta = (-2.0 * vxp).atan2(vpp - vxx);
    let beta = C64::new(moments.mean[0], moments.mean[1]) / SQRT_2;
    let (ch, sh) = (r.cosh(), r.sinh());
    let phase = C64::from_polar(1.0, theta);

    // Thermal weights p_k = n̄^k/(n̄+1)^{k+1}; keep terms until the remainder is negligible.
    let ratio = nbar / (nbar + 1.0);
    let mut weights = vec![1.0 / (nbar + 1.0)];
    let mut remainder = ratio;
    while remainder > THERMAL_NEGLECT && weights.len() < MAX_THERMAL_TERMS {
        weights.push(weights[weights.len() - 1] * ratio);
        remainder *= ratio;
    }
    let thermal_neglect = if nbar > 0.0 { remainder } else { 0.0 };
    let terms = weights.len();

    // Pure component amplitudes, extended until they are negligible.
    let gamma = (beta * ch + beta.conj() * phase * sh) / ch;
    let t = phase * (sh / ch);
    let min_work = d + terms + 1;
    let mut c: Vec<C64> = vec![C64::from(1.0)];
    let mut norm2 = 1.0;
    let mut quiet = 0;
    loop {
        let n = c.len() - 1;
        let prev = if n >= 1 { c[n - 1] } else { ZERO };
        let next = (gamma * c[n] - t * (n as f64).sqrt() * prev) / ((n + 1) as f64).sqrt();
        norm2 += next.norm_sqr();
        c.push(next);
        quiet = if next.norm_sqr() < 1e-24 * norm2 {
            quiet + 1
        } else {
            0
        };
        if (c.len() >= min_work && quiet >= 8) || c.len() >= MAX_WORK_DIM {
            break;
        }
    }
    let psi_tail = if quiet >= 8 { 0.0 } else { 1.0 };
    let work = c.len();
    let scale = norm2.sqrt();
    let mut v = CVector::from_iterator(work, c.into_iter().map(|z| z / scale));

    // b† = (a† − β*) cosh r + (a − β) e^{−iθ} sinh r
    let apply_b_dag = |v: &CVector| -> CVector {
        CVector::from_fn(work, |j, _| {
            let raise = if j >= 1 {
                (j as f64).sqrt() * v[j - 1]
            } else {
                ZERO
            };
            let lower = if j + 1 < work {
                ((j + 1) as f64).sqrt() * v[j + 1]
            } else {
                ZERO
            };
            ch * (raise - beta.conj() * v[j]) + phase.conj() * sh * (lower - beta * v[j])
        })
    };

    let mut block = CMatrix::zeros(d, d);
    for (k, pk) in weights.iter().enumerate() {
        if k > 0 {
            v = apply_b_dag(&v).unscale((k as f64).sqrt());
            // Entries at index >= work − k have lost their upper neighbours.
            for j in work - k..work {
                v[j] = ZERO;
            }
        }
        let head = v.rows(0, d);
        block += (head * head.adjoint()).scale(*pk);
    }
    let kept: f64 = block.diagonal().iter().map(|z| z.re).sum();
    let tail = (1.0 - kept).max(0.0) + thermal_neglect + psi_tail;
    let block = crate::fock::hermitian_part(&block).unscale(kept);
    Ok(GaussianReference {
        state: DensityMatrix::new(block)?,
        tail,
        thermal_photons: nbar,
        squeezing: r,
        squeezing_angle: theta,
        displacement: beta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gaussianity {
    Gaussian,
    NonGaussian,
    Undetermined,
}

/// Overlap of a state with its moment-matched Gaussian twin,
/// `Tr{ρ ρ_G} / max(Tr{ρ²}, Tr{ρ_G²})`, together with the twin's tail.
pub fn gaussian_overlap(rho: &DensityMatrix) -> Result<(f64, f64)> {
    let reference = gaussian_reference(&covariance_matrix(rho), rho.dim())?;
    let overlap = rho.overlap(&reference.state)?;
    let denom = rho.purity().max(reference.state.purity());
    Ok((overlap / denom, reference.tail))
}

pub fn gaussianity_check(rho: &DensityMatrix, gauss_tol: f64) -> Gaussianity {
    match gaussian_overlap(rho) {
        Ok((_, tail)) if tail > REFERENCE_TAIL_TOL => Gaussianity::Undetermined,
        Ok((proxy, _)) if proxy >= 1.0 - gauss_tol => Gaussianity::Gaussian,
        Ok(_) => Gaussianity::NonGaussian,
        Err(_) => Gaussianity::Undetermined,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonClassicalityReport {
    pub outcome_label: String,
    pub projectivity: f64,
    pub min_wigner: f64,
    pub negativity_volume: f64,
    pub min_quadrature_variance: f64,
    pub squeezing_witness: bool,
    pub is_nonclassical: bool,
    pub gaussianity: Gaussianity,
    /// Set when a projective outcome with non-negative Wigner function is
    /// nevertheless judged non-Gaussian, which pure-state theory forbids.
    pub hudson_inconsistent: bool,
}

pub fn nonclassicality_of_measurement(
    pi: &PovmElement,
    grid: &PhaseSpaceGrid,
    tol: &Tolerances,
) -> Result<NonClassicalityReport> {
    let r = retrodicted_state(pi)?;
    let rho = r.state();
    let w = wigner(rho, grid);
    let min_wigner = w.min();
    let negativity = negativity_volume(&w);
    let moments = covariance_matrix(rho);
    let squeezed = moments.cov_eigenvalues()[0] < 0.5 - tol.sq_tol;
    let gaussianity = gaussianity_check(rho, tol.gauss_tol);
    let purity = projectivity(&r);
    let hudson_inconsistent = purity >= tol.pi_min
        && min_wigner >= -tol.neg_tol
        && gaussianity == Gaussianity::NonGaussian;
    Ok(NonClassicalityReport {
        outcome_label: r.outcome_label().to_string(),
        projectivity: purity,
        min_wigner,
        negativity_volume: negativity,
        min_quadrature_variance: moments.cov_eigenvalues()[0],
        squeezing_witness: squeezed,
        is_nonclassical: negativity > tol.neg_tol || squeezed,
        gaussianity,
        hudson_inconsistent,
    })
}
