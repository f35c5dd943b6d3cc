//! POVM containers, canonical optical-detector models and POVM validation.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    hermiticity_defect, max_abs, real_trace, same_dim, CMatrix, FockDim, HermitianOperator,
    StateVector,
};
use crate::tol::{Tolerances, HERM_TOL, NULL_TRACE, PSD_TOL};

/// One labeled outcome of a measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct PovmElement {
    label: String,
    op: HermitianOperator,
}

impl PovmElement {
    pub fn new(label: impl Into<String>, op: HermitianOperator) -> Self {
        PovmElement {
            label: label.into(),
            op,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn dim(&self) -> FockDim {
        self.op.dim()
    }

    /// `Tr{Π}`.
    pub fn trace(&self) -> f64 {
        self.op.trace()
    }

    pub fn is_null(&self) -> bool {
        self.trace() < NULL_TRACE
    }
}

/// Ordered, uniquely labeled set of POVM elements on a common space.
///
/// Construction checks only structure (dimensions, labels). Positivity and
/// completeness are the business of [`validate_povm`], so that defective
/// inputs can still be inspected and reported on.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    dim: FockDim,
    elements: Vec<PovmElement>,
    guard_levels: usize,
    metadata: BTreeMap<String, String>,
}

impl Povm {
    pub fn new(elements: Vec<PovmElement>, guard_levels: usize) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::param("elements", "a POVM needs at least one element"))?;
        let dim = first.dim();
        let mut seen = HashSet::new();
        for e in &elements {
            same_dim(dim, e.dim())?;
            if !seen.insert(e.label.as_str()) {
                return Err(Error::DuplicateLabel(e.label.clone()));
            }
        }
        if guard_levels >= dim.get() {
            return Err(Error::param(
                "guard_levels",
                format!("{guard_levels} leaves no levels to check at dim {dim}"),
            ));
        }
        Ok(Povm {
            dim,
            elements,
            guard_levels,
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    pub fn set_metadata(&mut self, metadata: BTreeMap<String, String>) {
        self.metadata = metadata;
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn dim(&self) -> FockDim {
        self.dim
    }

    pub fn guard_levels(&self) -> usize {
        self.guard_levels
    }

    pub fn elements(&self) -> &[PovmElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, label: &str) -> Result<&PovmElement> {
        self.elements
            .iter()
            .find(|e| e.label == label)
            .ok_or_else(|| Error::UnknownOutcome(label.to_string()))
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.elements.iter().map(|e| e.label.as_str())
    }

    /// `Σ_n Π_n`.
    pub fn sum(&self) -> HermitianOperator {
        sum_elements(self.dim, &self.elements)
    }
}

fn sum_elements(dim: FockDim, elements: &[PovmElement]) -> HermitianOperator {
    elements
        .iter()
        .fold(HermitianOperator::zeros(dim), |acc, e| {
            acc.add(&e.op).expect("dimensions checked")
        })
}

/// Guard band applied to POVMs loaded from experimental data.
pub fn default_guard_levels(dim: FockDim) -> usize {
    dim.get().div_ceil(5)
}

fn fock_labels(dim: FockDim) -> impl Iterator<Item = String> {
    (0..dim.get()).map(|n| n.to_string())
}

/// Perfect photon-number-resolving counter: `Π_n = |n⟩⟨n|`.
pub fn ideal_pnr(dim: FockDim) -> Povm {
    let d = dim.get();
    let elements = fock_labels(dim)
        .enumerate()
        .map(|(n, label)| {
            let mut diag = vec![0.0; d];
            diag[n] = 1.0;
            PovmElement::new(
                label,
                HermitianOperator::from_diagonal(&diag).expect("d >= 2"),
            )
        })
        .collect();
    Povm::new(elements, 0)
        .expect("labels are unique")
        .with_metadata("model", "ideal-pnr")
}

fn check_unit_interval(name: &'static str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::param(name, format!("{x} is outside [0, 1]")));
    }
    Ok(())
}

fn binomial(m: usize, n: usize) -> f64 {
    let k = n.min(m - n);
    (0..k).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

/// Photon counter behind a beam splitter of transmission `eta`:
/// `Π_n = Σ_{m≥n} C(m,n) ηⁿ (1−η)^{m−n} |m⟩⟨m|`.
pub fn lossy_pnr(eta: f64, dim: FockDim) -> Result<Povm> {
    check_unit_interval("eta", eta)?;
    let d = dim.get();
    let elements = fock_labels(dim)
        .enumerate()
        .map(|(n, label)| {
            let diag: Vec<f64> = (0..d)
                .map(|m| {
                    if m < n {
                        0.0
                    } else {
                        binomial(m, n) * eta.powi(n as i32) * (1.0 - eta).powi((m - n) as i32)
                    }
                })
                .collect();
            PovmElement::new(
                label,
                HermitianOperator::from_diagonal(&diag).expect("d >= 2"),
            )
        })
        .collect();
    Ok(Povm::new(elements, 0)?
        .with_metadata("model", "lossy-pnr")
        .with_metadata("eta", format!("{eta}")))
}

/// On/off avalanche photodiode with efficiency `eta` and dark-count
/// probability `nu`: `Π_off = (1−ν) Σ (1−η)ⁿ |n⟩⟨n|`, `Π_on = I − Π_off`.
pub fn on_off_apd(eta: f64, nu: f64, dim: FockDim) -> Result<Povm> {
    check_unit_interval("eta", eta)?;
    if !(0.0..1.0).contains(&nu) {
        return Err(Error::param("nu", format!("{nu} is outside [0, 1)")));
    }
    let off: Vec<f64> = (0..dim.get())
        .map(|n| (1.0 - nu) * (1.0 - eta).powi(n as i32))
        .collect();
    let on: Vec<f64> = off.iter().map(|p| 1.0 - p).collect();
    let elements = vec![
        PovmElement::new("off", HermitianOperator::from_diagonal(&off)?),
        PovmElement::new("on", HermitianOperator::from_diagonal(&on)?),
    ];
    Ok(Povm::new(elements, 0)?
        .with_metadata("model", "apd")
        .with_metadata("eta", format!("{eta}"))
        .with_metadata("nu", format!("{nu}")))
}

/// Projective but possibly non-ideal outcome `Π = ζ |ψ⟩⟨ψ|`, labeled `"element"`.
pub fn scaled_projector(psi: &StateVector, zeta: f64) -> Result<PovmElement> {
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(Error::param("zeta", format!("{zeta} is outside (0, 1]")));
    }
    Ok(PovmElement::new(
        "element",
        HermitianOperator::scaled_projector(psi, zeta),
    ))
}

/// Appends `rest = I − Σ Π` so that the set becomes exhaustive.
///
/// Negative eigenvalues of the remainder down to `−PSD_TOL` are clipped;
/// anything more negative means the inputs already exceed the identity.
pub fn complete_with_rest(elements: Vec<PovmElement>) -> Result<Povm> {
    let first = elements
        .first()
        .ok_or_else(|| Error::param("elements", "nothing to complete"))?;
    let dim = first.dim();
    for e in &elements {
        same_dim(dim, e.dim())?;
    }
    let rest = HermitianOperator::identity(dim).sub(&sum_elements(dim, &elements))?;
    let spectrum = rest.eigh()?;
    let rest = if spectrum.min() < -PSD_TOL {
        return Err(Error::ExceedsIdentity(-spectrum.min()));
    } else if spectrum.min() < 0.0 {
        HermitianOperator::new(spectrum.map(|x| x.max(0.0)))?
    } else {
        rest
    };
    let mut all = elements;
    all.push(PovmElement::new("rest", rest));
    Povm::new(all, 0)
}

/// Per-element diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementCheck {
    pub label: String,
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub trace: f64,
    pub hermitian: bool,
    pub positive: bool,
    pub bounded: bool,
    /// Informational: null outcomes are kept to preserve indexing.
    pub null: bool,
}

impl ElementCheck {
    pub fn ok(&self) -> bool {
        self.hermitian && self.positive && self.bounded
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub dim: usize,
    pub guard_levels: usize,
    pub elements: Vec<ElementCheck>,
    /// `max |⟨i|(ΣΠ − I)|j⟩|` over `i, j < dim − guard_levels`.
    pub completeness_residual: f64,
    pub completeness_tol: f64,
    pub pass: bool,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (dim {}, guard {}, completeness residual {:.3e} vs tol {:.1e})",
            if self.pass { "pass" } else { "FAIL" },
            self.dim,
            self.guard_levels,
            self.completeness_residual,
            self.completeness_tol
        )?;
        for e in self.elements.iter().filter(|e| !e.ok()) {
            write!(
                f,
                "; `{}`: hermitian={} positive={} bounded={} (eig [{:.3e}, {:.3e}])",
                e.label, e.hermitian, e.positive, e.bounded, e.min_eigenvalue, e.max_eigenvalue
            )?;
        }
        Ok(())
    }
}

/// Validates raw labeled matrices, which need not be Hermitian.
pub fn validate_matrices(
    labeled: &[(String, CMatrix)],
    guard_levels: usize,
    completeness_tol: f64,
) -> Result<ValidationReport> {
    let dim = labeled
        .first()
        .map(|(_, m)| m.nrows())
        .ok_or_else(|| Error::param("elements", "a POVM needs at least one element"))?;
    let mut sum = CMatrix::zeros(dim, dim);
    let mut checks = Vec::with_capacity(labeled.len());
    for (label, m) in labeled {
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: m.nrows().max(m.ncols()),
            });
        }
        sum += m;
        let defect = hermiticity_defect(m);
        let spectrum = crate::fock::eigh(m)?;
        let trace = real_trace(m);
        checks.push(ElementCheck {
            label: label.clone(),
            hermiticity_defect: defect,
            min_eigenvalue: spectrum.min(),
            max_eigenvalue: spectrum.max(),
            trace,
            hermitian: defect <= HERM_TOL,
            positive: spectrum.min() >= -PSD_TOL,
            bounded: spectrum.max() <= 1.0 + PSD_TOL,
            null: trace < NULL_TRACE,
        });
    }
    let checked = dim.saturating_sub(guard_levels);
    let residual_block =
        sum.view((0, 0), (checked, checked)).into_owned() - CMatrix::identity(checked, checked);
    let residual = max_abs(&residual_block);
    let pass = checks.iter().all(ElementCheck::ok) && residual <= completeness_tol;
    Ok(ValidationReport {
        dim,
        guard_levels,
        elements: checks,
        completeness_residual: residual,
        completeness_tol,
        pass,
    })
}

pub fn validate_povm_with(p: &Povm, tol: &Tolerances) -> ValidationReport {
    let labeled: Vec<(String, CMatrix)> = p
        .elements
        .iter()
        .map(|e| (e.label.clone(), e.op.matrix().clone()))
        .collect();
    validate_matrices(&labeled, p.guard_levels, tol.completeness_tol)
        .expect("Povm invariants guarantee a well-formed element list")
}

pub fn validate_povm(p: &Povm) -> ValidationReport {
    validate_povm_with(p, &Tolerances::default())
}
