//! Retrodicted states and the estimators built on them.
//!
//! For an outcome with POVM element `Π`, the retrodicted state is
//! `ρ_retr = Π / Tr{Π}`. Its purity is the projectivity `π`, and the
//! detection efficiency of that state, `ζ = Tr{Π²}/Tr{Π} = π·Tr{Π}`, is the
//! ideality. Against a target `|ψ⟩` the fidelity `F = ⟨ψ|ρ_retr|ψ⟩` and the
//! detectivity `κ = Tr{Π}·Tr{ρ_tar ρ_retr}` satisfy `κ·π = ζ·F`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{Povm, PovmElement};
use crate::error::{Error, Result};
use crate::fock::{max_abs, same_dim, DensityMatrix, FockDim, HermitianOperator, StateVector};
use crate::tol::{Tolerances, NORM_TOL, PROBABILITY_TOL, TRACE_FLOOR};

/// State assigned to the system before the measurement, given an outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct RetrodictedState {
    state: DensityMatrix,
    outcome_label: String,
    trace_weight: f64,
}

impl RetrodictedState {
    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn outcome_label(&self) -> &str {
        &self.outcome_label
    }

    /// `Tr{Π}`.
    pub fn trace_weight(&self) -> f64 {
        self.trace_weight
    }

    pub fn dim(&self) -> FockDim {
        self.state.dim()
    }
}

fn clamp_probability(p: f64) -> Result<f64> {
    if !(-PROBABILITY_TOL..=1.0 + PROBABILITY_TOL).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// `Pr(n|ρ) = Tr{ρ Π_n}`.
pub fn born_probability(rho: &DensityMatrix, pi: &PovmElement) -> Result<f64> {
    clamp_probability(rho.expectation(pi.operator())?)
}

pub fn retrodicted_state(pi: &PovmElement) -> Result<RetrodictedState> {
    let trace = pi.trace();
    if trace <= TRACE_FLOOR {
        return Err(Error::NullOutcome {
            label: pi.label().to_string(),
            trace,
        });
    }
    Ok(RetrodictedState {
        state: DensityMatrix::normalize(pi.operator())?,
        outcome_label: pi.label().to_string(),
        trace_weight: trace,
    })
}

/// Purity of the retrodicted state.
pub fn projectivity(r: &RetrodictedState) -> f64 {
    r.state.purity()
}

/// `ζ = Tr{Π²}/Tr{Π}`.
pub fn ideality(pi: &PovmElement) -> Result<f64> {
    let trace = pi.trace();
    if trace <= TRACE_FLOOR {
        return Err(Error::NullOutcome {
            label: pi.label().to_string(),
            trace,
        });
    }
    Ok(pi.operator().trace_of_square() / trace)
}

/// `⟨ψ_tar|ρ_retr|ψ_tar⟩`, the retrodictive probability of the target preparation.
pub fn fidelity(r: &RetrodictedState, target: &StateVector) -> Result<f64> {
    same_dim(r.dim(), target.dim())?;
    clamp_probability(target.expectation(&r.state.as_operator())?)
}

/// `κ = Tr{Π}·Tr{ρ_tar ρ_retr}`; accepts mixed targets by linearity.
pub fn detectivity(pi: &PovmElement, target: &DensityMatrix) -> Result<f64> {
    same_dim(pi.dim(), target.dim())?;
    match retrodicted_state(pi) {
        Ok(r) => clamp_probability(r.trace_weight * target.overlap(&r.state)?),
        Err(Error::NullOutcome { .. }) => born_probability(target, pi),
        Err(e) => Err(e),
    }
}

/// `Tr{ρ_retr Θ}` for a preparation proposition operator `Θ`.
pub fn retrodictive_probability(r: &RetrodictedState, theta: &HermitianOperator) -> Result<f64> {
    r.state.expectation(theta)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeEntry {
    pub prior: f64,
    pub state: DensityMatrix,
    pub label: String,
}

/// Prior-weighted candidate preparations `{Pr(m), ρ_m}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeEnsemble {
    entries: Vec<ProbeEntry>,
}

impl ProbeEnsemble {
    pub fn new(entries: Vec<ProbeEntry>) -> Result<Self> {
        let first = entries
            .first()
            .ok_or_else(|| Error::param("entries", "ensemble is empty"))?;
        let dim = first.state.dim();
        let mut total = 0.0;
        for e in &entries {
            same_dim(dim, e.state.dim())?;
            if !(0.0..=1.0).contains(&e.prior) {
                return Err(Error::param(
                    "prior",
                    format!("{} is outside [0, 1]", e.prior),
                ));
            }
            total += e.prior;
        }
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::param(
                "prior",
                format!("priors sum to {total}, not 1"),
            ));
        }
        Ok(ProbeEnsemble { entries })
    }

    /// Equal priors over the given labeled states.
    pub fn uniform(states: Vec<(String, DensityMatrix)>) -> Result<Self> {
        let p = 1.0 / states.len().max(1) as f64;
        ProbeEnsemble::new(
            states
                .into_iter()
                .map(|(label, state)| ProbeEntry {
                    prior: p,
                    state,
                    label,
                })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[ProbeEntry] {
        &self.entries
    }

    pub fn dim(&self) -> FockDim {
        self.entries[0].state.dim()
    }

    /// `ρ_probe = Σ_m Pr(m) ρ_m`.
    pub fn probe_state(&self) -> DensityMatrix {
        let d = self.dim().get();
        let m = self
            .entries
            .iter()
            .fold(crate::fock::CMatrix::zeros(d, d), |acc, e| {
                acc + e.state.matrix().scale(e.prior)
            });
        DensityMatrix::new(m).expect("convex combination of states")
    }

    /// `Θ_m = D·Pr(m)·ρ_m`.
    pub fn proposition_operators(&self) -> Vec<HermitianOperator> {
        let d = self.dim().get() as f64;
        self.entries
            .iter()
            .map(|e| e.state.as_operator().scale(d * e.prior))
            .collect()
    }
}

/// Bayesian posterior `Pr(m|n) = Pr(n|ρ_m) Pr(m) / Pr(n)` over the ensemble.
pub fn retrodict_ensemble(
    p: &Povm,
    outcome_label: &str,
    ensemble: &ProbeEnsemble,
) -> Result<Vec<(String, f64)>> {
    same_dim(p.dim(), ensemble.dim())?;
    let pi = p.element(outcome_label)?;
    let joint = ensemble
        .entries
        .iter()
        .map(|e| Ok(born_probability(&e.state, pi)? * e.prior))
        .collect::<Result<Vec<f64>>>()?;
    let marginal: f64 = joint.iter().sum();
    if marginal <= TRACE_FLOOR {
        return Err(Error::UnreachableOutcome {
            label: outcome_label.to_string(),
            probability: marginal,
        });
    }
    Ok(ensemble
        .entries
        .iter()
        .zip(joint)
        .map(|(e, j)| (e.label.clone(), j / marginal))
        .collect())
}

/// Comparison of the Bayesian posterior with `Tr{ρ_retr Θ_m}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GleasonCheck {
    /// `‖ρ_probe − I/D‖_max`; the two routes agree only when this vanishes.
    pub probe_deviation: f64,
    /// `max_m |Pr(m|n) − Tr{ρ_retr Θ_m}|`.
    pub max_discrepancy: f64,
}

pub fn gleason_cross_check(
    p: &Povm,
    outcome_label: &str,
    ensemble: &ProbeEnsemble,
) -> Result<GleasonCheck> {
    let posterior = retrodict_ensemble(p, outcome_label, ensemble)?;
    let r = retrodicted_state(p.element(outcome_label)?)?;
    let mut max_discrepancy = 0.0f64;
    for ((_, post), theta) in posterior.iter().zip(ensemble.proposition_operators()) {
        let direct = retrodictive_probability(&r, &theta)?;
        max_discrepancy = max_discrepancy.max((post - direct).abs());
    }
    let probe = ensemble.probe_state();
    let mixed = DensityMatrix::maximally_mixed(ensemble.dim());
    Ok(GleasonCheck {
        probe_deviation: max_abs(&(probe.matrix() - mixed.matrix())),
        max_discrepancy,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    NonProjective,
    ProjectiveIdeal,
    ProjectiveNonIdeal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub pi_min: f64,
    pub zeta_min: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds::from(&Tolerances::default())
    }
}

impl From<&Tolerances> for Thresholds {
    fn from(t: &Tolerances) -> Self {
        Thresholds {
            pi_min: t.pi_min,
            zeta_min: t.zeta_min,
        }
    }
}

pub fn classify_outcome(projectivity: f64, ideality: f64, thresholds: &Thresholds) -> Category {
    match (
        projectivity >= thresholds.pi_min,
        ideality >= thresholds.zeta_min,
    ) {
        (true, true) => Category::ProjectiveIdeal,
        (true, false) => Category::ProjectiveNonIdeal,
        (false, _) => Category::NonProjective,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetScore {
    pub target: String,
    pub fidelity: f64,
    pub detectivity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub outcome_label: String,
    pub projectivity: f64,
    pub ideality: f64,
    pub trace_weight: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub targets: Vec<TargetScore>,
    pub category: Category,
}

impl EstimatorReport {
    /// `|ζ − π·Tr{Π}|`.
    pub fn ideality_residual(&self) -> f64 {
        (self.ideality - self.projectivity * self.trace_weight).abs()
    }

    /// `max |κ·π − ζ·F|` over the target scores (0 when there are none).
    pub fn estimator_identity_residual(&self) -> f64 {
        self.targets
            .iter()
            .map(|t| (t.detectivity * self.projectivity - self.ideality * t.fidelity).abs())
            .fold(0.0, f64::max)
    }
}

/// A named pure target state.
#[derive(Clone, Debug, PartialEq)]
pub struct Target {
    pub name: String,
    pub state: StateVector,
}

pub fn characterize_outcome(
    pi: &PovmElement,
    targets: &[Target],
    thresholds: &Thresholds,
) -> Result<EstimatorReport> {
    let r = retrodicted_state(pi)?;
    let projectivity = projectivity(&r);
    let ideality = ideality(pi)?;
    let targets = targets
        .iter()
        .map(|t| {
            Ok(TargetScore {
                target: t.name.clone(),
                fidelity: fidelity(&r, &t.state)?,
                detectivity: detectivity(pi, &t.state.projector())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimatorReport {
        outcome_label: r.outcome_label,
        projectivity,
        ideality,
        trace_weight: r.trace_weight,
        targets,
        category: classify_outcome(projectivity, ideality, thresholds),
    })
}

/// Characterizes every outcome in parallel; null outcomes yield `Err(NullOutcome)`.
pub fn characterize_povm(
    p: &Povm,
    targets: &[Target],
    thresholds: &Thresholds,
) -> Vec<Result<EstimatorReport>> {
    p.elements()
        .par_iter()
        .map(|e| characterize_outcome(e, targets, thresholds))
        .collect()
}
