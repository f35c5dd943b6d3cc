use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};
use retrodict::detector::{
    complete_with_rest, ideal_pnr, lossy_pnr, on_off_apd, scaled_projector, validate_povm_with,
    Povm,
};
use retrodict::herald::retrodictive_limit_scan;
use retrodict::io::{
    format_float, povm_from_str, povm_to_string, save_report, to_canonical_json, write_scan_table,
    write_wigner_dsv, EnsembleFile, NullOutcomeRecord, ReportFile, FORMAT_VERSION,
};
use retrodict::phase_space::{
    nonclassicality_of_measurement, wigner as wigner_grid, NonClassicalityReport, PhaseSpaceGrid,
    CONVENTION,
};
use retrodict::retrodiction::{
    characterize_povm, retrodict_ensemble, retrodicted_state, ProbeEnsemble, ProbeEntry, Thresholds,
};
use retrodict::{Error, FockDim, Tolerances};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{
    CharacterizeArgs, EnsembleArgs, GridArgs, HeraldArgs, ModelArgs, ModelKind, RetrodictArgs,
    ValidateArgs, VerifyArgs, WignerArgs,
};

pub const TOOL: &str = "retrodict";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Validation or parse failures exit with 2, numeric guards with 3 and I/O
/// failures with 4.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::Io(_) => 4,
                Error::NullOutcome { .. }
                | Error::TailViolation { .. }
                | Error::HeraldImpossible(_)
                | Error::UnreachableOutcome { .. }
                | Error::NonFinite
                | Error::ProbabilityOutOfRange(_) => 3,
                _ => 2,
            };
        }
        if cause.downcast_ref::<io::Error>().is_some() {
            return 4;
        }
    }
    2
}

struct Input {
    povm: Povm,
    digest: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_input(path: &Path, tol: &Tolerances) -> Result<Input> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
        context: path.display().to_string(),
        message: e.to_string(),
    })?;
    let povm = povm_from_str(&text, tol, &path.display().to_string())?;
    Ok(Input {
        povm,
        digest: sha256_hex(text.as_bytes()),
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => io::stdout()
            .write_all(text.as_bytes())
            .context("writing to stdout"),
    }
}

fn fock_dim(d: usize) -> Result<FockDim> {
    Ok(FockDim::new(d)?)
}

fn build_grid(g: &GridArgs) -> Result<PhaseSpaceGrid> {
    Ok(PhaseSpaceGrid::new(
        g.x_min, g.x_max, g.p_min, g.p_max, g.nx, g.np,
    )?)
}

fn required(value: Option<f64>, flag: &str, kind: &str) -> Result<f64> {
    value.ok_or_else(|| anyhow!("`{kind}` needs --{flag}"))
}

pub fn model(a: &ModelArgs) -> Result<()> {
    let dim = fock_dim(a.dim)?;
    let p = match a.kind {
        ModelKind::IdealPnr => ideal_pnr(dim),
        ModelKind::LossyPnr => lossy_pnr(required(a.eta, "eta", "lossy-pnr")?, dim)?,
        ModelKind::Apd => on_off_apd(required(a.eta, "eta", "apd")?, a.nu, dim)?,
        ModelKind::ScaledProjector => {
            let target = a
                .target
                .as_ref()
                .ok_or_else(|| anyhow!("`scaled-projector` needs --target"))?;
            let zeta = required(a.zeta, "zeta", "scaled-projector")?;
            let element = scaled_projector(&target.state(dim)?, zeta)?;
            complete_with_rest(vec![element])?
                .with_metadata("model", "scaled-projector")
                .with_metadata("target", target.to_string())
                .with_metadata("zeta", format_float(zeta))
        }
    };
    emit(a.out.as_deref(), &povm_to_string(&p)?)
}

pub fn validate(a: &ValidateArgs, tol: &Tolerances) -> Result<()> {
    let path = a.povm.display().to_string();
    let text = fs::read_to_string(&a.povm).with_context(|| format!("reading {path}"))?;
    match povm_from_str(&text, tol, &path) {
        Ok(p) => emit(None, &to_canonical_json(&validate_povm_with(&p, tol))?),
        Err(Error::InvalidPovm(report)) => {
            emit(None, &to_canonical_json(&*report)?)?;
            Err(Error::InvalidPovm(report).into())
        }
        Err(e) => Err(e.into()),
    }
}

fn summary_table(r: &ReportFile) -> String {
    let mut s = format!(
        "{:<12} {:>12} {:>12} {:>12}  {}\n",
        "outcome", "projectivity", "ideality", "trace", "category"
    );
    for row in &r.rows {
        s += &format!(
            "{:<12} {:>12.6} {:>12.6} {:>12.6}  {:?}\n",
            row.outcome_label, row.projectivity, row.ideality, row.trace_weight, row.category
        );
        for t in &row.targets {
            s += &format!(
                "{:<12}   {}: fidelity {:.6}, detectivity {:.6}\n",
                "", t.target, t.fidelity, t.detectivity
            );
        }
    }
    for n in &r.null_outcomes {
        s += &format!("{:<12} null outcome (trace {:.3e})\n", n.label, n.trace);
    }
    s
}

pub fn characterize(a: &CharacterizeArgs, tol: &Tolerances) -> Result<()> {
    let input = read_input(&a.povm, tol)?;
    let p = &input.povm;
    let thresholds = Thresholds {
        pi_min: a.pi_min.unwrap_or(tol.pi_min),
        zeta_min: a.zeta_min.unwrap_or(tol.zeta_min),
    };
    let targets = a
        .targets
        .iter()
        .map(|t| t.target(p.dim()))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut null_outcomes = Vec::new();
    for result in characterize_povm(p, &targets, &thresholds) {
        match result {
            Ok(row) => rows.push(row),
            Err(Error::NullOutcome { label, trace }) => {
                warn!("outcome `{label}` is null (trace {trace:e}) and has no retrodicted state");
                null_outcomes.push(NullOutcomeRecord { label, trace });
            }
            Err(e) => return Err(e.into()),
        }
    }
    let nonclassicality = if a.phase_space {
        let grid = build_grid(&a.grid)?;
        let null: Vec<&str> = null_outcomes.iter().map(|n| n.label.as_str()).collect();
        Some(
            p.elements()
                .iter()
                .filter(|e| !null.contains(&e.label()))
                .map(|e| nonclassicality_of_measurement(e, &grid, tol))
                .collect::<retrodict::Result<Vec<NonClassicalityReport>>>()?,
        )
    } else {
        None
    };
    let report = ReportFile {
        format_version: FORMAT_VERSION.into(),
        tool: TOOL.into(),
        tool_version: TOOL_VERSION.into(),
        input_digest: input.digest,
        dim: p.dim().get(),
        thresholds,
        rows,
        null_outcomes,
        nonclassicality,
    };
    for v in report.verify(1e-9) {
        warn!(
            "{}: {} off by {:e}",
            v.outcome_label, v.identity, v.residual
        );
    }
    match &a.out {
        Some(path) => {
            save_report(&report, path).with_context(|| format!("writing {}", path.display()))?;
            print!("{}", summary_table(&report));
            Ok(())
        }
        None => emit(None, &to_canonical_json(&report)?),
    }
}

#[derive(Serialize)]
struct WignerSidecar<'a> {
    tool: &'a str,
    tool_version: &'a str,
    input_digest: &'a str,
    convention: &'a str,
    grid: PhaseSpaceGrid,
    integral: f64,
    boundary_max: f64,
    report: NonClassicalityReport,
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".report.json");
    PathBuf::from(name)
}

pub fn wigner(a: &WignerArgs, tol: &Tolerances) -> Result<()> {
    let input = read_input(&a.povm, tol)?;
    let pi = input.povm.element(&a.outcome)?;
    let grid = build_grid(&a.grid)?;
    let r = retrodicted_state(pi)?;
    let w = wigner_grid(r.state(), &grid);
    let report = nonclassicality_of_measurement(pi, &grid, tol)?;
    let file = fs::File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_wigner_dsv(io::BufWriter::new(file), &w, &a.outcome)?;
    let sidecar = WignerSidecar {
        tool: TOOL,
        tool_version: TOOL_VERSION,
        input_digest: &input.digest,
        convention: CONVENTION,
        grid,
        integral: w.integral(),
        boundary_max: w.boundary_max(),
        report,
    };
    let side = a.report.clone().unwrap_or_else(|| sidecar_path(&a.out));
    emit(Some(&side), &to_canonical_json(&sidecar)?)?;
    info!("wrote {} and {}", a.out.display(), side.display());
    println!(
        "outcome {}: min W {:.6e}, negativity volume {:.6e}, nonclassical {}, {:?}",
        a.outcome,
        sidecar.report.min_wigner,
        sidecar.report.negativity_volume,
        sidecar.report.is_nonclassical,
        sidecar.report.gaussianity
    );
    Ok(())
}

pub fn herald(a: &HeraldArgs, tol: &Tolerances) -> Result<()> {
    let input = read_input(&a.povm, tol)?;
    let dim = input.povm.dim();
    if let Some(d) = a.dim {
        if d != dim.get() {
            return Err(Error::DimensionMismatch {
                expected: dim.get(),
                found: d,
            }
            .into());
        }
    }
    let pi = input.povm.element(&a.outcome)?;
    let scan = retrodictive_limit_scan(pi, &a.lambdas, dim, tol)?;
    let mut buf = Vec::new();
    write_scan_table(&mut buf, &scan)?;
    emit(a.out.as_deref(), std::str::from_utf8(&buf)?)?;
    if a.out.is_some() {
        println!(
            "outcome {}: {} points, strictly increasing {}",
            scan.outcome_label,
            scan.points.len(),
            scan.strictly_increasing
        );
    }
    Ok(())
}

pub fn retrodict(a: &RetrodictArgs, tol: &Tolerances) -> Result<()> {
    let input = read_input(&a.povm, tol)?;
    let ensemble = retrodict::io::load_ensemble(&a.ensemble)
        .with_context(|| format!("loading {}", a.ensemble.display()))?;
    let posterior = retrodict_ensemble(&input.povm, &a.outcome, &ensemble)?;
    let total: f64 = posterior.iter().map(|(_, p)| p).sum();
    if (total - 1.0).abs() > 1e-9 {
        bail!("posterior sums to {total}");
    }
    let mut text = format!("# posterior given outcome {}\nlabel,posterior\n", a.outcome);
    for (label, p) in &posterior {
        text += &format!("{},{}\n", csv_field(label), format_float(*p));
    }
    emit(a.out.as_deref(), &text)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn ensemble(a: &EnsembleArgs) -> Result<()> {
    let dim = fock_dim(a.dim)?;
    let states = match a.fock {
        Some(n) => (0..n).map(crate::spec::StateSpec::Fock).collect(),
        None => a.states.clone(),
    };
    if states.is_empty() {
        bail!("give --fock N or at least one --state");
    }
    let priors = if a.priors.is_empty() {
        vec![1.0 / states.len() as f64; states.len()]
    } else if a.priors.len() == states.len() {
        a.priors.clone()
    } else {
        bail!("{} priors for {} states", a.priors.len(), states.len());
    };
    let entries = states
        .iter()
        .zip(priors)
        .map(|(s, prior)| {
            let label = match s {
                crate::spec::StateSpec::Fock(n) => n.to_string(),
                other => other.to_string(),
            };
            Ok(ProbeEntry {
                prior,
                state: s.state(dim)?.projector(),
                label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let e = ProbeEnsemble::new(entries)?;
    emit(
        a.out.as_deref(),
        &to_canonical_json(&EnsembleFile::from_ensemble(&e))?,
    )
}

pub fn verify_report(a: &VerifyArgs) -> Result<()> {
    let report = retrodict::io::load_report(&a.report)?;
    if let Some(povm) = &a.povm {
        let bytes = fs::read(povm).with_context(|| format!("reading {}", povm.display()))?;
        let digest = sha256_hex(&bytes);
        if digest != report.input_digest {
            bail!(
                "report digest {} does not match {} ({digest})",
                report.input_digest,
                povm.display()
            );
        }
    }
    let violations = report.verify(a.tol);
    for v in &violations {
        println!(
            "{}: {} residual {:e}",
            v.outcome_label, v.identity, v.residual
        );
    }
    if !violations.is_empty() {
        bail!("{} identity violation(s)", violations.len());
    }
    println!(
        "ok: {} rows satisfy the estimator identities",
        report.rows.len()
    );
    Ok(())
}
