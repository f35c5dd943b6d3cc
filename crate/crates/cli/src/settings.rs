use anyhow::{bail, Context, Result};
use retrodict::Tolerances;

pub const ENV_PREFIX: &str = "RETRODICT_";

/// Default tolerances with `RETRODICT_<FIELD>` environment overrides applied,
/// e.g. `RETRODICT_PI_MIN=0.95`.
pub fn tolerances_from_env() -> Result<Tolerances> {
    tolerances_from(|key| std::env::var(key).ok())
}

pub fn tolerances_from(lookup: impl Fn(&str) -> Option<String>) -> Result<Tolerances> {
    let mut t = Tolerances::default();
    let fields: [(&str, &mut f64); 8] = [
        ("COMPLETENESS_TOL", &mut t.completeness_tol),
        ("PI_MIN", &mut t.pi_min),
        ("ZETA_MIN", &mut t.zeta_min),
        ("NEG_TOL", &mut t.neg_tol),
        ("SQ_TOL", &mut t.sq_tol),
        ("GAUSS_TOL", &mut t.gauss_tol),
        ("TAIL_TOL", &mut t.tail_tol),
        ("TAIL_REFUSE", &mut t.tail_refuse),
    ];
    for (name, slot) in fields {
        let key = format!("{ENV_PREFIX}{name}");
        if let Some(raw) = lookup(&key) {
            let v: f64 = raw
                .trim()
                .parse()
                .with_context(|| format!("{key}=`{raw}` is not a number"))?;
            if !v.is_finite() || v < 0.0 {
                bail!("{key} must be a finite non-negative number");
            }
            *slot = v;
        }
    }
    Ok(t)
}
