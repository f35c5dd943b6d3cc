use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use retrodict::retrodiction::Target;
use retrodict::{coherent_state, fock_state, squeezed_vacuum, FockDim, StateVector, C64};

/// A pure state named on the command line: `fock:n`, `coherent:re,im` or
/// `squeezed:r`.
#[derive(Clone, Debug, PartialEq)]
pub enum StateSpec {
    Fock(usize),
    Coherent(f64, f64),
    Squeezed(f64),
}

impl StateSpec {
    pub fn state(&self, dim: FockDim) -> Result<StateVector> {
        Ok(match *self {
            StateSpec::Fock(n) => fock_state(n, dim)?,
            StateSpec::Coherent(re, im) => coherent_state(C64::new(re, im), dim),
            StateSpec::Squeezed(r) => squeezed_vacuum(r, dim),
        })
    }

    pub fn target(&self, dim: FockDim) -> Result<Target> {
        Ok(Target {
            name: self.to_string(),
            state: self.state(dim)?,
        })
    }
}

impl std::fmt::Display for StateSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StateSpec::Fock(n) => write!(f, "fock:{n}"),
            StateSpec::Coherent(re, im) => write!(f, "coherent:{re},{im}"),
            StateSpec::Squeezed(r) => write!(f, "squeezed:{r}"),
        }
    }
}

fn number(s: &str, what: &str) -> Result<f64> {
    let x: f64 = s
        .trim()
        .parse()
        .with_context(|| format!("bad {what} `{s}`"))?;
    if !x.is_finite() {
        bail!("{what} must be finite");
    }
    Ok(x)
}

impl FromStr for StateSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s.split_once(':').ok_or_else(|| {
            anyhow!("state `{s}` should look like fock:n, coherent:re,im or squeezed:r")
        })?;
        match kind {
            "fock" => Ok(StateSpec::Fock(
                args.trim()
                    .parse()
                    .with_context(|| format!("bad level `{args}`"))?,
            )),
            "coherent" => {
                let (re, im) = args.split_once(',').unwrap_or((args, "0"));
                Ok(StateSpec::Coherent(
                    number(re, "real part")?,
                    number(im, "imaginary part")?,
                ))
            }
            "squeezed" => Ok(StateSpec::Squeezed(number(args, "squeezing")?)),
            other => bail!("unknown state kind `{other}`"),
        }
    }
}
