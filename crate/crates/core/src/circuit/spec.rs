use std::fmt;
use std::str::FromStr;

use super::{gaussian3x3, generate_adder, multiplier, AdderFamily, AdderSpec, Netlist, NetlistBuilder};
use crate::error::{Error, Result};

/// Short textual circuit descriptions, usable wherever a netlist file is
/// expected:
///
/// ```text
/// adder:W            exact ripple-carry adder
/// trunc:W:K          truncated adder (K low bits forced to 0)
/// loa:W:K            lower-part OR adder
/// ama1:W:K  ama2:W:K  ama5:W:K  axa2:W:K
/// gear:W:R:P         GeAr with R result and P prediction bits
/// const0:W           2W inputs, W+1 constant-zero outputs
/// mult:W[:FAM:K]     array multiplier, optionally with approximate adders
/// gauss:W[:FAM:K]    3x3 Gaussian kernel over W-bit pixels
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CircuitSpec {
    Adder(AdderSpec),
    Const0(usize),
    Multiplier { width: usize, adder: AdderSpec },
    Gaussian { width: usize, adder: AdderSpec },
}

impl CircuitSpec {
    pub fn build(&self) -> Result<Netlist> {
        match self {
            CircuitSpec::Adder(spec) => generate_adder(spec),
            CircuitSpec::Const0(w) => {
                if *w == 0 {
                    return Err(Error::Spec("const0 width must be at least 1".into()));
                }
                let mut b = NetlistBuilder::new();
                b.inputs(2 * w);
                let z = b.const0();
                Ok(b.finish(format!("const0_w{w}"), vec![z; w + 1]))
            }
            CircuitSpec::Multiplier { width, adder } => multiplier(*width, adder),
            CircuitSpec::Gaussian { width, adder } => gaussian3x3(*width, adder),
        }
    }
}

fn num(field: &str, what: &str, text: &str) -> Result<usize> {
    field
        .parse()
        .map_err(|_| Error::Spec(format!("{text}: {what} must be a non-negative integer, got {field:?}")))
}

fn tree_adder(fields: &[&str], width: usize, text: &str) -> Result<AdderSpec> {
    match fields {
        [] => Ok(AdderSpec::exact(width)),
        ["gear", r, p] => Ok(AdderSpec::gear(width, num(r, "R", text)?, num(p, "P", text)?)),
        [fam, k] => {
            let family = AdderFamily::from_name(fam)
                .filter(|f| *f != AdderFamily::Gear)
                .ok_or_else(|| Error::Spec(format!("{text}: unknown adder family {fam:?}")))?;
            Ok(AdderSpec::new(family, width, num(k, "K", text)?))
        }
        _ => Err(Error::Spec(format!("{text}: expected FAMILY:K after the width"))),
    }
}

impl FromStr for CircuitSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let fields: Vec<&str> = text.split(':').collect();
        let spec = match fields.as_slice() {
            ["adder" | "exact", w] => CircuitSpec::Adder(AdderSpec::exact(num(w, "W", text)?)),
            ["const0", w] => CircuitSpec::Const0(num(w, "W", text)?),
            ["gear", w, r, p] => CircuitSpec::Adder(AdderSpec::gear(
                num(w, "W", text)?,
                num(r, "R", text)?,
                num(p, "P", text)?,
            )),
            ["mult", w, rest @ ..] => {
                let width = num(w, "W", text)?;
                CircuitSpec::Multiplier {
                    width,
                    adder: tree_adder(rest, width, text)?,
                }
            }
            ["gauss", w, rest @ ..] => {
                let width = num(w, "W", text)?;
                CircuitSpec::Gaussian {
                    width,
                    adder: tree_adder(rest, width, text)?,
                }
            }
            [fam, w, k] => {
                let family = AdderFamily::from_name(fam)
                    .filter(|f| !matches!(f, AdderFamily::Exact | AdderFamily::Gear))
                    .ok_or_else(|| Error::Spec(format!("unknown circuit spec {text:?}")))?;
                CircuitSpec::Adder(AdderSpec::new(family, num(w, "W", text)?, num(k, "K", text)?))
            }
            _ => return Err(Error::Spec(format!("unknown circuit spec {text:?}"))),
        };
        if let CircuitSpec::Adder(a) = &spec {
            a.validate()?;
        }
        Ok(spec)
    }
}

impl fmt::Display for CircuitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let adder_suffix = |a: &AdderSpec| match a.family {
            AdderFamily::Exact => String::new(),
            AdderFamily::Gear => format!(":gear:{}:{}", a.gear_r, a.gear_p),
            fam => format!(":{}:{}", fam.name(), a.approx_bits),
        };
        match self {
            CircuitSpec::Adder(a) => match a.family {
                AdderFamily::Exact => write!(f, "adder:{}", a.width),
                AdderFamily::Gear => write!(f, "gear:{}:{}:{}", a.width, a.gear_r, a.gear_p),
                fam => write!(f, "{}:{}:{}", fam.name(), a.width, a.approx_bits),
            },
            CircuitSpec::Const0(w) => write!(f, "const0:{w}"),
            CircuitSpec::Multiplier { width, adder } => write!(f, "mult:{width}{}", adder_suffix(adder)),
            CircuitSpec::Gaussian { width, adder } => write!(f, "gauss:{width}{}", adder_suffix(adder)),
        }
    }
}
