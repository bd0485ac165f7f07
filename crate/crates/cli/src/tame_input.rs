//! JSON descriptions of functions for the `tame` subcommand.
//!
//! ```json
//! {"rational": {"scalar": "3/2", "factors": [["1/2", 1], ["-3", -1]]}}
//! {"elliptic": {"tau": [0.1, 1.1], "zeros": [[0.2, 0.3]], "poles": [[0.5, 0.3]]}}
//! {"elliptic": {"tau": [0.1, 1.1], "factors": [[[0.2, 0.3], 1], [[0.5, 0.3], -1]], "alpha": [0, 0]}}
//! ```

use anyhow::{bail, Context};
use kzb_core::tame::{MeromorphicFunction, RationalFunction, SymbolValue, ThetaQuotient};
use kzb_core::Complex64;
use num_rational::BigRational;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum FunctionSpec {
    Rational {
        #[serde(default = "one")]
        scalar: String,
        #[serde(default)]
        factors: Vec<(String, i64)>,
    },
    Elliptic {
        tau: [f64; 2],
        #[serde(default)]
        zeros: Vec<[f64; 2]>,
        #[serde(default)]
        poles: Vec<[f64; 2]>,
        #[serde(default)]
        factors: Vec<([f64; 2], i64)>,
        #[serde(default)]
        alpha: [f64; 2],
        #[serde(default)]
        beta: [f64; 2],
    },
}

fn one() -> String {
    "1".into()
}

fn cx(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn rational(s: &str) -> anyhow::Result<BigRational> {
    s.trim().parse().with_context(|| format!("{s:?} is not a fraction"))
}

impl FunctionSpec {
    pub fn parse(json: &str) -> anyhow::Result<Self> {
        serde_json::from_str(json).context("function must be {\"rational\": …} or {\"elliptic\": …}")
    }

    pub fn build(&self) -> anyhow::Result<MeromorphicFunction> {
        match self {
            FunctionSpec::Rational { scalar, factors } => {
                let factors = factors
                    .iter()
                    .map(|(a, m)| Ok((rational(a)?, *m)))
                    .collect::<anyhow::Result<_>>()?;
                Ok(MeromorphicFunction::Rational(RationalFunction::new(
                    rational(scalar)?,
                    factors,
                )?))
            }
            FunctionSpec::Elliptic {
                tau,
                zeros,
                poles,
                factors,
                alpha,
                beta,
            } => {
                let tau = cx(*tau);
                let divisor = !zeros.is_empty() || !poles.is_empty();
                if divisor && (!factors.is_empty() || *alpha != [0.0; 2] || *beta != [0.0; 2]) {
                    bail!("give either zeros/poles or factors with alpha/beta, not both");
                }
                let q = if divisor {
                    let z: Vec<Complex64> = zeros.iter().copied().map(cx).collect();
                    let p: Vec<Complex64> = poles.iter().copied().map(cx).collect();
                    ThetaQuotient::elliptic(tau, &z, &p)?
                } else {
                    let f = factors.iter().map(|(c, m)| (cx(*c), *m)).collect();
                    ThetaQuotient::new(tau, f, cx(*alpha), cx(*beta))?
                };
                Ok(MeromorphicFunction::Elliptic(q))
            }
        }
    }
}

/// Exact fraction, or a complex number to 12 significant digits.
pub fn format_symbol(v: &SymbolValue) -> String {
    match v {
        SymbolValue::Exact(q) => q.to_string(),
        SymbolValue::Numeric(z) => format!("{:.11e} {:+.11e}i", z.re, z.im),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use kzb_core::tame::tame_symbol;

    #[test]
    fn rational_roundtrip() {
        let f = FunctionSpec::parse(r#"{"rational": {"factors": [["0", 1]]}}"#)
            .unwrap()
            .build()
            .unwrap();
        let g = FunctionSpec::parse(r#"{"rational": {"scalar": "-1", "factors": [["1", 1]]}}"#)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(format_symbol(&tame_symbol(&f, &g).unwrap()), "1");
    }

    #[test]
    fn mixed_elliptic_forms_rejected() {
        let s = r#"{"elliptic": {"tau": [0, 1], "zeros": [[0.2, 0.3]], "poles": [[0.4, 0.3]], "alpha": [1, 0]}}"#;
        assert!(FunctionSpec::parse(s).unwrap().build().is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(FunctionSpec::parse(r#"{"rational": {"scale": "2"}}"#).is_err());
    }
}
