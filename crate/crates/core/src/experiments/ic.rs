//! Named initial-condition families.
//!
//! Written and parsed in call syntax, e.g. `unit_shell(1)`, `geometric(0.5, 8)`,
//! `random_positive(7, 6)`, `signed(2, geometric(0.5, 8))`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ShellState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum IcFamily {
    /// `e_j`.
    UnitShell { j: usize },
    /// `X_n = r^n` for `n <= n_support`, zero above.
    Geometric { r: f64, n_support: usize },
    /// Uniform on (0, 1] in shells `1..=n_support`, scaled to unit energy.
    RandomPositive { seed: u64, n_support: usize },
    /// `base` with its first `m` shells negated.
    Signed { m: usize, base: Box<IcFamily> },
}

impl IcFamily {
    pub fn signed(m: usize, base: IcFamily) -> Self {
        IcFamily::Signed {
            m,
            base: Box::new(base),
        }
    }

    /// The family from a bare name plus numeric parameters, or from a full
    /// call expression in `family` (then `params` must be empty).
    /// `random_positive` with a single parameter takes its seed from `seed`.
    pub fn from_parts(family: &str, params: &[f64], seed: u64) -> Result<Self> {
        let family = family.trim();
        if family.contains('(') {
            if !params.is_empty() {
                return Err(Error::Argument(format!(
                    "`{family}` already carries its parameters"
                )));
            }
            return family.parse();
        }
        let int = |v: f64, what: &str| -> Result<usize> {
            if v.fract() == 0.0 && (0.0..1e15).contains(&v) {
                Ok(v as usize)
            } else {
                Err(Error::Argument(format!("{what} must be a nonnegative integer, got {v}")))
            }
        };
        let arity = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::Argument(format!(
                    "{family} takes {n} parameter(s), got {}",
                    params.len()
                )))
            }
        };
        match family {
            "unit_shell" => {
                arity(1)?;
                Ok(IcFamily::UnitShell {
                    j: int(params[0], "j")?,
                })
            }
            "geometric" => {
                arity(2)?;
                Ok(IcFamily::Geometric {
                    r: params[0],
                    n_support: int(params[1], "n_support")?,
                })
            }
            "random_positive" => match params.len() {
                1 => Ok(IcFamily::RandomPositive {
                    seed,
                    n_support: int(params[0], "n_support")?,
                }),
                _ => {
                    arity(2)?;
                    Ok(IcFamily::RandomPositive {
                        seed: int(params[0], "seed")? as u64,
                        n_support: int(params[1], "n_support")?,
                    })
                }
            },
            "signed" => Err(Error::Argument(
                "signed needs a base family: write it as signed(m, family(..))".into(),
            )),
            other => Err(Error::Argument(format!("unknown IC family `{other}`"))),
        }
    }

    /// The initial state with `n_shells` shells at `t = 0`.
    pub fn build(&self, n_shells: usize) -> Result<ShellState> {
        if n_shells == 0 {
            return Err(Error::Argument("n_shells must be at least 1".into()));
        }
        let support = |s: usize| -> Result<()> {
            if s == 0 || s > n_shells {
                Err(Error::Argument(format!(
                    "support {s} outside 1..={n_shells} in {self}"
                )))
            } else {
                Ok(())
            }
        };
        let mut x = vec![0.0; n_shells];
        match self {
            IcFamily::UnitShell { j } => return ShellState::unit(n_shells, *j),
            IcFamily::Geometric { r, n_support } => {
                support(*n_support)?;
                if !r.is_finite() {
                    return Err(Error::Argument(format!("ratio {r} is not finite")));
                }
                for (n, v) in x.iter_mut().enumerate().take(*n_support) {
                    *v = r.powi(n as i32 + 1);
                }
            }
            IcFamily::RandomPositive { seed, n_support } => {
                support(*n_support)?;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                for v in x.iter_mut().take(*n_support) {
                    *v = 1.0 - rng.random::<f64>();
                }
                let norm = crate::sum::compensated_sum(x.iter().map(|v| v * v)).sqrt();
                for v in x.iter_mut() {
                    *v /= norm;
                }
            }
            IcFamily::Signed { m, base } => {
                if *m > n_shells {
                    return Err(Error::Argument(format!(
                        "cannot negate {m} of {n_shells} shells"
                    )));
                }
                x = base.build(n_shells)?.into_x();
                for v in x.iter_mut().take(*m) {
                    *v = -*v;
                }
            }
        }
        ShellState::new(0.0, x)
    }
}

impl fmt::Display for IcFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IcFamily::UnitShell { j } => write!(f, "unit_shell({j})"),
            IcFamily::Geometric { r, n_support } => write!(f, "geometric({r:?}, {n_support})"),
            IcFamily::RandomPositive { seed, n_support } => {
                write!(f, "random_positive({seed}, {n_support})")
            }
            IcFamily::Signed { m, base } => write!(f, "signed({m}, {base})"),
        }
    }
}

impl From<IcFamily> for String {
    fn from(ic: IcFamily) -> Self {
        ic.to_string()
    }
}

impl TryFrom<String> for IcFamily {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for IcFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { s, pos: 0 };
        let ic = p.family()?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.error("trailing input"));
        }
        Ok(ic)
    }
}

/// Recursive-descent parser for the call syntax.
struct Parser<'a> {
    s: &'a str,
    pos: usize,
}

enum Arg {
    Number(f64),
    Family(IcFamily),
}

impl Parser<'_> {
    fn error(&self, what: &str) -> Error {
        Error::Argument(format!("bad IC `{}` at column {}: {what}", self.s, self.pos + 1))
    }

    fn skip_ws(&mut self) {
        while self.s[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.s[self.pos..].starts_with(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn token(&mut self, accept: impl Fn(char) -> bool) -> &str {
        self.skip_ws();
        let start = self.pos;
        let len = self.s[start..]
            .find(|c: char| !accept(c))
            .unwrap_or(self.s.len() - start);
        self.pos += len;
        &self.s[start..start + len]
    }

    fn family(&mut self) -> Result<IcFamily> {
        let name = self
            .token(|c| c.is_ascii_alphanumeric() || c == '_')
            .to_string();
        if name.is_empty() {
            return Err(self.error("expected a family name"));
        }
        if !self.eat('(') {
            return Err(self.error("expected `(`"));
        }
        let mut args = Vec::new();
        if !self.eat(')') {
            loop {
                args.push(self.arg()?);
                if self.eat(')') {
                    break;
                }
                if !self.eat(',') {
                    return Err(self.error("expected `,` or `)`"));
                }
            }
        }
        if name == "signed" {
            return match args.as_slice() {
                [Arg::Number(m), Arg::Family(base)] => {
                    let m = *m;
                    if m.fract() != 0.0 || m < 0.0 {
                        return Err(self.error("m must be a nonnegative integer"));
                    }
                    Ok(IcFamily::signed(m as usize, base.clone()))
                }
                _ => Err(self.error("signed takes (m, family(..))")),
            };
        }
        let numbers = args
            .into_iter()
            .map(|a| match a {
                Arg::Number(v) => Ok(v),
                Arg::Family(_) => Err(self.error("only signed accepts a nested family")),
            })
            .collect::<Result<Vec<f64>>>()?;
        let seed_required = name == "random_positive" && numbers.len() != 2;
        if seed_required {
            return Err(self.error("random_positive takes (seed, n_support)"));
        }
        IcFamily::from_parts(&name, &numbers, 0)
    }

    fn arg(&mut self) -> Result<Arg> {
        self.skip_ws();
        if self.s[self.pos..].starts_with(|c: char| c.is_ascii_alphabetic()) {
            return self.family().map(Arg::Family);
        }
        let tok = self.token(|c| c.is_ascii_digit() || "+-.eE".contains(c));
        tok.parse::<f64>()
            .map(Arg::Number)
            .map_err(|_| self.error("expected a number"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_round_trips() {
        for s in [
            "unit_shell(1)",
            "geometric(0.5, 8)",
            "random_positive(7, 6)",
            "signed(1, geometric(0.5, 8))",
            "signed(2, signed(1, unit_shell(3)))",
        ] {
            let ic: IcFamily = s.parse().unwrap();
            assert_eq!(ic.to_string(), s);
        }
        let ic: IcFamily = " signed ( 3 ,geometric(0.25,4) ) ".parse().unwrap();
        assert_eq!(ic, IcFamily::signed(3, IcFamily::Geometric { r: 0.25, n_support: 4 }));
    }

    #[test]
    fn bad_syntax_is_rejected() {
        for s in ["", "unit_shell", "unit_shell(1", "geometric(0.5)", "signed(1, 2)", "foo(1)",
            "unit_shell(1.5)", "random_positive(6)", "unit_shell(1) x"] {
            assert!(s.parse::<IcFamily>().is_err(), "{s}");
        }
    }

    #[test]
    fn families_build_as_described() {
        let x = IcFamily::Geometric { r: 0.5, n_support: 3 }.build(5).unwrap();
        assert_eq!(x.x(), &[0.5, 0.25, 0.125, 0.0, 0.0]);
        let x = IcFamily::signed(2, IcFamily::Geometric { r: 0.5, n_support: 3 })
            .build(4)
            .unwrap();
        assert_eq!(x.x(), &[-0.5, -0.25, 0.125, 0.0]);
        assert_eq!(IcFamily::UnitShell { j: 2 }.build(3).unwrap().x(), &[0.0, 1.0, 0.0]);
        assert!(IcFamily::UnitShell { j: 4 }.build(3).is_err());
        assert!(IcFamily::Geometric { r: 0.5, n_support: 9 }.build(8).is_err());
    }

    #[test]
    fn random_positive_is_seeded_and_normalized() {
        let ic = IcFamily::RandomPositive { seed: 7, n_support: 6 };
        let a = ic.build(10).unwrap();
        assert_eq!(a, ic.build(10).unwrap());
        assert!(a.x()[..6].iter().all(|v| *v > 0.0));
        assert!(a.x()[6..].iter().all(|v| *v == 0.0));
        assert!((crate::model::energy(&a) - 1.0).abs() < 1e-15);
        let b = IcFamily::RandomPositive { seed: 8, n_support: 6 }.build(10).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn from_parts_uses_the_spec_seed() {
        let ic = IcFamily::from_parts("random_positive", &[6.0], 11).unwrap();
        assert_eq!(ic, IcFamily::RandomPositive { seed: 11, n_support: 6 });
        let ic = IcFamily::from_parts("unit_shell", &[1.0], 0).unwrap();
        assert_eq!(ic, IcFamily::UnitShell { j: 1 });
        let ic = IcFamily::from_parts("signed(1, unit_shell(1))", &[], 0).unwrap();
        assert_eq!(ic, IcFamily::signed(1, IcFamily::UnitShell { j: 1 }));
        assert!(IcFamily::from_parts("signed", &[1.0], 0).is_err());
        assert!(IcFamily::from_parts("unit_shell", &[1.0, 2.0], 0).is_err());
    }
}
