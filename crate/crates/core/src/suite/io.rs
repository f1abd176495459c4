//! Plain-text `.suite` format.
//!
//! ```text
//! suite v1 <count>
//! <base> <D> <bias> <tag> <id> <parts>      problem header
//! <D shift values>
//! <D values>                                 D rotation rows, row-major
//! <D lower bounds>
//! <D upper bounds>
//! perm <D indices>                           hybrid only
//! <base> <fraction>                          hybrid, one line per part
//! <base> <sigma> <bias> <D shift values>     composition, one line per component
//! ```
//!
//! Reals are written with 17 significant digits so a save/load cycle is
//! bit-exact. Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::{BaseFunction, CompositionComponent, HybridPart, ProblemInstance, ProblemSpec, Structure};
use crate::error::{Error, ParseError, Result};
use crate::model::Bounds;

const MAGIC: &str = "suite";
const VERSION: &str = "v1";

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn row(values: &[f64]) -> String {
    values.iter().map(|v| real(*v)).collect::<Vec<_>>().join(" ")
}

/// Serializes a suite to the text format.
pub fn write_suite(suite: &[ProblemInstance]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION} {}", suite.len());
    for p in suite {
        let s = &p.spec;
        let parts = match &s.structure {
            Structure::Simple => 0,
            Structure::Hybrid { parts, .. } => parts.len(),
            Structure::Composition { components } => components.len(),
        };
        let _ = writeln!(
            out,
            "{} {} {} {} {} {}",
            s.base,
            s.dim,
            real(s.bias),
            s.structure.tag(),
            p.id,
            parts
        );
        let _ = writeln!(out, "{}", row(&s.shift));
        for r in s.rotation.chunks(s.dim) {
            let _ = writeln!(out, "{}", row(r));
        }
        let _ = writeln!(out, "{}", row(p.bounds.lower()));
        let _ = writeln!(out, "{}", row(p.bounds.upper()));
        match &s.structure {
            Structure::Simple => {}
            Structure::Hybrid { parts, permutation } => {
                let perm: Vec<String> = permutation.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(out, "perm {}", perm.join(" "));
                for part in parts {
                    let _ = writeln!(out, "{} {}", part.base, real(part.fraction));
                }
            }
            Structure::Composition { components } => {
                for c in components {
                    let _ = writeln!(out, "{} {} {} {}", c.base, real(c.sigma), real(c.bias), row(&c.shift));
                }
            }
        }
    }
    out
}

pub fn save_suite(path: impl AsRef<Path>, suite: &[ProblemInstance]) -> Result<()> {
    fs::write(path, write_suite(suite))?;
    Ok(())
}

pub fn load_suite(path: impl AsRef<Path>) -> Result<Vec<ProblemInstance>> {
    parse_suite(&fs::read_to_string(path)?)
}

/// Line cursor that skips blanks and comments and remembers line numbers.
struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate().peekable(),
            last: 0,
        }
    }

    fn next(&mut self, expected: &str) -> Result<(usize, Vec<&'a str>), ParseError> {
        for (i, line) in self.inner.by_ref() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            self.last = i + 1;
            return Ok((i + 1, trimmed.split_whitespace().collect()));
        }
        Err(ParseError::Truncated {
            line: self.last + 1,
            expected: expected.to_string(),
        })
    }

    fn has_more(&mut self) -> bool {
        while let Some((_, line)) = self.inner.peek() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                self.inner.next();
            } else {
                return true;
            }
        }
        false
    }
}

fn token<T: FromStr>(line: usize, field: &str, tok: &str) -> Result<T, ParseError> {
    tok.parse().map_err(|_| ParseError::InvalidValue {
        line,
        field: field.to_string(),
        token: tok.to_string(),
    })
}

fn finite(line: usize, field: &str, tok: &str) -> Result<f64, ParseError> {
    let v: f64 = token(line, field, tok)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ParseError::InvalidValue {
            line,
            field: field.to_string(),
            token: tok.to_string(),
        })
    }
}

fn base(line: usize, tok: &str) -> Result<BaseFunction, ParseError> {
    tok.parse().map_err(|_| ParseError::InvalidValue {
        line,
        field: "base function".to_string(),
        token: tok.to_string(),
    })
}

fn vector(lines: &mut Lines, field: &str, dim: usize) -> Result<Vec<f64>, ParseError> {
    let (line, toks) = lines.next(field)?;
    if toks.len() != dim {
        return Err(ParseError::DimensionMismatch {
            line,
            field: field.to_string(),
            expected: dim,
            found: toks.len(),
        });
    }
    toks.iter().map(|t| finite(line, field, t)).collect()
}

fn arity(line: usize, field: &str, toks: &[&str], expected: usize) -> Result<(), ParseError> {
    if toks.len() == expected {
        Ok(())
    } else {
        Err(ParseError::DimensionMismatch {
            line,
            field: field.to_string(),
            expected,
            found: toks.len(),
        })
    }
}

/// Parses the text format. Either the whole suite is returned or an error;
/// there are no partial results.
pub fn parse_suite(text: &str) -> Result<Vec<ProblemInstance>> {
    let mut lines = Lines::new(text);
    let (line, head) = lines.next("suite header")?;
    if head.len() != 3 || head[0] != MAGIC || head[1] != VERSION {
        return Err(ParseError::Malformed {
            line,
            message: format!("expected `{MAGIC} {VERSION} <count>`"),
        }
        .into());
    }
    let count: usize = token(line, "problem count", head[2])?;
    let mut suite = Vec::with_capacity(count);
    for _ in 0..count {
        suite.push(parse_problem(&mut lines)?);
    }
    if lines.has_more() {
        let (line, _) = lines.next("")?;
        return Err(ParseError::Malformed {
            line,
            message: format!("trailing content after {count} problems"),
        }
        .into());
    }
    Ok(suite)
}

fn parse_problem(lines: &mut Lines) -> Result<ProblemInstance> {
    let (hline, h) = lines.next("problem header")?;
    arity(hline, "problem header", &h, 6)?;
    let base_fn = base(hline, h[0])?;
    let dim: usize = token(hline, "dimension", h[1])?;
    if dim == 0 {
        return Err(ParseError::InvalidValue {
            line: hline,
            field: "dimension".into(),
            token: h[1].into(),
        }
        .into());
    }
    let bias = finite(hline, "bias", h[2])?;
    let tag = h[3];
    let id = h[4].to_string();
    let n_parts: usize = token(hline, "part count", h[5])?;

    let shift = vector(lines, "shift", dim)?;
    let mut rotation = Vec::with_capacity(dim * dim);
    for _ in 0..dim {
        rotation.extend(vector(lines, "rotation row", dim)?);
    }
    let lower = vector(lines, "lower bounds", dim)?;
    let upper = vector(lines, "upper bounds", dim)?;

    let structure = match tag {
        "simple" => Structure::Simple,
        "hybrid" => {
            let (pline, p) = lines.next("permutation")?;
            if p.first() != Some(&"perm") {
                return Err(ParseError::Malformed {
                    line: pline,
                    message: "expected `perm` row".into(),
                }
                .into());
            }
            arity(pline, "permutation", &p[1..], dim)?;
            let permutation = p[1..]
                .iter()
                .map(|t| token(pline, "permutation", t))
                .collect::<Result<Vec<usize>, _>>()?;
            let mut parts = Vec::with_capacity(n_parts);
            for _ in 0..n_parts {
                let (line, t) = lines.next("hybrid part")?;
                arity(line, "hybrid part", &t, 2)?;
                parts.push(HybridPart {
                    base: base(line, t[0])?,
                    fraction: finite(line, "fraction", t[1])?,
                });
            }
            Structure::Hybrid { parts, permutation }
        }
        "composition" => {
            let mut components = Vec::with_capacity(n_parts);
            for _ in 0..n_parts {
                let (line, t) = lines.next("composition component")?;
                arity(line, "composition component", &t, 3 + dim)?;
                components.push(CompositionComponent {
                    base: base(line, t[0])?,
                    sigma: finite(line, "sigma", t[1])?,
                    bias: finite(line, "component bias", t[2])?,
                    shift: t[3..]
                        .iter()
                        .map(|v| finite(line, "component shift", v))
                        .collect::<Result<_, _>>()?,
                });
            }
            Structure::Composition { components }
        }
        other => {
            return Err(ParseError::InvalidValue {
                line: hline,
                field: "structure tag".into(),
                token: other.into(),
            }
            .into())
        }
    };

    let bounds = Bounds::new(lower, upper).map_err(|e| ParseError::Malformed {
        line: hline,
        message: format!("bounds: {e}"),
    })?;
    let spec = ProblemSpec {
        base: base_fn,
        dim,
        shift,
        rotation,
        bias,
        structure,
    };
    ProblemInstance::new(id, spec, bounds).map_err(|e| match e {
        Error::Parse(p) => Error::Parse(p),
        other => ParseError::Malformed {
            line: hline,
            message: other.to_string(),
        }
        .into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suite::generate_suite;

    #[test]
    fn round_trip_is_field_identical() {
        let suite = generate_suite(11, 4, 10).unwrap();
        let back = parse_suite(&write_suite(&suite)).unwrap();
        assert_eq!(back, suite);
        let three = generate_suite(2, 3, 3).unwrap();
        assert_eq!(parse_suite(&write_suite(&three)).unwrap(), three);
    }

    #[test]
    fn round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.suite");
        let suite = generate_suite(3, 5, 10).unwrap();
        save_suite(&path, &suite).unwrap();
        assert_eq!(load_suite(&path).unwrap(), suite);
    }

    #[test]
    fn truncated_file() {
        let text = write_suite(&generate_suite(2, 3, 3).unwrap());
        let cut: String = text.lines().take(12).map(|l| format!("{l}\n")).collect();
        match parse_suite(&cut) {
            Err(Error::Parse(ParseError::Truncated { line, .. })) => assert_eq!(line, 13),
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn short_shift_row() {
        let text = write_suite(&generate_suite(2, 3, 1).unwrap());
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let mut shift: Vec<&str> = lines[2].split_whitespace().collect();
        shift.pop();
        lines[2] = shift.join(" ");
        let err = parse_suite(&lines.join("\n")).unwrap_err();
        assert!(matches!(
            err,
            Error::Parse(ParseError::DimensionMismatch { line: 3, expected: 3, found: 2, .. })
        ));
    }

    #[test]
    fn bad_tokens_are_reported() {
        let text = write_suite(&generate_suite(2, 2, 1).unwrap());
        let broken = text.replacen("sphere", "nosuch", 1);
        assert!(matches!(
            parse_suite(&broken),
            Err(Error::Parse(ParseError::InvalidValue { line: 2, .. }))
        ));
        assert!(matches!(
            parse_suite("suite v9 1\n"),
            Err(Error::Parse(ParseError::Malformed { line: 1, .. }))
        ));
        let extra = format!("{text}sphere\n");
        assert!(matches!(parse_suite(&extra), Err(Error::Parse(ParseError::Malformed { .. }))));
    }

    #[test]
    fn non_orthogonal_rotation_is_rejected() {
        let text = write_suite(&generate_suite(2, 2, 1).unwrap());
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[3] = "2.0 0.0".into();
        assert!(parse_suite(&lines.join("\n")).is_err());
    }
}
