//! Line-oriented problem files.
//!
//! ```text
//! # comment
//! variables 2
//! minimize x1*x2
//! subject to
//!   x1^4 - 2*x1^2 + x2^4 - 2*x2^2 + 2 == 0
//!   x1 + x2 - 1 >= 0
//!   squares(x1^2 - x2, x1^3 - x3) == 0
//! options
//!   orders 3 5
//!   kind qmodule
//!   side both
//!   tol_gap 1e-8
//! ```
//!
//! Polynomials use the polyring text grammar over `x1..xn`. Every
//! constraint is `p == 0` or `p >= 0`; the `subject to` and `options`
//! sections are optional. `squares(r1, ..., rm) == 0` is the equality
//! `r1^2 + ... + rm^2 == 0` with its roots kept, which the moment
//! relaxation uses to drop directions forced to vanish.

use std::fmt;
use std::str::FromStr;

use lasserre::certify::{ConeKind, Problem};
use lasserre::polyring::{parse_polynomial, RatPoly};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

fn err(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError { line, msg: msg.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideChoice {
    Moment,
    Sos,
    Both,
}

impl SideChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            SideChoice::Moment => "moment",
            SideChoice::Sos => "sos",
            SideChoice::Both => "both",
        }
    }
}

impl FromStr for SideChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "moment" => Ok(SideChoice::Moment),
            "sos" => Ok(SideChoice::Sos),
            "both" => Ok(SideChoice::Both),
            _ => Err(format!("unknown side {s:?}; expected moment, sos or both")),
        }
    }
}

/// Settings a file may carry; command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileOptions {
    pub orders: Option<(u32, u32)>,
    pub kind: Option<ConeKind>,
    pub side: Option<SideChoice>,
    pub tol_gap: Option<f64>,
    pub tol_feas: Option<f64>,
    pub max_iter: Option<usize>,
}

impl FileOptions {
    fn is_empty(&self) -> bool {
        *self == FileOptions::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub problem: Problem,
    pub options: FileOptions,
}

#[derive(PartialEq)]
enum Section {
    Head,
    Constraints,
    Options,
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

fn parse_number<T: FromStr>(line: usize, what: &str, text: &str) -> Result<T, ParseError> {
    text.parse()
        .map_err(|_| err(line, format!("{what} expects a number, found {text:?}")))
}

impl ProblemFile {
    pub fn new(problem: Problem) -> Self {
        ProblemFile {
            problem,
            options: FileOptions::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut n: Option<usize> = None;
        let mut objective: Option<RatPoly> = None;
        let mut h = Vec::new();
        let mut g = Vec::new();
        let mut roots: Vec<(usize, Vec<RatPoly>)> = Vec::new();
        let mut options = FileOptions::default();
        let mut section = Section::Head;
        let mut last_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            last_line = line;
            let body = strip_comment(raw);
            if body.is_empty() {
                continue;
            }
            let (word, rest) = match body.split_once(char::is_whitespace) {
                Some((w, r)) => (w, r.trim()),
                None => (body, ""),
            };
            let poly = |text: &str, n: Option<usize>| -> Result<RatPoly, ParseError> {
                let n = n.ok_or_else(|| err(line, "`variables` must come first"))?;
                parse_polynomial(text, n).map_err(|e| err(line, e.to_string()))
            };
            match section {
                Section::Head | Section::Constraints if body == "subject to" => {
                    if objective.is_none() {
                        return Err(err(line, "`subject to` before `minimize`"));
                    }
                    section = Section::Constraints;
                }
                _ if body == "options" => {
                    if objective.is_none() {
                        return Err(err(line, "`options` before `minimize`"));
                    }
                    section = Section::Options;
                }
                Section::Head => match word {
                    "variables" => {
                        if n.is_some() {
                            return Err(err(line, "`variables` given twice"));
                        }
                        let count: usize = parse_number(line, "variables", rest)?;
                        if count == 0 {
                            return Err(err(line, "at least one variable is required"));
                        }
                        n = Some(count);
                    }
                    "minimize" => {
                        if objective.is_some() {
                            return Err(err(line, "`minimize` given twice"));
                        }
                        if rest.is_empty() {
                            return Err(err(line, "`minimize` needs an objective"));
                        }
                        objective = Some(poly(rest, n)?);
                    }
                    _ => return Err(err(line, format!("unexpected {word:?}"))),
                },
                Section::Constraints => {
                    if let Some(lhs) = body.strip_suffix("== 0") {
                        let lhs = lhs.trim();
                        if let Some(inner) = lhs.strip_prefix("squares(").and_then(|r| r.strip_suffix(')')) {
                            let parts = inner
                                .split(',')
                                .map(|t| poly(t, n))
                                .collect::<Result<Vec<_>, _>>()?;
                            let nvars = n.expect("poly checked the declaration");
                            let mut sum = RatPoly::zero(nvars);
                            for r in &parts {
                                sum = &sum + &r.square();
                            }
                            roots.push((h.len(), parts));
                            h.push(sum);
                        } else {
                            h.push(poly(lhs, n)?);
                        }
                    } else if let Some(lhs) = body.strip_suffix(">= 0") {
                        g.push(poly(lhs, n)?);
                    } else {
                        return Err(err(line, "constraints end in `== 0` or `>= 0`"));
                    }
                }
                Section::Options => {
                    let args: Vec<&str> = rest.split_whitespace().collect();
                    let single = || -> Result<&str, ParseError> {
                        match args.as_slice() {
                            [a] => Ok(a),
                            _ => Err(err(line, format!("`{word}` takes one value"))),
                        }
                    };
                    match word {
                        "orders" => {
                            let [lo, hi] = args.as_slice() else {
                                return Err(err(line, "`orders` takes a minimum and a maximum"));
                            };
                            let lo: u32 = parse_number(line, "orders", lo)?;
                            let hi: u32 = parse_number(line, "orders", hi)?;
                            if lo > hi {
                                return Err(err(line, "minimum order exceeds maximum"));
                            }
                            options.orders = Some((lo, hi));
                        }
                        "kind" => {
                            let v = single()?;
                            options.kind = Some(
                                ConeKind::parse(v)
                                    .ok_or_else(|| err(line, format!("unknown kind {v:?}")))?,
                            );
                        }
                        "side" => options.side = Some(single()?.parse().map_err(|e: String| err(line, e))?),
                        "tol_gap" => options.tol_gap = Some(parse_number(line, "tol_gap", single()?)?),
                        "tol_feas" => options.tol_feas = Some(parse_number(line, "tol_feas", single()?)?),
                        "max_iter" => options.max_iter = Some(parse_number(line, "max_iter", single()?)?),
                        _ => return Err(err(line, format!("unknown option {word:?}"))),
                    }
                }
            }
        }
        if n.is_none() {
            return Err(err(last_line, "missing `variables`"));
        }
        let f = objective.ok_or_else(|| err(last_line, "missing `minimize`"))?;
        let mut problem = Problem::new(f, h, g).map_err(|e| err(last_line, e.to_string()))?;
        for (i, r) in roots {
            problem = problem
                .with_square_roots(i, r)
                .map_err(|e| err(last_line, e.to_string()))?;
        }
        Ok(ProblemFile { problem, options })
    }
}

impl fmt::Display for ProblemFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.problem;
        writeln!(f, "variables {}", p.n())?;
        writeln!(f, "minimize {}", p.objective())?;
        if !p.equalities().is_empty() || !p.inequalities().is_empty() {
            writeln!(f, "subject to")?;
            for (i, h) in p.equalities().iter().enumerate() {
                match p.square_roots(i) {
                    Some(roots) => {
                        let parts: Vec<String> = roots.iter().map(ToString::to_string).collect();
                        writeln!(f, "  squares({}) == 0", parts.join(", "))?;
                    }
                    None => writeln!(f, "  {h} == 0")?,
                }
            }
            for g in p.inequalities() {
                writeln!(f, "  {g} >= 0")?;
            }
        }
        let o = &self.options;
        if !o.is_empty() {
            writeln!(f, "options")?;
            if let Some((lo, hi)) = o.orders {
                writeln!(f, "  orders {lo} {hi}")?;
            }
            if let Some(kind) = o.kind {
                writeln!(f, "  kind {}", kind.as_str())?;
            }
            if let Some(side) = o.side {
                writeln!(f, "  side {}", side.as_str())?;
            }
            if let Some(v) = o.tol_gap {
                writeln!(f, "  tol_gap {v:e}")?;
            }
            if let Some(v) = o.tol_feas {
                writeln!(f, "  tol_feas {v:e}")?;
            }
            if let Some(v) = o.max_iter {
                writeln!(f, "  max_iter {v}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# corners of a square
variables 2
minimize x1*x2
subject to
  x1^4 - 2*x1^2 + x2^4 - 2*x2^2 + 2 == 0   # h
  x1 + x2 - 1 >= 0
options
  orders 3 5
  kind preordering
  side sos
  tol_gap 1e-7
";

    #[test]
    fn parses_sections() {
        let pf = ProblemFile::parse(SAMPLE).unwrap();
        assert_eq!(pf.problem.n(), 2);
        assert_eq!(pf.problem.equalities().len(), 1);
        assert_eq!(pf.problem.inequalities()[0], parse_polynomial("x1 + x2 - 1", 2).unwrap());
        assert_eq!(pf.options.orders, Some((3, 5)));
        assert_eq!(pf.options.kind, Some(ConeKind::Preordering));
        assert_eq!(pf.options.side, Some(SideChoice::Sos));
        assert_eq!(pf.options.tol_gap, Some(1e-7));
        assert_eq!(pf.options.tol_feas, None);
    }

    #[test]
    fn printed_form_parses_back() {
        let pf = ProblemFile::parse(SAMPLE).unwrap();
        let again = ProblemFile::parse(&pf.to_string()).unwrap();
        assert_eq!(again, pf);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = ProblemFile::parse("minimize x1\n").unwrap_err();
        assert_eq!(e.line, 1);
        let e = ProblemFile::parse("variables 1\nminimize x1\nsubject to\n  x1 <= 0\n").unwrap_err();
        assert_eq!(e.line, 4);
        let e = ProblemFile::parse("variables 1\nminimize x2\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = ProblemFile::parse("variables 1\nminimize x1\noptions\n  orders 4 2\n").unwrap_err();
        assert!(e.msg.contains("exceeds"));
        assert!(ProblemFile::parse("variables 1\n").is_err());
        assert!(ProblemFile::parse("variables 0\nminimize 1\n").is_err());
    }

    #[test]
    fn squares_keep_their_roots() {
        let text = "variables 3\nminimize x1\nsubject to\n  squares(x1^2 - x2, x1^3 - x3) == 0\n";
        let pf = ProblemFile::parse(text).unwrap();
        let h = parse_polynomial("x1^6 - 2*x1^3*x3 + x3^2 + x1^4 - 2*x1^2*x2 + x2^2", 3).unwrap();
        assert_eq!(pf.problem.equalities(), &[h]);
        assert_eq!(pf.problem.square_roots(0).unwrap().len(), 2);
        assert_eq!(ProblemFile::parse(&pf.to_string()).unwrap(), pf);
        assert!(ProblemFile::parse("variables 1\nminimize x1\nsubject to\n  squares(x1, ) == 0\n").is_err());
    }

    #[test]
    fn constant_constraints_are_allowed() {
        let pf = ProblemFile::parse("variables 1\nminimize x1\nsubject to\n  0 >= 0\n").unwrap();
        assert!(pf.problem.inequalities()[0].is_zero());
    }
}
