//! Line-oriented text format for problems.
//!
//! ```text
//! kind N d          # kind ∈ {ls, logit}
//! a_11 ... a_1d     # N rows of A
//! ...
//! b_1 ... b_N
//! xstar x_1 ... x_d # optional
//! ```
//!
//! Reals are written with 17 significant digits so `f64` data round-trips
//! exactly. Blank lines and lines starting with `#` are ignored on input.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::problems::{FiniteSumProblem, OptimumInfo, ProblemKind};
use crate::scalar::Scalar;

/// Formats a real with 17 significant digits.
pub fn format_real<T: Scalar>(v: T) -> String {
    format!("{:.16e}", v.as_f64())
}

fn write_reals<W: Write, T: Scalar>(out: &mut W, values: &[T]) -> std::io::Result<()> {
    let line: Vec<String> = values.iter().map(|v| format_real(*v)).collect();
    writeln!(out, "{}", line.join(" "))
}

/// Writes `problem`; the `xstar` line is emitted when an optimum is attached.
pub fn write_problem<W: Write, T: Scalar>(out: &mut W, problem: &FiniteSumProblem<T>) -> Result<()> {
    writeln!(
        out,
        "{} {} {}",
        problem.kind().tag(),
        problem.sample_count(),
        problem.dimension()
    )?;
    for row in problem.matrix().iter_rows() {
        write_reals(out, row)?;
    }
    write_reals(out, problem.targets())?;
    if let Some(opt) = problem.optimum() {
        let mut line = String::from("xstar");
        for v in &opt.x_star {
            line.push(' ');
            line.push_str(&format_real(*v));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn parse_reals<T: Scalar>(line: &str, lineno: usize, expected: usize) -> Result<Vec<T>> {
    let values = line
        .split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map(T::lit)
                .map_err(|e| Error::Parse {
                    line: lineno,
                    message: format!("bad real `{tok}`: {e}"),
                })
        })
        .collect::<Result<Vec<T>>>()?;
    if values.len() != expected {
        return Err(Error::Parse {
            line: lineno,
            message: format!("expected {expected} values, found {}", values.len()),
        });
    }
    Ok(values)
}

/// Reads a problem. A trailing `xstar` line attaches [`OptimumInfo::at`] the
/// given point.
pub fn read_problem<R: BufRead, T: Scalar>(input: R) -> Result<FiniteSumProblem<T>> {
    let mut lines = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        lines.push((idx + 1, trimmed.to_string()));
    }
    let mut iter = lines.into_iter();
    let (hline, header) = iter.next().ok_or(Error::Parse {
        line: 1,
        message: "empty problem file".into(),
    })?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(Error::Parse {
            line: hline,
            message: "header must be `kind N d`".into(),
        });
    }
    let kind = ProblemKind::from_tag(parts[0]).ok_or_else(|| Error::Parse {
        line: hline,
        message: format!("unknown kind `{}` (expected ls or logit)", parts[0]),
    })?;
    let parse_size = |s: &str| {
        s.parse::<usize>().map_err(|e| Error::Parse {
            line: hline,
            message: format!("bad size `{s}`: {e}"),
        })
    };
    let n = parse_size(parts[1])?;
    let d = parse_size(parts[2])?;
    if n == 0 || d == 0 {
        return Err(Error::Parse {
            line: hline,
            message: "N and d must be at least 1".into(),
        });
    }

    let mut data = Vec::with_capacity(n * d);
    for r in 0..n {
        let (lineno, line) = iter.next().ok_or(Error::Parse {
            line: hline + r + 1,
            message: format!("missing row {} of A", r + 1),
        })?;
        data.extend(parse_reals::<T>(&line, lineno, d)?);
    }
    let (bline, line) = iter.next().ok_or(Error::Parse {
        line: hline + n + 1,
        message: "missing target vector".into(),
    })?;
    let b = parse_reals::<T>(&line, bline, n)?;
    let a = Matrix::from_vec(n, d, data)?;
    let problem = match kind {
        ProblemKind::LeastSquares => FiniteSumProblem::least_squares(a, b)?,
        ProblemKind::Logistic => FiniteSumProblem::logistic(a, b)?,
    };

    match iter.next() {
        None => Ok(problem),
        Some((lineno, line)) => {
            let rest = line.strip_prefix("xstar").ok_or_else(|| Error::Parse {
                line: lineno,
                message: "trailing content; expected `xstar` line".into(),
            })?;
            let x_star = parse_reals::<T>(rest, lineno, d)?;
            if let Some((extra, _)) = iter.next() {
                return Err(Error::Parse {
                    line: extra,
                    message: "content after `xstar` line".into(),
                });
            }
            let info = OptimumInfo::at(&problem, x_star)?;
            problem.with_optimum(info)
        }
    }
}

pub fn load_problem<T: Scalar>(path: &std::path::Path) -> Result<FiniteSumProblem<T>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_problem(std::io::BufReader::new(file))
}
