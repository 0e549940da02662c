//! Plain-text system files.
//!
//! ```text
//! # comment lines start with '#'
//! n m
//! a_11 ... a_1n b_1
//! ...
//! a_m1 ... a_mn b_m
//! ```
//!
//! Numbers are written in shortest round-trip form, so `load(save(s)) == s`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::InequalitySystem;

pub fn format_system(sys: &InequalitySystem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", sys.dim(), sys.len());
    for (row, b) in sys.rows().zip(sys.rhs()) {
        for a in row {
            let _ = write!(out, "{a} ");
        }
        let _ = writeln!(out, "{b}");
    }
    out
}

pub fn save_system(sys: &InequalitySystem, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_system(sys)).map_err(|e| Error::io(path, e))
}

pub fn load_system(path: impl AsRef<Path>) -> Result<InequalitySystem> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_system(&text, path)
}

pub fn parse_system(text: &str, path: &Path) -> Result<InequalitySystem> {
    let err = |line: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_line, header) = lines.next().ok_or_else(|| err(1, "missing `n m` header".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| err(header_line, format!("malformed header `{header}`: {e}")))?;
    let [n, m] = dims[..] else {
        return Err(err(header_line, format!("header must be `n m`, got `{header}`")));
    };
    if n == 0 || m == 0 {
        return Err(err(header_line, "n and m must be positive".into()));
    }

    let mut coeffs = Vec::with_capacity(n * m);
    let mut rhs = Vec::with_capacity(m);
    for (line_no, line) in lines {
        if rhs.len() == m {
            return Err(err(line_no, format!("header declares m = {m} but more rows follow")));
        }
        let values: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| err(line_no, format!("bad number: {e}")))?;
        if values.len() != n + 1 {
            return Err(err(
                line_no,
                format!("row {} has {} values, expected n + 1 = {}", rhs.len(), values.len(), n + 1),
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(err(line_no, format!("non-finite value {v}")));
        }
        if values[..n].iter().all(|&a| a == 0.0) {
            return Err(err(
                line_no,
                format!("row {} is all zeros; every row must have a non-zero coefficient vector", rhs.len()),
            ));
        }
        coeffs.extend_from_slice(&values[..n]);
        rhs.push(values[n]);
    }
    if rhs.len() != m {
        return Err(err(
            text.lines().count(),
            format!("header declares m = {m} but the file has {} rows", rhs.len()),
        ));
    }
    InequalitySystem::from_flat(n, coeffs, rhs)
}
