//! Plain-text instance files.
//!
//! All formats are line oriented; `#` starts a comment and blank lines are
//! ignored. Numbers are decimals or fractions such as `1/3`.
//!
//! * Class files: the first line lists the alphabet labels, every further
//!   line is one vertex given by its weights.
//! * State files: a `dim d` header followed by the `d × d` entries in
//!   row-major order, each written `re,im`.
//! * POVM files: a `dim d` header, then one `effect` line per effect followed
//!   by its `d × d` entries as in state files.
//! * Menu files: one POVM file path per line, relative to the menu file.
//!
//! Every reader has a matching writer whose output parses back to an equal
//! object.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use advhyp_core::quantum::{CMatrix, DensityMatrix, MeasurementMenu, Povm, StateClass};
use advhyp_core::{Alphabet, ConvexClass, Distribution};
use num_complex::Complex64;

use crate::error::{CliError, Result};

/// A meaningful line with its 1-based line number.
struct Line<'a> {
    number: usize,
    text: &'a str,
}

fn content_lines(text: &str) -> impl Iterator<Item = Line<'_>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let text = raw.split('#').next().unwrap_or("").trim();
        (!text.is_empty()).then_some(Line { number: i + 1, text })
    })
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses a decimal or a fraction `a/b`.
pub fn parse_real(token: &str) -> Option<f64> {
    let value = match token.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?,
        None => token.parse::<f64>().ok()?,
    };
    value.is_finite().then_some(value)
}

fn parse_complex(token: &str) -> Option<Complex64> {
    let (re, im) = token.split_once(',')?;
    Some(Complex64::new(parse_real(re)?, parse_real(im)?))
}

/// Shortest decimal that parses back to the same `f64`.
fn fmt_real(x: f64) -> String {
    format!("{x}")
}

pub fn parse_class(text: &str, path: &Path) -> Result<ConvexClass> {
    let mut lines = content_lines(text);
    let header = lines.next().ok_or_else(|| parse_error(path, 1, "missing alphabet label line"))?;
    let labels: Vec<&str> = header.text.split_whitespace().collect();
    let alphabet = Arc::new(
        Alphabet::with_labels(labels.iter().copied()).map_err(|e| parse_error(path, header.number, e.to_string()))?,
    );
    let mut vertices = Vec::new();
    for line in lines {
        let weights = line
            .text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| parse_real(t).ok_or_else(|| parse_error(path, line.number, format!("invalid weight {t:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        let v = Distribution::new(alphabet.clone(), weights)
            .map_err(|e| parse_error(path, line.number, format!("vertex {}: {e}", vertices.len())))?;
        vertices.push(v);
    }
    if vertices.is_empty() {
        return Err(parse_error(path, header.number, "a class needs at least one vertex"));
    }
    ConvexClass::new(vertices).map_err(|e| CliError::instance(path, e))
}

pub fn write_class(class: &ConvexClass) -> String {
    let alphabet = class.alphabet();
    let labels: Vec<String> = (0..alphabet.size()).map(|i| alphabet.label(i)).collect();
    let mut out = labels.join(" ");
    out.push('\n');
    for v in class.vertices() {
        let row: Vec<String> = v.weights().iter().map(|&w| fmt_real(w)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

fn parse_dim(line: &Line<'_>, path: &Path) -> Result<usize> {
    let mut parts = line.text.split_whitespace();
    match (parts.next(), parts.next().and_then(|d| d.parse::<usize>().ok()), parts.next()) {
        (Some("dim"), Some(d), None) if d > 0 => Ok(d),
        _ => Err(parse_error(path, line.number, "expected a `dim <d>` header")),
    }
}

/// Reads `d × d` complex entries from the following lines, stopping at the
/// first line that does not start with an entry.
fn parse_matrix<'a>(
    lines: &mut std::iter::Peekable<impl Iterator<Item = Line<'a>>>,
    d: usize,
    path: &Path,
    start: usize,
    what: &str,
) -> Result<CMatrix> {
    let mut entries = Vec::with_capacity(d * d);
    while let Some(line) = lines.peek() {
        if line.text.starts_with(|c: char| c.is_ascii_alphabetic()) {
            break;
        }
        for t in line.text.split_whitespace() {
            let z = parse_complex(t)
                .ok_or_else(|| parse_error(path, line.number, format!("invalid entry {t:?}, expected `re,im`")))?;
            entries.push(z);
        }
        lines.next();
    }
    if entries.len() != d * d {
        return Err(parse_error(
            path,
            start,
            format!("{what} has {} entries, expected {}", entries.len(), d * d),
        ));
    }
    Ok(CMatrix::from_row_slice(d, d, &entries))
}

fn write_matrix(out: &mut String, m: &CMatrix) {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{},{}", fmt_real(m[(i, j)].re), fmt_real(m[(i, j)].im)))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

pub fn parse_state(text: &str, path: &Path) -> Result<DensityMatrix> {
    let mut lines = content_lines(text).peekable();
    let header = lines.next().ok_or_else(|| parse_error(path, 1, "missing `dim <d>` header"))?;
    let d = parse_dim(&header, path)?;
    let m = parse_matrix(&mut lines, d, path, header.number, "the state")?;
    if let Some(extra) = lines.next() {
        return Err(parse_error(path, extra.number, "unexpected content after the matrix"));
    }
    DensityMatrix::new(m).map_err(|e| CliError::instance(path, e))
}

pub fn write_state(rho: &DensityMatrix) -> String {
    let mut out = format!("dim {}\n", rho.dim());
    write_matrix(&mut out, rho.matrix());
    out
}

pub fn parse_povm(text: &str, path: &Path) -> Result<Povm> {
    let mut lines = content_lines(text).peekable();
    let header = lines.next().ok_or_else(|| parse_error(path, 1, "missing `dim <d>` header"))?;
    let d = parse_dim(&header, path)?;
    let mut effects = Vec::new();
    while let Some(line) = lines.next() {
        if line.text != "effect" {
            return Err(parse_error(path, line.number, "expected an `effect` line"));
        }
        let what = format!("effect {}", effects.len());
        effects.push(parse_matrix(&mut lines, d, path, line.number, &what)?);
    }
    Povm::new(effects).map_err(|e| CliError::instance(path, e))
}

pub fn write_povm(povm: &Povm) -> String {
    let mut out = format!("dim {}\n", povm.dim());
    for e in povm.effects() {
        out.push_str("effect\n");
        write_matrix(&mut out, e);
    }
    out
}

/// POVM paths listed in a menu file, resolved against its directory.
pub fn parse_menu_paths(text: &str, path: &Path) -> Result<Vec<PathBuf>> {
    let base = path.parent().unwrap_or(Path::new(""));
    let paths: Vec<PathBuf> = content_lines(text).map(|l| base.join(l.text)).collect();
    if paths.is_empty() {
        return Err(parse_error(path, 1, "a menu lists at least one POVM file"));
    }
    Ok(paths)
}

pub fn write_menu(paths: &[&str]) -> String {
    let mut out = String::new();
    for p in paths {
        let _ = writeln!(out, "{p}");
    }
    out
}

pub fn load_class(path: &Path) -> Result<ConvexClass> {
    parse_class(&read_file(path)?, path)
}

pub fn load_state(path: &Path) -> Result<DensityMatrix> {
    parse_state(&read_file(path)?, path)
}

pub fn load_povm(path: &Path) -> Result<Povm> {
    parse_povm(&read_file(path)?, path)
}

pub fn load_menu(path: &Path) -> Result<MeasurementMenu> {
    let povms = parse_menu_paths(&read_file(path)?, path)?
        .iter()
        .map(|p| load_povm(p))
        .collect::<Result<Vec<_>>>()?;
    MeasurementMenu::new(povms).map_err(|e| CliError::instance(path, e))
}

/// A state class from one file per vertex.
pub fn load_state_class(paths: &[PathBuf], field: &str) -> Result<StateClass> {
    let states = paths.iter().map(|p| load_state(p)).collect::<Result<Vec<_>>>()?;
    if states.is_empty() {
        return Err(CliError::field(field, "lists no state files"));
    }
    StateClass::new(states).map_err(|e| CliError::core(format!("field `{field}`"), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_and_decimals_parse() {
        assert_eq!(parse_real("1/4"), Some(0.25));
        assert_eq!(parse_real("-0.5"), Some(-0.5));
        assert_eq!(parse_real("1/0"), None);
        assert_eq!(parse_real("x"), None);
    }

    #[test]
    fn class_errors_name_the_line() {
        let err = parse_class("H T\n0.5 0.5\n0.5 x\n", Path::new("c.class")).unwrap_err();
        assert_eq!(err.to_string(), "c.class:3: invalid weight \"x\"");
        let err = parse_class("H T\n0.5 0.6\n", Path::new("c.class")).unwrap_err();
        assert!(err.to_string().starts_with("c.class:2: vertex 0:"), "{err}");
    }

    #[test]
    fn povm_entry_count_is_checked() {
        let text = "dim 2\neffect\n1,0 0,0\n0,0\neffect\n0,0 0,0\n0,0 1,0\n";
        let err = parse_povm(text, Path::new("m.povm")).unwrap_err();
        assert_eq!(err.to_string(), "m.povm:2: effect 0 has 3 entries, expected 4");
    }

    #[test]
    fn state_round_trip() {
        let text = "# qubit\ndim 2\n0.6,0 0.3,-0.1\n0.3,0.1 0.4,0\n";
        let rho = parse_state(text, Path::new("s")).unwrap();
        assert_eq!(parse_state(&write_state(&rho), Path::new("s")).unwrap(), rho);
    }
}
