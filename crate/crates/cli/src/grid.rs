//! Parsers for the list and range arguments of the command line.

use hamming_boot::{Error, Rational, Result};

fn bad(what: &str, s: &str) -> Error {
    Error::Domain(format!("cannot parse {s:?} as {what}"))
}

/// Splits `start..end[:step]`.
fn split_range(s: &str) -> Option<(&str, &str, Option<&str>)> {
    let (start, rest) = s.split_once("..")?;
    let (end, step) = match rest.split_once(':') {
        Some((e, st)) => (e, Some(st)),
        None => (rest, None),
    };
    Some((start.trim(), end.trim().trim_start_matches('='), step.map(str::trim)))
}

/// Integers as `7`, `2,3,5` or the inclusive range `2..12[:step]`.
pub fn parse_int_list(s: &str) -> Result<Vec<usize>> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| bad("an integer list", s));
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        if let Some((start, end, step)) = split_range(part) {
            let (start, end) = (parse(start)?, parse(end)?);
            let step = step.map(parse).transpose()?.unwrap_or(1);
            if step == 0 || start > end {
                return Err(bad("an integer range", s));
            }
            out.extend((start..=end).step_by(step));
        } else {
            out.push(parse(part)?);
        }
    }
    if out.is_empty() {
        return Err(bad("an integer list", s));
    }
    Ok(out)
}

/// Rationals as a comma list of `p/q` or decimals, or the inclusive range
/// `start..end:step` evaluated exactly.
pub fn parse_rational_list(s: &str) -> Result<Vec<Rational>> {
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        if let Some((start, end, step)) = split_range(part) {
            let start: Rational = start.parse()?;
            let end: Rational = end.parse()?;
            let step: Rational = step.ok_or_else(|| bad("a range with a step", s))?.parse()?;
            if !step.is_positive() || start > end {
                return Err(bad("an increasing range", s));
            }
            let mut k = 0i64;
            loop {
                let v = &start + &(&step * &Rational::from_integer(k));
                if v > end {
                    break;
                }
                out.push(v);
                k += 1;
            }
        } else {
            out.push(part.parse()?);
        }
    }
    if out.is_empty() {
        return Err(bad("a number list", s));
    }
    Ok(out)
}

/// Like [`parse_rational_list`], converted to floats.
pub fn parse_float_list(s: &str) -> Result<Vec<f64>> {
    Ok(parse_rational_list(s)?.iter().map(Rational::to_f64).collect())
}
