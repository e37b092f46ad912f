//! Draw files: UTF-8 text with one decimal real per line (LF or CRLF), or a
//! single-column CSV whose first line may be a header. Blank lines are skipped.

use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum InputError {
    Read(String),
    NotUtf8,
    Malformed { line: usize, content: String, reason: &'static str },
    Empty,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputError::Read(e) => write!(f, "cannot read input: {e}"),
            InputError::NotUtf8 => write!(f, "input is not valid UTF-8"),
            InputError::Malformed { line, content, reason } => write!(f, "line {line}: {reason}: {content:?}"),
            InputError::Empty => write!(f, "input contains no draws"),
        }
    }
}

impl std::error::Error for InputError {}

pub fn read_draws(path: &Path) -> Result<Vec<f64>, InputError> {
    let bytes = std::fs::read(path).map_err(|e| InputError::Read(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes).map_err(|_| InputError::NotUtf8)?;
    parse_draws(&text)
}

/// Decimal real with optional sign, fraction and exponent. Rejects the
/// `inf` / `nan` spellings that `f64::from_str` would accept.
fn is_decimal(s: &str) -> bool {
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(k) => (&body[..k], Some(&body[k + 1..])),
        None => (body, None),
    };
    let mut parts = mantissa.splitn(2, '.');
    let int = parts.next().unwrap_or("");
    let frac = parts.next().unwrap_or("");
    let digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    let mantissa_ok = digits(int) && digits(frac) && !(int.is_empty() && frac.is_empty());
    let exponent_ok = exponent.is_none_or(|e| {
        let e = e.strip_prefix(['+', '-']).unwrap_or(e);
        !e.is_empty() && digits(e)
    });
    mantissa_ok && exponent_ok
}

pub fn parse_draws(text: &str) -> Result<Vec<f64>, InputError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut draws = Vec::new();
    let mut seen_content = false;
    for (k, raw) in text.split('\n').enumerate() {
        let line = k + 1;
        let field = raw.strip_suffix('\r').unwrap_or(raw).trim();
        if field.is_empty() {
            continue;
        }
        let first = !seen_content;
        seen_content = true;
        let value = field
            .strip_prefix('"')
            .and_then(|f| f.strip_suffix('"'))
            .unwrap_or(field)
            .trim();
        let malformed = |reason| InputError::Malformed {
            line,
            content: field.to_string(),
            reason,
        };
        if value.contains(',') {
            return Err(malformed("expected a single column"));
        }
        if !is_decimal(value) {
            if first && value.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_') && !looks_non_finite(value) {
                continue; // header
            }
            return Err(malformed("not a decimal number"));
        }
        let x: f64 = value.parse().map_err(|_| malformed("not a decimal number"))?;
        if !x.is_finite() {
            return Err(malformed("value overflows to infinity"));
        }
        draws.push(x);
    }
    if draws.is_empty() {
        return Err(InputError::Empty);
    }
    Ok(draws)
}

fn looks_non_finite(s: &str) -> bool {
    let lower = s.to_ascii_lowercase();
    let lower = lower.trim_start_matches(['+', '-']);
    matches!(lower, "inf" | "infinity" | "nan")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_lines() {
        assert_eq!(parse_draws("1\n2.5\n-3e-2\n").unwrap(), vec![1.0, 2.5, -0.03]);
        assert_eq!(parse_draws("+1.\n.5\n1E3").unwrap(), vec![1.0, 0.5, 1000.0]);
    }

    #[test]
    fn crlf_blank_lines_and_header() {
        assert_eq!(parse_draws("value\r\n1\r\n\r\n2\r\n").unwrap(), vec![1.0, 2.0]);
        assert_eq!(parse_draws("\"x\"\n\"3.5\"\n").unwrap(), vec![3.5]);
        assert_eq!(parse_draws("\u{feff}theta\n4\n").unwrap(), vec![4.0]);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let err = parse_draws("1\n2\nabc\n4").unwrap_err();
        assert_eq!(
            err,
            InputError::Malformed {
                line: 3,
                content: "abc".into(),
                reason: "not a decimal number"
            }
        );
        assert!(err.to_string().starts_with("line 3:"));
        assert!(matches!(parse_draws("1\n1,2\n"), Err(InputError::Malformed { line: 2, .. })));
        assert!(matches!(parse_draws("x\ny\n"), Err(InputError::Malformed { line: 2, .. })));
    }

    #[test]
    fn non_finite_rejected() {
        for bad in ["nan", "inf", "-Infinity", "NaN"] {
            assert!(matches!(parse_draws(bad), Err(InputError::Malformed { line: 1, .. })), "{bad}");
        }
        assert!(matches!(parse_draws("1\n1e400"), Err(InputError::Malformed { line: 2, .. })));
        assert!(matches!(parse_draws("0x10"), Err(InputError::Malformed { .. })));
    }

    #[test]
    fn empty_input() {
        assert_eq!(parse_draws("\n\n"), Err(InputError::Empty));
        assert_eq!(parse_draws("header\n"), Err(InputError::Empty));
    }
}
