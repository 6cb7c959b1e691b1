//! Coefficient expressions such as `e12+2e34` or `0.5e1 - e3`.
//!
//! Axes are one-based digits; `e` alone is the scalar. Repeated axes give
//! zero and out-of-order axes pick up the permutation sign.

use currentflow::exterior::KVector;

use crate::error::CliError;

pub fn parse_kvector(text: &str, n: usize, k: usize) -> Result<KVector, CliError> {
    if n == 0 || n > 9 {
        return Err(CliError::usage(format!("dimension {n} outside 1..=9")));
    }
    if k > n {
        return Err(CliError::usage(format!("degree {k} exceeds dimension {n}")));
    }
    let mut out = KVector::zero(n, k);
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(CliError::usage("empty coefficient expression"));
    }
    for (sign, term) in split_terms(&compact)? {
        let (coef, axes) = parse_term(term, n)?;
        if axes.len() != k {
            return Err(CliError::usage(format!(
                "term `{term}` has degree {}, expected {k}",
                axes.len()
            )));
        }
        let (parity, sorted) = sort_axes(axes);
        let Some(sorted) = sorted else { continue };
        let basis = KVector::basis(n, &sorted).map_err(CliError::from)?;
        out.axpy(sign * parity * coef, &basis);
    }
    Ok(out)
}

fn split_terms(s: &str) -> Result<Vec<(f64, &str)>, CliError> {
    let mut terms = Vec::new();
    let bytes = s.as_bytes();
    let mut start = 0;
    let mut sign = 1.0;
    if bytes[0] == b'+' || bytes[0] == b'-' {
        sign = if bytes[0] == b'-' { -1.0 } else { 1.0 };
        start = 1;
    }
    let mut i = start;
    while i < bytes.len() {
        let c = bytes[i];
        // a sign after an exponent marker belongs to the number, as in 1e-3e12
        let exponent = i >= 2
            && bytes[i - 1] == b'e'
            && bytes[i - 2].is_ascii_digit()
            && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)
            && has_basis_after(&s[i..]);
        if (c == b'+' || c == b'-') && !exponent {
            terms.push((sign, term(s, start, i)?));
            sign = if c == b'-' { -1.0 } else { 1.0 };
            start = i + 1;
        }
        i += 1;
    }
    terms.push((sign, term(s, start, s.len())?));
    Ok(terms)
}

fn has_basis_after(rest: &str) -> bool {
    let digits = rest[1..].trim_start_matches(|c: char| c.is_ascii_digit());
    digits.starts_with('e') || digits.starts_with("*e")
}

fn term(s: &str, a: usize, b: usize) -> Result<&str, CliError> {
    if a >= b {
        return Err(CliError::usage(format!("dangling sign in `{s}`")));
    }
    Ok(&s[a..b])
}

fn parse_term(term: &str, n: usize) -> Result<(f64, Vec<usize>), CliError> {
    let Some(pos) = term
        .rfind('e')
        .filter(|&p| term[p + 1..].chars().all(|c| c.is_ascii_digit()))
    else {
        return Err(CliError::usage(format!("term `{term}` has no basis element")));
    };
    let coef_text = term[..pos].trim_end_matches('*');
    let coef = if coef_text.is_empty() {
        1.0
    } else {
        coef_text
            .parse::<f64>()
            .map_err(|_| CliError::usage(format!("bad coefficient `{coef_text}` in `{term}`")))?
    };
    let mut axes = Vec::new();
    for c in term[pos + 1..].chars() {
        let a = c.to_digit(10).unwrap() as usize;
        if a == 0 || a > n {
            return Err(CliError::usage(format!("axis {a} outside 1..={n} in `{term}`")));
        }
        axes.push(a - 1);
    }
    Ok((coef, axes))
}

/// Bubble sort with sign; `None` when an axis repeats.
fn sort_axes(mut axes: Vec<usize>) -> (f64, Option<Vec<usize>>) {
    let mut parity = 1.0;
    for i in 0..axes.len() {
        for j in 0..axes.len() - 1 - i {
            if axes[j] == axes[j + 1] {
                return (0.0, None);
            }
            if axes[j] > axes[j + 1] {
                axes.swap(j, j + 1);
                parity = -parity;
            }
        }
    }
    if axes.windows(2).any(|w| w[0] == w[1]) {
        return (0.0, None);
    }
    (parity, Some(axes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeffs(s: &str, n: usize, k: usize) -> Vec<f64> {
        parse_kvector(s, n, k).unwrap().coeffs().to_vec()
    }

    #[test]
    fn kahler_form() {
        assert_eq!(coeffs("e12+e34", 4, 2), vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(coeffs(" e12 + 2e34 ", 4, 2), vec![1.0, 0.0, 0.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn signs_and_coefficients() {
        assert_eq!(coeffs("-0.5e21", 2, 2), vec![0.5]);
        assert_eq!(coeffs("3*e1-e3", 3, 1), vec![3.0, 0.0, -1.0]);
        assert_eq!(coeffs("1e-3e2", 2, 1), vec![0.0, 1e-3]);
        assert_eq!(coeffs("e11", 2, 2), vec![0.0]);
        assert_eq!(coeffs("e", 3, 0), vec![1.0]);
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["", "e12+", "x12", "e15", "e1", "2", "e12++e34", "ae12"] {
            assert!(parse_kvector(bad, 4, 2).is_err(), "{bad}");
        }
    }
}
