use std::fmt::Write;

use num_complex::Complex64;
use serde_json::Value;

/// Rendered result of one command.
pub struct Output {
    pub json: Value,
    pub csv: String,
    pub pretty: String,
    /// A checked property failed (exit code 1).
    pub failed: bool,
}

/// Six significant digits.
pub fn sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    }
}

pub fn sig_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        sig(z.re)
    } else if z.im < 0.0 {
        format!("{}-{}i", sig(z.re), sig(-z.im))
    } else {
        format!("{}+{}i", sig(z.re), sig(z.im))
    }
}

/// `key,value` rows.
pub fn csv_pairs(rows: &[(&str, String)]) -> String {
    let mut out = String::from("key,value\n");
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

/// Aligned `key: value` lines.
pub fn pretty_pairs(rows: &[(&str, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<width$}  {v}");
    }
    out
}

pub fn pretty_matrix(labels: &[String], rows: impl Fn(usize, usize) -> f64) -> String {
    let cells: Vec<Vec<String>> = (0..labels.len())
        .map(|i| (0..labels.len()).map(|j| sig(rows(i, j))).collect())
        .collect();
    let width = cells
        .iter()
        .flatten()
        .chain(labels)
        .map(|s| s.len())
        .max()
        .unwrap_or(1);
    let label_width = labels.iter().map(|s| s.len()).max().unwrap_or(1);
    let mut out = format!("{:label_width$}", "");
    for l in labels {
        let _ = write!(out, "  {l:>width$}");
    }
    out.push('\n');
    for (l, row) in labels.iter().zip(&cells) {
        let _ = write!(out, "{l:>label_width$}");
        for c in row {
            let _ = write!(out, "  {c:>width$}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig(std::f64::consts::SQRT_2), "1.41421");
        assert_eq!(sig(1.0), "1");
        assert_eq!(sig(0.5), "0.5");
        assert_eq!(sig(123456.7), "123457");
        assert_eq!(sig(1234567.0), "1.23457e6");
        assert_eq!(sig(-0.000123456789), "-0.000123457");
        assert_eq!(sig(2.5e-7), "2.50000e-7");
        assert_eq!(sig(0.0), "0");
    }

    #[test]
    fn complex_cells() {
        assert_eq!(sig_complex(Complex64::new(1.0, -0.5)), "1-0.5i");
        assert_eq!(sig_complex(Complex64::new(0.25, 2.0)), "0.25+2i");
    }
}
