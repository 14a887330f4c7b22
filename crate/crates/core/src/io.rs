//! CSV helpers shared by the library and the command-line harness.

use std::fmt::Write as _;

use crate::tensor::{packed_index_pair, packed_len};

/// Round-trip safe decimal with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:.16e}")
}

/// `11`, `22`, `12`, … for packed slot `k`.
pub fn component_suffix(dim: usize, k: usize) -> String {
    let (i, j) = packed_index_pair(dim, k);
    format!("{}{}", i + 1, j + 1)
}

/// `eps_11,…,sig_11,…`.
pub fn state_header(dim: usize) -> Vec<String> {
    let m = packed_len(dim);
    let mut h: Vec<String> = (0..m).map(|k| format!("eps_{}", component_suffix(dim, k))).collect();
    h.extend((0..m).map(|k| format!("sig_{}", component_suffix(dim, k))));
    h
}

/// Write rows of floats under a header as CSV text.
pub fn csv_string<S: AsRef<str>>(header: &[S], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = String::new();
    let names: Vec<&str> = header.iter().map(|s| s.as_ref()).collect();
    out.push_str(&names.join(","));
    out.push('\n');
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}
