//! CSV rendering with `#` metadata lines.

use std::fmt::Write as _;

/// Shortest round-trip rendering; infinities print as `inf`.
pub fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v.is_nan() {
        "nan".into()
    } else if v == 0.0 {
        // Collapse -0 so unit conversions cannot flip the sign of zero.
        "0".into()
    } else {
        format!("{v}")
    }
}

pub struct Csv {
    out: String,
    columns: usize,
}

impl Csv {
    pub fn new(meta: &[(&str, String)], header: &[&str]) -> Self {
        let mut out = String::new();
        for (k, v) in meta {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str(&header.join(","));
        out.push('\n');
        Self {
            out,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns);
        self.out.push_str(&cells.join(","));
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}
