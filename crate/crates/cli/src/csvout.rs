//! CSV emission with deterministic number formatting.
//!
//! Every file is `# `-prefixed metadata lines, one plain header line, then
//! data rows. Floats print as the shortest string that parses back to the
//! same bits, so identical runs produce identical bytes.

use std::path::Path;

use crate::error::{CliError, Result};

/// Shortest-roundtrip float text; scientific form outside [1e-3, 1e6).
pub fn num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e6).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub struct CsvDoc {
    lines: Vec<String>,
    header_set: bool,
}

impl CsvDoc {
    pub fn new() -> Self {
        CsvDoc {
            lines: Vec::new(),
            header_set: false,
        }
    }

    /// A `# key = value` style comment line (before the header).
    pub fn meta(&mut self, text: impl AsRef<str>) {
        debug_assert!(!self.header_set, "metadata must precede the header");
        self.lines.push(format!("# {}", text.as_ref()));
    }

    pub fn header(&mut self, columns: &str) {
        debug_assert!(!self.header_set);
        self.lines.push(columns.to_string());
        self.header_set = true;
    }

    pub fn row(&mut self, fields: &[String]) {
        debug_assert!(self.header_set, "rows must follow the header");
        self.lines.push(fields.join(","));
    }

    pub fn to_text(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())
            .map_err(|e| CliError::io(&format!("writing {}", path.display()), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_roundtrip_exactly() {
        for &v in &[
            0.0,
            1.0,
            0.25,
            -9.80665,
            1.44316e-25,
            -6.442035664441818e-30,
            123456.789,
            1e6,
            9.999e-4,
            f64::MIN_POSITIVE,
        ] {
            let s = num(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v} -> {s}");
        }
    }

    #[test]
    fn small_magnitudes_use_scientific_form() {
        assert_eq!(num(1e-30), "1e-30");
        assert_eq!(num(0.25), "0.25");
        assert_eq!(num(0.0), "0");
    }

    #[test]
    fn documents_assemble_in_order() {
        let mut doc = CsvDoc::new();
        doc.meta("alpha = 1");
        doc.header("a,b");
        doc.row(&["1".into(), "2".into()]);
        assert_eq!(doc.to_text(), "# alpha = 1\na,b\n1,2\n");
    }
}
