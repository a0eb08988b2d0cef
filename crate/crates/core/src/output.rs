//! Shared formatting for the tabular outputs.

use std::io::Write;

/// Significant digits written for every floating-point CSV field.
pub const CSV_SIG_DIGITS: usize = 12;

/// Formats `x` with 12 significant digits in scientific notation.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        // avoid "-0" so byte-equal columns stay byte-equal
        return format!("{:.*e}", CSV_SIG_DIGITS - 1, 0.0);
    }
    format!("{:.*e}", CSV_SIG_DIGITS - 1, x)
}

/// Writes `# key: value` provenance lines ahead of a CSV header.
pub fn write_provenance<W: Write>(mut w: W, lines: &[(&str, String)]) -> std::io::Result<()> {
    for (k, v) in lines {
        writeln!(w, "# {k}: {v}")?;
    }
    Ok(())
}

/// Minimal CSV table: header plus rows of floats.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| fmt_sig(x)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}
