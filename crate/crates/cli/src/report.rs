use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Serialize)]
pub struct ReportItem {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(title: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            title: title.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// Plain CSV: header row then one line per row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub name: String,
    pub sigma: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub version: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub parameters: Value,
    pub results: Vec<ReportItem>,
    pub violations: Vec<Violation>,
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
    pub provenance: Provenance,
    pub timing_ms: f64,
}

impl RunReport {
    pub fn new(parameters: Value) -> Self {
        Self {
            command: Vec::new(),
            parameters,
            results: Vec::new(),
            violations: Vec::new(),
            tables: Vec::new(),
            notes: Vec::new(),
            provenance: Provenance {
                seed: None,
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
            timing_ms: 0.0,
        }
    }

    pub fn value(&mut self, name: &str, value: f64) -> &mut Self {
        self.results.push(ReportItem {
            name: name.into(),
            value,
            sigma: None,
        });
        self
    }

    pub fn measured(&mut self, name: &str, m: nonlocal_core::Measured) -> &mut Self {
        self.results.push(ReportItem {
            name: name.into(),
            value: m.value,
            sigma: Some(m.sigma),
        });
        self
    }

    pub fn violation(&mut self, name: &str, sigma: f64) -> &mut Self {
        self.violations.push(Violation {
            name: name.into(),
            sigma,
        });
        self
    }

    pub fn note(&mut self, note: impl Into<String>) -> &mut Self {
        self.notes.push(note.into());
        self
    }

    pub fn result(&self, name: &str) -> Option<&ReportItem> {
        self.results.iter().find(|r| r.name == name)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "$ {}", self.command.join(" "));
        let width = self.results.iter().map(|r| r.name.len()).max().unwrap_or(0);
        for r in &self.results {
            match r.sigma {
                Some(s) => {
                    let _ = writeln!(out, "{:<width$}  {:.6} ± {:.6}", r.name, r.value, s);
                }
                None => {
                    let _ = writeln!(out, "{:<width$}  {:.6}", r.name, r.value);
                }
            }
        }
        for v in &self.violations {
            let _ = writeln!(out, "{}: {:.1}σ", v.name, v.sigma);
        }
        for t in &self.tables {
            let _ = writeln!(out, "\n{}", t.title);
            let widths: Vec<usize> = t
                .columns
                .iter()
                .map(|c| (c.chars().count() + 2).max(14))
                .collect();
            let header: String = t
                .columns
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect();
            let _ = writeln!(out, "{header}");
            for row in &t.rows {
                let line: String = row
                    .iter()
                    .zip(&widths)
                    .map(|(v, w)| format!("{v:>w$.6}"))
                    .collect();
                let _ = writeln!(out, "{line}");
            }
        }
        for n in &self.notes {
            let _ = writeln!(out, "{n}");
        }
        let mut prov = format!("version {}", self.provenance.version);
        if let Some(seed) = self.provenance.seed {
            let _ = write!(prov, ", seed {seed}");
        }
        let _ = writeln!(out, "[{prov}, {:.1} ms]", self.timing_ms);
        out
    }
}
