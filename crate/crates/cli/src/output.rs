use std::io::Write;

use serde::Serialize;

use crate::config::Format;
use crate::error::CliError;

/// A rectangular block of text cells.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub title: Option<String>,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            title: None,
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn titled(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn write_aligned(&self, out: &mut dyn Write) -> std::io::Result<()> {
        if let Some(title) = &self.title {
            writeln!(out, "{title}")?;
        }
        let cols = self.headers.len();
        let mut width: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, cell) in width.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |out: &mut dyn Write, cells: &[String]| -> std::io::Result<()> {
            let text: Vec<String> = cells
                .iter()
                .zip(&width)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect();
            writeln!(out, "{}", text.join("  ").trim_end())
        };
        line(out, &self.headers)?;
        let rule: Vec<String> = width.iter().take(cols).map(|w| "-".repeat(*w)).collect();
        writeln!(out, "{}", rule.join("  "))?;
        for row in &self.rows {
            line(out, row)?;
        }
        Ok(())
    }
}

/// Full-precision number for CSV cells.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Four-decimal number for aligned tables.
pub fn short(v: f64) -> String {
    format!("{v:.4}")
}

pub fn join(values: &[f64], fmt: fn(f64) -> String) -> String {
    values.iter().map(|&v| fmt(v)).collect::<Vec<_>>().join(" ")
}

/// Renders a command result.
///
/// `json` is written verbatim in JSON mode. In table mode every table is
/// printed followed by `notes`; in CSV mode only the first table is
/// written and notes go to the log.
pub fn emit<R: Serialize>(
    out: &mut dyn Write,
    format: Format,
    json: &R,
    tables: &[Table],
    notes: &[String],
) -> Result<(), CliError> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, json)?;
            writeln!(out)?;
        }
        Format::Table => {
            for (i, table) in tables.iter().enumerate() {
                if i > 0 {
                    writeln!(out)?;
                }
                table.write_aligned(out)?;
            }
            if !notes.is_empty() {
                writeln!(out)?;
            }
            for note in notes {
                writeln!(out, "{note}")?;
            }
        }
        Format::Csv => {
            if let Some(table) = tables.first() {
                let mut w = csv::Writer::from_writer(&mut *out);
                w.write_record(&table.headers)?;
                for row in &table.rows {
                    w.write_record(row)?;
                }
                w.flush()?;
            }
            for note in notes {
                log::info!("{note}");
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligns_columns() {
        let mut t = Table::new(&["id", "value"]);
        t.push(vec!["0".into(), "1.5".into()]);
        t.push(vec!["10".into(), "22.25".into()]);
        let mut buf = Vec::new();
        emit(&mut buf, Format::Table, &(), &[t], &["done".into()]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "id  value\n--  -----\n 0    1.5\n10  22.25\n\ndone\n"
        );
    }

    #[test]
    fn csv_writes_first_table() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        let mut buf = Vec::new();
        emit(
            &mut buf,
            Format::Csv,
            &(),
            &[t, Table::new(&["ignored"])],
            &[],
        )
        .unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1,\"x,y\"\n");
    }
}
