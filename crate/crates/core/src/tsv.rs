//! Header-addressed tab-separated tables shared by the corpus and lexicon
//! loaders.

use std::collections::HashMap;

#[derive(Debug, thiserror::Error)]
pub(crate) enum TsvError {
    #[error("missing header row")]
    NoHeader,
    #[error("missing column `{0}` in header")]
    MissingColumn(String),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
}

/// A parsed table with named columns. Cells are raw strings; absent trailing
/// cells read as empty.
pub(crate) struct Table {
    columns: HashMap<String, usize>,
    rows: Vec<Row>,
}

pub(crate) struct Row {
    pub line: u64,
    cells: Vec<String>,
}

impl Table {
    pub fn parse(text: &str, required: &[&str]) -> Result<Table, TsvError> {
        let text = text.strip_prefix('\u{feff}').unwrap_or(text);
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .quoting(false)
            .has_headers(false)
            .flexible(true)
            .from_reader(text.as_bytes());

        let mut records = reader.records();
        let header = match records.next() {
            Some(Ok(h)) => h,
            Some(Err(e)) => return Err(malformed(&e)),
            None => return Err(TsvError::NoHeader),
        };
        let columns: HashMap<String, usize> = header
            .iter()
            .enumerate()
            .map(|(i, name)| (name.trim().to_ascii_lowercase(), i))
            .collect();
        for name in required {
            if !columns.contains_key(*name) {
                return Err(TsvError::MissingColumn((*name).to_string()));
            }
        }

        let mut rows = Vec::new();
        for record in records {
            let record = record.map_err(|e| malformed(&e))?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            // blank lines are skipped by the reader; a lone tab-free line with
            // no content is not a row either
            if record.iter().all(|c| c.trim().is_empty()) {
                continue;
            }
            let cells = record
                .iter()
                .map(|c| c.trim_end_matches('\r').to_string())
                .collect();
            rows.push(Row { line, cells });
        }
        Ok(Table { columns, rows })
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    /// Cell text for `column`, or "" when the row is short.
    pub fn cell<'a>(&self, row: &'a Row, column: &str) -> &'a str {
        self.columns
            .get(column)
            .and_then(|&i| row.cells.get(i))
            .map(String::as_str)
            .unwrap_or("")
    }

    /// Like [`Table::cell`] but maps blank cells to `None`.
    pub fn optional(&self, row: &Row, column: &str) -> Option<String> {
        let value = self.cell(row, column).trim();
        (!value.is_empty()).then(|| value.to_string())
    }
}

fn malformed(e: &csv::Error) -> TsvError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    TsvError::Malformed {
        line,
        message: e.to_string(),
    }
}
