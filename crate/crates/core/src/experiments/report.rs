use std::fmt::Write as _;

use super::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// One line per (lang, system, output kind).
    Long,
    /// Languages as columns; only for single-metric tables.
    Pivot,
}

/// Which value counts as best when highlighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Better {
    Higher,
    Lower,
    /// Closest to zero.
    LowerAbs,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellFormat {
    Decimal2,
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Column {
    pub name: &'static str,
    pub better: Better,
    pub format: CellFormat,
}

const fn score(name: &'static str) -> Column {
    Column {
        name,
        better: Better::Higher,
        format: CellFormat::Decimal2,
    }
}

const PANEL_COLUMNS: [Column; 3] = [score("masc"), score("fem"), score("both")];
const BIAS_COLUMNS: [Column; 4] = [
    Column {
        name: "n",
        better: Better::Neither,
        format: CellFormat::Integer,
    },
    score("accuracy"),
    Column {
        name: "delta_b",
        better: Better::LowerAbs,
        format: CellFormat::Decimal2,
    },
    Column {
        name: "unknown_rate",
        better: Better::Lower,
        format: CellFormat::Decimal2,
    },
];
const FLORES_COLUMNS: [Column; 1] = [score("bleu")];

/// The fixed table shapes a report can contain. The kind determines the
/// columns, so a CSV block only needs its kind name to be read back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TableKind {
    MhbBleu,
    MhbChrf,
    Bias,
    FloresBleu,
}

impl TableKind {
    pub const ALL: [TableKind; 4] = [
        TableKind::MhbBleu,
        TableKind::MhbChrf,
        TableKind::Bias,
        TableKind::FloresBleu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TableKind::MhbBleu => "bleu",
            TableKind::MhbChrf => "chrf",
            TableKind::Bias => "bias",
            TableKind::FloresBleu => "flores-bleu",
        }
    }

    pub fn from_name(name: &str) -> Option<TableKind> {
        TableKind::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn title(self) -> &'static str {
        match self {
            TableKind::MhbBleu => "BLEU",
            TableKind::MhbChrf => "chrF",
            TableKind::Bias => "Gender prediction accuracy",
            TableKind::FloresBleu => "BLEU against the single reference",
        }
    }

    pub fn columns(self) -> &'static [Column] {
        match self {
            TableKind::MhbBleu | TableKind::MhbChrf => &PANEL_COLUMNS,
            TableKind::Bias => &BIAS_COLUMNS,
            TableKind::FloresBleu => &FLORES_COLUMNS,
        }
    }

    pub fn layout(self) -> Layout {
        match self {
            TableKind::FloresBleu => Layout::Pivot,
            _ => Layout::Long,
        }
    }

    /// Tables whose cells may be scored against the opposite-gender reference.
    pub fn tracks_swaps(self) -> bool {
        matches!(self, TableKind::MhbBleu | TableKind::MhbChrf)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub lang: String,
    pub system: String,
    pub output_kind: String,
    pub cells: Vec<Option<f64>>,
    /// Parallel to `cells`.
    pub swapped: Vec<bool>,
}

impl ReportRow {
    pub fn new(lang: &str, system: &str, output_kind: &str, cells: Vec<Option<f64>>) -> Self {
        let swapped = vec![false; cells.len()];
        ReportRow {
            lang: lang.to_string(),
            system: system.to_string(),
            output_kind: output_kind.to_string(),
            cells,
            swapped,
        }
    }

    pub fn with_swapped(mut self, column: usize) -> Self {
        self.swapped[column] = true;
        self
    }

    pub fn cell(&self, column: &str, kind: TableKind) -> Option<f64> {
        let i = kind.columns().iter().position(|c| c.name == column)?;
        self.cells.get(i).copied().flatten()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub kind: TableKind,
    pub rows: Vec<ReportRow>,
}

impl ReportTable {
    pub fn new(kind: TableKind) -> Self {
        ReportTable {
            kind,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: ReportRow) {
        debug_assert_eq!(row.cells.len(), self.kind.columns().len());
        self.rows.push(row);
    }

    pub fn find(&self, lang: &str, system: &str, output_kind: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.lang == lang && r.system == system && r.output_kind == output_kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetDigest {
    pub name: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReportHeader {
    pub experiment: String,
    pub manifest_digest: String,
    pub backend_id: String,
    pub tokenization: String,
    pub datasets: Vec<DatasetDigest>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub header: ReportHeader,
    pub tables: Vec<ReportTable>,
    pub footnotes: Vec<String>,
}

fn one_line(s: &str) -> String {
    s.split(['\n', '\r'])
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

fn render_value(v: f64, format: CellFormat) -> String {
    match format {
        CellFormat::Decimal2 => format!("{v:.2}"),
        CellFormat::Integer => format!("{v:.0}"),
    }
}

fn round_value(v: f64, format: CellFormat) -> f64 {
    render_value(v, format)
        .parse()
        .expect("formatted float parses")
}

impl ExperimentReport {
    pub fn table(&self, kind: TableKind) -> Option<&ReportTable> {
        self.tables.iter().find(|t| t.kind == kind)
    }

    pub fn add_footnote(&mut self, note: impl AsRef<str>) {
        self.footnotes.push(one_line(note.as_ref()));
    }

    /// Copy with every cell rounded the way it is printed.
    pub fn rounded(&self) -> ExperimentReport {
        let mut out = self.clone();
        for table in &mut out.tables {
            let columns = table.kind.columns();
            for row in &mut table.rows {
                for (cell, col) in row.cells.iter_mut().zip(columns) {
                    *cell = cell.map(|v| round_value(v, col.format));
                }
            }
        }
        out
    }

    pub fn emit(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Markdown => self.to_markdown(),
        }
    }

    /// Comment-prefixed header lines followed by one CSV block per table,
    /// each introduced by `# table: <kind>`.
    pub fn to_csv(&self) -> String {
        let h = &self.header;
        let mut out = String::new();
        let _ = writeln!(out, "# experiment: {}", one_line(&h.experiment));
        let _ = writeln!(out, "# manifest: {}", h.manifest_digest);
        let _ = writeln!(out, "# backend: {}", one_line(&h.backend_id));
        let _ = writeln!(out, "# tokenization: {}", h.tokenization);
        for d in &h.datasets {
            let _ = writeln!(
                out,
                "# dataset: {}={}@{}",
                one_line(&d.name),
                one_line(&d.path),
                d.sha256
            );
        }
        for note in &self.footnotes {
            let _ = writeln!(out, "# note: {}", one_line(note));
        }
        for table in &self.tables {
            out.push('\n');
            let _ = writeln!(out, "# table: {}", table.kind.name());
            out.push_str(&table_csv(table));
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let h = &self.header;
        let mut out = String::new();
        let _ = writeln!(out, "# Report: {}\n", h.experiment);
        let _ = writeln!(out, "- manifest: `sha256:{}`", h.manifest_digest);
        let _ = writeln!(out, "- backend: `{}`", h.backend_id);
        let _ = writeln!(out, "- tokenization: `{}`", h.tokenization);
        for d in &h.datasets {
            let _ = writeln!(
                out,
                "- dataset `{}`: `{}` (`sha256:{}`)",
                d.name, d.path, d.sha256
            );
        }
        for table in &self.tables {
            let _ = writeln!(out, "\n## {}\n", table.kind.title());
            match table.kind.layout() {
                Layout::Long => long_markdown(table, &mut out),
                Layout::Pivot => pivot_markdown(table, &mut out),
            }
        }
        if !self.footnotes.is_empty() {
            out.push_str("\nNotes:\n\n");
            for (i, note) in self.footnotes.iter().enumerate() {
                let _ = writeln!(out, "{}. {}", i + 1, note);
            }
        }
        out
    }

    /// Reads back the output of [`ExperimentReport::to_csv`]. Numbers come
    /// back as printed, so `parse_csv(&r.to_csv()) == r.rounded()`.
    pub fn parse_csv(text: &str) -> Result<ExperimentReport, ExperimentError> {
        let bad = |line: usize, msg: &str| ExperimentError::Report(format!("line {line}: {msg}"));
        let mut report = ExperimentReport::default();
        let lines: Vec<&str> = text.lines().collect();
        let mut i = 0;
        let mut seen = [false; 4];
        while i < lines.len() {
            let line = lines[i];
            i += 1;
            if line.trim().is_empty() {
                continue;
            }
            let Some(comment) = line.strip_prefix("# ") else {
                return Err(bad(i, "expected a `# key: value` line"));
            };
            let Some((key, value)) = comment
                .split_once(": ")
                .or_else(|| comment.strip_suffix(':').map(|k| (k, "")))
            else {
                return Err(bad(i, "expected a `# key: value` line"));
            };
            let h = &mut report.header;
            let mut set = |slot: usize, target: &mut String| {
                if seen[slot] {
                    return Err(bad(i, "repeated header key"));
                }
                seen[slot] = true;
                *target = value.to_string();
                Ok(())
            };
            match key {
                "experiment" => set(0, &mut h.experiment)?,
                "manifest" => set(1, &mut h.manifest_digest)?,
                "backend" => set(2, &mut h.backend_id)?,
                "tokenization" => set(3, &mut h.tokenization)?,
                "dataset" => {
                    let (name, rest) = value
                        .split_once('=')
                        .ok_or_else(|| bad(i, "dataset needs name=path@sha"))?;
                    let (path, sha) = rest
                        .rsplit_once('@')
                        .ok_or_else(|| bad(i, "dataset needs name=path@sha"))?;
                    h.datasets.push(DatasetDigest {
                        name: name.into(),
                        path: path.into(),
                        sha256: sha.into(),
                    });
                }
                "note" => report.footnotes.push(value.to_string()),
                "table" => {
                    let kind =
                        TableKind::from_name(value).ok_or_else(|| bad(i, "unknown table kind"))?;
                    if report.table(kind).is_some() {
                        return Err(bad(i, "table repeated"));
                    }
                    let start = i;
                    while i < lines.len()
                        && !lines[i].trim().is_empty()
                        && !lines[i].starts_with('#')
                    {
                        i += 1;
                    }
                    let block = lines[start..i].join("\n");
                    report
                        .tables
                        .push(parse_table(kind, &block).map_err(|m| bad(start + 1, &m))?);
                }
                _ => return Err(bad(i, "unknown header key")),
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(ExperimentError::Report("header is incomplete".into()));
        }
        Ok(report)
    }
}

fn csv_headers(kind: TableKind) -> Vec<&'static str> {
    let mut headers = vec!["lang", "system", "output_kind"];
    headers.extend(kind.columns().iter().map(|c| c.name));
    if kind.tracks_swaps() {
        headers.push("swapped");
    }
    headers
}

fn table_csv(table: &ReportTable) -> String {
    let columns = table.kind.columns();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(csv_headers(table.kind))
        .expect("in-memory write");
    for row in &table.rows {
        let mut record = vec![
            row.lang.clone(),
            row.system.clone(),
            row.output_kind.clone(),
        ];
        record.extend(row.cells.iter().zip(columns).map(|(cell, col)| {
            cell.map(|v| render_value(v, col.format))
                .unwrap_or_default()
        }));
        if table.kind.tracks_swaps() {
            let swapped: Vec<&str> = columns
                .iter()
                .zip(&row.swapped)
                .filter(|(_, s)| **s)
                .map(|(c, _)| c.name)
                .collect();
            record.push(swapped.join(";"));
        }
        w.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

fn parse_table(kind: TableKind, block: &str) -> Result<ReportTable, String> {
    let columns = kind.columns();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(block.as_bytes());
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let expected = csv_headers(kind);
    if headers.iter().ne(expected.iter().copied()) {
        return Err(format!("expected columns {}", expected.join(",")));
    }
    let mut table = ReportTable::new(kind);
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        let mut cells = Vec::with_capacity(columns.len());
        for (j, col) in columns.iter().enumerate() {
            let raw = &record[3 + j];
            cells.push(if raw.is_empty() {
                None
            } else {
                let v: f64 = raw
                    .parse()
                    .map_err(|_| format!("`{raw}` in column {} is not a number", col.name))?;
                if !v.is_finite() {
                    return Err(format!("`{raw}` in column {} is not finite", col.name));
                }
                Some(round_value(v, col.format))
            });
        }
        let mut row = ReportRow::new(&record[0], &record[1], &record[2], cells);
        if kind.tracks_swaps() {
            let raw = &record[3 + columns.len()];
            for name in raw.split(';').filter(|s| !s.is_empty()) {
                let j = columns
                    .iter()
                    .position(|c| c.name == name)
                    .ok_or_else(|| format!("unknown swapped column `{name}`"))?;
                row.swapped[j] = true;
            }
        }
        table.rows.push(row);
    }
    Ok(table)
}

fn is_better(a: f64, b: f64, better: Better) -> bool {
    match better {
        Better::Higher => a > b,
        Better::Lower => a < b,
        Better::LowerAbs => a.abs() < b.abs(),
        Better::Neither => false,
    }
}

/// Printed value of the best eligible cell among `candidates`.
fn best_printed<'a>(
    candidates: impl Iterator<Item = &'a ReportRow>,
    j: usize,
    col: &Column,
) -> Option<String> {
    if col.better == Better::Neither {
        return None;
    }
    let mut best: Option<f64> = None;
    for row in candidates {
        if row.swapped[j] {
            continue;
        }
        if let Some(v) = row.cells[j] {
            let v = round_value(v, col.format);
            if best.map_or(true, |b| is_better(v, b, col.better)) {
                best = Some(v);
            }
        }
    }
    best.map(|v| render_value(v, col.format))
}

fn markdown_cell(value: Option<f64>, swapped: bool, col: &Column, best: Option<&str>) -> String {
    let Some(v) = value else { return "-".into() };
    let text = render_value(v, col.format);
    if swapped {
        format!("({text})")
    } else if best == Some(text.as_str()) {
        format!("**{text}**")
    } else {
        text
    }
}

fn long_markdown(table: &ReportTable, out: &mut String) {
    let columns = table.kind.columns();
    out.push_str("| lang | system | output |");
    for c in columns {
        let _ = write!(out, " {} |", c.name);
    }
    out.push_str("\n|:--|:--|:--|");
    out.push_str(&"--:|".repeat(columns.len()));
    out.push('\n');
    for row in &table.rows {
        let _ = write!(
            out,
            "| {} | {} | {} |",
            row.lang, row.system, row.output_kind
        );
        for (j, col) in columns.iter().enumerate() {
            let group = table.rows.iter().filter(|r| r.lang == row.lang);
            let best = best_printed(group, j, col);
            let _ = write!(
                out,
                " {} |",
                markdown_cell(row.cells[j], row.swapped[j], col, best.as_deref())
            );
        }
        out.push('\n');
    }
}

/// Rows whose output kind is a difference rather than a score.
fn is_difference(row: &ReportRow) -> bool {
    row.output_kind.starts_with("delta")
}

fn pivot_markdown(table: &ReportTable, out: &mut String) {
    let col = &table.kind.columns()[0];
    let mut langs: Vec<&str> = Vec::new();
    let mut series: Vec<(&str, &str)> = Vec::new();
    for row in &table.rows {
        if !langs.contains(&row.lang.as_str()) {
            langs.push(&row.lang);
        }
        let key = (row.system.as_str(), row.output_kind.as_str());
        if !series.contains(&key) {
            series.push(key);
        }
    }
    out.push_str("| system | output |");
    for lang in &langs {
        let _ = write!(out, " {lang} |");
    }
    out.push_str("\n|:--|:--|");
    out.push_str(&"--:|".repeat(langs.len()));
    out.push('\n');
    for (system, kind) in &series {
        let label = if *kind == "delta_f" { "ΔF" } else { kind };
        let _ = write!(out, "| {system} | {label} |");
        for lang in &langs {
            let row = table
                .rows
                .iter()
                .find(|r| r.lang == *lang && r.system == *system && r.output_kind == *kind);
            let cell = match row {
                None => "-".to_string(),
                Some(row) if is_difference(row) => markdown_cell(row.cells[0], false, col, None),
                Some(row) => {
                    let group = table
                        .rows
                        .iter()
                        .filter(|r| r.lang == *lang && !is_difference(r));
                    let best = best_printed(group, 0, col);
                    markdown_cell(row.cells[0], row.swapped[0], col, best.as_deref())
                }
            };
            let _ = write!(out, " {cell} |");
        }
        out.push('\n');
    }
}
