use super::{HarnessError, HarnessResult};

pub(crate) const FORMAT_VERSION: &str = "v1";
pub(crate) const MISSING: &str = "-";

pub(crate) struct Table<'a> {
    meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Row<'a>>,
    source: String,
}

pub(crate) struct Row<'a> {
    pub line: usize,
    pub cells: Vec<&'a str>,
}

impl<'a> Table<'a> {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn error(&self, line: usize, message: impl Into<String>) -> HarnessError {
        HarnessError::Parse {
            source_name: self.source.clone(),
            line,
            message: message.into(),
        }
    }

    pub fn require_column(&self, name: &str) -> HarnessResult<usize> {
        self.column(name)
            .ok_or_else(|| self.error(1, format!("missing column `{name}`")))
    }

    pub fn f64_at(&self, row: &Row<'_>, idx: usize) -> HarnessResult<f64> {
        let cell = row.cells[idx];
        cell.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| {
                self.error(
                    row.line,
                    format!(
                        "column `{}`: `{cell}` is not a finite number",
                        self.columns[idx]
                    ),
                )
            })
    }

    pub fn opt_f64_at(&self, row: &Row<'_>, idx: usize) -> HarnessResult<Option<f64>> {
        if row.cells[idx] == MISSING {
            Ok(None)
        } else {
            self.f64_at(row, idx).map(Some)
        }
    }
}

/// Parse a tagged table. Entirely blank input yields an empty table.
/// With `ragged` set, rows may carry more cells than there are columns.
pub(crate) fn parse_table<'a>(
    text: &'a str,
    kind: &str,
    source: &str,
    ragged: bool,
) -> HarnessResult<Table<'a>> {
    let mut table = Table {
        meta: Vec::new(),
        columns: Vec::new(),
        rows: Vec::new(),
        source: source.to_string(),
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());

    let Some((line_no, tag)) = lines.next() else {
        return Ok(table);
    };
    let expected = format!("#docqa-{kind} {FORMAT_VERSION}");
    if tag.trim() != expected {
        return Err(table.error(
            line_no,
            format!("expected header `{expected}`, found `{tag}`"),
        ));
    }

    for (line_no, line) in lines {
        if let Some(meta) = line.strip_prefix('#') {
            if !table.columns.is_empty() {
                return Err(table.error(line_no, "metadata after column header"));
            }
            let (k, v) = meta.split_once(' ').unwrap_or((meta, ""));
            table
                .meta
                .push((k.trim().to_string(), v.trim().to_string()));
            continue;
        }
        let cells: Vec<&str> = line.split('\t').map(str::trim).collect();
        if table.columns.is_empty() {
            table.columns = cells.iter().map(|c| c.to_string()).collect();
            continue;
        }
        let width_ok = if ragged {
            cells.len() >= table.columns.len()
        } else {
            cells.len() == table.columns.len()
        };
        if !width_ok {
            return Err(table.error(
                line_no,
                format!(
                    "expected {} fields, found {}",
                    table.columns.len(),
                    cells.len()
                ),
            ));
        }
        table.rows.push(Row {
            line: line_no,
            cells,
        });
    }
    Ok(table)
}

pub(crate) struct TableWriter {
    out: String,
}

impl TableWriter {
    pub fn new(kind: &str) -> Self {
        Self {
            out: format!("#docqa-{kind} {FORMAT_VERSION}\n"),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl AsRef<str>) -> &mut Self {
        self.out.push('#');
        self.out.push_str(key);
        self.out.push(' ');
        self.out.push_str(value.as_ref());
        self.out.push('\n');
        self
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: impl IntoIterator<Item = S>) -> &mut Self {
        let mut first = true;
        for cell in cells {
            if !first {
                self.out.push('\t');
            }
            first = false;
            self.out.push_str(cell.as_ref());
        }
        self.out.push('\n');
        self
    }

    pub fn finish(self) -> String {
        self.out
    }
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn fmt_list(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| fmt_f64(*v))
        .collect::<Vec<_>>()
        .join(",")
}

pub(crate) fn parse_list(text: &str) -> Option<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_header_meta_and_rows() {
        let text = "#docqa-x v1\n#levels 1,2,3\n\na\tb\n1\t2\n3\t4\n";
        let t = parse_table(text, "x", "mem", false).unwrap();
        assert_eq!(t.meta("levels"), Some("1,2,3"));
        assert_eq!(t.columns, vec!["a", "b"]);
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[1].line, 6);
    }

    #[test]
    fn rejects_bad_tag_and_width() {
        assert!(parse_table("#docqa-y v1\n", "x", "mem", false).is_err());
        assert!(parse_table("#docqa-x v2\n", "x", "mem", false).is_err());
        let err = parse_table("#docqa-x v1\na\tb\n1\n", "x", "mem", false)
            .err()
            .unwrap();
        assert!(err.to_string().contains("mem:3"), "{err}");
        assert!(parse_table("#docqa-x v1\na\n1\t2\t3\n", "x", "mem", true).is_ok());
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 4.2, -0.0, 123456789.123] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(parse_list("1, 2,3.5"), Some(vec![1.0, 2.0, 3.5]));
        assert_eq!(parse_list("1,x"), None);
    }
}
