//! Output tables in the three supported formats.

use std::fmt::Write as _;

use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Aligned human-readable tables.
    Table,
    Csv,
    /// One JSON object per row.
    JsonLines,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(u64),
    /// A real shown with the given number of decimals in tables.
    Real(f64, usize),
    Empty,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    fn display(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::Real(v, places) => format!("{v:.places$}"),
            Cell::Empty => "-".into(),
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::Real(v, _) => v.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Int(v) => Value::from(*v),
            Cell::Real(v, _) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| (*c).to_owned()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// A two-column key/value table.
    pub fn pairs(name: impl Into<String>, pairs: Vec<(&str, Cell)>) -> Self {
        let mut t = Table::new(name, &["field", "value"]);
        for (k, v) in pairs {
            t.push(vec![Cell::text(k), v]);
        }
        t
    }
}

/// A resolved setting printed ahead of every report.
#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub key: String,
    pub value: String,
    pub source: &'static str,
}

pub fn render(command: &str, settings: &[Setting], tables: &[Table], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Table | Format::Csv => {
            let _ = writeln!(out, "# emg-affect {command}");
            for s in settings {
                let _ = writeln!(out, "# {} = {} ({})", s.key, s.value, s.source);
            }
            for t in tables {
                out.push('\n');
                if format == Format::Table {
                    render_table(&mut out, t);
                } else {
                    render_csv(&mut out, t);
                }
            }
        }
        Format::JsonLines => {
            let mut config = Map::new();
            for s in settings {
                config.insert(s.key.clone(), serde_json::json!({"value": s.value, "source": s.source}));
            }
            let header = serde_json::json!({"command": command, "config": config});
            let _ = writeln!(out, "{header}");
            for t in tables {
                for row in &t.rows {
                    let mut obj = Map::new();
                    obj.insert("table".into(), Value::String(t.name.clone()));
                    for (c, cell) in t.columns.iter().zip(row) {
                        obj.insert(c.clone(), cell.json());
                    }
                    let _ = writeln!(out, "{}", Value::Object(obj));
                }
            }
        }
    }
    out
}

fn render_table(out: &mut String, t: &Table) {
    let cells: Vec<Vec<String>> = t.rows.iter().map(|r| r.iter().map(Cell::display).collect()).collect();
    let widths: Vec<usize> = (0..t.columns.len())
        .map(|c| cells.iter().map(|r| r[c].chars().count()).chain([t.columns[c].chars().count()]).max().unwrap_or(0))
        .collect();
    let numeric: Vec<bool> = (0..t.columns.len())
        .map(|c| {
            !t.rows.is_empty() && t.rows.iter().all(|r| matches!(r[c], Cell::Int(_) | Cell::Real(..) | Cell::Empty))
        })
        .collect();
    let line = |out: &mut String, row: &[String]| {
        let parts: Vec<String> = row
            .iter()
            .enumerate()
            .map(
                |(c, s)| {
                    if numeric[c] {
                        format!("{s:>w$}", w = widths[c])
                    } else {
                        format!("{s:<w$}", w = widths[c])
                    }
                },
            )
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    let _ = writeln!(out, "{}", t.name);
    line(out, &t.columns);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let _ = writeln!(out, "{}", rule.join("  "));
    for row in &cells {
        line(out, row);
    }
}

fn render_csv(out: &mut String, t: &Table) {
    let _ = writeln!(out, "# {}", t.name);
    let _ = writeln!(out, "{}", t.columns.join(","));
    for row in &t.rows {
        let _ = writeln!(out, "{}", row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("metrics", &["metric", "value"]);
        t.push(vec!["Accuracy".into(), Cell::Real(0.930625, 4)]);
        t.push(vec!["F1, macro".into(), Cell::Empty]);
        t
    }

    #[test]
    fn formats() {
        let settings = [Setting { key: "seed".into(), value: "42".into(), source: "default" }];
        let table = render("eval", &settings, &[sample()], Format::Table);
        assert!(table.starts_with("# emg-affect eval\n# seed = 42 (default)\n"));
        assert!(table.contains("Accuracy   0.9306\n"));
        let csv = render("eval", &settings, &[sample()], Format::Csv);
        assert!(csv.contains("Accuracy,0.930625\n\"F1, macro\",\n"));
        let json = render("eval", &settings, &[sample()], Format::JsonLines);
        let lines: Vec<Value> = json.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0]["config"]["seed"]["value"], "42");
        assert_eq!(lines[1]["value"], 0.930625);
        assert_eq!(lines[2]["value"], Value::Null);
    }
}
