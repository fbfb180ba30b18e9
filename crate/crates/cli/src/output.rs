use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub fn conventions() -> Value {
    json!({
        "units": "hbar = 1, 2m = 1, kinetic term -d^2/dx^2",
        "angles": "radians; channel angles enter through tan(alpha/2), sweep parameter s = alpha1/2",
        "boundary_condition": "phi - i*dphi = U (phi + i*dphi), dphi the outward normal derivative (-Phi'(0), +Phi'(L))",
        "ordering": "level-major: boundary index = level * n_points + point",
        "half_line_sign": "channel angle alpha is realized by U = exp(-i*alpha); bound state exp(-tan(alpha/2) x) exists iff tan(alpha/2) > 0",
        "rotor_levels": "level 0 = spin up (+mu), level 1 = spin down (-mu)",
        "entropy": "von Neumann entropy of the level reduced density, natural log",
    })
}

/// A finished result, renderable in either format.
pub struct Report {
    pub config: Value,
    pub json: Value,
    pub table: Table,
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Float)
    }
}

/// 17 significant digits.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let doc = json!({
                    "meta": {"version": VERSION, "conventions": conventions(), "config": self.config},
                    "result": self.json,
                });
                let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut s = String::new();
                writeln!(s, "# bext {VERSION}").unwrap();
                let conv = conventions();
                for (key, value) in conv.as_object().expect("object") {
                    writeln!(s, "# {key}: {}", value.as_str().unwrap_or_default()).unwrap();
                }
                writeln!(s, "# config: {}", self.config).unwrap();
                writeln!(s, "{}", self.table.header.join(",")).unwrap();
                for row in &self.table.rows {
                    let cells: Vec<String> = row
                        .iter()
                        .map(|c| match c {
                            Cell::Float(x) => float(*x),
                            Cell::Int(i) => i.to_string(),
                            Cell::Text(t) => t.clone(),
                            Cell::Empty => String::new(),
                        })
                        .collect();
                    writeln!(s, "{}", cells.join(",")).unwrap();
                }
                s
            }
        }
    }
}

pub fn emit(text: &str, path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}
