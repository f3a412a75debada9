//! Two-column point tables (with an optional `sigma` column on input), the
//! data format of the non-spectral fits and of `g2`/`strain` output.

use std::collections::BTreeMap;

use serde_json::{json, Value};
use siv_core::ensemble::format_number;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub x_name: String,
    pub y_name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
    meta: BTreeMap<String, String>,
}

impl Table {
    pub fn new(x_name: &str, y_name: &str, x: Vec<f64>, y: Vec<f64>) -> Self {
        Self { x_name: x_name.into(), y_name: y_name.into(), x, y, sigma: None, meta: BTreeMap::new() }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<String>) {
        self.meta.insert(key.into(), value.into());
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.x.iter().copied().zip(self.y.iter().copied()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{},{}\n", self.x_name, self.y_name);
        for (x, y) in self.x.iter().zip(&self.y) {
            s.push_str(&format!("{},{}\n", format_number(*x), format_number(*y)));
        }
        s
    }

    pub fn to_json(&self) -> String {
        let v: Value = json!({
            self.x_name.clone(): self.x,
            self.y_name.clone(): self.y,
            "meta": self.meta,
        });
        let mut s = serde_json::to_string_pretty(&v).expect("table serializes");
        s.push('\n');
        s
    }

    /// Parses CSV whose header must be `x_name,y_name` or
    /// `x_name,y_name,sigma`.
    pub fn from_csv(text: &str, x_name: &str, y_name: &str) -> Result<Self, String> {
        let expected = format!("{x_name},{y_name}");
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or("empty input; expected a header row")?;
        let cols: Vec<&str> = header.trim().trim_start_matches('\u{feff}').split(',').map(str::trim).collect();
        let with_sigma = match cols.as_slice() {
            [a, b] if *a == x_name && *b == y_name => false,
            [a, b, "sigma"] if *a == x_name && *b == y_name => true,
            _ => {
                return Err(format!(
                    "columns [{}] do not match the expected schema '{expected}' (optionally followed by ',sigma')",
                    cols.join(", ")
                ))
            }
        };
        let ncol = if with_sigma { 3 } else { 2 };
        let mut t = Table::new(x_name, y_name, Vec::new(), Vec::new());
        let mut sig = Vec::new();
        for (n, line) in lines {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != ncol {
                return Err(format!("line {}: expected {ncol} columns, found {}", n + 1, f.len()));
            }
            let parse = |i: usize| {
                f[i].parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| format!("line {}: column {}: cannot parse '{}'", n + 1, cols[i], f[i]))
            };
            t.x.push(parse(0)?);
            t.y.push(parse(1)?);
            if with_sigma {
                sig.push(parse(2)?);
            }
        }
        if t.x.is_empty() {
            return Err("no data rows".into());
        }
        if with_sigma {
            t.sigma = Some(sig);
        }
        Ok(t)
    }
}
