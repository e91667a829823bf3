//! Plain-text numeric tables (`#` comments, whitespace- or comma-separated
//! columns) and linear interpolation on them.

use std::path::Path;

use crate::error::{Error, Result};

/// Rows of numeric columns with a strictly increasing first column.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    rows: Vec<Vec<f64>>,
    columns: usize,
}

impl Table {
    pub fn parse(text: &str, min_columns: usize, source: &str) -> Result<Self> {
        let err = |message: String| Error::Table {
            path: source.to_string(),
            message,
        };
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut columns = 0;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|f| !f.is_empty())
                .collect();
            // tolerate a header row of column names
            if rows.is_empty() && fields.iter().any(|f| f.parse::<f64>().is_err()) {
                continue;
            }
            let row = fields
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| err(format!("line {}: bad number {f:?}", lineno + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            if row.len() < min_columns {
                return Err(err(format!(
                    "line {}: expected at least {min_columns} columns, got {}",
                    lineno + 1,
                    row.len()
                )));
            }
            if columns == 0 {
                columns = row.len();
            } else if row.len() != columns {
                return Err(err(format!("line {}: ragged row", lineno + 1)));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(err(format!("line {}: non-finite value", lineno + 1)));
            }
            if let Some(prev) = rows.last() {
                if row[0] <= prev[0] {
                    return Err(err(format!(
                        "line {}: first column must be strictly increasing",
                        lineno + 1
                    )));
                }
            }
            rows.push(row);
        }
        if rows.len() < 2 {
            return Err(err("need at least two rows".into()));
        }
        Ok(Self { rows, columns })
    }

    pub fn load(path: &Path, min_columns: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, min_columns, &path.display().to_string())
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let text = rows
            .iter()
            .map(|r| r.iter().map(|v| format!("{v:.17e}")).collect::<Vec<_>>().join(" "))
            .collect::<Vec<_>>()
            .join("\n");
        Self::parse(&text, 2, "<memory>")
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn first(&self) -> f64 {
        self.rows[0][0]
    }

    pub fn last(&self) -> f64 {
        self.rows[self.rows.len() - 1][0]
    }

    /// Linear interpolation of column `col` at abscissa `x`; `outside` is
    /// returned beyond the tabulated range.
    pub fn interpolate(&self, col: usize, x: f64, outside: f64) -> f64 {
        if x < self.first() || x > self.last() {
            return outside;
        }
        let idx = self.rows.partition_point(|r| r[0] <= x);
        if idx == 0 {
            return self.rows[0][col];
        }
        if idx >= self.rows.len() {
            return self.rows[self.rows.len() - 1][col];
        }
        let (a, b) = (&self.rows[idx - 1], &self.rows[idx]);
        let f = (x - a[0]) / (b[0] - a[0]);
        a[col] + f * (b[col] - a[col])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_headers_and_commas() {
        let t = Table::parse("# c\nt,w\n0, 0\n0.5 1 # mid\n1,0\n", 2, "x").unwrap();
        assert_eq!(t.rows().len(), 3);
        assert_eq!(t.interpolate(1, 0.25, -1.0), 0.5);
        assert_eq!(t.interpolate(1, 0.5, -1.0), 1.0);
        assert_eq!(t.interpolate(1, 1.0, -1.0), 0.0);
        assert_eq!(t.interpolate(1, 1.5, -1.0), -1.0);
    }

    #[test]
    fn rejects_unsorted_and_short() {
        assert!(Table::parse("0 1\n0 2\n", 2, "x").is_err());
        assert!(Table::parse("0 1\n", 2, "x").is_err());
        assert!(Table::parse("0\n1\n", 2, "x").is_err());
        assert!(Table::parse("0 1\n1 nan\n", 2, "x").is_err());
    }
}
