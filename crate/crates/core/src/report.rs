//! Comparison tables built from score files: one row per horizon, variable
//! and metric, individual models on the left and combiners on the right.
//! Cells carry `*` / `**` when the DM test against the baseline rejects at
//! 5% / 1%.

use std::fmt::Write as _;
use std::path::Path;

use crate::combine::MethodKind;
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::metrics::{DmResult, ScoreReport, ScoreRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Rmsfe,
    Ls,
    Crps,
    LsJoint,
}

impl Metric {
    pub fn label(self) -> &'static str {
        match self {
            Metric::Rmsfe => "RMSFE",
            Metric::Ls => "LS",
            Metric::Crps => "CRPS",
            Metric::LsJoint => "LS joint",
        }
    }

    fn value(self, r: &ScoreRow) -> Option<f64> {
        match self {
            Metric::Rmsfe => Some(r.rmsfe),
            Metric::Ls => Some(r.ls),
            Metric::Crps => Some(r.crps),
            Metric::LsJoint => r.ls_joint,
        }
    }

    fn dm(self, r: &ScoreRow) -> Option<&DmResult> {
        let dm = r.dm.as_ref()?;
        match self {
            Metric::Rmsfe => Some(&dm.squared_error),
            Metric::Ls => Some(&dm.log_score),
            Metric::Crps => Some(&dm.crps),
            Metric::LsJoint => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub value: f64,
    pub p_value: Option<f64>,
}

impl Cell {
    pub fn stars(&self) -> &'static str {
        match self.p_value {
            Some(p) if p < 0.01 => "**",
            Some(p) if p < 0.05 => "*",
            _ => "",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub horizon: usize,
    pub variable: String,
    pub metric: Metric,
    pub cells: Vec<Option<Cell>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonTable {
    /// Column labels with their kind; models precede combiners.
    pub columns: Vec<(String, MethodKind)>,
    pub rows: Vec<TableRow>,
}

struct Source<'a> {
    label: String,
    kind: MethodKind,
    rows: Vec<&'a ScoreRow>,
}

/// Merges several reports. A method present in more than one report gets
/// one column per report, labelled `report:method`.
pub fn comparison_table(reports: &[(String, ScoreReport)]) -> Result<ComparisonTable> {
    let mut sources: Vec<(usize, String, MethodKind)> = Vec::new();
    for (i, (_, rep)) in reports.iter().enumerate() {
        for r in &rep.rows {
            if !sources.iter().any(|(j, m, _)| *j == i && m == &r.method) {
                sources.push((i, r.method.clone(), r.kind));
            }
        }
    }
    if sources.is_empty() {
        return Err(Error::InvalidInput("no score rows to report".into()));
    }
    let mut columns: Vec<Source> = sources
        .iter()
        .map(|(i, m, kind)| {
            let clash = sources.iter().filter(|(_, n, _)| n == m).count() > 1;
            Source {
                label: if clash { format!("{}:{m}", reports[*i].0) } else { m.clone() },
                kind: *kind,
                rows: reports[*i].1.rows.iter().filter(|r| &r.method == m).collect(),
            }
        })
        .collect();
    columns.sort_by_key(|c| c.kind == MethodKind::Combiner);

    let mut keys: Vec<(usize, String)> = Vec::new();
    for (_, rep) in reports {
        for r in &rep.rows {
            let k = (r.horizon, r.variable.clone());
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
    }
    keys.sort_by_key(|k| k.0);

    let mut rows = Vec::new();
    for (h, var) in keys {
        for metric in [Metric::Rmsfe, Metric::Ls, Metric::Crps, Metric::LsJoint] {
            let cells: Vec<Option<Cell>> = columns
                .iter()
                .map(|c| {
                    let r = c.rows.iter().find(|r| r.horizon == h && r.variable == var)?;
                    Some(Cell {
                        value: metric.value(r)?,
                        p_value: metric.dm(r).map(|d| d.p_value),
                    })
                })
                .collect();
            if cells.iter().any(Option::is_some) {
                rows.push(TableRow {
                    horizon: h,
                    variable: var.clone(),
                    metric,
                    cells,
                });
            }
        }
    }
    Ok(ComparisonTable {
        columns: columns.into_iter().map(|c| (c.label, c.kind)).collect(),
        rows,
    })
}

impl ComparisonTable {
    /// Fixed-width text rendering with a `|` between models and combiners.
    pub fn to_text(&self) -> String {
        let split = self.columns.iter().position(|c| c.1 == MethodKind::Combiner);
        let mut head = vec!["h".to_string(), "variable".to_string(), "metric".to_string()];
        head.extend(self.columns.iter().map(|c| c.0.clone()));
        let mut grid = vec![head];
        for r in &self.rows {
            let mut line = vec![r.horizon.to_string(), r.variable.clone(), r.metric.label().to_string()];
            line.extend(r.cells.iter().map(|c| match c {
                Some(c) => format!("{:.4}{}", c.value, c.stars()),
                None => "-".into(),
            }));
            grid.push(line);
        }
        let widths: Vec<usize> = (0..grid[0].len()).map(|j| grid.iter().map(|l| l[j].len()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for line in &grid {
            for (j, cell) in line.iter().enumerate() {
                if j > 0 {
                    out.push_str(if split.is_some_and(|s| s > 0 && j == s + 3) { " | " } else { "  " });
                }
                let _ = write!(out, "{cell:>w$}", w = widths[j]);
            }
            out.push('\n');
        }
        out
    }

    /// Long CSV with one line per cell.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = String::from("horizon,variable,metric,method,kind,value,dm_p\n");
        for r in &self.rows {
            for (c, (label, kind)) in r.cells.iter().zip(&self.columns) {
                if let Some(c) = c {
                    let _ = writeln!(
                        text,
                        "{},{},{},{},{},{},{}",
                        r.horizon,
                        r.variable,
                        r.metric.label(),
                        label,
                        kind.label(),
                        fmt_f64(c.value),
                        c.p_value.map(fmt_f64).unwrap_or_default()
                    );
                }
            }
        }
        crate::io::write_text(path, &text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::DmAnnotation;

    fn row(method: &str, kind: MethodKind, rmsfe: f64, p: Option<f64>) -> ScoreRow {
        let dm = p.map(|p| {
            let r = DmResult {
                statistic: 1.0,
                p_value: p,
                degenerate: false,
            };
            DmAnnotation {
                baseline: "equal".into(),
                squared_error: r,
                log_score: r,
                crps: r,
            }
        });
        ScoreRow {
            method: method.into(),
            kind,
            horizon: 1,
            variable: "y".into(),
            n: 50,
            rmsfe,
            ls: 0.0,
            crps: 0.0,
            ls_joint: None,
            dm,
        }
    }

    #[test]
    fn models_left_combiners_right() {
        let a = ScoreReport {
            rows: vec![row("dtvw", MethodKind::Combiner, 0.1, Some(0.004)), row("M1", MethodKind::Model, 0.2, None)],
        };
        let b = ScoreReport {
            rows: vec![row("bma", MethodKind::Combiner, 0.3, Some(0.03)), row("M2", MethodKind::Model, 0.4, None)],
        };
        let t = comparison_table(&[("a".into(), a), ("b".into(), b)]).unwrap();
        let labels: Vec<&str> = t.columns.iter().map(|c| c.0.as_str()).collect();
        assert_eq!(labels, ["M1", "M2", "dtvw", "bma"]);
        let rmsfe = &t.rows[0];
        assert_eq!(rmsfe.metric, Metric::Rmsfe);
        assert_eq!(rmsfe.cells[2].as_ref().unwrap().stars(), "**");
        assert_eq!(rmsfe.cells[3].as_ref().unwrap().stars(), "*");
        assert!(t.to_text().contains(" | "));
    }

    #[test]
    fn clashing_methods_get_prefixed() {
        let a = ScoreReport {
            rows: vec![row("dtvw", MethodKind::Combiner, 0.1, None)],
        };
        let t = comparison_table(&[("run1".into(), a.clone()), ("run2".into(), a)]).unwrap();
        let labels: Vec<&str> = t.columns.iter().map(|c| c.0.as_str()).collect();
        assert_eq!(labels, ["run1:dtvw", "run2:dtvw"]);
    }
}
