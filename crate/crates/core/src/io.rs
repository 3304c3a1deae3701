//! Tidy CSV readers and writers for observations, predictor panels and
//! experiment outputs. Indices in files are 1-based.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use csv::StringRecord;

use crate::combine::{CombinerResult, HorizonForecast, MethodKind};
use crate::error::{Error, Result};
use crate::metrics::{DmAnnotation, DmResult, MethodForecasts, ScoreReport, ScoreRow};
use crate::tune::GridResult;
use crate::types::{ObservationSeries, PredictorPanel};

pub const OBSERVATION_HEADER: [&str; 3] = ["t", "variable", "value"];
pub const PANEL_HEADER: [&str; 6] = ["t", "model", "variable", "horizon", "draw", "value"];
pub const SCORE_HEADER: [&str; 17] = [
    "method",
    "kind",
    "horizon",
    "variable",
    "n",
    "rmsfe",
    "ls",
    "crps",
    "ls_joint",
    "dm_baseline",
    "dm_se_stat",
    "dm_se_p",
    "dm_ls_stat",
    "dm_ls_p",
    "dm_crps_stat",
    "dm_crps_p",
    "dm_degenerate",
];
pub const FORECAST_HEADER: [&str; 12] = [
    "method",
    "kind",
    "t",
    "horizon",
    "target",
    "variable",
    "point",
    "lower",
    "median",
    "upper",
    "log_predictive",
    "log_predictive_joint",
];
pub const DRAWS_HEADER: [&str; 6] = ["method", "t", "horizon", "variable", "draw", "value"];

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// A CSV reader that reports errors with file line numbers.
struct TidyReader {
    path: PathBuf,
    inner: csv::Reader<File>,
    width: usize,
    allow_empty: bool,
}

struct Row {
    line: usize,
    record: StringRecord,
}

impl TidyReader {
    fn open(path: &Path, header: &[&str]) -> Result<Self> {
        Self::open_with(path, header, false)
    }

    /// Like `open`, but empty cells pass through as optional values.
    fn open_sparse(path: &Path, header: &[&str]) -> Result<Self> {
        Self::open_with(path, header, true)
    }

    fn open_with(path: &Path, header: &[&str], allow_empty: bool) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut inner = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(file);
        let found: Vec<String> = inner.headers()?.iter().map(str::to_owned).collect();
        if found != header {
            return Err(Error::Parse {
                path: path.into(),
                row: 1,
                msg: format!("expected header `{}`, found `{}`", header.join(","), found.join(",")),
            });
        }
        Ok(TidyReader {
            path: path.into(),
            inner,
            width: header.len(),
            allow_empty,
        })
    }

    fn rows(&mut self) -> Result<Vec<Row>> {
        let mut out = Vec::new();
        for rec in self.inner.records() {
            let record = rec?;
            let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
            if record.len() != self.width || (!self.allow_empty && record.iter().any(str::is_empty)) {
                return Err(Error::Parse {
                    path: self.path.clone(),
                    row: line,
                    msg: format!("missing cells: expected {} non-empty fields", self.width),
                });
            }
            out.push(Row { line, record });
        }
        Ok(out)
    }

    fn err(&self, row: &Row, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            row: row.line,
            msg: msg.into(),
        }
    }

    fn index(&self, row: &Row, col: usize, name: &str) -> Result<usize> {
        match row.record[col].parse::<usize>() {
            Ok(v) if v >= 1 => Ok(v),
            _ => Err(self.err(row, format!("{name} must be a positive integer, got `{}`", &row.record[col]))),
        }
    }

    fn float(&self, row: &Row, col: usize, name: &str) -> Result<f64> {
        match row.record[col].parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.err(row, format!("{name} must be a finite number, got `{}`", &row.record[col]))),
        }
    }

    fn opt_float(&self, row: &Row, col: usize, name: &str) -> Result<Option<f64>> {
        if row.record[col].is_empty() {
            Ok(None)
        } else {
            self.float(row, col, name).map(Some)
        }
    }
}

/// Assigns indices in order of first appearance.
#[derive(Default)]
struct Interner {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Interner {
    fn get(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), self.names.len() - 1);
        self.names.len() - 1
    }
}

/// Checks that the distinct values of `ts` are exactly `1..=max`, naming the
/// first row past a gap.
fn check_contiguous(reader: &TidyReader, rows: &[Row], ts: &[usize], what: &str) -> Result<usize> {
    let mut seen: Vec<usize> = ts.to_vec();
    seen.sort_unstable();
    seen.dedup();
    for (i, &v) in seen.iter().enumerate() {
        if v != i + 1 {
            let at = ts.iter().position(|&x| x == v).expect("value came from ts");
            return Err(reader.err(&rows[at], format!("{what} not contiguous from 1: {what}={v} follows {what}={i}")));
        }
    }
    Ok(seen.len())
}

fn create(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn finish(path: &Path, mut w: csv::Writer<BufWriter<File>>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_observations(path: impl AsRef<Path>) -> Result<ObservationSeries> {
    let path = path.as_ref();
    let mut reader = TidyReader::open(path, &OBSERVATION_HEADER)?;
    let rows = reader.rows()?;
    if rows.is_empty() {
        return Err(Error::Validation {
            path: path.into(),
            msg: "no observations".into(),
        });
    }
    let mut vars = Interner::default();
    let mut ts = Vec::with_capacity(rows.len());
    let mut cells: HashMap<(usize, usize), f64> = HashMap::new();
    for row in &rows {
        let t = reader.index(row, 0, "t")?;
        let l = vars.get(&row.record[1]);
        let v = reader.float(row, 2, "value")?;
        if cells.insert((t, l), v).is_some() {
            return Err(reader.err(row, format!("duplicate row for t={t}, variable={}", &row.record[1])));
        }
        ts.push(t);
    }
    let n_steps = check_contiguous(&reader, &rows, &ts, "t")?;
    let mut data = Vec::with_capacity(n_steps);
    for t in 1..=n_steps {
        let mut r = Vec::with_capacity(vars.names.len());
        for (l, name) in vars.names.iter().enumerate() {
            let v = cells.get(&(t, l)).ok_or_else(|| Error::Validation {
                path: path.into(),
                msg: format!("no value for t={t}, variable={name}"),
            })?;
            r.push(*v);
        }
        data.push(r);
    }
    ObservationSeries::new(data, vars.names)
}

pub fn write_observations(path: impl AsRef<Path>, obs: &ObservationSeries) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    w.write_record(OBSERVATION_HEADER)?;
    for t in 0..obs.len() {
        for (l, name) in obs.variable_names().iter().enumerate() {
            w.write_record([(t + 1).to_string(), name.clone(), fmt_f64(obs.get(t)[l])])?;
        }
    }
    finish(path, w)
}

/// At most this many offending cells are listed in a ragged-panel error.
const MAX_LISTED: usize = 20;

pub fn load_panel(path: impl AsRef<Path>) -> Result<PredictorPanel> {
    let path = path.as_ref();
    let mut reader = TidyReader::open(path, &PANEL_HEADER)?;
    let rows = reader.rows()?;
    if rows.is_empty() {
        return Err(Error::Validation {
            path: path.into(),
            msg: "empty panel".into(),
        });
    }
    let mut models = Interner::default();
    let mut vars = Interner::default();
    let mut ts = Vec::with_capacity(rows.len());
    let mut hs = Vec::with_capacity(rows.len());
    // (t, h, l, k) -> draw -> value
    let mut cells: BTreeMap<(usize, usize, usize, usize), BTreeMap<usize, f64>> = BTreeMap::new();
    for row in &rows {
        let t = reader.index(row, 0, "t")?;
        let k = models.get(&row.record[1]);
        let l = vars.get(&row.record[2]);
        let h = reader.index(row, 3, "horizon")?;
        let d = reader.index(row, 4, "draw")?;
        let v = reader.float(row, 5, "value")?;
        if cells.entry((t, h, l, k)).or_default().insert(d, v).is_some() {
            return Err(reader.err(
                row,
                format!(
                    "duplicate draw {d} for t={t}, model={}, variable={}, horizon={h}",
                    &row.record[1], &row.record[2]
                ),
            ));
        }
        ts.push(t);
        hs.push(h);
    }
    let n_steps = check_contiguous(&reader, &rows, &ts, "t")?;
    let horizons = check_contiguous(&reader, &rows, &hs, "horizon")?;
    let n_draws = cells.values().map(BTreeMap::len).max().unwrap_or(0);
    let (k_n, l_n) = (models.names.len(), vars.names.len());

    let mut offending = Vec::new();
    let mut data = Vec::with_capacity(n_steps * horizons * l_n * k_n * n_draws);
    for t in 1..=n_steps {
        for h in 1..=horizons {
            for l in 0..l_n {
                for k in 0..k_n {
                    let cell = cells.get(&(t, h, l, k));
                    let dense = cell.is_some_and(|c| c.len() == n_draws && c.keys().copied().eq(1..=n_draws));
                    if !dense {
                        offending.push(format!(
                            "(t={t}, model={}, variable={}, horizon={h}: {} of {n_draws} draws)",
                            models.names[k],
                            vars.names[l],
                            cell.map_or(0, BTreeMap::len)
                        ));
                        continue;
                    }
                    data.extend(cell.expect("dense cell").values());
                }
            }
        }
    }
    if !offending.is_empty() {
        let more = offending.len().saturating_sub(MAX_LISTED);
        let mut msg = format!("ragged draw counts in {} cells: ", offending.len());
        msg.push_str(&offending[..offending.len().min(MAX_LISTED)].join(", "));
        if more > 0 {
            msg.push_str(&format!(", and {more} more"));
        }
        return Err(Error::Validation { path: path.into(), msg });
    }
    PredictorPanel::from_raw(models.names, vars.names, n_steps, horizons, n_draws, data)
}

pub fn write_panel(path: impl AsRef<Path>, panel: &PredictorPanel) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    w.write_record(PANEL_HEADER)?;
    for t in 0..panel.n_steps() {
        for h in 1..=panel.horizons() {
            for (l, var) in panel.variable_names().iter().enumerate() {
                for (k, model) in panel.model_names().iter().enumerate() {
                    for (d, v) in panel.draws(t, k, l, h).iter().enumerate() {
                        w.write_record([
                            (t + 1).to_string(),
                            model.clone(),
                            var.clone(),
                            h.to_string(),
                            (d + 1).to_string(),
                            fmt_f64(*v),
                        ])?;
                    }
                }
            }
        }
    }
    finish(path, w)
}

fn dm_cells(dm: &Option<DmAnnotation>) -> Vec<String> {
    let Some(dm) = dm else {
        return vec![String::new(); 8];
    };
    let degenerate: Vec<&str> = [("se", &dm.squared_error), ("ls", &dm.log_score), ("crps", &dm.crps)]
        .into_iter()
        .filter(|(_, r)| r.degenerate)
        .map(|(n, _)| n)
        .collect();
    let mut out = vec![dm.baseline.clone()];
    for r in [&dm.squared_error, &dm.log_score, &dm.crps] {
        out.push(fmt_f64(r.statistic));
        out.push(fmt_f64(r.p_value));
    }
    out.push(degenerate.join(";"));
    out
}

pub fn write_scores(path: impl AsRef<Path>, report: &ScoreReport) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    w.write_record(SCORE_HEADER)?;
    for r in &report.rows {
        let mut rec = vec![
            r.method.clone(),
            r.kind.label().to_owned(),
            r.horizon.to_string(),
            r.variable.clone(),
            r.n.to_string(),
            fmt_f64(r.rmsfe),
            fmt_f64(r.ls),
            fmt_f64(r.crps),
            fmt_opt(r.ls_joint),
        ];
        rec.extend(dm_cells(&r.dm));
        w.write_record(&rec)?;
    }
    finish(path, w)
}

fn parse_kind(reader: &TidyReader, row: &Row, col: usize) -> Result<MethodKind> {
    match &row.record[col] {
        "model" => Ok(MethodKind::Model),
        "combiner" => Ok(MethodKind::Combiner),
        other => Err(reader.err(row, format!("kind must be `model` or `combiner`, got `{other}`"))),
    }
}

pub fn load_scores(path: impl AsRef<Path>) -> Result<ScoreReport> {
    let path = path.as_ref();
    let mut reader = TidyReader::open_sparse(path, &SCORE_HEADER)?;
    let mut rows = Vec::new();
    for row in reader.rows()? {
        let dm = if row.record[9].is_empty() {
            None
        } else {
            let degenerate: Vec<&str> = row.record[16].split(';').collect();
            let result = |stat: usize, name: &str| -> Result<DmResult> {
                Ok(DmResult {
                    statistic: reader.float(&row, stat, "dm statistic")?,
                    p_value: reader.float(&row, stat + 1, "dm p-value")?,
                    degenerate: degenerate.contains(&name),
                })
            };
            Some(DmAnnotation {
                baseline: row.record[9].to_owned(),
                squared_error: result(10, "se")?,
                log_score: result(12, "ls")?,
                crps: result(14, "crps")?,
            })
        };
        rows.push(ScoreRow {
            method: row.record[0].to_owned(),
            kind: parse_kind(&reader, &row, 1)?,
            horizon: reader.index(&row, 2, "horizon")?,
            variable: row.record[3].to_owned(),
            n: reader.index(&row, 4, "n")?,
            rmsfe: reader.float(&row, 5, "rmsfe")?,
            ls: reader.float(&row, 6, "ls")?,
            crps: reader.float(&row, 7, "crps")?,
            ls_joint: reader.opt_float(&row, 8, "ls_joint")?,
            dm,
        });
    }
    Ok(ScoreReport { rows })
}

/// Linear-interpolation quantile of an ascending sample.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Point forecasts, central band and median of the draws, and log
/// predictive densities where the target was observed.
pub fn write_forecasts(
    path: impl AsRef<Path>,
    results: &[CombinerResult],
    variables: &[String],
    band_level: f64,
) -> Result<()> {
    let path = path.as_ref();
    let tail = (1.0 - band_level) / 2.0;
    let mut w = create(path)?;
    w.write_record(FORECAST_HEADER)?;
    for r in results {
        for row in &r.rows {
            for f in &row.forecasts {
                for (l, var) in variables.iter().enumerate() {
                    let mut sorted = f.draws[l].clone();
                    sorted.sort_by(f64::total_cmp);
                    w.write_record([
                        r.method.clone(),
                        r.kind.label().to_owned(),
                        (row.t + 1).to_string(),
                        f.horizon.to_string(),
                        (f.target + 1).to_string(),
                        var.clone(),
                        fmt_f64(f.point[l]),
                        fmt_f64(quantile(&sorted, tail)),
                        fmt_f64(quantile(&sorted, 0.5)),
                        fmt_f64(quantile(&sorted, 1.0 - tail)),
                        fmt_opt(f.log_predictive_marginal.as_ref().map(|m| m[l])),
                        fmt_opt(f.log_predictive),
                    ])?;
                }
            }
        }
    }
    finish(path, w)
}

pub fn write_draws(path: impl AsRef<Path>, results: &[CombinerResult], variables: &[String]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    w.write_record(DRAWS_HEADER)?;
    for r in results {
        for row in &r.rows {
            for f in &row.forecasts {
                for (l, var) in variables.iter().enumerate() {
                    for (d, v) in f.draws[l].iter().enumerate() {
                        w.write_record([
                            r.method.clone(),
                            (row.t + 1).to_string(),
                            f.horizon.to_string(),
                            var.clone(),
                            (d + 1).to_string(),
                            fmt_f64(*v),
                        ])?;
                    }
                }
            }
        }
    }
    finish(path, w)
}

/// Forecasts of one method read back from `forecast.csv` and `draws.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedMethod {
    pub method: String,
    pub kind: MethodKind,
    pub forecasts: Vec<HorizonForecast>,
}

impl<'a> From<&'a LoadedMethod> for MethodForecasts<'a> {
    fn from(m: &'a LoadedMethod) -> Self {
        MethodForecasts {
            method: &m.method,
            kind: m.kind,
            forecasts: m.forecasts.iter().collect(),
        }
    }
}

/// Reads forecast and draw files, ordering variables as in `variables`.
pub fn load_forecasts(
    forecast_path: impl AsRef<Path>,
    draws_path: impl AsRef<Path>,
    variables: &[String],
) -> Result<Vec<LoadedMethod>> {
    let fpath = forecast_path.as_ref();
    let dpath = draws_path.as_ref();
    let l_n = variables.len();
    let var_index = |reader: &TidyReader, row: &Row, col: usize| -> Result<usize> {
        variables
            .iter()
            .position(|v| v == &row.record[col])
            .ok_or_else(|| reader.err(row, format!("unknown variable `{}`", &row.record[col])))
    };

    let mut methods = Interner::default();
    let mut kinds = Vec::new();
    // (method, t, h) -> forecast under construction
    let mut cells: BTreeMap<(usize, usize, usize), HorizonForecast> = BTreeMap::new();
    let mut order: Vec<(usize, usize, usize)> = Vec::new();

    let mut freader = TidyReader::open_sparse(fpath, &FORECAST_HEADER)?;
    for row in freader.rows()? {
        let m = methods.get(&row.record[0]);
        if m == kinds.len() {
            kinds.push(parse_kind(&freader, &row, 1)?);
        }
        let t = freader.index(&row, 2, "t")?;
        let h = freader.index(&row, 3, "horizon")?;
        let target = freader.index(&row, 4, "target")?;
        let l = var_index(&freader, &row, 5)?;
        let point = freader.float(&row, 6, "point")?;
        let lp = freader.opt_float(&row, 10, "log_predictive")?;
        let joint = freader.opt_float(&row, 11, "log_predictive_joint")?;
        let f = cells.entry((m, t, h)).or_insert_with(|| {
            order.push((m, t, h));
            HorizonForecast {
                horizon: h,
                target: target - 1,
                point: vec![f64::NAN; l_n],
                draws: vec![Vec::new(); l_n],
                log_predictive: joint,
                log_predictive_marginal: lp.map(|_| vec![f64::NAN; l_n]),
            }
        });
        f.point[l] = point;
        if let (Some(m), Some(v)) = (f.log_predictive_marginal.as_mut(), lp) {
            m[l] = v;
        }
    }

    let mut dreader = TidyReader::open(dpath, &DRAWS_HEADER)?;
    for row in dreader.rows()? {
        let m = *methods
            .index
            .get(&row.record[0])
            .ok_or_else(|| dreader.err(&row, format!("method `{}` not in forecast file", &row.record[0])))?;
        let t = dreader.index(&row, 1, "t")?;
        let h = dreader.index(&row, 2, "horizon")?;
        let l = var_index(&dreader, &row, 3)?;
        let d = dreader.index(&row, 4, "draw")?;
        let v = dreader.float(&row, 5, "value")?;
        let f = cells
            .get_mut(&(m, t, h))
            .ok_or_else(|| dreader.err(&row, format!("no forecast row for t={t}, horizon={h}")))?;
        if d != f.draws[l].len() + 1 {
            return Err(dreader.err(&row, format!("expected draw {}, got {d}", f.draws[l].len() + 1)));
        }
        f.draws[l].push(v);
    }

    let mut out: Vec<LoadedMethod> = methods
        .names
        .iter()
        .zip(&kinds)
        .map(|(name, &kind)| LoadedMethod {
            method: name.clone(),
            kind,
            forecasts: Vec::new(),
        })
        .collect();
    for key in order {
        let f = cells.remove(&key).expect("key recorded on insert");
        let incomplete = f.point.iter().any(|v| v.is_nan())
            || f.draws.iter().any(Vec::is_empty)
            || f.log_predictive_marginal.as_ref().is_some_and(|m| m.iter().any(|v| v.is_nan()));
        if incomplete {
            return Err(Error::Validation {
                path: fpath.into(),
                msg: format!(
                    "method {} at t={}, horizon={} lacks a variable row or its draws",
                    out[key.0].method, key.1, key.2
                ),
            });
        }
        out[key.0].forecasts.push(f);
    }
    Ok(out)
}

/// Mean weight and band per model and variable at each step.
pub fn write_weights(
    path: impl AsRef<Path>,
    results: &[CombinerResult],
    models: &[String],
    variables: &[String],
) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    w.write_record(["method", "t", "model", "variable", "weight", "lower", "upper"])?;
    for r in results.iter().filter(|r| r.kind == MethodKind::Combiner) {
        for row in &r.rows {
            for (l, var) in variables.iter().enumerate() {
                for (k, model) in models.iter().enumerate() {
                    w.write_record([
                        r.method.clone(),
                        (row.t + 1).to_string(),
                        model.clone(),
                        var.clone(),
                        fmt_f64(row.weights.get(k, l)),
                        fmt_f64(row.weight_lower.get(k, l)),
                        fmt_f64(row.weight_upper.get(k, l)),
                    ])?;
                }
            }
        }
    }
    finish(path, w)
}

pub fn write_alphas(path: impl AsRef<Path>, results: &[CombinerResult]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    w.write_record(["method", "t", "coefficient", "mean", "lower", "upper"])?;
    for r in results {
        for a in r.alphas.iter().flatten() {
            for i in 0..3 {
                w.write_record([
                    r.method.clone(),
                    (a.t + 1).to_string(),
                    format!("alpha{i}"),
                    fmt_f64(a.mean[i]),
                    fmt_f64(a.lower[i]),
                    fmt_f64(a.upper[i]),
                ])?;
            }
        }
    }
    finish(path, w)
}

/// Running sum over evaluation targets of `log p_method - log p_baseline`;
/// negative values favour the baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct CumulativeRow {
    pub method: String,
    pub baseline: String,
    pub horizon: usize,
    pub target: usize,
    pub value: f64,
}

pub fn write_cumls(path: impl AsRef<Path>, rows: &[CumulativeRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    w.write_record(["method", "baseline", "horizon", "target", "cum_log_score_diff"])?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.baseline.clone(),
            r.horizon.to_string(),
            (r.target + 1).to_string(),
            fmt_f64(r.value),
        ])?;
    }
    finish(path, w)
}

/// Objective surface of a grid search, one row per evaluated point.
pub fn write_surface(path: impl AsRef<Path>, result: &GridResult) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    w.write_record(["alpha1", "alpha2", "crps", "stage"])?;
    for p in &result.surface {
        w.write_record([fmt_f64(p.alpha[0]), fmt_f64(p.alpha[1]), fmt_f64(p.value), p.stage.to_string()])?;
    }
    finish(path, w)
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn observations_single_and_interleaved() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "t,variable,value\n1,y,0.5\n2,y,0.25\n3,y,-1\n");
        let obs = load_observations(&p).unwrap();
        assert_eq!((obs.len(), obs.n_vars()), (3, 1));
        assert_eq!(obs.get(2), &[-1.0]);

        let p = write(&dir, "b.csv", "t,variable,value\n1,b,1\n1,a,2\n2,a,4\n2,b,3\n");
        let obs = load_observations(&p).unwrap();
        assert_eq!(obs.variable_names(), &["b".to_string(), "a".to_string()]);
        assert_eq!(obs.get(1), &[3.0, 4.0]);
    }

    #[test]
    fn observation_errors_name_rows() {
        let dir = tempfile::tempdir().unwrap();
        let cases = [
            ("t,variable,value\n1,y,1\n1,y,2\n", 3, "duplicate"),
            ("t,variable,value\n1,y,1\n2,y,abc\n", 3, "finite number"),
            ("t,variable,value\n1,y,1\n2,y\n", 3, "missing"),
            ("t,variable,value\n1,y,1\n3,y,2\n", 3, "contiguous"),
            ("t,variable,value\n1,y,1\n2,y,\n", 3, "missing"),
        ];
        for (i, (body, row, needle)) in cases.iter().enumerate() {
            let p = write(&dir, &format!("c{i}.csv"), body);
            match load_observations(&p) {
                Err(Error::Parse { row: r, msg, .. }) => {
                    assert_eq!(r, *row, "{body}");
                    assert!(msg.contains(needle), "{msg}");
                }
                other => panic!("{body}: {other:?}"),
            }
        }
    }

    #[test]
    fn panel_small_and_ragged() {
        let dir = tempfile::tempdir().unwrap();
        let body = "t,model,variable,horizon,draw,value\n\
                    1,A,y,1,1,0.1\n1,B,y,1,1,0.2\n2,A,y,1,1,0.3\n2,B,y,1,1,0.4\n";
        let panel = load_panel(write(&dir, "p.csv", body)).unwrap();
        assert_eq!((panel.n_models(), panel.n_vars(), panel.horizons(), panel.n_draws(), panel.n_steps()), (2, 1, 1, 1, 2));
        assert_eq!(panel.draws(1, 1, 0, 1), &[0.4]);

        let body = "t,model,variable,horizon,draw,value\n\
                    1,A,y,1,1,0\n1,A,y,1,2,0\n1,B,y,1,1,0\n1,B,y,1,2,0\n\
                    2,A,y,1,1,0\n2,A,y,1,2,0\n2,B,y,1,1,0\n";
        let err = load_panel(write(&dir, "q.csv", body)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("t=2, model=B, variable=y, horizon=1"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn wrong_header_and_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "h.csv", "time,variable,value\n1,y,1\n");
        assert!(matches!(load_observations(&p), Err(Error::Parse { row: 1, .. })));
        let err = load_observations(dir.path().join("absent.csv")).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e21, f64::MIN_POSITIVE, 123456789.12345679] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn quantile_interpolates() {
        let s = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(quantile(&s, 0.5), 1.5);
        assert_eq!(quantile(&s, 0.0), 0.0);
        assert_eq!(quantile(&s, 1.0), 3.0);
    }
}
