//! Versioned CSV tables.
//!
//! Every table starts with a `# schema: <name>/v<k>` comment line followed
//! by the CSV header. Optional `# key: value` comment lines after the schema
//! line carry metadata (observation `n`, seed, layout). Numbers are written
//! in Rust's shortest round-trip form, so identical inputs give
//! byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::FieldLayout;
use crate::model_likelihoods::{ClassificationData, DensityData};
use crate::sequence_models::SequenceObservation;

/// Known table schemas: name and columns.
pub mod schema {
    pub const OBSERVATION: (&str, &[&str]) = ("observation/v1", &["level", "index", "kappa", "x"]);
    pub const COEFFICIENTS: (&str, &[&str]) =
        ("coefficients/v1", &["level", "index", "truth", "x", "mean", "sd", "lo", "hi"]);
    pub const FUNCTION_BAND: (&str, &[&str]) = ("function_band/v1", &["series", "x", "truth", "mean", "lo", "hi"]);
    pub const FIG1: (&str, &[&str]) = ("fig1/v1", &["series", "tail", "sigma", "x", "mean", "sd", "lo", "hi", "conjugate"]);
    pub const ERRORS: (&str, &[&str]) = ("errors/v1", &["prior", "n", "rho", "method", "metric", "error", "acceptance"]);
    pub const DJ94: (&str, &[&str]) =
        ("dj94_errors/v1", &["signal", "prior", "l2_error", "reference", "acceptance", "snr"]);
    /// `x = ln n`, `mean = ln error`, `lo`/`hi = ln(error -+ 2 se)` for log-log plots.
    pub const RATE: (&str, &[&str]) =
        ("rate_sweep/v1", &["series", "n", "error", "se", "x", "mean", "lo", "hi"]);
    pub const PRIOR_MASS: (&str, &[&str]) = (
        "prior_mass/v1",
        &["n", "eps_n", "radius", "hits", "n_mc", "p_hat", "ci_lo", "ci_hi", "normalized_log_mass"],
    );
    pub const DENSITY_DATA: (&str, &[&str]) = ("density_data/v1", &["x"]);
    pub const CLASSIFICATION_DATA: (&str, &[&str]) = ("classification_data/v1", &["x", "y"]);
}

/// A table of string cells with a schema name, metadata and named columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub schema: String,
    pub meta: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest round-trip text for a float.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

impl Table {
    pub fn new(schema: (&str, &[&str])) -> Self {
        Self {
            schema: schema.0.to_string(),
            meta: BTreeMap::new(),
            columns: schema.1.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Schema(name.to_string()))
    }

    /// Numeric column; empty cells read as NaN.
    pub fn numeric(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.column_index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let cell = r[j].trim();
                if cell.is_empty() {
                    return Ok(f64::NAN);
                }
                cell.parse::<f64>()
                    .map_err(|_| Error::domain(format!("row {i}, column `{name}`: `{cell}` is not a number")))
            })
            .collect()
    }

    pub fn text(&self, name: &str) -> Result<Vec<String>> {
        let j = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[j].clone()).collect())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        writeln!(out, "# schema: {}", self.schema)?;
        for (k, v) in &self.meta {
            writeln!(out, "# {k}: {v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    /// Read a table; the schema line is optional so hand-written CSVs load too.
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut schema = String::new();
        let mut meta = BTreeMap::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            if let Some((k, v)) = line.trim_start_matches('#').split_once(':') {
                let (k, v) = (k.trim(), v.trim());
                if k == "schema" {
                    schema = v.to_string();
                } else {
                    meta.insert(k.to_string(), v.to_string());
                }
            }
        }
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let columns = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(|s| s.to_string()).collect()))
            .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
        Ok(Self {
            schema,
            meta,
            columns,
            rows,
        })
    }
}

fn layout_text(layout: FieldLayout) -> String {
    match layout {
        FieldLayout::Single => "single".into(),
        FieldLayout::Wavelet { coarse_level } => format!("wavelet:{coarse_level}"),
    }
}

fn parse_layout(s: &str) -> Result<FieldLayout> {
    match s.split_once(':') {
        None if s == "single" => Ok(FieldLayout::Single),
        Some(("wavelet", j)) => Ok(FieldLayout::Wavelet {
            coarse_level: j.parse().map_err(|_| Error::domain(format!("bad coarse level in `{s}`")))?,
        }),
        _ => Err(Error::domain(format!("unknown layout `{s}`"))),
    }
}

/// `(level, index)` cells: empty level and 1-based index for the single
/// layout, `(l, k)` for wavelet fields.
fn level_cells(layout: FieldLayout, i: usize) -> (String, String) {
    match layout {
        FieldLayout::Single => (String::new(), (i + 1).to_string()),
        FieldLayout::Wavelet { .. } => {
            let (l, k) = layout.level_index(i);
            (l.to_string(), k.to_string())
        }
    }
}

pub fn observation_table(obs: &SequenceObservation) -> Table {
    let mut t = Table::new(schema::OBSERVATION);
    t.meta.insert("n".into(), fmt_f64(obs.n));
    t.meta.insert("layout".into(), layout_text(obs.layout));
    if let Some(s) = obs.seed {
        t.meta.insert("seed".into(), s.to_string());
    }
    for i in 0..obs.len() {
        let (level, index) = level_cells(obs.layout, i);
        let kappa = if obs.forward.is_some() {
            fmt_f64(obs.kappa(i))
        } else {
            String::new()
        };
        t.push(vec![level, index, kappa, fmt_f64(obs.x[i])]);
    }
    t
}

pub fn write_observation_csv(path: &Path, obs: &SequenceObservation) -> Result<()> {
    observation_table(obs).write(path)
}

pub fn read_observation_csv(path: &Path) -> Result<SequenceObservation> {
    let t = Table::read(path)?;
    let n = t
        .meta
        .get("n")
        .ok_or_else(|| Error::domain("observation file lacks an `n` header"))?
        .parse::<f64>()
        .map_err(|_| Error::domain("bad `n` header"))?;
    let layout = parse_layout(t.meta.get("layout").map(String::as_str).unwrap_or("single"))?;
    let seed = t.meta.get("seed").and_then(|s| s.parse().ok());
    let x = t.numeric("x")?;
    let kappa = t.numeric("kappa")?;
    let forward = if kappa.iter().all(|k| k.is_nan()) { None } else { Some(kappa) };
    let obs = SequenceObservation {
        x,
        n,
        forward,
        layout,
        seed,
    };
    obs.validate()?;
    Ok(obs)
}

pub fn density_data_table(data: &DensityData) -> Table {
    let mut t = Table::new(schema::DENSITY_DATA);
    for x in data.samples() {
        t.push(vec![fmt_f64(*x)]);
    }
    t
}

pub fn read_density_csv(path: &Path) -> Result<DensityData> {
    DensityData::new(Table::read(path)?.numeric("x")?)
}

pub fn classification_data_table(data: &ClassificationData) -> Table {
    let mut t = Table::new(schema::CLASSIFICATION_DATA);
    for (x, y) in data.x().iter().zip(data.y()) {
        t.push(vec![fmt_f64(*x), y.to_string()]);
    }
    t
}

pub fn read_classification_csv(path: &Path) -> Result<ClassificationData> {
    let t = Table::read(path)?;
    let x = t.numeric("x")?;
    let y = t
        .numeric("y")?
        .into_iter()
        .map(|v| match v {
            v if v == 0.0 => Ok(0u8),
            v if v == 1.0 => Ok(1u8),
            v => Err(Error::domain(format!("label {v} is not binary"))),
        })
        .collect::<Result<Vec<_>>>()?;
    ClassificationData::new(x, y)
}

/// Wide draw archive: one row per kept draw, columns `draw, c1..cd`.
pub fn draws_table(dim: usize, draws: impl Iterator<Item = Vec<f64>>) -> Table {
    let mut columns = vec!["draw".to_string()];
    columns.extend((1..=dim).map(|j| format!("c{j}")));
    let mut t = Table {
        schema: "draws/v1".into(),
        meta: BTreeMap::new(),
        columns,
        rows: Vec::new(),
    };
    for (i, d) in draws.enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(d.iter().map(|v| fmt_f64(*v)));
        t.push(row);
    }
    t
}

pub fn coefficient_row_cells(layout: FieldLayout, i: usize) -> (String, String) {
    level_cells(layout, i)
}
