use std::collections::HashMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::feature_space::FeatureMatrix;
use crate::ohlc::{FeatureVec, OhlcBar, RawBar};
use crate::ppca::{cumulative_contribution, variance_contribution, PseudoPcModel, ScoreBars};

pub const OHLC_HEADER: [&str; 6] = ["entity", "variable", "open", "high", "low", "close"];
pub const FEATURE_HEADER: [&str; 6] = ["entity", "variable", "y1", "y2", "y3", "y4"];
pub const EIGEN_HEADER: [&str; 4] = ["component", "eigenvalue", "vcr", "cvcr"];
pub const SCORES_HEADER: [&str; 6] = ["entity", "component", "open", "high", "low", "close"];

/// Formats with six significant digits, switching to exponent notation for
/// very large or very small magnitudes.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.trim_start_matches('-').trim_start_matches(['0', '.']).is_empty() {
            "0".to_string()
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    }
}

/// Long-format rows keyed by `(entity, variable)`, pivoted into a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Pivot<V> {
    pub entities: Vec<String>,
    pub variables: Vec<String>,
    /// `cells[i][j]` belongs to entity `i` and variable `j`.
    pub cells: Vec<Vec<V>>,
}

fn pivot<V: Copy>(path: &str, keyed: impl Iterator<Item = (String, String, V)>) -> Result<Pivot<V>> {
    let mut entities: Vec<String> = Vec::new();
    let mut variables: Vec<String> = Vec::new();
    let mut values: HashMap<(usize, usize), V> = HashMap::new();
    for (e, v, value) in keyed {
        let i = entities.iter().position(|x| *x == e).unwrap_or_else(|| {
            entities.push(e);
            entities.len() - 1
        });
        let j = variables.iter().position(|x| *x == v).unwrap_or_else(|| {
            variables.push(v);
            variables.len() - 1
        });
        values.insert((i, j), value);
    }
    let mut cells = Vec::with_capacity(entities.len());
    for (i, e) in entities.iter().enumerate() {
        let mut row = Vec::with_capacity(variables.len());
        for (j, v) in variables.iter().enumerate() {
            match values.get(&(i, j)) {
                Some(x) => row.push(*x),
                None => {
                    return Err(Error::RaggedPivot { path: path.to_string(), entity: e.clone(), variable: v.clone() })
                }
            }
        }
        cells.push(row);
    }
    Ok(Pivot { entities, variables, cells })
}

struct Rows {
    path: String,
    records: Vec<(usize, csv::StringRecord)>,
}

fn read_rows(path: &Path, expected: &[&str]) -> Result<Rows> {
    let mut text = String::new();
    fs::File::open(path).and_then(|mut f| f.read_to_string(&mut text)).map_err(|e| Error::io(path, e))?;
    parse_rows(&path.display().to_string(), &text, expected)
}

fn parse_rows(path: &str, text: &str, expected: &[&str]) -> Result<Rows> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).flexible(true).from_reader(text.as_bytes());
    let mut iter = reader.records();
    let missing = || Error::MissingHeader { path: path.to_string(), expected: expected.join(",") };
    let header = match iter.next() {
        Some(Ok(h)) => h,
        Some(Err(_)) | None => return Err(missing()),
    };
    let header_ok = header.len() == expected.len()
        && header.iter().zip(expected).all(|(a, b)| a.trim_start_matches('\u{feff}') == *b);
    if !header_ok {
        return Err(missing());
    }
    let mut records = Vec::new();
    for rec in iter {
        let rec = rec.map_err(|e| Error::Csv {
            path: path.to_string(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != expected.len() {
            return Err(Error::Csv {
                path: path.to_string(),
                line,
                message: format!("expected {} fields, found {}", expected.len(), rec.len()),
            });
        }
        records.push((line, rec));
    }
    Ok(Rows { path: path.to_string(), records })
}

impl Rows {
    fn number(&self, line: usize, rec: &csv::StringRecord, idx: usize, header: &[&str]) -> Result<f64> {
        let raw = &rec[idx];
        raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::BadNumeric {
            path: self.path.clone(),
            line,
            column: header[idx].to_string(),
            value: raw.to_string(),
        })
    }

    fn numbers<const N: usize>(
        &self,
        line: usize,
        rec: &csv::StringRecord,
        from: usize,
        header: &[&str],
    ) -> Result<[f64; N]> {
        let mut out = [0.0; N];
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = self.number(line, rec, from + k, header)?;
        }
        Ok(out)
    }
}

fn check_unique_keys<'a>(path: &str, keys: impl Iterator<Item = (usize, &'a str, &'a str)>) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for (line, e, v) in keys {
        if !seen.insert((e, v)) {
            return Err(Error::DuplicateKey {
                path: path.to_string(),
                line,
                entity: e.to_string(),
                variable: v.to_string(),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OhlcRecord {
    pub entity: String,
    pub variable: String,
    pub bar: RawBar<f64>,
    /// Line in the source file.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OhlcTable {
    pub path: String,
    pub records: Vec<OhlcRecord>,
}

impl OhlcTable {
    pub fn pivot(&self) -> Result<Pivot<RawBar<f64>>> {
        pivot(&self.path, self.records.iter().map(|r| (r.entity.clone(), r.variable.clone(), r.bar)))
    }
}

pub fn parse_ohlc_csv(path: &Path) -> Result<OhlcTable> {
    ohlc_from_rows(read_rows(path, &OHLC_HEADER)?)
}

pub fn parse_ohlc_str(name: &str, text: &str) -> Result<OhlcTable> {
    ohlc_from_rows(parse_rows(name, text, &OHLC_HEADER)?)
}

fn ohlc_from_rows(rows: Rows) -> Result<OhlcTable> {
    let records = rows
        .records
        .iter()
        .map(|(line, rec)| {
            let [o, h, l, c] = rows.numbers::<4>(*line, rec, 2, &OHLC_HEADER)?;
            Ok(OhlcRecord {
                entity: rec[0].to_string(),
                variable: rec[1].to_string(),
                bar: RawBar::new(o, h, l, c),
                line: *line,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    check_unique_keys(&rows.path, records.iter().map(|r| (r.line, r.entity.as_str(), r.variable.as_str())))?;
    Ok(OhlcTable { path: rows.path, records })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub entity: String,
    pub variable: String,
    pub features: FeatureVec<f64>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub path: String,
    pub records: Vec<FeatureRecord>,
}

impl FeatureTable {
    pub fn pivot(&self) -> Result<Pivot<FeatureVec<f64>>> {
        pivot(&self.path, self.records.iter().map(|r| (r.entity.clone(), r.variable.clone(), r.features)))
    }

    pub fn to_matrix(&self) -> Result<FeatureMatrix<f64>> {
        let p = self.pivot()?;
        FeatureMatrix::from_rows(p.entities, p.variables, &p.cells)
    }
}

pub fn parse_feature_csv(path: &Path) -> Result<FeatureTable> {
    feature_from_rows(read_rows(path, &FEATURE_HEADER)?)
}

pub fn parse_feature_str(name: &str, text: &str) -> Result<FeatureTable> {
    feature_from_rows(parse_rows(name, text, &FEATURE_HEADER)?)
}

fn feature_from_rows(rows: Rows) -> Result<FeatureTable> {
    let records = rows
        .records
        .iter()
        .map(|(line, rec)| {
            Ok(FeatureRecord {
                entity: rec[0].to_string(),
                variable: rec[1].to_string(),
                features: FeatureVec(rows.numbers::<4>(*line, rec, 2, &FEATURE_HEADER)?),
                line: *line,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    check_unique_keys(&rows.path, records.iter().map(|r| (r.line, r.entity.as_str(), r.variable.as_str())))?;
    Ok(FeatureTable { path: rows.path, records })
}

fn create_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, mut w: csv::Writer<fs::File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_record<I, S>(path: &Path, w: &mut csv::Writer<fs::File>, fields: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(fields).map_err(|e| Error::io(path, e))
}

/// Writes bars in long format with shortest round-trip number formatting.
pub fn write_ohlc_csv<'a>(path: &Path, rows: impl IntoIterator<Item = (&'a str, &'a str, OhlcBar<f64>)>) -> Result<()> {
    let mut w = create_writer(path)?;
    write_record(path, &mut w, OHLC_HEADER)?;
    for (e, v, bar) in rows {
        let [o, h, l, c] = bar.to_array().map(|x| x.to_string());
        write_record(path, &mut w, [e, v, &o, &h, &l, &c])?;
    }
    finish(path, w)
}

/// Writes feature vectors in long format with shortest round-trip number formatting.
pub fn write_feature_csv<'a>(
    path: &Path,
    rows: impl IntoIterator<Item = (&'a str, &'a str, FeatureVec<f64>)>,
) -> Result<()> {
    let mut w = create_writer(path)?;
    write_record(path, &mut w, FEATURE_HEADER)?;
    for (e, v, fv) in rows {
        let [a, b, c, d] = fv.0.map(|x| x.to_string());
        write_record(path, &mut w, [e, v, &a, &b, &c, &d])?;
    }
    finish(path, w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFiles {
    pub eigenvalues: PathBuf,
    pub loadings: PathBuf,
    pub scores_ohlc: PathBuf,
}

/// Writes `eigenvalues.csv` (every eigenvalue, not only the retained ones),
/// `loadings.csv` and `scores_ohlc.csv` into `outdir`.
pub fn write_model(model: &PseudoPcModel<f64>, scores: &ScoreBars<f64>, outdir: &Path) -> Result<ModelFiles> {
    fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    let files = ModelFiles {
        eigenvalues: outdir.join("eigenvalues.csv"),
        loadings: outdir.join("loadings.csv"),
        scores_ohlc: outdir.join("scores_ohlc.csv"),
    };

    let path = &files.eigenvalues;
    let mut w = create_writer(path)?;
    write_record(path, &mut w, EIGEN_HEADER)?;
    let spectrum = model.spectrum();
    let vcr = variance_contribution(spectrum, model.n_variables());
    let cvcr = cumulative_contribution(spectrum, model.n_variables());
    for (h, lambda) in spectrum.iter().enumerate() {
        write_record(path, &mut w, [(h + 1).to_string(), fmt_sig6(*lambda), fmt_sig6(vcr[h]), fmt_sig6(cvcr[h])])?;
    }
    finish(path, w)?;

    let path = &files.loadings;
    let mut w = create_writer(path)?;
    let header = std::iter::once("variable".to_string()).chain((1..=model.n_components()).map(|h| format!("pc{h}")));
    write_record(path, &mut w, header)?;
    for (j, label) in model.labels().iter().enumerate() {
        let row = std::iter::once(label.clone()).chain(model.loadings().row(j).iter().map(|u| fmt_sig6(*u)));
        write_record(path, &mut w, row)?;
    }
    finish(path, w)?;

    let path = &files.scores_ohlc;
    let mut w = create_writer(path)?;
    write_record(path, &mut w, SCORES_HEADER)?;
    for (i, entity) in scores.row_labels().iter().enumerate() {
        for h in 0..scores.n_components() {
            let bar = scores.component(h)[i];
            let [o, hi, l, c] = bar.to_array().map(fmt_sig6);
            write_record(path, &mut w, [entity.clone(), (h + 1).to_string(), o, hi, l, c])?;
        }
    }
    finish(path, w)?;
    Ok(files)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenRow {
    pub component: usize,
    pub eigenvalue: f64,
    pub vcr: f64,
    pub cvcr: f64,
}

fn component_index(rows: &Rows, line: usize, raw: &str, column: &str) -> Result<usize> {
    raw.parse::<usize>().ok().filter(|c| *c >= 1).ok_or_else(|| Error::BadNumeric {
        path: rows.path.clone(),
        line,
        column: column.to_string(),
        value: raw.to_string(),
    })
}

pub fn read_eigenvalues(path: &Path) -> Result<Vec<EigenRow>> {
    let rows = read_rows(path, &EIGEN_HEADER)?;
    rows.records
        .iter()
        .map(|(line, rec)| {
            let [eigenvalue, vcr, cvcr] = rows.numbers::<3>(*line, rec, 1, &EIGEN_HEADER)?;
            Ok(EigenRow { component: component_index(&rows, *line, &rec[0], "component")?, eigenvalue, vcr, cvcr })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadingRow {
    pub variable: String,
    pub loadings: Vec<f64>,
}

pub fn read_loadings(path: &Path) -> Result<Vec<LoadingRow>> {
    let mut text = String::new();
    fs::File::open(path).and_then(|mut f| f.read_to_string(&mut text)).map_err(|e| Error::io(path, e))?;
    let first = text.lines().next().unwrap_or_default();
    let header: Vec<String> = first.split(',').map(|s| s.trim().to_string()).collect();
    let valid = header.len() >= 2
        && header[0] == "variable"
        && header[1..].iter().enumerate().all(|(h, s)| *s == format!("pc{}", h + 1));
    if !valid {
        return Err(Error::MissingHeader { path: path.display().to_string(), expected: "variable,pc1,...,pcm".into() });
    }
    let expected: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = parse_rows(&path.display().to_string(), &text, &expected)?;
    rows.records
        .iter()
        .map(|(line, rec)| {
            let loadings =
                (1..expected.len()).map(|k| rows.number(*line, rec, k, &expected)).collect::<Result<Vec<_>>>()?;
            Ok(LoadingRow { variable: rec[0].to_string(), loadings })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub entity: String,
    pub component: usize,
    pub bar: OhlcBar<f64>,
}

pub fn read_scores_ohlc(path: &Path) -> Result<Vec<ScoreRow>> {
    let rows = read_rows(path, &SCORES_HEADER)?;
    rows.records
        .iter()
        .map(|(line, rec)| {
            let [o, h, l, c] = rows.numbers::<4>(*line, rec, 2, &SCORES_HEADER)?;
            let bar = OhlcBar::new(o, h, l, c).map_err(|e| Error::Csv {
                path: rows.path.clone(),
                line: *line,
                message: e.to_string(),
            })?;
            Ok(ScoreRow {
                entity: rec[0].to_string(),
                component: component_index(&rows, *line, &rec[1], "component")?,
                bar,
            })
        })
        .collect()
}
