//! Beijing multi-site air-quality ingestion.
//!
//! Station files are parsed by header name, so column order is irrelevant.
//! Features follow the pinned schema in `schema/air_quality.json`: five
//! meteorological covariates, one-hot wind direction, one-hot station, and a
//! 24-hour sine/cosine pair, 35 columns in all.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::{Dataset, Provenance, RegressionData, StandardizationStats};
use crate::error::{Error, Result};

pub const SCHEMA_JSON: &str = include_str!("../../schema/air_quality.json");

pub const POLLUTANTS: [&str; 6] = ["PM2.5", "PM10", "SO2", "NO2", "CO", "O3"];

const METEOROLOGY: [&str; 5] = ["TEMP", "PRES", "DEWP", "RAIN", "WSPM"];
const TIME: [&str; 4] = ["year", "month", "day", "hour"];

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct AirQualitySchema {
    pub numeric: Vec<String>,
    pub wind_directions: Vec<String>,
    pub stations: Vec<String>,
    pub responses: Vec<String>,
    pub features: Vec<String>,
    pub test_fraction_percent: usize,
}

impl AirQualitySchema {
    pub fn pinned() -> Self {
        serde_json::from_str(SCHEMA_JSON).expect("shipped schema parses")
    }
}

/// One hourly record; `None` marks a missing or unparseable cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub time: [Option<u32>; 4],
    pub station: Option<String>,
    pub wind_direction: Option<String>,
    pub pollutants: [Option<f64>; 6],
    pub meteorology: [Option<f64>; 5],
}

impl RawRow {
    /// Sortable `yyyymmddhh` key, when all time fields are present.
    pub fn timestamp(&self) -> Option<u64> {
        let [y, mo, d, h] = self.time;
        Some(((y? as u64 * 100 + mo? as u64) * 100 + d? as u64) * 100 + h? as u64)
    }

    fn is_complete(&self) -> bool {
        self.timestamp().is_some()
            && self.station.is_some()
            && self.wind_direction.is_some()
            && self.pollutants.iter().all(Option::is_some)
            && self.meteorology.iter().all(Option::is_some)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawTable {
    pub rows: Vec<RawRow>,
    /// `(file name, sha256 hex)` per source file, in load order.
    pub sources: Vec<(String, String)>,
}

fn ingestion(file: &Path, message: impl Into<String>) -> Error {
    Error::Ingestion { file: file.to_path_buf(), message: message.into() }
}

fn parse_number(cell: &str) -> Option<f64> {
    let cell = cell.trim();
    if cell.is_empty() || cell.eq_ignore_ascii_case("NA") {
        return None;
    }
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_text(cell: &str) -> Option<String> {
    let cell = cell.trim();
    (!cell.is_empty() && !cell.eq_ignore_ascii_case("NA")).then(|| cell.to_string())
}

fn read_station_file(path: &Path) -> Result<(Vec<RawRow>, String)> {
    let bytes = fs::read(path).map_err(|e| ingestion(path, e.to_string()))?;
    let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes.as_slice());
    let headers = reader.headers().map_err(|e| ingestion(path, format!("malformed header: {e}")))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| ingestion(path, format!("header lacks column `{name}`")))
    };
    let collect = |names: &[&str]| names.iter().map(|n| column(n)).collect::<Result<Vec<_>>>();
    let time_cols = collect(&TIME)?;
    let pollutant_cols = collect(&POLLUTANTS)?;
    let met_cols = collect(&METEOROLOGY)?;
    let station_col = column("station")?;
    let wd_col = column("wd")?;

    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ingestion(path, format!("record {}: {e}", line + 1)))?;
        let cell = |c: usize| record.get(c).unwrap_or("");
        rows.push(RawRow {
            time: std::array::from_fn(|i| {
                parse_number(cell(time_cols[i])).filter(|v| v.fract() == 0.0 && *v >= 0.0).map(|v| v as u32)
            }),
            station: parse_text(cell(station_col)),
            wind_direction: parse_text(cell(wd_col)),
            pollutants: std::array::from_fn(|i| parse_number(cell(pollutant_cols[i]))),
            meteorology: std::array::from_fn(|i| parse_number(cell(met_cols[i]))),
        });
    }
    Ok((rows, digest))
}

/// Concatenates every `*.csv` station file under `dir` (sorted by file name).
pub fn load_air_quality(dir: &Path) -> Result<RawTable> {
    let entries = fs::read_dir(dir).map_err(|e| ingestion(dir, e.to_string()))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(ingestion(dir, "no station .csv files found"));
    }
    let mut table = RawTable::default();
    for file in files {
        let (rows, digest) = read_station_file(&file)?;
        table.rows.extend(rows);
        let name = file.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        table.sources.push((name, digest));
    }
    Ok(table)
}

/// Output of [`preprocess_air_quality`].
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub dataset: Dataset,
    pub stats: StandardizationStats,
    pub train_timestamps: Vec<u64>,
    pub test_timestamps: Vec<u64>,
}

fn feature_names(schema: &AirQualitySchema, winds: &[String], stations: &[String]) -> Vec<String> {
    let mut names: Vec<String> = schema.numeric.clone();
    names.extend(winds.iter().map(|w| format!("wd_{w}")));
    names.extend(stations.iter().map(|s| format!("station_{s}")));
    names.push("hour_sin".into());
    names.push("hour_cos".into());
    names
}

/// Pinned vocabulary first, then any unexpected values seen in the data.
fn vocabulary<'a>(pinned: &[String], observed: impl Iterator<Item = &'a String>) -> Vec<String> {
    let extra: BTreeSet<&String> = observed.filter(|v| !pinned.contains(v)).collect();
    pinned.iter().cloned().chain(extra.into_iter().cloned()).collect()
}

/// Drops incomplete rows, orders chronologically, encodes features, splits
/// 70/30 by time, and standardizes with training statistics.
pub fn preprocess_air_quality(raw: &RawTable) -> Result<Preprocessed> {
    let schema = AirQualitySchema::pinned();
    let mut rows: Vec<&RawRow> = raw.rows.iter().filter(|r| r.is_complete()).collect();
    rows.sort_by(|a, b| (a.timestamp(), &a.station).cmp(&(b.timestamp(), &b.station)));

    let winds = vocabulary(&schema.wind_directions, rows.iter().filter_map(|r| r.wind_direction.as_ref()));
    let stations = vocabulary(&schema.stations, rows.iter().filter_map(|r| r.station.as_ref()));
    let names = feature_names(&schema, &winds, &stations);
    if names != schema.features {
        return Err(Error::SchemaDrift { columns: names, expected: schema.features.len() });
    }

    let n = rows.len();
    if n < 2 {
        return Err(Error::Ingestion {
            file: PathBuf::from("<table>"),
            message: format!("only {n} complete rows"),
        });
    }
    let d = names.len();
    let mut x = DMatrix::zeros(n, d);
    let mut y = DMatrix::zeros(n, POLLUTANTS.len());
    for (i, row) in rows.iter().enumerate() {
        for (c, v) in row.meteorology.iter().enumerate() {
            x[(i, c)] = v.expect("complete row");
        }
        let wd = row.wind_direction.as_ref().expect("complete row");
        x[(i, METEOROLOGY.len() + winds.iter().position(|w| w == wd).expect("in vocabulary"))] = 1.0;
        let st = row.station.as_ref().expect("complete row");
        x[(i, METEOROLOGY.len() + winds.len() + stations.iter().position(|s| s == st).expect("in vocabulary"))] = 1.0;
        let angle = 2.0 * std::f64::consts::PI * row.time[3].expect("complete row") as f64 / 24.0;
        x[(i, d - 2)] = angle.sin();
        x[(i, d - 1)] = angle.cos();
        for (k, v) in row.pollutants.iter().enumerate() {
            y[(i, k)] = v.expect("complete row");
        }
    }

    let n_test = n * schema.test_fraction_percent / 100;
    let n_train = n - n_test;
    let mut train = RegressionData { x: x.rows(0, n_train).into_owned(), y: y.rows(0, n_train).into_owned() };
    let mut test = RegressionData { x: x.rows(n_train, n_test).into_owned(), y: y.rows(n_train, n_test).into_owned() };
    let stats = StandardizationStats::fit(&train.x, &train.y);
    stats.transform(&mut train.x, &mut train.y);
    stats.transform(&mut test.x, &mut test.y);

    let timestamps: Vec<u64> = rows.iter().map(|r| r.timestamp().expect("complete row")).collect();
    Ok(Preprocessed {
        dataset: Dataset {
            train,
            test,
            feature_names: names,
            response_names: POLLUTANTS.iter().map(|s| s.to_string()).collect(),
            provenance: Provenance::Files { digests: raw.sources.clone() },
        },
        stats,
        train_timestamps: timestamps[..n_train].to_vec(),
        test_timestamps: timestamps[n_train..].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "No,year,month,day,hour,PM2.5,PM10,SO2,NO2,CO,O3,TEMP,PRES,DEWP,RAIN,wd,WSPM,station";

    fn write(dir: &Path, name: &str, body: &str) {
        fs::write(dir.join(name), body).unwrap();
    }

    /// Ten hours at one station; rows 3, 6 and 9 have a missing cell.
    fn toy_rows() -> String {
        let mut s = String::from(HEADER);
        s.push('\n');
        for h in 0..10 {
            let pm = if h == 3 { "NA".to_string() } else { format!("{}", 10 + h) };
            let wd = if h == 6 { "NA" } else if h % 2 == 0 { "N" } else { "SE" };
            let rain = if h == 9 { "" } else { "0.0" };
            s.push_str(&format!(
                "{},2013,3,1,{h},{pm},{},4,7,300,77,{},1020,-18,{rain},{wd},4.4,Dongsi\n",
                h + 1,
                20 + h,
                -0.5 + h as f64
            ));
        }
        s
    }

    #[test]
    fn toy_table_drops_missing_and_splits_chronologically() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "PRSA_Dongsi.csv", &toy_rows());
        let raw = load_air_quality(dir.path()).unwrap();
        assert_eq!(raw.rows.len(), 10);
        let pre = preprocess_air_quality(&raw).unwrap();
        assert_eq!(pre.dataset.train.num_rows(), 5);
        assert_eq!(pre.dataset.test.num_rows(), 2);
        assert_eq!(pre.dataset.train.num_features(), 35);
        assert_eq!(pre.dataset.train.num_responses(), 6);
        assert_eq!(pre.train_timestamps, vec![2013030100, 2013030101, 2013030102, 2013030104, 2013030105]);
        assert_eq!(pre.test_timestamps, vec![2013030107, 2013030108]);
        assert!(pre.train_timestamps.iter().max() <= pre.test_timestamps.iter().min());
    }

    #[test]
    fn standardized_training_columns() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.csv", &toy_rows());
        let pre = preprocess_air_quality(&load_air_quality(dir.path()).unwrap()).unwrap();
        let train = &pre.dataset.train;
        let n = train.num_rows() as f64;
        for (c, col) in train.x.column_iter().enumerate().chain(train.y.column_iter().enumerate()) {
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-9, "column {c} mean {mean}");
            // constant columns (unused one-hots, constant meteorology) are centered only
            assert!((var - 1.0).abs() < 1e-9 || var < 1e-20, "column {c} var {var}");
        }
    }

    #[test]
    fn column_order_does_not_matter() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let body = toy_rows();
        write(a.path(), "s.csv", &body);
        // reverse every line's columns
        let shuffled: String = body
            .lines()
            .map(|l| l.split(',').rev().collect::<Vec<_>>().join(",") + "\n")
            .collect();
        write(b.path(), "s.csv", &shuffled);
        let ra = load_air_quality(a.path()).unwrap();
        let rb = load_air_quality(b.path()).unwrap();
        assert_eq!(ra.rows, rb.rows);
    }

    #[test]
    fn concatenates_files() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.csv", &toy_rows());
        write(dir.path(), "b.csv", &toy_rows().replace("Dongsi", "Tiantan"));
        let raw = load_air_quality(dir.path()).unwrap();
        assert_eq!(raw.rows.len(), 20);
        assert_eq!(raw.sources.len(), 2);
        let pre = preprocess_air_quality(&raw).unwrap();
        assert_eq!(pre.dataset.train.num_rows() + pre.dataset.test.num_rows(), 14);
    }

    #[test]
    fn missing_header_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "broken.csv", &toy_rows().replace("WSPM", "WIND"));
        match load_air_quality(dir.path()) {
            Err(Error::Ingestion { file, message }) => {
                assert!(file.ends_with("broken.csv"));
                assert!(message.contains("WSPM"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_directory_is_an_ingestion_error() {
        assert!(matches!(load_air_quality(Path::new("/nonexistent/air")), Err(Error::Ingestion { .. })));
    }

    #[test]
    fn unknown_category_is_schema_drift() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.csv", &toy_rows().replace("Dongsi", "Xizhimen"));
        match preprocess_air_quality(&load_air_quality(dir.path()).unwrap()) {
            Err(Error::SchemaDrift { columns, expected }) => {
                assert_eq!(expected, 35);
                assert_eq!(columns.len(), 36);
                assert!(columns.contains(&"station_Xizhimen".to_string()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pinned_schema_has_35_features() {
        let schema = AirQualitySchema::pinned();
        assert_eq!(schema.features.len(), 35);
        assert_eq!(feature_names(&schema, &schema.wind_directions, &schema.stations), schema.features);
    }
}
