use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FrontPoint, ParetoFront};
use crate::error::{Error, Result};

/// One row per point: `m_1..m_q, loss_1..loss_q, seed, work_units`.
pub fn write_front_csv(path: &Path, front: &ParetoFront) -> Result<()> {
    let q = front.points.first().map_or(0, |p| p.objectives.len());
    let mut header: Vec<String> = (1..=q).map(|k| format!("m{k}")).collect();
    header.extend((1..=q).map(|k| format!("loss{k}")));
    header.push("seed".into());
    header.push("work_units".into());

    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = csv::Writer::from_path(&tmp).map_err(|e| Error::Io(e.into()))?;
        w.write_record(&header).map_err(|e| Error::Io(e.into()))?;
        for p in &front.points {
            let mut row: Vec<String> = p.freq.iter().map(|m| m.to_string()).collect();
            row.extend(p.objectives.iter().map(|v| format!("{v:e}")));
            row.push(p.seed.to_string());
            row.push(p.work_units.to_string());
            w.write_record(&row).map_err(|e| Error::Io(e.into()))?;
        }
        w.flush()?;
    }
    fs::rename(tmp, path)?;
    Ok(())
}

pub fn read_front_csv(path: &Path, origin: &str) -> Result<ParetoFront> {
    let bad = |message: String| Error::Ingestion { file: path.to_path_buf(), message };
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let width = r.headers().map_err(|e| bad(e.to_string()))?.len();
    if width < 2 || (width - 2) % 2 != 0 {
        return Err(bad(format!("unexpected column count {width}")));
    }
    let q = (width - 2) / 2;
    let mut points = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or_default();
        let freq = (0..q).map(|i| field(i).parse::<usize>()).collect::<std::result::Result<Vec<_>, _>>();
        let objectives = (q..2 * q).map(|i| field(i).parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>();
        let (Ok(freq), Ok(objectives), Ok(seed), Ok(work_units)) =
            (freq, objectives, field(2 * q).parse(), field(2 * q + 1).parse())
        else {
            return Err(bad(format!("malformed row {:?}", rec)));
        };
        points.push(FrontPoint { objectives, freq, seed, work_units });
    }
    Ok(ParetoFront { origin: origin.to_string(), points })
}

/// Quality of one method's front, as reported side by side per method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontMetrics {
    pub method: String,
    pub purity: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub delta_used_extremes: bool,
    pub runs: usize,
    pub failed: usize,
    pub nondominated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub methods: Vec<FrontMetrics>,
}

impl MetricsSummary {
    /// Filters every front and scores each against the union of all of them.
    /// Metrics that are undefined for a front (too few points) are `None`.
    pub fn compute(fronts: &[(ParetoFront, usize)]) -> Result<Self> {
        let vectors: Vec<Vec<Vec<f64>>> = fronts.iter().map(|(f, _)| f.objective_vectors()).collect();
        let all: Vec<Vec<f64>> = vectors.iter().flatten().cloned().collect();
        let extremes = all.first().map(|first| {
            (0..first.len())
                .map(|k| {
                    all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[k]), hi.max(p[k])))
                })
                .collect::<Vec<_>>()
        });
        let mut methods = Vec::new();
        for (i, (front, failed)) in fronts.iter().enumerate() {
            let others: Vec<&[Vec<f64>]> =
                vectors.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v.as_slice()).collect();
            let filtered = super::nondominated_filter(front)?.objective_vectors();
            let delta = super::spread_delta(&filtered, extremes.as_deref()).ok();
            methods.push(FrontMetrics {
                method: front.origin.clone(),
                purity: super::purity(&vectors[i], &others).ok(),
                gamma: super::spread_gamma(&filtered).ok(),
                delta: delta.map(|d| d.value),
                delta_used_extremes: delta.is_some_and(|d| d.used_extremes),
                runs: front.points.len() + failed,
                failed: *failed,
                nondominated: filtered.len(),
            });
        }
        Ok(Self { methods })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn front(origin: &str, raw: &[[f64; 2]]) -> ParetoFront {
        ParetoFront {
            origin: origin.into(),
            points: raw
                .iter()
                .enumerate()
                .map(|(i, p)| FrontPoint { objectives: p.to_vec(), freq: vec![i, 3 - i], seed: 1, work_units: 10 })
                .collect(),
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("front.csv");
        let f = front("a", &[[0.1, 0.7], [0.123456789012345, 1e-9]]);
        write_front_csv(&path, &f).unwrap();
        assert_eq!(read_front_csv(&path, "a").unwrap(), f);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("m1,m2,loss1,loss2,seed,work_units"));
    }

    #[test]
    fn summary_scores_each_method() {
        let a = front("a", &[[0.0, 4.0], [1.0, 3.0], [2.0, 2.5], [4.0, 0.0]]);
        let b = front("b", &[[1.0, 3.0], [0.5, 3.5], [2.0, 2.0], [5.0, 5.0]]);
        let s = MetricsSummary::compute(&[(a, 0), (b, 2)]).unwrap();
        assert_eq!(s.methods[0].purity, Some(0.75));
        assert_eq!(s.methods[1].purity, Some(1.0));
        assert_eq!(s.methods[1].nondominated, 3);
        assert_eq!(s.methods[1].runs, 6);
        assert!(s.methods[0].delta_used_extremes);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<MetricsSummary>(&json).unwrap(), s);
    }
}
