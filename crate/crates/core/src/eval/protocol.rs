use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::MetricReport;
use crate::error::{Error, Result};

/// Metric selector for optimization; VI is minimized, the others maximized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Covering,
    Pri,
    Vi,
}

impl Metric {
    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::Vi)
    }

    pub fn select(self, report: &MetricReport) -> f64 {
        match self {
            Metric::Covering => report.covering,
            Metric::Pri => report.pri,
            Metric::Vi => report.vi,
        }
    }

    /// True if `a` is strictly better than `b` under this metric.
    pub fn better(self, a: f64, b: f64) -> bool {
        if self.higher_is_better() {
            a > b
        } else {
            a < b
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Covering => "covering",
            Metric::Pri => "pri",
            Metric::Vi => "vi",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "covering" | "cov" => Ok(Metric::Covering),
            "pri" => Ok(Metric::Pri),
            "vi" => Ok(Metric::Vi),
            other => Err(Error::invalid(format!("unknown metric {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdsOis {
    /// Dataset mean at the best shared parameter.
    pub ods: f64,
    /// Column index of the best shared parameter; the first one on ties.
    pub best_param: usize,
    /// Mean over images of each image's best score.
    pub ois: f64,
}

/// ODS/OIS over a table of reports indexed `[image][param]`.
pub fn ods_ois_eval(results: &[Vec<MetricReport>], metric: Metric) -> Result<OdsOis> {
    let Some(first) = results.first() else {
        return Err(Error::invalid("no images to evaluate"));
    };
    let params = first.len();
    if params == 0 {
        return Err(Error::invalid("no parameter settings"));
    }
    if let Some(i) = results.iter().position(|row| row.len() != params) {
        return Err(Error::invalid(format!(
            "image {i} has {} parameter settings, expected {params}",
            results[i].len()
        )));
    }
    let images = results.len() as f64;

    let mut best_param = 0;
    let mut ods = f64::NAN;
    for p in 0..params {
        let mean = results.iter().map(|row| metric.select(&row[p])).sum::<f64>() / images;
        if p == 0 || metric.better(mean, ods) {
            ods = mean;
            best_param = p;
        }
    }

    let ois = results
        .iter()
        .map(|row| {
            row.iter()
                .map(|r| metric.select(r))
                .reduce(|a, b| if metric.better(b, a) { b } else { a })
                .expect("non-empty row")
        })
        .sum::<f64>()
        / images;

    Ok(OdsOis {
        ods,
        best_param,
        ois,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// CSV with header `image_id,param,covering,pri,vi`.
pub fn write_metric_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a str, &'a MetricReport)>) -> String {
    let mut out = String::from("image_id,param,covering,pri,vi\n");
    for (image, param, r) in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            csv_field(image),
            csv_field(param),
            r.covering,
            r.pri,
            r.vi
        );
    }
    out
}
