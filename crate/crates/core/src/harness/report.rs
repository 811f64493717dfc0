use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::experiment::ResultRow;

/// Rows are the true class, columns the decided class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<String>) -> Self {
        let k = classes.len();
        ConfusionMatrix {
            classes,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn record(&mut self, truth: usize, decided: usize) {
        self.counts[truth][decided] += 1;
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn total(&self) -> u64 {
        self.row_sums().iter().sum()
    }

    /// Prior-weighted probability of correct classification.
    pub fn pc(&self, priors: &[f64]) -> f64 {
        let rows = self.row_sums();
        let (mut hit, mut all) = (0.0, 0.0);
        for (i, p) in priors.iter().enumerate() {
            hit += self.counts[i][i] as f64 * p;
            all += rows[i] as f64 * p;
        }
        if all > 0.0 {
            hit / all
        } else {
            0.0
        }
    }
}

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub snr_db: f64,
    #[serde(rename = "L")]
    pub l: usize,
    pub classifier: String,
    pub pc: f64,
    pub stderr: f64,
}

impl From<&ResultRow> for SummaryRow {
    fn from(r: &ResultRow) -> Self {
        SummaryRow {
            snr_db: r.snr_db,
            l: r.l,
            classifier: r.classifier.to_string(),
            pc: r.pc,
            stderr: r.stderr,
        }
    }
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::csv(path, e))
}

/// Writes `results.csv` (`snr_db,L,classifier,pc,stderr`) and one confusion
/// matrix per row under `confusion/`. Returns the paths written.
pub fn emit_csv(results: &[ResultRow], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if results.is_empty() {
        return Err(Error::Config("no results to write".into()));
    }
    let confusion_dir = out_dir.join("confusion");
    fs::create_dir_all(&confusion_dir).map_err(|e| Error::io(&confusion_dir, e))?;

    let summary = out_dir.join("results.csv");
    let mut w = writer(&summary)?;
    for r in results {
        w.serialize(SummaryRow::from(r))
            .map_err(|e| Error::csv(&summary, e))?;
    }
    w.flush().map_err(|e| Error::io(&summary, e))?;
    let mut written = vec![summary];

    for r in results {
        let path = confusion_dir.join(format!("{}_snr{:+.2}_L{}.csv", r.classifier, r.snr_db, r.l));
        let mut w = writer(&path)?;
        let header =
            std::iter::once("true\\decided".to_string()).chain(r.confusion.classes.iter().cloned());
        w.write_record(header).map_err(|e| Error::csv(&path, e))?;
        for (name, row) in r.confusion.classes.iter().zip(&r.confusion.counts) {
            let record = std::iter::once(name.clone()).chain(row.iter().map(u64::to_string));
            w.write_record(record).map_err(|e| Error::csv(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<SummaryRow>, _>>()
        .map_err(|e| Error::csv(path, e))
}
