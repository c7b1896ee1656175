use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Accuracies of one method over repeated runs.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub method: String,
    pub accuracies: Vec<f64>,
}

impl ReportRow {
    pub fn new(method: impl Into<String>, accuracies: Vec<f64>) -> Self {
        ReportRow {
            method: method.into(),
            accuracies,
        }
    }

    pub fn mean(&self) -> f64 {
        self.accuracies.iter().sum::<f64>() / self.accuracies.len().max(1) as f64
    }

    /// Sample standard deviation; `None` for a single run.
    pub fn std(&self) -> Option<f64> {
        let n = self.accuracies.len();
        if n < 2 {
            return None;
        }
        let m = self.mean();
        Some((self.accuracies.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt())
    }

    pub fn median(&self) -> f64 {
        let mut v = self.accuracies.clone();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n == 0 {
            f64::NAN
        } else if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    pub config: Vec<(String, String)>,
}

impl EvalReport {
    pub fn push(&mut self, row: ReportRow) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("method,runs,mean,std,accuracies\n");
        for r in &self.rows {
            let accs: Vec<String> = r.accuracies.iter().map(f64::to_string).collect();
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.method,
                r.accuracies.len(),
                r.mean(),
                r.std().map_or("single-run".to_string(), |v| v.to_string()),
                accs.join(";")
            );
        }
        s
    }

    /// Human-readable table, accuracies in percent.
    pub fn to_table(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.method.len())
            .max()
            .unwrap_or(6)
            .max(6);
        let mut s = format!(
            "{:<width$}  {:>5}  {:>16}\n",
            "method", "runs", "accuracy (%)"
        );
        for r in &self.rows {
            let acc = match r.std() {
                Some(sd) => format!("{:.2} ± {:.2}", 100.0 * r.mean(), 100.0 * sd),
                None => format!("{:.2} (single)", 100.0 * r.mean()),
            };
            let _ = writeln!(
                s,
                "{:<width$}  {:>5}  {:>16}",
                r.method,
                r.accuracies.len(),
                acc
            );
        }
        s
    }

    /// Writes `report.csv`, `report.txt` and `config.txt` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let cfg: String = self
            .config
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect();
        for (name, body) in [
            ("report.csv", self.to_csv()),
            ("report.txt", self.to_table()),
            ("config.txt", cfg),
        ] {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats() {
        let r = ReportRow::new("x", vec![0.5, 0.7, 0.6]);
        assert!((r.mean() - 0.6).abs() < 1e-15);
        assert!((r.std().unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(r.median(), 0.6);
        assert!(ReportRow::new("y", vec![0.4]).std().is_none());
        let mut rep = EvalReport::default();
        rep.push(r);
        rep.push(ReportRow::new("single", vec![0.4]));
        assert!(rep.to_csv().contains("single-run"));
        assert!(rep.to_table().contains("60.00 ± 10.00"));
    }
}
