//! Report serializations: JSON (full fidelity), CSV (one row per cell),
//! Markdown pivot tables, and a plot-ready long-format CSV.

use crate::benchmark::{BenchmarkCell, BenchmarkReport};
use crate::error::{Error, Result};

impl BenchmarkReport {
    /// Full-fidelity JSON. Identical seeds produce byte-identical output.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<BenchmarkReport> {
        Ok(serde_json::from_str(text)?)
    }

    /// One CSV row per cell.
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record([
                "train_fraction",
                "imputer",
                "learner",
                "metric_mean",
                "metric_stddev",
                "trial_values",
                "error",
            ])
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        for cell in &self.cells {
            let trials = cell
                .trial_values
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(";");
            writer
                .write_record([
                    cell.train_fraction.to_string(),
                    cell.imputer.clone(),
                    cell.learner.clone(),
                    cell.mean.map(|v| v.to_string()).unwrap_or_default(),
                    cell.stddev.map(|v| v.to_string()).unwrap_or_default(),
                    trials,
                    cell.error.clone().unwrap_or_default(),
                ])
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Column headers of the pivot: imputer labels when a single learner is
    /// present, learner labels for a single imputer, combined otherwise.
    fn series(&self) -> Vec<(String, String, String)> {
        let single_learner = self.plan.learners.len() == 1;
        let single_imputer = self.plan.imputers.len() == 1;
        let mut series = Vec::new();
        for imputer in &self.plan.imputers {
            for learner in &self.plan.learners {
                let imputer = imputer.label();
                let learner = learner.label();
                let title = if single_learner {
                    imputer.clone()
                } else if single_imputer {
                    learner.clone()
                } else {
                    format!("{imputer} | {learner}")
                };
                series.push((title, imputer, learner));
            }
        }
        series
    }

    /// A Markdown table with one row per train fraction, mirroring the
    /// imputer- and learner-comparison layouts.
    pub fn to_markdown(&self) -> String {
        let series = self.series();
        let mut out = String::from("| Training data size |");
        for (title, _, _) in &series {
            out.push_str(&format!(" {title} |"));
        }
        out.push('\n');
        out.push_str("|---|");
        for _ in &series {
            out.push_str("---|");
        }
        out.push('\n');
        for &fraction in &self.plan.train_fractions {
            out.push_str(&format!("| {:.0}% |", fraction * 100.0));
            for (_, imputer, learner) in &series {
                let text = match self.cell(fraction, imputer, learner) {
                    Some(cell) => match cell.mean {
                        Some(mean) => format!("{mean:.4}"),
                        None => "failed".to_string(),
                    },
                    None => String::new(),
                };
                out.push_str(&format!(" {text} |"));
            }
            out.push('\n');
        }
        out
    }

    /// Long-format CSV (`fraction,series,value`) for external chart tools;
    /// failed cells are skipped.
    pub fn to_plot_csv(&self) -> Result<String> {
        let series = self.series();
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(["fraction", "series", "value"])
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        for &fraction in &self.plan.train_fractions {
            for (title, imputer, learner) in &series {
                if let Some(BenchmarkCell {
                    mean: Some(mean), ..
                }) = self.cell(fraction, imputer, learner)
                {
                    writer
                        .write_record([fraction.to_string(), title.clone(), mean.to_string()])
                        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
                }
            }
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
