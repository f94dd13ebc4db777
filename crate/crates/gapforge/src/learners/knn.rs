//! K-nearest-neighbor prediction over complete feature rows.

use crate::error::Result;
use crate::learners::{DesignMatrix, Predictions, Targets, Task};

#[derive(Clone, Debug)]
pub struct KnnModel {
    k: usize,
    task: Task,
    rows: Vec<Vec<f64>>,
    targets: Targets,
}

pub fn fit_knn(data: &DesignMatrix, task: Task, k: usize) -> Result<KnnModel> {
    match (task, data.targets()) {
        (Task::Regression, Targets::Numeric(_)) | (Task::Classification, Targets::Classes { .. }) => {}
        _ => {
            return Err(crate::error::Error::Fit(
                "knn task does not match the target kind".into(),
            ))
        }
    }
    Ok(KnnModel {
        k,
        task,
        rows: data.features().to_vec(),
        targets: data.targets().clone(),
    })
}

impl KnnModel {
    pub fn predict(&self, queries: &[Vec<f64>]) -> Predictions {
        match self.task {
            Task::Regression => Predictions::Numeric(
                queries.iter().map(|q| self.predict_one_numeric(q)).collect(),
            ),
            Task::Classification => Predictions::Classes(
                queries.iter().map(|q| self.predict_one_class(q)).collect(),
            ),
        }
    }

    /// Indices of the k nearest training rows, ordered by (distance, index).
    fn neighbors(&self, query: &[f64]) -> Vec<usize> {
        let mut order: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| (squared_distance(query, row), i))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        order
            .into_iter()
            .take(self.k.min(self.rows.len()))
            .map(|(_, i)| i)
            .collect()
    }

    fn predict_one_numeric(&self, query: &[f64]) -> f64 {
        let neighbors = self.neighbors(query);
        let values = match &self.targets {
            Targets::Numeric(v) => v,
            Targets::Classes { .. } => unreachable!("validated at fit"),
        };
        neighbors.iter().map(|&i| values[i]).sum::<f64>() / neighbors.len() as f64
    }

    fn predict_one_class(&self, query: &[f64]) -> usize {
        let neighbors = self.neighbors(query);
        let (codes, n_classes) = match &self.targets {
            Targets::Classes { codes, n_classes } => (codes, *n_classes),
            Targets::Numeric(_) => unreachable!("validated at fit"),
        };
        let mut votes = vec![0_usize; n_classes];
        for &i in &neighbors {
            votes[codes[i]] += 1;
        }
        // Majority; ties break to the smallest class code.
        let mut best = 0;
        for (code, &count) in votes.iter().enumerate() {
            if count > votes[best] {
                best = code;
            }
        }
        best
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
