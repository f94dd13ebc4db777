//! CART decision trees: greedy splits minimizing child-weighted variance
//! (regression) or Gini impurity (classification).
//!
//! Threshold candidates are midpoints between consecutive sorted distinct
//! feature values. Ties on split quality resolve to the lowest feature
//! index, then the smallest threshold.

use crate::learners::Predictions;

#[derive(Clone, Copy, Debug)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

pub enum TreeTargets<'a> {
    Numeric(&'a [f64]),
    Classes { codes: &'a [usize], n_classes: usize },
}

#[derive(Clone, Debug)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    LeafNumber(f64),
    LeafClass(usize),
}

#[derive(Clone, Debug)]
pub struct TreeModel {
    nodes: Vec<Node>,
    classification: bool,
}

impl TreeModel {
    pub fn predict_number(&self, row: &[f64]) -> f64 {
        match self.leaf(row) {
            Node::LeafNumber(v) => *v,
            Node::LeafClass(c) => *c as f64,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn predict_class(&self, row: &[f64]) -> usize {
        match self.leaf(row) {
            Node::LeafClass(c) => *c,
            Node::LeafNumber(v) => *v as usize,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn predict_many(&self, rows: &[Vec<f64>]) -> Predictions {
        if self.classification {
            Predictions::Classes(rows.iter().map(|r| self.predict_class(r)).collect())
        } else {
            Predictions::Numeric(rows.iter().map(|r| self.predict_number(r)).collect())
        }
    }

    fn leaf(&self, row: &[f64]) -> &Node {
        let mut index = 0;
        loop {
            match &self.nodes[index] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    index = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
                leaf => return leaf,
            }
        }
    }
}

pub fn fit_tree(features: &[Vec<f64>], targets: &TreeTargets<'_>, params: &TreeParams) -> TreeModel {
    let mut builder = Builder {
        features,
        targets,
        params: *params,
        nodes: Vec::new(),
    };
    let rows: Vec<usize> = (0..features.len()).collect();
    builder.build(rows, 0);
    TreeModel {
        nodes: builder.nodes,
        classification: matches!(targets, TreeTargets::Classes { .. }),
    }
}

struct Builder<'a> {
    features: &'a [Vec<f64>],
    targets: &'a TreeTargets<'a>,
    params: TreeParams,
    nodes: Vec<Node>,
}

struct BestSplit {
    score: f64,
    feature: usize,
    threshold: f64,
}

impl<'a> Builder<'a> {
    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let n_features = self.features.first().map_or(0, |r| r.len());
        let can_split = depth < self.params.max_depth
            && rows.len() >= 2 * self.params.min_leaf
            && n_features > 0
            && !self.is_pure(&rows);

        if can_split {
            if let Some(best) = self.best_split(&rows) {
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                    .into_iter()
                    .partition(|&r| self.features[r][best.feature] <= best.threshold);
                let index = self.nodes.len();
                self.nodes.push(Node::LeafNumber(0.0)); // placeholder
                let left = self.build(left_rows, depth + 1);
                let right = self.build(right_rows, depth + 1);
                self.nodes[index] = Node::Split {
                    feature: best.feature,
                    threshold: best.threshold,
                    left,
                    right,
                };
                return index;
            }
        }
        let leaf = self.leaf_node(&rows);
        self.nodes.push(leaf);
        self.nodes.len() - 1
    }

    fn is_pure(&self, rows: &[usize]) -> bool {
        match self.targets {
            TreeTargets::Numeric(values) => {
                let first = values[rows[0]];
                rows.iter().all(|&r| values[r] == first)
            }
            TreeTargets::Classes { codes, .. } => {
                let first = codes[rows[0]];
                rows.iter().all(|&r| codes[r] == first)
            }
        }
    }

    fn leaf_node(&self, rows: &[usize]) -> Node {
        match self.targets {
            TreeTargets::Numeric(values) => {
                let sum: f64 = rows.iter().map(|&r| values[r]).sum();
                Node::LeafNumber(sum / rows.len() as f64)
            }
            TreeTargets::Classes { codes, n_classes } => {
                let mut counts = vec![0_usize; *n_classes];
                for &r in rows {
                    counts[codes[r]] += 1;
                }
                // Majority; ties break to the smallest class code.
                let mut best = 0;
                for (code, &count) in counts.iter().enumerate() {
                    if count > counts[best] {
                        best = code;
                    }
                }
                Node::LeafClass(best)
            }
        }
    }

    fn best_split(&self, rows: &[usize]) -> Option<BestSplit> {
        let n_features = self.features[rows[0]].len();
        let parent_score = self.node_score(rows);
        let mut best: Option<BestSplit> = None;

        let mut order: Vec<usize> = rows.to_vec();
        for feature in 0..n_features {
            order.sort_by(|&a, &b| self.features[a][feature].total_cmp(&self.features[b][feature]));
            self.scan_feature(feature, &order, parent_score, &mut best);
        }
        best
    }

    /// Scans all candidate thresholds of one feature over pre-sorted rows,
    /// maintaining left/right statistics incrementally.
    fn scan_feature(
        &self,
        feature: usize,
        order: &[usize],
        parent_score: f64,
        best: &mut Option<BestSplit>,
    ) {
        let n = order.len();
        let min_leaf = self.params.min_leaf;
        match self.targets {
            TreeTargets::Numeric(values) => {
                let total_sum: f64 = order.iter().map(|&r| values[r]).sum();
                let total_sumsq: f64 = order.iter().map(|&r| values[r] * values[r]).sum();
                let mut left_sum = 0.0;
                let mut left_sumsq = 0.0;
                for i in 1..n {
                    let y = values[order[i - 1]];
                    left_sum += y;
                    left_sumsq += y * y;
                    let previous = self.features[order[i - 1]][feature];
                    let current = self.features[order[i]][feature];
                    if previous >= current || i < min_leaf || n - i < min_leaf {
                        continue;
                    }
                    let left_sse = sse(left_sum, left_sumsq, i);
                    let right_sse = sse(total_sum - left_sum, total_sumsq - left_sumsq, n - i);
                    let score = left_sse + right_sse;
                    if score < parent_score && best.as_ref().is_none_or(|b| score < b.score) {
                        *best = Some(BestSplit {
                            score,
                            feature,
                            threshold: midpoint(previous, current),
                        });
                    }
                }
            }
            TreeTargets::Classes { codes, n_classes } => {
                let mut total_counts = vec![0_usize; *n_classes];
                for &r in order {
                    total_counts[codes[r]] += 1;
                }
                let total_sq: f64 = total_counts.iter().map(|&c| (c * c) as f64).sum();
                let mut left_counts = vec![0_usize; *n_classes];
                let mut left_sq = 0.0;
                let mut right_sq = total_sq;
                for i in 1..n {
                    let code = codes[order[i - 1]];
                    // Incremental update of sum of squared counts.
                    left_sq += (2 * left_counts[code] + 1) as f64;
                    right_sq -= (2 * (total_counts[code] - left_counts[code]) - 1) as f64;
                    left_counts[code] += 1;
                    let previous = self.features[order[i - 1]][feature];
                    let current = self.features[order[i]][feature];
                    if previous >= current || i < min_leaf || n - i < min_leaf {
                        continue;
                    }
                    let left_n = i as f64;
                    let right_n = (n - i) as f64;
                    // Weighted Gini, scaled by the node size.
                    let score = (left_n - left_sq / left_n) + (right_n - right_sq / right_n);
                    if score < parent_score && best.as_ref().is_none_or(|b| score < b.score) {
                        *best = Some(BestSplit {
                            score,
                            feature,
                            threshold: midpoint(previous, current),
                        });
                    }
                }
            }
        }
    }

    fn node_score(&self, rows: &[usize]) -> f64 {
        match self.targets {
            TreeTargets::Numeric(values) => {
                let sum: f64 = rows.iter().map(|&r| values[r]).sum();
                let sumsq: f64 = rows.iter().map(|&r| values[r] * values[r]).sum();
                sse(sum, sumsq, rows.len())
            }
            TreeTargets::Classes { codes, n_classes } => {
                let mut counts = vec![0_usize; *n_classes];
                for &r in rows {
                    counts[codes[r]] += 1;
                }
                let sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
                let n = rows.len() as f64;
                n - sq / n
            }
        }
    }
}

fn sse(sum: f64, sumsq: f64, n: usize) -> f64 {
    (sumsq - sum * sum / n as f64).max(0.0)
}

/// Midpoint kept strictly below the upper value so threshold routing
/// (`<=` goes left) reproduces the training partition exactly.
fn midpoint(lower: f64, upper: f64) -> f64 {
    let mid = lower + (upper - lower) / 2.0;
    if mid >= upper {
        lower
    } else {
        mid
    }
}
