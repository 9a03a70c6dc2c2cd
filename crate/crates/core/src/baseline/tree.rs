use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Splits must lower the weighted impurity by more than this.
const MIN_DECREASE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 12,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        class: usize,
        class_distribution: Vec<usize>,
    },
}

/// CART classifier; `nodes[0]` is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_features: usize,
    pub n_classes: usize,
    pub params: TreeParams,
    pub nodes: Vec<Node>,
}

/// `1 − Σ p²` of a class histogram; 0 for an empty one.
pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    // first maximum wins, i.e. the lowest class index on ties
    counts
        .iter()
        .enumerate()
        .fold((0, 0), |best, (k, &c)| if c > best.1 { (k, c) } else { best })
        .0
}

struct Split {
    feature: usize,
    threshold: f64,
    score: f64,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    params: TreeParams,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn histogram(&self, idx: &[usize]) -> Vec<usize> {
        let mut h = vec![0; self.n_classes];
        for &i in idx {
            h[self.y[i]] += 1;
        }
        h
    }

    /// Lowest weighted child impurity; ties keep the lower feature, then the
    /// lower threshold, because candidates are visited in that order.
    fn best_split(&self, idx: &[usize], total: &[usize]) -> Option<Split> {
        let n = idx.len() as f64;
        let mut best: Option<Split> = None;
        let mut order = idx.to_vec();
        for feature in 0..self.x[0].len() {
            order.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]).then(a.cmp(&b)));
            let mut left = vec![0usize; self.n_classes];
            let mut right = total.to_vec();
            for k in 0..order.len() - 1 {
                let label = self.y[order[k]];
                left[label] += 1;
                right[label] -= 1;
                let (lo, hi) = (self.x[order[k]][feature], self.x[order[k + 1]][feature]);
                if lo == hi {
                    continue;
                }
                let nl = (k + 1) as f64;
                let score = (nl * gini(&left) + (n - nl) * gini(&right)) / n;
                if best.as_ref().is_none_or(|b| score < b.score) {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some(Split {
                        feature,
                        threshold,
                        score,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.histogram(&idx);
        let impurity = gini(&counts);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf {
            class: majority(&counts),
            class_distribution: counts.clone(),
        });
        if depth >= self.params.max_depth || idx.len() < self.params.min_samples_split.max(2) || impurity == 0.0 {
            return at;
        }
        let Some(split) = self.best_split(&idx, &counts) else {
            return at;
        };
        if impurity - split.score <= MIN_DECREASE {
            return at;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[i][split.feature] <= split.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }
}

/// Greedy Gini CART on rows `x` with labels `y < n_classes`.
pub fn tree_fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, params: TreeParams) -> Result<DecisionTree> {
    if x.is_empty() {
        return Err(Error::Usage("cannot fit a tree on zero samples".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Shape(format!("{} feature rows but {} labels", x.len(), y.len())));
    }
    let n_features = x[0].len();
    if n_features == 0 || x.iter().any(|r| r.len() != n_features) {
        return Err(Error::Shape("feature rows must share a positive length".into()));
    }
    if let Some(&bad) = y.iter().find(|&&l| l >= n_classes) {
        return Err(Error::Usage(format!(
            "label {bad} out of range for {n_classes} classes"
        )));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Usage("features must be finite".into()));
    }
    let mut b = Builder {
        x,
        y,
        n_classes,
        params,
        nodes: Vec::new(),
    };
    b.grow((0..x.len()).collect(), 0);
    Ok(DecisionTree {
        n_features,
        n_classes,
        params,
        nodes: b.nodes,
    })
}

impl DecisionTree {
    pub fn predict_one(&self, row: &[f64]) -> Result<usize> {
        if row.len() != self.n_features {
            return Err(Error::Shape(format!(
                "tree expects {} features, got {}",
                self.n_features,
                row.len()
            )));
        }
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { class, .. } => return Ok(*class),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<usize>> {
        x.iter().map(|r| self.predict_one(r)).collect()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Node structure without thresholds, for comparing fitted topologies.
    pub fn topology(&self) -> Vec<Option<(usize, usize, usize)>> {
        self.nodes
            .iter()
            .map(|n| match n {
                Node::Split {
                    feature, left, right, ..
                } => Some((*feature, *left, *right)),
                Node::Leaf { .. } => None,
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<DecisionTree> {
        let t: DecisionTree = serde_json::from_str(text).map_err(|e| Error::Format(format!("corrupt tree: {e}")))?;
        t.check()?;
        Ok(t)
    }

    /// Child links in range and leaf distributions of the declared width.
    fn check(&self) -> Result<()> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(Error::Format("tree has no nodes".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let ok = match node {
                Node::Split {
                    feature, left, right, ..
                } => *feature < self.n_features && *left > i && *right > i && *left < n && *right < n,
                Node::Leaf {
                    class,
                    class_distribution,
                } => *class < self.n_classes && class_distribution.len() == self.n_classes,
            };
            if !ok {
                return Err(Error::Format(format!("tree node {i} is inconsistent")));
            }
        }
        Ok(())
    }
}
