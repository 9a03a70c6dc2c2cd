use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts indexed `[true][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(class_names: Vec<String>) -> Self {
        let c = class_names.len();
        ConfusionMatrix {
            class_names,
            counts: vec![vec![0; c]; c],
        }
    }

    pub fn from_predictions(class_names: Vec<String>, truth: &[usize], predicted: &[usize]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Shape(format!(
                "{} labels but {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut m = ConfusionMatrix::new(class_names);
        let c = m.n_classes();
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= c || p >= c {
                return Err(Error::Usage(format!("class index out of range for {c} classes")));
            }
            m.counts[t][p] += 1;
        }
        Ok(m)
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    /// `trace / total`; 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.correct() as f64 / n as f64,
        }
    }

    /// Fraction of class `k` samples predicted as `k`; `None` if the class is absent.
    pub fn recall(&self, k: usize) -> Option<f64> {
        let row: u64 = self.counts[k].iter().sum();
        (row > 0).then(|| self.counts[k][k] as f64 / row as f64)
    }

    /// Fraction of predictions of `k` that are correct; `None` if never predicted.
    pub fn precision(&self, k: usize) -> Option<f64> {
        let col: u64 = self.counts.iter().map(|r| r[k]).sum();
        (col > 0).then(|| self.counts[k][k] as f64 / col as f64)
    }

    /// Element-wise sum; both matrices must share class names.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if self.class_names != other.class_names {
            return Err(Error::Shape(
                "cannot merge confusion matrices over different classes".into(),
            ));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }

    /// Frobenius distance between row-normalized matrices.
    pub fn normalized_distance(&self, other: &ConfusionMatrix) -> f64 {
        let norm = |m: &ConfusionMatrix, i: usize, j: usize| {
            let row: u64 = m.counts[i].iter().sum();
            if row == 0 {
                0.0
            } else {
                m.counts[i][j] as f64 / row as f64
            }
        };
        let c = self.n_classes().min(other.n_classes());
        let mut s = 0.0;
        for i in 0..c {
            for j in 0..c {
                s += (norm(self, i, j) - norm(other, i, j)).powi(2);
            }
        }
        s.sqrt()
    }

    /// Header `true\predicted,<names>` then one row per true class.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for n in &self.class_names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (name, row) in self.class_names.iter().zip(&self.counts) {
            out.push_str(name);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    /// Right-aligned plain-text table.
    pub fn render_text(&self) -> String {
        let label_w = self.class_names.iter().map(|n| n.len()).max().unwrap_or(0).max(4);
        let col_w = self
            .class_names
            .iter()
            .map(|n| n.len())
            .chain(self.counts.iter().flatten().map(|v| v.to_string().len()))
            .max()
            .unwrap_or(1);
        let mut out = format!("{:>label_w$}", "");
        for n in &self.class_names {
            let _ = write!(out, " {n:>col_w$}");
        }
        out.push('\n');
        for (name, row) in self.class_names.iter().zip(&self.counts) {
            let _ = write!(out, "{name:>label_w$}");
            for v in row {
                let _ = write!(out, " {v:>col_w$}");
            }
            out.push('\n');
        }
        out
    }
}
