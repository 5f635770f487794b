use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "train" => Some(Split::Train),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// Points with their ground-truth concept labels and split tags.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    dim: usize,
    num_classes: usize,
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
    splits: Vec<Split>,
}

impl LabeledDataset {
    /// Builds a dataset whose points all carry the same split tag.
    pub fn new(
        dim: usize,
        num_classes: usize,
        points: Vec<Vec<f64>>,
        labels: Vec<usize>,
        split: Split,
    ) -> Result<Self> {
        let splits = vec![split; points.len()];
        Self::with_splits(dim, num_classes, points, labels, splits)
    }

    pub fn with_splits(
        dim: usize,
        num_classes: usize,
        points: Vec<Vec<f64>>,
        labels: Vec<usize>,
        splits: Vec<Split>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDataset("dimension must be at least 1".into()));
        }
        if num_classes < 2 {
            return Err(Error::InvalidDataset("need at least two classes".into()));
        }
        if points.len() != labels.len() || points.len() != splits.len() {
            return Err(Error::InvalidDataset(format!(
                "{} points, {} labels, {} split tags",
                points.len(),
                labels.len(),
                splits.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: p.len(),
            });
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(Error::InvalidDataset(format!(
                "label {y} outside 0..{num_classes}"
            )));
        }
        Ok(Self {
            dim,
            num_classes,
            points,
            labels,
            splits,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], usize)> + '_ {
        self.points
            .iter()
            .map(Vec::as_slice)
            .zip(self.labels.iter().copied())
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            dim: self.dim,
            num_classes: self.num_classes,
            points: indices.iter().map(|&i| self.points[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            splits: indices.iter().map(|&i| self.splits[i]).collect(),
        }
    }

    pub fn filter_split(&self, split: Split) -> Self {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.splits[i] == split).collect();
        self.subset(&idx)
    }

    /// Concatenates two datasets with identical dimension and class count.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        let mut out = self.clone();
        out.num_classes = self.num_classes.max(other.num_classes);
        out.points.extend(other.points.iter().cloned());
        out.labels.extend(other.labels.iter().copied());
        out.splits.extend(other.splits.iter().copied());
        Ok(out)
    }

    /// Same points with replacement labels (e.g. labels returned by a victim).
    pub fn relabel(&self, labels: Vec<usize>) -> Result<Self> {
        Self::with_splits(
            self.dim,
            self.num_classes,
            self.points.clone(),
            labels,
            self.splits.clone(),
        )
    }

    /// Fraction of points carrying the most frequent label.
    pub fn majority_rate(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let mut counts = vec![0usize; self.num_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        *counts.iter().max().unwrap() as f64 / self.len() as f64
    }

    /// Per-dimension `(min, max)` over all points.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut b = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for p in &self.points {
            for (j, &v) in p.iter().enumerate() {
                b[j].0 = b[j].0.min(v);
                b[j].1 = b[j].1.max(v);
            }
        }
        b
    }

    /// Writes `x_1..x_d,label,split` rows in dataset order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.dim).map(|j| format!("x_{j}")).collect();
        header.push("label".into());
        header.push("split".into());
        w.write_record(&header)?;
        for i in 0..self.len() {
            // `{:?}` on f64 prints the shortest representation that round-trips.
            let mut row: Vec<String> = self.points[i].iter().map(|v| format!("{v:?}")).collect();
            row.push(self.labels[i].to_string());
            row.push(self.splits[i].as_str().to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format produced by [`LabeledDataset::write_csv`].
    ///
    /// When `num_classes` is `None` it is inferred as `max label + 1` (at least 2).
    pub fn read_csv<R: Read>(reader: R, num_classes: Option<usize>) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let n = header.len();
        if n < 3 || &header[n - 2] != "label" || &header[n - 1] != "split" {
            return Err(Error::InvalidDataset(
                "header must be x_1..x_d,label,split".into(),
            ));
        }
        for (j, name) in header.iter().take(n - 2).enumerate() {
            if name != format!("x_{}", j + 1) {
                return Err(Error::InvalidDataset(format!(
                    "column {} is `{name}`, expected `x_{}`",
                    j + 1,
                    j + 1
                )));
            }
        }
        let dim = n - 2;
        let mut points = Vec::new();
        let mut labels = Vec::new();
        let mut splits = Vec::new();
        for (row, record) in r.records().enumerate() {
            let record = record?;
            let line = row + 2;
            let bad = |what: &str| Error::InvalidDataset(format!("line {line}: {what}"));
            let x = record
                .iter()
                .take(dim)
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad("non-numeric feature"))?;
            let y = record[dim]
                .trim()
                .parse::<usize>()
                .map_err(|_| bad("label is not a non-negative integer"))?;
            let s = Split::parse(&record[dim + 1]).ok_or_else(|| bad("split must be train or test"))?;
            points.push(x);
            labels.push(y);
            splits.push(s);
        }
        let c = num_classes.unwrap_or_else(|| labels.iter().max().map_or(2, |&m| (m + 1).max(2)));
        Self::with_splits(dim, c, points, labels, splits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> LabeledDataset {
        LabeledDataset::with_splits(
            2,
            3,
            vec![vec![0.1, -2.0], vec![1.0 / 3.0, 5e-300], vec![7.0, 8.5]],
            vec![0, 2, 1],
            vec![Split::Train, Split::Test, Split::Test],
        )
        .unwrap()
    }

    #[test]
    fn rejects_inconsistent_inputs() {
        assert!(LabeledDataset::new(2, 2, vec![vec![0.0, 1.0]], vec![], Split::Train).is_err());
        assert!(LabeledDataset::new(2, 2, vec![vec![0.0]], vec![0], Split::Train).is_err());
        assert!(LabeledDataset::new(1, 2, vec![vec![0.0]], vec![2], Split::Train).is_err());
    }

    #[test]
    fn csv_round_trip_preserves_order_and_bits() {
        let d = tiny();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x_1,x_2,label,split\n"));
        let back = LabeledDataset::read_csv(buf.as_slice(), Some(3)).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn csv_errors_name_the_line() {
        let text = "x_1,label,split\n0.5,1,train\nabc,0,test\n";
        let err = LabeledDataset::read_csv(text.as_bytes(), None).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn filter_split_keeps_order() {
        let t = tiny().filter_split(Split::Test);
        assert_eq!(t.labels(), &[2, 1]);
    }
}
