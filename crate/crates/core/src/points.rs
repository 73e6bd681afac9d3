use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::matrix::{sq_dist, DenseMatrix};

/// `n` points in `R^d`, stored row-major with stable indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    n: usize,
    d: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(d: usize, coords: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("point dimension must be at least 1".into()));
        }
        if coords.is_empty() || coords.len() % d != 0 {
            return Err(Error::DimensionMismatch { expected: d, found: coords.len() % d });
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        Ok(Self { n: coords.len() / d, d, coords })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map(|r| r.len()).ok_or_else(|| {
            Error::InvalidParameter("a point set needs at least one point".into())
        })?;
        let mut coords = Vec::with_capacity(rows.len() * d);
        for r in rows {
            if r.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: r.len() });
            }
            coords.extend_from_slice(r);
        }
        Self::new(d, coords)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        sq_dist(self.point(i), self.point(j)).sqrt()
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            if i >= self.n {
                return Err(Error::InvalidParameter(format!("index {i} out of range for {} points", self.n)));
            }
            coords.extend_from_slice(self.point(i));
        }
        Self::new(self.d, coords)
    }

    pub fn distance_matrix(&self, exec: Execution) -> DenseMatrix {
        let n = self.n;
        let mut m = DenseMatrix::zeros(n, n);
        exec::for_each_row(exec, m.as_mut_slice(), n, |i, row| {
            let pi = self.point(i);
            for (j, v) in row.iter_mut().enumerate() {
                *v = sq_dist(pi, self.point(j)).sqrt();
            }
        });
        m
    }
}

/// A labelling of `n` items into `k` nonempty clusters `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidPartition("no labels".into()));
        }
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; k];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("cluster {missing} is empty")));
        }
        Ok(Self { labels, k })
    }

    /// Relabel clusters in order of first appearance.
    pub fn canonical(labels: &[usize]) -> Result<Self> {
        let mut map = std::collections::HashMap::new();
        let relabelled = labels
            .iter()
            .map(|&l| {
                let next = map.len();
                *map.entry(l).or_insert(next)
            })
            .collect();
        Self::new(relabelled)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for &l in &self.labels {
            out[l] += 1;
        }
        out
    }

    /// Equal as set partitions, ignoring cluster names.
    pub fn same_clusters(&self, other: &Partition) -> bool {
        self.len() == other.len()
            && self.k == other.k
            && Partition::canonical(&self.labels).ok() == Partition::canonical(&other.labels).ok()
    }
}
