use crate::error::{Error, Result};

/// Per-cell reconstruction points and sample counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Centroids {
    pub points: Vec<Vec<f64>>,
    pub counts: Vec<u64>,
}

impl Centroids {
    pub fn empty_cells(&self) -> usize {
        self.counts.iter().filter(|&&c| c == 0).count()
    }
}

/// Accumulates per-cell sums in a fixed order; mergeable across chunks.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CellSums {
    dim: usize,
    sums: Vec<f64>,
    counts: Vec<u64>,
}

impl CellSums {
    pub(crate) fn new(cells: usize, dim: usize) -> Self {
        Self {
            dim,
            sums: vec![0.0; cells * dim],
            counts: vec![0; cells],
        }
    }

    pub(crate) fn add(&mut self, cell: usize, v: &[f64]) {
        self.counts[cell] += 1;
        for (s, x) in self.sums[cell * self.dim..(cell + 1) * self.dim]
            .iter_mut()
            .zip(v)
        {
            *s += x;
        }
    }

    pub(crate) fn merge(&mut self, other: &CellSums) {
        self.sums
            .iter_mut()
            .zip(&other.sums)
            .for_each(|(a, b)| *a += b);
        self.counts
            .iter_mut()
            .zip(&other.counts)
            .for_each(|(a, b)| *a += b);
    }

    /// Cell means; empty cells get the global mean.
    pub(crate) fn finish(&self, label: &str) -> Result<Centroids> {
        let total: u64 = self.counts.iter().sum();
        if total == 0 {
            return Err(Error::invalid("no samples"));
        }
        let cells = self.counts.len();
        let global: Vec<f64> = (0..self.dim)
            .map(|d| (0..cells).map(|c| self.sums[c * self.dim + d]).sum::<f64>() / total as f64)
            .collect();
        let mut empty = 0;
        let points = (0..cells)
            .map(|c| {
                let n = self.counts[c];
                if n == 0 {
                    empty += 1;
                    global.clone()
                } else {
                    self.sums[c * self.dim..(c + 1) * self.dim]
                        .iter()
                        .map(|s| s / n as f64)
                        .collect()
                }
            })
            .collect();
        if empty > 0 {
            log::info!("{label}: {empty} of {cells} cells empty; using the global mean there");
        }
        if cells > 1 && self.counts.iter().filter(|&&c| c > 0).count() == 1 {
            log::warn!("{label}: every sample fell into a single cell");
        }
        Ok(Centroids {
            points,
            counts: self.counts.clone(),
        })
    }
}

/// Empirical mean of `y` within each of the `cells` cells defined by
/// `cell_of(x)`. Empty cells are reconstructed at the global mean.
pub fn centroids_from_samples<X>(
    cell_of: impl Fn(&X) -> usize,
    samples: &[(X, Vec<f64>)],
    cells: usize,
) -> Result<Centroids> {
    if cells == 0 {
        return Err(Error::invalid("need at least one cell"));
    }
    let Some((_, first)) = samples.first() else {
        return Err(Error::invalid("no samples"));
    };
    let mut sums = CellSums::new(cells, first.len());
    for (x, y) in samples {
        let c = cell_of(x);
        if c >= cells {
            return Err(Error::invalid(format!(
                "cell index {c} out of range 0..{cells}"
            )));
        }
        if y.len() != first.len() {
            return Err(Error::invalid(
                "samples have inconsistent target dimensions",
            ));
        }
        sums.add(c, y);
    }
    sums.finish("centroids")
}
