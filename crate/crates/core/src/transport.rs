//! Exact assignment and balanced optimal transport.
//!
//! Both problems are solved by the same O(n³) shortest-augmenting-path
//! (Hungarian) routine. Rectangular instances are padded to square with the
//! unit unmatched-point penalty, so every real row or column left over after
//! matching costs exactly 1; the padding contributes a constant and does not
//! move the optimum.

use crate::error::{Error, Result};

/// Cost charged to a point left without a partner.
pub const UNMATCHED_PENALTY: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    /// Row-major entries; every entry must be finite and within `[0, 1]`.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        for (k, &value) in data.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::CostOutOfRange { row: k / cols.max(1), col: k % cols.max(1), value });
            }
        }
        Ok(CostMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }
}

/// Minimum-cost injective matching of the smaller index set into the larger.
#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    /// `(row, col)` pairs, sorted by row.
    pub pairs: Vec<(usize, usize)>,
    /// Sum of the matched entries (padding excluded).
    pub cost: f64,
}

/// Optimal plan for a balanced transport problem with uniform weights.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    pub matching: Matching,
    /// Average matched cost, i.e. the transport distance between the two
    /// uniform empirical measures.
    pub mean_cost: f64,
}

/// Exact minimum-cost assignment on a (possibly rectangular) matrix.
pub fn solve_assignment(costs: &CostMatrix) -> Result<Matching> {
    if costs.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let n = costs.rows.max(costs.cols);
    let row_of_col = hungarian(n, |i, j| {
        if i < costs.rows && j < costs.cols {
            costs.get(i, j)
        } else {
            UNMATCHED_PENALTY
        }
    });
    let mut pairs: Vec<(usize, usize)> = row_of_col
        .iter()
        .enumerate()
        .filter(|&(j, &i)| i < costs.rows && j < costs.cols)
        .map(|(j, &i)| (i, j))
        .collect();
    pairs.sort_unstable();
    let cost = pairs.iter().map(|&(i, j)| costs.get(i, j)).sum();
    Ok(Matching { pairs, cost })
}

/// Balanced transport between two uniform empirical measures of equal size.
/// With uniform weights an optimal plan is a permutation, found exactly by the
/// assignment solver.
pub fn solve_balanced_transport(costs: &CostMatrix) -> Result<TransportPlan> {
    if costs.rows != costs.cols {
        return Err(Error::NotSquare { rows: costs.rows, cols: costs.cols });
    }
    let matching = solve_assignment(costs)?;
    let mean_cost = matching.cost / costs.rows as f64;
    Ok(TransportPlan { matching, mean_cost })
}

/// Square Hungarian algorithm with row/column potentials. Returns, for each
/// column, the row assigned to it.
fn hungarian(n: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    // 1-based internally; index 0 is the virtual start column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    (1..=n).map(|j| p[j] - 1).collect()
}
