//! Rectangular linear assignment.
//!
//! `min_cost_assignment` is the shortest-augmenting-path Hungarian method with
//! row/column potentials, O(n^2 m) for an `n x m` matrix with `n <= m`.
//! `solve_assignment` wraps it to maximize similarity under a gate.

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, fill: f64) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![fill; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Panics if the rows have different lengths.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged matrix");
            data.extend_from_slice(r);
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    pub fn transposed(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }
}

/// Output of an assignment: matched `(row, col)` pairs sorted by row, plus
/// the rows and columns left over, each sorted ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
}

impl Assignment {
    fn unmatched(rows: usize, cols: usize) -> Self {
        Assignment {
            pairs: Vec::new(),
            unmatched_rows: (0..rows).collect(),
            unmatched_cols: (0..cols).collect(),
        }
    }

    fn from_pairs(mut pairs: Vec<(usize, usize)>, rows: usize, cols: usize) -> Self {
        pairs.sort_unstable();
        let mut row_used = vec![false; rows];
        let mut col_used = vec![false; cols];
        for &(r, c) in &pairs {
            row_used[r] = true;
            col_used[c] = true;
        }
        Assignment {
            unmatched_rows: (0..rows).filter(|&r| !row_used[r]).collect(),
            unmatched_cols: (0..cols).filter(|&c| !col_used[c]).collect(),
            pairs,
        }
    }

    /// Sum of `m` over the matched pairs, accumulated in row order.
    pub fn total(&self, m: &Matrix) -> f64 {
        self.pairs.iter().map(|&(r, c)| m.get(r, c)).sum()
    }
}

/// Minimum-cost assignment covering every row or every column, whichever
/// side is smaller. Returns `(row, col)` pairs sorted by row.
pub fn min_cost_assignment(cost: &Matrix) -> Vec<(usize, usize)> {
    if cost.is_empty() {
        return Vec::new();
    }
    if cost.rows() > cost.cols() {
        let mut pairs: Vec<_> = hungarian(&cost.transposed())
            .into_iter()
            .map(|(c, r)| (r, c))
            .collect();
        pairs.sort_unstable();
        return pairs;
    }
    hungarian(cost)
}

// Requires rows <= cols. Indices inside are 1-based; slot 0 is the virtual
// column used to start each augmenting search.
fn hungarian(cost: &Matrix) -> Vec<(usize, usize)> {
    let n = cost.rows();
    let m = cost.cols();
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut col_owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut minv = vec![0.0f64; m + 1];
    let mut used = vec![false; m + 1];

    for i in 1..=n {
        col_owner[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|x| *x = f64::INFINITY);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost.get(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs: Vec<(usize, usize)> = (1..=m)
        .filter(|&j| col_owner[j] != 0)
        .map(|j| (col_owner[j] - 1, j - 1))
        .collect();
    pairs.sort_unstable();
    pairs
}

/// Maximum-similarity one-to-one assignment.
///
/// Pairs below `min_similarity` (or non-finite) are infeasible: they are
/// priced above any total of feasible pairs, so the solver uses as many
/// feasible pairs as possible and maximizes their summed similarity, and any
/// infeasible pair it is forced to take is then reported as unmatched.
pub fn solve_assignment(similarity: &Matrix, min_similarity: f64) -> Assignment {
    let (rows, cols) = (similarity.rows(), similarity.cols());
    let feasible = |s: f64| s.is_finite() && s >= min_similarity;

    let mut max_entry = f64::NEG_INFINITY;
    let mut min_entry = f64::INFINITY;
    for &s in similarity.data.iter().filter(|&&s| feasible(s)) {
        max_entry = max_entry.max(s);
        min_entry = min_entry.min(s);
    }
    if max_entry == f64::NEG_INFINITY {
        return Assignment::unmatched(rows, cols);
    }

    let k = rows.min(cols) as f64;
    let infeasible_cost = k * (max_entry - min_entry) + 1.0;
    let cost = Matrix::from_fn(rows, cols, |r, c| {
        let s = similarity.get(r, c);
        if feasible(s) {
            max_entry - s
        } else {
            infeasible_cost
        }
    });

    let pairs = min_cost_assignment(&cost)
        .into_iter()
        .filter(|&(r, c)| feasible(similarity.get(r, c)))
        .collect();
    Assignment::from_pairs(pairs, rows, cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_dominance() {
        let m = Matrix::from_rows(&[[0.9, 0.1], [0.1, 0.9]]);
        let a = solve_assignment(&m, 0.0);
        assert_eq!(a.pairs, vec![(0, 0), (1, 1)]);
        assert!(a.unmatched_rows.is_empty() && a.unmatched_cols.is_empty());
    }

    #[test]
    fn gate_rejects() {
        let a = solve_assignment(&Matrix::from_rows(&[[0.9]]), 0.95);
        assert!(a.pairs.is_empty());
        assert_eq!(a.unmatched_rows, vec![0]);
        assert_eq!(a.unmatched_cols, vec![0]);
    }

    #[test]
    fn gate_boundary_is_inclusive() {
        let a = solve_assignment(&Matrix::from_rows(&[[0.4]]), 0.4);
        assert_eq!(a.pairs, vec![(0, 0)]);
    }

    #[test]
    fn empty_matrix() {
        let a = solve_assignment(&Matrix::new(0, 3, 0.0), 0.0);
        assert_eq!(a.unmatched_cols, vec![0, 1, 2]);
        let a = solve_assignment(&Matrix::new(2, 0, 0.0), 0.0);
        assert_eq!(a.unmatched_rows, vec![0, 1]);
    }

    #[test]
    fn rectangular_both_orientations() {
        let wide = Matrix::from_rows(&[[0.1, 0.8, 0.3], [0.7, 0.9, 0.2]]);
        let a = solve_assignment(&wide, f64::NEG_INFINITY);
        assert_eq!(a.pairs, vec![(0, 1), (1, 0)]);
        assert_eq!(a.unmatched_cols, vec![2]);

        let tall = wide.transposed();
        let b = solve_assignment(&tall, f64::NEG_INFINITY);
        assert_eq!(b.pairs, vec![(0, 1), (1, 0)]);
        assert_eq!(b.unmatched_rows, vec![2]);
    }

    #[test]
    fn gated_pair_prefers_more_feasible_matches() {
        // Taking (0,0) alone is worth more similarity, but (0,1)+(1,0) keeps
        // two pairs above the gate.
        let m = Matrix::from_rows(&[[0.95, 0.3], [0.35, -1.0]]);
        let a = solve_assignment(&m, 0.2);
        assert_eq!(a.pairs, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn negative_similarities_are_handled() {
        let m = Matrix::from_rows(&[[-3.0, -0.5], [-0.2, -4.0]]);
        let a = solve_assignment(&m, f64::NEG_INFINITY);
        assert_eq!(a.pairs, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn deterministic_on_ties() {
        let m = Matrix::new(4, 4, 0.5);
        let first = solve_assignment(&m, 0.0);
        for _ in 0..10 {
            assert_eq!(solve_assignment(&m, 0.0), first);
        }
        assert_eq!(first.pairs.len(), 4);
    }
}
