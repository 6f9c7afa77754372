//! Optimal one-to-one assignment (Hungarian algorithm with potentials,
//! O(n^2 m)). Used for matching factor columns by cosine similarity and
//! cluster labels by confusion counts.

use nalgebra::DMatrix;

/// Maximize the summed score over one-to-one assignments of rows to
/// columns; every row of the shorter side is matched. Returns (row, col)
/// pairs.
pub fn assign_max(score: &DMatrix<f64>) -> Vec<(usize, usize)> {
    if score.nrows() == 0 || score.ncols() == 0 {
        return Vec::new();
    }
    if score.nrows() > score.ncols() {
        let transposed = score.transpose();
        return assign_min(&transposed.map(|s| -s))
            .into_iter()
            .map(|(r, c)| (c, r))
            .collect();
    }
    assign_min(&score.map(|s| -s))
}

/// Minimize the summed cost; requires nrows <= ncols.
fn assign_min(cost: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let n = cost.nrows();
    let m = cost.ncols();
    debug_assert!(n <= m);
    // 1-indexed potentials; p[j] is the row matched to column j.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
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
    let mut pairs: Vec<(usize, usize)> = (1..=m)
        .filter(|&j| p[j] != 0)
        .map(|j| (p[j] - 1, j - 1))
        .collect();
    pairs.sort_unstable();
    pairs
}
