//! Maximum-weight assignment on a rectangular matrix (Hungarian method with
//! potentials, O(r²c)).

/// Maximum total weight of a matching that pairs every row of the smaller
/// side with a distinct column of the larger side.
///
/// Returns the total and, for each row of `w`, the matched column (or `None`
/// when `w` has more rows than columns and the row was left out).
pub fn max_weight_assignment(w: &[Vec<f64>]) -> (f64, Vec<Option<usize>>) {
    let rows = w.len();
    let cols = w.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 {
        return (0.0, vec![None; rows]);
    }
    if rows <= cols {
        let cost: Vec<Vec<f64>> = w.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
        let row_to_col = hungarian_min(&cost);
        let total = row_to_col.iter().enumerate().map(|(i, &j)| w[i][j]).sum();
        (total, row_to_col.into_iter().map(Some).collect())
    } else {
        let cost: Vec<Vec<f64>> = (0..cols)
            .map(|j| (0..rows).map(|i| -w[i][j]).collect())
            .collect();
        let col_to_row = hungarian_min(&cost);
        let mut out = vec![None; rows];
        let mut total = 0.0;
        for (j, &i) in col_to_row.iter().enumerate() {
            out[i] = Some(j);
            total += w[i][j];
        }
        (total, out)
    }
}

/// Minimum-cost assignment of each row to a distinct column; requires
/// `rows <= cols`.
fn hungarian_min(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let m = cost[0].len();
    debug_assert!(n <= m);
    // 1-based arrays; index 0 is the virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
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
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
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
    let mut row_to_col = vec![0usize; n];
    for j in 1..=m {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}
