//! Maximum-weight bipartite assignment (Hungarian method with potentials).

/// Result of an assignment: partner column per row and the summed weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub total: i64,
    pub rows: Vec<Option<usize>>,
}

/// Minimum-cost perfect matching on a square matrix; returns the column
/// chosen for each row.
fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    const INF: i64 = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
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
    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Optimal assignment restricted to the given rows and columns. Weights must
/// be non-negative; a zero weight means the pair is not allowed.
fn solve(weights: &[Vec<i64>], rows: &[usize], cols: &[usize]) -> Assignment {
    let n = rows.len().max(cols.len());
    let mut cost = vec![vec![0i64; n]; n];
    for (a, &r) in rows.iter().enumerate() {
        for (b, &c) in cols.iter().enumerate() {
            cost[a][b] = -weights[r][c];
        }
    }
    let picked = hungarian(&cost);
    let mut out = vec![None; weights.len()];
    let mut total = 0;
    for (a, &r) in rows.iter().enumerate() {
        let b = picked[a];
        if b < cols.len() && weights[r][cols[b]] > 0 {
            out[r] = Some(cols[b]);
            total += weights[r][cols[b]];
        }
    }
    Assignment { total, rows: out }
}

/// Maximum total weight assignment. Among all optimal assignments, the one
/// whose (row, column) pairs are lexicographically smallest is returned:
/// rows are settled in index order, each taking the lowest-index column
/// that still admits an optimal completion (a partner is preferred over
/// none). Callers order rows and columns by their tie-break key.
pub fn max_weight_assignment(weights: &[Vec<i64>], cols: usize) -> Assignment {
    let rows = weights.len();
    let all_rows: Vec<usize> = (0..rows).collect();
    let mut free_cols: Vec<usize> = (0..cols).collect();
    if rows == 0 || cols == 0 {
        return Assignment {
            total: 0,
            rows: vec![None; rows],
        };
    }
    let best = solve(weights, &all_rows, &free_cols).total;
    let mut fixed_total = 0i64;
    let mut result = vec![None; rows];

    for i in 0..rows {
        let remaining_rows: Vec<usize> = ((i + 1)..rows).collect();
        let mut current_rows = vec![i];
        current_rows.extend_from_slice(&remaining_rows);
        let current = solve(weights, &current_rows, &free_cols);
        debug_assert_eq!(fixed_total + current.total, best);
        let proposed = current.rows[i];

        let mut chosen = proposed;
        for &j in &free_cols {
            if Some(j) == proposed {
                break;
            }
            if weights[i][j] <= 0 {
                continue;
            }
            let rest: Vec<usize> = free_cols.iter().copied().filter(|&c| c != j).collect();
            if fixed_total + weights[i][j] + solve(weights, &remaining_rows, &rest).total == best {
                chosen = Some(j);
                break;
            }
        }
        if let Some(j) = chosen {
            fixed_total += weights[i][j];
            free_cols.retain(|&c| c != j);
            result[i] = Some(j);
        }
    }
    Assignment {
        total: fixed_total,
        rows: result,
    }
}
