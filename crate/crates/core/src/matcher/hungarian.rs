//! Maximum-weight assignment on a rectangular matrix.
//!
//! Shortest augmenting path Hungarian algorithm with potentials, run on the
//! implicitly zero-padded square matrix, O(n^3).

/// Returns `assignment[row] = Some(col)` for every real row assigned to a
/// real column. Columns assigned to padding rows are not reported.
pub(crate) fn max_weight_assignment(rows: usize, cols: usize, weight: impl Fn(usize, usize) -> f64) -> Vec<Option<usize>> {
    let n = rows.max(cols);
    if n == 0 {
        return vec![None; rows];
    }
    let mut max_w = 0.0f64;
    for r in 0..rows {
        for c in 0..cols {
            max_w = max_w.max(weight(r, c));
        }
    }
    // Cost minimization on (max_w - w); padded cells have weight 0.
    let cost = |r: usize, c: usize| -> f64 {
        if r < rows && c < cols {
            max_w - weight(r, c)
        } else {
            max_w
        }
    };

    let inf = f64::INFINITY;
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    // p[j] = row (1-based) matched to column j; p[0] is the row being inserted.
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
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

    let mut assignment = vec![None; rows];
    for j in 1..=n {
        let r = p[j];
        if r >= 1 && r - 1 < rows && j - 1 < cols {
            assignment[r - 1] = Some(j - 1);
        }
    }
    assignment
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wide_and_tall_matrices() {
        let w = [[1.0, 5.0, 2.0]];
        let a = max_weight_assignment(1, 3, |r, c| w[r][c]);
        assert_eq!(a, vec![Some(1)]);

        let t = [[1.0], [5.0], [2.0]];
        let a = max_weight_assignment(3, 1, |r, c| t[r][c]);
        assert_eq!(a, vec![None, Some(0), None]);
    }

    #[test]
    fn classic_three_by_three() {
        // Min cost 5 on the matrix below equals max weight on (9 - cost).
        let costs = [[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]];
        let a = max_weight_assignment(3, 3, |r, c| 9.0 - costs[r][c]);
        let total: f64 = a.iter().enumerate().map(|(r, c)| costs[r][c.unwrap()]).sum();
        assert_eq!(total, 5.0);
    }
}
