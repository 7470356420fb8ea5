//! Square assignment by the Hungarian algorithm with potentials (O(n^3)),
//! and maximum bipartite matching for bottleneck feasibility tests.

/// Minimum-cost perfect assignment on an n x n cost matrix (row-major).
/// Returns (assignment row -> column, total cost).
pub fn hungarian(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = cost.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    debug_assert!(cost.iter().all(|row| row.len() == n));

    // 1-indexed potentials; p[j] = row currently matched to column j.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
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

    let mut assignment = vec![0usize; n];
    let mut total = 0.0;
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
        total += cost[p[j] - 1][j - 1];
    }
    (assignment, total)
}

/// Size of a maximum matching in a bipartite graph given as an adjacency
/// predicate over `rows x cols` (Kuhn's augmenting paths).
pub fn max_bipartite_matching(
    rows: usize,
    cols: usize,
    adjacent: impl Fn(usize, usize) -> bool,
) -> usize {
    let mut match_of_col: Vec<Option<usize>> = vec![None; cols];
    let mut size = 0;
    for row in 0..rows {
        let mut seen = vec![false; cols];
        if try_augment(row, cols, &adjacent, &mut seen, &mut match_of_col) {
            size += 1;
        }
    }
    size
}

fn try_augment(
    row: usize,
    cols: usize,
    adjacent: &impl Fn(usize, usize) -> bool,
    seen: &mut [bool],
    match_of_col: &mut [Option<usize>],
) -> bool {
    for col in 0..cols {
        if seen[col] || !adjacent(row, col) {
            continue;
        }
        seen[col] = true;
        if match_of_col[col].is_none()
            || try_augment(
                match_of_col[col].unwrap(),
                cols,
                adjacent,
                seen,
                match_of_col,
            )
        {
            match_of_col[col] = Some(row);
            return true;
        }
    }
    false
}
