//! Entropic-regularized transport on a dense cost matrix: log-domain
//! Sinkhorn iterations with uniform unit masses, followed by rounding to a
//! feasible plan so the reported cost upper-bounds the exact optimum.

pub struct SinkhornRun {
    pub plan_cost: f64,
    pub converged: bool,
    pub iterations: usize,
}

const MARGINAL_TOL: f64 = 1e-6;

/// Run Sinkhorn on an n x n cost matrix with unit mass per atom on both
/// sides. Stops when the worst marginal violation of the implied plan drops
/// below 1e-6, or after `max_iter` iterations.
pub fn sinkhorn_unit_masses(cost: &[Vec<f64>], epsilon: f64, max_iter: usize) -> SinkhornRun {
    let n = cost.len();
    if n == 0 {
        return SinkhornRun {
            plan_cost: 0.0,
            converged: true,
            iterations: 0,
        };
    }

    let mut f = vec![0.0f64; n];
    let mut g = vec![0.0f64; n];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;
        // f update makes row marginals exact; g update then fixes columns.
        for i in 0..n {
            f[i] = -epsilon * logsumexp((0..n).map(|j| (g[j] - cost[i][j]) / epsilon));
        }
        for j in 0..n {
            g[j] = -epsilon * logsumexp((0..n).map(|i| (f[i] - cost[i][j]) / epsilon));
        }
        // After the g update the column sums are exactly 1; check the rows.
        let mut worst = 0.0f64;
        for i in 0..n {
            let row_sum: f64 = (0..n)
                .map(|j| ((f[i] + g[j] - cost[i][j]) / epsilon).exp())
                .sum();
            worst = worst.max((row_sum - 1.0).abs());
        }
        if worst < MARGINAL_TOL {
            converged = true;
            break;
        }
    }

    let mut plan: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| ((f[i] + g[j] - cost[i][j]) / epsilon).exp())
                .collect()
        })
        .collect();
    round_to_feasible(&mut plan);

    let plan_cost = plan
        .iter()
        .zip(cost)
        .map(|(prow, crow)| prow.iter().zip(crow).map(|(p, c)| p * c).sum::<f64>())
        .sum();
    SinkhornRun {
        plan_cost,
        converged,
        iterations,
    }
}

fn logsumexp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Project an approximate plan onto the transport polytope with unit
/// marginals: scale rows down, then columns, then spread the leftover mass
/// as a rank-one correction.
fn round_to_feasible(plan: &mut [Vec<f64>]) {
    let n = plan.len();
    for row in plan.iter_mut() {
        let sum: f64 = row.iter().sum();
        if sum > 1.0 {
            let scale = 1.0 / sum;
            row.iter_mut().for_each(|p| *p *= scale);
        }
    }
    for j in 0..n {
        let sum: f64 = plan.iter().map(|row| row[j]).sum();
        if sum > 1.0 {
            let scale = 1.0 / sum;
            plan.iter_mut().for_each(|row| row[j] *= scale);
        }
    }
    let row_deficit: Vec<f64> = plan
        .iter()
        .map(|row| 1.0 - row.iter().sum::<f64>())
        .collect();
    let col_deficit: Vec<f64> = (0..n)
        .map(|j| 1.0 - plan.iter().map(|row| row[j]).sum::<f64>())
        .collect();
    let total: f64 = row_deficit.iter().sum();
    if total > 0.0 {
        for i in 0..n {
            for j in 0..n {
                plan[i][j] += row_deficit[i] * col_deficit[j] / total;
            }
        }
    }
}
