//! Solver correctness against independent oracles.
//!
//! Linear programs are checked against exhaustive vertex enumeration: every
//! optimum of a bounded feasible LP in standard form (max c·x, Ax <= b,
//! x >= 0) sits at a basic feasible solution of [A | I], so enumerating all
//! bases and solving each square system reproduces the optimal value without
//! touching any simplex machinery. Mixed-binary programs are checked against
//! exhaustive enumeration of all binary assignments, each reduced to an LP by
//! bound fixing.

use learncurve::{
    solve_lp, solve_milp, LinearProgram, MilpOptions, MilpProblem, Relation, Sense, SolveStatus,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Solves `mat · x = rhs` (n x n, row major) by Gaussian elimination with
/// partial pivoting; `None` when numerically singular.
fn solve_square(mat: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let mut a: Vec<Vec<f64>> = mat.to_vec();
    let mut b = rhs.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Iterates all `choose(total, k)` index combinations.
fn for_each_combination(total: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    if k > total {
        return;
    }
    loop {
        f(&idx);
        // Advance to the next combination in lexicographic order.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + total - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Max c·x subject to Ax <= b, x >= 0, by basic-solution enumeration over
/// [A | I]. Returns the optimal value, or None when infeasible. The system
/// must be bounded (callers include a bounding row).
fn vertex_enumeration_max(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<f64> {
    let m = b.len();
    let n = c.len();
    let mut best: Option<f64> = None;
    for_each_combination(n + m, m, |basis| {
        // Column j < n is structural; column n + i is the i-th slack.
        let mat: Vec<Vec<f64>> = (0..m)
            .map(|row| {
                basis
                    .iter()
                    .map(|&col| {
                        if col < n {
                            a[row][col]
                        } else if col - n == row {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let Some(xb) = solve_square(&mat, b) else {
            return;
        };
        if xb.iter().any(|&v| v < -1e-7) {
            return;
        }
        let objective: f64 = basis
            .iter()
            .zip(&xb)
            .map(|(&col, &v)| if col < n { c[col] * v } else { 0.0 })
            .sum();
        best = Some(match best {
            Some(cur) => cur.max(objective),
            None => objective,
        });
    });
    best
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1.0)
}

/// Builds the solver-side program for a standard-form instance.
fn standard_form_lp(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> LinearProgram {
    let n = c.len();
    let mut lp = LinearProgram::new(n, Sense::Maximize);
    for (j, &cj) in c.iter().enumerate() {
        lp.set_objective(j, cj).unwrap();
    }
    for (row, &rhs) in a.iter().zip(b) {
        let coeffs: Vec<(usize, f64)> = row
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(j, &v)| (j, v))
            .collect();
        lp.add_row(coeffs, Relation::Le, rhs).unwrap();
    }
    lp
}

#[test]
fn lp_optimum_matches_vertex_enumeration() {
    // 12 structural variables, 8 rows (7 random + 1 bounding) per instance:
    // choose(20, 8) = 125,970 bases each.
    for instance in 0..12 {
        let mut rng = ChaCha8Rng::seed_from_u64(1_000 + instance);
        let n = 12;
        let m_random = 7;
        let mut a: Vec<Vec<f64>> = (0..m_random)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..3.0)).collect())
            .collect();
        let mut b: Vec<f64> = (0..m_random).map(|_| rng.random_range(0.5..8.0)).collect();
        a.push(vec![1.0; n]);
        b.push(rng.random_range(4.0..10.0));
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..4.0)).collect();

        let oracle = vertex_enumeration_max(&a, &b, &c).expect("origin is feasible");
        let sol = solve_lp(&standard_form_lp(&a, &b, &c)).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal, "instance {instance}");
        let solver = sol.objective.unwrap();
        assert!(
            close(solver, oracle),
            "instance {instance}: solver {solver} vs oracle {oracle}"
        );
    }
}

#[test]
fn bounded_variables_match_row_encoded_oracle() {
    // The solver treats upper bounds natively; the oracle sees them as
    // ordinary rows. 6 vars, 4 + 6 rows: choose(16, 10) = 8,008 bases.
    for instance in 0..25 {
        let mut rng = ChaCha8Rng::seed_from_u64(2_000 + instance);
        let n = 6;
        let m_random = 4;
        let a: Vec<Vec<f64>> = (0..m_random)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..2.0)).collect())
            .collect();
        let b: Vec<f64> = (0..m_random).map(|_| rng.random_range(1.0..6.0)).collect();
        let upper: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..3.0)).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..3.0)).collect();

        // Oracle system: structure rows plus one unit row per upper bound.
        let mut a_oracle = a.clone();
        let mut b_oracle = b.clone();
        for (j, &u) in upper.iter().enumerate() {
            let mut row = vec![0.0; n];
            row[j] = 1.0;
            a_oracle.push(row);
            b_oracle.push(u);
        }
        let oracle = vertex_enumeration_max(&a_oracle, &b_oracle, &c).expect("origin feasible");

        let mut lp = standard_form_lp(&a, &b, &c);
        for (j, &u) in upper.iter().enumerate() {
            lp.set_bounds(j, 0.0, u).unwrap();
        }
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal, "instance {instance}");
        let solver = sol.objective.unwrap();
        assert!(
            close(solver, oracle),
            "instance {instance}: solver {solver} vs oracle {oracle}"
        );
        // The reported point must itself be feasible.
        for (row, &rhs) in a.iter().zip(&b) {
            let lhs: f64 = row.iter().zip(&sol.values).map(|(r, v)| r * v).sum();
            assert!(lhs <= rhs + 1e-6, "instance {instance}: row violated");
        }
        for (j, &u) in upper.iter().enumerate() {
            assert!((-1e-9..=u + 1e-9).contains(&sol.values[j]), "instance {instance}");
        }
    }
}

#[test]
fn lp_feasibility_status_matches_oracle() {
    // Mixed-sign right-hand sides make the origin infeasible; vertex
    // enumeration decides feasibility exactly.
    let mut agreements_infeasible = 0;
    for instance in 0..30 {
        let mut rng = ChaCha8Rng::seed_from_u64(3_000 + instance);
        let n = 5;
        let m_random = 4;
        let mut a: Vec<Vec<f64>> = (0..m_random)
            .map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let mut b: Vec<f64> = (0..m_random).map(|_| rng.random_range(-3.0..3.0)).collect();
        a.push(vec![1.0; n]);
        b.push(rng.random_range(2.0..6.0));
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();

        let oracle = vertex_enumeration_max(&a, &b, &c);
        let sol = solve_lp(&standard_form_lp(&a, &b, &c)).unwrap();
        match oracle {
            Some(value) => {
                assert_eq!(sol.status, SolveStatus::Optimal, "instance {instance}");
                assert!(
                    close(sol.objective.unwrap(), value),
                    "instance {instance}: solver {:?} vs oracle {value}",
                    sol.objective
                );
            }
            None => {
                assert_eq!(sol.status, SolveStatus::Infeasible, "instance {instance}");
                agreements_infeasible += 1;
            }
        }
    }
    assert!(
        agreements_infeasible >= 3,
        "rhs ranges should produce some infeasible instances, got {agreements_infeasible}"
    );
}

/// One random mixed-binary instance; all variables bounded so every LP stays
/// bounded too.
fn random_milp(seed: u64, n_bin: usize, n_cont: usize) -> MilpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_bin + n_cont;
    let mut lp = LinearProgram::new(n, Sense::Minimize);
    for j in 0..n_bin {
        lp.set_bounds(j, 0.0, 1.0).unwrap();
    }
    for j in n_bin..n {
        lp.set_bounds(j, 0.0, rng.random_range(0.5..4.0)).unwrap();
    }
    for j in 0..n {
        lp.set_objective(j, rng.random_range(-3.0..3.0)).unwrap();
    }
    let rows = rng.random_range(3..7);
    for _ in 0..rows {
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            if rng.random_range(0.0..1.0) < 0.7 {
                coeffs.push((j, rng.random_range(-2.0..2.0)));
            }
        }
        if coeffs.is_empty() {
            continue;
        }
        let relation = if rng.random_range(0.0..1.0) < 0.5 {
            Relation::Le
        } else {
            Relation::Ge
        };
        // Right-hand sides stay small enough that many instances are
        // feasible but some are not.
        lp.add_row(coeffs, relation, rng.random_range(-2.0..3.0)).unwrap();
    }
    MilpProblem::new(lp, (0..n_bin).collect()).unwrap()
}

/// Exhaustive binary enumeration: fixes each assignment through bounds and
/// solves the remaining LP. Returns the best objective, or None when every
/// assignment is infeasible.
fn enumerate_binary_assignments(problem: &MilpProblem) -> Option<f64> {
    let binaries = problem.binary_vars().to_vec();
    let k = binaries.len();
    let mut best: Option<f64> = None;
    for mask in 0u64..(1 << k) {
        let mut lp = problem.lp().clone();
        for (bit, &var) in binaries.iter().enumerate() {
            let value = ((mask >> bit) & 1) as f64;
            // Skip assignments outside already-tightened bounds.
            if value < lp.lower()[var] - 0.5 || value > lp.upper()[var] + 0.5 {
                continue;
            }
            lp.set_bounds(var, value, value).unwrap();
        }
        let sol = solve_lp(&lp).unwrap();
        if sol.status == SolveStatus::Optimal {
            let obj = sol.objective.unwrap();
            best = Some(match best {
                Some(cur) => cur.min(obj),
                None => obj,
            });
        }
    }
    best
}

#[test]
fn milp_matches_exhaustive_binary_enumeration() {
    let mut solved = 0;
    let mut infeasible = 0;
    for instance in 0..40 {
        let n_bin = 3 + (instance as usize % 8); // 3..=10 binaries
        let n_cont = 2 + (instance as usize % 5);
        let problem = random_milp(4_000 + instance, n_bin, n_cont);
        let oracle = enumerate_binary_assignments(&problem);
        let sol = solve_milp(&problem, &MilpOptions::default()).unwrap();
        match oracle {
            Some(value) => {
                assert_eq!(
                    sol.status,
                    SolveStatus::Optimal,
                    "instance {instance} (k={n_bin})"
                );
                let solver = sol.objective.unwrap();
                assert!(
                    close(solver, value),
                    "instance {instance} (k={n_bin}): solver {solver} vs oracle {value}"
                );
                // Returned binaries must be integral.
                for &b in problem.binary_vars() {
                    let v = sol.values[b];
                    assert!(
                        (v - v.round()).abs() < 1e-6,
                        "instance {instance}: binary {b} = {v}"
                    );
                }
                solved += 1;
            }
            None => {
                assert_eq!(sol.status, SolveStatus::Infeasible, "instance {instance}");
                infeasible += 1;
            }
        }
    }
    assert!(solved >= 20, "want mostly solvable instances, got {solved}");
    assert!(infeasible >= 2, "want some infeasible instances, got {infeasible}");
}

#[test]
fn lp_relaxation_bounds_milp_from_below() {
    for instance in 0..20 {
        let problem = random_milp(5_000 + instance, 6, 4);
        let relaxed = solve_lp(problem.lp()).unwrap();
        let integral = solve_milp(&problem, &MilpOptions::default()).unwrap();
        if relaxed.status == SolveStatus::Optimal && integral.status == SolveStatus::Optimal {
            let lo = relaxed.objective.unwrap();
            let hi = integral.objective.unwrap();
            assert!(
                lo <= hi + 1e-6 * hi.abs().max(1.0),
                "instance {instance}: relaxation {lo} above integral optimum {hi}"
            );
        }
        if relaxed.status == SolveStatus::Infeasible {
            assert_eq!(integral.status, SolveStatus::Infeasible, "instance {instance}");
        }
    }
}

#[test]
fn repeated_solves_are_bit_identical() {
    for instance in 0..10 {
        let problem = random_milp(6_000 + instance, 8, 5);
        let first = solve_milp(&problem, &MilpOptions::default()).unwrap();
        let second = solve_milp(&problem, &MilpOptions::default()).unwrap();
        assert_eq!(first.status, second.status);
        assert_eq!(first.nodes, second.nodes);
        assert_eq!(first.objective, second.objective);
        assert_eq!(first.values, second.values);
    }
}
