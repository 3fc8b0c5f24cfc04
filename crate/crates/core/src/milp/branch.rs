//! Best-bound branch-and-bound over binary variables.
//!
//! Every node re-solves its LP relaxation from scratch with branching
//! decisions applied as fixed bounds. Until a first incumbent exists the
//! search dives depth-first, exploring the child nearest the fractional
//! value first; afterwards it switches to best-bound order on a heap keyed
//! by (relaxation bound, insertion id), which makes runs bit-for-bit
//! deterministic. Node counts equal the number of LP relaxations solved.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{solve_lp_tol, MilpError, MilpOptions, MilpProblem, MilpSolution, SolveStatus};

struct Node {
    fixes: Vec<(usize, f64)>,
    /// Parent relaxation objective in minimization terms: a valid lower
    /// bound on every descendant.
    bound: f64,
    id: u64,
}

struct HeapNode(Node);

impl PartialEq for HeapNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapNode {}
impl PartialOrd for HeapNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapNode {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap pops the maximum: rank smaller bounds (then smaller
        // insertion ids) as greater.
        other
            .0
            .bound
            .total_cmp(&self.0.bound)
            .then_with(|| other.0.id.cmp(&self.0.id))
    }
}

pub(super) fn solve(
    problem: &MilpProblem,
    options: &MilpOptions,
) -> Result<MilpSolution, MilpError> {
    let opts = *options;
    if !(opts.int_tol > 0.0 && opts.int_tol < 0.5) {
        return Err(MilpError::InvalidProgram(format!(
            "integrality tolerance must lie in (0, 0.5), got {}",
            opts.int_tol
        )));
    }
    if !(opts.gap_tol >= 0.0 && opts.gap_tol.is_finite()) {
        return Err(MilpError::InvalidProgram(format!(
            "gap tolerance must be finite and nonnegative, got {}",
            opts.gap_tol
        )));
    }
    if opts.node_limit == 0 {
        return Err(MilpError::InvalidProgram(
            "node limit must be at least 1".into(),
        ));
    }

    // Minimization key for incumbents and bounds; the reported objective
    // keeps the problem's own sense.
    let sense_key = match problem.lp.sense() {
        super::Sense::Minimize => 1.0,
        super::Sense::Maximize => -1.0,
    };

    let mut nodes = 0usize;
    let mut next_id = 0u64;
    let mut dive: Vec<Node> = Vec::new();
    let mut heap: BinaryHeap<HeapNode> = BinaryHeap::new();
    // (minimization key, values, objective in original sense).
    let mut incumbent: Option<(f64, Vec<f64>, f64)> = None;

    let root = Node {
        fixes: Vec::new(),
        bound: f64::NEG_INFINITY,
        id: next_id,
    };
    next_id += 1;
    dive.push(root);

    loop {
        let node = if incumbent.is_none() {
            match dive.pop() {
                Some(n) => n,
                None => break,
            }
        } else {
            if !dive.is_empty() {
                for n in dive.drain(..) {
                    heap.push(HeapNode(n));
                }
            }
            match heap.pop() {
                Some(HeapNode(n)) => n,
                None => break,
            }
        };

        if let Some((inc_key, _, _)) = &incumbent {
            if node.bound >= inc_key - opts.gap_tol * inc_key.abs().max(1.0) {
                continue;
            }
        }
        if nodes >= opts.node_limit {
            // Put the node back so the bound report covers it.
            heap.push(HeapNode(node));
            return Ok(node_limit_report(incumbent, &dive, &heap, nodes));
        }

        let mut lp = problem.lp.clone();
        for &(var, val) in &node.fixes {
            lp.set_bounds(var, val, val)?;
        }
        let relax = solve_lp_tol(&lp, opts.feas_tol)?;
        nodes += 1;
        match relax.status {
            SolveStatus::Infeasible => continue,
            SolveStatus::Unbounded => {
                if node.fixes.is_empty() {
                    return Ok(MilpSolution {
                        status: SolveStatus::Unbounded,
                        values: Vec::new(),
                        objective: None,
                        gap: f64::INFINITY,
                        nodes,
                    });
                }
                return Err(MilpError::Numeric(
                    "child relaxation unbounded under a bounded root".into(),
                ));
            }
            SolveStatus::Optimal => {}
            SolveStatus::NodeLimit => unreachable!("LP solve cannot hit a node limit"),
        }
        let obj = relax.objective.expect("optimal LP carries an objective");
        let key = sense_key * obj;
        if let Some((inc_key, _, _)) = &incumbent {
            if key >= inc_key - opts.gap_tol * inc_key.abs().max(1.0) {
                continue;
            }
        }

        // Branch variable: most fractional binary, ties to the lowest index.
        let mut branch: Option<(usize, f64)> = None;
        for &v in problem.binary_vars() {
            let x = relax.values[v];
            let dist = (x - x.round()).abs();
            if dist > opts.int_tol {
                match branch {
                    Some((_, best)) if dist <= best => {}
                    _ => branch = Some((v, dist)),
                }
            }
        }
        match branch {
            None => {
                let first = incumbent.is_none();
                match &incumbent {
                    Some((inc_key, _, _)) if key >= *inc_key => {}
                    _ => incumbent = Some((key, relax.values, obj)),
                }
                if first {
                    for n in dive.drain(..) {
                        heap.push(HeapNode(n));
                    }
                }
            }
            Some((var, _)) => {
                let near = relax.values[var].round().clamp(0.0, 1.0);
                let far = 1.0 - near;
                let child = |val: f64, id: u64| -> Node {
                    let mut fixes = node.fixes.clone();
                    fixes.push((var, val));
                    Node {
                        fixes,
                        bound: key,
                        id,
                    }
                };
                let near_node = child(near, next_id);
                let far_node = child(far, next_id + 1);
                next_id += 2;
                if incumbent.is_none() {
                    // Depth-first: push far first so near pops first.
                    dive.push(far_node);
                    dive.push(near_node);
                } else {
                    heap.push(HeapNode(near_node));
                    heap.push(HeapNode(far_node));
                }
            }
        }
    }

    Ok(match incumbent {
        Some((_, values, objective)) => MilpSolution {
            status: SolveStatus::Optimal,
            values,
            objective: Some(objective),
            gap: 0.0,
            nodes,
        },
        None => MilpSolution {
            status: SolveStatus::Infeasible,
            values: Vec::new(),
            objective: None,
            gap: f64::INFINITY,
            nodes,
        },
    })
}

fn node_limit_report(
    incumbent: Option<(f64, Vec<f64>, f64)>,
    dive: &[Node],
    heap: &BinaryHeap<HeapNode>,
    nodes: usize,
) -> MilpSolution {
    let open_bound = dive
        .iter()
        .map(|n| n.bound)
        .chain(heap.iter().map(|h| h.0.bound))
        .fold(f64::INFINITY, f64::min);
    match incumbent {
        Some((inc_key, values, objective)) => {
            let gap = if open_bound.is_finite() {
                ((inc_key - open_bound) / inc_key.abs().max(1.0)).max(0.0)
            } else if open_bound == f64::INFINITY {
                // No open nodes remain: the incumbent is proven optimal.
                0.0
            } else {
                f64::INFINITY
            };
            MilpSolution {
                status: SolveStatus::NodeLimit,
                values,
                objective: Some(objective),
                gap,
                nodes,
            }
        }
        None => MilpSolution {
            status: SolveStatus::NodeLimit,
            values: Vec::new(),
            objective: None,
            gap: f64::INFINITY,
            nodes,
        },
    }
}
