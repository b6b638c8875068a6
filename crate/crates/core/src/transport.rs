//! Exact optimal coupling of two atomic spectral measures under the weighted
//! quadratic cost `(|s|^2 + |t|^2 + 1)^3 |s - t|^2`.
//!
//! Measures are stored through `±` representatives and the cost is invariant
//! under joint negation, so the symmetric infimum is attained by optimizing
//! over representatives with the per-pair sign folded into the cost:
//! `c(i, j) = min(cost(s_i, t_j), cost(s_i, -t_j))`. Averaging any optimal
//! folded plan with its negation is feasible, symmetric and cost-equal, which
//! is why folding loses nothing.
//!
//! The solver is a primal transportation simplex on the dense bipartite
//! instance; entering/leaving ties break toward the lexicographically
//! smallest arc, so plans are deterministic.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::SpectralMeasure;

/// Weighted quadratic transport cost between two frequencies.
pub fn pair_cost(s: &[f64], t: &[f64]) -> f64 {
    assert_eq!(s.len(), t.len(), "pair_cost arguments must share a dimension");
    let ns: f64 = s.iter().map(|x| x * x).sum();
    let nt: f64 = t.iter().map(|x| x * x).sum();
    let d2: f64 = s.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum();
    let base = ns + nt + 1.0;
    base * base * base * d2
}

/// One row of a coupling plan.
#[derive(Debug, Clone, Serialize)]
pub struct PlanPair {
    pub source: Vec<f64>,
    pub target: Vec<f64>,
    pub weight: f64,
}

/// A coupling of two atomic measures: matched atom pairs with weights whose
/// marginals reproduce the measures, plus the total transport cost.
#[derive(Debug, Clone, Serialize)]
pub struct CouplingPlan {
    pub pairs: Vec<PlanPair>,
    pub cost: f64,
}

impl CouplingPlan {
    /// Build a plan from raw `(source, target, weight)` rows, computing the
    /// cost. Marginal validity is checked at coupling time, not here.
    pub fn from_pairs(rows: Vec<(Vec<f64>, Vec<f64>, f64)>) -> Self {
        let pairs: Vec<PlanPair> = rows
            .into_iter()
            .map(|(source, target, weight)| PlanPair { source, target, weight })
            .collect();
        let cost = pairs
            .iter()
            .map(|p| p.weight * pair_cost(&p.source, &p.target))
            .sum();
        Self { pairs, cost }
    }

    /// The identity coupling of a measure with itself (cost zero).
    pub fn identity(m: &SpectralMeasure) -> Self {
        let pairs = m
            .atoms()
            .iter()
            .zip(m.weights())
            .map(|(a, &w)| PlanPair { source: a.clone(), target: a.clone(), weight: w })
            .collect();
        Self { pairs, cost: 0.0 }
    }

    /// CSV rows `s_x,s_y,t_x,t_y,w`, one per pair, with a header
    /// (coordinate-indexed names beyond d = 2).
    pub fn to_csv(&self) -> String {
        let dim = self.pairs.first().map_or(2, |p| p.source.len());
        let mut out = String::new();
        let axis = |i: usize| match i {
            0 => "x".to_string(),
            1 => "y".to_string(),
            other => format!("{}", other + 1),
        };
        for i in 0..dim {
            out.push_str(&format!("s_{},", axis(i)));
        }
        for i in 0..dim {
            out.push_str(&format!("t_{},", axis(i)));
        }
        out.push_str("w\n");
        for p in &self.pairs {
            for v in &p.source {
                out.push_str(&format!("{v},"));
            }
            for v in &p.target {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{}\n", p.weight));
        }
        out
    }
}

/// Upper-bound proxy `(R^d + 1) * cost` for the squared C^2-fluctuation of a
/// coupling over `[-R, R]^d`. The absolute constant is dropped, so this is
/// for ordering experiments only.
pub fn sigma_bound_proxy(plan: &CouplingPlan, r: f64, dim: usize) -> f64 {
    (r.powi(dim as i32) + 1.0) * plan.cost
}

const MAX_ATOMS: usize = 512;

/// Exact minimum-cost symmetric coupling of two atomic probability measures.
pub fn optimal_coupling(m1: &SpectralMeasure, m2: &SpectralMeasure) -> Result<CouplingPlan> {
    if m1.dim() != m2.dim() {
        return Err(Error::DimensionMismatch { expected: m1.dim(), got: m2.dim() });
    }
    if m1.len() > MAX_ATOMS || m2.len() > MAX_ATOMS {
        return Err(Error::InvalidParameter(format!(
            "transport instances are limited to {MAX_ATOMS} atoms per side, got {} and {}",
            m1.len(),
            m2.len()
        )));
    }
    let su: f64 = m1.weights().iter().sum();
    let sw: f64 = m2.weights().iter().sum();
    if (su - sw).abs() > 1e-12 {
        return Err(Error::InvalidPlan(format!(
            "total masses differ: {su} vs {sw}"
        )));
    }

    let nrow = m1.len();
    let ncol = m2.len();
    // Fold the +/- choice into the cost; remember which sign attained it.
    let mut cost = vec![0.0f64; nrow * ncol];
    let mut sign = vec![1.0f64; nrow * ncol];
    for (i, s) in m1.atoms().iter().enumerate() {
        for (j, t) in m2.atoms().iter().enumerate() {
            let neg: Vec<f64> = t.iter().map(|x| -x).collect();
            let c_plus = pair_cost(s, t);
            let c_minus = pair_cost(s, &neg);
            let idx = i * ncol + j;
            if c_minus < c_plus {
                cost[idx] = c_minus;
                sign[idx] = -1.0;
            } else {
                cost[idx] = c_plus;
            }
        }
    }

    let flows = transportation_simplex(m1.weights(), m2.weights(), nrow, ncol, &cost)?;

    let mut rows = Vec::with_capacity(flows.len());
    let mut total = 0.0;
    for &(i, j, w) in &flows {
        let target: Vec<f64> = m2.atoms()[j]
            .iter()
            .map(|x| x * sign[i * ncol + j])
            .collect();
        total += w * cost[i * ncol + j];
        rows.push(PlanPair { source: m1.atoms()[i].clone(), target, weight: w });
    }
    Ok(CouplingPlan { pairs: rows, cost: total })
}

/// Dense primal transportation simplex. Returns positive flows sorted by
/// `(row, col)`.
fn transportation_simplex(
    supply: &[f64],
    demand: &[f64],
    nrow: usize,
    ncol: usize,
    cost: &[f64],
) -> Result<Vec<(usize, usize, f64)>> {
    let nodes = nrow + ncol;
    let scale = cost.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
    let tol = 1e-12 * scale;

    let mut flow = vec![0.0f64; nrow * ncol];
    let mut basic = vec![false; nrow * ncol];
    let mut basic_arcs: Vec<usize> = Vec::with_capacity(nodes - 1);

    // Northwest-corner initial basis: exactly nrow + ncol - 1 basic arcs,
    // including zero-flow arcs on simultaneous exhaustion.
    {
        let mut u: Vec<f64> = supply.to_vec();
        let mut w: Vec<f64> = demand.to_vec();
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let q = u[i].min(w[j]).max(0.0);
            flow[i * ncol + j] = q;
            basic[i * ncol + j] = true;
            basic_arcs.push(i * ncol + j);
            u[i] -= q;
            w[j] -= q;
            if i == nrow - 1 && j == ncol - 1 {
                break;
            }
            if u[i] <= 0.0 && i < nrow - 1 {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let switch_to_bland = 1000 + 10 * nodes;
    let hard_cap = 2_000_000usize;

    let mut pivots = 0usize;
    loop {
        if pivots > hard_cap {
            return Err(Error::InvalidPlan(
                "transportation simplex failed to terminate".into(),
            ));
        }

        // Potentials from the basis tree (u[0] = 0).
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
        for &arc in &basic_arcs {
            let (i, j) = (arc / ncol, arc % ncol);
            adj[i].push((nrow + j, arc));
            adj[nrow + j].push((i, arc));
        }
        let mut pot = vec![f64::NAN; nodes];
        pot[0] = 0.0;
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            for &(next, arc) in &adj[v] {
                if pot[next].is_nan() {
                    let (i, j) = (arc / ncol, arc % ncol);
                    pot[next] = cost[arc] - pot[if next < nrow { nrow + j } else { i }];
                    stack.push(next);
                }
            }
        }

        // Entering arc: most negative reduced cost; ties (and the Bland
        // fallback after long degenerate runs) break lexicographically.
        let bland = pivots >= switch_to_bland;
        let mut enter: Option<(usize, usize)> = None;
        let mut best = -tol;
        'scan: for i in 0..nrow {
            for j in 0..ncol {
                let arc = i * ncol + j;
                if basic[arc] {
                    continue;
                }
                let r = cost[arc] - pot[i] - pot[nrow + j];
                if r < best {
                    best = r;
                    enter = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                }
            }
        }
        let Some((ei, ej)) = enter else {
            break;
        };

        // Unique tree path from row node ei to column node nrow + ej.
        let mut parent = vec![usize::MAX; nodes];
        let mut parent_arc = vec![usize::MAX; nodes];
        parent[ei] = ei;
        let mut queue = std::collections::VecDeque::from([ei]);
        while let Some(v) = queue.pop_front() {
            if v == nrow + ej {
                break;
            }
            for &(next, arc) in &adj[v] {
                if parent[next] == usize::MAX {
                    parent[next] = v;
                    parent_arc[next] = arc;
                    queue.push_back(next);
                }
            }
        }
        debug_assert_ne!(parent[nrow + ej], usize::MAX, "basis must be connected");

        // Walk back from the column node; path arcs alternate -theta, +theta
        // starting from the arc adjacent to the entering one at ej.
        let mut path = Vec::new();
        let mut v = nrow + ej;
        while v != ei {
            path.push(parent_arc[v]);
            v = parent[v];
        }
        // path[0] touches ej; the cycle alternates -theta, +theta from there,
        // with the entering arc itself taking +theta.
        let theta = path
            .iter()
            .step_by(2)
            .map(|&arc| flow[arc])
            .fold(f64::INFINITY, f64::min);
        let leave = path
            .iter()
            .step_by(2)
            .filter(|&&arc| (flow[arc] - theta).abs() <= 1e-15)
            .min()
            .copied()
            .expect("cycle has at least one decreasing arc");

        flow[ei * ncol + ej] += theta;
        for (k, &arc) in path.iter().enumerate() {
            if k % 2 == 0 {
                flow[arc] -= theta;
            } else {
                flow[arc] += theta;
            }
        }
        flow[leave] = 0.0;
        basic[leave] = false;
        basic[ei * ncol + ej] = true;
        basic_arcs.retain(|&a| a != leave);
        basic_arcs.push(ei * ncol + ej);
        pivots += 1;
    }

    let mut out = Vec::new();
    for i in 0..nrow {
        for j in 0..ncol {
            let f = flow[i * ncol + j];
            if f > 0.0 {
                out.push((i, j, f));
            }
        }
    }
    Ok(out)
}
