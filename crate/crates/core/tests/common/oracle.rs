//! Reference computations that share no code with the library's inference,
//! partition or solver routines. Everything is brute force over the full
//! joint state space, explicit path lists or exhaustive active sets.

#![allow(dead_code)]

use std::collections::BTreeSet;

use fairpath::qp::QuadraticProgram;
use fairpath::{CausalGraph, CausalModel, VarId};

/// Every joint state, first variable slowest.
pub fn states(model: &CausalModel) -> Vec<Vec<usize>> {
    let cards: Vec<usize> = model.graph().variables().iter().map(|v| v.cardinality()).collect();
    let mut out = vec![vec![]];
    for &k in &cards {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..k).map(move |x| {
                    let mut t = s.clone();
                    t.push(x);
                    t
                })
            })
            .collect();
    }
    out
}

/// `P(state[v] | parents)` with the value of `override_var` replaced.
pub fn factor(model: &CausalModel, v: VarId, state: &[usize], override_var: Option<(VarId, usize)>) -> f64 {
    let graph = model.graph();
    let cpt = model.cpt(v);
    let mut row = 0;
    for &p in cpt.parents() {
        let value = match override_var {
            Some((o, x)) if o == p => x,
            _ => state[p.index()],
        };
        row = row * graph.cardinality(p) + value;
    }
    cpt.table()[row * graph.cardinality(v) + state[v.index()]]
}

pub fn joint(model: &CausalModel, state: &[usize]) -> f64 {
    model.graph().ids().map(|v| factor(model, v, state, None)).product()
}

pub fn total_mass(model: &CausalModel) -> f64 {
    states(model).iter().map(|s| joint(model, s)).sum()
}

/// `P(target = t | do(x = value))` on the mutilated graph.
pub fn interventional(model: &CausalModel, x: VarId, value: usize, target: VarId, t: usize) -> f64 {
    states(model)
        .iter()
        .filter(|s| s[x.index()] == value && s[target.index()] == t)
        .map(|s| model.graph().ids().filter(|&v| v != x).map(|v| factor(model, v, s, None)).product::<f64>())
        .sum()
}

/// `P(target = t | x = value)` by conditioning the joint.
pub fn conditional(model: &CausalModel, x: VarId, value: usize, target: VarId, t: usize) -> f64 {
    let all = states(model);
    let num: f64 = all
        .iter()
        .filter(|s| s[x.index()] == value && s[target.index()] == t)
        .map(|s| joint(model, s))
        .sum();
    let den: f64 = all.iter().filter(|s| s[x.index()] == value).map(|s| joint(model, s)).sum();
    num / den
}

/// All directed paths `from -> ... -> to`, as node lists.
pub fn paths(graph: &CausalGraph, from: VarId, to: VarId) -> Vec<Vec<VarId>> {
    fn walk(graph: &CausalGraph, at: VarId, to: VarId, path: &mut Vec<VarId>, out: &mut Vec<Vec<VarId>>) {
        if at == to {
            out.push(path.clone());
            return;
        }
        for &(a, b) in graph.arcs() {
            if a == at {
                path.push(b);
                walk(graph, b, to, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(graph, from, to, &mut vec![from], &mut out);
    out
}

/// Which path set the effect is taken along.
#[derive(Clone, Debug)]
pub enum PathSet {
    /// Only the arc `C -> E`.
    Direct,
    /// Paths with at least one interior node in the set.
    Through(BTreeSet<VarId>),
    /// Every causal path.
    All,
}

impl PathSet {
    fn contains(&self, path: &[VarId]) -> bool {
        match self {
            PathSet::Direct => path.len() == 2,
            PathSet::Through(r) => path[1..path.len() - 1].iter().any(|v| r.contains(v)),
            PathSet::All => true,
        }
    }
}

/// For each child of `c` (including `e`): does the arc `c -> child` start a
/// path in the set, and does it start a path outside it?
pub fn edge_classes(graph: &CausalGraph, c: VarId, e: VarId, set: &PathSet) -> Vec<(VarId, bool, bool)> {
    let mut children: Vec<VarId> = graph.arcs().iter().filter(|a| a.0 == c).map(|a| a.1).collect();
    children.sort();
    let all = paths(graph, c, e);
    children
        .into_iter()
        .map(|s| {
            let through: Vec<&Vec<VarId>> = all.iter().filter(|p| p[1] == s).collect();
            let inside = through.iter().any(|p| set.contains(p));
            let outside = through.iter().any(|p| !set.contains(p));
            (s, inside, outside)
        })
        .collect()
}

/// Children other than `e` whose outgoing arc starts paths both inside and
/// outside the set.
pub fn witnesses(graph: &CausalGraph, c: VarId, e: VarId, set: &PathSet) -> BTreeSet<VarId> {
    edge_classes(graph, c, e, set)
        .into_iter()
        .filter(|&(s, i, o)| s != e && i && o)
        .map(|(s, _, _)| s)
        .collect()
}

/// Path-specific effect `P(e_pos | do(to) along the set, do(from) elsewhere)
/// - P(e_pos | do(from))`, or `None` when some arc out of `c` carries both
/// kinds of path.
pub fn path_specific(
    model: &CausalModel,
    c: VarId,
    e: VarId,
    e_pos: usize,
    set: &PathSet,
    from: usize,
    to: usize,
) -> Option<f64> {
    let classes = edge_classes(model.graph(), c, e, set);
    if classes.iter().any(|&(_, i, o)| i && o) {
        return None;
    }
    let switched: BTreeSet<VarId> = classes.iter().filter(|&&(_, i, _)| i).map(|&(s, _, _)| s).collect();
    let substituted: f64 = states(model)
        .iter()
        .filter(|s| s[c.index()] == from && s[e.index()] == e_pos)
        .map(|s| {
            model
                .graph()
                .ids()
                .filter(|&v| v != c)
                .map(|v| {
                    let o = if switched.contains(&v) { Some((c, to)) } else { None };
                    factor(model, v, s, o)
                })
                .product::<f64>()
        })
        .sum();
    Some(substituted - interventional(model, c, from, e, e_pos))
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[r][k] -= f * a[col][k];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Cholesky factorization succeeds iff the matrix is symmetric positive
/// definite.
pub fn cholesky_ok(m: &[Vec<f64>]) -> bool {
    let n = m.len();
    for i in 0..n {
        for j in 0..n {
            if (m[i][j] - m[j][i]).abs() > 1e-12 * (1.0 + m[i][j].abs()) {
                return false;
            }
        }
    }
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = m[i][i] - s;
                if d <= 0.0 {
                    return false;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (m[i][j] - s) / l[j][j];
            }
        }
    }
    true
}

pub fn dense(problem: &QuadraticProgram) -> Vec<Vec<f64>> {
    let n = problem.dim();
    (0..n).map(|i| (0..n).map(|j| problem.hessian[(i, j)]).collect()).collect()
}

pub fn objective(problem: &QuadraticProgram, x: &[f64]) -> f64 {
    let h = dense(problem);
    let n = x.len();
    let mut v = 0.0;
    for i in 0..n {
        for j in 0..n {
            v += 0.5 * x[i] * h[i][j] * x[j];
        }
        v += problem.linear[i] * x[i];
    }
    v
}

pub fn feasible(problem: &QuadraticProgram, x: &[f64], tol: f64) -> bool {
    let dot = |a: &[f64]| a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
    problem.equalities.iter().all(|c| (dot(&c.coefficients) - c.bound).abs() <= tol)
        && problem.inequalities.iter().all(|c| dot(&c.coefficients) <= c.bound + tol)
}

/// Exact optimum of a strictly convex QP by trying every subset of
/// inequalities as the active set and keeping the best feasible stationary
/// point.
pub fn kkt_enumeration(problem: &QuadraticProgram) -> Option<(Vec<f64>, f64)> {
    let n = problem.dim();
    let h = dense(problem);
    let m = problem.inequalities.len();
    assert!(m <= 20, "enumeration over {m} inequalities is too large");
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mask in 0u32..(1 << m) {
        let mut rows: Vec<(&[f64], f64)> = problem
            .equalities
            .iter()
            .map(|c| (c.coefficients.as_slice(), c.bound))
            .collect();
        for (i, c) in problem.inequalities.iter().enumerate() {
            if mask & (1 << i) != 0 {
                rows.push((c.coefficients.as_slice(), c.bound));
            }
        }
        if rows.len() > n {
            continue;
        }
        let size = n + rows.len();
        let mut a = vec![vec![0.0; size]; size];
        let mut b = vec![0.0; size];
        for i in 0..n {
            a[i][..n].copy_from_slice(&h[i]);
            b[i] = -problem.linear[i];
        }
        for (r, (coef, bound)) in rows.iter().enumerate() {
            for j in 0..n {
                a[n + r][j] = coef[j];
                a[j][n + r] = coef[j];
            }
            b[n + r] = *bound;
        }
        let Some(sol) = gauss_solve(a, b) else { continue };
        let x = sol[..n].to_vec();
        if !feasible(problem, &x, 1e-9) {
            continue;
        }
        let f = objective(problem, &x);
        if best.as_ref().is_none_or(|(_, bf)| f < *bf) {
            best = Some((x, f));
        }
    }
    best
}

/// Dense grid search at `step` over a QP whose variables are two binary
/// rows `[1-a, a, 1-b, b]`. Constraints are checked with tolerance `tol`.
pub fn grid_two_rows(problem: &QuadraticProgram, step: f64, tol: f64) -> (f64, f64, f64) {
    assert_eq!(problem.dim(), 4);
    let h: Vec<f64> = (0..4).map(|i| problem.hessian[(i, i)]).collect();
    let g: Vec<f64> = (0..4).map(|i| problem.linear[i]).collect();
    let ineq: Vec<([f64; 4], f64)> = problem
        .inequalities
        .iter()
        .map(|c| ([c.coefficients[0], c.coefficients[1], c.coefficients[2], c.coefficients[3]], c.bound))
        .collect();
    let steps = (1.0 / step).round() as usize;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=steps {
        let a = i as f64 / steps as f64;
        for j in 0..=steps {
            let b = j as f64 / steps as f64;
            let x = [1.0 - a, a, 1.0 - b, b];
            if ineq
                .iter()
                .any(|(c, bound)| c[0] * x[0] + c[1] * x[1] + c[2] * x[2] + c[3] * x[3] > bound + tol)
            {
                continue;
            }
            let f: f64 = (0..4).map(|k| 0.5 * h[k] * x[k] * x[k] + g[k] * x[k]).sum();
            if f < best.0 {
                best = (f, a, b);
            }
        }
    }
    best
}
