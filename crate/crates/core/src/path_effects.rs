//! Path-specific effects of a parentless protected attribute `C` on a
//! decision `E`.
//!
//! The effect along a path set is obtained from the truncated factorization
//! under `do(C = from)` by letting the factors of the children of `C` whose
//! arc out of `C` starts a path in the set read `C = to`, while every other
//! factor keeps reading `C = from`. Two path sets are supported: the direct
//! arc `C -> E`, and all causal paths from `C` to `E` through a set of
//! redlining attributes.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{BinaryAttribute, CausalGraph, CausalModel, VarId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathKind {
    /// The single arc `C -> E`.
    Direct,
    /// Every causal path from `C` to `E` that passes through one of these nodes.
    Redlining(BTreeSet<VarId>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathQuery {
    pub protected: BinaryAttribute,
    pub decision: BinaryAttribute,
    pub kind: PathKind,
}

impl PathQuery {
    pub fn direct(protected: BinaryAttribute, decision: BinaryAttribute) -> Self {
        PathQuery {
            protected,
            decision,
            kind: PathKind::Direct,
        }
    }

    pub fn redlining(
        protected: BinaryAttribute,
        decision: BinaryAttribute,
        redlining: impl IntoIterator<Item = VarId>,
    ) -> Self {
        PathQuery {
            protected,
            decision,
            kind: PathKind::Redlining(redlining.into_iter().collect()),
        }
    }

    pub fn validate(&self, graph: &CausalGraph) -> Result<()> {
        self.protected.validate(graph, "protected attribute")?;
        self.decision.validate(graph, "decision")?;
        let (c, e) = (self.protected.var, self.decision.var);
        if c == e {
            return Err(Error::InvalidQuery(
                "protected attribute and decision coincide".into(),
            ));
        }
        if !graph.parents(c).is_empty() {
            return Err(Error::InvalidQuery(format!(
                "protected attribute `{}` has parents",
                graph.name(c)
            )));
        }
        match &self.kind {
            PathKind::Direct => {
                if !graph.has_arc(c, e) {
                    return Err(Error::InvalidQuery(format!(
                        "no arc {} -> {}",
                        graph.name(c),
                        graph.name(e)
                    )));
                }
            }
            PathKind::Redlining(set) => {
                if set.is_empty() {
                    return Err(Error::InvalidQuery("redlining set is empty".into()));
                }
                for &r in set {
                    graph.check(r)?;
                    if r == c || r == e {
                        return Err(Error::InvalidQuery(format!(
                            "`{}` cannot be a redlining attribute",
                            graph.name(r)
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Children of `C` other than `E`, split by whether they start a path in the
/// path set (`s_pi`) and whether they start a path outside it or no path to
/// `E` at all (`s_bar_pi`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChildPartition {
    pub s_pi: BTreeSet<VarId>,
    pub s_bar_pi: BTreeSet<VarId>,
    pub witnesses: BTreeSet<VarId>,
}

/// Classifies the children of `C` for a redlining query. Depends only on the
/// graph.
pub fn partition_children(graph: &CausalGraph, query: &PathQuery) -> Result<ChildPartition> {
    query.validate(graph)?;
    let PathKind::Redlining(redlining) = &query.kind else {
        return Err(Error::InvalidQuery(
            "child partition is defined for redlining queries".into(),
        ));
    };
    let (c, e) = (query.protected.var, query.decision.var);
    let mut partition = ChildPartition::default();
    for &s in graph.children(c) {
        if s == e {
            continue;
        }
        let below = graph.descendants(s)?;
        let through = redlining.iter().any(|&r| {
            (r == s || below.contains(&r)) && graph.descendants(r).is_ok_and(|d| d.contains(&e))
        });
        let reaches = below.contains(&e);
        let around = !redlining.contains(&s) && graph.reachable_avoiding(s, e, redlining);
        if through {
            partition.s_pi.insert(s);
        }
        if !reaches || around {
            partition.s_bar_pi.insert(s);
        }
    }
    partition.witnesses = partition
        .s_pi
        .intersection(&partition.s_bar_pi)
        .copied()
        .collect();
    Ok(partition)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessCheck {
    pub satisfied: bool,
    pub witnesses: BTreeSet<VarId>,
}

/// Whether the recanting witness criterion holds, which makes the effect
/// unidentifiable from observational data. Never holds for the direct arc.
pub fn recanting_witness(graph: &CausalGraph, query: &PathQuery) -> Result<WitnessCheck> {
    match query.kind {
        PathKind::Direct => {
            query.validate(graph)?;
            Ok(WitnessCheck {
                satisfied: false,
                witnesses: BTreeSet::new(),
            })
        }
        PathKind::Redlining(_) => {
            let witnesses = partition_children(graph, query)?.witnesses;
            Ok(WitnessCheck {
                satisfied: !witnesses.is_empty(),
                witnesses,
            })
        }
    }
}

/// A path-specific effect `SE(to, from)` on `E = e+`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathEffect {
    pub from: usize,
    pub to: usize,
    pub value: f64,
}

/// Effect along the direct arc `C -> E`.
pub fn se_direct(model: &CausalModel, query: &PathQuery, from: usize, to: usize) -> Result<PathEffect> {
    if query.kind != PathKind::Direct {
        return Err(Error::InvalidQuery("expected a direct query".into()));
    }
    query.validate(model.graph())?;
    check_values(model, query, from, to)?;
    let switched = BTreeSet::from([query.decision.var]);
    effect(model, query, &switched, from, to)
}

/// Effect along all causal paths through the redlining set.
pub fn se_indirect(
    model: &CausalModel,
    query: &PathQuery,
    from: usize,
    to: usize,
) -> Result<PathEffect> {
    let partition = partition_children(model.graph(), query)?;
    check_values(model, query, from, to)?;
    if !partition.witnesses.is_empty() {
        return Err(unidentifiable(model.graph(), &partition.witnesses));
    }
    if partition.s_pi.is_empty() {
        return Ok(PathEffect { from, to, value: 0.0 });
    }
    effect(model, query, &partition.s_pi, from, to)
}

/// Dispatches on the query kind.
pub fn path_effect(model: &CausalModel, query: &PathQuery, from: usize, to: usize) -> Result<PathEffect> {
    match query.kind {
        PathKind::Direct => se_direct(model, query, from, to),
        PathKind::Redlining(_) => se_indirect(model, query, from, to),
    }
}

/// Children of `C` whose factors read the counterfactual value.
pub fn switched_children(graph: &CausalGraph, query: &PathQuery) -> Result<BTreeSet<VarId>> {
    match query.kind {
        PathKind::Direct => {
            query.validate(graph)?;
            Ok(BTreeSet::from([query.decision.var]))
        }
        PathKind::Redlining(_) => {
            let partition = partition_children(graph, query)?;
            if !partition.witnesses.is_empty() {
                return Err(unidentifiable(graph, &partition.witnesses));
            }
            Ok(partition.s_pi)
        }
    }
}

/// The effect as a linear form in the decision's CPT: entry `row` is the
/// coefficient of `P(e+ | row)`, so that the effect equals
/// `Σ_row coef[row] · P(e+ | row)` for any table of `E` on the same graph.
pub fn decision_coefficients(
    model: &CausalModel,
    query: &PathQuery,
    from: usize,
    to: usize,
) -> Result<Vec<f64>> {
    let switched = switched_children(model.graph(), query)?;
    check_values(model, query, from, to)?;
    let c = query.protected.var;
    let e = query.decision.var;
    let decision_cpt = model.cpt(e);
    let mut coef = vec![0.0; decision_cpt.row_count()];
    if switched.is_empty() || from == to {
        return Ok(coef);
    }
    let e_switched = switched.contains(&e);
    let factors: Vec<VarId> = model
        .ancestral_closure([e])
        .into_iter()
        .filter(|&v| v != c && v != e)
        .collect();
    let mut state = vec![0; model.len()];
    state[c.index()] = from;
    state[e.index()] = query.decision.positive;
    model.for_each_completion(&factors, &mut state, |s| {
        let mut counterfactual = 1.0;
        let mut baseline = 1.0;
        for &v in &factors {
            let cpt = model.cpt(v);
            let p = cpt.prob(s);
            baseline *= p;
            counterfactual *= if switched.contains(&v) {
                cpt.prob_with(s, c, to)
            } else {
                p
            };
        }
        let alt_row = if e_switched {
            decision_cpt.row_index_with(s, c, to)
        } else {
            decision_cpt.row_index(s)
        };
        coef[alt_row] += counterfactual;
        coef[decision_cpt.row_index(s)] -= baseline;
    });
    Ok(coef)
}

fn effect(
    model: &CausalModel,
    query: &PathQuery,
    switched: &BTreeSet<VarId>,
    from: usize,
    to: usize,
) -> Result<PathEffect> {
    let c = query.protected.var;
    let e = query.decision.var;
    let positive = query.decision.positive;
    let counterfactual = expectation(model, c, from, to, switched, e, positive);
    let baseline = expectation(model, c, from, from, switched, e, positive);
    Ok(PathEffect {
        from,
        to,
        value: counterfactual - baseline,
    })
}

/// `Σ_{V∖{C}, E=e} Π_{V≠C} P(v | Pa(V))` with `C = to` in the factors of
/// `switched` and `C = from` elsewhere. With `from == to` this is
/// `P(e | do(from))`.
fn expectation(
    model: &CausalModel,
    c: VarId,
    from: usize,
    to: usize,
    switched: &BTreeSet<VarId>,
    e: VarId,
    e_value: usize,
) -> f64 {
    let nodes: Vec<VarId> = model
        .ancestral_closure([e])
        .into_iter()
        .filter(|&v| v != c)
        .collect();
    let free: Vec<VarId> = nodes.iter().copied().filter(|&v| v != e).collect();
    let mut state = vec![0; model.len()];
    state[c.index()] = from;
    state[e.index()] = e_value;
    let mut total = 0.0;
    model.for_each_completion(&free, &mut state, |s| {
        total += nodes
            .iter()
            .map(|&v| {
                let cpt = model.cpt(v);
                if switched.contains(&v) {
                    cpt.prob_with(s, c, to)
                } else {
                    cpt.prob(s)
                }
            })
            .product::<f64>();
    });
    total
}

fn check_values(model: &CausalModel, query: &PathQuery, from: usize, to: usize) -> Result<()> {
    let card = model.graph().cardinality(query.protected.var);
    if from >= card || to >= card {
        return Err(Error::InvalidQuery(
            "protected value outside the domain".into(),
        ));
    }
    Ok(())
}

fn unidentifiable(graph: &CausalGraph, witnesses: &BTreeSet<VarId>) -> Error {
    Error::Unidentifiable {
        witnesses: witnesses.iter().map(|&w| graph.name(w).to_string()).collect(),
    }
}
