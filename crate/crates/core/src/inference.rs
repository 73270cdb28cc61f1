//! Exact inference by enumeration over the factorized joint distribution.
//!
//! Every sum is restricted to the ancestral closure of the variables that are
//! bound by the query. Nodes outside that closure have no bound descendants,
//! so their factors marginalize to one and dropping them leaves the sum
//! unchanged.

use crate::error::{Error, Result};
use crate::model::{Assignment, BinaryAttribute, CausalModel, VarId};

/// Conditioning events with probability at or below this are treated as zero.
pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-12;

/// `P(target = target_value | do(intervened = intervened_value))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterventionQuery {
    pub target: VarId,
    pub target_value: usize,
    pub intervened: VarId,
    pub intervened_value: usize,
}

/// Probability of a (partial) assignment.
pub fn probability(model: &CausalModel, event: &Assignment) -> Result<f64> {
    model.check_assignment(event)?;
    Ok(sum_product(model, event, None))
}

/// `P(event | given)`; `given` may be empty.
pub fn marginal(model: &CausalModel, event: &Assignment, given: &Assignment) -> Result<f64> {
    marginal_with_threshold(model, event, given, DEFAULT_ZERO_THRESHOLD)
}

pub fn marginal_with_threshold(
    model: &CausalModel,
    event: &Assignment,
    given: &Assignment,
    zero_threshold: f64,
) -> Result<f64> {
    if event.is_empty() {
        return Err(Error::InvalidAssignment("event binds no variables".into()));
    }
    model.check_assignment(event)?;
    model.check_assignment(given)?;
    if let Some(v) = event.vars().find(|&v| given.get(v).is_some()) {
        return Err(Error::InvalidAssignment(format!(
            "`{}` is bound in both event and condition",
            model.graph().name(v)
        )));
    }
    let mut joint = given.clone();
    for (v, x) in event.iter() {
        joint.bind(v, x);
    }
    let numerator = sum_product(model, &joint, None);
    if given.is_empty() {
        return Ok(numerator);
    }
    let denominator = sum_product(model, given, None);
    if denominator <= zero_threshold {
        return Err(Error::ZeroConditioningEvent {
            probability: denominator,
        });
    }
    Ok(numerator / denominator)
}

/// Truncated factorization: the intervened node's factor is dropped and its
/// value is fixed in every other factor.
pub fn post_intervention(model: &CausalModel, query: &InterventionQuery) -> Result<f64> {
    let graph = model.graph();
    graph.check(query.target)?;
    graph.check(query.intervened)?;
    if query.target == query.intervened {
        return Err(Error::InvalidQuery(
            "target and intervened variable coincide".into(),
        ));
    }
    if query.target_value >= graph.cardinality(query.target)
        || query.intervened_value >= graph.cardinality(query.intervened)
    {
        return Err(Error::InvalidQuery("value outside the domain".into()));
    }
    let fixed = Assignment::new()
        .with(query.target, query.target_value)
        .with(query.intervened, query.intervened_value);
    Ok(sum_product(model, &fixed, Some(query.intervened)))
}

/// `TE = P(y | do(to)) - P(y | do(from))`.
pub fn total_effect(
    model: &CausalModel,
    cause: VarId,
    from: usize,
    to: usize,
    target: VarId,
    target_value: usize,
) -> Result<f64> {
    if from == to {
        // Still validate the query.
        post_intervention(
            model,
            &InterventionQuery {
                target,
                target_value,
                intervened: cause,
                intervened_value: from,
            },
        )?;
        return Ok(0.0);
    }
    let at = |value| {
        post_intervention(
            model,
            &InterventionQuery {
                target,
                target_value,
                intervened: cause,
                intervened_value: value,
            },
        )
    };
    Ok(at(to)? - at(from)?)
}

/// `P(e+ | c+) - P(e+ | c-)`.
pub fn risk_difference(
    model: &CausalModel,
    protected: BinaryAttribute,
    decision: BinaryAttribute,
) -> Result<f64> {
    let graph = model.graph();
    protected.validate(graph, "protected attribute")?;
    decision.validate(graph, "decision")?;
    let event = Assignment::new().with(decision.var, decision.positive);
    let pos = marginal(
        model,
        &event,
        &Assignment::new().with(protected.var, protected.positive),
    )?;
    let neg = marginal(
        model,
        &event,
        &Assignment::new().with(protected.var, protected.negative),
    )?;
    Ok(pos - neg)
}

/// Sums `Π P(v | Pa(V))` over all completions of `fixed` within the ancestral
/// closure of the fixed variables, omitting the factor of `truncated`.
fn sum_product(model: &CausalModel, fixed: &Assignment, truncated: Option<VarId>) -> f64 {
    let nodes = model.ancestral_closure(fixed.vars());
    let free: Vec<VarId> = nodes
        .iter()
        .copied()
        .filter(|&v| fixed.get(v).is_none())
        .collect();
    let factors: Vec<VarId> = nodes
        .iter()
        .copied()
        .filter(|&v| Some(v) != truncated)
        .collect();
    let mut state = vec![0; model.len()];
    for (v, x) in fixed.iter() {
        state[v.index()] = x;
    }
    let mut total = 0.0;
    model.for_each_completion(&free, &mut state, |s| {
        total += factors
            .iter()
            .map(|&v| model.cpt(v).prob(s))
            .product::<f64>();
    });
    total
}
