//! Discrimination discovery: both directional path-specific effects for the
//! direct arc and for the redlining paths, judged against a threshold.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{BinaryAttribute, CausalGraph, CausalModel, VarId};
use crate::path_effects::{recanting_witness, se_direct, se_indirect, PathQuery};
use crate::report::ReportDocument;

/// A 5% difference in positive-decision probability.
pub const DEFAULT_TAU: f64 = 0.05;

/// Protected attribute, decision and redlining attributes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscriminationQuery {
    pub protected: BinaryAttribute,
    pub decision: BinaryAttribute,
    pub redlining: BTreeSet<VarId>,
}

impl DiscriminationQuery {
    pub fn new(
        protected: BinaryAttribute,
        decision: BinaryAttribute,
        redlining: impl IntoIterator<Item = VarId>,
    ) -> Self {
        DiscriminationQuery {
            protected,
            decision,
            redlining: redlining.into_iter().collect(),
        }
    }

    /// Resolves names and labels against a model.
    pub fn resolve(
        model: &CausalModel,
        protected: (&str, &str, &str),
        decision: (&str, &str, &str),
        redlining: &[&str],
    ) -> Result<Self> {
        let protected = BinaryAttribute::resolve(model, protected.0, protected.1, protected.2)?;
        let decision = BinaryAttribute::resolve(model, decision.0, decision.1, decision.2)?;
        let redlining = redlining
            .iter()
            .map(|r| model.id(r))
            .collect::<Result<BTreeSet<_>>>()?;
        Ok(DiscriminationQuery {
            protected,
            decision,
            redlining,
        })
    }

    pub fn direct(&self) -> PathQuery {
        PathQuery::direct(self.protected, self.decision)
    }

    pub fn indirect(&self) -> PathQuery {
        PathQuery::redlining(self.protected, self.decision, self.redlining.iter().copied())
    }

    /// The same query with the protected groups exchanged.
    pub fn swap_protected(&self) -> Self {
        DiscriminationQuery {
            protected: self.protected.swapped(),
            ..self.clone()
        }
    }

    pub fn validate(&self, graph: &CausalGraph) -> Result<()> {
        self.direct().validate(graph)?;
        self.indirect().validate(graph)
    }
}

/// Effects in both directions: `forward` is `SE(c+, c-)`, the change seen by
/// group `c-` when treated as `c+`; `reverse` is `SE(c-, c+)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectPair {
    pub forward: f64,
    pub reverse: f64,
}

impl EffectPair {
    pub fn new(forward: f64, reverse: f64) -> Self {
        EffectPair { forward, reverse }
    }

    /// Strict comparison in either direction.
    pub fn exceeds(&self, tau: f64) -> bool {
        self.forward > tau || self.reverse > tau
    }

    pub fn max(&self) -> f64 {
        self.forward.max(self.reverse)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IndirectEffects {
    Identified(EffectPair),
    Unidentifiable { witnesses: BTreeSet<VarId> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    NoDiscrimination,
    Discrimination,
    /// No discrimination established, but the indirect effect is unidentifiable.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryReport {
    pub se_direct: EffectPair,
    pub se_indirect: IndirectEffects,
    pub tau: f64,
    pub judge_direct: bool,
    /// `None` when the indirect effect is unidentifiable.
    pub judge_indirect: Option<bool>,
}

impl DiscoveryReport {
    pub fn from_effects(direct: EffectPair, indirect: IndirectEffects, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        let judge_indirect = match &indirect {
            IndirectEffects::Identified(pair) => Some(pair.exceeds(tau)),
            IndirectEffects::Unidentifiable { .. } => None,
        };
        Ok(DiscoveryReport {
            se_direct: direct,
            judge_direct: direct.exceeds(tau),
            se_indirect: indirect,
            tau,
            judge_indirect,
        })
    }

    pub fn witnesses(&self) -> BTreeSet<VarId> {
        match &self.se_indirect {
            IndirectEffects::Identified(_) => BTreeSet::new(),
            IndirectEffects::Unidentifiable { witnesses } => witnesses.clone(),
        }
    }

    pub fn outcome(&self) -> Outcome {
        if self.judge_direct || self.judge_indirect == Some(true) {
            Outcome::Discrimination
        } else if self.judge_indirect.is_none() {
            Outcome::Indeterminate
        } else {
            Outcome::NoDiscrimination
        }
    }

    pub fn to_document(&self, graph: &CausalGraph) -> ReportDocument {
        let mut doc = ReportDocument::new();
        doc.set("se_direct_fwd", self.se_direct.forward);
        doc.set("se_direct_rev", self.se_direct.reverse);
        match &self.se_indirect {
            IndirectEffects::Identified(pair) => {
                doc.set("se_indirect_fwd", pair.forward);
                doc.set("se_indirect_rev", pair.reverse);
            }
            IndirectEffects::Unidentifiable { .. } => {
                doc.set("se_indirect_fwd", "unidentifiable");
                doc.set("se_indirect_rev", "unidentifiable");
            }
        }
        doc.set("tau", self.tau);
        doc.set("judge_direct", self.judge_direct);
        doc.set(
            "judge_indirect",
            match self.judge_indirect {
                Some(j) => j.to_string(),
                None => "indeterminate".to_string(),
            },
        );
        let names: Vec<&str> = self.witnesses().iter().map(|&w| graph.name(w)).collect();
        doc.set("witnesses", names.join(","));
        doc
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidQuery(format!("tau must be a finite non-negative number, got {tau}")));
    }
    Ok(())
}

/// Computes the direct and indirect effects in both directions and judges
/// them against `tau`.
pub fn pse_dd(model: &CausalModel, query: &DiscriminationQuery, tau: f64) -> Result<DiscoveryReport> {
    check_tau(tau)?;
    query.validate(model.graph())?;
    let (neg, pos) = (query.protected.negative, query.protected.positive);

    let direct = query.direct();
    let se_d = EffectPair::new(
        se_direct(model, &direct, neg, pos)?.value,
        se_direct(model, &direct, pos, neg)?.value,
    );

    let indirect = query.indirect();
    let check = recanting_witness(model.graph(), &indirect)?;
    let se_i = if check.satisfied {
        IndirectEffects::Unidentifiable {
            witnesses: check.witnesses,
        }
    } else {
        IndirectEffects::Identified(EffectPair::new(
            se_indirect(model, &indirect, neg, pos)?.value,
            se_indirect(model, &indirect, pos, neg)?.value,
        ))
    };
    DiscoveryReport::from_effects(se_d, se_i, tau)
}
