//! Discrimination removal by minimally repairing the decision's CPT.
//!
//! The repaired table minimizes the squared Euclidean distance between the
//! joint distributions of the original and repaired networks subject to the
//! path-specific effects in both directions staying at or below `tau`. Every
//! joint probability is linear in the decision's CPT entries and so is every
//! path-specific effect (all other factors are fixed), so the repair is a
//! convex quadratic program with a diagonal Hessian.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::discovery::{pse_dd, DiscoveryReport, DiscriminationQuery};
use crate::error::{Error, Result};
use crate::inference::{marginal, DEFAULT_ZERO_THRESHOLD};
use crate::model::{Assignment, CausalModel, Cpt, VarId};
use crate::path_effects::{decision_coefficients, partition_children, PathQuery};
use crate::qp::{self, KktResiduals, LinearConstraint, QuadraticProgram, SolverOptions};
use crate::sampling::{self, SamplingMode};

/// Effect constraints are imposed at `tau - EFFECT_MARGIN` so that the
/// repaired model satisfies `<= tau` after rounding.
pub const EFFECT_MARGIN: f64 = 1e-9;

/// Which path-specific effects the repair constrains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RemovalMode {
    #[default]
    Both,
    DirectOnly,
    IndirectOnly,
}

impl RemovalMode {
    fn direct(self) -> bool {
        matches!(self, RemovalMode::Both | RemovalMode::DirectOnly)
    }

    fn indirect(self) -> bool {
        matches!(self, RemovalMode::Both | RemovalMode::IndirectOnly)
    }
}

/// A model with arcs into the decision removed.
#[derive(Debug, Clone)]
pub struct Surgery {
    pub model: CausalModel,
    pub removed_arcs: Vec<(VarId, VarId)>,
}

/// Removes every arc `Q -> E` for which some witness `S` reaches `Q` through a
/// redlining attribute, so that no witness starts a redlining path any more.
/// The decision's CPT is replaced by the original conditional distribution
/// over the remaining parents.
pub fn cut_unidentifiable(model: &CausalModel, query: &PathQuery) -> Result<Surgery> {
    let graph = model.graph();
    let partition = partition_children(graph, query)?;
    if partition.witnesses.is_empty() {
        return Err(Error::NotApplicable(
            "recanting witness criterion is not satisfied".into(),
        ));
    }
    let crate::path_effects::PathKind::Redlining(redlining) = &query.kind else {
        unreachable!("partition_children accepts only redlining queries");
    };
    let e = query.decision.var;
    let mut cut: BTreeSet<VarId> = BTreeSet::new();
    for &s in &partition.witnesses {
        let below_s = graph.descendants(s)?;
        for &q in graph.parents(e) {
            for &r in redlining {
                if below_s.contains(&r) && (q == r || graph.descendants(r)?.contains(&q)) {
                    cut.insert(q);
                    break;
                }
            }
        }
    }

    let mut reduced = graph.clone();
    let mut removed_arcs = Vec::new();
    for &q in graph.parents(e) {
        if cut.contains(&q) {
            reduced.remove_arc(q, e);
            removed_arcs.push((q, e));
        }
    }

    let kept = reduced.parents(e).to_vec();
    let card = graph.cardinality(e);
    let row_count: usize = kept.iter().map(|&p| graph.cardinality(p)).product();
    let mut rows = Vec::with_capacity(row_count);
    let probe = Cpt::uniform(&reduced, e)?;
    for r in 0..row_count {
        let mut given = Assignment::new();
        for (&p, v) in kept.iter().zip(probe.row_values(r)) {
            given.bind(p, v);
        }
        let row = (0..card)
            .map(|value| marginal(model, &Assignment::new().with(e, value), &given))
            .collect::<Result<Vec<_>>>();
        rows.push(match row {
            Ok(row) => row,
            Err(Error::ZeroConditioningEvent { .. }) => vec![1.0 / card as f64; card],
            Err(other) => return Err(other),
        });
    }
    let mut cpts = model.cpts().to_vec();
    cpts[e.index()] = Cpt::new(&reduced, e, kept, rows)?;
    let surgered = CausalModel::new(reduced, cpts)?;

    let after = partition_children(surgered.graph(), query)?;
    if !after.witnesses.is_empty() {
        return Err(Error::Unidentifiable {
            witnesses: after
                .witnesses
                .iter()
                .map(|&w| surgered.graph().name(w).to_string())
                .collect(),
        });
    }
    Ok(Surgery {
        model: surgered,
        removed_arcs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectKind {
    Direct,
    Indirect,
}

/// One linear effect constraint `coefficients · θ <= bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectConstraint {
    pub kind: EffectKind,
    /// `true` for `SE(c+, c-)`, `false` for `SE(c-, c+)`.
    pub forward: bool,
    pub constraint: LinearConstraint,
}

/// The quadratic program over the decision's CPT entries. Variable
/// `row * |dom(E)| + value` is `P'(E = value | row)`.
#[derive(Debug, Clone)]
pub struct RepairProblem {
    model: CausalModel,
    query: DiscriminationQuery,
    tau: f64,
    mode: RemovalMode,
    removed_arcs: Vec<(VarId, VarId)>,
    original: Vec<f64>,
    weights: Vec<f64>,
    effects: Vec<EffectConstraint>,
    qp: QuadraticProgram,
}

impl RepairProblem {
    pub fn model(&self) -> &CausalModel {
        &self.model
    }

    pub fn query(&self) -> &DiscriminationQuery {
        &self.query
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn mode(&self) -> RemovalMode {
        self.mode
    }

    pub fn removed_arcs(&self) -> &[(VarId, VarId)] {
        &self.removed_arcs
    }

    pub fn qp(&self) -> &QuadraticProgram {
        &self.qp
    }

    pub fn variable_count(&self) -> usize {
        self.original.len()
    }

    /// The decision's current CPT, flattened.
    pub fn original(&self) -> &[f64] {
        &self.original
    }

    pub fn effect_constraints(&self) -> &[EffectConstraint] {
        &self.effects
    }

    pub fn equality_count(&self) -> usize {
        self.qp.equalities.len()
    }

    pub fn bound_count(&self) -> usize {
        self.qp.inequalities.len() - self.effects.len()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.qp.is_positive_definite()
    }

    /// `Σ_v (P'(v) - P(v))^2` for a candidate flattened table.
    pub fn objective(&self, theta: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(theta.iter().zip(&self.original))
            .map(|(w, (t, o))| w * (t - o) * (t - o))
            .sum()
    }

    /// Uniform decision table; every path-specific effect is zero there, so
    /// it is feasible for any `tau >= 0`.
    pub fn feasibility_certificate(&self) -> Vec<f64> {
        let k = self.model.graph().cardinality(self.query.decision.var);
        vec![1.0 / k as f64; self.original.len()]
    }
}

/// Assembles the repair QP on a model where the constrained effects are
/// identifiable.
pub fn build_repair_problem(
    model: &CausalModel,
    query: &DiscriminationQuery,
    tau: f64,
    mode: RemovalMode,
) -> Result<RepairProblem> {
    build_problem(model, query, tau, mode, Vec::new())
}

fn build_problem(
    model: &CausalModel,
    query: &DiscriminationQuery,
    tau: f64,
    mode: RemovalMode,
    removed_arcs: Vec<(VarId, VarId)>,
) -> Result<RepairProblem> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidQuery(format!("tau must be non-negative, got {tau}")));
    }
    query.validate(model.graph())?;
    let e = query.decision.var;
    let cpt = model.cpt(e);
    let k = cpt.child_cardinality();
    let rows = cpt.row_count();
    let nvars = rows * k;
    let original = cpt.table().to_vec();

    // Squared weight of each CPT entry in the joint: P(v) = θ[row(v), e(v)] · w(v).
    let mut weights = vec![0.0; nvars];
    let all: Vec<VarId> = model.graph().ids().collect();
    let mut state = vec![0; model.len()];
    model.for_each_completion(&all, &mut state, |s| {
        let w: f64 = model
            .cpts()
            .iter()
            .filter(|c| c.child() != e)
            .map(|c| c.prob(s))
            .product();
        weights[cpt.row_index(s) * k + s[e.index()]] += w * w;
    });
    let floor = weights.iter().copied().fold(0.0, f64::max) * 1e-10;
    for w in &mut weights {
        *w = w.max(floor).max(f64::MIN_POSITIVE);
    }

    let hessian = DMatrix::from_diagonal(&DVector::from_iterator(nvars, weights.iter().map(|w| 2.0 * w)));
    let linear = DVector::from_iterator(
        nvars,
        weights.iter().zip(&original).map(|(w, o)| -2.0 * w * o),
    );

    let equalities = (0..rows)
        .map(|r| {
            let mut a = vec![0.0; nvars];
            a[r * k..(r + 1) * k].iter_mut().for_each(|x| *x = 1.0);
            LinearConstraint::new(a, 1.0)
        })
        .collect();
    let mut inequalities: Vec<LinearConstraint> = (0..nvars)
        .map(|i| {
            let mut a = vec![0.0; nvars];
            a[i] = -1.0;
            LinearConstraint::new(a, 0.0)
        })
        .collect();

    let bound = (tau - EFFECT_MARGIN).max(0.0);
    let (neg, pos) = (query.protected.negative, query.protected.positive);
    let mut effects = Vec::new();
    let mut add = |kind: EffectKind, path: &PathQuery| -> Result<()> {
        for (forward, from, to) in [(true, neg, pos), (false, pos, neg)] {
            let coef = decision_coefficients(model, path, from, to)?;
            let mut a = vec![0.0; nvars];
            for (r, c) in coef.iter().enumerate() {
                a[r * k + query.decision.positive] = *c;
            }
            effects.push(EffectConstraint {
                kind,
                forward,
                constraint: LinearConstraint::new(a, bound),
            });
        }
        Ok(())
    };
    if mode.direct() {
        add(EffectKind::Direct, &query.direct())?;
    }
    if mode.indirect() {
        add(EffectKind::Indirect, &query.indirect())?;
    }
    inequalities.extend(effects.iter().map(|e| e.constraint.clone()));

    Ok(RepairProblem {
        model: model.clone(),
        query: query.clone(),
        tau,
        mode,
        removed_arcs,
        original,
        weights,
        effects,
        qp: QuadraticProgram {
            hessian,
            linear,
            equalities,
            inequalities,
        },
    })
}

#[derive(Debug, Clone)]
pub struct RepairResult {
    pub repaired_model: CausalModel,
    pub objective_value: f64,
    pub removed_arcs: Vec<(VarId, VarId)>,
    pub post_effects: DiscoveryReport,
    pub iterations: usize,
    pub kkt: KktResiduals,
}

/// Solves the repair QP and installs the repaired table.
pub fn solve_repair(problem: &RepairProblem, options: &SolverOptions) -> Result<RepairResult> {
    let solution = qp::solve(&problem.qp, options)?;
    let e = problem.query.decision.var;
    let k = problem.model.graph().cardinality(e);
    let mut theta = solution.x.clone();
    for row in theta.chunks_mut(k) {
        row.iter_mut().for_each(|p| *p = p.max(0.0));
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= s);
    }

    // Rounding may leave an effect a hair above tau; shrink toward the
    // uniform certificate, along which every effect scales linearly to zero.
    let certificate = problem.feasibility_certificate();
    let mut blend = 0.0;
    let (model, post) = loop {
        let candidate: Vec<f64> = theta
            .iter()
            .zip(&certificate)
            .map(|(t, u)| (1.0 - blend) * t + blend * u)
            .collect();
        let model = install(&problem.model, e, &candidate)?;
        let post = pse_dd(&model, &problem.query, problem.tau)?;
        let worst = constrained_max(&post, problem.mode);
        if worst <= problem.tau || blend >= 1.0 {
            theta = candidate;
            break (model, post);
        }
        let needed = 1.0 - problem.tau / worst;
        blend = (blend.max(needed) * 2.0).clamp(1e-12, 1.0);
    };

    Ok(RepairResult {
        objective_value: problem.objective(&theta).max(0.0),
        repaired_model: model,
        removed_arcs: problem.removed_arcs.clone(),
        post_effects: post,
        iterations: solution.iterations,
        kkt: solution.kkt,
    })
}

fn constrained_max(report: &DiscoveryReport, mode: RemovalMode) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    if mode.direct() {
        worst = worst.max(report.se_direct.max());
    }
    if mode.indirect() {
        if let crate::discovery::IndirectEffects::Identified(pair) = &report.se_indirect {
            worst = worst.max(pair.max());
        }
    }
    worst
}

fn install(model: &CausalModel, e: VarId, theta: &[f64]) -> Result<CausalModel> {
    let cpt = model.cpt(e);
    let k = cpt.child_cardinality();
    let rows = theta.chunks(k).map(<[f64]>::to_vec).collect();
    model.with_cpt(Cpt::new(model.graph(), e, cpt.parents().to_vec(), rows)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepairOptions {
    pub mode: RemovalMode,
    pub solver: SolverOptions,
    /// Number of tuples to generate.
    pub rows: usize,
    pub seed: u64,
    pub sampling: SamplingMode,
}

impl Default for RepairOptions {
    fn default() -> Self {
        RepairOptions {
            mode: RemovalMode::Both,
            solver: SolverOptions::default(),
            rows: 1000,
            seed: 0,
            sampling: SamplingMode::Ancestral,
        }
    }
}

/// Cuts unidentifiable redlining paths if needed, repairs the decision's CPT
/// and generates a dataset from the repaired joint distribution.
pub fn pse_dr(
    model: &CausalModel,
    query: &DiscriminationQuery,
    tau: f64,
    options: &RepairOptions,
) -> Result<(RepairResult, Dataset)> {
    if options.rows == 0 {
        return Err(Error::InvalidQuery("at least one tuple must be generated".into()));
    }
    query.validate(model.graph())?;
    let witnesses = partition_children(model.graph(), &query.indirect())?.witnesses;
    let problem = if !witnesses.is_empty() && options.mode.indirect() {
        let surgery = cut_unidentifiable(model, &query.indirect())?;
        build_problem(&surgery.model, query, tau, options.mode, surgery.removed_arcs)?
    } else {
        build_problem(model, query, tau, options.mode, Vec::new())?
    };
    let result = solve_repair(&problem, &options.solver)?;
    let data = sampling::generate(&result.repaired_model, options.rows, options.seed, options.sampling);
    Ok((result, data))
}

/// Baseline repair that makes the decision independent of all of its
/// parents, replacing every row with the marginal `P(e)`.
pub fn flatten_decision(model: &CausalModel, decision: VarId) -> Result<CausalModel> {
    let cpt = model.cpt(decision);
    let k = cpt.child_cardinality();
    let marginal_row = (0..k)
        .map(|v| {
            crate::inference::marginal_with_threshold(
                model,
                &Assignment::new().with(decision, v),
                &Assignment::new(),
                DEFAULT_ZERO_THRESHOLD,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = vec![marginal_row; cpt.row_count()];
    model.with_cpt(Cpt::new(model.graph(), decision, cpt.parents().to_vec(), rows)?)
}
