//! Discrete causal networks: variables with ordered finite domains, an
//! acyclic arc set, and one conditional probability table per node.
//!
//! Variables are addressed by [`VarId`], the index at which they were
//! declared. Parent sequences follow arc declaration order, and CPT rows are
//! laid out in mixed radix over that sequence with the first parent most
//! significant. Both orders are fixed at construction so that enumeration and
//! QP variable indexing are reproducible.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// Absolute tolerance on CPT row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(usize);

impl VarId {
    pub fn new(index: usize) -> Self {
        VarId(index)
    }

    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    name: String,
    domain: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(
        name: impl Into<String>,
        domain: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let name = name.into();
        let domain: Vec<String> = domain.into_iter().map(Into::into).collect();
        if name.is_empty() {
            return Err(Error::InvalidVariable {
                name,
                reason: "empty name".into(),
            });
        }
        if domain.len() < 2 {
            return Err(Error::InvalidVariable {
                name,
                reason: format!("domain has {} value(s); at least 2 required", domain.len()),
            });
        }
        let mut seen = BTreeSet::new();
        for label in &domain {
            if label.is_empty() || !seen.insert(label.as_str()) {
                return Err(Error::InvalidVariable {
                    name,
                    reason: format!("empty or duplicate label `{label}`"),
                });
            }
        }
        Ok(Variable { name, domain })
    }

    /// Shorthand for a two-valued variable.
    pub fn binary(name: impl Into<String>, neg: &str, pos: &str) -> Result<Self> {
        Variable::new(name, [neg, pos])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn cardinality(&self) -> usize {
        self.domain.len()
    }

    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.domain.iter().position(|l| l == label)
    }

    pub fn label(&self, value: usize) -> &str {
        &self.domain[value]
    }
}

/// Directed graph over declared variables. Acyclicity is checked when a
/// [`CausalModel`] is built, so a graph may transiently hold a cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalGraph {
    variables: Vec<Variable>,
    arcs: Vec<(VarId, VarId)>,
    parents: Vec<Vec<VarId>>,
    children: Vec<Vec<VarId>>,
}

impl CausalGraph {
    pub fn new(variables: Vec<Variable>) -> Result<Self> {
        let mut names = BTreeSet::new();
        for v in &variables {
            if !names.insert(v.name()) {
                return Err(Error::DuplicateVariable(v.name().to_string()));
            }
        }
        let n = variables.len();
        Ok(CausalGraph {
            variables,
            arcs: Vec::new(),
            parents: vec![Vec::new(); n],
            children: vec![Vec::new(); n],
        })
    }

    /// Builds a graph from variables and named arcs.
    pub fn with_arcs(variables: Vec<Variable>, arcs: &[(&str, &str)]) -> Result<Self> {
        let mut graph = CausalGraph::new(variables)?;
        for (from, to) in arcs {
            graph.add_arc(from, to)?;
        }
        Ok(graph)
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> + '_ {
        (0..self.variables.len()).map(VarId)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn name(&self, id: VarId) -> &str {
        self.variables[id.0].name()
    }

    pub fn cardinality(&self, id: VarId) -> usize {
        self.variables[id.0].cardinality()
    }

    pub fn id(&self, name: &str) -> Result<VarId> {
        self.variables
            .iter()
            .position(|v| v.name() == name)
            .map(VarId)
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn contains(&self, id: VarId) -> bool {
        id.0 < self.variables.len()
    }

    pub(crate) fn check(&self, id: VarId) -> Result<()> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(Error::UnknownNode(id.to_string()))
        }
    }

    pub fn add_arc(&mut self, from: &str, to: &str) -> Result<()> {
        let (from, to) = (self.id(from)?, self.id(to)?);
        self.add_arc_ids(from, to)
    }

    pub fn add_arc_ids(&mut self, from: VarId, to: VarId) -> Result<()> {
        self.check(from)?;
        self.check(to)?;
        if from == to {
            return Err(Error::SelfLoop(self.name(from).to_string()));
        }
        if self.has_arc(from, to) {
            return Err(Error::DuplicateArc {
                from: self.name(from).to_string(),
                to: self.name(to).to_string(),
            });
        }
        self.arcs.push((from, to));
        self.parents[to.0].push(from);
        self.children[from.0].push(to);
        Ok(())
    }

    /// Removes an arc, returning whether it was present.
    pub fn remove_arc(&mut self, from: VarId, to: VarId) -> bool {
        let Some(pos) = self.arcs.iter().position(|&a| a == (from, to)) else {
            return false;
        };
        self.arcs.remove(pos);
        self.parents[to.0].retain(|&p| p != from);
        self.children[from.0].retain(|&c| c != to);
        true
    }

    pub fn has_arc(&self, from: VarId, to: VarId) -> bool {
        self.children
            .get(from.0)
            .is_some_and(|ch| ch.contains(&to))
    }

    pub fn arcs(&self) -> &[(VarId, VarId)] {
        &self.arcs
    }

    pub fn parents(&self, id: VarId) -> &[VarId] {
        &self.parents[id.0]
    }

    pub fn children(&self, id: VarId) -> &[VarId] {
        &self.children[id.0]
    }

    /// Kahn's algorithm; ties broken by declaration order.
    pub fn topological_order(&self) -> Result<Vec<VarId>> {
        let n = self.len();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<VarId> = self.ids().filter(|v| indegree[v.0] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &self.children[v.0] {
                indegree[c.0] -= 1;
                if indegree[c.0] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() < n {
            let stuck = self
                .ids()
                .filter(|v| indegree[v.0] > 0)
                .map(|v| self.name(v).to_string())
                .collect();
            return Err(Error::CycleDetected(stuck));
        }
        Ok(order)
    }

    /// Nodes reachable from `id` along arcs, excluding `id` itself.
    pub fn descendants(&self, id: VarId) -> Result<BTreeSet<VarId>> {
        self.check(id)?;
        Ok(self.reach(id, |v| &self.children[v.0]))
    }

    pub fn ancestors(&self, id: VarId) -> Result<BTreeSet<VarId>> {
        self.check(id)?;
        Ok(self.reach(id, |v| &self.parents[v.0]))
    }

    fn reach<'a>(&'a self, start: VarId, next: impl Fn(VarId) -> &'a [VarId]) -> BTreeSet<VarId> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in next(v) {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        seen.remove(&start);
        seen
    }

    /// Whether `to` is reachable from `from` without entering any node of
    /// `blocked`. `from` itself is never considered blocked.
    pub fn reachable_avoiding(&self, from: VarId, to: VarId, blocked: &BTreeSet<VarId>) -> bool {
        let mut seen = BTreeSet::from([from]);
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            for &w in &self.children[v.0] {
                if w == to {
                    return true;
                }
                if !blocked.contains(&w) && seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        false
    }
}

/// A conditional probability table `P(child | parents)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    child: VarId,
    parents: Vec<VarId>,
    parent_cards: Vec<usize>,
    child_card: usize,
    probs: Vec<f64>,
}

impl Cpt {
    /// Validates shape and probabilities against `graph`. Rows whose sums are
    /// within [`ROW_SUM_TOLERANCE`] of one are renormalized; others are rejected.
    pub fn new(
        graph: &CausalGraph,
        child: VarId,
        parents: Vec<VarId>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        graph.check(child)?;
        let node = graph.name(child).to_string();
        for &p in &parents {
            graph.check(p)?;
        }
        let parent_cards: Vec<usize> = parents.iter().map(|&p| graph.cardinality(p)).collect();
        let child_card = graph.cardinality(child);
        let expected_rows: usize = parent_cards.iter().product();
        if rows.len() != expected_rows {
            return Err(Error::CptShapeMismatch {
                node,
                reason: format!("expected {expected_rows} rows, found {}", rows.len()),
            });
        }
        let mut probs = Vec::with_capacity(expected_rows * child_card);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != child_card {
                return Err(Error::CptShapeMismatch {
                    node,
                    reason: format!("row {r} has {} entries, expected {child_card}", row.len()),
                });
            }
            probs.extend(normalize_row(&node, r, row)?);
        }
        Ok(Cpt {
            child,
            parents,
            parent_cards,
            child_card,
            probs,
        })
    }

    /// CPT with every row uniform over the child's domain.
    pub fn uniform(graph: &CausalGraph, child: VarId) -> Result<Self> {
        graph.check(child)?;
        let parents = graph.parents(child).to_vec();
        let k = graph.cardinality(child);
        let rows: usize = parents.iter().map(|&p| graph.cardinality(p)).product();
        Cpt::new(graph, child, parents, vec![vec![1.0 / k as f64; k]; rows])
    }

    pub fn child(&self) -> VarId {
        self.child
    }

    pub fn parents(&self) -> &[VarId] {
        &self.parents
    }

    pub fn row_count(&self) -> usize {
        self.probs.len() / self.child_card
    }

    pub fn child_cardinality(&self) -> usize {
        self.child_card
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.probs[row * self.child_card..(row + 1) * self.child_card]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.child_card)
    }

    /// Flat view: entry `row * child_cardinality + value`.
    pub fn table(&self) -> &[f64] {
        &self.probs
    }

    /// Row index for the parent values found in a full state vector.
    pub fn row_index(&self, state: &[usize]) -> usize {
        self.parents
            .iter()
            .zip(&self.parent_cards)
            .fold(0, |acc, (&p, &card)| acc * card + state[p.0])
    }

    /// Like [`Cpt::row_index`] but reading `value` for parent `var` instead of
    /// the state's entry.
    pub fn row_index_with(&self, state: &[usize], var: VarId, value: usize) -> usize {
        self.parents
            .iter()
            .zip(&self.parent_cards)
            .fold(0, |acc, (&p, &card)| {
                acc * card + if p == var { value } else { state[p.0] }
            })
    }

    /// Parent values for a row index, in parent order.
    pub fn row_values(&self, mut row: usize) -> Vec<usize> {
        let mut values = vec![0; self.parents.len()];
        for (slot, &card) in values.iter_mut().zip(&self.parent_cards).rev() {
            *slot = row % card;
            row /= card;
        }
        values
    }

    /// `P(child = state[child] | parents as in state)`.
    pub fn prob(&self, state: &[usize]) -> f64 {
        self.probs[self.row_index(state) * self.child_card + state[self.child.0]]
    }

    pub fn prob_with(&self, state: &[usize], var: VarId, value: usize) -> f64 {
        self.probs[self.row_index_with(state, var, value) * self.child_card + state[self.child.0]]
    }

    pub fn entry(&self, row: usize, value: usize) -> f64 {
        self.probs[row * self.child_card + value]
    }
}

fn normalize_row(node: &str, row: usize, mut values: Vec<f64>) -> Result<Vec<f64>> {
    let bad = |reason: String| Error::InvalidProbabilities {
        node: node.to_string(),
        row,
        reason,
    };
    if let Some(p) = values.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(bad(format!("entry {p} is not a probability")));
    }
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(bad(format!("row sums to {sum}")));
    }
    if sum != 1.0 {
        values.iter_mut().for_each(|p| *p /= sum);
    }
    Ok(values)
}

/// A validated causal network. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalModel {
    graph: CausalGraph,
    cpts: Vec<Cpt>,
    order: Vec<VarId>,
}

pub fn build_model(graph: CausalGraph, cpts: Vec<Cpt>) -> Result<CausalModel> {
    CausalModel::new(graph, cpts)
}

impl CausalModel {
    pub fn new(graph: CausalGraph, cpts: Vec<Cpt>) -> Result<Self> {
        let order = graph.topological_order()?;
        let mut slots: Vec<Option<Cpt>> = vec![None; graph.len()];
        for cpt in cpts {
            graph.check(cpt.child)?;
            let node = graph.name(cpt.child).to_string();
            if slots[cpt.child.0].is_some() {
                return Err(Error::CptShapeMismatch {
                    node,
                    reason: "more than one CPT".into(),
                });
            }
            if cpt.parents != graph.parents(cpt.child) {
                let names = |ps: &[VarId]| {
                    ps.iter()
                        .map(|&p| graph.name(p).to_string())
                        .collect::<Vec<_>>()
                };
                return Err(Error::CptShapeMismatch {
                    node,
                    reason: format!(
                        "parents {:?} differ from graph parents {:?}",
                        names(&cpt.parents),
                        names(graph.parents(cpt.child))
                    ),
                });
            }
            let cards_match = cpt.child_card == graph.cardinality(cpt.child)
                && cpt
                    .parents
                    .iter()
                    .zip(&cpt.parent_cards)
                    .all(|(&p, &c)| graph.cardinality(p) == c);
            if !cards_match {
                return Err(Error::CptShapeMismatch {
                    node,
                    reason: "domain sizes differ from graph".into(),
                });
            }
            let slot = cpt.child.0;
            slots[slot] = Some(cpt);
        }
        let cpts = slots
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.ok_or_else(|| Error::MissingCpt(graph.name(VarId(i)).to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok(CausalModel { graph, cpts, order })
    }

    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }

    pub fn cpt(&self, id: VarId) -> &Cpt {
        &self.cpts[id.0]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn id(&self, name: &str) -> Result<VarId> {
        self.graph.id(name)
    }

    pub fn len(&self) -> usize {
        self.graph.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graph.is_empty()
    }

    pub fn topological_order(&self) -> &[VarId] {
        &self.order
    }

    pub fn descendants(&self, id: VarId) -> Result<BTreeSet<VarId>> {
        self.graph.descendants(id)
    }

    /// Number of full joint states.
    pub fn state_count(&self) -> usize {
        self.graph.ids().map(|v| self.graph.cardinality(v)).product()
    }

    /// Copy of this model with `cpt` substituted for the CPT of its child.
    pub fn with_cpt(&self, cpt: Cpt) -> Result<Self> {
        let mut cpts = self.cpts.clone();
        let slot = cpt.child.0;
        self.graph.check(cpt.child)?;
        cpts[slot] = cpt;
        CausalModel::new(self.graph.clone(), cpts)
    }

    /// `P(v) = Π P(v | Pa(V))` for a full state vector.
    pub fn joint(&self, state: &[usize]) -> f64 {
        self.cpts.iter().map(|c| c.prob(state)).product()
    }

    /// Resolves `name=label` pairs into an [`Assignment`].
    pub fn assignment(&self, pairs: &[(&str, &str)]) -> Result<Assignment> {
        let mut a = Assignment::new();
        for (name, label) in pairs {
            let id = self.id(name)?;
            let value = self.graph.variable(id).value_index(label).ok_or_else(|| {
                Error::InvalidAssignment(format!("`{label}` is not a value of `{name}`"))
            })?;
            a.bind(id, value);
        }
        Ok(a)
    }

    pub fn value_index(&self, id: VarId, label: &str) -> Result<usize> {
        self.graph.variable(id).value_index(label).ok_or_else(|| {
            Error::InvalidAssignment(format!(
                "`{label}` is not a value of `{}`",
                self.graph.name(id)
            ))
        })
    }

    pub(crate) fn check_assignment(&self, a: &Assignment) -> Result<()> {
        for (&id, &value) in &a.bindings {
            self.graph.check(id)?;
            if value >= self.graph.cardinality(id) {
                return Err(Error::InvalidAssignment(format!(
                    "value index {value} outside the domain of `{}`",
                    self.graph.name(id)
                )));
            }
        }
        Ok(())
    }

    /// Calls `f` for every completion of `state` over `free`, in odometer
    /// order with the last free variable varying fastest. Entries of `state`
    /// outside `free` are left untouched.
    pub fn for_each_completion(
        &self,
        free: &[VarId],
        state: &mut [usize],
        mut f: impl FnMut(&[usize]),
    ) {
        for &v in free {
            state[v.0] = 0;
        }
        loop {
            f(state);
            let mut i = free.len();
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                let v = free[i];
                state[v.0] += 1;
                if state[v.0] < self.graph.cardinality(v) {
                    break;
                }
                state[v.0] = 0;
            }
        }
    }

    /// The given nodes plus all of their ancestors, in topological order.
    pub fn ancestral_closure(&self, nodes: impl IntoIterator<Item = VarId>) -> Vec<VarId> {
        let mut keep = BTreeSet::new();
        for v in nodes {
            if keep.insert(v) {
                keep.extend(self.graph.ancestors(v).unwrap_or_default());
            }
        }
        self.order
            .iter()
            .copied()
            .filter(|v| keep.contains(v))
            .collect()
    }
}

/// A partial or full binding of variables to value indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    bindings: BTreeMap<VarId, usize>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: VarId, value: usize) -> Self {
        self.bind(var, value);
        self
    }

    pub fn bind(&mut self, var: VarId, value: usize) {
        self.bindings.insert(var, value);
    }

    pub fn get(&self, var: VarId) -> Option<usize> {
        self.bindings.get(&var).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.bindings.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.bindings.iter().map(|(&k, &v)| (k, v))
    }
}

/// A variable with two designated values: the `negative` and `positive`
/// groups of a protected attribute, or the decisions of a decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryAttribute {
    pub var: VarId,
    pub negative: usize,
    pub positive: usize,
}

impl BinaryAttribute {
    pub fn new(var: VarId, negative: usize, positive: usize) -> Self {
        BinaryAttribute {
            var,
            negative,
            positive,
        }
    }

    /// Resolves `name` with labels `negative`/`positive` against a model.
    pub fn resolve(model: &CausalModel, name: &str, negative: &str, positive: &str) -> Result<Self> {
        let var = model.id(name)?;
        Ok(BinaryAttribute {
            var,
            negative: model.value_index(var, negative)?,
            positive: model.value_index(var, positive)?,
        })
    }

    /// The same attribute with its designations exchanged.
    pub fn swapped(self) -> Self {
        BinaryAttribute {
            var: self.var,
            negative: self.positive,
            positive: self.negative,
        }
    }

    pub(crate) fn validate(&self, graph: &CausalGraph, role: &str) -> Result<()> {
        graph.check(self.var)?;
        let card = graph.cardinality(self.var);
        if self.negative >= card || self.positive >= card {
            return Err(Error::InvalidQuery(format!(
                "{role} `{}`: designated value outside the domain",
                graph.name(self.var)
            )));
        }
        if self.negative == self.positive {
            return Err(Error::InvalidQuery(format!(
                "{role} `{}`: negative and positive values coincide",
                graph.name(self.var)
            )));
        }
        Ok(())
    }
}
