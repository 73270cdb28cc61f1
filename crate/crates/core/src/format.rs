//! Line-oriented text format for graphs and CPTs.
//!
//! ```text
//! # comment
//! var Race c-,c+
//! var Loan e-,e+
//! arc Race Loan
//! cpt Race | : 0.4,0.6
//! cpt Loan | c- : 0.7,0.3
//! cpt Loan | c+ : 0.2,0.8
//! ```
//!
//! Parent values in a `cpt` line follow the child's parent order, which is the
//! order in which arcs into the child were declared. A root node has an empty
//! parent list. CPT lines may be left out entirely when the tables are to be
//! estimated from data.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{CausalGraph, CausalModel, Cpt, VarId, Variable};

/// A parsed model file: a graph and whatever CPTs it declared.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub graph: CausalGraph,
    pub cpts: Vec<Cpt>,
}

impl ModelSpec {
    pub fn has_cpts(&self) -> bool {
        !self.cpts.is_empty()
    }

    /// Builds the model from the declared CPTs.
    pub fn into_model(self) -> Result<CausalModel> {
        CausalModel::new(self.graph, self.cpts)
    }
}

pub fn read_model_file(path: impl AsRef<Path>) -> Result<ModelSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}

pub fn write_model_file(path: impl AsRef<Path>, model: &CausalModel) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_model(model)).map_err(|e| Error::io(path, e))
}

struct CptLine {
    line: usize,
    parent_values: Vec<String>,
    probs: Vec<f64>,
}

pub fn parse_model(text: &str) -> Result<ModelSpec> {
    let mut variables = Vec::new();
    let mut arcs = Vec::new();
    let mut cpt_lines: BTreeMap<String, Vec<CptLine>> = BTreeMap::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (keyword, rest) = content
            .split_once(char::is_whitespace)
            .map(|(k, r)| (k, r.trim()))
            .unwrap_or((content, ""));
        match keyword {
            "var" => {
                let mut parts = rest.split_whitespace();
                let (Some(name), Some(labels), None) = (parts.next(), parts.next(), parts.next())
                else {
                    return Err(Error::parse(line, "expected `var <name> <label>,<label>...`"));
                };
                let var = Variable::new(name, labels.split(','))
                    .map_err(|e| Error::parse(line, e.to_string()))?;
                variables.push(var);
            }
            "arc" => {
                let mut parts = rest.split_whitespace();
                let (Some(from), Some(to), None) = (parts.next(), parts.next(), parts.next())
                else {
                    return Err(Error::parse(line, "expected `arc <from> <to>`"));
                };
                arcs.push((line, from.to_string(), to.to_string()));
            }
            "cpt" => {
                let (head, probs) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::parse(line, "missing `:` in cpt line"))?;
                let (child, parents) = head
                    .split_once('|')
                    .ok_or_else(|| Error::parse(line, "missing `|` in cpt line"))?;
                let child = child.trim();
                if child.is_empty() || child.contains(char::is_whitespace) {
                    return Err(Error::parse(line, "expected a single child name"));
                }
                let parents = parents.trim();
                let parent_values = if parents.is_empty() {
                    Vec::new()
                } else {
                    parents.split(',').map(|s| s.trim().to_string()).collect()
                };
                let probs = probs
                    .split(',')
                    .map(|p| {
                        p.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::parse(line, format!("bad probability `{}`", p.trim())))
                    })
                    .collect::<Result<Vec<_>>>()?;
                cpt_lines.entry(child.to_string()).or_default().push(CptLine {
                    line,
                    parent_values,
                    probs,
                });
            }
            other => return Err(Error::parse(line, format!("unknown directive `{other}`"))),
        }
    }

    let mut graph = CausalGraph::new(variables)?;
    for (line, from, to) in arcs {
        graph
            .add_arc(&from, &to)
            .map_err(|e| Error::parse(line, e.to_string()))?;
    }

    let mut cpts = Vec::new();
    for (child_name, lines) in cpt_lines {
        let child = graph.id(&child_name)?;
        cpts.push(assemble_cpt(&graph, child, lines)?);
    }
    Ok(ModelSpec { graph, cpts })
}

fn assemble_cpt(graph: &CausalGraph, child: VarId, lines: Vec<CptLine>) -> Result<Cpt> {
    let parents = graph.parents(child).to_vec();
    let cards: Vec<usize> = parents.iter().map(|&p| graph.cardinality(p)).collect();
    let row_count: usize = cards.iter().product();
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; row_count];
    for l in lines {
        if l.parent_values.len() != parents.len() {
            return Err(Error::parse(
                l.line,
                format!(
                    "`{}` has {} parent(s), row gives {} value(s)",
                    graph.name(child),
                    parents.len(),
                    l.parent_values.len()
                ),
            ));
        }
        let mut row = 0;
        for ((&p, &card), label) in parents.iter().zip(&cards).zip(&l.parent_values) {
            let value = graph.variable(p).value_index(label).ok_or_else(|| {
                Error::parse(l.line, format!("`{label}` is not a value of `{}`", graph.name(p)))
            })?;
            row = row * card + value;
        }
        if rows[row].replace(l.probs).is_some() {
            return Err(Error::parse(l.line, "duplicate cpt row"));
        }
    }
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(r, row)| {
            row.ok_or_else(|| Error::CptShapeMismatch {
                node: graph.name(child).to_string(),
                reason: format!("row {r} is missing"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Cpt::new(graph, child, parents, rows)
}

/// Serializes a model. Probabilities use the shortest representation that
/// parses back to the same `f64`.
pub fn format_model(model: &CausalModel) -> String {
    let graph = model.graph();
    let mut out = String::new();
    for v in graph.variables() {
        let _ = writeln!(out, "var {} {}", v.name(), v.domain().join(","));
    }
    for &(from, to) in graph.arcs() {
        let _ = writeln!(out, "arc {} {}", graph.name(from), graph.name(to));
    }
    for cpt in model.cpts() {
        let child = graph.name(cpt.child());
        for (r, row) in cpt.rows().enumerate() {
            let labels: Vec<&str> = cpt
                .row_values(r)
                .into_iter()
                .zip(cpt.parents())
                .map(|(value, &p)| graph.variable(p).label(value))
                .collect();
            let probs: Vec<String> = row.iter().map(|p| p.to_string()).collect();
            let _ = writeln!(out, "cpt {child} | {} : {}", labels.join(","), probs.join(","));
        }
    }
    out
}
