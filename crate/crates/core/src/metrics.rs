//! Data utility and prediction-level discrimination checks.

use std::collections::BTreeMap;

use crate::data::{estimate_cpts, Dataset};
use crate::discovery::{pse_dd, DiscoveryReport, DiscriminationQuery};
use crate::error::{Error, Result};
use crate::model::CausalModel;

/// χ² distance of `modified` from `original` over full joint states.
///
/// Expected counts are the original's joint frequencies scaled to the
/// modified total. Observations in states the original never produced are
/// pooled into the positive-expected state with the smallest expected count.
pub fn chi_square_utility(original: &Dataset, modified: &Dataset) -> Result<f64> {
    let modified = modified.reorder(original.variables())?;
    if original.is_empty() || modified.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let base = original.contingency();
    let observed = modified.contingency();
    let scale = modified.len() as f64 / original.len() as f64;

    let mut cells: BTreeMap<&Vec<usize>, (f64, f64)> = base
        .iter()
        .map(|(s, &c)| (s, (c as f64 * scale, 0.0)))
        .collect();
    let mut pooled = 0.0;
    for (s, &c) in &observed {
        match cells.get_mut(s) {
            Some(cell) => cell.1 = c as f64,
            None => pooled += c as f64,
        }
    }
    if pooled > 0.0 {
        let target = cells
            .values_mut()
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .ok_or_else(|| Error::DegenerateBaseline("no positive expected cell to pool into".into()))?;
        target.1 += pooled;
    }
    Ok(cells.values().map(|(e, o)| (o - e) * (o - e) / e).sum())
}

/// `P(e+ | c+) - P(e+ | c-)` estimated from a dataset.
pub fn dataset_risk_difference(
    dataset: &Dataset,
    protected: (&str, &str, &str),
    decision: (&str, &str, &str),
) -> Result<f64> {
    let column = |name: &str| {
        dataset
            .column(name)
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    };
    let (c, e) = (column(protected.0)?, column(decision.0)?);
    let value = |col: usize, label: &str| {
        dataset.variables()[col]
            .value_index(label)
            .ok_or_else(|| Error::InvalidQuery(format!("`{label}` is not a value of `{}`", dataset.variables()[col].name())))
    };
    let (neg, pos) = (value(c, protected.1)?, value(c, protected.2)?);
    let e_pos = value(e, decision.2)?;
    let rate = |group: usize| -> Result<f64> {
        let rows: Vec<_> = dataset.rows().iter().filter(|r| r[c] == group).collect();
        if rows.is_empty() {
            return Err(Error::ZeroConditioningEvent { probability: 0.0 });
        }
        Ok(rows.iter().filter(|r| r[e] == e_pos).count() as f64 / rows.len() as f64)
    };
    Ok(rate(pos)? - rate(neg)?)
}

/// Index of the most probable decision value for each row of `test`, under
/// the decision's CPT in `model`. Ties go to the lowest index.
pub fn predict(model: &CausalModel, query: &DiscriminationQuery, test: &Dataset) -> Result<Vec<usize>> {
    let test = test.reorder(model.graph().variables())?;
    let cpt = model.cpt(query.decision.var);
    Ok(test
        .rows()
        .iter()
        .map(|row| {
            let probs = cpt.row(cpt.row_index(row));
            let mut best = 0;
            for (i, &p) in probs.iter().enumerate() {
                if p > probs[best] {
                    best = i;
                }
            }
            best
        })
        .collect())
}

/// Labels `test` with the argmax predictor of `repaired`, re-estimates the
/// model on the repaired graph and runs discovery on it.
pub fn predict_and_audit(
    repaired: &CausalModel,
    query: &DiscriminationQuery,
    test: &Dataset,
    tau: f64,
    alpha: f64,
) -> Result<DiscoveryReport> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let labels = predict(repaired, query, test)?;
    let test = test.reorder(repaired.graph().variables())?;
    let labelled = test.with_column(query.decision.var.index(), &labels)?;
    let estimated = estimate_cpts(&labelled, repaired.graph(), alpha)?;
    pse_dd(&estimated, query, tau)
}
