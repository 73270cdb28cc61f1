//! Tabular datasets over categorical variables, CSV I/O and CPT estimation.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{CausalGraph, CausalModel, Cpt, Variable};

/// Name of the optional column holding a multiplicity for each CSV row.
pub const COUNT_COLUMN: &str = "__count";

/// Rows of value indices, one column per variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    variables: Vec<Variable>,
    rows: Vec<Vec<usize>>,
}

impl Dataset {
    pub fn new(variables: Vec<Variable>, rows: Vec<Vec<usize>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != variables.len() {
                return Err(Error::SchemaMismatch(format!(
                    "row {i} has {} values for {} variables",
                    row.len(),
                    variables.len()
                )));
            }
            for (v, &x) in variables.iter().zip(row) {
                if x >= v.cardinality() {
                    return Err(Error::OutOfDomainValue {
                        row: i,
                        column: v.name().to_string(),
                        value: x.to_string(),
                    });
                }
            }
        }
        Ok(Dataset { variables, rows })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name() == name)
    }

    /// Counts per observed joint state.
    pub fn contingency(&self) -> BTreeMap<Vec<usize>, u64> {
        let mut counts = BTreeMap::new();
        for row in &self.rows {
            *counts.entry(row.clone()).or_insert(0) += 1;
        }
        counts
    }

    /// Seeded shuffle split; the first part holds `round(fraction · len)` rows.
    pub fn split(&self, fraction: f64, seed: u64) -> (Dataset, Dataset) {
        let mut idx: Vec<usize> = (0..self.rows.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let cut = ((fraction.clamp(0.0, 1.0) * self.rows.len() as f64).round()) as usize;
        let pick = |ix: &[usize]| Dataset {
            variables: self.variables.clone(),
            rows: ix.iter().map(|&i| self.rows[i].clone()).collect(),
        };
        (pick(&idx[..cut]), pick(&idx[cut..]))
    }

    /// Copy with column `column` replaced.
    pub fn with_column(&self, column: usize, values: &[usize]) -> Result<Dataset> {
        if values.len() != self.rows.len() {
            return Err(Error::SchemaMismatch("column length differs from row count".into()));
        }
        let mut rows = self.rows.clone();
        for (row, &v) in rows.iter_mut().zip(values) {
            row[column] = v;
        }
        Dataset::new(self.variables.clone(), rows)
    }

    /// Permutes columns into the order of `variables`, matching by name.
    /// Domains must agree exactly.
    pub fn reorder(&self, variables: &[Variable]) -> Result<Dataset> {
        let mapping = variables
            .iter()
            .map(|v| {
                let i = self.column(v.name()).ok_or_else(|| {
                    Error::SchemaMismatch(format!("dataset has no column `{}`", v.name()))
                })?;
                if self.variables[i].domain() != v.domain() {
                    return Err(Error::SchemaMismatch(format!(
                        "domain of `{}` differs between dataset and model",
                        v.name()
                    )));
                }
                Ok(i)
            })
            .collect::<Result<Vec<_>>>()?;
        if variables.len() != self.variables.len() {
            return Err(Error::SchemaMismatch(format!(
                "dataset has {} columns, expected {}",
                self.variables.len(),
                variables.len()
            )));
        }
        Ok(Dataset {
            variables: variables.to_vec(),
            rows: self
                .rows
                .iter()
                .map(|r| mapping.iter().map(|&i| r[i]).collect())
                .collect(),
        })
    }
}

/// Reads a CSV with a header row. Columns are matched to `schema` by name;
/// an optional `__count` column repeats each row.
pub fn read_csv<R: Read>(reader: R, schema: &[Variable]) -> Result<Dataset> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv.headers()?.clone();
    let mut count_col = None;
    let mut columns = vec![None; schema.len()];
    for (i, h) in headers.iter().enumerate() {
        if h == COUNT_COLUMN {
            count_col = Some(i);
            continue;
        }
        let slot = schema
            .iter()
            .position(|v| v.name() == h)
            .ok_or_else(|| Error::SchemaMismatch(format!("unexpected column `{h}`")))?;
        if columns[slot].replace(i).is_some() {
            return Err(Error::SchemaMismatch(format!("duplicate column `{h}`")));
        }
    }
    let columns = columns
        .into_iter()
        .zip(schema)
        .map(|(c, v)| c.ok_or_else(|| Error::SchemaMismatch(format!("missing column `{}`", v.name()))))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (r, record) in csv.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(schema.len());
        for (v, &c) in schema.iter().zip(&columns) {
            let label = record.get(c).unwrap_or("");
            let value = v.value_index(label).ok_or_else(|| Error::OutOfDomainValue {
                row: r,
                column: v.name().to_string(),
                value: label.to_string(),
            })?;
            row.push(value);
        }
        let repeat = match count_col {
            Some(c) => {
                let raw = record.get(c).unwrap_or("");
                raw.parse::<usize>().map_err(|_| Error::OutOfDomainValue {
                    row: r,
                    column: COUNT_COLUMN.to_string(),
                    value: raw.to_string(),
                })?
            }
            None => 1,
        };
        for _ in 0..repeat {
            rows.push(row.clone());
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(Dataset {
        variables: schema.to_vec(),
        rows,
    })
}

pub fn load_csv(path: impl AsRef<Path>, schema: &[Variable]) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file), schema)
}

pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(dataset.variables.iter().map(Variable::name))?;
    for row in &dataset.rows {
        csv.write_record(
            dataset
                .variables
                .iter()
                .zip(row)
                .map(|(v, &x)| v.label(x)),
        )?;
    }
    csv.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn save_csv(path: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(dataset, std::io::BufWriter::new(file))
}

/// Additively smoothed CPT estimates on a fixed graph:
/// `(count + alpha) / (row total + alpha · |domain|)`. Rows with no data and
/// `alpha = 0` are uniform.
pub fn estimate_cpts(dataset: &Dataset, graph: &CausalGraph, alpha: f64) -> Result<CausalModel> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidQuery(format!("smoothing must be non-negative, got {alpha}")));
    }
    let columns = graph
        .variables()
        .iter()
        .map(|v| {
            let c = dataset.column(v.name()).ok_or_else(|| {
                Error::SchemaMismatch(format!("dataset has no column `{}`", v.name()))
            })?;
            if dataset.variables[c].domain() != v.domain() {
                return Err(Error::SchemaMismatch(format!(
                    "domain of `{}` differs between dataset and graph",
                    v.name()
                )));
            }
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut state = vec![0; graph.len()];
    let mut cpts = Vec::with_capacity(graph.len());
    let mut tables: Vec<(Cpt, Vec<f64>)> = graph
        .ids()
        .map(|v| {
            let cpt = Cpt::uniform(graph, v)?;
            let zeros = vec![0.0; cpt.table().len()];
            Ok((cpt, zeros))
        })
        .collect::<Result<_>>()?;
    for row in &dataset.rows {
        for (slot, &c) in state.iter_mut().zip(&columns) {
            *slot = row[c];
        }
        for (cpt, counts) in &mut tables {
            let k = cpt.child_cardinality();
            counts[cpt.row_index(&state) * k + state[cpt.child().index()]] += 1.0;
        }
    }
    for (cpt, counts) in tables {
        let k = cpt.child_cardinality();
        let rows = counts
            .chunks(k)
            .map(|c| {
                let total: f64 = c.iter().sum::<f64>() + alpha * k as f64;
                if total > 0.0 {
                    c.iter().map(|x| (x + alpha) / total).collect()
                } else {
                    vec![1.0 / k as f64; k]
                }
            })
            .collect();
        cpts.push(Cpt::new(graph, cpt.child(), cpt.parents().to_vec(), rows)?);
    }
    CausalModel::new(graph.clone(), cpts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Vec<Variable> {
        vec![
            Variable::new("A", ["yes", "no"]).unwrap(),
            Variable::new("B", ["x", "y", "z"]).unwrap(),
        ]
    }

    #[test]
    fn reads_rows_by_name() {
        let text = "B,A\nx,yes\nz,no\ny,yes\n";
        let d = read_csv(text.as_bytes(), &schema()).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.rows()[1], vec![1, 2]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let err = read_csv("A,B\nmaybe,x\n".as_bytes(), &schema()).unwrap_err();
        assert!(matches!(err, Error::OutOfDomainValue { row: 0, ref value, .. } if value == "maybe"));
        assert!(matches!(
            read_csv("A\nyes\n".as_bytes(), &schema()),
            Err(Error::SchemaMismatch(_))
        ));
        assert!(matches!(
            read_csv("A,B,C\nyes,x,1\n".as_bytes(), &schema()),
            Err(Error::SchemaMismatch(_))
        ));
        assert!(matches!(read_csv("A,B\n".as_bytes(), &schema()), Err(Error::EmptyDataset)));
    }

    #[test]
    fn count_column_expands_rows() {
        let d = read_csv("A,B,__count\nyes,x,3\nno,y,0\nno,z,1\n".as_bytes(), &schema()).unwrap();
        assert_eq!(d.len(), 4);
        assert_eq!(d.contingency()[&vec![0, 0]], 3);
    }

    #[test]
    fn mle_and_smoothing() {
        let vars = vec![
            Variable::new("P", ["p0", "p1"]).unwrap(),
            Variable::new("E", ["e-", "e+"]).unwrap(),
        ];
        let g = CausalGraph::with_arcs(vars.clone(), &[("P", "E")]).unwrap();
        let rows = vec![vec![0, 1], vec![0, 1], vec![0, 1], vec![0, 0]];
        let d = Dataset::new(vars, rows).unwrap();
        let e = g.id("E").unwrap();
        let mle = estimate_cpts(&d, &g, 0.0).unwrap();
        assert_eq!(mle.cpt(e).row(0), &[0.25, 0.75]);
        // Unseen parent value p1.
        let smoothed = estimate_cpts(&d, &g, 1.0).unwrap();
        assert_eq!(smoothed.cpt(e).row(1), &[0.5, 0.5]);
        assert_eq!(mle.cpt(e).row(1), &[0.5, 0.5]);
    }

    #[test]
    fn split_partitions_rows() {
        let rows = (0..10).map(|i| vec![i % 2, i % 3]).collect();
        let d = Dataset::new(schema(), rows).unwrap();
        let (a, b) = d.split(0.3, 7);
        assert_eq!((a.len(), b.len()), (3, 7));
        assert_eq!(d.split(0.3, 7), (a, b));
    }
}
