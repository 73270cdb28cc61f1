//! Small reference networks and seeded random model generators, shared by
//! tests, benchmarks and the CLI examples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discovery::DiscriminationQuery;
use crate::model::{BinaryAttribute, CausalGraph, CausalModel, Cpt, VarId, Variable};

fn binary_model(
    vars: &[(&str, &str, &str)],
    arcs: &[(&str, &str)],
    mut prob_positive: impl FnMut(VarId, &[usize]) -> f64,
) -> CausalModel {
    let variables = vars
        .iter()
        .map(|(n, a, b)| Variable::binary(*n, a, b).expect("valid variable"))
        .collect();
    let graph = CausalGraph::with_arcs(variables, arcs).expect("valid graph");
    let cpts = graph
        .ids()
        .map(|v| {
            let parents = graph.parents(v).to_vec();
            let rows = 1usize << parents.len();
            let table = (0..rows)
                .map(|r| {
                    let values: Vec<usize> = (0..parents.len())
                        .map(|i| (r >> (parents.len() - 1 - i)) & 1)
                        .collect();
                    let p = prob_positive(v, &values);
                    vec![1.0 - p, p]
                })
                .collect();
            Cpt::new(&graph, v, parents, table).expect("valid cpt")
        })
        .collect();
    CausalModel::new(graph, cpts).expect("valid model")
}

/// Loan toy network: `Race -> {Loan, Zip, Income}`, `Zip -> Loan`,
/// `Income -> Loan`. The decision is additive in its parents so that the
/// direct effect is 0.02 and the effect through `Zip` is 0.2.
pub fn loan_toy() -> CausalModel {
    binary_model(
        &[
            ("Race", "c-", "c+"),
            ("Zip", "z0", "z1"),
            ("Income", "low", "high"),
            ("Loan", "e-", "e+"),
        ],
        &[
            ("Race", "Loan"),
            ("Race", "Zip"),
            ("Race", "Income"),
            ("Zip", "Loan"),
            ("Income", "Loan"),
        ],
        |v, pa| match v.index() {
            0 => 0.6,
            1 => [0.3, 0.7][pa[0]],
            2 => [0.4, 0.6][pa[0]],
            _ => 0.2 + 0.02 * pa[0] as f64 + 0.5 * pa[1] as f64 + 0.2 * pa[2] as f64,
        },
    )
}

/// The loan toy topology with CPT entries drawn uniformly from `[0.05, 0.95]`.
pub fn loan_toy_random(seed: u64) -> CausalModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = loan_toy();
    randomize(&base, &mut rng)
}

/// Race/Loan with `Zip` as the redlining attribute.
pub fn loan_toy_query(model: &CausalModel) -> DiscriminationQuery {
    DiscriminationQuery::resolve(
        model,
        ("Race", "c-", "c+"),
        ("Loan", "e-", "e+"),
        &["Zip"],
    )
    .expect("loan toy query")
}

/// `X -> Z1 -> Z2 -> Y`, `Z1 -> Y`, `X -> Y`. With `Z2` redlining, `Z1`
/// reaches `Y` both through and around `Z2`, so it is a recanting witness.
pub fn witness_graph() -> CausalModel {
    binary_model(
        &[
            ("X", "x0", "x1"),
            ("Z1", "a0", "a1"),
            ("Z2", "b0", "b1"),
            ("Y", "y0", "y1"),
        ],
        &[("X", "Z1"), ("Z1", "Z2"), ("X", "Y"), ("Z1", "Y"), ("Z2", "Y")],
        |v, pa| match v.index() {
            0 => 0.5,
            1 => [0.3, 0.7][pa[0]],
            2 => [0.2, 0.8][pa[0]],
            _ => 0.3 + 0.01 * pa[0] as f64 + 0.2 * pa[1] as f64 + 0.3 * pa[2] as f64,
        },
    )
}

pub fn witness_graph_query(model: &CausalModel) -> DiscriminationQuery {
    DiscriminationQuery::resolve(model, ("X", "x0", "x1"), ("Y", "y0", "y1"), &["Z2"])
        .expect("witness graph query")
}

/// `C -> E` with `P(c+) = p_c`, `P(e+ | c+) = p_pos`, `P(e+ | c-) = p_neg`.
pub fn two_node(p_c: f64, p_pos: f64, p_neg: f64) -> CausalModel {
    binary_model(
        &[("C", "c-", "c+"), ("E", "e-", "e+")],
        &[("C", "E")],
        |v, pa| match v.index() {
            0 => p_c,
            _ => [p_neg, p_pos][pa[0]],
        },
    )
}

/// `C -> M -> E` and `C -> E`; direct effect 0.2, effect through `M` 0.12.
pub fn mediator() -> CausalModel {
    binary_model(
        &[("C", "c-", "c+"), ("M", "m0", "m1"), ("E", "e-", "e+")],
        &[("C", "M"), ("C", "E"), ("M", "E")],
        |v, pa| match v.index() {
            0 => 0.5,
            1 => [0.3, 0.7][pa[0]],
            _ => 0.2 + 0.2 * pa[0] as f64 + 0.3 * pa[1] as f64,
        },
    )
}

/// Query on the generic `C`/`E`/`M` naming used by [`two_node`],
/// [`mediator`] and [`random_model`].
pub fn standard_query(model: &CausalModel) -> DiscriminationQuery {
    let c = model.id("C").expect("C");
    let e = model.id("E").expect("E");
    let redlining: Vec<VarId> = model
        .graph()
        .ids()
        .filter(|&v| v != c && v != e)
        .take(1)
        .collect();
    DiscriminationQuery::new(BinaryAttribute::new(c, 0, 1), BinaryAttribute::new(e, 0, 1), redlining)
}

/// Random binary network on `nodes >= 3` variables named `C`, `V1`, ...,
/// `E`. `C` is the first node and has no parents, `E` is the last and always
/// has `C` as a parent; every other forward arc is present with probability
/// `density`. CPT entries are drawn from `[0.05, 0.95]`.
pub fn random_model(seed: u64, nodes: usize, density: f64) -> CausalModel {
    assert!(nodes >= 3, "random models need at least three nodes");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..nodes)
        .map(|i| match i {
            0 => "C".to_string(),
            i if i == nodes - 1 => "E".to_string(),
            i => format!("V{i}"),
        })
        .collect();
    let variables = names
        .iter()
        .map(|n| Variable::new(n.as_str(), ["0", "1"]).expect("valid variable"))
        .collect();
    let mut graph = CausalGraph::new(variables).expect("unique names");
    for to in 1..nodes {
        for from in 0..to {
            let forced = from == 0 && to == nodes - 1;
            if forced || rng.random_bool(density) {
                graph
                    .add_arc_ids(VarId::new(from), VarId::new(to))
                    .expect("forward arc");
            }
        }
    }
    let cpts = graph.ids().map(|v| Cpt::uniform(&graph, v).unwrap()).collect();
    let model = CausalModel::new(graph, cpts).expect("acyclic by construction");
    randomize(&model, &mut rng)
}

/// Random model whose decision leans on `C` directly and on every other
/// parent: `P(e+ | pa) = 0.5 + Σ weight_i · (±0.5)` clipped to
/// `[0.02, 0.98]`, with `|weight_C| >= min_direct`.
pub fn random_discriminatory_model(seed: u64, nodes: usize, min_direct: f64) -> CausalModel {
    let base = random_model(seed, nodes, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let graph = base.graph();
    let e = base.id("E").expect("E");
    let parents = graph.parents(e).to_vec();
    let weights: Vec<f64> = parents
        .iter()
        .map(|&p| {
            if p.index() == 0 {
                let w = rng.random_range(min_direct..=0.4);
                if rng.random_bool(0.5) {
                    w
                } else {
                    -w
                }
            } else {
                rng.random_range(-0.4..=0.4)
            }
        })
        .collect();
    let rows = 1usize << parents.len();
    let table = (0..rows)
        .map(|r| {
            let mut p = 0.5;
            for (i, w) in weights.iter().enumerate() {
                let bit = (r >> (parents.len() - 1 - i)) & 1;
                p += w * (bit as f64 - 0.5);
            }
            let p = p.clamp(0.02, 0.98);
            vec![1.0 - p, p]
        })
        .collect();
    let cpt = Cpt::new(graph, e, parents, table).expect("valid cpt");
    base.with_cpt(cpt).expect("same shape")
}

fn randomize(model: &CausalModel, rng: &mut ChaCha8Rng) -> CausalModel {
    let graph = model.graph();
    let cpts = graph
        .ids()
        .map(|v| {
            let cpt = model.cpt(v);
            let k = cpt.child_cardinality();
            let rows = (0..cpt.row_count())
                .map(|_| {
                    if k == 2 {
                        let p = rng.random_range(0.05..=0.95);
                        vec![1.0 - p, p]
                    } else {
                        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..=1.0)).collect();
                        let s: f64 = raw.iter().sum();
                        raw.into_iter().map(|x| x / s).collect()
                    }
                })
                .collect();
            Cpt::new(graph, v, cpt.parents().to_vec(), rows).expect("valid cpt")
        })
        .collect();
    CausalModel::new(graph.clone(), cpts).expect("same shape")
}
