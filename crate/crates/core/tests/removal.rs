mod common;

use common::oracle;
use fairpath::discovery::IndirectEffects;
use fairpath::qp::{self, LinearConstraint, QuadraticProgram, SolverOptions};
use fairpath::removal::flatten_decision;
use fairpath::sampling::{expected_counts, sample};
use fairpath::{
    build_repair_problem, chi_square_utility, cut_unidentifiable, fixtures, partition_children,
    pse_dd, pse_dr, solve_repair, CausalModel, DiscoveryReport, DiscriminationQuery, Error,
    RemovalMode, RepairOptions,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn all_effects(report: &DiscoveryReport) -> Vec<f64> {
    let mut v = vec![report.se_direct.forward, report.se_direct.reverse];
    if let IndirectEffects::Identified(p) = &report.se_indirect {
        v.extend([p.forward, p.reverse]);
    }
    v
}

fn assert_only_decision_changed(before: &CausalModel, after: &CausalModel, q: &DiscriminationQuery) {
    for v in after.graph().ids() {
        if v != q.decision.var {
            assert_eq!(before.cpt(v), after.cpt(v));
        }
    }
}

#[test]
fn repair_meets_tau_on_random_models() {
    for seed in 0..60 {
        let m = fixtures::random_discriminatory_model(seed, 3 + (seed as usize % 4), 0.15);
        let q = common::random_query(&m, seed);
        let (result, data) = pse_dr(&m, &q, 0.05, &RepairOptions { rows: 50, ..Default::default() }).unwrap();
        let post = pse_dd(&result.repaired_model, &q, 0.05).unwrap();
        assert!(post.judge_indirect.is_some(), "seed {seed}: still unidentifiable");
        for effect in all_effects(&post) {
            assert!(effect <= 0.05 + 1e-6, "seed {seed}: {effect}");
        }
        assert!(result.objective_value >= 0.0);
        assert_eq!(data.len(), 50);
        if result.removed_arcs.is_empty() {
            assert_only_decision_changed(&m, &result.repaired_model, &q);
        }
    }
}

#[test]
fn objective_is_squared_joint_distance() {
    let m = fixtures::mediator();
    let q = fixtures::standard_query(&m);
    let problem = build_repair_problem(&m, &q, 0.05, RemovalMode::Both).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let e = q.decision.var;
    for _ in 0..20 {
        let theta: Vec<f64> = (0..4)
            .flat_map(|_| {
                let p: f64 = rng.random();
                [1.0 - p, p]
            })
            .collect();
        let parents = m.cpt(e).parents().to_vec();
        let rows = theta.chunks(2).map(<[f64]>::to_vec).collect();
        let candidate = m
            .with_cpt(fairpath::Cpt::new(m.graph(), e, parents, rows).unwrap())
            .unwrap();
        let direct: f64 = oracle::states(&m)
            .iter()
            .map(|s| (oracle::joint(&candidate, s) - oracle::joint(&m, s)).powi(2))
            .sum();
        assert!((problem.objective(&theta) - direct).abs() < 1e-8);
        // The QP form differs from the distance by a constant.
        let qp_value = oracle::objective(problem.qp(), &theta);
        let at_original = oracle::objective(problem.qp(), problem.original());
        assert!((qp_value - at_original - direct).abs() < 1e-8);
    }
}

#[test]
fn hessian_is_positive_definite_on_assembled_problems() {
    for seed in 0..50 {
        let m = fixtures::random_discriminatory_model(seed, 3 + (seed as usize % 4), 0.1);
        let q = fixtures::standard_query(&m);
        let Ok(problem) = build_repair_problem(&m, &q, 0.05, RemovalMode::Both) else {
            continue;
        };
        assert!(oracle::cholesky_ok(&oracle::dense(problem.qp())));
        assert!(problem.is_positive_definite());
    }
}

#[test]
fn two_parameter_instance_matches_grid() {
    // C -> E with an unrelated node as the (inert) redlining attribute.
    let base = fairpath::parse_model(
        "var C c-,c+\nvar N n0,n1\nvar E e-,e+\narc C E\n\
         cpt C | : 0.5,0.5\ncpt N | : 0.3,0.7\ncpt E | c- : 0.9,0.1\ncpt E | c+ : 0.1,0.9\n",
    )
    .unwrap()
    .into_model()
    .unwrap();
    let q = fixtures::standard_query(&base);
    let problem = build_repair_problem(&base, &q, 0.05, RemovalMode::Both).unwrap();
    let result = solve_repair(&problem, &SolverOptions::default()).unwrap();
    let solution = qp::solve(problem.qp(), &SolverOptions::default()).unwrap();
    let (grid, _, _) = oracle::grid_two_rows(problem.qp(), 1e-3, 1e-8);
    assert!((solution.objective - grid).abs() < 1e-4);
    let (_, exact) = oracle::kkt_enumeration(problem.qp()).unwrap();
    assert!((solution.objective - exact).abs() < 1e-9);
    assert!(result.objective_value >= 0.0);
}

fn random_qp(seed: u64, n: usize, m: usize) -> QuadraticProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let hessian = &a * a.transpose() + DMatrix::identity(n, n) * 0.1;
    let linear = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
    // Every constraint admits x = 0.
    let inequalities = (0..m)
        .map(|_| {
            LinearConstraint::new(
                (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
                rng.random_range(0.0..0.5),
            )
        })
        .collect();
    let equalities = if n > 2 && rng.random_bool(0.5) {
        let coef: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        vec![LinearConstraint::new(coef, 0.0)]
    } else {
        vec![]
    };
    QuadraticProgram {
        hessian,
        linear,
        equalities,
        inequalities,
    }
}

#[test]
fn solver_matches_active_set_enumeration() {
    for seed in 0..200 {
        let n = 2 + (seed as usize % 5);
        let problem = random_qp(seed, n, 2 + (seed as usize % 7));
        let solution = qp::solve(&problem, &SolverOptions::default()).unwrap();
        let (_, exact) = oracle::kkt_enumeration(&problem).unwrap();
        assert!((solution.objective - exact).abs() < 1e-7 * (1.0 + exact.abs()), "seed {seed}");
        assert!(solution.kkt.primal <= qp::PRIMAL_TOLERANCE);
        assert!(solution.kkt.stationarity <= qp::DUAL_TOLERANCE);
        assert!(solution.kkt.complementarity <= qp::DUAL_TOLERANCE);
        assert!(solution.inequality_multipliers.iter().all(|&l| l >= -qp::DUAL_TOLERANCE));
    }
}

#[test]
fn surgery_on_witness_graph() {
    let m = fixtures::witness_graph();
    let q = fixtures::witness_graph_query(&m);
    let surgery = cut_unidentifiable(&m, &q.indirect()).unwrap();
    let (z2, y) = (m.id("Z2").unwrap(), m.id("Y").unwrap());
    assert_eq!(surgery.removed_arcs, vec![(z2, y)]);
    let after = partition_children(surgery.model.graph(), &q.indirect()).unwrap();
    assert!(after.witnesses.is_empty());
    // The reduced CPT is the observational conditional over the kept parents.
    let (x, z1) = (m.id("X").unwrap(), m.id("Z1").unwrap());
    let cpt = surgery.model.cpt(y);
    for xv in 0..2 {
        for zv in 0..2 {
            let num: f64 = oracle::states(&m)
                .iter()
                .filter(|s| s[x.index()] == xv && s[z1.index()] == zv && s[y.index()] == 1)
                .map(|s| oracle::joint(&m, s))
                .sum();
            let den: f64 = oracle::states(&m)
                .iter()
                .filter(|s| s[x.index()] == xv && s[z1.index()] == zv)
                .map(|s| oracle::joint(&m, s))
                .sum();
            let mut state = vec![0; 4];
            state[x.index()] = xv;
            state[z1.index()] = zv;
            let row = cpt.row_index(&state);
            assert!((cpt.entry(row, 1) - num / den).abs() < 1e-12);
        }
    }
    assert!(matches!(
        cut_unidentifiable(&fixtures::loan_toy(), &fixtures::loan_toy_query(&fixtures::loan_toy()).indirect()),
        Err(Error::NotApplicable(_))
    ));
}

#[test]
fn direct_only_mode_leaves_indirect_unconstrained() {
    let m = fixtures::loan_toy();
    let q = fixtures::loan_toy_query(&m);
    let mut boosted = m.clone();
    // Strengthen the direct arc so both effects are violated.
    let e = q.decision.var;
    let cpt = m.cpt(e);
    let rows = (0..cpt.row_count())
        .map(|r| {
            let race = cpt.row_values(r)[0] as f64;
            let p = (cpt.entry(r, 1) + 0.2 * race).min(0.98);
            vec![1.0 - p, p]
        })
        .collect();
    boosted = boosted
        .with_cpt(fairpath::Cpt::new(m.graph(), e, cpt.parents().to_vec(), rows).unwrap())
        .unwrap();
    let options = RepairOptions {
        mode: RemovalMode::DirectOnly,
        rows: 10,
        ..Default::default()
    };
    let (result, _) = pse_dr(&boosted, &q, 0.05, &options).unwrap();
    let post = &result.post_effects;
    assert!(post.se_direct.max() <= 0.05 + 1e-6);
    let IndirectEffects::Identified(indirect) = post.se_indirect else {
        panic!("identifiable");
    };
    assert!(indirect.max() > 0.05);
}

fn squared_distance(a: &CausalModel, b: &CausalModel) -> f64 {
    oracle::states(a)
        .iter()
        .map(|s| (oracle::joint(a, s) - oracle::joint(b, s)).powi(2))
        .sum()
}

#[test]
fn repair_is_closer_than_flattening() {
    for seed in 0..40 {
        let m = fixtures::random_discriminatory_model(seed, 4 + (seed as usize % 3), 0.15);
        let q = fixtures::standard_query(&m);
        let (result, _) = pse_dr(&m, &q, 0.05, &RepairOptions { rows: 1, ..Default::default() }).unwrap();
        if !result.removed_arcs.is_empty() {
            continue;
        }
        let flat = flatten_decision(&m, q.decision.var).unwrap();
        assert!(squared_distance(&m, &result.repaired_model) <= squared_distance(&m, &flat) + 1e-12);
    }
}

#[test]
fn utility_beats_flattening_on_named_fixtures() {
    let named = [
        (fixtures::loan_toy(), true),
        (fixtures::mediator(), false),
        (fixtures::witness_graph(), false),
    ];
    for (m, loan) in named {
        let q = if loan {
            fixtures::loan_toy_query(&m)
        } else if m.id("X").is_ok() {
            fixtures::witness_graph_query(&m)
        } else {
            fixtures::standard_query(&m)
        };
        let (result, _) = pse_dr(&m, &q, 0.05, &RepairOptions { rows: 1, ..Default::default() }).unwrap();
        let n = 20_000;
        let original = expected_counts(&m, n);
        let repaired = expected_counts(&result.repaired_model, n);
        let flat = expected_counts(&flatten_decision(&m, q.decision.var).unwrap(), n);
        let chi_repaired = chi_square_utility(&original, &repaired).unwrap();
        let chi_flat = chi_square_utility(&original, &flat).unwrap();
        assert!(chi_repaired < chi_flat, "{chi_repaired} vs {chi_flat}");
    }
}

#[test]
fn sampling_converges_to_repaired_joint() {
    let m = fixtures::mediator();
    let q = fixtures::standard_query(&m);
    let (result, _) = pse_dr(&m, &q, 0.05, &RepairOptions { rows: 1, ..Default::default() }).unwrap();
    let n = 1_000_000;
    let data = sample(&result.repaired_model, n, 99);
    let counts = data.contingency();
    for s in oracle::states(&result.repaired_model) {
        let p = oracle::joint(&result.repaired_model, &s);
        let observed = *counts.get(&s).unwrap_or(&0) as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((observed - p).abs() <= 3.0 * sigma, "{s:?}: {observed} vs {p}");
    }
}

#[test]
fn repair_is_deterministic() {
    let m = fixtures::loan_toy();
    let q = fixtures::loan_toy_query(&m);
    let options = RepairOptions { rows: 200, seed: 5, ..Default::default() };
    let a = pse_dr(&m, &q, 0.05, &options).unwrap();
    let b = pse_dr(&m, &q, 0.05, &options).unwrap();
    assert_eq!(a.1, b.1);
    assert_eq!(a.0.repaired_model.cpts(), b.0.repaired_model.cpts());
}
