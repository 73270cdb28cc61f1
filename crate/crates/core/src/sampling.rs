//! Dataset generation from a model's joint distribution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::model::{CausalModel, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingMode {
    /// Seeded forward sampling in topological order.
    #[default]
    Ancestral,
    /// `n · P(v)` rows per joint state, remainders assigned by largest
    /// fractional part. Independent of the seed.
    ExpectedCounts,
}

pub fn generate(model: &CausalModel, n: usize, seed: u64, mode: SamplingMode) -> Dataset {
    match mode {
        SamplingMode::Ancestral => sample(model, n, seed),
        SamplingMode::ExpectedCounts => expected_counts(model, n),
    }
}

pub fn sample(model: &CausalModel, n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = model.topological_order();
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut state = vec![0; model.len()];
        for &v in order {
            let cpt = model.cpt(v);
            let row = cpt.row(cpt.row_index(&state));
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = row.len() - 1;
            for (value, p) in row.iter().enumerate() {
                acc += p;
                if u < acc {
                    pick = value;
                    break;
                }
            }
            // Skip zero-probability tail values that rounding could select.
            while row[pick] == 0.0 && pick > 0 {
                pick -= 1;
            }
            state[v.index()] = pick;
        }
        rows.push(state);
    }
    Dataset::new(model.graph().variables().to_vec(), rows).expect("sampled values are in domain")
}

pub fn expected_counts(model: &CausalModel, n: usize) -> Dataset {
    let all: Vec<VarId> = model.graph().ids().collect();
    let mut states = Vec::new();
    let mut state = vec![0; model.len()];
    model.for_each_completion(&all, &mut state, |s| states.push((s.to_vec(), model.joint(s))));

    let mut counts: Vec<usize> = Vec::with_capacity(states.len());
    let mut remainders: Vec<(f64, usize)> = Vec::with_capacity(states.len());
    for (i, (_, p)) in states.iter().enumerate() {
        let exact = p * n as f64;
        let whole = exact.floor();
        counts.push(whole as usize);
        remainders.push((exact - whole, i));
    }
    let assigned: usize = counts.iter().sum();
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }

    let rows = states
        .into_iter()
        .zip(counts)
        .flat_map(|((s, _), c)| std::iter::repeat_n(s, c))
        .collect();
    Dataset::new(model.graph().variables().to_vec(), rows).expect("enumerated values are in domain")
}
