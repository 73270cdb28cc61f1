#![allow(dead_code)]

pub mod oracle;

use std::collections::BTreeSet;

use fairpath::{BinaryAttribute, CausalModel, DiscriminationQuery, VarId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `C`/`E` query on a random model with a random non-empty redlining set
/// drawn from the intermediate nodes.
pub fn random_query(model: &CausalModel, seed: u64) -> DiscriminationQuery {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = model.id("C").unwrap();
    let e = model.id("E").unwrap();
    let middle: Vec<VarId> = model.graph().ids().filter(|&v| v != c && v != e).collect();
    let mut redlining: BTreeSet<VarId> = middle.iter().copied().filter(|_| rng.random_bool(0.4)).collect();
    if redlining.is_empty() {
        redlining.insert(middle[rng.random_range(0..middle.len())]);
    }
    DiscriminationQuery::new(BinaryAttribute::new(c, 0, 1), BinaryAttribute::new(e, 0, 1), redlining)
}
