//! Skyline and sky-band discovery through top-k web search interfaces.
//!
//! A hidden web database exposes only conjunctive predicates and returns at
//! most k matching tuples under a proprietary, domination-consistent ranking.
//! This crate simulates such interfaces faithfully and discovers all skyline
//! (and top-h sky-band) tuples through them while minimizing interface calls,
//! alongside brute-force oracles and analytical cost predictors to check the
//! algorithms' cost behavior.

pub mod bench;
pub mod cost;
pub mod dataio;
pub mod error;
pub mod interface;
pub mod model;
pub mod mq;
pub mod pq;
pub mod rq;
pub mod skyband;
pub mod sq;

pub use error::{Error, Result};
pub use interface::{
    build_total_order, matches, replay, Answer, Comparator, DiscoverySession, Predicate, Query,
    RankingMode, Region, TraceRecord,
};
pub use model::{
    dominates, oracle_skyband, oracle_skyline, AttributeRole, AttributeSchema, Dataset,
    InterfaceClass, SkylineSet, Tuple, TupleId,
};
pub use sq::{sq_discover, sq_expand, DiscoveryResult, QueueDiscipline};

#[cfg(test)]
pub(crate) mod testutil {
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    use crate::model::{AttributeSchema, Dataset, InterfaceClass, Tuple};

    /// Small random dataset with unique ranking combinations.
    pub fn random_dataset(seed: u64, n: usize, m: usize, domain: u32) -> Dataset {
        random_dataset_with(seed, n, m, domain, InterfaceClass::Rq)
    }

    /// `s` pairwise-incomparable tuples with distinct values on every
    /// attribute and no zeros: the first two attributes run antithetically
    /// and the rest follow shifted permutations.
    pub fn incomparable_dataset(s: u32, m: usize, domain: u32) -> Dataset {
        use rand::seq::SliceRandom;
        assert!(m >= 2 && domain >= s + 2);
        let schema: Vec<AttributeSchema> = (0..m)
            .map(|i| AttributeSchema::ranking(&format!("a{i}"), domain, InterfaceClass::Sq))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(s as u64 * 31 + m as u64);
        let mut tuples: Vec<Tuple> = (0..s)
            .map(|i| {
                let mut values = vec![0u32; m];
                values[0] = i + 1;
                values[1] = s - i;
                Tuple::new(i as u64, values)
            })
            .collect();
        for attr in 2..m {
            let mut perm: Vec<u32> = (1..=s).collect();
            perm.shuffle(&mut rng);
            for (i, t) in tuples.iter_mut().enumerate() {
                t.values[attr] = perm[i];
            }
        }
        Dataset::new(schema, tuples).unwrap()
    }

    pub fn random_dataset_with(
        seed: u64,
        n: usize,
        m: usize,
        domain: u32,
        class: InterfaceClass,
    ) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let schema: Vec<AttributeSchema> = (0..m)
            .map(|i| AttributeSchema::ranking(&format!("a{i}"), domain, class))
            .collect();
        let mut combos = HashSet::new();
        let mut tuples = Vec::new();
        let mut attempts = 0;
        while tuples.len() < n && attempts < n * 200 {
            attempts += 1;
            let values: Vec<u32> = (0..m).map(|_| rng.random_range(0..domain)).collect();
            if combos.insert(values.clone()) {
                tuples.push(Tuple::new(tuples.len() as u64, values));
            }
        }
        Dataset::new(schema, tuples).unwrap()
    }
}
