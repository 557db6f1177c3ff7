//! Simulated hidden web database: conjunctive queries legal for each
//! attribute's interface class, answered with the top-k matching tuples
//! under a domination-consistent ranking, with query counting and budgets.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    dominates_values, oracle_skyline, AttributeRole, Dataset, Tuple, TupleId,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparator {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

/// One conjunct of a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicate {
    pub attr: usize,
    pub cmp: Comparator,
    pub value: u32,
}

impl Predicate {
    pub fn new(attr: usize, cmp: Comparator, value: u32) -> Self {
        Predicate { attr, cmp, value }
    }
}

/// A conjunction of predicates. An empty predicate list is `SELECT *`.
/// `filtering_context` carries fixed equality conditions on filtering
/// attributes; it is conjoined to the predicates on evaluation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub predicates: Vec<Predicate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub filtering_context: Vec<Predicate>,
}

impl Query {
    pub fn select_all() -> Self {
        Query::default()
    }

    pub fn from_predicates(predicates: Vec<Predicate>) -> Self {
        Query {
            predicates,
            filtering_context: Vec::new(),
        }
    }

    fn all_predicates(&self) -> impl Iterator<Item = &Predicate> {
        self.predicates.iter().chain(self.filtering_context.iter())
    }
}

/// Per-attribute inclusive bounds, the canonical form of a conjunctive
/// query over the normalized grid. `lo > hi` encodes an empty region.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Region {
    pub lo: Vec<u32>,
    pub hi: Vec<u32>,
}

impl Region {
    pub fn full(dataset_schema: &[crate::model::AttributeSchema]) -> Self {
        Region {
            lo: vec![0; dataset_schema.len()],
            hi: dataset_schema.iter().map(|a| a.domain_size - 1).collect(),
        }
    }

    pub fn contains(&self, values: &[u32]) -> bool {
        values
            .iter()
            .enumerate()
            .all(|(i, &v)| v >= self.lo[i] && v <= self.hi[i])
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| l > h)
    }

    /// Tighten the upper bound of `attr` to `< value`, i.e. `<= value - 1`.
    /// Returns false when the result is unsatisfiable (value == 0 or below lo).
    pub fn tighten_below(&mut self, attr: usize, value: u32) -> bool {
        if value == 0 {
            return false;
        }
        let h = value - 1;
        if h < self.hi[attr] {
            self.hi[attr] = h;
        }
        self.lo[attr] <= self.hi[attr]
    }

    /// Raise the lower bound of `attr` to `>= value`.
    pub fn raise_to(&mut self, attr: usize, value: u32) -> bool {
        if value > self.lo[attr] {
            self.lo[attr] = value;
        }
        self.lo[attr] <= self.hi[attr]
    }

    pub fn pin(&mut self, attr: usize, value: u32) -> bool {
        self.lo[attr] = self.lo[attr].max(value);
        self.hi[attr] = self.hi[attr].min(value);
        self.lo[attr] <= self.hi[attr]
    }

    /// Render as a minimal predicate list against `schema`, using `Eq` for
    /// pinned attributes, `Ge` for lower bounds and `Le` for upper bounds.
    pub fn to_query(&self, schema: &[crate::model::AttributeSchema]) -> Query {
        let mut predicates = Vec::new();
        for (i, attr) in schema.iter().enumerate() {
            let (lo, hi) = (self.lo[i], self.hi[i]);
            let max = attr.domain_size - 1;
            if lo == 0 && hi == max {
                continue;
            }
            if lo == hi {
                predicates.push(Predicate::new(i, Comparator::Eq, lo));
            } else {
                if lo > 0 {
                    predicates.push(Predicate::new(i, Comparator::Ge, lo));
                }
                if hi < max {
                    predicates.push(Predicate::new(i, Comparator::Le, hi));
                }
            }
        }
        Query::from_predicates(predicates)
    }

    /// Stable key for memoization and replay determinism.
    pub fn canon_key(&self) -> Vec<(u32, u32, u32)> {
        self.lo
            .iter()
            .zip(&self.hi)
            .enumerate()
            .map(|(i, (&l, &h))| (i as u32, l, h))
            .collect()
    }
}

/// True iff `t` satisfies every predicate of `q` and its filtering context.
pub fn matches(t: &Tuple, q: &Query) -> bool {
    q.all_predicates().all(|p| {
        let v = t.values[p.attr];
        match p.cmp {
            Comparator::Lt => v < p.value,
            Comparator::Le => v <= p.value,
            Comparator::Eq => v == p.value,
            Comparator::Ge => v >= p.value,
            Comparator::Gt => v > p.value,
        }
    })
}

/// How the hidden database orders matching tuples. Every variant yields
/// answers consistent with dominance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum RankingMode {
    /// Ascending weighted sum of ranking-attribute values, strictly
    /// positive weights, ties broken by tuple id.
    WeightedSum { weights: Vec<f64> },
    /// Ascending lexicographic comparison along a priority permutation of
    /// the ranking attributes, ties broken by tuple id.
    Lexicographic { priority: Vec<usize> },
    /// Seeded random topological refinement of the dominance order.
    RandomLinearExtension { seed: u64 },
    /// Per-query: a uniformly random skyline tuple among those matching.
    /// Only valid with k = 1; answers are memoized per query signature.
    RandomMatchingSkyline { seed: u64 },
}

impl RankingMode {
    pub fn uniform_weights(m: usize) -> Self {
        RankingMode::WeightedSum {
            weights: vec![1.0; m],
        }
    }
}

/// A total order over the dataset's tuples, best first.
/// Errors for `RandomMatchingSkyline`, which defines no global order.
pub fn build_total_order(mode: &RankingMode, d: &Dataset) -> Result<Vec<TupleId>> {
    let ranking = d.ranking_attrs();
    match mode {
        RankingMode::WeightedSum { weights } => {
            if weights.len() != ranking.len() {
                return Err(Error::InvalidParameter(format!(
                    "weighted_sum expects {} weights, got {}",
                    ranking.len(),
                    weights.len()
                )));
            }
            if weights.iter().any(|w| !(*w > 0.0)) {
                return Err(Error::InvalidParameter(
                    "weighted_sum weights must be strictly positive".into(),
                ));
            }
            let mut ids: Vec<(f64, TupleId)> = d
                .tuples()
                .iter()
                .map(|t| {
                    let score: f64 = ranking
                        .iter()
                        .zip(weights)
                        .map(|(&a, w)| w * t.values[a] as f64)
                        .sum();
                    (score, t.id)
                })
                .collect();
            ids.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            Ok(ids.into_iter().map(|(_, id)| id).collect())
        }
        RankingMode::Lexicographic { priority } => {
            let mut sorted = priority.clone();
            sorted.sort_unstable();
            let mut expected = ranking.clone();
            expected.sort_unstable();
            if sorted != expected {
                return Err(Error::InvalidParameter(
                    "lexicographic priority must be a permutation of the ranking attributes"
                        .into(),
                ));
            }
            let mut ids: Vec<TupleId> = d.tuples().iter().map(|t| t.id).collect();
            ids.sort_by(|&a, &b| {
                let ta = d.tuple(a).unwrap();
                let tb = d.tuple(b).unwrap();
                for &attr in priority {
                    match ta.values[attr].cmp(&tb.values[attr]) {
                        std::cmp::Ordering::Equal => continue,
                        other => return other,
                    }
                }
                a.cmp(&b)
            });
            Ok(ids)
        }
        RankingMode::RandomLinearExtension { seed } => {
            Ok(random_linear_extension(d, *seed))
        }
        RankingMode::RandomMatchingSkyline { .. } => Err(Error::InvalidParameter(
            "random_matching_skyline defines no global order; it is answered per query".into(),
        )),
    }
}

/// Kahn's algorithm with a seeded uniform choice among the currently
/// minimal tuples. Any output is a linear extension of dominance.
fn random_linear_extension(d: &Dataset, seed: u64) -> Vec<TupleId> {
    let n = d.len();
    let schema = d.schema();
    let tuples = d.tuples();
    let mut indegree = vec![0u32; n];
    let mut succ: Vec<Vec<u32>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j && dominates_values(&tuples[i].values, &tuples[j].values, schema) {
                succ[i].push(j as u32);
                indegree[j] += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ready: Vec<u32> = (0..n as u32).filter(|&i| indegree[i as usize] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while !ready.is_empty() {
        let pick = rng.random_range(0..ready.len());
        let i = ready.swap_remove(pick) as usize;
        order.push(tuples[i].id);
        for &j in &succ[i] {
            indegree[j as usize] -= 1;
            if indegree[j as usize] == 0 {
                ready.push(j);
            }
        }
    }
    debug_assert_eq!(order.len(), n);
    order
}

/// An ordered answer of at most k tuples. A full-size answer is the
/// caller's only overflow signal; there is no explicit flag.
#[derive(Debug, Clone)]
pub struct Answer {
    pub tuples: Vec<Tuple>,
}

impl Answer {
    pub fn ids(&self) -> Vec<TupleId> {
        self.tuples.iter().map(|t| t.id).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn top(&self) -> Option<&Tuple> {
        self.tuples.first()
    }
}

/// One line of the session trace; also the replay input format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub seq: u64,
    pub predicates: Vec<Predicate>,
    pub answer_ids: Vec<TupleId>,
}

/// A budgeted handle on the simulated top-k interface.
///
/// Single-owner and internally sequential; independent sessions may run
/// in parallel across threads.
pub struct DiscoverySession {
    dataset: Dataset,
    k: usize,
    mode: RankingMode,
    budget: Option<u64>,
    filtering_context: Vec<Predicate>,
    /// rank[tuple index] = position in the total order; absent for
    /// random_matching_skyline.
    rank: Option<Vec<u64>>,
    skyline_ids: Option<Vec<TupleId>>,
    seed: u64,
    memo: HashMap<Vec<(u32, u32, u32)>, Vec<TupleId>>,
    query_count: u64,
    log: Vec<TraceRecord>,
}

impl DiscoverySession {
    pub fn new(
        dataset: Dataset,
        k: usize,
        mode: RankingMode,
        budget: Option<u64>,
    ) -> Result<Self> {
        Self::with_filtering_context(dataset, k, mode, budget, Vec::new())
    }

    pub fn with_filtering_context(
        dataset: Dataset,
        k: usize,
        mode: RankingMode,
        budget: Option<u64>,
        filtering_context: Vec<Predicate>,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if let Some(0) = budget {
            return Err(Error::InvalidParameter("budget must be >= 1 when set".into()));
        }
        for p in &filtering_context {
            let attr = dataset
                .schema()
                .get(p.attr)
                .ok_or_else(|| Error::InvalidParameter("context attribute out of range".into()))?;
            if attr.role != AttributeRole::Filtering || p.cmp != Comparator::Eq {
                return Err(Error::InvalidParameter(
                    "filtering context admits only equality on filtering attributes".into(),
                ));
            }
        }
        let (rank, skyline_ids, seed) = match &mode {
            RankingMode::RandomMatchingSkyline { seed } => {
                if k != 1 {
                    return Err(Error::InvalidParameter(
                        "random_matching_skyline is only valid with k = 1".into(),
                    ));
                }
                let sky: Vec<TupleId> = oracle_skyline(&dataset).members().iter().copied().collect();
                (None, Some(sky), *seed)
            }
            _ => {
                let order = build_total_order(&mode, &dataset)?;
                let mut rank = vec![0u64; dataset.len()];
                for (pos, id) in order.iter().enumerate() {
                    let idx = dataset
                        .tuples()
                        .iter()
                        .position(|t| t.id == *id)
                        .expect("order covers dataset");
                    rank[idx] = pos as u64;
                }
                (Some(rank), None, 0)
            }
        };
        Ok(DiscoverySession {
            dataset,
            k,
            mode,
            budget,
            filtering_context,
            rank,
            skyline_ids,
            seed,
            memo: HashMap::new(),
            query_count: 0,
            log: Vec::new(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn mode(&self) -> &RankingMode {
        &self.mode
    }

    pub fn query_count(&self) -> u64 {
        self.query_count
    }

    pub fn budget(&self) -> Option<u64> {
        self.budget
    }

    pub fn query_log(&self) -> &[TraceRecord] {
        &self.log
    }

    pub fn remaining_budget(&self) -> Option<u64> {
        self.budget.map(|b| b.saturating_sub(self.query_count))
    }

    fn validate(&self, q: &Query) -> Result<()> {
        let schema = self.dataset.schema();
        // slot bookkeeping: (lower, upper) per attribute
        let mut slots: HashMap<usize, (bool, bool)> = HashMap::new();
        for p in q.all_predicates() {
            let attr = schema.get(p.attr).ok_or_else(|| {
                Error::InterfaceViolation(format!("attribute index {} out of range", p.attr))
            })?;
            if p.value >= attr.domain_size {
                return Err(Error::InterfaceViolation(format!(
                    "value {} outside the domain of {}",
                    p.value, attr.name
                )));
            }
            let legal = match attr.role {
                AttributeRole::Filtering => p.cmp == Comparator::Eq,
                AttributeRole::Ranking => match attr.interface_class {
                    crate::model::InterfaceClass::Sq => {
                        matches!(p.cmp, Comparator::Lt | Comparator::Le | Comparator::Eq)
                    }
                    crate::model::InterfaceClass::Rq => true,
                    crate::model::InterfaceClass::Pq => p.cmp == Comparator::Eq,
                },
            };
            if !legal {
                return Err(Error::InterfaceViolation(format!(
                    "{:?} not supported on attribute {}",
                    p.cmp, attr.name
                )));
            }
            let slot = slots.entry(p.attr).or_insert((false, false));
            let (wants_lower, wants_upper) = match p.cmp {
                Comparator::Lt | Comparator::Le => (false, true),
                Comparator::Ge | Comparator::Gt => (true, false),
                Comparator::Eq => (true, true),
            };
            if (wants_lower && slot.0) || (wants_upper && slot.1) {
                return Err(Error::InterfaceViolation(format!(
                    "duplicate bound on attribute {}",
                    attr.name
                )));
            }
            slot.0 |= wants_lower;
            slot.1 |= wants_upper;
        }
        Ok(())
    }

    /// Canonical region of a validated query, session context included.
    fn canonicalize(&self, q: &Query) -> Region {
        canonical_region_with(q, &self.filtering_context, self.dataset.schema())
    }
}

/// Canonical per-attribute bounds of a query against `schema`.
pub fn canonical_region(q: &Query, schema: &[crate::model::AttributeSchema]) -> Region {
    canonical_region_with(q, &[], schema)
}

fn canonical_region_with(
    q: &Query,
    context: &[Predicate],
    schema: &[crate::model::AttributeSchema],
) -> Region {
    let mut region = Region::full(schema);
    // lo > hi encodes an empty region; later min/max updates keep it empty
    fn mark_empty(region: &mut Region, attr: usize) {
        region.lo[attr] = 1;
        region.hi[attr] = 0;
    }
    for p in q.all_predicates().chain(context.iter()) {
            match p.cmp {
                Comparator::Lt => {
                    if p.value == 0 {
                        mark_empty(&mut region, p.attr);
                    } else {
                        region.hi[p.attr] = region.hi[p.attr].min(p.value - 1);
                    }
                }
                Comparator::Le => region.hi[p.attr] = region.hi[p.attr].min(p.value),
                Comparator::Eq => {
                    region.lo[p.attr] = region.lo[p.attr].max(p.value);
                    region.hi[p.attr] = region.hi[p.attr].min(p.value);
                }
                Comparator::Ge => region.lo[p.attr] = region.lo[p.attr].max(p.value),
                Comparator::Gt => {
                    if p.value >= schema[p.attr].domain_size - 1 {
                        mark_empty(&mut region, p.attr);
                    } else {
                        region.lo[p.attr] = region.lo[p.attr].max(p.value + 1);
                    }
                }
            }
        }
        region
}

impl DiscoverySession {
    /// Issue a query. Counts toward the budget only when it is answered;
    /// interface violations and budget exhaustion do not consume budget.
    pub fn answer(&mut self, q: &Query) -> Result<Answer> {
        self.validate(q)?;
        if let Some(b) = self.budget {
            if self.query_count >= b {
                return Err(Error::BudgetExhausted {
                    issued: self.query_count,
                });
            }
        }
        let region = self.canonicalize(q);
        let tuples = self.evaluate(&region);
        self.query_count += 1;
        let mut predicates = q.predicates.clone();
        predicates.extend(q.filtering_context.iter().copied());
        predicates.extend(self.filtering_context.iter().copied());
        self.log.push(TraceRecord {
            seq: self.query_count,
            predicates,
            answer_ids: tuples.iter().map(|t| t.id).collect(),
        });
        Ok(Answer { tuples })
    }

    fn evaluate(&mut self, region: &Region) -> Vec<Tuple> {
        if region.is_empty() {
            return Vec::new();
        }
        match &self.mode {
            RankingMode::RandomMatchingSkyline { .. } => {
                let key = region.canon_key();
                if let Some(ids) = self.memo.get(&key) {
                    return ids
                        .iter()
                        .map(|id| self.dataset.tuple(*id).unwrap().clone())
                        .collect();
                }
                let picked = self.pick_random_matching_skyline(region, &key);
                self.memo.insert(key, picked.iter().map(|t| t.id).collect());
                picked
            }
            _ => {
                let rank = self.rank.as_ref().expect("ordered mode has ranks");
                let mut hits: Vec<(u64, usize)> = Vec::new();
                for (idx, t) in self.dataset.tuples().iter().enumerate() {
                    if region.contains(&t.values) {
                        hits.push((rank[idx], idx));
                    }
                }
                hits.sort_unstable();
                hits.truncate(self.k);
                hits.into_iter()
                    .map(|(_, idx)| self.dataset.tuples()[idx].clone())
                    .collect()
            }
        }
    }

    /// A uniformly random member of S(q), the skyline tuples matching the
    /// query; falls back to the local skyline of the matching set when no
    /// global skyline tuple matches, so a query matching tuples never
    /// returns empty.
    fn pick_random_matching_skyline(
        &self,
        region: &Region,
        key: &[(u32, u32, u32)],
    ) -> Vec<Tuple> {
        let sky = self.skyline_ids.as_ref().expect("precomputed skyline");
        let candidates: Vec<&Tuple> = sky
            .iter()
            .map(|id| self.dataset.tuple(*id).unwrap())
            .filter(|t| region.contains(&t.values))
            .collect();
        let pool: Vec<&Tuple> = if !candidates.is_empty() {
            candidates
        } else {
            let matching: Vec<&Tuple> = self
                .dataset
                .tuples()
                .iter()
                .filter(|t| region.contains(&t.values))
                .collect();
            if matching.is_empty() {
                return Vec::new();
            }
            let schema = self.dataset.schema();
            matching
                .iter()
                .copied()
                .filter(|t| {
                    !matching
                        .iter()
                        .any(|u| u.id != t.id && dominates_values(&u.values, &t.values, schema))
                })
                .collect()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ fnv1a(key));
        let pick = rng.random_range(0..pool.len());
        vec![pool[pick].clone()]
    }

    /// Serialize the query log as JSON lines, one record per query.
    pub fn trace_jsonl(&self) -> String {
        let mut out = String::new();
        for rec in &self.log {
            out.push_str(&serde_json::to_string(rec).expect("trace serializes"));
            out.push('\n');
        }
        out
    }
}

fn fnv1a(key: &[(u32, u32, u32)]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |v: u32| {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    for &(a, l, hi) in key {
        eat(a);
        eat(l);
        eat(hi);
    }
    h
}

/// Outcome of replaying a trace against a fresh session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayReport {
    pub queries: u64,
    pub matched: bool,
    pub first_mismatch: Option<u64>,
}

/// Re-issue a recorded query sequence and compare answers record by
/// record. Identical (dataset, mode, seed, query sequence) must match.
pub fn replay(
    dataset: Dataset,
    k: usize,
    mode: RankingMode,
    records: &[TraceRecord],
) -> Result<ReplayReport> {
    let mut session = DiscoverySession::new(dataset, k, mode, None)?;
    for rec in records {
        let q = Query::from_predicates(rec.predicates.clone());
        let ans = session.answer(&q)?;
        if ans.ids() != rec.answer_ids {
            return Ok(ReplayReport {
                queries: rec.seq,
                matched: false,
                first_mismatch: Some(rec.seq),
            });
        }
    }
    Ok(ReplayReport {
        queries: records.len() as u64,
        matched: true,
        first_mismatch: None,
    })
}

pub fn parse_trace_jsonl(text: &str) -> Result<Vec<TraceRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{four_tuple_example, AttributeSchema, InterfaceClass};
    use proptest::prelude::*;

    fn example() -> Dataset {
        four_tuple_example(InterfaceClass::Sq)
    }

    #[test]
    fn matches_on_example() {
        let d = example();
        let t3 = d.tuple(3).unwrap();
        let q = Query::from_predicates(vec![Predicate::new(0, Comparator::Lt, 3)]);
        assert!(matches(t3, &q));
        assert!(matches(t3, &Query::select_all()));
        let t1 = d.tuple(1).unwrap();
        let q2 = Query::from_predicates(vec![
            Predicate::new(0, Comparator::Lt, 5),
            Predicate::new(1, Comparator::Lt, 1),
        ]);
        assert!(!matches(t1, &q2));
    }

    #[test]
    fn weighted_sum_order_on_example() {
        let d = example();
        let order = build_total_order(&RankingMode::uniform_weights(3), &d).unwrap();
        assert_eq!(order, vec![4, 3, 1, 2]); // sums 8, 11, 15, 16
    }

    #[test]
    fn weighted_sum_rejects_nonpositive_weights() {
        let d = example();
        let r = build_total_order(
            &RankingMode::WeightedSum {
                weights: vec![1.0, 0.0, 1.0],
            },
            &d,
        );
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn lexicographic_order_prefers_first_priority() {
        let d = example();
        let order = build_total_order(
            &RankingMode::Lexicographic {
                priority: vec![2, 0, 1],
            },
            &d,
        )
        .unwrap();
        // a3 values: t1=9, t2=8, t3=7, t4=3
        assert_eq!(order, vec![4, 3, 2, 1]);
    }

    #[test]
    fn random_linear_extension_respects_dominance() {
        let d = example();
        for seed in 0..32u64 {
            let order =
                build_total_order(&RankingMode::RandomLinearExtension { seed }, &d).unwrap();
            let pos4 = order.iter().position(|&x| x == 4).unwrap();
            let pos2 = order.iter().position(|&x| x == 2).unwrap();
            assert!(pos4 < pos2, "t4 dominates t2 so it must precede it");
        }
    }

    #[test]
    fn answers_follow_the_order() {
        let d = example();
        let mut s =
            DiscoverySession::new(d, 1, RankingMode::uniform_weights(3), None).unwrap();
        let ans = s.answer(&Query::select_all()).unwrap();
        assert_eq!(ans.ids(), vec![4]);

        // no tuple has a1 = 0
        let empty = s
            .answer(&Query::from_predicates(vec![Predicate::new(
                0,
                Comparator::Lt,
                1,
            )]))
            .unwrap();
        assert!(empty.is_empty());
        assert_eq!(s.query_count(), 2);
    }

    #[test]
    fn full_order_with_large_k() {
        let d = example();
        let mut s =
            DiscoverySession::new(d, 4, RankingMode::uniform_weights(3), None).unwrap();
        let ans = s.answer(&Query::select_all()).unwrap();
        assert_eq!(ans.ids(), vec![4, 3, 1, 2]);
    }

    #[test]
    fn interface_violation_does_not_consume_budget() {
        let d = example();
        let mut s =
            DiscoverySession::new(d, 1, RankingMode::uniform_weights(3), Some(1)).unwrap();
        let bad = Query::from_predicates(vec![Predicate::new(0, Comparator::Ge, 2)]);
        assert!(matches!(
            s.answer(&bad),
            Err(Error::InterfaceViolation(_))
        ));
        assert_eq!(s.query_count(), 0);
        s.answer(&Query::select_all()).unwrap();
        assert!(matches!(
            s.answer(&Query::select_all()),
            Err(Error::BudgetExhausted { issued: 1 })
        ));
        assert_eq!(s.query_count(), 1, "exhausted call does not count");
    }

    #[test]
    fn rejects_duplicate_bound_slots() {
        let d = four_tuple_example(InterfaceClass::Rq);
        let mut s =
            DiscoverySession::new(d, 1, RankingMode::uniform_weights(3), None).unwrap();
        let bad = Query::from_predicates(vec![
            Predicate::new(0, Comparator::Lt, 5),
            Predicate::new(0, Comparator::Le, 4),
        ]);
        assert!(matches!(s.answer(&bad), Err(Error::InterfaceViolation(_))));
    }

    #[test]
    fn random_matching_skyline_requires_k1() {
        let d = example();
        assert!(DiscoverySession::new(
            d,
            2,
            RankingMode::RandomMatchingSkyline { seed: 1 },
            None
        )
        .is_err());
    }

    #[test]
    fn random_matching_skyline_answers_are_skyline_and_memoized() {
        for seed in 0..16u64 {
            let d = example();
            let mut s = DiscoverySession::new(
                d,
                1,
                RankingMode::RandomMatchingSkyline { seed },
                None,
            )
            .unwrap();
            let a1 = s.answer(&Query::select_all()).unwrap();
            assert_eq!(a1.len(), 1);
            assert!([1, 3, 4].contains(&a1.ids()[0]), "skyline member expected");
            let a2 = s.answer(&Query::select_all()).unwrap();
            assert_eq!(a1.ids(), a2.ids(), "memoized per signature");
        }
    }

    #[test]
    fn domination_consistency_of_answers() {
        // every pair (t, u) matching with t dominating u: t appears earlier
        let d = four_tuple_example(InterfaceClass::Rq);
        let modes = [
            RankingMode::uniform_weights(3),
            RankingMode::Lexicographic {
                priority: vec![1, 2, 0],
            },
            RankingMode::RandomLinearExtension { seed: 9 },
        ];
        for mode in modes {
            let mut s = DiscoverySession::new(d.clone(), 4, mode, None).unwrap();
            let ans = s.answer(&Query::select_all()).unwrap();
            let pos4 = ans.ids().iter().position(|&x| x == 4).unwrap();
            let pos2 = ans.ids().iter().position(|&x| x == 2).unwrap();
            assert!(pos4 < pos2);
        }
    }

    #[test]
    fn trace_roundtrip_and_replay() {
        let d = example();
        let mode = RankingMode::RandomMatchingSkyline { seed: 42 };
        let mut s = DiscoverySession::new(d.clone(), 1, mode.clone(), None).unwrap();
        s.answer(&Query::select_all()).unwrap();
        s.answer(&Query::from_predicates(vec![Predicate::new(
            0,
            Comparator::Lt,
            4,
        )]))
        .unwrap();
        let text = s.trace_jsonl();
        let records = parse_trace_jsonl(&text).unwrap();
        let report = replay(d, 1, mode, &records).unwrap();
        assert!(report.matched, "bit-exact replay expected");
    }

    proptest! {
        #[test]
        fn replay_determinism(seed in 0u64..64, k in 1usize..4) {
            let d = four_tuple_example(InterfaceClass::Rq);
            let mode = RankingMode::RandomLinearExtension { seed };
            let queries = vec![
                Query::select_all(),
                Query::from_predicates(vec![Predicate::new(0, Comparator::Le, 4)]),
                Query::from_predicates(vec![
                    Predicate::new(1, Comparator::Ge, 2),
                    Predicate::new(2, Comparator::Lt, 8),
                ]),
            ];
            let mut s1 = DiscoverySession::new(d.clone(), k, mode.clone(), None).unwrap();
            let mut s2 = DiscoverySession::new(d, k, mode, None).unwrap();
            for q in &queries {
                prop_assert_eq!(s1.answer(q).unwrap().ids(), s2.answer(q).unwrap().ids());
            }
        }
    }
}
