//! Skyline discovery over single-ended-range interfaces: an m-way
//! branching query tree that starts broad and narrows one bound per level.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interface::{canonical_region, DiscoverySession, Query, Region};
use crate::model::{AttributeSchema, Tuple, TupleId};

/// Discovered skyline plus query cost and the anytime trace of the run.
/// `trace` is (queries issued so far, distinct skyline found so far) and is
/// non-decreasing in both coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscoveryResult {
    pub skyline: Vec<TupleId>,
    pub cost: u64,
    pub trace: Vec<(u64, u64)>,
    pub complete: bool,
}

/// A node of the branching tree: the query region plus the branch labels
/// (tuple, attribute) that produced it.
#[derive(Debug, Clone)]
pub struct TreeNode {
    pub region: Region,
    pub path: Vec<(TupleId, usize)>,
}

impl TreeNode {
    pub fn query(&self, schema: &[AttributeSchema]) -> Query {
        self.region.to_query(schema)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueueDiscipline {
    /// Breadth-first, the default.
    Fifo,
    /// Depth-first; pairs naturally with anytime use.
    Lifo,
}

/// Retrieved tuples plus the undominated frontier among them.
///
/// Frontier membership is checked against the current frontier only;
/// transitivity makes that equivalent to checking everything seen.
pub(crate) struct Pool {
    seen: HashMap<TupleId, Tuple>,
    frontier: Vec<TupleId>,
}

impl Pool {
    pub fn new() -> Self {
        Pool {
            seen: HashMap::new(),
            frontier: Vec::new(),
        }
    }

    pub fn seen(&self) -> &HashMap<TupleId, Tuple> {
        &self.seen
    }

    pub fn seen_len(&self) -> usize {
        self.seen.len()
    }

    pub fn frontier_len(&self) -> usize {
        self.frontier.len()
    }

    pub fn frontier_ids(&self) -> Vec<TupleId> {
        let mut ids = self.frontier.clone();
        ids.sort_unstable();
        ids
    }

    pub fn frontier_tuples(&self) -> Vec<&Tuple> {
        self.frontier.iter().map(|id| &self.seen[id]).collect()
    }

    /// Record a retrieved tuple and refresh the frontier.
    pub fn observe(&mut self, t: &Tuple, schema: &[AttributeSchema]) {
        if self.seen.contains_key(&t.id) {
            return;
        }
        self.seen.insert(t.id, t.clone());
        let dominated = self.frontier.iter().any(|id| {
            crate::model::dominates_values(&self.seen[id].values, &t.values, schema)
        });
        if dominated {
            return;
        }
        self.frontier.retain(|id| {
            !crate::model::dominates_values(&t.values, &self.seen[id].values, schema)
        });
        self.frontier.push(t.id);
    }

    /// Record without touching the frontier (used while a batch is held
    /// back for anytime safety); `promote` folds it in later.
    pub fn quarantine(&mut self, t: &Tuple) -> bool {
        self.seen.insert(t.id, t.clone()).is_none()
    }

    pub fn promote(&mut self, ids: &[TupleId], schema: &[AttributeSchema]) {
        for id in ids {
            let t = self.seen[id].clone();
            let dominated = self.frontier.iter().any(|f| {
                crate::model::dominates_values(&self.seen[f].values, &t.values, schema)
            });
            if dominated {
                continue;
            }
            self.frontier.retain(|f| {
                !crate::model::dominates_values(&t.values, &self.seen[f].values, schema)
            });
            if !self.frontier.contains(id) {
                self.frontier.push(*id);
            }
        }
    }

    pub fn any_seen_in(&self, region: &Region) -> bool {
        self.seen.values().any(|t| region.contains(&t.values))
    }

    /// Smallest-id seen tuple weakly dominating `t` on `attrs`.
    pub fn seen_dominator(&self, t: &Tuple, attrs: &[usize]) -> Option<&Tuple> {
        self.seen
            .values()
            .filter(|u| u.id != t.id && attrs.iter().all(|&a| u.values[a] <= t.values[a]))
            .min_by_key(|u| u.id)
    }
}

/// The m child queries of `q` after it returned `t`: child i appends
/// `A_i < t[A_i]` for each ranking attribute, with `None` marking the
/// unsatisfiable children where `t[A_i]` is already the best value.
pub fn sq_expand(
    q: &Query,
    t: &Tuple,
    schema: &[AttributeSchema],
) -> Result<Vec<Option<Query>>> {
    if t.values.len() != schema.len() {
        return Err(Error::MalformedInput(
            "tuple does not conform to schema".into(),
        ));
    }
    let base = canonical_region(q, schema);
    let ranking: Vec<usize> = schema
        .iter()
        .enumerate()
        .filter(|(_, a)| a.is_ranking())
        .map(|(i, _)| i)
        .collect();
    Ok(ranking
        .iter()
        .map(|&attr| {
            let mut child = base.clone();
            if child.tighten_below(attr, t.values[attr]) {
                Some(child.to_query(schema))
            } else {
                None
            }
        })
        .collect())
}

pub(crate) struct SqRun {
    pub pool: Pool,
    pub trace: Vec<(u64, u64)>,
    pub complete: bool,
    /// (path, answer ids) per issued query when path recording is on.
    pub issued: Vec<(Vec<(TupleId, usize)>, Vec<TupleId>)>,
}

/// The tree walk shared by SQ discovery, the mixed-interface range phase,
/// and the SQ sky-band variant. Branches on the top-1 of each overflowing
/// answer; remaining answer tuples only feed the candidate pool.
pub(crate) fn sq_core(
    s: &mut DiscoverySession,
    base: Region,
    branch_attrs: &[usize],
    discipline: QueueDiscipline,
    record_paths: bool,
) -> Result<SqRun> {
    let schema = s.dataset().schema().to_vec();
    let start = s.query_count();
    let mut pool = Pool::new();
    let mut trace = Vec::new();
    let mut issued = Vec::new();
    let mut queue: VecDeque<TreeNode> = VecDeque::new();
    queue.push_back(TreeNode {
        region: base,
        path: Vec::new(),
    });
    let mut complete = true;
    while let Some(node) = match discipline {
        QueueDiscipline::Fifo => queue.pop_front(),
        QueueDiscipline::Lifo => queue.pop_back(),
    } {
        let q = node.region.to_query(&schema);
        let ans = match s.answer(&q) {
            Ok(ans) => ans,
            Err(Error::BudgetExhausted { .. }) => {
                complete = false;
                break;
            }
            Err(e) => return Err(e),
        };
        if record_paths {
            issued.push((node.path.clone(), ans.ids()));
        }
        for t in &ans.tuples {
            pool.observe(t, &schema);
        }
        trace.push((s.query_count() - start, pool.frontier_len() as u64));
        if ans.len() == s.k() {
            let top = ans.top().expect("non-empty answer").clone();
            let children: Vec<TreeNode> = branch_attrs
                .iter()
                .filter_map(|&attr| {
                    let mut child = node.region.clone();
                    if child.tighten_below(attr, top.values[attr]) {
                        let mut path = node.path.clone();
                        path.push((top.id, attr));
                        Some(TreeNode {
                            region: child,
                            path,
                        })
                    } else {
                        None
                    }
                })
                .collect();
            match discipline {
                QueueDiscipline::Fifo => queue.extend(children),
                // reversed so the stack pops children in schema order
                QueueDiscipline::Lifo => queue.extend(children.into_iter().rev()),
            }
        }
    }
    Ok(SqRun {
        pool,
        trace,
        complete,
        issued,
    })
}

/// Full skyline discovery through a single-ended-range interface.
pub fn sq_discover(s: &mut DiscoverySession) -> Result<DiscoveryResult> {
    sq_discover_with(s, QueueDiscipline::Fifo)
}

pub fn sq_discover_with(
    s: &mut DiscoverySession,
    discipline: QueueDiscipline,
) -> Result<DiscoveryResult> {
    let schema = s.dataset().schema();
    for attr in schema.iter().filter(|a| a.is_ranking()) {
        if !attr.interface_class.supports_upper_bound() {
            return Err(Error::UnsupportedInterface(format!(
                "attribute {} does not support single-ended ranges",
                attr.name
            )));
        }
    }
    let base = Region::full(schema);
    let branch = s.dataset().ranking_attrs();
    let start = s.query_count();
    let run = sq_core(s, base, &branch, discipline, false)?;
    Ok(DiscoveryResult {
        skyline: run.pool.frontier_ids(),
        cost: s.query_count() - start,
        trace: run.trace,
        complete: run.complete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interface::RankingMode;
    use crate::model::{
        four_tuple_example, oracle_skyline, AttributeSchema, Dataset, InterfaceClass,
    };
    use crate::testutil::random_dataset;

    fn session(d: Dataset, k: usize) -> DiscoverySession {
        let m = d.ranking_attrs().len();
        DiscoverySession::new(d, k, RankingMode::uniform_weights(m), None).unwrap()
    }

    #[test]
    fn expand_on_paper_root() {
        let d = four_tuple_example(InterfaceClass::Sq);
        let t1 = d.tuple(1).unwrap();
        let children = sq_expand(&Query::select_all(), t1, d.schema()).unwrap();
        assert_eq!(children.len(), 3);
        let rendered: Vec<String> = children
            .iter()
            .map(|c| format!("{:?}", c.as_ref().unwrap().predicates))
            .collect();
        // A1 < 5, A2 < 1, A3 < 9 rendered as inclusive Le bounds
        assert!(rendered[0].contains("value: 4"));
        assert!(rendered[1].contains("value: 0"));
        assert!(rendered[2].contains("value: 8"));
    }

    #[test]
    fn expand_tightens_existing_bound() {
        let d = four_tuple_example(InterfaceClass::Sq);
        let q = Query::from_predicates(vec![crate::interface::Predicate::new(
            0,
            crate::interface::Comparator::Lt,
            5,
        )]);
        let t2 = d.tuple(2).unwrap(); // a1 = 4
        let children = sq_expand(&q, t2, d.schema()).unwrap();
        let c0 = children[0].as_ref().unwrap();
        assert_eq!(c0.predicates.len(), 1);
        assert_eq!(c0.predicates[0].value, 3); // Le 3 == Lt 4
    }

    #[test]
    fn expand_marks_unsatisfiable_children() {
        let schema = vec![
            AttributeSchema::ranking("a", 4, InterfaceClass::Sq),
            AttributeSchema::ranking("b", 4, InterfaceClass::Sq),
        ];
        let d = Dataset::new(schema, vec![Tuple::new(0, vec![0, 0])]).unwrap();
        let t = d.tuple(0).unwrap();
        let children = sq_expand(&Query::select_all(), t, d.schema()).unwrap();
        assert!(children.iter().all(|c| c.is_none()));
    }

    #[test]
    fn single_skyline_tuple_costs_m_plus_one() {
        // one tuple away from the best corner so every branch is satisfiable
        let schema = vec![
            AttributeSchema::ranking("a", 10, InterfaceClass::Sq),
            AttributeSchema::ranking("b", 10, InterfaceClass::Sq),
            AttributeSchema::ranking("c", 10, InterfaceClass::Sq),
        ];
        let d = Dataset::new(schema, vec![Tuple::new(0, vec![2, 3, 4])]).unwrap();
        let mut s = session(d, 1);
        let r = sq_discover(&mut s).unwrap();
        assert_eq!(r.cost, 4);
        assert_eq!(r.skyline, vec![0]);
        assert!(r.complete);
    }

    #[test]
    fn empty_dataset_costs_one() {
        let schema = vec![AttributeSchema::ranking("a", 10, InterfaceClass::Sq)];
        let d = Dataset::new(schema, vec![]).unwrap();
        let mut s = session(d, 1);
        let r = sq_discover(&mut s).unwrap();
        assert_eq!(r.cost, 1);
        assert!(r.skyline.is_empty());
        assert!(r.complete);
    }

    #[test]
    fn paper_example_discovers_oracle_skyline() {
        for k in [1usize, 2, 4] {
            let d = four_tuple_example(InterfaceClass::Sq);
            let oracle: Vec<TupleId> = oracle_skyline(&d).members().iter().copied().collect();
            let mut s = session(d, k);
            let r = sq_discover(&mut s).unwrap();
            assert_eq!(r.skyline, oracle);
            assert!(r.complete);
        }
    }

    #[test]
    fn oracle_equivalence_on_random_instances() {
        for seed in 0..12u64 {
            let d = random_dataset(seed, 60, 3, 12);
            let oracle: Vec<TupleId> = oracle_skyline(&d).members().iter().copied().collect();
            let mut s = session(d, 1);
            let r = sq_discover(&mut s).unwrap();
            assert_eq!(r.skyline, oracle, "seed {seed}");
        }
    }

    #[test]
    fn lifo_discipline_also_complete() {
        let d = random_dataset(7, 50, 3, 10);
        let oracle: Vec<TupleId> = oracle_skyline(&d).members().iter().copied().collect();
        let mut s = session(d, 1);
        let r = sq_discover_with(&mut s, QueueDiscipline::Lifo).unwrap();
        assert_eq!(r.skyline, oracle);
    }

    #[test]
    fn rejects_pq_attributes() {
        let d = four_tuple_example(InterfaceClass::Pq);
        let mut s = session(d, 1);
        assert!(matches!(
            sq_discover(&mut s),
            Err(Error::UnsupportedInterface(_))
        ));
    }

    #[test]
    fn prefix_free_property_of_returning_nodes() {
        // k = 1: a node that returns t never has t returned in its subtree
        for seed in [3u64, 11, 29] {
            let d = random_dataset(seed, 40, 3, 8);
            let mut s = session(d.clone(), 1);
            let base = Region::full(d.schema());
            let branch = d.ranking_attrs();
            let run = sq_core(&mut s, base, &branch, QueueDiscipline::Fifo, true).unwrap();
            for (i, (path_a, ids_a)) in run.issued.iter().enumerate() {
                for (path_b, ids_b) in run.issued.iter().skip(i + 1) {
                    let is_prefix = path_b.len() > path_a.len()
                        && path_b[..path_a.len()] == path_a[..];
                    if is_prefix {
                        for id in ids_a {
                            assert!(
                                !ids_b.contains(id),
                                "tuple {id} returned again inside its own subtree"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn anytime_pool_is_always_sound() {
        for seed in 0..8u64 {
            let d = random_dataset(seed, 50, 3, 10);
            let oracle = oracle_skyline(&d);
            // run to completion to learn the cost, then replay under budgets
            let full = {
                let mut s = session(d.clone(), 2);
                sq_discover(&mut s).unwrap()
            };
            for frac in [0.1, 0.25, 0.5] {
                let budget = ((full.cost as f64 * frac).ceil() as u64).max(1);
                let m = d.ranking_attrs().len();
                let mut s = DiscoverySession::new(
                    d.clone(),
                    2,
                    RankingMode::uniform_weights(m),
                    Some(budget),
                )
                .unwrap();
                let r = sq_discover(&mut s).unwrap();
                assert!(!r.complete || budget >= full.cost);
                for id in &r.skyline {
                    assert!(oracle.contains(*id), "non-skyline tuple reported early");
                }
            }
        }
    }

    #[test]
    fn cost_stays_under_nominal_worst_case() {
        for seed in 0..6u64 {
            let d = random_dataset(seed, 24, 2, 8);
            let s_count = oracle_skyline(&d).len() as u64;
            let m = d.ranking_attrs().len() as u64;
            let mut s = session(d, 1);
            let r = sq_discover(&mut s).unwrap();
            if s_count > 0 {
                let bound = m * s_count.pow(m as u32) * s_count * (m + 1);
                assert!(r.cost <= bound, "cost {} above nominal bound {}", r.cost, bound);
            }
        }
    }

    #[test]
    fn trace_is_monotone() {
        let d = random_dataset(5, 40, 3, 10);
        let mut s = session(d, 1);
        let r = sq_discover(&mut s).unwrap();
        for w in r.trace.windows(2) {
            assert!(w[0].0 <= w[1].0 && w[0].1 <= w[1].1);
        }
    }
}
