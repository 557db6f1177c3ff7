//! Top-h sky-band discovery: domination-subspace reruns for two-ended
//! interfaces, per-line chain retrieval for point interfaces, and the
//! best-effort single-ended variant that stops or crawls at unbranchable
//! overflows.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interface::{DiscoverySession, Region};
use crate::model::{dominates_values, AttributeSchema, Tuple, TupleId};
use crate::mq::crawl_region;
use crate::pq::pqdb_discover;
use crate::rq::{rq_core, rq_discover};
use crate::sq::{sq_discover, DiscoveryResult};

/// Band members found so far; always a subset of the true top-h sky band,
/// equal to it when `complete`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkybandResult {
    pub band: Vec<TupleId>,
    pub h: usize,
    pub cost: u64,
    pub complete: bool,
}

fn from_discovery(r: DiscoveryResult, h: usize) -> SkybandResult {
    SkybandResult {
        band: r.skyline,
        h,
        cost: r.cost,
        complete: r.complete,
    }
}

/// Top-h sky band through a two-ended-range interface: level 1 is plain
/// skyline discovery; each further level reruns discovery inside the
/// domination subspace of every tuple on the previous band.
pub fn rq_skyband(s: &mut DiscoverySession, h: usize) -> Result<SkybandResult> {
    if h == 0 {
        return Err(Error::InvalidParameter("sky-band depth h must be >= 1".into()));
    }
    let start = s.query_count();
    let base = rq_discover(s)?;
    if h == 1 || !base.complete {
        return Ok(from_discovery(base, h));
    }
    let schema = s.dataset().schema().to_vec();
    let mut candidates: HashMap<TupleId, Tuple> = HashMap::new();
    let mut band: Vec<TupleId> = base.skyline.clone();
    for &id in &base.skyline {
        candidates.insert(id, s.dataset().tuple(id).expect("discovered tuple").clone());
    }
    // one rerun per band member across all levels, memoized by tuple id
    let mut memo: HashMap<TupleId, Vec<Tuple>> = HashMap::new();
    for level in 2..=h {
        for id in band.clone() {
            if memo.contains_key(&id) {
                continue;
            }
            let t = candidates[&id].clone();
            match subspace_skyline(s, &schema, &t)? {
                Some(found) => {
                    for u in &found {
                        candidates.insert(u.id, u.clone());
                    }
                    memo.insert(id, found);
                }
                None => {
                    // budget ran out mid-rerun: report the last completed
                    // level, which is exactly the top-(level-1) band
                    return Ok(SkybandResult {
                        band: sorted(band),
                        h,
                        cost: s.query_count() - start,
                        complete: false,
                    });
                }
            }
        }
        let pool: Vec<&Tuple> = candidates.values().collect();
        band = pool
            .iter()
            .filter(|u| {
                let dominators = pool
                    .iter()
                    .filter(|w| {
                        w.id != u.id && dominates_values(&w.values, &u.values, &schema)
                    })
                    .count();
                dominators < level
            })
            .map(|u| u.id)
            .collect();
    }
    Ok(SkybandResult {
        band: sorted(band),
        h,
        cost: s.query_count() - start,
        complete: true,
    })
}

fn sorted(mut ids: Vec<TupleId>) -> Vec<TupleId> {
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// Skyline of the domination subspace of `t` (everything weakly above `t`
/// except `t` itself), explored through m mutually exclusive first-exceed
/// roots: root i pins the attributes before i to `t`'s values and demands
/// strict excess on attribute i. Returns `None` on budget exhaustion.
fn subspace_skyline(
    s: &mut DiscoverySession,
    schema: &[AttributeSchema],
    t: &Tuple,
) -> Result<Option<Vec<Tuple>>> {
    let ranking: Vec<usize> = schema
        .iter()
        .enumerate()
        .filter(|(_, a)| a.is_ranking())
        .map(|(i, _)| i)
        .collect();
    let mut found: HashMap<TupleId, Tuple> = HashMap::new();
    for (pos, &attr) in ranking.iter().enumerate() {
        let mut root = Region::full(schema);
        let mut ok = true;
        for &prev in &ranking[..pos] {
            ok &= root.pin(prev, t.values[prev]);
        }
        if t.values[attr] + 1 >= schema[attr].domain_size {
            continue; // nothing strictly worse exists on this attribute
        }
        ok &= root.raise_to(attr, t.values[attr] + 1);
        for &next in &ranking[pos + 1..] {
            ok &= root.raise_to(next, t.values[next]);
        }
        if !ok {
            continue;
        }
        let run = rq_core(s, root, &ranking, &ranking)?;
        for u in run.pool.frontier_tuples() {
            found.insert(u.id, u.clone());
        }
        if !run.complete {
            return Ok(None);
        }
    }
    // cross-root dominance filter: the roots partition the subspace, so a
    // root-local skyline tuple may still be dominated from another root
    let all: Vec<Tuple> = found.values().cloned().collect();
    Ok(Some(
        all.iter()
            .filter(|u| {
                !all.iter()
                    .any(|w| w.id != u.id && dominates_values(&w.values, &u.values, schema))
            })
            .cloned()
            .collect(),
    ))
}

/// Top-h sky band through a point-predicate interface. For h = 1 this is
/// exactly the skyline algorithm; deeper bands enumerate every 1D line in
/// preferential order and keep each line's top-h chain, probing cells one
/// by one when the interface returns fewer than h tuples.
pub fn pq_skyband(s: &mut DiscoverySession, h: usize) -> Result<SkybandResult> {
    if h == 0 {
        return Err(Error::InvalidParameter("sky-band depth h must be >= 1".into()));
    }
    if h == 1 {
        let r = pqdb_discover(s)?;
        return Ok(from_discovery(r, 1));
    }
    let schema = s.dataset().schema().to_vec();
    let ranking: Vec<usize> = schema
        .iter()
        .enumerate()
        .filter(|(_, a)| a.is_ranking())
        .map(|(i, _)| i)
        .collect();
    let start = s.query_count();
    // free axis: the largest domain, so the fewest lines get enumerated
    let free = *ranking
        .iter()
        .max_by(|&&a, &&b| {
            schema[a]
                .domain_size
                .cmp(&schema[b].domain_size)
                .then(b.cmp(&a))
        })
        .expect("at least one ranking attribute");
    let fixed_attrs: Vec<usize> = ranking.iter().copied().filter(|&a| a != free).collect();
    let mut candidates: HashMap<TupleId, Tuple> = HashMap::new();
    let mut complete = true;

    let mut combo = vec![0u32; fixed_attrs.len()];
    'lines: loop {
        // one line: every attribute pinned except the free axis
        let mut region = Region::full(&schema);
        for (&a, &v) in fixed_attrs.iter().zip(&combo) {
            region.pin(a, v);
        }
        match s.answer(&region.to_query(&schema)) {
            Ok(ans) => {
                for t in &ans.tuples {
                    candidates.insert(t.id, t.clone());
                }
                let line_count = ans.len();
                if line_count == s.k() && s.k() < h {
                    // k < h: keep probing cells past the answer, ascending,
                    // until the line's top-h chain is known
                    let mut have = line_count;
                    let last = ans.tuples.last().expect("full answer").values[free];
                    let mut y = last + 1;
                    while have < h && y < schema[free].domain_size {
                        let mut cell = region.clone();
                        cell.pin(free, y);
                        match s.answer(&cell.to_query(&schema)) {
                            Ok(cell_ans) => {
                                for t in &cell_ans.tuples {
                                    candidates.insert(t.id, t.clone());
                                    have += 1;
                                }
                            }
                            Err(Error::BudgetExhausted { .. }) => {
                                complete = false;
                                break 'lines;
                            }
                            Err(e) => return Err(e),
                        }
                        y += 1;
                    }
                }
            }
            Err(Error::BudgetExhausted { .. }) => {
                complete = false;
                break 'lines;
            }
            Err(e) => return Err(e),
        }
        // lexicographic increment in preferential order
        let mut i = combo.len();
        loop {
            if i == 0 {
                break 'lines;
            }
            i -= 1;
            combo[i] += 1;
            if combo[i] < schema[fixed_attrs[i]].domain_size {
                break;
            }
            combo[i] = 0;
        }
    }

    let pool: Vec<&Tuple> = candidates.values().collect();
    let band: Vec<TupleId> = pool
        .iter()
        .filter(|u| {
            pool.iter()
                .filter(|w| w.id != u.id && dominates_values(&w.values, &u.values, &schema))
                .count()
                < h
        })
        .map(|u| u.id)
        .collect();
    Ok(SkybandResult {
        band: sorted(band),
        h,
        cost: s.query_count() - start,
        complete,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqSkybandMode {
    /// Accept partial discovery at an unbranchable overflowing node.
    Stop,
    /// Exhaustively crawl the node's region with equality descent.
    Crawl,
}

/// Best-effort top-h sky band over a single-ended interface. Branches on
/// any answer tuple already dominated by h-1 others; an overflowing node
/// without such a tuple either stops the walk (partial result) or crawls.
///
/// Every reported tuple carries an exact dominator count: in a
/// downward-closed region all dominators of an answered tuple rank above
/// it in the same answer, so the count is provable from the answer alone.
pub fn sq_skyband_partial(
    s: &mut DiscoverySession,
    h: usize,
    mode: SqSkybandMode,
) -> Result<SkybandResult> {
    if h == 0 {
        return Err(Error::InvalidParameter("sky-band depth h must be >= 1".into()));
    }
    if h == 1 {
        let r = sq_discover(s)?;
        return Ok(from_discovery(r, 1));
    }
    let schema = s.dataset().schema().to_vec();
    for attr in schema.iter().filter(|a| a.is_ranking()) {
        if !attr.interface_class.supports_upper_bound() {
            return Err(Error::UnsupportedInterface(format!(
                "attribute {} does not support single-ended ranges",
                attr.name
            )));
        }
    }
    let ranking: Vec<usize> = s.dataset().ranking_attrs();
    let start = s.query_count();
    let mut counts: HashMap<TupleId, (Tuple, usize)> = HashMap::new();
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(Region::full(&schema));
    let mut complete = true;
    'walk: while let Some(region) = queue.pop_front() {
        let ans = match s.answer(&region.to_query(&schema)) {
            Ok(a) => a,
            Err(Error::BudgetExhausted { .. }) => {
                complete = false;
                break;
            }
            Err(e) => return Err(e),
        };
        // within-answer dominator counts are exact in downward-closed regions
        for (j, t) in ans.tuples.iter().enumerate() {
            let c = ans.tuples[..j]
                .iter()
                .filter(|w| dominates_values(&w.values, &t.values, &schema))
                .count();
            counts.insert(t.id, (t.clone(), c));
        }
        if ans.len() < s.k() {
            continue;
        }
        // branch on the worst-ranked answer tuple with h-1 known dominators
        let branch = ans
            .tuples
            .iter()
            .rev()
            .find(|t| counts[&t.id].1 >= h - 1);
        match branch {
            Some(t) => {
                for &attr in &ranking {
                    let mut child = region.clone();
                    if child.tighten_below(attr, t.values[attr]) {
                        queue.push_back(child);
                    }
                }
            }
            None => match mode {
                SqSkybandMode::Stop => {
                    complete = false;
                }
                SqSkybandMode::Crawl => {
                    let mut crawled: Vec<Tuple> = Vec::new();
                    let done = crawl_region(s, &schema, region, &ranking, &mut crawled)?;
                    if done {
                        // the region is downward closed, so dominators of
                        // its tuples all lie inside the crawled set
                        let mut unique: HashMap<TupleId, &Tuple> = HashMap::new();
                        for t in &crawled {
                            unique.insert(t.id, t);
                        }
                        for t in unique.values() {
                            let c = unique
                                .values()
                                .filter(|w| {
                                    w.id != t.id
                                        && dominates_values(&w.values, &t.values, &schema)
                                })
                                .count();
                            counts.insert(t.id, ((*t).clone(), c));
                        }
                    } else {
                        complete = false;
                        break 'walk;
                    }
                }
            },
        }
    }
    let band: Vec<TupleId> = counts
        .values()
        .filter(|(_, c)| *c < h)
        .map(|(t, _)| t.id)
        .collect();
    Ok(SkybandResult {
        band: sorted(band),
        h,
        cost: s.query_count() - start,
        complete,
    })
}
