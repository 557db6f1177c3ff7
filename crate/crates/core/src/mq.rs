//! Skyline discovery over interfaces mixing two-ended range, one-ended
//! range, and point attributes: range-tree discovery first, then a pruned
//! point-attribute sweep whose overflowing cells are crawled exhaustively.

use crate::error::{Error, Result};
use crate::interface::{DiscoverySession, Region};
use crate::model::{AttributeSchema, InterfaceClass, Tuple};
use crate::pq::pqdb_discover;
use crate::rq::{rq_core, rq_discover};
use crate::sq::{sq_core, sq_discover, DiscoveryResult, Pool, QueueDiscipline};

/// Per two-ended-range attribute: the minimum of the discovered skyline
/// tuples' values, appended as `A_j >= min(...)` to every sweep query.
/// Any tuple below a bound is range-undominated by every discovered tuple
/// and so was already discovered by the range phase.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PruningPredicate {
    pub lower_bounds: Vec<(usize, u32)>,
}

impl PruningPredicate {
    pub fn apply(&self, region: &mut Region) {
        for &(attr, v) in &self.lower_bounds {
            region.raise_to(attr, v);
        }
    }
}

/// Componentwise minimum over `discovered` on every two-ended range
/// attribute; an empty set yields the identity predicate.
pub fn range_prune_predicates(
    discovered: &[&Tuple],
    range_attrs: &[usize],
    schema: &[AttributeSchema],
) -> PruningPredicate {
    if discovered.is_empty() {
        return PruningPredicate::default();
    }
    let mut lower_bounds = Vec::new();
    for &attr in range_attrs {
        if schema[attr].interface_class != InterfaceClass::Rq {
            continue; // one-ended ranges cannot express a lower bound
        }
        let min = discovered.iter().map(|t| t.values[attr]).min().unwrap();
        if min > 0 {
            lower_bounds.push((attr, min));
        }
    }
    PruningPredicate { lower_bounds }
}

fn ranking_by_class(schema: &[AttributeSchema], class: InterfaceClass) -> Vec<usize> {
    schema
        .iter()
        .enumerate()
        .filter(|(_, a)| a.is_ranking() && a.interface_class == class)
        .map(|(i, _)| i)
        .collect()
}

/// Retrieve every tuple of a 2D point-attribute plane that satisfies the
/// pruning predicate: one probe per column, cell enumeration inside
/// overflowing columns, and equality descent over the range attributes
/// inside overflowing cells. Returns (tuples, complete).
pub fn crawl_plane(
    s: &mut DiscoverySession,
    fixed: &[(usize, u32)],
    plane: (usize, usize),
    pruning: &PruningPredicate,
) -> Result<(Vec<Tuple>, bool)> {
    let schema = s.dataset().schema().to_vec();
    let mut base = Region::full(&schema);
    pruning.apply(&mut base);
    for &(a, v) in fixed {
        if !base.pin(a, v) {
            return Ok((Vec::new(), true));
        }
    }
    let range_attrs: Vec<usize> = schema
        .iter()
        .enumerate()
        .filter(|(_, a)| {
            a.is_ranking() && a.interface_class != InterfaceClass::Pq
        })
        .map(|(i, _)| i)
        .collect();
    let mut out = Vec::new();
    let (p, q) = plane;
    for vx in 0..schema[p].domain_size {
        let mut col = base.clone();
        if !col.pin(p, vx) {
            continue;
        }
        let ans = match s.answer(&col.to_query(&schema)) {
            Ok(a) => a,
            Err(Error::BudgetExhausted { .. }) => return Ok((out, false)),
            Err(e) => return Err(e),
        };
        out.extend(ans.tuples.iter().cloned());
        if ans.is_empty() || ans.len() < s.k() {
            continue; // empty column, or underflow retrieved it whole
        }
        for vy in 0..schema[q].domain_size {
            let mut cell = col.clone();
            if !cell.pin(q, vy) {
                continue;
            }
            match crawl_region(s, &schema, cell, &range_attrs, &mut out)? {
                true => {}
                false => return Ok((out, false)),
            }
        }
    }
    Ok((out, true))
}

/// Exhaustively retrieve a region by fixing the remaining attributes one
/// equality value at a time; underflowing answers stop the descent.
pub(crate) fn crawl_region(
    s: &mut DiscoverySession,
    schema: &[AttributeSchema],
    region: Region,
    free_attrs: &[usize],
    out: &mut Vec<Tuple>,
) -> Result<bool> {
    let ans = match s.answer(&region.to_query(schema)) {
        Ok(a) => a,
        Err(Error::BudgetExhausted { .. }) => return Ok(false),
        Err(e) => return Err(e),
    };
    out.extend(ans.tuples.iter().cloned());
    if ans.len() < s.k() {
        return Ok(true);
    }
    let Some((&attr, rest)) = free_attrs.split_first() else {
        // every ranking attribute pinned: a single combination holds at
        // most one tuple, so the answer was already complete
        return Ok(true);
    };
    for v in 0..schema[attr].domain_size {
        let mut sub = region.clone();
        if !sub.pin(attr, v) {
            continue;
        }
        if !crawl_region(s, schema, sub, rest, out)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MqOptions {
    /// Sweep once per discovered tuple with its own bounds P(t) instead of
    /// once with the union bounds; costlier or cheaper depending on data.
    pub per_tuple_sweep: bool,
}

/// Skyline discovery over any mix of SQ, RQ, and PQ ranking attributes.
/// Pure schemas dispatch to the matching single-class algorithm.
pub fn mq_discover(s: &mut DiscoverySession) -> Result<DiscoveryResult> {
    mq_discover_with(s, MqOptions::default())
}

pub fn mq_discover_with(
    s: &mut DiscoverySession,
    opts: MqOptions,
) -> Result<DiscoveryResult> {
    let schema = s.dataset().schema().to_vec();
    let sq_attrs = ranking_by_class(&schema, InterfaceClass::Sq);
    let rq_attrs = ranking_by_class(&schema, InterfaceClass::Rq);
    let pq_attrs = ranking_by_class(&schema, InterfaceClass::Pq);

    if pq_attrs.is_empty() {
        return match (sq_attrs.is_empty(), rq_attrs.is_empty()) {
            (true, false) => rq_discover(s),
            (false, true) => sq_discover(s),
            _ => {
                // SQ+RQ mixture: the counterpart construction degrades to
                // the original query wherever a lower bound is illegal
                let start = s.query_count();
                let branch: Vec<usize> = s.dataset().ranking_attrs();
                let run = rq_core(s, Region::full(&schema), &branch, &branch)?;
                Ok(DiscoveryResult {
                    skyline: run.pool.frontier_ids(),
                    cost: s.query_count() - start,
                    trace: run.trace,
                    complete: run.complete,
                })
            }
        };
    }
    if sq_attrs.is_empty() && rq_attrs.is_empty() {
        return pqdb_discover(s);
    }

    let start = s.query_count();
    let range_attrs: Vec<usize> = schema
        .iter()
        .enumerate()
        .filter(|(_, a)| {
            a.is_ranking() && a.interface_class != InterfaceClass::Pq
        })
        .map(|(i, _)| i)
        .collect();

    // phase 1: range-tree discovery with point attributes unconstrained
    let (mut pool, mut trace, phase1_complete) = if rq_attrs.is_empty() {
        let run = sq_core(
            s,
            Region::full(&schema),
            &range_attrs,
            QueueDiscipline::Fifo,
            false,
        )?;
        (run.pool, run.trace, run.complete)
    } else {
        let run = rq_core(s, Region::full(&schema), &range_attrs, &range_attrs)?;
        (run.pool, run.trace, run.complete)
    };
    if !phase1_complete {
        return Ok(DiscoveryResult {
            skyline: pool.frontier_ids(),
            cost: s.query_count() - start,
            trace,
            complete: false,
        });
    }

    // phase 2/3: pruned point-attribute sweep
    let sweeps: Vec<PruningPredicate> = if opts.per_tuple_sweep {
        pool.frontier_tuples()
            .iter()
            .map(|t| range_prune_predicates(&[t], &range_attrs, &schema))
            .collect()
    } else {
        vec![range_prune_predicates(
            &pool.frontier_tuples(),
            &range_attrs,
            &schema,
        )]
    };

    for pruning in sweeps {
        for &bi in &pq_attrs {
            let mut v = 0u32;
            loop {
                let max = pool
                    .frontier_tuples()
                    .iter()
                    .map(|t| t.values[bi])
                    .max()
                    .unwrap_or(0);
                if v >= max {
                    break;
                }
                let complete = sweep_step(s, &schema, &mut pool, &pruning, &pq_attrs, bi, v)?;
                trace.push((s.query_count() - start, pool.frontier_len() as u64));
                if !complete {
                    return Ok(DiscoveryResult {
                        skyline: pool.frontier_ids(),
                        cost: s.query_count() - start,
                        trace,
                        complete: false,
                    });
                }
                v += 1;
            }
        }
    }
    Ok(DiscoveryResult {
        skyline: pool.frontier_ids(),
        cost: s.query_count() - start,
        trace,
        complete: true,
    })
}

/// One sweep query `P AND B_i = v`, descending into 2D plane crawls when
/// it overflows. Found tuples are quarantined and promoted only when the
/// step completes, which keeps budget-truncated output sound.
fn sweep_step(
    s: &mut DiscoverySession,
    schema: &[AttributeSchema],
    pool: &mut Pool,
    pruning: &PruningPredicate,
    pq_attrs: &[usize],
    bi: usize,
    v: u32,
) -> Result<bool> {
    let mut found: Vec<Tuple> = Vec::new();
    let mut base = Region::full(schema);
    pruning.apply(&mut base);
    if !base.pin(bi, v) {
        return Ok(true);
    }
    let complete = (|| -> Result<bool> {
        let ans = match s.answer(&base.to_query(schema)) {
            Ok(a) => a,
            Err(Error::BudgetExhausted { .. }) => return Ok(false),
            Err(e) => return Err(e),
        };
        found.extend(ans.tuples.iter().cloned());
        if ans.len() < s.k() {
            return Ok(true);
        }
        let free: Vec<usize> = pq_attrs.iter().copied().filter(|&a| a != bi).collect();
        descend_points(s, schema, &[(bi, v)], &free, pruning, &mut found)
    })()?;
    for t in &found {
        pool.quarantine(t);
    }
    if complete {
        let ids: Vec<_> = found.iter().map(|t| t.id).collect();
        pool.promote(&ids, schema);
    }
    Ok(complete)
}

/// Partition the remaining point attributes into a 2D plane (largest
/// domains) and enumerated values for the rest, stopping a branch as soon
/// as an intermediate query underflows.
fn descend_points(
    s: &mut DiscoverySession,
    schema: &[AttributeSchema],
    fixed: &[(usize, u32)],
    free: &[usize],
    pruning: &PruningPredicate,
    out: &mut Vec<Tuple>,
) -> Result<bool> {
    if free.len() <= 2 {
        let plane = match free {
            [a, b] => (*a, *b),
            [a] => (*a, *a),
            _ => {
                // all point attributes fixed: crawl the remaining region
                // over the range attributes alone
                let mut region = Region::full(schema);
                pruning.apply(&mut region);
                for &(a, w) in fixed {
                    region.pin(a, w);
                }
                let range_attrs: Vec<usize> = schema
                    .iter()
                    .enumerate()
                    .filter(|(_, at)| {
                        at.is_ranking() && at.interface_class != InterfaceClass::Pq
                    })
                    .map(|(i, _)| i)
                    .collect();
                return crawl_region(s, schema, region, &range_attrs, out);
            }
        };
        let (tuples, complete) = crawl_plane_fixed(s, schema, fixed, plane, pruning)?;
        out.extend(tuples);
        return Ok(complete);
    }
    // keep the two largest domains as the plane, enumerate the rest
    let mut by_dom: Vec<usize> = free.to_vec();
    by_dom.sort_by(|&a, &b| {
        schema[b]
            .domain_size
            .cmp(&schema[a].domain_size)
            .then(a.cmp(&b))
    });
    let enumerate = *by_dom.last().unwrap();
    let rest: Vec<usize> = free.iter().copied().filter(|&a| a != enumerate).collect();
    for w in 0..schema[enumerate].domain_size {
        let mut region = Region::full(schema);
        pruning.apply(&mut region);
        let mut fixed2 = fixed.to_vec();
        fixed2.push((enumerate, w));
        let mut ok = true;
        for &(a, val) in &fixed2 {
            ok &= region.pin(a, val);
        }
        if !ok {
            continue;
        }
        let ans = match s.answer(&region.to_query(schema)) {
            Ok(a) => a,
            Err(Error::BudgetExhausted { .. }) => return Ok(false),
            Err(e) => return Err(e),
        };
        out.extend(ans.tuples.iter().cloned());
        if ans.len() < s.k() {
            continue; // underflow: this branch is fully retrieved
        }
        if !descend_points(s, schema, &fixed2, &rest, pruning, out)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Plane crawl with a possibly degenerate plane (a single free attribute
/// crawls one line of cells).
fn crawl_plane_fixed(
    s: &mut DiscoverySession,
    schema: &[AttributeSchema],
    fixed: &[(usize, u32)],
    plane: (usize, usize),
    pruning: &PruningPredicate,
) -> Result<(Vec<Tuple>, bool)> {
    if plane.0 == plane.1 {
        // one free attribute: enumerate its values as "columns"
        let mut out = Vec::new();
        let range_attrs: Vec<usize> = schema
            .iter()
            .enumerate()
            .filter(|(_, a)| {
                a.is_ranking() && a.interface_class != InterfaceClass::Pq
            })
            .map(|(i, _)| i)
            .collect();
        for v in 0..schema[plane.0].domain_size {
            let mut region = Region::full(schema);
            pruning.apply(&mut region);
            let mut ok = true;
            for &(a, w) in fixed {
                ok &= region.pin(a, w);
            }
            ok &= region.pin(plane.0, v);
            if !ok {
                continue;
            }
            if !crawl_region(s, schema, region, &range_attrs, &mut out)? {
                return Ok((out, false));
            }
        }
        return Ok((out, true));
    }
    crawl_plane(s, fixed, plane, pruning)
}
