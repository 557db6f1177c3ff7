//! Skyline discovery over two-ended-range interfaces: the same query tree
//! as the SQ algorithm, but with mutually exclusive counterpart queries
//! R(q) that enable early termination of useless subtrees.

use crate::error::{Error, Result};
use crate::interface::{canonical_region, DiscoverySession, Query, Region};
use crate::model::{AttributeSchema, InterfaceClass, Tuple, TupleId};
use crate::sq::{DiscoveryResult, Pool};

/// One level of the counterpart construction: the parent's R-form conjoined
/// with `A_j >= t[A_j]` for every branch attribute before `branch_attr` in
/// schema order, and `A_branch < t[A_branch]`.
///
/// Composed level by level along a path, this realizes the exclusion of all
/// regions earlier in the post-order traversal. Errors when a required
/// lower bound lands on an attribute without two-ended support.
pub fn rq_counterpart(
    parent_r: &Query,
    branch_attr: usize,
    branch_tuple: &Tuple,
    schema: &[AttributeSchema],
) -> Result<Query> {
    let branch_attrs: Vec<usize> = schema
        .iter()
        .enumerate()
        .filter(|(_, a)| a.is_ranking())
        .map(|(i, _)| i)
        .collect();
    let region = canonical_region(parent_r, schema);
    let region = counterpart_region(&region, &branch_attrs, branch_attr, branch_tuple, schema)?;
    Ok(region.to_query(schema))
}

/// Region form of the same construction, shared with the discovery loop.
fn counterpart_region(
    parent_r: &Region,
    branch_attrs: &[usize],
    branch_attr: usize,
    t: &Tuple,
    schema: &[AttributeSchema],
) -> Result<Region> {
    let mut r = parent_r.clone();
    for &attr in branch_attrs.iter().take_while(|&&a| a != branch_attr) {
        if t.values[attr] > 0 {
            if !schema[attr].interface_class.supports_lower_bound() {
                return Err(Error::InterfaceViolation(format!(
                    "attribute {} lacks >= support for the counterpart query",
                    schema[attr].name
                )));
            }
            r.raise_to(attr, t.values[attr]);
        }
    }
    r.tighten_below(branch_attr, t.values[branch_attr]);
    Ok(r)
}

struct RqNode {
    sq: Region,
    /// R-form of this node; `None` when a required lower bound is illegal
    /// on this schema, in which case the original query is issued instead.
    r: Option<Region>,
    path: Vec<(TupleId, usize)>,
}

pub(crate) struct RqRun {
    pub pool: Pool,
    pub trace: Vec<(u64, u64)>,
    pub complete: bool,
}

/// Depth-first preorder walk of the SQ tree issuing q or its counterpart
/// R(q). `branch_attrs` selects the attributes the tree branches on (all
/// ranking attributes for pure RQ; the range attributes in the mixed case).
/// `dominance_attrs` scopes the frontier filtering and the branch-tuple
/// substitution rule.
pub(crate) fn rq_core(
    s: &mut DiscoverySession,
    base: Region,
    branch_attrs: &[usize],
    dominance_attrs: &[usize],
) -> Result<RqRun> {
    let schema = s.dataset().schema().to_vec();
    let start = s.query_count();
    let mut pool = Pool::new();
    let mut trace = Vec::new();
    let mut stack: Vec<RqNode> = vec![RqNode {
        sq: base.clone(),
        r: Some(base),
        path: Vec::new(),
    }];
    let mut complete = true;
    while let Some(node) = stack.pop() {
        // counterpart exists and is provably empty: prune without issuing
        let use_r = pool.any_seen_in(&node.sq);
        let issued_region = if use_r {
            match &node.r {
                Some(r) if r.is_empty() => continue,
                Some(r) => r.clone(),
                None => node.sq.clone(), // SQ-illegal counterpart: fall back
            }
        } else {
            node.sq.clone()
        };
        let ans = match s.answer(&issued_region.to_query(&schema)) {
            Ok(ans) => ans,
            Err(Error::BudgetExhausted { .. }) => {
                complete = false;
                break;
            }
            Err(e) => return Err(e),
        };
        for t in &ans.tuples {
            pool.observe(t, &schema);
        }
        trace.push((s.query_count() - start, pool.frontier_len() as u64));
        if ans.len() < s.k() {
            continue;
        }
        let top = ans.top().expect("full answer").clone();
        // a counterpart may return a tuple dominated by an earlier one;
        // branch on the known dominator so the children stay aligned
        let branch_tuple = match pool.seen_dominator(&top, dominance_attrs) {
            Some(d) if use_r => d.clone(),
            _ => top,
        };
        let mut children = Vec::new();
        for &attr in branch_attrs {
            let mut child_sq = node.sq.clone();
            if !child_sq.tighten_below(attr, branch_tuple.values[attr]) {
                continue;
            }
            let child_r = match &node.r {
                Some(r) => {
                    counterpart_region(r, branch_attrs, attr, &branch_tuple, &schema).ok()
                }
                None => None,
            };
            let mut path = node.path.clone();
            path.push((branch_tuple.id, attr));
            children.push(RqNode {
                sq: child_sq,
                r: child_r,
                path,
            });
        }
        // stack pops in reverse push order: push reversed for preorder
        stack.extend(children.into_iter().rev());
    }
    Ok(RqRun {
        pool,
        trace,
        complete,
    })
}

/// Full skyline discovery through a two-ended-range interface.
pub fn rq_discover(s: &mut DiscoverySession) -> Result<DiscoveryResult> {
    let schema = s.dataset().schema();
    for attr in schema.iter().filter(|a| a.is_ranking()) {
        if attr.interface_class != InterfaceClass::Rq {
            return Err(Error::UnsupportedInterface(format!(
                "attribute {} does not support two-ended ranges",
                attr.name
            )));
        }
    }
    let base = Region::full(schema);
    let branch = s.dataset().ranking_attrs();
    let start = s.query_count();
    let run = rq_core(s, base, &branch, &branch)?;
    Ok(DiscoveryResult {
        skyline: run.pool.frontier_ids(),
        cost: s.query_count() - start,
        trace: run.trace,
        complete: run.complete,
    })
}
