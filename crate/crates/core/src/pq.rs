//! Skyline discovery through point-predicate interfaces: the
//! instance-optimal 2D discipline, pruned-2D-subspace discovery over
//! block-diagonal rectangles, and the higher-dimensional driver that
//! sweeps one 2D plane per value combination of the remaining attributes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interface::{canonical_region, DiscoverySession, Query, Region, TraceRecord};
use crate::model::{AttributeSchema, Tuple, TupleId};
use crate::sq::{DiscoveryResult, Pool};

/// An axis-aligned rectangle of grid cells; `y_top >= y_bottom` with the
/// larger index the worse value. Empty when the bounds cross.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x_left: u32,
    pub x_right: u32,
    pub y_top: u32,
    pub y_bottom: u32,
}

impl Rect {
    pub fn is_empty(&self) -> bool {
        self.x_left > self.x_right || self.y_bottom > self.y_top
    }

    /// Cell count along x.
    pub fn width(&self) -> u32 {
        self.x_right - self.x_left + 1
    }

    /// Cell count along y.
    pub fn height(&self) -> u32 {
        self.y_top - self.y_bottom + 1
    }
}

/// The rectangles between adjacent lower-bound frontier points of a pruned
/// plane, in compressed (live rows/columns only) coordinates. Their widths
/// and heights tile the live plane exactly.
#[derive(Debug, Clone)]
pub struct BlockDiagonalSeries {
    pub rects: Vec<Rect>,
    pub width: u32,
    pub height: u32,
}

/// A 2D subspace of the search grid together with everything proven about
/// it so far: cells inside `empty_corners` hold no undiscovered tuple,
/// cells inside `dominated_corners` cannot hold skyline tuples, and probe
/// answers resolve whole lines.
#[derive(Debug, Clone)]
pub struct PrunedPlane {
    pub x_attr: usize,
    pub y_attr: usize,
    /// Fixed values of the non-plane ranking attributes.
    pub plane_coords: Vec<(usize, u32)>,
    pub empty_corners: Vec<(u32, u32)>,
    pub dominated_corners: Vec<(u32, u32)>,
    /// Tuples backing the corners; used to seed the candidate pool when a
    /// plane is crawled standalone.
    pub evidence_tuples: Vec<Tuple>,
    xdom: u32,
    ydom: u32,
    resolved: Vec<bool>,
}

impl PrunedPlane {
    /// Derive the pruning state of a plane from the session's query log and
    /// the tuples retrieved so far. Only the top answer of each logged
    /// query feeds the corner rules; underflowing answers resolve their
    /// whole region.
    pub fn from_evidence(
        schema: &[AttributeSchema],
        k: usize,
        log: &[TraceRecord],
        seen: &HashMap<TupleId, Tuple>,
        x_attr: usize,
        y_attr: usize,
        plane_coords: Vec<(usize, u32)>,
    ) -> Result<Self> {
        if x_attr == y_attr || x_attr >= schema.len() || y_attr >= schema.len() {
            return Err(Error::InvalidParameter("invalid plane attributes".into()));
        }
        let xdom = schema[x_attr].domain_size;
        let ydom = schema[y_attr].domain_size;
        let coord_of = |a: usize| -> Option<u32> {
            plane_coords
                .iter()
                .find(|(attr, _)| *attr == a)
                .map(|&(_, v)| v)
        };
        let non_plane: Vec<(usize, u32)> = schema
            .iter()
            .enumerate()
            .filter(|(i, a)| a.is_ranking() && *i != x_attr && *i != y_attr)
            .map(|(i, _)| {
                coord_of(i)
                    .map(|v| (i, v))
                    .ok_or_else(|| Error::InvalidParameter(format!("missing coordinate for attribute {i}")))
            })
            .collect::<Result<_>>()?;
        let mut plane = PrunedPlane {
            x_attr,
            y_attr,
            plane_coords: non_plane.clone(),
            empty_corners: Vec::new(),
            dominated_corners: Vec::new(),
            evidence_tuples: Vec::new(),
            xdom,
            ydom,
            resolved: vec![false; (xdom * ydom) as usize],
        };

        for rec in log {
            let q = Query::from_predicates(rec.predicates.clone());
            let region = canonical_region(&q, schema);
            if region.is_empty() {
                continue;
            }
            let contains_plane = schema.iter().enumerate().all(|(a, attr)| {
                if !attr.is_ranking() {
                    return true;
                }
                if a == x_attr || a == y_attr {
                    region.lo[a] == 0 && region.hi[a] == attr.domain_size - 1
                } else {
                    let v = coord_of(a).unwrap_or(0);
                    region.lo[a] <= v && v <= region.hi[a]
                }
            });
            if contains_plane {
                if let Some(t) = rec.answer_ids.first().and_then(|id| seen.get(id)) {
                    if non_plane.iter().all(|&(a, v)| t.values[a] >= v) {
                        plane.add_empty_corner(t.values[x_attr], t.values[y_attr]);
                        plane.evidence_tuples.push(t.clone());
                    }
                }
            }
            let pins_coords = non_plane
                .iter()
                .all(|&(a, v)| region.lo[a] == v && region.hi[a] == v);
            if pins_coords {
                let x_pinned = region.lo[x_attr] == region.hi[x_attr];
                let x_full = region.lo[x_attr] == 0 && region.hi[x_attr] == xdom - 1;
                let y_pinned = region.lo[y_attr] == region.hi[y_attr];
                let y_full = region.lo[y_attr] == 0 && region.hi[y_attr] == ydom - 1;
                match (x_pinned && !y_pinned, y_pinned && !x_pinned) {
                    (true, _) if y_full => {
                        let v = region.lo[x_attr];
                        match rec.answer_ids.first().and_then(|id| seen.get(id)) {
                            None => plane.mark_col(v),
                            Some(t) if t.values[x_attr] == v => {
                                for y in 0..t.values[y_attr] {
                                    plane.mark(v, y);
                                }
                                plane.mark(v, t.values[y_attr]);
                            }
                            Some(_) => {}
                        }
                    }
                    (_, true) if x_full => {
                        let w = region.lo[y_attr];
                        match rec.answer_ids.first().and_then(|id| seen.get(id)) {
                            None => plane.mark_row(w),
                            Some(t) if t.values[y_attr] == w => {
                                for x in 0..t.values[x_attr] {
                                    plane.mark(x, w);
                                }
                                plane.mark(t.values[x_attr], w);
                            }
                            Some(_) => {}
                        }
                    }
                    _ => {
                        if x_pinned && y_pinned && rec.answer_ids.is_empty() {
                            plane.mark(region.lo[x_attr], region.lo[y_attr]);
                        }
                    }
                }
            }
            // an underflowing answer reveals its whole region
            if rec.answer_ids.len() < k {
                let coords_inside = non_plane
                    .iter()
                    .all(|&(a, v)| region.lo[a] <= v && v <= region.hi[a]);
                if coords_inside {
                    for x in region.lo[x_attr]..=region.hi[x_attr].min(xdom - 1) {
                        for y in region.lo[y_attr]..=region.hi[y_attr].min(ydom - 1) {
                            plane.mark(x, y);
                        }
                    }
                }
            }
        }

        for t in seen.values() {
            if non_plane.iter().all(|&(a, v)| t.values[a] <= v) {
                plane.add_dominated_corner(t.values[x_attr], t.values[y_attr]);
                plane.evidence_tuples.push(t.clone());
            }
        }
        Ok(plane)
    }

    fn idx(&self, x: u32, y: u32) -> usize {
        (x * self.ydom + y) as usize
    }

    fn mark(&mut self, x: u32, y: u32) {
        let i = self.idx(x, y);
        self.resolved[i] = true;
    }

    fn mark_col(&mut self, x: u32) {
        for y in 0..self.ydom {
            self.mark(x, y);
        }
    }

    fn mark_row(&mut self, y: u32) {
        for x in 0..self.xdom {
            self.mark(x, y);
        }
    }

    pub fn add_empty_corner(&mut self, cx: u32, cy: u32) {
        self.empty_corners.push((cx, cy));
        for x in 0..=cx {
            for y in 0..=cy {
                self.mark(x, y);
            }
        }
    }

    pub fn add_dominated_corner(&mut self, cx: u32, cy: u32) {
        self.dominated_corners.push((cx, cy));
        for x in cx..self.xdom {
            for y in cy..self.ydom {
                self.mark(x, y);
            }
        }
    }

    /// Fold another plane's evidence into this one (same plane attributes).
    pub fn absorb(&mut self, other: &PrunedPlane) {
        for &(x, y) in &other.empty_corners {
            self.add_empty_corner(x, y);
        }
        for &(x, y) in &other.dominated_corners {
            self.add_dominated_corner(x, y);
        }
        for (i, r) in other.resolved.iter().enumerate() {
            if *r {
                self.resolved[i] = true;
            }
        }
        self.evidence_tuples.extend(other.evidence_tuples.iter().cloned());
    }

    pub fn is_exhausted(&self) -> bool {
        self.resolved.iter().all(|&r| r)
    }

    pub fn live_cols(&self) -> Vec<u32> {
        (0..self.xdom)
            .filter(|&x| (0..self.ydom).any(|y| !self.resolved[self.idx(x, y)]))
            .collect()
    }

    pub fn live_rows(&self) -> Vec<u32> {
        (0..self.ydom)
            .filter(|&y| (0..self.xdom).any(|x| !self.resolved[self.idx(x, y)]))
            .collect()
    }

    /// Block-diagonal rectangles between adjacent lower-bound frontier
    /// points, in compressed coordinates over the live rows and columns.
    pub fn block_diagonal_series(&self) -> BlockDiagonalSeries {
        let cols = self.live_cols();
        let rows = self.live_rows();
        let w = cols.len() as i64;
        let h = rows.len() as i64;
        if w == 0 || h == 0 {
            return BlockDiagonalSeries {
                rects: Vec::new(),
                width: w as u32,
                height: h as u32,
            };
        }
        // height of the empty-corner staircase per live column, compressed
        let profile: Vec<i64> = cols
            .iter()
            .map(|&c| {
                let lmax = self
                    .empty_corners
                    .iter()
                    .filter(|&&(cx, _)| cx >= c)
                    .map(|&(_, cy)| cy)
                    .max();
                match lmax {
                    None => 0,
                    Some(lm) => rows.iter().filter(|&&r| r <= lm).count() as i64,
                }
            })
            .collect();
        let mut corners: Vec<(i64, i64)> = Vec::new();
        for i in 0..cols.len() {
            let next = if i + 1 < cols.len() { profile[i + 1] } else { 0 };
            if profile[i] > next && profile[i] > 0 {
                corners.push((i as i64, profile[i] - 1));
            }
        }
        let mut rects = Vec::new();
        let mut prev = (-1i64, h - 1);
        for &(a, b) in corners.iter().chain(std::iter::once(&(w - 1, -1i64))) {
            let rect = Rect {
                x_left: (prev.0 + 1) as u32,
                x_right: a as u32,
                y_bottom: (b + 1) as u32,
                y_top: prev.1 as u32,
            };
            if !rect.is_empty() {
                rects.push(rect);
            }
            prev = (a, b);
        }
        BlockDiagonalSeries {
            rects,
            width: w as u32,
            height: h as u32,
        }
    }
}

/// The two attributes with the largest domains, ties broken by index.
pub fn choose_plane_attrs(schema: &[AttributeSchema]) -> Result<(usize, usize)> {
    let mut ranking: Vec<(usize, u32)> = schema
        .iter()
        .enumerate()
        .filter(|(_, a)| a.is_ranking())
        .map(|(i, a)| (i, a.domain_size))
        .collect();
    if ranking.len() < 2 {
        return Err(Error::InvalidParameter(
            "plane selection needs at least two ranking attributes".into(),
        ));
    }
    ranking.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok((ranking[0].0, ranking[1].0))
}

/// Exact 1D-query cost of the 2D discipline (the per-gap min sum over the
/// skyline staircase extended by the domain corner points).
pub fn pq2d_cost_formula(points: &[(u32, u32)], x_max: u32, y_max: u32) -> Result<u64> {
    for w in points.windows(2) {
        if w[1].0 <= w[0].0 || w[1].1 >= w[0].1 {
            return Err(Error::InvalidParameter(
                "points must be strictly increasing in x and decreasing in y".into(),
            ));
        }
    }
    if points
        .iter()
        .any(|&(x, y)| x > x_max || y > y_max)
    {
        return Err(Error::InvalidParameter("point outside the domain".into()));
    }
    let mut chain: Vec<(u64, u64)> = Vec::with_capacity(points.len() + 2);
    chain.push((0, y_max as u64));
    chain.extend(points.iter().map(|&(x, y)| (x as u64, y as u64)));
    chain.push((x_max as u64, 0));
    let mut cost = 0u64;
    for w in chain.windows(2) {
        cost += (w[1].0 - w[0].0).min(w[0].1 - w[1].1);
    }
    Ok(cost)
}

/// Which agreeing rectangle the subspace loop crawls next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanePick {
    FirstAgreeing,
    LastAgreeing,
}

/// Per-run counters: total 1D queries and the per-plane split.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PqStats {
    pub one_d_queries: u64,
    pub per_plane: Vec<(Vec<u32>, u64)>,
}

struct PqDriver<'a> {
    s: &'a mut DiscoverySession,
    schema: Vec<AttributeSchema>,
    plane_attrs: (usize, usize),
    pool: Pool,
    start: u64,
    trace: Vec<(u64, u64)>,
    stats: PqStats,
    pick: PlanePick,
}

impl<'a> PqDriver<'a> {
    fn new(s: &'a mut DiscoverySession, pick: PlanePick) -> Self {
        let schema = s.dataset().schema().to_vec();
        let start = s.query_count();
        PqDriver {
            s,
            schema,
            plane_attrs: (0, 1),
            pool: Pool::new(),
            start,
            trace: Vec::new(),
            stats: PqStats::default(),
            pick,
        }
    }

    fn with_plane(mut self, x: usize, y: usize) -> Self {
        self.plane_attrs = (x, y);
        self
    }

    fn observe_answer(&mut self, ans: &crate::interface::Answer) {
        if let Some(t) = ans.top() {
            self.pool.observe(t, &self.schema);
        }
        if ans.len() < self.s.k() {
            // an underflowing answer is the complete content of its region
            for t in ans.tuples.iter().skip(1) {
                self.pool.observe(t, &self.schema);
            }
        }
        self.trace
            .push((self.s.query_count() - self.start, self.pool.frontier_len() as u64));
    }

    fn select_all(&mut self) -> Result<bool> {
        match self.s.answer(&Query::select_all()) {
            Ok(ans) => {
                self.observe_answer(&ans);
                Ok(true)
            }
            Err(Error::BudgetExhausted { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    }

    fn probe(&mut self, coords: &[(usize, u32)], attr: usize, value: u32) -> Result<Option<crate::interface::Answer>> {
        let mut region = Region::full(&self.schema);
        for &(a, v) in coords {
            region.pin(a, v);
        }
        region.pin(attr, value);
        match self.s.answer(&region.to_query(&self.schema)) {
            Ok(ans) => {
                self.stats.one_d_queries += 1;
                if let Some(last) = self.stats.per_plane.last_mut() {
                    last.1 += 1;
                }
                self.observe_answer(&ans);
                Ok(Some(ans))
            }
            Err(Error::BudgetExhausted { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Run the 2D discipline over one rectangle, given as the live column
    /// and row ids it spans. Returns false on budget exhaustion.
    fn crawl_rect(
        &mut self,
        coords: &[(usize, u32)],
        mut cols: Vec<u32>,
        mut rows: Vec<u32>,
    ) -> Result<bool> {
        let (x_attr, y_attr) = self.plane_attrs;
        while !cols.is_empty() && !rows.is_empty() {
            if cols.len() < rows.len() {
                let v = cols[0];
                let Some(ans) = self.probe(coords, x_attr, v)? else {
                    return Ok(false);
                };
                cols.remove(0);
                if let Some(t) = ans.top() {
                    let ty = t.values[y_attr];
                    if ty <= *rows.last().unwrap() {
                        rows.retain(|&r| r < ty);
                    }
                }
            } else {
                let w = rows[0];
                let Some(ans) = self.probe(coords, y_attr, w)? else {
                    return Ok(false);
                };
                rows.remove(0);
                if let Some(t) = ans.top() {
                    let tx = t.values[x_attr];
                    if tx <= *cols.last().unwrap() {
                        cols.retain(|&c| c < tx);
                    }
                }
            }
        }
        Ok(true)
    }

    /// Crawl one plane to exhaustion, rebuilding the pruning state from
    /// the session evidence before each rectangle.
    fn plane_loop(
        &mut self,
        coords: &[(usize, u32)],
        base: Option<&PrunedPlane>,
    ) -> Result<bool> {
        let (x_attr, y_attr) = self.plane_attrs;
        self.stats.per_plane.push((coords.iter().map(|&(_, v)| v).collect(), 0));
        loop {
            let mut plane = PrunedPlane::from_evidence(
                &self.schema,
                self.s.k(),
                self.s.query_log(),
                self.pool.seen(),
                x_attr,
                y_attr,
                coords.to_vec(),
            )?;
            if let Some(b) = base {
                plane.absorb(b);
            }
            if plane.is_exhausted() {
                return Ok(true);
            }
            let cols = plane.live_cols();
            let rows = plane.live_rows();
            let series = plane.block_diagonal_series();
            let follow_x = cols.len() < rows.len();
            let agreeing: Vec<&Rect> = series
                .rects
                .iter()
                .filter(|r| (r.width() < r.height()) == follow_x)
                .collect();
            let rect = match self.pick {
                PlanePick::FirstAgreeing => agreeing.first(),
                PlanePick::LastAgreeing => agreeing.last(),
            }
            .copied()
            .expect("a direction-agreeing rectangle always exists");
            let rect_cols: Vec<u32> =
                cols[rect.x_left as usize..=rect.x_right as usize].to_vec();
            let rect_rows: Vec<u32> =
                rows[rect.y_bottom as usize..=rect.y_top as usize].to_vec();
            if !self.crawl_rect(coords, rect_cols, rect_rows)? {
                return Ok(false);
            }
        }
    }

    fn result(&self, complete: bool) -> DiscoveryResult {
        DiscoveryResult {
            skyline: self.pool.frontier_ids(),
            cost: self.s.query_count() - self.start,
            trace: self.trace.clone(),
            complete,
        }
    }
}

/// Instance-optimal skyline discovery over a 2-attribute point-predicate
/// interface: one `SELECT *`, then only 1D equality queries.
pub fn pq2d_discover(s: &mut DiscoverySession) -> Result<DiscoveryResult> {
    pq2d_discover_with(s, PlanePick::FirstAgreeing).map(|(r, _)| r)
}

pub fn pq2d_discover_with(
    s: &mut DiscoverySession,
    pick: PlanePick,
) -> Result<(DiscoveryResult, PqStats)> {
    let ranking = s.dataset().ranking_attrs();
    if ranking.len() != 2 {
        return Err(Error::InvalidParameter(
            "pq2d_discover requires exactly 2 ranking attributes".into(),
        ));
    }
    let mut driver = PqDriver::new(s, pick).with_plane(ranking[0], ranking[1]);
    if !driver.select_all()? {
        return Ok((driver.result(false), driver.stats.clone()));
    }
    let complete = driver.plane_loop(&[], None)?;
    Ok((driver.result(complete), driver.stats.clone()))
}

/// Discover all skyline tuples of one pruned 2D subspace. The plane's
/// pruning regions must come from the session's own evidence (or be a
/// superset thereof; the loop re-derives and unions them each round).
pub fn pq2dsub_discover(
    s: &mut DiscoverySession,
    plane: &PrunedPlane,
) -> Result<DiscoveryResult> {
    let mut driver =
        PqDriver::new(s, PlanePick::FirstAgreeing).with_plane(plane.x_attr, plane.y_attr);
    let schema = driver.schema.clone();
    for t in &plane.evidence_tuples {
        driver.pool.observe(t, &schema);
    }
    let coords = plane.plane_coords.clone();
    let complete = driver.plane_loop(&coords, Some(plane))?;
    Ok(driver.result(complete))
}

/// Higher-dimensional discovery: `SELECT *` once, then sweep the 2D plane
/// spanned by the two largest domains for every value combination of the
/// remaining ranking attributes, in preferential (lexicographic ascending)
/// order so the anytime property holds.
pub fn pqdb_discover(s: &mut DiscoverySession) -> Result<DiscoveryResult> {
    pqdb_discover_with_stats(s).map(|(r, _)| r)
}

pub fn pqdb_discover_with_stats(
    s: &mut DiscoverySession,
) -> Result<(DiscoveryResult, PqStats)> {
    let ranking = s.dataset().ranking_attrs();
    if ranking.len() < 2 {
        return Err(Error::InvalidParameter(
            "pqdb_discover requires at least 2 ranking attributes".into(),
        ));
    }
    let (x_attr, y_attr) = choose_plane_attrs(s.dataset().schema())?;
    let non_plane: Vec<usize> = ranking
        .iter()
        .copied()
        .filter(|&a| a != x_attr && a != y_attr)
        .collect();
    let domains: Vec<u32> = non_plane
        .iter()
        .map(|&a| s.dataset().schema()[a].domain_size)
        .collect();
    let mut driver = PqDriver::new(s, PlanePick::FirstAgreeing).with_plane(x_attr, y_attr);
    if !driver.select_all()? {
        return Ok((driver.result(false), driver.stats.clone()));
    }
    let mut combo = vec![0u32; non_plane.len()];
    loop {
        let coords: Vec<(usize, u32)> = non_plane.iter().copied().zip(combo.iter().copied()).collect();
        if !driver.plane_loop(&coords, None)? {
            return Ok((driver.result(false), driver.stats.clone()));
        }
        // lexicographic increment over the non-plane value combinations
        let mut i = combo.len();
        loop {
            if i == 0 {
                return Ok((driver.result(true), driver.stats.clone()));
            }
            i -= 1;
            combo[i] += 1;
            if combo[i] < domains[i] {
                break;
            }
            combo[i] = 0;
        }
    }
}
