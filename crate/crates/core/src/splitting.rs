//! Node splitting: exhaustive binary search and the correlation-guided
//! multi-way split with range merging.

use rayon::prelude::*;

use crate::context::{LeafData, SplitContext};
use crate::data::{Column, SampleIndexSet};
use crate::error::Result;
use crate::graph::{NodeId, SplitRule, Task};
use crate::merging::{merge_leaves, LeafPool, MergeCandidateFilter, RangeAnnotation};
use crate::stats::{
    compare_moments, correlation_strength, ks_from_statistic, ks_gap, mwu_sorted, ColumnView, Moments, TestFamily,
    KS_TEST_MIN_EXCLUSIVE,
};

/// A proposed partition of a node's samples.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSplit {
    pub rule: SplitRule,
    /// One index set per child ordinal.
    pub parts: Vec<SampleIndexSet>,
    /// Similarity of the two sides for binary rules; for multi-way rules the
    /// largest p-value between surviving parts.
    pub p_value: f64,
}

fn partition(rows: &SampleIndexSet, arity: usize, route: impl Fn(usize) -> usize) -> Vec<SampleIndexSet> {
    let mut parts = vec![Vec::new(); arity];
    for r in rows.as_slice() {
        parts[route(*r as usize)].push(*r);
    }
    parts
        .into_iter()
        .map(|p| SampleIndexSet::from_sorted(p).expect("rows are sorted"))
        .collect()
}

fn binary_parts(rows: &SampleIndexSet, column: &Column, rule: &SplitRule) -> Vec<SampleIndexSet> {
    partition(rows, 2, |r| rule.route(column.value(r)).unwrap_or(1))
}

fn pair_p_value(parts: &[SampleIndexSet], ctx: &SplitContext<'_>) -> f64 {
    let a = ctx.summary(parts[0].as_slice().iter().copied());
    let b = ctx.summary(parts[1].as_slice().iter().copied());
    a.compare(&b).p_value
}

/// Every binary split of the node: a threshold at each distinct value of a
/// continuous feature except the largest, and one-vs-rest for each observed
/// category of a categorical feature with at least two categories present.
pub fn enumerate_candidate_splits(rows: &SampleIndexSet, ctx: &SplitContext<'_>) -> Vec<CandidateSplit> {
    let mut out = Vec::new();
    for (f, column) in ctx.data.features().columns().iter().enumerate() {
        let rules: Vec<SplitRule> = match column {
            Column::Continuous(v) => {
                let mut values: Vec<f64> = rows.iter().map(|r| v[r]).collect();
                values.sort_by(f64::total_cmp);
                values.dedup();
                values.pop();
                values
                    .into_iter()
                    .map(|value| SplitRule::Threshold { feature: f, value })
                    .collect()
            }
            Column::Categorical(c) => {
                let mut codes: Vec<u32> = rows.iter().map(|r| c[r]).collect();
                codes.sort_unstable();
                codes.dedup();
                if codes.len() < 2 {
                    codes.clear();
                }
                codes
                    .into_iter()
                    .map(|category| SplitRule::OneVsRest { feature: f, category })
                    .collect()
            }
        };
        for rule in rules {
            let parts = binary_parts(rows, column, &rule);
            let p_value = pair_p_value(&parts, ctx);
            out.push(CandidateSplit { rule, parts, p_value });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Cut {
    Threshold(f64),
    Category(u32),
}

impl Cut {
    fn rule(self, feature: usize) -> SplitRule {
        match self {
            Cut::Threshold(value) => SplitRule::Threshold { feature, value },
            Cut::Category(category) => SplitRule::OneVsRest { feature, category },
        }
    }
}

/// Running label sums of one side of a cut, shifted for stability.
#[derive(Clone, Copy)]
struct Sums {
    n: usize,
    sum: f64,
    sq: f64,
    min: f64,
    max: f64,
}

impl Sums {
    const EMPTY: Sums = Sums {
        n: 0,
        sum: 0.0,
        sq: 0.0,
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
    };

    #[inline]
    fn add(&mut self, y: f64, shift: f64) {
        let d = y - shift;
        self.n += 1;
        self.sum += d;
        self.sq += d * d;
        self.min = self.min.min(y);
        self.max = self.max.max(y);
    }

    fn join(&self, o: &Sums) -> Sums {
        Sums {
            n: self.n + o.n,
            sum: self.sum + o.sum,
            sq: self.sq + o.sq,
            min: self.min.min(o.min),
            max: self.max.max(o.max),
        }
    }

    fn moments(&self, shift: f64) -> Moments {
        Moments::from_sums(self.n, shift, self.sum, self.sq, self.min, self.max)
    }
}

/// Per-node data shared by all feature scans.
struct NodeScan<'c, 'a> {
    ctx: &'c SplitContext<'a>,
    rows: &'c [u32],
    shift: f64,
    /// Node-local dense label rank for each position in `rows`.
    label_rank: Vec<u32>,
    label_levels: usize,
}

impl<'c, 'a> NodeScan<'c, 'a> {
    fn new(ctx: &'c SplitContext<'a>, rows: &'c [u32]) -> Self {
        let n = rows.len().max(1) as f64;
        let mean = rows.iter().map(|&r| ctx.label(r)).sum::<f64>() / n;
        let shift = match ctx.task {
            Task::Classification { .. } => mean.round(),
            Task::Regression => mean,
        };
        let (label_rank, label_levels) = match ctx.family {
            TestFamily::Parametric => (Vec::new(), 0),
            TestFamily::Nonparametric => {
                let mut global: Vec<u32> = rows.iter().map(|&r| ctx.label_rank[r as usize]).collect();
                let mut levels = global.clone();
                levels.sort_unstable();
                levels.dedup();
                for g in &mut global {
                    *g = levels.binary_search(g).expect("rank present") as u32;
                }
                (global, levels.len())
            }
        };
        NodeScan {
            ctx,
            rows,
            shift,
            label_rank,
            label_levels,
        }
    }

    fn label_at(&self, pos: usize) -> f64 {
        self.ctx.label(self.rows[pos])
    }

    fn sorted_labels(&self, positions: &[u32]) -> Vec<f64> {
        let mut v: Vec<f64> = positions.iter().map(|&p| self.label_at(p as usize)).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// KS p-value from the left histogram and the node histogram, or the
    /// materialized Mann–Whitney test when a side is tiny.
    fn nonparametric_p(&self, left_hist: &[u32], total: &[u32], n1: usize, left: &[u32], right: &[u32]) -> f64 {
        let n = self.rows.len();
        let n2 = n - n1;
        if n1.min(n2) > KS_TEST_MIN_EXCLUSIVE {
            let (mut ca, mut ct) = (0usize, 0usize);
            let mut d: f64 = 0.0;
            for (l, t) in left_hist.iter().zip(total) {
                ca += *l as usize;
                ct += *t as usize;
                d = d.max(ks_gap(ca, n1, ct - ca, n2));
            }
            ks_from_statistic(d, n1, n2).p_value
        } else {
            mwu_sorted(&self.sorted_labels(left), &self.sorted_labels(right)).p_value
        }
    }

    /// Calls `visit` with every cut of feature `f` and its p-value, in
    /// ascending threshold / code order.
    fn scan(&self, f: usize, visit: &mut dyn FnMut(Cut, f64)) {
        match self.ctx.data.column(f) {
            Column::Continuous(values) => {
                let ranks = self.ctx.value_rank[f].as_ref().expect("continuous ranks");
                let mut order: Vec<u32> = (0..self.rows.len() as u32).collect();
                order.sort_unstable_by_key(|&p| ranks[self.rows[p as usize] as usize]);
                let rank_at = |i: usize| ranks[self.rows[order[i] as usize] as usize];
                let value_at = |i: usize| values[self.rows[order[i] as usize] as usize];
                self.scan_ordered(&order, rank_at, value_at, visit);
            }
            Column::Categorical(codes) => {
                let mut order: Vec<u32> = (0..self.rows.len() as u32).collect();
                order.sort_unstable_by_key(|&p| codes[self.rows[p as usize] as usize]);
                let code_at = |i: usize| codes[self.rows[order[i] as usize] as usize];
                self.scan_groups(&order, code_at, visit);
            }
        }
    }

    fn scan_ordered(
        &self,
        order: &[u32],
        rank_at: impl Fn(usize) -> u32,
        value_at: impl Fn(usize) -> f64,
        visit: &mut dyn FnMut(Cut, f64),
    ) {
        let n = order.len();
        if n < 2 || rank_at(0) == rank_at(n - 1) {
            return;
        }
        match self.ctx.family {
            TestFamily::Parametric => {
                let mut suffix = vec![Sums::EMPTY; n + 1];
                for i in (0..n).rev() {
                    let mut s = suffix[i + 1];
                    s.add(self.label_at(order[i] as usize), self.shift);
                    suffix[i] = s;
                }
                let mut prefix = Sums::EMPTY;
                for i in 1..n {
                    prefix.add(self.label_at(order[i - 1] as usize), self.shift);
                    if rank_at(i) != rank_at(i - 1) {
                        let r = compare_moments(&prefix.moments(self.shift), &suffix[i].moments(self.shift));
                        visit(Cut::Threshold(value_at(i - 1)), r.p_value);
                    }
                }
            }
            TestFamily::Nonparametric => {
                let mut total = vec![0u32; self.label_levels];
                for &p in order {
                    total[self.label_rank[p as usize] as usize] += 1;
                }
                let mut left = vec![0u32; self.label_levels];
                for i in 1..n {
                    left[self.label_rank[order[i - 1] as usize] as usize] += 1;
                    if rank_at(i) != rank_at(i - 1) {
                        let p = self.nonparametric_p(&left, &total, i, &order[..i], &order[i..]);
                        visit(Cut::Threshold(value_at(i - 1)), p);
                    }
                }
            }
        }
    }

    fn scan_groups(&self, order: &[u32], code_at: impl Fn(usize) -> u32, visit: &mut dyn FnMut(Cut, f64)) {
        let n = order.len();
        if n < 2 || code_at(0) == code_at(n - 1) {
            return;
        }
        let mut bounds = vec![0usize];
        for i in 1..n {
            if code_at(i) != code_at(i - 1) {
                bounds.push(i);
            }
        }
        bounds.push(n);
        let groups: Vec<(u32, usize, usize)> = bounds.windows(2).map(|w| (code_at(w[0]), w[0], w[1])).collect();
        match self.ctx.family {
            TestFamily::Parametric => {
                let sums: Vec<Sums> = groups
                    .iter()
                    .map(|&(_, lo, hi)| {
                        let mut s = Sums::EMPTY;
                        for &p in &order[lo..hi] {
                            s.add(self.label_at(p as usize), self.shift);
                        }
                        s
                    })
                    .collect();
                let k = sums.len();
                let mut before = vec![Sums::EMPTY; k + 1];
                for g in 0..k {
                    before[g + 1] = before[g].join(&sums[g]);
                }
                let mut after = vec![Sums::EMPTY; k + 1];
                for g in (0..k).rev() {
                    after[g] = sums[g].join(&after[g + 1]);
                }
                for (g, &(code, _, _)) in groups.iter().enumerate() {
                    let rest = before[g].join(&after[g + 1]);
                    let r = compare_moments(&sums[g].moments(self.shift), &rest.moments(self.shift));
                    visit(Cut::Category(code), r.p_value);
                }
            }
            TestFamily::Nonparametric => {
                let mut total = vec![0u32; self.label_levels];
                for &p in order {
                    total[self.label_rank[p as usize] as usize] += 1;
                }
                let mut hist = vec![0u32; self.label_levels];
                for &(code, lo, hi) in &groups {
                    hist.iter_mut().for_each(|h| *h = 0);
                    for &p in &order[lo..hi] {
                        hist[self.label_rank[p as usize] as usize] += 1;
                    }
                    let n1 = hi - lo;
                    let p = if n1.min(n - n1) > KS_TEST_MIN_EXCLUSIVE {
                        self.nonparametric_p(&hist, &total, n1, &[], &[])
                    } else {
                        let rest: Vec<u32> = order[..lo].iter().chain(&order[hi..]).copied().collect();
                        self.nonparametric_p(&hist, &total, n1, &order[lo..hi], &rest)
                    };
                    visit(Cut::Category(code), p);
                }
            }
        }
    }

    /// p-value recomputed from the sorted label multisets of both sides.
    fn canonical_p(&self, f: usize, cut: Cut) -> f64 {
        let column = self.ctx.data.column(f);
        let rule = cut.rule(f);
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for &r in self.rows {
            let side = if rule.route(column.value(r as usize)) == Some(0) {
                &mut left
            } else {
                &mut right
            };
            side.push(self.ctx.label(r));
        }
        left.sort_by(f64::total_cmp);
        right.sort_by(f64::total_cmp);
        compare_moments(&Moments::from_slice(&left), &Moments::from_slice(&right)).p_value
    }
}

/// Relative width of the band of near-minimal parametric p-values that are
/// recomputed from sorted labels, so the winner and its p-value do not
/// depend on scan order.
const RECHECK_BAND: f64 = 1e-6;

fn first_min(best: &mut Option<(Cut, f64)>, cut: Cut, p: f64) {
    if best.is_none_or(|(_, bp)| p < bp) {
        *best = Some((cut, p));
    }
}

/// Exhaustive binary split: the candidate with the smallest p-value (ties to
/// the lower feature, then the lower threshold or code), if that p-value is
/// below `p_lim`.
pub fn best_binary_split(rows: &SampleIndexSet, ctx: &SplitContext<'_>, p_lim: f64) -> Option<CandidateSplit> {
    let (best, p) = best_cut(rows, ctx)?;
    if p >= p_lim {
        return None;
    }
    let (f, cut) = best;
    let rule = cut.rule(f);
    let parts = binary_parts(rows, ctx.data.column(f), &rule);
    Some(CandidateSplit {
        rule,
        parts,
        p_value: p,
    })
}

fn best_cut(rows: &SampleIndexSet, ctx: &SplitContext<'_>) -> Option<((usize, Cut), f64)> {
    let scan = NodeScan::new(ctx, rows.as_slice());
    let features: Vec<usize> = (0..ctx.data.num_features()).collect();
    let per_feature: Vec<Option<(Cut, f64)>> = features
        .par_iter()
        .map(|&f| {
            let mut best = None;
            scan.scan(f, &mut |cut, p| first_min(&mut best, cut, p));
            best
        })
        .collect();
    let mut best: Option<((usize, Cut), f64)> = None;
    for (f, b) in per_feature.iter().enumerate() {
        if let Some((cut, p)) = *b {
            if best.is_none_or(|(_, bp)| p < bp) {
                best = Some(((f, cut), p));
            }
        }
    }
    let (_, approx_min) = best?;
    if ctx.family != TestFamily::Parametric {
        return best;
    }
    let band = approx_min + approx_min.abs() * RECHECK_BAND + 1e-290;
    let rechecked: Vec<Option<(Cut, f64)>> = features
        .par_iter()
        .map(|&f| {
            if per_feature[f].is_none_or(|(_, p)| p > band) {
                return None;
            }
            let mut near = Vec::new();
            scan.scan(f, &mut |cut, p| {
                if p <= band {
                    near.push(cut);
                }
            });
            let mut best = None;
            for cut in near {
                first_min(&mut best, cut, scan.canonical_p(f, cut));
            }
            best
        })
        .collect();
    let mut best: Option<((usize, Cut), f64)> = None;
    for (f, b) in rechecked.into_iter().enumerate() {
        if let Some((cut, p)) = b {
            if best.is_none_or(|(_, bp)| p < bp) {
                best = Some(((f, cut), p));
            }
        }
    }
    best
}

/// Feature most strongly associated with the label on these rows (ties to
/// the lower index).
pub fn most_correlated_feature(rows: &SampleIndexSet, ctx: &SplitContext<'_>) -> Result<usize> {
    let labels = rows.gather(ctx.data.label_values());
    let class_codes: Option<Vec<u32>> = match ctx.task {
        Task::Classification { .. } => Some(labels.iter().map(|&v| v as u32).collect()),
        Task::Regression => None,
    };
    let y = match (&class_codes, ctx.task) {
        (Some(codes), Task::Classification { num_classes }) => ColumnView::Categorical {
            codes,
            cardinality: num_classes,
        },
        _ => ColumnView::Continuous(&labels),
    };
    let table = ctx.data.features();
    let strengths: Vec<Result<f64>> = (0..table.num_features())
        .into_par_iter()
        .map(|f| match table.column(f) {
            Column::Continuous(v) => {
                let x: Vec<f64> = rows.iter().map(|r| v[r]).collect();
                correlation_strength(ColumnView::Continuous(&x), y)
            }
            Column::Categorical(c) => {
                let x: Vec<u32> = rows.iter().map(|r| c[r]).collect();
                let cardinality = table.schema().features[f].kind.cardinality().unwrap_or(0);
                correlation_strength(ColumnView::Categorical { codes: &x, cardinality }, y)
            }
        })
        .collect();
    let mut best = (0, f64::NEG_INFINITY);
    for (f, s) in strengths.into_iter().enumerate() {
        let s = s?;
        if s > best.1 {
            best = (f, s);
        }
    }
    Ok(best.0)
}

/// Contiguous runs of `sorted` (ascending feature values), about `sqrt(n)`
/// of them. Sizes differ by at most one before tie adjustment; a cut that
/// would separate equal values moves forward to the next value change.
pub(crate) fn range_cuts(sorted: &[f64]) -> Vec<usize> {
    let n = sorted.len();
    let k = (n as f64).sqrt().round() as usize;
    if k < 2 {
        return vec![0, n];
    }
    let (base, extra) = (n / k, n % k);
    let mut cuts = vec![0];
    let mut target = 0;
    for i in 0..k - 1 {
        target += base + usize::from(i < extra);
        let mut c = target.max(*cuts.last().unwrap() + 1);
        while c < n && sorted[c] == sorted[c - 1] {
            c += 1;
        }
        if c >= n {
            break;
        }
        cuts.push(c);
    }
    cuts.push(n);
    cuts
}

/// Leaves of one node's multi-way split, before they enter the graph.
struct ScratchPool<'c, 'a> {
    ctx: &'c SplitContext<'a>,
    leaves: std::collections::BTreeMap<NodeId, (LeafData, Option<RangeAnnotation>, Vec<usize>)>,
    next: NodeId,
}

impl LeafPool for ScratchPool<'_, '_> {
    fn sample_count(&self, leaf: NodeId) -> usize {
        self.leaves[&leaf].0.len()
    }

    fn similarity(&self, a: NodeId, b: NodeId) -> f64 {
        self.leaves[&a].0.p_value(&self.leaves[&b].0)
    }

    fn range(&self, leaf: NodeId) -> Option<RangeAnnotation> {
        self.leaves[&leaf].1
    }

    fn merge(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (da, ra, mut pa) = self.leaves.remove(&a).expect("leaf a");
        let (db, rb, pb) = self.leaves.remove(&b).expect("leaf b");
        let data = da.union(&db, self.ctx);
        let range = match (ra, rb) {
            (Some(x), Some(y)) => Some(x.fuse(&y)),
            _ => None,
        };
        pa.extend(pb);
        pa.sort_unstable();
        let id = self.next;
        self.next += 1;
        self.leaves.insert(id, (data, range, pa));
        Ok(id)
    }
}

impl ScratchPool<'_, '_> {
    /// Surviving leaves ordered by their smallest original part.
    fn survivors(&self, ids: &[NodeId]) -> Vec<NodeId> {
        let mut ids = ids.to_vec();
        ids.sort_by_key(|id| self.leaves[id].2[0]);
        ids
    }

    fn max_pairwise_p(&self, ids: &[NodeId]) -> f64 {
        let mut max: f64 = 0.0;
        for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                max = max.max(self.similarity(*a, *b));
            }
        }
        max
    }
}

/// Correlation-guided split: one leaf per category, or about `sqrt(n)` value
/// ranges merged first among neighbours and then globally. `None` when a
/// single leaf survives.
pub fn scalable_split(rows: &SampleIndexSet, ctx: &SplitContext<'_>, p_lim: f64) -> Result<Option<CandidateSplit>> {
    if rows.len() < 2 {
        return Ok(None);
    }
    let f = most_correlated_feature(rows, ctx)?;
    let column = ctx.data.column(f);
    let mut pool = ScratchPool {
        ctx,
        leaves: Default::default(),
        next: 0,
    };
    let add = |pool: &mut ScratchPool, part: Vec<u32>, range: Option<RangeAnnotation>| {
        let id = pool.next;
        pool.next += 1;
        let data = ctx.leaf(SampleIndexSet::from_unsorted(part));
        pool.leaves.insert(id, (data, range, vec![id]));
        id
    };
    match column {
        Column::Categorical(codes) => {
            let mut order: Vec<u32> = rows.as_slice().to_vec();
            order.sort_by_key(|&r| (codes[r as usize], r));
            let mut part_codes = Vec::new();
            let mut ids = Vec::new();
            let mut start = 0;
            while start < order.len() {
                let code = codes[order[start] as usize];
                let end = start + order[start..].partition_point(|&r| codes[r as usize] == code);
                ids.push(add(&mut pool, order[start..end].to_vec(), None));
                part_codes.push(code);
                start = end;
            }
            if ids.len() < 2 {
                return Ok(None);
            }
            let merged = merge_leaves(&mut pool, ids, p_lim, MergeCandidateFilter::All)?;
            if merged.len() < 2 {
                return Ok(None);
            }
            let survivors = pool.survivors(&merged);
            let mut map: Vec<(u32, usize)> = Vec::new();
            for (ordinal, id) in survivors.iter().enumerate() {
                for &part in &pool.leaves[id].2 {
                    map.push((part_codes[part], ordinal));
                }
            }
            map.sort_unstable();
            let parts = survivors.iter().map(|id| pool.leaves[id].0.rows.clone()).collect();
            let p_value = pool.max_pairwise_p(&survivors);
            Ok(Some(CandidateSplit {
                rule: SplitRule::CategoryMap { feature: f, map },
                parts,
                p_value,
            }))
        }
        Column::Continuous(values) => {
            let mut order: Vec<u32> = rows.as_slice().to_vec();
            order.sort_by(|&a, &b| values[a as usize].total_cmp(&values[b as usize]).then(a.cmp(&b)));
            let sorted: Vec<f64> = order.iter().map(|&r| values[r as usize]).collect();
            let cuts = range_cuts(&sorted);
            if cuts.len() < 3 {
                return Ok(None);
            }
            let mut ids = Vec::new();
            let mut lows = Vec::new();
            for (i, w) in cuts.windows(2).enumerate() {
                let lo = sorted[w[0]];
                let hi = if i + 2 < cuts.len() {
                    sorted[w[1]]
                } else {
                    f64::INFINITY
                };
                lows.push(lo);
                ids.push(add(
                    &mut pool,
                    order[w[0]..w[1]].to_vec(),
                    Some(RangeAnnotation { lo, hi }),
                ));
            }
            let mut merged = ids;
            loop {
                let before = merged.len();
                merged = merge_leaves(&mut pool, merged, p_lim, MergeCandidateFilter::AdjacentRanges)?;
                if merged.len() >= before {
                    break;
                }
            }
            let merged = merge_leaves(&mut pool, merged, p_lim, MergeCandidateFilter::All)?;
            if merged.len() < 2 {
                return Ok(None);
            }
            let survivors = pool.survivors(&merged);
            let mut target_of = vec![0usize; lows.len()];
            for (ordinal, id) in survivors.iter().enumerate() {
                for &part in &pool.leaves[id].2 {
                    target_of[part] = ordinal;
                }
            }
            let mut boundaries = Vec::new();
            let mut targets = vec![target_of[0]];
            for i in 1..lows.len() {
                if target_of[i] != *targets.last().unwrap() {
                    boundaries.push(lows[i]);
                    targets.push(target_of[i]);
                }
            }
            let parts = survivors.iter().map(|id| pool.leaves[id].0.rows.clone()).collect();
            let p_value = pool.max_pairwise_p(&survivors);
            Ok(Some(CandidateSplit {
                rule: SplitRule::RangePartition {
                    feature: f,
                    boundaries,
                    targets,
                },
                parts,
                p_value,
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, FeatureDescriptor, LabelDescriptor, Labels, Schema};

    fn dataset(columns: Vec<Column>, labels: Labels) -> Dataset {
        let features = columns
            .iter()
            .enumerate()
            .map(|(i, c)| match c {
                Column::Continuous(_) => FeatureDescriptor::continuous(format!("x{i}")),
                Column::Categorical(v) => {
                    FeatureDescriptor::categorical(format!("x{i}"), v.iter().max().map_or(2, |m| (m + 1).max(2)))
                }
            })
            .collect();
        let label = match &labels {
            Labels::Class(v) => LabelDescriptor::class("y", v.iter().max().map_or(2, |m| (m + 1).max(2))),
            Labels::Real(_) => LabelDescriptor::real("y"),
        };
        Dataset::new(Schema::new(features, label).unwrap(), columns, labels).unwrap()
    }

    fn toy() -> Dataset {
        dataset(
            vec![Column::Continuous(vec![1.0, 2.0, 3.0, 4.0])],
            Labels::Class(vec![0, 0, 1, 1]),
        )
    }

    #[test]
    fn candidate_counts() {
        let d = dataset(
            vec![
                Column::Continuous(vec![1.0, 2.0, 3.0]),
                Column::Continuous(vec![5.0; 3]),
                Column::Categorical(vec![0, 1, 2]),
            ],
            Labels::Class(vec![0, 1, 0]),
        );
        let ctx = SplitContext::new(&d, TestFamily::Nonparametric).unwrap();
        let all = enumerate_candidate_splits(&SampleIndexSet::all(3), &ctx);
        let thresholds = all
            .iter()
            .filter(|c| matches!(c.rule, SplitRule::Threshold { .. }))
            .count();
        assert_eq!(thresholds, 2);
        assert_eq!(all.len(), 5);
    }

    #[test]
    fn toy_split_at_two() {
        let d = toy();
        let ctx = SplitContext::new(&d, TestFamily::Nonparametric).unwrap();
        let s = best_binary_split(&SampleIndexSet::all(4), &ctx, 0.5).unwrap();
        assert_eq!(s.rule, SplitRule::Threshold { feature: 0, value: 2.0 });
        assert_eq!(s.parts[0].as_slice(), &[0, 1]);
        let brute = enumerate_candidate_splits(&SampleIndexSet::all(4), &ctx);
        let min = brute.iter().map(|c| c.p_value).fold(f64::INFINITY, f64::min);
        assert_eq!(s.p_value, min);
    }

    #[test]
    fn constant_labels_do_not_split() {
        let d = dataset(
            vec![Column::Continuous(vec![1.0, 2.0, 3.0, 4.0])],
            Labels::Class(vec![1, 1, 1, 1]),
        );
        for family in [TestFamily::Parametric, TestFamily::Nonparametric] {
            let ctx = SplitContext::new(&d, family).unwrap();
            assert!(best_binary_split(&SampleIndexSet::all(4), &ctx, 0.99).is_none());
        }
    }

    #[test]
    fn fast_scan_matches_enumeration() {
        let d = dataset(
            vec![
                Column::Continuous(vec![0.3, 0.1, 0.3, 0.9, 0.5, 0.1, 0.7, 0.2]),
                Column::Categorical(vec![0, 1, 2, 1, 0, 2, 2, 1]),
            ],
            Labels::Real(vec![1.5, -0.2, 2.0, 3.1, 0.4, 0.0, 2.2, 1.1]),
        );
        for family in [TestFamily::Parametric, TestFamily::Nonparametric] {
            let ctx = SplitContext::new(&d, family).unwrap();
            let rows = SampleIndexSet::from_sorted(vec![0, 1, 2, 3, 5, 6, 7]).unwrap();
            let brute = enumerate_candidate_splits(&rows, &ctx);
            let scan = NodeScan::new(&ctx, rows.as_slice());
            let mut fast = Vec::new();
            for f in 0..2 {
                scan.scan(f, &mut |cut, p| fast.push((cut.rule(f), p)));
            }
            assert_eq!(fast.len(), brute.len());
            for ((rule, p), c) in fast.iter().zip(&brute) {
                assert_eq!(rule, &c.rule);
                assert!(
                    (p - c.p_value).abs() < 1e-12,
                    "{family:?} {rule:?}: {p} vs {}",
                    c.p_value
                );
            }
        }
    }

    #[test]
    fn range_cuts_sizes_and_ties() {
        let v: Vec<f64> = (0..9).map(f64::from).collect();
        assert_eq!(range_cuts(&v), vec![0, 3, 6, 9]);
        let v: Vec<f64> = (0..10).map(f64::from).collect();
        // 3 ranges of 4, 3, 3
        assert_eq!(range_cuts(&v), vec![0, 4, 7, 10]);
        let v = [1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 3.0];
        assert_eq!(range_cuts(&v), vec![0, 4, 6, 9]);
        assert_eq!(range_cuts(&[1.0, 2.0]), vec![0, 2]);
        assert_eq!(range_cuts(&[5.0; 9]), vec![0, 9]);
    }

    #[test]
    fn identical_categories_merge_back() {
        let codes: Vec<u32> = (0..40).map(|i| i % 4).collect();
        let labels: Vec<f64> = (0..40).map(|i| f64::from(i / 4 % 3)).collect();
        let d = dataset(vec![Column::Categorical(codes)], Labels::Real(labels));
        let ctx = SplitContext::new(&d, TestFamily::Parametric).unwrap();
        assert!(scalable_split(&SampleIndexSet::all(40), &ctx, 0.05).unwrap().is_none());
    }

    #[test]
    fn monotone_feature_gives_increasing_ranges() {
        let x: Vec<f64> = (0..100).map(f64::from).collect();
        let d = dataset(vec![Column::Continuous(x.clone())], Labels::Real(x));
        let ctx = SplitContext::new(&d, TestFamily::Parametric).unwrap();
        let s = scalable_split(&SampleIndexSet::all(100), &ctx, 0.01).unwrap().unwrap();
        assert!(s.parts.len() >= 2);
        let means: Vec<f64> = s
            .parts
            .iter()
            .map(|p| p.iter().map(|r| r as f64).sum::<f64>() / p.len() as f64)
            .collect();
        assert!(means.windows(2).all(|w| w[0] < w[1]), "{means:?}");
        assert!(s.p_value < 0.01);
        let SplitRule::RangePartition { targets, .. } = &s.rule else {
            panic!("expected a range partition")
        };
        assert_eq!(targets, &(0..s.parts.len()).collect::<Vec<_>>());
    }
}
