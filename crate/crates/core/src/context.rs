//! Read-only training state shared by the split and merge steps.

use crate::data::{Column, Dataset, Labels, SampleIndexSet};
use crate::error::{Error, Result};
use crate::graph::{NodeStats, Task};
use crate::stats::{EmpiricalDist, LabelSummary, Moments, TestFamily};

/// A dataset plus the per-column ranks the split search sorts by.
pub struct SplitContext<'a> {
    pub(crate) data: &'a Dataset,
    pub(crate) task: Task,
    pub(crate) family: TestFamily,
    /// Dense rank of each row's value, for continuous columns.
    pub(crate) value_rank: Vec<Option<Vec<u32>>>,
    /// Dense rank of each row's label.
    pub(crate) label_rank: Vec<u32>,
}

pub(crate) fn dense_ranks(values: &[f64]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..values.len() as u32).collect();
    order.sort_by(|&a, &b| values[a as usize].total_cmp(&values[b as usize]));
    let mut rank = vec![0u32; values.len()];
    let mut r = 0;
    for (i, &row) in order.iter().enumerate() {
        if i > 0 && values[row as usize] != values[order[i - 1] as usize] {
            r += 1;
        }
        rank[row as usize] = r;
    }
    rank
}

pub fn task_of(data: &Dataset) -> Task {
    match data.labels() {
        Labels::Class(_) => Task::Classification {
            num_classes: data.num_classes().unwrap_or(2),
        },
        Labels::Real(_) => Task::Regression,
    }
}

impl<'a> SplitContext<'a> {
    pub fn new(data: &'a Dataset, family: TestFamily) -> Result<Self> {
        if data.row_count() > u32::MAX as usize {
            return Err(Error::invalid("too many rows"));
        }
        let value_rank = data
            .features()
            .columns()
            .iter()
            .map(|c| match c {
                Column::Continuous(v) => Some(dense_ranks(v)),
                Column::Categorical(_) => None,
            })
            .collect();
        Ok(SplitContext {
            data,
            task: task_of(data),
            family,
            value_rank,
            label_rank: dense_ranks(data.label_values()),
        })
    }

    pub fn dataset(&self) -> &Dataset {
        self.data
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn family(&self) -> TestFamily {
        self.family
    }

    #[inline]
    pub(crate) fn label(&self, row: u32) -> f64 {
        self.data.label_values()[row as usize]
    }

    /// Labels of the rows, sorted.
    pub(crate) fn sorted_labels(&self, rows: impl Iterator<Item = u32>) -> Vec<f64> {
        let mut v: Vec<f64> = rows.map(|r| self.label(r)).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Order-independent summary of the rows' labels.
    pub(crate) fn summary(&self, rows: impl Iterator<Item = u32>) -> LabelSummary {
        let sorted = self.sorted_labels(rows);
        match self.family {
            TestFamily::Parametric => LabelSummary::Moments(Moments::from_slice(&sorted)),
            TestFamily::Nonparametric => LabelSummary::Dist(EmpiricalDist::from_sorted(&sorted)),
        }
    }

    pub(crate) fn stats(&self, rows: &SampleIndexSet) -> NodeStats {
        NodeStats::from_labels(rows.iter().map(|r| self.data.label_values()[r]), self.task)
    }

    pub(crate) fn leaf(&self, rows: SampleIndexSet) -> LeafData {
        let summary = self.summary(rows.as_slice().iter().copied());
        LeafData { rows, summary }
    }
}

/// Samples of a training-time leaf together with their label summary.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafData {
    pub rows: SampleIndexSet,
    pub summary: LabelSummary,
}

impl LeafData {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub(crate) fn union(&self, other: &LeafData, ctx: &SplitContext<'_>) -> LeafData {
        let rows = self.rows.union(&other.rows);
        let summary = match (&self.summary, &other.summary) {
            (LabelSummary::Dist(a), LabelSummary::Dist(b)) => LabelSummary::Dist(a.union(b)),
            _ => ctx.summary(rows.as_slice().iter().copied()),
        };
        LeafData { rows, summary }
    }

    pub(crate) fn p_value(&self, other: &LeafData) -> f64 {
        self.summary.compare(&other.summary).p_value
    }
}
