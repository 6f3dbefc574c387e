//! Kolmogorov–Smirnov and Mann–Whitney U two-sample tests.

use std::cmp::Ordering;

use super::special::{kolmogorov_q, normal_two_sided};
use super::{TestKind, TestReport};
use crate::error::{Error, Result};

/// Pooled size up to which the Mann–Whitney p-value is computed exactly.
pub const MWU_EXACT_LIMIT: usize = 16;

fn check_nonempty(values: &[f64], name: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::SampleTooSmall(format!("{name} is empty")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid(format!("{name} contains NaN")));
    }
    Ok(())
}

pub(crate) fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Sup-distance between the two empirical CDFs; inputs must be sorted.
pub(crate) fn ks_statistic_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (n1, n2) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while j < b.len() && b[j] == v {
            j += 1;
        }
        d = d.max(ks_gap(i, n1, j, n2));
    }
    d
}

/// `|ca/n1 - cb/n2|` from the exact integer numerator, so equal fractions
/// give bitwise equal results.
#[inline]
pub(crate) fn ks_gap(ca: usize, n1: usize, cb: usize, n2: usize) -> f64 {
    (ca as u64 * n2 as u64).abs_diff(cb as u64 * n1 as u64) as f64 / (n1 as u64 * n2 as u64) as f64
}

pub(crate) fn ks_from_statistic(d: f64, n1: usize, n2: usize) -> TestReport {
    let scale = ((n1 * n2) as f64 / (n1 + n2) as f64).sqrt();
    TestReport {
        p_value: kolmogorov_q(d * scale),
        test_used: TestKind::Ks,
        n1,
        n2,
        statistic: d,
    }
}

pub(crate) fn ks_sorted(a: &[f64], b: &[f64]) -> TestReport {
    ks_from_statistic(ks_statistic_sorted(a, b), a.len(), b.len())
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_test(a: &[f64], b: &[f64]) -> Result<TestReport> {
    check_nonempty(a, "first sample")?;
    check_nonempty(b, "second sample")?;
    Ok(ks_sorted(&sorted_copy(a), &sorted_copy(b)))
}

/// Sorted distinct values with their multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDist {
    values: Vec<f64>,
    counts: Vec<u64>,
    n: usize,
}

impl EmpiricalDist {
    pub fn from_values(values: &[f64]) -> Self {
        Self::from_sorted(&sorted_copy(values))
    }

    pub(crate) fn from_sorted(sorted: &[f64]) -> Self {
        let mut values: Vec<f64> = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        for &v in sorted {
            match values.last() {
                Some(&last) if last == v => *counts.last_mut().unwrap() += 1,
                _ => {
                    values.push(v);
                    counts.push(1);
                }
            }
        }
        EmpiricalDist {
            values,
            counts,
            n: sorted.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn union(&self, other: &EmpiricalDist) -> EmpiricalDist {
        let (a, b) = (self, other);
        let mut values = Vec::with_capacity(a.values.len() + b.values.len());
        let mut counts = Vec::with_capacity(values.capacity());
        let (mut i, mut j) = (0, 0);
        while i < a.values.len() || j < b.values.len() {
            let v = match (a.values.get(i), b.values.get(j)) {
                (Some(&x), Some(&y)) => x.min(y),
                (Some(&x), None) => x,
                (None, Some(&y)) => y,
                (None, None) => unreachable!(),
            };
            let mut c = 0;
            if a.values.get(i) == Some(&v) {
                c += a.counts[i];
                i += 1;
            }
            if b.values.get(j) == Some(&v) {
                c += b.counts[j];
                j += 1;
            }
            values.push(v);
            counts.push(c);
        }
        EmpiricalDist {
            values,
            counts,
            n: a.n + b.n,
        }
    }

    pub(crate) fn expand(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.counts)
            .flat_map(|(&v, &c)| std::iter::repeat_n(v, c as usize))
            .collect()
    }

    fn ks_statistic(&self, other: &EmpiricalDist) -> f64 {
        let (a, b) = (self, other);
        let (mut i, mut j) = (0, 0);
        let (mut ca, mut cb) = (0u64, 0u64);
        let mut d: f64 = 0.0;
        while i < a.values.len() && j < b.values.len() {
            let v = a.values[i].min(b.values[j]);
            if a.values[i] == v {
                ca += a.counts[i];
                i += 1;
            }
            if b.values[j] == v {
                cb += b.counts[j];
                j += 1;
            }
            d = d.max(ks_gap(ca as usize, a.n, cb as usize, b.n));
        }
        d
    }

    /// KS when both sides have more than two observations, Mann–Whitney U
    /// otherwise.
    pub(crate) fn compare(&self, other: &EmpiricalDist) -> TestReport {
        if self.n.min(other.n) > super::KS_TEST_MIN_EXCLUSIVE {
            ks_from_statistic(self.ks_statistic(other), self.n, other.n)
        } else {
            mwu_sorted(&self.expand(), &other.expand())
        }
    }
}

/// Doubled mid-ranks of the pooled sample (so ties stay integral), plus the
/// tie-group sizes. Inputs must be sorted.
fn doubled_ranks(a: &[f64], b: &[f64]) -> (Vec<u64>, Vec<u64>, Vec<u64>) {
    let mut pooled: Vec<(f64, bool)> = a
        .iter()
        .map(|&v| (v, true))
        .chain(b.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut ranks_a = Vec::with_capacity(a.len());
    let mut all = Vec::with_capacity(pooled.len());
    let mut ties = Vec::new();
    let mut start = 0;
    while start < pooled.len() {
        let mut end = start;
        while end + 1 < pooled.len() && pooled[end + 1].0.total_cmp(&pooled[start].0) == Ordering::Equal {
            end += 1;
        }
        // positions start+1 ..= end+1, mid-rank doubled = (start+1)+(end+1)
        let r2 = (start + end + 2) as u64;
        for item in &pooled[start..=end] {
            all.push(r2);
            if item.1 {
                ranks_a.push(r2);
            }
        }
        ties.push((end - start + 1) as u64);
        start = end + 1;
    }
    (ranks_a, all, ties)
}

/// Counts n1-subsets of `ranks` whose doubled U deviates from the null mean at
/// least as much as `observed_dev`.
fn count_extreme(ranks: &[u64], n1: usize, offset: i64, mu2: i64, observed_dev: i64) -> (u64, u64) {
    #[allow(clippy::too_many_arguments)]
    fn walk(
        ranks: &[u64],
        from: usize,
        left: usize,
        acc: u64,
        offset: i64,
        mu2: i64,
        observed_dev: i64,
        hits: &mut u64,
        total: &mut u64,
    ) {
        if left == 0 {
            *total += 1;
            let u2 = acc as i64 - offset;
            if (u2 - mu2).abs() >= observed_dev {
                *hits += 1;
            }
            return;
        }
        for i in from..=ranks.len() - left {
            walk(
                ranks,
                i + 1,
                left - 1,
                acc + ranks[i],
                offset,
                mu2,
                observed_dev,
                hits,
                total,
            );
        }
    }
    let (mut hits, mut total) = (0, 0);
    walk(ranks, 0, n1, 0, offset, mu2, observed_dev, &mut hits, &mut total);
    (hits, total)
}

pub(crate) fn mwu_sorted(a: &[f64], b: &[f64]) -> TestReport {
    let (n1, n2) = (a.len(), b.len());
    let n = n1 + n2;
    let (ranks_a, all, ties) = doubled_ranks(a, b);
    let offset = (n1 * (n1 + 1)) as i64;
    let r2: u64 = ranks_a.iter().sum();
    let u2 = r2 as i64 - offset;
    let mu2 = (n1 * n2) as i64;
    let dev2 = (u2 - mu2).abs();
    let u = u2 as f64 / 2.0;

    let p_value = if n <= MWU_EXACT_LIMIT {
        let (hits, total) = count_extreme(&all, n1, offset, mu2, dev2);
        hits as f64 / total as f64
    } else {
        let nf = n as f64;
        let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (nf * (nf - 1.0));
        let var = (n1 * n2) as f64 / 12.0 * ((nf + 1.0) - tie_term);
        if var <= 0.0 {
            1.0
        } else {
            let z = ((dev2 as f64 / 2.0) - 0.5).max(0.0) / var.sqrt();
            normal_two_sided(z)
        }
    };
    TestReport {
        p_value: p_value.clamp(0.0, 1.0),
        test_used: TestKind::Mwu,
        n1,
        n2,
        statistic: u,
    }
}

/// Two-sided Mann–Whitney U test. `statistic` is U for the first sample.
pub fn mwu_test(a: &[f64], b: &[f64]) -> Result<TestReport> {
    check_nonempty(a, "first sample")?;
    check_nonempty(b, "second sample")?;
    Ok(mwu_sorted(&sorted_copy(a), &sorted_copy(b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_identical_and_disjoint() {
        let r = ks_test(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let r = ks_test(&[0.0; 4], &[1.0; 4]).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!((r.p_value - 0.036_631_052_707_119_39).abs() < 1e-12);
    }

    #[test]
    fn ks_shifted_grid() {
        let r = ks_test(&[1.0, 2.0, 3.0, 4.0], &[1.5, 2.5, 3.5, 4.5]).unwrap();
        assert_eq!(r.statistic, 0.25);
    }

    #[test]
    fn mwu_small_exact_cases() {
        let r = mwu_test(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 2.0 / 6.0);
        assert_eq!(mwu_test(&[7.0], &[7.0]).unwrap().p_value, 1.0);
        assert_eq!(mwu_test(&[1.0], &[2.0]).unwrap().p_value, 1.0);
    }

    #[test]
    fn mwu_all_tied_large_sample() {
        let r = mwu_test(&[1.0; 20], &[1.0; 20]).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn empirical_dist_matches_vector_ks() {
        let a = [3.0, 1.0, 1.0, 2.0, 5.0];
        let b = [2.0, 2.0, 4.0, 1.0];
        let da = EmpiricalDist::from_values(&a);
        let db = EmpiricalDist::from_values(&b);
        assert_eq!(da.compare(&db), ks_test(&a, &b).unwrap());
        let u = da.union(&db);
        assert_eq!(u.len(), 9);
        assert_eq!(u.expand(), vec![1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn empty_sample_rejected() {
        assert!(ks_test(&[], &[1.0]).is_err());
        assert!(mwu_test(&[1.0], &[]).is_err());
    }
}
