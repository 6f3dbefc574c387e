//! Two-sample tests, the label-similarity dispatcher used for splitting and
//! merging, and feature/label correlation strength.

mod correlation;
mod nonparametric;
mod parametric;
pub mod special;

use serde::{Deserialize, Serialize};

pub use correlation::{correlation_strength, eta_squared, r_squared, ColumnView};
pub use nonparametric::{ks_test, mwu_test, EmpiricalDist, MWU_EXACT_LIMIT};
pub use parametric::{t_test, z_test, Moments};

pub(crate) use nonparametric::{ks_from_statistic, ks_gap, mwu_sorted};
pub(crate) use parametric::{welch_from_moments, z_from_moments};

use crate::error::{Error, Result};

/// Sample size above which (on both sides) the Z-test replaces the t-test.
pub const Z_TEST_MIN_EXCLUSIVE: usize = 30;
/// Sample size above which (on both sides) KS replaces Mann–Whitney U.
pub const KS_TEST_MIN_EXCLUSIVE: usize = 2;

/// Which pair of tests compares label samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFamily {
    /// Z-test / Welch t-test, for roughly normal labels.
    Parametric,
    /// Kolmogorov–Smirnov / Mann–Whitney U.
    Nonparametric,
}

impl std::str::FromStr for TestFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parametric" => Ok(TestFamily::Parametric),
            "nonparametric" => Ok(TestFamily::Nonparametric),
            other => Err(Error::invalid(format!("unknown test family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestKind {
    Z,
    StudentT,
    Ks,
    Mwu,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestReport {
    pub p_value: f64,
    pub test_used: TestKind,
    pub n1: usize,
    pub n2: usize,
    pub statistic: f64,
}

/// The test `similarity` runs for samples of sizes `n1` and `n2`.
pub fn dispatch(family: TestFamily, n1: usize, n2: usize) -> TestKind {
    let smaller = n1.min(n2);
    match family {
        TestFamily::Parametric if smaller > Z_TEST_MIN_EXCLUSIVE => TestKind::Z,
        TestFamily::Parametric => TestKind::StudentT,
        TestFamily::Nonparametric if smaller > KS_TEST_MIN_EXCLUSIVE => TestKind::Ks,
        TestFamily::Nonparametric => TestKind::Mwu,
    }
}

/// Probability that two label samples share a mean (parametric) or a
/// distribution (nonparametric).
///
/// Class labels are passed as their integer codes. Under the parametric
/// family a singleton sample is scored with Student's pooled t-test.
pub fn similarity(a: &[f64], b: &[f64], family: TestFamily) -> Result<TestReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::SampleTooSmall("similarity needs nonempty samples".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::invalid("label samples must be finite"));
    }
    let sa = LabelSummary::new(a, family);
    let sb = LabelSummary::new(b, family);
    Ok(sa.compare(&sb))
}

/// Per-sample state the dispatcher needs: moments for the parametric family,
/// the empirical distribution for the nonparametric one.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelSummary {
    Moments(Moments),
    Dist(EmpiricalDist),
}

impl LabelSummary {
    pub fn new(values: &[f64], family: TestFamily) -> Self {
        match family {
            TestFamily::Parametric => LabelSummary::Moments(Moments::from_slice(values)),
            TestFamily::Nonparametric => LabelSummary::Dist(EmpiricalDist::from_values(values)),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            LabelSummary::Moments(m) => m.n,
            LabelSummary::Dist(d) => d.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Runs the dispatched test. Both summaries must come from the same family.
    pub fn compare(&self, other: &LabelSummary) -> TestReport {
        match (self, other) {
            (LabelSummary::Moments(a), LabelSummary::Moments(b)) => compare_moments(a, b),
            (LabelSummary::Dist(a), LabelSummary::Dist(b)) => a.compare(b),
            _ => panic!("label summaries from different test families"),
        }
    }
}

pub(crate) fn compare_moments(a: &Moments, b: &Moments) -> TestReport {
    match dispatch(TestFamily::Parametric, a.n, b.n) {
        TestKind::Z => z_from_moments(a, b),
        _ => welch_from_moments(a, b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> Vec<f64> {
        (0..n).map(|i| (i % 7) as f64).collect()
    }

    #[test]
    fn dispatch_boundaries() {
        use TestFamily::*;
        use TestKind::*;
        let cases = [
            (Parametric, 31, 31, Z),
            (Parametric, 31, 30, StudentT),
            (Parametric, 2, 2, StudentT),
            (Nonparametric, 3, 3, Ks),
            (Nonparametric, 3, 2, Mwu),
            (Nonparametric, 31, 2, Mwu),
        ];
        for (family, n1, n2, expect) in cases {
            assert_eq!(dispatch(family, n1, n2), expect, "{family:?} {n1} {n2}");
            let r = similarity(&sample(n1), &sample(n2), family).unwrap();
            assert_eq!(r.test_used, expect);
        }
    }

    #[test]
    fn similarity_rejects_empty() {
        assert!(similarity(&[], &[1.0], TestFamily::Parametric).is_err());
    }
}
