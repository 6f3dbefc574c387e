//! Z-test and Welch's t-test for equality of means.

use super::special::{normal_two_sided, student_t_two_sided};
use super::{TestKind, TestReport};
use crate::error::{Error, Result};

/// Sample size, mean and sum of squared deviations of a label sample.
///
/// Constant samples are detected exactly (min == max) so that the degenerate
/// conventions do not depend on rounding in the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub m2: f64,
    pub constant: bool,
}

impl Moments {
    pub fn from_slice(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Moments {
                n,
                mean: 0.0,
                m2: 0.0,
                constant: true,
            };
        }
        let (min, max) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        if min == max {
            return Moments {
                n,
                mean: min,
                m2: 0.0,
                constant: true,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let m2 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        Moments {
            n,
            mean,
            m2,
            constant: false,
        }
    }

    /// Builds moments from shifted running sums (`sum` and `sum_sq` of `value - shift`).
    pub(crate) fn from_sums(n: usize, shift: f64, sum: f64, sum_sq: f64, min: f64, max: f64) -> Self {
        if min == max {
            return Moments {
                n,
                mean: min,
                m2: 0.0,
                constant: true,
            };
        }
        let nf = n as f64;
        Moments {
            n,
            mean: shift + sum / nf,
            m2: (sum_sq - sum * sum / nf).max(0.0),
            constant: false,
        }
    }

    /// Unbiased variance; zero for singletons.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }
}

fn degenerate(a: &Moments, b: &Moments, kind: TestKind) -> Option<TestReport> {
    if a.constant && b.constant {
        let equal = a.mean == b.mean;
        Some(TestReport {
            p_value: if equal { 1.0 } else { 0.0 },
            test_used: kind,
            n1: a.n,
            n2: b.n,
            statistic: if equal { 0.0 } else { f64::INFINITY },
        })
    } else {
        None
    }
}

pub(crate) fn z_from_moments(a: &Moments, b: &Moments) -> TestReport {
    if let Some(r) = degenerate(a, b, TestKind::Z) {
        return r;
    }
    let se2 = a.variance() / a.n as f64 + b.variance() / b.n as f64;
    let z = (a.mean - b.mean) / se2.sqrt();
    TestReport {
        p_value: normal_two_sided(z),
        test_used: TestKind::Z,
        n1: a.n,
        n2: b.n,
        statistic: z,
    }
}

/// Welch's unequal-variance t-test. A singleton side has no variance of its
/// own, so it falls back to Student's pooled test, which borrows the other
/// side's variance: `t = (x - mean) / (s * sqrt(1 + 1/n))` with `n - 1` df.
pub(crate) fn welch_from_moments(a: &Moments, b: &Moments) -> TestReport {
    if let Some(r) = degenerate(a, b, TestKind::StudentT) {
        return r;
    }
    let (se2, df) = if a.n < 2 || b.n < 2 {
        let other = if a.n < 2 { b } else { a };
        (other.variance() * (1.0 + 1.0 / other.n as f64), (other.n - 1) as f64)
    } else {
        let ta = a.variance() / a.n as f64;
        let tb = b.variance() / b.n as f64;
        let se2 = ta + tb;
        let df = se2 * se2 / (ta * ta / (a.n - 1) as f64 + tb * tb / (b.n - 1) as f64);
        (se2, df)
    };
    let t = (a.mean - b.mean) / se2.sqrt();
    TestReport {
        p_value: student_t_two_sided(t, df),
        test_used: TestKind::StudentT,
        n1: a.n,
        n2: b.n,
        statistic: t,
    }
}

fn check_sample(values: &[f64], name: &str) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::SampleTooSmall(format!(
            "{name} has {} observations, need at least 2",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{name} contains non-finite values")));
    }
    Ok(())
}

/// Two-sided Z-test for equal means using sample variances.
pub fn z_test(a: &[f64], b: &[f64]) -> Result<TestReport> {
    check_sample(a, "first sample")?;
    check_sample(b, "second sample")?;
    Ok(z_from_moments(&Moments::from_slice(a), &Moments::from_slice(b)))
}

/// Two-sided Welch t-test.
pub fn t_test(a: &[f64], b: &[f64]) -> Result<TestReport> {
    check_sample(a, "first sample")?;
    check_sample(b, "second sample")?;
    Ok(welch_from_moments(&Moments::from_slice(a), &Moments::from_slice(b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_sequences_give_unit_p() {
        let a: Vec<f64> = (1..=100).map(f64::from).collect();
        let r = z_test(&a, &a).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.statistic, 0.0);
        let r = t_test(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn constant_sample_conventions() {
        let r = t_test(&[0.0; 3], &[1.0; 3]).unwrap();
        assert_eq!(r.p_value, 0.0);
        let r = z_test(&[2.5; 40], &[2.5; 35]).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn too_small_is_an_error() {
        assert!(matches!(t_test(&[1.0], &[1.0, 2.0]), Err(Error::SampleTooSmall(_))));
        assert!(z_test(&[1.0, 2.0], &[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn welch_equal_variances_reduce_to_pooled_df() {
        let r = t_test(&[1., 2., 3., 4., 5.], &[2., 3., 4., 5., 6.]).unwrap();
        assert!((r.statistic.abs() - 1.0).abs() < 1e-15);
        // df = 8, t = 1: scipy.stats.t.sf(1, 8) * 2
        assert!((r.p_value - 0.346_593_507_087_334).abs() < 1e-12);
    }

    #[test]
    fn singleton_borrows_the_other_variance() {
        let a = Moments::from_slice(&[10.0]);
        let b = Moments::from_slice(&[1.0, 2.0, 3.0]);
        let r = welch_from_moments(&a, &b);
        // s^2 = 1, t = (10 - 2) / sqrt(1 + 1/3), df = 2
        let expect = student_t_two_sided(8.0 / (4.0f64 / 3.0).sqrt(), 2.0);
        assert!((r.p_value - expect).abs() < 1e-15);
    }

    #[test]
    fn sums_match_two_pass() {
        let v = [3.0, 4.0, 4.0, 7.0];
        let shift = 4.0;
        let s: f64 = v.iter().map(|x| x - shift).sum();
        let ss: f64 = v.iter().map(|x| (x - shift) * (x - shift)).sum();
        let m = Moments::from_sums(4, shift, s, ss, 3.0, 7.0);
        let d = Moments::from_slice(&v);
        assert_eq!(m.mean, d.mean);
        assert_eq!(m.m2, d.m2);
    }
}
