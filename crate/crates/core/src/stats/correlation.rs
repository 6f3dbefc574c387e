//! Strength of association between a feature and the label: the coefficient of
//! determination for two continuous variables, the correlation ratio when one
//! side is categorical.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub enum ColumnView<'a> {
    Continuous(&'a [f64]),
    Categorical { codes: &'a [u32], cardinality: usize },
}

impl ColumnView<'_> {
    fn len(&self) -> usize {
        match self {
            ColumnView::Continuous(v) => v.len(),
            ColumnView::Categorical { codes, .. } => codes.len(),
        }
    }
}

fn is_constant(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}

/// Squared Pearson correlation. Zero when either variable is constant.
pub fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 || is_constant(x) || is_constant(y) {
        return 0.0;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
}

/// Correlation ratio η² of `values` grouped by `groups`. Zero when `values`
/// is constant.
pub fn eta_squared(groups: &[u32], values: &[f64], cardinality: usize) -> f64 {
    if values.len() < 2 || is_constant(values) {
        return 0.0;
    }
    let k = cardinality.max(groups.iter().map(|&g| g as usize + 1).max().unwrap_or(0));
    let mut count = vec![0usize; k];
    let mut sum = vec![0.0; k];
    for (&g, &v) in groups.iter().zip(values) {
        count[g as usize] += 1;
        sum[g as usize] += v;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let total: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    if total == 0.0 {
        return 0.0;
    }
    let between: f64 = count
        .iter()
        .zip(&sum)
        .filter(|(&c, _)| c > 0)
        .map(|(&c, &s)| {
            let d = s / c as f64 - mean;
            c as f64 * d * d
        })
        .sum();
    (between / total).clamp(0.0, 1.0)
}

fn codes_as_values(codes: &[u32]) -> Vec<f64> {
    codes.iter().map(|&c| f64::from(c)).collect()
}

/// Correlation strength in `[0, 1]`: η²(y|x) for categorical `x`, η²(x|y) for
/// continuous `x` and categorical `y`, r² otherwise.
pub fn correlation_strength(x: ColumnView<'_>, y: ColumnView<'_>) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "column lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::SampleTooSmall("correlation needs at least 2 rows".into()));
    }
    Ok(match (x, y) {
        (ColumnView::Categorical { codes, cardinality }, ColumnView::Continuous(yv)) => {
            eta_squared(codes, yv, cardinality)
        }
        (ColumnView::Categorical { codes, cardinality }, ColumnView::Categorical { codes: yc, .. }) => {
            eta_squared(codes, &codes_as_values(yc), cardinality)
        }
        (ColumnView::Continuous(xv), ColumnView::Categorical { codes, cardinality }) => {
            eta_squared(codes, xv, cardinality)
        }
        (ColumnView::Continuous(xv), ColumnView::Continuous(yv)) => r_squared(xv, yv),
    })
}
