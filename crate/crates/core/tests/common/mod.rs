//! Reference implementations written independently of the library: special
//! functions by quadrature, tests from their textbook definitions, and a
//! brute-force split search.

#![allow(dead_code)]

use std::collections::BTreeSet;

use decision_stream::data::{Column, Dataset, FeatureDescriptor, LabelDescriptor, Labels, Schema};
use decision_stream::graph::{DsModel, SplitRule};
use decision_stream::stats::{similarity, TestFamily};
use rand::Rng;

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + h * i as f64;
        s += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    s * h / 3.0
}

/// Lanczos approximation (g = 7, nine terms).
pub fn ln_gamma(x: f64) -> f64 {
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + 7.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Two-sided normal tail, `1 - 2 * integral of the density over [0, |z|]`.
pub fn normal_p(z: f64) -> f64 {
    let z = z.abs().min(40.0);
    if z == 0.0 {
        return 1.0;
    }
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    (1.0 - 2.0 * simpson(phi, 0.0, z, 40_000)).clamp(0.0, 1.0)
}

/// Two-sided Student tail, integrated in the angle `x = sqrt(df) tan(theta)`
/// so the range is bounded: density dx becomes `c sqrt(df) cos^(df-1)`.
pub fn student_p(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let c = (ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0)).exp() / (df * std::f64::consts::PI).sqrt();
    let theta = (t.abs() / df.sqrt()).atan();
    let inner = simpson(|u: f64| u.cos().powf(df - 1.0), 0.0, theta, 200_000);
    (1.0 - 2.0 * c * df.sqrt() * inner).clamp(0.0, 1.0)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sample_var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

fn constant(v: &[f64]) -> bool {
    v.iter().all(|&x| x == v[0])
}

/// Z-test p-value, with the constant-sample convention.
pub fn z_p(a: &[f64], b: &[f64]) -> f64 {
    if constant(a) && constant(b) {
        return if a[0] == b[0] { 1.0 } else { 0.0 };
    }
    let se = (sample_var(a) / a.len() as f64 + sample_var(b) / b.len() as f64).sqrt();
    normal_p((mean(a) - mean(b)) / se)
}

/// Welch t-test p-value, with the constant-sample convention.
pub fn welch_p(a: &[f64], b: &[f64]) -> f64 {
    if constant(a) && constant(b) {
        return if a[0] == b[0] { 1.0 } else { 0.0 };
    }
    let (va, vb) = (sample_var(a) / a.len() as f64, sample_var(b) / b.len() as f64);
    let df = (va + vb).powi(2) / (va * va / (a.len() - 1) as f64 + vb * vb / (b.len() - 1) as f64);
    student_p((mean(a) - mean(b)) / (va + vb).sqrt(), df)
}

/// Largest ECDF gap, evaluated at every pooled value.
pub fn ks_d(a: &[f64], b: &[f64]) -> f64 {
    let cdf = |s: &[f64], v: f64| s.iter().filter(|&&x| x <= v).count() as f64 / s.len() as f64;
    a.iter()
        .chain(b)
        .map(|&v| (cdf(a, v) - cdf(b, v)).abs())
        .fold(0.0, f64::max)
}

/// Kolmogorov tail by the alternating series. Below 0.2 the tail mass is
/// under 1e-12, so 1 is returned.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=200 {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        s += sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
    }
    (2.0 * s).clamp(0.0, 1.0)
}

pub fn ks_p(a: &[f64], b: &[f64]) -> f64 {
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    kolmogorov_q(ks_d(a, b) * (n1 * n2 / (n1 + n2)).sqrt())
}

/// Exact two-sided Mann–Whitney p-value by enumerating every assignment of
/// pooled mid-ranks to the first sample.
pub fn mwu_exact_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    assert!(n <= 20, "enumeration oracle is for tiny samples");
    // Doubled mid-rank: 2 * (#smaller) + (#equal) + 1.
    let rank2: Vec<i64> = pooled
        .iter()
        .map(|&v| {
            let less = pooled.iter().filter(|&&x| x < v).count() as i64;
            let eq = pooled.iter().filter(|&&x| x == v).count() as i64;
            2 * less + eq + 1
        })
        .collect();
    let n1 = a.len();
    let centre2 = (n1 * (n + 1)) as i64;
    let observed: i64 = rank2[..n1].iter().sum();
    let dev = (observed - centre2).abs();
    let (mut hits, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != n1 {
            continue;
        }
        total += 1;
        let r: i64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| rank2[i]).sum();
        if (r - centre2).abs() >= dev {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

type Router = Box<dyn Fn(f64) -> bool>;

/// Exhaustive binary split: every threshold below the largest value and
/// every one-vs-rest category, scored with `similarity` on sorted label
/// vectors. Lowest p wins; ties keep the earliest candidate in (feature,
/// value) order. Returns nothing unless the winner is below `p_lim`.
pub fn brute_force_split(data: &Dataset, family: TestFamily, p_lim: f64) -> Option<(SplitRule, f64)> {
    let labels = data.label_values();
    let mut best: Option<(SplitRule, f64)> = None;
    for f in 0..data.num_features() {
        let col = data.column(f);
        let values: Vec<f64> = (0..data.row_count()).map(|r| col.value(r)).collect();
        let distinct: BTreeSet<u64> = values.iter().map(|v| v.to_bits()).collect();
        let mut distinct: Vec<f64> = distinct.into_iter().map(f64::from_bits).collect();
        distinct.sort_by(f64::total_cmp);
        let candidates: Vec<(SplitRule, Router)> = match col {
            Column::Continuous(_) => distinct[..distinct.len().saturating_sub(1)]
                .iter()
                .map(|&t| {
                    let rule = SplitRule::Threshold { feature: f, value: t };
                    (rule, Box::new(move |x: f64| x <= t) as Box<dyn Fn(f64) -> bool>)
                })
                .collect(),
            Column::Categorical(_) if distinct.len() >= 2 => distinct
                .iter()
                .map(|&c| {
                    let rule = SplitRule::OneVsRest {
                        feature: f,
                        category: c as u32,
                    };
                    (rule, Box::new(move |x: f64| x == c) as Box<dyn Fn(f64) -> bool>)
                })
                .collect(),
            Column::Categorical(_) => Vec::new(),
        };
        for (rule, left) in candidates {
            let l: Vec<f64> = (0..labels.len())
                .filter(|&r| left(values[r]))
                .map(|r| labels[r])
                .collect();
            let r: Vec<f64> = (0..labels.len())
                .filter(|&r| !left(values[r]))
                .map(|r| labels[r])
                .collect();
            let p = similarity(&sorted(l), &sorted(r), family).unwrap().p_value;
            if best.as_ref().is_none_or(|(_, bp)| p < *bp) {
                best = Some((rule, p));
            }
        }
    }
    best.filter(|(_, p)| *p < p_lim)
}

/// Small dataset with tied integer values: up to `max_features` features of
/// mixed kind, class or real labels.
pub fn random_dataset(rng: &mut impl Rng, rows: usize, max_features: usize) -> Dataset {
    let k = rng.random_range(1..=max_features);
    let mut features = Vec::new();
    let mut columns = Vec::new();
    for i in 0..k {
        if rng.random_bool(0.5) {
            let levels = rng.random_range(2..=4u32);
            features.push(FeatureDescriptor::categorical(format!("c{i}"), levels));
            columns.push(Column::Categorical(
                (0..rows).map(|_| rng.random_range(0..levels)).collect(),
            ));
        } else {
            features.push(FeatureDescriptor::continuous(format!("x{i}")));
            let spread = rng.random_range(3..=20);
            columns.push(Column::Continuous(
                (0..rows)
                    .map(|_| f64::from(rng.random_range(0..spread)) / 2.0)
                    .collect(),
            ));
        }
    }
    let (label, labels) = if rng.random_bool(0.5) {
        let classes = rng.random_range(2..=3u32);
        let y = (0..rows).map(|_| rng.random_range(0..classes)).collect();
        (LabelDescriptor::class("y", classes), Labels::Class(y))
    } else {
        let y = (0..rows).map(|_| f64::from(rng.random_range(-20..20)) / 4.0).collect();
        (LabelDescriptor::real("y"), Labels::Real(y))
    };
    Dataset::new(Schema::new(features, label).unwrap(), columns, labels).unwrap()
}

/// Structural problems found by walking the model independently of the
/// library's validator.
pub fn structural_violations(model: &DsModel) -> Vec<String> {
    let mut out = Vec::new();
    let nodes = &model.nodes;
    for (id, node) in nodes {
        for c in &node.children {
            match nodes.get(c) {
                Some(child) if child.parents.contains(id) => {}
                Some(_) => out.push(format!("child {c} of {id} does not list it as parent")),
                None => out.push(format!("dangling child {c} of {id}")),
            }
        }
        for p in &node.parents {
            if !nodes.get(p).is_some_and(|par| par.children.contains(id)) {
                out.push(format!("parent {p} of {id} does not list it as child"));
            }
        }
        match &node.rule {
            None if !node.children.is_empty() => out.push(format!("node {id} has children but no rule")),
            Some(rule) => {
                let arity = match rule {
                    SplitRule::Threshold { .. } | SplitRule::OneVsRest { .. } => 2,
                    SplitRule::CategoryMap { map, .. } => map.iter().map(|&(_, o)| o).collect::<BTreeSet<_>>().len(),
                    SplitRule::RangePartition { targets, .. } => targets.iter().collect::<BTreeSet<_>>().len(),
                };
                if arity != node.children.len() {
                    out.push(format!(
                        "node {id}: rule arity {arity}, {} children",
                        node.children.len()
                    ));
                }
                if node.terminal {
                    out.push(format!("node {id} is terminal but has a rule"));
                }
            }
            None => {}
        }
        if (*id == model.root) != node.parents.is_empty() {
            out.push(format!("node {id}: parent set inconsistent with root status"));
        }
    }
    // Depth-first colouring for cycles and reachability.
    let mut state = std::collections::BTreeMap::new();
    let mut stack = vec![(model.root, false)];
    while let Some((id, done)) = stack.pop() {
        if done {
            state.insert(id, 2);
            continue;
        }
        match state.get(&id) {
            Some(2) => continue,
            Some(1) => continue,
            _ => {}
        }
        state.insert(id, 1);
        stack.push((id, true));
        for c in nodes.get(&id).map(|n| n.children.as_slice()).unwrap_or(&[]) {
            match state.get(c) {
                Some(1) => out.push(format!("cycle through {id} -> {c}")),
                Some(2) => {}
                _ => stack.push((*c, false)),
            }
        }
    }
    if state.len() != nodes.len() {
        out.push(format!("{} of {} nodes reachable", state.len(), nodes.len()));
    }
    out
}
