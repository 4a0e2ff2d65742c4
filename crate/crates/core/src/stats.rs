//! Hypothesis tests for comparing error rates and report distributions:
//! one- and two-sample proportion z-tests, the paired t-test over per-subject
//! rates, and the two-sample Anderson-Darling test with midrank tie handling.
//!
//! All p-values are two-sided. The Anderson-Darling p-value comes from the
//! standard interpolation of the standardized statistic's critical-value
//! table; an exact permutation distribution is available for small samples.

use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("sample must not be empty")]
    EmptySample,
    #[error("need at least {need} pooled observations, got {got}")]
    SampleTooSmall { need: usize, got: usize },
    #[error("{0} permutations exceed the exact-test limit of {MAX_PERMUTATIONS}")]
    PermutationTooLarge(u64),
}

/// Which procedure produced a [`TestResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestMethod {
    OneProportionZ,
    TwoProportionZ,
    PairedT,
    AndersonDarlingMidrank,
    AndersonDarlingPermutation,
}

impl TestMethod {
    pub fn name(self) -> &'static str {
        match self {
            TestMethod::OneProportionZ => "one_prop_z",
            TestMethod::TwoProportionZ => "two_prop_z",
            TestMethod::PairedT => "paired_t",
            TestMethod::AndersonDarlingMidrank => "anderson_darling_midrank",
            TestMethod::AndersonDarlingPermutation => "anderson_darling_permutation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
    pub method: TestMethod,
    /// Set when the inputs left the statistic without a proper sampling
    /// distribution (zero variance, all observations tied, …); the p-value
    /// is then the documented convention rather than a computed tail.
    pub degenerate: bool,
}

/// Two-sided tail probability of a standard normal draw exceeding |z|.
fn normal_two_sided(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// z-test of H0: success probability = `p0`, given `k` successes in `n`
/// trials. Two-sided, normal approximation with the null variance.
pub fn prop_test_one(k: u64, n: u64, p0: f64) -> Result<TestResult, StatsError> {
    if n == 0 {
        return Err(StatsError::BadInput("n must be at least 1".into()));
    }
    if k > n {
        return Err(StatsError::BadInput(format!("k = {k} exceeds n = {n}")));
    }
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(StatsError::BadInput(format!("p0 = {p0} outside (0, 1)")));
    }
    let p_hat = k as f64 / n as f64;
    let se = (p0 * (1.0 - p0) / n as f64).sqrt();
    let z = (p_hat - p0) / se;
    Ok(TestResult {
        statistic: z,
        p_value: normal_two_sided(z),
        n1: n as usize,
        n2: 0,
        method: TestMethod::OneProportionZ,
        degenerate: false,
    })
}

/// Pooled two-proportion z-test of H0: p1 = p2, two-sided. Degenerate pooled
/// proportions (all successes or all failures, hence equal proportions by
/// construction) return z = 0, p = 1.
pub fn two_prop_test(k1: u64, n1: u64, k2: u64, n2: u64) -> Result<TestResult, StatsError> {
    if n1 == 0 || n2 == 0 {
        return Err(StatsError::BadInput(
            "both sample sizes must be at least 1".into(),
        ));
    }
    if k1 > n1 || k2 > n2 {
        return Err(StatsError::BadInput(format!(
            "successes exceed trials ({k1}/{n1}, {k2}/{n2})"
        )));
    }
    let p1 = k1 as f64 / n1 as f64;
    let p2 = k2 as f64 / n2 as f64;
    let pooled = (k1 + k2) as f64 / (n1 + n2) as f64;
    let var = pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64);
    let (z, degenerate) = if var == 0.0 {
        // Pooled proportion 0 or 1 forces p1 = p2; no evidence either way.
        (0.0, true)
    } else {
        ((p1 - p2) / var.sqrt(), false)
    };
    Ok(TestResult {
        statistic: z,
        p_value: normal_two_sided(z),
        n1: n1 as usize,
        n2: n2 as usize,
        method: TestMethod::TwoProportionZ,
        degenerate,
    })
}

/// Paired t-test on per-subject rate differences `a_i - b_i`. The statistic
/// is positive when `a` runs higher than `b`. Zero-variance differences have
/// no t distribution: all-zero differences give p = 1, a constant nonzero
/// difference gives p = 0, both flagged degenerate.
pub fn paired_rate_test(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(StatsError::SampleTooSmall { need: 2, got: n });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::BadInput("non-finite rate".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    // Differences that are constant up to floating-point rounding have no
    // usable variance; compare against the rounding floor of their scale.
    let scale = diffs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if var <= (8.0 * f64::EPSILON * scale).powi(2) {
        let (t, p) = if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (mean.signum() * f64::INFINITY, 0.0)
        };
        return Ok(TestResult {
            statistic: t,
            p_value: p,
            n1: n,
            n2: n,
            method: TestMethod::PairedT,
            degenerate: true,
        });
    }
    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n as f64 - 1.0)
        .map_err(|e| StatsError::BadInput(e.to_string()))?;
    let p = 2.0 * dist.cdf(-t.abs());
    Ok(TestResult {
        statistic: t,
        p_value: p.clamp(0.0, 1.0),
        n1: n,
        n2: n,
        method: TestMethod::PairedT,
        degenerate: false,
    })
}

/// Upper bound on enumerated assignments for the exact permutation p-value.
pub const MAX_PERMUTATIONS: u64 = 200_000;

const AD_SIG_LEVELS: [f64; 7] = [0.25, 0.10, 0.05, 0.025, 0.01, 0.005, 0.001];
// Critical values of the standardized two-sample statistic at the levels
// above: the interpolation coefficients b0 + b1/sqrt(m) + b2/m at m = 1.
const AD_CRITICAL: [f64; 7] = [
    0.675 + -0.245 + -0.105,
    1.281 + 0.250 + -0.305,
    1.645 + 0.678 + -0.362,
    1.960 + 1.149 + -0.391,
    2.326 + 1.822 + -0.396,
    2.573 + 2.364 + -0.345,
    3.085 + 3.615 + -0.154,
];

/// Tie-adjusted two-sample Anderson-Darling statistic (the k-sample midrank
/// form at k = 2), computed over the distinct values of the pooled sample.
/// `n1` is the size of the first sample; `pooled` holds sample 1 followed by
/// sample 2 and `member1[i]` says whether `pooled[i]` belongs to sample 1.
fn a2_midrank(pooled: &[f64], member1: &[bool]) -> f64 {
    let n_total = pooled.len() as f64;
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].partial_cmp(&pooled[j]).expect("finite values"));

    let n1 = member1.iter().filter(|&&m| m).count() as f64;
    let n2 = n_total - n1;

    let mut a2 = 0.0;
    let mut below_pool = 0.0; // pooled observations strictly below the tie group
    let mut below = [0.0, 0.0]; // per-sample observations strictly below
    let mut idx = 0;
    while idx < order.len() {
        // Gather the tie group of equal values.
        let value = pooled[order[idx]];
        let mut tie = [0.0, 0.0];
        let mut len = 0.0;
        while idx < order.len() && pooled[order[idx]] == value {
            let s = usize::from(!member1[order[idx]]);
            tie[s] += 1.0;
            len += 1.0;
            idx += 1;
        }
        let b_mid = below_pool + len / 2.0;
        let denom = b_mid * (n_total - b_mid) - n_total * len / 4.0;
        if denom > 0.0 {
            for (s, n_s) in [(0usize, n1), (1usize, n2)] {
                let m_mid = below[s] + tie[s] / 2.0;
                let num = (n_total * m_mid - n_s * b_mid).powi(2);
                a2 += len / n_total * num / denom / n_s;
            }
        }
        below_pool += len;
        below[0] += tie[0];
        below[1] += tie[1];
    }
    a2 * (n_total - 1.0) / n_total
}

/// Variance of the k-sample statistic under the null (k = 2 here); depends
/// only on the sample sizes.
fn a2_variance(n1: usize, n2: usize) -> f64 {
    let k = 2.0;
    let n = (n1 + n2) as f64;
    let big_h = 1.0 / n1 as f64 + 1.0 / n2 as f64;
    let little_h: f64 = (1..n1 + n2).map(|i| 1.0 / i as f64).sum();
    let mut g = 0.0;
    for i in 1..(n1 + n2 - 1) {
        for j in (i + 1)..(n1 + n2) {
            g += 1.0 / ((n - i as f64) * j as f64);
        }
    }
    let a = (4.0 * g - 6.0) * (k - 1.0) + (10.0 - 6.0 * g) * big_h;
    let b =
        (2.0 * g - 4.0) * k * k + 8.0 * little_h * k + (2.0 * g - 14.0 * little_h - 4.0) * big_h
            - 8.0 * little_h
            + 4.0 * g
            - 6.0;
    let c = (6.0 * little_h + 2.0 * g - 2.0) * k * k
        + (4.0 * little_h - 4.0 * g + 6.0) * k
        + (2.0 * little_h - 6.0) * big_h
        + 4.0 * little_h;
    let d = (2.0 * little_h + 6.0) * k * k - 4.0 * little_h * k;
    (a * n.powi(3) + b * n * n + c * n + d) / ((n - 1.0) * (n - 2.0) * (n - 3.0))
}

/// Least-squares quadratic through the (critical value, ln significance)
/// table, evaluated at `t`: the standard interpolation for the p-value.
fn ad_interpolated_p(t: f64) -> f64 {
    if t < AD_CRITICAL[0] {
        return AD_SIG_LEVELS[0];
    }
    if t > AD_CRITICAL[6] {
        return AD_SIG_LEVELS[6];
    }
    // Normal equations for ln(alpha) = c0 + c1 x + c2 x².
    let mut moments = [0.0; 5];
    let mut rhs = [0.0; 3];
    for (&x, &sig) in AD_CRITICAL.iter().zip(&AD_SIG_LEVELS) {
        let y = sig.ln();
        let mut xp = 1.0;
        for m in &mut moments {
            *m += xp;
            xp *= x;
        }
        rhs[0] += y;
        rhs[1] += y * x;
        rhs[2] += y * x * x;
    }
    let mut m = [
        [moments[0], moments[1], moments[2], rhs[0]],
        [moments[1], moments[2], moments[3], rhs[1]],
        [moments[2], moments[3], moments[4], rhs[2]],
    ];
    // Gaussian elimination with partial pivoting on the 3×3 system.
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
            .unwrap();
        m.swap(col, pivot);
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / m[col][col];
                let pivot_row = m[col];
                for (dst, src) in m[row][col..4].iter_mut().zip(&pivot_row[col..4]) {
                    *dst -= f * src;
                }
            }
        }
    }
    let c = [m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]];
    (c[0] + c[1] * t + c[2] * t * t).exp().clamp(0.0, 1.0)
}

fn combination_count(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut out: u64 = 1;
    for i in 0..k {
        out = out.saturating_mul(n - i) / (i + 1);
    }
    out
}

/// Exact permutation tail: the fraction of equally likely assignments of the
/// pooled values into samples of the observed sizes whose statistic is at
/// least the observed one.
fn ad_permutation_p(pooled: &[f64], n1: usize, observed: f64) -> Result<f64, StatsError> {
    let n = pooled.len();
    let total = combination_count(n as u64, n1 as u64);
    if total > MAX_PERMUTATIONS {
        return Err(StatsError::PermutationTooLarge(total));
    }
    let mut member = vec![false; n];
    let mut chosen: Vec<usize> = (0..n1).collect();
    let mut at_least = 0u64;
    loop {
        member.iter_mut().for_each(|m| *m = false);
        for &i in &chosen {
            member[i] = true;
        }
        if a2_midrank(pooled, &member) >= observed - 1e-12 {
            at_least += 1;
        }
        // Advance to the next index combination in lexicographic order.
        let mut pos = n1;
        loop {
            if pos == 0 {
                return Ok(at_least as f64 / total as f64);
            }
            pos -= 1;
            if chosen[pos] != pos + n - n1 {
                break;
            }
        }
        chosen[pos] += 1;
        for i in pos + 1..n1 {
            chosen[i] = chosen[i - 1] + 1;
        }
    }
}

/// Two-sample Anderson-Darling test with midrank tie adjustment. The
/// statistic is the standardized form (A² minus its null mean, over the null
/// standard deviation); it is symmetric in the two samples. With
/// `exact = false` the p-value interpolates the published critical-value
/// table (capped to its [0.001, 0.25] range); with `exact = true` the full
/// permutation distribution is enumerated, which requires small samples.
pub fn anderson_darling_2(x: &[f64], y: &[f64], exact: bool) -> Result<TestResult, StatsError> {
    if x.is_empty() || y.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let n = x.len() + y.len();
    if n < 4 {
        return Err(StatsError::SampleTooSmall { need: 4, got: n });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::BadInput("non-finite observation".into()));
    }
    let mut pooled: Vec<f64> = Vec::with_capacity(n);
    pooled.extend_from_slice(x);
    pooled.extend_from_slice(y);
    let member1: Vec<bool> = (0..n).map(|i| i < x.len()).collect();

    let a2 = a2_midrank(&pooled, &member1);
    let sigma = a2_variance(x.len(), y.len()).sqrt();
    let t = (a2 - 1.0) / sigma;
    let degenerate = pooled.iter().all(|&v| v == pooled[0]);

    let (p, method) = if exact {
        (
            ad_permutation_p(&pooled, x.len(), a2)?,
            TestMethod::AndersonDarlingPermutation,
        )
    } else {
        (ad_interpolated_p(t), TestMethod::AndersonDarlingMidrank)
    };
    Ok(TestResult {
        statistic: t,
        p_value: p,
        n1: x.len(),
        n2: y.len(),
        method,
        degenerate,
    })
}
