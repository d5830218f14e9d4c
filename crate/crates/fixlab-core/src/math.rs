//! Small numeric helpers shared across the crate.

/// log(sum(exp(x_i))) with the usual max shift so that no intermediate
/// overflows even when entries reach +-700.
pub fn logsumexp(xs: &[f64]) -> f64 {
    debug_assert!(!xs.is_empty());
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// Kahan compensated sum in index order. Used for the deterministic
/// reduction of Monte Carlo replicates: the result depends only on the
/// order of `xs`, never on worker count.
pub fn compensated_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for &x in xs {
        let y = x - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Sample mean and standard error (sample std dev / sqrt(n)).
/// Returns std_error = 0 for fewer than two samples.
pub fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = compensated_sum(xs) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(&xs.iter().map(|&x| (x - mean) * (x - mean)).collect::<Vec<_>>());
    let var = ss / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
