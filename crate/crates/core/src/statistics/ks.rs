/// Exact one-sample Kolmogorov–Smirnov distance of `samples` against `cdf`.
/// `samples` must be sorted ascending.
pub fn ks_distance(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |acc: f64, (i, &x)| {
        let f = cdf(x);
        let above = (i as f64 + 1.0) / n - f;
        let below = f - i as f64 / n;
        acc.max(above).max(below)
    })
}

/// Asymptotic critical distance at significance `alpha`:
/// `sqrt(-ln(alpha/2) / 2) / sqrt(n)`, about `1.628 / sqrt(n)` at 1%.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}
