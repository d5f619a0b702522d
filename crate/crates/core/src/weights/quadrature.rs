/// `ln \int_lo^hi e^{f(t)} dt` by composite Simpson with a log-sum-exp
/// accumulation, so integrands far outside the double range stay usable.
///
/// `rate` is the expected magnitude of `f'`; the rule uses at least eight
/// nodes per unit of `rate * (hi - lo)` and never fewer than 2048 intervals.
pub fn log_simpson(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, rate: f64) -> f64 {
    if hi <= lo {
        return f64::NEG_INFINITY;
    }
    let want = (8.0 * rate.abs() * (hi - lo)).ceil() as usize;
    let n = (want.clamp(2048, 1 << 20) + 1) & !1;
    let h = (hi - lo) / n as f64;
    let terms: Vec<f64> = (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            f(lo + k as f64 * h) + (w * h / 3.0f64).ln()
        })
        .collect();
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}
