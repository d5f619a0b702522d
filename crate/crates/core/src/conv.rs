//! Discrete convolutions on row-major 2-D arrays.
//!
//! Two independent engines live here: a zero-padded FFT convolution for
//! arbitrary kernels, and an exact recursive convolution with the two-sided
//! exponential `e^{-a|t|}`. The latter uses only additions and products of
//! positive numbers, so it keeps full relative accuracy in the far tails,
//! where an FFT result would be dominated by round-off.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Linear "same"-size convolution of an `n1 x n2` array with a kernel of
/// size `(2 k1 + 1) x (2 k2 + 1)` centered at `(k1, k2)`:
///
/// `out[i][j] = sum_{p, q} data[i - p][j - q] * kernel[p + k1][q + k2]`,
/// with `data` treated as zero outside its index range.
pub fn fft_convolve_same(data: &[f64], n1: usize, n2: usize, kernel: &[f64], k1: usize, k2: usize) -> Vec<f64> {
    assert_eq!(data.len(), n1 * n2, "data shape");
    let (m1, m2) = (2 * k1 + 1, 2 * k2 + 1);
    assert_eq!(kernel.len(), m1 * m2, "kernel shape");
    let p1 = (n1 + k1 + 1).next_power_of_two();
    let p2 = (n2 + k2 + 1).next_power_of_two();

    let mut a = vec![Complex64::new(0.0, 0.0); p1 * p2];
    for i in 0..n1 {
        for j in 0..n2 {
            a[i * p2 + j] = Complex64::new(data[i * n2 + j], 0.0);
        }
    }
    let mut b = vec![Complex64::new(0.0, 0.0); p1 * p2];
    for p in 0..m1 {
        let r = (p as i64 - k1 as i64).rem_euclid(p1 as i64) as usize;
        for q in 0..m2 {
            let c = (q as i64 - k2 as i64).rem_euclid(p2 as i64) as usize;
            b[r * p2 + c] = Complex64::new(kernel[p * m2 + q], 0.0);
        }
    }
    let mut planner = FftPlanner::new();
    fft2(&mut planner, &mut a, p1, p2, false);
    fft2(&mut planner, &mut b, p1, p2, false);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    fft2(&mut planner, &mut a, p1, p2, true);
    let scale = 1.0 / (p1 * p2) as f64;
    let mut out = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            out.push(a[i * p2 + j].re * scale);
        }
    }
    out
}

fn fft2(planner: &mut FftPlanner<f64>, buf: &mut [Complex64], p1: usize, p2: usize, inverse: bool) {
    let (rows, cols) = if inverse {
        (planner.plan_fft_inverse(p2), planner.plan_fft_inverse(p1))
    } else {
        (planner.plan_fft_forward(p2), planner.plan_fft_forward(p1))
    };
    for row in buf.chunks_exact_mut(p2) {
        rows.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); p1];
    for j in 0..p2 {
        for i in 0..p1 {
            col[i] = buf[i * p2 + j];
        }
        cols.process(&mut col);
        for i in 0..p1 {
            buf[i * p2 + j] = col[i];
        }
    }
}

/// Cell-integrated two-sided exponential kernel: the weight of a sample at
/// lag `m` cells is `int_{(m - 1/2) h}^{(m + 1/2) h} e^{-a |t|} dt`.
///
/// Returns `(centre, scale, ratio)` so that lag `m >= 1` has weight
/// `scale * ratio^m`.
fn exp_kernel(a: f64, h: f64) -> (f64, f64, f64) {
    let ah = a * h;
    let centre = 2.0 / a * (-(-0.5 * ah).exp_m1());
    let scale = 2.0 * (0.5 * ah).sinh() / a;
    (centre, scale, (-ah).exp())
}

/// `out_i = sum_j data_j int_{cell j} e^{-a |t_i - t|} dt` along one strided line.
fn exp_line(data: &mut [f64], start: usize, stride: usize, n: usize, kernel: (f64, f64, f64), scratch: &mut Vec<f64>) {
    let (centre, scale, r) = kernel;
    scratch.clear();
    scratch.resize(n, 0.0);
    // scratch[i] = sum_{j < i} data_j r^{i - j}
    let mut acc = 0.0;
    for (i, s) in scratch.iter_mut().enumerate() {
        *s = acc;
        acc = (acc + data[start + i * stride]) * r;
    }
    // walk back accumulating sum_{j > i} data_j r^{j - i}
    let mut acc = 0.0;
    for i in (0..n).rev() {
        let idx = start + i * stride;
        let d = data[idx];
        data[idx] = centre * d + scale * (scratch[i] + acc);
        acc = (acc + d) * r;
    }
}

/// In-place separable convolution of an `n1 x n2` array with
/// `e^{-a |x| - b |xi|}`, integrated over grid cells of size `h1 x h2`.
///
/// Exact for piecewise-constant data; all arithmetic is on positive
/// quantities when the data is nonnegative.
pub fn exp_convolve_2d(data: &mut [f64], n1: usize, n2: usize, (a, h1): (f64, f64), (b, h2): (f64, f64)) {
    assert_eq!(data.len(), n1 * n2, "data shape");
    let mut scratch = Vec::new();
    let kb = exp_kernel(b, h2);
    for i in 0..n1 {
        exp_line(data, i * n2, 1, n2, kb, &mut scratch);
    }
    let ka = exp_kernel(a, h1);
    for j in 0..n2 {
        exp_line(data, j, n2, n1, ka, &mut scratch);
    }
}

/// One-dimensional version of [`exp_convolve_2d`].
pub fn exp_convolve_1d(data: &mut [f64], a: f64, h: f64) {
    let n = data.len();
    let mut scratch = Vec::new();
    exp_line(data, 0, 1, n, exp_kernel(a, h), &mut scratch);
}
