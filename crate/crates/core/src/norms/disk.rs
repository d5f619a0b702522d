use num_complex::Complex64;
use rayon::prelude::*;

use crate::conv::fft_convolve_same;
use crate::tfcore::Grid2D;
use crate::Result;

/// Grid offsets inside the open unit disk, stored row by row: for every row
/// offset `p` the columns `-q..=q` are inside.
#[derive(Debug, Clone)]
pub struct DiskStencil {
    pub rows: Vec<(i64, i64)>,
    pub count: usize,
    /// `count * hx * hxi`, the discrete disk area.
    pub area: f64,
}

impl DiskStencil {
    pub fn new(grid: &Grid2D) -> Self {
        let (hx, hxi) = (grid.hx(), grid.hxi());
        let pmax = (1.0 / hx).ceil() as i64;
        let mut rows = Vec::new();
        let mut count = 0;
        for p in -pmax..=pmax {
            let dx = p as f64 * hx;
            let rem = 1.0 - dx * dx;
            if rem <= 0.0 {
                continue;
            }
            // largest q with (q hxi)^2 < rem
            let mut q = (rem.sqrt() / hxi).floor() as i64;
            while q >= 0 && (q as f64 * hxi).powi(2) >= rem {
                q -= 1;
            }
            if q >= 0 {
                rows.push((p, q));
                count += (2 * q + 1) as usize;
            }
        }
        Self { rows, count, area: count as f64 * hx * hxi }
    }

    fn indicator(&self) -> (Vec<f64>, usize, usize) {
        let k1 = self.rows.iter().map(|r| r.0.unsigned_abs() as usize).max().unwrap_or(0);
        let k2 = self.rows.iter().map(|r| r.1 as usize).max().unwrap_or(0);
        let m2 = 2 * k2 + 1;
        let mut ker = vec![0.0; (2 * k1 + 1) * m2];
        for &(p, q) in &self.rows {
            let r = (p + k1 as i64) as usize;
            for c in (k2 as i64 - q)..=(k2 as i64 + q) {
                ker[r * m2 + c as usize] = 1.0;
            }
        }
        (ker, k1, k2)
    }
}

/// `(|F|^2 * 1_{B_1})(tau)` at every node from the squared modulus, by
/// row prefix sums over the disk stencil. Values outside the grid count as zero.
pub fn ball_energy(grid: &Grid2D, power: &[f64]) -> Result<Vec<f64>> {
    if power.len() != grid.len() {
        return Err(crate::Error::GridMismatch(format!("{} values for {} nodes", power.len(), grid.len())));
    }
    let disk = DiskStencil::new(grid);
    let n2 = grid.nxi;
    let prefix: Vec<Vec<f64>> = power
        .chunks_exact(n2)
        .map(|row| {
            let mut p = Vec::with_capacity(n2 + 1);
            let mut acc = 0.0;
            p.push(0.0);
            for v in row {
                acc += v;
                p.push(acc);
            }
            p
        })
        .collect();
    let area = grid.hx() * grid.hxi();
    let out: Vec<Vec<f64>> = (0..grid.nx)
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![0.0; n2];
            for &(p, q) in &disk.rows {
                let r = i as i64 + p;
                if r < 0 || r >= grid.nx as i64 {
                    continue;
                }
                let pre = &prefix[r as usize];
                for (j, a) in acc.iter_mut().enumerate() {
                    let lo = (j as i64 - q).max(0) as usize;
                    let hi = ((j as i64 + q).min(n2 as i64 - 1) + 1) as usize;
                    *a += pre[hi] - pre[lo];
                }
            }
            acc.iter_mut().for_each(|a| *a *= area);
            acc
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}

/// Same quantity as [`ball_energy`] through a zero-padded FFT convolution
/// with the disk indicator; an independent cross-check.
pub fn ball_energy_fft(grid: &Grid2D, power: &[f64]) -> Result<Vec<f64>> {
    if power.len() != grid.len() {
        return Err(crate::Error::GridMismatch(format!("{} values for {} nodes", power.len(), grid.len())));
    }
    let (ker, k1, k2) = DiskStencil::new(grid).indicator();
    let area = grid.hx() * grid.hxi();
    Ok(fft_convolve_same(power, grid.nx, grid.nxi, &ker, k1, k2).into_iter().map(|v| v * area).collect())
}

/// `(G * 1_{B_1})(tau)` for a complex field `G`.
pub fn ball_sum_complex(grid: &Grid2D, values: &[Complex64]) -> Result<Vec<Complex64>> {
    let re: Vec<f64> = values.iter().map(|z| z.re).collect();
    let im: Vec<f64> = values.iter().map(|z| z.im).collect();
    let (a, b) = (ball_energy(grid, &re)?, ball_energy(grid, &im)?);
    Ok(a.into_iter().zip(b).map(|(r, i)| Complex64::new(r, i)).collect())
}
