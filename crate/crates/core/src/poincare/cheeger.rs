use serde::Serialize;

use super::{smallest_eigenpair, WeightPair};
use crate::Result;

/// Best level set found by a sweep cut.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheegerEstimate {
    /// `perimeter_w(A) / min(v(A), v(A^c))` of the best sweep set; an upper
    /// bound for the discrete isoperimetric constant.
    pub h: f64,
    /// Value of the sweep function at which the best cut was taken.
    pub cut_level: f64,
    pub side_masses: (f64, f64),
    pub perimeter: f64,
    /// Eigenvalue of the pencil, for comparing with `h^2 / 4 <= lambda`.
    pub eigenvalue: f64,
}

/// Sweeps the level sets of the Poincaré eigenfunction.
///
/// The perimeter of a node set is the total `w`-weighted length of the cell
/// faces it shares with its complement, i.e. `sum kappa_e h_e` over cut edges.
pub fn estimate_cheeger(pair: &WeightPair) -> Result<CheegerEstimate> {
    let (lambda, u, _, _) = smallest_eigenpair(pair)?;
    let n = u.len();
    let edges = pair.mesh.edges();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, j, _, perp) in edges {
        let c = 0.5 * (pair.w[i] + pair.w[j]) * perp;
        adj[i].push((j, c));
        adj[j].push((i, c));
    }
    let mass: Vec<f64> = pair.v.iter().zip(pair.mesh.weights()).map(|(a, b)| a * b).collect();
    let total: f64 = mass.iter().sum();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| u[a].total_cmp(&u[b]));
    let mut inside = vec![false; n];
    let (mut per, mut m_in) = (0.0, 0.0);
    let mut best = CheegerEstimate {
        h: f64::INFINITY,
        cut_level: f64::NAN,
        side_masses: (0.0, total),
        perimeter: 0.0,
        eigenvalue: lambda,
    };
    for (step, &k) in order.iter().enumerate().take(n - 1) {
        inside[k] = true;
        m_in += mass[k];
        for &(j, c) in &adj[k] {
            per += if inside[j] { -c } else { c };
        }
        // only cut between distinct levels
        if u[order[step + 1]] == u[k] {
            continue;
        }
        let small = m_in.min(total - m_in);
        if small <= 0.0 {
            continue;
        }
        let ratio = per.max(0.0) / small;
        if ratio < best.h {
            best.h = ratio;
            best.cut_level = 0.5 * (u[k] + u[order[step + 1]]);
            best.side_masses = (m_in, total - m_in);
            best.perimeter = per.max(0.0);
        }
    }
    Ok(best)
}
