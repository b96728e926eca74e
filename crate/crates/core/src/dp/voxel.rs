use rayon::prelude::*;

use crate::error::Result;
use crate::mass::SuperposedPair;

/// ∬ dV dV′ / |r − r′| over the unit cube, both points inside it.
///
/// A cell of side `a` carrying mass `m` contributes `G m² SELF_CELL_KERNEL / a`.
pub const SELF_CELL_KERNEL: f64 = 1.882_312_644_389_66;

/// Voxel double sum for Δ on the pair's common lattice: center-to-center
/// 1/|rᵢ − rⱼ| off the diagonal, [`SELF_CELL_KERNEL`]/a on it.
///
/// Only cells where the two members differ enter the O(K²) sum.
pub fn delta_voxel(pair: &SuperposedPair, cells_per_side: usize, g: f64) -> Result<f64> {
    let (ga, gb, _) = pair.common_lattice(cells_per_side)?;
    let a = ga.cell;
    let vol = ga.cell_volume();
    let [nx, ny, nz] = ga.dims;
    let mut cells: Vec<([f64; 3], f64)> = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let idx = ga.index(i, j, k);
                let dm = (ga.densities[idx] - gb.densities[idx]) * vol;
                if dm != 0.0 {
                    cells.push(([i as f64, j as f64, k as f64], dm));
                }
            }
        }
    }
    if cells.is_empty() {
        return Ok(0.0);
    }
    // Rows are summed in index order so the result does not depend on how
    // rayon splits the work.
    let rows: Vec<f64> = (0..cells.len())
        .into_par_iter()
        .with_min_len(64)
        .map(|i| {
            let (pi, mi) = cells[i];
            let mut acc = 0.0;
            for &(pj, mj) in &cells[i + 1..] {
                let dx = pi[0] - pj[0];
                let dy = pi[1] - pj[1];
                let dz = pi[2] - pj[2];
                acc += mj / (dx * dx + dy * dy + dz * dz).sqrt();
            }
            mi * (2.0 * acc + mi * SELF_CELL_KERNEL)
        })
        .collect();
    let sum: f64 = rows.iter().sum();
    // lattice distances are in units of the cell side
    Ok((g * sum / a).max(0.0))
}
