//! Point-cloud thinning by iterated local weighted line fitting.

use nalgebra::{Matrix3, SymmetricEigen};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::kdtree::SpatialIndex;

pub const MAX_ITERATIONS: usize = 10;

/// Moves every point onto the principal line of its `h`-neighborhood
/// (Gaussian weights with sigma = h/3) until the largest move is below
/// `1e-3 * h`. The point count is preserved.
pub fn thin_cluster(points: &[Vec3], h: f64) -> Result<Vec<Vec3>> {
    if points.len() < 4 {
        return Err(Error::degenerate("thinning needs at least 4 points"));
    }
    if !(h > 0.0) {
        return Err(Error::degenerate("thinning radius must be positive"));
    }
    let sigma = h / 3.0;
    let inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
    let mut current = points.to_vec();
    for _ in 0..MAX_ITERATIONS {
        let index = SpatialIndex::new(current.clone());
        let mut moved = 0.0f64;
        let next: Vec<Vec3> = current
            .iter()
            .map(|p| {
                let nb = index.within_radius(p, h);
                if nb.len() < 2 {
                    return *p;
                }
                let mut wsum = 0.0;
                let mut mean = Vec3::zeros();
                let weights: Vec<f64> = nb
                    .iter()
                    .map(|&j| (-(current[j] - p).norm_squared() * inv_two_sigma2).exp())
                    .collect();
                for (&j, &w) in nb.iter().zip(&weights) {
                    wsum += w;
                    mean += current[j] * w;
                }
                mean /= wsum;
                let mut cov = Matrix3::zeros();
                for (&j, &w) in nb.iter().zip(&weights) {
                    let d = current[j] - mean;
                    cov += d * d.transpose() * w;
                }
                let eig = SymmetricEigen::new(cov);
                let k = eig.eigenvalues.imax();
                let axis: Vec3 = eig.eigenvectors.column(k).into_owned();
                if eig.eigenvalues[k] <= 0.0 {
                    return *p;
                }
                mean + axis * (p - mean).dot(&axis)
            })
            .collect();
        for (a, b) in current.iter().zip(&next) {
            moved = moved.max((a - b).norm());
        }
        current = next;
        if moved < 1e-3 * h {
            break;
        }
    }
    Ok(current)
}
