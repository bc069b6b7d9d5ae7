use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::types::Cell;
use crate::error::{GsgiError, Result};
use crate::rng;

/// Lower end of generated success probabilities; also the clip level around entries.
pub const LOW_SUCCESS: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    Uniform,
    GaussianMixture,
}

impl std::str::FromStr for MapKind {
    type Err = GsgiError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "random" => Ok(MapKind::Uniform),
            "gaussian-mixture" | "gaussian" => Ok(MapKind::GaussianMixture),
            other => Err(GsgiError::InvalidArgument(format!("unknown map kind {other:?}"))),
        }
    }
}

/// Row-major success-probability map.
///
/// `Uniform` draws every cell from U[0.2, 1]. `GaussianMixture` places one
/// ridge along the middle row and one along the middle column, each a
/// Gaussian profile in the distance from the ridge, so the intersection is the
/// global peak. Cells within Manhattan distance 1 of an entry point are then
/// clipped to at most 0.2.
pub fn generate_map(kind: MapKind, rows: usize, cols: usize, entry_points: &[Cell], seed: u64) -> Result<Vec<f64>> {
    if rows < 2 || cols < 2 {
        return Err(GsgiError::Dimensions(format!(
            "map must be at least 2x2, got {rows}x{cols}"
        )));
    }
    let mut rng = rng::stream(seed, "map", 0);
    let mut map = match kind {
        MapKind::Uniform => (0..rows * cols)
            .map(|_| rng.gen_range(LOW_SUCCESS..=1.0))
            .collect::<Vec<_>>(),
        MapKind::GaussianMixture => {
            let (mid_r, mid_c) = ((rows / 2) as f64, (cols / 2) as f64);
            let base = rows.max(cols) as f64 / 4.0;
            let sigma_r = base * rng.gen_range(0.8..1.2);
            let sigma_c = base * rng.gen_range(0.8..1.2);
            let mut m = Vec::with_capacity(rows * cols);
            for r in 0..rows {
                for c in 0..cols {
                    let dr = r as f64 - mid_r;
                    let dc = c as f64 - mid_c;
                    let ridge_row = (-dr * dr / (2.0 * sigma_r * sigma_r)).exp();
                    let ridge_col = (-dc * dc / (2.0 * sigma_c * sigma_c)).exp();
                    m.push(LOW_SUCCESS + (1.0 - LOW_SUCCESS) * 0.5 * (ridge_row + ridge_col));
                }
            }
            m
        }
    };
    for e in entry_points {
        for r in 0..rows {
            for c in 0..cols {
                if r.abs_diff(e.row) + c.abs_diff(e.col) <= 1 {
                    let v = &mut map[r * cols + c];
                    *v = v.min(LOW_SUCCESS);
                }
            }
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::config::corner_cells;

    #[test]
    fn uniform_values_in_range_and_clipped_near_entries() {
        let corners = corner_cells(7, 7);
        let m = generate_map(MapKind::Uniform, 7, 7, &corners, 1).unwrap();
        assert_eq!(m.len(), 49);
        assert!(m.iter().all(|v| (0.2..=1.0).contains(v)));
        for (r, c) in [(0, 0), (0, 1), (1, 0), (0, 6), (1, 6), (6, 5), (5, 0)] {
            assert!(m[r * 7 + c] <= 0.2);
        }
    }

    #[test]
    fn gaussian_peak_at_ridge_intersection() {
        let corners = corner_cells(7, 7);
        let m = generate_map(MapKind::GaussianMixture, 7, 7, &corners, 1).unwrap();
        let max = m.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(m[3 * 7 + 3], max);
    }

    #[test]
    fn deterministic_given_seed() {
        let corners = corner_cells(5, 5);
        for kind in [MapKind::Uniform, MapKind::GaussianMixture] {
            assert_eq!(
                generate_map(kind, 5, 5, &corners, 9).unwrap(),
                generate_map(kind, 5, 5, &corners, 9).unwrap()
            );
        }
    }

    #[test]
    fn rejects_tiny_maps() {
        assert!(matches!(
            generate_map(MapKind::Uniform, 1, 5, &[], 0),
            Err(GsgiError::Dimensions(_))
        ));
    }
}
