use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regular 2-D evaluation lattice with inclusive endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub resolution: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_range: (-1.5, 1.5),
            y_range: (-1.5, 1.5),
            resolution: 200,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo < hi;
        if !ok(self.x_range) || !ok(self.y_range) {
            return Err(Error::param("grid ranges must be finite with lo < hi"));
        }
        if self.resolution < 2 {
            return Err(Error::param("grid resolution must be >= 2"));
        }
        Ok(())
    }

    pub fn x_at(&self, i: usize) -> f64 {
        lerp(self.x_range, i, self.resolution)
    }

    pub fn y_at(&self, j: usize) -> f64 {
        lerp(self.y_range, j, self.resolution)
    }

    /// Area represented by one lattice point.
    pub fn cell_area(&self) -> f64 {
        let r = (self.resolution - 1) as f64;
        (self.x_range.1 - self.x_range.0) / r * (self.y_range.1 - self.y_range.0) / r
    }
}

fn lerp((lo, hi): (f64, f64), i: usize, res: usize) -> f64 {
    if i + 1 == res {
        hi
    } else {
        lo + (hi - lo) * i as f64 / (res - 1) as f64
    }
}

/// Lattice points `[res^2, 2]`, x varying fastest.
pub fn grid_points(spec: &GridSpec) -> Result<Array2<f64>> {
    spec.validate()?;
    let res = spec.resolution;
    Ok(Array2::from_shape_fn((res * res, 2), |(p, c)| {
        if c == 0 {
            spec.x_at(p % res)
        } else {
            spec.y_at(p / res)
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn two_by_two() {
        let spec = GridSpec {
            x_range: (0.0, 1.0),
            y_range: (0.0, 1.0),
            resolution: 2,
        };
        assert_eq!(grid_points(&spec).unwrap(), array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
    }

    #[test]
    fn default_grid_is_uniform() {
        let pts = grid_points(&GridSpec::default()).unwrap();
        assert_eq!(pts.nrows(), 40_000);
        let xs: Vec<f64> = (0..200).map(|i| pts[[i, 0]]).collect();
        let step = xs[1] - xs[0];
        assert!(xs.windows(2).all(|w| ((w[1] - w[0]) - step).abs() < 1e-12));
        assert_eq!(pts[[199, 0]], 1.5);
        assert_eq!(pts[[39_999, 1]], 1.5);
    }

    #[test]
    fn rejects_degenerate() {
        let mut spec = GridSpec { resolution: 1, ..GridSpec::default() };
        assert!(grid_points(&spec).is_err());
        spec.resolution = 5;
        spec.x_range = (1.0, 1.0);
        assert!(grid_points(&spec).is_err());
    }
}
