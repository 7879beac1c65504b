use std::f64::consts::{PI, TAU};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LabeledSet;
use crate::error::{Error, Result};

/// Two concentric bands around the origin; class 0 is the inner band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoCircles {
    pub n_total: usize,
    pub r_inner: f64,
    pub r_outer: f64,
    pub band_width: f64,
}

impl Default for TwoCircles {
    fn default() -> Self {
        Self {
            n_total: 1258,
            r_inner: 0.5,
            r_outer: 1.0,
            band_width: 0.1,
        }
    }
}

impl TwoCircles {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_inner > 0.0 && self.r_inner < self.r_outer) {
            return Err(Error::param(format!(
                "need 0 < r_inner < r_outer, got {} and {}",
                self.r_inner, self.r_outer
            )));
        }
        if !(self.band_width >= 0.0 && self.band_width < self.r_outer - self.r_inner) {
            return Err(Error::param(format!(
                "band width {} must be in [0, r_outer - r_inner)",
                self.band_width
            )));
        }
        if self.n_total < 2 {
            return Err(Error::param("need at least one point per circle"));
        }
        Ok(())
    }

    /// Points with radius below this are inside the inner circle's hole.
    pub fn hole_radius(&self) -> f64 {
        self.r_inner - self.band_width
    }

    /// Whether `(x, y)` lies within half a band width of the circle of radius `r`.
    pub fn on_band(&self, r: f64, x: f64, y: f64) -> bool {
        ((x * x + y * y).sqrt() - r).abs() <= self.band_width / 2.0
    }
}

fn ring_point<R: Rng>(rng: &mut R, radius: f64, band: f64) -> (f64, f64) {
    let theta = rng.random_range(0.0..TAU);
    let r = radius + band * (rng.random::<f64>() - 0.5);
    (r * theta.cos(), r * theta.sin())
}

/// Uniform-in-angle, uniform-in-radius samples from two bands. The odd point,
/// if any, goes to the inner circle.
pub fn gen_two_circles(cfg: &TwoCircles, seed: u64) -> Result<LabeledSet> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_outer = cfg.n_total / 2;
    let n_inner = cfg.n_total - n_outer;
    let mut x = Array2::zeros((cfg.n_total, 2));
    let mut labels = Vec::with_capacity(cfg.n_total);
    for i in 0..cfg.n_total {
        let (class, radius) = if i < n_inner { (0, cfg.r_inner) } else { (1, cfg.r_outer) };
        let (px, py) = ring_point(&mut rng, radius, cfg.band_width);
        x[[i, 0]] = px;
        x[[i, 1]] = py;
        labels.push(class);
    }
    LabeledSet::new(x, labels, 2)
}

pub const SPIRAL_A: f64 = 0.3;
pub const SPIRAL_B: f64 = 0.1;
/// Angular length of the spiral, `4 pi`.
pub const SPIRAL_TURNS: f64 = 4.0 * PI;
pub const SPIRAL_CIRCLE_RADIUS: f64 = 1.1;

/// Class 0: circle of radius 1.1. Class 1: logarithmic spiral `a e^{bt}` with
/// `t` uniform in `[0, 4 pi]`, so point density falls off along the arc.
pub fn gen_spiral_in_circle(n_per_class: usize, seed: u64) -> Result<LabeledSet> {
    if n_per_class == 0 {
        return Err(Error::param("n_per_class must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((2 * n_per_class, 2));
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for i in 0..n_per_class {
        let theta = rng.random_range(0.0..TAU);
        x[[i, 0]] = SPIRAL_CIRCLE_RADIUS * theta.cos();
        x[[i, 1]] = SPIRAL_CIRCLE_RADIUS * theta.sin();
        labels.push(0);
    }
    for i in n_per_class..2 * n_per_class {
        let t = rng.random_range(0.0..=SPIRAL_TURNS);
        let (px, py) = spiral_point(t);
        x[[i, 0]] = px;
        x[[i, 1]] = py;
        labels.push(1);
    }
    LabeledSet::new(x, labels, 2)
}

pub fn spiral_point(t: f64) -> (f64, f64) {
    let r = SPIRAL_A * (SPIRAL_B * t).exp();
    (r * t.cos(), r * t.sin())
}

/// `n` points uniform over the disk of `radius` at the origin, one class.
pub fn gen_disk(n: usize, radius: f64, seed: u64) -> Result<LabeledSet> {
    if n == 0 || !(radius.is_finite() && radius > 0.0) {
        return Err(Error::param("gen_disk needs n >= 1 and radius > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((n, 2));
    for i in 0..n {
        let theta = rng.random_range(0.0..TAU);
        let r = radius * rng.random::<f64>().sqrt();
        x[[i, 0]] = r * theta.cos();
        x[[i, 1]] = r * theta.sin();
    }
    LabeledSet::new(x, vec![0; n], 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn radii(set: &LabeledSet, class: usize) -> Vec<f64> {
        set.inputs()
            .rows()
            .into_iter()
            .zip(set.labels())
            .filter(|(_, &y)| y == class)
            .map(|(r, _)| (r[0] * r[0] + r[1] * r[1]).sqrt())
            .collect()
    }

    #[test]
    fn two_circles_counts_and_bands() {
        let cfg = TwoCircles::default();
        let set = gen_two_circles(&cfg, 42).unwrap();
        assert_eq!(set.class_counts(), vec![629, 629]);
        assert!(radii(&set, 0).iter().all(|r| (r - 0.5).abs() <= 0.05 + 1e-12));
        assert!(radii(&set, 1).iter().all(|r| (r - 1.0).abs() <= 0.05 + 1e-12));
        let max_inner = radii(&set, 0).into_iter().fold(0.0, f64::max);
        let min_outer = radii(&set, 1).into_iter().fold(f64::INFINITY, f64::min);
        assert!(min_outer - max_inner > 0.0);

        let odd = gen_two_circles(&TwoCircles { n_total: 7, ..cfg }, 1).unwrap();
        assert_eq!(odd.class_counts(), vec![4, 3]);
    }

    #[test]
    fn zero_band_width_pins_radius() {
        let cfg = TwoCircles {
            band_width: 0.0,
            ..TwoCircles::default()
        };
        let set = gen_two_circles(&cfg, 3).unwrap();
        assert!(radii(&set, 0).iter().all(|r| (r - 0.5).abs() < 1e-9));
    }

    #[test]
    fn two_circles_centered() {
        let set = gen_two_circles(&TwoCircles::default(), 8).unwrap();
        let n = set.len() as f64;
        for col in 0..2 {
            let c = set.inputs().column(col).to_owned();
            let mean = c.sum() / n;
            let std = (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            assert!(mean.abs() < 3.0 * std / n.sqrt(), "col {col} mean {mean}");
        }
    }

    #[test]
    fn bad_radii_rejected() {
        let bad = TwoCircles {
            r_inner: 1.0,
            r_outer: 0.5,
            ..TwoCircles::default()
        };
        assert!(gen_two_circles(&bad, 0).is_err());
        let wide = TwoCircles {
            band_width: 0.6,
            ..TwoCircles::default()
        };
        assert!(gen_two_circles(&wide, 0).is_err());
    }

    #[test]
    fn spiral_geometry() {
        let set = gen_spiral_in_circle(500, 4).unwrap();
        assert_eq!(set.len(), 1000);
        assert!(radii(&set, 0).iter().all(|r| (r - 1.1).abs() < 1e-12));
        let sr = radii(&set, 1);
        let top = 0.3 * (0.4 * PI).exp();
        assert!(sr.iter().all(|&r| (0.3 - 1e-12..=top + 1e-12).contains(&r)));
        assert!((top - 1.053).abs() < 2e-3);
        assert_eq!(spiral_point(0.0), (0.3, 0.0));
    }

    #[test]
    fn spiral_density_decreases_along_arc() {
        // Arc length s(t) = a sqrt(1+b^2)/b (e^{bt} - 1); equal-length bins along
        // the curve should hold strictly fewer points further out.
        let set = gen_spiral_in_circle(20_000, 17).unwrap();
        let c = SPIRAL_A * (1.0 + SPIRAL_B * SPIRAL_B).sqrt() / SPIRAL_B;
        let total = c * ((SPIRAL_B * SPIRAL_TURNS).exp() - 1.0);
        let bins = 8;
        let mut hist = vec![0usize; bins];
        for r in radii(&set, 1) {
            let arc = c * (r / SPIRAL_A - 1.0);
            hist[((arc / total * bins as f64) as usize).min(bins - 1)] += 1;
        }
        assert!(hist.windows(2).all(|w| w[0] > w[1]), "{hist:?}");
    }

    #[test]
    fn generators_are_deterministic() {
        let a = gen_two_circles(&TwoCircles::default(), 5).unwrap();
        assert_eq!(a, gen_two_circles(&TwoCircles::default(), 5).unwrap());
        assert_ne!(a, gen_two_circles(&TwoCircles::default(), 6).unwrap());
        assert_eq!(gen_spiral_in_circle(10, 2).unwrap(), gen_spiral_in_circle(10, 2).unwrap());
        let d = gen_disk(200, 0.8, 1).unwrap();
        assert!(radii(&d, 0).iter().all(|&r| r <= 0.8));
    }
}
