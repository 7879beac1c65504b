//! Activation maps of 2-D models over a regular grid, plus CSV/PGM export.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::cool::AggregateConfig;
use crate::datasets::{grid_points, spiral_point, GridSpec, TwoCircles};
use crate::error::{Error, Result};
use crate::nn::{Head, InitScheme, NetSpec, Network};

#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMap {
    pub spec: GridSpec,
    /// `values[[j, i]]` is the score at `(x_at(i), y_at(j))`.
    pub values: Array2<f64>,
    pub class_id: usize,
    pub head_kind: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapFormat {
    Csv,
    Pgm,
}

/// Class score of `class_id` at every grid point.
pub fn activation_map(model: &Network, spec: &GridSpec, class_id: usize) -> Result<ActivationMap> {
    if class_id >= model.num_classes() {
        return Err(Error::Index {
            index: class_id,
            bound: model.num_classes(),
        });
    }
    Ok(all_class_maps(model, spec)?.swap_remove(class_id))
}

/// One map per class from a single pass over the grid.
pub fn all_class_maps(model: &Network, spec: &GridSpec) -> Result<Vec<ActivationMap>> {
    if model.input_dim() != 2 {
        return Err(Error::param(format!(
            "activation maps need a 2-input model, got input dim {}",
            model.input_dim()
        )));
    }
    let pts = grid_points(spec)?;
    let res = spec.resolution;
    let mut scores = Array2::zeros((pts.nrows(), model.num_classes()));
    for (chunk, mut out) in pts
        .axis_chunks_iter(Axis(0), 4096)
        .zip(scores.axis_chunks_iter_mut(Axis(0), 4096))
    {
        out.assign(&model.class_scores(chunk)?);
    }
    Ok((0..model.num_classes())
        .map(|c| ActivationMap {
            spec: *spec,
            values: Array2::from_shape_fn((res, res), |(j, i)| scores[[j * res + i, c]]),
            class_id: c,
            head_kind: model.head().kind_name().to_string(),
        })
        .collect())
}

/// Untrained network whose output layer is independent logistic units with
/// product inference.
pub fn build_no_competition_net(spec: &NetSpec, omega: usize, seed: u64) -> Result<Network> {
    let cfg = AggregateConfig::new(omega, spec.num_classes)?;
    let spec = NetSpec {
        head: Head::NoCompetition(cfg),
        ..spec.clone()
    };
    Network::init(&spec, InitScheme::Glorot, seed)
}

impl ActivationMap {
    fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.values
            .indexed_iter()
            .map(|((j, i), &v)| (self.spec.x_at(i), self.spec.y_at(j), v))
    }

    /// Mean value over grid points satisfying `region`, `None` if no point does.
    pub fn region_mean(&self, region: impl Fn(f64, f64) -> bool) -> Option<f64> {
        let (sum, n) = self
            .points()
            .filter(|&(x, y, _)| region(x, y))
            .fold((0.0, 0usize), |(s, n), (_, _, v)| (s + v, n + 1));
        (n > 0).then(|| sum / n as f64)
    }

    /// Area of `{value >= level}` restricted to points satisfying `region`.
    pub fn level_set_area(&self, level: f64, region: impl Fn(f64, f64) -> bool) -> f64 {
        let n = self
            .points()
            .filter(|&(x, y, v)| v >= level && region(x, y))
            .count();
        n as f64 * self.spec.cell_area()
    }

    pub fn value_at_corners(&self) -> [f64; 4] {
        let r = self.spec.resolution - 1;
        [
            self.values[[0, 0]],
            self.values[[0, r]],
            self.values[[r, 0]],
            self.values[[r, r]],
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for row in self.values.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.8e}")).collect();
            let _ = writeln!(s, "{}", line.join(","));
        }
        s
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let res = self.spec.resolution;
        let mut out = format!("P5\n{res} {res}\n255\n").into_bytes();
        // Image rows run top to bottom, so the highest y comes first.
        for row in self.values.rows().into_iter().rev() {
            out.extend(row.iter().map(|&v| to_gray(v)));
        }
        out
    }
}

/// `round(255 v)` with halves rounded up, clamped to a byte.
pub fn to_gray(v: f64) -> u8 {
    (255.0 * v.clamp(0.0, 1.0) + 0.5).floor() as u8
}

/// Parses the CSV written by [`ActivationMap::to_csv`].
pub fn parse_map_csv(text: &str) -> Result<Array2<f64>> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(n, line)| {
            line.split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::param(format!("map csv line {}: {e}", n + 1)))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Shape("ragged map csv".into()));
    }
    Array2::from_shape_vec((rows.len(), cols), rows.concat()).map_err(|e| Error::Shape(e.to_string()))
}

pub fn export_map(m: &ActivationMap, path: &Path, format: MapFormat) -> Result<()> {
    let bytes = match format {
        MapFormat::Csv => m.to_csv().into_bytes(),
        MapFormat::Pgm => m.to_pgm(),
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Summary statistics of an inner-class map of a two-circle model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoCircleRegions {
    pub hole_mean: f64,
    pub inner_band_mean: f64,
    /// Area with score >= 0.9 that is not on the inner band.
    pub outside_band_area: f64,
}

pub fn two_circle_regions(inner: &ActivationMap, data: &TwoCircles) -> Result<TwoCircleRegions> {
    let hole = data.hole_radius();
    let hole_mean = inner
        .region_mean(|x, y| (x * x + y * y).sqrt() < hole)
        .ok_or_else(|| Error::param("grid has no points in the hole region"))?;
    let inner_band_mean = inner
        .region_mean(|x, y| data.on_band(data.r_inner, x, y))
        .ok_or_else(|| Error::param("grid has no points on the inner band"))?;
    let outside_band_area = inner.level_set_area(0.9, |x, y| !data.on_band(data.r_inner, x, y));
    Ok(TwoCircleRegions {
        hole_mean,
        inner_band_mean,
        outside_band_area,
    })
}

/// Points along the spiral for `t` evenly spaced in `[t0, t1]`.
pub fn spiral_arm(t0: f64, t1: f64, n: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, 2), |(i, c)| {
        let t = if n > 1 { t0 + (t1 - t0) * i as f64 / (n - 1) as f64 } else { t0 };
        let (x, y) = spiral_point(t);
        if c == 0 {
            x
        } else {
            y
        }
    })
}

/// Mean class score of `model` over the given points.
pub fn mean_score(model: &Network, class_id: usize, points: ArrayView2<f64>) -> Result<f64> {
    if points.nrows() == 0 {
        return Err(Error::param("no points to score"));
    }
    let scores = model.class_scores(points)?;
    if class_id >= scores.ncols() {
        return Err(Error::Index {
            index: class_id,
            bound: scores.ncols(),
        });
    }
    Ok(scores.column(class_id).mean().unwrap_or(0.0))
}

/// Largest pointwise `|a + b - 1|` over two maps on the same grid.
pub fn complement_gap(a: &ActivationMap, b: &ActivationMap) -> Result<f64> {
    if a.values.dim() != b.values.dim() {
        return Err(Error::Shape("maps on different grids".into()));
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x + y - 1.0).abs())
        .fold(0.0, f64::max))
}
