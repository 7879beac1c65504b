use ndarray::{Array2, ArrayView2, Axis, Zip};

use crate::error::{Error, Result};

/// Lower bound applied to probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// In-place, max-shifted softmax over each row.
pub fn softmax_rows(z: &mut Array2<f64>) {
    for mut row in z.axis_iter_mut(Axis(0)) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

fn same_shape(pred: &ArrayView2<f64>, target: &ArrayView2<f64>) -> Result<()> {
    if pred.dim() != target.dim() {
        return Err(Error::Shape(format!(
            "prediction {:?} vs target {:?}",
            pred.dim(),
            target.dim()
        )));
    }
    if pred.nrows() == 0 {
        return Err(Error::Shape("empty batch".into()));
    }
    Ok(())
}

/// Mean over rows of `-sum_j t_j ln p_j`.
pub fn cross_entropy(pred: ArrayView2<f64>, target: ArrayView2<f64>) -> Result<f64> {
    same_shape(&pred, &target)?;
    let mut total = 0.0;
    Zip::from(&pred).and(&target).for_each(|&p, &t| {
        if t != 0.0 {
            total -= t * p.max(PROB_FLOOR).ln();
        }
    });
    Ok(total / pred.nrows() as f64)
}

/// Mean over rows of the summed per-unit binary cross-entropy.
pub fn binary_cross_entropy(pred: ArrayView2<f64>, target: ArrayView2<f64>) -> Result<f64> {
    same_shape(&pred, &target)?;
    let mut total = 0.0;
    Zip::from(&pred).and(&target).for_each(|&p, &t| {
        let p = p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
        total -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
    });
    Ok(total / pred.nrows() as f64)
}
