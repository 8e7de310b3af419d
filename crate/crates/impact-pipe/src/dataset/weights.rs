//! Inverse-frequency class weighting.

use super::ClassWeights;
use crate::error::{PipeError, Result};

/// Computes per-class loss weights w_c = (n_true + n_false) / (2 * n_c),
/// which equalizes the total loss mass of the two classes and keeps the
/// mean weight at 1.
pub fn class_weights(n_true: usize, n_false: usize) -> Result<ClassWeights> {
    if n_true == 0 || n_false == 0 {
        return Err(PipeError::InvalidParameter(format!(
            "class weights need both classes populated (got {n_true} true, {n_false} false)"
        )));
    }
    let total = (n_true + n_false) as f64;
    Ok(ClassWeights {
        w_true: total / (2.0 * n_true as f64),
        w_false: total / (2.0 * n_false as f64),
    })
}
