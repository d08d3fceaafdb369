use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrices::{align_permutation, frobenius_distance, TransitionMatrix};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrMode {
    /// Compare entries as given.
    AsIs,
    /// Align rows of the estimate to the reference first.
    PermutationInvariant,
}

/// Mean absolute entrywise deviation in percent:
/// `100 · Σ_ij |T̂_ij - T_ij| / K²`.
pub fn err_metric<S: Real>(t_hat: &TransitionMatrix<S>, t: &TransitionMatrix<S>, mode: ErrMode) -> Result<S> {
    if t_hat.k() != t.k() {
        return Err(Error::Dimension(format!(
            "cannot compare K={} with K={}",
            t_hat.k(),
            t.k()
        )));
    }
    let aligned = match mode {
        ErrMode::AsIs => t_hat.clone(),
        ErrMode::PermutationInvariant => align_permutation(t_hat, t)?.aligned,
    };
    let k = S::lit(t.k() as f64);
    let total = (aligned.matrix() - t.matrix()).abs().sum();
    Ok(total / (k * k) * S::lit(100.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingBound<S: Real = f64> {
    /// `‖T₁ - T*‖_F + ‖T₂ - T*‖_F`
    pub lhs: S,
    /// `‖T₁ - T₂‖_F / √2`
    pub rhs: S,
    pub holds: bool,
}

/// Lower bound on the combined error of any single estimate `T*` against two
/// candidates that the data cannot tell apart.
pub fn mixing_bound<S: Real>(
    t1: &TransitionMatrix<S>,
    t2: &TransitionMatrix<S>,
    t_star: &TransitionMatrix<S>,
) -> Result<MixingBound<S>> {
    let lhs = frobenius_distance(t1.matrix(), t_star.matrix())?
        + frobenius_distance(t2.matrix(), t_star.matrix())?;
    let rhs = frobenius_distance(t1.matrix(), t2.matrix())? / S::lit(2f64.sqrt());
    Ok(MixingBound {
        lhs,
        rhs,
        holds: lhs >= rhs - S::lit(1e-12),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tm(rows: &[[f64; 2]]) -> TransitionMatrix {
        TransitionMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn err_examples() {
        let t = tm(&[[0.8, 0.2], [0.2, 0.8]]);
        let h = tm(&[[0.7, 0.3], [0.3, 0.7]]);
        assert_eq!(err_metric(&t, &t, ErrMode::AsIs).unwrap(), 0.0);
        assert_abs_diff_eq!(err_metric(&h, &t, ErrMode::AsIs).unwrap(), 10.0, epsilon = 1e-12);
        let swapped = t.permute_rows(&[1, 0]);
        assert!(err_metric(&swapped, &t, ErrMode::AsIs).unwrap() > 1.0);
        assert_eq!(err_metric(&swapped, &t, ErrMode::PermutationInvariant).unwrap(), 0.0);
        let t3 = TransitionMatrix::<f64>::identity(3).unwrap();
        assert!(err_metric(&t3, &t, ErrMode::AsIs).is_err());
    }

    #[test]
    fn bound_examples() {
        let i = tm(&[[1.0, 0.0], [0.0, 1.0]]);
        let b = mixing_bound(&i, &i, &i).unwrap();
        assert_eq!((b.lhs, b.rhs, b.holds), (0.0, 0.0, true));
        let j = tm(&[[0.0, 1.0], [1.0, 0.0]]);
        let mid = tm(&[[0.5, 0.5], [0.5, 0.5]]);
        let b = mixing_bound(&i, &j, &mid).unwrap();
        assert_abs_diff_eq!(b.lhs, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.rhs, 2f64.sqrt(), epsilon = 1e-15);
        assert!(b.holds);
    }
}
