//! Binary consensus statistics and the scalar conversions between inverse
//! mixture proportions, inverse noise rates and noise rates.
//!
//! Binary parameters use `gamma = P(Y = +1)`, `e₊ = P(Ỹ = -1 | Y = +1)` and
//! `e₋ = P(Ỹ = +1 | Y = -1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// The three statistics that determine the joint of two exchangeable binary
/// noisy labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryStats<S: Real = f64> {
    /// `P(Ỹ = +1)`
    pub posterior: S,
    /// `P(Ỹ₁ = Ỹ₂ = +1)`
    pub pos_consensus: S,
    /// `P(Ỹ₁ = Ỹ₂ = -1)`
    pub neg_consensus: S,
}

impl<S: Real> BinaryStats<S> {
    pub fn max_abs_diff(&self, other: &Self) -> S {
        (self.posterior - other.posterior)
            .abs()
            .max((self.pos_consensus - other.pos_consensus).abs())
            .max((self.neg_consensus - other.neg_consensus).abs())
    }
}

pub fn binary_stats<S: Real>(gamma: S, e_plus: S, e_minus: S) -> BinaryStats<S> {
    let one = S::one();
    let keep_pos = one - e_plus;
    let keep_neg = one - e_minus;
    BinaryStats {
        posterior: gamma * keep_pos + (one - gamma) * e_minus,
        pos_consensus: gamma * keep_pos * keep_pos + (one - gamma) * e_minus * e_minus,
        neg_consensus: gamma * e_plus * e_plus + (one - gamma) * keep_neg * keep_neg,
    }
}

/// All binary rates linked by the mixture-proportion conversions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpeRates<S: Real = f64> {
    pub pi_tilde_minus: S,
    pub pi_tilde_plus: S,
    /// `P(Y = +1 | Ỹ = -1)`
    pub pi_minus: S,
    /// `P(Y = -1 | Ỹ = +1)`
    pub pi_plus: S,
    /// `P(Ỹ = +1 | Y = -1)`
    pub e_minus: S,
    /// `P(Ỹ = -1 | Y = +1)`
    pub e_plus: S,
    /// `P(Ỹ = +1)`
    pub p_tilde: S,
}

impl<S: Real> MpeRates<S> {
    /// Computes every rate from the forward model by Bayes' rule.
    pub fn from_binary(gamma: S, e_plus: S, e_minus: S) -> Result<Self> {
        let one = S::one();
        let p_tilde = gamma * (one - e_plus) + (one - gamma) * e_minus;
        if p_tilde <= S::zero() || p_tilde >= one {
            return Err(Error::DegenerateClass(format!(
                "P(noisy = +1) = {p_tilde} leaves an empty noisy class"
            )));
        }
        let pi_plus = (one - gamma) * e_minus / p_tilde;
        let pi_minus = gamma * e_plus / (one - p_tilde);
        let (pi_tilde_minus, pi_tilde_plus) = mpe_inverse(pi_minus, pi_plus)?;
        Ok(Self {
            pi_tilde_minus,
            pi_tilde_plus,
            pi_minus,
            pi_plus,
            e_minus,
            e_plus,
            p_tilde,
        })
    }
}

/// Inverse mixture proportions to inverse noise rates:
/// `π₋ = π̃₋(1 - π̃₊) / (1 - π̃₋π̃₊)` and symmetrically for `π₊`.
pub fn mpe_forward<S: Real>(pi_tilde_minus: S, pi_tilde_plus: S) -> Result<(S, S)> {
    let denom = S::one() - pi_tilde_minus * pi_tilde_plus;
    if denom <= S::zero() {
        return Err(Error::SingularConversion(format!(
            "pi_tilde_minus * pi_tilde_plus = {} >= 1",
            pi_tilde_minus * pi_tilde_plus
        )));
    }
    Ok((
        pi_tilde_minus * (S::one() - pi_tilde_plus) / denom,
        pi_tilde_plus * (S::one() - pi_tilde_minus) / denom,
    ))
}

/// Inverse noise rates to inverse mixture proportions:
/// `π̃₋ = π₋ / (1 - π₊)`, `π̃₊ = π₊ / (1 - π₋)`.
pub fn mpe_inverse<S: Real>(pi_minus: S, pi_plus: S) -> Result<(S, S)> {
    let one = S::one();
    if pi_plus >= one || pi_minus >= one {
        return Err(Error::SingularConversion(format!(
            "inverse noise rates ({pi_minus}, {pi_plus}) must both be below 1"
        )));
    }
    Ok((pi_minus / (one - pi_plus), pi_plus / (one - pi_minus)))
}

/// Inverse noise rates and `p̃ = P(Ỹ = +1)` to noise rates `(e₋, e₊)`.
pub fn mpe_noise_rates<S: Real>(pi_minus: S, pi_plus: S, p_tilde: S) -> Result<(S, S)> {
    let one = S::one();
    let mass_neg = pi_plus * p_tilde + (one - pi_minus) * (one - p_tilde);
    let mass_pos = (one - pi_plus) * p_tilde + pi_minus * (one - p_tilde);
    if mass_neg <= S::zero() {
        return Err(Error::DegenerateClass("P(Y = -1) = 0".into()));
    }
    if mass_pos <= S::zero() {
        return Err(Error::DegenerateClass("P(Y = +1) = 0".into()));
    }
    Ok((
        pi_plus * p_tilde / mass_neg,
        pi_minus * (one - p_tilde) / mass_pos,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn stats_examples() {
        let s = binary_stats(0.7, 0.2, 0.2);
        assert_abs_diff_eq!(s.posterior, 0.62, epsilon = 1e-12);
        assert_abs_diff_eq!(s.pos_consensus, 0.46, epsilon = 1e-12);
        assert_abs_diff_eq!(s.neg_consensus, 0.22, epsilon = 1e-12);
        assert_eq!(
            binary_stats(1.0, 0.0, 0.0),
            BinaryStats {
                posterior: 1.0,
                pos_consensus: 1.0,
                neg_consensus: 0.0
            }
        );
    }

    #[test]
    fn published_alternative_parameters() {
        let s = binary_stats(0.8, 0.242, 0.07);
        assert_abs_diff_eq!(s.posterior, 0.6204, epsilon = 1e-4);
        assert_abs_diff_eq!(s.pos_consensus, 0.4606, epsilon = 1e-4);
        assert_abs_diff_eq!(s.neg_consensus, 0.2198, epsilon = 1e-4);
        assert!(s.max_abs_diff(&binary_stats(0.7, 0.2, 0.2)) < 1e-3);
    }

    #[test]
    fn forward_examples() {
        assert_eq!(mpe_forward(0.0, 0.0).unwrap(), (0.0, 0.0));
        let (m, p) = mpe_forward(0.25, 0.5).unwrap();
        assert_abs_diff_eq!(m, 1.0 / 7.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p, 3.0 / 7.0, epsilon = 1e-15);
        assert!(matches!(
            mpe_forward(1.0, 1.0),
            Err(Error::SingularConversion(_))
        ));
    }

    #[test]
    fn noise_rate_examples() {
        assert_eq!(mpe_noise_rates(0.0, 0.0, 0.3).unwrap(), (0.0, 0.0));
        let (em, ep) = mpe_noise_rates(0.2, 0.3, 0.5).unwrap();
        assert_abs_diff_eq!(em, 0.15 / 0.55, epsilon = 1e-15);
        assert_abs_diff_eq!(ep, 0.10 / 0.45, epsilon = 1e-15);
        assert!(matches!(
            mpe_noise_rates(1.0, 1.0, 1.0),
            Err(Error::DegenerateClass(_))
        ));
    }

    #[test]
    fn rates_from_binary_close_the_loop() {
        let r = MpeRates::from_binary(0.6, 0.1, 0.3).unwrap();
        let (em, ep) = mpe_noise_rates(r.pi_minus, r.pi_plus, r.p_tilde).unwrap();
        assert_abs_diff_eq!(em, 0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(ep, 0.1, epsilon = 1e-14);
        let (m, p) = mpe_forward(r.pi_tilde_minus, r.pi_tilde_plus).unwrap();
        assert_abs_diff_eq!(m, r.pi_minus, epsilon = 1e-14);
        assert_abs_diff_eq!(p, r.pi_plus, epsilon = 1e-14);
    }
}
