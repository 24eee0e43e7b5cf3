//! Interaction functions `p(s) = exp(log p(s))` and their parametrisation.
//!
//! Everything downstream works with `log p` only, so a large local time never
//! underflows before it is combined with the other factors of an integrand.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

use crate::error::ModelError;

/// Weights of the cubic interaction `p(s) = exp(-u s^3 - g s^2 - nu s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(default = "default_u")]
    pub u: f64,
    pub g: f64,
    pub nu: f64,
}

fn default_u() -> f64 {
    1.0
}

impl ModelParams {
    pub fn new(u: f64, g: f64, nu: f64) -> Self {
        Self { u, g, nu }
    }

    /// Unit cubic coefficient.
    pub fn cubic(g: f64, nu: f64) -> Self {
        Self { u: 1.0, g, nu }
    }

    /// Free walk `p(s) = exp(-nu s)`.
    pub fn free(nu: f64) -> Self {
        Self { u: 0.0, g: 0.0, nu }
    }

    pub fn with_g_nu(self, g: f64, nu: f64) -> Self {
        Self { g, nu, ..self }
    }

    /// Checks the decay condition that makes `p(s) e^{-s}` integrable against
    /// every polynomial.
    pub fn validate(&self) -> Result<(), ModelError> {
        let Self { u, g, nu } = *self;
        if !(u.is_finite() && g.is_finite() && nu.is_finite()) {
            return Err(ModelError::NonFinite(*self));
        }
        if u < 0.0 {
            return Err(ModelError::NegativeCubic(u));
        }
        if u == 0.0 && g < 0.0 {
            return Err(ModelError::Inadmissible {
                params: *self,
                reason: "u = 0 requires g >= 0",
            });
        }
        if u == 0.0 && g == 0.0 && nu <= -1.0 {
            return Err(ModelError::Inadmissible {
                params: *self,
                reason: "u = g = 0 requires nu > -1",
            });
        }
        Ok(())
    }

    #[inline]
    pub fn log_p(&self, s: f64) -> f64 {
        -s * (self.nu + s * (self.g + s * self.u))
    }

    #[inline]
    pub fn dlog_p(&self, s: f64) -> f64 {
        -(self.nu + s * (2.0 * self.g + 3.0 * self.u * s))
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(u={}, g={}, nu={})", self.u, self.g, self.nu)
    }
}

/// Upper bound `log p(s) <= log_c - rate * s`, valid for every `s >= 0`.
///
/// `rate > -1` always holds for admissible interactions, so `p(s) e^{-s}`
/// decays at least like `exp(-(1 + rate) s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayBound {
    pub rate: f64,
    pub log_c: f64,
}

/// A pluggable interaction, exposed through `log p` and its derivative.
pub trait Interaction: Send + Sync {
    fn log_p(&self, s: f64) -> f64;
    fn dlog_p(&self, s: f64) -> f64;
    fn decay(&self) -> DecayBound;

    /// Cubic parameters when the interaction is of polynomial form. Curve
    /// tracing and moment-derivative identities need them.
    fn params(&self) -> Option<ModelParams> {
        None
    }
}

/// `p(s) = exp(-u s^3 - g s^2 - nu s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolynomialInteraction {
    params: ModelParams,
    decay: DecayBound,
}

impl PolynomialInteraction {
    pub fn model_params(&self) -> ModelParams {
        self.params
    }
}

pub fn make_polynomial_interaction(params: ModelParams) -> Result<PolynomialInteraction, ModelError> {
    params.validate()?;
    let ModelParams { u, g, nu } = params;
    let decay = if u > 0.0 {
        // max over s >= 0 of -u s^3 - g s^2 - (nu - 1) s
        let h = |s: f64| -s * ((nu - 1.0) + s * (g + s * u));
        let disc = 4.0 * g * g - 12.0 * u * (nu - 1.0);
        let mut log_c = 0.0_f64;
        if disc >= 0.0 {
            for root in [
                (-2.0 * g + disc.sqrt()) / (6.0 * u),
                (-2.0 * g - disc.sqrt()) / (6.0 * u),
            ] {
                if root > 0.0 {
                    log_c = log_c.max(h(root));
                }
            }
        }
        DecayBound { rate: 1.0, log_c }
    } else if g > 0.0 {
        let vertex = -(nu - 1.0) / (2.0 * g);
        let log_c = if vertex > 0.0 {
            (nu - 1.0).powi(2) / (4.0 * g)
        } else {
            0.0
        };
        DecayBound { rate: 1.0, log_c }
    } else {
        DecayBound { rate: nu, log_c: 0.0 }
    };
    Ok(PolynomialInteraction { params, decay })
}

impl Interaction for PolynomialInteraction {
    #[inline]
    fn log_p(&self, s: f64) -> f64 {
        self.params.log_p(s)
    }

    #[inline]
    fn dlog_p(&self, s: f64) -> f64 {
        self.params.dlog_p(s)
    }

    fn decay(&self) -> DecayBound {
        self.decay
    }

    fn params(&self) -> Option<ModelParams> {
        Some(self.params)
    }
}

impl<T: Interaction + ?Sized> Interaction for Arc<T> {
    fn log_p(&self, s: f64) -> f64 {
        (**self).log_p(s)
    }
    fn dlog_p(&self, s: f64) -> f64 {
        (**self).dlog_p(s)
    }
    fn decay(&self) -> DecayBound {
        (**self).decay()
    }
    fn params(&self) -> Option<ModelParams> {
        (**self).params()
    }
}

/// Samples the interaction to confirm its reported decay bound on `[0, s_max]`.
pub fn check_decay_bound(inter: &dyn Interaction, s_max: f64, samples: usize) -> bool {
    let DecayBound { rate, log_c } = inter.decay();
    if rate <= -1.0 {
        return false;
    }
    (0..=samples).all(|i| {
        let s = s_max * i as f64 / samples as f64;
        inter.log_p(s) <= log_c - rate * s + 1e-12 * (1.0 + s * s * s)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_log_p_at_one() {
        let inter = make_polynomial_interaction(ModelParams::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(inter.log_p(1.0), -1.0);
    }

    #[test]
    fn p_of_zero_is_one_at_tricritical_weights() {
        let inter = make_polynomial_interaction(ModelParams::cubic(-3.2103, 2.0772)).unwrap();
        assert_eq!(inter.log_p(0.0), 0.0);
    }

    #[test]
    fn rejects_inadmissible() {
        assert!(matches!(
            make_polynomial_interaction(ModelParams::free(-2.0)),
            Err(ModelError::Inadmissible { .. })
        ));
        assert!(matches!(
            make_polynomial_interaction(ModelParams::new(-1.0, 0.0, 0.0)),
            Err(ModelError::NegativeCubic(_))
        ));
        assert!(make_polynomial_interaction(ModelParams::new(0.0, -0.5, 3.0)).is_err());
        assert!(make_polynomial_interaction(ModelParams::new(f64::NAN, 0.0, 0.0)).is_err());
        assert!(make_polynomial_interaction(ModelParams::free(-0.99)).is_ok());
    }

    #[test]
    fn decay_bound_honored() {
        for p in [
            ModelParams::cubic(-3.2103, 2.0772),
            ModelParams::cubic(-4.4, 4.21),
            ModelParams::cubic(2.0, -5.0),
            ModelParams::new(0.0, 0.5, -3.0),
            ModelParams::new(0.0, 2.0, 4.0),
            ModelParams::free(-0.5),
            ModelParams::free(1.0),
        ] {
            let inter = make_polynomial_interaction(p).unwrap();
            assert!(check_decay_bound(&inter, 40.0, 4000), "{p}");
        }
    }

    #[test]
    fn derivative_matches_difference() {
        let p = ModelParams::cubic(-3.0, 1.7);
        let h = 1e-6;
        for s in [0.1, 0.7, 2.3] {
            let fd = (p.log_p(s + h) - p.log_p(s - h)) / (2.0 * h);
            assert!((fd - p.dlog_p(s)).abs() < 1e-8);
        }
    }

    #[test]
    fn json_config_rejects_unknown_keys() {
        let ok: ModelParams = serde_json::from_str(r#"{"u":1,"g":-3,"nu":2}"#).unwrap();
        assert_eq!(ok, ModelParams::cubic(-3.0, 2.0));
        let defaulted: ModelParams = serde_json::from_str(r#"{"g":-3,"nu":2}"#).unwrap();
        assert_eq!(defaulted.u, 1.0);
        assert!(serde_json::from_str::<ModelParams>(r#"{"g":-3,"nu":2,"x":1}"#).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn log_p_decreases_in_nu(g in -5.0..5.0f64, nu in -1.0..5.0f64, dnu in 0.0..2.0f64, s in 0.0..10.0f64) {
                let a = ModelParams::cubic(g, nu);
                let b = ModelParams::cubic(g, nu + dnu);
                let diff = a.log_p(s) - b.log_p(s);
                prop_assert!((diff - s * dnu).abs() <= 1e-9 * (1.0 + s * s * s));
            }
        }
    }
}
