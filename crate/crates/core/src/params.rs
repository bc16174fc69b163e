//! Model parameters and their admissible ranges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;

/// Exponents of the dissipative operator `L = lambda0 * A^(delta+1)`, the
/// noise smoothing `Q = A^(-sigma)` and the gradient space `V_theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda0: f64,
    pub delta: f64,
    pub sigma: f64,
    pub theta: f64,
}

impl ModelParams {
    pub fn new(lambda0: f64, delta: f64, sigma: f64, theta: f64) -> Self {
        ModelParams {
            lambda0,
            delta,
            sigma,
            theta,
        }
    }

    /// Dissipation eigenvalue `lambda0 * |k|^(2(delta+1))` as a function of
    /// `|k|^2`.
    pub fn dissipation_eigenvalue(&self, k_norm_sq: f64) -> f64 {
        self.lambda0 * k_norm_sq.powf(self.delta + 1.0)
    }

    /// Noise smoothing eigenvalue `|k|^(-2 sigma)` as a function of `|k|^2`.
    pub fn noise_eigenvalue(&self, k_norm_sq: f64) -> f64 {
        k_norm_sq.powf(-self.sigma)
    }
}

/// Accepts the parameter set iff every range constraint holds on the given
/// lattice dimension; the error names the violated constraint.
pub fn validate_params(p: ModelParams, lat: &LatticeSpec) -> Result<ModelParams> {
    let d = lat.dim() as f64;
    let fail = |name: &str, constraint: String| Error::InvalidParameter {
        name: name.into(),
        constraint,
    };
    for (name, v) in [
        ("lambda0", p.lambda0),
        ("delta", p.delta),
        ("sigma", p.sigma),
        ("theta", p.theta),
    ] {
        if !v.is_finite() {
            return Err(fail(name, "must be finite".into()));
        }
    }
    if p.lambda0 <= 0.0 {
        return Err(fail("lambda0", "must be positive".into()));
    }
    if p.delta <= d / 2.0 {
        return Err(fail("delta", format!("must exceed d/2 = {}", d / 2.0)));
    }
    if p.sigma <= d / 4.0 || p.sigma > p.delta / 2.0 {
        return Err(fail(
            "sigma",
            format!("must lie in (d/4, delta/2] = ({}, {}]", d / 4.0, p.delta / 2.0),
        ));
    }
    let theta_min = (2.0 * p.sigma + 1.0) / (p.delta + 1.0);
    if p.theta < theta_min || p.theta > 1.0 {
        return Err(fail(
            "theta",
            format!("must lie in [(2 sigma + 1)/(delta + 1), 1] = [{theta_min}, 1]"),
        ));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_the_reference_burgers_set() {
        let lat = LatticeSpec::new(1, 8).unwrap();
        let p = ModelParams::new(1.0, 1.0, 0.5, 1.0);
        assert!(validate_params(p, &lat).is_ok());
    }

    #[test]
    fn rejects_delta_at_or_below_half_d() {
        let lat = LatticeSpec::new(1, 8).unwrap();
        let p = ModelParams::new(1.0, 0.4, 0.3, 1.0);
        let err = validate_params(p, &lat).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("delta"), "unexpected message: {msg}");
        assert!(msg.contains("exceed d/2"), "unexpected message: {msg}");
    }

    #[test]
    fn accepts_the_reference_navier_stokes_set() {
        let lat = LatticeSpec::new(2, 4).unwrap();
        let p = ModelParams::new(1.0, 2.0, 1.0, 1.0);
        assert!(validate_params(p, &lat).is_ok());
    }

    #[test]
    fn sigma_and_theta_boundaries() {
        let lat = LatticeSpec::new(1, 4).unwrap();
        // sigma = delta/2 is admissible, sigma just above is not
        assert!(validate_params(ModelParams::new(1.0, 1.0, 0.5, 1.0), &lat).is_ok());
        assert!(validate_params(ModelParams::new(1.0, 1.0, 0.51, 1.0), &lat).is_err());
        // sigma = d/4 is excluded (open endpoint)
        assert!(validate_params(ModelParams::new(1.0, 1.0, 0.25, 1.0), &lat).is_err());
        // theta below (2 sigma + 1)/(delta + 1) is rejected
        assert!(validate_params(ModelParams::new(1.0, 1.0, 0.5, 0.99), &lat).is_err());
        // with smaller sigma the theta range opens up
        assert!(validate_params(ModelParams::new(1.0, 1.0, 0.375, 0.875), &lat).is_ok());
        assert!(validate_params(ModelParams::new(1.0, 1.0, 0.375, 1.1), &lat).is_err());
    }
}
