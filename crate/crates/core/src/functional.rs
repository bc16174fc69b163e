//! Test functionals `f : H -> R` for semigroup averages.
//!
//! The nonlinear estimators require bounded measurable `f`; the entropy
//! checks additionally need a positive lower bound. The unbounded linear
//! functional is admitted only in Ornstein-Uhlenbeck test mode, where the
//! closed form justifies it.

use crate::field::SpectralField;

#[derive(Debug, Clone)]
pub enum Functional {
    /// `f(u) = tanh(gain <u, direction>_H)`, bounded by 1.
    BoundedTanh {
        direction: SpectralField,
        gain: f64,
    },
    /// `f(u) = exp(-||u||_H^2)`, in (0, 1].
    GaussianBump,
    /// `f(u) = <u, direction>_H`; unbounded, OU test mode only.
    Linear { direction: SpectralField },
    /// `f(u) = 0.1 + tanh^2(gain <u, direction>_H)`, in [0.1, 1.1]; the
    /// positive bounded functional used by the entropy checks.
    ShiftedTanhSq {
        direction: SpectralField,
        gain: f64,
    },
}

impl Functional {
    pub fn eval(&self, u: &SpectralField) -> f64 {
        match self {
            Functional::BoundedTanh { direction, gain } => (gain * u.inner_h(direction)).tanh(),
            Functional::GaussianBump => {
                let h_sq: f64 = 2.0 * u.amps().iter().map(|a| a.norm_sqr()).sum::<f64>();
                (-h_sq).exp()
            }
            Functional::Linear { direction } => u.inner_h(direction),
            Functional::ShiftedTanhSq { direction, gain } => {
                let t = (gain * u.inner_h(direction)).tanh();
                0.1 + t * t
            }
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, Functional::Linear { .. })
    }

    pub fn is_nonnegative(&self) -> bool {
        matches!(
            self,
            Functional::GaussianBump | Functional::ShiftedTanhSq { .. }
        )
    }

    /// Uniform positive lower bound, when one exists.
    pub fn positive_floor(&self) -> Option<f64> {
        match self {
            Functional::ShiftedTanhSq { .. } => Some(0.1),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Functional::BoundedTanh { .. } => "bounded_tanh",
            Functional::GaussianBump => "gaussian_bump",
            Functional::Linear { .. } => "linear",
            Functional::ShiftedTanhSq { .. } => "shifted_tanh_sq",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    #[test]
    fn bounds_hold_on_large_inputs() {
        let lat = LatticeSpec::new(1, 4).unwrap();
        let mut u = SpectralField::zero(&lat);
        u.amps_mut()[0] = Complex64::new(1e6, 0.0);
        let dir = SpectralField::basis(&lat, 0, false);
        let f = Functional::BoundedTanh {
            direction: dir.clone(),
            gain: 2.0,
        };
        assert!(f.eval(&u).abs() <= 1.0);
        let g = Functional::ShiftedTanhSq {
            direction: dir,
            gain: 2.0,
        };
        let v = g.eval(&u);
        assert!((0.1..=1.1 + 1e-15).contains(&v));
        assert_eq!(g.positive_floor(), Some(0.1));
        // the bump underflows to zero on absurdly large fields but stays
        // nonnegative and bounded
        let bump = Functional::GaussianBump.eval(&u);
        assert!((0.0..=1.0).contains(&bump));
        let mut small = SpectralField::zero(&lat);
        small.amps_mut()[0] = Complex64::new(0.3, 0.0);
        assert!(Functional::GaussianBump.eval(&small) > 0.0);
    }

    #[test]
    fn linear_is_the_plain_pairing() {
        let lat = LatticeSpec::new(1, 4).unwrap();
        let e = SpectralField::basis(&lat, 1, false);
        let mut u = SpectralField::zero(&lat);
        u.amps_mut()[1] = Complex64::new(3.0, 0.0);
        let f = Functional::Linear {
            direction: e.clone(),
        };
        assert_relative_eq!(f.eval(&u), u.inner_h(&e));
        assert!(!f.is_bounded());
    }
}
