//! Spectral fields: one complex polarization amplitude per canonical mode.
//!
//! The stored amplitude `a_k` represents the coefficient of the mode pair
//! `{k, -k}` along its polarization direction, with `u_{-k} = conj(u_k)`
//! implicit. Reality is structural; for `d = 2` so is the divergence-free
//! constraint, because the polarization direction is orthogonal to `k` by
//! construction. All norms and inner products are evaluated directly on the
//! amplitudes (the polarization vectors form an orthonormal frame), and
//! squared norms are kept squared until a presentation boundary needs a root.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{same_lattice, LatticeSpec};
use crate::params::ModelParams;

/// Which norm to evaluate. `V` is `VTheta(1)`; `Q` is the graph norm of
/// `Q^{-1}`, i.e. `||u||_Q^2 = sum |k|^(4 sigma) |u_k|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Space {
    H,
    V,
    VTheta(f64),
    Q,
}

/// Diagonal (Fourier-multiplier) operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiagonalOp {
    /// `e^{-sL}`, requires `s >= 0`.
    Semigroup(f64),
    /// `Q = A^{-sigma}`.
    Q,
    /// `Q^{-1} = A^{sigma}`.
    QInverse,
    /// `L^beta`.
    LPower(f64),
}

impl DiagonalOp {
    /// Multiplier applied to the amplitude of a mode with `|k|^2 = nsq`.
    pub fn factor(&self, nsq: f64, p: &ModelParams) -> f64 {
        match *self {
            DiagonalOp::Semigroup(s) => {
                debug_assert!(s >= 0.0, "semigroup time must be nonnegative");
                (-s * p.dissipation_eigenvalue(nsq)).exp()
            }
            DiagonalOp::Q => p.noise_eigenvalue(nsq),
            DiagonalOp::QInverse => nsq.powf(p.sigma),
            DiagonalOp::LPower(beta) => p.dissipation_eigenvalue(nsq).powf(beta),
        }
    }
}

/// Raw per-mode data: a full `C^d` coefficient attached to a lattice mode,
/// as it arrives from configuration files or external dumps. May contain the
/// zero mode and non-solenoidal parts; `leray_project` turns it into a field.
#[derive(Debug, Clone, Serialize)]
pub struct RawMode {
    pub k: [i32; 2],
    pub coeff: [Complex64; 2],
}

#[derive(Debug, Clone)]
pub struct SpectralField {
    lattice: Arc<LatticeSpec>,
    amps: Vec<Complex64>,
}

impl SpectralField {
    pub fn zero(lattice: &Arc<LatticeSpec>) -> Self {
        SpectralField {
            lattice: lattice.clone(),
            amps: vec![Complex64::new(0.0, 0.0); lattice.n_modes()],
        }
    }

    pub fn from_amps(lattice: &Arc<LatticeSpec>, amps: Vec<Complex64>) -> Self {
        assert_eq!(amps.len(), lattice.n_modes(), "amplitude count mismatch");
        SpectralField {
            lattice: lattice.clone(),
            amps,
        }
    }

    /// Unit-`H`-norm basis field concentrated on the pair of the canonical
    /// mode at `idx`: amplitude `1/sqrt(2)` (real direction) or
    /// `i/sqrt(2)` (imaginary direction).
    pub fn basis(lattice: &Arc<LatticeSpec>, idx: usize, imaginary: bool) -> Self {
        let mut f = Self::zero(lattice);
        let a = std::f64::consts::FRAC_1_SQRT_2;
        f.amps[idx] = if imaginary {
            Complex64::new(0.0, a)
        } else {
            Complex64::new(a, 0.0)
        };
        f
    }

    /// Basis field rescaled to unit `V_theta` norm.
    pub fn basis_unit_vtheta(
        lattice: &Arc<LatticeSpec>,
        idx: usize,
        imaginary: bool,
        p: &ModelParams,
    ) -> Self {
        let f = Self::basis(lattice, idx, imaginary);
        let n = f.norm_sq(p, Space::VTheta(p.theta)).sqrt();
        f.scale(1.0 / n)
    }

    pub fn lattice(&self) -> &Arc<LatticeSpec> {
        &self.lattice
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    /// Resolve the amplitude of an arbitrary full-lattice mode.
    pub fn amp_at(&self, k: [i32; 2]) -> Option<Complex64> {
        self.lattice
            .resolve(k)
            .map(|(i, conj)| if conj { self.amps[i].conj() } else { self.amps[i] })
    }

    /// Reconstruct the full `C^d` coefficient vector of mode `k`. The
    /// normalization by `|k|` is applied after the integer polarization
    /// components.
    pub fn vector_coeff(&self, k: [i32; 2]) -> Option<[Complex64; 2]> {
        let (i, conj) = self.lattice.resolve(k)?;
        let a = if conj { self.amps[i].conj() } else { self.amps[i] };
        Some(if self.lattice.dim() == 1 {
            [a, Complex64::new(0.0, 0.0)]
        } else {
            let (p, r) = self.lattice.polarization_raw(i);
            [a * p[0] as f64 / r, a * p[1] as f64 / r]
        })
    }

    /// Dump the canonical modes as raw coefficient vectors.
    pub fn to_raw(&self) -> Vec<RawMode> {
        self.lattice
            .modes()
            .iter()
            .map(|&k| RawMode {
                k,
                coeff: self.vector_coeff(k).unwrap(),
            })
            .collect()
    }

    /// `||u||^2` in the requested space, summed over the full lattice
    /// (twice the half-lattice sum).
    pub fn norm_sq(&self, p: &ModelParams, space: Space) -> f64 {
        let nsq = self.lattice.norm_sq_table();
        let mut acc = 0.0;
        match space {
            Space::H => {
                for a in &self.amps {
                    acc += a.norm_sqr();
                }
            }
            Space::V => {
                for (a, &n) in self.amps.iter().zip(nsq) {
                    acc += p.dissipation_eigenvalue(n) * a.norm_sqr();
                }
            }
            Space::VTheta(tp) => {
                for (a, &n) in self.amps.iter().zip(nsq) {
                    acc += p.dissipation_eigenvalue(n).powf(tp) * a.norm_sqr();
                }
            }
            Space::Q => {
                for (a, &n) in self.amps.iter().zip(nsq) {
                    acc += n.powf(2.0 * p.sigma) * a.norm_sqr();
                }
            }
        }
        2.0 * acc
    }

    /// `H` inner product of two real fields (full-lattice pairing).
    pub fn inner_h(&self, rhs: &SpectralField) -> f64 {
        assert!(same_lattice(&self.lattice, &rhs.lattice), "lattice mismatch");
        let mut acc = 0.0;
        for (a, b) in self.amps.iter().zip(&rhs.amps) {
            acc += a.re * b.re + a.im * b.im;
        }
        2.0 * acc
    }

    /// Apply a diagonal operator mode-wise.
    pub fn apply_diagonal(&self, op: DiagonalOp, p: &ModelParams) -> SpectralField {
        let mut out = self.clone();
        out.apply_diagonal_in_place(op, p);
        out
    }

    pub fn apply_diagonal_in_place(&mut self, op: DiagonalOp, p: &ModelParams) {
        let nsq = self.lattice.norm_sq_table();
        for (a, &n) in self.amps.iter_mut().zip(nsq) {
            *a *= op.factor(n, p);
        }
    }

    pub fn scale(&self, c: f64) -> SpectralField {
        let mut out = self.clone();
        for a in &mut out.amps {
            *a *= c;
        }
        out
    }

    pub fn add(&self, rhs: &SpectralField) -> SpectralField {
        assert!(same_lattice(&self.lattice, &rhs.lattice), "lattice mismatch");
        let mut out = self.clone();
        for (a, b) in out.amps.iter_mut().zip(&rhs.amps) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, rhs: &SpectralField) -> SpectralField {
        assert!(same_lattice(&self.lattice, &rhs.lattice), "lattice mismatch");
        let mut out = self.clone();
        for (a, b) in out.amps.iter_mut().zip(&rhs.amps) {
            *a -= b;
        }
        out
    }

    /// `self += c * rhs`, in place.
    pub(crate) fn add_scaled_in_place(&mut self, c: f64, rhs: &SpectralField) {
        for (a, b) in self.amps.iter_mut().zip(&rhs.amps) {
            *a += c * b;
        }
    }

    /// Mode-wise i.i.d. standard complex Gaussian amplitudes ("white" sample;
    /// every norm is finite at truncation).
    pub fn random_white<R: Rng>(lattice: &Arc<LatticeSpec>, rng: &mut R) -> Self {
        let amps = (0..lattice.n_modes())
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        SpectralField {
            lattice: lattice.clone(),
            amps,
        }
    }

    /// White sample damped by the envelope `|k|^-(delta+2)`, which places the
    /// field in `V` with room to spare so bound ratios stay informative.
    pub fn random_enveloped<R: Rng>(
        lattice: &Arc<LatticeSpec>,
        p: &ModelParams,
        rng: &mut R,
    ) -> Self {
        let mut f = Self::random_white(lattice, rng);
        let e = -(p.delta + 2.0) / 2.0;
        let nsq = lattice.norm_sq_table();
        for (a, &n) in f.amps.iter_mut().zip(nsq) {
            *a *= n.powf(e);
        }
        f
    }

    /// Serialized dump used for assumption-violation witnesses.
    pub fn dump_json(&self) -> serde_json::Value {
        serde_json::json!({
            "dim": self.lattice.dim(),
            "cutoff": self.lattice.cutoff(),
            "modes": self
                .lattice
                .modes()
                .iter()
                .zip(&self.amps)
                .map(|(k, a)| serde_json::json!([k[0], k[1], a.re, a.im]))
                .collect::<Vec<_>>(),
        })
    }
}

/// Orthogonal projection of raw per-mode data onto the divergence-free,
/// mean-free field space: the zero mode is discarded and, for `d >= 2`, each
/// coefficient is replaced by its component perpendicular to `k` (equal to
/// `(I - k k^T / |k|^2) u_k`). Raw data must carry reality pairing: at most
/// one entry per conjugate pair, the partner being implicit.
pub fn leray_project(lattice: &Arc<LatticeSpec>, raw: &[RawMode]) -> Result<SpectralField> {
    let mut field = SpectralField::zero(lattice);
    let mut seen = vec![false; lattice.n_modes()];
    for rm in raw {
        if rm.k == [0, 0] {
            continue;
        }
        let (idx, conj) = lattice
            .resolve(rm.k)
            .ok_or(Error::ModeOutsideLattice(rm.k))?;
        if seen[idx] {
            return Err(Error::DuplicateRawMode(rm.k));
        }
        seen[idx] = true;
        // coefficient of the canonical representative
        let coeff = if conj {
            [rm.coeff[0].conj(), rm.coeff[1].conj()]
        } else {
            rm.coeff
        };
        let amp = if lattice.dim() == 1 {
            coeff[0]
        } else {
            let (p, r) = lattice.polarization_raw(idx);
            (coeff[0] * p[0] as f64 + coeff[1] * p[1] as f64) / r
        };
        field.amps[idx] = amp;
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn burgers_params() -> ModelParams {
        ModelParams::new(1.0, 1.0, 0.5, 1.0)
    }

    #[test]
    fn h_and_v_norms_on_a_single_pair() {
        let lat = LatticeSpec::new(1, 4).unwrap();
        let p = burgers_params();
        // u_1 = u_{-1} = 1/2
        let mut u = SpectralField::zero(&lat);
        u.amps_mut()[0] = c(0.5, 0.0);
        assert_relative_eq!(u.norm_sq(&p, Space::H), 0.5);
        assert_relative_eq!(u.norm_sq(&p, Space::V), 0.5);
        // same amplitude moved to k = +-2: the V-weight becomes 2^4
        let mut u2 = SpectralField::zero(&lat);
        u2.amps_mut()[1] = c(0.5, 0.0);
        assert_relative_eq!(u2.norm_sq(&p, Space::V), 8.0);
    }

    #[test]
    fn q_norm_on_unit_modes() {
        let lat = LatticeSpec::new(1, 4).unwrap();
        let p = ModelParams::new(1.0, 2.0, 1.0, 1.0);
        let mut u = SpectralField::zero(&lat);
        u.amps_mut()[0] = c(1.0, 0.0);
        assert_relative_eq!(u.norm_sq(&p, Space::Q), 2.0);
    }

    #[test]
    fn semigroup_factor_matches_the_spectral_definition() {
        let lat = LatticeSpec::new(1, 4).unwrap();
        let p = ModelParams::new(2.0, 1.0, 0.5, 1.0);
        let mut u = SpectralField::zero(&lat);
        u.amps_mut()[0] = c(1.0, 0.0);
        let v = u.apply_diagonal(DiagonalOp::Semigroup(0.5), &p);
        assert_relative_eq!(v.amps()[0].re, (-1.0f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn semigroup_at_zero_time_is_the_identity_bitwise() {
        let lat = LatticeSpec::new(2, 3).unwrap();
        let p = ModelParams::new(1.0, 2.0, 1.0, 1.0);
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let u = SpectralField::random_white(&lat, &mut rng);
        let v = u.apply_diagonal(DiagonalOp::Semigroup(0.0), &p);
        assert_eq!(u.amps(), v.amps());
    }

    #[test]
    fn fractional_dissipation_powers() {
        // L^beta multiplies mode k by (lambda0 |k|^(2(delta+1)))^beta
        let lat = LatticeSpec::new(1, 4).unwrap();
        let p = ModelParams::new(2.0, 1.0, 0.5, 1.0);
        let mut u = SpectralField::zero(&lat);
        u.amps_mut()[1] = c(1.0, 0.0); // |k| = 2, eigenvalue 2 * 2^4 = 32
        let v = u.apply_diagonal(DiagonalOp::LPower(0.5), &p);
        assert_relative_eq!(v.amps()[1].re, 32.0f64.sqrt(), max_relative = 1e-15);
        let w = u.apply_diagonal(DiagonalOp::LPower(1.0), &p);
        assert_relative_eq!(w.amps()[1].re, 32.0, max_relative = 1e-15);
    }

    #[test]
    fn q_then_q_inverse_round_trips() {
        let lat = LatticeSpec::new(1, 4).unwrap();
        let p = burgers_params();
        let mut u = SpectralField::zero(&lat);
        u.amps_mut()[0] = c(0.3, -0.7); // |k| = 1: multiplier is exactly 1
        u.amps_mut()[2] = c(-1.1, 0.2);
        let v = u
            .apply_diagonal(DiagonalOp::Q, &p)
            .apply_diagonal(DiagonalOp::QInverse, &p);
        assert_eq!(v.amps()[0], u.amps()[0]);
        for (a, b) in u.amps().iter().zip(v.amps()) {
            assert_relative_eq!(a.re, b.re, max_relative = 1e-14);
            assert_relative_eq!(a.im, b.im, max_relative = 1e-14);
        }
    }

    #[test]
    fn diagonal_operators_commute_mode_wise() {
        let lat = LatticeSpec::new(1, 8).unwrap();
        let p = burgers_params();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let u = SpectralField::random_white(&lat, &mut rng);
        let a = u
            .apply_diagonal(DiagonalOp::Semigroup(0.3), &p)
            .apply_diagonal(DiagonalOp::Q, &p);
        let b = u
            .apply_diagonal(DiagonalOp::Q, &p)
            .apply_diagonal(DiagonalOp::Semigroup(0.3), &p);
        for (x, y) in a.amps().iter().zip(b.amps()) {
            // scalar multiplications commute up to one rounding step
            assert_relative_eq!(x.re, y.re, max_relative = 4.0 * f64::EPSILON);
            assert_relative_eq!(x.im, y.im, max_relative = 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn leray_kills_parallel_components_and_keeps_orthogonal_ones() {
        let lat = LatticeSpec::new(2, 4).unwrap();
        // u_k parallel to k = (1,0) projects to zero
        let raw = vec![RawMode {
            k: [1, 0],
            coeff: [c(1.0, 0.0), c(0.0, 0.0)],
        }];
        let f = leray_project(&lat, &raw).unwrap();
        assert!(f.amps().iter().all(|a| a.norm_sqr() == 0.0));
        // u_k orthogonal to k survives unchanged
        let raw = vec![RawMode {
            k: [1, 0],
            coeff: [c(0.0, 0.0), c(1.0, 0.0)],
        }];
        let f = leray_project(&lat, &raw).unwrap();
        let v = f.vector_coeff([1, 0]).unwrap();
        assert_eq!(v[0], c(0.0, 0.0));
        assert_eq!(v[1], c(1.0, 0.0));
    }

    #[test]
    fn leray_drops_the_zero_mode() {
        let lat = LatticeSpec::new(1, 4).unwrap();
        let raw = vec![
            RawMode {
                k: [0, 0],
                coeff: [c(3.0, 0.0), c(0.0, 0.0)],
            },
            RawMode {
                k: [2, 0],
                coeff: [c(1.0, -0.5), c(0.0, 0.0)],
            },
        ];
        let f = leray_project(&lat, &raw).unwrap();
        assert_eq!(f.amp_at([2, 0]).unwrap(), c(1.0, -0.5));
        assert_eq!(f.norm_sq(&burgers_params(), Space::H), 2.0 * 1.25);
    }

    #[test]
    fn leray_is_idempotent() {
        let lat = LatticeSpec::new(2, 4).unwrap();
        // axis modes have exact polarization vectors: idempotence is bitwise
        let raw = vec![RawMode {
            k: [0, 2],
            coeff: [c(0.4, -1.2), c(0.9, 0.3)],
        }];
        let once = leray_project(&lat, &raw).unwrap();
        let twice = leray_project(&lat, &once.to_raw()).unwrap();
        assert_eq!(once.amps(), twice.amps());
        // general modes re-project to within rounding
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let f = SpectralField::random_white(&lat, &mut rng);
        let again = leray_project(&lat, &f.to_raw()).unwrap();
        for (a, b) in f.amps().iter().zip(again.amps()) {
            assert_relative_eq!(a.re, b.re, max_relative = 1e-14);
            assert_relative_eq!(a.im, b.im, max_relative = 1e-14);
        }
    }

    #[test]
    fn reconstructed_coefficients_are_divergence_free() {
        // the polarization basis is orthogonal to k by construction; the
        // reconstructed dot is pure rounding, far inside the 1e-12 contract
        let lat = LatticeSpec::new(2, 4).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let f = SpectralField::random_white(&lat, &mut rng);
        for k in lat.iter_full() {
            let u = f.vector_coeff(k).unwrap();
            let dot = u[0] * k[0] as f64 + u[1] * k[1] as f64;
            let k_norm = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
            let u_norm = (u[0].norm_sqr() + u[1].norm_sqr()).sqrt();
            assert!(
                dot.norm() <= 1e-15 * k_norm * u_norm,
                "divergence leak at {k:?}: {dot}"
            );
        }
    }

    #[test]
    fn reality_pairing_is_structural() {
        let lat = LatticeSpec::new(2, 3).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let f = SpectralField::random_white(&lat, &mut rng);
        for k in lat.iter_full() {
            let u = f.vector_coeff(k).unwrap();
            let v = f.vector_coeff([-k[0], -k[1]]).unwrap();
            assert_eq!(u[0].conj(), v[0]);
            assert_eq!(u[1].conj(), v[1]);
        }
    }

    #[test]
    fn parseval_parallelogram_identity() {
        let lat = LatticeSpec::new(1, 8).unwrap();
        let p = burgers_params();
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        for _ in 0..100 {
            let u = SpectralField::random_white(&lat, &mut rng);
            let v = SpectralField::random_white(&lat, &mut rng);
            let lhs = u.add(&v).norm_sq(&p, Space::H) + u.sub(&v).norm_sq(&p, Space::H);
            let rhs = 2.0 * u.norm_sq(&p, Space::H) + 2.0 * v.norm_sq(&p, Space::H);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
    }

    #[test]
    fn h_norm_is_dominated_by_the_graph_norms() {
        // ||u||_H <= lambda0^(-theta'/2) ||u||_{V_theta'} since the spectrum
        // of L starts at lambda0 at |k| = 1
        let lat = LatticeSpec::new(2, 4).unwrap();
        let p = ModelParams::new(2.0, 2.0, 1.0, 1.0);
        let mut rng = ChaCha12Rng::seed_from_u64(33);
        for _ in 0..50 {
            let u = SpectralField::random_white(&lat, &mut rng);
            for tp in [0.25, 0.5, p.theta, 1.0] {
                let h = u.norm_sq(&p, Space::H).sqrt();
                let vt = u.norm_sq(&p, Space::VTheta(tp)).sqrt();
                assert!(
                    h <= p.lambda0.powf(-tp / 2.0) * vt * (1.0 + 1e-12),
                    "norm ordering violated at theta'={tp}"
                );
            }
        }
    }
}
