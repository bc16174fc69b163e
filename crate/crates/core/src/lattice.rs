//! Fourier-mode bookkeeping on the punctured torus lattice.
//!
//! The mode set is `{ k in Z^d \ {0} : |k|_inf <= N }` for `d` in {1, 2}.
//! Real fields satisfy `u_{-k} = conj(u_k)`, so only one representative per
//! conjugate pair is stored. A mode `k` is *canonical* when its first nonzero
//! coordinate is positive; canonical modes are enumerated in lexicographic
//! order on the coordinates.
//!
//! For `d = 2` the divergence-free constraint leaves one polarization
//! direction per pair, the unit vector perpendicular to `k`. Fields store the
//! complex amplitude along that direction, which makes both the reality and
//! the divergence-free invariants structural. The same single-amplitude
//! layout covers `d = 1`, where the coefficient is already scalar.

use std::sync::Arc;

use crate::error::{Error, Result};

/// One term of the truncated convolution behind the convection term: the
/// contribution of input modes `j = l - m` and `m` to output mode `l`,
/// with all polarization geometry collapsed into the real factor `g`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvEntry {
    pub j: u32,
    pub m: u32,
    pub j_conj: bool,
    pub m_conj: bool,
    pub g: f64,
}

/// Truncation geometry: dimension, cutoff, canonical mode enumeration,
/// pairing metadata and the precomputed convolution plan.
#[derive(Debug)]
pub struct LatticeSpec {
    dim: usize,
    cutoff: i32,
    modes: Vec<[i32; 2]>,
    /// `|k|^2` per canonical mode (integer-valued).
    norm_sq: Vec<f64>,
    /// Integer polarization vector `(-k1, k0)` per canonical mode, shared by
    /// both members of the pair (it is orthogonal to `k` and `-k` alike);
    /// normalized by `|k|` on use. Dividing last keeps reconstructed
    /// coefficients exactly divergence-free. `[1, 0]` placeholder for `d = 1`.
    pol_int: Vec<[i32; 2]>,
    /// Full-lattice index `(k0+N)*(2N+1) + (k1+N)` to `(canonical index,
    /// conjugate flag)`.
    lookup: Vec<Option<(u32, bool)>>,
    conv_offsets: Vec<u32>,
    conv_entries: Vec<ConvEntry>,
}

fn is_canonical(k: [i32; 2]) -> bool {
    k[0] > 0 || (k[0] == 0 && k[1] > 0)
}

impl LatticeSpec {
    pub fn new(dim: usize, cutoff: i32) -> Result<Arc<Self>> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParameter {
                name: "dimension".into(),
                constraint: "must be 1 or 2".into(),
            });
        }
        if cutoff < 1 {
            return Err(Error::InvalidParameter {
                name: "cutoff".into(),
                constraint: "must be at least 1".into(),
            });
        }

        let n = cutoff;
        let mut modes = Vec::new();
        if dim == 1 {
            for k in 1..=n {
                modes.push([k, 0]);
            }
        } else {
            for k0 in 0..=n {
                for k1 in -n..=n {
                    if is_canonical([k0, k1]) {
                        modes.push([k0, k1]);
                    }
                }
            }
        }

        let side = (2 * n + 1) as usize;
        let mut lookup = vec![None; side * side];
        let flat = |k: [i32; 2]| ((k[0] + n) as usize) * side + (k[1] + n) as usize;
        for (i, &k) in modes.iter().enumerate() {
            lookup[flat(k)] = Some((i as u32, false));
            lookup[flat([-k[0], -k[1]])] = Some((i as u32, true));
        }

        let norm_sq: Vec<f64> = modes
            .iter()
            .map(|k| (k[0] * k[0] + k[1] * k[1]) as f64)
            .collect();
        let pol_int: Vec<[i32; 2]> = modes
            .iter()
            .map(|k| if dim == 1 { [1, 0] } else { [-k[1], k[0]] })
            .collect();

        let mut lat = LatticeSpec {
            dim,
            cutoff,
            modes,
            norm_sq,
            pol_int,
            lookup,
            conv_offsets: Vec::new(),
            conv_entries: Vec::new(),
        };
        lat.build_convolution_plan();
        Ok(Arc::new(lat))
    }

    /// Spatial dimension, 1 or 2.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Truncation cutoff `N` (sup-norm bound on the mode coordinates).
    pub fn cutoff(&self) -> i32 {
        self.cutoff
    }

    /// Number of stored (canonical) modes; the full lattice has twice as many.
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Canonical modes in enumeration order.
    pub fn modes(&self) -> &[[i32; 2]] {
        &self.modes
    }

    /// `|k|^2` of the canonical mode at `idx`.
    pub fn mode_norm_sq(&self, idx: usize) -> f64 {
        self.norm_sq[idx]
    }

    pub(crate) fn norm_sq_table(&self) -> &[f64] {
        &self.norm_sq
    }

    /// Polarization unit vector of the pair containing the canonical mode at
    /// `idx` (for `d = 2`; a `[1, 0]` placeholder for `d = 1`).
    pub fn polarization(&self, idx: usize) -> [f64; 2] {
        let p = self.pol_int[idx];
        let r = self.norm_sq[idx].sqrt();
        [p[0] as f64 / r, p[1] as f64 / r]
    }

    /// Integer polarization vector `(-k1, k0)` and the norm `|k|` it must be
    /// divided by.
    pub(crate) fn polarization_raw(&self, idx: usize) -> ([i32; 2], f64) {
        (self.pol_int[idx], self.norm_sq[idx].sqrt())
    }

    /// Resolve an arbitrary lattice mode to `(canonical index, conjugate)`.
    pub fn resolve(&self, k: [i32; 2]) -> Option<(usize, bool)> {
        let n = self.cutoff;
        if k[0].abs() > n || k[1].abs() > n {
            return None;
        }
        let side = (2 * n + 1) as usize;
        let flat = ((k[0] + n) as usize) * side + (k[1] + n) as usize;
        self.lookup[flat].map(|(i, c)| (i as usize, c))
    }

    /// Iterate over the full (both-signs) truncated lattice.
    pub fn iter_full(&self) -> impl Iterator<Item = [i32; 2]> + '_ {
        let n = self.cutoff;
        let dim = self.dim;
        (-n..=n)
            .flat_map(move |k0| {
                let range = if dim == 1 { 0..=0 } else { -n..=n };
                range.map(move |k1| [k0, k1])
            })
            .filter(|&k| k != [0, 0])
    }

    pub(crate) fn conv_terms(&self, out: usize) -> &[ConvEntry] {
        let lo = self.conv_offsets[out] as usize;
        let hi = self.conv_offsets[out + 1] as usize;
        &self.conv_entries[lo..hi]
    }

    /// Precompute, for every canonical output mode `l`, the list of `(j, m)`
    /// index pairs with `j = l - m` plus the real geometric factor
    /// `(pol_j . m)(pol_m . pol_l)` (which degenerates to the scalar `m` in
    /// one dimension). Direct O(M^2) enumeration; at the cutoffs used here
    /// the plan stays tiny. An FFT product with 2/3-rule dealiasing is the
    /// upgrade path for large cutoffs.
    fn build_convolution_plan(&mut self) {
        let full: Vec<[i32; 2]> = self.iter_full().collect();
        let mut offsets = Vec::with_capacity(self.modes.len() + 1);
        let mut entries = Vec::new();
        offsets.push(0u32);
        for (li, &l) in self.modes.clone().iter().enumerate() {
            for &m in &full {
                if m == l {
                    continue;
                }
                let j = [l[0] - m[0], l[1] - m[1]];
                if j == [0, 0] {
                    continue;
                }
                let (ji, jc) = match self.resolve(j) {
                    Some(r) => r,
                    None => continue,
                };
                let (mi, mc) = self.resolve(m).expect("m enumerated from the lattice");
                let g = if self.dim == 1 {
                    m[0] as f64
                } else {
                    let pj = self.polarization(ji);
                    let pm = self.polarization(mi);
                    let pl = self.polarization(li);
                    let pj_dot_m = pj[0] * m[0] as f64 + pj[1] * m[1] as f64;
                    let pm_dot_pl = pm[0] * pl[0] + pm[1] * pl[1];
                    pj_dot_m * pm_dot_pl
                };
                if g == 0.0 {
                    continue;
                }
                entries.push(ConvEntry {
                    j: ji as u32,
                    m: mi as u32,
                    j_conj: jc,
                    m_conj: mc,
                    g,
                });
            }
            offsets.push(entries.len() as u32);
        }
        self.conv_offsets = offsets;
        self.conv_entries = entries;
    }
}

/// Two lattice handles describe the same mode set.
pub fn same_lattice(a: &Arc<LatticeSpec>, b: &Arc<LatticeSpec>) -> bool {
    Arc::ptr_eq(a, b) || (a.dim == b.dim && a.cutoff == b.cutoff)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_enumeration() {
        let lat = LatticeSpec::new(1, 8).unwrap();
        assert_eq!(lat.n_modes(), 8);
        assert_eq!(lat.modes()[0], [1, 0]);
        assert_eq!(lat.modes()[7], [8, 0]);
        assert_eq!(lat.resolve([3, 0]), Some((2, false)));
        assert_eq!(lat.resolve([-3, 0]), Some((2, true)));
        assert_eq!(lat.resolve([0, 0]), None);
        assert_eq!(lat.resolve([9, 0]), None);
    }

    #[test]
    fn two_dimensional_pairing_covers_the_lattice_once() {
        let lat = LatticeSpec::new(2, 4).unwrap();
        let full: Vec<_> = lat.iter_full().collect();
        assert_eq!(full.len(), 9 * 9 - 1);
        assert_eq!(lat.n_modes() * 2, full.len());
        // every full mode resolves, and each pair is hit exactly once
        // directly and once through conjugation
        let mut direct = 0;
        for k in full {
            let (_, conj) = lat.resolve(k).unwrap();
            if !conj {
                direct += 1;
            }
        }
        assert_eq!(direct, lat.n_modes());
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let lat = LatticeSpec::new(2, 2).unwrap();
        let m = lat.modes();
        for w in m.windows(2) {
            assert!(w[0] < w[1], "not sorted: {:?} then {:?}", w[0], w[1]);
        }
        assert_eq!(m[0], [0, 1]);
    }

    #[test]
    fn polarization_is_orthogonal_to_k() {
        let lat = LatticeSpec::new(2, 4).unwrap();
        for (i, k) in lat.modes().iter().enumerate() {
            let (p_int, r) = lat.polarization_raw(i);
            // integer orthogonality is exact
            assert_eq!(p_int[0] * k[0] + p_int[1] * k[1], 0);
            assert_eq!(r * r, lat.mode_norm_sq(i).sqrt().powi(2));
            let p = lat.polarization(i);
            assert!((p[0] * p[0] + p[1] * p[1] - 1.0).abs() < 1e-15);
            let dot = p[0] * k[0] as f64 + p[1] * k[1] as f64;
            assert!(dot.abs() < 1e-15 * r, "pol not orthogonal at {k:?}");
        }
    }

    #[test]
    fn zero_mode_is_excluded() {
        for (d, n) in [(1, 4), (2, 3)] {
            let lat = LatticeSpec::new(d, n).unwrap();
            assert!(lat.modes().iter().all(|&k| k != [0, 0]));
            assert!(lat.iter_full().all(|k| k != [0, 0]));
        }
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(LatticeSpec::new(3, 4).is_err());
        assert!(LatticeSpec::new(1, 0).is_err());
    }
}
