//! Flat key-value configuration with `[section]` headers, command-line
//! overrides, and construction of the domain objects a run needs.
//!
//! Keys are a flat namespace (section headers only organize the file).
//! When no config file is given, built-in desk-scale defaults apply; when a
//! file is given, the model keys (`dimension`, `cutoff`, `lambda0`, `delta`,
//! `sigma`, `theta`) must be present in the file or the overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use spectral_spde::{
    compute_constants, leray_project, validate_params, Error, Functional, IntegratorConfig,
    LatticeSpec, ModelConstants, ModelParams, RawMode, Result, Scheme, SpectralField,
};

const MODEL_KEYS: [&str; 6] = ["dimension", "cutoff", "lambda0", "delta", "sigma", "theta"];

pub const KNOWN_KEYS: [&str; 22] = [
    "dimension",
    "cutoff",
    "lambda0",
    "delta",
    "sigma",
    "theta",
    "t_final",
    "steps",
    "samples",
    "seed",
    "scheme",
    "nonlinearity",
    "functional",
    "functional_gain",
    "functional_direction",
    "x0",
    "h",
    "alpha",
    "epsilon_fd",
    "epsilon_girsanov",
    "delta_entropy",
    "output_dir",
];

fn bad(name: &str, constraint: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name: name.into(),
        constraint: constraint.into(),
    }
}

/// Raw key-value view after merging defaults, file and overrides.
#[derive(Debug, Clone)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
    /// Keys that must be present (set when a config file is used).
    strict_model_keys: bool,
}

fn normalize_key(k: &str) -> String {
    k.trim().to_ascii_lowercase().replace('-', "_")
}

impl RawConfig {
    pub fn defaults() -> Self {
        let mut values = BTreeMap::new();
        let mut set = |k: &str, v: &str| values.insert(k.to_string(), v.to_string());
        set("dimension", "1");
        set("cutoff", "4");
        set("lambda0", "1");
        set("delta", "1");
        set("sigma", "0.5");
        set("theta", "1");
        set("t_final", "0.5");
        set("steps", "200");
        set("samples", "10000");
        set("seed", "1");
        set("scheme", "exponential_euler");
        set("nonlinearity", "on");
        set("functional", "bounded_tanh");
        set("functional_gain", "1");
        set("functional_direction", "1: 0.7071067811865476");
        set("x0", "1: 0.5; 2: 0.35i; 3: -0.25; 4: 0.5+0.2i");
        set("h", "1: 0.7071067811865476");
        set("alpha", "2");
        set("epsilon_fd", "1e-3");
        set("epsilon_girsanov", "0.05");
        set("delta_entropy", "auto");
        set("output_dir", "out");
        RawConfig {
            values,
            strict_model_keys: false,
        }
    }

    /// Parse a config file on top of the defaults, dropping the default
    /// model keys so that missing ones are reported.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad("config", format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = RawConfig::defaults();
        cfg.strict_model_keys = true;
        for k in MODEL_KEYS {
            cfg.values.remove(k);
        }
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("//") {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                continue; // section headers only organize the file
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                bad(
                    "config",
                    format!("line {}: expected `key = value`, got `{line}`", lineno + 1),
                )
            })?;
            cfg.set(&normalize_key(k), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = normalize_key(key);
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(bad(&key, "unknown configuration key"));
        }
        self.values.insert(key, value.to_string());
        Ok(())
    }

    pub fn apply_overrides(&mut self, overrides: &[(String, String)]) -> Result<()> {
        for (k, v) in overrides {
            self.set(k, v)?;
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(|s| s.as_str())
            .ok_or_else(|| Error::MissingParameter(key.to_string()))
    }

    fn get_f64(&self, key: &str) -> Result<f64> {
        self.get(key)?
            .parse()
            .map_err(|_| bad(key, format!("not a number: `{}`", self.values[key])))
    }

    fn get_usize(&self, key: &str) -> Result<usize> {
        self.get(key)?
            .parse()
            .map_err(|_| bad(key, format!("not an integer: `{}`", self.values[key])))
    }

    fn get_u64(&self, key: &str) -> Result<u64> {
        self.get(key)?
            .parse()
            .map_err(|_| bad(key, format!("not an integer: `{}`", self.values[key])))
    }

    /// Validate and build the run-ready configuration.
    pub fn build(&self) -> Result<RunConfig> {
        if self.strict_model_keys {
            for k in MODEL_KEYS {
                if !self.values.contains_key(k) {
                    return Err(Error::MissingParameter(k.to_string()));
                }
            }
        }
        let dimension = self.get_usize("dimension")?;
        let cutoff = self.get_usize("cutoff")? as i32;
        let lattice = LatticeSpec::new(dimension, cutoff)?;
        let params = validate_params(
            ModelParams::new(
                self.get_f64("lambda0")?,
                self.get_f64("delta")?,
                self.get_f64("sigma")?,
                self.get_f64("theta")?,
            ),
            &lattice,
        )?;
        let constants = compute_constants(&params, &lattice)?;

        let scheme = match self.get("scheme")? {
            "exponential_euler" => Scheme::ExponentialEuler,
            "semi_implicit_euler" => Scheme::SemiImplicitEuler,
            other => return Err(bad("scheme", format!("unknown scheme `{other}`"))),
        };
        let nonlinearity = match self.get("nonlinearity")? {
            "on" | "true" | "1" => true,
            "off" | "false" | "0" => false,
            other => return Err(bad("nonlinearity", format!("expected on/off, got `{other}`"))),
        };
        let integrator = IntegratorConfig::new(
            self.get_f64("t_final")?,
            self.get_usize("steps")?,
            scheme,
            nonlinearity,
        );
        integrator.validate()?;

        let x0 = parse_field(&lattice, self.get("x0")?).map_err(|e| prefix("x0", e))?;
        let h = parse_field(&lattice, self.get("h")?).map_err(|e| prefix("h", e))?;
        let functional_direction = parse_field(&lattice, self.get("functional_direction")?)
            .map_err(|e| prefix("functional_direction", e))?;
        let gain = self.get_f64("functional_gain")?;
        let functional = match self.get("functional")? {
            "bounded_tanh" => Functional::BoundedTanh {
                direction: functional_direction,
                gain,
            },
            "gaussian_bump" => Functional::GaussianBump,
            "linear" => Functional::Linear {
                direction: functional_direction,
            },
            "shifted_tanh_sq" => Functional::ShiftedTanhSq {
                direction: functional_direction,
                gain,
            },
            other => return Err(bad("functional", format!("unknown functional `{other}`"))),
        };

        let delta_entropy = match self.get("delta_entropy")? {
            "auto" => None,
            v => Some(v.parse().map_err(|_| bad("delta_entropy", "not a number"))?),
        };

        let samples = self.get_usize("samples")?;
        if samples < 2 {
            return Err(bad("samples", "must be at least 2"));
        }

        Ok(RunConfig {
            lattice,
            params,
            constants,
            integrator,
            samples,
            seed: self.get_u64("seed")?,
            functional,
            x0,
            h,
            alpha: self.get_f64("alpha")?,
            epsilon_fd: self.get_f64("epsilon_fd")?,
            epsilon_girsanov: self.get_f64("epsilon_girsanov")?,
            delta_entropy,
            output_dir: PathBuf::from(self.get("output_dir")?),
        })
    }
}

fn prefix(key: &str, e: Error) -> Error {
    bad(key, e.to_string())
}

/// Everything a command needs, validated and ready.
pub struct RunConfig {
    pub lattice: Arc<LatticeSpec>,
    pub params: ModelParams,
    pub constants: ModelConstants,
    pub integrator: IntegratorConfig,
    pub samples: usize,
    pub seed: u64,
    pub functional: Functional,
    pub x0: SpectralField,
    pub h: SpectralField,
    pub alpha: f64,
    pub epsilon_fd: f64,
    pub epsilon_girsanov: f64,
    pub delta_entropy: Option<f64>,
    pub output_dir: PathBuf,
}

/// Hashable summary of the model-level parameters for result records.
pub fn params_fingerprint(rc: &RunConfig) -> String {
    spectral_spde::report::params_hash(&(
        rc.lattice.dim(),
        rc.lattice.cutoff(),
        rc.params,
        rc.integrator.t_final,
        rc.integrator.n_steps,
        format!("{:?}", rc.integrator.scheme),
        rc.integrator.nonlinearity_enabled,
    ))
}

/// Parse `k: c` / `k0,k1: c0, c1` entries separated by `;` into a
/// Leray-projected field.
pub fn parse_field(lattice: &Arc<LatticeSpec>, text: &str) -> Result<SpectralField> {
    let mut raw = Vec::new();
    for entry in text.split(';') {
        let entry = entry.trim();
        if entry.is_empty() {
            continue;
        }
        let (coords, comps) = entry
            .split_once(':')
            .ok_or_else(|| bad("mode entry", format!("expected `k: value`, got `{entry}`")))?;
        let ks: Vec<i32> = coords
            .split(',')
            .map(|c| {
                c.trim()
                    .parse()
                    .map_err(|_| bad("mode entry", format!("bad coordinate in `{entry}`")))
            })
            .collect::<Result<_>>()?;
        let k = match (lattice.dim(), ks.as_slice()) {
            (1, [k]) => [*k, 0],
            (2, [k0, k1]) => [*k0, *k1],
            _ => {
                return Err(bad(
                    "mode entry",
                    format!("expected {} coordinate(s) in `{entry}`", lattice.dim()),
                ))
            }
        };
        let cs: Vec<Complex64> = comps
            .split(',')
            .map(|c| parse_complex(c.trim()))
            .collect::<Result<_>>()?;
        let coeff = match (lattice.dim(), cs.as_slice()) {
            (1, [c]) => [*c, Complex64::new(0.0, 0.0)],
            (2, [c0, c1]) => [*c0, *c1],
            _ => {
                return Err(bad(
                    "mode entry",
                    format!("expected {} component(s) in `{entry}`", lattice.dim()),
                ))
            }
        };
        raw.push(RawMode { k, coeff });
    }
    leray_project(lattice, &raw)
}

/// Complex literals: `1.5`, `-0.3i`, `1+2i`, `0.5-1e-3i`, `i`, `-i`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(bad("complex literal", "empty"));
    }
    let parse_part = |p: &str, imag: bool| -> Result<f64> {
        let p = match (imag, p) {
            (true, "" | "+") => "1",
            (true, "-") => "-1",
            _ => p,
        };
        p.parse()
            .map_err(|_| bad("complex literal", format!("cannot parse `{s}`")))
    };
    if let Some(body) = s.strip_suffix('i') {
        // locate the split between the real and imaginary parts: the last
        // sign that is neither leading nor part of an exponent
        let bytes = body.as_bytes();
        let mut split = None;
        for i in (1..bytes.len()).rev() {
            let c = bytes[i] as char;
            if (c == '+' || c == '-') && !matches!(bytes[i - 1] as char, 'e' | 'E') {
                split = Some(i);
                break;
            }
        }
        match split {
            Some(i) => Ok(Complex64::new(
                parse_part(&body[..i], false)?,
                parse_part(&body[i..], true)?,
            )),
            None => Ok(Complex64::new(0.0, parse_part(body, true)?)),
        }
    } else {
        Ok(Complex64::new(parse_part(&s, false)?, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("1.5").unwrap(), Complex64::new(1.5, 0.0));
        assert_eq!(parse_complex("-2").unwrap(), Complex64::new(-2.0, 0.0));
        assert_eq!(parse_complex("0.3i").unwrap(), Complex64::new(0.0, 0.3));
        assert_eq!(parse_complex("1+2i").unwrap(), Complex64::new(1.0, 2.0));
        assert_eq!(parse_complex("0.5-1e-3i").unwrap(), Complex64::new(0.5, -1e-3));
        assert_eq!(parse_complex("-i").unwrap(), Complex64::new(0.0, -1.0));
        assert_eq!(parse_complex("1e-2").unwrap(), Complex64::new(0.01, 0.0));
        assert!(parse_complex("abc").is_err());
    }

    #[test]
    fn defaults_build() {
        let rc = RawConfig::defaults().build().unwrap();
        assert_eq!(rc.lattice.dim(), 1);
        assert_eq!(rc.lattice.cutoff(), 4);
        assert!(rc.integrator.nonlinearity_enabled);
        assert!(rc.x0.amps()[0].re > 0.0);
    }

    #[test]
    fn mode_lists_round_trip_through_projection() {
        let lat = LatticeSpec::new(2, 4).unwrap();
        let f = parse_field(&lat, "1,0: 0, 1+0.5i ; 0,2: 0, 1").unwrap();
        let v = f.vector_coeff([1, 0]).unwrap();
        assert!((v[1] - Complex64::new(1.0, 0.5)).norm() < 1e-15);
        // the (0,2) entry is parallel to its wavevector and projects away
        let w = f.vector_coeff([0, 2]).unwrap();
        assert!(w[0].norm() < 1e-15 && w[1].norm() < 1e-15);
    }

    #[test]
    fn overrides_and_missing_model_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(
            &path,
            "[model]\ndimension = 1\ncutoff = 4\nlambda0 = 1\n# delta missing\nsigma = 0.5\ntheta = 1\n",
        )
        .unwrap();
        let cfg = RawConfig::from_file(&path).unwrap();
        match cfg.build() {
            Err(Error::MissingParameter(k)) => {
                assert_eq!(k, "delta");
                assert_eq!(
                    Error::MissingParameter(k).to_string(),
                    "missing parameter: delta"
                );
            }
            Err(other) => panic!("expected missing delta, got {other}"),
            Ok(_) => panic!("expected missing delta, got a built config"),
        }
        // an override fills the hole
        let mut cfg = RawConfig::from_file(&path).unwrap();
        cfg.apply_overrides(&[("delta".into(), "1".into())]).unwrap();
        assert!(cfg.build().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut cfg = RawConfig::defaults();
        assert!(cfg.set("no_such_key", "1").is_err());
    }
}
