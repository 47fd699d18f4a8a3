//! Flat `key = value` run configuration with one schema per subcommand.
//!
//! Blank lines and lines starting with `#` are ignored. Keys carry their
//! unit as a suffix (`_s`, `_hz`, `_m`, `_deg`). Unknown keys are rejected,
//! defaults are filled in, and `--set key=value` overrides win over the file.

use crate::error::{CliError, CliResult};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    /// Real number in a range; the flags say whether each end is included.
    Real {
        min: f64,
        min_incl: bool,
        max: f64,
        max_incl: bool,
    },
    Choice(&'static [&'static str]),
    Path,
}

const fn positive() -> Kind {
    Kind::Real {
        min: 0.0,
        min_incl: false,
        max: f64::INFINITY,
        max_incl: false,
    }
}

const fn non_negative() -> Kind {
    Kind::Real {
        min: 0.0,
        min_incl: true,
        max: f64::INFINITY,
        max_incl: false,
    }
}

const fn any_real() -> Kind {
    Kind::Real {
        min: f64::NEG_INFINITY,
        min_incl: false,
        max: f64::INFINITY,
        max_incl: false,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub name: &'static str,
    pub kind: Kind,
    /// `None` means required (unless listed as optional below).
    pub default: Option<&'static str>,
    pub optional: bool,
    pub doc: &'static str,
}

const fn req(name: &'static str, kind: Kind, doc: &'static str) -> KeySpec {
    KeySpec {
        name,
        kind,
        default: None,
        optional: false,
        doc,
    }
}

const fn opt(name: &'static str, kind: Kind, doc: &'static str) -> KeySpec {
    KeySpec {
        name,
        kind,
        default: None,
        optional: true,
        doc,
    }
}

const fn def(name: &'static str, kind: Kind, default: &'static str, doc: &'static str) -> KeySpec {
    KeySpec {
        name,
        kind,
        default: Some(default),
        optional: true,
        doc,
    }
}

pub struct Schema {
    pub command: &'static str,
    pub summary: &'static str,
    pub keys: &'static [KeySpec],
}

pub const SIMULATE: Schema = Schema {
    command: "simulate",
    summary: "Propagate a pulse through a Lorentzian absorber and report input/output envelopes.",
    keys: &[
        req("alpha_l", non_negative(), "optical depth"),
        req("t2_s", positive(), "phase relaxation time T2"),
        opt(
            "pulse_t_s",
            positive(),
            "duration T of the time-reversed exponential input",
        ),
        opt(
            "pulse_file",
            Kind::Path,
            "CSV envelope (t,re,im) to use as input instead",
        ),
        def(
            "method",
            Kind::Choice(&["convolution", "closed_form"]),
            "convolution",
            "propagation route",
        ),
        opt("dt_s", positive(), "grid step (default min(T, T2, T_R)/200)"),
        opt("t_start_s", any_real(), "grid start (default -10 T)"),
        opt("t_end_s", any_real(), "grid end (default 5 T2)"),
    ],
};

pub const FIT: Schema = Schema {
    command: "fit",
    summary: "Propagate the time-reversed exponential and fit the scattered decay.",
    keys: &[
        req("alpha_l", positive(), "optical depth"),
        req("t2_s", positive(), "phase relaxation time T2"),
        req("pulse_t_s", positive(), "input duration T"),
        def(
            "fit_mode",
            Kind::Choice(&["pinned", "free"]),
            "pinned",
            "I(0) from Phi(0) or free two-parameter fit",
        ),
        opt("dt_s", positive(), "grid step (default min(T, T2, T_R)/200)"),
    ],
};

pub const SWEEP: Schema = Schema {
    command: "sweep",
    summary: "Decay time, x and efficiency over a range of optical depths.",
    keys: &[
        req("t2_s", positive(), "phase relaxation time T2"),
        req("alpha_l_start", positive(), "first optical depth"),
        req("alpha_l_stop", positive(), "last optical depth (inclusive)"),
        req("alpha_l_step", positive(), "optical-depth step"),
        opt("pulse_t_s", positive(), "fixed input duration (default T2/2)"),
    ],
};

pub const AFC: Schema = Schema {
    command: "afc",
    summary: "Superradiant single-peak decay time of an atomic frequency comb.",
    keys: &[
        req("delta_hz", positive(), "comb peak spacing"),
        req(
            "finesse",
            Kind::Real {
                min: 1.0,
                min_incl: false,
                max: f64::INFINITY,
                max_incl: false,
            },
            "spacing over peak width",
        ),
        req("alpha_l", non_negative(), "peak optical depth"),
        def(
            "sweep",
            Kind::Choice(&["none", "alpha_l", "finesse"]),
            "none",
            "parameter to sweep",
        ),
        opt("sweep_start", positive(), "first swept value"),
        opt("sweep_stop", positive(), "last swept value (inclusive)"),
        opt("sweep_step", positive(), "sweep step"),
    ],
};

pub const SLOWLIGHT: Schema = Schema {
    command: "slowlight",
    summary: "Group delay through a spectral pit and the two-polarization output.",
    keys: &[
        req("hole_fwhm_hz", positive(), "hole width at half depth"),
        req("background_alpha_l", positive(), "optical depth outside the hole"),
        req("length_m", positive(), "crystal length"),
        def("edge_softness_hz", non_negative(), "0", "raised-cosine edge width"),
        opt(
            "profile_file",
            Kind::Path,
            "CSV (frequency_hz, alpha_l) replacing the built pit",
        ),
        def(
            "theta_deg",
            Kind::Real {
                min: -360.0,
                min_incl: true,
                max: 360.0,
                max_incl: true,
            },
            "0",
            "polarization angle to the transition dipole",
        ),
        def("pulse_fwhm_s", positive(), "1e-6", "Gaussian input intensity FWHM"),
        def(
            "carrier_detuning_hz",
            any_real(),
            "0",
            "carrier offset from the hole centre",
        ),
        def(
            "freq_half_span_hz",
            positive(),
            "4e8",
            "frequency grid covers +/- this value",
        ),
        def("freq_step_hz", positive(), "1e5", "frequency grid step"),
        opt("dt_s", positive(), "time step (default pulse_fwhm_s/100)"),
        def(
            "band_hz",
            non_negative(),
            "1e6",
            "band over which the group delay is averaged",
        ),
    ],
};

pub const SCHEMAS: [&Schema; 5] = [&SIMULATE, &FIT, &SWEEP, &AFC, &SLOWLIGHT];

pub fn schema(command: &str) -> CliResult<&'static Schema> {
    SCHEMAS
        .iter()
        .copied()
        .find(|s| s.command == command)
        .ok_or_else(|| CliError::config(format!("unknown subcommand `{command}`")))
}

/// Raw `key = value` pairs in file order.
pub fn parse_pairs(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = parse_assignment(line)
            .ok_or_else(|| CliError::config(format!("line {}: expected `key = value`, got `{line}`", lineno + 1)))?;
        if out.iter().any(|(seen, _): &(String, String)| seen == &k) {
            return Err(CliError::key(&k, format!("line {}: duplicate key `{k}`", lineno + 1)));
        }
        out.push((k, v));
    }
    Ok(out)
}

pub fn parse_assignment(s: &str) -> Option<(String, String)> {
    let (k, v) = s.split_once('=')?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() || v.is_empty() {
        return None;
    }
    Some((k.to_string(), v.to_string()))
}

/// Validated configuration with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: &'static str,
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn resolve(
        schema: &'static Schema,
        file: Vec<(String, String)>,
        overrides: Vec<(String, String)>,
    ) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (k, v) in file.into_iter().chain(overrides) {
            let spec = schema.keys.iter().find(|s| s.name == k).ok_or_else(|| {
                let known: Vec<_> = schema.keys.iter().map(|s| s.name).collect();
                CliError::key(
                    &k,
                    format!(
                        "unknown key `{k}` for {}; expected one of {}",
                        schema.command,
                        known.join(", ")
                    ),
                )
            })?;
            check_value(spec, &v)?;
            values.insert(k, v);
        }
        for spec in schema.keys {
            if values.contains_key(spec.name) {
                continue;
            }
            match (spec.default, spec.optional) {
                (Some(d), _) => {
                    values.insert(spec.name.to_string(), d.to_string());
                }
                (None, true) => {}
                (None, false) => {
                    return Err(CliError::key(
                        spec.name,
                        format!("missing required key `{}` ({})", spec.name, describe(&spec.kind)),
                    ))
                }
            }
        }
        Ok(Self {
            command: schema.command,
            values,
        })
    }

    pub fn real(&self, key: &str) -> f64 {
        self.opt_real(key).unwrap_or_else(|| panic!("key `{key}` not resolved"))
    }

    pub fn opt_real(&self, key: &str) -> Option<f64> {
        self.values.get(key).map(|v| v.parse().expect("validated"))
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Canonical text: command line followed by sorted `key = value` lines.
    pub fn canonical(&self) -> String {
        let mut s = format!("command = {}\n", self.command);
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

fn check_value(spec: &KeySpec, v: &str) -> CliResult<()> {
    match spec.kind {
        Kind::Real {
            min,
            min_incl,
            max,
            max_incl,
        } => {
            let x: f64 = v
                .parse()
                .map_err(|_| CliError::key(spec.name, format!("`{}` must be a number, got `{v}`", spec.name)))?;
            let lo_ok = if min_incl { x >= min } else { x > min };
            let hi_ok = if max_incl { x <= max } else { x < max };
            if !x.is_finite() || !lo_ok || !hi_ok {
                return Err(CliError::key(
                    spec.name,
                    format!("`{}` = {v} out of range: expected {}", spec.name, describe(&spec.kind)),
                ));
            }
        }
        Kind::Choice(options) => {
            if !options.contains(&v) {
                return Err(CliError::key(
                    spec.name,
                    format!("`{}` = {v}: expected one of {}", spec.name, options.join(", ")),
                ));
            }
        }
        Kind::Path => {}
    }
    Ok(())
}

pub fn describe(kind: &Kind) -> String {
    match kind {
        Kind::Real {
            min,
            min_incl,
            max,
            max_incl,
        } => {
            let lo = if min.is_finite() {
                format!("{}{min}", if *min_incl { "[" } else { "(" })
            } else {
                "(-inf".to_string()
            };
            let hi = if max.is_finite() {
                format!("{max}{}", if *max_incl { "]" } else { ")" })
            } else {
                "inf)".to_string()
            };
            format!("real in {lo}, {hi}")
        }
        Kind::Choice(options) => format!("one of {}", options.join(" | ")),
        Kind::Path => "file path".to_string(),
    }
}

/// Markdown reference of every schema, kept in `docs/config.md`.
pub fn render_docs() -> String {
    let mut s = String::from(
        "# Configuration reference\n\n\
         Files are flat `key = value` text; `#` starts a comment line. Unknown keys are\n\
         rejected. Command-line `--set key=value` overrides take precedence over the file.\n",
    );
    for schema in SCHEMAS {
        let _ = write!(
            s,
            "\n## {}\n\n{}\n\n| key | type | default | description |\n|---|---|---|---|\n",
            schema.command, schema.summary
        );
        for k in schema.keys {
            let default = match (k.default, k.optional) {
                (Some(d), _) => format!("`{d}`"),
                (None, true) => "optional".to_string(),
                (None, false) => "**required**".to_string(),
            };
            let _ = writeln!(s, "| `{}` | {} | {} | {} |", k.name, describe(&k.kind), default, k.doc);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(s: &str) -> Vec<(String, String)> {
        parse_pairs(s).unwrap()
    }

    #[test]
    fn parses_comments_and_whitespace() {
        let p = pairs("# comment\n\n alpha_l = 2 \nt2_s=1e-6\n");
        assert_eq!(p, vec![("alpha_l".into(), "2".into()), ("t2_s".into(), "1e-6".into())]);
        assert!(parse_pairs("alpha_l 2").is_err());
        assert!(parse_pairs("a = 1\na = 2").is_err());
    }

    #[test]
    fn defaults_and_overrides() {
        let cfg = RunConfig::resolve(
            &SIMULATE,
            pairs("alpha_l = 2\nt2_s = 1\npulse_t_s = 0.5"),
            vec![("alpha_l".into(), "3".into())],
        )
        .unwrap();
        assert_eq!(cfg.real("alpha_l"), 3.0);
        assert_eq!(cfg.text("method"), Some("convolution"));
        assert_eq!(cfg.opt_real("dt_s"), None);
    }

    #[test]
    fn rejects_unknown_missing_and_out_of_range() {
        let err = RunConfig::resolve(&SIMULATE, pairs("alpha_l = 2\nt2_s = 1\nbogus = 1"), vec![]).unwrap_err();
        assert!(matches!(err, CliError::Config { key: Some(ref k), .. } if k == "bogus"));
        let err = RunConfig::resolve(&SIMULATE, pairs("alpha_l = 2"), vec![]).unwrap_err();
        assert!(matches!(err, CliError::Config { key: Some(ref k), .. } if k == "t2_s"));
        let err = RunConfig::resolve(&SIMULATE, pairs("alpha_l = -1\nt2_s = 1"), vec![]).unwrap_err();
        assert!(err.to_string().contains("out of range"));
        let err = RunConfig::resolve(&SIMULATE, pairs("alpha_l = 1\nt2_s = 1\nmethod = magic"), vec![]).unwrap_err();
        assert!(err.to_string().contains("closed_form"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn hash_ignores_key_order() {
        let a = RunConfig::resolve(&FIT, pairs("alpha_l = 2\nt2_s = 1\npulse_t_s = 0.5"), vec![]).unwrap();
        let b = RunConfig::resolve(&FIT, pairs("pulse_t_s = 0.5\nt2_s = 1\nalpha_l = 2"), vec![]).unwrap();
        assert_eq!(a.sha256(), b.sha256());
        assert_eq!(a.sha256().len(), 64);
    }
}
