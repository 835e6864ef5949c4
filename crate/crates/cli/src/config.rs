//! Line-oriented `key = value` run configuration.
//!
//! ```text
//! # worked example
//! algebra = strict-upper-4x4
//! map = x^3 + a
//! const.a = [0, 1, 2, 0, 1, 0]
//! phi1 = constant(4)
//! phi2 = constant(56)
//! method = forward
//! tol = 1e-10
//! n_max = 40
//! guard = 1e100
//! probes.count = 100
//! probes.radius = 1
//! probes.seed = 42
//! output.csv = report.csv
//! ```
//!
//! Only `algebra` and `map` are required. Control specs use the forms
//! `constant(θ)`, `sum_powers(θ, p)`, `product_powers(θ, q, p)`,
//! `power_of_y(θ, p)`, `tabulated(ρ, [s:v, ...])` and
//! `tabulated_strict(ρ, [s:v, ...])` (no extrapolation past the knots).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use cubicstab_core::{
    Algebra, ControlFunction, Element, IterationSettings, MapSpec, Method, ProbeSpec,
};
use thiserror::Error;

use crate::expr::{ExprError, LowerError, MapExpression};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}, field `{field}`: {message}")]
    Field {
        line: usize,
        field: String,
        message: String,
    },
    #[error("line {line}, field `map`: malformed expression at {source}")]
    Expression {
        line: usize,
        #[source]
        source: ExprError,
    },
    #[error("line {line}, field `map`: {source}")]
    Map {
        line: usize,
        #[source]
        source: LowerError,
    },
    #[error("missing required field `{0}`")]
    Missing(&'static str),
}

fn field_err(line: usize, field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outputs {
    pub csv: Option<PathBuf>,
    pub text: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub algebra: Algebra,
    pub map: MapExpression,
    pub constants: BTreeMap<String, Element>,
    pub phi1: Option<ControlFunction>,
    pub phi2: Option<ControlFunction>,
    pub method: Method,
    pub settings: IterationSettings,
    pub probes: ProbeSpec,
    pub outputs: Outputs,
}

impl RunConfig {
    pub fn map_spec(&self) -> MapSpec {
        self.map
            .lower(self.algebra, &self.constants)
            .expect("validated at parse time")
    }

    /// Normalized text form; parsing it yields an equal config.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "algebra = {}", self.algebra);
        let _ = writeln!(out, "map = {}", self.map);
        for (name, e) in &self.constants {
            let _ = writeln!(out, "const.{name} = {e}");
        }
        if let Some(p) = &self.phi1 {
            let _ = writeln!(out, "phi1 = {p}");
        }
        if let Some(p) = &self.phi2 {
            let _ = writeln!(out, "phi2 = {p}");
        }
        let _ = writeln!(out, "method = {}", self.method);
        let _ = writeln!(out, "tol = {:e}", self.settings.tol);
        let _ = writeln!(out, "n_max = {}", self.settings.n_max);
        let _ = writeln!(out, "guard = {:e}", self.settings.guard);
        let _ = writeln!(out, "probes.count = {}", self.probes.count);
        let _ = writeln!(out, "probes.radius = {}", self.probes.radius);
        let _ = writeln!(out, "probes.seed = {}", self.probes.seed);
        for (key, path) in [
            ("output.csv", &self.outputs.csv),
            ("output.text", &self.outputs.text),
            ("output.trace", &self.outputs.trace),
        ] {
            if let Some(p) = path {
                let _ = writeln!(out, "{key} = {}", p.display());
            }
        }
        out
    }
}

fn parse_f64(line: usize, field: &str, v: &str) -> Result<f64, ConfigError> {
    v.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| field_err(line, field, format!("expected a finite number, got `{v}`")))
}

fn parse_usize(line: usize, field: &str, v: &str) -> Result<usize, ConfigError> {
    v.parse::<usize>().map_err(|_| {
        field_err(
            line,
            field,
            format!("expected a nonnegative integer, got `{v}`"),
        )
    })
}

fn parse_list(line: usize, field: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    let inner = v
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| field_err(line, field, "expected a list like [c1, c2, ...]"))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|c| parse_f64(line, field, c))
        .collect()
}

/// Parses a control spec such as `sum_powers(2, 1.5)`.
pub fn parse_control(src: &str) -> Result<ControlFunction, String> {
    let src = src.trim();
    let open = src.find('(').ok_or("expected `name(args)`")?;
    let name = src[..open].trim();
    let args = src[open + 1..]
        .strip_suffix(')')
        .ok_or("missing closing `)`")?
        .trim();
    let numbers = |expected: usize| -> Result<Vec<f64>, String> {
        let v: Vec<f64> = args
            .split(',')
            .map(|a| {
                a.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("malformed number `{}`", a.trim()))
            })
            .collect::<Result<_, _>>()?;
        if v.len() != expected {
            return Err(format!(
                "{name} takes {expected} argument(s), got {}",
                v.len()
            ));
        }
        Ok(v)
    };
    let built = match name {
        "constant" => ControlFunction::constant(numbers(1)?[0]),
        "sum_powers" => {
            let v = numbers(2)?;
            ControlFunction::sum_powers(v[0], v[1])
        }
        "product_powers" => {
            let v = numbers(3)?;
            ControlFunction::product_powers(v[0], v[1], v[2])
        }
        "power_of_y" => {
            let v = numbers(2)?;
            ControlFunction::power_of_y(v[0], v[1])
        }
        "tabulated" | "tabulated_strict" => {
            let (ratio, table) = args.split_once(',').ok_or("expected `ratio, [s:v, ...]`")?;
            let ratio = ratio
                .trim()
                .parse::<f64>()
                .map_err(|_| format!("malformed ratio `{}`", ratio.trim()))?;
            let table = table
                .trim()
                .strip_prefix('[')
                .and_then(|t| t.strip_suffix(']'))
                .ok_or("expected a knot list `[s:v, ...]`")?;
            let knots = table
                .split(',')
                .map(|k| {
                    let (s, v) = k
                        .split_once(':')
                        .ok_or_else(|| format!("knot `{}` is not `s:v`", k.trim()))?;
                    let s = s
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| format!("malformed knot `{}`", k.trim()))?;
                    let v = v
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| format!("malformed knot `{}`", k.trim()))?;
                    Ok((s, v))
                })
                .collect::<Result<Vec<_>, String>>()?;
            ControlFunction::tabulated(knots, ratio, name == "tabulated")
        }
        other => return Err(format!("unknown control family `{other}`")),
    };
    built.map_err(|e| e.to_string())
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut algebra = None;
    let mut map: Option<(usize, MapExpression)> = None;
    let mut raw_constants: BTreeMap<String, (usize, Vec<f64>)> = BTreeMap::new();
    let mut phi1 = None;
    let mut phi2 = None;
    let mut method = Method::Forward;
    let mut settings = IterationSettings::default();
    let mut settings_line = 0;
    let mut probes = ProbeSpec::default();
    let mut outputs = Outputs::default();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| field_err(line, content, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if let Some(first) = seen.insert(key.to_string(), line) {
            return Err(field_err(
                line,
                key,
                format!("duplicate key (first set on line {first})"),
            ));
        }
        match key {
            "algebra" => {
                algebra = Some(
                    value
                        .parse::<Algebra>()
                        .map_err(|_| field_err(line, key, format!("unknown algebra `{value}`")))?,
                )
            }
            "map" => {
                let expr = MapExpression::parse(value)
                    .map_err(|source| ConfigError::Expression { line, source })?;
                map = Some((line, expr));
            }
            "phi1" => phi1 = Some(parse_control(value).map_err(|m| field_err(line, key, m))?),
            "phi2" => phi2 = Some(parse_control(value).map_err(|m| field_err(line, key, m))?),
            "method" => {
                method = value
                    .parse()
                    .map_err(|e: cubicstab_core::Error| field_err(line, key, e.to_string()))?
            }
            "tol" => {
                settings.tol = parse_f64(line, key, value)?;
                settings_line = line;
            }
            "n_max" => {
                settings.n_max = parse_usize(line, key, value)?;
                settings_line = line;
            }
            "guard" => {
                settings.guard = parse_f64(line, key, value)?;
                settings_line = line;
            }
            "probes.count" => {
                probes.count = parse_usize(line, key, value)?;
                if probes.count == 0 {
                    return Err(field_err(line, key, "probe count must be >= 1"));
                }
            }
            "probes.radius" => {
                probes.radius = parse_f64(line, key, value)?;
                if probes.radius <= 0.0 {
                    return Err(field_err(line, key, "probe radius must be positive"));
                }
            }
            "probes.seed" => {
                probes.seed = value.parse::<u64>().map_err(|_| {
                    field_err(
                        line,
                        key,
                        format!("expected an unsigned integer, got `{value}`"),
                    )
                })?
            }
            "output.csv" => outputs.csv = Some(PathBuf::from(value)),
            "output.text" => outputs.text = Some(PathBuf::from(value)),
            "output.trace" => outputs.trace = Some(PathBuf::from(value)),
            _ => {
                if let Some(name) = key.strip_prefix("const.") {
                    let valid = name
                        .chars()
                        .next()
                        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                        && name != "x";
                    if !valid {
                        return Err(field_err(
                            line,
                            key,
                            format!("invalid constant name `{name}`"),
                        ));
                    }
                    raw_constants.insert(name.to_string(), (line, parse_list(line, key, value)?));
                } else {
                    return Err(field_err(line, key, "unknown key"));
                }
            }
        }
    }

    let algebra = algebra.ok_or(ConfigError::Missing("algebra"))?;
    let (map_line, map) = map.ok_or(ConfigError::Missing("map"))?;
    settings
        .validate()
        .map_err(|e| field_err(settings_line, "settings", e.to_string()))?;

    let mut constants = BTreeMap::new();
    for (name, (line, coeffs)) in raw_constants {
        let e = Element::new(algebra, coeffs)
            .map_err(|e| field_err(line, &format!("const.{name}"), e.to_string()))?;
        constants.insert(name, e);
    }
    map.lower(algebra, &constants)
        .map_err(|source| ConfigError::Map {
            line: map_line,
            source,
        })?;

    Ok(RunConfig {
        algebra,
        map,
        constants,
        phi1,
        phi2,
        method,
        settings,
        probes,
        outputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use cubicstab_core::example_constant_a;
    use proptest::prelude::*;

    const EXAMPLE: &str = "\
# worked example
algebra = strict-upper-4x4
map = x^3 + a
const.a = [0, 1, 2, 0, 1, 0]
phi1 = constant(4)
phi2 = constant(56)
";

    #[test]
    fn example_config_matches_builtin_inputs() {
        let cfg = parse_config(EXAMPLE).unwrap();
        assert_eq!(cfg.algebra, Algebra::StrictUpper4);
        assert_eq!(cfg.map_spec(), MapSpec::cubic_plus(example_constant_a()));
        assert_eq!(cfg.phi1, Some(ControlFunction::Constant { theta: 4.0 }));
        assert_eq!(cfg.phi2, Some(ControlFunction::Constant { theta: 56.0 }));
        assert_eq!(cfg.method, Method::Forward);
        assert_eq!(cfg.settings, IterationSettings::default());
        assert_eq!(cfg.probes, ProbeSpec::default());
    }

    #[test]
    fn pure_cubic_needs_no_constants() {
        let cfg = parse_config("algebra = real-line\nmap = x^3\n").unwrap();
        assert_eq!(cfg.map_spec(), MapSpec::pure_cubic(Algebra::RealLine));
        assert!(cfg.constants.is_empty());
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let err = parse_config("algebra = strict-upper-4x4\nmap = x^4\n").unwrap_err();
        assert_eq!(
            err.to_string(),
            "line 2, field `map`: x^4 requires real-line"
        );

        let err = parse_config("algebra = banach\nmap = x^3\n").unwrap_err();
        assert!(matches!(err, ConfigError::Field { line: 1, ref field, .. } if field == "algebra"));

        let err = parse_config("algebra = real-line\nmap = x^3 + b\n").unwrap_err();
        assert!(matches!(
            err,
            ConfigError::Map {
                line: 2,
                source: LowerError::UndefinedConstant(_)
            }
        ));

        let err = parse_config("algebra = real-line\n\nmap = x^3 * 2\n").unwrap_err();
        let ConfigError::Expression { line, source } = err else {
            panic!()
        };
        assert_eq!((line, source.column), (3, 5));

        let err = parse_config("algebra = strict-upper-4x4\nmap = x^3 + a\nconst.a = [1, 2]\n")
            .unwrap_err();
        assert!(matches!(err, ConfigError::Field { line: 3, .. }));

        assert_eq!(
            parse_config("map = x^3\n").unwrap_err(),
            ConfigError::Missing("algebra")
        );
        assert!(matches!(
            parse_config("algebra = real-line\nmap = x\nmap = x\n"),
            Err(ConfigError::Field { line: 3, .. })
        ));
        assert!(matches!(
            parse_config("algebra = real-line\nmap = x\nspeed = 3\n"),
            Err(ConfigError::Field { line: 3, .. })
        ));
        assert!(matches!(
            parse_config("algebra = real-line\nmap = x\nmethod = sideways\n"),
            Err(ConfigError::Field { line: 3, .. })
        ));
        assert!(matches!(
            parse_config("algebra = real-line\nmap = x\ntol = 0\n"),
            Err(ConfigError::Field { line: 3, .. })
        ));
        assert!(matches!(
            parse_config("algebra = real-line\nmap = x\nphi2 = wobble(1)\n"),
            Err(ConfigError::Field { line: 3, .. })
        ));
    }

    #[test]
    fn control_specs() {
        assert_eq!(
            parse_control("sum_powers(2, -1)").unwrap(),
            ControlFunction::SumPowers {
                theta: 2.0,
                p: -1.0
            }
        );
        assert_eq!(
            parse_control("product_powers(1, 1, 1)").unwrap(),
            ControlFunction::ProductPowers {
                theta: 1.0,
                q: 1.0,
                p: 1.0
            }
        );
        assert_eq!(
            parse_control("tabulated_strict(2, [0:0, 1:3])").unwrap(),
            ControlFunction::tabulated(vec![(0.0, 0.0), (1.0, 3.0)], 2.0, false).unwrap()
        );
        assert!(parse_control("constant(1, 2)").is_err());
        assert!(parse_control("constant(-1)").is_err());
        assert!(parse_control("constant 1").is_err());
    }

    fn control() -> impl Strategy<Value = ControlFunction> {
        let t = 0.0f64..1e3;
        let p = -5.0f64..8.0;
        prop_oneof![
            t.clone()
                .prop_map(|theta| ControlFunction::Constant { theta }),
            (t.clone(), p.clone()).prop_map(|(theta, p)| ControlFunction::SumPowers { theta, p }),
            (t.clone(), p.clone(), p.clone())
                .prop_map(|(theta, q, p)| ControlFunction::ProductPowers { theta, q, p }),
            (t.clone(), p).prop_map(|(theta, p)| ControlFunction::PowerOfY { theta, p }),
            (prop::collection::vec(t, 1..5), 0.01f64..10.0, any::<bool>()).prop_map(
                |(vals, ratio, extrapolate)| {
                    let table = vals
                        .into_iter()
                        .enumerate()
                        .map(|(i, v)| (i as f64 + 0.5, v))
                        .collect();
                    ControlFunction::tabulated(table, ratio, extrapolate).unwrap()
                }
            ),
        ]
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(
            coeffs in prop::collection::vec(-100.0f64..100.0, 6),
            scale in -10.0f64..10.0,
            phi1 in control(),
            phi2 in control(),
            backward in any::<bool>(),
            tol in 1e-14f64..1e-3,
            n_max in 1usize..200,
            count in 1usize..1000,
            radius in 0.001f64..100.0,
            seed in any::<u64>(),
        ) {
            let text = format!(
                "algebra = strict-upper-4x4\nmap = {scale}*x^3 + 2*x + k\nconst.k = [{}]\nphi1 = {phi1}\nphi2 = {phi2}\n\
                 method = {}\ntol = {tol:e}\nn_max = {n_max}\nprobes.count = {count}\nprobes.radius = {radius}\n\
                 probes.seed = {seed}\noutput.csv = out/report.csv\n",
                coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", "),
                if backward { "backward" } else { "forward" },
            );
            let cfg = parse_config(&text).unwrap();
            let normalized = cfg.to_config_string();
            let again = parse_config(&normalized).unwrap();
            prop_assert_eq!(&again, &cfg);
            prop_assert_eq!(again.to_config_string(), normalized);
        }
    }
}
