//! Experiment configuration: a TOML file with `chart`, `run`, `tolerances`
//! and `output` sections, plus `--section.key=value` overrides.

use std::fmt;
use std::path::Path;

use legendrian_core::expr::RationalExpr;
use legendrian_core::selftest::{scan_radii, STANDARD_P, STANDARD_Q};
use legendrian_core::C64;
use serde::{Deserialize, Serialize};

/// A configuration problem. Maps to exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// A real number or a complex literal such as `"1e-3+2e-3i"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Text(String),
}

impl Scalar {
    pub fn to_complex(&self, key: &str) -> Result<C64, ConfigError> {
        match self {
            Scalar::Real(v) => Ok(C64::new(*v, 0.0)),
            Scalar::Text(s) => {
                let e: RationalExpr = s
                    .parse()
                    .map_err(|e| ConfigError(format!("{key}: {e}")))?;
                e.eval(&[C64::new(0.0, 0.0); 3])
                    .ok()
                    .filter(|_| !e.mentions(legendrian_core::expr::Var::X))
                    .filter(|_| !e.mentions(legendrian_core::expr::Var::Y))
                    .filter(|_| !e.mentions(legendrian_core::expr::Var::Z))
                    .ok_or_else(|| ConfigError(format!("{key}: `{s}` is not a complex constant")))
            }
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSection {
    #[serde(rename = "P")]
    pub p: Option<String>,
    #[serde(rename = "Q")]
    pub q: Option<String>,
    pub delta: Option<f64>,
    /// Upper bound on the domain radius `5νδ`.
    pub clamp: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub r_list: Option<Vec<f64>>,
    pub r: Option<f64>,
    pub w: Option<Scalar>,
    pub n: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub x0: Option<Vec<Scalar>>,
    pub stokes: Option<bool>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub quad: Option<f64>,
    pub surface: Option<f64>,
    pub accumulate_rtol: Option<f64>,
    pub accumulate_atol: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<String>,
    pub format: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    chart: ChartSection,
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    tolerances: ToleranceSection,
    #[serde(default)]
    output: OutputSection,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub chart: ResolvedChart,
    pub run: ResolvedRun,
    pub tolerances: Tolerances,
    pub output: ResolvedOutput,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedChart {
    #[serde(rename = "P")]
    pub p: String,
    #[serde(rename = "Q")]
    pub q: String,
    pub delta: f64,
    pub clamp: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedRun {
    pub r_list: Vec<f64>,
    pub r: Option<f64>,
    #[serde(serialize_with = "ser_complex")]
    pub w: C64,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    #[serde(serialize_with = "ser_complex_list")]
    pub x0: Vec<C64>,
    pub stokes: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub quad: f64,
    pub surface: f64,
    pub accumulate_rtol: f64,
    pub accumulate_atol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedOutput {
    pub path: Option<String>,
    pub format: String,
}

fn ser_complex<S: serde::Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&crate::output::complex(*z))
}

fn ser_complex_list<S: serde::Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&crate::output::complex(*z))?;
    }
    seq.end()
}

/// Keys whose override values are always taken verbatim as strings.
const STRING_KEYS: [&str; 4] = ["chart.P", "chart.Q", "output.path", "output.format"];

/// Parse one `section.key=value` override into the table.
fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let Some((key, value)) = assignment.split_once('=') else {
        return err(format!("override `{assignment}` is not of the form section.key=value"));
    };
    let Some((section, field)) = key.split_once('.') else {
        return err(format!("override key `{key}` must be section.key"));
    };
    let parsed = if STRING_KEYS.contains(&key) {
        toml::Value::String(value.to_string())
    } else {
        match format!("v = {value}").parse::<toml::Table>() {
            Ok(mut t) => t.remove("v").expect("key v present"),
            Err(_) => toml::Value::String(value.to_string()),
        }
    };
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match entry {
        toml::Value::Table(t) => {
            t.insert(field.to_string(), parsed);
            Ok(())
        }
        _ => err(format!("`{section}` is not a section")),
    }
}

impl ExperimentConfig {
    /// Load from an optional file, then apply overrides. Without a file the
    /// standard contact chart is used.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| ConfigError(format!("cannot read {}: {e}", p.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| ConfigError(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let raw: RawConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError(e.to_string()))?;
        Self::resolve(raw, path.is_some())
    }

    fn resolve(raw: RawConfig, from_file: bool) -> Result<Self, ConfigError> {
        let default_p = (!from_file).then(|| STANDARD_P.to_string());
        let default_q = (!from_file).then(|| STANDARD_Q.to_string());
        let Some(p) = raw.chart.p.or(default_p) else {
            return err("missing required key chart.P");
        };
        let Some(q) = raw.chart.q.or(default_q) else {
            return err("missing required key chart.Q");
        };
        let delta = raw.chart.delta.unwrap_or(0.05);
        if !(delta > 0.0) {
            return err(format!("chart.delta must be positive, got {delta}"));
        }
        let w = match raw.run.w {
            Some(s) => s.to_complex("run.w")?,
            None => C64::new(delta / 10.0, 0.0),
        };
        let x0 = match raw.run.x0 {
            Some(v) => v
                .iter()
                .map(|s| s.to_complex("run.x0"))
                .collect::<Result<Vec<_>, _>>()?,
            None => vec![C64::new(1e-2, 0.0), C64::new(1e-3, 1e-3)],
        };
        let mut r_list = raw.run.r_list.unwrap_or_else(scan_radii);
        if r_list.iter().any(|r| !(*r > 0.0)) {
            return err("run.r_list: hypothesis r > 0 fails");
        }
        r_list.sort_by(|a, b| b.total_cmp(a));
        let format = raw.output.format.unwrap_or_else(|| "csv".into());
        if format != "csv" {
            return err(format!("output.format `{format}` is not supported (use csv)"));
        }
        let n = raw.run.n.unwrap_or(10);
        Ok(ExperimentConfig {
            chart: ResolvedChart {
                p,
                q,
                delta,
                clamp: raw.chart.clamp,
            },
            run: ResolvedRun {
                r_list,
                r: raw.run.r,
                w,
                n,
                samples: raw.run.samples.unwrap_or(1000).max(1),
                seed: raw.run.seed.unwrap_or(20240611),
                x0,
                stokes: raw.run.stokes.unwrap_or(true),
            },
            tolerances: Tolerances {
                rtol: raw.tolerances.rtol.unwrap_or(1e-11),
                atol: raw.tolerances.atol.unwrap_or(1e-13),
                quad: raw.tolerances.quad.unwrap_or(1e-10),
                surface: raw.tolerances.surface.unwrap_or(1e-9),
                accumulate_rtol: raw.tolerances.accumulate_rtol.unwrap_or(1e-13),
                accumulate_atol: raw.tolerances.accumulate_atol.unwrap_or(1e-16),
            },
            output: ResolvedOutput {
                path: raw.output.path.filter(|p| p != "-"),
                format,
            },
        })
    }

    pub fn p_expr(&self) -> Result<RationalExpr, ConfigError> {
        self.chart
            .p
            .parse()
            .map_err(|e| ConfigError(format!("chart.P: {e}")))
    }

    pub fn q_expr(&self) -> Result<RationalExpr, ConfigError> {
        self.chart
            .q
            .parse()
            .map_err(|e| ConfigError(format!("chart.Q: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_without_file() {
        let c = ExperimentConfig::load(None, &[]).unwrap();
        assert_eq!(c.chart.p, "-y/2");
        assert_eq!(c.run.w, C64::new(0.005, 0.0));
        assert_eq!(c.run.r_list.len(), 7);
    }

    #[test]
    fn overrides_parse_values() {
        let c = ExperimentConfig::load(
            None,
            &[
                "chart.P=-y/2+z^2/10".into(),
                "run.w=1e-3+2e-3i".into(),
                "run.r_list=[0.1, 0.2]".into(),
                "run.n=4".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.chart.p, "-y/2+z^2/10");
        assert_eq!(c.run.w, C64::new(1e-3, 2e-3));
        assert_eq!(c.run.r_list, vec![0.2, 0.1]);
        assert_eq!(c.run.n, 4);
    }

    #[test]
    fn bad_keys_are_named() {
        let e = ExperimentConfig::load(None, &["run.bogus=1".into()]).unwrap_err();
        assert!(e.0.contains("bogus"), "{e}");
        let e = ExperimentConfig::load(None, &["run.w=x+1".into()]).unwrap_err();
        assert!(e.0.contains("run.w"), "{e}");
        let e = ExperimentConfig::load(None, &["runw".into()]).unwrap_err();
        assert!(e.0.contains("section.key=value"), "{e}");
    }
}
