use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use cubicstab_core::{
    analyze, defect_samples, worked_example_input, AnalysisInput, DefectKind, Error, MapEvaluator,
    ReportTolerances, StabilityReport,
};

use crate::config::{parse_config, ConfigError, Outputs, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_BOUND: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "cubicstab",
    version,
    about = "Approximate cubic homomorphisms: defects, limits and error bounds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the built-in strict-upper-4x4 example (f = x^3 + a, phi1 = 4, phi2 = 56).
    Example(Overrides),
    /// Run a full stability analysis from a config file.
    Analyze {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Sample the multiplicative and cubic defects of the configured map.
    Defects {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Number of probe pairs.
    #[arg(long)]
    pub probes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-probe CSV report.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Text summary (also printed to stdout).
    #[arg(long)]
    pub text: Option<PathBuf>,
    /// Iteration trace CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("config error: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("cannot write {path}: {message}")]
    Write { path: PathBuf, message: String },
    #[error("numeric failure ({kind}){probe}: {source}")]
    Numeric {
        kind: &'static str,
        probe: String,
        source: Error,
    },
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Numeric { .. } => EXIT_NUMERIC,
            _ => EXIT_CONFIG,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if !e.is_numeric() {
            return Failure::Invalid(e.to_string());
        }
        let probe = e
            .probe()
            .map(|i| format!(" at probe {i}"))
            .unwrap_or_default();
        let source = match e {
            Error::AtProbe { source, .. } => *source,
            other => other,
        };
        Failure::Numeric {
            kind: source.kind(),
            probe,
            source,
        }
    }
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), Failure> {
        if let Some(tol) = self.tol {
            cfg.settings.tol = tol;
        }
        if let Some(n) = self.n_max {
            cfg.settings.n_max = n;
        }
        cfg.settings
            .validate()
            .map_err(|e| Failure::Invalid(format!("command-line override: {e}")))?;
        if let Some(count) = self.probes {
            if count == 0 {
                return Err(Failure::Invalid("--probes must be >= 1".into()));
            }
            cfg.probes.count = count;
        }
        if let Some(seed) = self.seed {
            cfg.probes.seed = seed;
        }
        let Outputs { csv, text, trace } = &mut cfg.outputs;
        for (slot, given) in [(csv, &self.csv), (text, &self.text), (trace, &self.trace)] {
            if given.is_some() {
                slot.clone_from(given);
            }
        }
        Ok(())
    }
}

fn load(path: &Path) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Read {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(parse_config(&text)?)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::Write {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_report(
    report: &StabilityReport,
    outputs: &Outputs,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    let text = report.to_text();
    let _ = stdout.write_all(text.as_bytes());
    if let Some(path) = &outputs.csv {
        write_file(path, report.csv_string().as_bytes())?;
    }
    if let Some(path) = &outputs.text {
        write_file(path, text.as_bytes())?;
    }
    if let Some(path) = &outputs.trace {
        let mut buf = Vec::new();
        report.write_trace_csv(&mut buf)?;
        write_file(path, &buf)?;
    }
    Ok(())
}

/// Exit status for a finished report: bound violations first, then residuals.
fn verdict(report: &StabilityReport, stderr: &mut dyn Write) -> i32 {
    if let Some(r) = report.first_violation() {
        let _ = writeln!(
            stderr,
            "bound violated at probe {}: err_Tf = {} > bound = {}",
            r.probe_index, r.err_tf, r.bound
        );
        return EXIT_BOUND;
    }
    if !report.residuals_ok() {
        let _ = writeln!(
            stderr,
            "residuals of T exceed {:e}: cubic {:e}, multiplicative {:e}",
            report.tolerances.residual, report.max_cubic_residual, report.max_mult_residual
        );
        return EXIT_BOUND;
    }
    EXIT_OK
}

fn example_config() -> RunConfig {
    let input = worked_example_input(Default::default(), Default::default());
    let k = input.f.constant().clone();
    RunConfig {
        algebra: input.f.algebra(),
        map: crate::expr::MapExpression::parse("x^3 + a").expect("static expression"),
        constants: [("a".to_string(), k)].into(),
        phi1: Some(input.phi1),
        phi2: Some(input.phi2),
        method: input.method,
        settings: input.settings,
        probes: input.probes,
        outputs: Outputs::default(),
    }
}

fn run_analysis(
    cfg: &RunConfig,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, Failure> {
    let input = AnalysisInput {
        f: cfg.map_spec(),
        phi1: cfg.phi1.clone().ok_or(ConfigError::Missing("phi1"))?,
        phi2: cfg.phi2.clone().ok_or(ConfigError::Missing("phi2"))?,
        method: cfg.method,
        settings: cfg.settings,
        probes: cfg.probes,
        tolerances: ReportTolerances::default(),
    };
    let report = analyze(&input)?;
    write_report(&report, &cfg.outputs, stdout)?;
    Ok(verdict(&report, stderr))
}

pub fn cmd_example(overrides: &Overrides, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    finish(
        (|| {
            let mut cfg = example_config();
            overrides.apply(&mut cfg)?;
            run_analysis(&cfg, stdout, stderr)
        })(),
        stderr,
    )
}

pub fn cmd_analyze(
    path: &Path,
    overrides: &Overrides,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    finish(
        (|| {
            let mut cfg = load(path)?;
            overrides.apply(&mut cfg)?;
            run_analysis(&cfg, stdout, stderr)
        })(),
        stderr,
    )
}

pub const DEFECTS_HEADER: [&str; 5] = [
    "probe_index",
    "norm_x",
    "norm_y",
    "defect_mult",
    "defect_cubic",
];

pub fn cmd_defects(
    path: &Path,
    overrides: &Overrides,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    finish(
        (|| {
            let mut cfg = load(path)?;
            overrides.apply(&mut cfg)?;
            let f = cfg.map_spec();
            let mult = defect_samples(&f, DefectKind::Mult, &cfg.probes)?;
            let cubic = defect_samples(&f, DefectKind::Cubic, &cfg.probes)?;
            let sup =
                |s: &[cubicstab_core::DefectSample]| s.iter().fold(0.0, |m: f64, d| m.max(d.value));
            let _ = writeln!(stdout, "map            : {f}");
            let _ = writeln!(
                stdout,
                "probes         : {} pairs, radius {}, seed {}",
                cfg.probes.count, cfg.probes.radius, cfg.probes.seed
            );
            let _ = writeln!(stdout, "sup mult defect  ~ {}", sup(&mult));
            let _ = writeln!(stdout, "sup cubic defect ~ {}", sup(&cubic));
            if let Some(out) = &cfg.outputs.csv {
                let mut w = csv::Writer::from_writer(Vec::new());
                let rows = mult.iter().zip(&cubic).enumerate();
                w.write_record(DEFECTS_HEADER).map_err(Error::from)?;
                for (i, (m, c)) in rows {
                    w.write_record([
                        i.to_string(),
                        m.x.norm().to_string(),
                        m.y.norm().to_string(),
                        m.value.to_string(),
                        c.value.to_string(),
                    ])
                    .map_err(Error::from)?;
                }
                let bytes = w
                    .into_inner()
                    .map_err(|e| Failure::Invalid(e.to_string()))?;
                write_file(out, &bytes)?;
            }
            Ok(EXIT_OK)
        })(),
        stderr,
    )
}

fn finish(result: Result<i32, Failure>, stderr: &mut dyn Write) -> i32 {
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match &cli.command {
        Command::Example(o) => cmd_example(o, stdout, stderr),
        Command::Analyze { config, overrides } => cmd_analyze(config, overrides, stdout, stderr),
        Command::Defects { config, overrides } => cmd_defects(config, overrides, stdout, stderr),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cubicstab_core::{example_constant_a, MapSpec};

    #[test]
    fn example_config_round_trips_to_builtin_input() {
        let cfg = example_config();
        assert_eq!(cfg.map_spec(), MapSpec::cubic_plus(example_constant_a()));
        let reparsed = parse_config(&cfg.to_config_string()).unwrap();
        assert_eq!(reparsed, cfg);
    }

    #[test]
    fn overrides_apply_and_validate() {
        let mut cfg = example_config();
        let o = Overrides {
            tol: Some(1e-12),
            n_max: Some(60),
            probes: Some(7),
            seed: Some(9),
            csv: Some("r.csv".into()),
            ..Default::default()
        };
        o.apply(&mut cfg).unwrap();
        assert_eq!((cfg.settings.tol, cfg.settings.n_max), (1e-12, 60));
        assert_eq!((cfg.probes.count, cfg.probes.seed), (7, 9));
        assert_eq!(cfg.outputs.csv, Some(PathBuf::from("r.csv")));

        let bad = Overrides {
            tol: Some(-1.0),
            ..Default::default()
        };
        assert_eq!(
            bad.apply(&mut example_config()).unwrap_err().exit_code(),
            EXIT_CONFIG
        );
    }

    #[test]
    fn numeric_errors_keep_probe_and_kind() {
        let inner = Error::Divergent("sum_powers(1, 3) at p = 3".into());
        let f = Failure::from(Error::AtProbe {
            index: 5,
            source: Box::new(inner),
        });
        assert_eq!(f.exit_code(), EXIT_NUMERIC);
        let msg = f.to_string();
        assert!(
            msg.contains("Divergent") && msg.contains("probe 5"),
            "{msg}"
        );
    }

    #[test]
    fn example_runs_clean_in_memory() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = cmd_example(&Overrides::default(), &mut out, &mut err);
        assert_eq!(code, EXIT_OK, "{}", String::from_utf8_lossy(&err));
        assert!(String::from_utf8(out)
            .unwrap()
            .contains("bound_ok       : 100/100"));
    }
}
