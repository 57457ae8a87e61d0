//! Command-line front end for `trunctail`.
//!
//! Settings come from an optional flat `key = value` config file and from
//! flags; flags win. Each command accepts a fixed set of keys and rejects
//! anything else.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use trunctail::experiments::{default_k_grid, run_bias_rmse, run_clt_check, run_quantile_curve};
use trunctail::{io, CltReport, CurveResult, EstimatorKind, ExperimentSpec, HeavyTailModel, TheoryConstants};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Help or version text requested; not a failure.
    #[error("{0}")]
    Help(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
    #[error("cannot read {path}: {source}")]
    InputFile { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] trunctail::Error),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Help(_) => "OK",
            CliError::Usage(_) => "E_USAGE",
            CliError::Config(_) => "E_CONFIG",
            CliError::Output { .. } => "E_OUTPUT",
            CliError::InputFile { .. } => "E_IO",
            CliError::Core(e) => e.code(),
        }
    }

    /// `CODE: message` on a single line.
    pub fn render(&self) -> String {
        let message = self.to_string().replace('\n', " ");
        format!("{}: {message}", self.code())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Estimate,
    Curves,
    QuantileCurves,
    Clt,
    Constants,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Estimate => "estimate",
            Command::Curves => "curves",
            Command::QuantileCurves => "quantile-curves",
            Command::Clt => "clt",
            Command::Constants => "constants",
        }
    }

    /// Required and optional keys.
    fn keys(self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            Command::Estimate => (&["input", "k"], &["pn"]),
            Command::Curves => (&["model-x", "model-y", "n", "replicates", "seed", "output"], &["k-grid", "emit-plot-script"]),
            Command::QuantileCurves => (
                &["model-x", "model-y", "n", "replicates", "seed", "pn", "output"],
                &["k-grid", "emit-plot-script"],
            ),
            Command::Clt => (&["model-x", "model-y", "n", "replicates", "seed", "k"], &["output"]),
            Command::Constants => (&["model-x", "model-y"], &["rho1"]),
        }
    }
}

const KNOWN_KEYS: [&str; 12] = [
    "model-x",
    "model-y",
    "n",
    "replicates",
    "k",
    "k-grid",
    "pn",
    "rho1",
    "seed",
    "input",
    "output",
    "emit-plot-script",
];

#[derive(Debug, Parser)]
#[command(name = "trunctail", version, about = "Tail-index estimation under random right truncation")]
struct Args {
    command: Command,
    #[arg(long)]
    model_x: Option<String>,
    #[arg(long)]
    model_y: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    replicates: Option<String>,
    #[arg(long)]
    k: Option<String>,
    /// Comma-separated list or `start:stop:step` (inclusive).
    #[arg(long)]
    k_grid: Option<String>,
    #[arg(long)]
    pn: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    rho1: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    output: Option<String>,
    /// Flat `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write a matplotlib script drawing bias and RMSE against k.
    #[arg(long)]
    emit_plot_script: Option<String>,
}

impl Args {
    fn flag_values(&self) -> Vec<(&'static str, &String)> {
        let fields = [
            ("model-x", &self.model_x),
            ("model-y", &self.model_y),
            ("n", &self.n),
            ("replicates", &self.replicates),
            ("k", &self.k),
            ("k-grid", &self.k_grid),
            ("pn", &self.pn),
            ("rho1", &self.rho1),
            ("seed", &self.seed),
            ("input", &self.input),
            ("output", &self.output),
            ("emit-plot-script", &self.emit_plot_script),
        ];
        fields.into_iter().filter_map(|(k, v)| v.as_ref().map(|v| (k, v))).collect()
    }
}

/// Validated settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model_x: Option<HeavyTailModel>,
    pub model_y: Option<HeavyTailModel>,
    pub input_path: Option<PathBuf>,
    pub k: Option<usize>,
    pub k_grid: Option<Vec<usize>>,
    pub p_n: Option<f64>,
    pub rho1: Option<f64>,
    pub n: Option<usize>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub output_path: Option<PathBuf>,
    pub plot_script_path: Option<PathBuf>,
}

fn normalize_key(key: &str) -> String {
    let key = key.trim().to_ascii_lowercase().replace('_', "-");
    if key == "p-n" {
        "pn".into()
    } else {
        key
    }
}

/// Parses flat `key = value` text. Blank lines and lines starting with `#`
/// or `;` are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (index, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", index + 1)))?;
        let key = normalize_key(key);
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("line {}: unknown key `{key}`", index + 1)));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key `{key}`", index + 1)));
        }
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("invalid value `{raw}` for key `{key}`")))
}

/// Accepts `10,20,40` or `start:stop:step` with an inclusive stop.
pub fn parse_k_grid(raw: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = raw.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step): (usize, usize, usize) =
                (parse_value("k-grid", start)?, parse_value("k-grid", stop)?, parse_value("k-grid", step)?);
            if step == 0 {
                return Err(CliError::Config("k-grid step must be positive".into()));
            }
            Ok((start..=stop).step_by(step).collect())
        }
        [list] => list.split(',').map(|v| parse_value("k-grid", v)).collect(),
        _ => Err(CliError::Config(format!("invalid value `{raw}` for key `k-grid`"))),
    }
}

impl RunConfig {
    /// Builds a config from merged key/value settings, checking that exactly
    /// the keys of `command` are present.
    pub fn from_settings(command: Command, settings: &BTreeMap<String, String>) -> Result<Self> {
        let (required, optional) = command.keys();
        if let Some(missing) = required.iter().find(|k| !settings.contains_key(**k)) {
            return Err(CliError::Config(format!("command `{}` requires key `{missing}`", command.name())));
        }
        if let Some(extra) = settings.keys().find(|k| !required.contains(&k.as_str()) && !optional.contains(&k.as_str())) {
            return Err(CliError::Config(format!("key `{extra}` is not accepted by command `{}`", command.name())));
        }
        let get = |key: &str| settings.get(key).map(String::as_str);
        let model = |key: &str| get(key).map(str::parse::<HeavyTailModel>).transpose();
        Ok(RunConfig {
            command,
            model_x: model("model-x")?,
            model_y: model("model-y")?,
            input_path: get("input").map(PathBuf::from),
            k: get("k").map(|v| parse_value("k", v)).transpose()?,
            k_grid: get("k-grid").map(parse_k_grid).transpose()?,
            p_n: get("pn").map(|v| parse_value("pn", v)).transpose()?,
            rho1: get("rho1").map(|v| parse_value("rho1", v)).transpose()?,
            n: get("n").map(|v| parse_value("n", v)).transpose()?,
            replicates: get("replicates").map(|v| parse_value("replicates", v)).transpose()?,
            seed: get("seed").map(|v| parse_value("seed", v)).transpose()?,
            output_path: get("output").map(PathBuf::from),
            plot_script_path: get("emit-plot-script").map(PathBuf::from),
        })
    }

    /// Parses command-line arguments (program name first) and an optional
    /// `--config` file.
    pub fn from_args<I, T>(args: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        let args = Args::try_parse_from(args).map_err(|e| match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => CliError::Help(e.to_string()),
            _ => CliError::Usage(e.to_string().trim().to_string()),
        })?;
        let mut settings = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|source| CliError::InputFile { path: path.clone(), source })?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        for (key, value) in args.flag_values() {
            settings.insert(key.to_string(), value.clone());
        }
        Self::from_settings(args.command, &settings)
    }

    fn spec(&self) -> ExperimentSpec {
        let n = self.n.unwrap_or_default();
        ExperimentSpec {
            model_x: self.model_x.expect("validated"),
            model_y: self.model_y.expect("validated"),
            n,
            replicates: self.replicates.unwrap_or_default(),
            k_grid: self.k_grid.clone().unwrap_or_else(|| default_k_grid(n)),
            p_n: self.p_n,
            seed: self.seed.unwrap_or_default(),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Output { path: path.to_path_buf(), source })
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

/// Estimates the tail index (and the extreme quantile when `pn` is given)
/// from an `x,y` CSV file.
pub fn cmd_estimate(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let path = config.input_path.as_ref().expect("validated");
    let file = File::open(path).map_err(|source| CliError::InputFile { path: path.clone(), source })?;
    let sample = io::read_sample(file)?;
    let k = config.k.expect("validated");
    let est = sample.evi_lynden_bell(k)?;
    let mut report = String::new();
    let _ = writeln!(report, "estimator = {}", est.kind);
    let _ = writeln!(report, "n = {}", sample.len());
    let _ = writeln!(report, "k = {}", est.k);
    let _ = writeln!(report, "threshold = {}", est.threshold);
    let _ = writeln!(report, "exceedances = {}", sample.sorted_x().iter().filter(|&&x| x > est.threshold).count());
    let _ = writeln!(report, "tail_mass = {}", est.tail_mass);
    let _ = writeln!(report, "degenerate_point = {}", fmt_opt(est.degenerate_mass_at));
    let _ = writeln!(report, "gamma = {}", est.value);
    if let Some(p_n) = config.p_n {
        let q = sample.quantile_weissman(k, p_n)?;
        let _ = writeln!(report, "pn = {p_n}");
        let _ = writeln!(report, "quantile = {q}");
    }
    out.write_all(report.as_bytes())
        .map_err(|source| CliError::Output { path: "<stdout>".into(), source })
}

fn write_curve_outputs(config: &RunConfig, curve: &CurveResult, title: &str, out: &mut dyn Write) -> Result<()> {
    let path = config.output_path.as_ref().expect("validated");
    let mut file = create(path)?;
    io::write_curves(curve, &mut file)?;
    file.flush().map_err(|source| CliError::Output { path: path.clone(), source })?;
    let mut note = format!("wrote {} rows to {}\n", curve.cells.len(), path.display());
    if let Some(script_path) = &config.plot_script_path {
        let mut script = create(script_path)?;
        script
            .write_all(plot_script(curve, title).as_bytes())
            .and_then(|_| script.flush())
            .map_err(|source| CliError::Output { path: script_path.clone(), source })?;
        let _ = writeln!(note, "wrote plot script to {}", script_path.display());
    }
    out.write_all(note.as_bytes())
        .map_err(|source| CliError::Output { path: "<stdout>".into(), source })
}

fn checked_spec(config: &RunConfig, warn: &mut dyn Write) -> Result<ExperimentSpec> {
    let spec = config.spec();
    for warning in spec.validate()? {
        let _ = writeln!(warn, "warning: {warning}");
    }
    Ok(spec)
}

/// Bias/RMSE curves of both tail-index estimators.
pub fn cmd_curves(config: &RunConfig, out: &mut dyn Write, warn: &mut dyn Write) -> Result<()> {
    let spec = checked_spec(config, warn)?;
    let curve = run_bias_rmse(&spec)?;
    let title = format!("{} truncated by {}, n = {}", spec.model_x, spec.model_y, spec.n);
    write_curve_outputs(config, &curve, &title, out)
}

/// Bias/RMSE curves of the relative error of the extreme-quantile estimate.
pub fn cmd_quantile_curves(config: &RunConfig, out: &mut dyn Write, warn: &mut dyn Write) -> Result<()> {
    let spec = checked_spec(config, warn)?;
    let curve = run_quantile_curve(&spec)?;
    let title = format!(
        "{} truncated by {}, n = {}, pn = {}",
        spec.model_x,
        spec.model_y,
        spec.n,
        spec.p_n.unwrap_or_default()
    );
    write_curve_outputs(config, &curve, &title, out)
}

pub const CLT_HEADER: [&str; 10] = ["n", "k", "replicates", "failures", "rate", "s2", "mean", "variance", "variance_ratio", "ks"];

fn clt_row(report: &CltReport) -> [String; 10] {
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    [
        report.n.to_string(),
        report.k.to_string(),
        report.replicates.to_string(),
        report.failures.to_string(),
        report.rate.to_string(),
        report.s2.to_string(),
        opt(report.mean),
        opt(report.variance),
        opt(report.variance_ratio),
        opt(report.ks),
    ]
}

/// Standardized tail-index estimates at one `k` compared with their
/// asymptotic normal law.
pub fn cmd_clt(config: &RunConfig, out: &mut dyn Write, warn: &mut dyn Write) -> Result<()> {
    let mut spec = config.spec();
    spec.k_grid = vec![config.k.expect("validated")];
    for warning in spec.validate()? {
        let _ = writeln!(warn, "warning: {warning}");
    }
    let report = run_clt_check(&spec.model_x, &spec.model_y, spec.n, spec.k_grid[0], spec.replicates, spec.seed)?;
    let mut text = String::new();
    for (key, value) in CLT_HEADER.iter().zip(clt_row(&report)) {
        let value = if value.is_empty() { "NA".to_string() } else { value };
        let _ = writeln!(text, "{key} = {value}");
    }
    if let Some(path) = &config.output_path {
        let mut file = create(path)?;
        let line = format!("{}\n{}\n", CLT_HEADER.join(","), clt_row(&report).join(","));
        file.write_all(line.as_bytes())
            .and_then(|_| file.flush())
            .map_err(|source| CliError::Output { path: path.clone(), source })?;
    }
    out.write_all(text.as_bytes())
        .map_err(|source| CliError::Output { path: "<stdout>".into(), source })
}

/// Prints the asymptotic constants of the model pair.
pub fn cmd_constants(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let constants = TheoryConstants::new(
        config.model_x.as_ref().expect("validated"),
        config.model_y.as_ref().expect("validated"),
        config.rho1,
    )?;
    out.write_all(constants.to_string().as_bytes())
        .map_err(|source| CliError::Output { path: "<stdout>".into(), source })
}

pub fn execute(config: &RunConfig, out: &mut dyn Write, warn: &mut dyn Write) -> Result<()> {
    match config.command {
        Command::Estimate => cmd_estimate(config, out),
        Command::Curves => cmd_curves(config, out, warn),
        Command::QuantileCurves => cmd_quantile_curves(config, out, warn),
        Command::Clt => cmd_clt(config, out, warn),
        Command::Constants => cmd_constants(config, out),
    }
}

/// Python literal for a float; `None` when absent.
fn py_float(value: Option<f64>) -> String {
    match value {
        Some(v) if v.is_finite() => format!("{v:?}"),
        _ => "None".into(),
    }
}

/// A standalone matplotlib script with the curve data inlined: bias on the
/// left, RMSE on the right.
pub fn plot_script(curve: &CurveResult, title: &str) -> String {
    let mut kinds: Vec<EstimatorKind> = curve.cells.iter().map(|c| c.kind).collect();
    kinds.sort();
    kinds.dedup();
    let mut s = String::new();
    s.push_str("import matplotlib.pyplot as plt\n\n");
    s.push_str("curves = {\n");
    for kind in kinds {
        let cells: Vec<_> = curve.curve(kind).collect();
        let ks: Vec<String> = cells.iter().map(|c| c.k.to_string()).collect();
        let bias: Vec<String> = cells.iter().map(|c| py_float(c.stats.map(|s| s.bias))).collect();
        let rmse: Vec<String> = cells.iter().map(|c| py_float(c.stats.map(|s| s.rmse))).collect();
        let _ = writeln!(s, "    {:?}: {{", kind.name());
        let _ = writeln!(s, "        \"k\": [{}],", ks.join(", "));
        let _ = writeln!(s, "        \"bias\": [{}],", bias.join(", "));
        let _ = writeln!(s, "        \"rmse\": [{}],", rmse.join(", "));
        s.push_str("    },\n");
    }
    s.push_str("}\n\n");
    s.push_str("fig, (ax_bias, ax_rmse) = plt.subplots(1, 2, figsize=(11, 4))\n");
    s.push_str("for name, data in curves.items():\n");
    s.push_str("    ax_bias.plot(data[\"k\"], data[\"bias\"], label=name)\n");
    s.push_str("    ax_rmse.plot(data[\"k\"], data[\"rmse\"], label=name)\n");
    s.push_str("ax_bias.axhline(0.0, color=\"grey\", linewidth=0.5)\n");
    s.push_str("ax_bias.set_xlabel(\"k\")\nax_bias.set_ylabel(\"bias\")\n");
    s.push_str("ax_rmse.set_xlabel(\"k\")\nax_rmse.set_ylabel(\"RMSE\")\n");
    s.push_str("ax_rmse.legend()\n");
    let _ = writeln!(s, "fig.suptitle({title:?})");
    s.push_str("fig.tight_layout()\nplt.show()\n");
    s
}

/// Parses `args` and runs the selected command.
pub fn run<I, T>(args: I, out: &mut dyn Write, warn: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = RunConfig::from_args(args)?;
    execute(&config, out, warn)
}
