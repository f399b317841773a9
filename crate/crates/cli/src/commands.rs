//! Subcommands, path resolution and execution of one study.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use braess_core::ac::{linspace, reactance_sweep, NewtonOptions};
use braess_core::dc::{max_loaded_line, LoadMeasure};
use braess_core::evaluation::{evaluate_predictor, report_to_csv, report_to_json, EvaluationOptions};
use braess_core::extension::{
    current_histograms_csv, histogram_csv, n_plus_one_sweep, SweepOptions, DEFAULT_BIN_WIDTH, DEFAULT_FACTOR,
    DEFAULT_HEADROOM,
};
use braess_core::grid::{example_network, example_networks, load_network, write_native, GridNetwork, LineId};
use braess_core::predictor::{predict_alignment_with, PathRule, PredictorOptions, DEFAULT_SEARCH_BUDGET};
use braess_core::solvers::SolverRegistry;
use braess_core::susceptibility::{
    label_from, normalization, susceptibility_table, table_to_csv, SusceptibilityEngine, DEFAULT_THRESHOLD,
};
use braess_core::topology::{EnsembleFile, EnsembleSpec, GeneratorRegistry};
use braess_core::{GridError, Result};
use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::manifest::{Manifest, StudyConfig, MANIFEST_FILE};

/// Prefix selecting a bundled network instead of a file.
pub const BUILTIN_PREFIX: &str = "builtin:";

#[derive(Subcommand, Debug)]
pub enum Command {
    #[command(flatten)]
    Study(Study),
    /// Run a study described by a TOML config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-run a study from its manifest.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
    },
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Study {
    /// DC or AC flow on one network: flows.csv and nodes.csv.
    Solve(SolveArgs),
    /// AC line currents while sweeping one line's reactance: sweep.csv.
    SweepReactance(SweepReactanceArgs),
    /// Edge-to-edge flow susceptibilities with Braessian labels: susceptibility.csv.
    Susceptibility(SusceptibilityArgs),
    /// Predicted alignment of each upgraded line with an observed line: predictions.csv.
    Predict(PredictArgs),
    /// Predictor statistics over topology ensembles: report.csv and report.json.
    Evaluate(EvaluateArgs),
    /// Upgrade every line in turn and record all currents: cases, histograms, failures.
    #[command(name = "nplus1", alias = "sweep")]
    #[serde(rename = "nplus1", alias = "sweep")]
    Nplus1(Nplus1Args),
    /// Draw one network from a topology generator: network.grid.
    Generate(GenerateArgs),
    /// Write the bundled networks as .grid files.
    Examples,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMode {
    Dc,
    Ac,
}

impl SolverMode {
    fn as_str(self) -> &'static str {
        match self {
            SolverMode::Dc => "dc",
            SolverMode::Ac => "ac",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    #[default]
    SimpleCycle,
    Concatenated,
}

impl From<Rule> for PathRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::SimpleCycle => PathRule::SimpleCycle,
            Rule::Concatenated => PathRule::Concatenated,
        }
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveArgs {
    /// Network file (.grid native or .edges edge list) or `builtin:NAME`.
    #[arg(long)]
    pub network: String,
    /// Flow model; defaults to the mode declared in the network file.
    #[arg(long, value_enum)]
    #[serde(default)]
    pub mode: Option<SolverMode>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepReactanceArgs {
    #[arg(long)]
    pub network: String,
    /// Swept line id (0-based).
    #[arg(long)]
    pub line: usize,
    /// First reactance in ohms.
    #[arg(long, default_value_t = 0.25)]
    #[serde(default = "default_x_from")]
    pub from: f64,
    /// Last reactance in ohms.
    #[arg(long, default_value_t = 0.01)]
    #[serde(default = "default_x_to")]
    pub to: f64,
    /// Number of sweep points, endpoints included.
    #[arg(long, default_value_t = 25)]
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Start every point from a flat profile instead of the previous solution.
    #[arg(long)]
    #[serde(default)]
    pub cold_start: bool,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SusceptibilityArgs {
    #[arg(long)]
    pub network: String,
    /// Observed line ids, comma separated (default: all lines).
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub observed: Vec<usize>,
    /// Cutoff on the normalized susceptibility below which a pair is negligible.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictArgs {
    #[arg(long)]
    pub network: String,
    /// Upgraded line ids, comma separated (default: every other line).
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub upgraded: Vec<usize>,
    /// Observed line id (default: the maximally loaded line).
    #[arg(long)]
    #[serde(default)]
    pub observed: Option<usize>,
    #[arg(long, value_enum, default_value_t = Rule::SimpleCycle)]
    #[serde(default)]
    pub rule: Rule,
    /// Add the susceptibility-based Braessian label of each pair.
    #[arg(long)]
    #[serde(default)]
    pub ground_truth: bool,
    /// Cutoff used for the ground-truth label.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// State budget of the exact tie search; exhaustion yields `undefined`.
    #[arg(long, default_value_t = DEFAULT_SEARCH_BUDGET)]
    #[serde(default = "default_budget")]
    pub search_budget: usize,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateArgs {
    /// Ensemble file with `[[ensemble]]` tables.
    #[arg(long, required = true)]
    #[serde(default)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Rule::SimpleCycle)]
    #[serde(default)]
    pub rule: Rule,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[arg(long, default_value_t = DEFAULT_SEARCH_BUDGET)]
    #[serde(default = "default_budget")]
    pub search_budget: usize,
    /// Ensembles as resolved at run time; recorded in manifests.
    #[arg(skip)]
    #[serde(default)]
    pub ensembles: Vec<EnsembleSpec>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Nplus1Args {
    #[arg(long)]
    pub network: String,
    #[arg(long, value_enum, default_value_t = SolverMode::Dc)]
    #[serde(default = "default_mode")]
    pub mode: SolverMode,
    /// Susceptance multiplier applied to the upgraded line.
    #[arg(long, default_value_t = DEFAULT_FACTOR)]
    #[serde(default = "default_factor")]
    pub factor: f64,
    /// Synthesized limit as a multiple of the base current, for lines without one.
    #[arg(long, default_value_t = DEFAULT_HEADROOM)]
    #[serde(default = "default_headroom")]
    pub headroom: f64,
    /// Bin width of the relative-change histogram.
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
    /// Bin width of the per-line current histograms, in amperes (DC: flow units).
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    #[serde(default = "default_bin_width")]
    pub current_bin_width: f64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateArgs {
    /// Generator name: square-lattice, voronoi, random-grid or ieee300.
    #[arg(long)]
    pub topology: String,
    /// Generator parameters as inline TOML, e.g. `rows = 10, cols = 10`.
    #[arg(long, default_value = "")]
    #[serde(default)]
    pub params: String,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,
    /// Network index within the seeded ensemble.
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub index: usize,
    /// Also draw balanced +-1 injections for this sample index.
    #[arg(long)]
    #[serde(default)]
    pub sample: Option<usize>,
}

fn default_x_from() -> f64 {
    0.25
}
fn default_x_to() -> f64 {
    0.01
}
fn default_steps() -> usize {
    25
}
fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}
fn default_budget() -> usize {
    DEFAULT_SEARCH_BUDGET
}
fn default_mode() -> SolverMode {
    SolverMode::Dc
}
fn default_factor() -> f64 {
    DEFAULT_FACTOR
}
fn default_headroom() -> f64 {
    DEFAULT_HEADROOM
}
fn default_bin_width() -> f64 {
    DEFAULT_BIN_WIDTH
}

/// Dispatches one invocation and returns the files written.
pub fn run(command: Command, out: Option<&Path>, seed: Option<u64>) -> Result<Vec<PathBuf>> {
    match command {
        Command::Study(study) => {
            let cwd = std::env::current_dir()?;
            execute(study.resolve(&cwd, seed)?, out.unwrap_or(Path::new(DEFAULT_OUT)), seed)
        }
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config)?;
            let cfg = StudyConfig::from_toml(&text)?;
            let base = config.parent().map(Path::to_path_buf).unwrap_or_default();
            let base = if base.as_os_str().is_empty() { PathBuf::from(".") } else { base };
            let seed = seed.or(cfg.seed);
            let dir = match (out, &cfg.out) {
                (Some(o), _) => o.to_path_buf(),
                (None, Some(o)) => base.join(o),
                (None, None) => PathBuf::from(DEFAULT_OUT),
            };
            execute(cfg.study.resolve(&base, seed)?, &dir, seed)
        }
        Command::Rerun { manifest } => {
            let m = Manifest::read(&manifest)?;
            m.check_tool()?;
            let dir = out.unwrap_or(Path::new(DEFAULT_OUT));
            execute(m.study, dir, m.seed)
        }
    }
}

/// Output directory when neither `--out` nor `BRAESS_OUT_DIR` is given.
pub const DEFAULT_OUT: &str = "braess-out";

fn execute(study: Study, out: &Path, seed: Option<u64>) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out)?;
    let files = study.outputs()?;
    let mut written = Vec::new();
    for (name, content) in &files {
        let path = out.join(name);
        std::fs::write(&path, content)?;
        written.push(path);
    }
    let manifest = Manifest::new(study, seed, files.iter().map(|f| f.0.clone()).collect());
    let path = out.join(MANIFEST_FILE);
    manifest.write(&path)?;
    written.push(path);
    Ok(written)
}

fn resolve_network(spec: &str, base: &Path) -> Result<String> {
    if spec.starts_with(BUILTIN_PREFIX) {
        return Ok(spec.to_string());
    }
    let path = base.join(spec);
    let canon = path.canonicalize().map_err(|e| {
        GridError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?;
    Ok(canon.to_string_lossy().into_owned())
}

fn open_network(spec: &str) -> Result<GridNetwork> {
    match spec.strip_prefix(BUILTIN_PREFIX) {
        Some(name) => example_network(name),
        None => load_network(Path::new(spec), None),
    }
}

fn lines_checked(network: &GridNetwork, ids: &[usize]) -> Result<Vec<LineId>> {
    ids.iter()
        .map(|&i| network.line(LineId(i)).map(|_| LineId(i)))
        .collect()
}

impl Study {
    /// Makes the study self-contained: absolute input paths, ensembles read
    /// from their file, seed overrides applied.
    pub fn resolve(self, base: &Path, seed: Option<u64>) -> Result<Study> {
        Ok(match self {
            Study::Solve(mut a) => {
                a.network = resolve_network(&a.network, base)?;
                Study::Solve(a)
            }
            Study::SweepReactance(mut a) => {
                a.network = resolve_network(&a.network, base)?;
                Study::SweepReactance(a)
            }
            Study::Susceptibility(mut a) => {
                a.network = resolve_network(&a.network, base)?;
                Study::Susceptibility(a)
            }
            Study::Predict(mut a) => {
                a.network = resolve_network(&a.network, base)?;
                Study::Predict(a)
            }
            Study::Nplus1(mut a) => {
                a.network = resolve_network(&a.network, base)?;
                Study::Nplus1(a)
            }
            Study::Evaluate(mut a) => {
                if let Some(spec) = a.spec.take() {
                    let path = base.join(&spec);
                    let text = std::fs::read_to_string(&path).map_err(|e| {
                        GridError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
                    })?;
                    a.ensembles = EnsembleFile::from_toml(&text)?.ensemble;
                    a.spec = Some(path.canonicalize()?);
                }
                if a.ensembles.is_empty() {
                    return Err(GridError::Config("no ensembles to evaluate".into()));
                }
                if let Some(seed) = seed {
                    for e in &mut a.ensembles {
                        e.seed = seed;
                    }
                }
                Study::Evaluate(a)
            }
            Study::Generate(mut a) => {
                if let Some(seed) = seed {
                    a.seed = seed;
                }
                Study::Generate(a)
            }
            Study::Examples => Study::Examples,
        })
    }

    /// Runs the study and returns `(file name, contents)` for each artifact.
    pub fn outputs(&self) -> Result<Vec<(String, String)>> {
        match self {
            Study::Solve(a) => solve(a),
            Study::SweepReactance(a) => sweep_reactance(a),
            Study::Susceptibility(a) => {
                let net = open_network(&a.network)?;
                let observed = lines_checked(&net, &a.observed)?;
                let table = susceptibility_table(&net, (!observed.is_empty()).then_some(&observed[..]), a.threshold)?;
                Ok(vec![("susceptibility.csv".into(), table_to_csv(&table))])
            }
            Study::Predict(a) => predict(a),
            Study::Evaluate(a) => {
                let opts = EvaluationOptions {
                    threshold: a.threshold,
                    predictor: PredictorOptions {
                        rule: a.rule.into(),
                        search_budget: a.search_budget,
                    },
                    measure: LoadMeasure::Absolute,
                };
                let report = evaluate_predictor(&a.ensembles, &GeneratorRegistry::default(), &opts)?;
                Ok(vec![
                    ("report.csv".into(), report_to_csv(&report)?),
                    ("report.json".into(), report_to_json(&report)?),
                ])
            }
            Study::Nplus1(a) => nplus1(a),
            Study::Generate(a) => {
                let params: toml::Table = toml::from_str(&a.params).map_err(|e| GridError::Config(e.to_string()))?;
                let spec = EnsembleSpec {
                    name: None,
                    topology: a.topology.clone(),
                    params,
                    networks: a.index + 1,
                    samples: a.sample.map_or(0, |s| s + 1),
                    seed: a.seed,
                };
                let generator = spec.generator(&GeneratorRegistry::default())?;
                let mut net = spec.network(generator.as_ref(), a.index)?;
                if let Some(s) = a.sample {
                    net = spec.sample(&net, a.index, s)?;
                }
                Ok(vec![("network.grid".into(), write_native(&net))])
            }
            Study::Examples => Ok(example_networks()
                .into_iter()
                .map(|(name, net)| (format!("{name}.grid"), write_native(&net)))
                .collect()),
        }
    }
}

fn solve(a: &SolveArgs) -> Result<Vec<(String, String)>> {
    let net = open_network(&a.network)?;
    let mode = a.mode.map_or(net.mode().as_str(), SolverMode::as_str);
    let registry = SolverRegistry::default();
    let sol = registry.get(mode)?.solve(&net)?;
    let mut flows = String::from("line,from,to,flow,current\n");
    for (e, line) in net.lines().iter().enumerate() {
        let current = sol.currents.as_ref().map(|c| c[e].to_string()).unwrap_or_default();
        let _ = writeln!(flows, "{e},{},{},{},{current}", line.from, line.to, sol.flows[e]);
    }
    let mut nodes = String::from("node,theta,voltage\n");
    for (i, theta) in sol.theta.iter().enumerate() {
        let v = sol.voltage.as_ref().map(|v| v[i].to_string()).unwrap_or_default();
        let _ = writeln!(nodes, "{i},{theta},{v}");
    }
    Ok(vec![("flows.csv".into(), flows), ("nodes.csv".into(), nodes)])
}

fn sweep_reactance(a: &SweepReactanceArgs) -> Result<Vec<(String, String)>> {
    if a.steps < 2 {
        return Err(GridError::InvalidArgument("a sweep needs at least 2 steps".into()));
    }
    let net = open_network(&a.network)?;
    let xs = linspace(a.from, a.to, a.steps);
    let sweep = reactance_sweep(&net, LineId(a.line), &xs, &net.roles(), &NewtonOptions::default(), !a.cold_start)?;
    Ok(vec![("sweep.csv".into(), sweep.to_csv())])
}

fn predict(a: &PredictArgs) -> Result<Vec<(String, String)>> {
    let net = open_network(&a.network)?;
    let engine = SusceptibilityEngine::new(&net)?;
    let sol = engine.solution();
    let observed = match a.observed {
        Some(o) => {
            net.line(LineId(o))?;
            LineId(o)
        }
        None => {
            let max = max_loaded_line(sol, &net, LoadMeasure::Absolute)?;
            if max.is_ambiguous() {
                return Err(GridError::AmbiguousMaxLoad {
                    lines: max.tied.iter().map(|l| l.0).collect(),
                });
            }
            max.line
        }
    };
    let upgraded = if a.upgraded.is_empty() {
        (0..net.line_count()).map(LineId).filter(|&l| l != observed).collect()
    } else {
        let ids = lines_checked(&net, &a.upgraded)?;
        if ids.contains(&observed) {
            return Err(GridError::InvalidArgument(format!(
                "upgraded lines include the observed line {observed}"
            )));
        }
        ids
    };
    let opts = PredictorOptions {
        rule: a.rule.into(),
        search_budget: a.search_budget,
    };
    let truth = if a.ground_truth {
        let col = engine.column(observed)?;
        let norm = normalization(&net);
        Some((col, norm))
    } else {
        None
    };
    let mut out = String::from("upgraded,observed,verdict,implied_direction,path_length,witness,ground_truth\n");
    for up in upgraded {
        let v = predict_alignment_with(&net, sol, up, observed, &opts)?;
        let direction = match v.implied_forward {
            Some(true) => "forward",
            Some(false) => "backward",
            None => "",
        };
        let len = v.path_length.map(|l| l.to_string()).unwrap_or_default();
        let label = truth
            .as_ref()
            .map(|(col, norm)| label_from(col[up.0] * norm, sol.flows[observed.0], a.threshold).to_string())
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{up},{observed},{},{direction},{len},{},{label}",
            v.alignment.as_str(),
            v.path_strings().join("|")
        );
    }
    Ok(vec![("predictions.csv".into(), out)])
}

fn nplus1(a: &Nplus1Args) -> Result<Vec<(String, String)>> {
    let net = open_network(&a.network)?;
    let registry = SolverRegistry::default();
    let opts = SweepOptions {
        factor: a.factor,
        headroom: a.headroom,
    };
    let result = n_plus_one_sweep(&net, registry.get(a.mode.as_str())?, &opts)?;
    let hist = result.change_histogram(a.bin_width)?;
    let currents = result.current_histograms(a.current_bin_width)?;
    Ok(vec![
        ("cases.csv".into(), result.cases_csv()),
        ("histogram.csv".into(), histogram_csv(&hist)),
        ("current_histograms.csv".into(), current_histograms_csv(&currents)),
        ("failures.csv".into(), result.failures_csv()),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_networks_resolve() {
        let base = Path::new(".");
        assert_eq!(resolve_network("builtin:fig1a", base).unwrap(), "builtin:fig1a");
        assert!(open_network("builtin:fig1a").is_ok());
        assert!(open_network("builtin:nope").is_err());
    }

    #[test]
    fn study_tags_round_trip() {
        let s = Study::Nplus1(Nplus1Args {
            network: "builtin:fig1b".into(),
            mode: SolverMode::Dc,
            factor: 2.0,
            headroom: 1.5,
            bin_width: 0.05,
            current_bin_width: 0.05,
        });
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"command\":\"nplus1\""));
        assert_eq!(serde_json::from_str::<Study>(&json).unwrap(), s);
        let alias: Study = serde_json::from_str(r#"{"command":"sweep","network":"x"}"#).unwrap();
        assert!(matches!(alias, Study::Nplus1(a) if a.factor == DEFAULT_FACTOR));
    }

    #[test]
    fn predict_marks_ground_truth() {
        let a = PredictArgs {
            network: "builtin:fig1a".into(),
            upgraded: vec![],
            observed: Some(2),
            rule: Rule::SimpleCycle,
            ground_truth: true,
            threshold: DEFAULT_THRESHOLD,
            search_budget: DEFAULT_SEARCH_BUDGET,
        };
        let csv = &predict(&a).unwrap()[0].1;
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows.len(), 4);
        assert!(rows[1..].iter().all(|r| r.split(',').count() == 7));
    }
}
