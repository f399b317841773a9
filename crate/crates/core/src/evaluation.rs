//! Predictor versus susceptibility ground truth over network ensembles.
//!
//! For every injection sample the maximally loaded line is observed and
//! every other line is tried as the upgrade. Each such pair lands in
//! exactly one bucket: excluded (negligible susceptibility, or an ambiguous
//! maximally loaded line), correct, false, or undefined. Undefined verdicts
//! are never counted as false.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dc::{max_loaded_line, solve_with, DcSystem, LoadMeasure};
use crate::error::{GridError, Result};
use crate::grid::{GridNetwork, LineId};
use crate::predictor::{rerouting, rerouting_cycle_unique, verdict_from, Alignment, PredictorOptions, Rerouting};
use crate::susceptibility::{label_from, normalization, susceptibility_column, BraessianLabel, DEFAULT_THRESHOLD};
use crate::topology::{EnsembleSpec, GeneratorRegistry};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationOptions {
    pub threshold: f64,
    pub predictor: PredictorOptions,
    pub measure: LoadMeasure,
}

impl Default for EvaluationOptions {
    fn default() -> Self {
        EvaluationOptions {
            threshold: DEFAULT_THRESHOLD,
            predictor: PredictorOptions::default(),
            measure: LoadMeasure::Absolute,
        }
    }
}

/// Confusion counts over `(sample, upgraded line)` pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub correct_braessian: u64,
    pub correct_nonbraessian: u64,
    /// Braessian upgrades predicted anti-aligned.
    pub false_braessian: u64,
    /// Non-Braessian upgrades predicted aligned.
    pub false_nonbraessian: u64,
    pub undefined_braessian: u64,
    pub undefined_nonbraessian: u64,
    pub excluded_negligible: u64,
    pub excluded_ambiguous: u64,
    /// Non-excluded pairs whose upgraded line lies on a single cycle.
    pub unique_cycle_pairs: u64,
    pub unique_cycle_false: u64,
}

impl Counts {
    fn add(&mut self, o: &Counts) {
        self.correct_braessian += o.correct_braessian;
        self.correct_nonbraessian += o.correct_nonbraessian;
        self.false_braessian += o.false_braessian;
        self.false_nonbraessian += o.false_nonbraessian;
        self.undefined_braessian += o.undefined_braessian;
        self.undefined_nonbraessian += o.undefined_nonbraessian;
        self.excluded_negligible += o.excluded_negligible;
        self.excluded_ambiguous += o.excluded_ambiguous;
        self.unique_cycle_pairs += o.unique_cycle_pairs;
        self.unique_cycle_false += o.unique_cycle_false;
    }

    pub fn false_predictions(&self) -> u64 {
        self.false_braessian + self.false_nonbraessian
    }

    pub fn undefined(&self) -> u64 {
        self.undefined_braessian + self.undefined_nonbraessian
    }

    pub fn braessian(&self) -> u64 {
        self.correct_braessian + self.false_braessian + self.undefined_braessian
    }

    /// Pairs that were classified (not excluded).
    pub fn evaluated(&self) -> u64 {
        self.correct_braessian + self.correct_nonbraessian + self.false_predictions() + self.undefined()
    }

    pub fn total(&self) -> u64 {
        self.evaluated() + self.excluded_negligible + self.excluded_ambiguous
    }

    fn record(&mut self, label: BraessianLabel, alignment: Alignment) {
        use Alignment::*;
        use BraessianLabel::*;
        match (label, alignment) {
            (Negligible, _) => self.excluded_negligible += 1,
            (Braessian, Aligned) => self.correct_braessian += 1,
            (Braessian, AntiAligned) => self.false_braessian += 1,
            (Braessian, Undefined) => self.undefined_braessian += 1,
            (NonBraessian, AntiAligned) => self.correct_nonbraessian += 1,
            (NonBraessian, Aligned) => self.false_nonbraessian += 1,
            (NonBraessian, Undefined) => self.undefined_nonbraessian += 1,
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// One ensemble's result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub name: String,
    pub topology: String,
    /// Generator parameters as compact JSON.
    pub params: String,
    pub n_networks: usize,
    pub n_injection_samples: usize,
    pub rng_seed: u64,
    pub mean_nodes: f64,
    pub mean_lines: f64,
    pub counts: Counts,
}

impl EnsembleReport {
    /// Correct among Braessian upgrades, undefined ones included in the denominator.
    pub fn correct_braessian_rate(&self) -> Option<f64> {
        ratio(self.counts.correct_braessian, self.counts.braessian())
    }

    /// False among all classified pairs.
    pub fn false_rate(&self) -> Option<f64> {
        ratio(self.counts.false_predictions(), self.counts.evaluated())
    }

    pub fn undefined_rate(&self) -> Option<f64> {
        ratio(self.counts.undefined(), self.counts.evaluated())
    }

    pub fn correct_nonbraessian_rate(&self) -> Option<f64> {
        let c = &self.counts;
        ratio(
            c.correct_nonbraessian,
            c.correct_nonbraessian + c.false_nonbraessian + c.undefined_nonbraessian,
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub ensembles: Vec<EnsembleReport>,
}

/// Pairs of one network under one injection sample.
struct SampleOutcome {
    observed: Option<LineId>,
    flows: Vec<f64>,
    normalized: Vec<f64>,
    ambiguous_pairs: u64,
}

fn solve_sample(
    sample: &GridNetwork,
    system: &DcSystem,
    options: &EvaluationOptions,
) -> Result<SampleOutcome> {
    let sol = solve_with(sample, system, &sample.injections())?;
    let max = max_loaded_line(&sol, sample, options.measure)?;
    if max.is_ambiguous() {
        return Ok(SampleOutcome {
            observed: None,
            flows: sol.flows,
            normalized: Vec::new(),
            ambiguous_pairs: sample.line_count() as u64 - 1,
        });
    }
    let norm = normalization(sample);
    let column = susceptibility_column(sample, system, &sol.theta, max.line)?;
    Ok(SampleOutcome {
        observed: Some(max.line),
        flows: sol.flows,
        normalized: column.iter().map(|x| x * norm).collect(),
        ambiguous_pairs: 0,
    })
}

/// Counts for one network under the given injection samples.
pub fn evaluate_network(
    network: &GridNetwork,
    samples: &[GridNetwork],
    options: &EvaluationOptions,
) -> Result<Counts> {
    let system = DcSystem::new(network)?;
    let outcomes: Vec<SampleOutcome> = samples
        .par_iter()
        .map(|s| solve_sample(s, &system, options))
        .collect::<Result<_>>()?;

    let labels = |o: &SampleOutcome| -> Vec<BraessianLabel> {
        let obs = o.observed.expect("unambiguous sample");
        o.normalized
            .iter()
            .map(|&x| label_from(x, o.flows[obs.0], options.threshold))
            .collect()
    };
    let mut needed = BTreeSet::new();
    for o in &outcomes {
        if let Some(obs) = o.observed {
            for (k, label) in labels(o).into_iter().enumerate() {
                if k != obs.0 && label != BraessianLabel::Negligible {
                    needed.insert((LineId(k), obs));
                }
            }
        }
    }
    let needed: Vec<_> = needed.into_iter().collect();
    let routes: HashMap<(LineId, LineId), Rerouting> = needed
        .par_iter()
        .map(|&(up, obs)| Ok(((up, obs), rerouting(network, up, obs, &options.predictor)?)))
        .collect::<Result<_>>()?;
    let ups: BTreeSet<LineId> = needed.iter().map(|&(u, _)| u).collect();
    let unique: HashMap<LineId, bool> = ups
        .into_iter()
        .map(|u| Ok((u, rerouting_cycle_unique(network, u)?)))
        .collect::<Result<_>>()?;

    let mut counts = Counts::default();
    for o in &outcomes {
        counts.excluded_ambiguous += o.ambiguous_pairs;
        let Some(obs) = o.observed else { continue };
        for (k, label) in labels(o).into_iter().enumerate() {
            if k == obs.0 {
                continue;
            }
            if label == BraessianLabel::Negligible {
                counts.excluded_negligible += 1;
                continue;
            }
            let up = LineId(k);
            let v = verdict_from(&routes[&(up, obs)], up, obs, o.flows[k], o.flows[obs.0]);
            let before = counts.false_predictions();
            counts.record(label, v.alignment);
            if unique[&up] {
                counts.unique_cycle_pairs += 1;
                counts.unique_cycle_false += counts.false_predictions() - before;
            }
        }
    }
    Ok(counts)
}

/// Evaluate one ensemble. Networks and samples are drawn from independent
/// streams of the ensemble seed, so the result does not depend on the
/// thread count.
pub fn evaluate_ensemble(
    spec: &EnsembleSpec,
    registry: &GeneratorRegistry,
    options: &EvaluationOptions,
) -> Result<EnsembleReport> {
    let generator = spec.generator(registry)?;
    let per_network: Vec<(Counts, usize, usize)> = (0..spec.networks)
        .into_par_iter()
        .map(|idx| {
            let net = spec.network(generator.as_ref(), idx)?;
            let samples: Vec<GridNetwork> = (0..spec.samples)
                .map(|s| spec.sample(&net, idx, s))
                .collect::<Result<_>>()?;
            Ok((evaluate_network(&net, &samples, options)?, net.node_count(), net.line_count()))
        })
        .collect::<Result<_>>()?;
    let mut counts = Counts::default();
    let (mut nodes, mut lines) = (0usize, 0usize);
    for (c, n, l) in &per_network {
        counts.add(c);
        nodes += n;
        lines += l;
    }
    let denom = spec.networks.max(1) as f64;
    Ok(EnsembleReport {
        name: spec.label().to_string(),
        topology: spec.topology.clone(),
        params: serde_json::to_string(&spec.params).map_err(|e| GridError::Config(e.to_string()))?,
        n_networks: spec.networks,
        n_injection_samples: spec.samples,
        rng_seed: spec.seed,
        mean_nodes: nodes as f64 / denom,
        mean_lines: lines as f64 / denom,
        counts,
    })
}

pub fn evaluate_predictor(
    specs: &[EnsembleSpec],
    registry: &GeneratorRegistry,
    options: &EvaluationOptions,
) -> Result<EvaluationReport> {
    Ok(EvaluationReport {
        ensembles: specs
            .iter()
            .map(|s| evaluate_ensemble(s, registry, options))
            .collect::<Result<_>>()?,
    })
}

/// Column schema of the CSV report, one row per ensemble.
pub const REPORT_COLUMNS: [&str; 25] = [
    "name",
    "topology",
    "params",
    "n_networks",
    "n_injection_samples",
    "rng_seed",
    "mean_nodes",
    "mean_lines",
    "correct_braessian",
    "correct_nonbraessian",
    "false_braessian",
    "false_nonbraessian",
    "undefined_braessian",
    "undefined_nonbraessian",
    "excluded_negligible",
    "excluded_ambiguous",
    "unique_cycle_pairs",
    "unique_cycle_false",
    "false_predictions",
    "undefined",
    "total_pairs",
    "correct_braessian_rate",
    "correct_nonbraessian_rate",
    "false_rate",
    "undefined_rate",
];

fn fmt_rate(r: Option<f64>) -> String {
    r.map(|x| x.to_string()).unwrap_or_default()
}

pub fn report_to_csv(report: &EvaluationReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_COLUMNS)?;
    for e in &report.ensembles {
        let c = &e.counts;
        let ints = [
            c.correct_braessian,
            c.correct_nonbraessian,
            c.false_braessian,
            c.false_nonbraessian,
            c.undefined_braessian,
            c.undefined_nonbraessian,
            c.excluded_negligible,
            c.excluded_ambiguous,
            c.unique_cycle_pairs,
            c.unique_cycle_false,
            c.false_predictions(),
            c.undefined(),
            c.total(),
        ];
        let mut row = vec![
            e.name.clone(),
            e.topology.clone(),
            e.params.clone(),
            e.n_networks.to_string(),
            e.n_injection_samples.to_string(),
            e.rng_seed.to_string(),
            e.mean_nodes.to_string(),
            e.mean_lines.to_string(),
        ];
        row.extend(ints.iter().map(|x| x.to_string()));
        row.extend([
            fmt_rate(e.correct_braessian_rate()),
            fmt_rate(e.correct_nonbraessian_rate()),
            fmt_rate(e.false_rate()),
            fmt_rate(e.undefined_rate()),
        ]);
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| GridError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Inverse of [`report_to_csv`]; derived columns are checked against the counts.
pub fn report_from_csv(text: &str) -> Result<EvaluationReport> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    if headers.iter().ne(REPORT_COLUMNS.iter().copied()) {
        return Err(GridError::Parse {
            line: 1,
            message: "unexpected report columns".into(),
        });
    }
    let mut ensembles = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |col: &str| GridError::Parse {
            line,
            message: format!("bad value in column {col}"),
        };
        let get = |k: usize| rec.get(k).unwrap_or("");
        let int = |k: usize| get(k).parse::<u64>().map_err(|_| bad(REPORT_COLUMNS[k]));
        let float = |k: usize| get(k).parse::<f64>().map_err(|_| bad(REPORT_COLUMNS[k]));
        let counts = Counts {
            correct_braessian: int(8)?,
            correct_nonbraessian: int(9)?,
            false_braessian: int(10)?,
            false_nonbraessian: int(11)?,
            undefined_braessian: int(12)?,
            undefined_nonbraessian: int(13)?,
            excluded_negligible: int(14)?,
            excluded_ambiguous: int(15)?,
            unique_cycle_pairs: int(16)?,
            unique_cycle_false: int(17)?,
        };
        let e = EnsembleReport {
            name: get(0).to_string(),
            topology: get(1).to_string(),
            params: get(2).to_string(),
            n_networks: int(3)? as usize,
            n_injection_samples: int(4)? as usize,
            rng_seed: int(5)?,
            mean_nodes: float(6)?,
            mean_lines: float(7)?,
            counts,
        };
        let derived = [counts.false_predictions(), counts.undefined(), counts.total()];
        for (k, want) in (18..21).zip(derived) {
            if int(k)? != want {
                return Err(bad(REPORT_COLUMNS[k]));
            }
        }
        let rates = [
            e.correct_braessian_rate(),
            e.correct_nonbraessian_rate(),
            e.false_rate(),
            e.undefined_rate(),
        ];
        for (k, want) in (21..25).zip(rates) {
            if get(k) != fmt_rate(want) {
                return Err(bad(REPORT_COLUMNS[k]));
            }
        }
        ensembles.push(e);
    }
    Ok(EvaluationReport { ensembles })
}

pub fn report_to_json(report: &EvaluationReport) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| GridError::Config(e.to_string()))
}
