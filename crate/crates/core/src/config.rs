//! Experiment configurations: JSON schema types, validation, and the runner
//! that turns a config into CSV and JSON artifacts.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::experiments::{
    bc_residual, max_abs_residual, non_doubling_probe, recurrence_modified_run, recurrence_pure_run, recurrence_set_frequency, residual, shrinking_target_run,
    CountingRecord, MeanBall, RunOptions,
};
use crate::gibbs::{eigen_solve, DensityKind, GibbsBackend, PotentialSpec, SpectralOptions};
use crate::ifs::{IfsSystem, PointRd, SystemSpec};
use crate::measure::{ball_measure, RadiusFunction};
use crate::symbolic::CodedOrbit;

pub const CSV_HEADER: [&str; 6] = ["sample_id", "N", "count", "psi_sum", "ball_sum", "residual"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub system: SystemSpec,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub backend: BackendSpec,
    pub experiment: ExperimentSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ReportSpec>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendSpec {
    /// Closed form when available, otherwise the spectral solver with default options.
    #[default]
    Auto,
    Spectral(SpectralOptions),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ShrinkingTarget,
    RecurrencePure,
    RecurrenceModified,
    NonDoublingProbe,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<RadiusFunction>,
    #[serde(rename = "N", default)]
    pub n: u64,
    #[serde(default)]
    pub samples: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_depth_budget")]
    pub depth_budget: usize,
    /// Largest tolerated fraction of hit decisions settled by the midpoint rule.
    #[serde(default = "default_flag_budget")]
    pub flag_budget: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub mean_ball: MeanBall,
    /// Exponent for the `Ψ_η(N) = Σ ψ(n)^{(1−η)τ}` residual variants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeSpec>,
}

fn default_epsilon() -> f64 {
    0.1
}
fn default_depth_budget() -> usize {
    48
}
fn default_flag_budget() -> f64 {
    0.01
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub n_min: u32,
    pub n_max: u32,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub label: String,
    pub intervals: Vec<[f64; 2]>,
    /// Reference value for the mean of `count / psi_sum` over samples starting in the region.
    pub expected: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_ball: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub n: u64,
    pub samples: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReportSpec {
    /// Per-region means of `count / psi_sum`, ball measures at probe points,
    /// and a Monte Carlo estimate of `μ(R_n)`.
    RegionMeans {
        regions: Vec<RegionSpec>,
        #[serde(default)]
        points: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mc: Option<McSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expected_mean_ball: Option<f64>,
    },
    /// `count / psi_sum` against `ρ(x) / ∫ρ²` for a density backend, plus an
    /// optional transfer-operator check of the density.
    DensityLimit {
        tolerance: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eigen_depth: Option<usize>,
    },
    /// Window endpoints for `α`, partial sums of `μ(R_n)`, final counts and
    /// per-sample tails of `Σ μ(B(x, ψ(n)))`.
    CollisionWindow { tail_from: u64, tail_samples: usize, count_bound: u64, tail_bound: f64 },
}

impl ExperimentConfig {
    /// Parses and validates; every error here is a schema error.
    pub fn from_json(s: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let system = IfsSystem::from_spec(self.system.clone())?;
        self.potential.validate(system.m())?;
        let e = &self.experiment;
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(e.epsilon > 0.0) || !(e.flag_budget >= 0.0) || e.depth_budget == 0 {
            return bad("epsilon must be positive, flag_budget nonnegative, depth_budget >= 1".into());
        }
        match e.kind {
            ExperimentKind::NonDoublingProbe => {
                let Some(p) = e.probe else { return bad("non_doubling_probe needs `probe`".into()) };
                if p.n_min > p.n_max {
                    return bad("probe.n_min > probe.n_max".into());
                }
                bernoulli3(&self.potential)?;
            }
            kind => {
                let Some(psi) = e.psi else { return bad(format!("{kind:?} needs `psi`")) };
                psi.validate()?;
                if kind == ExperimentKind::ShrinkingTarget {
                    let targets = e.targets.as_ref().filter(|t| !t.is_empty());
                    let Some(targets) = targets else { return bad("shrinking_target needs nonempty `targets`".into()) };
                    for t in targets {
                        let p = PointRd::try_from(t.clone()).map_err(Error::InvalidArgument)?;
                        if p.dim() != system.dim() {
                            return bad(format!("target {p} does not match dim {}", system.dim()));
                        }
                    }
                }
            }
        }
        if let Some(tau) = e.tau {
            if !(tau > 0.0) {
                return bad("tau must be positive".into());
            }
        }
        Ok(())
    }

    /// The config with defaults and checkpoints made explicit.
    pub fn resolved(&self) -> ExperimentConfig {
        let mut c = self.clone();
        if c.experiment.kind != ExperimentKind::NonDoublingProbe {
            c.experiment.checkpoints = Some(self.run_options().resolved_checkpoints());
        }
        c
    }

    pub fn run_options(&self) -> RunOptions {
        let e = &self.experiment;
        let mut o = RunOptions::new(e.n, e.samples, e.seed);
        o.checkpoints = e.checkpoints.clone();
        o.depth_budget = e.depth_budget;
        o.mean_ball = e.mean_ball;
        o
    }
}

fn bernoulli3(p: &PotentialSpec) -> Result<[f64; 3]> {
    match p {
        PotentialSpec::Bernoulli { p } if p.len() == 3 => Ok([p[0], p[1], p[2]]),
        _ => Err(Error::InvalidArgument("non_doubling_probe needs a three-weight Bernoulli potential".into())),
    }
}

/// Everything a run writes.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub csv: String,
    pub summary: Value,
    pub echo: Value,
    pub flagged_fraction: f64,
    pub flag_budget: f64,
}

impl RunArtifacts {
    pub fn over_budget(&self) -> bool {
        self.flagged_fraction > self.flag_budget
    }
}

/// Runs a validated config. Parallelism follows the ambient rayon pool.
pub fn run_config(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    let cfg = cfg.resolved();
    let system = IfsSystem::from_spec(cfg.system.clone())?;
    let e = &cfg.experiment;
    let echo = serde_json::to_value(&cfg).map_err(|err| Error::InvalidArgument(err.to_string()))?;
    let mut summary = json!({
        "name": cfg.name,
        "kind": e.kind,
        "N": e.n,
        "samples": e.samples,
        "seed": e.seed,
        "epsilon": e.epsilon,
    });
    if e.kind == ExperimentKind::NonDoublingProbe {
        summary["report"] = non_doubling_report(&system, &cfg)?;
        return Ok(RunArtifacts { csv: csv_text(&[], e.epsilon)?, summary, echo, flagged_fraction: 0.0, flag_budget: e.flag_budget });
    }
    let spectral = match cfg.backend {
        BackendSpec::Auto => None,
        BackendSpec::Spectral(o) => Some(o),
    };
    let (backend, eigen) = GibbsBackend::build(&system, &cfg.potential, spectral)?;
    let psi = e.psi.expect("validated");
    let opts = cfg.run_options();
    let records = match e.kind {
        ExperimentKind::ShrinkingTarget => {
            let targets: Vec<PointRd> = e.targets.as_ref().expect("validated").iter().map(|t| PointRd::try_from(t.clone()).map_err(Error::InvalidArgument)).collect::<Result<_>>()?;
            shrinking_target_run(&system, &backend, &targets, &psi, &opts)?
        }
        ExperimentKind::RecurrencePure => recurrence_pure_run(&system, &backend, &psi, &opts)?,
        ExperimentKind::RecurrenceModified => recurrence_modified_run(&system, &backend, &psi, &opts)?,
        ExperimentKind::NonDoublingProbe => unreachable!(),
    };
    let checkpoints = opts.resolved_checkpoints();
    let flagged: u64 = records.iter().map(|r| r.flagged).sum();
    let tests = e.n * e.samples;
    let flagged_fraction = if tests == 0 { 0.0 } else { flagged as f64 / tests as f64 };
    summary["checkpoints"] = json!(checkpoints);
    summary["eigen"] = json!(eigen);
    summary["psi_sums"] = json!(records.first().map(|r| r.checkpoints.iter().map(|c| c.psi_sum).collect::<Vec<_>>()));
    summary["final"] = final_stats(&records);
    summary["residuals"] = residual_stats(&records, e, &psi, &checkpoints);
    summary["flags"] = json!({
        "flagged_hits": flagged,
        "hit_tests": tests,
        "flagged_fraction": flagged_fraction,
        "flag_budget": e.flag_budget,
        "wide_brackets_max": records.iter().map(|r| r.wide_brackets).max().unwrap_or(0),
    });
    if let Some(rep) = &cfg.report {
        summary["report"] = report(rep, &system, &backend, &cfg, &records)?;
    }
    Ok(RunArtifacts { csv: csv_text(&records, e.epsilon)?, summary, echo, flagged_fraction, flag_budget: e.flag_budget })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per sample per checkpoint.
pub fn csv_text(records: &[CountingRecord], epsilon: f64) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in records {
        let res = bc_residual(r, epsilon);
        for (c, rv) in r.checkpoints.iter().zip(res) {
            w.write_record([r.sample_id.to_string(), c.n.to_string(), c.count.to_string(), c.psi_sum.to_string(), fmt_opt(c.ball_sum), fmt_opt(rv)]).map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Mean, extremes and nearest-rank quantiles; `null` for an empty input.
pub fn describe(values: &[f64]) -> Value {
    if values.is_empty() {
        return Value::Null;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| v[((p * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1];
    json!({
        "mean": v.iter().sum::<f64>() / v.len() as f64,
        "min": v[0],
        "q05": q(0.05),
        "q50": q(0.5),
        "q95": q(0.95),
        "max": v[v.len() - 1],
    })
}

fn ratio(a: f64, b: f64) -> Option<f64> {
    (b > 0.0).then(|| a / b)
}

fn final_stats(records: &[CountingRecord]) -> Value {
    let last: Vec<_> = records.iter().filter_map(|r| r.last()).collect();
    let counts: Vec<f64> = last.iter().map(|c| c.count as f64).collect();
    let rp: Vec<f64> = last.iter().filter_map(|c| ratio(c.count as f64, c.psi_sum)).collect();
    let rb: Vec<f64> = last.iter().filter_map(|c| ratio(c.count as f64, c.ball_sum?)).collect();
    json!({ "count": describe(&counts), "ratio_psi": describe(&rp), "ratio_ball": describe(&rb) })
}

fn residual_stats(records: &[CountingRecord], e: &ExperimentSpec, psi: &RadiusFunction, checkpoints: &[u64]) -> Value {
    let maxes: Vec<f64> = records.iter().filter_map(|r| max_abs_residual(&bc_residual(r, e.epsilon))).collect();
    let within = maxes.iter().filter(|m| **m <= 5.0).count();
    let mut out = json!({
        "max_abs": describe(&maxes),
        "samples_with_residual": maxes.len(),
        "fraction_max_abs_le_5": if maxes.is_empty() { Value::Null } else { json!(within as f64 / maxes.len() as f64) },
    });
    if let (Some(tau), ExperimentKind::RecurrencePure) = (e.tau, e.kind) {
        let etas = [0.0, 0.05, 0.1];
        out["eta"] = etas
            .iter()
            .map(|&eta| {
                let scale = cumulative_sum(checkpoints, |n| psi.eval(n).powf((1.0 - eta) * tau));
                let maxes: Vec<f64> = records
                    .iter()
                    .filter_map(|r| {
                        r.checkpoints
                            .iter()
                            .zip(&scale)
                            .filter_map(|(c, s)| residual(c.count as f64, c.ball_sum?, *s, e.epsilon).map(f64::abs))
                            .reduce(f64::max)
                    })
                    .collect();
                json!({ "eta": eta, "max_abs": describe(&maxes) })
            })
            .collect();
    }
    out
}

fn cumulative_sum<F: Fn(u64) -> f64>(checkpoints: &[u64], f: F) -> Vec<f64> {
    let (mut s, mut n) = (0.0, 0u64);
    checkpoints
        .iter()
        .map(|&c| {
            while n < c {
                n += 1;
                s += f(n);
            }
            s
        })
        .collect()
}

fn report(rep: &ReportSpec, system: &IfsSystem, backend: &GibbsBackend, cfg: &ExperimentConfig, records: &[CountingRecord]) -> Result<Value> {
    let e = &cfg.experiment;
    let psi = e.psi.expect("validated");
    match rep {
        ReportSpec::RegionMeans { regions, points, mc, expected_mean_ball } => {
            let rows: Vec<Value> = regions
                .iter()
                .map(|reg| {
                    let inside = |x: f64| reg.intervals.iter().any(|[a, b]| x >= a - 1e-12 && x <= b + 1e-12);
                    let sel: Vec<&CountingRecord> = records.iter().filter(|r| inside(r.x0.x())).collect();
                    let ratios: Vec<f64> = sel.iter().filter_map(|r| r.last().and_then(|c| ratio(c.count as f64, c.psi_sum))).collect();
                    let balls: Vec<f64> = sel.iter().filter_map(|r| r.last().and_then(|c| Some(c.ball_sum? / c.n as f64))).collect();
                    json!({
                        "label": reg.label,
                        "intervals": reg.intervals,
                        "samples": sel.len(),
                        "mean_ratio": mean(&ratios),
                        "expected": reg.expected,
                        "mean_ball_measure": mean(&balls),
                        "expected_ball": reg.expected_ball,
                    })
                })
                .collect();
            let r1 = psi.eval(1);
            let probes: Vec<Value> = points
                .iter()
                .map(|&x| {
                    let b = ball_measure(system, backend, &PointRd::new1(x), r1, e.depth_budget)?;
                    Ok(json!({ "x": x, "radius": r1, "lower": b.lower, "upper": b.upper, "width": b.width() }))
                })
                .collect::<Result<_>>()?;
            let mean_ball = records.first().and_then(|r| r.last()).map(|c| c.psi_sum / c.n as f64);
            let mut out = json!({ "regions": rows, "ball_probes": probes, "mean_ball_measure": mean_ball, "expected_mean_ball": expected_mean_ball });
            if let Some(mc) = mc {
                let (f, sd) = recurrence_set_frequency(system, backend, mc.n, psi.eval(mc.n), false, mc.samples, e.seed, e.depth_budget)?;
                out["monte_carlo"] = json!({ "n": mc.n, "samples": mc.samples, "frequency": f, "sigma": sd });
            }
            Ok(out)
        }
        ReportSpec::DensityLimit { tolerance, eigen_depth } => {
            let GibbsBackend::Density { kind, lo, hi, .. } = backend else {
                return Err(Error::InvalidArgument("density_limit report needs a density backend".into()));
            };
            let (rho, rho2): (Box<dyn Fn(f64) -> f64>, f64) = match kind {
                DensityKind::Gauss => (Box::new(|x| 1.0 / (std::f64::consts::LN_2 * (1.0 + x))), 0.5 / std::f64::consts::LN_2.powi(2)),
                DensityKind::Lebesgue => {
                    let w = hi - lo;
                    (Box::new(move |_| 1.0 / w), 1.0 / w)
                }
            };
            let mut within = 0;
            let rows: Vec<Value> = records
                .iter()
                .filter_map(|r| {
                    let c = r.last()?;
                    let est = ratio(c.count as f64, c.psi_sum)?;
                    let limit = rho(r.x0.x()) / rho2;
                    within += ((est - limit).abs() <= *tolerance) as usize;
                    Some(json!({ "sample_id": r.sample_id, "x0": r.x0.x(), "estimate": est, "limit": limit }))
                })
                .collect();
            let n = rows.len();
            let mut out = json!({
                "tolerance": tolerance,
                "samples": n,
                "within": within,
                "fraction_within": if n == 0 { Value::Null } else { json!(within as f64 / n as f64) },
                "per_sample": rows,
            });
            if let Some(depth) = eigen_depth {
                let (sb, rep) = eigen_solve(system, &PotentialSpec::ConformalPower { tau: 1.0 }, *depth, 1e-13, 100_000)?;
                let GibbsBackend::Spectral(s) = &sb else { unreachable!() };
                let sup = s.h().iter().zip(s.anchors()).map(|(h, z)| (h - rho(z.re)).abs()).fold(0.0, f64::max);
                out["eigen"] = json!({ "depth": depth, "R": rep.r, "iterations": rep.iterations, "residual": rep.residual, "h_sup_error": sup });
            }
            Ok(out)
        }
        ReportSpec::CollisionWindow { tail_from, tail_samples, count_bound, tail_bound } => {
            let PotentialSpec::Bernoulli { p } = &cfg.potential else {
                return Err(Error::InvalidArgument("collision_window report needs a Bernoulli potential".into()));
            };
            let entropy: f64 = -p.iter().filter(|&&q| q > 0.0).map(|q| q * q.ln()).sum::<f64>();
            let collision: f64 = -p.iter().map(|q| q * q).sum::<f64>().ln();
            let (lo, hi) = (1.0 / entropy, 1.0 / collision);
            let psums: Vec<f64> = records.first().map(|r| r.checkpoints.iter().map(|c| c.psi_sum).collect()).unwrap_or_default();
            let increasing = psums.windows(2).all(|w| w[1] > w[0]);
            let max_count = records.iter().filter_map(|r| r.last()).map(|c| c.count).max();
            let tails: Vec<f64> = records
                .iter()
                .take(*tail_samples)
                .filter_map(|r| {
                    let end = r.last()?.ball_sum?;
                    let start = r.checkpoints.iter().find(|c| c.n == *tail_from)?.ball_sum?;
                    Some(end - start)
                })
                .collect();
            let alpha = match psi {
                RadiusFunction::PowerLog { alpha } => Some(alpha),
                _ => None,
            };
            Ok(json!({
                "alpha": alpha,
                "window": [lo, hi],
                "midpoint": 0.5 * (lo + hi),
                "mean_ball_partial_sums": psums,
                "partial_sums_increasing": increasing,
                "partial_sum_final": psums.last(),
                "max_final_count": max_count,
                "count_bound": count_bound,
                "count_within_bound": max_count.map(|m| m <= *count_bound),
                "tail_from": tail_from,
                "tails": tails,
                "tail_bound": tail_bound,
                "tails_within_bound": tails.iter().all(|t| *t < *tail_bound),
            }))
        }
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn non_doubling_report(system: &IfsSystem, cfg: &ExperimentConfig) -> Result<Value> {
    let p = bernoulli3(&cfg.potential)?;
    let probe = cfg.experiment.probe.expect("validated");
    let rows = non_doubling_probe(p, probe.n_min..=probe.n_max, probe.gamma)?;
    let monotone = rows.windows(2).all(|w| w[1].doubling_lower > w[0].doubling_lower);
    let mut out = json!({
        "weights": p,
        "gamma": probe.gamma,
        "rows": rows,
        "doubling_monotone": monotone,
        "doubling_final": rows.last().map(|r| r.doubling_lower),
    });
    // Certified brackets resolve the radii only while 2^{-m} is well above rounding.
    if let (Some(first), 3) = (rows.first(), system.m()) {
        let mut prefix = vec![1u8];
        prefix.extend(std::iter::repeat_n(0u8, first.n as usize));
        let x = CodedOrbit::periodic(system, &prefix, &[1], 0).point(0);
        let backend = GibbsBackend::bernoulli(p.to_vec())?;
        let small = ball_measure(system, &backend, &x, first.r, cfg.experiment.depth_budget)?;
        let big = ball_measure(system, &backend, &x, 2.0 * first.r, cfg.experiment.depth_budget)?;
        out["certified_check"] = json!({
            "n": first.n,
            "x": x,
            "ball_r": small,
            "ball_2r": big,
            "ratio_lower": big.lower / small.upper,
            "bound_holds": big.lower / small.upper >= first.doubling_lower * (1.0 - 1e-9),
        });
    }
    Ok(out)
}

pub struct NamedExample {
    pub name: &'static str,
    pub json: &'static str,
}

pub const NAMED_EXAMPLES: [NamedExample; 4] = [
    NamedExample { name: "7.1", json: include_str!("../../../configs/7.1.json") },
    NamedExample { name: "7.2", json: include_str!("../../../configs/7.2.json") },
    NamedExample { name: "ABB", json: include_str!("../../../configs/ABB.json") },
    NamedExample { name: "B.2", json: include_str!("../../../configs/B.2.json") },
];

/// Names and one-line descriptions of the shipped configs, in lexicographic order.
pub fn list_examples() -> Vec<(String, String)> {
    let mut v: Vec<(String, String)> = NAMED_EXAMPLES
        .iter()
        .map(|e| {
            let cfg = ExperimentConfig::from_json(e.json).expect("shipped configs are valid");
            (e.name.to_string(), cfg.description.unwrap_or_default())
        })
        .collect();
    v.sort();
    v
}

pub fn named_config(name: &str) -> Result<ExperimentConfig> {
    let e = NAMED_EXAMPLES.iter().find(|e| e.name == name).ok_or_else(|| Error::UnknownExample(name.to_string()))?;
    ExperimentConfig::from_json(e.json)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(name: &str, n: u64, samples: u64) -> ExperimentConfig {
        let mut c = named_config(name).unwrap();
        c.experiment.n = n;
        c.experiment.samples = samples;
        c.experiment.checkpoints = None;
        c
    }

    #[test]
    fn shipped_configs_parse_and_list_in_order() {
        let names: Vec<String> = list_examples().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, ["7.1", "7.2", "ABB", "B.2"]);
        assert!(list_examples().iter().all(|(_, d)| !d.is_empty()));
        assert!(matches!(named_config("9.9"), Err(Error::UnknownExample(_))));
    }

    #[test]
    fn schema_errors() {
        assert!(ExperimentConfig::from_json("{").is_err());
        let mut v: Value = serde_json::from_str(NAMED_EXAMPLES[0].json).unwrap();
        v["experiment"]["bogus"] = json!(1);
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
        let mut v: Value = serde_json::from_str(NAMED_EXAMPLES[0].json).unwrap();
        v["experiment"].as_object_mut().unwrap().remove("seed");
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
        let mut v: Value = serde_json::from_str(NAMED_EXAMPLES[0].json).unwrap();
        v["experiment"]["kind"] = json!("shrinking_target");
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn empty_run_has_header_only() {
        let a = run_config(&small("7.1", 1000, 0)).unwrap();
        assert_eq!(a.csv, "sample_id,N,count,psi_sum,ball_sum,residual\n");
        assert_eq!(a.flagged_fraction, 0.0);
    }

    #[test]
    fn echo_reruns_identically() {
        let cfg = small("7.1", 2000, 3);
        let a = run_config(&cfg).unwrap();
        assert_eq!(a.csv.lines().count(), 1 + 3 * 2);
        let echoed: ExperimentConfig = serde_json::from_value(a.echo.clone()).unwrap();
        let b = run_config(&echoed).unwrap();
        assert_eq!(a.csv, b.csv);
        assert_eq!(a.summary, b.summary);
    }

    #[test]
    fn describe_quantiles() {
        let d = describe(&[3.0, 1.0, 2.0, 4.0]);
        assert_eq!(d["mean"], 2.5);
        assert_eq!(d["q50"], 2.0);
        assert_eq!(d["max"], 4.0);
        assert_eq!(describe(&[]), Value::Null);
    }

    #[test]
    fn probe_summary() {
        let a = run_config(&named_config("B.2").unwrap()).unwrap();
        let r = &a.summary["report"];
        assert_eq!(r["doubling_monotone"], true);
        assert_eq!(r["certified_check"]["bound_holds"], true);
        assert!(r["doubling_final"].as_f64().unwrap() > 100.0);
    }
}
