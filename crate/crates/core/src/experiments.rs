//! Shrinking-target and recurrence counting, Borel–Cantelli residuals,
//! rate fits, product systems and the non-doubling probe.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{intersection_measure, orbit_distance, sample_word};
use crate::error::{Error, Result};
use crate::gibbs::{conditional_table, mixing_coeff_cylinders, GibbsBackend};
use crate::ifs::{IfsSystem, PointRd};
use crate::measure::{ball_decide, ball_measure, ball_measure_at, mean_ball_measure, Center, Decision, MeasureBracket, RadiusFunction};
use crate::symbolic::CodedOrbit;

/// Stream offset separating quadrature samples from orbit samples.
const QUADRATURE_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    #[serde(rename = "N")]
    pub n: u64,
    pub count: u64,
    pub psi_sum: f64,
    pub ball_sum: Option<f64>,
}

/// Hit counts of one sample orbit against the theoretical sum, at each checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingRecord {
    pub sample_id: u64,
    pub x0: PointRd,
    pub checkpoints: Vec<Checkpoint>,
    /// Hit decisions that fell inside the numerical error band and were
    /// settled by the midpoint rule.
    pub flagged: u64,
    /// Ball-measure brackets wider than the reporting tolerance.
    pub wide_brackets: u64,
}

impl CountingRecord {
    pub fn last(&self) -> Option<&Checkpoint> {
        self.checkpoints.last()
    }
}

/// How `μ(R_n) = ∫ μ(B(x, ψ(n))) dμ(x)` is evaluated for pure recurrence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeanBall {
    /// Closed-form quadrature for densities, certified pair walk otherwise.
    #[default]
    Exact,
    /// Average of coded-center ball measures over `samples` μ-random points.
    MonteCarlo { samples: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub n: u64,
    pub samples: u64,
    pub seed: u64,
    /// Defaults to [`default_checkpoints`].
    pub checkpoints: Option<Vec<u64>>,
    pub depth_budget: usize,
    pub mean_ball: MeanBall,
}

impl RunOptions {
    pub fn new(n: u64, samples: u64, seed: u64) -> RunOptions {
        RunOptions { n, samples, seed, checkpoints: None, depth_budget: 48, mean_ball: MeanBall::Exact }
    }

    pub fn resolved_checkpoints(&self) -> Vec<u64> {
        match &self.checkpoints {
            None => default_checkpoints(self.n),
            Some(c) => {
                let mut v: Vec<u64> = c.iter().copied().filter(|&k| k >= 1 && k <= self.n).collect();
                if self.n >= 1 {
                    v.push(self.n);
                }
                v.sort_unstable();
                v.dedup();
                v
            }
        }
    }
}

/// `10³, 3·10³, 10⁴, 3·10⁴, …` below `n`, then `n` itself.
pub fn default_checkpoints(n: u64) -> Vec<u64> {
    let mut v = Vec::new();
    let mut k = 1000u64;
    while k < n {
        v.push(k);
        k = if v.len() % 2 == 1 { k * 3 } else { k / 3 * 10 };
    }
    if n >= 1 {
        v.push(n);
    }
    v
}

fn is_wide(b: &MeasureBracket) -> bool {
    b.width() > (1e-3 * b.mid()).max(1e-12)
}

fn orbit_for(system: &IfsSystem, backend: &GibbsBackend, seed: u64, id: u64, n: u64) -> CodedOrbit {
    let len = n as usize + system.tail_depth(1e-17) + 65;
    CodedOrbit::new(system, sample_word(backend, seed, id, len))
}

fn check_common(system: &IfsSystem, backend: &GibbsBackend, psi: &RadiusFunction, opts: &RunOptions) -> Result<()> {
    if system.m() != backend.m() {
        return Err(Error::AlphabetMismatch(system.m(), backend.m()));
    }
    psi.validate()?;
    if opts.depth_budget == 0 {
        return Err(Error::InvalidArgument("depth_budget must be >= 1".into()));
    }
    if opts.n > (1 << 31) {
        return Err(Error::InvalidArgument(format!("N = {} is too large", opts.n)));
    }
    Ok(())
}

/// Running sums of `f(n)` for `n = 1..=N`, read off at each checkpoint.
fn cumulative<F: FnMut(u64) -> f64>(checkpoints: &[u64], mut f: F) -> Vec<f64> {
    let mut out = Vec::with_capacity(checkpoints.len());
    let (mut s, mut n) = (0.0, 0u64);
    for &c in checkpoints {
        while n < c {
            n += 1;
            s += f(n);
        }
        out.push(s);
    }
    out
}

/// Per-sample output of a hit loop.
struct Trace {
    counts: Vec<u64>,
    ball: Option<Vec<f64>>,
    flagged: u64,
    wide: u64,
}

fn drive<F>(system: &IfsSystem, backend: &GibbsBackend, opts: &RunOptions, checkpoints: &[u64], psi_cum: &[f64], wide: u64, sample: F) -> Result<Vec<CountingRecord>>
where
    F: Fn(&CodedOrbit) -> Result<Trace> + Sync,
{
    (0..opts.samples)
        .into_par_iter()
        .map(|id| {
            let orbit = orbit_for(system, backend, opts.seed, id, opts.n);
            let t = sample(&orbit)?;
            let checkpoints = checkpoints
                .iter()
                .enumerate()
                .map(|(i, &n)| Checkpoint { n, count: t.counts[i], psi_sum: psi_cum[i], ball_sum: t.ball.as_ref().map(|b| b[i]) })
                .collect();
            Ok(CountingRecord { sample_id: id, x0: orbit.point(0), checkpoints, flagged: t.flagged, wide_brackets: t.wide + wide })
        })
        .collect()
}

/// Counts `n ≤ N` with `hit(n)`, returning counts at the checkpoints and the number of flagged decisions.
fn count_hits<F: FnMut(u64) -> (bool, bool)>(checkpoints: &[u64], mut hit: F) -> (Vec<u64>, u64) {
    let mut counts = Vec::with_capacity(checkpoints.len());
    let (mut c, mut flagged, mut n) = (0u64, 0u64, 0u64);
    for &cp in checkpoints {
        while n < cp {
            n += 1;
            let (h, f) = hit(n);
            c += h as u64;
            flagged += f as u64;
        }
        counts.push(c);
    }
    (counts, flagged)
}

/// Midpoint-rule comparison `d < r` with error `err`: `(hit, flagged)`.
fn compare(d: f64, err: f64, r: f64) -> (bool, bool) {
    if d + err < r {
        (true, false)
    } else if d - err >= r {
        (false, false)
    } else {
        (d < r, true)
    }
}

/// Counts `T^n x ∈ B(y_n, ψ(n))` along μ-random orbits; `targets[(n−1) mod len]` is `y_n`.
/// `psi_sum` accumulates bracket midpoints of `μ(B(y_n, ψ(n)))`.
pub fn shrinking_target_run(system: &IfsSystem, backend: &GibbsBackend, targets: &[PointRd], psi: &RadiusFunction, opts: &RunOptions) -> Result<Vec<CountingRecord>> {
    check_common(system, backend, psi, opts)?;
    if targets.is_empty() {
        return Err(Error::InvalidArgument("at least one target is required".into()));
    }
    if let Some(t) = targets.iter().find(|t| t.dim() != system.dim()) {
        return Err(Error::InvalidArgument(format!("target {t} does not match dim {}", system.dim())));
    }
    let checkpoints = opts.resolved_checkpoints();
    let target = |n: u64| &targets[((n - 1) % targets.len() as u64) as usize];
    let mut cache: HashMap<(usize, u64), f64> = HashMap::new();
    let mut wide = 0;
    let mut failure = None;
    let psi_cum = cumulative(&checkpoints, |n| {
        let key = (((n - 1) % targets.len() as u64) as usize, psi.eval(n).to_bits());
        if let Some(v) = cache.get(&key) {
            return *v;
        }
        let v = match ball_measure(system, backend, target(n), psi.eval(n), opts.depth_budget) {
            Ok(b) => {
                wide += is_wide(&b) as u64;
                b.mid()
            }
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        };
        cache.insert(key, v);
        v
    });
    if let Some(e) = failure {
        return Err(e);
    }
    drive(system, backend, opts, &checkpoints, &psi_cum, wide, |orbit| {
        let (counts, flagged) = count_hits(&checkpoints, |n| {
            let d = (orbit.z(n as usize) - target(n).as_complex()).norm();
            compare(d, 1e-14 * (1.0 + d), psi.eval(n))
        });
        Ok(Trace { counts, ball: None, flagged, wide: 0 })
    })
}

/// `μ(R_n)` for each distinct radius, by the configured method.
fn mean_ball_table(system: &IfsSystem, backend: &GibbsBackend, psi: &RadiusFunction, opts: &RunOptions) -> Result<(HashMap<u64, f64>, u64)> {
    let mut radii: Vec<f64> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for n in 1..=opts.n {
        let r = psi.eval(n);
        if seen.insert(r.to_bits()) {
            radii.push(r);
        }
    }
    let mut table = HashMap::new();
    let mut wide = 0;
    match opts.mean_ball {
        MeanBall::Exact => {
            for r in radii {
                let b = mean_ball_measure(system, backend, r, opts.depth_budget)?;
                wide += is_wide(&b) as u64;
                table.insert(r.to_bits(), b.mid());
            }
        }
        MeanBall::MonteCarlo { samples } => {
            if samples == 0 {
                return Err(Error::InvalidArgument("Monte Carlo quadrature needs samples >= 1".into()));
            }
            let len = opts.depth_budget as u64 + 8;
            let sums: Vec<(Vec<f64>, u64)> = (0..samples)
                .into_par_iter()
                .map(|i| {
                    let orbit = orbit_for(system, backend, opts.seed ^ QUADRATURE_SEED_SALT, i, len);
                    let mut w = 0;
                    let vals = radii
                        .iter()
                        .map(|&r| {
                            let b = ball_measure_at(system, backend, Center::Coded(&orbit, 0), r, opts.depth_budget)?;
                            w += is_wide(&b) as u64;
                            Ok(b.mid())
                        })
                        .collect::<Result<Vec<f64>>>()?;
                    Ok((vals, w))
                })
                .collect::<Result<_>>()?;
            for (k, r) in radii.iter().enumerate() {
                let mean = sums.iter().map(|(v, _)| v[k]).sum::<f64>() / samples as f64;
                table.insert(r.to_bits(), mean);
            }
            wide += sums.iter().map(|(_, w)| w).sum::<u64>();
        }
    }
    Ok((table, wide))
}

/// Counts returns `|T^n x − x| < ψ(n)`. `psi_sum` is `Σ μ(R_n)` and
/// `ball_sum` is the sample's own `Σ μ(B(x, ψ(n)))`.
pub fn recurrence_pure_run(system: &IfsSystem, backend: &GibbsBackend, psi: &RadiusFunction, opts: &RunOptions) -> Result<Vec<CountingRecord>> {
    check_common(system, backend, psi, opts)?;
    let checkpoints = opts.resolved_checkpoints();
    let (table, wide) = mean_ball_table(system, backend, psi, opts)?;
    let psi_cum = cumulative(&checkpoints, |n| table[&psi.eval(n).to_bits()]);
    drive(system, backend, opts, &checkpoints, &psi_cum, wide, |orbit| {
        let mut local: HashMap<u64, f64> = HashMap::new();
        let mut w = 0;
        let mut failure = None;
        let ball = cumulative(&checkpoints, |n| {
            let r = psi.eval(n);
            *local.entry(r.to_bits()).or_insert_with(|| match ball_measure_at(system, backend, Center::Coded(orbit, 0), r, opts.depth_budget) {
                Ok(b) => {
                    w += is_wide(&b) as u64;
                    b.mid()
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            })
        });
        if let Some(e) = failure {
            return Err(e);
        }
        let (counts, flagged) = count_hits(&checkpoints, |n| {
            let (d, err) = orbit_distance(system, orbit, 0, n as usize);
            compare(d, err, psi.eval(n))
        });
        Ok(Trace { counts, ball: Some(ball), flagged, wide: w })
    })
}

/// Counts `T^n x ∈ B(x, t_n(x))` where `μ(B(x, t_n(x))) = ψ(n)`, i.e.
/// `μ(B(x, |T^n x − x|)) < ψ(n)`. `psi_sum = Σ ψ(n)`.
pub fn recurrence_modified_run(system: &IfsSystem, backend: &GibbsBackend, psi: &RadiusFunction, opts: &RunOptions) -> Result<Vec<CountingRecord>> {
    check_common(system, backend, psi, opts)?;
    let checkpoints = opts.resolved_checkpoints();
    let psi_cum = cumulative(&checkpoints, |n| psi.eval(n));
    let diam = system.diameter();
    drive(system, backend, opts, &checkpoints, &psi_cum, 0, |orbit| {
        let far = system.hull().max_dist(orbit.z(0));
        let (counts, flagged) = count_hits(&checkpoints, |n| {
            let (d, err) = orbit_distance(system, orbit, 0, n as usize);
            modified_hit(system, backend, orbit, d, err, psi.eval(n), diam, far, opts.depth_budget)
        });
        Ok(Trace { counts, ball: None, flagged, wide: 0 })
    })
}

#[allow(clippy::too_many_arguments)]
fn modified_hit(system: &IfsSystem, backend: &GibbsBackend, orbit: &CodedOrbit, d: f64, err: f64, target: f64, diam: f64, far: f64, depth: usize) -> (bool, bool) {
    if target > 1.0 {
        return compare(d, err, diam);
    }
    if target == 1.0 {
        return compare(d, err, far);
    }
    if d <= err {
        return (true, d > 0.0);
    }
    if let GibbsBackend::Density { .. } = backend {
        let m = |r: f64| ball_measure_at(system, backend, Center::Coded(orbit, 0), r, depth).map(|b| b.mid()).unwrap_or(0.0);
        let (lo, hi) = (m((d - err).max(f64::MIN_POSITIVE)), m(d + err));
        return if hi < target {
            (true, false)
        } else if lo >= target {
            (false, false)
        } else {
            (m(d) < target, true)
        };
    }
    match ball_decide(system, backend, Center::Coded(orbit, 0), d, target, depth) {
        Decision::Below => (true, false),
        Decision::Above => (false, false),
        Decision::Undecided(b) => (b.mid() < target, true),
    }
}

/// Monte Carlo frequency of `|T^n x − x| < r` (or, when `modified`, of
/// `μ(B(x, |T^n x − x|)) < r`) over `samples` μ-random points, with its binomial standard error.
pub fn recurrence_set_frequency(system: &IfsSystem, backend: &GibbsBackend, n: u64, r: f64, modified: bool, samples: u64, seed: u64, depth_budget: usize) -> Result<(f64, f64)> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    if system.m() != backend.m() {
        return Err(Error::AlphabetMismatch(system.m(), backend.m()));
    }
    let (diam, hits) = (system.diameter(), std::sync::atomic::AtomicU64::new(0));
    (0..samples).into_par_iter().for_each(|id| {
        let orbit = orbit_for(system, backend, seed, id, n + depth_budget as u64);
        let (d, err) = orbit_distance(system, &orbit, 0, n as usize);
        let hit = if modified {
            let far = system.hull().max_dist(orbit.z(0));
            modified_hit(system, backend, &orbit, d, err, r, diam, far, depth_budget).0
        } else {
            compare(d, err, r).0
        };
        if hit {
            hits.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        }
    });
    let f = hits.into_inner() as f64 / samples as f64;
    Ok((f, (f * (1.0 - f) / samples as f64).sqrt()))
}

/// `(count − Ψ) / (Ψ^{1/2} · ln(Ψ + 1)^{3/2 + ε})` per checkpoint, with `Ψ` the
/// sample's `ball_sum` when present and `psi_sum` otherwise; `None` where `Ψ ≤ 1`.
pub fn bc_residual(record: &CountingRecord, epsilon: f64) -> Vec<Option<f64>> {
    record
        .checkpoints
        .iter()
        .map(|c| {
            let psi = c.ball_sum.unwrap_or(c.psi_sum);
            residual(c.count as f64, psi, psi, epsilon)
        })
        .collect()
}

/// Residual of `count` against `main`, normalised by the error scale of `scale`.
pub fn residual(count: f64, main: f64, scale: f64, epsilon: f64) -> Option<f64> {
    (scale > 1.0).then(|| (count - main) / (scale.sqrt() * (scale + 1.0).ln().powf(1.5 + epsilon)))
}

/// Largest `|residual|` over the defined checkpoints.
pub fn max_abs_residual(res: &[Option<f64>]) -> Option<f64> {
    res.iter().flatten().map(|r| r.abs()).reduce(f64::max)
}

/// `A_n = T^{-n}(E_n)` for a cylinder or a ball `E_n`.
#[derive(Clone, Debug, PartialEq)]
pub enum EventSpec {
    Cylinder(Vec<u8>),
    Ball { center: PointRd, r: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseReport {
    /// `Σ_{a ≤ m, n ≤ b} μ(A_m ∩ A_n)`.
    pub lhs: f64,
    /// `(Σ μ(A_n))²`.
    pub rhs_main: f64,
    /// `Σ μ(A_n)`, to be multiplied by `2κ + 1`.
    pub rhs_error: f64,
    /// Monte Carlo sample count when ball events were involved.
    pub samples: Option<u64>,
}

impl PairwiseReport {
    pub fn holds_with(&self, kappa: f64, tol: f64) -> bool {
        self.lhs <= self.rhs_main + (2.0 * kappa + 1.0) * self.rhs_error + tol
    }
}

/// Both sides of the pairwise quasi-independence inequality for `n ∈ [a, b]`.
/// Cylinder events are exact; any ball event switches to Monte Carlo over `mc_samples` points.
pub fn pairwise_independence_check<F>(system: &IfsSystem, backend: &GibbsBackend, events: F, a: u64, b: u64, mc_samples: u64, seed: u64) -> Result<PairwiseReport>
where
    F: Fn(u64) -> EventSpec,
{
    if a < 1 || b < a {
        return Err(Error::InvalidArgument(format!("need 1 <= a <= b, got a = {a}, b = {b}")));
    }
    let ev: Vec<EventSpec> = (a..=b).map(&events).collect();
    let cylinders: Option<Vec<&Vec<u8>>> = ev
        .iter()
        .map(|e| match e {
            EventSpec::Cylinder(w) => Some(w),
            EventSpec::Ball { .. } => None,
        })
        .collect();
    if let Some(ws) = cylinders {
        let mu: Vec<f64> = ws.iter().map(|w| backend.cylinder_measure(w)).collect();
        let s: f64 = mu.iter().sum();
        let mut lhs = s;
        for i in 0..ws.len() {
            for j in i + 1..ws.len() {
                lhs += 2.0 * intersection_measure(backend, ws[i], ws[j], j - i)?;
            }
        }
        return Ok(PairwiseReport { lhs, rhs_main: s * s, rhs_error: s, samples: None });
    }
    if mc_samples == 0 {
        return Err(Error::InvalidArgument("ball events need mc_samples >= 1".into()));
    }
    let len = ev.len();
    let inside = |orbit: &CodedOrbit, k: usize| -> bool {
        let n = (a as usize) + k;
        match &ev[k] {
            EventSpec::Cylinder(w) => orbit.symbols()[n..].starts_with(w),
            EventSpec::Ball { center, r } => (orbit.z(n) - center.as_complex()).norm() < *r,
        }
    };
    let per: Vec<(Vec<u64>, Vec<u64>)> = (0..mc_samples)
        .into_par_iter()
        .map(|id| {
            let orbit = orbit_for(system, backend, seed, id, b + 64);
            let hit: Vec<usize> = (0..len).filter(|&k| inside(&orbit, k)).collect();
            let mut single = vec![0u64; len];
            for &k in &hit {
                single[k] += 1;
            }
            (single, vec![(hit.len() * hit.len()) as u64])
        })
        .collect();
    let total = mc_samples as f64;
    let mu: Vec<f64> = (0..len).map(|k| per.iter().map(|(s, _)| s[k]).sum::<u64>() as f64 / total).collect();
    let s: f64 = mu.iter().sum();
    let lhs = per.iter().map(|(_, p)| p[0]).sum::<u64>() as f64 / total;
    Ok(PairwiseReport { lhs, rhs_main: s * s, rhs_error: s, samples: Some(mc_samples) })
}

/// Least-squares fit of `ln value` against `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    /// `e^{slope}`.
    pub gamma: f64,
    /// `slope < 0`.
    pub mixing: bool,
}

pub fn fit_exponential_rate(series: &[(f64, f64)]) -> Result<RateFit> {
    if series.len() < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 points, got {}", series.len())));
    }
    if let Some(&(n, v)) = series.iter().find(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("value {v} at n = {n} is not positive")));
    }
    let pts: Vec<(f64, f64)> = series.iter().map(|&(n, v)| (n, v.ln())).collect();
    let (slope, intercept, r_squared) = least_squares(&pts)?;
    let lo = series.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = series.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(RateFit { slope, intercept, r_squared, window: (lo, hi), gamma: slope.exp(), mixing: slope < 0.0 })
}

/// `(slope, intercept, r²)` of an ordinary least-squares line.
pub fn least_squares(pts: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidArgument("abscissae must not all coincide".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if ss_tot <= 1e-300 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    Ok((slope, intercept, r2))
}

/// Product of two systems under the max metric, with the product measure.
pub struct ProductSystem<'a> {
    pub a: &'a IfsSystem,
    pub backend_a: &'a GibbsBackend,
    pub b: &'a IfsSystem,
    pub backend_b: &'a GibbsBackend,
}

/// `C, γ` with `φ(n) ≤ C γ^n` on the fitted window; a vanishing sequence gives `(1, 0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateConstants {
    pub c: f64,
    pub gamma: f64,
}

pub fn rate_constants(series: &[(f64, f64)]) -> Result<RateConstants> {
    if series.iter().all(|&(_, v)| v.abs() <= 1e-15) {
        return Ok(RateConstants { c: 1.0, gamma: 0.0 });
    }
    let fit = fit_exponential_rate(series)?;
    let c = series.iter().map(|&(n, v)| v / fit.gamma.powf(n)).fold(1.0, f64::max);
    Ok(RateConstants { c, gamma: fit.gamma })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductMixingRow {
    pub n: usize,
    pub coefficient: f64,
    pub bound: f64,
}

pub fn product_system<'a>(a: &'a IfsSystem, backend_a: &'a GibbsBackend, b: &'a IfsSystem, backend_b: &'a GibbsBackend) -> Result<ProductSystem<'a>> {
    if a.m() != backend_a.m() {
        return Err(Error::AlphabetMismatch(a.m(), backend_a.m()));
    }
    if b.m() != backend_b.m() {
        return Err(Error::AlphabetMismatch(b.m(), backend_b.m()));
    }
    Ok(ProductSystem { a, backend_a, b, backend_b })
}

impl ProductSystem<'_> {
    pub fn cylinder_measure(&self, wa: &[u8], wb: &[u8]) -> f64 {
        self.backend_a.cylinder_measure(wa) * self.backend_b.cylinder_measure(wb)
    }

    /// Diameter bracket of `K_I × K_J` under the max metric.
    pub fn cylinder_diameter(&self, wa: &[u8], wb: &[u8]) -> (f64, f64) {
        let (la, ua) = self.a.diameter_bracket(&self.a.word_map(wa));
        let (lb, ub) = self.b.diameter_bracket(&self.b.word_map(wb));
        (la.max(lb), ua.max(ub))
    }

    /// `max |μ(E ∩ σ^{-n}F)/μ(F) − μ(E)|` over pair cylinders `E = [i]×[i']`
    /// and `F = [J]×[J']` with `|J| = |J'| = depth_k − n`.
    pub fn mixing_coeff(&self, depth_k: usize, n: usize) -> Result<f64> {
        let (ca, pa) = conditional_table(self.backend_a, depth_k, n)?;
        let (cb, pb) = conditional_table(self.backend_b, depth_k, n)?;
        let (na, nb) = (ca.len() / pa.len(), cb.len() / pb.len());
        let mut worst = 0.0f64;
        for (ia, &ma) in pa.iter().enumerate() {
            for (ib, &mb) in pb.iter().enumerate() {
                let target = ma * mb;
                for ja in 0..na {
                    let x = ca[ia * na + ja];
                    for jb in 0..nb {
                        worst = worst.max((x * cb[ib * nb + jb] - target).abs());
                    }
                }
            }
        }
        Ok(worst)
    }

    /// Coefficients against the bound `2² C² γ^n`, with `C, γ` fitted on the factors.
    pub fn mixing_vs_bound(&self, depth_k: usize, ns: &[usize]) -> Result<(Vec<ProductMixingRow>, RateConstants)> {
        let fa: Vec<(f64, f64)> = ns.iter().map(|&n| Ok((n as f64, mixing_coeff_cylinders(self.backend_a, depth_k, n)?))).collect::<Result<_>>()?;
        let fb: Vec<(f64, f64)> = ns.iter().map(|&n| Ok((n as f64, mixing_coeff_cylinders(self.backend_b, depth_k, n)?))).collect::<Result<_>>()?;
        let (ra, rb) = (rate_constants(&fa)?, rate_constants(&fb)?);
        let rc = RateConstants { c: ra.c.max(rb.c), gamma: ra.gamma.max(rb.gamma) };
        let rows = ns
            .iter()
            .map(|&n| Ok(ProductMixingRow { n, coefficient: self.mixing_coeff(depth_k, n)?, bound: 4.0 * rc.c * rc.c * rc.gamma.powi(n as i32) }))
            .collect::<Result<_>>()?;
        Ok((rows, rc))
    }
}

/// One step of the non-doubling construction on a weighted Sierpiński gasket.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonDoublingRow {
    pub n: u32,
    pub m: u32,
    pub r: f64,
    pub rho: f64,
    /// Lower bound for `μ(B(x, 2r)) / μ(B(x, r))`.
    pub doubling_lower: f64,
    /// Lower bound for `μ(B(x, r) ∩ H_ρ) / ((ρ/r)^γ μ(B(x, r)))`.
    pub decay_lower: f64,
}

/// `m(n) = ⌊n ln(1/p_min) / ln(1/p_max)⌋`.
pub fn companion_depth(n: u32, p_min: f64, p_max: f64) -> u32 {
    (n as f64 * p_min.ln() / p_max.ln()).floor() as u32
}

/// Exact cylinder bounds along `x(n) = π(2 1^n 2^∞)`, `y = π(1 2^∞)`,
/// `r = 2^{-n-1} + 2^{-m}`, `ρ = 2^{-m}` for weights `p` with `p[0]` the
/// smallest and `p[1]` the largest. `B(x, r)` lies in the cylinders
/// `21^{n-1}`, `12^{m-3}`, `21^{n-2}21^{m-2-n}`; `B(x, 2r)` contains `21^n` and
/// `12^n`; `B(x, r) ∩ B(y, ρ)` contains `12^{m-1}`.
pub fn non_doubling_probe(p: [f64; 3], ns: std::ops::RangeInclusive<u32>, gamma: f64) -> Result<Vec<NonDoublingRow>> {
    let (p1, p2) = (p[0], p[1]);
    if !(p1 > 0.0 && p1 < p2 && p[2] >= p1 && p[2] <= p2) || ((p.iter().sum::<f64>() - 1.0).abs() > 1e-12) {
        return Err(Error::InvalidArgument(format!("weights {p:?} must sum to 1 with p[0] < p[1] the extremes")));
    }
    ns.map(|n| {
        let m = companion_depth(n, p1, p2);
        if n < 2 || m < n + 2 {
            return Err(Error::InvalidArgument(format!("construction needs n >= 2 and m(n) >= n + 2, got n = {n}, m = {m}")));
        }
        let (ni, mi) = (n as i32, m as i32);
        let r = 0.5f64.powi(ni + 1) + 0.5f64.powi(mi);
        let rho = 0.5f64.powi(mi);
        let cover = p2 * p1.powi(ni - 1) + p1 * p2.powi(mi - 3) + p2 * p2 * p1.powi(mi - 4);
        let doubled = p1 * p2.powi(ni) + p2 * p1.powi(ni);
        let strip = p1 * p2.powi(mi - 1);
        Ok(NonDoublingRow { n, m, r, rho, doubling_lower: doubled / cover, decay_lower: strip / ((rho / r).powf(gamma) * cover) })
    })
    .collect()
}

/// Runs the shipped configuration for `"7.1"`, `"7.2"`, `"ABB"` or `"B.2"` and
/// returns its summary, whose `report` holds observed against reference values.
pub fn run_named_example(name: &str) -> Result<serde_json::Value> {
    let cfg = crate::config::named_config(name)?;
    Ok(crate::config::run_config(&cfg)?.summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::DensityKind;

    fn cantor(p: f64) -> (IfsSystem, GibbsBackend) {
        (IfsSystem::cantor(), GibbsBackend::bernoulli(vec![p, 1.0 - p]).unwrap())
    }

    #[test]
    fn checkpoint_grid() {
        assert_eq!(default_checkpoints(100_000), vec![1000, 3000, 10_000, 30_000, 100_000]);
        assert_eq!(default_checkpoints(50_000), vec![1000, 3000, 10_000, 30_000, 50_000]);
        assert_eq!(default_checkpoints(10), vec![10]);
        assert!(default_checkpoints(0).is_empty());
        let mut o = RunOptions::new(500, 1, 0);
        o.checkpoints = Some(vec![700, 100, 100, 0]);
        assert_eq!(o.resolved_checkpoints(), vec![100, 500]);
    }

    #[test]
    fn covering_ball_hits_every_step() {
        let (s, b) = cantor(0.5);
        let psi = RadiusFunction::Constant { c: 2.0 };
        let opts = RunOptions::new(2000, 3, 7);
        for recs in [
            shrinking_target_run(&s, &b, &[PointRd::new1(0.0)], &psi, &opts).unwrap(),
            recurrence_pure_run(&s, &b, &psi, &opts).unwrap(),
            recurrence_modified_run(&s, &b, &psi, &opts).unwrap(),
        ] {
            assert_eq!(recs.len(), 3);
            for r in &recs {
                let c: Vec<u64> = r.checkpoints.iter().map(|c| c.count).collect();
                assert_eq!(c, vec![1000, 2000]);
            }
        }
    }

    #[test]
    fn summable_radii_hit_finitely_often() {
        let (s, b) = cantor(0.5);
        let psi = RadiusFunction::Power { c: 1.0, beta: 10.0 };
        let recs = shrinking_target_run(&s, &b, &[PointRd::new1(0.0)], &psi, &RunOptions::new(5000, 20, 3)).unwrap();
        for r in &recs {
            assert!(r.last().unwrap().count <= 3);
            assert!(r.last().unwrap().psi_sum < 1.5);
        }
    }

    #[test]
    fn shrinking_target_psi_sum_matches_closed_form() {
        let (s, b) = cantor(0.5);
        let psi = RadiusFunction::PowerLog { alpha: 1.0 };
        let recs = shrinking_target_run(&s, &b, &[PointRd::new1(0.0)], &psi, &RunOptions::new(3000, 2, 1)).unwrap();
        let exact: f64 = (1..=3000u64).map(|n| 0.5f64.powi((n as f64).ln().floor() as i32)).sum();
        let got = recs[0].last().unwrap().psi_sum;
        assert!((got - exact).abs() < 1e-7 * exact, "{got} vs {exact}");
        assert_eq!(recs[0].checkpoints, recs[0].checkpoints.clone());
        assert_eq!(recs[1].last().unwrap().psi_sum, got);
    }

    #[test]
    fn records_are_monotone_and_reproducible() {
        let (s, b) = cantor(0.3);
        let psi = RadiusFunction::PowerLog { alpha: 1.5 };
        let mut opts = RunOptions::new(3000, 4, 11);
        opts.checkpoints = Some(vec![10, 100, 1000]);
        let a = recurrence_pure_run(&s, &b, &psi, &opts).unwrap();
        let again = recurrence_pure_run(&s, &b, &psi, &opts).unwrap();
        assert_eq!(a, again);
        for r in &a {
            for w in r.checkpoints.windows(2) {
                assert!(w[0].count <= w[1].count);
                assert!(w[1].ball_sum.unwrap() >= w[0].ball_sum.unwrap());
            }
            for c in &r.checkpoints {
                assert!(c.count <= c.n);
            }
        }
    }

    #[test]
    fn pure_recurrence_uses_exact_mean_ball() {
        let (s, b) = cantor(0.5);
        let psi = RadiusFunction::Constant { c: 5.0 / 9.0 };
        let recs = recurrence_pure_run(&s, &b, &psi, &RunOptions::new(1000, 1, 0)).unwrap();
        let c = recs[0].last().unwrap();
        assert!((c.psi_sum / 1000.0 - 0.625).abs() < 1e-9);
        let x = recs[0].x0.x();
        let expect = if x <= 1.0 / 9.0 || x >= 8.0 / 9.0 { 0.5 } else if (2.0 / 9.0..=7.0 / 9.0).contains(&x) && !(1.0 / 3.0..2.0 / 3.0).contains(&x) { 0.75 } else { f64::NAN };
        if expect.is_finite() {
            assert!((c.ball_sum.unwrap() / 1000.0 - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn monte_carlo_mean_ball_agrees_with_exact() {
        let (s, b) = cantor(0.2);
        let psi = RadiusFunction::Constant { c: 1.0 / 27.0 };
        let mut opts = RunOptions::new(10, 0, 5);
        let (exact, _) = mean_ball_table(&s, &b, &psi, &opts).unwrap();
        opts.mean_ball = MeanBall::MonteCarlo { samples: 4000 };
        let (mc, _) = mean_ball_table(&s, &b, &psi, &opts).unwrap();
        let (e, m) = (exact[&psi.eval(1).to_bits()], mc[&psi.eval(1).to_bits()]);
        // Balls of radius 3^{-3} around Cantor points are unions of level-3 cylinders.
        let oracle: f64 = (0.2f64 * 0.2 + 0.8 * 0.8).powi(3);
        assert!((e - oracle).abs() < 1e-9, "{e} vs {oracle}");
        assert!((m - oracle).abs() < 0.03, "{m} vs {oracle}");
    }

    #[test]
    fn modified_run_density_and_frequency() {
        let s = IfsSystem::gauss4();
        let b = GibbsBackend::density(&s, DensityKind::Gauss).unwrap();
        let psi = RadiusFunction::Power { c: 1.0, beta: 0.5 };
        let recs = recurrence_modified_run(&s, &b, &psi, &RunOptions::new(2000, 3, 2)).unwrap();
        for r in &recs {
            let c = r.last().unwrap();
            assert!(c.count <= 2000);
            assert!(r.flagged <= 20);
        }
        let (f, sd) = recurrence_set_frequency(&s, &b, 30, 0.25, true, 4000, 9, 48).unwrap();
        assert!((f - 0.25).abs() < 4.0 * sd + 1e-3, "{f} ± {sd}");
    }

    #[test]
    fn residual_algebra() {
        let rec = |count: u64, psi: f64| CountingRecord {
            sample_id: 0,
            x0: PointRd::new1(0.0),
            checkpoints: vec![Checkpoint { n: 10, count, psi_sum: psi, ball_sum: None }],
            flagged: 0,
            wide_brackets: 0,
        };
        assert_eq!(bc_residual(&rec(50, 50.0), 0.1), vec![Some(0.0)]);
        assert_eq!(bc_residual(&rec(1, 0.5), 0.1), vec![None]);
        let r = bc_residual(&rec(200, 100.0), 0.1)[0].unwrap();
        let expect = 100.0 / (10.0 * 101f64.ln().powf(1.6));
        assert!((r - expect).abs() < 1e-12);
        let mut big = rec(0, 0.0);
        big.checkpoints[0].ball_sum = Some(4.0);
        big.checkpoints[0].count = 8;
        assert!(bc_residual(&big, 0.1)[0].unwrap() > 0.0);
    }

    #[test]
    fn rate_fits() {
        let exact: Vec<(f64, f64)> = (1..=8).map(|n| (n as f64, 0.5f64.powi(n))).collect();
        let f = fit_exponential_rate(&exact).unwrap();
        assert!((f.gamma - 0.5).abs() < 1e-12 && (f.r_squared - 1.0).abs() < 1e-12 && f.mixing);
        assert_eq!(f.window, (1.0, 8.0));
        let flat: Vec<(f64, f64)> = (1..=5).map(|n| (n as f64, 0.3)).collect();
        let f = fit_exponential_rate(&flat).unwrap();
        assert_eq!(f.slope, 0.0);
        assert_eq!(f.gamma, 1.0);
        assert!(!f.mixing);
        assert!(fit_exponential_rate(&[(1.0, 1.0), (2.0, 0.0), (3.0, 0.1), (4.0, 0.1)]).is_err());
        assert!(fit_exponential_rate(&exact[..3]).is_err());
    }

    #[test]
    fn pairwise_independence_bernoulli_blocks() {
        let (s, b) = cantor(0.3);
        let rep = pairwise_independence_check(&s, &b, |_| EventSpec::Cylinder(vec![0]), 1, 6, 0, 0).unwrap();
        let sum = 6.0 * 0.3;
        assert!((rep.lhs - (sum * sum - 6.0 * 0.09 + sum)).abs() < 1e-12);
        assert!(rep.holds_with(0.0, 1e-12));
        let single = pairwise_independence_check(&s, &b, |_| EventSpec::Cylinder(vec![1, 1]), 4, 4, 0, 0).unwrap();
        assert!((single.lhs - 0.49).abs() < 1e-12 && (single.rhs_error - 0.49).abs() < 1e-12);
        let mc = pairwise_independence_check(&s, &b, |_| EventSpec::Ball { center: PointRd::new1(0.0), r: 0.34 }, 1, 6, 20_000, 1).unwrap();
        assert_eq!(mc.samples, Some(20_000));
        assert!((mc.lhs - rep.lhs).abs() < 0.1, "{} vs {}", mc.lhs, rep.lhs);
    }

    #[test]
    fn product_of_bernoulli_factors_is_independent() {
        let (s, b) = cantor(0.5);
        let p = product_system(&s, &b, &s, &b).unwrap();
        assert_eq!(p.cylinder_measure(&[0, 1], &[1]), 0.125);
        for n in 1..=4 {
            assert_eq!(p.mixing_coeff(6, n).unwrap(), 0.0);
        }
        let (la, ua) = p.cylinder_diameter(&[0, 1], &[1]);
        assert!(la <= 1.0 / 3.0 + 1e-12 && ua >= 1.0 / 3.0 - 1e-12);
    }

    #[test]
    fn non_doubling_construction() {
        let rows = non_doubling_probe([0.1, 0.8, 0.1], 2..=8, 0.1).unwrap();
        assert_eq!(rows[0].m, 20);
        assert!((rows[0].doubling_lower - 0.072 / (0.08 + 0.1 * 0.8f64.powi(17) + 0.64e-16)).abs() < 1e-12);
        for w in rows.windows(2) {
            assert!(w[1].doubling_lower > w[0].doubling_lower);
            assert!(w[1].decay_lower > w[0].decay_lower);
        }
        assert!(rows.last().unwrap().doubling_lower > 100.0);
        assert!(non_doubling_probe([0.8, 0.1, 0.1], 2..=3, 0.1).is_err());
    }

    #[test]
    fn non_doubling_bounds_match_certified_brackets() {
        let s = IfsSystem::sierpinski();
        let b = GibbsBackend::bernoulli(vec![0.1, 0.8, 0.1]).unwrap();
        let row = non_doubling_probe([0.1, 0.8, 0.1], 2..=2, 0.1).unwrap()[0];
        let x = PointRd::new2(0.5 + 0.125, 0.0);
        let small = ball_measure(&s, &b, &x, row.r, 40).unwrap();
        let big = ball_measure(&s, &b, &x, 2.0 * row.r, 40).unwrap();
        assert!(big.lower / small.upper >= row.doubling_lower * (1.0 - 1e-9), "{big:?} {small:?}");
    }
}
