//! Certified brackets for measures of balls, annuli and hyperplane strips,
//! computed by pruning the cylinder tree against the region.

use std::collections::HashMap;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{shape_distance_range, WordMap};
use crate::gibbs::{Cursor, DensityKind, GibbsBackend};
use crate::ifs::{IfsSystem, PointRd};
use crate::symbolic::CodedOrbit;

/// Largest number of straddling cylinders kept on one tree level; anything
/// beyond is charged to the upper bound only.
pub const MAX_LEVEL_NODES: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureBracket {
    pub lower: f64,
    pub upper: f64,
}

impl MeasureBracket {
    pub fn exact(v: f64) -> MeasureBracket {
        MeasureBracket { lower: v, upper: v }
    }
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
    pub fn mid(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
    pub fn contains(&self, v: f64, tol: f64) -> bool {
        self.lower - tol <= v && v <= self.upper + tol
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadiusFunction {
    Constant { c: f64 },
    /// `3^{-⌊α ln n⌋}`.
    PowerLog { alpha: f64 },
    /// `c n^{-β}`.
    Power { c: f64, beta: f64 },
}

impl RadiusFunction {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RadiusFunction::Constant { c } => c > 0.0 && c.is_finite(),
            RadiusFunction::PowerLog { alpha } => alpha > 0.0 && alpha.is_finite(),
            RadiusFunction::Power { c, beta } => c > 0.0 && beta > 0.0 && c.is_finite() && beta.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("radius function parameters must be positive: {self:?}")))
        }
    }

    pub fn eval(&self, n: u64) -> f64 {
        let n = n.max(1) as f64;
        match *self {
            RadiusFunction::Constant { c } => c,
            RadiusFunction::PowerLog { alpha } => 3f64.powi(-((alpha * n.ln()).floor() as i32)),
            RadiusFunction::Power { c, beta } => c * n.powf(-beta),
        }
    }
}

/// Center of a radial region: an explicit point, or the point `π(σ^shift ω)`
/// of a coded orbit. Coded centers measure distances relative to the common
/// prefix with each cylinder, which keeps radii far below `1e-15` resolvable.
#[derive(Clone, Copy, Debug)]
pub enum Center<'a> {
    Point(PointRd),
    Coded(&'a CodedOrbit, usize),
}

impl Center<'_> {
    pub fn point(&self) -> C64 {
        match self {
            Center::Point(p) => p.as_complex(),
            Center::Coded(o, s) => o.z(*s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    Ball { r: f64 },
    /// Complement of the open ball.
    Outside { r: f64 },
    Annulus { r: f64, rho: f64 },
    /// `|<y, normal> − offset| < rho`; `normal` has unit length.
    Strip { normal: C64, offset: f64, rho: f64 },
    StripBall { r: f64, normal: C64, offset: f64, rho: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Class {
    Inside,
    Outside,
    Straddle,
}

impl Region {
    fn radial(&self) -> bool {
        !matches!(self, Region::Strip { .. } | Region::StripBall { .. })
    }

    fn classify_dist(&self, dmin: f64, dmax: f64, e: f64) -> Class {
        match *self {
            Region::Ball { r } => {
                if dmax < r - e {
                    Class::Inside
                } else if dmin >= r + e {
                    Class::Outside
                } else {
                    Class::Straddle
                }
            }
            Region::Outside { r } => match (Region::Ball { r }).classify_dist(dmin, dmax, e) {
                Class::Inside => Class::Outside,
                Class::Outside => Class::Inside,
                Class::Straddle => Class::Straddle,
            },
            Region::Annulus { r, rho } => {
                if dmin > r - rho + e && dmax < r + rho - e {
                    Class::Inside
                } else if dmax <= r - rho - e || dmin >= r + rho + e {
                    Class::Outside
                } else {
                    Class::Straddle
                }
            }
            Region::Strip { .. } | Region::StripBall { .. } => Class::Straddle,
        }
    }

    fn classify_strip(offset: f64, rho: f64, lo: f64, hi: f64, e: f64) -> Class {
        if lo > offset - rho + e && hi < offset + rho - e {
            Class::Inside
        } else if hi <= offset - rho - e || lo >= offset + rho + e {
            Class::Outside
        } else {
            Class::Straddle
        }
    }
}

#[derive(Clone, Copy)]
struct Node {
    pre: WordMap,
    suf: WordMap,
    lcp: usize,
    on_path: bool,
    cur: Cursor,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decision {
    /// Certified `μ(region) < threshold`.
    Below,
    /// Certified `μ(region) >= threshold`.
    Above,
    Undecided(MeasureBracket),
}

struct Walk<'a> {
    system: &'a IfsSystem,
    backend: &'a GibbsBackend,
    center: Center<'a>,
    region: Region,
    depth_budget: usize,
}

impl Walk<'_> {
    /// Distance range from the center to the hull image of a node, with an error margin.
    fn dist_range(&self, nd: &Node) -> (f64, f64, f64) {
        let v = match self.center {
            Center::Point(p) => p.as_complex(),
            Center::Coded(o, s) => o.z(s + nd.lcp),
        };
        let shape = self.system.shape_of(&nd.suf);
        match nd.pre {
            WordMap::Line(g) => {
                let (u0, u1) = (shape.v[0].re, shape.v[1].re);
                let (d0, d1) = (g.diff(u0, v.re).abs(), g.diff(u1, v.re).abs());
                let lo = if u0 <= v.re && v.re <= u1 { 0.0 } else { d0.min(d1) };
                (lo, d0.max(d1), g.deriv(v.re).abs())
            }
            WordMap::Plane(g) => {
                let s = g.scale();
                (s * shape.min_dist(v), s * shape.max_dist(v), s)
            }
        }
    }

    /// Class of a node and whether refining it can still change the answer;
    /// cylinders smaller than the rounding margin are never split further.
    fn classify(&self, nd: &Node) -> (Class, bool) {
        if self.region.radial() {
            let (lo, hi, scale) = self.dist_range(nd);
            let scale_r = match self.region {
                Region::Ball { r } | Region::Outside { r } => r,
                Region::Annulus { r, rho } => r + rho,
                _ => 0.0,
            };
            let e = 1e-14 * scale + 1e-15 * scale_r;
            return (self.region.classify_dist(lo, hi, e), hi - lo > 4.0 * e);
        }
        let shape = self.system.shape_of(&nd.suf);
        let e = 1e-14;
        let (a, b) = match self.region {
            Region::Strip { normal, .. } | Region::StripBall { normal, .. } => shape.proj_range(normal),
            _ => unreachable!(),
        };
        let class = match self.region {
            Region::Strip { offset, rho, .. } => Region::classify_strip(offset, rho, a, b, e),
            Region::StripBall { r, offset, rho, .. } => {
                let s = Region::classify_strip(offset, rho, a, b, e);
                let c = self.center.point();
                let ball = (Region::Ball { r }).classify_dist(shape.min_dist(c), shape.max_dist(c), e + 1e-15 * r);
                match (s, ball) {
                    (Class::Outside, _) | (_, Class::Outside) => Class::Outside,
                    (Class::Inside, Class::Inside) => Class::Inside,
                    _ => Class::Straddle,
                }
            }
            _ => unreachable!(),
        };
        (class, shape.diameter() > 4.0 * e)
    }

    fn child(&self, nd: &Node, j: u8) -> Node {
        let g = self.system.generator(j);
        let cur = self.backend.child(&nd.cur, j);
        if nd.on_path {
            if let Center::Coded(o, s) = self.center {
                let pos = s + nd.lcp;
                if pos + 1 < o.valid_len() && o.symbols()[pos] == j {
                    return Node { pre: nd.pre.compose(g), lcp: nd.lcp + 1, cur, ..*nd };
                }
            }
        }
        Node { suf: nd.suf.compose(g), on_path: false, cur, ..*nd }
    }

    fn run(&self, threshold: Option<f64>) -> (MeasureBracket, Option<bool>) {
        let id = self.system.identity();
        let coded = matches!(self.center, Center::Coded(..));
        let root = Node { pre: id, suf: id, lcp: 0, on_path: coded, cur: self.backend.root() };
        let mut level = vec![root];
        let mut lower = 0.0;
        let mut pending = 0.0;
        let m = self.system.m() as u8;
        let mut depth = 0;
        while !level.is_empty() {
            let mut next = Vec::new();
            for nd in &level {
                let (class, refinable) = self.classify(nd);
                match class {
                    Class::Inside => lower += nd.cur.mass,
                    Class::Outside => {}
                    Class::Straddle => {
                        if !refinable || depth >= self.depth_budget || next.len() + (m as usize) > MAX_LEVEL_NODES {
                            pending += nd.cur.mass;
                        } else {
                            for j in 0..m {
                                next.push(self.child(nd, j));
                            }
                        }
                    }
                }
            }
            let open: f64 = next.iter().map(|n| n.cur.mass).sum();
            let upper = lower + pending + open;
            if let Some(t) = threshold {
                if lower >= t {
                    return (bracket(lower, upper), Some(true));
                }
                if upper < t {
                    return (bracket(lower, upper), Some(false));
                }
            }
            level = next;
            depth += 1;
        }
        (bracket(lower, lower + pending), None)
    }
}

fn bracket(lower: f64, upper: f64) -> MeasureBracket {
    let lower = lower.clamp(0.0, 1.0);
    MeasureBracket { lower, upper: upper.clamp(lower, 1.0) }
}

/// Bracket for `μ(region)` with cylinders refined down to `depth_budget`.
pub fn region_measure(system: &IfsSystem, backend: &GibbsBackend, center: Center<'_>, region: Region, depth_budget: usize) -> Result<MeasureBracket> {
    check_backend(system, backend)?;
    if depth_budget == 0 {
        return Err(Error::InvalidArgument("depth_budget must be >= 1".into()));
    }
    if let (false, Center::Coded(..)) = (region.radial(), center) {
        return Err(Error::InvalidArgument("strip regions need an explicit center point".into()));
    }
    Ok(Walk { system, backend, center, region, depth_budget }.run(None).0)
}

fn check_backend(system: &IfsSystem, backend: &GibbsBackend) -> Result<()> {
    if system.m() != backend.m() {
        return Err(Error::AlphabetMismatch(system.m(), backend.m()));
    }
    Ok(())
}

pub fn ball_measure(system: &IfsSystem, backend: &GibbsBackend, x: &PointRd, r: f64, depth_budget: usize) -> Result<MeasureBracket> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    region_measure(system, backend, Center::Point(*x), Region::Ball { r }, depth_budget)
}

/// Like [`ball_measure`] for any center; densities on an interval use the closed form.
pub fn ball_measure_at(system: &IfsSystem, backend: &GibbsBackend, center: Center<'_>, r: f64, depth_budget: usize) -> Result<MeasureBracket> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    if let GibbsBackend::Density { kind, lo, hi, .. } = backend {
        let x = center.point().re;
        let cdf = density_cdf(*kind, *lo, *hi);
        return Ok(MeasureBracket::exact((cdf((x + r).min(*hi)) - cdf((x - r).max(*lo))).max(0.0)));
    }
    region_measure(system, backend, center, Region::Ball { r }, depth_budget)
}

pub fn annulus_measure(system: &IfsSystem, backend: &GibbsBackend, x: &PointRd, r: f64, rho: f64, depth_budget: usize) -> Result<MeasureBracket> {
    if !(r > 0.0) || !(rho > 0.0) {
        return Err(Error::InvalidArgument("r and rho must be positive".into()));
    }
    region_measure(system, backend, Center::Point(*x), Region::Annulus { r, rho }, depth_budget)
}

/// Decides `μ(B(center, r)) < threshold` with early exit.
pub fn ball_decide(system: &IfsSystem, backend: &GibbsBackend, center: Center<'_>, r: f64, threshold: f64, depth_budget: usize) -> Decision {
    if r <= 0.0 {
        return if threshold > 0.0 { Decision::Below } else { Decision::Above };
    }
    let (b, d) = Walk { system, backend, center, region: Region::Ball { r }, depth_budget }.run(Some(threshold));
    match d {
        Some(true) => Decision::Above,
        Some(false) => Decision::Below,
        None if b.lower >= threshold => Decision::Above,
        None if b.upper < threshold => Decision::Below,
        None => Decision::Undecided(b),
    }
}

/// Tree depth at which cylinders are about `tol` across.
pub fn default_depth(system: &IfsSystem, tol: f64) -> usize {
    system.tail_depth(tol).clamp(1, 200)
}

/// `t_n = inf{r : μ(B(x, r)) >= target}` to within `tol`, by certified bisection.
pub fn t_n_radius(system: &IfsSystem, backend: &GibbsBackend, center: Center<'_>, target: f64, tol: f64) -> Result<f64> {
    if !(target > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidArgument("target and tol must be positive".into()));
    }
    let diam = system.diameter();
    if target > 1.0 {
        return Ok(diam);
    }
    let far = system.hull().max_dist(center.point());
    if target == 1.0 {
        return Ok(far);
    }
    let depth = default_depth(system, 0.25 * tol);
    let (mut lo, mut hi) = (0.0f64, far * (1.0 + 1e-12) + 1e-15);
    let mut last = MeasureBracket { lower: 0.0, upper: 1.0 };
    for _ in 0..200 {
        if hi - lo <= tol {
            return Ok(0.5 * (lo + hi));
        }
        let mut moved = false;
        for frac in [0.5, 0.35, 0.65, 0.2, 0.8] {
            let r = lo + frac * (hi - lo);
            match ball_decide(system, backend, center, r, target, depth) {
                Decision::Above => {
                    hi = r;
                    moved = true;
                }
                Decision::Below => {
                    lo = r;
                    moved = true;
                }
                Decision::Undecided(b) => last = b,
            }
            if moved {
                break;
            }
        }
        if !moved {
            return Err(Error::Uncertified(format!(
                "t_n bisection stalled on [{lo:e}, {hi:e}]; last bracket [{:e}, {:e}] vs target {target:e}",
                last.lower, last.upper
            )));
        }
    }
    if hi - lo <= tol {
        Ok(0.5 * (lo + hi))
    } else {
        Err(Error::Uncertified(format!("t_n bisection exceeded 200 steps on [{lo:e}, {hi:e}]")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityEntry {
    pub n: u64,
    pub radius: f64,
    pub ratio: f64,
    pub width: f64,
    pub uncertain: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensitySeries {
    pub entries: Vec<DensityEntry>,
    /// Suffix minima and maxima of the ratios: empirical lower and upper densities.
    pub tail_min: Vec<f64>,
    pub tail_max: Vec<f64>,
}

/// `μ(B(x, ψ(n))) / ψ(n)^τ` for `n = 1..=n_max`.
pub fn density_ratio_series(
    system: &IfsSystem,
    backend: &GibbsBackend,
    center: Center<'_>,
    psi: &RadiusFunction,
    tau: f64,
    n_max: u64,
    depth_budget: usize,
) -> Result<DensitySeries> {
    psi.validate()?;
    let mut cache: HashMap<u64, MeasureBracket> = HashMap::new();
    let mut entries = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let r = psi.eval(n);
        let b = match cache.get(&r.to_bits()) {
            Some(b) => *b,
            None => {
                let b = ball_measure_at(system, backend, center, r, depth_budget)?;
                cache.insert(r.to_bits(), b);
                b
            }
        };
        let scale = r.powf(tau);
        entries.push(DensityEntry {
            n,
            radius: r,
            ratio: b.mid() / scale,
            width: b.width() / scale,
            uncertain: b.width() > 0.1 * b.mid(),
        });
    }
    let mut tail_min = vec![0.0; entries.len()];
    let mut tail_max = vec![0.0; entries.len()];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in (0..entries.len()).rev() {
        lo = lo.min(entries[i].ratio);
        hi = hi.max(entries[i].ratio);
        tail_min[i] = lo;
        tail_max[i] = hi;
    }
    Ok(DensitySeries { entries, tail_min, tail_max })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub normal: [f64; 2],
    pub offset: f64,
}

impl Hyperplane {
    fn unit(&self) -> Result<(C64, f64)> {
        let n = C64::new(self.normal[0], self.normal[1]);
        let l = n.norm();
        if !(l > 0.0) {
            return Err(Error::InvalidArgument("hyperplane normal must be nonzero".into()));
        }
        Ok((n / l, self.offset / l))
    }
}

/// Bracket midpoint of `μ(H_ρ ∩ B(x, r)) / μ(B(x, r))`.
pub fn hyperplane_decay_probe(
    system: &IfsSystem,
    backend: &GibbsBackend,
    x: &PointRd,
    r: f64,
    h: &Hyperplane,
    rho: f64,
    depth_budget: usize,
) -> Result<f64> {
    let (normal, offset) = h.unit()?;
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument("rho must be positive".into()));
    }
    let den = ball_measure(system, backend, x, r, depth_budget)?;
    if den.lower <= 0.0 {
        return Err(Error::Uncertified(format!("ball measure bracket [{}, {}] contains 0", den.lower, den.upper)));
    }
    let num = region_measure(system, backend, Center::Point(*x), Region::StripBall { r, normal, offset, rho }, depth_budget)?;
    Ok(num.mid() / den.mid())
}

/// Bracket midpoint of `μ(B(x, 2r)) / μ(B(x, r))`.
pub fn doubling_ratio(system: &IfsSystem, backend: &GibbsBackend, x: &PointRd, r: f64, depth_budget: usize) -> Result<f64> {
    let den = ball_measure(system, backend, x, r, depth_budget)?;
    if den.lower <= 0.0 {
        return Err(Error::Uncertified(format!("ball measure bracket [{}, {}] contains 0", den.lower, den.upper)));
    }
    let num = ball_measure(system, backend, x, 2.0 * r, depth_budget)?;
    Ok(num.mid() / den.mid())
}

/// `∫ μ(B(x, r)) dμ(x)`, the measure of the recurrence set `{x : |Tx − x| < r}`
/// in the limit of large n. Densities on an interval use Gauss–Legendre
/// quadrature of the closed-form ball measure; other backends walk pairs of cylinders.
pub fn mean_ball_measure(system: &IfsSystem, backend: &GibbsBackend, r: f64, depth_budget: usize) -> Result<MeasureBracket> {
    check_backend(system, backend)?;
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    if let GibbsBackend::Density { kind, lo, hi, .. } = backend {
        return Ok(MeasureBracket::exact(density_mean_ball(*kind, *lo, *hi, r)));
    }
    Ok(pair_walk(system, backend, r, depth_budget))
}

fn density_cdf(kind: DensityKind, lo: f64, hi: f64) -> impl Fn(f64) -> f64 {
    move |y: f64| match kind {
        DensityKind::Gauss => y.ln_1p() / std::f64::consts::LN_2,
        DensityKind::Lebesgue => (y - lo) / (hi - lo),
    }
}

fn density_mean_ball(kind: DensityKind, lo: f64, hi: f64, r: f64) -> f64 {
    let cdf = density_cdf(kind, lo, hi);
    let pdf = |x: f64| match kind {
        DensityKind::Gauss => 1.0 / (std::f64::consts::LN_2 * (1.0 + x)),
        DensityKind::Lebesgue => 1.0 / (hi - lo),
    };
    let ball = |x: f64| cdf((x + r).min(hi)) - cdf((x - r).max(lo));
    let mut cuts = vec![lo, hi];
    for c in [lo + r, hi - r] {
        if c > lo && c < hi {
            cuts.push(c);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let gl = GaussLegendre::new(NonZeroUsize::new(24).unwrap());
    cuts.windows(2).map(|w| gl.integrate(w[0], w[1], |x| ball(x) * pdf(x))).sum::<f64>().min(1.0)
}

#[derive(Clone, Copy)]
struct Pair {
    a: WordMap,
    ca: Cursor,
    b: WordMap,
    cb: Cursor,
    weight: f64,
    same: bool,
}

fn pair_walk(system: &IfsSystem, backend: &GibbsBackend, r: f64, depth_budget: usize) -> MeasureBracket {
    let id = system.identity();
    let root = backend.root();
    let mut level = vec![Pair { a: id, ca: root, b: id, cb: root, weight: 1.0, same: true }];
    let (mut lower, mut pending) = (0.0, 0.0);
    let m = system.m() as u8;
    let e = 1e-14;
    let mut depth = 0;
    while !level.is_empty() {
        let mut next = Vec::new();
        for p in &level {
            let mass = p.weight * p.ca.mass * p.cb.mass;
            let (dmin, dmax) = shape_distance_range(&system.shape_of(&p.a), &system.shape_of(&p.b));
            if dmax < r - e {
                lower += mass;
            } else if dmin >= r + e {
            } else if dmax - dmin <= 4.0 * e || depth >= depth_budget || next.len() + (m as usize).pow(2) > MAX_LEVEL_NODES {
                pending += mass;
            } else {
                for i in 0..m {
                    let (ai, cai) = (p.a.compose(system.generator(i)), backend.child(&p.ca, i));
                    let start = if p.same { i } else { 0 };
                    for j in start..m {
                        let (bj, cbj) = (p.b.compose(system.generator(j)), backend.child(&p.cb, j));
                        let same = p.same && i == j;
                        let weight = if p.same && i != j { 2.0 * p.weight } else { p.weight };
                        next.push(Pair { a: ai, ca: cai, b: bj, cb: cbj, weight, same });
                    }
                }
            }
        }
        level = next;
        depth += 1;
    }
    bracket(lower, lower + pending)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cantor(p: f64) -> (IfsSystem, GibbsBackend) {
        (IfsSystem::cantor(), GibbsBackend::bernoulli(vec![p, 1.0 - p]).unwrap())
    }

    /// Exhaustive oracle: sum of depth-d cylinder masses whose intervals lie in the ball.
    fn enumerate_ball(x: f64, r: f64, d: usize, p: f64) -> (f64, f64) {
        let (mut lo, mut hi) = (0.0, 0.0);
        for idx in 0..(1usize << d) {
            let (mut a, mut mass, mut w) = (0.0, 1.0, 1.0);
            for k in (0..d).rev() {
                w /= 3.0;
                if (idx >> k) & 1 == 1 {
                    a += 2.0 * w;
                    mass *= 1.0 - p;
                } else {
                    mass *= p;
                }
            }
            let (u, v) = (a, a + w);
            if (u - x).abs() < r && (v - x).abs() < r {
                lo += mass;
            }
            if !(u - x >= r || x - v >= r) {
                hi += mass;
            }
        }
        (lo, hi)
    }

    #[test]
    fn radius_functions() {
        assert_eq!(RadiusFunction::PowerLog { alpha: 1.0 }.eval(1), 1.0);
        assert_eq!(RadiusFunction::PowerLog { alpha: 1.0 }.eval(3), 1.0 / 3.0);
        assert_eq!(RadiusFunction::Power { c: 1.0, beta: 0.5 }.eval(4), 0.5);
        assert!(RadiusFunction::Constant { c: 0.0 }.validate().is_err());
    }

    #[test]
    fn cantor_ball_quarter() {
        let (s, b) = cantor(0.5);
        let br = ball_measure(&s, &b, &PointRd::new1(0.25), 1.0 / 9.0, 12).unwrap();
        assert!(br.contains(0.25, 0.0) && br.width() < 1e-3, "{br:?}");
        let (lo, hi) = enumerate_ball(0.25, 1.0 / 9.0, 20, 0.5);
        assert!((lo - 0.25).abs() < 1e-5 && (hi - 0.25).abs() < 1e-5);
    }

    #[test]
    fn ball_covers_k() {
        for s in [IfsSystem::cantor(), IfsSystem::gauss4(), IfsSystem::sierpinski()] {
            let b = GibbsBackend::bernoulli(vec![1.0 / s.m() as f64; s.m()]).unwrap();
            let bx = s.attractor_box();
            let c = PointRd::from_complex(C64::new(0.5 * (bx.lo[0] + bx.hi[0]), 0.5 * (bx.lo[1] + bx.hi[1])), s.dim());
            let br = ball_measure(&s, &b, &c, s.diameter() * 1.01, 3).unwrap();
            assert_eq!((br.lower, br.upper), (1.0, 1.0));
        }
    }

    #[test]
    fn cantor_left_endpoint_balls() {
        let (s, b) = cantor(0.5);
        for k in 1..10 {
            let br = ball_measure(&s, &b, &PointRd::new1(0.0), 3f64.powi(-k), k as usize + 12).unwrap();
            assert!(br.contains(2f64.powi(-k), 1e-15) && br.width() < 1e-3, "k={k} {br:?}");
        }
    }

    #[test]
    fn coded_center_resolves_tiny_radii() {
        let (s, b) = cantor(0.2);
        let orbit = CodedOrbit::periodic(&s, &[0, 1, 1, 0, 1], &[1, 0], 10);
        for k in [20, 28, 33] {
            let br = ball_measure_at(&s, &b, Center::Coded(&orbit, 0), 3f64.powi(-k), k as usize + 8).unwrap();
            // for any x in K, B(x, 3^{-k}) ∩ K = K_{ω|k} up to a null set
            let word: Vec<u8> = orbit.symbols()[..k as usize].to_vec();
            let exact = b.cylinder_measure(&word);
            assert!(br.contains(exact, exact * 1e-9) && br.width() < 0.05 * exact, "k={k} {br:?} {exact:e}");
        }
    }

    #[test]
    fn annulus_is_two_balls_in_1d() {
        let (s, b) = cantor(0.3);
        let x = PointRd::new1(0.3);
        let (r, rho) = (0.4, 3f64.powi(-5));
        let a = annulus_measure(&s, &b, &x, r, rho, 20).unwrap();
        let b1 = ball_measure(&s, &b, &PointRd::new1(0.7), rho, 20).unwrap();
        let b2 = ball_measure(&s, &b, &PointRd::new1(-0.1), rho, 20).unwrap();
        assert!((a.mid() - (b1.mid() + b2.mid())).abs() <= a.width() + b1.width() + b2.width() + 1e-12);
        let full = annulus_measure(&s, &b, &PointRd::new1(0.0), 0.5, 2.0, 5).unwrap();
        assert_eq!((full.lower, full.upper), (1.0, 1.0));
    }

    #[test]
    fn depth_monotonicity() {
        let (s, b) = cantor(0.3);
        let x = PointRd::new1(0.41);
        let mut prev = MeasureBracket { lower: 0.0, upper: 1.0 };
        for d in 1..16 {
            let br = ball_measure(&s, &b, &x, 0.37, d).unwrap();
            assert!(br.lower >= prev.lower - 1e-15 && br.upper <= prev.upper + 1e-15);
            prev = br;
        }
    }

    #[test]
    fn complement_adds_to_one() {
        let (s, b) = cantor(0.3);
        let x = PointRd::new1(0.52);
        let inside = region_measure(&s, &b, Center::Point(x), Region::Ball { r: 0.29 }, 14).unwrap();
        let outside = region_measure(&s, &b, Center::Point(x), Region::Outside { r: 0.29 }, 14).unwrap();
        let w = inside.width() + outside.width();
        assert!((inside.mid() + outside.mid() - 1.0).abs() <= w + 1e-12);
    }

    #[test]
    fn t_n_examples() {
        let (s, b) = cantor(0.5);
        let c = Center::Point(PointRd::new1(0.0));
        let t = t_n_radius(&s, &b, c, 0.5, 1e-9).unwrap();
        assert!((t - 1.0 / 3.0).abs() < 1e-9, "{t}");
        assert_eq!(t_n_radius(&s, &b, c, 1.0, 1e-9).unwrap(), 1.0);
        assert_eq!(t_n_radius(&s, &b, c, 2.0, 1e-9).unwrap(), 1.0);
    }

    #[test]
    fn density_series() {
        let s = IfsSystem::gauss4();
        let leb = GibbsBackend::density(&s, DensityKind::Lebesgue).unwrap();
        let psi = RadiusFunction::Power { c: 0.1, beta: 1.0 };
        let ser = density_ratio_series(&s, &leb, Center::Point(PointRd::new1(0.5)), &psi, 1.0, 20, 40).unwrap();
        assert!(ser.entries.iter().all(|e| (e.ratio - 2.0).abs() < 1e-6 && !e.uncertain));
        let (c, b) = cantor(0.5);
        let tau = 2f64.ln() / 3f64.ln();
        let psi = RadiusFunction::PowerLog { alpha: 1.0 / 3f64.ln() };
        let ser = density_ratio_series(&c, &b, Center::Point(PointRd::new1(0.0)), &psi, tau, 30, 30).unwrap();
        for e in &ser.entries {
            assert!((e.ratio - 1.0).abs() < 1e-3, "{e:?}");
        }
        let (c, b) = cantor(0.3);
        let psi = RadiusFunction::PowerLog { alpha: 1.0 / 3f64.ln() };
        let ser = density_ratio_series(&c, &b, Center::Point(PointRd::new1(0.0)), &psi, tau, 30, 40).unwrap();
        for e in &ser.entries {
            let k = (e.radius.ln() / 3f64.ln()).round().abs() as i32;
            let exact = 0.3f64.powi(k) / 3f64.powf(-(k as f64) * tau);
            assert!((e.ratio - exact).abs() < 1e-3 * exact, "{e:?} {exact}");
        }
    }

    #[test]
    fn hyperplane_probes() {
        let s = IfsSystem::sierpinski();
        let b = GibbsBackend::bernoulli(vec![1.0 / 3.0; 3]).unwrap();
        let h = Hyperplane { normal: [1.0, 0.0], offset: 5.0 };
        let v = hyperplane_decay_probe(&s, &b, &PointRd::new2(0.5, 0.3), 0.5, &h, 0.1, 8).unwrap();
        assert_eq!(v, 0.0);
        let t = IfsSystem::two_line_cantor();
        let b = GibbsBackend::bernoulli(vec![0.5, 0.5]).unwrap();
        let h = Hyperplane { normal: [1.0, 0.0], offset: 0.0 };
        for k in 3..8 {
            let v = hyperplane_decay_probe(&t, &b, &PointRd::new2(0.0, 0.0), 1.0, &h, 3f64.powi(-k), 10).unwrap();
            assert!((v - 1.0).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn doubling_examples() {
        let (s, b) = cantor(0.5);
        assert_eq!(doubling_ratio(&s, &b, &PointRd::new1(0.25), 5.0, 5).unwrap(), 1.0);
        for (x, r) in [(0.0, 0.01), (0.25, 0.003), (2.0 / 3.0, 0.05), (0.75, 0.02)] {
            let v = doubling_ratio(&s, &b, &PointRd::new1(x), r, 24).unwrap();
            assert!(v <= 4.0 + 1e-6, "{x} {r} {v}");
        }
    }

    #[test]
    fn mean_ball_oracles() {
        // uniform Cantor at radius 5/9: each quarter of K sees 1/2 or 3/4
        let (s, b) = cantor(0.5);
        let mb = mean_ball_measure(&s, &b, 5.0 / 9.0, 14).unwrap();
        assert!(mb.contains(0.625, 1e-12) && mb.width() < 1e-2, "{mb:?}");
        // B(x, 3^{-k}) ∩ K = K_{ω|k}: Σ_I μ(I)^2
        let (s, b) = cantor(0.2);
        for k in 1..6 {
            let mb = mean_ball_measure(&s, &b, 3f64.powi(-k), 14).unwrap();
            let exact = (0.04f64 + 0.64).powi(k);
            assert!(mb.contains(exact, 1e-12) && mb.width() < 1e-2 * exact, "{k} {mb:?}");
        }
        // density quadrature against a Riemann-sum oracle
        let g = IfsSystem::gauss4();
        let gb = GibbsBackend::density(&g, DensityKind::Gauss).unwrap();
        let r = 0.1;
        let q = mean_ball_measure(&g, &gb, r, 1).unwrap().mid();
        let n = 200_000;
        let ln2 = std::f64::consts::LN_2;
        let oracle: f64 = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) / n as f64;
                let m = ((1.0 + (x + r).min(1.0)) / (1.0 + (x - r).max(0.0))).ln() / ln2;
                m / (ln2 * (1.0 + x)) / n as f64
            })
            .sum();
        assert!((q - oracle).abs() < 1e-9, "{q} {oracle}");
    }
}
