//! Gibbs measures: exact closed forms and a transfer-operator eigen-solver,
//! cylinder measures, conditional symbol laws and cylinder mixing coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Mobius, WordMap};
use crate::ifs::IfsSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    /// `h(x) = 1 / (ln 2 (1 + x))` on [0,1].
    Gauss,
    /// Normalized Lebesgue measure on the hull. Not T-invariant in general.
    Lebesgue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Bernoulli { p: Vec<f64> },
    /// `g_j = |φ_j'|^tau`.
    ConformalPower { tau: f64 },
    /// Closed-form eigen-density against Lebesgue measure (potential `|φ_j'|`).
    Density { name: DensityKind },
}

impl PotentialSpec {
    pub fn validate(&self, m: usize) -> Result<()> {
        match self {
            PotentialSpec::Bernoulli { p } => {
                if p.len() != m {
                    return Err(Error::InvalidPotential(format!("expected {m} probabilities, got {}", p.len())));
                }
                if p.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                    return Err(Error::InvalidPotential("probabilities must be positive".into()));
                }
                let s: f64 = p.iter().sum();
                if (s - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidPotential(format!("probabilities sum to {s}, not 1")));
                }
            }
            PotentialSpec::ConformalPower { tau } => {
                if !(*tau > 0.0) || !tau.is_finite() {
                    return Err(Error::InvalidPotential("tau must be positive".into()));
                }
            }
            PotentialSpec::Density { .. } => {}
        }
        Ok(())
    }

    /// `g_j` at a point (the weight of branch j at x).
    pub fn weight(&self, system: &IfsSystem, j: usize, x: num_complex::Complex64) -> f64 {
        match self {
            PotentialSpec::Bernoulli { p } => p[j],
            PotentialSpec::ConformalPower { tau } => system.generators()[j].deriv_abs(x).powf(*tau),
            PotentialSpec::Density { .. } => system.generators()[j].deriv_abs(x),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    #[serde(rename = "R")]
    pub r: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Transfer-operator eigen-data discretized on depth-k cylinders.
#[derive(Clone, Debug)]
pub struct SpectralBackend {
    m: usize,
    depth: usize,
    r: f64,
    h: Vec<f64>,
    nu: Vec<f64>,
    anchors: Vec<num_complex::Complex64>,
    /// `mu[l]` holds μ([I]) for all words of length l.
    mu: Vec<Vec<f64>>,
    report: EigenReport,
}

impl SpectralBackend {
    pub fn depth(&self) -> usize {
        self.depth
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn report(&self) -> EigenReport {
        self.report
    }
    /// h on depth-k cylinders, indexed in base m.
    pub fn h(&self) -> &[f64] {
        &self.h
    }
    pub fn nu(&self) -> &[f64] {
        &self.nu
    }
    /// Anchors `z_W = φ_W(x0)` of the depth-k cylinders.
    pub fn anchors(&self) -> &[num_complex::Complex64] {
        &self.anchors
    }
    pub fn level(&self, l: usize) -> &[f64] {
        &self.mu[l]
    }
}

#[derive(Clone, Debug)]
pub enum GibbsBackend {
    Bernoulli { p: Vec<f64> },
    Density { kind: DensityKind, maps: Vec<Mobius>, lo: f64, hi: f64 },
    Spectral(SpectralBackend),
}

/// Walk state for enumerating cylinders with their masses.
#[derive(Clone, Copy, Debug)]
pub struct Cursor {
    pub mass: f64,
    pub len: usize,
    ctx: usize,
    line: Mobius,
}

#[inline]
fn ln1p_over(t: f64) -> f64 {
    if t < 1e-8 {
        1.0 - 0.5 * t
    } else {
        t.ln_1p() / t
    }
}

impl GibbsBackend {
    pub fn bernoulli(p: Vec<f64>) -> Result<GibbsBackend> {
        PotentialSpec::Bernoulli { p: p.clone() }.validate(p.len())?;
        Ok(GibbsBackend::Bernoulli { p })
    }

    pub fn density(system: &IfsSystem, kind: DensityKind) -> Result<GibbsBackend> {
        let maps: Vec<Mobius> = system
            .generators()
            .iter()
            .map(|g| match g {
                WordMap::Line(f) => Ok(*f),
                WordMap::Plane(_) => Err(Error::InvalidPotential("density backends need a 1-D system".into())),
            })
            .collect::<Result<_>>()?;
        let (lo, hi) = (system.hull().v[0].re, system.hull().v[1].re);
        let b = GibbsBackend::Density { kind, maps, lo, hi };
        if kind == DensityKind::Gauss {
            if lo != 0.0 || hi != 1.0 {
                return Err(Error::InvalidPotential("the Gauss density needs K = [0,1]".into()));
            }
            let defect = b.shift_invariance_defect(3);
            if defect > 1e-9 {
                return Err(Error::InvalidPotential(format!("Gauss density is not invariant for this system (defect {defect:e})")));
            }
        }
        Ok(b)
    }

    /// Exact backend when a closed form exists, otherwise the spectral solver.
    pub fn build(system: &IfsSystem, potential: &PotentialSpec, spectral: Option<SpectralOptions>) -> Result<(GibbsBackend, Option<EigenReport>)> {
        potential.validate(system.m())?;
        match (potential, spectral) {
            (_, Some(o)) => {
                let (b, r) = eigen_solve(system, potential, o.depth, o.tol, o.max_iter)?;
                Ok((b, Some(r)))
            }
            (PotentialSpec::Bernoulli { p }, None) => Ok((GibbsBackend::bernoulli(p.clone())?, None)),
            (PotentialSpec::Density { name }, None) => Ok((GibbsBackend::density(system, *name)?, None)),
            (PotentialSpec::ConformalPower { .. }, None) => {
                let o = SpectralOptions::default();
                let (b, r) = eigen_solve(system, potential, o.depth, o.tol, o.max_iter)?;
                Ok((b, Some(r)))
            }
        }
    }

    pub fn m(&self) -> usize {
        match self {
            GibbsBackend::Bernoulli { p } => p.len(),
            GibbsBackend::Density { maps, .. } => maps.len(),
            GibbsBackend::Spectral(s) => s.m,
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, GibbsBackend::Spectral(_))
    }

    pub fn root(&self) -> Cursor {
        Cursor { mass: 1.0, len: 0, ctx: 0, line: Mobius::IDENTITY }
    }

    fn density_mass(kind: DensityKind, g: &Mobius, lo: f64, hi: f64) -> f64 {
        let delta = g.diff(hi, lo).abs();
        match kind {
            DensityKind::Lebesgue => delta / (hi - lo),
            DensityKind::Gauss => {
                let x1 = g.eval(lo).min(g.eval(hi));
                let t = delta / (1.0 + x1);
                t * ln1p_over(t) / std::f64::consts::LN_2
            }
        }
    }

    #[inline]
    pub fn child(&self, c: &Cursor, j: u8) -> Cursor {
        let j = j as usize;
        match self {
            GibbsBackend::Bernoulli { p } => Cursor { mass: c.mass * p[j], len: c.len + 1, ..*c },
            GibbsBackend::Density { kind, maps, lo, hi } => {
                let line = c.line.compose(&maps[j]);
                Cursor { mass: Self::density_mass(*kind, &line, *lo, *hi), len: c.len + 1, ctx: 0, line }
            }
            GibbsBackend::Spectral(s) => {
                let k = s.depth;
                if c.len < k {
                    let idx = c.ctx * s.m + j;
                    let ctx = if c.len + 1 == k { idx % s.m.pow(k as u32 - 1) } else { idx };
                    Cursor { mass: s.mu[c.len + 1][idx], len: c.len + 1, ctx, line: c.line }
                } else {
                    let w = c.ctx;
                    let q = s.mu[k][w * s.m + j] / s.mu[k - 1][w];
                    let ctx = (w * s.m + j) % s.m.pow(k as u32 - 1);
                    Cursor { mass: c.mass * q, len: c.len + 1, ctx, line: c.line }
                }
            }
        }
    }

    pub fn cylinder_measure(&self, w: &[u8]) -> f64 {
        if let GibbsBackend::Spectral(s) = self {
            if w.len() <= s.depth {
                let idx = w.iter().fold(0usize, |a, &x| a * s.m + x as usize);
                return s.mu[w.len()][idx];
            }
        }
        let mut c = self.root();
        for &j in w {
            c = self.child(&c, j);
        }
        c.mass
    }

    /// `(μ([Ij]) / μ([I]))_j`.
    pub fn conditional_next(&self, w: &[u8]) -> Vec<f64> {
        if let GibbsBackend::Bernoulli { p } = self {
            return p.clone();
        }
        let mut c = self.root();
        for &j in w {
            c = self.child(&c, j);
        }
        let kids: Vec<f64> = (0..self.m() as u8).map(|j| self.child(&c, j).mass).collect();
        let s: f64 = kids.iter().sum();
        kids.into_iter().map(|x| x / s).collect()
    }

    /// μ of all words of length `k`, indexed in base m.
    pub fn level_measures(&self, k: usize) -> Vec<f64> {
        if let GibbsBackend::Spectral(s) = self {
            if k <= s.depth {
                return s.mu[k].clone();
            }
        }
        let m = self.m();
        let mut out = vec![0.0; m.pow(k as u32)];
        fn rec(b: &GibbsBackend, c: Cursor, k: usize, idx: usize, out: &mut [f64]) {
            if c.len == k {
                out[idx] = c.mass;
                return;
            }
            for j in 0..b.m() {
                rec(b, b.child(&c, j as u8), k, idx * b.m() + j, out);
            }
        }
        rec(self, self.root(), k, 0, &mut out);
        out
    }

    /// Eigenfunction value `h` at the point `π(w 1^∞)`, and the eigenvalue R.
    pub fn eigen_h(&self, system: &IfsSystem, w: &[u8]) -> (f64, f64) {
        match self {
            GibbsBackend::Bernoulli { .. } => (1.0, 1.0),
            GibbsBackend::Density { kind, lo, hi, .. } => {
                let x = system.word_map(w).eval(system.x0().as_complex()).re;
                match kind {
                    DensityKind::Gauss => (1.0 / (std::f64::consts::LN_2 * (1.0 + x)), 1.0),
                    DensityKind::Lebesgue => (1.0 / (hi - lo), 1.0),
                }
            }
            GibbsBackend::Spectral(s) => {
                let idx = (0..s.depth).fold(0usize, |a, i| a * s.m + *w.get(i).unwrap_or(&0) as usize);
                (s.h[idx], s.r)
            }
        }
    }

    /// Largest `|Σ_j μ([jI]) − μ([I])|` over words of length < `depth`.
    pub fn shift_invariance_defect(&self, depth: usize) -> f64 {
        let m = self.m();
        let mut worst: f64 = 0.0;
        for l in 0..depth {
            let lower = self.level_measures(l);
            let upper = self.level_measures(l + 1);
            let stride = m.pow(l as u32);
            for (i, mi) in lower.iter().enumerate() {
                let s: f64 = (0..m).map(|j| upper[j * stride + i]).sum();
                worst = worst.max((s - mi).abs());
            }
        }
        worst
    }

    /// Largest `|Σ_j μ([Ij]) − μ([I])|` over words of length < `depth`.
    pub fn additivity_defect(&self, depth: usize) -> f64 {
        let m = self.m();
        let mut worst: f64 = 0.0;
        for l in 0..depth {
            let lower = self.level_measures(l);
            let upper = self.level_measures(l + 1);
            for (i, mi) in lower.iter().enumerate() {
                let s: f64 = upper[i * m..(i + 1) * m].iter().sum();
                worst = worst.max((s - mi).abs());
            }
        }
        worst
    }

    /// Min and max of `μ([IJ]) / (μ([I]) μ([J]))` over `|I| + |J| <= depth`.
    pub fn quasi_bernoulli_range(&self, depth: usize) -> (f64, f64) {
        let m = self.m();
        let levels: Vec<Vec<f64>> = (0..=depth).map(|l| self.level_measures(l)).collect();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for li in 1..depth {
            for lj in 1..=(depth - li) {
                let stride = m.pow(lj as u32);
                for (i, a) in levels[li].iter().enumerate() {
                    for (j, b) in levels[lj].iter().enumerate() {
                        let r = levels[li + lj][i * stride + j] / (a * b);
                        lo = lo.min(r);
                        hi = hi.max(r);
                    }
                }
            }
        }
        (lo, hi)
    }

    /// `min μ([Ij]) / μ([I])` over words of length < `depth`.
    pub fn doubling_eta(&self, depth: usize) -> f64 {
        let m = self.m();
        let mut eta = f64::INFINITY;
        for l in 0..depth {
            let lower = self.level_measures(l);
            let upper = self.level_measures(l + 1);
            for (i, mi) in lower.iter().enumerate() {
                for j in 0..m {
                    eta = eta.min(upper[i * m + j] / mi);
                }
            }
        }
        eta
    }
}

/// Sequential sampler state for drawing symbol after symbol from μ.
#[derive(Clone, Debug)]
pub enum ChainState {
    Bernoulli { cum: Vec<f64> },
    Density { map: Mobius, log_det: f64 },
    Spectral { ctx: usize, len: usize },
}

impl ChainState {
    pub fn new(b: &GibbsBackend) -> ChainState {
        match b {
            GibbsBackend::Bernoulli { p } => {
                let mut acc = 0.0;
                let mut cum: Vec<f64> = p.iter().map(|x| {
                    acc += x;
                    acc
                }).collect();
                *cum.last_mut().unwrap() = 1.0;
                ChainState::Bernoulli { cum }
            }
            GibbsBackend::Density { .. } => ChainState::Density { map: Mobius::IDENTITY, log_det: 0.0 },
            GibbsBackend::Spectral(_) => ChainState::Spectral { ctx: 0, len: 0 },
        }
    }

    /// Draws the next symbol given a uniform variate `u ∈ [0,1)`.
    pub fn draw(&mut self, b: &GibbsBackend, u: f64) -> u8 {
        match (self, b) {
            (ChainState::Bernoulli { cum }, _) => cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1) as u8,
            (ChainState::Density { map, log_det }, GibbsBackend::Density { kind, maps, lo, hi }) => {
                let scale = log_det.exp();
                let mut w = [0.0f64; 16];
                let m = maps.len();
                let mut kids = [Mobius::IDENTITY; 16];
                let mut total = 0.0;
                for j in 0..m {
                    let g = map.compose(&maps[j]);
                    let d = g.diff(*hi, *lo).abs();
                    w[j] = match kind {
                        DensityKind::Lebesgue => d,
                        DensityKind::Gauss => {
                            let x1 = g.eval(*lo).min(g.eval(*hi));
                            let t = d / (1.0 + x1);
                            t * ln1p_over(scale * t)
                        }
                    };
                    kids[j] = g;
                    total += w[j];
                }
                let target = u * total;
                let mut acc = 0.0;
                let mut pick = m - 1;
                for j in 0..m {
                    acc += w[j];
                    if target < acc {
                        pick = j;
                        break;
                    }
                }
                let mut g = kids[pick];
                *log_det += g.det.abs().ln();
                g.det = g.det.signum();
                *map = g;
                pick as u8
            }
            (ChainState::Spectral { ctx, len }, GibbsBackend::Spectral(s)) => {
                let k = s.depth;
                let m = s.m;
                let (base, parent) = if *len < k {
                    (*ctx * m, s.mu[*len][*ctx])
                } else {
                    (*ctx * m, s.mu[k - 1][*ctx])
                };
                let level = if *len < k { &s.mu[*len + 1] } else { &s.mu[k] };
                let target = u * parent;
                let mut acc = 0.0;
                let mut pick = m - 1;
                for j in 0..m {
                    acc += level[base + j];
                    if target < acc {
                        pick = j;
                        break;
                    }
                }
                let idx = base + pick;
                *ctx = if *len + 1 >= k { idx % m.pow(k as u32 - 1) } else { idx };
                *len += 1;
                pick as u8
            }
            _ => unreachable!("chain state does not match backend"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralOptions {
    pub depth: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    1e-13
}
fn default_max_iter() -> usize {
    100_000
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions { depth: 10, tol: default_tol(), max_iter: default_max_iter() }
    }
}

/// Power iteration for `L h = R h` and `L* ν = R ν` on depth-k cylinders,
/// with `(L f)_W = Σ_j g_j(z_W) f_{(jW)|k}` and anchors `z_W = φ_W(x0)`.
pub fn eigen_solve(system: &IfsSystem, potential: &PotentialSpec, depth: usize, tol: f64, max_iter: usize) -> Result<(GibbsBackend, EigenReport)> {
    potential.validate(system.m())?;
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be >= 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    let m = system.m();
    let n = m.checked_pow(depth as u32).filter(|&n| n <= 1 << 24).ok_or_else(|| Error::InvalidArgument("depth too large".into()))?;

    let mut anchors = vec![system.x0().as_complex()];
    for l in 0..depth {
        let stride = m.pow(l as u32);
        let mut next = vec![num_complex::Complex64::new(0.0, 0.0); stride * m];
        for j in 0..m {
            let g = &system.generators()[j];
            for (i, z) in anchors.iter().enumerate() {
                next[j * stride + i] = g.eval(*z);
            }
        }
        anchors = next;
    }

    // g[j * n + W]
    let mut g = vec![0.0; m * n];
    for j in 0..m {
        for w in 0..n {
            let v = potential.weight(system, j, anchors[w]);
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidPotential(format!("non-positive potential value {v} on branch {}", j + 1)));
            }
            g[j * n + w] = v;
        }
    }
    let top = n / m;

    let apply = |h: &[f64], out: &mut [f64]| {
        for w in 0..n {
            let tail = w / m;
            let mut s = 0.0;
            for j in 0..m {
                s += g[j * n + w] * h[j * top + tail];
            }
            out[w] = s;
        }
    };
    let apply_adj = |nu: &[f64], out: &mut [f64]| {
        for v in 0..n {
            let j = v / top;
            let wv = v % top;
            let mut s = 0.0;
            for w in 0..m {
                let idx = wv * m + w;
                s += g[j * n + idx] * nu[idx];
            }
            out[v] = s;
        }
    };

    let mut h = vec![1.0; n];
    let mut lh = vec![0.0; n];
    let mut r = 0.0;
    let mut iters = 0;
    let mut converged = false;
    while iters < max_iter {
        iters += 1;
        apply(&h, &mut lh);
        r = lh.iter().cloned().fold(0.0, f64::max);
        let mut change: f64 = 0.0;
        for w in 0..n {
            let v = lh[w] / r;
            change = change.max((v - h[w]).abs());
            h[w] = v;
        }
        if change < tol {
            converged = true;
            break;
        }
    }
    apply(&h, &mut lh);
    let residual = lh.iter().zip(&h).map(|(a, b)| (a - r * b).abs()).fold(0.0, f64::max);
    if !converged {
        return Err(Error::NoConvergence { iterations: iters, residual });
    }

    let mut nu = vec![1.0 / n as f64; n];
    let mut lnu = vec![0.0; n];
    let mut it_nu = 0;
    converged = false;
    while it_nu < max_iter {
        it_nu += 1;
        apply_adj(&nu, &mut lnu);
        let s: f64 = lnu.iter().sum();
        let mut change = 0.0;
        for v in 0..n {
            let x = lnu[v] / s;
            change += (x - nu[v]).abs();
            nu[v] = x;
        }
        if change < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iterations: it_nu, residual });
    }

    let z: f64 = h.iter().zip(&nu).map(|(a, b)| a * b).sum();
    for x in h.iter_mut() {
        *x /= z;
    }
    let mut mu = vec![Vec::new(); depth + 1];
    mu[depth] = h.iter().zip(&nu).map(|(a, b)| a * b).collect();
    for l in (0..depth).rev() {
        let up = &mu[l + 1];
        mu[l] = (0..m.pow(l as u32)).map(|i| up[i * m..(i + 1) * m].iter().sum()).collect();
    }
    let report = EigenReport { r, iterations: iters.max(it_nu), residual: residual / z };
    let sb = SpectralBackend { m, depth, r, h, nu, anchors, mu, report };
    Ok((GibbsBackend::Spectral(sb), report))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GibbsRatio {
    pub ratio_min: f64,
    pub ratio_max: f64,
}

/// Scans all words up to `depth` and returns the range of `μ([I]) / g̃^{(|I|)}(I 1^∞)`
/// where `g̃ = g h / (R h∘σ)` is the normalized potential.
pub fn verify_gibbs_property(backend: &GibbsBackend, system: &IfsSystem, potential: &PotentialSpec, depth: usize) -> GibbsRatio {
    let m = system.m();
    let (h_tail, r) = backend.eigen_h(system, &[]);
    let x0 = system.x0().as_complex();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for l in 1..=depth {
        let mut w = vec![0u8; l];
        for idx in 0..m.pow(l as u32) {
            let mut t = idx;
            for i in (0..l).rev() {
                w[i] = (t % m) as u8;
                t /= m;
            }
            // Π_t g_{i_{t+1}}(π(σ^{t+1}(I 1^∞)))
            let mut prod = 1.0;
            let mut f = system.identity();
            for t in (0..l).rev() {
                let x = f.eval(x0);
                prod *= potential.weight(system, w[t] as usize, x);
                f = system.generators()[w[t] as usize].compose(&f);
            }
            let (h_i, _) = backend.eigen_h(system, &w);
            let gt = prod * h_i / (r.powi(l as i32) * h_tail);
            let ratio = backend.cylinder_measure(&w) / gt;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    GibbsRatio { ratio_min: lo, ratio_max: hi }
}

/// `cond[i * m^{k-n} + J] = μ([i] ∩ σ^{-n}[J]) / μ([J])` for symbols i and
/// words J of length `k − n`. Product measures are handled in closed form.
pub fn conditional_table(backend: &GibbsBackend, depth_k: usize, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if depth_k < n {
        return Err(Error::InvalidArgument(format!("depth_k = {depth_k} < n = {n}")));
    }
    if depth_k == 0 {
        return Err(Error::InvalidArgument("depth_k must be >= 1".into()));
    }
    let m = backend.m();
    if (m as f64).powi(depth_k as i32) > (1u64 << 24) as f64 {
        return Err(Error::InvalidArgument("depth_k too large for exact enumeration".into()));
    }
    let fl = depth_k - n;
    let nf = m.pow(fl as u32);
    let first = backend.level_measures(1);
    if let (GibbsBackend::Bernoulli { p }, true) = (backend, n >= 1) {
        let mut cond = vec![0.0; m * nf];
        for i in 0..m {
            for jj in 0..nf {
                cond[i * nf + jj] = p[i];
            }
        }
        return Ok((cond, first));
    }
    let all = backend.level_measures(depth_k);
    let fmeas = backend.level_measures(fl);
    let top = m.pow(depth_k as u32 - 1);
    let mut joint = vec![0.0; m * nf];
    for (word, mu) in all.iter().enumerate() {
        let i = word / top;
        let jj = word % nf;
        joint[i * nf + jj] += mu;
    }
    let cond = joint.iter().enumerate().map(|(ix, a)| a / fmeas[ix % nf]).collect();
    Ok((cond, first))
}

/// `max_{i, J} |μ([i] ∩ σ^{-n}[J]) / μ([J]) − μ([i])|` with `i` a symbol and
/// `|J| = depth_k − n`, computed by exact enumeration of depth-k cylinders.
pub fn mixing_coeff_cylinders(backend: &GibbsBackend, depth_k: usize, n: usize) -> Result<f64> {
    let (cond, first) = conditional_table(backend, depth_k, n)?;
    let nf = cond.len() / first.len();
    Ok(cond.iter().enumerate().map(|(ix, c)| (c - first[ix / nf]).abs()).fold(0.0, f64::max))
}
