//! Conformal iterated function systems on the line and the plane.

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{convex_hull, convex_intersection_area, Mobius, Shape, Similarity, WordMap};
use crate::symbolic::FiniteWord;

/// A point of R^d, d ∈ {1, 2}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PointRd {
    coords: [f64; 2],
    dim: u8,
}

impl PointRd {
    pub fn new1(x: f64) -> PointRd {
        PointRd { coords: [x, 0.0], dim: 1 }
    }

    pub fn new2(x: f64, y: f64) -> PointRd {
        PointRd { coords: [x, y], dim: 2 }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim as usize]
    }

    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    pub fn y(&self) -> f64 {
        self.coords[1]
    }

    pub fn as_complex(&self) -> C64 {
        C64::new(self.coords[0], self.coords[1])
    }

    pub fn from_complex(z: C64, dim: usize) -> PointRd {
        if dim == 1 {
            PointRd::new1(z.re)
        } else {
            PointRd::new2(z.re, z.im)
        }
    }

    pub fn dist(&self, o: &PointRd) -> f64 {
        (self.as_complex() - o.as_complex()).norm()
    }
}

impl TryFrom<Vec<f64>> for PointRd {
    type Error = String;
    fn try_from(v: Vec<f64>) -> std::result::Result<Self, String> {
        if v.iter().any(|c| !c.is_finite()) {
            return Err("point coordinates must be finite".into());
        }
        match v.len() {
            1 => Ok(PointRd::new1(v[0])),
            2 => Ok(PointRd::new2(v[0], v[1])),
            n => Err(format!("points must have 1 or 2 coordinates, got {n}")),
        }
    }
}

impl From<PointRd> for Vec<f64> {
    fn from(p: PointRd) -> Vec<f64> {
        p.coords().to_vec()
    }
}

impl fmt::Display for PointRd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dim == 1 {
            write!(f, "{}", self.coords[0])
        } else {
            write!(f, "({}, {})", self.coords[0], self.coords[1])
        }
    }
}

/// One generator of the IFS.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum ConformalMap {
    /// `x -> a x + b`
    #[serde(rename = "affine1d")]
    Affine1D { a: f64, b: f64 },
    /// `x -> (p x + q) / (r x + s)`
    #[serde(rename = "moebius1d")]
    Moebius1D { p: f64, q: f64, r: f64, s: f64 },
    /// `z -> scale * e^{i rotation} * (conj z if reflect) + translation`
    #[serde(rename = "sim2d")]
    Similarity2D { scale: f64, rotation: f64, reflect: bool, translation: [f64; 2] },
}

impl ConformalMap {
    pub fn dim(&self) -> usize {
        match self {
            ConformalMap::Similarity2D { .. } => 2,
            _ => 1,
        }
    }

    pub fn word_map(&self) -> WordMap {
        match *self {
            ConformalMap::Affine1D { a, b } => WordMap::Line(Mobius::new(a, b, 0.0, 1.0)),
            ConformalMap::Moebius1D { p, q, r, s } => WordMap::Line(Mobius::new(p, q, r, s)),
            ConformalMap::Similarity2D { scale, rotation, reflect, translation } => {
                WordMap::Plane(Similarity {
                    a: C64::from_polar(scale, rotation),
                    b: C64::new(translation[0], translation[1]),
                    conj: reflect,
                })
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match *self {
            ConformalMap::Affine1D { a, b } => {
                if !finite(&[a, b]) || !(a.abs() > 0.0 && a.abs() < 1.0) {
                    return Err(Error::InvalidSystem(format!("affine map needs 0 < |a| < 1, got a = {a}")));
                }
            }
            ConformalMap::Moebius1D { p, q, r, s } => {
                if !finite(&[p, q, r, s]) || p * s - q * r == 0.0 {
                    return Err(Error::InvalidSystem("Möbius map must be finite with ps - qr != 0".into()));
                }
            }
            ConformalMap::Similarity2D { scale, rotation, translation, .. } => {
                if !finite(&[scale, rotation, translation[0], translation[1]]) || !(scale > 0.0 && scale < 1.0) {
                    return Err(Error::InvalidSystem(format!("similarity needs 0 < scale < 1, got {scale}")));
                }
            }
        }
        Ok(())
    }
}

/// OSC witness: an axis-aligned box `[lo.., hi..]` or an explicit convex polygon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OscWitness {
    Box(Vec<f64>),
    Polygon {
        polygon: Vec<[f64; 2]>,
    },
}

/// JSON form of a system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub dim: u8,
    pub maps: Vec<ConformalMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub osc_witness: Option<OscWitness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterate_power: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoxNd {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContractionConstants {
    pub kappa: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    /// `min_i |K_i| / C4`, the stopping-family radius guard.
    pub rho0: f64,
    pub probe_depth: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OscReport {
    pub holds: bool,
    pub max_overlap: f64,
    pub contained: bool,
}

/// A validated conformal IFS together with derived geometry.
#[derive(Clone, Debug)]
pub struct IfsSystem {
    spec: SystemSpec,
    dim: usize,
    gens: Vec<WordMap>,
    domain: BoxNd,
    hull: Shape,
    x0: PointRd,
    kappa: f64,
    iterate_power: u32,
    rate: f64,
}

const MAX_ITERATE_POWER: u32 = 8;

impl IfsSystem {
    pub fn from_spec(spec: SystemSpec) -> Result<IfsSystem> {
        let dim = spec.dim as usize;
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidSystem(format!("dim must be 1 or 2, got {dim}")));
        }
        if spec.maps.len() < 2 {
            return Err(Error::InvalidSystem("at least two maps are required".into()));
        }
        if spec.maps.len() > 255 {
            return Err(Error::InvalidSystem("at most 255 maps are supported".into()));
        }
        for m in &spec.maps {
            m.validate()?;
            if m.dim() != dim {
                return Err(Error::InvalidSystem(format!("map {m:?} does not match dim {dim}")));
            }
        }
        let domain = parse_box(spec.domain.as_deref(), dim, &spec.osc_witness)?;
        let gens: Vec<WordMap> = spec.maps.iter().map(|m| m.word_map()).collect();

        for (j, g) in gens.iter().enumerate() {
            match g {
                WordMap::Line(f) => {
                    let (l, h) = (domain.lo[0], domain.hi[0]);
                    if f.denom(l).signum() != f.denom(h).signum() || f.denom(l) == 0.0 || f.denom(h) == 0.0 {
                        return Err(Error::InvalidSystem(format!("map {} has a pole in the domain", j + 1)));
                    }
                    for x in [f.eval(l), f.eval(h)] {
                        if x < l - 1e-12 || x > h + 1e-12 {
                            return Err(Error::InvalidSystem(format!("map {} leaves the domain", j + 1)));
                        }
                    }
                }
                WordMap::Plane(f) => {
                    for c in box_corners(&domain) {
                        let w = f.eval(c);
                        if w.re < domain.lo[0] - 1e-12
                            || w.re > domain.hi[0] + 1e-12
                            || w.im < domain.lo[1] - 1e-12
                            || w.im > domain.hi[1] + 1e-12
                        {
                            return Err(Error::InvalidSystem(format!("map {} leaves the domain", j + 1)));
                        }
                    }
                }
            }
        }

        let sup_deriv = |w: &WordMap| -> f64 {
            match w {
                WordMap::Line(f) => f.deriv(domain.lo[0]).abs().max(f.deriv(domain.hi[0]).abs()),
                WordMap::Plane(f) => f.scale(),
            }
        };
        let kappa = gens.iter().map(sup_deriv).fold(0.0, f64::max);

        let m = gens.len();
        let mut n0 = None;
        for n in 1..=MAX_ITERATE_POWER {
            if (m as f64).powi(n as i32) > 1e6 {
                break;
            }
            let mut ok = true;
            for_each_word(&gens, n as usize, |_, w| {
                if sup_deriv(w) >= 1.0 {
                    ok = false;
                }
            });
            if ok {
                n0 = Some(n);
                break;
            }
        }
        let iterate_power = match (n0, spec.iterate_power) {
            (None, _) => {
                return Err(Error::InvalidSystem(format!(
                    "no iterate power n0 <= {MAX_ITERATE_POWER} makes all compositions contracting"
                )))
            }
            (Some(n), None) => n,
            (Some(n), Some(given)) => {
                if given < n {
                    return Err(Error::InvalidSystem(format!(
                        "iterate_power {given} is too small; depth-{given} compositions do not contract (minimal n0 = {n})"
                    )));
                }
                given
            }
        };

        let mut sup_n0: f64 = 0.0;
        for_each_word(&gens, iterate_power as usize, |_, w| sup_n0 = sup_n0.max(sup_deriv(w)));
        let rate = if kappa < 1.0 { kappa } else { sup_n0.powf(1.0 / iterate_power as f64) };

        let fixed: Vec<C64> = gens.iter().map(|g| fixed_point(g, &domain)).collect();
        let x0 = PointRd::from_complex(fixed[0], dim);
        let hull = if dim == 1 {
            interval_hull(&gens, &domain)
        } else {
            polygon_hull(&gens, &fixed, &domain)
        };

        Ok(IfsSystem { spec, dim, gens, domain, hull, x0, kappa, iterate_power, rate })
    }

    pub fn from_json(s: &str) -> Result<IfsSystem> {
        let spec: SystemSpec = serde_json::from_str(s).map_err(|e| Error::InvalidSystem(e.to_string()))?;
        IfsSystem::from_spec(spec)
    }

    /// Middle-third Cantor set: `x/3`, `(x+2)/3`.
    pub fn cantor() -> IfsSystem {
        IfsSystem::from_spec(SystemSpec {
            dim: 1,
            maps: vec![
                ConformalMap::Affine1D { a: 1.0 / 3.0, b: 0.0 },
                ConformalMap::Affine1D { a: 1.0 / 3.0, b: 2.0 / 3.0 },
            ],
            domain: Some(vec![0.0, 1.0]),
            osc_witness: Some(OscWitness::Box(vec![0.0, 1.0])),
            iterate_power: Some(1),
        })
        .expect("built-in system")
    }

    /// Four-branch Gauss-type system on [0,1]: `x/4`, `1/(2(1+x))`, `(1+x)/(2+x)`, `2/(2+x)`.
    pub fn gauss4() -> IfsSystem {
        IfsSystem::from_spec(SystemSpec {
            dim: 1,
            maps: vec![
                ConformalMap::Affine1D { a: 0.25, b: 0.0 },
                ConformalMap::Moebius1D { p: 0.0, q: 1.0, r: 2.0, s: 2.0 },
                ConformalMap::Moebius1D { p: 1.0, q: 1.0, r: 1.0, s: 2.0 },
                ConformalMap::Moebius1D { p: 0.0, q: 2.0, r: 1.0, s: 2.0 },
            ],
            domain: Some(vec![0.0, 1.0]),
            osc_witness: Some(OscWitness::Box(vec![0.0, 1.0])),
            iterate_power: None,
        })
        .expect("built-in system")
    }

    /// `{x/2, 1/(1+x)}`: contracting only after two iterations.
    pub fn farey2() -> IfsSystem {
        IfsSystem::from_spec(SystemSpec {
            dim: 1,
            maps: vec![
                ConformalMap::Affine1D { a: 0.5, b: 0.0 },
                ConformalMap::Moebius1D { p: 0.0, q: 1.0, r: 1.0, s: 1.0 },
            ],
            domain: Some(vec![0.0, 1.0]),
            osc_witness: Some(OscWitness::Box(vec![0.0, 1.0])),
            iterate_power: None,
        })
        .expect("built-in system")
    }

    /// Sierpiński gasket on the unit equilateral triangle with vertices (0,0), (1,0), (1/2, √3/2).
    pub fn sierpinski() -> IfsSystem {
        let q = [[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]];
        IfsSystem::from_spec(SystemSpec {
            dim: 2,
            maps: q
                .iter()
                .map(|v| ConformalMap::Similarity2D {
                    scale: 0.5,
                    rotation: 0.0,
                    reflect: false,
                    translation: [v[0] / 2.0, v[1] / 2.0],
                })
                .collect(),
            domain: Some(vec![0.0, 0.0, 1.0, 1.0]),
            osc_witness: Some(OscWitness::Polygon { polygon: q.to_vec() }),
            iterate_power: Some(1),
        })
        .expect("built-in system")
    }

    /// `{z/3 - 2i/3, z/3 + 2i/3}`: a Cantor set on the imaginary axis.
    pub fn two_line_cantor() -> IfsSystem {
        IfsSystem::from_spec(SystemSpec {
            dim: 2,
            maps: vec![
                ConformalMap::Similarity2D { scale: 1.0 / 3.0, rotation: 0.0, reflect: false, translation: [0.0, -2.0 / 3.0] },
                ConformalMap::Similarity2D { scale: 1.0 / 3.0, rotation: 0.0, reflect: false, translation: [0.0, 2.0 / 3.0] },
            ],
            domain: Some(vec![-1.0, -1.0, 1.0, 1.0]),
            osc_witness: Some(OscWitness::Box(vec![-0.5, -1.0, 0.5, 1.0])),
            iterate_power: Some(1),
        })
        .expect("built-in system")
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Alphabet size m.
    pub fn m(&self) -> usize {
        self.gens.len()
    }

    pub fn generators(&self) -> &[WordMap] {
        &self.gens
    }

    pub fn generator(&self, j: u8) -> &WordMap {
        &self.gens[j as usize]
    }

    pub fn domain(&self) -> BoxNd {
        self.domain
    }

    /// Convex set containing K, invariant under every generator.
    pub fn hull(&self) -> &Shape {
        &self.hull
    }

    pub fn attractor_box(&self) -> BoxNd {
        let mut b = BoxNd { lo: [f64::INFINITY; 2], hi: [f64::NEG_INFINITY; 2] };
        for v in self.hull.vertices() {
            b.lo[0] = b.lo[0].min(v.re);
            b.hi[0] = b.hi[0].max(v.re);
            b.lo[1] = b.lo[1].min(v.im);
            b.hi[1] = b.hi[1].max(v.im);
        }
        b
    }

    /// Fixed point of the first generator, used as base point of the coding map.
    pub fn x0(&self) -> PointRd {
        self.x0
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn iterate_power(&self) -> u32 {
        self.iterate_power
    }

    /// Per-symbol contraction rate: κ, or `(sup |φ_W'|)^{1/n0}` over words of length n0 when κ = 1.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Number of trailing symbols after which `φ_W(x0)` is within `tol` of π of any continuation.
    pub fn tail_depth(&self, tol: f64) -> usize {
        let d = (tol / self.diameter().max(tol)).ln() / self.rate.ln();
        d.ceil() as usize + self.iterate_power as usize
    }

    /// Upper bound on the diameter of K.
    pub fn diameter(&self) -> f64 {
        self.hull.diameter()
    }

    pub fn identity(&self) -> WordMap {
        self.gens[0].identity_like()
    }

    pub fn word_map(&self, w: &[u8]) -> WordMap {
        let mut f = self.identity();
        for &s in w {
            f = f.compose(&self.gens[s as usize]);
        }
        f
    }

    pub fn apply_word(&self, w: &FiniteWord, x: PointRd) -> Result<PointRd> {
        if w.iter().any(|&s| s as usize >= self.m()) {
            return Err(Error::InvalidArgument("word symbol exceeds alphabet".into()));
        }
        let z = x.as_complex();
        let d = &self.domain;
        let tol = 1e-12;
        if z.re < d.lo[0] - tol || z.re > d.hi[0] + tol || (self.dim == 2 && (z.im < d.lo[1] - tol || z.im > d.hi[1] + tol)) {
            return Err(Error::OutsideDomain(format!("{x}")));
        }
        let mut z = z;
        for &s in w.iter().rev() {
            z = self.gens[s as usize].eval(z);
        }
        Ok(PointRd::from_complex(z, self.dim))
    }

    /// Image of the hull under `f`, an enclosure of `K_I` when `f = φ_I`.
    #[inline]
    pub fn shape_of(&self, f: &WordMap) -> Shape {
        match f {
            WordMap::Line(g) => {
                let (a, b) = (g.eval(self.hull.v[0].re), g.eval(self.hull.v[1].re));
                if a <= b {
                    Shape::segment(a, b)
                } else {
                    Shape::segment(b, a)
                }
            }
            WordMap::Plane(g) => {
                let mut s = self.hull;
                for v in s.v[..s.n].iter_mut() {
                    *v = g.eval(*v);
                }
                if g.conj {
                    // reflection reverses orientation
                    s.v[..s.n].reverse();
                }
                s
            }
        }
    }

    /// Bracket `[lo, hi]` for the diameter of `K_I` where `f = φ_I`.
    pub fn diameter_bracket(&self, f: &WordMap) -> (f64, f64) {
        match f {
            WordMap::Line(g) => {
                let d = g.diff(self.hull.v[1].re, self.hull.v[0].re).abs();
                (d, d)
            }
            WordMap::Plane(g) => {
                let s = g.scale();
                (s * self.fixed_point_spread(), s * self.hull.diameter())
            }
        }
    }

    fn fixed_point_spread(&self) -> f64 {
        let fp: Vec<C64> = self.gens.iter().map(|g| fixed_point(g, &self.domain)).collect();
        let mut d: f64 = 0.0;
        for i in 0..fp.len() {
            for j in i + 1..fp.len() {
                d = d.max((fp[i] - fp[j]).norm());
            }
        }
        d
    }

    fn sup_inf_deriv(&self, f: &WordMap) -> (f64, f64) {
        match f {
            WordMap::Line(g) => {
                let a = g.deriv(self.domain.lo[0]).abs();
                let b = g.deriv(self.domain.hi[0]).abs();
                (a.max(b), a.min(b))
            }
            WordMap::Plane(g) => (g.scale(), g.scale()),
        }
    }

    /// κ exactly; C1..C4 as the largest ratios observed over all words up to `probe_depth`.
    pub fn contraction_constants(&self, probe_depth: usize) -> Result<ContractionConstants> {
        if probe_depth == 0 {
            return Err(Error::InvalidArgument("probe_depth must be >= 1".into()));
        }
        let m = self.m();
        if (m as f64).powi(probe_depth as i32) > 2e6 {
            return Err(Error::InvalidArgument("probe_depth too large for exhaustive enumeration".into()));
        }
        let (mut c1, mut c2, mut c3) = (1.0f64, 1.0f64, 1.0f64);
        // diameters by level, words indexed in base m
        let mut diam: Vec<Vec<f64>> = vec![vec![self.diameter_bracket(&self.identity()).1]];
        let probe: Vec<f64> = match &self.hull {
            h if self.dim == 1 => (0..=8).map(|i| h.v[0].re + (h.v[1].re - h.v[0].re) * i as f64 / 8.0).collect(),
            _ => vec![],
        };
        for depth in 1..=probe_depth {
            let mut level = vec![0.0; m.pow(depth as u32)];
            for_each_word(&self.gens, depth, |idx, f| {
                let (sup, inf) = self.sup_inf_deriv(f);
                c1 = c1.max(sup / inf);
                let (_, dh) = self.diameter_bracket(f);
                level[idx] = dh;
                c3 = c3.max(dh / sup).max(sup / dh);
                if let WordMap::Line(g) = f {
                    for i in 0..probe.len() {
                        for j in i + 1..probe.len() {
                            let ratio = g.diff(probe[j], probe[i]).abs() / (sup * (probe[j] - probe[i]));
                            c2 = c2.max(ratio).max(1.0 / ratio);
                        }
                    }
                }
            });
            diam.push(level);
        }
        let mut c4 = 1.0f64;
        for li in 0..=probe_depth {
            for lj in 0..=(probe_depth - li) {
                let stride = m.pow(lj as u32);
                for (i, di) in diam[li].iter().enumerate() {
                    for (j, dj) in diam[lj].iter().enumerate() {
                        let dij = diam[li + lj][i * stride + j];
                        let r = dij * diam[0][0] / (di * dj);
                        c4 = c4.max(r).max(1.0 / r);
                    }
                }
            }
        }
        let min_ki = diam[1].iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(ContractionConstants { kappa: self.kappa, c1, c2, c3, c4, rho0: min_ki / c4, probe_depth })
    }

    /// The stopping family `{I : |K_I| < ρ <= |K_{I⁻}|}` using diameter upper bounds.
    pub fn lambda_rho(&self, rho: f64) -> Result<Vec<FiniteWord>> {
        if !(rho > 0.0) {
            return Err(Error::InvalidArgument("rho must be positive".into()));
        }
        let root = self.diameter_bracket(&self.identity()).1;
        if root < rho {
            return Ok(vec![FiniteWord::empty()]);
        }
        let mut out = Vec::new();
        let mut stack: Vec<(Vec<u8>, WordMap)> = vec![(Vec::new(), self.identity())];
        while let Some((w, f)) = stack.pop() {
            for j in (0..self.m() as u8).rev() {
                let g = f.compose(&self.gens[j as usize]);
                let mut wj = w.clone();
                wj.push(j);
                if self.diameter_bracket(&g).1 < rho {
                    out.push(FiniteWord::from_symbols(wj));
                } else {
                    if wj.len() >= 64 {
                        return Err(Error::InvalidArgument("rho too small: stopping depth exceeds 64".into()));
                    }
                    stack.push((wj, g));
                }
            }
            if out.len() > 10_000_000 {
                return Err(Error::InvalidArgument("rho too small: stopping family too large".into()));
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn check_osc(&self) -> Result<OscReport> {
        let witness = self.spec.osc_witness.as_ref().ok_or_else(|| Error::InvalidArgument("no OSC witness".into()))?;
        let tol = 1e-12;
        let v: Vec<C64> = match witness {
            OscWitness::Box(b) => {
                let bx = box_from_vec(b, self.dim)?;
                if self.dim == 1 {
                    vec![C64::new(bx.lo[0], 0.0), C64::new(bx.hi[0], 0.0)]
                } else {
                    box_corners(&bx).to_vec()
                }
            }
            OscWitness::Polygon { polygon } => convex_hull(&polygon.iter().map(|p| C64::new(p[0], p[1])).collect::<Vec<_>>()),
        };
        let vshape = Shape::from_vertices(&v);
        let images: Vec<Vec<C64>> = self
            .gens
            .iter()
            .map(|g| {
                let mut im: Vec<C64> = v.iter().map(|&z| g.eval(z)).collect();
                if let WordMap::Plane(s) = g {
                    if s.conj {
                        im.reverse();
                    }
                }
                im
            })
            .collect();
        let contained = images.iter().all(|im| im.iter().all(|&z| vshape.contains(z, tol)));
        let mut max_overlap: f64 = 0.0;
        for i in 0..images.len() {
            for j in i + 1..images.len() {
                let ov = if self.dim == 1 {
                    let (a0, a1) = minmax(images[i][0].re, images[i][1].re);
                    let (b0, b1) = minmax(images[j][0].re, images[j][1].re);
                    (a1.min(b1) - a0.max(b0)).max(0.0)
                } else {
                    convex_intersection_area(&images[i], &images[j])
                };
                max_overlap = max_overlap.max(ov);
            }
        }
        Ok(OscReport { holds: contained && max_overlap < 1e-12, max_overlap, contained })
    }
}

fn minmax(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn box_from_vec(v: &[f64], dim: usize) -> Result<BoxNd> {
    if v.len() != 2 * dim || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidSystem(format!("box needs {} finite numbers [lo.., hi..]", 2 * dim)));
    }
    let b = if dim == 1 {
        BoxNd { lo: [v[0], 0.0], hi: [v[1], 0.0] }
    } else {
        BoxNd { lo: [v[0], v[1]], hi: [v[2], v[3]] }
    };
    if (0..dim).any(|i| b.lo[i] >= b.hi[i]) {
        return Err(Error::InvalidSystem("box must have lo < hi".into()));
    }
    Ok(b)
}

fn parse_box(domain: Option<&[f64]>, dim: usize, witness: &Option<OscWitness>) -> Result<BoxNd> {
    match (domain, witness) {
        (Some(d), _) => box_from_vec(d, dim),
        (None, Some(OscWitness::Box(b))) => box_from_vec(b, dim),
        _ => Ok(if dim == 1 {
            BoxNd { lo: [0.0, 0.0], hi: [1.0, 0.0] }
        } else {
            BoxNd { lo: [0.0, 0.0], hi: [1.0, 1.0] }
        }),
    }
}

fn box_corners(b: &BoxNd) -> [C64; 4] {
    [
        C64::new(b.lo[0], b.lo[1]),
        C64::new(b.hi[0], b.lo[1]),
        C64::new(b.hi[0], b.hi[1]),
        C64::new(b.lo[0], b.hi[1]),
    ]
}

fn fixed_point(g: &WordMap, domain: &BoxNd) -> C64 {
    match g {
        WordMap::Plane(s) if !s.conj => s.b / (C64::new(1.0, 0.0) - s.a),
        _ => {
            let mut z = C64::new(0.5 * (domain.lo[0] + domain.hi[0]), 0.5 * (domain.lo[1] + domain.hi[1]));
            if matches!(g, WordMap::Line(_)) {
                z.im = 0.0;
            }
            for _ in 0..5000 {
                let next = g.eval(z);
                if (next - z).norm() == 0.0 {
                    break;
                }
                z = next;
            }
            z
        }
    }
}

fn interval_hull(gens: &[WordMap], domain: &BoxNd) -> Shape {
    let (mut lo, mut hi) = (domain.lo[0], domain.hi[0]);
    for _ in 0..10_000 {
        let mut nlo = f64::INFINITY;
        let mut nhi = f64::NEG_INFINITY;
        for g in gens {
            if let WordMap::Line(f) = g {
                for x in [f.eval(lo), f.eval(hi)] {
                    nlo = nlo.min(x);
                    nhi = nhi.max(x);
                }
            }
        }
        // keep the enclosure nested so it stays a superset of K
        let nlo = nlo.max(lo);
        let nhi = nhi.min(hi);
        if nlo == lo && nhi == hi {
            break;
        }
        lo = nlo;
        hi = nhi;
    }
    Shape::segment(lo, hi)
}

fn polygon_hull(gens: &[WordMap], fixed: &[C64], domain: &BoxNd) -> Shape {
    let cand = convex_hull(fixed);
    if cand.len() <= crate::geometry::MAX_VERTICES {
        let s = Shape::from_vertices(&cand);
        let invariant = gens.iter().all(|g| cand.iter().all(|&v| s.contains(g.eval(v), 1e-12)));
        if invariant {
            return s;
        }
    }
    Shape::from_vertices(&box_corners(domain))
}

/// Visits every word of length `depth` with its base-m index and map, in index order.
pub fn for_each_word<F: FnMut(usize, &WordMap)>(gens: &[WordMap], depth: usize, mut f: F) {
    fn rec<F: FnMut(usize, &WordMap)>(gens: &[WordMap], depth: usize, idx: usize, map: WordMap, f: &mut F) {
        if depth == 0 {
            f(idx, &map);
            return;
        }
        for (j, g) in gens.iter().enumerate() {
            rec(gens, depth - 1, idx * gens.len() + j, map.compose(g), f);
        }
    }
    let id = gens[0].identity_like();
    rec(gens, depth, 0, id, &mut f);
}
