//! The induced map T, symbolic-first orbits, μ-sampling and correlations.

use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::GaussLegendre;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Mobius, WordMap};
use crate::gibbs::{ChainState, DensityKind, GibbsBackend};
use crate::ifs::{IfsSystem, PointRd};
use crate::symbolic::{CodedOrbit, FiniteWord, SymbolSource, SymbolStream};

/// Deterministic generator for sample `stream` under a master seed.
pub fn sample_rng(master: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

/// Continues the Gibbs chain symbol by symbol.
#[derive(Clone)]
pub struct ChainSource {
    backend: Arc<GibbsBackend>,
    state: ChainState,
    rng: ChaCha8Rng,
}

impl SymbolSource for ChainSource {
    fn next_symbol(&mut self) -> u8 {
        let u: f64 = self.rng.gen();
        self.state.draw(&self.backend, u)
    }
    fn clone_box(&self) -> Box<dyn SymbolSource> {
        Box::new(self.clone())
    }
}

/// Splittable μ-sampler: stream `i` depends only on `(seed, i)`.
#[derive(Clone)]
pub struct MuSampler {
    backend: Arc<GibbsBackend>,
    seed: u64,
    counter: u64,
}

impl MuSampler {
    pub fn new(backend: Arc<GibbsBackend>, seed: u64) -> MuSampler {
        MuSampler { backend, seed, counter: 0 }
    }

    pub fn with_counter(mut self, counter: u64) -> MuSampler {
        self.counter = counter;
        self
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Next μ-distributed infinite word, with `prefix_depth` symbols drawn eagerly.
    pub fn sample_mu(&mut self, prefix_depth: usize) -> SymbolStream {
        let mut src = ChainSource {
            backend: self.backend.clone(),
            state: ChainState::new(&self.backend),
            rng: sample_rng(self.seed, self.counter),
        };
        self.counter += 1;
        let prefix: Vec<u8> = (0..prefix_depth).map(|_| src.next_symbol()).collect();
        SymbolStream::random(self.backend.m(), &FiniteWord::from_symbols(prefix), Box::new(src)).expect("sampled symbols are in range")
    }
}

/// The first `len` symbols of the stream [`MuSampler`] would produce for sample `id`.
pub fn sample_word(backend: &GibbsBackend, seed: u64, id: u64, len: usize) -> Vec<u8> {
    let mut rng = sample_rng(seed, id);
    let mut st = ChainState::new(backend);
    (0..len).map(|_| st.draw(backend, rng.gen())).collect()
}

/// `T(x) = φ_i^{-1}(x)` for the lowest `i` whose closed hull image contains `x`.
pub fn t_apply(system: &IfsSystem, x: &PointRd, tol: f64) -> Result<PointRd> {
    if x.dim() != system.dim() {
        return Err(Error::InvalidArgument(format!("point has dim {}, system has dim {}", x.dim(), system.dim())));
    }
    let z = x.as_complex();
    for g in system.generators() {
        if system.shape_of(g).contains(z, tol) {
            let w = match g {
                WordMap::Line(f) => num_complex::Complex64::new(f.inverse().eval(z.re), 0.0),
                WordMap::Plane(f) => f.invert_point(z),
            };
            return Ok(PointRd::from_complex(w, system.dim()));
        }
    }
    Err(Error::OutsideDomain(format!("{x} is not within {tol:e} of any first-level cylinder")))
}

/// `(π(σ^n ω))_{n = 0..=n_max}` by shifting the word and projecting.
pub fn orbit_symbolic(system: &IfsSystem, stream: &mut SymbolStream, n_max: usize, tol: f64) -> Result<Vec<PointRd>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    if stream.m() != system.m() {
        return Err(Error::AlphabetMismatch(stream.m(), system.m()));
    }
    let tail = system.tail_depth(tol.min(1e-17)) + 1;
    let orbit = CodedOrbit::new(system, stream.take(n_max + tail + 1));
    Ok((0..=n_max).map(|n| orbit.point(n)).collect())
}

/// `|π(σ^a ω) − π(σ^b ω)|` evaluated relative to the common prefix of the two
/// shifts, with an absolute error bound.
pub fn orbit_distance(system: &IfsSystem, orbit: &CodedOrbit, a: usize, b: usize) -> (f64, f64) {
    let l = orbit.lcp(a, b);
    let (u, v) = (orbit.z(a + l), orbit.z(b + l));
    let capped = l == orbit.valid_len().saturating_sub(a.max(b));
    let pre = system.word_map(&orbit.symbols()[a..a + l]);
    let (d, scale) = match pre {
        WordMap::Line(g) => (g.diff(u.re, v.re).abs(), g.deriv(u.re).abs()),
        WordMap::Plane(g) => (g.scale() * (u - v).norm(), g.scale()),
    };
    let mut err = 1e-14 * scale + 4.0 * f64::EPSILON * d;
    if capped {
        err = err.max(scale * system.diameter());
    }
    (d, err)
}

/// Indicator of a finite union of cylinders, reduced to disjoint cylinders.
fn reduce_union(words: &[FiniteWord]) -> Vec<Vec<u8>> {
    let mut ws: Vec<Vec<u8>> = words.iter().map(|w| w.as_slice().to_vec()).collect();
    ws.sort_by_key(|w| w.len());
    let mut out: Vec<Vec<u8>> = Vec::new();
    for w in ws {
        if !out.iter().any(|p| w.starts_with(p)) {
            out.push(w);
        }
    }
    out
}

/// `μ([I] ∩ σ^{-n}[J])`, summing over the gap words when `n > |I|`.
pub fn intersection_measure(backend: &GibbsBackend, i: &[u8], j: &[u8], n: usize) -> Result<f64> {
    if n < i.len() {
        let overlap = i.len() - n;
        let k = overlap.min(j.len());
        if i[n..n + k] != j[..k] {
            return Ok(0.0);
        }
        let mut w = i.to_vec();
        w.extend_from_slice(&j[k..]);
        return Ok(backend.cylinder_measure(&w));
    }
    if let GibbsBackend::Bernoulli { .. } = backend {
        return Ok(backend.cylinder_measure(i) * backend.cylinder_measure(j));
    }
    let gap = n - i.len();
    let m = backend.m();
    let count = (m as f64).powi(gap as i32);
    if let (GibbsBackend::Density { kind, maps, lo, hi }, true) = (backend, gap > 6) {
        return Ok(transfer_intersection(*kind, maps, *lo, *hi, i, j, gap));
    }
    if count > (1u64 << 24) as f64 {
        return Err(Error::InvalidArgument(format!("gap of {gap} symbols is too long for exact enumeration")));
    }
    let mut total = 0.0;
    let mut w = vec![0u8; i.len() + gap + j.len()];
    w[..i.len()].copy_from_slice(i);
    w[i.len() + gap..].copy_from_slice(j);
    for idx in 0..count as usize {
        let mut t = idx;
        for p in (0..gap).rev() {
            w[i.len() + p] = (t % m) as u8;
            t /= m;
        }
        total += backend.cylinder_measure(&w);
    }
    Ok(total)
}

const CHEB_NODES: usize = 48;

/// Barycentric interpolant through values at Chebyshev points of the second kind on `[lo, hi]`.
struct Cheb {
    nodes: Vec<f64>,
    vals: Vec<f64>,
}

impl Cheb {
    fn nodes(lo: f64, hi: f64) -> Vec<f64> {
        let d = CHEB_NODES - 1;
        (0..=d).map(|k| lo + 0.5 * (hi - lo) * (1.0 - (std::f64::consts::PI * k as f64 / d as f64).cos())).collect()
    }

    fn eval(&self, x: f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        let last = self.nodes.len() - 1;
        for (k, (&xk, &fk)) in self.nodes.iter().zip(&self.vals).enumerate() {
            let dx = x - xk;
            if dx == 0.0 {
                return fk;
            }
            let mut w = if k % 2 == 0 { 1.0 } else { -1.0 } / dx;
            if k == 0 || k == last {
                w *= 0.5;
            }
            num += w * fk;
            den += w;
        }
        num / den
    }
}

/// `μ([I] ∩ σ^{-(|I|+gap)}[J])` for a density backend: push the density of
/// `μ|[I]` forward with the transfer operator and integrate it over `K_J`.
/// Every iterate is analytic on a neighbourhood of `K`, so the Chebyshev
/// representation is accurate to rounding.
fn transfer_intersection(kind: DensityKind, maps: &[Mobius], lo: f64, hi: f64, i: &[u8], j: &[u8], gap: usize) -> f64 {
    let rho = |x: f64| match kind {
        DensityKind::Gauss => 1.0 / ((1.0 + x) * std::f64::consts::LN_2),
        DensityKind::Lebesgue => 1.0 / (hi - lo),
    };
    let word = |w: &[u8]| w.iter().fold(Mobius::IDENTITY, |g, &s| g.compose(&maps[s as usize]));
    let gi = word(i);
    let nodes = Cheb::nodes(lo, hi);
    let vals = nodes.iter().map(|&y| rho(gi.eval(y)) * gi.deriv(y).abs()).collect();
    let mut f = Cheb { nodes, vals };
    for _ in 0..gap {
        let vals = f
            .nodes
            .iter()
            .map(|&y| maps.iter().map(|g| f.eval(g.eval(y)) * g.deriv(y).abs()).sum())
            .collect();
        f.vals = vals;
    }
    let gj = word(j);
    let gl = GaussLegendre::new(NonZeroUsize::new(CHEB_NODES).unwrap());
    gl.integrate(lo, hi, |u| f.eval(gj.eval(u)) * gj.deriv(u).abs())
}

/// `∫ f1 · f2∘T^n dμ − ∫ f1 dμ ∫ f2 dμ` for indicators of cylinder unions.
pub fn correlation(backend: &GibbsBackend, f1: &[FiniteWord], f2: &[FiniteWord], n: usize) -> Result<f64> {
    for w in f1.iter().chain(f2) {
        w.validate(backend.m())?;
    }
    let (a, b) = (reduce_union(f1), reduce_union(f2));
    let ma: f64 = a.iter().map(|w| backend.cylinder_measure(w)).sum();
    let mb: f64 = b.iter().map(|w| backend.cylinder_measure(w)).sum();
    let mut joint = 0.0;
    for i in &a {
        for j in &b {
            joint += intersection_measure(backend, i, j, n)?;
        }
    }
    Ok(joint - ma * mb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str, m: usize) -> FiniteWord {
        FiniteWord::parse(s, m).unwrap()
    }

    #[test]
    fn t_apply_examples() {
        let c = IfsSystem::cantor();
        assert!((t_apply(&c, &PointRd::new1(0.25), 1e-12).unwrap().x() - 0.75).abs() < 1e-15);
        assert_eq!(t_apply(&c, &PointRd::new1(0.0), 1e-12).unwrap().x(), 0.0);
        assert!(t_apply(&c, &PointRd::new1(0.5), 1e-12).is_err());
        let g = IfsSystem::gauss4();
        assert!((t_apply(&g, &PointRd::new1(0.3), 1e-12).unwrap().x() - 2.0 / 3.0).abs() < 1e-14);
        let s = IfsSystem::sierpinski();
        let y = t_apply(&s, &PointRd::new2(0.75, 0.0), 1e-12).unwrap();
        assert!((y.x() - 0.5).abs() < 1e-15 && y.y().abs() < 1e-15);
    }

    #[test]
    fn orbit_examples() {
        let c = IfsSystem::cantor();
        let mut s = SymbolStream::parse(2, "", "12").unwrap();
        let o = orbit_symbolic(&c, &mut s, 3, 1e-14).unwrap();
        let xs: Vec<f64> = o.iter().map(|p| p.x()).collect();
        for (a, b) in xs.iter().zip([0.25, 0.75, 0.25, 0.75]) {
            assert!((a - b).abs() < 1e-14);
        }
        let mut s = SymbolStream::parse(2, "2", "1").unwrap();
        let o = orbit_symbolic(&c, &mut s, 2, 1e-14).unwrap();
        assert!((o[0].x() - 2.0 / 3.0).abs() < 1e-14 && o[1].x().abs() < 1e-14 && o[2].x().abs() < 1e-14);
        let g = IfsSystem::gauss4();
        let mut s = SymbolStream::parse(4, "", "1").unwrap();
        assert!(orbit_symbolic(&g, &mut s, 5, 1e-14).unwrap().iter().all(|p| p.x().abs() < 1e-14));
    }

    #[test]
    fn long_orbit_has_no_drift() {
        // (12)^∞ stays on the period-2 orbit for many steps
        let c = IfsSystem::cantor();
        let orbit = CodedOrbit::periodic(&c, &[], &[0, 1], 100_000);
        for n in [0, 1, 99_998, 99_999] {
            let expect = if n % 2 == 0 { 0.25 } else { 0.75 };
            assert!((orbit.z(n).re - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn sampler_reproducible_and_fair() {
        let b = Arc::new(GibbsBackend::bernoulli(vec![0.5, 0.5]).unwrap());
        let mut s1 = MuSampler::new(b.clone(), 42);
        let mut s2 = MuSampler::new(b.clone(), 42);
        let mut a = s1.sample_mu(10);
        let mut c = s2.sample_mu(10);
        assert_eq!(a.take(500), c.take(500));
        let word = sample_word(&b, 42, 0, 500);
        assert_eq!(a.take(500), word);
        let big = sample_word(&b, 7, 3, 100_000);
        let f = big.iter().filter(|&&s| s == 0).count() as f64 / 1e5;
        assert!((0.497..=0.503).contains(&f), "{f}");
    }

    #[test]
    fn sampler_depth_two_frequencies() {
        let b = GibbsBackend::bernoulli(vec![0.3, 0.7]).unwrap();
        let n = 20_000;
        let mut counts = [0usize; 4];
        for id in 0..n {
            let w = sample_word(&b, 1, id, 2);
            counts[(w[0] * 2 + w[1]) as usize] += 1;
        }
        for (c, p) in counts.iter().zip([0.09, 0.21, 0.21, 0.49]) {
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            assert!((*c as f64 / n as f64 - p).abs() < 3.0 * sd, "{c} {p}");
        }
    }

    #[test]
    fn gauss_sampler_matches_cylinders() {
        let g = IfsSystem::gauss4();
        let b = GibbsBackend::density(&g, DensityKind::Gauss).unwrap();
        let n = 20_000;
        let mut counts = [0usize; 4];
        for id in 0..n {
            counts[sample_word(&b, 9, id, 1)[0] as usize] += 1;
        }
        for j in 0..4u8 {
            let p = b.cylinder_measure(&[j]);
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            assert!((counts[j as usize] as f64 / n as f64 - p).abs() < 4.0 * sd);
        }
    }

    #[test]
    fn correlation_examples() {
        let b = GibbsBackend::bernoulli(vec![0.3, 0.7]).unwrap();
        assert_eq!(correlation(&b, &[w("1", 2)], &[w("2", 2)], 5).unwrap(), 0.0);
        let v = correlation(&b, &[w("1", 2)], &[w("1", 2)], 0).unwrap();
        assert!((v - (0.3 - 0.09)).abs() < 1e-15);
        let g = IfsSystem::gauss4();
        let gb = GibbsBackend::density(&g, DensityKind::Gauss).unwrap();
        let v0 = correlation(&gb, &[w("1", 4)], &[w("1", 4)], 0).unwrap();
        let m1 = gb.cylinder_measure(&[0]);
        assert!((v0 - (m1 - m1 * m1)).abs() < 1e-14);
        let seq: Vec<f64> = (1..=6).map(|n| correlation(&gb, &[w("1", 4)], &[w("1", 4)], n).unwrap().abs()).collect();
        assert!(seq.windows(2).all(|p| p[1] < p[0]), "{seq:?}");
    }

    #[test]
    fn intersection_overlap_rule() {
        let b = GibbsBackend::bernoulli(vec![0.3, 0.7]).unwrap();
        // [12] ∩ σ^{-1}[21] = [121]
        assert!((intersection_measure(&b, &[0, 1], &[1, 0], 1).unwrap() - 0.3 * 0.7 * 0.3).abs() < 1e-16);
        assert_eq!(intersection_measure(&b, &[0, 1], &[0, 0], 1).unwrap(), 0.0);
        assert!((intersection_measure(&b, &[0, 1, 1], &[1], 1).unwrap() - 0.3 * 0.49).abs() < 1e-16);
    }

    #[test]
    fn transfer_operator_matches_enumeration() {
        let s = IfsSystem::gauss4();
        let b = GibbsBackend::density(&s, DensityKind::Gauss).unwrap();
        let GibbsBackend::Density { kind, maps, lo, hi } = &b else { unreachable!() };
        for (i, j, gap) in [(&[0u8][..], &[0u8][..], 0usize), (&[1, 2], &[3], 3), (&[2], &[0, 1], 7)] {
            let mut total = 0.0;
            for idx in 0..4usize.pow(gap as u32) {
                let mut word = i.to_vec();
                word.extend((0..gap).rev().map(|p| ((idx / 4usize.pow(p as u32)) % 4) as u8));
                word.extend_from_slice(j);
                total += b.cylinder_measure(&word);
            }
            let t = transfer_intersection(*kind, maps, *lo, *hi, i, j, gap);
            assert!((t - total).abs() < 1e-13 * total.max(1e-3), "{t} vs {total}");
        }
        let far = intersection_measure(&b, &[0], &[0], 40).unwrap();
        let mu0 = b.cylinder_measure(&[0]);
        assert!((far - mu0 * mu0).abs() < 1e-14);
    }

    #[test]
    fn orbit_distance_relative() {
        let c = IfsSystem::cantor();
        let mut word = vec![0u8; 30];
        word.extend([1, 0, 1, 1]);
        word.extend(vec![0u8; 30]);
        word.push(1);
        word.extend(vec![0u8; 60]);
        let o = CodedOrbit::new(&c, word);
        let (d, err) = orbit_distance(&c, &o, 0, 1);
        // both shifts start with 29 zeros, then differ: distance ≈ 3^{-29} · (2/3 ± …)
        assert!(d > 3f64.powi(-31) && d < 3f64.powi(-29));
        assert!(err < 1e-3 * d);
    }

    #[test]
    fn t_invariance_of_gauss_measure() {
        let g = IfsSystem::gauss4();
        let b = GibbsBackend::density(&g, DensityKind::Gauss).unwrap();
        assert!(b.shift_invariance_defect(5) < 1e-10);
    }
}
