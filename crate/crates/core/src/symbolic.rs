//! Finite and infinite words over `{1, …, m}`, the shift, the symbolic metric
//! and the coding map π.
//!
//! Symbols are stored 0-based; parsing and display use the 1-based alphabet.

use std::collections::VecDeque;
use std::fmt;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::geometry::WordMap;
use crate::ifs::{IfsSystem, PointRd};

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiniteWord(Vec<u8>);

impl FiniteWord {
    pub fn empty() -> FiniteWord {
        FiniteWord(Vec::new())
    }

    /// From 0-based symbols.
    pub fn from_symbols(s: Vec<u8>) -> FiniteWord {
        FiniteWord(s)
    }

    /// From 1-based symbols, checked against the alphabet size.
    pub fn from_one_based(s: &[usize], m: usize) -> Result<FiniteWord> {
        let mut v = Vec::with_capacity(s.len());
        for &x in s {
            if x == 0 || x > m {
                return Err(Error::SymbolOutOfRange { symbol: x, m });
            }
            v.push((x - 1) as u8);
        }
        Ok(FiniteWord(v))
    }

    /// Parses a string of 1-based digits such as `"1221"`.
    pub fn parse(s: &str, m: usize) -> Result<FiniteWord> {
        let digits: Vec<usize> = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(|| Error::InvalidArgument(format!("bad symbol '{c}'"))))
            .collect::<Result<_>>()?;
        FiniteWord::from_one_based(&digits, m)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, u8> {
        self.0.iter()
    }

    pub fn concat(&self, other: &FiniteWord) -> FiniteWord {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        FiniteWord(v)
    }

    pub fn push(&mut self, s: u8) {
        self.0.push(s);
    }

    pub fn is_prefix_of(&self, other: &FiniteWord) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Index of the word read as a base-m number, first symbol most significant.
    pub fn index(&self, m: usize) -> usize {
        self.0.iter().fold(0, |acc, &s| acc * m + s as usize)
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        match self.0.iter().find(|&&s| s as usize >= m) {
            Some(&s) => Err(Error::SymbolOutOfRange { symbol: s as usize + 1, m }),
            None => Ok(()),
        }
    }
}

impl fmt::Display for FiniteWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "∅");
        }
        for &s in &self.0 {
            if s < 9 {
                write!(f, "{}", s + 1)?;
            } else {
                write!(f, "[{}]", s as usize + 1)?;
            }
        }
        Ok(())
    }
}

/// An endless supply of symbols, e.g. a μ-sampler.
pub trait SymbolSource: Send {
    fn next_symbol(&mut self) -> u8;
    fn clone_box(&self) -> Box<dyn SymbolSource>;
}

pub enum Tail {
    Periodic { period: Vec<u8>, offset: usize },
    Random(Box<dyn SymbolSource>),
}

impl Clone for Tail {
    fn clone(&self) -> Tail {
        match self {
            Tail::Periodic { period, offset } => Tail::Periodic { period: period.clone(), offset: *offset },
            Tail::Random(s) => Tail::Random(s.clone_box()),
        }
    }
}

impl fmt::Debug for Tail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tail::Periodic { .. } => write!(f, "({})^∞", FiniteWord(self.period().unwrap())),
            Tail::Random(_) => write!(f, "<random>"),
        }
    }
}

impl Tail {
    /// The period as currently rotated, or `None` for a random tail.
    pub fn period(&self) -> Option<Vec<u8>> {
        match self {
            Tail::Periodic { period, offset } => {
                let mut p = period[*offset..].to_vec();
                p.extend_from_slice(&period[..*offset]);
                Some(p)
            }
            Tail::Random(_) => None,
        }
    }
}

/// An infinite word: explicit prefix followed by a periodic or random tail.
#[derive(Clone, Debug)]
pub struct SymbolStream {
    m: usize,
    prefix: VecDeque<u8>,
    tail: Tail,
}

impl SymbolStream {
    pub fn periodic(m: usize, prefix: &FiniteWord, period: &FiniteWord) -> Result<SymbolStream> {
        prefix.validate(m)?;
        period.validate(m)?;
        if period.is_empty() {
            return Err(Error::InvalidArgument("period must be nonempty".into()));
        }
        Ok(SymbolStream {
            m,
            prefix: prefix.as_slice().iter().copied().collect(),
            tail: Tail::Periodic { period: period.as_slice().to_vec(), offset: 0 },
        })
    }

    /// Convenience constructor from 1-based digit strings, e.g. `("2", "1")` for 21^∞.
    pub fn parse(m: usize, prefix: &str, period: &str) -> Result<SymbolStream> {
        SymbolStream::periodic(m, &FiniteWord::parse(prefix, m)?, &FiniteWord::parse(period, m)?)
    }

    pub fn random(m: usize, prefix: &FiniteWord, source: Box<dyn SymbolSource>) -> Result<SymbolStream> {
        prefix.validate(m)?;
        Ok(SymbolStream { m, prefix: prefix.as_slice().iter().copied().collect(), tail: Tail::Random(source) })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn prefix(&self) -> FiniteWord {
        FiniteWord(self.prefix.iter().copied().collect())
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.tail, Tail::Periodic { .. })
    }

    /// Symbol at position `i` (0-based); random tails are materialized into the prefix.
    pub fn symbol_at(&mut self, i: usize) -> u8 {
        if i < self.prefix.len() {
            return self.prefix[i];
        }
        match &mut self.tail {
            Tail::Periodic { period, offset } => period[(*offset + i - self.prefix.len()) % period.len()],
            Tail::Random(src) => {
                while self.prefix.len() <= i {
                    let s = src.next_symbol();
                    self.prefix.push_back(s);
                }
                self.prefix[i]
            }
        }
    }

    /// First `n` symbols.
    pub fn take(&mut self, n: usize) -> Vec<u8> {
        (0..n).map(|i| self.symbol_at(i)).collect()
    }

    /// σ in place.
    pub fn shift_in_place(&mut self) {
        if self.prefix.pop_front().is_some() {
            return;
        }
        match &mut self.tail {
            Tail::Periodic { period, offset } => *offset = (*offset + 1) % period.len(),
            Tail::Random(src) => {
                src.next_symbol();
            }
        }
    }

    pub fn shift(&self) -> SymbolStream {
        let mut s = self.clone();
        s.shift_in_place();
        s
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `m^{-k}` with `k` the common prefix length. Two periodic streams are compared
/// exactly; otherwise agreement through `max_depth` returns the bound `m^{-max_depth}`.
pub fn symbolic_dist(a: &mut SymbolStream, b: &mut SymbolStream, max_depth: usize) -> Result<f64> {
    if a.m != b.m {
        return Err(Error::AlphabetMismatch(a.m, b.m));
    }
    let m = a.m as f64;
    for k in 0..max_depth {
        if a.symbol_at(k) != b.symbol_at(k) {
            return Ok(m.powi(-(k as i32)));
        }
    }
    if let (Tail::Periodic { period: pa, .. }, Tail::Periodic { period: pb, .. }) = (&a.tail, &b.tail) {
        let lcm = pa.len() / gcd(pa.len(), pb.len()) * pb.len();
        let horizon = a.prefix.len().max(b.prefix.len()) + lcm;
        for k in max_depth..horizon {
            if a.symbol_at(k) != b.symbol_at(k) {
                return Ok(m.powi(-(k as i32)));
            }
        }
        return Ok(0.0);
    }
    Ok(m.powi(-(max_depth as i32)))
}

/// Deepest composition used by the coding map before giving up.
pub const MAX_PI_DEPTH: usize = 4096;

/// π of a symbol slice: composes until the cylinder diameter drops below `tol`,
/// then returns `φ_I(x0)`. Returns the point and the depth used.
pub fn pi_slice(system: &IfsSystem, w: &[u8], tol: f64) -> Option<(PointRd, usize)> {
    let mut f: WordMap = system.identity();
    let x0 = system.x0().as_complex();
    let mut depth = 0;
    loop {
        if system.diameter_bracket(&f).1 < tol {
            return Some((PointRd::from_complex(f.eval(x0), system.dim()), depth));
        }
        if depth >= w.len() || depth >= MAX_PI_DEPTH {
            return None;
        }
        f = f.compose(system.generator(w[depth]));
        depth += 1;
    }
}

/// A point within `tol` of π(I).
pub fn coding_map_pi(system: &IfsSystem, stream: &mut SymbolStream, tol: f64) -> Result<PointRd> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    if stream.m() != system.m() {
        return Err(Error::AlphabetMismatch(stream.m(), system.m()));
    }
    let mut f: WordMap = system.identity();
    let x0 = system.x0().as_complex();
    for depth in 0..=MAX_PI_DEPTH {
        if system.diameter_bracket(&f).1 < tol {
            return Ok(PointRd::from_complex(f.eval(x0), system.dim()));
        }
        let s = stream.symbol_at(depth);
        f = f.compose(system.generator(s));
    }
    Err(Error::Uncertified(format!("coding map did not reach tolerance {tol:e}")))
}

/// A finite symbol sequence together with `z[n] ≈ π(σ^n ω)` for every shift,
/// computed by backward recursion `z[n] = φ_{ω_n}(z[n+1])` from the base point.
/// Errors contract along the recursion, so all points up to [`CodedOrbit::valid_len`]
/// are accurate to rounding.
#[derive(Clone, Debug)]
pub struct CodedOrbit {
    word: Vec<u8>,
    z: Vec<C64>,
    valid: usize,
    dim: usize,
}

impl CodedOrbit {
    pub fn new(system: &IfsSystem, word: Vec<u8>) -> CodedOrbit {
        let tail = system.tail_depth(1e-17);
        let n = word.len();
        let mut z = vec![C64::new(0.0, 0.0); n + 1];
        z[n] = system.x0().as_complex();
        let gens = system.generators();
        for i in (0..n).rev() {
            z[i] = gens[word[i] as usize].eval(z[i + 1]);
        }
        CodedOrbit { word, z, valid: n.saturating_sub(tail), dim: system.dim() }
    }

    /// Orbit of a periodic code `prefix · period^∞`, long enough for `n` accurate shifts.
    pub fn periodic(system: &IfsSystem, prefix: &[u8], period: &[u8], n: usize) -> CodedOrbit {
        let len = prefix.len() + n + system.tail_depth(1e-17) + 1;
        let mut w = prefix.to_vec();
        while w.len() < len {
            w.extend_from_slice(period);
        }
        CodedOrbit::new(system, w)
    }

    pub fn symbols(&self) -> &[u8] {
        &self.word
    }

    /// Shifts `n < valid_len()` have accurate points.
    pub fn valid_len(&self) -> usize {
        self.valid
    }

    #[inline]
    pub fn z(&self, n: usize) -> C64 {
        self.z[n]
    }

    pub fn point(&self, n: usize) -> PointRd {
        PointRd::from_complex(self.z[n], self.dim)
    }

    /// Length of the common prefix of `σ^a ω` and `σ^b ω`, capped so both
    /// shifted points stay accurate.
    #[inline]
    pub fn lcp(&self, a: usize, b: usize) -> usize {
        let cap = self.valid.saturating_sub(a.max(b));
        let mut l = 0;
        while l < cap && self.word[a + l] == self.word[b + l] {
            l += 1;
        }
        l
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_word_basics() {
        let i = FiniteWord::parse("12", 2).unwrap();
        let j = FiniteWord::parse("211", 2).unwrap();
        assert_eq!(i.concat(&j).len(), 5);
        assert_eq!(i.concat(&j).to_string(), "12211");
        assert!(FiniteWord::parse("13", 2).is_err());
        assert_eq!(FiniteWord::empty().to_string(), "∅");
        assert_eq!(FiniteWord::parse("21", 2).unwrap().index(2), 2);
    }

    #[test]
    fn dist_examples() {
        let mut i = SymbolStream::parse(2, "122", "1").unwrap();
        let mut j = SymbolStream::parse(2, "121", "1").unwrap();
        assert_eq!(symbolic_dist(&mut i, &mut j, 30).unwrap(), 0.25);
        let mut i = SymbolStream::parse(2, "", "12").unwrap();
        let mut j = SymbolStream::parse(2, "12", "12").unwrap();
        assert_eq!(symbolic_dist(&mut i, &mut j, 5).unwrap(), 0.0);
        let mut i = SymbolStream::parse(3, "2", "1").unwrap();
        let mut j = SymbolStream::parse(3, "1", "1").unwrap();
        assert_eq!(symbolic_dist(&mut i, &mut j, 10).unwrap(), 1.0);
        let mut k = SymbolStream::parse(2, "", "1").unwrap();
        assert!(symbolic_dist(&mut i, &mut k, 3).is_err());
        // periodic streams that differ only past max_depth are still separated
        let mut a = SymbolStream::parse(2, "1111112", "1").unwrap();
        let mut b = SymbolStream::parse(2, "", "1").unwrap();
        assert_eq!(symbolic_dist(&mut a, &mut b, 3).unwrap(), 2f64.powi(-6));
    }

    #[test]
    fn shift_examples() {
        let s = SymbolStream::parse(2, "12", "12").unwrap().shift();
        assert_eq!(s.prefix().to_string(), "2");
        assert_eq!(s.tail().period().unwrap(), vec![0, 1]);
        let s = SymbolStream::parse(2, "", "21").unwrap().shift();
        assert!(s.prefix().is_empty());
        assert_eq!(s.tail().period().unwrap(), vec![0, 1]);
        let mut s = SymbolStream::parse(2, "", "1").unwrap();
        for _ in 0..7 {
            s = s.shift();
        }
        assert_eq!(s.take(5), vec![0; 5]);
    }

    #[test]
    fn pi_examples() {
        let c = IfsSystem::cantor();
        let tol = 1e-13;
        let p = |pre: &str, per: &str| coding_map_pi(&c, &mut SymbolStream::parse(2, pre, per).unwrap(), tol).unwrap().x();
        assert!(p("", "1").abs() < tol);
        assert!((p("1", "2") - 1.0 / 3.0).abs() < tol);
        assert!((p("", "12") - 0.25).abs() < tol);
        assert!(coding_map_pi(&c, &mut SymbolStream::parse(2, "", "1").unwrap(), 0.0).is_err());
    }
}
