//! Low-level map and shape arithmetic shared by the IFS, measure and dynamics code.

use num_complex::Complex64 as C64;

/// A real Möbius map `x -> (a x + b) / (c x + d)` stored with entries scaled so
/// that the largest has modulus one. `det` is the determinant of the stored
/// (scaled) matrix, tracked multiplicatively so it never suffers cancellation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mobius {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub det: f64,
}

impl Mobius {
    pub const IDENTITY: Mobius = Mobius { a: 1.0, b: 0.0, c: 0.0, d: 1.0, det: 1.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Mobius {
        Mobius::scaled(a, b, c, d, a * d - b * c)
    }

    fn scaled(a: f64, b: f64, c: f64, d: f64, det: f64) -> Mobius {
        let s = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
        Mobius { a: a / s, b: b / s, c: c / s, d: d / s, det: det / (s * s) }
    }

    /// `self ∘ other`.
    pub fn compose(&self, o: &Mobius) -> Mobius {
        Mobius::scaled(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
            self.det * o.det,
        )
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.a * x + self.b) / (self.c * x + self.d)
    }

    #[inline]
    pub fn denom(&self, x: f64) -> f64 {
        self.c * x + self.d
    }

    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        let q = self.c * x + self.d;
        self.det / (q * q)
    }

    /// `f(u) - f(v)` with full relative precision.
    #[inline]
    pub fn diff(&self, u: f64, v: f64) -> f64 {
        self.det * (u - v) / ((self.c * u + self.d) * (self.c * v + self.d))
    }

    pub fn inverse(&self) -> Mobius {
        Mobius::scaled(self.d, -self.b, -self.c, self.a, self.det)
    }
}

/// A plane similarity `z -> a * C(z) + b` where `C` is conjugation when `conj` is set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Similarity {
    pub a: C64,
    pub b: C64,
    pub conj: bool,
}

impl Similarity {
    pub const IDENTITY: Similarity =
        Similarity { a: C64 { re: 1.0, im: 0.0 }, b: C64 { re: 0.0, im: 0.0 }, conj: false };

    #[inline]
    fn cj(flag: bool, z: C64) -> C64 {
        if flag {
            z.conj()
        } else {
            z
        }
    }

    pub fn compose(&self, o: &Similarity) -> Similarity {
        Similarity {
            a: self.a * Self::cj(self.conj, o.a),
            b: self.a * Self::cj(self.conj, o.b) + self.b,
            conj: self.conj ^ o.conj,
        }
    }

    #[inline]
    pub fn eval(&self, z: C64) -> C64 {
        self.a * Self::cj(self.conj, z) + self.b
    }

    #[inline]
    pub fn scale(&self) -> f64 {
        self.a.norm()
    }

    pub fn invert_point(&self, w: C64) -> C64 {
        Self::cj(self.conj, (w - self.b) / self.a)
    }
}

/// Composition of generator maps along a finite word.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WordMap {
    Line(Mobius),
    Plane(Similarity),
}

impl WordMap {
    pub fn compose(&self, o: &WordMap) -> WordMap {
        match (self, o) {
            (WordMap::Line(f), WordMap::Line(g)) => WordMap::Line(f.compose(g)),
            (WordMap::Plane(f), WordMap::Plane(g)) => WordMap::Plane(f.compose(g)),
            _ => unreachable!("mixed-dimension composition"),
        }
    }

    pub fn identity_like(&self) -> WordMap {
        match self {
            WordMap::Line(_) => WordMap::Line(Mobius::IDENTITY),
            WordMap::Plane(_) => WordMap::Plane(Similarity::IDENTITY),
        }
    }

    #[inline]
    pub fn eval(&self, z: C64) -> C64 {
        match self {
            WordMap::Line(f) => C64::new(f.eval(z.re), 0.0),
            WordMap::Plane(f) => f.eval(z),
        }
    }

    /// |derivative| at `z`.
    #[inline]
    pub fn deriv_abs(&self, z: C64) -> f64 {
        match self {
            WordMap::Line(f) => f.deriv(z.re).abs(),
            WordMap::Plane(f) => f.scale(),
        }
    }
}

pub const MAX_VERTICES: usize = 8;

/// A convex set given by at most [`MAX_VERTICES`] vertices in counterclockwise
/// order: a point, a segment, or a polygon. One-dimensional sets lie on the real axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shape {
    pub v: [C64; MAX_VERTICES],
    pub n: usize,
}

impl Shape {
    pub fn segment(lo: f64, hi: f64) -> Shape {
        let mut v = [C64::new(0.0, 0.0); MAX_VERTICES];
        v[0] = C64::new(lo, 0.0);
        v[1] = C64::new(hi, 0.0);
        Shape { v, n: 2 }
    }

    pub fn from_vertices(pts: &[C64]) -> Shape {
        assert!(pts.len() <= MAX_VERTICES && !pts.is_empty());
        let mut v = [C64::new(0.0, 0.0); MAX_VERTICES];
        v[..pts.len()].copy_from_slice(pts);
        Shape { v, n: pts.len() }
    }

    pub fn vertices(&self) -> &[C64] {
        &self.v[..self.n]
    }

    pub fn max_dist(&self, c: C64) -> f64 {
        self.vertices().iter().map(|p| (p - c).norm()).fold(0.0, f64::max)
    }

    pub fn min_dist(&self, c: C64) -> f64 {
        let vs = self.vertices();
        if vs.len() >= 3 && self.contains(c, 0.0) {
            return 0.0;
        }
        if vs.len() == 1 {
            return (vs[0] - c).norm();
        }
        let mut best = f64::INFINITY;
        for i in 0..vs.len() {
            let p = vs[i];
            let q = vs[(i + 1) % vs.len()];
            best = best.min(point_segment_dist(c, p, q));
            if vs.len() == 2 {
                break;
            }
        }
        best
    }

    /// Range of `<normal, v>` over the shape.
    pub fn proj_range(&self, normal: C64) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in self.vertices() {
            let t = p.re * normal.re + p.im * normal.im;
            lo = lo.min(t);
            hi = hi.max(t);
        }
        (lo, hi)
    }

    pub fn contains(&self, c: C64, tol: f64) -> bool {
        let vs = self.vertices();
        match vs.len() {
            1 => (vs[0] - c).norm() <= tol,
            2 => point_segment_dist(c, vs[0], vs[1]) <= tol,
            _ => {
                for i in 0..vs.len() {
                    let p = vs[i];
                    let q = vs[(i + 1) % vs.len()];
                    let e = q - p;
                    let cr = e.re * (c.im - p.im) - e.im * (c.re - p.re);
                    if cr < -tol * e.norm() {
                        return false;
                    }
                }
                true
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        let vs = self.vertices();
        let mut d: f64 = 0.0;
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                d = d.max((vs[i] - vs[j]).norm());
            }
        }
        d
    }

    pub fn centroid(&self) -> C64 {
        let s: C64 = self.vertices().iter().sum();
        s / self.n as f64
    }

    pub fn area(&self) -> f64 {
        let vs = self.vertices();
        if vs.len() < 3 {
            return 0.0;
        }
        let mut a = 0.0;
        for i in 0..vs.len() {
            let p = vs[i];
            let q = vs[(i + 1) % vs.len()];
            a += p.re * q.im - q.re * p.im;
        }
        0.5 * a.abs()
    }
}

pub fn point_segment_dist(c: C64, p: C64, q: C64) -> f64 {
    let e = q - p;
    let l2 = e.norm_sqr();
    if l2 == 0.0 {
        return (c - p).norm();
    }
    let t = (((c - p) * e.conj()).re / l2).clamp(0.0, 1.0);
    (c - (p + e * t)).norm()
}

/// Convex hull by the monotone chain, counterclockwise, collinear points dropped.
pub fn convex_hull(points: &[C64]) -> Vec<C64> {
    let mut pts: Vec<C64> = points.to_vec();
    pts.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
    pts.dedup_by(|a, b| (*a - *b).norm() < 1e-15);
    if pts.len() <= 2 {
        return pts;
    }
    let cross = |o: C64, a: C64, b: C64| (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re);
    let mut lower: Vec<C64> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 1e-15 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<C64> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 1e-15 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 2 {
        // all points collinear: keep the two extremes
        return vec![pts[0], pts[pts.len() - 1]];
    }
    lower
}

/// Range `(min, max)` of `|a − b|` over points of two convex shapes.
pub fn shape_distance_range(a: &Shape, b: &Shape) -> (f64, f64) {
    let (va, vb) = (a.vertices(), b.vertices());
    let mut hi: f64 = 0.0;
    for p in va {
        for q in vb {
            hi = hi.max((p - q).norm());
        }
    }
    if va.len() == 2 && vb.len() == 2 && va[0].im == 0.0 && va[1].im == 0.0 && vb[0].im == 0.0 && vb[1].im == 0.0 {
        let lo = (vb[0].re - va[1].re).max(va[0].re - vb[1].re).max(0.0);
        return (lo, hi);
    }
    if vb.iter().any(|&q| a.n >= 3 && a.contains(q, 0.0)) || va.iter().any(|&p| b.n >= 3 && b.contains(p, 0.0)) {
        return (0.0, hi);
    }
    let edges = |v: &[C64]| -> Vec<(C64, C64)> {
        match v.len() {
            1 => vec![(v[0], v[0])],
            2 => vec![(v[0], v[1])],
            n => (0..n).map(|i| (v[i], v[(i + 1) % n])).collect(),
        }
    };
    let (ea, eb) = (edges(va), edges(vb));
    for &(p, q) in &ea {
        for &(r, s) in &eb {
            if segments_cross(p, q, r, s) {
                return (0.0, hi);
            }
        }
    }
    let mut lo = f64::INFINITY;
    for &p in va {
        for &(r, s) in &eb {
            lo = lo.min(point_segment_dist(p, r, s));
        }
    }
    for &q in vb {
        for &(p, r) in &ea {
            lo = lo.min(point_segment_dist(q, p, r));
        }
    }
    (lo, hi)
}

fn segments_cross(p: C64, q: C64, r: C64, s: C64) -> bool {
    let cross = |o: C64, a: C64, b: C64| (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re);
    let (d1, d2) = (cross(r, s, p), cross(r, s, q));
    let (d3, d4) = (cross(p, q, r), cross(p, q, s));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Area of the intersection of two convex polygons (Sutherland–Hodgman clipping).
pub fn convex_intersection_area(a: &[C64], b: &[C64]) -> f64 {
    if a.len() < 3 || b.len() < 3 {
        return 0.0;
    }
    let mut out: Vec<C64> = a.to_vec();
    for i in 0..b.len() {
        let p = b[i];
        let q = b[(i + 1) % b.len()];
        let side = |z: C64| (q.re - p.re) * (z.im - p.im) - (q.im - p.im) * (z.re - p.re);
        let input = std::mem::take(&mut out);
        if input.is_empty() {
            break;
        }
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let (sc, sp) = (side(cur), side(prev));
            if sc >= 0.0 {
                if sp < 0.0 {
                    out.push(prev + (cur - prev) * (sp / (sp - sc)));
                }
                out.push(cur);
            } else if sp >= 0.0 {
                out.push(prev + (cur - prev) * (sp / (sp - sc)));
            }
        }
    }
    if out.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..out.len() {
        let p = out[i];
        let q = out[(i + 1) % out.len()];
        s += p.re * q.im - q.re * p.im;
    }
    0.5 * s.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mobius_composition_matches_pointwise() {
        let f = Mobius::new(0.0, 1.0, 2.0, 2.0);
        let g = Mobius::new(1.0, 1.0, 1.0, 2.0);
        let h = f.compose(&g);
        for &x in &[0.0, 0.3, 1.0] {
            assert!((h.eval(x) - f.eval(g.eval(x))).abs() < 1e-15);
            let d = f.deriv(g.eval(x)) * g.deriv(x);
            assert!((h.deriv(x) - d).abs() < 1e-15);
        }
        let inv = h.inverse();
        assert!((inv.eval(h.eval(0.4)) - 0.4).abs() < 1e-14);
    }

    #[test]
    fn diff_agrees_with_subtraction() {
        let f = Mobius::new(1.0, 1.0, 1.0, 2.0);
        assert!((f.diff(0.7, 0.2) - (f.eval(0.7) - f.eval(0.2))).abs() < 1e-16);
    }

    #[test]
    fn similarity_reflection_composes() {
        let f = Similarity { a: C64::new(0.0, 0.5), b: C64::new(1.0, 0.0), conj: true };
        let g = Similarity { a: C64::new(0.5, 0.0), b: C64::new(0.0, 1.0), conj: false };
        let z = C64::new(0.3, -0.2);
        let h = f.compose(&g);
        assert!((h.eval(z) - f.eval(g.eval(z))).norm() < 1e-15);
        assert!((h.invert_point(h.eval(z)) - z).norm() < 1e-14);
    }

    #[test]
    fn hull_and_clipping() {
        let pts = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.5, 0.2), C64::new(0.0, 1.0)];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 3);
        let sq = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 1.0), C64::new(0.0, 1.0)];
        let sq2: Vec<C64> = sq.iter().map(|z| z + C64::new(0.5, 0.0)).collect();
        assert!((convex_intersection_area(&sq, &sq2) - 0.5).abs() < 1e-15);
        let seg = convex_hull(&[C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.2)]);
        assert_eq!(seg.len(), 2);
    }

    #[test]
    fn shape_distances() {
        let s = Shape::segment(0.0, 1.0);
        assert_eq!(s.min_dist(C64::new(0.5, 0.0)), 0.0);
        assert!((s.min_dist(C64::new(1.5, 0.0)) - 0.5).abs() < 1e-15);
        assert!((s.max_dist(C64::new(0.25, 0.0)) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn shape_to_shape_distances() {
        let a = Shape::segment(0.0, 1.0);
        let b = Shape::segment(2.0, 3.0);
        assert_eq!(shape_distance_range(&a, &b), (1.0, 3.0));
        let tri = Shape::from_vertices(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        let far = Shape::from_vertices(&[C64::new(2.0, 0.0), C64::new(3.0, 0.0), C64::new(2.0, 1.0)]);
        let (lo, hi) = shape_distance_range(&tri, &far);
        assert!((lo - 1.0).abs() < 1e-15 && (hi - 10f64.sqrt()).abs() < 1e-15);
        let seg = Shape::from_vertices(&[C64::new(0.5, -1.0), C64::new(0.5, 2.0)]);
        assert_eq!(shape_distance_range(&tri, &seg).0, 0.0);
        let vseg = Shape::from_vertices(&[C64::new(0.0, -1.0), C64::new(0.0, 1.0)]);
        let hseg = Shape::from_vertices(&[C64::new(-1.0, 0.5), C64::new(1.0, 0.5)]);
        assert_eq!(shape_distance_range(&vseg, &hseg).0, 0.0);
    }
}
