//! Geometry and state of the Hamming torus `[n]^d`.
//!
//! Vertices are addressed externally by 1-based coordinates and internally by
//! a flat row-major index in which axis 1 varies fastest:
//! `index = sum_i (c_i - 1) * n^(i-1)`.
//!
//! Lines parallel to axis `i` are numbered `(i-1) * n^(d-1) + b`, where `b` is
//! the flat index of the remaining `d-1` coordinates in the same axis order.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest vertex count accepted by [`TorusShape::new`].
pub const DEFAULT_VERTEX_CAP: u64 = 1 << 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawShape", into = "RawShape")]
pub struct TorusShape {
    d: usize,
    n: usize,
    theta: usize,
    /// `n^(i)` for `i in 0..=d`; zero-padded past `d`.
    pow: [usize; MAX_DIM + 1],
}

/// Dimensions beyond this are rejected; `2^d` vertices already exceed any cap
/// well before it.
pub const MAX_DIM: usize = 31;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawShape {
    d: usize,
    n: usize,
    theta: usize,
}

impl TryFrom<RawShape> for TorusShape {
    type Error = Error;
    fn try_from(raw: RawShape) -> Result<Self> {
        TorusShape::new(raw.d, raw.n, raw.theta)
    }
}

impl From<TorusShape> for RawShape {
    fn from(s: TorusShape) -> Self {
        RawShape { d: s.d, n: s.n, theta: s.theta }
    }
}

impl TorusShape {
    pub fn new(d: usize, n: usize, theta: usize) -> Result<Self> {
        Self::with_cap(d, n, theta, DEFAULT_VERTEX_CAP)
    }

    /// Like [`TorusShape::new`] but with an explicit vertex-count cap.
    pub fn with_cap(d: usize, n: usize, theta: usize, cap: u64) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(Error::domain(format!("dimension d={d} must be in 1..={MAX_DIM}")));
        }
        if n < 2 {
            return Err(Error::domain(format!("side length n={n} must be at least 2")));
        }
        if theta == 0 {
            return Err(Error::domain("threshold must be at least 1"));
        }
        let mut pow = [0usize; MAX_DIM + 1];
        pow[0] = 1;
        let mut total: u64 = 1;
        for slot in &mut pow[1..=d] {
            total = total
                .checked_mul(n as u64)
                .filter(|&t| t <= cap)
                .ok_or_else(|| Error::resource(format!("n^d = {n}^{d} exceeds the vertex cap {cap}")))?;
            *slot = total as usize;
        }
        Ok(TorusShape { d, n, theta, pow })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn theta(&self) -> usize {
        self.theta
    }

    /// Same graph, different threshold.
    pub fn with_theta(&self, theta: usize) -> Result<Self> {
        if theta == 0 {
            return Err(Error::domain("threshold must be at least 1"));
        }
        Ok(TorusShape { theta, ..*self })
    }

    pub fn vertex_count(&self) -> usize {
        self.pow[self.d]
    }

    /// Lines per axis, `n^(d-1)`.
    pub fn lines_per_axis(&self) -> usize {
        self.pow[self.d - 1]
    }

    pub fn line_count(&self) -> usize {
        self.d * self.lines_per_axis()
    }

    /// Planes per axis pair, `n^(d-2)`.
    pub fn planes_per_pair(&self) -> usize {
        if self.d < 2 {
            0
        } else {
            self.pow[self.d - 2]
        }
    }

    pub fn plane_count(&self) -> usize {
        self.d * self.d.saturating_sub(1) / 2 * self.planes_per_pair()
    }

    /// Several limit theorems assume `n >= 3 theta`.
    pub fn is_small_side(&self) -> bool {
        self.n < 3 * self.theta
    }

    /// No vertex can ever reach the threshold, so the dynamics are the identity.
    pub fn is_degenerate_threshold(&self) -> bool {
        self.theta > self.d * (self.n - 1)
    }

    /// Flags worth surfacing in reports.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.is_small_side() {
            out.push(format!("n={} < 3*theta={}: asymptotic results assume n >= 3 theta", self.n, 3 * self.theta));
        }
        if self.is_degenerate_threshold() {
            out.push(format!(
                "theta={} > d(n-1)={}: dynamics are the identity",
                self.theta,
                self.d * (self.n - 1)
            ));
        }
        out
    }

    /// Stride of axis `ax` (0-based) in the flat index.
    #[inline]
    pub fn stride(&self, ax: usize) -> usize {
        self.pow[ax]
    }

    /// 0-based coordinate of a flat index along axis `ax` (0-based).
    #[inline]
    pub fn coord(&self, idx: usize, ax: usize) -> usize {
        (idx / self.pow[ax]) % self.n
    }

    pub fn coords0(&self, idx: usize) -> Vec<usize> {
        (0..self.d).map(|ax| self.coord(idx, ax)).collect()
    }

    pub fn index_of0(&self, coords: &[usize]) -> usize {
        coords.iter().enumerate().map(|(ax, &c)| c * self.pow[ax]).sum()
    }

    /// Validated vertex from 1-based coordinates.
    pub fn vertex(&self, coords: &[usize]) -> Result<Vertex> {
        if coords.len() != self.d {
            return Err(Error::domain(format!("vertex has {} coordinates, expected {}", coords.len(), self.d)));
        }
        if let Some(&c) = coords.iter().find(|&&c| c == 0 || c > self.n) {
            return Err(Error::domain(format!("coordinate {c} outside 1..={}", self.n)));
        }
        Ok(Vertex(coords.to_vec()))
    }

    pub fn index_of(&self, v: &Vertex) -> Result<usize> {
        self.check_vertex(v)?;
        Ok(v.0.iter().enumerate().map(|(ax, &c)| (c - 1) * self.pow[ax]).sum())
    }

    pub fn vertex_at(&self, idx: usize) -> Vertex {
        debug_assert!(idx < self.vertex_count());
        Vertex((0..self.d).map(|ax| self.coord(idx, ax) + 1).collect())
    }

    fn check_vertex(&self, v: &Vertex) -> Result<()> {
        self.vertex(&v.0).map(|_| ())
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis == 0 || axis > self.d {
            return Err(Error::domain(format!("axis {axis} outside 1..={}", self.d)));
        }
        Ok(())
    }

    /// Flat line index of the line through `idx` parallel to axis `ax` (0-based).
    #[inline]
    pub fn line_index(&self, idx: usize, ax: usize) -> usize {
        let s = self.pow[ax];
        let low = idx % s;
        let high = idx / (s * self.n);
        ax * self.pow[self.d - 1] + high * s + low
    }

    /// First vertex and stride of a flat line index.
    #[inline]
    pub fn line_start(&self, line: usize) -> (usize, usize) {
        let per = self.pow[self.d - 1];
        let ax = line / per;
        let b = line % per;
        let s = self.pow[ax];
        ((b / s) * s * self.n + b % s, s)
    }

    /// Axis (0-based) of a flat line index.
    #[inline]
    pub fn line_axis(&self, line: usize) -> usize {
        line / self.pow[self.d - 1]
    }

    /// Flat indices of the vertices on a line, in coordinate order.
    pub fn line_indices(&self, line: usize) -> impl Iterator<Item = usize> {
        let (start, stride) = self.line_start(line);
        (0..self.n).map(move |k| start + k * stride)
    }

    pub fn line_of(&self, v: &Vertex, axis: usize) -> Result<LineId> {
        self.check_axis(axis)?;
        let idx = self.index_of(v)?;
        Ok(self.line_id(self.line_index(idx, axis - 1)))
    }

    pub fn line_id(&self, line: usize) -> LineId {
        let ax = self.line_axis(line);
        let (start, _) = self.line_start(line);
        let base = (0..self.d).filter(|&a| a != ax).map(|a| self.coord(start, a) + 1).collect();
        LineId { axis: ax + 1, base }
    }

    pub fn line_flat(&self, line: &LineId) -> Result<usize> {
        self.check_axis(line.axis)?;
        let ax = line.axis - 1;
        if line.base.len() + 1 != self.d {
            return Err(Error::domain("line base has the wrong number of coordinates"));
        }
        let mut coords = Vec::with_capacity(self.d);
        let mut it = line.base.iter();
        for a in 0..self.d {
            coords.push(if a == ax { 1 } else { *it.next().unwrap() });
        }
        let v = self.vertex(&coords)?;
        Ok(self.line_index(self.index_of(&v)?, ax))
    }

    pub fn line_vertices(&self, line: &LineId) -> Result<Vec<Vertex>> {
        let flat = self.line_flat(line)?;
        Ok(self.line_indices(flat).map(|i| self.vertex_at(i)).collect())
    }

    /// Flat index of the plane through `idx` spanned by axes `a < b` (0-based):
    /// pair ordinal times `n^(d-2)` plus the flat index of the other coordinates.
    pub fn plane_index(&self, idx: usize, a: usize, b: usize) -> usize {
        debug_assert!(a < b && b < self.d);
        let mut base = 0;
        let mut mult = 1;
        for ax in (0..self.d).filter(|&x| x != a && x != b) {
            base += self.coord(idx, ax) * mult;
            mult *= self.n;
        }
        pair_ordinal(self.d, a, b) * self.planes_per_pair() + base
    }

    pub fn plane_of(&self, v: &Vertex, axes: (usize, usize)) -> Result<PlaneId> {
        let (i, j) = if axes.0 < axes.1 { axes } else { (axes.1, axes.0) };
        self.check_axis(i)?;
        self.check_axis(j)?;
        if i == j {
            return Err(Error::domain("plane axes must differ"));
        }
        self.check_vertex(v)?;
        let base = (1..=self.d).filter(|&a| a != i && a != j).map(|a| v.0[a - 1]).collect();
        Ok(PlaneId { axes: (i, j), base })
    }

    pub fn plane_vertices(&self, plane: &PlaneId) -> Result<Vec<Vertex>> {
        let (i, j) = plane.axes;
        self.check_axis(i)?;
        self.check_axis(j)?;
        if i >= j || plane.base.len() + 2 != self.d {
            return Err(Error::domain("malformed plane id"));
        }
        let mut out = Vec::with_capacity(self.n * self.n);
        for cj in 1..=self.n {
            for ci in 1..=self.n {
                let mut it = plane.base.iter();
                let coords: Vec<usize> = (1..=self.d)
                    .map(|a| if a == i { ci } else if a == j { cj } else { *it.next().unwrap() })
                    .collect();
                out.push(self.vertex(&coords)?);
            }
        }
        Ok(out)
    }

    /// Neighbours of a flat index: every vertex differing in exactly one coordinate.
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.d).flat_map(move |ax| {
            let line = self.line_index(idx, ax);
            self.line_indices(line).filter(move |&w| w != idx)
        })
    }

    pub fn neighborhood(&self, v: &Vertex) -> Result<Vec<Vertex>> {
        let idx = self.index_of(v)?;
        Ok(self.neighbors(idx).map(|w| self.vertex_at(w)).collect())
    }

    /// `N(A)`: the union of the neighbourhoods of `A`, minus `A` itself.
    pub fn neighborhood_of_indices(&self, set: &BTreeSet<usize>) -> BTreeSet<usize> {
        set.iter()
            .flat_map(|&v| self.neighbors(v))
            .filter(|w| !set.contains(w))
            .collect()
    }

    pub fn neighborhood_of_set(&self, set: &[Vertex]) -> Result<Vec<Vertex>> {
        let idx: BTreeSet<usize> = set.iter().map(|v| self.index_of(v)).collect::<Result<_>>()?;
        Ok(self.neighborhood_of_indices(&idx).into_iter().map(|w| self.vertex_at(w)).collect())
    }

    /// Number of coordinates in which two flat indices differ.
    pub fn hamming_distance(&self, a: usize, b: usize) -> usize {
        (0..self.d).filter(|&ax| self.coord(a, ax) != self.coord(b, ax)).count()
    }
}

/// Position of the pair `a < b` in the lexicographic list of axis pairs.
pub(crate) fn pair_ordinal(d: usize, a: usize, b: usize) -> usize {
    // pairs (0,1),(0,2),..,(0,d-1),(1,2),...
    a * (2 * d - a - 1) / 2 + (b - a - 1)
}

/// A vertex given by 1-based coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vertex(pub Vec<usize>);

impl Vertex {
    pub fn coords(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A line parallel to `axis` (1-based) through the fixed coordinates `base`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LineId {
    pub axis: usize,
    pub base: Vec<usize>,
}

/// A plane spanned by `axes = (i, j)` with `i < j` (1-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlaneId {
    pub axes: (usize, usize),
    pub base: Vec<usize>,
}

/// A subset of `[n]^d`, stored as one bit per vertex.
#[derive(Clone, PartialEq, Eq)]
pub struct Configuration {
    shape: TorusShape,
    bits: Vec<u64>,
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Configuration")
            .field("shape", &self.shape)
            .field("open", &self.count_open())
            .finish()
    }
}

impl Configuration {
    pub fn empty(shape: TorusShape) -> Self {
        let words = shape.vertex_count().div_ceil(64);
        Configuration { shape, bits: vec![0; words] }
    }

    pub fn full(shape: TorusShape) -> Self {
        let mut c = Self::empty(shape);
        let n = shape.vertex_count();
        for (w, word) in c.bits.iter_mut().enumerate() {
            let lo = w * 64;
            *word = if lo + 64 <= n { u64::MAX } else { (1u64 << (n - lo)) - 1 };
        }
        c
    }

    pub fn from_indices(shape: TorusShape, open: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut c = Self::empty(shape);
        for idx in open {
            if idx >= shape.vertex_count() {
                return Err(Error::domain(format!("vertex index {idx} out of range")));
            }
            c.set_open(idx);
        }
        Ok(c)
    }

    pub fn from_vertices(shape: TorusShape, open: &[Vertex]) -> Result<Self> {
        let idx: Vec<usize> = open.iter().map(|v| shape.index_of(v)).collect::<Result<_>>()?;
        Self::from_indices(shape, idx)
    }

    pub fn shape(&self) -> &TorusShape {
        &self.shape
    }

    /// Same open set viewed under a different threshold.
    pub fn with_shape(&self, shape: TorusShape) -> Result<Self> {
        if shape.d() != self.shape.d() || shape.n() != self.shape.n() {
            return Err(Error::domain("reshaping must keep d and n"));
        }
        Ok(Configuration { shape, bits: self.bits.clone() })
    }

    #[inline]
    pub fn is_open(&self, idx: usize) -> bool {
        (self.bits[idx >> 6] >> (idx & 63)) & 1 == 1
    }

    pub fn is_open_vertex(&self, v: &Vertex) -> Result<bool> {
        Ok(self.is_open(self.shape.index_of(v)?))
    }

    #[inline]
    pub fn set_open(&mut self, idx: usize) {
        self.bits[idx >> 6] |= 1 << (idx & 63);
    }

    pub fn count_open(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.count_open() == self.shape.vertex_count()
    }

    /// Flat indices of open vertices, ascending.
    pub fn iter_open(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(w * 64 + bit)
            })
        })
    }

    pub fn open_vertices(&self) -> Vec<Vertex> {
        self.iter_open().map(|i| self.shape.vertex_at(i)).collect()
    }

    /// Open vertices on a flat line index.
    pub fn count_on_line(&self, line: usize) -> usize {
        self.shape.line_indices(line).filter(|&i| self.is_open(i)).count()
    }

    pub fn count_on_line_id(&self, line: &LineId) -> Result<usize> {
        Ok(self.count_on_line(self.shape.line_flat(line)?))
    }

    /// Every open vertex of `other` is open here.
    pub fn is_superset_of(&self, other: &Configuration) -> bool {
        self.bits.len() == other.bits.len() && self.bits.iter().zip(&other.bits).all(|(a, b)| b & !a == 0)
    }

    pub(crate) fn from_words(shape: TorusShape, bits: Vec<u64>) -> Self {
        debug_assert_eq!(bits.len(), shape.vertex_count().div_ceil(64));
        Configuration { shape, bits }
    }
}

/// I.i.d. Bernoulli(`p`) configuration.
///
/// Open sites are placed by geometric skipping, so the cost is proportional
/// to the number of open sites rather than to `n^d`.
pub fn sample_initial<R: Rng + ?Sized>(shape: TorusShape, p: f64, rng: &mut R) -> Result<Configuration> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("probability {p} outside [0, 1]")));
    }
    if p == 0.0 {
        return Ok(Configuration::empty(shape));
    }
    if p == 1.0 {
        return Ok(Configuration::full(shape));
    }
    let total = shape.vertex_count();
    let log_q = (-p).ln_1p();
    let mut config = Configuration::empty(shape);
    let mut pos: usize = 0;
    loop {
        // u in (0, 1]
        let u = 1.0 - rng.random::<f64>();
        let gap = (u.ln() / log_q).floor();
        if gap >= (total - pos) as f64 {
            break;
        }
        pos += gap as usize;
        config.set_open(pos);
        pos += 1;
        if pos >= total {
            break;
        }
    }
    Ok(config)
}

/// A graph automorphism: permute the axes, then relabel coordinates along
/// each axis independently.
///
/// Vertex `v` maps to `w` with `w[axis_perm[a]] = coord_perms[a][v[a]]`
/// (0-based throughout).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automorphism {
    pub axis_perm: Vec<usize>,
    pub coord_perms: Vec<Vec<usize>>,
}

impl Automorphism {
    pub fn identity(shape: &TorusShape) -> Self {
        Automorphism {
            axis_perm: (0..shape.d()).collect(),
            coord_perms: vec![(0..shape.n()).collect(); shape.d()],
        }
    }

    pub fn random<R: Rng + ?Sized>(shape: &TorusShape, rng: &mut R) -> Self {
        let mut g = Self::identity(shape);
        g.axis_perm.shuffle(rng);
        for perm in &mut g.coord_perms {
            perm.shuffle(rng);
        }
        g
    }

    /// Swap two axes (0-based), leaving coordinates alone.
    pub fn swap_axes(shape: &TorusShape, a: usize, b: usize) -> Self {
        let mut g = Self::identity(shape);
        g.axis_perm.swap(a, b);
        g
    }

    pub fn map_index(&self, shape: &TorusShape, idx: usize) -> usize {
        let mut out = 0;
        for a in 0..shape.d() {
            out += self.coord_perms[a][shape.coord(idx, a)] * shape.stride(self.axis_perm[a]);
        }
        out
    }

    pub fn apply(&self, config: &Configuration) -> Configuration {
        let shape = *config.shape();
        let mut out = Configuration::empty(shape);
        for idx in config.iter_open() {
            out.set_open(self.map_index(&shape, idx));
        }
        out
    }

    pub fn inverse(&self) -> Self {
        let d = self.axis_perm.len();
        let mut axis_perm = vec![0; d];
        let mut coord_perms = vec![Vec::new(); d];
        for a in 0..d {
            let b = self.axis_perm[a];
            axis_perm[b] = a;
            let mut inv = vec![0; self.coord_perms[a].len()];
            for (x, &y) in self.coord_perms[a].iter().enumerate() {
                inv[y] = x;
            }
            coord_perms[b] = inv;
        }
        Automorphism { axis_perm, coord_perms }
    }
}
