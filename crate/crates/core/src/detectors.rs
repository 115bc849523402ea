//! Recognition of the local configurations that drive spanning at `d = 3`,
//! and of the three-step line witness `F_l` in any dimension.
//!
//! All `d = 3` detectors evaluate the defining set expressions with
//! `N(A) = (union of N(v) for v in A) \ A`. The fast paths below rely on two
//! facts about the 3-torus, both checked against literal set evaluation in the
//! tests:
//!
//! * `N(l)` is the union of the two planes containing `l`, minus `l`; for
//!   `u` in `N(l)` and `a` on `l`, `u` is adjacent to `a` iff they agree in
//!   the coordinate along `l`.
//! * For `v` in `N(l)`, `l ∩ N(v)` is the single projection `q` of `v` onto
//!   `l`, and `N(N(v))` is `{v}` together with every vertex at distance 2
//!   from `v`.

use serde::{Deserialize, Serialize};

use crate::dynamics::LineCounters;
use crate::error::{Error, Result};
use crate::torus::{Configuration, LineId, TorusShape, Vertex};

/// Counts of every configuration class on one sample.
///
/// Per-axis arrays are indexed by `axis - 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigCounts {
    pub basic: usize,
    pub enhanced_basic: usize,
    pub line: [usize; 3],
    pub line_empty: [usize; 3],
    pub enhanced_line: [usize; 3],
    pub non_enhanced_line: [usize; 3],
}

impl ConfigCounts {
    pub fn total_line(&self) -> usize {
        self.line.iter().sum()
    }

    pub fn total_line_empty(&self) -> usize {
        self.line_empty.iter().sum()
    }

    pub fn total_enhanced_line(&self) -> usize {
        self.enhanced_line.iter().sum()
    }

    pub fn total_non_enhanced_line(&self) -> usize {
        self.non_enhanced_line.iter().sum()
    }
}

/// Line-indexed part of [`ConfigCounts`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LineEventCounts {
    pub line: [usize; 3],
    pub line_empty: [usize; 3],
    pub enhanced_line: [usize; 3],
    pub non_enhanced_line: [usize; 3],
}

/// Indicators of the line-indexed events on a single line.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LineIndicators {
    pub line: bool,
    pub line_empty: bool,
    pub enhanced_line: bool,
    pub non_enhanced_line: bool,
}

/// Disjoint decomposition of the good event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "class")]
pub enum GoodClass {
    NotGood,
    /// `Basic >= 1` and `Line = 1`.
    BasicWithLine,
    /// `EnhancedBasic >= 1` and `Line = 0`.
    EnhancedBasicNoLine,
    /// `Line >= 2`.
    TwoOrMoreLines,
    /// `Basic = 0`, `EnhancedLine = 1`, `NonEnhancedLine = 0`.
    SingleEnhancedLine,
    /// `Basic = 0`, a single non-enhanced line along `axis` (1-based), no
    /// enhanced line, and an ∅-line along some other axis.
    SingleLineWithAskewEmptyLine { axis: usize },
}

impl GoodClass {
    pub fn is_good(&self) -> bool {
        !matches!(self, GoodClass::NotGood)
    }

    /// Histogram slot, `0..=5`, in declaration order.
    pub fn ordinal(&self) -> usize {
        match self {
            GoodClass::NotGood => 0,
            GoodClass::BasicWithLine => 1,
            GoodClass::EnhancedBasicNoLine => 2,
            GoodClass::TwoOrMoreLines => 3,
            GoodClass::SingleEnhancedLine => 4,
            GoodClass::SingleLineWithAskewEmptyLine { .. } => 5,
        }
    }

    pub const NAMES: [&'static str; 6] = [
        "not_good",
        "basic_with_line",
        "enhanced_basic_no_line",
        "two_or_more_lines",
        "single_enhanced_line",
        "single_line_with_askew_empty_line",
    ];
}

fn require_d3(shape: &TorusShape) -> Result<()> {
    if shape.d() != 3 {
        return Err(Error::UnsupportedShape(format!("configuration detectors need d = 3, got d = {}", shape.d())));
    }
    Ok(())
}

/// Open vertices as 0-based coordinate triples, plus line counts.
struct OpenIndex<'a> {
    config: &'a Configuration,
    shape: TorusShape,
    open: Vec<[usize; 3]>,
    counters: LineCounters,
}

impl<'a> OpenIndex<'a> {
    fn new(config: &'a Configuration) -> Self {
        let shape = *config.shape();
        let open = config
            .iter_open()
            .map(|i| [shape.coord(i, 0), shape.coord(i, 1), shape.coord(i, 2)])
            .collect();
        OpenIndex { config, shape, open, counters: LineCounters::from_config(config) }
    }

    fn coords(&self, idx: usize) -> [usize; 3] {
        [self.shape.coord(idx, 0), self.shape.coord(idx, 1), self.shape.coord(idx, 2)]
    }

    fn index(&self, c: [usize; 3]) -> usize {
        self.shape.index_of0(&c)
    }

    fn basic_at(&self, idx: usize) -> bool {
        let own = self.config.is_open(idx) as usize;
        (0..3).all(|ax| self.counters.get(self.shape.line_index(idx, ax)) > own)
    }

    /// Some open `x != v` on the axis-`ax` line through `v` with `d(x, w) != 1`.
    fn witness_avoiding(&self, v: [usize; 3], ax: usize, w: [usize; 3]) -> bool {
        let mut x = v;
        (0..self.shape.n()).filter(|&c| c != v[ax]).any(|c| {
            x[ax] = c;
            self.config.is_open(self.index(x)) && dist(x, w) != 1
        })
    }

    fn enhanced_basic_at(&self, idx: usize) -> bool {
        if !self.basic_at(idx) {
            return false;
        }
        let v = self.coords(idx);
        self.open
            .iter()
            .filter(|w| dist(v, **w) == 2)
            .any(|&w| (0..3).all(|ax| self.witness_avoiding(v, ax, w)))
    }

    fn line_indicators(&self, line: usize) -> LineIndicators {
        let count = self.counters.get(line);
        if count < 2 {
            return LineIndicators::default();
        }
        let axis = self.shape.line_axis(line);
        let (start, _) = self.shape.line_start(line);
        let base = self.coords(start);
        let (j, k) = other_axes(axis);
        let on_line: Vec<usize> = self.shape.line_indices(line).filter(|&i| self.config.is_open(i)).map(|i| self.shape.coord(i, axis)).collect();

        // open vertices of N(l); for |l ∩ omega| = 2 also outside N(l ∩ omega)
        let candidates: Vec<[usize; 3]> = self
            .open
            .iter()
            .copied()
            .filter(|u| (u[j] == base[j]) != (u[k] == base[k]))
            .filter(|u| count >= 3 || !on_line.contains(&u[axis]))
            .collect();
        let line_event = !candidates.is_empty();
        let enhanced = candidates.iter().any(|&v| {
            let mut q = base;
            q[axis] = v[axis];
            self.open.iter().any(|&x| dist(v, x) == 2 && dist(x, q) != 1)
        });
        LineIndicators {
            line: line_event,
            line_empty: !line_event,
            enhanced_line: enhanced,
            non_enhanced_line: line_event && !enhanced,
        }
    }

    fn line_events(&self) -> LineEventCounts {
        let mut out = LineEventCounts::default();
        for line in (0..self.shape.line_count()).filter(|&l| self.counters.get(l) >= 2) {
            let ax = self.shape.line_axis(line);
            let ind = self.line_indicators(line);
            out.line[ax] += ind.line as usize;
            out.line_empty[ax] += ind.line_empty as usize;
            out.enhanced_line[ax] += ind.enhanced_line as usize;
            out.non_enhanced_line[ax] += ind.non_enhanced_line as usize;
        }
        out
    }

    /// Basic vertices, found by walking the axis-1 lines that hold an open vertex.
    fn basic_vertices(&self) -> Vec<usize> {
        let per_axis = self.shape.lines_per_axis();
        (0..per_axis)
            .filter(|&l| self.counters.get(l) > 0)
            .flat_map(|l| self.shape.line_indices(l))
            .filter(|&v| self.basic_at(v))
            .collect()
    }
}

fn dist(a: [usize; 3], b: [usize; 3]) -> usize {
    (0..3).filter(|&i| a[i] != b[i]).count()
}

fn other_axes(axis: usize) -> (usize, usize) {
    match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// Every line through `v` holds an open vertex other than `v`; the state of
/// `v` itself is ignored.
pub fn is_basic_at(config: &Configuration, v: &Vertex) -> Result<bool> {
    require_d3(config.shape())?;
    let idx = config.shape().index_of(v)?;
    Ok(OpenIndex::new(config).basic_at(idx))
}

pub fn count_basic(config: &Configuration) -> Result<usize> {
    require_d3(config.shape())?;
    Ok(OpenIndex::new(config).basic_vertices().len())
}

pub fn is_enhanced_basic_at(config: &Configuration, v: &Vertex) -> Result<bool> {
    require_d3(config.shape())?;
    let idx = config.shape().index_of(v)?;
    Ok(OpenIndex::new(config).enhanced_basic_at(idx))
}

pub fn count_enhanced_basic(config: &Configuration) -> Result<usize> {
    require_d3(config.shape())?;
    let index = OpenIndex::new(config);
    Ok(index.basic_vertices().into_iter().filter(|&v| index.enhanced_basic_at(v)).count())
}

pub fn line_indicators(config: &Configuration, line: &LineId) -> Result<LineIndicators> {
    require_d3(config.shape())?;
    let flat = config.shape().line_flat(line)?;
    Ok(OpenIndex::new(config).line_indicators(flat))
}

pub fn count_line_events(config: &Configuration) -> Result<LineEventCounts> {
    require_d3(config.shape())?;
    Ok(OpenIndex::new(config).line_events())
}

/// All counting variables of one sample.
pub fn count_configs(config: &Configuration) -> Result<ConfigCounts> {
    require_d3(config.shape())?;
    let index = OpenIndex::new(config);
    let basic = index.basic_vertices();
    let enhanced_basic = basic.iter().filter(|&&v| index.enhanced_basic_at(v)).count();
    let lines = index.line_events();
    Ok(ConfigCounts {
        basic: basic.len(),
        enhanced_basic,
        line: lines.line,
        line_empty: lines.line_empty,
        enhanced_line: lines.enhanced_line,
        non_enhanced_line: lines.non_enhanced_line,
    })
}

/// The good event as the union of its five defining terms.
pub fn is_good(counts: &ConfigCounts) -> bool {
    let line = counts.total_line();
    let askew = (0..3).any(|i| {
        counts.line[i] >= 1 && (0..3).filter(|&j| j != i).map(|j| counts.line_empty[j]).sum::<usize>() >= 1
    });
    (counts.basic >= 1 && line >= 1) || counts.enhanced_basic >= 1 || askew || line >= 2 || counts.total_enhanced_line() >= 1
}

/// First matching term of the disjoint decomposition.
pub fn classify_counts(counts: &ConfigCounts) -> GoodClass {
    let line = counts.total_line();
    let el = counts.total_enhanced_line();
    let nel = counts.total_non_enhanced_line();
    if counts.basic >= 1 && line == 1 {
        return GoodClass::BasicWithLine;
    }
    if counts.enhanced_basic >= 1 && line == 0 {
        return GoodClass::EnhancedBasicNoLine;
    }
    if line >= 2 {
        return GoodClass::TwoOrMoreLines;
    }
    if counts.basic == 0 && el == 1 && nel == 0 {
        return GoodClass::SingleEnhancedLine;
    }
    if counts.basic == 0 && el == 0 && nel == 1 {
        let axis = (0..3).find(|&i| counts.non_enhanced_line[i] == 1).unwrap();
        let askew_empty: usize = (0..3).filter(|&j| j != axis).map(|j| counts.line_empty[j]).sum();
        if askew_empty >= 1 {
            return GoodClass::SingleLineWithAskewEmptyLine { axis: axis + 1 };
        }
    }
    GoodClass::NotGood
}

pub fn classify_good(config: &Configuration) -> Result<GoodClass> {
    Ok(classify_counts(&count_configs(config)?))
}

/// Open-vertex target on the left third of the line in the `F_l` witness:
/// `ceil((d-1) theta / d) - 1`.
pub fn f_line_left_target(d: usize, theta: usize) -> usize {
    ((d - 1) * theta).div_ceil(d) - 1
}

/// The `F_l` event for an axis-1 line: `r` open on the left third, one middle
/// cross line with `theta - r` open, and `theta` right cross lines with
/// `theta - r - 1` open each. Cross lines run along axis 2.
///
/// Thirds use real comparisons of the 1-based first coordinate `w` with
/// `n/3` and `2n/3`: left `w < n/3`, middle `n/3 <= w <= 2n/3`, right
/// `w > 2n/3`.
pub fn detect_f_line(config: &Configuration, line: &LineId) -> Result<bool> {
    let shape = config.shape();
    if shape.d() < 2 {
        return Err(Error::UnsupportedShape("F_l needs d >= 2".into()));
    }
    if line.axis != 1 {
        return Err(Error::domain(format!("F_l is defined for axis-1 lines, got axis {}", line.axis)));
    }
    let flat = shape.line_flat(line)?;
    let counters = LineCounters::from_config(config);
    Ok(f_line_with(config, &counters, flat))
}

pub(crate) fn f_line_with(config: &Configuration, counters: &LineCounters, flat: usize) -> bool {
    let shape = config.shape();
    let n = shape.n();
    let theta = shape.theta();
    let r = f_line_left_target(shape.d(), theta);
    let mut left = 0;
    let mut middle = false;
    let mut right = 0;
    for (k, v) in shape.line_indices(flat).enumerate() {
        let w = k + 1;
        if 3 * w < n {
            left += config.is_open(v) as usize;
        } else if 3 * w <= 2 * n {
            middle |= counters.get(shape.line_index(v, 1)) >= theta - r;
        } else if counters.get(shape.line_index(v, 1)) + 1 >= theta - r {
            right += 1;
        }
    }
    left >= r && middle && right >= theta
}
