//! Threshold growth dynamics.
//!
//! Two engines compute the same synchronous process. [`evolve`] applies
//! [`step`] until nothing changes and is meant as a reference. [`evolve_fast`]
//! keeps a per-line open count and only rescans lines whose count changed in
//! the previous generation; newly eligible vertices are buffered and opened
//! together at the generation boundary, so its round count is the synchronous
//! one.

use crate::error::{Error, Result};
use crate::torus::{Configuration, TorusShape};

/// Outcome of running the dynamics to their fixed point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicsResult {
    /// The fixed point `omega_infinity`.
    pub final_config: Configuration,
    /// Generations in which at least one vertex opened.
    pub rounds: usize,
    pub newly_opened: usize,
    pub spanned: bool,
    pub open_line_found: bool,
    pub open_plane_found: bool,
    /// Above Threshold evaluated on the initial configuration.
    pub above_threshold_initial: bool,
}

impl DynamicsResult {
    /// The dynamics changed something but did not fill the torus.
    pub fn stalled(&self) -> bool {
        self.newly_opened > 0 && !self.spanned
    }
}

/// Open-vertex count of every line, indexed by flat line index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineCounters {
    shape: TorusShape,
    counts: Vec<u32>,
}

impl LineCounters {
    pub fn from_config(config: &Configuration) -> Self {
        let shape = *config.shape();
        let mut counts = vec![0u32; shape.line_count()];
        for idx in config.iter_open() {
            for ax in 0..shape.d() {
                counts[shape.line_index(idx, ax)] += 1;
            }
        }
        LineCounters { shape, counts }
    }

    #[inline]
    pub fn get(&self, line: usize) -> usize {
        self.counts[line] as usize
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.counts
    }

    /// Open neighbours of `idx`, given whether `idx` itself is open.
    #[inline]
    pub fn open_neighbors(&self, idx: usize, self_open: bool) -> usize {
        let d = self.shape.d();
        let total: usize = (0..d).map(|ax| self.counts[self.shape.line_index(idx, ax)] as usize).sum();
        if self_open {
            total - d
        } else {
            total
        }
    }

    #[inline]
    fn increment(&mut self, idx: usize) {
        for ax in 0..self.shape.d() {
            self.counts[self.shape.line_index(idx, ax)] += 1;
        }
    }

    /// Recount from scratch and compare.
    pub fn verify(&self, config: &Configuration) -> Result<()> {
        let fresh = LineCounters::from_config(config);
        if let Some(line) = (0..self.counts.len()).find(|&l| fresh.counts[l] != self.counts[l]) {
            return Err(Error::Engine(format!(
                "line {line}: cached count {} but {} open",
                self.counts[line], fresh.counts[line]
            )));
        }
        Ok(())
    }

    pub fn any_full_line(&self) -> bool {
        let n = self.shape.n() as u32;
        self.counts.contains(&n)
    }

    pub fn any_full_plane(&self) -> bool {
        let shape = &self.shape;
        let d = shape.d();
        if d < 2 {
            return false;
        }
        let n = shape.n();
        let per_axis = shape.lines_per_axis();
        let mut full_lines_in_plane = vec![0usize; shape.planes_per_pair()];
        for a in 0..d {
            for b in (a + 1)..d {
                full_lines_in_plane.iter_mut().for_each(|c| *c = 0);
                let lines = a * per_axis..(a + 1) * per_axis;
                for line in lines.filter(|&l| self.counts[l] as usize == n) {
                    let (start, _) = shape.line_start(line);
                    let plane = shape.plane_index(start, a, b) % shape.planes_per_pair();
                    full_lines_in_plane[plane] += 1;
                    if full_lines_in_plane[plane] == n {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Some vertex, open or closed, sees at least `theta` open neighbours.
    pub fn any_above_threshold(&self, config: &Configuration) -> bool {
        let shape = &self.shape;
        let theta = shape.theta();
        if theta > shape.d() * (shape.n() - 1) {
            return false;
        }
        // Such a vertex lies on some line holding an open vertex.
        (0..self.counts.len())
            .filter(|&l| self.counts[l] > 0)
            .any(|l| shape.line_indices(l).any(|v| self.open_neighbors(v, config.is_open(v)) >= theta))
    }
}

/// One synchronous update, computed by counting neighbours directly.
pub fn step(config: &Configuration) -> Configuration {
    let shape = config.shape();
    let theta = shape.theta();
    let mut next = config.clone();
    for v in 0..shape.vertex_count() {
        if config.is_open(v) {
            continue;
        }
        let open = shape.neighbors(v).filter(|&w| config.is_open(w)).count();
        if open >= theta {
            next.set_open(v);
        }
    }
    next
}

/// Some vertex has at least `theta` initially open neighbours.
pub fn above_threshold(config: &Configuration) -> bool {
    LineCounters::from_config(config).any_above_threshold(config)
}

pub fn open_line_exists(config: &Configuration) -> bool {
    LineCounters::from_config(config).any_full_line()
}

pub fn open_plane_exists(config: &Configuration) -> bool {
    LineCounters::from_config(config).any_full_plane()
}

fn generation_cap(shape: &TorusShape) -> usize {
    shape.vertex_count() + 1
}

fn summarize(initial: &Configuration, final_config: Configuration, rounds: usize) -> DynamicsResult {
    let counters = LineCounters::from_config(&final_config);
    summarize_with(initial, final_config, rounds, &counters, above_threshold(initial))
}

fn summarize_with(
    initial: &Configuration,
    final_config: Configuration,
    rounds: usize,
    counters: &LineCounters,
    above: bool,
) -> DynamicsResult {
    let newly_opened = final_config.count_open() - initial.count_open();
    let spanned = final_config.is_full();
    DynamicsResult {
        open_line_found: spanned || counters.any_full_line(),
        open_plane_found: (spanned && initial.shape().d() >= 2) || counters.any_full_plane(),
        spanned,
        newly_opened,
        rounds,
        above_threshold_initial: above,
        final_config,
    }
}

/// Reference engine: repeated [`step`] until a fixed point.
pub fn evolve(config: &Configuration) -> Result<DynamicsResult> {
    let cap = generation_cap(config.shape());
    let mut current = config.clone();
    let mut rounds = 0;
    loop {
        let next = step(&current);
        if next == current {
            break;
        }
        rounds += 1;
        if rounds > cap {
            return Err(Error::Engine(format!("no fixed point after {cap} generations")));
        }
        current = next;
    }
    Ok(summarize(config, current, rounds))
}

/// Knobs for [`evolve_fast_with`].
#[derive(Debug, Clone, Copy)]
pub struct EngineOptions {
    /// Recount every line after each generation and fail on any mismatch.
    pub verify_counters: bool,
}

impl EngineOptions {
    /// Verification on in debug builds for tori of at most `2^16` vertices.
    pub fn default_for(shape: &TorusShape) -> Self {
        EngineOptions { verify_counters: cfg!(debug_assertions) && shape.vertex_count() <= 1 << 16 }
    }
}

/// Line-counter engine; same fixed point and round count as [`evolve`].
pub fn evolve_fast(config: &Configuration) -> Result<DynamicsResult> {
    evolve_fast_with(config, EngineOptions::default_for(config.shape()))
}

pub fn evolve_fast_with(config: &Configuration, opts: EngineOptions) -> Result<DynamicsResult> {
    let shape = *config.shape();
    let d = shape.d();
    let n = shape.n();
    let theta = shape.theta();
    let cap = generation_cap(&shape);

    let mut counters = LineCounters::from_config(config);
    let above = counters.any_above_threshold(config);
    let mut state = config.clone();

    let mut dirty: Vec<usize> = (0..shape.line_count()).filter(|&l| counters.counts[l] > 0).collect();
    let mut next_dirty = Vec::new();
    let mut mark = vec![0u32; shape.line_count()];
    let mut to_open = Vec::new();
    let mut rounds = 0usize;

    if shape.is_degenerate_threshold() {
        dirty.clear();
    }

    while !dirty.is_empty() {
        to_open.clear();
        for &line in &dirty {
            let on_line = counters.counts[line] as usize;
            if on_line == n {
                continue;
            }
            let (start, stride) = shape.line_start(line);
            let axis = shape.line_axis(line);
            for k in 0..n {
                let v = start + k * stride;
                if state.is_open(v) {
                    continue;
                }
                if on_line >= theta {
                    to_open.push(v);
                    continue;
                }
                let mut seen = on_line;
                for ax in (0..d).filter(|&a| a != axis) {
                    seen += counters.counts[shape.line_index(v, ax)] as usize;
                }
                if seen >= theta {
                    to_open.push(v);
                }
            }
        }
        if to_open.is_empty() {
            break;
        }
        rounds += 1;
        if rounds > cap {
            return Err(Error::Engine(format!("no fixed point after {cap} generations")));
        }
        let stamp = rounds as u32;
        next_dirty.clear();
        for &v in &to_open {
            // the same vertex may be found from several dirty lines
            if state.is_open(v) {
                continue;
            }
            state.set_open(v);
            counters.increment(v);
            for ax in 0..d {
                let l = shape.line_index(v, ax);
                if mark[l] != stamp {
                    mark[l] = stamp;
                    next_dirty.push(l);
                }
            }
        }
        std::mem::swap(&mut dirty, &mut next_dirty);
        if opts.verify_counters {
            counters.verify(&state)?;
        }
    }

    Ok(summarize_with(config, state, rounds, &counters, above))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{Vertex, TorusShape};

    fn config(d: usize, n: usize, theta: usize, open: &[&[usize]]) -> Configuration {
        let s = TorusShape::new(d, n, theta).unwrap();
        let vs: Vec<Vertex> = open.iter().map(|c| Vertex(c.to_vec())).collect();
        Configuration::from_vertices(s, &vs).unwrap()
    }

    fn opened_by_step(c: &Configuration) -> Vec<Vertex> {
        let next = step(c);
        next.iter_open().filter(|&i| !c.is_open(i)).map(|i| c.shape().vertex_at(i)).collect()
    }

    #[test]
    fn step_on_empty_is_empty() {
        let c = config(3, 4, 1, &[]);
        assert!(step(&c).is_empty());
    }

    #[test]
    fn step_opens_the_two_corners_of_a_diagonal_pair() {
        let c = config(2, 4, 2, &[&[1, 1], &[2, 2]]);
        let mut got = opened_by_step(&c);
        got.sort();
        assert_eq!(got, vec![Vertex(vec![1, 2]), Vertex(vec![2, 1])]);
    }

    #[test]
    fn step_fills_a_line_from_two_collinear_points() {
        let c = config(2, 4, 2, &[&[1, 1], &[1, 2]]);
        let mut got = opened_by_step(&c);
        got.sort();
        assert_eq!(got, vec![Vertex(vec![1, 3]), Vertex(vec![1, 4])]);
    }

    #[test]
    fn evolve_hand_instances() {
        let c = config(2, 4, 2, &[&[1, 1], &[2, 2]]);
        let r = evolve(&c).unwrap();
        assert!(r.spanned);
        assert_eq!(r, evolve_fast(&c).unwrap());

        let c = config(2, 4, 2, &[&[1, 1], &[1, 2]]);
        let r = evolve(&c).unwrap();
        assert!(!r.spanned);
        assert!(r.open_line_found);
        let expected = config(2, 4, 2, &[&[1, 1], &[1, 2], &[1, 3], &[1, 4]]);
        assert_eq!(r.final_config, expected);
        assert_eq!(r.rounds, 1);
        assert_eq!(r, evolve_fast(&c).unwrap());
    }

    #[test]
    fn full_and_empty_inputs() {
        let s = TorusShape::new(3, 4, 3).unwrap();
        let full = Configuration::full(s);
        for r in [evolve(&full).unwrap(), evolve_fast(&full).unwrap()] {
            assert_eq!(r.rounds, 0);
            assert!(r.spanned && r.open_plane_found && r.open_line_found);
        }
        let empty = Configuration::empty(s);
        let r = evolve_fast(&empty).unwrap();
        assert_eq!(r.rounds, 0);
        assert!(r.final_config.is_empty());
        assert!(!r.above_threshold_initial);
    }

    #[test]
    fn above_threshold_cases() {
        assert!(above_threshold(&config(2, 3, 2, &[&[1, 1], &[2, 2]])));
        assert!(!above_threshold(&config(3, 5, 2, &[&[3, 1, 2]])));
        assert!(above_threshold(&config(3, 5, 1, &[&[3, 1, 2]])));
        // the open vertex itself does not count among its own neighbours
        assert!(!above_threshold(&config(2, 3, 3, &[&[1, 1], &[1, 2], &[1, 3]])));
    }

    #[test]
    fn line_and_plane_queries() {
        let line = config(3, 3, 3, &[&[1, 2, 3], &[2, 2, 3], &[3, 2, 3]]);
        assert!(open_line_exists(&line));
        assert!(!open_plane_exists(&line));

        let s = TorusShape::new(3, 3, 3).unwrap();
        let plane: Vec<usize> = (0..27).filter(|&i| s.coord(i, 1) == 1).collect();
        let plane = Configuration::from_indices(s, plane).unwrap();
        assert!(open_plane_exists(&plane));
        let r = evolve_fast(&plane).unwrap();
        assert!(r.open_plane_found);
        // with theta = 3 a single plane has only 1 open neighbour per outside vertex
        assert!(!r.spanned);

        let sparse = config(3, 5, 2, &[&[1, 1, 1], &[2, 2, 2], &[3, 3, 1]]);
        assert!(!open_line_exists(&sparse));
    }

    #[test]
    fn degenerate_threshold_is_identity() {
        let c = config(2, 3, 5, &[&[1, 1], &[1, 2], &[2, 1], &[2, 2]]);
        let r = evolve_fast(&c).unwrap();
        assert_eq!(r.final_config, c);
        assert_eq!(r, evolve(&c).unwrap());
    }

    #[test]
    fn counters_detect_corruption() {
        let c = config(2, 4, 2, &[&[1, 1], &[2, 2]]);
        let mut k = LineCounters::from_config(&c);
        assert!(k.verify(&c).is_ok());
        k.counts[0] += 1;
        assert!(matches!(k.verify(&c), Err(Error::Engine(_))));
    }
}
