//! Replicated sampling of the initial configuration and estimation of event
//! probabilities.
//!
//! Replica `r` of a run with seed `s` draws from [`replica_rng`]`(s, r)`;
//! outcomes are collected in replica order and reduced sequentially, so a
//! report depends only on its [`ExperimentSpec`] and not on the worker count.

mod exact;
mod poisson;
mod stats;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::Rational;
use crate::detectors::{classify_counts, count_configs, ConfigCounts, GoodClass};
use crate::dynamics::{above_threshold, evolve_fast};
use crate::error::{Error, Result};
use crate::rng::replica_rng;
use crate::torus::{sample_initial, TorusShape};

pub use exact::{engine_battery, exact_probability, EngineBattery, EXACT_VERTEX_LIMIT};
pub use poisson::{basic_expectation, poisson_mean_empirics, PoissonEmpirics, PoissonRow};
pub use stats::{wilson_interval, MeanEstimate};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "HAMMING_BOOT_THREADS";

/// Upper bound on the working memory of one run.
pub const MEMORY_CAP_BYTES: u64 = 16 << 30;

/// How the initial density is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Scaling {
    Raw { p: f64 },
    /// `p = a·n^{-alpha}`.
    Power { a: f64, alpha: Rational },
}

impl Scaling {
    /// Density for side `n`, clamped into `[0, 1]` with a warning if needed.
    pub fn probability(&self, n: usize) -> Result<(f64, Option<String>)> {
        match self {
            Scaling::Raw { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::domain(format!("probability {p} outside [0, 1]")));
                }
                Ok((*p, None))
            }
            Scaling::Power { a, alpha } => {
                if !(a.is_finite() && *a >= 0.0) {
                    return Err(Error::domain(format!("a = {a} must be finite and nonnegative")));
                }
                let p = a * (n as f64).powf(-alpha.to_f64());
                if p > 1.0 {
                    Ok((1.0, Some(format!("a*n^-alpha = {p} exceeds 1 at n = {n}; clamped to 1"))))
                } else {
                    Ok((p, None))
                }
            }
        }
    }

    pub fn a(&self) -> Option<f64> {
        match self {
            Scaling::Raw { .. } => None,
            Scaling::Power { a, .. } => Some(*a),
        }
    }

    pub fn alpha(&self) -> Option<&Rational> {
        match self {
            Scaling::Raw { .. } => None,
            Scaling::Power { alpha, .. } => Some(alpha),
        }
    }
}

/// Quantities a run can estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Spanned,
    OpenLine,
    OpenPlane,
    AboveThreshold,
    Good,
    GoodClassHistogram,
    ConfigCountMeans,
    /// The dynamics opened something but did not span.
    PartialGrowth,
    /// Exactly one of `good` and `spanned` holds.
    GoodSpanMismatch,
}

impl EventKind {
    pub const ALL: [EventKind; 9] = [
        EventKind::Spanned,
        EventKind::OpenLine,
        EventKind::OpenPlane,
        EventKind::AboveThreshold,
        EventKind::Good,
        EventKind::GoodClassHistogram,
        EventKind::ConfigCountMeans,
        EventKind::PartialGrowth,
        EventKind::GoodSpanMismatch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Spanned => "spanned",
            EventKind::OpenLine => "open_line",
            EventKind::OpenPlane => "open_plane",
            EventKind::AboveThreshold => "above_threshold",
            EventKind::Good => "good",
            EventKind::GoodClassHistogram => "good_class_histogram",
            EventKind::ConfigCountMeans => "config_count_means",
            EventKind::PartialGrowth => "partial_growth",
            EventKind::GoodSpanMismatch => "good_span_mismatch",
        }
    }

    /// Yields a yes/no outcome per replica.
    pub fn is_binary(self) -> bool {
        !matches!(self, EventKind::GoodClassHistogram | EventKind::ConfigCountMeans)
    }

    fn needs_dynamics(self) -> bool {
        matches!(
            self,
            EventKind::Spanned
                | EventKind::OpenLine
                | EventKind::OpenPlane
                | EventKind::PartialGrowth
                | EventKind::GoodSpanMismatch
        )
    }

    fn needs_detectors(self) -> bool {
        matches!(
            self,
            EventKind::Good | EventKind::GoodClassHistogram | EventKind::ConfigCountMeans | EventKind::GoodSpanMismatch
        )
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EventKind::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::domain(format!("unknown event kind {s:?}")))
    }
}

/// One Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub shape: TorusShape,
    pub scaling: Scaling,
    pub events: Vec<EventKind>,
    pub replicas: u64,
    pub seed: u64,
    #[serde(default = "default_ci_level")]
    pub ci_level: f64,
}

pub fn default_ci_level() -> f64 {
    0.99
}

impl ExperimentSpec {
    pub fn new(shape: TorusShape, scaling: Scaling, events: Vec<EventKind>, replicas: u64, seed: u64) -> Self {
        ExperimentSpec { shape, scaling, events, replicas, seed, ci_level: default_ci_level() }
    }

    fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::domain("replicas must be at least 1"));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::domain(format!("ci_level {} outside (0, 1)", self.ci_level)));
        }
        if self.events.is_empty() {
            return Err(Error::domain("no events requested"));
        }
        if self.events.iter().any(|e| e.needs_detectors()) && self.shape.d() != 3 {
            return Err(Error::UnsupportedShape(format!(
                "good-configuration events need d = 3, got d = {}",
                self.shape.d()
            )));
        }
        Ok(())
    }

    /// Rough peak working set: per-worker configuration, counters and buffers.
    pub fn memory_estimate(&self, workers: usize) -> u64 {
        let s = &self.shape;
        let bits = s.vertex_count().div_ceil(64) as u64 * 8;
        let lines = s.line_count() as u64 * (4 + 4 + 8);
        let per_worker = 3 * bits + lines + s.vertex_count() as u64 * 8 / 4;
        per_worker * workers.max(1) as u64
    }
}

/// Estimate of one binary event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventEstimate {
    pub event: EventKind,
    pub successes: u64,
    pub replicas: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl EventEstimate {
    pub fn new(event: EventKind, successes: u64, replicas: u64, level: f64) -> Result<Self> {
        let (ci_low, ci_high) = wilson_interval(successes, replicas, level)?;
        Ok(EventEstimate { event, successes, replicas, p_hat: successes as f64 / replicas as f64, ci_low, ci_high })
    }
}

/// Frequencies of the disjoint good classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassHistogram {
    /// Indexed by [`GoodClass::ordinal`].
    pub counts: [u64; 6],
    /// The askew class split by the axis of its single line.
    pub askew_by_axis: [u64; 3],
}

impl ClassHistogram {
    /// Largest pairwise deviation of the three axis counts, in standard
    /// deviations of a difference of two independent Poisson counts.
    pub fn axis_asymmetry_sigma(&self) -> f64 {
        let c = self.askew_by_axis.map(|x| x as f64);
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in i + 1..3 {
                let var = c[i] + c[j];
                if var > 0.0 {
                    worst = worst.max((c[i] - c[j]).abs() / var.sqrt());
                }
            }
        }
        worst
    }
}

/// Means of the configuration counts, totalled over axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigMeans {
    pub basic: MeanEstimate,
    pub enhanced_basic: MeanEstimate,
    pub line: MeanEstimate,
    pub line_empty: MeanEstimate,
    pub enhanced_line: MeanEstimate,
    pub non_enhanced_line: MeanEstimate,
    /// Replicas where `EnhancedLine + NonEnhancedLine != Line`.
    pub identity_violations: u64,
}

impl ConfigMeans {
    fn from_counts(counts: &[ConfigCounts]) -> Self {
        let mean = |f: fn(&ConfigCounts) -> usize| MeanEstimate::from_samples(counts.iter().map(|c| f(c) as f64));
        ConfigMeans {
            basic: mean(|c| c.basic),
            enhanced_basic: mean(|c| c.enhanced_basic),
            line: mean(|c| c.total_line()),
            line_empty: mean(|c| c.total_line_empty()),
            enhanced_line: mean(|c| c.total_enhanced_line()),
            non_enhanced_line: mean(|c| c.total_non_enhanced_line()),
            identity_violations: counts
                .iter()
                .filter(|c| c.total_enhanced_line() + c.total_non_enhanced_line() != c.total_line())
                .count() as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub shape: TorusShape,
    pub p: f64,
    pub a: Option<f64>,
    pub alpha: Option<Rational>,
    pub seed: u64,
    pub replicas: u64,
    pub ci_level: f64,
    pub estimates: Vec<EventEstimate>,
    /// Mean number of generations with a change, when the dynamics ran.
    pub mean_rounds: Option<f64>,
    pub class_histogram: Option<ClassHistogram>,
    pub config_means: Option<ConfigMeans>,
    pub warnings: Vec<String>,
    pub wall_time_secs: f64,
}

impl EstimateReport {
    pub fn estimate(&self, event: EventKind) -> Option<&EventEstimate> {
        self.estimates.iter().find(|e| e.event == event)
    }

    /// Everything except the wall time.
    pub fn same_results(&self, other: &EstimateReport) -> bool {
        let mut a = self.clone();
        a.wall_time_secs = other.wall_time_secs;
        a == *other
    }
}

/// Per-replica outcome.
#[derive(Debug, Clone, Default)]
struct Outcome {
    spanned: bool,
    open_line: bool,
    open_plane: bool,
    above_threshold: bool,
    partial: bool,
    rounds: usize,
    counts: Option<ConfigCounts>,
    class: Option<GoodClass>,
}

impl Outcome {
    fn hit(&self, event: EventKind) -> bool {
        match event {
            EventKind::Spanned => self.spanned,
            EventKind::OpenLine => self.open_line,
            EventKind::OpenPlane => self.open_plane,
            EventKind::AboveThreshold => self.above_threshold,
            EventKind::PartialGrowth => self.partial,
            EventKind::Good => self.class.is_some_and(|c| c.is_good()),
            EventKind::GoodSpanMismatch => self.class.is_some_and(|c| c.is_good()) != self.spanned,
            EventKind::GoodClassHistogram | EventKind::ConfigCountMeans => false,
        }
    }
}

fn simulate_replica(spec: &ExperimentSpec, p: f64, replica: u64, dynamics: bool, detectors: bool) -> Result<Outcome> {
    let mut rng = replica_rng(spec.seed, replica);
    let initial = sample_initial(spec.shape, p, &mut rng)?;
    let mut out = Outcome::default();
    if detectors {
        let counts = count_configs(&initial)?;
        out.class = Some(classify_counts(&counts));
        out.counts = Some(counts);
    }
    if dynamics {
        let result = evolve_fast(&initial)?;
        out.spanned = result.spanned;
        out.open_line = result.open_line_found;
        out.open_plane = result.open_plane_found;
        out.above_threshold = result.above_threshold_initial;
        out.partial = result.stalled();
        out.rounds = result.rounds;
    } else if spec.events.contains(&EventKind::AboveThreshold) {
        out.above_threshold = above_threshold(&initial);
    }
    Ok(out)
}

/// Worker count from [`THREADS_ENV`], or all cores.
pub fn configured_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Run an experiment on [`configured_threads`] workers.
pub fn run(spec: &ExperimentSpec) -> Result<EstimateReport> {
    run_with_threads(spec, configured_threads())
}

pub fn run_with_threads(spec: &ExperimentSpec, threads: usize) -> Result<EstimateReport> {
    let started = Instant::now();
    spec.validate()?;
    let threads = threads.max(1);
    let need = spec.memory_estimate(threads);
    if need > MEMORY_CAP_BYTES {
        return Err(Error::resource(format!(
            "estimated working set {need} bytes exceeds the cap of {MEMORY_CAP_BYTES} bytes"
        )));
    }
    let (p, clamp_warning) = spec.scaling.probability(spec.shape.n())?;
    let mut warnings = spec.shape.warnings();
    warnings.extend(clamp_warning);

    let dynamics = spec.events.iter().any(|e| e.needs_dynamics());
    let detectors = spec.events.iter().any(|e| e.needs_detectors());

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::resource(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Outcome> = pool.install(|| {
        (0..spec.replicas)
            .into_par_iter()
            .map(|r| simulate_replica(spec, p, r, dynamics, detectors))
            .collect::<Result<_>>()
    })?;

    let mut estimates = Vec::new();
    for &event in spec.events.iter().filter(|e| e.is_binary()) {
        let hits = outcomes.iter().filter(|o| o.hit(event)).count() as u64;
        estimates.push(EventEstimate::new(event, hits, spec.replicas, spec.ci_level)?);
    }

    let class_histogram = spec.events.contains(&EventKind::GoodClassHistogram).then(|| {
        let mut counts = [0u64; 6];
        let mut askew_by_axis = [0u64; 3];
        for class in outcomes.iter().filter_map(|o| o.class) {
            counts[class.ordinal()] += 1;
            if let GoodClass::SingleLineWithAskewEmptyLine { axis } = class {
                askew_by_axis[axis - 1] += 1;
            }
        }
        ClassHistogram { counts, askew_by_axis }
    });

    let config_means = spec.events.contains(&EventKind::ConfigCountMeans).then(|| {
        let counts: Vec<ConfigCounts> = outcomes.iter().filter_map(|o| o.counts).collect();
        ConfigMeans::from_counts(&counts)
    });

    let mean_rounds =
        dynamics.then(|| outcomes.iter().map(|o| o.rounds as f64).sum::<f64>() / spec.replicas as f64);

    Ok(EstimateReport {
        shape: spec.shape,
        p,
        a: spec.scaling.a(),
        alpha: spec.scaling.alpha().cloned(),
        seed: spec.seed,
        replicas: spec.replicas,
        ci_level: spec.ci_level,
        estimates,
        mean_rounds,
        class_histogram,
        config_means,
        warnings,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

/// Grid of a sweep; an empty axis keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub a: Vec<f64>,
    #[serde(default)]
    pub alpha: Vec<Rational>,
}

/// One grid point, in sweep order (`n` outermost, then `alpha`, then `a`).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub n: usize,
    pub scaling: Scaling,
}

impl SweepGrid {
    pub fn points(&self, base: &ExperimentSpec) -> Result<Vec<SweepPoint>> {
        let ns = if self.n.is_empty() { vec![base.shape.n()] } else { self.n.clone() };
        let scalings: Vec<Scaling> = match &base.scaling {
            Scaling::Raw { .. } if !self.a.is_empty() || !self.alpha.is_empty() => {
                return Err(Error::domain("a sweep over a or alpha needs a power-law base scaling"));
            }
            Scaling::Raw { .. } => vec![base.scaling.clone()],
            Scaling::Power { a, alpha } => {
                let alphas = if self.alpha.is_empty() { vec![alpha.clone()] } else { self.alpha.clone() };
                let as_ = if self.a.is_empty() { vec![*a] } else { self.a.clone() };
                alphas
                    .iter()
                    .flat_map(|al| as_.iter().map(move |&a| Scaling::Power { a, alpha: al.clone() }))
                    .collect()
            }
        };
        Ok(ns.iter().flat_map(|&n| scalings.iter().map(move |s| SweepPoint { n, scaling: s.clone() })).collect())
    }
}

/// Run every grid point in order, handing each result to `on_point` as soon
/// as it is available. A failing point is reported and the sweep continues.
pub fn sweep(
    base: &ExperimentSpec,
    grid: &SweepGrid,
    mut on_point: impl FnMut(&SweepPoint, &Result<EstimateReport>),
) -> Result<Vec<(SweepPoint, Result<EstimateReport>)>> {
    let points = grid.points(base)?;
    let mut out = Vec::with_capacity(points.len());
    for point in points {
        let result = TorusShape::new(base.shape.d(), point.n, base.shape.theta()).and_then(|shape| {
            let spec = ExperimentSpec { shape, scaling: point.scaling.clone(), ..base.clone() };
            run(&spec)
        });
        on_point(&point, &result);
        out.push((point, result));
    }
    Ok(out)
}
