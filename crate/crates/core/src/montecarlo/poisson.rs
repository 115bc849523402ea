use serde::{Deserialize, Serialize};

use super::{run, EventKind, ExperimentSpec, MeanEstimate, Scaling};
use crate::analytics::{poisson_means, Rational};
use crate::error::{Error, Result};
use crate::torus::TorusShape;

/// Exact `E[Basic]` on `[n]^3`: `n^3 (1 - (1-p)^(n-1))^3`.
pub fn basic_expectation(n: usize, p: f64) -> f64 {
    let nf = n as f64;
    let q = -((n - 1) as f64 * (-p).ln_1p()).exp_m1();
    nf * nf * nf * q * q * q
}

/// One counting variable: empirical mean against its limit and, where
/// available, its exact finite-`n` expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonRow {
    pub quantity: String,
    pub empirical: MeanEstimate,
    pub limit: f64,
    pub finite_n: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonEmpirics {
    pub n: usize,
    pub a: f64,
    pub p: f64,
    pub replicas: u64,
    pub rows: Vec<PoissonRow>,
    /// Replicas violating `EnhancedLine + NonEnhancedLine = Line`.
    pub identity_violations: u64,
}

/// Empirical configuration-count means at `p = a·n^{-2}` on `[n]^3`.
pub fn poisson_mean_empirics(shape: TorusShape, a: f64, replicas: u64, seed: u64) -> Result<PoissonEmpirics> {
    if shape.d() != 3 {
        return Err(Error::UnsupportedShape(format!("Poisson empirics need d = 3, got d = {}", shape.d())));
    }
    let limits = poisson_means(a)?;
    let spec = ExperimentSpec::new(
        shape,
        Scaling::Power { a, alpha: Rational::from_integer(2) },
        vec![EventKind::ConfigCountMeans],
        replicas,
        seed,
    );
    let report = run(&spec)?;
    let means = report.config_means.expect("requested");
    let p = report.p;
    let row = |quantity: &str, empirical: MeanEstimate, limit: f64, finite_n: Option<f64>| PoissonRow {
        quantity: quantity.to_string(),
        empirical,
        limit,
        finite_n,
    };
    Ok(PoissonEmpirics {
        n: shape.n(),
        a,
        p,
        replicas,
        rows: vec![
            row("basic", means.basic, limits.lambda_basic, Some(basic_expectation(shape.n(), p))),
            row("enhanced_basic", means.enhanced_basic, limits.lambda_enhanced_basic, None),
            row("line", means.line, limits.lambda_line, None),
            row("line_empty", means.line_empty, 3.0 * limits.lambda_line_empty_axis, None),
            row("enhanced_line", means.enhanced_line, limits.lambda_enhanced_line, None),
            row("non_enhanced_line", means.non_enhanced_line, 3.0 * limits.lambda_non_enhanced_line_axis, None),
        ],
        identity_violations: means.identity_violations,
    })
}
