//! Critical-exponent bounds for `p ≍ n^{-α}`.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::rational::Rational;
use crate::error::{Error, Result};

/// Which bound produced an upper exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpperSource {
    LineThreshold,
    PlaneObstructionOdd,
    PlaneObstructionEven,
}

impl UpperSource {
    pub fn as_str(self) -> &'static str {
        match self {
            UpperSource::LineThreshold => "line-threshold",
            UpperSource::PlaneObstructionOdd => "plane-obstruction-odd",
            UpperSource::PlaneObstructionEven => "plane-obstruction-even",
        }
    }
}

impl fmt::Display for UpperSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentBounds {
    pub d: usize,
    pub theta: usize,
    pub lower: Rational,
    pub upper: Rational,
    pub upper_source: UpperSource,
}

/// Real-valued exponents bracketing the critical probability for an open line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EplBounds {
    /// `p_c ≥ n^{-lower_exponent}`.
    pub lower_exponent: f64,
    /// `p_c ≤ n^{-upper_exponent}`.
    pub upper_exponent: f64,
    /// False when θ is below the range where the bounds are known to hold.
    pub theta_sufficient: bool,
}

fn check_valid(d: usize, theta: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::Domain(format!("d must be at least 2, got {d}")));
    }
    if theta < 2 {
        return Err(Error::UnsupportedThreshold(format!("theta must be at least 2, got {theta}")));
    }
    Ok(())
}

fn int(v: usize) -> Rational {
    Rational::from_integer(v as i64)
}

/// Coefficients of the odd/even β formula: `β = α·K + a(a+1) − α·a(a−1) − C`.
fn beta_constants(theta: usize) -> (usize, Rational, Rational) {
    let k = theta.div_ceil(2);
    if theta % 2 == 1 {
        (k, int(k * k), int((k + 1) * (k + 1)))
    } else {
        (k, int(k * (k + 1)), int((k + 1) * (k + 2)))
    }
}

/// `1 + 1/k`, the point where β starts to be positive.
fn beta_threshold(k: usize) -> Rational {
    Rational::one() + Rational::new(1, k as i64)
}

/// Exponent after collapsing two dimensions of an `n^{-α}` configuration.
pub fn beta(theta: usize, alpha: &Rational) -> Result<Rational> {
    if theta < 3 {
        return Err(Error::UnsupportedThreshold(format!("beta needs theta >= 3, got {theta}")));
    }
    let (k, big_k, big_c) = beta_constants(theta);
    if *alpha <= beta_threshold(k) {
        return Ok(Rational::zero());
    }
    let one = Rational::one();
    let a = (alpha / &(alpha - &one)).floor();
    let a_plus = &a + &one;
    let a_minus = &a - &one;
    Ok(alpha * &big_k + &a * &a_plus - alpha * &(&a * &a_minus) - big_c)
}

/// The unique `α > 1 + 1/k` with `β(α) = y`, for `y > 0`.
fn beta_inverse(theta: usize, y: &Rational) -> Rational {
    let (k, big_k, big_c) = beta_constants(theta);
    for a in 1..=k {
        let slope = &big_k - &int(a * (a - 1));
        let alpha = (y - &int(a * (a + 1)) + big_c.clone()) / slope;
        let lo = Rational::new(a as i64 + 1, a as i64);
        let in_piece = if a == 1 {
            alpha > lo
        } else {
            alpha > lo && alpha <= Rational::new(a as i64, a as i64 - 1)
        };
        if in_piece {
            return alpha;
        }
    }
    unreachable!("beta is a continuous increasing bijection onto (0, inf)")
}

/// Lower bound on the critical exponent from dimension reduction.
///
/// Strategies apply β some number of times and finish with either the
/// one-dimensional rule (exponent below 1) or the two-dimensional rule
/// (exponent below `1 + 1/k`). The result never exceeds `1 + d/θ`.
pub fn lower_exponent(d: usize, theta: usize) -> Result<Rational> {
    check_valid(d, theta)?;
    let line_threshold = Rational::one() + Rational::new(d as i64, theta as i64);
    if theta == 2 {
        return Ok(line_threshold);
    }
    let k = theta.div_ceil(2);
    let mut best: Option<Rational> = None;
    for steps in 0..=d / 2 {
        let remaining = d - 2 * steps;
        let target = match remaining {
            1 => Rational::one(),
            2 => beta_threshold(k),
            _ => continue,
        };
        let alpha = (0..steps).fold(target, |y, _| beta_inverse(theta, &y));
        best = Some(match best {
            Some(b) if b >= alpha => b,
            _ => alpha,
        });
    }
    let best = best.expect("every d >= 2 admits a strategy");
    Ok(best.min(line_threshold))
}

/// Upper bound on the critical exponent and the bound responsible for it.
///
/// Ties go to the line threshold.
pub fn upper_exponent(d: usize, theta: usize) -> Result<(Rational, UpperSource)> {
    check_valid(d, theta)?;
    let line_threshold = Rational::one() + Rational::new(d as i64, theta as i64);
    if d == 3 && theta >= 4 {
        let (den, source) = if theta % 2 == 1 {
            (3 * theta - 1, UpperSource::PlaneObstructionOdd)
        } else {
            (3 * theta - 2, UpperSource::PlaneObstructionEven)
        };
        let plane = Rational::one() + Rational::new(8, den as i64);
        if plane < line_threshold {
            return Ok((plane, source));
        }
    }
    Ok((line_threshold, UpperSource::LineThreshold))
}

pub fn exponent_bounds(d: usize, theta: usize) -> Result<ExponentBounds> {
    let lower = lower_exponent(d, theta)?;
    let (upper, upper_source) = upper_exponent(d, theta)?;
    Ok(ExponentBounds { d, theta, lower, upper, upper_source })
}

pub fn exponent_table(d: usize, thetas: impl IntoIterator<Item = usize>) -> Result<Vec<ExponentBounds>> {
    thetas.into_iter().map(|theta| exponent_bounds(d, theta)).collect()
}

pub fn epl_exponent_bounds(d: usize, theta: usize) -> Result<EplBounds> {
    if d < 3 {
        return Err(Error::Domain(format!("open-line bounds need d >= 3, got {d}")));
    }
    if theta < 1 {
        return Err(Error::UnsupportedThreshold("theta must be at least 1".into()));
    }
    let t = theta as f64;
    let df = d as f64;
    let base = 1.0 + 2.0 / t;
    let t32 = t.powf(1.5);
    Ok(EplBounds {
        lower_exponent: base + (4.0 * df * df + 3.0) / t32,
        upper_exponent: base + (8.0 * (df - 2.1)).sqrt() / t32,
        theta_sufficient: t >= 650.0 * (df - 2.1),
    })
}

/// Kind of a figure series point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundType {
    Lower,
    Upper,
    Beta,
}

impl BoundType {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundType::Lower => "lower",
            BoundType::Upper => "upper",
            BoundType::Beta => "beta",
        }
    }
}

/// One point of a figure series; `alpha` is set only on β curves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FigurePoint {
    pub theta: usize,
    pub alpha: Option<f64>,
    pub bound_type: BoundType,
    pub value: f64,
}

/// Lower/upper exponent series over θ, plus β(α) curves over `alphas` for θ ≥ 3.
pub fn figure_data(
    d: usize,
    thetas: impl IntoIterator<Item = usize>,
    alphas: &[Rational],
) -> Result<Vec<FigurePoint>> {
    let mut out = Vec::new();
    for theta in thetas {
        let bounds = exponent_bounds(d, theta)?;
        out.push(FigurePoint { theta, alpha: None, bound_type: BoundType::Lower, value: bounds.lower.to_f64() });
        out.push(FigurePoint { theta, alpha: None, bound_type: BoundType::Upper, value: bounds.upper.to_f64() });
        if theta >= 3 {
            for alpha in alphas {
                out.push(FigurePoint {
                    theta,
                    alpha: Some(alpha.to_f64()),
                    bound_type: BoundType::Beta,
                    value: beta(theta, alpha)?.to_f64(),
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta(3, &r(2, 1)).unwrap(), r(1, 1));
        assert_eq!(beta(4, &r(7, 4)).unwrap(), r(1, 1));
        for theta in 3..=15usize {
            let k = theta.div_ceil(2) as i64;
            assert_eq!(beta(theta, &r(k + 1, k)).unwrap(), Rational::zero(), "theta={theta}");
            assert_eq!(beta(theta, &r(11, 10)).unwrap(), Rational::zero());
        }
        assert!(matches!(beta(2, &r(3, 2)), Err(Error::UnsupportedThreshold(_))));
    }

    #[test]
    fn beta_four_alpha_minus_six_on_its_piece() {
        // a = 2 on (3/2, 2].
        for (n, d) in [(8, 5), (7, 4), (9, 5)] {
            let alpha = r(n, d);
            assert_eq!(beta(4, &alpha).unwrap(), &(&alpha * &r(4, 1)) - &r(6, 1));
        }
    }

    #[test]
    fn beta_inverse_roundtrips() {
        for theta in 3..=12 {
            for (n, d) in [(1, 7), (1, 2), (1, 1), (4, 3), (2, 1), (7, 2)] {
                let y = r(n, d);
                let alpha = beta_inverse(theta, &y);
                assert_eq!(beta(theta, &alpha).unwrap(), y, "theta={theta} y={y}");
            }
        }
    }

    #[test]
    fn table_for_d3() {
        let lower = [
            r(5, 2), r(2, 1), r(7, 4), r(11, 7), r(3, 2), r(7, 5), r(19, 14), r(17, 13), r(23, 18), r(5, 4), r(27, 22),
        ];
        let upper = [
            r(5, 2), r(2, 1), r(7, 4), r(11, 7), r(3, 2), r(7, 5), r(15, 11), r(17, 13), r(9, 7), r(5, 4), r(21, 17),
        ];
        for (i, theta) in (2..=12).enumerate() {
            let b = exponent_bounds(3, theta).unwrap();
            assert_eq!(b.lower, lower[i], "lower theta={theta}");
            assert_eq!(b.upper, upper[i], "upper theta={theta}");
        }
    }

    #[test]
    fn upper_sources() {
        assert_eq!(upper_exponent(3, 8).unwrap(), (r(15, 11), UpperSource::PlaneObstructionEven));
        assert_eq!(upper_exponent(3, 5).unwrap(), (r(11, 7), UpperSource::PlaneObstructionOdd));
        assert_eq!(upper_exponent(3, 3).unwrap(), (r(2, 1), UpperSource::LineThreshold));
        assert_eq!(upper_exponent(3, 6).unwrap(), (r(3, 2), UpperSource::LineThreshold));
        assert_eq!(upper_exponent(4, 8).unwrap(), (r(3, 2), UpperSource::LineThreshold));
    }

    #[test]
    fn known_exponents_are_exactly_the_tight_ones() {
        let tight: Vec<usize> = (2..=20)
            .filter(|&t| {
                let b = exponent_bounds(3, t).unwrap();
                assert!(b.lower <= b.upper, "theta={t}");
                b.lower == b.upper
            })
            .collect();
        assert_eq!(tight, vec![2, 3, 4, 5, 6, 7, 9, 11]);
    }

    #[test]
    fn two_dimensional_lower_is_one_plus_one_over_k() {
        for theta in 3..=12usize {
            let k = theta.div_ceil(2) as i64;
            assert_eq!(lower_exponent(2, theta).unwrap(), r(k + 1, k));
        }
    }

    #[test]
    fn bounds_decrease_towards_one() {
        for d in 3..=6 {
            let table = exponent_table(d, 2..=60).unwrap();
            for w in table.windows(2) {
                assert!(w[1].lower <= w[0].lower, "d={d} theta={}", w[1].theta);
                assert!(w[1].upper <= w[0].upper, "d={d} theta={}", w[1].theta);
            }
            let last = table.last().unwrap();
            assert!(last.lower > Rational::one());
            assert!(last.upper.to_f64() < 1.0 + d as f64 / 50.0);
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(lower_exponent(1, 3).is_err());
        assert!(upper_exponent(3, 1).is_err());
        assert!(matches!(epl_exponent_bounds(2, 10), Err(Error::Domain(_))));
    }

    #[test]
    fn epl_bounds() {
        let b = epl_exponent_bounds(3, 100).unwrap();
        assert!((b.upper_exponent - (1.02 + 7.2f64.sqrt() / 1000.0)).abs() < 1e-14);
        assert!((b.lower_exponent - (1.02 + 39.0 / 1000.0)).abs() < 1e-14);
        assert!(!b.theta_sufficient);
        assert!(epl_exponent_bounds(3, 585).unwrap().theta_sufficient);
        for d in 3..=8 {
            for theta in 1..=2000 {
                let b = epl_exponent_bounds(d, theta).unwrap();
                assert!(b.lower_exponent >= b.upper_exponent);
            }
        }
        let far = epl_exponent_bounds(3, 1_000_000).unwrap();
        assert!(far.lower_exponent - 1.0 < 1e-4);
    }

    #[test]
    fn figure_rows() {
        let alphas = [r(3, 2), r(2, 1)];
        let pts = figure_data(3, 2..=4, &alphas).unwrap();
        assert_eq!(pts.len(), 2 + 4 + 4);
        assert_eq!(pts[0].bound_type, BoundType::Lower);
        assert_eq!(pts[0].value, 2.5);
        assert_eq!(pts[4].alpha, Some(1.5));
        assert_eq!(pts[5].value, 1.0);
    }
}
