//! Limiting spanning probabilities at the critical scaling `p = a·n^{-α}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Means of the limiting Poisson counts of the d = 3, θ = 3 events.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonMeans {
    pub lambda_basic: f64,
    pub lambda_enhanced_basic: f64,
    pub lambda_line: f64,
    pub lambda_line_empty_axis: f64,
    pub lambda_non_enhanced_line_axis: f64,
    pub lambda_enhanced_line: f64,
}

fn check_a(a: f64) -> Result<()> {
    if a.is_finite() && a > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("a must be a positive finite number, got {a}")))
    }
}

/// `P(X ≥ 1)` for `X ~ Poisson(lambda)`.
fn at_least_one(lambda: f64) -> f64 {
    -(-lambda).exp_m1()
}

pub fn poisson_means(a: f64) -> Result<PoissonMeans> {
    check_a(a)?;
    let a2 = a * a;
    let a3 = a2 * a;
    let s = (-a).exp() + a * (-3.0 * a).exp();
    let s2 = s * s;
    Ok(PoissonMeans {
        lambda_basic: a3,
        lambda_enhanced_basic: a3 * at_least_one(3.0 * a),
        lambda_line: 1.5 * a2 * at_least_one(2.0 * a),
        lambda_line_empty_axis: 0.5 * a2 * (-2.0 * a).exp(),
        lambda_non_enhanced_line_axis: 0.5 * a2 * (s2 - (-2.0 * a).exp()),
        lambda_enhanced_line: 1.5 * a2 * (1.0 - s2),
    })
}

/// Limit of `P(span)` for d = 2, θ ≥ 3 at `p = a·n^{-(1+1/k)}`, `k = ⌈θ/2⌉`.
pub fn limit_2d(theta: usize, a: f64) -> Result<f64> {
    if theta < 3 {
        return Err(Error::UnsupportedThreshold(format!(
            "the two-dimensional limit needs theta >= 3, got {theta}"
        )));
    }
    check_a(a)?;
    let k = theta.div_ceil(2);
    let factorial: f64 = (1..=k).map(|i| i as f64).product();
    let x = a.powi(k as i32) / factorial;
    Ok(if theta % 2 == 1 {
        at_least_one(2.0 * x)
    } else {
        let q = at_least_one(x);
        q * q
    })
}

/// Limit of `P(span)` for d = 3, θ = 3 at `p = a·n^{-2}`, from the closed form.
pub fn limit_3d_theta3(a: f64) -> Result<f64> {
    check_a(a)?;
    let a2 = a * a;
    let a3 = a2 * a;
    let s = (-a).exp() + a * (-3.0 * a).exp();
    let prefactor = (-a3 - 1.5 * a2 * at_least_one(2.0 * a)).exp();
    let bracket = 1.5 * a2 * (s * s - (-2.0 * a).exp()) * (-a2 * (-2.0 * a).exp()).exp()
        + (a3 * (-3.0 * a).exp()).exp();
    Ok(1.0 - prefactor * bracket)
}

/// The same limit assembled from the five disjoint good-configuration classes.
pub fn good_probability_limit(a: f64) -> Result<f64> {
    let m = poisson_means(a)?;
    Ok(good_terms(&m).iter().sum())
}

/// Limiting probabilities of the five disjoint classes, in decomposition order.
pub fn good_terms(m: &PoissonMeans) -> [f64; 5] {
    let lb = m.lambda_basic;
    let leb = m.lambda_enhanced_basic;
    let ll = m.lambda_line;
    let lel = m.lambda_enhanced_line;
    let nu = m.lambda_non_enhanced_line_axis;
    let mu = m.lambda_line_empty_axis;

    let p_l0 = (-ll).exp();
    let p_l1 = ll * p_l0;
    let p_b0 = (-lb).exp();

    let basic_with_line = at_least_one(lb) * p_l1;
    let enhanced_basic_no_line = at_least_one(leb) * p_l0;
    let two_or_more_lines = 1.0 - p_l0 - p_l1;
    let single_enhanced_line = p_b0 * lel * (-lel).exp() * (-3.0 * nu).exp();
    let askew = 3.0 * p_b0 * nu * (-nu).exp() * (-2.0 * nu).exp() * (-lel).exp() * at_least_one(2.0 * mu);
    [basic_with_line, enhanced_basic_no_line, two_or_more_lines, single_enhanced_line, askew]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_dimensional_examples() {
        assert!((limit_2d(3, 1.0).unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((limit_2d(3, 1.0).unwrap() - 0.632_120_6).abs() < 1e-7);
        assert!((limit_2d(4, 1.0).unwrap() - 0.154_818_1).abs() < 1e-7);
        assert!(limit_2d(4, 1e-6).unwrap() < 1e-20);
        assert!((limit_2d(4, 50.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_dimensional_errors() {
        assert!(matches!(limit_2d(2, 1.0), Err(Error::UnsupportedThreshold(_))));
        assert!(matches!(limit_2d(3, 0.0), Err(Error::Domain(_))));
        assert!(matches!(limit_2d(3, -1.0), Err(Error::Domain(_))));
        assert!(matches!(limit_2d(3, f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn poisson_table_values() {
        let m = poisson_means(1.0).unwrap();
        assert_eq!(m.lambda_basic, 1.0);
        let m = poisson_means(2.0).unwrap();
        assert!((m.lambda_line - 6.0 * (1.0 - (-4.0f64).exp())).abs() < 1e-12);
        assert!((m.lambda_line - 5.8901).abs() < 1e-4);
        for a in [0.1, 0.5, 1.0, 2.0, 3.7] {
            let m = poisson_means(a).unwrap();
            let lhs = m.lambda_enhanced_line + 3.0 * m.lambda_non_enhanced_line_axis;
            assert!((lhs - m.lambda_line).abs() < 1e-12, "a={a}");
            assert!(m.lambda_enhanced_basic <= m.lambda_basic);
            for v in [
                m.lambda_basic,
                m.lambda_enhanced_basic,
                m.lambda_line,
                m.lambda_line_empty_axis,
                m.lambda_non_enhanced_line_axis,
                m.lambda_enhanced_line,
            ] {
                assert!(v >= 0.0);
            }
        }
        assert!(matches!(poisson_means(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn three_dimensional_limits_at_the_ends() {
        assert!(limit_3d_theta3(1e-4).unwrap().abs() < 1e-10);
        assert!(good_probability_limit(1e-4).unwrap().abs() < 1e-10);
        assert!((limit_3d_theta3(12.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(limit_3d_theta3(0.0), Err(Error::Domain(_))));
        assert!(matches!(good_probability_limit(-2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn closed_form_matches_decomposition() {
        for i in 1..=16 {
            let a = 0.25 * i as f64;
            let x = limit_3d_theta3(a).unwrap();
            let y = good_probability_limit(a).unwrap();
            assert!((x - y).abs() < 1e-10, "a={a}: {x} vs {y}");
        }
    }

    #[test]
    fn limits_increase_in_a() {
        let mut prev = [0.0f64; 3];
        for i in 1..=125 {
            let a = 0.02 * i as f64;
            let cur = [limit_2d(3, a).unwrap(), limit_2d(6, a).unwrap(), limit_3d_theta3(a).unwrap()];
            for j in 0..3 {
                assert!(cur[j] > prev[j], "series {j} at a={a}");
                assert!(cur[j] < 1.0);
            }
            prev = cur;
        }
    }
}
