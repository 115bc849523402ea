//! Closed-form limits, Poisson means and critical-exponent bounds.

mod exponents;
mod limits;
mod rational;

pub use exponents::{
    beta, epl_exponent_bounds, exponent_bounds, exponent_table, figure_data, lower_exponent, upper_exponent,
    BoundType, EplBounds, ExponentBounds, FigurePoint, UpperSource,
};
pub use limits::{good_probability_limit, good_terms, limit_2d, limit_3d_theta3, poisson_means, PoissonMeans};
pub use rational::Rational;
