use crate::error::{Error, Result};

/// Default denominator floor of [`relative_error`].
pub const RELATIVE_FLOOR: f64 = 1e-8;

/// `|a - n| / max(|a|, |n|, 1e-8)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    relative_error_floored(analytic, numeric, RELATIVE_FLOOR)
}

/// `|a - n| / max(|a|, |n|, floor)`. The floor keeps gradients that sit at
/// the finite-difference rounding level (about `ulp(f) / eps`) from
/// dominating the maximum.
pub fn relative_error_floored(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Central differences `(f(x+ε) - f(x-ε)) / 2ε` for every coordinate.
pub fn central_difference<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], eps: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + eps;
            let plus = f(&probe);
            probe[i] = x[i] - eps;
            let minus = f(&probe);
            probe[i] = x[i];
            (plus - minus) / (2.0 * eps)
        })
        .collect()
}

/// Largest relative error between `analytic` and the central-difference
/// gradient of `f` at `x`.
pub fn gradient_check<F: FnMut(&[f64]) -> f64>(f: F, x: &[f64], analytic: &[f64], eps: f64) -> Result<f64> {
    gradient_check_floored(f, x, analytic, eps, RELATIVE_FLOOR)
}

/// Smallest gradient magnitude central differences can resolve to a relative
/// `tolerance`: rounding in `f` (about `ε·|f|` per evaluation, with a margin
/// of ten) divided by the step, then by the tolerance.
pub fn resolution_floor(value: f64, eps: f64, tolerance: f64) -> f64 {
    (10.0 * f64::EPSILON * value.abs().max(1.0) / eps / tolerance).max(RELATIVE_FLOOR)
}

/// [`gradient_check`] with an explicit relative-error floor.
pub fn gradient_check_floored<F: FnMut(&[f64]) -> f64>(
    f: F,
    x: &[f64],
    analytic: &[f64],
    eps: f64,
    floor: f64,
) -> Result<f64> {
    if analytic.len() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} analytic gradients for {} coordinates",
            analytic.len(),
            x.len()
        )));
    }
    if analytic.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient("analytic gradient".into()));
    }
    let numeric = central_difference(f, x, eps);
    if numeric.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient("finite-difference gradient".into()));
    }
    Ok(analytic
        .iter()
        .zip(&numeric)
        .map(|(&a, &n)| relative_error_floored(a, n, floor))
        .fold(0.0, f64::max))
}
