//! Least-squares exponent extraction for scaling studies.

use lindblad_core::{Result, SimError};

/// Result of a straight-line fit in transformed coordinates.
#[derive(Debug, Clone)]
pub struct SlopeFit {
    /// The transformed points the line was fitted to.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination in the transformed coordinates,
    /// clamped to [0, 1].
    pub r_squared: f64,
}

fn least_squares(points: Vec<(f64, f64)>) -> SlopeFit {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    SlopeFit {
        points,
        slope,
        intercept,
        r_squared,
    }
}

fn check_points(points: &[(f64, f64)], need_positive_x: bool) -> Result<()> {
    if points.len() < 4 {
        return Err(SimError::Input(format!(
            "slope fit: need at least 4 points, got {}",
            points.len()
        )));
    }
    for &(x, y) in points {
        if !x.is_finite() || !y.is_finite() {
            return Err(SimError::Input("slope fit: points must be finite".into()));
        }
        if (need_positive_x && x <= 0.0) || y <= 0.0 {
            return Err(SimError::Input(format!(
                "slope fit: nonpositive value at ({x}, {y})"
            )));
        }
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 2 {
        return Err(SimError::Input(
            "slope fit: need at least 2 distinct x values".into(),
        ));
    }
    Ok(())
}

/// Fit `y = c * x^slope` by least squares on `(ln x, ln y)`.
/// Requires at least 4 strictly positive points.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    check_points(points, true)?;
    Ok(least_squares(
        points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect(),
    ))
}

/// Fit `y = c * e^{slope * x}` by least squares on `(x, ln y)`.
/// `x` may be any finite value; `y` must be positive.
pub fn fit_semilog_rate(points: &[(f64, f64)]) -> Result<SlopeFit> {
    check_points(points, false)?;
    Ok(least_squares(
        points.iter().map(|&(x, y)| (x, y.ln())).collect(),
    ))
}
