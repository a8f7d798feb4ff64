//! Correlation between aggregate metrics.

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorrelationError {
    #[error("series lengths differ ({0} vs {1})")]
    Length(usize, usize),
    #[error("need at least two points, got {0}")]
    TooFew(usize),
    #[error("a series has zero variance")]
    ZeroVariance,
    #[error("non-finite value in input")]
    NonFinite,
}

/// Sample Pearson correlation, clamped to [-1, 1] against rounding.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64, CorrelationError> {
    if x.len() != y.len() {
        return Err(CorrelationError::Length(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(CorrelationError::TooFew(x.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(CorrelationError::NonFinite);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(CorrelationError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_lines() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        assert!((pearson_r(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson_r(&[1.0, 2.0, 3.0], &[6.0, 4.0, 2.0]).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(pearson_r(&[1.0, 1.0], &[1.0, 2.0]), Err(CorrelationError::ZeroVariance));
        assert_eq!(pearson_r(&[1.0], &[1.0]), Err(CorrelationError::TooFew(1)));
        assert_eq!(pearson_r(&[1.0, 2.0], &[1.0]), Err(CorrelationError::Length(2, 1)));
    }
}
