/// Derivative of the least-squares quadratic through `values` (sampled at
/// t = 0..w-1), evaluated at the window midpoint t = (w-1)/2.
///
/// With centered time u = t - (w-1)/2 the grid is symmetric, so u is
/// orthogonal to both 1 and u². The fitted quadratic's linear coefficient in
/// u, which is its derivative at u = 0, is therefore Σ u·y / Σ u², and the
/// fit never needs the full 3x3 solve. For w = 2, or any rank-deficient
/// design, this is the linear least-squares slope.
pub fn trend_derivative(values: &[f64]) -> f64 {
    let w = values.len();
    if w < 2 {
        return 0.0;
    }
    let mid = (w - 1) as f64 / 2.0;
    let (mut num, mut den) = (0.0, 0.0);
    for (t, &y) in values.iter().enumerate() {
        let u = t as f64 - mid;
        num += u * y;
        den += u * u;
    }
    num / den
}

/// Endpoint difference over the window: current value minus the value
/// `w - 1` steps back. Negative means the value decreased.
pub fn velocity_change(values: &[f64]) -> Option<f64> {
    match values {
        [first, .., last] => Some(last - first),
        _ => None,
    }
}
