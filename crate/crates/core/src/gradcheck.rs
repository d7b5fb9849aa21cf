//! Central finite differences for checking analytic gradients.

pub const DEFAULT_STEP: f64 = 1e-6;
/// Floor on the relative-error denominator, so gradients much smaller than
/// one are judged by absolute error.
pub const ABS_FLOOR: f64 = 1e-3;

/// Numeric partial derivatives of `f` at `x` for the listed coordinates.
pub fn central_differences<F>(mut f: F, x: &[f64], indices: &[usize], step: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    indices
        .iter()
        .map(|&i| {
            let orig = probe[i];
            probe[i] = orig + step;
            let up = f(&probe);
            probe[i] = orig - step;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// `|a - n| / max(|a|, |n|, ABS_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(ABS_FLOOR);
    (analytic - numeric).abs() / scale
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheck {
    pub max_rel_err: f64,
    pub checked: usize,
}

/// Compare `analytic[i]` against a central difference of `f` for every
/// listed index.
pub fn check<F>(f: F, x: &[f64], analytic: &[f64], indices: &[usize], step: f64) -> GradCheck
where
    F: FnMut(&[f64]) -> f64,
{
    let numeric = central_differences(f, x, indices, step);
    let max_rel_err = indices
        .iter()
        .zip(&numeric)
        .map(|(&i, &n)| relative_error(analytic[i], n))
        .fold(0.0, f64::max);
    GradCheck {
        max_rel_err,
        checked: indices.len(),
    }
}

/// All indices when `len <= limit`, otherwise `limit` evenly spread ones.
pub fn spread_indices(len: usize, limit: usize) -> Vec<usize> {
    if len <= limit {
        (0..len).collect()
    } else {
        (0..limit).map(|i| i * len / limit).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let x = [1.0, -2.0, 0.5];
        let f = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
        let analytic: Vec<f64> = x.iter().map(|a| 2.0 * a).collect();
        let r = check(f, &x, &analytic, &[0, 1, 2], DEFAULT_STEP);
        assert!(r.max_rel_err < 1e-8);
        assert_eq!(r.checked, 3);
    }

    #[test]
    fn floor_and_spread() {
        assert!(relative_error(1e-10, -1e-10) < 1e-6);
        assert!((relative_error(1.0, 0.5) - 0.5).abs() < 1e-15);
        assert_eq!(spread_indices(3, 10), vec![0, 1, 2]);
        assert_eq!(spread_indices(100, 4), vec![0, 25, 50, 75]);
    }
}
