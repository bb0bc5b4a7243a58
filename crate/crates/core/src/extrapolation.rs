//! Least-squares fit of `J_h = J* + c·h^p`.

use crate::error::{Error, Result};

pub const P_RANGE: (f64, f64) = (0.1, 4.0);
const SCAN_POINTS: usize = 391;
const GOLDEN_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub j_star: f64,
    pub c: f64,
    pub p: f64,
    /// Euclidean norm of the fit residuals.
    pub residual: f64,
    /// False when the data carry no information about `p` (for example `c = 0`).
    pub p_identifiable: bool,
    /// False when the optimum sits on the boundary of the `p` range.
    pub converged: bool,
}

/// `(J*, c, residual norm)` for a fixed exponent.
fn profile(pairs: &[(f64, f64)], p: f64) -> (f64, f64, f64) {
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|(h, _)| h.powf(p)).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let jm = pairs.iter().map(|(_, j)| j).sum::<f64>() / n;
    let (mut sxx, mut sxj) = (0.0, 0.0);
    for (x, (_, j)) in xs.iter().zip(pairs) {
        sxx += (x - xm) * (x - xm);
        sxj += (x - xm) * (j - jm);
    }
    let c = if sxx > 0.0 { sxj / sxx } else { 0.0 };
    let j_star = jm - c * xm;
    let res = xs.iter().zip(pairs).map(|(x, (_, j))| (j_star + c * x - j).powi(2)).sum::<f64>().sqrt();
    (j_star, c, res)
}

/// Fits `(J*, c, p)` to pairs `(h, J_h)`: linear least squares in `(J*, c)`
/// for each `p`, and a scan plus golden-section search over `p ∈ [0.1, 4]`.
pub fn fit_extrapolation(pairs: &[(f64, f64)]) -> Result<FitResult> {
    if pairs.len() < 3 {
        return Err(Error::InvalidArgument(format!("fit needs at least 3 pairs, got {}", pairs.len())));
    }
    if pairs.iter().any(|(h, j)| !(*h > 0.0) || !h.is_finite() || !j.is_finite()) {
        return Err(Error::InvalidArgument("fit needs finite data with h > 0".into()));
    }
    let mut hs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    hs.sort_by(f64::total_cmp);
    if hs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("fit needs distinct mesh sizes".into()));
    }
    let (lo, hi) = P_RANGE;
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let scan: Vec<f64> = (0..SCAN_POINTS).map(|i| profile(pairs, lo + step * i as f64).2).collect();
    let best = (0..SCAN_POINTS).min_by(|&a, &b| scan[a].total_cmp(&scan[b])).unwrap();
    let scale = pairs.iter().map(|(_, j)| j.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let spread = scan.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - scan[best];
    if spread <= 1e-13 * scale {
        let (j_star, c, residual) = profile(pairs, 1.0);
        return Ok(FitResult { j_star, c, p: 1.0, residual, p_identifiable: false, converged: true });
    }
    let mut a = lo + step * best.saturating_sub(1) as f64;
    let mut b = (lo + step * (best + 1) as f64).min(hi);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (profile(pairs, x1).2, profile(pairs, x2).2);
    for _ in 0..GOLDEN_ITERATIONS {
        if b - a <= 1e-15 * b.abs().max(1.0) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = profile(pairs, x1).2;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = profile(pairs, x2).2;
        }
    }
    let p = if f1 <= f2 { x1 } else { x2 };
    let (j_star, c, residual) = profile(pairs, p);
    let converged = p > lo + 1e-9 && p < hi - 1e-9;
    Ok(FitResult { j_star, c, p, residual, p_identifiable: true, converged })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(j: f64, c: f64, p: f64, levels: std::ops::RangeInclusive<i32>) -> Vec<(f64, f64)> {
        levels.map(|l| {
            let h = 2f64.powi(-l);
            (h, j + c * h.powf(p))
        })
        .collect()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn recovers_reference_constants() {
        let f = fit_extrapolation(&synthetic(1.8399, 1.7645, 1.0484, 2..=10)).unwrap();
        assert!(rel(f.j_star, 1.8399) < 1e-6 && rel(f.c, 1.7645) < 1e-6 && rel(f.p, 1.0484) < 1e-6, "{f:?}");
        assert!(f.p_identifiable && f.converged);
    }

    #[test]
    fn constant_data_is_degenerate() {
        let pairs: Vec<(f64, f64)> = (2..8).map(|l| (2f64.powi(-l), 5.0)).collect();
        let f = fit_extrapolation(&pairs).unwrap();
        assert_eq!((f.j_star, f.c), (5.0, 0.0));
        assert!(!f.p_identifiable);
    }

    #[test]
    fn negative_coefficient() {
        let f = fit_extrapolation(&synthetic(3.0, -0.5, 2.0, 1..=6)).unwrap();
        assert!(rel(f.j_star, 3.0) < 1e-8 && rel(f.c, -0.5) < 1e-8 && rel(f.p, 2.0) < 1e-8, "{f:?}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_extrapolation(&[(0.5, 1.0), (0.25, 1.0)]).is_err());
        assert!(fit_extrapolation(&[(0.5, 1.0), (0.5, 2.0), (0.25, 1.0)]).is_err());
    }
}
