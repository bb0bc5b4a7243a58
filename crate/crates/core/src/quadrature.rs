//! Gauss–Legendre rules on the unit interval and unit square.

/// One-dimensional Gauss–Legendre rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// `n`-point rule, exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a Gauss rule needs at least one point");
        let mut points = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            // Newton iteration on P_n starting from the Chebyshev-like guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            points[n - 1 - i] = 0.5 * (x + 1.0);
            weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points and weights mapped to `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let len = b - a;
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (a + len * t, w * len))
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Tensor-product rule on the unit square. Point `q = b * n + a` sits at
/// `(points[a], points[b])`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareRule {
    pub line: GaussRule,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl SquareRule {
    pub fn new(n: usize) -> Self {
        let line = GaussRule::new(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for b in 0..n {
            for a in 0..n {
                points.push([line.points[a], line.points[b]]);
                weights.push(line.weights[a] * line.weights[b]);
            }
        }
        Self { line, points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one_and_points_are_symmetric() {
        for n in 1..=8 {
            let r = GaussRule::new(n);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-14, "n = {n}");
            for i in 0..n {
                assert!((r.points[i] + r.points[n - 1 - i] - 1.0).abs() < 1e-14);
            }
            assert!(r.points.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn degree_of_exactness() {
        for n in 1..=6 {
            let r = GaussRule::new(n);
            for deg in 0..(2 * n) {
                let q: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = 1.0 / (deg as f64 + 1.0);
                assert!((q - exact).abs() < 1e-14, "n = {n}, degree {deg}");
            }
        }
    }

    #[test]
    fn three_point_square_rule_integrates_biquartic() {
        let rule = SquareRule::new(3);
        // x^4 y^4 + 3 x^3 y - x^2 y^4 + 2
        let f = |x: f64, y: f64| x.powi(4) * y.powi(4) + 3.0 * x.powi(3) * y - x * x * y.powi(4) + 2.0;
        let exact = 1.0 / 25.0 + 3.0 / 8.0 - 1.0 / 15.0 + 2.0;
        let q: f64 = rule.points.iter().zip(&rule.weights).map(|(p, w)| w * f(p[0], p[1])).sum();
        assert!(((q - exact) / exact).abs() < 1e-12);
    }
}
