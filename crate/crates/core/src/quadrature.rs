//! Periodic trapezoid and Gauss–Legendre rules.

use std::f64::consts::PI;

/// Trapezoid rule for a `period`-periodic integrand on `[start, start + period)`.
///
/// Spectrally accurate for smooth periodic integrands; exact for trigonometric
/// polynomials of degree below `n` (in units of the base frequency).
pub fn periodic_trapezoid<F: Fn(f64) -> f64>(start: f64, period: f64, n: usize, f: F) -> f64 {
    let h = period / n as f64;
    let sum: f64 = (0..n).map(|j| f(start + h * j as f64)).sum();
    sum * h
}

/// Nodes and weights of the n-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule by Newton iteration on `P_n` from the Chebyshev-like
    /// initial guesses, using symmetry to compute only half of the roots.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Composite rule over `panels` equal panels of `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let width = (b - a) / panels as f64;
        let mut total = 0.0;
        for k in 0..panels {
            let lo = a + width * k as f64;
            let hi = if k + 1 == panels { b } else { lo + width };
            total += self.mapped(lo, hi).map(|(x, w)| w * f(x)).sum::<f64>();
        }
        total
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 16, 64] {
            let gl = GaussLegendre::new(n);
            let s: f64 = gl.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}: {s}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let gl = GaussLegendre::new(8);
        for deg in 0..16 {
            let got = gl.integrate(0.0, 1.0, 1, |x| x.powi(deg));
            let want = 1.0 / (deg as f64 + 1.0);
            assert!((got - want).abs() < 1e-14, "deg {deg}: {got} vs {want}");
        }
    }

    #[test]
    fn sixty_four_point_rule_on_smooth_function() {
        let gl = GaussLegendre::new(64);
        let got = gl.integrate(0.3, 2.1, 1, f64::exp);
        assert!((got - (2.1f64.exp() - 0.3f64.exp())).abs() < 1e-13);
        let two_panels = gl.integrate(0.3, 2.1, 2, f64::exp);
        assert!((got - two_panels).abs() < 1e-13);
    }

    #[test]
    fn trapezoid_exact_on_trig_polynomials() {
        let v = periodic_trapezoid(0.0, 2.0 * PI, 16, |a| (3.0 * a).cos().powi(2));
        assert!((v - PI).abs() < 1e-14);
    }
}
