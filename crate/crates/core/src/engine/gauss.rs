//! Gaussian estimate of a node's probability from a partial computation.

/// Inputs of the estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussParams {
    /// Partially computed probability.
    pub mu: f64,
    /// Variance, in `(0, 1]`.
    pub sigma2: f64,
    /// Number of query keywords.
    pub t: usize,
    /// Upper integration limit, shared by every keyword.
    pub ub_limit: f64,
}

/// Standard normal CDF.
pub fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Probability mass of `N(mu, sigma2)` on `[0, ub_limit]`, raised to the
/// power `t` (independent keywords), clamped to `[0, 1]`.
pub fn gauss_prob(p: &GaussParams) -> f64 {
    if p.ub_limit <= 0.0 {
        return 0.0;
    }
    let s = p.sigma2.sqrt();
    let one = (phi((p.ub_limit - p.mu) / s) - phi(-p.mu / s)).max(0.0);
    one.powi(p.t as i32).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn density(y: f64, mu: f64, s: f64) -> f64 {
        let z = (y - mu) / s;
        (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
    }

    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 40)
    }

    #[test]
    fn phi_reference_values() {
        assert!((phi(0.0) - 0.5).abs() < 1e-15);
        assert!((phi(1.0) - 0.841_344_746_068_542_9).abs() < 1e-14);
        assert!((phi(-3.5) - 2.326_290_790_355_25e-4).abs() < 1e-15);
    }

    #[test]
    fn single_keyword_matches_quadrature() {
        let p = GaussParams {
            mu: 0.5,
            sigma2: 0.5,
            t: 1,
            ub_limit: 0.8,
        };
        let s = p.sigma2.sqrt();
        let q = simpson(&|y| density(y, p.mu, s), 0.0, p.ub_limit, 1e-12);
        assert!((gauss_prob(&p) - q).abs() < 1e-9);
    }

    #[test]
    fn monotone_in_upper_limit() {
        let mut last = 0.0;
        for i in 0..=100 {
            let v = gauss_prob(&GaussParams {
                mu: 0.3,
                sigma2: 0.4,
                t: 3,
                ub_limit: i as f64 / 100.0,
            });
            assert!(v >= last && (0.0..=1.0).contains(&v));
            last = v;
        }
    }
}
