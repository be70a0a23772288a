//! Quadrature rules.

use num_complex::Complex64;

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1);
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..q {
        // Chebyshev-like initial guess, then Newton on P_q.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(q, x);
        if d != 0.0 {
            dp = d;
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=q {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if q == 0 {
        return (1.0, 0.0);
    }
    let d = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Simpson over `panels` (even) uniform intervals of `[0, tau]`,
/// where `samples(k, t)` is called once for each grid point in order.
pub fn simpson_uniform<F>(tau: f64, panels: usize, mut samples: F) -> Complex64
where
    F: FnMut(usize, f64) -> Complex64,
{
    let panels = panels.max(2) + panels % 2;
    let h = tau / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..=panels {
        let w = if k == 0 || k == panels {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += samples(k, k as f64 * h) * w;
    }
    acc * (h / 3.0)
}

/// Refines the Simpson grid by doubling until successive estimates agree to
/// `rel_tol` or `max_panels` is reached. `make` builds a fresh sequential
/// sampler for a given panel count (samplers typically step a propagator).
pub fn simpson_refined<F, S>(tau: f64, rel_tol: f64, max_panels: usize, mut make: F) -> Complex64
where
    F: FnMut(usize) -> S,
    S: FnMut(usize, f64) -> Complex64,
{
    let mut panels = 16;
    let mut prev = simpson_uniform(tau, panels, make(panels));
    loop {
        panels *= 2;
        let next = simpson_uniform(tau, panels, make(panels));
        let diff = (next - prev).norm();
        if diff <= rel_tol * next.norm() || panels >= max_panels {
            return next;
        }
        prev = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre_unit(12);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for deg in 0..24 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            assert!((s - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn simpson_exponential() {
        let v = simpson_refined(1.0, 1e-12, 1 << 20, |_| {
            |_, t: f64| Complex64::new((-2.0 * t).exp(), 0.0)
        });
        assert!((v.re - (1.0 - (-2f64).exp()) / 2.0).abs() < 1e-12);
    }
}
