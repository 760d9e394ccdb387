//! Composite quadrature rules: Simpson for area integrals, trapezoid for
//! closed curves (spectrally accurate on smooth periodic integrands).

use crate::error::{Error, Result};

/// Composite Simpson weights for `n` intervals (`n` even), scaled by h.
pub fn simpson_weights(n: usize, h: f64) -> Result<Vec<f64>> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::Input(format!("Simpson needs an even interval count >= 2, got {n}")));
    }
    let mut w = vec![2.0 * h / 3.0; n + 1];
    w[0] = h / 3.0;
    w[n] = h / 3.0;
    for wk in w.iter_mut().skip(1).step_by(2) {
        *wk = 4.0 * h / 3.0;
    }
    Ok(w)
}

/// Composite Simpson integral of `f` over [a, b] with `n` intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Result<f64> {
    let h = (b - a) / n as f64;
    let w = simpson_weights(n, h)?;
    Ok(w.iter()
        .enumerate()
        .map(|(k, wk)| wk * f(a + k as f64 * h))
        .sum())
}

/// Trapezoid rule over one full period given `n` uniform samples
/// (the periodic endpoint is not repeated).
pub fn trapezoid_closed(values: &[f64], period: f64) -> f64 {
    let h = period / values.len() as f64;
    h * values.iter().sum::<f64>()
}

/// Trapezoid rule over an open segment sampled at `values.len()` nodes
/// including both endpoints.
pub fn trapezoid_open(values: &[f64], h: f64) -> f64 {
    let sum: f64 = values.iter().sum();
    h * (sum - 0.5 * values[0] - 0.5 * values[values.len() - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn simpson_exact_on_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, -1.0, 2.0, 8).unwrap();
        // antiderivative x^4/4 - x^2 + x
        let exact = (4.0 - 4.0 + 2.0) - (0.25 - 1.0 - 1.0);
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn simpson_rejects_odd_counts() {
        assert!(simpson(|x| x, 0.0, 1.0, 3).is_err());
    }

    #[test]
    fn simpson_order_four_on_sin() {
        let e1 = (simpson(|x| x.sin(), 0.0, PI, 8).unwrap() - 2.0).abs();
        let e2 = (simpson(|x| x.sin(), 0.0, PI, 16).unwrap() - 2.0).abs();
        let ratio = e1 / e2;
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn closed_trapezoid_kills_sin_exactly() {
        for n in [64usize, 256, 1024] {
            let vals: Vec<f64> = (0..n).map(|k| (TAU * k as f64 / n as f64).sin()).collect();
            assert!(trapezoid_closed(&vals, TAU).abs() < 1e-14);
        }
    }

    #[test]
    fn closed_trapezoid_spectral_on_smooth_periodic() {
        // integral of exp(sin t) over a period
        let reference = 7.954926521012845; // I_0(1) * 2 pi
        let vals: Vec<f64> = (0..64)
            .map(|k| (TAU * k as f64 / 64.0).sin().exp())
            .collect();
        assert!((trapezoid_closed(&vals, TAU) - reference).abs() < 1e-12);
    }

    #[test]
    fn open_trapezoid_second_order() {
        let f = |x: f64| x.exp();
        let run = |n: usize| {
            let h = 1.0 / n as f64;
            let vals: Vec<f64> = (0..=n).map(|k| f(k as f64 * h)).collect();
            (trapezoid_open(&vals, h) - (1.0f64.exp() - 1.0)).abs()
        };
        let ratio = run(32) / run(64);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }
}
