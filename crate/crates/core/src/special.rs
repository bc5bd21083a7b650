//! Special functions and small numerical utilities.

use std::f64::consts::{PI, SQRT_2};
use std::sync::OnceLock;

use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Principal branch of the Lambert W function on `[0, ∞)`.
///
/// Halley iteration on `w·e^w − x = 0`, seeded with `ln(1 + x)` below 3 and
/// with the two-term asymptotic `ln x − ln ln x` above.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::domain(format!("lambert_w0 needs x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let mut w = if x < 3.0 {
        x.ln_1p()
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w.max(0.0))
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function via the complementary error function.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Draw from Poisson(`lambda`). `lambda = 0` always yields zero.
pub fn sample_poisson(lambda: f64, rng: &mut RngStream) -> Result<u64> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::domain(format!(
            "Poisson mean must be >= 0, got {lambda}"
        )));
    }
    if lambda == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(lambda)
        .map_err(|e| Error::Model(format!("cannot sample Poisson({lambda}): {e}")))?;
    Ok(dist.sample(rng) as u64)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // A difference at rounding level means the segment cannot improve further.
    let noise = 64.0 * f64::EPSILON * (left.abs() + right.abs());
    if depth == 0 || delta.abs() <= (15.0 * tol).max(noise) {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Nodes and weights of the `n`-point Gauss–Hermite rule for the weight `e^{-x²}`.
///
/// Newton iteration on the orthonormal Hermite recurrence with the usual
/// asymptotic starting guesses.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::domain("Gauss-Hermite rule needs at least one node"));
    }
    let pim4 = PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let half = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..half {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut converged = false;
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-14 * (1.0 + z.abs()) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numeric(format!(
                "Gauss-Hermite node {i} of {n} did not converge"
            )));
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    Ok((x, w))
}

/// The 64-node Gauss–Hermite rule, computed once.
pub fn gauss_hermite_64() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite(64).expect("64-node Gauss-Hermite rule"))
}

/// `E[g(X)]` for `X ~ N(mean, sd²)` by 64-node Gauss–Hermite quadrature.
pub fn gaussian_expectation<F: Fn(f64) -> f64>(mean: f64, sd: f64, g: F) -> f64 {
    let (nodes, weights) = gauss_hermite_64();
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        acc += w * g(mean + SQRT_2 * sd * x);
    }
    acc / PI.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambert_known_points() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-14);
        let x = 5.0 * 5.0f64.exp();
        assert!((lambert_w0(x).unwrap() - 5.0).abs() < 1e-13);
        assert!(lambert_w0(-1e-3).is_err());
        assert!(lambert_w0(f64::NAN).is_err());
    }

    #[test]
    fn lambert_residual_on_log_grid() {
        let mut prev = -1.0;
        for i in 0..1000 {
            let x = 10f64.powf(-8.0 + 14.0 * i as f64 / 999.0);
            let w = lambert_w0(x).unwrap();
            let resid = (w * w.exp() - x).abs() / x.max(1.0);
            assert!(resid <= 1e-12, "x={x} w={w} resid={resid}");
            assert!(w > prev);
            prev = w;
        }
    }

    #[test]
    fn norm_cdf_values() {
        assert_eq!(norm_cdf(0.0), 0.5);
        assert!((norm_cdf(40.0) - 1.0).abs() <= 1e-15);
        // Simpson integration of the density from 0 to 1.96
        let half = adaptive_simpson(&norm_pdf, 0.0, 1.96, 1e-15);
        assert!((norm_cdf(1.96) - (0.5 + half)).abs() < 1e-12);
        assert!((norm_cdf(1.96) - 0.9750021048517795).abs() < 1e-12);
        for &x in &[0.3, 1.0, 2.5, 7.0] {
            assert!((norm_cdf(-x) - (1.0 - norm_cdf(x))).abs() < 1e-15);
        }
    }

    #[test]
    fn poisson_degenerate_and_errors() {
        let mut rng = RngStream::new(1);
        for _ in 0..100 {
            assert_eq!(sample_poisson(0.0, &mut rng).unwrap(), 0);
        }
        assert!(sample_poisson(-1.0, &mut rng).is_err());
        assert!(sample_poisson(f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn poisson_moments() {
        let mut rng = RngStream::new(2024);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let k = sample_poisson(3.0, &mut rng).unwrap() as f64;
            s += k;
            s2 += k * k;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!((mean - 3.0).abs() < 0.007, "mean {mean}");
        assert!((var - 3.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn simpson_polynomials_and_exp() {
        let v = adaptive_simpson(&|x: f64| x * x * x, 0.0, 2.0, 1e-12);
        assert!((v - 4.0).abs() < 1e-12);
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-13);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn hermite_rule_integrates_gaussian_moments() {
        assert!((gaussian_expectation(0.0, 1.0, |_| 1.0) - 1.0).abs() < 1e-13);
        assert!((gaussian_expectation(0.0, 1.0, |x| x * x) - 1.0).abs() < 1e-12);
        assert!((gaussian_expectation(0.0, 1.0, |x| x.powi(4)) - 3.0).abs() < 1e-11);
        // lognormal mean
        let m = gaussian_expectation(0.1, 0.3, f64::exp);
        assert!((m - (0.1f64 + 0.045).exp()).abs() < 1e-13);
    }
}
