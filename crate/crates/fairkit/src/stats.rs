//! Shared statistical machinery: quadrature, the studentized range
//! distribution behind Tukey's test, and Student-t quantiles.
//!
//! Everything here works in `f64`; callers convert at the boundary.

use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erf;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and derivative via upward recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Integrate `f` over [a, b] with an n-point Gauss-Legendre rule.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let c = 0.5 * (b - a);
    let d = 0.5 * (b + a);
    nodes
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| w * f(c * x + d))
        .sum::<f64>()
        * c
}

/// P(range of m iid standard normals <= x), by 40-point Gauss-Legendre
/// over the location variable.
fn normal_range_cdf(x: f64, m: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mf = m as f64;
    let integrand = |z: f64| {
        let inner = normal_cdf(z) - normal_cdf(z - x);
        normal_pdf(z) * inner.powi(m as i32 - 1)
    };
    // The integrand is negligible outside [-8, 8 + x]; split into panels so
    // the 40-point rule keeps full accuracy on wide ranges.
    let lo = -8.0;
    let hi = 8.0;
    let mid = 0.5 * (lo + hi);
    mf * (integrate(integrand, lo, mid, 40) + integrate(integrand, mid, hi, 40))
}

/// Density of S = sqrt(chi^2_df / df), evaluated in log space.
fn scaled_chi_pdf(s: f64, df: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let half_df = 0.5 * df;
    let log_pdf = (1.0 - half_df) * std::f64::consts::LN_2 + half_df * df.ln()
        - ln_gamma(half_df)
        + (df - 1.0) * s.ln()
        - half_df * s * s;
    log_pdf.exp()
}

/// CDF of the studentized range distribution with m groups and df
/// within-group degrees of freedom. The outer scale integral uses a
/// 64-point Gauss-Legendre rule on an interval adapted to the mass of
/// the chi factor.
pub fn studentized_range_cdf(q: f64, m: usize, df: usize) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    let dff = df as f64;
    // S concentrates around 1 with spread ~ 1/sqrt(2 df).
    let spread = (0.5 / dff).sqrt();
    let lo = (1.0 - 14.0 * spread).max(0.0);
    let hi = 1.0 + 14.0 * spread.max(0.35);
    let f = |s: f64| scaled_chi_pdf(s, dff) * normal_range_cdf(q * s, m);
    let mid = 0.5 * (lo + hi);
    integrate(&f, lo, mid, 64) + integrate(&f, mid, hi, 64)
}

/// Bisection is expensive and every fold-aggregation cell queries the
/// same (p, m, df) triple, so solved quantiles are cached process-wide.
static QUANTILE_CACHE: std::sync::OnceLock<
    std::sync::Mutex<std::collections::BTreeMap<(u64, usize, usize), f64>>,
> = std::sync::OnceLock::new();

/// Quantile of the studentized range distribution, inverted by bisection.
pub fn studentized_range_quantile(p: f64, m: usize, df: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&p) || m < 2 || df < 1 {
        return Err(Error::InvalidConfig(format!(
            "studentized range quantile needs p in (0,1), m >= 2, df >= 1 (p={p}, m={m}, df={df})"
        )));
    }
    let cache = QUANTILE_CACHE.get_or_init(Default::default);
    let key = (p.to_bits(), m, df);
    if let Some(&q) = cache.lock().unwrap().get(&key) {
        return Ok(q);
    }
    let mut lo = 0.0;
    let mut hi = 10.0;
    while studentized_range_cdf(hi, m, df) < p {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::InvalidConfig("quantile bracket failed".into()));
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if studentized_range_cdf(mid, m, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 {
            break;
        }
    }
    let q = 0.5 * (lo + hi);
    cache.lock().unwrap().insert(key, q);
    Ok(q)
}

/// Two-sided Student-t quantile t_{p, df}.
pub fn student_t_quantile(p: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df)
        .expect("valid t distribution")
        .inverse_cdf(p)
}

/// E[sigmoid(scale * Z + shift)] for Z ~ N(0, 1), by quadrature.
pub fn expected_sigmoid(scale: f64, shift: f64) -> f64 {
    integrate(
        |z| {
            let t = scale * z + shift;
            let s = if t >= 0.0 {
                1.0 / (1.0 + (-t).exp())
            } else {
                let e = t.exp();
                e / (1.0 + e)
            };
            normal_pdf(z) * s
        },
        -10.0,
        10.0,
        64,
    )
}
