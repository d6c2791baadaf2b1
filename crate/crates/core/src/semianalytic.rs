//! Closed-form option prices for a piecewise polynomial collocation map.
//!
//! With `A = g(xi)` and `g` non-decreasing, the payoff is positive on one
//! side of `c_K = g^{-1}(K)` and
//!
//! ```text
//! E[(g(xi) - K)^+] = sum over pieces of int p(x) phi(x) dx - K (1 - Phi(c_K))
//! ```
//!
//! where each piece integral reduces to moments of a truncated normal.

use std::sync::OnceLock;

use crate::collocation::PiecewiseMap;
use crate::normal::{self, LN_SQRT_2PI};
use crate::payoffs::Omega;
use crate::{Error, Result};

/// Intervals with less standard normal mass than this are rejected.
pub const MIN_MASS: f64 = 1e-300;

/// Finite intervals at most this wide are integrated by Gauss-Legendre
/// quadrature; the boundary terms of the recursion cancel badly there.
const NARROW: f64 = 1.0;

const GL_POINTS: usize = 40;

/// Moments `E[X^i | a < X < b]`, `X ~ N(0, 1)`, for `i = 0..=max_degree`.
#[derive(Clone, Debug)]
pub struct TruncatedMoments {
    mass: f64,
    moments: Vec<f64>,
}

impl TruncatedMoments {
    pub fn new(max_degree: usize, a: f64, b: f64) -> Result<Self> {
        if a.is_nan() || b.is_nan() {
            return Err(Error::NonFinite("interval endpoint"));
        }
        if a >= b {
            return Err(Error::param(
                "interval",
                format!("need a < b, got [{a}, {b}]"),
            ));
        }
        let mass = normal::mass(a, b);
        if !(mass >= MIN_MASS) {
            return Err(Error::NegligibleMass { a, b });
        }
        let moments = if a.is_finite() && b.is_finite() && b - a <= NARROW {
            quadrature_moments(max_degree, a, b)
        } else {
            recursive_moments(max_degree, a, b, mass.ln())
        };
        Ok(TruncatedMoments { mass, moments })
    }

    /// Standard normal mass of the interval.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn moment(&self, i: usize) -> f64 {
        self.moments[i]
    }

    pub fn moments(&self) -> &[f64] {
        &self.moments
    }

    /// `int_a^b p(x) phi(x) dx` for `p(x) = sum coef_i x^i`.
    pub fn integrate(&self, coef: &[f64]) -> f64 {
        assert!(
            coef.len() <= self.moments.len(),
            "polynomial degree exceeds table"
        );
        let s: f64 = coef.iter().zip(&self.moments).map(|(c, m)| c * m).sum();
        s * self.mass
    }
}

/// `E[X^i | a < X < b]` for a standard normal `X`. Endpoints may be infinite.
pub fn trunc_moment(i: usize, a: f64, b: f64) -> Result<f64> {
    Ok(TruncatedMoments::new(i, a, b)?.moment(i))
}

/// `x^k phi(x) / Z` evaluated in log space; zero at infinite `x`.
fn boundary(x: f64, k: usize, ln_z: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    let base = -0.5 * x * x - LN_SQRT_2PI - ln_z;
    if k == 0 {
        return base.exp();
    }
    if x == 0.0 {
        return 0.0;
    }
    let sign = if x < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
    sign * (k as f64 * x.abs().ln() + base).exp()
}

// m_i = (i - 1) m_{i-2} - (b^{i-1} phi(b) - a^{i-1} phi(a)) / Z.
//
// Upward this loses accuracy once i exceeds the squared endpoint magnitude,
// so those degrees come from a downward (Miller) pass started far above.
fn recursive_moments(n: usize, a: f64, b: f64, ln_z: f64) -> Vec<f64> {
    let d = |k: usize| boundary(b, k, ln_z) - boundary(a, k, ln_z);
    let mut m = vec![0.0; n + 1];
    m[0] = 1.0;
    if n >= 1 {
        m[1] = -d(0);
    }
    for i in 2..=n {
        m[i] = (i - 1) as f64 * m[i - 2] - d(i - 1);
    }
    let r2 = a.abs().max(b.abs()).powi(2);
    if !r2.is_finite() || r2 >= n as f64 {
        return m;
    }
    let istar = (r2.floor() as usize).max(1);
    let mut top = n + 2;
    let mut damp = 1.0;
    loop {
        top += 1;
        damp *= r2 / (top - 1) as f64;
        if top > n + 10 && damp < 1e-30 {
            break;
        }
    }
    let mut mb = vec![0.0; top + 2];
    for start in [top, top + 1] {
        let mut i = start;
        while i >= 2 && i - 2 > istar.saturating_sub(1) {
            mb[i - 2] = (mb[i] + d(i - 1)) / (i - 1) as f64;
            i -= 2;
        }
    }
    m[istar + 1..=n].copy_from_slice(&mb[istar + 1..=n]);
    m
}

fn gauss_legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre_rule(GL_POINTS))
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub(crate) fn gauss_legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn quadrature_moments(n: usize, a: f64, b: f64) -> Vec<f64> {
    let (xg, wg) = gauss_legendre();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    // Weights relative to the density peak inside [a, b] to avoid underflow.
    let x0 = 0.0f64.clamp(a, b);
    let mut m = vec![0.0; n + 1];
    let mut z = 0.0;
    for (t, w) in xg.iter().zip(wg) {
        let x = c + h * t;
        let wt = w * (-0.5 * (x - x0) * (x + x0)).exp();
        z += wt;
        let mut p = wt;
        for mi in m.iter_mut() {
            *mi += p;
            p *= x;
        }
    }
    m.iter_mut().for_each(|v| *v /= z);
    m
}

/// `E[g(xi)]` for the collocation map.
pub fn expectation(map: &PiecewiseMap) -> Result<f64> {
    let xb = map.basis().xi_bar();
    Ok(piece(map.left_coefficients(), f64::NEG_INFINITY, -xb)?
        + piece(map.interior_coefficients(), -xb, xb)?
        + piece(map.right_coefficients(), xb, f64::INFINITY)?)
}

fn piece(coef: &[f64], a: f64, b: f64) -> Result<f64> {
    if !(a < b) || normal::mass(a, b) < MIN_MASS {
        return Ok(0.0);
    }
    Ok(TruncatedMoments::new(coef.len().saturating_sub(1), a, b)?.integrate(coef))
}

/// Price `prefactor * E[max(omega (g(xi) - K), 0)]`.
///
/// For a fixed strike the prefactor is the discount factor; for a floating
/// strike priced under the stock measure it is `S0`.
pub fn price(map: &PiecewiseMap, strike: f64, omega: Omega, prefactor: f64) -> Result<f64> {
    if !strike.is_finite() {
        return Err(Error::NonFinite("strike"));
    }
    let a = map.values();
    let c = match map.inverse(strike) {
        Ok(c) => c,
        // Flat tail: the strike lies beyond everything the map can reach.
        Err(_) if strike <= a[0] => f64::NEG_INFINITY,
        Err(_) => f64::INFINITY,
    };
    let xb = map.basis().xi_bar();
    let (l, i, r) = (
        map.left_coefficients(),
        map.interior_coefficients(),
        map.right_coefficients(),
    );
    let inf = f64::INFINITY;
    let value = match omega {
        Omega::Call => {
            let integral =
                piece(l, c, -xb)? + piece(i, c.max(-xb), xb)? + piece(r, c.max(xb), inf)?;
            integral - strike * normal::mass(c, inf)
        }
        Omega::Put => {
            let integral =
                piece(l, -inf, c.min(-xb))? + piece(i, -xb, c.min(xb))? + piece(r, xb, c)?;
            strike * normal::mass(-inf, c) - integral
        }
    };
    Ok(prefactor * value.max(0.0))
}

/// [`price`] over a strike list.
pub fn price_strikes(
    map: &PiecewiseMap,
    strikes: &[f64],
    omega: Omega,
    prefactor: f64,
) -> Result<Vec<f64>> {
    strikes
        .iter()
        .map(|&k| price(map, k, omega, prefactor))
        .collect()
}
