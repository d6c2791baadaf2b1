//! Stochastic collocation: a random variable `A` is represented by its
//! quantiles `a_k = F_A^{-1}(Phi(xi_k))` at `M` Chebyshev-Lobatto nodes
//! `xi_k` in `[-xi_bar, xi_bar]`, and approximated by `g(xi)`, `xi ~ N(0, 1)`.
//!
//! `g` is the Lagrange interpolant of the nodes inside `[-xi_bar, xi_bar]`
//! and a low-degree polynomial through the outermost nodes beyond it.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::normal;
use crate::stats::{quantile_sorted, sorted};
use crate::{rng, Error, Result};

/// Default `xi_bar = Phi^{-1}(0.993)`.
pub fn default_xi_bar() -> f64 {
    normal::inv_cdf(0.993)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailDegree {
    Linear,
    Quadratic,
}

impl TailDegree {
    /// Number of outermost nodes the tail polynomial passes through.
    pub fn points(self) -> usize {
        match self {
            TailDegree::Linear => 2,
            TailDegree::Quadratic => 3,
        }
    }
}

impl std::str::FromStr for TailDegree {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "linear" => Ok(TailDegree::Linear),
            "2" | "quadratic" => Ok(TailDegree::Quadratic),
            _ => Err(Error::param(
                "tail_degree",
                format!("expected 1 or 2, got `{s}`"),
            )),
        }
    }
}

/// Nodes, interpolation weights and change-of-basis matrix for a given
/// `(M, xi_bar, tail degree)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CollocationBasis {
    m: usize,
    xi_bar: f64,
    tail: TailDegree,
    nodes: Vec<f64>,
    bary: Vec<f64>,
    inv_vandermonde: Vec<f64>,
}

impl CollocationBasis {
    pub fn new(m: usize, xi_bar: f64, tail: TailDegree) -> Result<Self> {
        if m < 3 {
            return Err(Error::param("m", "need at least 3 collocation points"));
        }
        if !(xi_bar > 0.0 && xi_bar.is_finite()) {
            return Err(Error::param("xi_bar", "must be positive and finite"));
        }
        let n = (m - 1) as f64;
        // -xi_bar cos(k pi / n) written as a sine so that the nodes are exactly
        // antisymmetric and the middle node (odd m) is exactly zero.
        let nodes: Vec<f64> = (0..m)
            .map(|k| xi_bar * (std::f64::consts::PI * (2.0 * k as f64 - n) / (2.0 * n)).sin())
            .collect();
        let bary = (0..m)
            .map(|k| {
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                if k == 0 || k == m - 1 {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        let inv_vandermonde = inverse_vandermonde(&nodes);
        Ok(CollocationBasis {
            m,
            xi_bar,
            tail,
            nodes,
            bary,
            inv_vandermonde,
        })
    }

    pub fn with_default_xi_bar(m: usize) -> Result<Self> {
        Self::new(m, default_xi_bar(), TailDegree::Linear)
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn xi_bar(&self) -> f64 {
        self.xi_bar
    }
    pub fn tail(&self) -> TailDegree {
        self.tail
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `Phi(xi_k)`, the probability levels of the collocation values.
    pub fn probabilities(&self) -> Vec<f64> {
        self.nodes.iter().map(|&x| normal::cdf(x)).collect()
    }

    /// Row-major inverse of the Vandermonde matrix `V_ij = xi_i^j`.
    pub fn inv_vandermonde(&self) -> &[f64] {
        &self.inv_vandermonde
    }

    /// Monomial coefficients `alpha = V^{-1} a` of the interior interpolant.
    pub fn change_of_basis(&self, a: &[f64]) -> Result<Vec<f64>> {
        self.check_len(a)?;
        let m = self.m;
        Ok((0..m)
            .map(|i| (0..m).map(|j| self.inv_vandermonde[i * m + j] * a[j]).sum())
            .collect())
    }

    fn check_len(&self, a: &[f64]) -> Result<()> {
        if a.len() != self.m {
            return Err(Error::Dimension {
                context: "collocation values",
                expected: self.m,
                got: a.len(),
            });
        }
        Ok(())
    }

    /// Evaluates the collocation map with values `a` at `x`. Returns `a_k`
    /// exactly at `x = xi_k`.
    pub fn evaluate(&self, a: &[f64], x: f64) -> f64 {
        let p = self.tail.points();
        let m = self.m;
        if x < self.nodes[0] {
            return lagrange(&self.nodes[..p], &a[..p], x);
        }
        if x > self.nodes[m - 1] {
            return lagrange(&self.nodes[m - p..], &a[m - p..], x);
        }
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..m {
            let d = x - self.nodes[k];
            if d == 0.0 {
                return a[k];
            }
            let w = self.bary[k] / d;
            num += w * a[k];
            den += w;
        }
        num / den
    }
}

fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut out = 0.0;
    for j in 0..xs.len() {
        let mut l = 1.0;
        for k in 0..xs.len() {
            if k != j {
                l *= (x - xs[k]) / (xs[j] - xs[k]);
            }
        }
        out += l * ys[j];
    }
    out
}

/// Inverse of `V_ij = x_i^j` built column by column from the expanded
/// Lagrange basis polynomials.
fn inverse_vandermonde(x: &[f64]) -> Vec<f64> {
    let m = x.len();
    let mut inv = vec![0.0; m * m];
    for j in 0..m {
        let mut poly = vec![0.0; m];
        poly[0] = 1.0;
        let mut deg = 0;
        let mut denom = 1.0;
        for k in 0..m {
            if k == j {
                continue;
            }
            deg += 1;
            for i in (1..=deg).rev() {
                poly[i] = poly[i - 1] - x[k] * poly[i];
            }
            poly[0] *= -x[k];
            denom *= x[j] - x[k];
        }
        for i in 0..m {
            inv[i * m + j] = poly[i] / denom;
        }
    }
    inv
}

/// Monomial coefficients of the interpolant through `(x_k, y_k)`.
pub fn monomial_coefficients(x: &[f64], y: &[f64]) -> Vec<f64> {
    let inv = inverse_vandermonde(x);
    let m = x.len();
    (0..m)
        .map(|i| (0..m).map(|j| inv[i * m + j] * y[j]).sum())
        .collect()
}

/// Evaluates `sum alpha_i x^i` by Horner's rule.
pub fn horner(alpha: &[f64], x: f64) -> f64 {
    alpha.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// The `M` collocation values of one distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CollocationValues(pub Vec<f64>);

impl CollocationValues {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the first decrease, if any.
    pub fn first_decrease(&self) -> Option<usize> {
        self.0.windows(2).position(|w| w[1] < w[0]).map(|i| i + 1)
    }

    /// Nearest non-decreasing sequence in least squares.
    pub fn isotonic(&self) -> Self {
        CollocationValues(isotonic(&self.0))
    }

    pub fn to_csv_row(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(|v| format!("{v:e}")).collect();
        parts.join(",")
    }

    pub fn from_csv_row(row: &str) -> Result<Self> {
        let vals = row
            .trim()
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Format {
                path: "<collocation values>".into(),
                reason: e.to_string(),
            })?;
        Ok(CollocationValues(vals))
    }
}

/// Pool-adjacent-violators projection onto non-decreasing sequences.
pub fn isotonic(y: &[f64]) -> Vec<f64> {
    // Blocks of (mean, weight).
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, w2) = blocks[blocks.len() - 1];
            let (m1, w1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let w = w1 + w2;
            *blocks.last_mut().expect("two blocks") =
                ((m1 * w1 as f64 + m2 * w2 as f64) / w as f64, w);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, w)| std::iter::repeat_n(m, w))
        .collect()
}

/// Collocation values from samples: empirical quantiles at `Phi(xi_k)`.
pub fn cvs_from_samples(samples: &[f64], basis: &CollocationBasis) -> Result<CollocationValues> {
    let s = sorted(samples)?;
    Ok(cvs_from_sorted(&s, basis))
}

pub(crate) fn cvs_from_sorted(s: &[f64], basis: &CollocationBasis) -> CollocationValues {
    let needed = 1.0 / normal::sf(basis.xi_bar());
    if (s.len() as f64) < needed {
        log::warn!(
            "{} samples cannot resolve the outer quantiles (need about {:.0})",
            s.len(),
            needed.ceil()
        );
    }
    CollocationValues(
        basis
            .probabilities()
            .iter()
            .map(|&p| quantile_sorted(s, p))
            .collect(),
    )
}

/// Piecewise polynomial collocation map.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseMap {
    basis: CollocationBasis,
    values: Vec<f64>,
    left: Vec<f64>,
    interior: Vec<f64>,
    right: Vec<f64>,
}

impl PiecewiseMap {
    /// Fails if the values decrease anywhere; use
    /// [`CollocationValues::isotonic`] to repair predicted values first.
    pub fn new(basis: CollocationBasis, values: &CollocationValues) -> Result<Self> {
        basis.check_len(&values.0)?;
        if values.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("collocation values"));
        }
        if let Some(k) = values.first_decrease() {
            return Err(Error::NonMonotone(k));
        }
        let m = basis.m();
        let p = basis.tail().points();
        let a = &values.0;
        let left = monomial_coefficients(&basis.nodes()[..p], &a[..p]);
        let right = monomial_coefficients(&basis.nodes()[m - p..], &a[m - p..]);
        let interior = basis.change_of_basis(a)?;
        Ok(PiecewiseMap {
            basis,
            values: a.clone(),
            left,
            interior,
            right,
        })
    }

    pub fn basis(&self) -> &CollocationBasis {
        &self.basis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Monomial coefficients of the left tail, interior and right tail.
    pub fn left_coefficients(&self) -> &[f64] {
        &self.left
    }
    pub fn interior_coefficients(&self) -> &[f64] {
        &self.interior
    }
    pub fn right_coefficients(&self) -> &[f64] {
        &self.right
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.basis.evaluate(&self.values, x)
    }

    /// `n` draws of `g(xi)`, `xi ~ N(0, 1)`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        rng::chunked(n, seed, |r| self.eval(r.sample(StandardNormal)))
    }

    /// Approximate `g^{-1}(y)`: piecewise linear between the nodes inside
    /// `[a_1, a_M]`, tail polynomial inverted outside.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::NonFinite("inverse argument"));
        }
        let a = &self.values;
        let xi = self.basis.nodes();
        let m = a.len();
        if y >= a[0] && y <= a[m - 1] {
            let k = a.partition_point(|&v| v < y);
            if a[k] == y {
                return Ok(xi[k]);
            }
            let t = (y - a[k - 1]) / (a[k] - a[k - 1]);
            return Ok(xi[k - 1] + t * (xi[k] - xi[k - 1]));
        }
        let (coef, edge, left) = if y < a[0] {
            (&self.left, xi[0], true)
        } else {
            (&self.right, xi[m - 1], false)
        };
        let root = match coef.len() {
            2 => {
                if coef[1] == 0.0 {
                    None
                } else {
                    Some((y - coef[0]) / coef[1])
                }
            }
            _ => {
                let (c, b, q) = (coef[0] - y, coef[1], coef[2]);
                if q == 0.0 {
                    if b == 0.0 {
                        None
                    } else {
                        Some(-c / b)
                    }
                } else {
                    let disc = b * b - 4.0 * q * c;
                    if disc < 0.0 {
                        None
                    } else {
                        let r1 = (-b - disc.sqrt()) / (2.0 * q);
                        let r2 = (-b + disc.sqrt()) / (2.0 * q);
                        // The root on the tail side closest to the edge node.
                        [r1, r2]
                            .into_iter()
                            .filter(|&r| if left { r <= edge } else { r >= edge })
                            .min_by(|x, y| (x - edge).abs().total_cmp(&(y - edge).abs()))
                    }
                }
            }
        };
        root.ok_or_else(|| {
            Error::OutOfRange(format!(
                "{y} is not attained by the tail of the collocation map"
            ))
        })
    }
}
