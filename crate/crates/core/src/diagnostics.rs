//! Error measurement for the collocation map and for pricers.
//!
//! `epsilon_sc = E[(g - g~)^2(xi)]` with `g = F^{-1} o Phi`, split into the
//! left tail `xi < -xi_bar`, the interior and the right tail. With samples
//! only, `g` is the empirical quantile function of a large reference run and
//! the expectation is a Monte Carlo average over normal probes. With an
//! analytic target both are replaced by quadrature, which removes the noise
//! floor from decay studies.

use std::io::Write;
use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::collocation::{CollocationBasis, CollocationValues, PiecewiseMap, TailDegree};
use crate::payoffs::{Omega, PriceEstimate};
use crate::semianalytic::{self, gauss_legendre_rule};
use crate::stats::{mean_se, quantile_sorted, sorted};
use crate::{normal, par, rng, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PricingError {
    pub strike: f64,
    pub omega: Omega,
    pub approx: f64,
    pub reference: f64,
    pub reference_se: f64,
    /// `|approx - reference|`.
    pub epsilon_p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub epsilon_sc: f64,
    pub epsilon_minus: f64,
    pub epsilon_m: f64,
    pub epsilon_plus: f64,
    pub n_probe: usize,
    pub pricing: Vec<PricingError>,
}

impl ErrorReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Monte Carlo estimate of `epsilon_sc` against the empirical quantile
/// function of `reference`.
pub fn estimate_sc_error(
    reference: &[f64],
    map: &PiecewiseMap,
    n_probe: usize,
    seed: u64,
) -> Result<ErrorReport> {
    if n_probe == 0 {
        return Err(Error::Empty("probe set"));
    }
    let s = sorted(reference)?;
    let xi_bar = map.basis().xi_bar();
    let probes = rng::chunked(n_probe, seed, |r| r.sample(StandardNormal));
    let mut parts = [0.0; 3];
    for &xi in &probes {
        let d = quantile_sorted(&s, normal::cdf(xi)) - map.eval(xi);
        let k = if xi < -xi_bar {
            0
        } else if xi > xi_bar {
            2
        } else {
            1
        };
        parts[k] += d * d;
    }
    let n = n_probe as f64;
    Ok(ErrorReport {
        epsilon_sc: parts.iter().sum::<f64>() / n,
        epsilon_minus: parts[0] / n,
        epsilon_m: parts[1] / n,
        epsilon_plus: parts[2] / n,
        n_probe,
        pricing: Vec::new(),
    })
}

/// Semi-analytic prices of `map` against a Monte Carlo estimate from
/// `reference`, strike by strike.
pub fn pricing_errors(
    reference: &[f64],
    map: &PiecewiseMap,
    strikes: &[f64],
    omega: Omega,
) -> Result<Vec<PricingError>> {
    let w = omega.sign();
    strikes
        .iter()
        .map(|&k| {
            let payoffs: Vec<f64> = reference.iter().map(|a| (w * (a - k)).max(0.0)).collect();
            let (reference, reference_se) = mean_se(&payoffs);
            let approx = semianalytic::price(map, k, omega, 1.0)?;
            Ok(PricingError {
                strike: k,
                omega,
                approx,
                reference,
                reference_se,
                epsilon_p: (approx - reference).abs(),
            })
        })
        .collect()
}

/// Lognormal target `exp(mu + sigma Z)`, whose map `g(xi) = exp(mu + sigma xi)`
/// is known in closed form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lognormal {
    pub mu: f64,
    pub sigma: f64,
}

impl Lognormal {
    pub fn g(&self, xi: f64) -> f64 {
        (self.mu + self.sigma * xi).exp()
    }

    pub fn collocation_values(&self, basis: &CollocationBasis) -> CollocationValues {
        CollocationValues(basis.nodes().iter().map(|&x| self.g(x)).collect())
    }

    pub fn map(&self, basis: CollocationBasis) -> Result<PiecewiseMap> {
        let cvs = self.collocation_values(&basis);
        PiecewiseMap::new(basis, &cvs)
    }
}

const PANELS: usize = 32;
const PANEL_POINTS: usize = 20;
/// Tail integrals stop this far beyond the cut, where the normal density
/// is below 1e-30 of its peak.
const TAIL_REACH: f64 = 12.0;

/// `int_lo^hi f(x) phi(x) dx` by composite Gauss-Legendre.
fn normal_integral(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let (x, w) = gauss_legendre_rule(PANEL_POINTS);
    let h = (hi - lo) / PANELS as f64;
    let mut sum = 0.0;
    for p in 0..PANELS {
        let c = lo + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            let t = c + 0.5 * h * xi;
            sum += wi * f(t) * normal::pdf(t);
        }
    }
    0.5 * h * sum
}

/// Region split of `epsilon_sc` computed by quadrature for a known `g`.
pub fn exact_sc_error(g: impl Fn(f64) -> f64, map: &PiecewiseMap) -> (f64, f64, f64) {
    let xb = map.basis().xi_bar();
    let sq = |x: f64| {
        let d = g(x) - map.eval(x);
        d * d
    };
    (
        normal_integral(sq, -xb - TAIL_REACH, -xb),
        normal_integral(sq, -xb, xb),
        normal_integral(sq, xb, xb + TAIL_REACH),
    )
}

/// One point of a decay curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    pub points: Vec<DecayPoint>,
    /// Least-squares slope of `ln y` against `x`.
    pub log_slope: f64,
}

impl DecayCurve {
    fn new(points: Vec<DecayPoint>) -> Self {
        let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = points
            .iter()
            .map(|p| p.y.max(f64::MIN_POSITIVE).ln())
            .collect();
        DecayCurve {
            log_slope: ls_slope(&xs, &ys),
            points,
        }
    }

    pub fn write_csv(&self, path: &Path, x_name: &str, y_name: &str) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "{x_name},{y_name}")?;
        for p in &self.points {
            writeln!(w, "{},{}", p.x, p.y)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Interior error `epsilon_M` of the collocation map of `target` for each
/// number of points in `m_values`.
pub fn sweep_interior_error(
    target: &Lognormal,
    m_values: &[usize],
    xi_bar: f64,
    tail: TailDegree,
) -> Result<DecayCurve> {
    if m_values.len() < 2 {
        return Err(Error::param(
            "m_values",
            "need at least two sizes for a slope",
        ));
    }
    let pts = m_values
        .iter()
        .map(|&m| {
            let map = target.map(CollocationBasis::new(m, xi_bar, tail)?)?;
            Ok(DecayPoint {
                x: m as f64,
                y: exact_sc_error(|x| target.g(x), &map).1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecayCurve::new(pts))
}

/// Tail error `epsilon_- + epsilon_+` against the cut `xi_bar`.
pub fn sweep_tail_error(
    target: &Lognormal,
    xi_bars: &[f64],
    m: usize,
    tail: TailDegree,
) -> Result<DecayCurve> {
    if xi_bars.len() < 2 {
        return Err(Error::param(
            "xi_bars",
            "need at least two cuts for a slope",
        ));
    }
    let pts = xi_bars
        .iter()
        .map(|&xb| {
            let map = target.map(CollocationBasis::new(m, xb, tail)?)?;
            let (lo, _, hi) = exact_sc_error(|x| target.g(x), &map);
            Ok(DecayPoint { x: xb, y: lo + hi })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecayCurve::new(pts))
}

/// Histogram bin width in units of the benchmark standard error.
pub const BIN_WIDTH: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseError {
    pub case: usize,
    pub approx: f64,
    pub benchmark: f64,
    pub benchmark_se: f64,
}

impl CaseError {
    /// `epsilon_P / SE`; zero error counts as zero even when `SE = 0`.
    pub fn ratio(&self) -> f64 {
        let e = (self.approx - self.benchmark).abs();
        if e == 0.0 {
            0.0
        } else {
            e / self.benchmark_se
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorHistogram {
    pub bin_width: f64,
    /// Count of cases with ratio in `[k w, (k+1) w)`.
    pub counts: Vec<usize>,
    pub within_3se: f64,
    pub cases: Vec<CaseError>,
}

impl ErrorHistogram {
    pub fn from_cases(cases: Vec<CaseError>) -> Self {
        let mut counts = Vec::new();
        let mut within = 0;
        for c in &cases {
            let r = c.ratio();
            if r <= 3.0 {
                within += 1;
            }
            // Ratios beyond 500 SE (including infinite ones) share the last bin.
            let bin = ((r / BIN_WIDTH) as usize).min(1000);
            if counts.len() <= bin {
                counts.resize(bin + 1, 0);
            }
            counts[bin] += 1;
        }
        ErrorHistogram {
            bin_width: BIN_WIDTH,
            counts,
            within_3se: within as f64 / cases.len().max(1) as f64,
            cases,
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "bin_lo,bin_hi,count")?;
        for (k, c) in self.counts.iter().enumerate() {
            writeln!(
                w,
                "{},{},{}",
                k as f64 * self.bin_width,
                (k + 1) as f64 * self.bin_width,
                c
            )?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Runs `n_cases` independent cases in parallel. Each case `i` is built by
/// `generate(i)` and priced by both pricers; a case that fails to price
/// aborts the whole run.
pub fn error_histogram<C, G, A, B>(
    n_cases: usize,
    generate: G,
    approx: A,
    benchmark: B,
) -> Result<ErrorHistogram>
where
    C: Send,
    G: Fn(usize) -> C + Sync + Send,
    A: Fn(&C) -> Result<f64> + Sync + Send,
    B: Fn(&C) -> Result<PriceEstimate> + Sync + Send,
{
    let cases = par::map(n_cases, |i| {
        let c = generate(i);
        let a = approx(&c)?;
        let b = benchmark(&c)?;
        Ok(CaseError {
            case: i,
            approx: a,
            benchmark: b.price,
            benchmark_se: b.std_err,
        })
    });
    Ok(ErrorHistogram::from_cases(
        cases.into_iter().collect::<Result<Vec<_>>>()?,
    ))
}
