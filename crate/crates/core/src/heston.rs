//! Heston path simulation.
//!
//! ```text
//! dS = r S dt + sqrt(v) S dW_x
//! dv = kappa (v_bar - v) dt + gamma sqrt(v) dW_v,   d<W_x, W_v> = rho dt
//! ```
//!
//! The default scheme samples the variance exactly from its scaled noncentral
//! chi-squared transition and integrates the log-price with the variance
//! integral approximated by the left/right endpoints ("almost exact"). A
//! full-truncation Euler scheme is kept as an independent reference.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::payoffs::MonitoringSchedule;
use crate::rng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measure {
    /// Money market numeraire.
    RiskNeutral,
    /// Stock numeraire; the stock drifts at `r + v`.
    Stock,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HestonParams {
    pub r: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub rho: f64,
    pub v_bar: f64,
    pub v0: f64,
    pub s0: f64,
    /// Displacement: observed prices are `S - shift`.
    pub shift: f64,
    pub measure: Measure,
}

impl HestonParams {
    pub fn new(
        r: f64,
        kappa: f64,
        gamma: f64,
        rho: f64,
        v_bar: f64,
        v0: f64,
        s0: f64,
    ) -> Result<Self> {
        let p = HestonParams {
            r,
            kappa,
            gamma,
            rho,
            v_bar,
            v0,
            s0,
            shift: 0.0,
            measure: Measure::RiskNeutral,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_shift(mut self, shift: f64) -> Result<Self> {
        self.shift = shift;
        self.validate()?;
        Ok(self)
    }

    pub fn with_s0(mut self, s0: f64) -> Result<Self> {
        self.s0 = s0;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.r, self.kappa, self.gamma, self.rho, self.v_bar, self.v0, self.s0, self.shift,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("Heston parameters"));
        }
        if self.gamma <= 0.0 {
            return Err(Error::param("gamma", "must be positive"));
        }
        if self.rho.abs() > 1.0 {
            return Err(Error::param("rho", "must lie in [-1, 1]"));
        }
        if self.v0 < 0.0 {
            return Err(Error::param("v0", "must be non-negative"));
        }
        if self.s0 <= 0.0 {
            return Err(Error::param("s0", "must be positive"));
        }
        if self.shift < 0.0 {
            return Err(Error::param("shift", "must be non-negative"));
        }
        match self.measure {
            Measure::RiskNeutral => {
                if self.kappa <= 0.0 {
                    return Err(Error::param("kappa", "must be positive"));
                }
                if self.v_bar < 0.0 {
                    return Err(Error::param("v_bar", "must be non-negative"));
                }
            }
            // kappa* = kappa - gamma rho may be negative; only kappa* v_bar*
            // (which equals the risk-neutral kappa v_bar) has to stay non-negative.
            Measure::Stock => {
                if self.kappa == 0.0 {
                    return Err(Error::param(
                        "kappa",
                        "mean reversion under the stock measure is zero",
                    ));
                }
                if self.kappa * self.v_bar < 0.0 {
                    return Err(Error::param("v_bar", "kappa * v_bar must be non-negative"));
                }
            }
        }
        Ok(())
    }

    /// Feller condition `2 kappa v_bar >= gamma^2`.
    pub fn feller(&self) -> bool {
        2.0 * self.kappa * self.v_bar >= self.gamma * self.gamma
    }

    /// Degrees of freedom `4 kappa v_bar / gamma^2` of the variance
    /// transition; unchanged by the change of measure.
    pub fn dof(&self) -> f64 {
        4.0 * self.kappa * self.v_bar / (self.gamma * self.gamma)
    }

    /// Short-maturity benchmark set (S0 = 100).
    pub fn set_bm() -> Self {
        Self::new(0.05, 3.0, 0.1, -0.1, 0.04, 0.04, 100.0).expect("valid preset")
    }

    pub fn set_i() -> Self {
        Self::new(0.04, 0.5, 1.0, -0.8, 0.08, 0.05, 1.0).expect("valid preset")
    }

    pub fn set_ii() -> Self {
        Self::new(0.02, 1.0, 0.9, -0.6, 0.10, 0.13, 1.0).expect("valid preset")
    }

    pub fn set_iii() -> Self {
        Self::new(0.01, 0.46, 0.99, -0.79, 0.09, 0.11, 1.0).expect("valid preset")
    }
}

/// Parameters of the same model under the stock measure:
/// `kappa* = kappa - gamma rho`, `v_bar* = kappa v_bar / kappa*`.
pub fn to_stock_measure(p: &HestonParams) -> Result<HestonParams> {
    if p.measure == Measure::Stock {
        return Err(Error::param(
            "measure",
            "parameters are already under the stock measure",
        ));
    }
    let kappa = p.kappa - p.gamma * p.rho;
    if kappa == 0.0 {
        return Err(Error::param("kappa", "kappa - gamma * rho is zero"));
    }
    let q = HestonParams {
        kappa,
        v_bar: p.kappa * p.v_bar / kappa,
        measure: Measure::Stock,
        ..*p
    };
    q.validate()?;
    Ok(q)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    AlmostExact,
    Euler,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aes" | "almost-exact" | "almost_exact" => Ok(Scheme::AlmostExact),
            "euler" => Ok(Scheme::Euler),
            _ => Err(Error::Config(format!("unknown scheme {s:?} (aes, euler)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub scheme: Scheme,
}

impl SimConfig {
    pub fn new(n_paths: usize, dt: f64, seed: u64) -> Self {
        SimConfig {
            n_paths,
            dt,
            seed,
            scheme: Scheme::AlmostExact,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::param("n_paths", "must be positive"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", "must be positive"));
        }
        Ok(())
    }
}

/// Sampler for `chi'^2(dof, lambda)` with fixed `dof`.
///
/// For `dof > 1` it uses `(Z + sqrt(lambda))^2 + chi^2(dof - 1)`; otherwise the
/// Poisson mixture `chi^2(dof + 2N)`, `N ~ Poisson(lambda / 2)`. Both are
/// exact in distribution.
#[derive(Clone, Debug)]
pub struct NoncentralChiSquared {
    dof: f64,
    central: Option<Gamma<f64>>,
}

impl NoncentralChiSquared {
    pub fn new(dof: f64) -> Result<Self> {
        if !(dof >= 0.0 && dof.is_finite()) {
            return Err(Error::param("dof", "must be non-negative"));
        }
        let central = if dof > 1.0 {
            Some(Gamma::new(0.5 * (dof - 1.0), 2.0).map_err(|e| Error::param("dof", e))?)
        } else {
            None
        };
        Ok(NoncentralChiSquared { dof, central })
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R, lambda: f64) -> f64 {
        match &self.central {
            Some(g) => {
                let z: f64 = rng.sample(StandardNormal);
                let y = z + lambda.sqrt();
                y * y + g.sample(rng)
            }
            None => {
                let n = if lambda > 0.0 {
                    Poisson::new(0.5 * lambda)
                        .map(|p| p.sample(rng))
                        .unwrap_or(0.0)
                } else {
                    0.0
                };
                let shape = 0.5 * self.dof + n;
                match Gamma::new(shape, 2.0) {
                    Ok(g) => g.sample(rng),
                    Err(_) => 0.0,
                }
            }
        }
    }
}

/// Per-step constants of the almost-exact scheme.
#[derive(Clone, Copy, Debug)]
pub struct AesCoefficients {
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    /// Scale of the variance transition, `gamma^2 (1 - e^{-kappa dt}) / (4 kappa)`.
    pub c_bar: f64,
    /// Noncentrality per unit variance, `e^{-kappa dt} / c_bar`.
    pub kappa_bar: f64,
    pub dof: f64,
}

impl AesCoefficients {
    pub fn new(p: &HestonParams, dt: f64) -> Self {
        let (k, g, rho) = (p.kappa, p.gamma, p.rho);
        let c_bar = g * g * (-(-k * dt).exp_m1()) / (4.0 * k);
        let kappa_bar = (-k * dt).exp() / c_bar;
        let half = match p.measure {
            Measure::RiskNeutral => -0.5,
            Measure::Stock => 0.5,
        };
        AesCoefficients {
            k0: (p.r - rho * k * p.v_bar / g) * dt,
            k1: (rho * k / g + half) * dt - rho / g,
            k2: rho / g,
            k3: (1.0 - rho * rho) * dt,
            c_bar,
            kappa_bar,
            dof: p.dof(),
        }
    }
}

enum Kernel {
    Aes(AesCoefficients, NoncentralChiSquared),
    Euler(HestonParams, f64),
}

impl Kernel {
    fn new(p: &HestonParams, cfg: &SimConfig) -> Result<Self> {
        Ok(match cfg.scheme {
            Scheme::AlmostExact => {
                let c = AesCoefficients::new(p, cfg.dt);
                Kernel::Aes(c, NoncentralChiSquared::new(c.dof)?)
            }
            Scheme::Euler => Kernel::Euler(*p, cfg.dt),
        })
    }

    /// Fills the log-return `x[i] = ln(S_i / S_0)` and variance `v[i]` for
    /// `i = 0..x.len()`.
    fn run(&self, rng: &mut rng::Rng, v0: f64, x: &mut [f64], v: &mut [f64]) {
        x[0] = 0.0;
        v[0] = v0;
        match self {
            Kernel::Aes(c, chi) => {
                for i in 1..x.len() {
                    let vi = v[i - 1];
                    let vn = c.c_bar * chi.sample(rng, c.kappa_bar * vi);
                    let z: f64 = rng.sample(StandardNormal);
                    x[i] = x[i - 1] + c.k0 + c.k1 * vi + c.k2 * vn + (c.k3 * vi).sqrt() * z;
                    v[i] = vn;
                }
            }
            Kernel::Euler(p, dt) => {
                let half = match p.measure {
                    Measure::RiskNeutral => -0.5,
                    Measure::Stock => 0.5,
                };
                let rho_c = (1.0 - p.rho * p.rho).sqrt();
                let mut vt = v0;
                for i in 1..x.len() {
                    let vp = vt.max(0.0);
                    let z1: f64 = rng.sample(StandardNormal);
                    let z2: f64 = rng.sample(StandardNormal);
                    let sq = (vp * dt).sqrt();
                    x[i] = x[i - 1] + (p.r + half * vp) * dt + sq * z1;
                    vt += p.kappa * (p.v_bar - vp) * dt + p.gamma * sq * (p.rho * z1 + rho_c * z2);
                    v[i] = vt.max(0.0);
                }
            }
        }
    }
}

/// Simulates `cfg.n_paths` paths on the grid `0, dt, ..., n_steps dt` and
/// maps each through `f(path_index, prices, variances)`. `prices[0] = s0`;
/// prices are not shifted.
///
/// Path `i` draws from random stream `i` of `cfg.seed`, so output does not
/// depend on the thread count.
pub fn map_paths<T, F>(p: &HestonParams, cfg: &SimConfig, n_steps: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &[f64], &[f64]) -> T + Sync + Send,
{
    p.validate()?;
    cfg.validate()?;
    let kernel = Kernel::new(p, cfg)?;
    let s0 = p.s0;
    let out = crate::par::map_init(
        cfg.n_paths,
        || (vec![0.0; n_steps + 1], vec![0.0; n_steps + 1]),
        |(x, v), i| {
            let mut rng = rng::stream(cfg.seed, i as u64);
            kernel.run(&mut rng, p.v0, x, v);
            for xi in x.iter_mut() {
                *xi = s0 * xi.exp();
            }
            f(i, x, v)
        },
    );
    Ok(out)
}

/// Simulated prices and variances at the monitoring dates, one row per path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathBlock {
    times: Vec<f64>,
    n_paths: usize,
    values: Vec<f64>,
    variances: Vec<f64>,
    shift: f64,
}

impl PathBlock {
    pub fn from_rows(
        times: Vec<f64>,
        values: Vec<f64>,
        variances: Vec<f64>,
        shift: f64,
    ) -> Result<Self> {
        let nt = times.len();
        if nt == 0 {
            return Err(Error::Empty("times"));
        }
        if values.len() % nt != 0 || variances.len() != values.len() {
            return Err(Error::Dimension {
                context: "path block",
                expected: nt,
                got: values.len(),
            });
        }
        Ok(PathBlock {
            n_paths: values.len() / nt,
            times,
            values,
            variances,
            shift,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn n_paths(&self) -> usize {
        self.n_paths
    }
    pub fn n_times(&self) -> usize {
        self.times.len()
    }
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Unshifted prices of path `i` at every monitoring date.
    pub fn path(&self, i: usize) -> &[f64] {
        let nt = self.times.len();
        &self.values[i * nt..(i + 1) * nt]
    }

    pub fn variance_path(&self, i: usize) -> &[f64] {
        let nt = self.times.len();
        &self.variances[i * nt..(i + 1) * nt]
    }

    /// Row-major prices, `n_paths x n_times`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Observed (shifted) prices at date index `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_paths)
            .map(|i| self.path(i)[j] - self.shift)
            .collect()
    }

    /// Observed prices at the last date.
    pub fn terminal(&self) -> Vec<f64> {
        self.column(self.times.len() - 1)
    }

    /// Path functional `A` of the observed prices, one value per path.
    pub fn aggregate(&self, agg: crate::payoffs::Aggregator) -> Vec<f64> {
        let mut buf = vec![0.0; self.times.len()];
        (0..self.n_paths)
            .map(|i| {
                for (b, v) in buf.iter_mut().zip(self.path(i)) {
                    *b = v - self.shift;
                }
                agg.apply_unchecked(&buf)
            })
            .collect()
    }

    /// Writes the prices as little-endian f64 (one row per path) to `path`
    /// and a text header to `path.header`.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        let mut h = BufWriter::new(std::fs::File::create(header_path(path))?);
        writeln!(h, "n_paths = {}", self.n_paths)?;
        writeln!(h, "n_times = {}", self.times.len())?;
        writeln!(h, "shift = {:e}", self.shift)?;
        let times: Vec<String> = self.times.iter().map(|t| format!("{t:e}")).collect();
        writeln!(h, "times = {}", times.join(","))?;
        Ok(())
    }

    /// Reads a block written by [`PathBlock::write`]. Variances are not
    /// stored and come back as NaN.
    pub fn read(path: &Path) -> Result<Self> {
        let bad = |reason: &str| Error::Format {
            path: path.display().to_string(),
            reason: reason.to_string(),
        };
        let header = BufReader::new(std::fs::File::open(header_path(path))?);
        let (mut n_paths, mut n_times, mut shift, mut times) = (None, None, 0.0, None);
        for line in header.lines() {
            let line = line?;
            let Some((k, v)) = line.split_once('=') else {
                continue;
            };
            let v = v.trim();
            match k.trim() {
                "n_paths" => n_paths = v.parse::<usize>().ok(),
                "n_times" => n_times = v.parse::<usize>().ok(),
                "shift" => shift = v.parse::<f64>().map_err(|_| bad("shift"))?,
                "times" => {
                    times = Some(
                        v.split(',')
                            .map(|t| t.trim().parse::<f64>())
                            .collect::<std::result::Result<Vec<_>, _>>()
                            .map_err(|_| bad("times"))?,
                    )
                }
                _ => {}
            }
        }
        let (n_paths, n_times, times) = match (n_paths, n_times, times) {
            (Some(a), Some(b), Some(t)) if t.len() == b => (a, b, t),
            _ => return Err(bad("incomplete header")),
        };
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() != n_paths * n_times * 8 {
            return Err(bad("size does not match header"));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let variances = vec![f64::NAN; values.len()];
        PathBlock::from_rows(times, values, variances, shift)
    }
}

fn header_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".header");
    s.into()
}

/// Simulates paths and records prices and variances at the schedule dates.
pub fn simulate(
    p: &HestonParams,
    cfg: &SimConfig,
    schedule: &MonitoringSchedule,
) -> Result<PathBlock> {
    let idx = schedule.grid_indices(cfg.dt)?;
    let n_steps = *idx.last().expect("non-empty schedule");
    let rows = map_paths(p, cfg, n_steps, |_, s, v| {
        let sv: Vec<f64> = idx.iter().map(|&k| s[k]).collect();
        let vv: Vec<f64> = idx.iter().map(|&k| v[k]).collect();
        (sv, vv)
    })?;
    let mut values = Vec::with_capacity(rows.len() * idx.len());
    let mut variances = Vec::with_capacity(rows.len() * idx.len());
    for (s, v) in rows {
        values.extend(s);
        variances.extend(v);
    }
    PathBlock::from_rows(schedule.dates().to_vec(), values, variances, p.shift)
}

/// Path functional `A` and terminal price over the schedule, both observed
/// (net of the shift). Same draws as [`simulate`] but without keeping the
/// paths.
pub fn simulate_functional(
    p: &HestonParams,
    cfg: &SimConfig,
    schedule: &MonitoringSchedule,
    agg: crate::payoffs::Aggregator,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let idx = schedule.grid_indices(cfg.dt)?;
    let n_steps = *idx.last().expect("non-empty schedule");
    let shift = p.shift;
    let pairs = map_paths(p, cfg, n_steps, |_, s, _| {
        let obs: Vec<f64> = idx.iter().map(|&k| s[k] - shift).collect();
        (agg.apply_unchecked(&obs), obs[obs.len() - 1])
    })?;
    Ok(pairs.into_iter().unzip())
}

/// [`simulate`] with the full-truncation Euler scheme.
pub fn simulate_euler(
    p: &HestonParams,
    cfg: &SimConfig,
    schedule: &MonitoringSchedule,
) -> Result<PathBlock> {
    simulate(p, &cfg.with_scheme(Scheme::Euler), schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payoffs::Aggregator;

    #[test]
    fn stock_measure_keeps_dof() {
        let p = HestonParams::set_i();
        let q = to_stock_measure(&p).unwrap();
        assert!((q.kappa - 1.3).abs() < 1e-15);
        assert!((q.dof() - p.dof()).abs() < 1e-14);
        assert!(to_stock_measure(&q).is_err());
        // kappa - gamma * rho = 0
        let z = HestonParams::new(0.0, 0.5, 1.0, 0.5, 0.1, 0.1, 1.0).unwrap();
        assert!(to_stock_measure(&z).is_err());
    }

    #[test]
    fn negative_stock_kappa_is_allowed() {
        let p = HestonParams::new(0.0, 0.2, 1.0, 0.5, 0.1, 0.1, 1.0).unwrap();
        let q = to_stock_measure(&p).unwrap();
        assert!(q.kappa < 0.0);
        let c = AesCoefficients::new(&q, 0.01);
        assert!(c.c_bar > 0.0 && c.kappa_bar > 0.0);
    }

    #[test]
    fn c_bar_small_kappa_limit() {
        let mut p = HestonParams::set_bm();
        p.kappa = 1e-12;
        let c = AesCoefficients::new(&p, 0.01);
        assert!((c.c_bar - 0.1 * 0.1 * 0.01 / 4.0).abs() < 1e-16);
    }

    #[test]
    fn ncx2_moments() {
        for &(dof, lambda) in &[(0.3, 2.0), (3.5, 0.7), (1.0, 5.0), (48.0, 300.0)] {
            let chi = NoncentralChiSquared::new(dof).unwrap();
            let mut rng = rng::stream(11, 0);
            let n = 200_000;
            let xs: Vec<f64> = (0..n).map(|_| chi.sample(&mut rng, lambda)).collect();
            let (m, se) = crate::stats::mean_se(&xs);
            assert!((m - (dof + lambda)).abs() < 4.0 * se, "{dof} {lambda} {m}");
            let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
            let want = 2.0 * (dof + 2.0 * lambda);
            assert!(
                (var / want - 1.0).abs() < 0.03,
                "{dof} {lambda} {var} {want}"
            );
        }
    }

    #[test]
    fn rejects_misaligned_schedule() {
        let p = HestonParams::set_bm();
        let s = MonitoringSchedule::new(vec![0.1, 0.2001]).unwrap();
        let err = simulate(&p, &SimConfig::new(10, 0.01, 1), &s).unwrap_err();
        assert!(matches!(err, Error::MisalignedDate { .. }));
    }

    #[test]
    fn block_round_trip() {
        let p = HestonParams::set_bm().with_shift(1.5).unwrap();
        let s = MonitoringSchedule::new(vec![0.0, 0.05, 0.1]).unwrap();
        let b = simulate(&p, &SimConfig::new(7, 0.01, 3), &s).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("paths.bin");
        b.write(&path).unwrap();
        let back = PathBlock::read(&path).unwrap();
        assert_eq!(back.values(), b.values());
        assert_eq!(back.times(), b.times());
        assert_eq!(
            back.aggregate(Aggregator::Mean),
            b.aggregate(Aggregator::Mean)
        );
        assert_eq!(b.path(0)[0], 100.0);
        assert_eq!(b.column(0)[0], 98.5);
    }
}
