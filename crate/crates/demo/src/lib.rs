//! Browser demo. Simulates a Heston arithmetic Asian (five monthly dates
//! ending at `T`), compresses the distribution of the average into
//! collocation values and prices from them.
//!
//! Arrays go to JavaScript flattened; each method says how.

use heston_sc::collocation::{CollocationBasis, PiecewiseMap, TailDegree};
use heston_sc::diagnostics::{self, Lognormal};
use heston_sc::heston::{self, HestonParams, SimConfig};
use heston_sc::payoffs::{mc_price, Aggregator, MonitoringSchedule, Omega, PayoffSpec};
use heston_sc::{collocation, normal, semianalytic, stats};
use wasm_bindgen::prelude::*;

const DT: f64 = 1.0 / 120.0;
const MAX_PATHS: usize = 200_000;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

#[wasm_bindgen]
pub struct AsianStudy {
    mc: Vec<f64>,
    map: PiecewiseMap,
    discount: f64,
}

#[wasm_bindgen]
impl AsianStudy {
    /// Runs the simulation and fits `m` collocation values. `maturity` is
    /// rounded to the monthly grid step 1/120 and must leave room for the
    /// four earlier monthly dates.
    #[wasm_bindgen(constructor)]
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        r: f64,
        kappa: f64,
        gamma: f64,
        rho: f64,
        v_bar: f64,
        v0: f64,
        maturity: f64,
        n_paths: usize,
        m: usize,
        seed: u32,
    ) -> Result<AsianStudy, String> {
        if !(1000..=MAX_PATHS).contains(&n_paths) {
            return Err(format!("paths must lie between 1000 and {MAX_PATHS}"));
        }
        let t = (maturity / DT).round() * DT;
        if t < 0.4 {
            return Err("maturity must be at least 0.4".into());
        }
        let p = HestonParams::new(r, kappa, gamma, rho, v_bar, v0, 1.0).map_err(err)?;
        let sched = MonitoringSchedule::monthly_asian(t).map_err(err)?;
        let cfg = SimConfig::new(n_paths, DT, seed as u64);
        let (a, _) =
            heston::simulate_functional(&p, &cfg, &sched, Aggregator::Mean).map_err(err)?;
        let basis = CollocationBasis::with_default_xi_bar(m).map_err(err)?;
        let cvs = collocation::cvs_from_samples(&a, &basis).map_err(err)?;
        let map = PiecewiseMap::new(basis, &cvs).map_err(err)?;
        Ok(AsianStudy {
            mc: stats::sorted(&a).map_err(err)?,
            map,
            discount: (-r * t).exp(),
        })
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.map.basis().nodes().to_vec()
    }

    pub fn cvs(&self) -> Vec<f64> {
        self.map.values().to_vec()
    }

    /// `[x_0, g(x_0), x_1, g(x_1), ...]` on `n` points over `[-4, 4]`.
    pub fn map_curve(&self, n: usize) -> Vec<f64> {
        let n = n.max(2);
        (0..n)
            .flat_map(|i| {
                let x = -4.0 + 8.0 * i as f64 / (n - 1) as f64;
                [x, self.map.eval(x)]
            })
            .collect()
    }

    /// Densities on `bins` equal bins between the 0.1% and 99.9% Monte
    /// Carlo quantiles: `[lo, hi, mc_0 .. mc_{bins-1}, sc_0 .. sc_{bins-1}]`.
    /// The collocation histogram uses `n_sc` fresh draws through the map.
    pub fn histograms(&self, bins: usize, n_sc: usize, seed: u32) -> Vec<f64> {
        let bins = bins.clamp(5, 400);
        let lo = stats::quantile_sorted(&self.mc, 0.001);
        let hi = stats::quantile_sorted(&self.mc, 0.999);
        let sc = self.map.sample(n_sc.clamp(1000, MAX_PATHS), seed as u64);
        let mut out = vec![lo, hi];
        out.extend(density(&self.mc, lo, hi, bins));
        out.extend(density(&sc, lo, hi, bins));
        out
    }

    /// Per strike: `[semi-analytic, Monte Carlo, Monte Carlo standard error]`.
    pub fn prices(&self, strikes: Vec<f64>, call: bool) -> Result<Vec<f64>, String> {
        let omega = if call { Omega::Call } else { Omega::Put };
        let mut out = Vec::with_capacity(3 * strikes.len());
        for k in strikes {
            let sa = semianalytic::price(&self.map, k, omega, self.discount).map_err(err)?;
            let spec = PayoffSpec::fixed(Aggregator::Mean, omega, k).map_err(err)?;
            let mc = mc_price(&spec, &self.mc, None, self.discount).map_err(err)?;
            out.extend([sa, mc.price, mc.std_err]);
        }
        Ok(out)
    }
}

fn density(x: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0.0; bins];
    for &v in x {
        if v >= lo && v < hi {
            counts[(((v - lo) / w) as usize).min(bins - 1)] += 1.0;
        }
    }
    counts.iter().map(|c| c / (x.len() as f64 * w)).collect()
}

/// Interior collocation error for a lognormal `exp(sigma xi)` as `M` runs
/// from 3 to `m_max`: `[M, error, M, error, ...]`.
#[wasm_bindgen]
pub fn interior_error(sigma: f64, m_max: usize) -> Result<Vec<f64>, String> {
    if !(sigma > 0.0 && sigma <= 2.0) {
        return Err("sigma must lie in (0, 2]".into());
    }
    let ms: Vec<usize> = (3..=m_max.clamp(4, 30)).collect();
    let target = Lognormal { mu: 0.0, sigma };
    let curve =
        diagnostics::sweep_interior_error(&target, &ms, normal::inv_cdf(0.993), TailDegree::Linear)
            .map_err(err)?;
    Ok(curve.points.iter().flat_map(|p| [p.x, p.y]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn study() -> AsianStudy {
        AsianStudy::new(0.04, 0.5, 1.0, -0.8, 0.08, 0.05, 1.0, 20_000, 11, 1).unwrap()
    }

    #[test]
    fn prices_agree() {
        let s = study();
        let v = s.prices(vec![0.9, 1.0, 1.1], true).unwrap();
        for c in v.chunks(3) {
            // Map error plus noise; the map comes from the same samples.
            assert!((c[0] - c[1]).abs() < 4.0 * c[2] + 2e-3, "{c:?}");
        }
    }

    #[test]
    fn histograms_are_densities() {
        let h = study().histograms(50, 20_000, 2);
        assert_eq!(h.len(), 2 + 100);
        let w = (h[1] - h[0]) / 50.0;
        for part in [&h[2..52], &h[52..]] {
            let mass: f64 = part.iter().map(|d| d * w).sum();
            assert!(mass > 0.99 && mass <= 1.0 + 1e-12, "{mass}");
        }
    }

    #[test]
    fn curve_passes_through_values() {
        let s = study();
        assert_eq!(s.nodes().len(), 11);
        assert!(s.cvs().windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(s.map_curve(9).len(), 18);
    }

    #[test]
    fn error_sweep_decays() {
        let e = interior_error(0.4, 10).unwrap();
        assert_eq!(e.len(), 2 * 8);
        assert!(e[e.len() - 1] < e[1]);
        assert!(interior_error(-1.0, 10).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(AsianStudy::new(0.0, 0.5, 1.0, -0.8, 0.08, 0.05, 0.2, 20_000, 11, 1).is_err());
        assert!(AsianStudy::new(0.0, 0.5, 1.0, -0.8, 0.08, 0.05, 1.0, 10, 11, 1).is_err());
        assert!(AsianStudy::new(0.0, 0.5, -1.0, -0.8, 0.08, 0.05, 1.0, 20_000, 11, 1).is_err());
    }
}
