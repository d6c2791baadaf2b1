//! Joint sampling of `(S(T), A | S(T))` for options paying
//! `max(omega (A - K1 S(T) - K2), 0)`.
//!
//! `S(T)` is drawn from its empirical quantile function. For `A` given
//! `S(T) = s` the conditional collocation values are interpolated linearly
//! between `Q` rows predicted by the model at reference values `S^q`
//! (grid mode), or predicted afresh for every draw (brute-force mode).

use std::io::Write;
use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::collocation::{CollocationBasis, CollocationValues, PiecewiseMap};
use crate::heston::{map_paths, HestonParams, SimConfig};
use crate::payoffs::{grid_index, Omega};
use crate::regressor::dataset::reference_value;
use crate::regressor::{MlpModel, Schema};
use crate::stats::{ecdf_sorted, mean_se, quantile_sorted, sorted};
use crate::{par, rng, Error, Result};

/// Smallest sample accepted by [`build_marginal`].
pub const MIN_MARGINAL_SUPPORT: usize = 100_000;

/// Share of adjacent reference pairs allowed to have decreasing row means.
pub const MONOTONE_TOLERANCE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MarginalSource {
    /// Inverse transform on the sorted sample.
    Empirical,
    /// Collocation map fitted to the sorted sample.
    Collocation,
}

/// Distribution of `S(T)` backed by a sorted Monte Carlo sample.
#[derive(Clone, Debug)]
pub struct MarginalSampler {
    sorted: Vec<f64>,
    map: Option<PiecewiseMap>,
}

impl MarginalSampler {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        Ok(MarginalSampler {
            sorted: sorted(samples)?,
            map: None,
        })
    }

    /// Draw through a collocation map of the sample instead of the full
    /// quantile table. `F` and `F^{-1}` still use the table.
    pub fn compressed(mut self, basis: CollocationBasis) -> Result<Self> {
        let cvs = crate::collocation::cvs_from_sorted(&self.sorted, &basis);
        self.map = Some(PiecewiseMap::new(basis, &cvs)?);
        Ok(self)
    }

    pub fn source(&self) -> MarginalSource {
        if self.map.is_some() {
            MarginalSource::Collocation
        } else {
            MarginalSource::Empirical
        }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn quantile(&self, p: f64) -> f64 {
        quantile_sorted(&self.sorted, p)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        ecdf_sorted(&self.sorted, x)
    }

    fn draw(&self, r: &mut rng::Rng) -> f64 {
        match &self.map {
            Some(m) => m.eval(r.sample(StandardNormal)),
            None => self.quantile(r.random::<f64>()),
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        rng::chunked(n, seed, |r| self.draw(r))
    }
}

/// Simulates `S(T)` (observed, i.e. net of any shift) and wraps it as a
/// [`MarginalSampler`].
pub fn build_marginal(p: &HestonParams, mc: &SimConfig, maturity: f64) -> Result<MarginalSampler> {
    if mc.n_paths < MIN_MARGINAL_SUPPORT {
        return Err(Error::TooFewSamples(format!(
            "{} paths for the S(T) quantile table (need {MIN_MARGINAL_SUPPORT})",
            mc.n_paths
        )));
    }
    let n_steps = grid_index(maturity, mc.dt)?;
    let shift = p.shift;
    let st = map_paths(p, mc, n_steps, |_, s, _| s[n_steps] - shift)?;
    MarginalSampler::from_samples(&st)
}

/// Conditional collocation values at `Q` reference values of `S(T)`.
#[derive(Clone, Debug)]
pub struct ConditionalGrid {
    refs: Vec<f64>,
    probs: Vec<f64>,
    rows: Vec<Vec<f64>>,
    basis: CollocationBasis,
}

impl ConditionalGrid {
    pub fn references(&self) -> &[f64] {
        &self.refs
    }

    /// `F(S^q)` fed to the model with each reference value.
    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn basis(&self) -> &CollocationBasis {
        &self.basis
    }

    /// Builds a grid from given rows; `refs` must be strictly increasing and
    /// every row non-decreasing.
    pub fn from_rows(
        refs: Vec<f64>,
        probs: Vec<f64>,
        rows: Vec<Vec<f64>>,
        basis: CollocationBasis,
    ) -> Result<Self> {
        if refs.len() < 2 || refs.len() != rows.len() || probs.len() != rows.len() {
            return Err(Error::Dimension {
                context: "conditional grid",
                expected: refs.len(),
                got: rows.len(),
            });
        }
        if refs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("references", "must be strictly increasing"));
        }
        for r in &rows {
            if r.len() != basis.m() {
                return Err(Error::Dimension {
                    context: "grid row",
                    expected: basis.m(),
                    got: r.len(),
                });
            }
            if let Some(k) = CollocationValues(r.clone()).first_decrease() {
                return Err(Error::NonMonotone(k));
            }
        }
        Ok(ConditionalGrid {
            refs,
            probs,
            rows,
            basis,
        })
    }

    /// Row interpolated linearly at `s` (clamped to the reference range);
    /// returns whether `s` was clamped.
    pub fn interpolate(&self, s: f64, out: &mut [f64]) -> bool {
        let q = self.refs.len();
        let (i, w, clamped) = if s <= self.refs[0] {
            (0, 0.0, s < self.refs[0])
        } else if s >= self.refs[q - 1] {
            (q - 2, 1.0, s > self.refs[q - 1])
        } else {
            let k = self.refs.partition_point(|&r| r <= s) - 1;
            (
                k,
                (s - self.refs[k]) / (self.refs[k + 1] - self.refs[k]),
                false,
            )
        };
        for (j, o) in out.iter_mut().enumerate() {
            *o = (1.0 - w) * self.rows[i][j] + w * self.rows[i + 1][j];
        }
        clamped
    }
}

fn model_inputs(p: &HestonParams, maturity: f64, s: f64, prob: f64) -> Vec<f64> {
    let mut x = Schema::FxFlA.inputs(p, maturity);
    x.push(s);
    x.push(prob);
    x
}

/// Evaluates the model at `S^q = S_min + (q-1)/(Q-1) (S_max - S_min)`,
/// `S_min = F^{-1}(p_min)`, `S_max = F^{-1}(p_max)`.
pub fn build_grid(
    model: &MlpModel,
    p: &HestonParams,
    maturity: f64,
    marginal: &MarginalSampler,
    q_count: usize,
    p_min: f64,
    p_max: f64,
) -> Result<ConditionalGrid> {
    if model.schema != Schema::FxFlA {
        return Err(Error::Config(format!(
            "conditional pricing needs an FxFlA model, got {:?}",
            model.schema
        )));
    }
    if q_count < 2 || !(0.0 <= p_min && p_min < p_max && p_max <= 1.0) {
        return Err(Error::param(
            "q_count",
            "need Q >= 2 and 0 <= p_min < p_max <= 1",
        ));
    }
    let (s_min, s_max) = (marginal.quantile(p_min), marginal.quantile(p_max));
    if !(s_max > s_min) {
        return Err(Error::param(
            "marginal",
            "S(T) has no spread between p_min and p_max",
        ));
    }
    let mut refs = Vec::with_capacity(q_count);
    let mut probs = Vec::with_capacity(q_count);
    let mut rows = Vec::with_capacity(q_count);
    for q in 0..q_count {
        let s = reference_value(s_min, s_max, q, q_count);
        let pr = marginal.cdf(s);
        let x = model_inputs(p, maturity, s, pr);
        if !model.norm.input_inside(&x, 0.05) {
            return Err(Error::OutOfRange(format!(
                "model input {x:?} for reference value {s}"
            )));
        }
        refs.push(s);
        probs.push(pr);
        rows.push(model.predict_cvs(&x)?.0);
    }
    let means: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().sum::<f64>() / r.len() as f64)
        .collect();
    let bad = means.windows(2).filter(|w| w[1] < w[0]).count();
    if bad as f64 > MONOTONE_TOLERANCE * (q_count - 1) as f64 {
        return Err(Error::GridNotMonotone(format!(
            "{bad} of {} adjacent row means decrease: {means:?}",
            q_count - 1
        )));
    }
    ConditionalGrid::from_rows(refs, probs, rows, model.collocation_basis()?)
}

/// Paired draws of `S(T)` and `A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointSamples {
    pub s_t: Vec<f64>,
    pub a: Vec<f64>,
    /// Share of `S(T)` draws outside the reference range (grid mode).
    pub clamped_fraction: f64,
}

fn chunked_pairs<F>(n: usize, seed: u64, draw: F) -> JointSamples
where
    F: Fn(&mut rng::Rng) -> Result<(f64, f64, bool)> + Sync + Send,
{
    let chunks = n.div_ceil(rng::CHUNK);
    let parts = par::map(chunks, |c| {
        let mut r = rng::stream(seed, c as u64);
        let len = rng::CHUNK.min(n - c * rng::CHUNK);
        let mut s = Vec::with_capacity(len);
        let mut a = Vec::with_capacity(len);
        let mut clamped = 0usize;
        for _ in 0..len {
            match draw(&mut r) {
                Ok((si, ai, cl)) => {
                    s.push(si);
                    a.push(ai);
                    clamped += cl as usize;
                }
                Err(e) => return Err(e),
            }
        }
        Ok((s, a, clamped))
    });
    let mut out = JointSamples {
        s_t: Vec::with_capacity(n),
        a: Vec::with_capacity(n),
        clamped_fraction: 0.0,
    };
    let mut clamped = 0;
    for part in parts {
        // Draw closures only fail on model dimension errors, which are
        // checked before sampling starts.
        let (s, a, c) = part.expect("validated before sampling");
        out.s_t.extend(s);
        out.a.extend(a);
        clamped += c;
    }
    out.clamped_fraction = clamped as f64 / n.max(1) as f64;
    out
}

/// Grid-based joint sampling: `S(T)` from the marginal, then one draw of
/// `A` through the interpolated conditional map.
pub fn sample_joint(
    grid: &ConditionalGrid,
    marginal: &MarginalSampler,
    n: usize,
    seed: u64,
) -> JointSamples {
    let m = grid.basis.m();
    chunked_pairs(n, seed, |r| {
        let s = marginal.draw(r);
        let mut row = vec![0.0; m];
        let clamped = grid.interpolate(s, &mut row);
        let xi: f64 = r.sample(StandardNormal);
        Ok((s, grid.basis.evaluate(&row, xi), clamped))
    })
}

/// Brute-force joint sampling: the model is evaluated at every draw of
/// `S(T)`. Uses the same random numbers as [`sample_joint`] for a given seed.
pub fn sample_joint_brute_force(
    model: &MlpModel,
    p: &HestonParams,
    maturity: f64,
    marginal: &MarginalSampler,
    n: usize,
    seed: u64,
) -> Result<JointSamples> {
    if model.schema != Schema::FxFlA {
        return Err(Error::Config(
            "brute-force conditional sampling needs an FxFlA model".into(),
        ));
    }
    let basis = model.collocation_basis()?;
    Ok(chunked_pairs(n, seed, |r| {
        let s = marginal.draw(r);
        let cvs = model.predict_cvs(&model_inputs(p, maturity, s, marginal.cdf(s)))?;
        let xi: f64 = r.sample(StandardNormal);
        Ok((s, basis.evaluate(&cvs.0, xi), false))
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceRow {
    pub k1: f64,
    pub k2: f64,
    pub omega: Omega,
    pub price: f64,
    pub std_err: f64,
}

/// Discounted Monte Carlo prices of `max(omega (A - K1 S(T) - K2), 0)` for
/// each strike pair.
pub fn price_fxfla(
    samples: &JointSamples,
    strikes: &[(f64, f64)],
    omega: Omega,
    discount: f64,
) -> Result<Vec<PriceRow>> {
    if samples.a.len() != samples.s_t.len() {
        return Err(Error::Dimension {
            context: "joint samples",
            expected: samples.s_t.len(),
            got: samples.a.len(),
        });
    }
    if samples.a.is_empty() {
        return Err(Error::Empty("joint samples"));
    }
    let w = omega.sign();
    let mut buf = vec![0.0; samples.a.len()];
    Ok(strikes
        .iter()
        .map(|&(k1, k2)| {
            for ((b, a), s) in buf.iter_mut().zip(&samples.a).zip(&samples.s_t) {
                *b = discount * (w * (a - k1 * s - k2)).max(0.0);
            }
            let (price, std_err) = mean_se(&buf);
            PriceRow {
                k1,
                k2,
                omega,
                price,
                std_err,
            }
        })
        .collect())
}

pub fn write_price_table(path: &Path, rows: &[PriceRow]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "K1,K2,omega,price,std_err")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.k1,
            r.k2,
            r.omega.sign(),
            r.price,
            r.std_err
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collocation::TailDegree;

    fn basis() -> CollocationBasis {
        CollocationBasis::new(5, 2.0, TailDegree::Linear).unwrap()
    }

    #[test]
    fn interpolation_and_clamping() {
        let g = ConditionalGrid::from_rows(
            vec![1.0, 2.0, 3.0],
            vec![0.1, 0.5, 0.9],
            vec![
                vec![0.0, 1.0, 2.0, 3.0, 4.0],
                vec![1.0, 2.0, 3.0, 4.0, 5.0],
                vec![3.0; 5],
            ],
            basis(),
        )
        .unwrap();
        let mut row = vec![0.0; 5];
        assert!(!g.interpolate(1.5, &mut row));
        assert_eq!(row, vec![0.5, 1.5, 2.5, 3.5, 4.5]);
        assert!(g.interpolate(0.0, &mut row));
        assert_eq!(row, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert!(g.interpolate(9.0, &mut row));
        assert_eq!(row, vec![3.0; 5]);
        assert!(!g.interpolate(3.0, &mut row));
    }

    #[test]
    fn grid_rejects_bad_rows() {
        let r = ConditionalGrid::from_rows(
            vec![1.0, 2.0],
            vec![0.1, 0.9],
            vec![vec![1.0, 0.0, 2.0, 3.0, 4.0], vec![0.0; 5]],
            basis(),
        );
        assert!(matches!(r, Err(Error::NonMonotone(1))));
        let r = ConditionalGrid::from_rows(
            vec![2.0, 2.0],
            vec![0.1, 0.9],
            vec![vec![0.0; 5], vec![0.0; 5]],
            basis(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn marginal_inverse_property() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64).collect();
        let m = MarginalSampler::from_samples(&xs).unwrap();
        for k in 1..20 {
            let p = k as f64 / 20.0;
            assert!((m.cdf(m.quantile(p)) - p).abs() <= 1.0 / 1000.0 + 1e-12);
        }
    }

    #[test]
    fn strike_table() {
        let s = JointSamples {
            s_t: vec![1.0, 2.0],
            a: vec![1.0, 3.0],
            clamped_fraction: 0.0,
        };
        let rows = price_fxfla(&s, &[(0.0, 0.0), (10.0, 0.0)], Omega::Call, 1.0).unwrap();
        assert_eq!(rows[0].price, 2.0);
        assert_eq!(rows[1].price, 0.0);
        assert_eq!(rows[1].std_err, 0.0);
    }

    #[test]
    fn marginal_needs_enough_paths() {
        let p = HestonParams::set_iii();
        assert!(matches!(
            build_marginal(&p, &SimConfig::new(1000, 0.01, 1), 1.0),
            Err(Error::TooFewSamples(_))
        ));
    }
}
