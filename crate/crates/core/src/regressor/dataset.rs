//! Synthetic training sets: Heston parameters (and maturity) -> collocation
//! values of the path functional `A`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::collocation::{cvs_from_sorted, CollocationBasis};
use crate::heston::{map_paths, HestonParams, SimConfig};
use crate::normal;
use crate::payoffs::{grid_index, Aggregator};
use crate::regressor::lhs::lhs_sample;
use crate::stats::ecdf_sorted;
use crate::{rng, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Schema {
    /// Arithmetic Asian: `(r, kappa, gamma, rho, v_bar, v0, T)`.
    FxA,
    /// Lookback on a displaced process with `r = 0`:
    /// `(kappa, gamma, rho, v_bar, v0, T)`.
    FxL,
    /// Asian conditional on `S(T)`: FxA inputs plus `(S^q, p^q)`.
    FxFlA,
}

impl Schema {
    pub fn feature_names(self) -> &'static [&'static str] {
        match self {
            Schema::FxA => &["r", "kappa", "gamma", "rho", "v_bar", "v0", "T"],
            Schema::FxL => &["kappa", "gamma", "rho", "v_bar", "v0", "T"],
            Schema::FxFlA => &[
                "r", "kappa", "gamma", "rho", "v_bar", "v0", "T", "S_q", "p_q",
            ],
        }
    }

    pub fn n_features(self) -> usize {
        self.feature_names().len()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Schema::FxA => "FxA",
            Schema::FxL => "FxL",
            Schema::FxFlA => "FxFlA",
        }
    }

    /// Model inputs for a parameter set and maturity (without the
    /// conditioning pair).
    pub fn inputs(self, p: &HestonParams, t: f64) -> Vec<f64> {
        match self {
            Schema::FxL => vec![p.kappa, p.gamma, p.rho, p.v_bar, p.v0, t],
            _ => vec![p.r, p.kappa, p.gamma, p.rho, p.v_bar, p.v0, t],
        }
    }
}

impl std::str::FromStr for Schema {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fxa" => Ok(Schema::FxA),
            "fxl" => Ok(Schema::FxL),
            "fxfla" => Ok(Schema::FxFlA),
            _ => Err(Error::param("schema", format!("unknown schema `{s}`"))),
        }
    }
}

/// Sampling box for the Heston parameters. A range with equal endpoints
/// fixes the parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamRanges {
    pub r: (f64, f64),
    pub kappa: (f64, f64),
    pub gamma: (f64, f64),
    pub rho: (f64, f64),
    pub v_bar: (f64, f64),
    pub v0: (f64, f64),
}

impl ParamRanges {
    /// Toy ranges around the benchmark set.
    pub fn toy() -> Self {
        ParamRanges {
            r: (0.04, 0.06),
            kappa: (2.90, 3.10),
            gamma: (0.08, 0.12),
            rho: (-0.11, -0.09),
            v_bar: (0.03, 0.05),
            v0: (0.03, 0.05),
        }
    }

    pub fn fxa() -> Self {
        ParamRanges {
            r: (0.0, 0.05),
            kappa: (0.2, 1.1),
            gamma: (0.8, 1.1),
            rho: (-0.95, -0.2),
            v_bar: (0.02, 0.15),
            v0: (0.02, 0.15),
        }
    }

    pub fn fxl() -> Self {
        ParamRanges {
            r: (0.0, 0.0),
            kappa: (0.8, 1.6),
            gamma: (0.4, 1.0),
            rho: (-0.8, -0.3),
            v_bar: (0.1, 0.2),
            v0: (0.1, 0.2),
        }
    }

    pub fn fxfla() -> Self {
        ParamRanges {
            r: (0.0, 0.05),
            kappa: (0.2, 1.1),
            gamma: (0.8, 1.1),
            rho: (-0.92, -0.28),
            v_bar: (0.03, 0.10),
            v0: (0.03, 0.10),
        }
    }

    pub fn as_array(&self) -> [(f64, f64); 6] {
        [
            self.r, self.kappa, self.gamma, self.rho, self.v_bar, self.v0,
        ]
    }

    pub fn contains(&self, p: &HestonParams) -> bool {
        let v = [p.r, p.kappa, p.gamma, p.rho, p.v_bar, p.v0];
        self.as_array()
            .iter()
            .zip(v)
            .all(|(&(lo, hi), x)| x >= lo - 1e-12 && x <= hi + 1e-12)
    }
}

/// How the monitoring dates of a maturity `T` are laid out.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ScheduleKind {
    /// Every simulation grid point from 0 to `T`.
    FromOrigin,
    /// `count` dates ending at `T`, `lag` apart.
    Lagged { count: usize, lag: f64 },
}

/// Conditioning on `S(T)` for FxFlA data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalSpec {
    /// Number of reference values `S^q`.
    pub q: usize,
    pub p_min: f64,
    pub p_max: f64,
    /// Paths closest to each `S^q` used for its conditional CVs.
    pub window: usize,
}

#[derive(Clone, Debug)]
pub struct GenerationConfig {
    pub schema: Schema,
    pub n_sets: usize,
    pub ranges: ParamRanges,
    pub t_min: f64,
    pub t_max: f64,
    pub schedule: ScheduleKind,
    pub aggregator: Aggregator,
    pub s0: f64,
    pub shift: f64,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub basis: CollocationBasis,
    pub conditional: Option<ConditionalSpec>,
}

impl GenerationConfig {
    /// Grid indices of the admissible maturities in `[t_min, t_max]`.
    pub fn maturity_indices(&self) -> Result<Vec<usize>> {
        let tol = 1e-9;
        let first = (self.t_min / self.dt - tol).ceil().max(1.0) as usize;
        let last = (self.t_max / self.dt + tol).floor() as usize;
        let min_idx = match self.schedule {
            ScheduleKind::FromOrigin => 1,
            // The first monitoring date must be at least one step after 0.
            ScheduleKind::Lagged { count, .. } => count.saturating_sub(1) * self.lag_steps()? + 1,
        };
        Ok((first.max(min_idx)..=last).collect())
    }

    fn lag_steps(&self) -> Result<usize> {
        match self.schedule {
            ScheduleKind::FromOrigin => Ok(1),
            ScheduleKind::Lagged { lag, .. } => {
                let k = grid_index(lag, self.dt)?;
                if k == 0 {
                    return Err(Error::param("lag", "shorter than the time step"));
                }
                Ok(k)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_sets == 0 || self.n_paths == 0 {
            return Err(Error::param("n_sets", "need at least one set and one path"));
        }
        if let ScheduleKind::Lagged { count: 0, .. } = self.schedule {
            return Err(Error::param("count", "need at least one monitoring date"));
        }
        if (self.schema == Schema::FxFlA) != self.conditional.is_some() {
            return Err(Error::Config(
                "conditioning on S(T) goes with, and only with, the FxFlA schema".into(),
            ));
        }
        if let Some(c) = self.conditional {
            if c.q < 2 || !(0.0 < c.p_min && c.p_min < c.p_max && c.p_max < 1.0) || c.window == 0 {
                return Err(Error::param(
                    "conditional",
                    "need q >= 2, 0 < p_min < p_max < 1, window > 0",
                ));
            }
            if c.window > self.n_paths {
                return Err(Error::param("window", "larger than the number of paths"));
            }
        }
        let needed = (1.0 / normal::sf(self.basis.xi_bar())).ceil() as usize;
        let per_fit = self.conditional.map_or(self.n_paths, |c| c.window);
        if per_fit < needed {
            return Err(Error::TooFewSamples(format!(
                "{per_fit} samples per fit cannot resolve the quantile at xi_bar = {} (need {needed})",
                self.basis.xi_bar()
            )));
        }
        Ok(())
    }
}

/// Per-feature and per-output min/max used for scaling to `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub in_min: Vec<f64>,
    pub in_max: Vec<f64>,
    pub out_min: Vec<f64>,
    pub out_max: Vec<f64>,
}

fn scale(lo: f64, hi: f64) -> f64 {
    if hi > lo {
        hi - lo
    } else {
        1.0
    }
}

impl NormStats {
    pub fn normalize_input(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, v)| (v - self.in_min[i]) / scale(self.in_min[i], self.in_max[i]))
            .collect()
    }

    pub fn denormalize_input(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(i, v)| self.in_min[i] + v * scale(self.in_min[i], self.in_max[i]))
            .collect()
    }

    pub fn normalize_output(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .enumerate()
            .map(|(i, v)| (v - self.out_min[i]) / scale(self.out_min[i], self.out_max[i]))
            .collect()
    }

    pub fn denormalize_output(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(i, v)| self.out_min[i] + v * scale(self.out_min[i], self.out_max[i]))
            .collect()
    }

    /// Whether `x` lies in the training box (with relative slack `slack`).
    pub fn input_inside(&self, x: &[f64], slack: f64) -> bool {
        x.iter().enumerate().all(|(i, &v)| {
            let pad = slack * scale(self.in_min[i], self.in_max[i]);
            v >= self.in_min[i] - pad && v <= self.in_max[i] + pad
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet {
    schema: Schema,
    m: usize,
    inputs: Vec<f64>,
    outputs: Vec<f64>,
}

impl TrainingSet {
    pub fn new(schema: Schema, m: usize) -> Self {
        TrainingSet {
            schema,
            m,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn schema(&self) -> Schema {
        self.schema
    }
    pub fn n_inputs(&self) -> usize {
        self.schema.n_features()
    }
    pub fn n_outputs(&self) -> usize {
        self.m
    }
    pub fn len(&self) -> usize {
        self.outputs.len() / self.m
    }
    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn input(&self, i: usize) -> &[f64] {
        let d = self.n_inputs();
        &self.inputs[i * d..(i + 1) * d]
    }

    pub fn output(&self, i: usize) -> &[f64] {
        &self.outputs[i * self.m..(i + 1) * self.m]
    }

    pub fn push(&mut self, p: &[f64], a: &[f64]) -> Result<()> {
        if p.len() != self.n_inputs() {
            return Err(Error::Dimension {
                context: "training inputs",
                expected: self.n_inputs(),
                got: p.len(),
            });
        }
        if a.len() != self.m {
            return Err(Error::Dimension {
                context: "training outputs",
                expected: self.m,
                got: a.len(),
            });
        }
        if p.iter().chain(a).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training row"));
        }
        if let Some(k) = a.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::NonMonotone(k + 1));
        }
        self.inputs.extend_from_slice(p);
        self.outputs.extend_from_slice(a);
        Ok(())
    }

    pub fn norm_stats(&self) -> Result<NormStats> {
        if self.is_empty() {
            return Err(Error::Empty("training set"));
        }
        let minmax = |data: &[f64], d: usize| {
            let mut lo = vec![f64::INFINITY; d];
            let mut hi = vec![f64::NEG_INFINITY; d];
            for row in data.chunks(d) {
                for j in 0..d {
                    lo[j] = lo[j].min(row[j]);
                    hi[j] = hi[j].max(row[j]);
                }
            }
            (lo, hi)
        };
        let (in_min, in_max) = minmax(&self.inputs, self.n_inputs());
        let (out_min, out_max) = minmax(&self.outputs, self.m);
        Ok(NormStats {
            in_min,
            in_max,
            out_min,
            out_max,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        let mut header = vec!["schema".to_string()];
        header.extend((1..=self.n_inputs()).map(|i| format!("p_{i}")));
        header.extend((1..=self.m).map(|i| format!("a_{i}")));
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.len() {
            let mut row = vec![self.schema.as_str().to_string()];
            row.extend(self.input(i).iter().map(|v| v.to_string()));
            row.extend(self.output(i).iter().map(|v| v.to_string()));
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::Format {
            path: path.display().to_string(),
            reason,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)?;
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("schema") {
            return Err(bad("first column must be `schema`".into()));
        }
        let d = header.iter().filter(|h| h.starts_with("p_")).count();
        let m = header.iter().filter(|h| h.starts_with("a_")).count();
        if d + m + 1 != header.len() || m == 0 {
            return Err(bad("header must be schema,p_1..p_d,a_1..a_M".into()));
        }
        let mut set: Option<TrainingSet> = None;
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let schema: Schema = rec.get(0).unwrap_or("").parse()?;
            let ts = set.get_or_insert_with(|| TrainingSet::new(schema, m));
            if ts.schema != schema || schema.n_features() != d {
                return Err(bad(format!(
                    "row {}: schema does not match the header",
                    line + 1
                )));
            }
            let vals = rec
                .iter()
                .skip(1)
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| bad(format!("row {}: {e}", line + 1)))?;
            ts.push(&vals[..d], &vals[d..])
                .map_err(|e| bad(format!("row {}: {e}", line + 1)))?;
        }
        set.ok_or_else(|| bad("no rows".into()))
    }
}

/// Simulates every LHS parameter set and records CVs at every admissible
/// maturity. Rows are ordered by parameter set, then maturity (then `q`).
pub fn generate_training_set(cfg: &GenerationConfig) -> Result<TrainingSet> {
    cfg.validate()?;
    let maturities = cfg.maturity_indices()?;
    if maturities.is_empty() {
        return Err(Error::Config(format!(
            "no admissible maturity in [{}, {}] for this monitoring schedule",
            cfg.t_min, cfg.t_max
        )));
    }
    let params = lhs_sample(&cfg.ranges.as_array(), cfg.n_sets, rng::derive(cfg.seed, 0))?;
    let mut set = TrainingSet::new(cfg.schema, cfg.basis.m());
    for (s, p) in params.iter().enumerate() {
        let hp =
            HestonParams::new(p[0], p[1], p[2], p[3], p[4], p[5], cfg.s0)?.with_shift(cfg.shift)?;
        let sim = SimConfig::new(cfg.n_paths, cfg.dt, rng::derive(cfg.seed, 1 + s as u64));
        for (p_row, a_row) in set_rows(cfg, &hp, &sim, &maturities)? {
            set.push(&p_row, &a_row)?;
        }
        log::debug!("parameter set {}/{} done", s + 1, cfg.n_sets);
    }
    Ok(set)
}

type Row = (Vec<f64>, Vec<f64>);

fn set_rows(
    cfg: &GenerationConfig,
    hp: &HestonParams,
    sim: &SimConfig,
    mats: &[usize],
) -> Result<Vec<Row>> {
    let n_steps = *mats.last().expect("non-empty");
    let lag = cfg.lag_steps()?;
    let shift = cfg.shift;
    let agg = cfg.aggregator;
    let with_terminal = cfg.conditional.is_some();
    // Per path: A at every maturity, then S(T) at every maturity if needed.
    let per_path = map_paths(hp, sim, n_steps, |_, s, _| {
        let mut out = Vec::with_capacity(mats.len() * if with_terminal { 2 } else { 1 });
        match cfg.schedule {
            ScheduleKind::FromOrigin => {
                let mut acc = match agg {
                    Aggregator::Mean => 0.0,
                    Aggregator::Min => f64::INFINITY,
                    Aggregator::Max => f64::NEG_INFINITY,
                };
                let mut next = 0;
                for (k, &sk) in s.iter().enumerate() {
                    let x = sk - shift;
                    acc = match agg {
                        Aggregator::Mean => acc + x,
                        Aggregator::Min => acc.min(x),
                        Aggregator::Max => acc.max(x),
                    };
                    if next < mats.len() && mats[next] == k {
                        out.push(match agg {
                            Aggregator::Mean => acc / (k + 1) as f64,
                            _ => acc,
                        });
                        next += 1;
                    }
                }
            }
            ScheduleKind::Lagged { count, .. } => {
                let mut buf = vec![0.0; count];
                for &k in mats {
                    for (n, b) in buf.iter_mut().enumerate() {
                        *b = s[k - (count - 1 - n) * lag] - shift;
                    }
                    out.push(agg.apply_unchecked(&buf));
                }
            }
        }
        if with_terminal {
            out.extend(mats.iter().map(|&k| s[k] - shift));
        }
        out
    })?;

    let nm = mats.len();
    let mut rows = Vec::new();
    for (j, &k) in mats.iter().enumerate() {
        let t = k as f64 * cfg.dt;
        let base = cfg.schema.inputs(hp, t);
        match cfg.conditional {
            None => {
                let mut a: Vec<f64> = per_path.iter().map(|v| v[j]).collect();
                a.sort_unstable_by(f64::total_cmp);
                rows.push((base, cvs_from_sorted(&a, &cfg.basis).0));
            }
            Some(c) => {
                let mut pairs: Vec<(f64, f64)> =
                    per_path.iter().map(|v| (v[nm + j], v[j])).collect();
                // Stable sort keeps path order among equal S(T).
                pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
                let st: Vec<f64> = pairs.iter().map(|p| p.0).collect();
                let s_min = crate::stats::quantile_sorted(&st, c.p_min);
                let s_max = crate::stats::quantile_sorted(&st, c.p_max);
                for q in 0..c.q {
                    let sq = reference_value(s_min, s_max, q, c.q);
                    let pq = ecdf_sorted(&st, sq);
                    let mut a = closest_window(&pairs, sq, c.window);
                    a.sort_unstable_by(f64::total_cmp);
                    let mut p = base.clone();
                    p.push(sq);
                    p.push(pq);
                    rows.push((p, cvs_from_sorted(&a, &cfg.basis).0));
                }
            }
        }
    }
    Ok(rows)
}

/// `S^q = S_min + q / (Q - 1) (S_max - S_min)` for `q = 0..Q`.
pub fn reference_value(s_min: f64, s_max: f64, q: usize, count: usize) -> f64 {
    if q + 1 == count {
        return s_max;
    }
    s_min + q as f64 / (count - 1) as f64 * (s_max - s_min)
}

/// `A` values of the `n` pairs whose `S(T)` is closest to `target`. `pairs`
/// are sorted by `S(T)` with equal values in path order; an exact distance
/// tie goes to the lower value.
fn closest_window(pairs: &[(f64, f64)], target: f64, n: usize) -> Vec<f64> {
    let pos = pairs.partition_point(|p| p.0 < target);
    let (mut lo, mut hi) = (pos, pos);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let take_lo = match (lo > 0, hi < pairs.len()) {
            (true, true) => target - pairs[lo - 1].0 <= pairs[hi].0 - target,
            (true, false) => true,
            (false, true) => false,
            (false, false) => break,
        };
        if take_lo {
            lo -= 1;
            out.push(pairs[lo].1);
        } else {
            out.push(pairs[hi].1);
            hi += 1;
        }
    }
    out
}
