// Independent oracles shared by the integration tests and the acceptance
// harness. Nothing here calls into the library's numerics.
#![allow(dead_code)]

use heston_sc::regressor::{Layer, MlpModel};

pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

// 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

// Global adaptive bisection: split the worst interval until the summed error
// estimate meets `tol` or the interval budget runs out.
fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, budget: usize) -> f64 {
    let mut parts = vec![(a, b, gk15(f, a, b))];
    while parts.len() < budget {
        let err: f64 = parts.iter().map(|p| p.2 .1).sum();
        if err <= tol {
            break;
        }
        let (w, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .unwrap();
        let (lo, hi, _) = parts.swap_remove(w);
        let m = 0.5 * (lo + hi);
        parts.push((lo, m, gk15(f, lo, m)));
        parts.push((m, hi, gk15(f, m, hi)));
    }
    parts.iter().map(|p| p.2 .0).sum()
}

/// Adaptive Gauss-Kronrod integral of `f` over `[a, b]`, to a tolerance of
/// `rel` times a coarse estimate of `int |f|`. Infinite ends are cut where
/// `x^25 phi(x)` is far below double precision.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel: f64) -> f64 {
    const REACH: f64 = 45.0;
    let lo = if a.is_finite() { a } else { b.min(0.0) - REACH };
    let hi = if b.is_finite() { b } else { a.max(0.0) + REACH };
    let panels = 64;
    let w = (hi - lo) / panels as f64;
    let coarse: f64 = (0..panels)
        .map(|k| gk15(&|x| f(x).abs(), lo + k as f64 * w, lo + (k + 1) as f64 * w).0)
        .sum();
    if coarse == 0.0 {
        return 0.0;
    }
    adapt(&f, lo, hi, rel * coarse, 4000)
}

/// `(int x^i phi, int |x|^i phi)` over `[a, b]`.
pub fn moment_by_quadrature(i: usize, a: f64, b: f64) -> (f64, f64) {
    let scale = integrate(|x| x.abs().powi(i as i32) * phi(x), a, b, 1e-15);
    let v = integrate(|x| x.powi(i as i32) * phi(x), a, b, 1e-15);
    (v, scale)
}

/// MSE over the rows in the model's own normalized space, evaluated directly
/// from the weights (no use of the library's forward pass).
pub fn reference_mse(layers: &[Layer], xs: &[Vec<f64>], ys: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    let mut count = 0;
    for (x, y) in xs.iter().zip(ys) {
        let mut cur = x.clone();
        for (k, l) in layers.iter().enumerate() {
            let mut next = Vec::with_capacity(l.n_out);
            for o in 0..l.n_out {
                let mut s = l.biases[o];
                for j in 0..l.n_in {
                    s += l.weights[o * l.n_in + j] * cur[j];
                }
                next.push(if k + 1 < layers.len() { s.max(0.0) } else { s });
            }
            cur = next;
        }
        for (o, t) in cur.iter().zip(y) {
            total += (o - t) * (o - t);
            count += 1;
        }
    }
    total / count as f64
}

/// Largest relative difference between backprop and central differences
/// over every weight and bias of `model`, with the relative error taken
/// against `max(|analytic|, |numeric|, floor)`.
pub fn gradient_check(
    model: &MlpModel,
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
    h: f64,
    floor: f64,
) -> f64 {
    let idx: Vec<usize> = (0..xs.len()).collect();
    let (_, grads) = model.loss_and_gradient(xs, ys, &idx);
    let mut worst: f64 = 0.0;
    for k in 0..model.layers.len() {
        let n_w = model.layers[k].weights.len();
        let n_b = model.layers[k].biases.len();
        for p in 0..n_w + n_b {
            let bump = |d: f64| {
                let mut layers = model.layers.clone();
                if p < n_w {
                    layers[k].weights[p] += d;
                } else {
                    layers[k].biases[p - n_w] += d;
                }
                reference_mse(&layers, xs, ys)
            };
            let numeric = (bump(h) - bump(-h)) / (2.0 * h);
            let analytic = if p < n_w {
                grads[k].weights[p]
            } else {
                grads[k].biases[p - n_w]
            };
            let denom = analytic.abs().max(numeric.abs()).max(floor);
            worst = worst.max((analytic - numeric).abs() / denom);
        }
    }
    worst
}

/// Kolmogorov-Smirnov two-sample critical value at level `alpha`.
pub fn ks_critical(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    c * ((n + m) as f64 / (n * m) as f64).sqrt()
}
