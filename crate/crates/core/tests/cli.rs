use std::path::Path;
use std::process::Command;

use heston_sc::cli::main_with_args;
use heston_sc::collocation::CollocationBasis;
use heston_sc::regressor::MlpModel;

const TOY: &str = "seed = 3
[data]
schema = fxa
ranges = toy
n_sets = 100
t_min = 0.25
t_max = 0.28
schedule = from_origin
n_paths = 300
dt = 1/800
[basis]
m = 21
[train]
hidden = 20, 20
epochs = 5
batch_size = 256
";

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("heston-sc").chain(args.iter().copied()))
}

// Pricing config whose map is the identity on the 7 nodes.
fn identity_sa_config() -> String {
    let nodes = CollocationBasis::with_default_xi_bar(7)
        .unwrap()
        .nodes()
        .to_vec();
    let cvs: Vec<String> = nodes.iter().map(|x| format!("{x:?}")).collect();
    format!(
        "[heston]\nr = 0\nkappa = 1\ngamma = 0.5\nrho = 0\nv_bar = 0.04\nv0 = 0.04\n\
         [payoff]\nmaturity = 1\nintervals = 12\nstrikes = 0\n\
         [basis]\nm = 7\n[price]\nmode = sa\ncvs = {}\n",
        cvs.join(", ")
    )
}

#[test]
fn gen_data_is_reproducible_and_trains() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write(dir.path(), "toy.conf", TOY);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(
            run(&[
                "gen-data",
                "--config",
                &conf,
                "--out",
                out.to_str().unwrap()
            ]),
            0
        );
    }
    let first = std::fs::read(a.join("training.csv")).unwrap();
    assert_eq!(first, std::fs::read(b.join("training.csv")).unwrap());
    // Header plus 100 sets x 25 maturities.
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 1 + 2500);
    assert!(a.join("manifest-gen-data.json").is_file());

    assert_eq!(
        run(&["train", "--config", &conf, "--out", a.to_str().unwrap()]),
        0
    );
    let model = MlpModel::load(&a.join("model.json")).unwrap();
    assert_eq!(model.layer_sizes(), vec![7, 20, 20, 21]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("train_report.json")).unwrap())
            .unwrap();
    assert!(report.get("test_mse").is_some());
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    // No grid maturity inside [t_min, t_max].
    let empty = write(
        dir.path(),
        "empty.conf",
        &TOY.replace("t_min = 0.25", "t_min = 0.2501")
            .replace("t_max = 0.28", "t_max = 0.2512"),
    );
    assert_eq!(run(&["gen-data", "--config", &empty, "--out", out]), 2);
    let corrupt = write(dir.path(), "training.csv", "r,kappa\n0.1,not-a-number\n");
    let conf = write(
        dir.path(),
        "train.conf",
        &format!("{TOY}data = {corrupt}\n"),
    );
    assert_eq!(run(&["train", "--config", &conf, "--out", out]), 2);
    let conf = write(
        dir.path(),
        "mode.conf",
        &identity_sa_config().replace("mode = sa", "mode = nonsense"),
    );
    assert_eq!(run(&["price", "--config", &conf, "--out", out]), 2);
    assert_eq!(run(&["price", "--out", out]), 2);
    assert_eq!(
        run(&["price", "--config", "/nonexistent.conf", "--out", out]),
        2
    );
}

#[test]
fn semi_analytic_mode_on_identity_map() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write(dir.path(), "sa.conf", &identity_sa_config());
    let out = dir.path().join("out");
    assert_eq!(
        run(&["price", "--config", &conf, "--out", out.to_str().unwrap()]),
        0
    );
    let table = std::fs::read_to_string(out.join("prices.csv")).unwrap();
    let row: Vec<&str> = table.lines().nth(1).unwrap().split(',').collect();
    let price: f64 = row[3].parse().unwrap();
    assert!((price - 0.3989422804014327).abs() < 1e-12, "{table}");
}

#[test]
fn binary_reports_usage_errors() {
    let status = Command::new(env!("CARGO_BIN_EXE_heston-sc"))
        .arg("no-such-command")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let status = Command::new(env!("CARGO_BIN_EXE_heston-sc"))
        .arg("--help")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}
