//! Acceptance suite: one pass/fail line per criterion, non-zero exit status if
//! any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use aucmax::data::{fit_apply_standardizer, generate_synthetic, split, write_feature_csv, SplitSpec, SynthSpec};
use aucmax::signal::io::{synthetic_trial, write_signal_csv};
use aucmax::signal::spectral::dft;
use aucmax::signal::{
    band_power_psd, bandpass_gain_sq, build_feature_sets, lagged_correlation, lowpass_gain_sq, plv, Band, BandDef,
    CorrelationMeans, FeatureLayout, FeatureManifest, FeatureSet, WindowSpec, MAX_BUTTERWORTH_ORDER,
};
use aucmax::solvers::{BroydenTau, DirectionRule};
use aucmax::{
    roc_auc, solve, AucObjective, Label, LabeledDataset, Method, PrimalDualState, SaddleObjective, SolverConfig,
};
use aucmax_cli::pipeline::{compare, prepare, BaselineOptions, CompareSettings, SplitName};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Check = Result<String, String>;

struct Criterion {
    id: u8,
    name: &'static str,
    budget: Duration,
    run: fn() -> Check,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn random_dataset(rng: &mut ChaCha8Rng, max_n: usize, max_d: usize) -> LabeledDataset {
    let n = rng.random_range(2..=max_n);
    let d = rng.random_range(1..=max_d);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
    let mut labels = vec![1.0, -1.0];
    labels.extend((2..n).map(|_| if rng.random_bool(0.4) { 1.0 } else { -1.0 }));
    LabeledDataset::from_rows(&rows, &labels).expect("valid random dataset")
}

fn rel(a: f64, b: f64) -> f64 {
    a / b.max(f64::MIN_POSITIVE)
}

fn gradient_hessian() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h = 1e-5;
    let (mut worst_g, mut worst_h) = (0.0f64, 0.0f64);
    let cases = 120;
    for case in 0..cases {
        let ds = random_dataset(&mut rng, 50, 10);
        let lambda = match case % 3 {
            0 => 0.0,
            1 => 1e-4,
            _ => rng.random_range(0.0..1.0),
        };
        let obj = AucObjective::with_lambda(&ds, lambda).map_err(err)?;
        let z = DVector::from_fn(obj.dim(), |_, _| rng.random_range(-2.0..2.0));
        let grad = obj.gradient(&z);
        let hess = obj.hessian(&z);
        let mut fd_grad = DVector::zeros(z.len());
        let mut fd_hess = DMatrix::zeros(z.len(), z.len());
        for j in 0..z.len() {
            let mut plus = z.clone();
            let mut minus = z.clone();
            plus[j] += h;
            minus[j] -= h;
            fd_grad[j] = (obj.value(&plus) - obj.value(&minus)) / (2.0 * h);
            fd_hess.set_column(j, &((obj.gradient(&plus) - obj.gradient(&minus)) / (2.0 * h)));
        }
        worst_g = worst_g.max(rel((&grad - &fd_grad).norm(), fd_grad.norm()));
        worst_h = worst_h.max(rel((&hess - &fd_hess).norm(), fd_hess.norm()));
    }
    ensure(worst_g <= 1e-6 && worst_h <= 1e-6, || {
        format!("max relative error gradient {worst_g:.2e}, hessian {worst_h:.2e}")
    })?;
    Ok(format!("{cases} pairs, max rel err gradient {worst_g:.1e}, hessian {worst_h:.1e}"))
}

fn newton_exactness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_time = Duration::ZERO;
    let mut worst_norm = 0.0f64;
    let instances = 40;
    for k in 0..instances {
        // alternate Gaussian class data and unstructured uniform data
        let ds = if k % 2 == 0 {
            generate_synthetic(&SynthSpec {
                n_samples: rng.random_range(20..=300),
                n_features: rng.random_range(1..=30),
                class_separation: rng.random_range(0.0..4.0),
                seed: rng.random(),
                ..SynthSpec::default()
            })
            .map_err(err)?
        } else {
            random_dataset(&mut rng, 200, 20)
        };
        let (n, d) = (ds.len(), ds.dim());
        let obj = AucObjective::with_lambda(&ds, 1e-4).map_err(err)?;
        let z0 = DVector::from_fn(obj.dim(), |_, _| 3.0 * standard_normal(&mut rng));
        let cfg = SolverConfig {
            max_iterations: 2,
            grad_tolerance: 1e-10,
            ..SolverConfig::with_method(Method::Newton)
        };
        let start = Instant::now();
        let result = solve(&obj, &z0, &cfg, None).map_err(err)?;
        worst_time = worst_time.max(start.elapsed());
        worst_norm = worst_norm.max(result.final_grad_norm);
        ensure(result.converged && result.iterations_used <= 2, || {
            format!("N={n} d={d}: grad norm {:.2e} after {} iterations", result.final_grad_norm, result.iterations_used)
        })?;
    }
    ensure(worst_time <= Duration::from_secs(1), || format!("slowest instance took {worst_time:?}"))?;
    Ok(format!(
        "{instances} instances, max final grad norm {worst_norm:.1e}, slowest {:.1} ms",
        worst_time.as_secs_f64() * 1e3
    ))
}

fn cross_solver_agreement() -> Check {
    let raw = generate_synthetic(&SynthSpec {
        n_samples: 200,
        n_features: 10,
        class_separation: 2.0,
        seed: 3,
        ..SynthSpec::default()
    })
    .map_err(err)?;
    let (ds, _, _) = fit_apply_standardizer(&raw, &raw).map_err(err)?;
    let obj = AucObjective::with_lambda(&ds, 1e-4).map_err(err)?;
    let z0 = PrimalDualState::zeros(ds.dim()).to_stacked();
    let qn = |tau| SolverConfig {
        broyden_tau: tau,
        direction_rule: DirectionRule::GreedyBasis,
        ..SolverConfig::with_method(Method::QnBroyden)
    };
    let runs = [
        ("alt-gda", SolverConfig::with_method(Method::AltGda)),
        ("sim-gda", SolverConfig::with_method(Method::SimGda)),
        ("extragradient", SolverConfig::with_method(Method::Extragradient)),
        ("newton", SolverConfig::with_method(Method::Newton)),
        ("qn-sr1", qn(BroydenTau::Sr1)),
        ("qn-bfgs", qn(BroydenTau::Bfgs)),
    ];
    let mut states = Vec::new();
    let mut iterations = Vec::new();
    for (name, cfg) in &runs {
        let result = solve(&obj, &z0, cfg, None).map_err(|e| format!("{name}: {e}"))?;
        ensure(result.converged, || format!("{name} did not converge in {} iterations", result.iterations_used))?;
        iterations.push(format!("{name} {}", result.iterations_used));
        states.push((name, result.final_state));
    }
    let mut worst = 0.0f64;
    for (i, (a, za)) in states.iter().enumerate() {
        for (b, zb) in &states[i + 1..] {
            let dist = (za - zb).norm();
            worst = worst.max(dist);
            ensure(dist <= 1e-2, || format!("{a} and {b} end {dist:.2e} apart"))?;
        }
    }
    Ok(format!("max pairwise distance {worst:.1e}; iterations: {}", iterations.join(", ")))
}

/// `f(x, y) = x y`.
struct Bilinear;

impl SaddleObjective for Bilinear {
    fn dim(&self) -> usize {
        2
    }
    fn min_dim(&self) -> usize {
        1
    }
    fn value(&self, z: &DVector<f64>) -> f64 {
        z[0] * z[1]
    }
    fn gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![z[1], z[0]])
    }
    fn hessian(&self, _z: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }
    fn hessian_is_constant(&self) -> bool {
        true
    }
}

/// Iterate norms `‖z_0‖ .. ‖z_k‖` of `method` on the bilinear toy.
fn bilinear_norms(method: Method, iterations: usize) -> Result<Vec<f64>, String> {
    let z0 = DVector::from_vec(vec![1.0, 1.0]);
    let mut norms = vec![z0.norm()];
    for k in 1..=iterations {
        let cfg = SolverConfig {
            step_size: Some(0.5),
            max_iterations: k,
            grad_tolerance: f64::MIN_POSITIVE,
            ..SolverConfig::with_method(method)
        };
        norms.push(solve(&Bilinear, &z0, &cfg, None).map_err(err)?.final_state.norm());
    }
    Ok(norms)
}

fn extragradient_stability() -> Check {
    let sim = bilinear_norms(Method::SimGda, 50)?;
    let eg = bilinear_norms(Method::Extragradient, 50)?;
    ensure(sim.windows(2).all(|w| w[1] > w[0]), || "sim-GDA norm failed to increase".into())?;
    ensure(eg.windows(2).all(|w| w[1] < w[0]), || "extragradient norm failed to decrease".into())?;
    Ok(format!(
        "after 50 steps sim-GDA norm {:.3e}, extragradient norm {:.3e} (start {:.3})",
        sim[50], eg[50], sim[0]
    ))
}

fn brute_force_auc(scores: &[f64], labels: &[Label]) -> f64 {
    let (mut twice, mut pairs) = (0u64, 0u64);
    for (s, l) in scores.iter().zip(labels) {
        if !l.is_positive() {
            continue;
        }
        for (t, m) in scores.iter().zip(labels) {
            if m.is_positive() {
                continue;
            }
            pairs += 1;
            twice += if s > t {
                2
            } else if s == t {
                1
            } else {
                0
            };
        }
    }
    twice as f64 / (2 * pairs) as f64
}

fn auc_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut with_ties = 0;
    for case in 0..1000 {
        let n = rng.random_range(2..=200);
        let scores: Vec<f64> = if case % 2 == 0 {
            (0..n).map(|_| f64::from(rng.random_range(0..6))).collect()
        } else {
            (0..n).map(|_| rng.random_range(-10.0..10.0)).collect()
        };
        let mut labels = vec![Label::Positive, Label::Negative];
        labels.extend((2..n).map(|_| if rng.random_bool(0.35) { Label::Positive } else { Label::Negative }));
        let fast = roc_auc(&scores, &labels).map_err(err)?;
        let slow = brute_force_auc(&scores, &labels);
        ensure(fast == slow, || format!("instance {case}: rank AUC {fast} vs pair count {slow}"))?;
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            with_ties += 1;
        }
    }
    Ok(format!("1000 instances exact, {with_ties} with tied scores"))
}

fn signal_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_parseval = 0.0f64;
    for len in [7usize, 256, 1000, 8064] {
        let x: Vec<f64> = (0..len).map(|_| standard_normal(&mut rng)).collect();
        let time: f64 = x.iter().map(|v| v * v).sum();
        let freq: f64 = dft(&x).iter().map(|c| c.norm_sqr()).sum::<f64>() / len as f64;
        worst_parseval = worst_parseval.max((time - freq).abs() / time);
    }
    ensure(worst_parseval <= 1e-9, || format!("Parseval relative error {worst_parseval:.2e}"))?;

    let mut worst_gain = 0.0f64;
    for order in 1..=MAX_BUTTERWORTH_ORDER {
        for cutoff in [4.0, 8.0, 13.0, 30.0, 45.0] {
            worst_gain = worst_gain.max((lowpass_gain_sq(cutoff, cutoff, order) - 0.5).abs());
        }
        for band in BandDef::defaults() {
            worst_gain = worst_gain.max((bandpass_gain_sq(band.low_hz, &band, order) - 0.5).abs());
            worst_gain = worst_gain.max((bandpass_gain_sq(band.high_hz, &band, order) - 0.5).abs());
        }
    }
    ensure(worst_gain <= 1e-12, || format!("gain² at cutoff off by {worst_gain:.2e}"))?;

    let fs = 128.0;
    let tone = |freq: f64, phase: f64| -> Vec<f64> {
        (0..256).map(|t| (2.0 * std::f64::consts::PI * freq * t as f64 / fs + phase).sin()).collect()
    };
    let bands = BandDef::defaults();
    let powers = band_power_psd(&tone(10.0, 0.3), fs, &bands).map_err(err)?;
    let alpha = bands.iter().position(|b| b.name == Band::Alpha).ok_or("no alpha band")?;
    let purity = powers[alpha] / powers.iter().sum::<f64>();
    ensure(purity >= 0.99, || format!("alpha purity {purity:.4}"))?;

    let noise: Vec<f64> = (0..256).map(|_| standard_normal(&mut rng)).collect();
    let self_plv = plv(&noise, &noise).map_err(err)?;
    ensure((self_plv - 1.0).abs() <= 1e-12, || format!("PLV(x, x) = {self_plv}"))?;
    let locked = plv(&tone(10.0, 0.0), &tone(10.0, -0.7)).map_err(err)?;
    ensure(locked >= 0.99, || format!("constant-lag PLV {locked:.4}"))?;

    let base: Vec<f64> = (0..259).map(|_| standard_normal(&mut rng)).collect();
    let x = &base[3..];
    let y = &base[..256];
    let rs: Vec<f64> = (0..=10)
        .map(|tau| lagged_correlation(x, y, tau, CorrelationMeans::FullSeries))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let best = (0..rs.len()).max_by(|&a, &b| rs[a].total_cmp(&rs[b])).unwrap_or(0);
    ensure(best == 3 && rs[3] >= 0.99, || format!("best lag {best}, r(3) = {:.4}", rs[3]))?;

    Ok(format!(
        "Parseval {worst_parseval:.1e}, gain² {worst_gain:.1e}, alpha purity {purity:.4}, PLV {locked:.4}, r(3) {:.4}",
        rs[3]
    ))
}

fn feature_shapes() -> Check {
    let trial = synthetic_trial(14, 128.0, 3.0, 60.0, 7).map_err(err)?;
    let channels: Vec<usize> = (0..14).collect();
    let spec = WindowSpec::default();
    let layout = FeatureLayout::default();
    let mut matrices = Vec::new();
    for set in FeatureSet::ALL {
        let m = build_feature_sets(&trial, &channels, &spec, set, &layout).map_err(err)?;
        let manifest = FeatureManifest::new(&m, &channels, &spec, 128.0, &layout).map_err(err)?;
        let block_total: usize = manifest.blocks.iter().map(|b| b.columns).sum();
        ensure(
            manifest.n_features == m.values().ncols()
                && block_total == m.values().ncols()
                && manifest.n_rows == m.values().nrows(),
            || format!("{set}: manifest disagrees with the realized matrix"),
        )?;
        matrices.push(m);
    }
    let widths: Vec<usize> = matrices.iter().map(|m| m.n_features()).collect();
    ensure(widths[0] == 112, || format!("set 1 has {} columns", widths[0]))?;
    ensure(matrices[0].n_rows() == 117, || format!("{} rows", matrices[0].n_rows()))?;
    for pair in matrices.windows(2) {
        let (small, big) = (&pair[0], &pair[1]);
        let k = small.n_features();
        ensure(big.n_features() > k, || "sets are not strictly nested".into())?;
        ensure(big.feature_names()[..k] == small.feature_names()[..], || "shared prefix names differ".into())?;
        let same = big.values().columns(0, k) == small.values().columns(0, k);
        ensure(same, || format!("{} and {} differ on the shared prefix", small.set(), big.set()))?;
    }
    Ok(format!("117 rows; columns per set {widths:?}"))
}

fn directional_table() -> Check {
    const SEEDS: u64 = 10;
    let names = ["logistic", "linear-svm", "auc-max"];
    let mut recall = [0.0; 3];
    let mut auc = [0.0; 3];
    for seed in 0..SEEDS {
        let data = generate_synthetic(&SynthSpec {
            n_samples: 3000,
            n_features: 20,
            positive_fraction: 1.0 / 3.0,
            class_separation: 1.1,
            seed,
        })
        .map_err(err)?;
        let columns: Vec<String> = (1..=20).map(|j| format!("x{j:02}")).collect();
        let prepared = prepare(&columns, &data, &SplitSpec { seed, ..SplitSpec::default() }).map_err(err)?;
        let settings = CompareSettings {
            solver: SolverConfig::default(),
            lambda: aucmax::DEFAULT_LAMBDA,
            threshold: None,
            c_grid: aucmax::baselines::DEFAULT_C_GRID.to_vec(),
            baseline: BaselineOptions::default(),
            seed,
        };
        let result = compare(&prepared, &settings).map_err(err)?;
        ensure(result.auc_solve.converged, || format!("seed {seed}: AUC solver did not converge"))?;
        for (k, name) in names.iter().enumerate() {
            let r = result.row(name, SplitName::Test).ok_or("missing row")?;
            recall[k] += r.recall / SEEDS as f64;
            auc[k] += r.auc / SEEDS as f64;
        }
    }
    let summary = format!(
        "mean test recall {:.3}/{:.3}/{:.3}, AUC {:.3}/{:.3}/{:.3} (logistic/svm/auc-max)",
        recall[0], recall[1], recall[2], auc[0], auc[1], auc[2]
    );
    for k in 0..2 {
        ensure((0.70..=0.85).contains(&auc[k]), || format!("{} AUC outside [0.70, 0.85]; {summary}", names[k]))?;
        ensure(recall[2] >= recall[k] + 0.10, || format!("recall gap over {} < 10 points; {summary}", names[k]))?;
        ensure(auc[2] >= auc[k] - 0.01, || format!("AUC below {} - 0.01; {summary}", names[k]))?;
    }
    Ok(summary)
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_aucmax")
}

fn aucmax_cmd(args: &[&str], cwd: &Path) -> Result<(), String> {
    let out = Command::new(bin())
        .args(args)
        .current_dir(cwd)
        .env_remove("AUCMAX_SEED")
        .output()
        .map_err(err)?;
    ensure(out.status.success(), || {
        format!("`aucmax {}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr))
    })
}

fn write_small_csv(path: &Path, seed: u64) -> Result<(), String> {
    let ds = generate_synthetic(&SynthSpec {
        n_samples: 500,
        n_features: 6,
        seed,
        ..SynthSpec::default()
    })
    .map_err(err)?;
    let names: Vec<String> = (1..=6).map(|j| format!("f{j}")).collect();
    let mut bytes = Vec::new();
    write_feature_csv(&mut bytes, &names, ds.features(), ds.labels()).map_err(err)?;
    std::fs::write(path, bytes).map_err(err)
}

fn read_json(path: &Path) -> Result<serde_json::Value, String> {
    serde_json::from_str(&std::fs::read_to_string(path).map_err(err)?).map_err(err)
}

fn protocol_fidelity() -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    write_small_csv(&dir.path().join("data.csv"), 9)?;
    aucmax_cmd(&["train", "--data", "data.csv", "--out-dir", "train"], dir.path())?;
    aucmax_cmd(&["compare", "--data", "data.csv", "--out-dir", "compare"], dir.path())?;
    let data = generate_synthetic(&SynthSpec {
        n_samples: 500,
        n_features: 6,
        seed: 9,
        ..SynthSpec::default()
    })
    .map_err(err)?;
    let (train, test) = split(&data, &SplitSpec::default()).map_err(err)?;
    for (manifest, solver_key) in [("train/manifest.json", "/config/auc/solver"), ("compare/manifest.json", "/config/auc/solver")] {
        let m = read_json(&dir.path().join(manifest))?;
        let solver = m.pointer(solver_key).ok_or("no solver config")?;
        let checks = [
            (solver["grad_tolerance"].as_f64() == Some(1e-3), "grad_tolerance = 0.001"),
            (solver["max_iterations"].as_u64() == Some(50_000), "max_iterations = 50000"),
            (m["config"]["split"]["train_fraction"].as_f64() == Some(0.8), "train_fraction = 0.8"),
            (m["config"]["standardize"].as_bool() == Some(true), "standardize = true"),
            (m["data"]["train_rows"].as_u64() == Some(train.len() as u64), "train rows = 80%"),
            (m["data"]["test_rows"].as_u64() == Some(test.len() as u64), "test rows = 20%"),
        ];
        for (ok, what) in checks {
            ensure(ok, || format!("{manifest}: expected {what}"))?;
        }
    }
    Ok(format!(
        "train and compare manifests: tol 0.001, cap 50000, 80/20 split ({}/{}), standardized",
        train.len(),
        test.len()
    ))
}

fn snapshot(root: &Path) -> Result<Vec<(PathBuf, Vec<u8>)>, String> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).map_err(err)? {
            let path = entry.map_err(err)?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.push((path.strip_prefix(root).map_err(err)?.to_path_buf(), std::fs::read(&path).map_err(err)?));
            }
        }
    }
    files.sort();
    Ok(files)
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    let inputs = dir.path().join("inputs");
    std::fs::create_dir(&inputs).map_err(err)?;
    let mut labels = String::from("trial,label\n");
    for (k, label) in [(1u64, "+1"), (2, "-1")] {
        let trial = synthetic_trial(14, 128.0, 3.0, 12.0, k).map_err(err)?;
        let mut bytes = Vec::new();
        write_signal_csv(&trial, &mut bytes).map_err(err)?;
        std::fs::write(inputs.join(format!("trial{k}.csv")), bytes).map_err(err)?;
        labels.push_str(&format!("trial{k},{label}\n"));
    }
    std::fs::write(inputs.join("labels.csv"), labels).map_err(err)?;

    let commands: Vec<Vec<&str>> = vec![
        vec!["synth", "--n", "600", "--dim", "8", "--sep", "1.5", "--seed", "7", "--out", "out/synth.csv"],
        vec![
            "extract", "inputs/trial1.csv", "inputs/trial2.csv", "--labels", "inputs/labels.csv", "--set", "4", "--out",
            "out/features.csv",
        ],
        vec!["train", "--data", "out/synth.csv", "--out-dir", "out/alt", "--seed", "3"],
        vec![
            "train", "--data", "out/synth.csv", "--out-dir", "out/qn", "--solver", "qn", "--direction", "random",
            "--broyden", "bfgs", "--seed", "3",
        ],
        vec!["train", "--data", "out/synth.csv", "--out-dir", "out/svm", "--solver", "svm", "--seed", "3"],
        vec!["compare", "--data", "out/synth.csv", "--out-dir", "out/compare", "--seed", "3"],
        vec!["eval", "--model", "out/alt/model.json", "--data", "out/synth.csv", "--out", "out/eval.json"],
    ];
    let run_all = || -> Result<Vec<(PathBuf, Vec<u8>)>, String> {
        for args in &commands {
            aucmax_cmd(args, dir.path())?;
        }
        snapshot(&dir.path().join("out"))
    };
    let first = run_all()?;
    std::fs::remove_dir_all(dir.path().join("out")).map_err(err)?;
    let second = run_all()?;
    ensure(first.len() == second.len(), || "different file sets".into())?;
    for ((pa, a), (pb, b)) in first.iter().zip(&second) {
        ensure(pa == pb && a == b, || format!("{} differs between runs", pa.display()))?;
    }
    let bytes: usize = first.iter().map(|(_, b)| b.len()).sum();
    Ok(format!(
        "{} commands, {} output files ({} KiB) byte-identical across runs",
        commands.len(),
        first.len(),
        bytes / 1024
    ))
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "gradient/Hessian vs finite differences", budget: Duration::from_secs(10), run: gradient_hessian },
        Criterion { id: 2, name: "Newton reaches the saddle in 2 steps", budget: Duration::from_secs(25), run: newton_exactness },
        Criterion { id: 3, name: "cross-solver saddle agreement", budget: Duration::from_secs(60), run: cross_solver_agreement },
        Criterion { id: 4, name: "extragradient vs GDA on f = xy", budget: Duration::from_secs(1), run: extragradient_stability },
        Criterion { id: 5, name: "rank AUC equals pair counting", budget: Duration::from_secs(30), run: auc_oracle },
        Criterion { id: 6, name: "signal-processing identities", budget: Duration::from_secs(10), run: signal_identities },
        Criterion { id: 7, name: "feature-set shapes and nesting", budget: Duration::from_secs(5), run: feature_shapes },
        Criterion { id: 8, name: "directional comparison on imbalanced data", budget: Duration::from_secs(300), run: directional_table },
        Criterion { id: 9, name: "protocol recorded in run manifests", budget: Duration::from_secs(60), run: protocol_fidelity },
        Criterion { id: 10, name: "byte-identical reruns", budget: Duration::from_secs(120), run: determinism },
    ];
    let mut failures = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > c.budget => Err(format!("{detail}; over the {:?} budget", c.budget)),
            other => other,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        if outcome.is_err() {
            failures += 1;
        }
        println!("{tag} [{:>2}] {} ({:.2} s): {detail}", c.id, c.name, elapsed.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
