//! Acceptance criteria, one line each. Set `ACCEPTANCE_ONLY=3,7` to run a
//! subset.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::Value;

use vce_core::convex::{
    convex_vc, elton_extract, gaussian_mean_norm, rudelson_default_points, EltonOptions, NormedInstance,
    SymmetricPolytope,
};
use vce_core::dimensions::embeds;
use vce_core::empirical::{fat_shattering, vc_fat_chain};
use vce_core::extraction::{cube_count_guarantee, extract_cubes, CubeOptions};
use vce_core::harness::{
    attempt_frequency, calibrate_coordinates, coordinate_k, cube_embeds_naive, fat_oracle, random_class,
    random_normed_instance, random_set_system, run_suite, seed_stability, separated_set, SuiteConfig, SuiteId,
};
use vce_core::rng::{derive_seed, Stream};
use vce_core::spaces::{min_pairwise_separation, QuasiMetric};
use vce_core::Budget;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn within(start: Instant, limit: Duration) -> bool {
    start.elapsed() <= limit
}

fn b1_identity() -> Verdict {
    let start = Instant::now();
    let mut bad = Vec::new();
    for n in [2, 4, 6] {
        for t in [0.25, 0.4, 0.5, 0.6, 1.0] {
            let got = convex_vc(&SymmetricPolytope::cross_polytope(n), t, &Budget::unlimited())
                .expect("cross polytope")
                .dimension;
            let want = ((2.0 / t + 1e-12).floor() as usize).min(n);
            if got != want {
                bad.push(format!("n={n} t={t}: {got} != {want}"));
            }
        }
    }
    let ok_time = within(start, Duration::from_secs(10));
    verdict(
        bad.is_empty() && ok_time,
        format!("15 cases, mismatches {:?}, {:.1} s", bad, start.elapsed().as_secs_f64()),
    )
}

fn sauer_shelah() -> Verdict {
    let start = Instant::now();
    let cfg = SuiteConfig::new(SuiteId::SauerShelah, 500, 2024);
    let r = run_suite(&cfg).expect("suite runs");
    let c = &r.checks["sauer_shelah"];
    let ok = c.checks == 500 && c.violations == 0 && r.skipped == 0 && cfg.n.1 <= 12;
    verdict(
        ok && within(start, Duration::from_secs(60)),
        format!("{} sets, {} violations, {:.1} s", c.checks, c.violations, start.elapsed().as_secs_f64()),
    )
}

fn cube_extraction() -> Verdict {
    let start = Instant::now();
    let metric = QuasiMetric::zero_one();
    let (mut instances, mut count_bad, mut embed_bad, mut min_slack) = (0, 0, 0, f64::INFINITY);
    let mut index = 0u64;
    while instances < 200 {
        let mut s = Stream::new(derive_seed(31, index));
        index += 1;
        let n = 4 + s.below(9);
        let p = 2 + s.below(3);
        let eps = [0.25, 1.0 / 3.0, 0.5][s.below(3)];
        let target = 4 + s.below(509);
        let need = (eps * n as f64 - 1e-9).ceil() as usize;
        let b = separated_set(&mut s, p, n, &metric, 0.0, need, target, 20 * target);
        if b.len() < 4 {
            continue;
        }
        let (min_sep, _) = min_pairwise_separation(&b, &metric, 0.0).expect("pairs");
        assert!(min_sep >= need, "generator broke separation");
        let rep = extract_cubes(&b, &metric, eps, CubeOptions { seed: index, ..CubeOptions::default() }).expect("extraction");
        let guarantee = cube_count_guarantee(b.len(), p, eps);
        let count = rep.output.cubes.len();
        min_slack = min_slack.min(count as f64 - guarantee);
        if (count as f64) < guarantee {
            count_bad += 1;
        }
        if !rep
            .output
            .cubes
            .iter()
            .all(|c| cube_embeds_naive(c, &b) && embeds(c, &b).unwrap_or(false) && c.is_large(&metric, 0.0))
        {
            embed_bad += 1;
        }
        instances += 1;
    }
    verdict(
        count_bad == 0 && embed_bad == 0 && within(start, Duration::from_secs(300)),
        format!(
            "{instances} instances, count shortfalls {count_bad}, failed re-checks {embed_bad}, min(count - guarantee) {min_slack}, {:.1} s",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn coordinate_extraction() -> Verdict {
    let start = Instant::now();
    let c = calibrate_coordinates(101, 30, 200, 0.5).expect("calibration");
    let trials = 1000;
    let floor = 0.5 - 3.0 * (0.25f64 / trials as f64).sqrt();
    let (mut checked, mut bad, mut worst) = (0, 0, f64::INFINITY);
    for i in 0..40u64 {
        let inst = random_set_system(&mut Stream::new(derive_seed(202, i)));
        let k = coordinate_k(&inst, c);
        if k > inst.system.n {
            continue;
        }
        let freq = attempt_frequency(&inst, k, trials, derive_seed(303, i)).expect("frequency");
        worst = worst.min(freq);
        checked += 1;
        if freq < floor {
            bad += 1;
        }
    }
    verdict(
        bad == 0 && checked > 0,
        format!(
            "c_hat {c:.4}, {checked} instances, lowest frequency {worst:.3} (floor {floor:.3}), {bad} below, {:.1} s",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn gaussian_closed_forms() -> Verdict {
    let start = Instant::now();
    let abs = gaussian_mean_norm(|g| g[0].abs(), 1, 100_000, 5).expect("mc");
    let l2 = gaussian_mean_norm(|g| (g[0] * g[0] + g[1] * g[1]).sqrt(), 2, 100_000, 6).expect("mc");
    let a_want = (2.0 / std::f64::consts::PI).sqrt();
    let b_want = (std::f64::consts::PI / 2.0).sqrt();
    let ok = (abs.estimate - a_want).abs() <= 3.0 * abs.stderr
        && (l2.estimate - b_want).abs() <= 3.0 * l2.stderr
        && abs.stderr < 0.005
        && l2.stderr < 0.005;
    verdict(
        ok && within(start, Duration::from_secs(5)),
        format!(
            "E|g| {:.4}±{:.4} (want {a_want:.4}), E|g|_2 {:.4}±{:.4} (want {b_want:.4}), {:.2} s",
            abs.estimate,
            abs.stderr,
            l2.estimate,
            l2.stderr,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn elton_validity() -> Verdict {
    let opts = EltonOptions::default();
    let ell1 = elton_extract(&NormedInstance::ell1(4), &opts, &Budget::unlimited()).expect("l1 instance");
    let mut violations = ell1.probe_violations;
    let mut probes = ell1.probes;
    for i in 0..8u64 {
        let mut s = Stream::new(derive_seed(404, i));
        let n = 3 + s.below(6);
        let extra = 1 + s.below(2 * n);
        let inst = random_normed_instance(&mut s, n, extra);
        let cert = elton_extract(&inst, &EltonOptions { seed: i, ..opts.clone() }, &Budget::unlimited()).expect("instance");
        violations += cert.probe_violations;
        probes += cert.probes;
    }
    verdict(
        ell1.s == 1.0 && ell1.t == 1.0 && violations == 0,
        format!("l1^4 gives s={} t={}; {probes} probes over 9 instances, {violations} violations", ell1.s, ell1.t),
    )
}

fn rudelson_frontier() -> Verdict {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut bad = 0;
    for delta in [0.3, 0.5, 0.8] {
        let inst = NormedInstance::rudelson(16, delta, rudelson_default_points(16), 7).expect("instance");
        let cert = elton_extract(&inst, &EltonOptions::default(), &Budget::unlimited()).expect("extraction");
        let bound = cert.delta_hat.powi(2) + 3.0 * 2.0 * cert.delta_hat * cert.delta_stderr;
        let worst = cert
            .certified
            .iter()
            .map(|c| c.s * c.t * c.t)
            .fold(0.0f64, f64::max);
        let over: Vec<String> = cert
            .certified
            .iter()
            .filter(|c| c.s * c.t * c.t > bound)
            .map(|c| format!("(s={:.4}, t={:.4})", c.s, c.t))
            .collect();
        bad += over.len();
        lines.push(format!(
            "delta={delta}: delta_hat {:.4}, chosen (s={:.4}, t={:.4}), max s t^2 {worst:.4} vs {bound:.4}, over: [{}]",
            cert.delta_hat,
            cert.s,
            cert.t,
            over.join(" ")
        ));
    }
    let ok_time = within(start, Duration::from_secs(600));
    verdict(
        bad == 0 && ok_time,
        format!("{}; {:.0} s", lines.join("; "), start.elapsed().as_secs_f64()),
    )
}

/// Classes on the lattice `h Z` with margins on `h/2 Z`, where the grid
/// oracle with step `h/2` is exact.
fn lattice_classes() -> Vec<(u64, vce_core::empirical::FunctionClassSample)> {
    (0..100u64)
        .map(|i| {
            let mut s = Stream::new(derive_seed(505, i));
            let m = 2 + s.below(39);
            let n = 1 + s.below(8);
            (i, random_class(&mut s, m, n, Some(0.25)))
        })
        .collect()
}

fn fat_oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let mut bad = Vec::new();
    let mut dims = [0usize; 9];
    for (i, f) in lattice_classes() {
        let eps = [0.125, 0.25, 0.375][(i % 3) as usize];
        let got = fat_shattering(&f, eps, &Budget::unlimited()).expect("fat").dimension;
        let want = fat_oracle(&f, eps, 0.125);
        dims[got.min(8)] += 1;
        if got != want {
            bad.push(format!("class {i}: {got} != {want}"));
        }
    }
    verdict(
        bad.is_empty() && within(start, Duration::from_secs(600)),
        format!(
            "100 classes, dimension histogram {:?}, discrepancies {:?}, {:.1} s",
            dims,
            bad,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn fat_entropy_chain() -> Verdict {
    let start = Instant::now();
    let mut chain_bad = 0;
    let mut chains = 0;
    for (_, f) in lattice_classes() {
        for t in [0.25, 0.5, 0.75] {
            let c = vc_fat_chain(&f, t, &Budget::unlimited()).expect("chain");
            chains += 1;
            chain_bad += usize::from(!c.holds);
        }
    }
    let cfg = SuiteConfig::new(SuiteId::ThmFat, 60, 0);
    let st = seed_stability(&cfg, &[1, 2, 3, 4, 5]).expect("stability");
    let report = run_suite(&SuiteConfig { seed: 1, ..cfg }).expect("suite");
    let suite_chain = report.checks.get("vc_fat_chain").map_or(0, |c| c.violations);
    verdict(
        chain_bad == 0 && suite_chain == 0 && st.stable,
        format!(
            "{chains} chains, {chain_bad} violations; suite chain violations {suite_chain}; fitted C over 5 seeds {:?}, spread {:.3} ({}); {:.1} s",
            st.constants.iter().map(|c| format!("{c:.3}")).collect::<Vec<_>>(),
            st.spread,
            if st.stable { "stable" } else { "unstable" },
            start.elapsed().as_secs_f64()
        ),
    )
}

fn duality_sandwiches() -> Verdict {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut bad = 0;
    let mut total = 0;
    for (suite, trials) in [
        (SuiteId::InProduct, 200),
        (SuiteId::InBinfty, 200),
        (SuiteId::BinftyThm, 100),
        (SuiteId::LinftyVsL1, 200),
        (SuiteId::ThmFat, 200),
        (SuiteId::Haussler, 200),
    ] {
        let r = run_suite(&SuiteConfig::new(suite, trials, 77)).expect("suite");
        let c = r.checks.get("sandwich").cloned().unwrap_or_default();
        bad += c.violations;
        total += c.checks;
        parts.push(format!("{suite} {}/{}", c.checks - c.violations, c.checks));
    }
    verdict(
        bad == 0 && total > 0,
        format!("{} ; {:.1} s", parts.join(", "), start.elapsed().as_secs_f64()),
    )
}

fn write_inputs(dir: &Path) {
    use std::fs::write;
    let cube: Vec<Vec<u8>> = (0..8u8).map(|m| (0..3).map(|i| (m >> i) & 1).collect()).collect();
    write(
        dir.join("cube3.json"),
        serde_json::json!({ "alphabet": { "kind": "finite", "size": 2 }, "points": cube }).to_string(),
    )
    .unwrap();
    let mut s = Stream::new(9);
    let pts: Vec<Vec<f64>> = (0..24).map(|_| (0..3).map(|_| s.uniform_in(-1.0, 1.0)).collect()).collect();
    write(
        dir.join("pts.json"),
        serde_json::json!({ "alphabet": { "kind": "interval" }, "points": pts }).to_string(),
    )
    .unwrap();
    let f = random_class(&mut s, 20, 5, Some(0.25));
    let csv: String = f
        .values
        .iter()
        .map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    write(dir.join("f.csv"), csv).unwrap();
    let sets: Vec<Vec<usize>> = (0..12).map(|i| (0..40).filter(|j| (j * 7 + i) % 3 != 0).collect()).collect();
    write(dir.join("sets.json"), serde_json::json!({ "n": 40, "sets": sets }).to_string()).unwrap();
    let inst = random_normed_instance(&mut s, 6, 6);
    write(dir.join("inst.json"), serde_json::to_string(&inst).unwrap()).unwrap();
    write(
        dir.join("poly.json"),
        serde_json::json!({ "n": 3, "generators": [[1.0, 0.2, -0.3], [0.1, -0.8, 0.5], [0.4, 0.4, 0.9]] }).to_string(),
    )
    .unwrap();
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("timing");
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn cli_determinism() -> Verdict {
    let dir = tempfile::tempdir().expect("temp dir");
    write_inputs(dir.path());
    let l2 = r#"{"kind":"lp","p":2,"normalization":"n_to_1_over_p"}"#;
    let runs: Vec<Vec<&str>> = vec![
        vec!["vc", "--input", "cube3.json", "--boolean"],
        vec!["vc", "--input", "pts.json", "--scale", "0.5"],
        vec!["fat", "--class", "f.csv", "--eps", "0.25"],
        vec!["cover", "--input", "pts.json", "--gauge", l2, "--radius", "0.5", "--mode", "exact"],
        vec!["pack", "--input", "pts.json", "--gauge", l2, "--radius", "0.5"],
        vec!["extract-cubes", "--input", "cube3.json", "--eps", "0.3"],
        vec!["extract-coords", "--sets", "sets.json", "--eps", "0.3", "-k", "30"],
        vec!["refine", "--input", "pts.json", "--t", "0.1", "-k", "1"],
        vec!["elton", "--instance", "inst.json", "--trials", "20000"],
        vec!["minsigns", "--instance", "inst.json"],
        vec!["entropy", "--class", "f.csv", "--radius", "0.5"],
        vec!["dudley", "--input", "poly.json", "--trials", "20000"],
        vec!["verify", "--suite", "sauer-shelah", "--trials", "50"],
        vec!["verify", "--suite", "in-binfty", "--trials", "20"],
        vec!["verify", "--suite", "fat-chain", "--trials", "20"],
    ];
    let exe = PathBuf::from(env!("CARGO_BIN_EXE_vce"));
    let mut differing = Vec::new();
    let mut failed = Vec::new();
    for (i, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for threads in ["1", "2", "4"] {
            let out = dir.path().join(format!("r{i}_{threads}.json"));
            let status = Command::new(&exe)
                .current_dir(dir.path())
                .args(args)
                .args(["--seed", "7", "--threads", threads, "--out"])
                .arg(&out)
                .status()
                .expect("spawn vce");
            if !status.success() {
                failed.push(format!("{} ({status})", args.join(" ")));
                break;
            }
            let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).expect("json output");
            strip_timing(&mut v);
            outputs.push(serde_json::to_string(&v).unwrap());
        }
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            differing.push(args[0].to_string());
        }
    }
    verdict(
        failed.is_empty() && differing.is_empty(),
        format!(
            "{} invocations x 3 thread counts; differing {:?}; failed {:?}",
            runs.len(),
            differing,
            failed
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Verdict); 11] = [
        (1, "cross-polytope VC identity", b1_identity),
        (2, "Sauer-Shelah suite", sauer_shelah),
        (3, "cube extraction count and re-check", cube_extraction),
        (4, "coordinate extraction frequency", coordinate_extraction),
        (5, "Gaussian closed forms", gaussian_closed_forms),
        (6, "Elton certificate validity", elton_validity),
        (7, "Rudelson frontier", rudelson_frontier),
        (8, "fat-shattering oracle equivalence", fat_oracle_equivalence),
        (9, "fat entropy fit and VC-fat chain", fat_entropy_chain),
        (10, "covering duality sandwiches", duality_sandwiches),
        (11, "CLI determinism across thread counts", cli_determinism),
    ];
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failures = 0;
    for (id, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let v = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        failures += usize::from(!v.pass);
        println!("criterion {id:>2} {}: {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
