//! `vce`: command-line frontend for the dimension and entropy toolkit.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use vce_core::convex::{
    dudley_bound, elton_extract, log_grid, min_signs_norm, sphere_mean_width, EltonOptions, NormedInstance,
    SymmetricPolytope,
};
use vce_core::coverings::{covering_number, packing_cover_bracket, BallShape, CoverMode};
use vce_core::dimensions::{boolean_vc, vc_limit, vc_scaled, VcResult};
use vce_core::empirical::{empirical_entropy, fat_shattering, FunctionClassSample};
use vce_core::extraction::{extract_coordinates, extract_cubes, refine_separation, CubeOptions, SetSystem};
use vce_core::harness::{run_suite, SuiteConfig, SuiteId, SCHEMA};
use vce_core::spaces::{Alphabet, PointSet, QuasiMetric};
use vce_core::{Budget, Result, VceError};

#[derive(Parser, Debug)]
#[command(name = "vce", version, about = "Scaled VC dimensions, covering numbers and cube extraction")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Seed for every random choice; echoed in the output.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Wall-clock cap in milliseconds for exact searches.
    #[arg(long, global = true, env = "VCE_BUDGET_MS")]
    budget_ms: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CoverArg {
    Exact,
    Bounds,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EntropyMode {
    Exact,
    Lower,
    Upper,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Scaled VC dimension of a point set.
    Vc {
        #[arg(long)]
        input: PathBuf,
        /// Quasi-metric JSON; defaults to the 0-1 metric on finite alphabets
        /// and the absolute difference otherwise.
        #[arg(long)]
        metric: Option<PathBuf>,
        /// Separation level; omitted means the limit as the level tends to 0.
        #[arg(long)]
        scale: Option<f64>,
        /// Use the Boolean fast path.
        #[arg(long)]
        boolean: bool,
    },
    /// Fat-shattering dimension of a function class sample.
    Fat {
        #[arg(long)]
        class: PathBuf,
        #[arg(long)]
        eps: f64,
    },
    /// Covering number of a point set.
    Cover {
        #[arg(long)]
        input: PathBuf,
        /// Ball shape as inline JSON or `@file`.
        #[arg(long)]
        gauge: String,
        #[arg(long)]
        radius: f64,
        #[arg(long, value_enum, default_value_t = CoverArg::Bounds)]
        mode: CoverArg,
        /// Draw centers from the set itself.
        #[arg(long)]
        restricted: bool,
    },
    /// Packing number with the covering numbers it brackets.
    Pack {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        gauge: String,
        #[arg(long)]
        radius: f64,
    },
    /// Recursive extraction of embedded cubes from a separated set.
    ExtractCubes {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        metric: Option<PathBuf>,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = CubeOptions::default().max_family)]
        max_family: usize,
    },
    /// Random coordinate subset meeting every set of a set system.
    ExtractCoords {
        #[arg(long)]
        sets: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(short)]
        k: usize,
        #[arg(long, default_value_t = 64)]
        max_attempts: usize,
    },
    /// Greedy subset separated at level t/2 on at least k coordinates.
    Refine {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(short)]
        k: usize,
        /// Constant used in the reported size guarantee.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
    /// Largest subsets dominating the l1 basis over a grid of levels.
    Elton {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = EltonOptions::default().trials)]
        trials: usize,
        #[arg(long, default_value_t = 32)]
        t_grid_size: usize,
        #[arg(long, default_value_t = EltonOptions::default().probes)]
        probes: usize,
        #[arg(long, default_value_t = EltonOptions::default().exponent)]
        exponent: f64,
    },
    /// Minimum norm of a signed sum of the instance vectors.
    Minsigns {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Covering number of a function class in empirical L2.
    Entropy {
        #[arg(long)]
        class: PathBuf,
        #[arg(long)]
        radius: f64,
        #[arg(long, value_enum, default_value_t = EntropyMode::Exact)]
        mode: EntropyMode,
    },
    /// Dudley integral of the volumetric entropy bound of a polytope.
    Dudley {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        /// Lower limit as a multiple of the mean width.
        #[arg(long, default_value_t = 0.5)]
        cutoff_factor: f64,
    },
    /// Run a randomized verification suite.
    Verify {
        #[arg(long)]
        suite: SuiteId,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
}

struct Inputs {
    digests: Vec<Value>,
}

impl Inputs {
    fn read(&mut self, path: &Path) -> Result<String> {
        let bytes = fs::read(path).map_err(|source| VceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.digests.push(json!({
            "path": path.display().to_string(),
            "sha256": hex::encode(Sha256::digest(&bytes)),
        }));
        String::from_utf8(bytes).map_err(|e| VceError::InvalidInput(format!("{}: {e}", path.display())))
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn in_file<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        VceError::Io { .. } => e,
        other => VceError::InvalidInput(format!("{}: {other}", path.display())),
    })
}

fn load_points(inputs: &mut Inputs, path: &Path) -> Result<PointSet> {
    let text = inputs.read(path)?;
    in_file(path, if is_csv(path) { PointSet::from_csv(&text, None) } else { PointSet::from_json(&text) })
}

fn load_class(inputs: &mut Inputs, path: &Path) -> Result<FunctionClassSample> {
    let text = inputs.read(path)?;
    in_file(
        path,
        if is_csv(path) { FunctionClassSample::from_csv(&text) } else { FunctionClassSample::from_json(&text) },
    )
}

fn load_metric(inputs: &mut Inputs, path: Option<&Path>, points: &PointSet) -> Result<QuasiMetric> {
    match path {
        Some(p) => {
            let text = inputs.read(p)?;
            in_file(p, QuasiMetric::from_json(&text))
        }
        None => Ok(match points.alphabet {
            Alphabet::Finite { .. } => QuasiMetric::zero_one(),
            _ => QuasiMetric::absolute(),
        }),
    }
}

fn load_gauge(inputs: &mut Inputs, arg: &str) -> Result<BallShape> {
    match arg.strip_prefix('@') {
        Some(file) => {
            let path = Path::new(file);
            let text = inputs.read(path)?;
            in_file(path, BallShape::from_json(&text))
        }
        None => BallShape::from_json(arg),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn vc_value(r: &VcResult) -> Value {
    let (sigma, pairs) = r
        .witness
        .as_ref()
        .map_or((Vec::new(), Vec::new()), |w| (w.sigma.clone(), w.pairs.clone()));
    json!({ "dimension": r.dimension, "sigma": sigma, "pairs": pairs, "scale": r.scale })
}

/// Runs one subcommand, returning its name, parameters and result.
fn dispatch(cmd: &Command, g: &Global, inputs: &mut Inputs) -> Result<(&'static str, Value, Value)> {
    let budget = Budget::from_option(g.budget_ms);
    let seed = g.seed;
    Ok(match cmd {
        Command::Vc { input, metric, scale, boolean } => {
            let a = load_points(inputs, input)?;
            let r = if *boolean {
                boolean_vc(&a, &budget)?
            } else {
                let m = load_metric(inputs, metric.as_deref(), &a)?;
                match scale {
                    Some(t) => vc_scaled(&a, &m, *t, &budget)?,
                    None => vc_limit(&a, &m, &budget)?,
                }
            };
            ("vc", json!({ "scale": scale, "boolean": boolean }), vc_value(&r))
        }
        Command::Fat { class, eps } => {
            let f = load_class(inputs, class)?;
            ("fat", json!({ "eps": eps }), to_value(&fat_shattering(&f, *eps, &budget)?))
        }
        Command::Cover { input, gauge, radius, mode, restricted } => {
            let a = load_points(inputs, input)?;
            let shape = load_gauge(inputs, gauge)?;
            let cm = match mode {
                CoverArg::Exact => CoverMode::Exact,
                CoverArg::Bounds => CoverMode::UpperBound,
            };
            let report = covering_number(&a, &shape, *radius, *restricted, cm, &budget)?;
            if *mode == CoverArg::Exact && report.exact.is_none() {
                return Err(VceError::TooLarge("exact cover needs a smaller set".into()));
            }
            (
                "cover",
                json!({ "gauge": shape, "radius": radius, "mode": mode.to_possible_value().map(|v| v.get_name().to_string()), "restricted": restricted }),
                to_value(&report),
            )
        }
        Command::Pack { input, gauge, radius } => {
            let a = load_points(inputs, input)?;
            let shape = load_gauge(inputs, gauge)?;
            let r = packing_cover_bracket(&a, &shape, *radius, &budget)?;
            ("pack", json!({ "gauge": shape, "radius": radius }), to_value(&r))
        }
        Command::ExtractCubes { input, metric, eps, max_family } => {
            let b = load_points(inputs, input)?;
            let m = load_metric(inputs, metric.as_deref(), &b)?;
            let opts = CubeOptions { seed, max_family: *max_family };
            let r = extract_cubes(&b, &m, *eps, opts)?;
            ("extract-cubes", json!({ "eps": eps, "max_family": max_family }), to_value(&r))
        }
        Command::ExtractCoords { sets, eps, k, max_attempts } => {
            let text = inputs.read(sets)?;
            let s = in_file(sets, SetSystem::from_json(&text))?;
            let r = extract_coordinates(&s, *eps, *k, seed, *max_attempts)?;
            ("extract-coords", json!({ "eps": eps, "k": k, "max_attempts": max_attempts }), to_value(&r))
        }
        Command::Refine { input, t, k, c } => {
            let a = load_points(inputs, input)?;
            let r = refine_separation(&a, *t, *k, *c)?;
            ("refine", json!({ "t": t, "k": k, "c": c }), to_value(&r))
        }
        Command::Elton { instance, trials, t_grid_size, probes, exponent } => {
            let text = inputs.read(instance)?;
            let inst = in_file(instance, NormedInstance::from_json(&text))?;
            if *t_grid_size == 0 {
                return Err(VceError::InvalidInput("t grid size must be positive".into()));
            }
            let opts = EltonOptions {
                trials: *trials,
                seed,
                t_grid: log_grid(0.02, 1.0, *t_grid_size),
                exponent: *exponent,
                probes: *probes,
            };
            let r = elton_extract(&inst, &opts, &budget)?;
            (
                "elton",
                json!({ "trials": trials, "t_grid_size": t_grid_size, "probes": probes, "exponent": exponent }),
                to_value(&r),
            )
        }
        Command::Minsigns { instance } => {
            let text = inputs.read(instance)?;
            let inst = in_file(instance, NormedInstance::from_json(&text))?;
            let n = inst.n();
            let basis: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
            let r = min_signs_norm(&basis, |x| inst.norm(x))?;
            ("minsigns", json!({}), to_value(&r))
        }
        Command::Entropy { class, radius, mode } => {
            let f = load_class(inputs, class)?;
            let cm = match mode {
                EntropyMode::Exact => CoverMode::Exact,
                EntropyMode::Lower => CoverMode::LowerBound,
                EntropyMode::Upper => CoverMode::UpperBound,
            };
            let r = empirical_entropy(&f, *radius, cm, &budget)?;
            let log = (r.value as f64).ln();
            let mut v = to_value(&r);
            v["log_value"] = json!(log);
            ("entropy", json!({ "radius": radius, "mode": format!("{mode:?}").to_lowercase() }), v)
        }
        Command::Dudley { input, trials, cutoff_factor } => {
            let text = inputs.read(input)?;
            let p = in_file(input, SymmetricPolytope::from_json(&text))?;
            let mstar = sphere_mean_width(&p, *trials, seed)?;
            let radius = p
                .generators
                .iter()
                .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
                .fold(0.0, f64::max);
            let n = p.n as f64;
            let m = mstar.estimate;
            let cutoff = cutoff_factor * m;
            // log N(K, B_2^n, t) <= n log(1 + 2 M* / t)
            let integral = dudley_bound(|t| n * (1.0 + 2.0 * m / t).ln(), cutoff, radius.max(cutoff))?;
            (
                "dudley",
                json!({ "trials": trials, "cutoff_factor": cutoff_factor }),
                json!({ "mstar": mstar, "cutoff": cutoff, "upper": radius.max(cutoff), "integral": integral }),
            )
        }
        Command::Verify { suite, trials } => {
            let mut cfg = SuiteConfig::new(*suite, *trials, seed);
            cfg.instance_budget_ms = g.budget_ms;
            let report = run_suite(&cfg)?;
            let mut v = to_value(&report);
            if let Value::Object(map) = &mut v {
                map.remove("timing");
            }
            ("verify", json!({ "suite": suite, "trials": trials }), v)
        }
    })
}

/// `path,value` rows for every leaf, numbers in shortest round-trip form.
fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, x)| flatten(&key(k), x, rows)),
        Value::Array(items) => items.iter().enumerate().for_each(|(i, x)| flatten(&key(&i.to_string()), x, rows)),
        Value::Null => rows.push((prefix.to_string(), String::new())),
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        Value::Bool(b) => rows.push((prefix.to_string(), b.to_string())),
        Value::Number(n) => rows.push((
            prefix.to_string(),
            n.as_f64().filter(|_| n.is_f64()).map_or_else(|| n.to_string(), |f| format!("{f}")),
        )),
    }
}

fn render(doc: &Value, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(doc).expect("json renders") + "\n",
        Format::Csv => {
            let mut rows = Vec::new();
            flatten("", doc, &mut rows);
            let quote = |s: &str| {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.to_string()
                }
            };
            let mut out = String::from("key,value\n");
            for (k, v) in rows {
                out.push_str(&format!("{},{}\n", quote(&k), quote(&v)));
            }
            out
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let mut inputs = Inputs { digests: Vec::new() };
    let start = Instant::now();
    let (name, params, result) = dispatch(&cli.command, &cli.global, &mut inputs)?;
    let mut doc = Map::new();
    doc.insert("schema".into(), json!(SCHEMA));
    doc.insert("command".into(), json!(name));
    doc.insert("seed".into(), json!(cli.global.seed));
    doc.insert("inputs".into(), Value::Array(inputs.digests));
    doc.insert("params".into(), params);
    doc.insert("result".into(), result);
    doc.insert("timing".into(), json!({ "elapsed_ms": start.elapsed().as_millis() as u64 }));
    let text = render(&Value::Object(doc), cli.global.format);
    match &cli.global.out {
        Some(path) => fs::write(path, text).map_err(|source| VceError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|source| VceError::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(t) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global() {
            eprintln!("vce: cannot size the thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vce: {e}");
            ExitCode::from(if e.is_budget() { 2 } else { 1 })
        }
    }
}
