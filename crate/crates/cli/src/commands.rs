use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use topocell::edt::{PointDistanceField, SiteModel};
use topocell::layout::{load_layout, save_layout, CellLayout, Point};
use topocell::losses::{LossWeights, TauRule};
use topocell::metrics::{evaluate, CovarianceCenter, EvalParams, MetricSelection, Sigma, TopoFdParams};
use topocell::persistence::{cubical_diagram_dims, cubical_sublevel_diagram, rips_diagram, FiltrationSpec};
use topocell::rng::child_seed;
use topocell::synth::{
    generate, k_discrepancy_test, optimize_layout, ring_scenario, ClassCount, EdgeCorrection, OptimizerConfig,
    PointProcessSpec, ProcessKind, RingSpec, ScenarioParams,
};
use topocell::{PersistenceDiagram, ScalarField};

use crate::manifest::{write_sidecar, RunManifest};
use crate::{svg, Cli, Command};

pub fn run(cli: &Cli) -> Result<()> {
    let start = Instant::now();
    let mut ctx = Ctx { cli, start };
    match &cli.command {
        Command::Dgm(a) => dgm(&mut ctx, a),
        Command::Eval(a) => eval(&mut ctx, a),
        Command::Loss(a) => loss(&mut ctx, a),
        Command::Optimize(a) => optimize(&mut ctx, a),
        Command::Gen(a) => gen(&mut ctx, a),
        Command::Kstats(a) => kstats(&mut ctx, a),
    }
}

struct Ctx<'a> {
    cli: &'a Cli,
    start: Instant,
}

impl Ctx<'_> {
    fn manifest(&self, command: &str, params: Value) -> RunManifest {
        RunManifest::new(command, self.cli.seed, params)
    }

    fn finish(&self, m: &mut RunManifest) {
        if self.cli.timing {
            m.wall_clock_ms = Some(self.start.elapsed().as_millis());
        }
    }

    fn dims(&self, default: &[u8]) -> Result<Vec<u8>> {
        let dims = self.cli.dims.clone().unwrap_or_else(|| default.to_vec());
        if dims.is_empty() || dims.iter().any(|&d| d > 1) {
            bail!(topocell::Error::Parameter("--dims must be a subset of {0, 1}".into()));
        }
        Ok(dims)
    }
}

/// Report envelope: schema version, manifest, then the command's payload.
#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    schema: u32,
    manifest: &'a RunManifest,
    #[serde(flatten)]
    body: T,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes a JSON report to `path`, or stdout when absent.
fn emit_report<T: Serialize>(path: Option<&Path>, manifest: &RunManifest, body: T) -> Result<()> {
    let text = serde_json::to_string_pretty(&Report { schema: crate::manifest::SCHEMA, manifest, body })? + "\n";
    match path {
        Some(p) => write_text(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path, m: &mut RunManifest) -> Result<CellLayout> {
    let layout = load_layout(path).with_context(|| format!("loading layout {}", path.display()))?;
    m.add_input(path)?;
    Ok(layout)
}

/// Layout CSVs in a directory, sorted by file name.
fn load_dir(dir: &Path, m: &mut RunManifest) -> Result<Vec<CellLayout>> {
    let entries = fs::read_dir(dir).map_err(|e| topocell::Error::Io { path: dir.to_path_buf(), source: e })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv") && !p.to_string_lossy().ends_with(".manifest.json"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!(topocell::Error::Validation(format!("no layout CSV files in {}", dir.display())));
    }
    files.iter().map(|f| load(f, m)).collect()
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Rips,
    Cubical,
}

#[derive(Debug, Args)]
pub struct DgmArgs {
    /// Layout CSV (with its JSON sidecar).
    #[arg(long, conflicts_with = "field")]
    pub input: Option<PathBuf>,
    /// Scalar field CSV: one grid row per line, comma separated.
    #[arg(long)]
    pub field: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "rips")]
    pub mode: Mode,
    /// Highest homology dimension.
    #[arg(long, default_value_t = 1)]
    pub dim: u8,
    /// Class to use; all classes together when absent.
    #[arg(long)]
    pub class: Option<usize>,
    /// Rips truncation scale; full filtration when absent.
    #[arg(long)]
    pub max_scale: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

fn read_field(path: &Path) -> Result<ScalarField> {
    let text = fs::read_to_string(path).map_err(|e| topocell::Error::Io { path: path.to_path_buf(), source: e })?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| topocell::Error::Parse { line: i + 1, message: e.to_string() })?;
        rows.push(row);
    }
    let w = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != w) {
        bail!(topocell::Error::Format("field rows differ in length".into()));
    }
    let h = rows.len();
    Ok(ScalarField::from_vec(w, h, rows.concat()))
}

fn dgm(ctx: &mut Ctx, a: &DgmArgs) -> Result<()> {
    let mut m = ctx.manifest(
        "dgm",
        json!({"mode": format!("{:?}", a.mode).to_lowercase(), "dim": a.dim, "class": a.class, "max_scale": a.max_scale, "dims": ctx.cli.dims}),
    );
    let diagram: PersistenceDiagram = match (&a.input, &a.field) {
        (None, Some(f)) => {
            let field = read_field(f)?;
            m.add_input(f)?;
            cubical_sublevel_diagram(&field, &FiltrationSpec::cubical(a.dim))?
        }
        (Some(input), None) => {
            let layout = load(input, &mut m)?;
            let points: Vec<Point> = match a.class {
                Some(c) if c >= layout.n_classes() => {
                    bail!(topocell::Error::Validation(format!("class {c} not in layout")))
                }
                Some(c) => layout.class_points(c).to_vec(),
                None => layout.points().concat(),
            };
            match a.mode {
                Mode::Rips => rips_diagram(&points, &FiltrationSpec::rips(a.dim, a.max_scale))?,
                Mode::Cubical if points.is_empty() => PersistenceDiagram::default(),
                Mode::Cubical => {
                    let field = PointDistanceField::new(&points, layout.width(), layout.height(), SiteModel::Footprint)?;
                    let dims: Vec<u8> = (0..=a.dim.min(1)).collect();
                    cubical_diagram_dims(&field.values, &dims)?
                }
            }
        }
        _ => bail!(topocell::Error::Validation("exactly one of --input or --field is required".into())),
    };
    let diagram = match &ctx.cli.dims {
        Some(dims) => {
            let bars = diagram.bars().iter().filter(|b| dims.contains(&b.dim)).copied().collect();
            let ess = diagram.essential().iter().filter(|e| dims.contains(&e.0)).copied().collect();
            PersistenceDiagram::with_essential(bars, ess)?
        }
        None => diagram,
    };
    let mut buf = Vec::new();
    diagram.write_csv(&mut buf, true)?;
    write_text(&a.out, std::str::from_utf8(&buf)?)?;
    ctx.finish(&mut m);
    write_sidecar(&a.out, &m)
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub syn: PathBuf,
    /// Subset of topofd, mmd, cce, tce.
    #[arg(long, value_delimiter = ',', default_value = "topofd,mmd,cce,tce")]
    pub metrics: Vec<String>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Append a flat CSV row here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Bar chart of per-class Fréchet distances.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub levels: usize,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub ridge: f64,
    /// MMD bandwidth: `auto` or a positive number.
    #[arg(long, default_value = "auto")]
    pub sigma: String,
    #[arg(long, value_enum, default_value = "barycenter")]
    pub center: Center,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Center {
    Barycenter,
    Empirical,
}

fn eval(ctx: &mut Ctx, a: &EvalArgs) -> Result<()> {
    let mut selection = MetricSelection { topofd: false, mmd: false, counts: false };
    for name in &a.metrics {
        match name.trim() {
            "topofd" => selection.topofd = true,
            "mmd" => selection.mmd = true,
            "cce" | "tce" => selection.counts = true,
            other => bail!(topocell::Error::Parameter(format!("unknown metric `{other}`"))),
        }
    }
    let sigma = match a.sigma.as_str() {
        "auto" => Sigma::Auto,
        s => Sigma::Fixed(s.parse().map_err(|_| topocell::Error::Parameter(format!("bad sigma `{s}`")))?),
    };
    let params = EvalParams {
        topofd: TopoFdParams {
            levels: a.levels,
            samples: a.samples,
            ridge: a.ridge,
            dims: ctx.dims(&[1])?,
            center: match a.center {
                Center::Barycenter => CovarianceCenter::Barycenter,
                Center::Empirical => CovarianceCenter::Empirical,
            },
            max_scale: None,
        },
        sigma,
    };
    let mut m = ctx.manifest("eval", json!({"metrics": a.metrics, "eval": params}));
    let reference = load_dir(&a.reference, &mut m)?;
    let syn = load_dir(&a.syn, &mut m)?;
    let mut report = evaluate(&reference, &syn, selection, &params)?;
    let wants = |k: &str| a.metrics.iter().any(|x| x.trim() == k);
    if !wants("cce") {
        report.cce = None;
    }
    if !wants("tce") {
        report.tce = None;
    }
    ctx.finish(&mut m);
    if let Some(path) = &a.csv {
        let cells = |v: &Option<Vec<Option<f64>>>| {
            v.as_ref().map_or(String::new(), |v| {
                v.iter().map(|x| x.map_or("".into(), |x| format!("{x:?}"))).collect::<Vec<_>>().join(";")
            })
        };
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:?}"));
        let cce = report.cce.as_ref().map_or(String::new(), |v| {
            v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(";")
        });
        let text = format!(
            "ref,syn,topofd,per_class_fd,mmd,cce,tce\n{},{},{},{},{},{},{}\n",
            a.reference.display(),
            a.syn.display(),
            opt(report.topofd),
            cells(&report.per_class_fd),
            opt(report.mmd),
            cce,
            opt(report.tce)
        );
        write_text(path, &text)?;
        write_sidecar(path, &m)?;
    }
    if let Some(path) = &a.svg {
        let labels = reference[0].classes().names().to_vec();
        let values = report.per_class_fd.clone().unwrap_or_else(|| vec![None; labels.len()]);
        write_text(path, &svg::bar_chart("per-class Frechet distance", &labels, &values))?;
    }
    emit_report(a.report.as_deref(), &m, &report)
}

#[derive(Debug, Args)]
pub struct WeightArgs {
    /// `lambda_count,lambda_intra,lambda_inter`.
    #[arg(long, value_delimiter = ',', default_values_t = [5e-4, 5e-4, 5e-4])]
    pub weights: Vec<f64>,
    /// Binarization threshold: `median` or a number.
    #[arg(long, default_value = "median")]
    pub tau: String,
    /// Pixel area of one cell.
    #[arg(long, default_value_t = 9.0)]
    pub delta: f64,
    /// Wasserstein order of the matching.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
}

impl WeightArgs {
    fn build(&self, dims: Vec<u8>) -> Result<LossWeights> {
        check_triple(&self.weights)?;
        let tau = match self.tau.as_str() {
            "median" => TauRule::Median,
            t => TauRule::Fixed(t.parse().map_err(|_| topocell::Error::Parameter(format!("bad tau `{t}`")))?),
        };
        let w = LossWeights {
            lambda_count: self.weights[0],
            lambda_intra: self.weights[1],
            lambda_inter: self.weights[2],
            tau_rule: tau,
            delta: self.delta,
            dims,
            p: self.p,
            site_model: SiteModel::Footprint,
        };
        w.validate()?;
        Ok(w)
    }
}

#[derive(Debug, Args)]
pub struct LossArgs {
    #[arg(long)]
    pub candidate: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[command(flatten)]
    pub weights: WeightArgs,
    /// Include the point gradient in the report.
    #[arg(long)]
    pub gradient: bool,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn loss(ctx: &mut Ctx, a: &LossArgs) -> Result<()> {
    let weights = a.weights.build(ctx.dims(&[1])?)?;
    let mut m = ctx.manifest("loss", json!({"weights": weights, "gradient": a.gradient}));
    let cand = load(&a.candidate, &mut m)?;
    let target = load(&a.target, &mut m)?;
    ctx.finish(&mut m);
    if a.gradient {
        let (b, g) = topocell::losses::loss_and_gradient(&cand, &target, &weights)?;
        emit_report(a.report.as_deref(), &m, json!({"breakdown": b, "gradient": g}))
    } else {
        let b = topocell::losses::total_loss(&cand, &target, &weights)?;
        emit_report(a.report.as_deref(), &m, json!({ "breakdown": b }))
    }
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub init: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    /// Step size in px per unit gradient.
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    /// `lambda_count,lambda_intra,lambda_inter`.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1.0, 1.0])]
    pub weights: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub trace_every: usize,
    /// Trace CSV with `step,count,intra,inter,total`.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Optimized layout CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn check_triple(w: &[f64]) -> Result<()> {
    if w.len() != 3 {
        bail!(topocell::Error::Parameter(format!("--weights needs 3 values, got {}", w.len())));
    }
    Ok(())
}

fn optimize(ctx: &mut Ctx, a: &OptimizeArgs) -> Result<()> {
    check_triple(&a.weights)?;
    let weights = LossWeights {
        dims: ctx.dims(&[1])?,
        ..LossWeights::with_lambdas(a.weights[0], a.weights[1], a.weights[2])
    };
    let cfg = OptimizerConfig { steps: a.steps, step_size: a.lr, weights, trace_every: a.trace_every };
    let mut m = ctx.manifest("optimize", json!({ "config": cfg }));
    let init = load(&a.init, &mut m)?;
    let target = load(&a.target, &mut m)?;
    let result = optimize_layout(&init, &target, &cfg)?;
    ctx.finish(&mut m);
    if let Some(path) = &a.trace {
        let mut text = String::from("step,count,intra,inter,total\n");
        for r in &result.trace {
            text.push_str(&format!("{},{:?},{:?},{:?},{:?}\n", r.step, r.count, r.intra, r.inter, r.total));
        }
        write_text(path, &text)?;
        write_sidecar(path, &m)?;
    }
    if let Some(path) = &a.out {
        save_layout(&result.layout, path)?;
        write_sidecar(path, &m)?;
    }
    let first = result.trace.first().map(|r| r.total);
    let last = result.trace.last().map(|r| r.total);
    emit_report(
        a.report.as_deref(),
        &m,
        json!({"steps_run": result.steps_run, "diverged": result.diverged, "initial_total": first, "final_total": last}),
    )
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Process {
    Poisson,
    Matern,
    Rings,
    /// Reference, faithful and split-ring sets in `ref/`, `set1/`, `set2/`.
    Scenario,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub process: Process,
    #[arg(long)]
    pub out: PathBuf,
    /// Layouts to generate (per set for `scenario`).
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 256)]
    pub height: usize,
    /// Per-class counts for `poisson`, per-class ring sizes for `rings`.
    #[arg(long, value_delimiter = ',', default_values_t = [20usize, 20, 20])]
    pub counts: Vec<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub min_separation: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub parent_intensity: f64,
    #[arg(long, default_value_t = 15.0)]
    pub cluster_radius: f64,
    #[arg(long, default_value_t = 8.0)]
    pub mean_offspring: f64,
    #[arg(long, default_value_t = 40.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
}

fn gen(ctx: &mut Ctx, a: &GenArgs) -> Result<()> {
    let seed = ctx.cli.seed;
    let mut m = ctx.manifest("gen", json!({
        "process": format!("{:?}", a.process).to_lowercase(), "n": a.n, "width": a.width, "height": a.height,
        "counts": a.counts, "min_separation": a.min_separation, "parent_intensity": a.parent_intensity,
        "cluster_radius": a.cluster_radius, "mean_offspring": a.mean_offspring, "radius": a.radius, "jitter": a.jitter,
    }));
    let mut written: Vec<PathBuf> = Vec::new();
    let mut save = |layout: &CellLayout, path: PathBuf| -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        save_layout(layout, &path)?;
        written.push(path);
        Ok(())
    };
    if let Process::Scenario = a.process {
        let params = ScenarioParams { width: a.width, height: a.height, layouts_per_set: a.n, ..Default::default() };
        let s = ring_scenario(&params, seed)?;
        for (dir, set) in [("ref", &s.reference), ("set1", &s.faithful), ("set2", &s.split)] {
            for (i, l) in set.iter().enumerate() {
                save(l, a.out.join(dir).join(format!("layout_{i:04}.csv")))?;
            }
        }
    } else {
        let classes = a.counts.len();
        for i in 0..a.n {
            let layout_seed = child_seed(seed, i as u64);
            let process = match a.process {
                Process::Poisson => ProcessKind::Poisson {
                    counts: a.counts.iter().map(|&c| ClassCount::Exact(c)).collect(),
                    min_separation: a.min_separation,
                },
                Process::Matern => ProcessKind::MaternCluster {
                    parent_intensity: a.parent_intensity,
                    cluster_radius: a.cluster_radius,
                    mean_offspring: a.mean_offspring,
                },
                Process::Rings => {
                    let step = a.width as f64 / (classes as f64 + 1.0);
                    ProcessKind::RingScene {
                        rings: a
                            .counts
                            .iter()
                            .enumerate()
                            .map(|(c, &n)| RingSpec {
                                class: c,
                                center: [step * (c as f64 + 1.0), a.height as f64 / 2.0],
                                radius: a.radius,
                                points: n,
                                jitter: a.jitter,
                                phase: 0.0,
                            })
                            .collect(),
                    }
                }
                Process::Scenario => unreachable!(),
            };
            let spec = PointProcessSpec { width: a.width, height: a.height, classes, process, seed: layout_seed };
            save(&generate(&spec)?, a.out.join(format!("layout_{i:04}.csv")))?;
        }
    }
    ctx.finish(&mut m);
    let files: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
    emit_report(Some(&a.out.join("manifest.json")), &m, json!({ "files": files }))
}

#[derive(Debug, Args)]
pub struct KstatsArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub syn: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [15.0, 30.0, 45.0, 60.0, 75.0, 90.0])]
    pub radii: Vec<f64>,
    /// Use the border-corrected estimator.
    #[arg(long)]
    pub border: bool,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn kstats(ctx: &mut Ctx, a: &KstatsArgs) -> Result<()> {
    let correction = if a.border { EdgeCorrection::Border } else { EdgeCorrection::None };
    let mut m = ctx.manifest("kstats", json!({"radii": a.radii, "correction": correction}));
    let reference = load_dir(&a.reference, &mut m)?;
    let syn = load_dir(&a.syn, &mut m)?;
    let report = k_discrepancy_test(&reference, &syn, &a.radii, correction)?;
    ctx.finish(&mut m);
    emit_report(a.report.as_deref(), &m, &report)
}
