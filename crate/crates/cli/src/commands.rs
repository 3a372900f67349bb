use std::path::{Path, PathBuf};

use clothfit_core::bo::{estimate, Estimate};
use clothfit_core::config::{PhysicalParams, RunConfig};
use clothfit_core::dataset::{generate_dataset, generate_target, ingest_capture, Manifest, Split};
use clothfit_core::embed::{load_params, save_params, train_manifest, NetParams};
use clothfit_core::eval::{evaluate_manifest, metrics};
use clothfit_core::sim::{io::write_mesh, Simulator};
use clothfit_core::Error;

use crate::plot::{stiffness_csv, stiffness_svg};
use crate::summary::Summary;
use crate::{Cli, Command, EstimateArgs, EvalArgs, GenDatasetArgs, MakeTargetArgs, ParamArgs, PlotArgs, SimulateArgs, TrainArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    /// 2 for anything the caller got wrong in flags or configuration,
    /// 1 for failures inside the pipeline.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Core(Error::Config(_) | Error::UnknownStrategy { .. }) => 2,
            CliError::Core(_) => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => RunConfig::load(p).map_err(|e| CliError::Usage(format!("bad config: {e}"))),
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.into(), source: e })?;
    }
    std::fs::write(path, contents).map_err(|e| Error::Io { path: path.into(), source: e })?;
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.into(), source: e })?;
    Ok(())
}

pub fn run(cli: Cli) -> Result<String> {
    let mut config = load_config(cli.config.as_deref())?;
    let out = cli.out;
    let seed = cli.seed;
    let summary = match cli.command {
        Command::Simulate(a) => simulate(&mut config, a, seed, out)?,
        Command::GenDataset(a) => gen_dataset(&mut config, a, seed, out)?,
        Command::MakeTarget(a) => make_target(&mut config, a, seed, out)?,
        Command::Ingest(a) => {
            let m = ingest_capture(&config, &a.material, &a.capture)?;
            Summary::new("ingest")
                .with("material", &m.material)
                .with("frames", m.frames)
                .with("manifest", a.capture.join(clothfit_core::dataset::MANIFEST_FILE).display())
        }
        Command::Train(a) => train(&mut config, a, seed, out)?,
        Command::Eval(a) => eval(&mut config, a, out)?,
        Command::Estimate(a) => run_estimate(&mut config, a, seed, out)?,
        Command::PlotStiffness(a) => plot_stiffness(&config, a, out)?,
        Command::PrintConfig => {
            let json = config.to_json();
            return match out {
                Some(path) => {
                    write(&path, &json)?;
                    Ok(Summary::new("print-config")
                        .with("digest", config.digest())
                        .with("out", path.display())
                        .to_string())
                }
                None => Ok(json),
            };
        }
    };
    Ok(summary.to_string())
}

fn params_for(config: &RunConfig, material: &str, p: &ParamArgs) -> Result<PhysicalParams> {
    let space = config.scene.search_space(config.material(material)?);
    let centre = space.center();
    Ok(PhysicalParams {
        stiffness_scale: p.stiffness.unwrap_or(centre.stiffness_scale),
        wind_speed: p.wind.unwrap_or(centre.wind_speed),
        area_weight: p.area_weight.unwrap_or(centre.area_weight),
    })
}

fn simulate(config: &mut RunConfig, a: SimulateArgs, seed: Option<u64>, out: Option<PathBuf>) -> Result<Summary> {
    if let Some(s) = seed {
        config.sim.seed = s;
    }
    let spec = config.material(&a.material)?.clone();
    let params = params_for(config, &a.material, &a.params)?;
    let frames = a.frames.unwrap_or(config.dataset.frames);
    let mesh = config.scene.mesh(&params)?;
    let mut sim = Simulator::new(
        config.scene.material_params(&spec, &params),
        config.scene.wind(&params),
        config.sim.clone().with_frames(frames),
    )?;
    let snapshots = sim.run(mesh)?;
    let dir = out.unwrap_or_else(|| PathBuf::from("simulation"));
    create_dir(&dir)?;
    for (i, m) in snapshots.iter().enumerate() {
        write_mesh(&dir.join(format!("{i:04}.mesh")), m)?;
    }
    let last = snapshots.last().expect("at least one frame").centroid();
    Ok(Summary::new("simulate")
        .with("material", &a.material)
        .with("stiffness_scale", params.stiffness_scale)
        .with("wind_speed", params.wind_speed)
        .with("area_weight", params.area_weight)
        .with("frames", snapshots.len())
        .with("final_centroid", format!("{:.6},{:.6},{:.6}", last.x, last.y, last.z))
        .with("out", dir.display()))
}

fn gen_dataset(config: &mut RunConfig, a: GenDatasetArgs, seed: Option<u64>, out: Option<PathBuf>) -> Result<Summary> {
    if let Some(s) = seed {
        config.seed = s;
    }
    let d = &mut config.dataset;
    d.combinations = a.combos.unwrap_or(d.combinations);
    d.frames = a.frames.unwrap_or(d.frames);
    d.cameras = a.cameras.unwrap_or(d.cameras);
    d.workers = a.workers.unwrap_or(d.workers);
    let root = out.unwrap_or_else(|| PathBuf::from("dataset"));
    let m = generate_dataset(config, &a.material, &root)?;
    Ok(Summary::new("gen-dataset")
        .with("material", &m.material)
        .with("combinations", m.combinations.len())
        .with("failures", m.failures.len())
        .with("samples", m.samples.len())
        .with("digest", &m.config_digest)
        .with("manifest", root.join(clothfit_core::dataset::MANIFEST_FILE).display()))
}

fn make_target(config: &mut RunConfig, a: MakeTargetArgs, seed: Option<u64>, out: Option<PathBuf>) -> Result<Summary> {
    let params = params_for(config, &a.material, &a.params)?;
    if let Some(f) = a.frames {
        config.dataset.frames = f;
    }
    let root = out.unwrap_or_else(|| PathBuf::from("target"));
    let m = generate_target(config, &a.material, &params, a.cameras, seed.unwrap_or(config.seed), &root)?;
    Ok(Summary::new("make-target")
        .with("material", &m.material)
        .with("stiffness_scale", params.stiffness_scale)
        .with("wind_speed", params.wind_speed)
        .with("area_weight", params.area_weight)
        .with("cameras", m.cameras)
        .with("frames", m.frames)
        .with("manifest", root.join(clothfit_core::dataset::MANIFEST_FILE).display()))
}

fn default_split(m: &Manifest, preferred: Split) -> Split {
    if m.cameras >= 2 {
        preferred
    } else {
        Split::All
    }
}

/// Six significant digits, trailing zeros dropped: `0.1^3 * 1e-2` prints
/// as `1e-5` rather than `1.0000000000000002e-5`.
fn short_float(v: f64) -> String {
    let s = format!("{v:.5e}");
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let m = mantissa.trim_end_matches('0').trim_end_matches('.');
            format!("{m}e{exp}")
        }
        None => s,
    }
}

/// `1e-2@0,1e-3@8,...`: each rate with the first epoch it applies to.
fn lr_schedule(config: &RunConfig) -> String {
    let t = &config.train;
    let mut parts: Vec<String> = Vec::new();
    let mut last = None;
    for epoch in 0..t.epochs {
        let lr = t.learning_rate_at(epoch);
        if last != Some(lr) {
            parts.push(format!("{}@{epoch}", short_float(lr)));
            last = Some(lr);
        }
    }
    parts.join(",")
}

fn train(config: &mut RunConfig, a: TrainArgs, seed: Option<u64>, out: Option<PathBuf>) -> Result<Summary> {
    if let Some(s) = seed {
        config.net.seed = s;
        config.train.seed = s;
    }
    config.train.epochs = a.epochs.unwrap_or(config.train.epochs);
    config.train.learning_rate = a.lr.unwrap_or(config.train.learning_rate);
    config.train.validate()?;
    let manifest = Manifest::read(&a.dataset)?;
    let root = Manifest::root_of(&a.dataset);
    let split = a.split.map(Split::from).unwrap_or_else(|| default_split(&manifest, Split::Train));
    let trained = train_manifest(&config.net, &config.train, &manifest, &root, config.render.bounds, split)?;
    let path = out.unwrap_or_else(|| PathBuf::from("net.bin"));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    save_params(&path, &trained.params, &config.digest())?;
    let history = path.with_extension("history.json");
    write(&history, serde_json::to_string_pretty(&trained.history).map_err(Error::from)? + "\n")?;
    let final_loss = trained.history.last().map_or(f64::NAN, |h| h.mean_loss);
    Ok(Summary::new("train")
        .with("material", &manifest.material)
        .with("split", format!("{split:?}").to_lowercase())
        .with("epochs", config.train.epochs)
        .with("lr_schedule", lr_schedule(config))
        .with("final_loss", format!("{final_loss:.6}"))
        .with("parameters", trained.params.parameter_count())
        .with("out", path.display()))
}

fn load_net(path: &Path, config: &RunConfig) -> Result<NetParams> {
    let (net, digest) = load_params(path)?;
    let mut architecture = net.config.clone();
    architecture.seed = config.net.seed;
    if architecture != config.net {
        log::warn!("{} holds a different architecture than configured; using the file's", path.display());
    }
    log::info!("{} trained under config {digest}", path.display());
    Ok(net)
}

fn eval(config: &mut RunConfig, a: EvalArgs, out: Option<PathBuf>) -> Result<Summary> {
    if let Some(m) = a.metric {
        config.eval.metric = m;
    }
    let metric = metrics().create(&config.eval.metric)?;
    let net = load_net(&a.net, config)?;
    let manifest = Manifest::read(&a.dataset)?;
    let root = Manifest::root_of(&a.dataset);
    let split = a.split.map(Split::from).unwrap_or_else(|| default_split(&manifest, Split::Holdout));
    let report = evaluate_manifest(&net, &manifest, &root, config.render.bounds, split, metric.as_ref())?;
    eprint!("{}", report.to_table());
    let mut s = Summary::new("eval")
        .with("material", &report.material)
        .with("metric", &report.metric)
        .with("split", format!("{split:?}").to_lowercase())
        .with("accuracy", format!("{:.4}", report.accuracy))
        .with("n", report.n_samples);
    if let Some(path) = out {
        write(&path, report.to_json())?;
        s = s.with("out", path.display());
    }
    Ok(s)
}

fn run_estimate(config: &mut RunConfig, a: EstimateArgs, seed: Option<u64>, out: Option<PathBuf>) -> Result<Summary> {
    if let Some(s) = seed {
        config.bo.seed = s;
    }
    config.bo.budget = a.budget.unwrap_or(config.bo.budget);
    if let Some(acq) = a.acquisition {
        config.bo.acquisition = acq;
    }
    config.bo.validate()?;
    let net = load_net(&a.net, config)?;
    let target = Manifest::read(&a.target)?;
    let root = Manifest::root_of(&a.target);
    let est = estimate(config, &target, &root, &net)?;
    let dir = out.unwrap_or_else(|| PathBuf::from("estimate"));
    create_dir(&dir)?;
    let trace = est.trace.as_ref().expect("estimate carries its trace");
    trace.write(&dir.join("trace.jsonl"))?;
    write(&dir.join("estimate.json"), serde_json::to_string_pretty(&est).map_err(Error::from)? + "\n")?;
    let p = est.params;
    let mut s = Summary::new("estimate")
        .with("material", &est.material)
        .with("stiffness_scale", format!("{:.6}", p.stiffness_scale))
        .with("wind_speed", format!("{:.6}", p.wind_speed))
        .with("area_weight", format!("{:.6}", p.area_weight))
        .with("objective", format!("{:.6e}", est.objective))
        .with("iterations", est.iterations)
        .with("stop", format!("{:?}", trace.stop).to_lowercase());
    if let Some(e) = &est.errors {
        s = s
            .with("wind_error", format!("{:.4}", e.wind_speed))
            .with("area_weight_error", format!("{:.4}", e.area_weight));
    }
    Ok(s.with("out", dir.display()))
}

fn plot_stiffness(config: &RunConfig, a: PlotArgs, out: Option<PathBuf>) -> Result<Summary> {
    let (scale, material) = match (&a.estimate, a.scale) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            let est: Estimate = serde_json::from_str(&text).map_err(|e| Error::Format {
                path: path.clone(),
                msg: e.to_string(),
            })?;
            (est.params.stiffness_scale, a.material.unwrap_or(est.material))
        }
        (None, Some(scale)) => (
            scale,
            a.material.ok_or_else(|| CliError::Usage("--scale needs --material".into()))?,
        ),
        (None, None) => return Err(CliError::Usage("give --estimate or --scale".into())),
    };
    let spec = config.material(&material)?;
    let mut m = spec.bend_matrix;
    for v in m.iter_mut().flatten() {
        *v *= scale;
    }
    let dir = out.unwrap_or_else(|| PathBuf::from("plots"));
    create_dir(&dir)?;
    write(&dir.join("stiffness.csv"), stiffness_csv(&m))?;
    let title = format!("{material}: bending stiffness, scale {scale:.3}");
    write(&dir.join("stiffness.svg"), stiffness_svg(&m, &title))?;
    Ok(Summary::new("plot-stiffness")
        .with("material", &material)
        .with("stiffness_scale", scale)
        .with("out", dir.display()))
}
