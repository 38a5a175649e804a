//! Dataset generation: one sample directory per (sample, baseline) job.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::Context;
use log::info;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use eventforge::events::{simulate_stereo, StereoOutput, StereoSimConfig};
use eventforge::geometry::StereoRig;
use eventforge::io::config::{ConfigDoc, Section};
use eventforge::io::{evt, pfm, ppm, stk};
use eventforge::render::{make_test_scene, RenderOptions, SparseVoxelScene};
use eventforge::repr::{tencode, voxel_grid};
use eventforge::trajectory::Trajectory;

use super::validate::check_sample;
use crate::config::{FactoryConfig, SceneSource};
use crate::{CliError, CliResult, GenerateArgs};

pub const MANIFEST: &str = "manifest.txt";
pub const DATASET_FILES: [&str; 2] = ["config.txt", "trajectory.txt"];

/// Collects flag overrides as `section.key=value` pairs.
fn overrides(args: &GenerateArgs) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for raw in &args.set {
        let (k, v) = raw
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects section.key=value, got '{raw}'")))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    let c = &args.common;
    let mut push = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            out.push((k.to_string(), v));
        }
    };
    push("run.seed", c.seed.map(|v| v.to_string()));
    push("run.workers", c.workers.map(|v| v.to_string()));
    // Flag paths are relative to the working directory, not the config file.
    let out_dir = c.out.as_ref().map(std::path::absolute).transpose().map_err(|e| CliError::Usage(format!("--out: {e}")))?;
    push("output.dir", out_dir.map(|p| p.display().to_string()));
    push("simulation.samples", args.samples.map(|v| v.to_string()));
    push("simulation.dtau", args.dtau.map(|v| v.to_string()));
    push("rig.baselines", args.baselines.clone());
    Ok(out)
}

/// Per-job seed drawn from the run seed. Jobs sharing a sample index share
/// the seed, so baselines of one sample see the same threshold map.
pub fn sample_seed(run_seed: u64, sample: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    rng.set_stream(sample as u64 + 1);
    rng.next_u64()
}

pub fn sample_dir_name(sample: usize, baseline_index: usize) -> String {
    format!("sample_{sample:04}_b{baseline_index}")
}

struct Job {
    sample: usize,
    baseline_index: usize,
    baseline: f64,
}

struct JobContext<'a> {
    cfg: &'a FactoryConfig,
    scene: &'a SparseVoxelScene,
    traj: &'a Trajectory,
    root: &'a Path,
    manifest: Mutex<fs::File>,
}

fn load_scene(cfg: &FactoryConfig) -> CliResult<SparseVoxelScene> {
    match &cfg.scene {
        SceneSource::Synthetic(spec) => make_test_scene(spec).map_err(|e| CliError::Usage(e.to_string())),
        SceneSource::File(path) => eventforge::io::svxl::read(path)
            .with_context(|| format!("reading scene {}", path.display()))
            .map_err(CliError::Data),
    }
}

fn calib_doc(cfg: &FactoryConfig, job: &Job, seed: u64, tau: (f64, f64), out: &StereoOutput) -> ConfigDoc {
    let cam = cfg.camera;
    let mut camera = Section::new("camera");
    camera.push("fx", cam.fx);
    camera.push("fy", cam.fy);
    camera.push("cx", cam.cx);
    camera.push("cy", cam.cy);
    camera.push("width", cam.width);
    camera.push("height", cam.height);
    let mut rig = Section::new("rig");
    rig.push("baseline", job.baseline);
    let mut sample = Section::new("sample");
    sample.push("index", job.sample);
    sample.push("seed", seed);
    sample.push("tau_begin", tau.0);
    sample.push("tau_end", tau.1);
    sample.push("t_span_us", cfg.simulation.t_span_us);
    sample.push("events_left", out.left.len());
    sample.push("events_right", out.right.len());
    let levels: Vec<String> = out.levels.iter().map(u32::to_string).collect();
    sample.push("levels", levels.join(" "));
    if let Some(k) = out.keyframes.first() {
        sample.push("keyframe_tau", k.tau);
        sample.push("keyframe_t_us", k.t_us);
        let pose: Vec<String> = k.pose.to_row_major().iter().map(f64::to_string).collect();
        sample.push("pose", pose.join(" "));
    }
    ConfigDoc {
        sections: vec![camera, rig, sample],
    }
}

fn run_job(ctx: &JobContext, job: &Job) -> CliResult<String> {
    let cfg = ctx.cfg;
    let n = cfg.simulation.samples as f64;
    let tau = (job.sample as f64 / n, (job.sample + 1) as f64 / n);
    let seed = sample_seed(cfg.seed, job.sample);
    let rig = StereoRig::new(cfg.camera, job.baseline).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut sim = StereoSimConfig::new(cfg.simulation.dtau, cfg.simulation.t_span_us, cfg.simulation.caps);
    sim.thresholds = cfg.simulation.thresholds;
    sim.seed = seed;
    sim.tau_range = tau;
    sim.render = RenderOptions {
        invert_size_term: cfg.invert_size_term,
    };
    let out = simulate_stereo(ctx.scene, ctx.traj, &rig, &sim).map_err(CliError::data)?;
    let key = out
        .keyframes
        .first()
        .ok_or_else(|| CliError::Invariant("simulation produced no keyframe".into()))?;

    let name = sample_dir_name(job.sample, job.baseline_index);
    let dir = ctx.root.join(&name);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display())).map_err(CliError::Data)?;

    let mut files: Vec<(String, Vec<u8>)> = vec![
        ("events_left.evt".into(), evt::encode(&out.left)),
        ("events_right.evt".into(), evt::encode(&out.right)),
        ("depth.pfm".into(), pfm::encode(&key.depth)),
        ("disparity.pfm".into(), pfm::encode(&key.disparity)),
        ("conf_ao.pfm".into(), pfm::encode(&key.conf_ao)),
        ("conf_vsize.pfm".into(), pfm::encode(&key.conf_vsize)),
        ("rgb_ll.ppm".into(), ppm::encode(&key.rgb_ll)),
        ("rgb_l.ppm".into(), ppm::encode(&key.rgb_l)),
        ("rgb_r.ppm".into(), ppm::encode(&key.rgb_r)),
        ("calib.txt".into(), calib_doc(cfg, job, seed, tau, &out).to_string().into_bytes()),
    ];
    if let Some(count) = cfg.tencode_count {
        files.push(("tencode_left.stk".into(), stk::encode(&tencode(&out.left, count))));
        files.push(("tencode_right.stk".into(), stk::encode(&tencode(&out.right, count))));
    }
    if let Some(bins) = cfg.voxel_bins {
        files.push(("voxel_left.stk".into(), stk::encode(&voxel_grid(&out.left, bins))));
        files.push(("voxel_right.stk".into(), stk::encode(&voxel_grid(&out.right, bins))));
    }
    for (file, bytes) in &files {
        let path = dir.join(file);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display())).map_err(CliError::Data)?;
    }

    let names: Vec<&str> = files.iter().map(|(f, _)| f.as_str()).collect();
    let row = format!(
        "{name} seed={seed} baseline={} tau={}..{} events_left={} events_right={} files={}",
        job.baseline,
        tau.0,
        tau.1,
        out.left.len(),
        out.right.len(),
        names.join(",")
    );
    let mut manifest = ctx.manifest.lock().expect("manifest lock poisoned");
    writeln!(manifest, "{row}").context("appending to manifest").map_err(CliError::Data)?;
    info!("{name}: {} + {} events", out.left.len(), out.right.len());
    Ok(row)
}

fn prepare_root(root: &Path) -> CliResult {
    if root.exists() {
        let mut entries = fs::read_dir(root)
            .with_context(|| format!("reading {}", root.display()))
            .map_err(CliError::Data)?;
        if entries.next().is_some() {
            return Err(CliError::data(anyhow::anyhow!("output directory {} is not empty", root.display())));
        }
    }
    fs::create_dir_all(root)
        .with_context(|| format!("creating output directory {}", root.display()))
        .map_err(CliError::Data)
}

/// Runs generation and returns the dataset directory.
pub fn run(args: &GenerateArgs) -> CliResult<PathBuf> {
    let config_path = args
        .common
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("generate needs --config".into()))?;
    let cfg = FactoryConfig::load(config_path, &overrides(args)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", config_path.display())))?;
    generate(&cfg)
}

pub fn generate(cfg: &FactoryConfig) -> CliResult<PathBuf> {
    let root = cfg
        .output
        .clone()
        .ok_or_else(|| CliError::Usage("no output directory (set output.dir or --out)".into()))?;
    let scene = load_scene(cfg)?;
    let traj = cfg.build_trajectory().map_err(|e| CliError::Usage(format!("trajectory: {e:#}")))?;
    prepare_root(&root)?;

    let write = |name: &str, text: String| -> CliResult {
        fs::write(root.join(name), text).with_context(|| format!("writing {name}")).map_err(CliError::Data)
    };
    // Output location and worker count do not affect the data; leaving them
    // out keeps datasets byte-comparable across machines and directories.
    let mut recorded = cfg.doc.clone();
    recorded.sections.retain(|s| s.name != "output");
    if let Some(run) = recorded.sections.iter_mut().find(|s| s.name == "run") {
        run.entries.retain(|e| e.key != "workers");
    }
    write("config.txt", recorded.to_string())?;
    write("trajectory.txt", traj.to_section().to_string())?;

    let manifest_path = root.join(MANIFEST);
    let mut manifest = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&manifest_path)
        .context("creating manifest")
        .map_err(CliError::Data)?;
    writeln!(manifest, "# files={}", DATASET_FILES.join(",")).map_err(CliError::data)?;

    let jobs: Vec<Job> = (0..cfg.simulation.samples)
        .flat_map(|sample| {
            cfg.baselines.iter().enumerate().map(move |(baseline_index, &baseline)| Job {
                sample,
                baseline_index,
                baseline,
            })
        })
        .collect();
    let ctx = JobContext {
        cfg,
        scene: &scene,
        traj: &traj,
        root: &root,
        manifest: Mutex::new(manifest),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Invariant(format!("thread pool: {e}")))?;
    let rows = pool.install(|| jobs.par_iter().map(|job| run_job(&ctx, job)).collect::<CliResult<Vec<_>>>())?;
    drop(ctx);

    // Rows were appended in completion order; rewrite in job order.
    let mut text = format!("# files={}\n", DATASET_FILES.join(","));
    for row in &rows {
        text.push_str(row);
        text.push('\n');
    }
    fs::write(&manifest_path, text).context("writing manifest").map_err(CliError::Data)?;

    let mut problems = Vec::new();
    for job in &jobs {
        let name = sample_dir_name(job.sample, job.baseline_index);
        problems.extend(check_sample(&root.join(&name)).into_iter().map(|p| format!("{name}: {p}")));
    }
    if !problems.is_empty() {
        return Err(CliError::Invariant(problems.join("; ")));
    }
    println!("generated {} samples in {}", rows.len(), root.display());
    Ok(root)
}
