//! Batch transfer of RGB-frame disparity onto the event camera.

use std::path::Path;

use eventforge::distill::{reproject_labels, RigPair, DEFAULT_CLIP};
use eventforge::geometry::{CameraModel, Pose, StereoRig};
use eventforge::io::config::{ConfigDoc, ConfigError, Section};
use eventforge::io::pfm;
use eventforge::DisparityMap;

use super::read_config;
use crate::{CliError, CliResult, DistillArgs};

fn rig_from(s: &Section) -> Result<StereoRig, ConfigError> {
    s.check_keys(&["fx", "fy", "cx", "cy", "width", "height", "baseline"])?;
    let width: usize = s.require("width")?.parse()?;
    let height: usize = s.require("height")?.parse()?;
    let fx = s.float("fx")?;
    let cam = CameraModel::new(
        fx,
        s.parse_or("fy", fx)?,
        s.parse_or("cx", (width as f64 - 1.0) / 2.0)?,
        s.parse_or("cy", (height as f64 - 1.0) / 2.0)?,
        width,
        height,
    )
    .map_err(|e| ConfigError::at(s.line, e.to_string()))?;
    let baseline = s.require("baseline")?;
    StereoRig::new(cam, baseline.parse()?).map_err(|e| ConfigError::at(baseline.line, e.to_string()))
}

/// Reads `[rgb]`, `[event]`, `[extrinsic]` and the optional `[clip]`.
pub fn rig_config(doc: &ConfigDoc) -> Result<(RigPair, (f64, f64)), ConfigError> {
    let rgb = rig_from(doc.require("rgb")?)?;
    let event = rig_from(doc.require("event")?)?;
    let ext = doc.require("extrinsic")?;
    ext.check_keys(&["pose"])?;
    let line = ext.require("pose")?.line;
    let pose = Pose::from_row_major(&ext.floats_exact::<12>("pose")?).map_err(|e| ConfigError::at(line, e.to_string()))?;
    let rigs = RigPair::new(rgb, event, pose).map_err(|e| ConfigError::at(ext.line, e.to_string()))?;
    let clip = match doc.section("clip") {
        None => DEFAULT_CLIP,
        Some(c) => {
            c.check_keys(&["min", "max"])?;
            (c.parse_or("min", DEFAULT_CLIP.0)?, c.parse_or("max", DEFAULT_CLIP.1)?)
        }
    };
    Ok((rigs, clip))
}

fn distill_one(input: &Path, out_dir: &Path, rigs: &RigPair, clip: (f64, f64)) -> anyhow::Result<(std::path::PathBuf, usize)> {
    let img = pfm::read(input)?;
    if img.channels() != 1 {
        anyhow::bail!("expected a single-channel map, got {} channels", img.channels());
    }
    let out = reproject_labels(&DisparityMap::from_image(img), rigs, clip)?;
    let name = input.file_name().ok_or_else(|| anyhow::anyhow!("input has no file name"))?;
    let dest = out_dir.join(name);
    if dest == input {
        anyhow::bail!("output would overwrite the input");
    }
    pfm::write(&dest, &out)?;
    Ok((dest, out.valid_count()))
}

pub fn run(args: &DistillArgs) -> CliResult {
    let config = args
        .common
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("distill needs --config with the rig description".into()))?;
    let doc = read_config(config)?;
    let (rigs, mut clip) = rig_config(&doc).map_err(|e| CliError::Usage(format!("{}: {e}", config.display())))?;
    clip.0 = args.clip_min.unwrap_or(clip.0);
    clip.1 = args.clip_max.unwrap_or(clip.1);
    if !(clip.0 > 0.0 && clip.0 < clip.1) {
        return Err(CliError::Usage(format!("depth clip [{}, {}] is invalid", clip.0, clip.1)));
    }
    if args.inputs.is_empty() {
        println!("no input files");
        return Ok(());
    }
    let out_dir = args
        .common
        .out
        .as_ref()
        .ok_or_else(|| CliError::Usage("distill needs --out".into()))?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::data(anyhow::anyhow!("{}: {e}", out_dir.display())))?;

    let mut failed = 0;
    for input in &args.inputs {
        match distill_one(input, out_dir, &rigs, clip) {
            Ok((dest, valid)) => println!("ok {} -> {} ({valid} valid pixels)", input.display(), dest.display()),
            Err(e) => {
                failed += 1;
                println!("FAILED {}: {e:#}", input.display());
            }
        }
    }
    if failed > 0 {
        return Err(CliError::data(anyhow::anyhow!("{failed} of {} files failed", args.inputs.len())));
    }
    Ok(())
}
