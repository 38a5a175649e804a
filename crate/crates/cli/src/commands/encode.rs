//! Event file to dense frame.

use std::path::{Path, PathBuf};

use anyhow::Context;

use eventforge::io::{evt, pfm, stk};
use eventforge::repr::{tencode, voxel_grid, StackedFrame};
use eventforge::Image;

use super::read_config;
use crate::{CliError, CliResult, EncodeArgs, FrameFormat, ReprKind};

/// Path of plane `c` when writing one PFM per channel.
pub fn plane_path(out: &Path, c: usize) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}_c{c}.pfm"))
}

fn repr_param(args: &EncodeArgs, key: &str, flag: Option<usize>) -> CliResult<usize> {
    let from_config = match &args.common.config {
        Some(path) => read_config(path)?
            .section("repr")
            .and_then(|s| s.get(key).cloned())
            .map(|e| e.parse::<usize>())
            .transpose()?,
        None => None,
    };
    match flag.or(from_config) {
        Some(0) => Err(CliError::Usage(format!("{key} must be positive"))),
        Some(v) => Ok(v),
        None => Err(CliError::Usage(format!("missing {key} (flag or [repr] config)"))),
    }
}

pub fn write_frame(frame: &StackedFrame, out: &Path, format: FrameFormat) -> anyhow::Result<Vec<PathBuf>> {
    match format {
        FrameFormat::Stk => {
            stk::write(out, frame)?;
            Ok(vec![out.to_path_buf()])
        }
        FrameFormat::Pfm => (0..frame.channels)
            .map(|c| {
                let data = frame.plane(c).iter().map(|&v| v as f64).collect();
                let path = plane_path(out, c);
                pfm::write(&path, &Image::from_vec(frame.width, frame.height, 1, data))?;
                Ok(path)
            })
            .collect(),
    }
}

pub fn run(args: &EncodeArgs) -> CliResult {
    let frame_of = match args.repr {
        ReprKind::Tencode => {
            let count = repr_param(args, "tencode_count", args.count)?;
            Box::new(move |s: &_| tencode(s, count)) as Box<dyn Fn(&_) -> StackedFrame>
        }
        ReprKind::VoxelGrid => {
            let bins = repr_param(args, "voxel_bins", args.bins)?;
            Box::new(move |s: &_| voxel_grid(s, bins))
        }
    };
    let out = args
        .common
        .out
        .as_ref()
        .ok_or_else(|| CliError::Usage("encode needs --out".into()))?;
    let stream = evt::read(&args.events)
        .with_context(|| format!("reading {}", args.events.display()))
        .map_err(CliError::Data)?;
    let frame = frame_of(&stream);
    let written = write_frame(&frame, out, args.format).map_err(CliError::Data)?;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}
