//! Consistency checks for generated datasets.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use eventforge::io::{evt, pfm, ppm};
use eventforge::Image;

use super::generate::{DATASET_FILES, MANIFEST};
use super::read_config;
use crate::{CliError, CliResult, ValidateArgs};

/// Relative tolerance of the disparity-depth product against `b f`.
const ROUND_TRIP_TOL: f64 = 1e-5;

/// Checks one sample directory and returns the problems found.
pub fn check_sample(dir: &Path) -> Vec<String> {
    let mut problems = Vec::new();
    let mut fail = |m: String| problems.push(m);

    let calib = match read_config(&dir.join("calib.txt")) {
        Ok(doc) => doc,
        Err(e) => {
            fail(format!("calib.txt: {e}"));
            return problems;
        }
    };
    let number = |section: &str, key: &str| -> Option<f64> {
        calib.section(section)?.get(key)?.parse::<f64>().ok()
    };
    let (Some(fx), Some(baseline), Some(width), Some(height)) = (
        number("camera", "fx"),
        number("rig", "baseline"),
        number("camera", "width"),
        number("camera", "height"),
    ) else {
        fail("calib.txt lacks fx, baseline, width or height".into());
        return problems;
    };
    let (width, height) = (width as usize, height as usize);
    let bf = fx * baseline;

    for name in ["events_left.evt", "events_right.evt"] {
        match evt::read(dir.join(name)) {
            Ok(stream) => {
                if (stream.width as usize, stream.height as usize) != (width, height) {
                    fail(format!("{name}: sensor {}x{} differs from camera", stream.width, stream.height));
                }
                if let Err(e) = stream.validate() {
                    fail(format!("{name}: {e}"));
                }
            }
            Err(e) => fail(format!("{name}: {e}")),
        }
    }

    let mut read_map = |name: &str| -> Option<Image> {
        match pfm::read(dir.join(name)) {
            Ok(img) if img.dims() == (width, height, 1) => Some(img),
            Ok(img) => {
                fail(format!("{name}: shape {:?} differs from camera", img.dims()));
                None
            }
            Err(e) => {
                fail(format!("{name}: {e}"));
                None
            }
        }
    };
    let depth = read_map("depth.pfm");
    let disparity = read_map("disparity.pfm");
    let confidences = [read_map("conf_ao.pfm"), read_map("conf_vsize.pfm")];

    if let (Some(z), Some(d)) = (&depth, &disparity) {
        let bad = z
            .data()
            .iter()
            .zip(d.data())
            .filter(|(z, d)| {
                let z_ok = z.is_finite() && **z > 0.0;
                if z_ok != d.is_finite() {
                    return true;
                }
                z_ok && (*z * *d - bf).abs() > ROUND_TRIP_TOL * bf
            })
            .count();
        if bad > 0 {
            problems.push(format!("depth/disparity disagree at {bad} pixels"));
        }
    }
    for (name, conf) in ["conf_ao.pfm", "conf_vsize.pfm"].iter().zip(&confidences) {
        if let Some(c) = conf {
            let bad = c.data().iter().filter(|v| v.is_finite() && !(0.0..=1.0).contains(*v)).count();
            if bad > 0 {
                problems.push(format!("{name}: {bad} values outside [0, 1]"));
            }
        }
    }
    for name in ["rgb_ll.ppm", "rgb_l.ppm", "rgb_r.ppm"] {
        match ppm::read(dir.join(name)) {
            Ok(img) if (img.width(), img.height()) == (width, height) => {}
            Ok(img) => problems.push(format!("{name}: size {}x{} differs from camera", img.width(), img.height())),
            Err(e) => problems.push(format!("{name}: {e}")),
        }
    }
    problems
}

/// Parsed manifest: dataset-level files and `(sample dir, files)` rows.
pub struct Manifest {
    pub dataset_files: Vec<String>,
    pub samples: Vec<(String, Vec<String>)>,
}

pub fn parse_manifest(text: &str) -> Result<Manifest, String> {
    let mut dataset_files = Vec::new();
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let files_of = |field: &str| field.split(',').filter(|s| !s.is_empty()).map(String::from).collect();
        if let Some(rest) = line.strip_prefix("# files=") {
            dataset_files = files_of(rest);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let name = fields.next().unwrap_or_default().to_string();
        let files = fields
            .find_map(|f| f.strip_prefix("files="))
            .ok_or_else(|| format!("manifest line {}: no files= field", i + 1))?;
        samples.push((name, files_of(files)));
    }
    Ok(Manifest { dataset_files, samples })
}

/// Every file on disk appears in the manifest and vice versa.
pub fn check_completeness(root: &Path, manifest: &Manifest) -> Vec<String> {
    let mut listed = BTreeSet::new();
    listed.insert(MANIFEST.to_string());
    listed.extend(manifest.dataset_files.iter().cloned());
    for (dir, files) in &manifest.samples {
        listed.extend(files.iter().map(|f| format!("{dir}/{f}")));
    }
    let mut on_disk = BTreeSet::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let Ok(entries) = fs::read_dir(&dir) else { continue };
        for entry in entries.flatten() {
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else if let Ok(rel) = path.strip_prefix(root) {
                on_disk.insert(rel.to_string_lossy().replace('\\', "/"));
            }
        }
    }
    let mut problems: Vec<String> = listed
        .difference(&on_disk)
        .map(|f| format!("listed but missing: {f}"))
        .collect();
    problems.extend(on_disk.difference(&listed).map(|f| format!("not in manifest: {f}")));
    problems
}

pub fn run(args: &ValidateArgs) -> CliResult {
    let root = &args.dir;
    let text = fs::read_to_string(root.join(MANIFEST))
        .map_err(|e| CliError::data(anyhow::anyhow!("{}: {e}", root.join(MANIFEST).display())))?;
    let manifest = parse_manifest(&text).map_err(|e| CliError::data(anyhow::anyhow!(e)))?;
    let mut problems = check_completeness(root, &manifest);
    for f in DATASET_FILES {
        if !manifest.dataset_files.iter().any(|d| d == f) {
            problems.push(format!("manifest does not list {f}"));
        }
    }
    for (dir, _) in &manifest.samples {
        problems.extend(check_sample(&root.join(dir)).into_iter().map(|p| format!("{dir}: {p}")));
    }
    for p in &problems {
        println!("FAIL {p}");
    }
    if problems.is_empty() {
        println!("ok {} samples", manifest.samples.len());
        Ok(())
    } else {
        Err(CliError::data(anyhow::anyhow!("{} problems in {}", problems.len(), root.display())))
    }
}
