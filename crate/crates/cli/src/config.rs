//! Factory configuration: sections, defaults, overrides and validation.

use std::path::{Path, PathBuf};

use eventforge::geometry::CameraModel;
use eventforge::io::config::{ConfigDoc, ConfigError, Section};
use eventforge::render::{SceneKind, TestSceneSpec};
use eventforge::trajectory::{self, GlobalFitOptions, Orientation, Trajectory, TrajectoryError};

#[derive(Debug, Clone, PartialEq)]
pub enum SceneSource {
    Synthetic(TestSceneSpec),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrajectorySpec {
    /// Fully specified section (local sweep or serialized global fit).
    Inline(Section),
    /// Global fit to a pose file.
    Fit {
        poses: PathBuf,
        subset_stride: usize,
        orientation: Orientation,
        /// Trace an alpha-shape loop through the poses before fitting.
        alpha_loop: bool,
        alpha: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSection {
    pub dtau: f64,
    pub t_span_us: u64,
    pub thresholds: (f64, f64),
    pub caps: (usize, usize),
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactoryConfig {
    pub seed: u64,
    pub workers: usize,
    pub scene: SceneSource,
    pub trajectory: TrajectorySpec,
    pub camera: CameraModel,
    pub baselines: Vec<f64>,
    pub simulation: SimulationSection,
    pub tencode_count: Option<usize>,
    pub voxel_bins: Option<usize>,
    pub mu: f64,
    pub invert_size_term: bool,
    pub output: Option<PathBuf>,
    /// Resolved document, written next to the generated data.
    pub doc: ConfigDoc,
}

const SECTIONS: &[&str] = &["run", "scene", "trajectory", "camera", "rig", "simulation", "repr", "labels", "output"];

fn err(line: usize, msg: impl Into<String>) -> ConfigError {
    ConfigError::at(line, msg)
}

/// Applies `section.key=value` overrides to a parsed document.
pub fn apply_overrides(doc: &mut ConfigDoc, overrides: &[(String, String)]) -> Result<(), ConfigError> {
    for (path, value) in overrides {
        let (section, key) = path
            .split_once('.')
            .ok_or_else(|| err(0, format!("override '{path}' must look like section.key")))?;
        if section.is_empty() || key.is_empty() {
            return Err(err(0, format!("override '{path}' must look like section.key")));
        }
        doc.section_mut(section).push(key, value);
    }
    Ok(())
}

fn resolve(base: &Path, value: &str) -> PathBuf {
    let p = PathBuf::from(value);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn empty(name: &str) -> Section {
    Section::new(name)
}

fn positive<T: PartialOrd + Default + std::fmt::Display>(s: &Section, key: &str, v: T) -> Result<T, ConfigError> {
    if v > T::default() {
        Ok(v)
    } else {
        let line = s.get(key).map_or(s.line, |e| e.line);
        Err(err(line, format!("[{}] {key} must be positive, got {v}", s.name)))
    }
}

fn parse_bool(s: &Section, key: &str, default: bool) -> Result<bool, ConfigError> {
    match s.get(key) {
        None => Ok(default),
        Some(e) => match e.value.as_str() {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            other => Err(err(e.line, format!("'{other}' is not a boolean (key '{key}')"))),
        },
    }
}

impl FactoryConfig {
    /// Builds the configuration from a document. Relative paths resolve
    /// against `base_dir`; referenced files must exist.
    pub fn from_doc(doc: ConfigDoc, base_dir: &Path) -> Result<Self, ConfigError> {
        for s in &doc.sections {
            if !SECTIONS.contains(&s.name.as_str()) {
                return Err(err(s.line, format!("unknown section [{}]", s.name)));
            }
        }
        let get = |name: &str| doc.section(name).cloned().unwrap_or_else(|| empty(name));

        let run = get("run");
        run.check_keys(&["seed", "workers"])?;
        let seed = run.parse_or("seed", 0u64)?;
        let workers = positive(&run, "workers", run.parse_or("workers", 1usize)?)?;

        let scene = Self::scene(&doc.require("scene")?.clone(), base_dir, seed)?;
        let trajectory = Self::trajectory(doc.require("trajectory")?, base_dir)?;
        let camera = Self::camera(doc.require("camera")?)?;

        let rig = doc.require("rig")?;
        rig.check_keys(&["baselines"])?;
        let baselines = rig.floats("baselines")?;
        let line = rig.require("baselines")?.line;
        if baselines.is_empty() || baselines.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(err(line, format!("baselines must be positive, got {baselines:?}")));
        }

        let sim = doc.require("simulation")?;
        sim.check_keys(&["dtau", "t_span_us", "threshold_low", "threshold_high", "cap_left", "cap_right", "samples"])?;
        let dtau = sim.float("dtau")?;
        if !(dtau > 0.0 && dtau <= 1.0) {
            return Err(err(sim.require("dtau")?.line, format!("dtau must lie in (0, 1], got {dtau}")));
        }
        let thresholds = (sim.parse_or("threshold_low", 0.15)?, sim.parse_or("threshold_high", 0.25)?);
        if !(thresholds.0 > 0.0 && thresholds.0 <= thresholds.1) {
            return Err(err(sim.line, format!("threshold range {thresholds:?} is invalid")));
        }
        let simulation = SimulationSection {
            dtau,
            t_span_us: positive(sim, "t_span_us", sim.require("t_span_us")?.parse()?)?,
            thresholds,
            caps: (
                positive(sim, "cap_left", sim.parse_or("cap_left", 650_000usize)?)?,
                positive(sim, "cap_right", sim.parse_or("cap_right", 1_000_000usize)?)?,
            ),
            samples: positive(sim, "samples", sim.require("samples")?.parse()?)?,
        };

        let repr = get("repr");
        repr.check_keys(&["tencode_count", "voxel_bins"])?;
        let tencode_count = repr.get("tencode_count").map(|e| e.parse::<usize>()).transpose()?;
        let voxel_bins = repr.get("voxel_bins").map(|e| e.parse::<usize>()).transpose()?;
        if let Some(c) = tencode_count {
            positive(&repr, "tencode_count", c)?;
        }
        if let Some(b) = voxel_bins {
            positive(&repr, "voxel_bins", b)?;
        }

        let labels = get("labels");
        labels.check_keys(&["mu", "invert_size_term"])?;
        let mu = labels.parse_or("mu", eventforge::losses::MU_VSIZE)?;
        if !(0.0..=1.0).contains(&mu) {
            return Err(err(labels.require("mu")?.line, format!("mu must lie in [0, 1], got {mu}")));
        }
        let invert_size_term = parse_bool(&labels, "invert_size_term", false)?;

        let out = get("output");
        out.check_keys(&["dir"])?;
        let output = out.get("dir").map(|e| resolve(base_dir, &e.value));

        Ok(Self {
            seed,
            workers,
            scene,
            trajectory,
            camera,
            baselines,
            simulation,
            tencode_count,
            voxel_bins,
            mu,
            invert_size_term,
            output,
            doc,
        })
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err(0, format!("cannot read {}: {e}", path.display())))?;
        let mut doc = ConfigDoc::parse(&text)?;
        apply_overrides(&mut doc, overrides)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_doc(doc, base)
    }

    fn scene(s: &Section, base: &Path, seed: u64) -> Result<SceneSource, ConfigError> {
        if let Some(file) = s.get("file") {
            s.check_keys(&["file"])?;
            let path = resolve(base, &file.value);
            if !path.is_file() {
                return Err(err(file.line, format!("scene file {} does not exist", path.display())));
            }
            return Ok(SceneSource::File(path));
        }
        s.check_keys(&["kind", "seed", "extent", "depths", "voxel_size", "checker", "boxes"])?;
        let kind_entry = s.require("kind")?;
        let kind = SceneKind::parse(&kind_entry.value).map_err(|e| err(kind_entry.line, e.to_string()))?;
        let extent = s.float("extent")?;
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(err(s.require("extent")?.line, format!("extent must be positive, got {extent}")));
        }
        let mut spec = TestSceneSpec::new(kind, s.parse_or("seed", seed)?, extent);
        if s.get("depths").is_some() {
            spec.depths = s.floats("depths")?;
        }
        spec.voxel_size = s.parse_or("voxel_size", spec.voxel_size)?;
        spec.checker = s.parse_or("checker", spec.checker)?;
        spec.boxes = s.parse_or("boxes", spec.boxes)?;
        Ok(SceneSource::Synthetic(spec))
    }

    fn trajectory(s: &Section, base: &Path) -> Result<TrajectorySpec, ConfigError> {
        let kind = s.require("kind")?;
        let fitted = kind.value == "global" && s.get("knots").is_none();
        if !fitted {
            Trajectory::from_section(s).map_err(|e| match e {
                TrajectoryError::Config(c) => c,
                other => err(s.line, other.to_string()),
            })?;
            return Ok(TrajectorySpec::Inline(s.clone()));
        }
        s.check_keys(&["kind", "poses", "subset_stride", "orientation", "alpha_loop", "alpha"])?;
        let poses_entry = s.require("poses")?;
        let poses = resolve(base, &poses_entry.value);
        if !poses.is_file() {
            return Err(err(poses_entry.line, format!("pose file {} does not exist", poses.display())));
        }
        // No default: the subset density is a dataset decision.
        let subset_stride = positive(s, "subset_stride", s.require("subset_stride")?.parse()?)?;
        let orientation = match s.get("orientation") {
            None => Orientation::MotionAligned,
            Some(e) => Orientation::parse(&e.value)
                .ok_or_else(|| err(e.line, format!("unknown orientation '{}'", e.value)))?,
        };
        let alpha = s.get("alpha").map(|e| e.parse::<f64>()).transpose()?;
        Ok(TrajectorySpec::Fit {
            poses,
            subset_stride,
            orientation,
            alpha_loop: parse_bool(s, "alpha_loop", false)?,
            alpha,
        })
    }

    fn camera(s: &Section) -> Result<CameraModel, ConfigError> {
        s.check_keys(&["fx", "fy", "cx", "cy", "width", "height"])?;
        let width: usize = s.require("width")?.parse()?;
        let height: usize = s.require("height")?.parse()?;
        let fx = s.float("fx")?;
        let fy = s.parse_or("fy", fx)?;
        let cx = s.parse_or("cx", (width as f64 - 1.0) / 2.0)?;
        let cy = s.parse_or("cy", (height as f64 - 1.0) / 2.0)?;
        if width > u16::MAX as usize || height > u16::MAX as usize {
            return Err(err(s.line, "sensor dimensions must fit in 16 bits"));
        }
        CameraModel::new(fx, fy, cx, cy, width, height).map_err(|e| err(s.line, e.to_string()))
    }

    /// Builds the trajectory, fitting splines when requested.
    pub fn build_trajectory(&self) -> anyhow::Result<Trajectory> {
        Ok(match &self.trajectory {
            TrajectorySpec::Inline(section) => Trajectory::from_section(section)?,
            TrajectorySpec::Fit {
                poses,
                subset_stride,
                orientation,
                alpha_loop,
                alpha,
            } => {
                let mut list = eventforge::io::poses::read(poses)?;
                if *alpha_loop {
                    list = trajectory::alpha_shape_path(&list, *alpha)?.closed_poses();
                }
                trajectory::fit_global_trajectory(&list, GlobalFitOptions::new(*subset_stride, *orientation))?
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "\
[run]
seed = 3

[scene]
kind = wall
extent = 4
depths = 2

[trajectory]
kind = local
base = 1 0 0 0 0 1 0 0 0 0 1 0
axis = 0.2 0 0

[camera]
fx = 80
width = 64
height = 48

[rig]
baselines = 0.1 0.3

[simulation]
dtau = 0.1
t_span_us = 10000
samples = 2
";

    #[test]
    fn parses_with_defaults() {
        let cfg = FactoryConfig::from_doc(ConfigDoc::parse(BASE).unwrap(), Path::new(".")).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.baselines, vec![0.1, 0.3]);
        assert_eq!(cfg.simulation.caps, (650_000, 1_000_000));
        assert_eq!(cfg.simulation.thresholds, (0.15, 0.25));
        assert_eq!(cfg.mu, 0.75);
        assert_eq!(cfg.camera.cx, 31.5);
        assert!(matches!(cfg.build_trajectory().unwrap(), Trajectory::Local(_)));
    }

    #[test]
    fn errors_point_at_lines() {
        let text = BASE.replace("dtau = 0.1", "dtau = 1.5");
        let e = FactoryConfig::from_doc(ConfigDoc::parse(&text).unwrap(), Path::new(".")).unwrap_err();
        let line = text.lines().position(|l| l.starts_with("dtau")).unwrap() + 1;
        assert_eq!(e.line, line);

        let text = BASE.replace("baselines = 0.1 0.3", "baselines = 0.1 -0.3");
        let e = FactoryConfig::from_doc(ConfigDoc::parse(&text).unwrap(), Path::new(".")).unwrap_err();
        assert_eq!(e.line, text.lines().position(|l| l.starts_with("baselines")).unwrap() + 1);

        let text = BASE.replace("samples = 2\n", "");
        assert!(FactoryConfig::from_doc(ConfigDoc::parse(&text).unwrap(), Path::new(".")).is_err());

        let text = format!("{BASE}\n[bogus]\nx = 1\n");
        assert!(FactoryConfig::from_doc(ConfigDoc::parse(&text).unwrap(), Path::new(".")).is_err());
    }

    #[test]
    fn overrides_replace_and_add_keys() {
        let mut doc = ConfigDoc::parse(BASE).unwrap();
        apply_overrides(
            &mut doc,
            &[("simulation.samples".into(), "5".into()), ("labels.mu".into(), "0.5".into())],
        )
        .unwrap();
        let cfg = FactoryConfig::from_doc(doc, Path::new(".")).unwrap();
        assert_eq!(cfg.simulation.samples, 5);
        assert_eq!(cfg.mu, 0.5);
        assert!(apply_overrides(&mut ConfigDoc::default(), &[("nodot".into(), "1".into())]).is_err());
    }

    #[test]
    fn missing_files_rejected() {
        let text = BASE.replace("kind = wall\nextent = 4\ndepths = 2", "file = /nonexistent/scene.svxl");
        assert!(FactoryConfig::from_doc(ConfigDoc::parse(&text).unwrap(), Path::new(".")).is_err());
    }
}
