//! Metric evaluation over paired files, with a fixed-column CSV.
//!
//! CSV columns: `pred,gt,count,mae,pe1,pe2,pe3,delta125,psnr,ssim`. Columns
//! that do not apply to the chosen kind are left empty. The final `ALL` row
//! pools pixels across pairs (count-weighted); PSNR and SSIM are averaged
//! over pairs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;

use eventforge::io::{pfm, ppm};
use eventforge::metrics::{depth_image_metrics, disparity_metrics, format_psnr};
use eventforge::{DepthMap, DisparityMap, Image};

use crate::{CliError, CliResult, EvalArgs, EvalKind};

pub const CSV_HEADER: &str = "pred,gt,count,mae,pe1,pe2,pe3,delta125,psnr,ssim";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row {
    pub pred: String,
    pub gt: String,
    pub count: usize,
    pub mae: Option<f64>,
    pub pe: Option<[f64; 3]>,
    pub delta125: Option<f64>,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
}

fn num(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x}"),
        _ => String::new(),
    }
}

impl Row {
    pub fn csv(&self) -> String {
        let pe = |i: usize| num(self.pe.map(|p| p[i]));
        let psnr = self.psnr.filter(|p| !p.is_nan()).map(format_psnr).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.pred,
            self.gt,
            self.count,
            num(self.mae),
            pe(0),
            pe(1),
            pe(2),
            num(self.delta125),
            psnr,
            num(self.ssim)
        )
    }

    pub fn report(&self) -> String {
        let mut s = format!("pred={} gt={} count={}", self.pred, self.gt, self.count);
        let mut field = |k: &str, v: Option<f64>| {
            if let Some(v) = v {
                let _ = write!(s, " {k}={v}");
            }
        };
        field("mae", self.mae);
        if let Some([a, b, c]) = self.pe {
            field("pe1", Some(a));
            field("pe2", Some(b));
            field("pe3", Some(c));
        }
        field("delta125", self.delta125);
        field("psnr", self.psnr);
        field("ssim", self.ssim);
        s
    }
}

fn read_map(path: &Path) -> anyhow::Result<Image> {
    let img = pfm::read(path).with_context(|| path.display().to_string())?;
    if img.channels() != 1 {
        anyhow::bail!("{}: expected one channel, got {}", path.display(), img.channels());
    }
    Ok(img)
}

fn read_image(path: &Path) -> anyhow::Result<Image> {
    let result = match path.extension().and_then(|e| e.to_str()) {
        Some("pfm") => pfm::read(path),
        _ => ppm::read(path),
    };
    result.with_context(|| path.display().to_string())
}

fn weighted(rows: &[Row], f: impl Fn(&Row) -> Option<f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for r in rows.iter().filter(|r| r.count > 0) {
        let v = f(r)?;
        sum += v * r.count as f64;
        n += r.count;
    }
    (n > 0).then(|| sum / n as f64)
}

fn mean(rows: &[Row], f: impl Fn(&Row) -> Option<f64>) -> Option<f64> {
    let v: Vec<f64> = rows.iter().filter_map(&f).collect();
    (!v.is_empty() && v.len() == rows.len()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Pooled row over all pairs.
pub fn pooled(rows: &[Row]) -> Row {
    let pe_i = |i: usize| weighted(rows, |r| r.pe.map(|p| p[i]));
    let pe = match (pe_i(0), pe_i(1), pe_i(2)) {
        (Some(a), Some(b), Some(c)) => Some([a, b, c]),
        _ => None,
    };
    Row {
        pred: "ALL".into(),
        gt: "ALL".into(),
        count: rows.iter().map(|r| r.count).sum(),
        mae: weighted(rows, |r| r.mae),
        pe,
        delta125: weighted(rows, |r| r.delta125),
        psnr: mean(rows, |r| r.psnr),
        ssim: mean(rows, |r| r.ssim),
    }
}

pub fn evaluate_pair(kind: EvalKind, pred: &Path, gt: &Path, images: Option<(&PathBuf, &PathBuf)>) -> anyhow::Result<Row> {
    let p = read_map(pred)?;
    let g = read_map(gt)?;
    let mut row = Row {
        pred: pred.display().to_string(),
        gt: gt.display().to_string(),
        ..Row::default()
    };
    match kind {
        EvalKind::Disparity => {
            let m = disparity_metrics(&DisparityMap::from_image(p), &DisparityMap::from_image(g))?;
            row.count = m.count;
            if m.is_defined() {
                row.mae = Some(m.mae);
                row.pe = Some([m.pe1, m.pe2, m.pe3]);
            }
        }
        EvalKind::Depth => {
            let (ip, ig) = images.ok_or_else(|| anyhow::anyhow!("depth evaluation needs paired images"))?;
            let m = depth_image_metrics(
                &DepthMap::from_image(p),
                &DepthMap::from_image(g),
                &read_image(ip)?,
                &read_image(ig)?,
            )?;
            row.count = m.count;
            if m.count > 0 {
                row.mae = Some(m.mae);
                row.delta125 = Some(m.delta125);
            }
            row.psnr = Some(m.psnr);
            row.ssim = Some(m.ssim);
        }
    }
    Ok(row)
}

pub fn run(args: &EvalArgs) -> CliResult {
    if args.pred.len() != args.gt.len() {
        return Err(CliError::Usage(format!(
            "unpaired lists: {} predictions, {} references",
            args.pred.len(),
            args.gt.len()
        )));
    }
    let images = args.kind == EvalKind::Depth;
    if images && (args.pred_images.len() != args.pred.len() || args.gt_images.len() != args.gt.len()) {
        return Err(CliError::Usage("depth evaluation needs one --pred-images and --gt-images entry per pair".into()));
    }
    let mut rows = Vec::new();
    for (i, (p, g)) in args.pred.iter().zip(&args.gt).enumerate() {
        let imgs = images.then(|| (&args.pred_images[i], &args.gt_images[i]));
        let row = evaluate_pair(args.kind, p, g, imgs).map_err(CliError::Data)?;
        println!("{}", row.report());
        rows.push(row);
    }
    let all = pooled(&rows);
    println!("{}", all.report());

    if let Some(out) = &args.common.out {
        let mut text = format!("{CSV_HEADER}\n");
        for r in rows.iter().chain(std::iter::once(&all)) {
            text.push_str(&r.csv());
            text.push('\n');
        }
        std::fs::write(out, text)
            .with_context(|| format!("writing {}", out.display()))
            .map_err(CliError::Data)?;
    }
    Ok(())
}
