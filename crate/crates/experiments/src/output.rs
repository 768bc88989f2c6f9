//! Canonical run outputs: CSV tables, a JSON manifest, and native SVG
//! line plots rendered from the same data (no plotting dependency).
//!
//! CSV files are byte-deterministic for a given config and seed: they carry
//! only data rows plus footer comments with the config hash, seed, and code
//! version. Wall time, which varies run to run, lives only in
//! `manifest.json` alongside the per-file SHA-256 digests.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use lindblad_core::{Result, SimError};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Deterministic identification stamped on every output.
#[derive(Debug, Clone)]
pub struct RunMeta {
    pub config_sha256: String,
    pub seed: u64,
}

impl RunMeta {
    pub fn new(canonical_config: &str, seed: u64) -> Self {
        Self {
            config_sha256: sha256_hex(canonical_config.as_bytes()),
            seed,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Twelve significant digits, scientific notation.
pub fn fmt_value(x: f64) -> String {
    format!("{x:.11e}")
}

fn io_err(path: &Path, e: std::io::Error) -> SimError {
    SimError::Input(format!("io error at {}: {e}", path.display()))
}

/// Collects output files and their digests, then writes `manifest.json`.
pub struct OutputSink {
    dir: PathBuf,
    meta: RunMeta,
    files: BTreeMap<String, String>,
    started: std::time::Instant,
}

#[derive(Serialize)]
struct ManifestBody<'a> {
    config_sha256: &'a str,
    seed: u64,
    code_version: &'a str,
    wall_time_seconds: f64,
    files: &'a BTreeMap<String, String>,
}

impl OutputSink {
    pub fn create(dir: &Path, meta: RunMeta) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            meta,
            files: BTreeMap::new(),
            started: std::time::Instant::now(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn meta(&self) -> &RunMeta {
        &self.meta
    }

    fn record(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        self.files.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Write a CSV with a mandatory header row and deterministic footer
    /// comments identifying the run.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut buf = Vec::new();
        writeln!(buf, "{}", header.join(",")).expect("vec write");
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            writeln!(buf, "{}", row.join(",")).expect("vec write");
        }
        writeln!(buf, "# config_sha256: {}", self.meta.config_sha256).expect("vec write");
        writeln!(buf, "# seed: {}", self.meta.seed).expect("vec write");
        writeln!(buf, "# code_version: {CODE_VERSION}").expect("vec write");
        self.record(name, &buf)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| SimError::Input(format!("json serialize error: {e}")))?;
        text.push('\n');
        self.record(name, text.as_bytes())
    }

    pub fn write_svg(&mut self, name: &str, plot: &SvgPlot) -> Result<()> {
        self.record(name, plot.render(&self.meta).as_bytes())
    }

    /// Finalize the run: write `manifest.json` with wall time and digests.
    pub fn finish(self) -> Result<()> {
        let body = ManifestBody {
            config_sha256: &self.meta.config_sha256,
            seed: self.meta.seed,
            code_version: CODE_VERSION,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            files: &self.files,
        };
        let mut text = serde_json::to_string_pretty(&body)
            .map_err(|e| SimError::Input(format!("json serialize error: {e}")))?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).map_err(|e| io_err(&path, e))
    }
}

/// One plotted curve.
pub struct SvgSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Minimal line plot: framed axes, decade or linear ticks, one polyline
/// with point markers per series, legend, and a `<desc>` block carrying the
/// run identification.
pub struct SvgPlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<SvgSeries>,
}

const SVG_W: f64 = 720.0;
const SVG_H: f64 = 480.0;
const MARGIN_L: f64 = 78.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 42.0;
const MARGIN_B: f64 = 58.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn axis_ticks(lo: f64, hi: f64, log: bool) -> Vec<(f64, String)> {
    if log {
        let first = lo.ceil() as i64;
        let last = hi.floor() as i64;
        let span = (last - first).max(0);
        let step = 1 + span as usize / 8;
        (first..=last)
            .step_by(step)
            .map(|d| (d as f64, format!("1e{d}")))
            .collect()
    } else {
        (0..=4)
            .map(|k| {
                let v = lo + (hi - lo) * k as f64 / 4.0;
                (v, format!("{v:.3}"))
            })
            .collect()
    }
}

impl SvgPlot {
    fn render(&self, meta: &RunMeta) -> String {
        let tx = |x: f64| if self.log_x { x.log10() } else { x };
        let ty = |y: f64| if self.log_y { y.log10() } else { y };
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for s in &self.series {
            for &(x, y) in &s.points {
                if (self.log_x && x <= 0.0) || (self.log_y && y <= 0.0) {
                    continue;
                }
                xs.push(tx(x));
                ys.push(ty(y));
            }
        }
        let (x_lo, x_hi) = span(&xs);
        let (y_lo, y_hi) = span(&ys);
        let px = |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo) * (SVG_W - MARGIN_L - MARGIN_R);
        let py =
            |y: f64| SVG_H - MARGIN_B - (y - y_lo) / (y_hi - y_lo) * (SVG_H - MARGIN_T - MARGIN_B);

        let mut out = String::new();
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" \
             viewBox=\"0 0 {SVG_W} {SVG_H}\">\n"
        ));
        out.push_str(&format!("<title>{}</title>\n", xml_escape(&self.title)));
        out.push_str(&format!(
            "<desc>config_sha256: {} seed: {} code_version: {CODE_VERSION}</desc>\n",
            meta.config_sha256, meta.seed
        ));
        out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        out.push_str(&format!(
            "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{:.2}\" height=\"{:.2}\" \
             fill=\"none\" stroke=\"#333\"/>\n",
            SVG_W - MARGIN_L - MARGIN_R,
            SVG_H - MARGIN_T - MARGIN_B
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"15\">{}</text>\n",
            (MARGIN_L + SVG_W - MARGIN_R) / 2.0,
            xml_escape(&self.title)
        ));

        for (v, label) in axis_ticks(x_lo, x_hi, self.log_x) {
            let x = px(v);
            out.push_str(&format!(
                "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#bbb\" \
                 stroke-dasharray=\"3,4\"/>\n",
                MARGIN_T,
                SVG_H - MARGIN_B
            ));
            out.push_str(&format!(
                "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\" \
                 font-family=\"sans-serif\" font-size=\"11\">{label}</text>\n",
                SVG_H - MARGIN_B + 16.0
            ));
        }
        for (v, label) in axis_ticks(y_lo, y_hi, self.log_y) {
            let y = py(v);
            out.push_str(&format!(
                "<line x1=\"{MARGIN_L}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
                 stroke=\"#bbb\" stroke-dasharray=\"3,4\"/>\n",
                SVG_W - MARGIN_R
            ));
            out.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" \
                 font-family=\"sans-serif\" font-size=\"11\">{label}</text>\n",
                MARGIN_L - 6.0,
                y + 4.0
            ));
        }
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"13\">{}</text>\n",
            (MARGIN_L + SVG_W - MARGIN_R) / 2.0,
            SVG_H - 14.0,
            xml_escape(&self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"13\" transform=\"rotate(-90 18 {:.2})\">{}</text>\n",
            (MARGIN_T + SVG_H - MARGIN_B) / 2.0,
            (MARGIN_T + SVG_H - MARGIN_B) / 2.0,
            xml_escape(&self.y_label)
        ));

        for (i, s) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|(x, y)| !((self.log_x && *x <= 0.0) || (self.log_y && *y <= 0.0)))
                .map(|&(x, y)| format!("{:.2},{:.2}", px(tx(x)), py(ty(y))))
                .collect();
            out.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\" \
                 points=\"{}\"/>\n",
                pts.join(" ")
            ));
            for p in &pts {
                let (x, y) = p.split_once(',').expect("formatted point");
                out.push_str(&format!(
                    "<circle cx=\"{x}\" cy=\"{y}\" r=\"2.2\" fill=\"{color}\"/>\n"
                ));
            }
            out.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" \
                 font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{}</text>\n",
                SVG_W - MARGIN_R - 8.0,
                MARGIN_T + 18.0 + 16.0 * i as f64,
                xml_escape(&s.label)
            ));
        }
        out.push_str("</svg>\n");
        out
    }
}

fn span(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.04 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
