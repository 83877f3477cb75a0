//! CSV tables, fitted-constant files and SVG line plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use apint::window_opt::Fit;
use serde::{Deserialize, Serialize};

use crate::experiments::Table;
use crate::params::RunParams;

/// Bumped whenever a column set changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Writes `# schema ...` and `# params ...` comment lines, then the header
/// and rows.
pub fn write_csv<W: Write>(table: &Table, params: &RunParams, mut out: W) -> Result<()> {
    writeln!(
        out,
        "# schema={} version={} columns={}",
        table.name,
        SCHEMA_VERSION,
        table.columns.join(";")
    )?;
    writeln!(
        out,
        "# froude={} nx={} dt_fine={} dt_coarse={} t_end={} kernel={} substeps={} tol={} width={} seed={}",
        params.froude,
        params.nx,
        params.dt_fine,
        params.dt_coarse,
        params.t_end,
        params.kernel.name(),
        params.substeps,
        params.tol,
        params.width,
        params.seed
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|c| c.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(table: &Table, params: &RunParams, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_csv(table, params, std::io::BufWriter::new(file))
}

/// Fitted constants as stored next to the run outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsFile {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub d1: f64,
    pub residual: f64,
    pub dt_coarse: f64,
}

impl ConstantsFile {
    pub fn from_fit(fit: &Fit<f64>, dt_coarse: f64) -> Self {
        Self {
            c1: fit.constants.c1,
            c2: fit.constants.c2,
            c3: fit.constants.c3,
            d1: fit.constants.d1,
            residual: fit.residual,
            dt_coarse,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, toml::to_string(self)?).with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(toml::from_str(&text)?)
    }
}

/// What to plot from a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x: String,
    pub y: String,
    /// Column whose distinct values become separate series.
    pub series: String,
    pub log_x: bool,
    pub log_y: bool,
}

type Series = BTreeMap<String, Vec<(f64, f64)>>;

/// Reads `(x, y)` pairs grouped by the series column; rows with an empty or
/// non-numeric `x` or `y` are skipped.
pub fn read_series(csv_path: &Path, spec: &PlotSpec) -> Result<Series> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(csv_path)
        .with_context(|| format!("opening {}", csv_path.display()))?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("column `{name}` missing from {}", csv_path.display()))
    };
    let (xi, yi, si) = (find(&spec.x)?, find(&spec.y)?, find(&spec.series)?);
    let mut series = Series::new();
    for record in reader.records() {
        let record = record?;
        let key = record.get(si).unwrap_or_default().to_string();
        let entry = series.entry(key).or_default();
        let parse = |i: usize| record.get(i).and_then(|v| v.parse::<f64>().ok());
        if let (Some(x), Some(y)) = (parse(xi), parse(yi)) {
            if (!spec.log_x || x > 0.0) && (!spec.log_y || y > 0.0) && x.is_finite() && y.is_finite() {
                entry.push((x, y));
            }
        }
    }
    Ok(series)
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#d62728", "#2ca02c", "#1f77b4", "#9467bd", "#ff7f0e", "#8c564b"];

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = values
            .map(|v| if log { v.log10() } else { v })
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        Self { lo, hi, log }
    }

    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo.floor() as i32, self.hi.ceil() as i32);
            (a..=b)
                .map(|e| 10f64.powi(e))
                .filter(|v| {
                    let l = v.log10();
                    l >= self.lo - 1e-9 && l <= self.hi + 1e-9
                })
                .map(|v| (v, format!("{v:e}")))
                .collect()
        } else {
            (0..=4)
                .map(|i| {
                    let v = self.lo + (self.hi - self.lo) * i as f64 / 4.0;
                    (v, format!("{}", (v * 1e4).round() / 1e4))
                })
                .collect()
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders a standalone SVG document.
pub fn render_svg(series: &Series, spec: &PlotSpec) -> String {
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let points = || series.values().flatten();
    let xa = Axis::new(points().map(|p| p.0), spec.log_x);
    let ya = Axis::new(points().map(|p| p.1), spec.log_y);
    let sx = |x: f64| LEFT + xa.frac(x) * pw;
    let sy = |y: f64| TOP + (1.0 - ya.frac(y)) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" font-size="15" text-anchor="middle" font-family="sans-serif">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&spec.title)
    );
    let _ = writeln!(
        s,
        r#"<rect class="axes" x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle" font-family="sans-serif">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(&spec.x)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" font-size="13" text-anchor="middle" font-family="sans-serif" transform="rotate(-90 16 {})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&spec.y)
    );

    let non_empty = series.values().any(|v| !v.is_empty());
    if non_empty {
        for (v, label) in xa.ticks() {
            let x = sx(v);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" font-size="11" text-anchor="middle" font-family="sans-serif">{label}</text>"#,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0
            );
        }
        for (v, label) in ya.ticks() {
            let y = sy(v);
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" font-size="11" text-anchor="end" font-family="sans-serif">{label}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                y + 4.0
            );
        }
    } else {
        let _ = writeln!(
            s,
            r#"<text class="no-data" x="{}" y="{}" font-size="14" text-anchor="middle" font-family="sans-serif">no data</text>"#,
            LEFT + pw / 2.0,
            TOP + ph / 2.0
        );
    }

    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        if pts.len() > 1 {
            let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(
                s,
                r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                coords.join(" ")
            );
        }
        for &(x, y) in pts {
            let _ = writeln!(
                s,
                r#"<circle class="marker" cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            s,
            r#"<g class="legend"><line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}" font-size="12" font-family="sans-serif">{} = {}</text></g>"#,
            lx + 18.0,
            lx + 24.0,
            ly + 4.0,
            escape(&spec.series),
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Reads `csv_path` and writes the plot to `svg_path`.
pub fn emit_plot(csv_path: &Path, spec: &PlotSpec, svg_path: &Path) -> Result<()> {
    let series = read_series(csv_path, spec)?;
    std::fs::write(svg_path, render_svg(&series, spec)).with_context(|| format!("writing {}", svg_path.display()))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let probe = dir.join(".write-test");
    if std::fs::write(&probe, b"").is_err() {
        bail!("output directory {} is not writable", dir.display());
    }
    let _ = std::fs::remove_file(probe);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> PlotSpec {
        PlotSpec {
            title: "t".into(),
            x: "window".into(),
            y: "coarse_error".into(),
            series: "epsilon".into(),
            log_x: true,
            log_y: true,
        }
    }

    #[test]
    fn empty_plot_says_so() {
        let svg = render_svg(&Series::new(), &spec());
        assert!(svg.contains("no data"));
        assert!(svg.starts_with("<?xml"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn single_point_has_one_marker() {
        let mut s = Series::new();
        s.insert("1".into(), vec![(0.1, 0.2)]);
        let svg = render_svg(&s, &spec());
        assert_eq!(svg.matches(r#"class="marker""#).count(), 1);
        assert_eq!(svg.matches(r#"class="series""#).count(), 0);
        assert!(!svg.contains("no data"));
    }

    #[test]
    fn three_series_three_legend_entries() {
        let mut s = Series::new();
        for e in ["0.01", "0.1", "1"] {
            s.insert(e.into(), vec![(0.1, 1.0), (0.2, 0.5), (0.4, 0.3)]);
        }
        let svg = render_svg(&s, &spec());
        assert_eq!(svg.matches(r#"class="legend""#).count(), 3);
        assert_eq!(svg.matches(r#"class="series""#).count(), 3);
        assert_eq!(svg.matches(r#"class="marker""#).count(), 9);
        assert!(svg.contains("epsilon = 0.01"));
    }
}
