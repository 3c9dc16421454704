//! Deterministic SVG report figures: median response line over a shaded
//! 16-84% band, one file per variable role with a panel per country.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ngbvar_core::irf::QuantileBand;
use ngbvar_core::{Error, Result};

const PANEL_W: f64 = 260.0;
const PANEL_H: f64 = 200.0;
const MARGIN_L: f64 = 46.0;
const MARGIN_R: f64 = 10.0;
const MARGIN_T: f64 = 26.0;
const MARGIN_B: f64 = 30.0;
const COLS: usize = 4;

/// Figure grouping of one panel variable.
#[derive(Debug, Clone)]
pub struct PanelLabel {
    pub variable: String,
    /// Figure the variable belongs to (file name stem).
    pub role: String,
    /// Panel title within the figure.
    pub country: String,
}

/// Writes one SVG per role into `dir`; returns the created paths in
/// deterministic order.
pub fn emit_plots(bands: &QuantileBand, labels: &[PanelLabel], dir: &Path) -> Result<Vec<PathBuf>> {
    if bands.bands.is_empty() || bands.horizons == 0 {
        return Err(Error::Input("empty bands; nothing to plot".into()));
    }
    std::fs::create_dir_all(dir)?;
    // role -> [(country, variable index)], both BTree-ordered
    let mut groups: BTreeMap<String, Vec<(String, usize)>> = BTreeMap::new();
    for (idx, variable) in bands.variables.iter().enumerate() {
        let label = labels.iter().find(|l| &l.variable == variable);
        let role = label.map(|l| l.role.clone()).unwrap_or_else(|| "response".into());
        let country = label
            .map(|l| l.country.clone())
            .unwrap_or_else(|| variable.clone());
        groups.entry(role).or_default().push((country, idx));
    }
    let mut out = Vec::with_capacity(groups.len());
    for (role, mut panels) in groups {
        panels.sort();
        let svg = render_figure(bands, &role, &panels);
        let path = dir.join(format!("{}.svg", sanitize(&role)));
        std::fs::write(&path, svg)?;
        out.push(path);
    }
    Ok(out)
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn render_figure(bands: &QuantileBand, role: &str, panels: &[(String, usize)]) -> String {
    let cols = panels.len().min(COLS);
    let rows = panels.len().div_ceil(cols);
    let width = cols as f64 * PANEL_W;
    let height = rows as f64 * PANEL_H + 18.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="8" y="14" font-family="sans-serif" font-size="13" font-weight="bold">{}</text>"#,
        escape(role)
    );
    for (i, (country, var_idx)) in panels.iter().enumerate() {
        let x0 = (i % cols) as f64 * PANEL_W;
        let y0 = (i / cols) as f64 * PANEL_H + 18.0;
        render_panel(&mut svg, bands, *var_idx, country, x0, y0);
    }
    svg.push_str("</svg>\n");
    svg
}

fn render_panel(svg: &mut String, bands: &QuantileBand, var: usize, title: &str, x0: f64, y0: f64) {
    let cells = &bands.bands[var];
    let n = cells.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (q16, _, q84) in cells {
        lo = lo.min(*q16);
        hi = hi.max(*q84);
    }
    lo = lo.min(0.0);
    hi = hi.max(0.0);
    let pad = 0.05 * (hi - lo).max(1e-12);
    lo -= pad;
    hi += pad;

    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let sx = |h: usize| x0 + MARGIN_L + plot_w * h as f64 / (n - 1).max(1) as f64;
    let sy = |v: f64| y0 + MARGIN_T + plot_h * (hi - v) / (hi - lo);

    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
        x0 + MARGIN_L + plot_w / 2.0,
        y0 + MARGIN_T - 8.0,
        escape(title)
    );
    // frame
    let _ = writeln!(
        svg,
        r#"<rect x="{:.2}" y="{:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black" stroke-width="0.7"/>"#,
        x0 + MARGIN_L,
        y0 + MARGIN_T
    );
    // 16-84 band as a closed polygon: q84 forward, q16 backward
    let mut pts = String::new();
    for (h, (_, _, q84)) in cells.iter().enumerate() {
        let _ = write!(pts, "{:.2},{:.2} ", sx(h), sy(*q84));
    }
    for (h, (q16, _, _)) in cells.iter().enumerate().rev() {
        let _ = write!(pts, "{:.2},{:.2} ", sx(h), sy(*q16));
    }
    let _ = writeln!(svg, r##"<polygon points="{}" fill="#c8c8c8" stroke="none"/>"##, pts.trim_end());
    // zero line
    let zy = sy(0.0);
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{zy:.2}" x2="{:.2}" y2="{zy:.2}" stroke="black" stroke-width="0.5" stroke-dasharray="3,3"/>"#,
        x0 + MARGIN_L,
        x0 + MARGIN_L + plot_w
    );
    // median line
    let mut med = String::new();
    for (h, (_, q50, _)) in cells.iter().enumerate() {
        let _ = write!(med, "{:.2},{:.2} ", sx(h), sy(*q50));
    }
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#1f4e9c" stroke-width="1.5"/>"##,
        med.trim_end()
    );
    // x ticks every 6 months plus the last horizon
    let mut ticks: Vec<usize> = (0..n).step_by(6).collect();
    if *ticks.last().unwrap_or(&0) != n - 1 {
        ticks.push(n - 1);
    }
    for h in ticks {
        let tx = sx(h);
        let by = y0 + MARGIN_T + plot_h;
        let _ = writeln!(
            svg,
            r#"<line x1="{tx:.2}" y1="{by:.2}" x2="{tx:.2}" y2="{:.2}" stroke="black" stroke-width="0.5"/>"#,
            by + 3.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{tx:.2}" y="{:.2}" font-family="sans-serif" font-size="9" text-anchor="middle">{h}</text>"#,
            by + 13.0
        );
    }
    // y labels at the extremes and zero
    for v in [lo + pad, 0.0, hi - pad] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="9" text-anchor="end">{v:.2}</text>"#,
            x0 + MARGIN_L - 4.0,
            sy(v) + 3.0
        );
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
