//! Deterministic SVG 1.1 line charts.
//!
//! Every polyline carries a `data-values` attribute listing the exact values
//! it plots (undefined points as `-`), so charts can be checked numerically.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::chronology::SplitResult;
use crate::error::{Error, Result};
use crate::kernel::{kernel_weight, KernelType};

pub const DEFAULT_Y_MAX: f64 = 5.0;

const WIDTH: f64 = 640.0;
const PANEL_HEIGHT: f64 = 360.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    WeightCurves,
    ReVsBandwidth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub kind: PlotKind,
    pub kernel: Option<KernelType>,
    /// Restrict to these bandwidths; all when `None`.
    pub bandwidths: Option<Vec<f64>>,
    pub split: Option<usize>,
    pub title: Option<String>,
    pub x_label: String,
    pub y_label: String,
    pub y_max: f64,
}

impl PlotSpec {
    pub fn re_curves(kernel: KernelType, split: usize) -> Self {
        PlotSpec {
            kind: PlotKind::ReVsBandwidth,
            kernel: Some(kernel),
            bandwidths: None,
            split: Some(split),
            title: None,
            x_label: "bandwidth".into(),
            y_label: "relative error".into(),
            y_max: DEFAULT_Y_MAX,
        }
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn num(x: f64) -> String {
    let r = (x * 100.0).round() / 100.0;
    if r == 0.0 {
        "0".into()
    } else {
        r.to_string()
    }
}

fn values_attr(values: &[Option<f64>]) -> String {
    values
        .iter()
        .map(|v| v.map_or_else(|| "-".to_string(), |x| x.to_string()))
        .collect::<Vec<_>>()
        .join(" ")
}

fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

struct Series {
    label: String,
    xs: Vec<f64>,
    ys: Vec<Option<f64>>,
    dashed: bool,
}

struct Panel {
    title: String,
    x_range: (f64, f64),
    y_range: (f64, f64),
    series: Vec<Series>,
}

struct Chart {
    x_label: String,
    y_label: String,
    panels: Vec<Panel>,
}

impl Chart {
    fn render(&self) -> String {
        let height = PANEL_HEIGHT * self.panels.len() as f64;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">
<rect width="{w}" height="{h}" fill="white"/>"#,
            w = WIDTH,
            h = height
        );
        for (i, panel) in self.panels.iter().enumerate() {
            self.render_panel(&mut out, panel, PANEL_HEIGHT * i as f64);
        }
        out.push_str("</svg>\n");
        out
    }

    fn render_panel(&self, out: &mut String, panel: &Panel, offset: f64) {
        let plot_w = WIDTH - LEFT - RIGHT;
        let plot_h = PANEL_HEIGHT - TOP - BOTTOM;
        let (x0, x1) = panel.x_range;
        let (y0, y1) = panel.y_range;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0).max(f64::MIN_POSITIVE) * plot_w;
        let sy = |y: f64| offset + TOP + plot_h - (y.clamp(y0, y1) - y0) / (y1 - y0) * plot_h;

        let _ = writeln!(out, r#"<g class="panel">"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
            num(LEFT + plot_w / 2.0),
            num(offset + TOP / 2.0 + 5.0),
            escape(&panel.title)
        );
        let _ = writeln!(
            out,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
            num(LEFT),
            num(offset + TOP),
            num(plot_w),
            num(plot_h)
        );

        let step = tick_step(x1 - x0);
        let mut tick = (x0 / step).ceil() * step;
        while tick <= x1 + 1e-9 {
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
                num(sx(tick)),
                num(offset + TOP + plot_h + 16.0),
                num(tick)
            );
            tick += step;
        }
        let step = tick_step(y1 - y0);
        let mut tick = (y0 / step).ceil() * step;
        while tick <= y1 + 1e-9 {
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                num(LEFT - 6.0),
                num(sy(tick) + 4.0),
                num(tick)
            );
            tick += step;
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            num(LEFT + plot_w / 2.0),
            num(offset + PANEL_HEIGHT - 12.0),
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="14" y="{y}" text-anchor="middle" transform="rotate(-90 14 {y})">{}</text>"#,
            escape(&self.y_label),
            y = num(offset + TOP + plot_h / 2.0)
        );

        for (i, s) in panel.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(
                out,
                r#"<g class="series" data-label="{}" data-x="{}" data-values="{}">"#,
                escape(&s.label),
                values_attr(&s.xs.iter().map(|x| Some(*x)).collect::<Vec<_>>()),
                values_attr(&s.ys)
            );
            let mut segment: Vec<String> = Vec::new();
            let mut flush = |segment: &mut Vec<String>| {
                if !segment.is_empty() {
                    let _ = writeln!(
                        out,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                        segment.join(" ")
                    );
                    segment.clear();
                }
            };
            for (x, y) in s.xs.iter().zip(&s.ys) {
                match y {
                    Some(y) => segment.push(format!("{},{}", num(sx(*x)), num(sy(*y)))),
                    None => flush(&mut segment),
                }
            }
            flush(&mut segment);
            let _ = writeln!(out, "</g>");

            let ly = offset + TOP + 12.0 + 18.0 * i as f64;
            let lx = LEFT + plot_w + 12.0;
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                num(lx),
                num(ly),
                num(lx + 24.0),
                num(ly)
            );
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}">{}</text>"#,
                num(lx + 30.0),
                num(ly + 4.0),
                escape(&s.label)
            );
        }
        let _ = writeln!(out, "</g>");
    }
}

/// One curve per bandwidth, sampled at elapsed years `0..=max_years`.
pub fn render_weight_curves(kernel: KernelType, bandwidths: &[f64], max_years: u32) -> Result<String> {
    if bandwidths.is_empty() {
        return Err(Error::EmptySelection);
    }
    if let Some(b) = bandwidths.iter().find(|b| !(**b > 0.0)) {
        return Err(Error::NonPositiveBandwidth(*b));
    }
    if max_years == 0 {
        return Err(Error::InvalidSpec("max_years must be at least 1".into()));
    }
    let xs: Vec<f64> = (0..=max_years).map(f64::from).collect();
    let series = bandwidths
        .iter()
        .map(|&b| Series {
            label: format!("b = {b}"),
            xs: xs.clone(),
            ys: xs.iter().map(|&x| Some(kernel_weight(kernel, x / b))).collect(),
            dashed: false,
        })
        .collect();
    Ok(Chart {
        x_label: "elapsed years".into(),
        y_label: "weight".into(),
        panels: vec![Panel {
            title: format!("{kernel} kernel weights"),
            x_range: (0.0, f64::from(max_years)),
            y_range: (0.0, 1.05),
            series,
        }],
    }
    .render())
}

/// Train/test curves plus global reference lines, one panel per selected split.
pub fn render_re_curves(results: &[SplitResult], plot: &PlotSpec) -> Result<String> {
    let selected: Vec<&SplitResult> = results
        .iter()
        .filter(|r| plot.kernel.is_none_or(|k| r.kernel == k))
        .filter(|r| plot.split.is_none_or(|s| r.split.split_index == s))
        .collect();
    if selected.is_empty() {
        return Err(Error::EmptySelection);
    }
    let y_max = if plot.y_max > 0.0 { plot.y_max } else { DEFAULT_Y_MAX };
    let mut panels = Vec::with_capacity(selected.len());
    for r in selected {
        let points: Vec<_> = r
            .points
            .iter()
            .filter(|p| {
                plot.bandwidths
                    .as_ref()
                    .is_none_or(|bs| bs.contains(&p.bandwidth))
            })
            .collect();
        if points.is_empty() {
            return Err(Error::EmptySelection);
        }
        let xs: Vec<f64> = points.iter().map(|p| p.bandwidth).collect();
        let x_range = (xs[0].min(0.0), *xs.last().unwrap());
        let global = |v: Option<f64>| vec![v; xs.len()];
        let series = vec![
            Series {
                label: "train".into(),
                xs: xs.clone(),
                ys: points.iter().map(|p| p.re_train).collect(),
                dashed: false,
            },
            Series {
                label: "test".into(),
                xs: xs.clone(),
                ys: points.iter().map(|p| p.re_test).collect(),
                dashed: false,
            },
            Series {
                label: "train global".into(),
                xs: xs.clone(),
                ys: global(r.re_train_global),
                dashed: true,
            },
            Series {
                label: "test global".into(),
                xs: xs.clone(),
                ys: global(r.re_test_global),
                dashed: true,
            },
        ];
        let title = plot.title.clone().unwrap_or_else(|| {
            format!(
                "{} kernel, split {} (test year {})",
                r.kernel, r.split.split_index, r.split.test_year
            )
        });
        panels.push(Panel {
            title,
            x_range,
            y_range: (0.0, y_max),
            series,
        });
    }
    Ok(Chart {
        x_label: plot.x_label.clone(),
        y_label: plot.y_label.clone(),
        panels,
    }
    .render())
}

/// Parses the `data-values` attributes back out of a rendered chart.
pub fn series_values(svg: &str) -> Vec<(String, Vec<Option<f64>>)> {
    let attr = |tag: &str, name: &str| -> Option<String> {
        let key = format!("{name}=\"");
        let start = tag.find(&key)? + key.len();
        let end = tag[start..].find('"')? + start;
        Some(tag[start..end].to_string())
    };
    svg.lines()
        .filter(|l| l.starts_with(r#"<g class="series""#))
        .filter_map(|l| {
            let label = attr(l, "data-label")?;
            let values = attr(l, "data-values")?
                .split(' ')
                .map(|v| v.parse::<f64>().ok())
                .collect();
            Some((label, values))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_curves_start_at_one_and_decrease() {
        let svg = render_weight_curves(KernelType::Gaussian, &[1.0, 5.0, 25.0], 20).unwrap();
        let series = series_values(&svg);
        assert_eq!(series.len(), 3);
        for (_, ys) in &series {
            let ys: Vec<f64> = ys.iter().map(|y| y.unwrap()).collect();
            assert_eq!(ys.len(), 21);
            assert_eq!(ys[0], 1.0);
            assert!(ys.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn data_values_are_exact_kernel_weights() {
        let svg = render_weight_curves(KernelType::Epanechnikov, &[3.0, 7.5], 12).unwrap();
        let series = series_values(&svg);
        for ((_, ys), b) in series.iter().zip([3.0, 7.5]) {
            for (j, y) in ys.iter().enumerate() {
                assert_eq!(y.unwrap(), kernel_weight(KernelType::Epanechnikov, j as f64 / b));
            }
        }
    }

    #[test]
    fn uniform_curves_are_flat() {
        let svg = render_weight_curves(KernelType::Uniform, &[2.0], 10).unwrap();
        assert!(series_values(&svg)[0].1.iter().all(|y| *y == Some(1.0)));
    }

    #[test]
    fn empty_selections_fail() {
        assert!(matches!(
            render_weight_curves(KernelType::Gaussian, &[], 10),
            Err(Error::EmptySelection)
        ));
        assert!(matches!(
            render_re_curves(&[], &PlotSpec::re_curves(KernelType::Gaussian, 1)),
            Err(Error::EmptySelection)
        ));
    }

    #[test]
    fn rendering_is_deterministic() {
        let a = render_weight_curves(KernelType::Triangular, &[1.0, 4.0], 9).unwrap();
        let b = render_weight_curves(KernelType::Triangular, &[1.0, 4.0], 9).unwrap();
        assert_eq!(a, b);
    }
}
