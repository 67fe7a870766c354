use std::collections::BTreeMap;
use std::fmt::Write;

use super::svg::{render_re_curves, render_weight_curves, PlotSpec};
use crate::analysis::{AnalysisResults, DatasetAnalysis};
use crate::error::Result;
use crate::kernel::KernelType;

/// Bandwidths drawn in the weight-curve figure of each report.
pub const WEIGHT_FIGURE_BANDWIDTHS: [f64; 5] = [1.0, 2.0, 5.0, 25.0, 100.0];

/// A markdown document and the SVG assets it links to, keyed by path
/// relative to the document.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub markdown: String,
    pub assets: BTreeMap<String, String>,
}

/// Formats exactly as the JSON serializer does, so report text and
/// `results.json` agree digit for digit.
fn json_num(v: Option<f64>) -> String {
    match v {
        Some(x) => serde_json::to_string(&x).unwrap_or_else(|_| x.to_string()),
        None => "-".into(),
    }
}

fn slug(text: &str) -> String {
    text.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '-' })
        .collect()
}

fn grid_summary(bandwidths: &[f64]) -> String {
    let evenly = bandwidths.windows(2).all(|w| w[1] - w[0] == bandwidths[1] - bandwidths[0]);
    match (bandwidths.first(), bandwidths.last()) {
        (Some(a), Some(b)) if bandwidths.len() > 2 && evenly => format!(
            "{} to {} step {} ({} values)",
            json_num(Some(*a)),
            json_num(Some(*b)),
            json_num(Some(bandwidths[1] - bandwidths[0])),
            bandwidths.len()
        ),
        _ => bandwidths
            .iter()
            .map(|b| json_num(Some(*b)))
            .collect::<Vec<_>>()
            .join(", "),
    }
}

fn dataset_section(out: &mut String, assets: &mut BTreeMap<String, String>, a: &DatasetAnalysis) -> Result<()> {
    let _ = writeln!(out, "## {}\n", a.dataset);
    let _ = writeln!(
        out,
        "{} projects, origin year {}, {} chronological splits.\n",
        a.n_records,
        a.origin_year,
        a.splits.len()
    );

    if !a.summary.is_empty() {
        let _ = writeln!(out, "| kernel | stationary | non_stationary | undetermined | overall |");
        let _ = writeln!(out, "|---|---|---|---|---|");
        for s in &a.summary {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} |",
                s.kernel, s.stationary, s.non_stationary, s.undetermined, s.classification
            );
        }
        out.push('\n');
        if a.agreement.kernels.len() >= 2 {
            let _ = writeln!(
                out,
                "Verdicts agree across {} on a fraction {} of splits.\n",
                a.agreement
                    .kernels
                    .iter()
                    .map(|k| k.as_str())
                    .collect::<Vec<_>>()
                    .join(", "),
                json_num(Some(a.agreement.fraction))
            );
        }
    }

    let _ = writeln!(
        out,
        "| kernel | split | test year | span | verdict | b_star | decay_horizon | max_gap |"
    );
    let _ = writeln!(out, "|---|---|---|---|---|---|---|---|");
    for v in &a.verdicts {
        let test_year = a
            .splits
            .iter()
            .find(|s| s.split_index == v.split_index)
            .map_or_else(|| "-".to_string(), |s| s.test_year.to_string());
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} |",
            v.kernel,
            v.split_index,
            test_year,
            v.training_span_years,
            v.classification,
            json_num(v.b_star),
            json_num(v.decay_horizon),
            json_num(v.max_gap)
        );
    }
    let _ = writeln!(out);

    let kernels: Vec<KernelType> = a.summary.iter().map(|s| s.kernel).collect();
    for kernel in kernels {
        let _ = writeln!(out, "### {kernel} kernel\n");
        for r in a.results_for(kernel) {
            let name = format!(
                "assets/{}-{}-split{:02}.svg",
                slug(&a.dataset),
                kernel.as_str(),
                r.split.split_index
            );
            let svg = render_re_curves(
                std::slice::from_ref(r),
                &PlotSpec::re_curves(kernel, r.split.split_index),
            )?;
            assets.insert(name.clone(), svg);
            let _ = writeln!(
                out,
                "![{} split {}]({name})",
                kernel, r.split.split_index
            );
        }
        let _ = writeln!(out);
    }
    Ok(())
}

pub fn render_report(results: &AnalysisResults) -> Result<Report> {
    let mut out = String::from("# Stationarity report\n\n");
    let mut assets = BTreeMap::new();
    let c = &results.config;
    let _ = writeln!(out, "## Configuration\n");
    let _ = writeln!(
        out,
        "- kernels: {}",
        c.kernels.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(", ")
    );
    let _ = writeln!(out, "- bandwidths: {}", grid_summary(&c.bandwidths));
    let _ = writeln!(out, "- epsilon: {}", json_num(Some(c.epsilon)));
    let _ = writeln!(out, "- kappa: {}", json_num(Some(c.kappa)));
    let _ = writeln!(out, "- gap floor: {}", json_num(Some(c.gap_floor)));
    let _ = writeln!(out, "- alpha: {}", json_num(Some(c.alpha)));
    let _ = writeln!(out, "- normality mode: {}\n", c.mode.as_str());

    if results.analyses.iter().all(|a| a.verdicts.is_empty()) {
        out.push_str("No analyses were run.\n");
        return Ok(Report { markdown: out, assets });
    }

    let gaussian = render_weight_curves(KernelType::Gaussian, &WEIGHT_FIGURE_BANDWIDTHS, 20)?;
    assets.insert("assets/weights-gaussian.svg".into(), gaussian);
    out.push_str("![Gaussian kernel weights](assets/weights-gaussian.svg)\n\n");

    for a in &results.analyses {
        dataset_section(&mut out, &mut assets, a)?;
    }
    Ok(Report { markdown: out, assets })
}
