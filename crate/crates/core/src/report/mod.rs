//! SVG figures and the markdown report.

mod markdown;
mod svg;

use std::path::Path;

pub use markdown::{render_report, Report, WEIGHT_FIGURE_BANDWIDTHS};
pub use svg::{render_re_curves, render_weight_curves, series_values, PlotKind, PlotSpec, DEFAULT_Y_MAX};

use crate::error::{Error, Result};

impl Report {
    /// Writes `report.md` and its assets under `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let io = |path: &Path, e: std::io::Error| Error::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        for (name, svg) in &self.assets {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| io(parent, e))?;
            }
            std::fs::write(&path, svg).map_err(|e| io(&path, e))?;
        }
        let path = dir.join("report.md");
        std::fs::write(&path, &self.markdown).map_err(|e| io(&path, e))
    }
}
