//! Synthetic effort datasets with a known generating process.
//!
//! `ln(effort) = b0(t) + b1(t) * ln(size) + e`, `e ~ N(0, sigma^2)`, with
//! sizes drawn from a lognormal distribution (median 200, log-sd 0.8 by
//! default). Randomness comes from ChaCha8 seeded with `seed`, so datasets
//! are reproducible across platforms. Both generators consume the random
//! stream identically; a constant drift path reproduces the stationary
//! output exactly.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, EffortUnit, ModelSpec, ProjectRecord, SizeUnit, Term};
use crate::error::{Error, Result};
use crate::ingest::{CategoricalColumn, SchemaConfig, TimeKind};

pub const DEFAULT_START_YEAR: i32 = 2000;
pub const DEFAULT_SIZE_MEDIAN: f64 = 200.0;
pub const DEFAULT_SIZE_SIGMA: f64 = 0.8;

/// A categorical attribute with per-level draw probabilities and additive
/// log-effort effects. The first level is the reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalMix {
    pub name: String,
    pub levels: Vec<String>,
    pub probabilities: Vec<f64>,
    pub effects: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub n_years: usize,
    pub projects_per_year: usize,
    pub start_year: i32,
    /// One intercept per year.
    pub intercepts: Vec<f64>,
    /// One slope on `ln(size)` per year.
    pub slopes: Vec<f64>,
    pub noise_sigma: f64,
    pub size_median: f64,
    pub size_sigma: f64,
    pub categorical: Option<CategoricalMix>,
    pub seed: u64,
}

impl ProcessSpec {
    pub fn stationary(
        n_years: usize,
        projects_per_year: usize,
        intercept: f64,
        slope: f64,
        noise_sigma: f64,
        seed: u64,
    ) -> Self {
        ProcessSpec {
            n_years,
            projects_per_year,
            start_year: DEFAULT_START_YEAR,
            intercepts: vec![intercept; n_years],
            slopes: vec![slope; n_years],
            noise_sigma,
            size_median: DEFAULT_SIZE_MEDIAN,
            size_sigma: DEFAULT_SIZE_SIGMA,
            categorical: None,
            seed,
        }
    }

    /// Slope moving linearly from `from` in the first year to `to` in the last.
    pub fn slope_ramp(
        n_years: usize,
        projects_per_year: usize,
        intercept: f64,
        from: f64,
        to: f64,
        noise_sigma: f64,
        seed: u64,
    ) -> Self {
        let slopes = (0..n_years)
            .map(|t| {
                if n_years <= 1 {
                    from
                } else {
                    from + (to - from) * t as f64 / (n_years - 1) as f64
                }
            })
            .collect();
        ProcessSpec {
            slopes,
            ..Self::stationary(n_years, projects_per_year, intercept, from, noise_sigma, seed)
        }
    }

    /// Coefficients switch from `before` to `after` at year offset `switch_at`.
    pub fn regime_switch(
        n_years: usize,
        projects_per_year: usize,
        before: (f64, f64),
        after: (f64, f64),
        switch_at: usize,
        noise_sigma: f64,
        seed: u64,
    ) -> Self {
        let pick = |t: usize| if t < switch_at { before } else { after };
        ProcessSpec {
            intercepts: (0..n_years).map(|t| pick(t).0).collect(),
            slopes: (0..n_years).map(|t| pick(t).1).collect(),
            ..Self::stationary(n_years, projects_per_year, before.0, before.1, noise_sigma, seed)
        }
    }

    pub fn is_constant(&self) -> bool {
        let flat = |v: &[f64]| v.windows(2).all(|w| w[0] == w[1]);
        flat(&self.intercepts) && flat(&self.slopes)
    }

    fn check(&self) -> Result<()> {
        if self.n_years == 0 || self.projects_per_year == 0 {
            return Err(Error::BadSpec("need at least one year and one project".into()));
        }
        if self.intercepts.len() != self.n_years || self.slopes.len() != self.n_years {
            return Err(Error::BadSpec(format!(
                "coefficient paths must have {} entries",
                self.n_years
            )));
        }
        if !(self.noise_sigma >= 0.0) || !(self.size_sigma >= 0.0) || !(self.size_median > 0.0) {
            return Err(Error::BadSpec("sigmas must be >= 0 and the median > 0".into()));
        }
        if self
            .intercepts
            .iter()
            .chain(&self.slopes)
            .any(|v| !v.is_finite())
        {
            return Err(Error::BadSpec("coefficients must be finite".into()));
        }
        if let Some(mix) = &self.categorical {
            let n = mix.levels.len();
            if n < 2 || mix.probabilities.len() != n || mix.effects.len() != n {
                return Err(Error::BadSpec(
                    "categorical mix needs >= 2 levels with matching probabilities and effects"
                        .into(),
                ));
            }
            if mix.probabilities.iter().any(|p| !(*p >= 0.0)) || mix.probabilities.iter().sum::<f64>() <= 0.0 {
                return Err(Error::BadSpec("probabilities must be non-negative".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    Stationary,
    Drifting,
}

/// The true generating path, emitted as a JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftProfile {
    pub kind: ProcessKind,
    pub years: Vec<i32>,
    pub intercepts: Vec<f64>,
    pub slopes: Vec<f64>,
    pub noise_sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub dataset: Dataset,
    pub profile: DriftProfile,
}

impl Synthetic {
    /// The dataset as CSV with columns `id,year,effort,size[,<categorical>]`.
    pub fn to_csv(&self) -> String {
        let cat = self
            .dataset
            .spec
            .terms
            .iter()
            .find_map(|t| match t {
                Term::Categorical { name, .. } => Some(name.clone()),
                Term::Numeric { .. } => None,
            });
        let mut out = String::from("id,year,effort,size");
        if let Some(c) = &cat {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for r in &self.dataset.records {
            out.push_str(&format!("{},{},{},{}", r.id, r.completion_year, r.effort, r.size));
            if let Some(c) = &cat {
                out.push(',');
                out.push_str(r.categorical(c).unwrap_or_default());
            }
            out.push('\n');
        }
        out
    }

    /// Schema config that reloads [`Self::to_csv`] into an equal dataset.
    pub fn schema_config(&self) -> SchemaConfig {
        let categorical = self
            .dataset
            .spec
            .terms
            .iter()
            .filter_map(|t| match t {
                Term::Categorical {
                    name,
                    reference_level,
                    levels,
                } => Some(CategoricalColumn {
                    name: name.clone(),
                    column: None,
                    reference_level: reference_level.clone(),
                    levels: Some(levels.clone()),
                }),
                Term::Numeric { .. } => None,
            })
            .collect();
        SchemaConfig {
            name: self.dataset.name.clone(),
            id_column: Some("id".into()),
            effort_column: "effort".into(),
            size_column: "size".into(),
            time_column: "year".into(),
            time_kind: TimeKind::Year,
            date_format: None,
            log_effort: true,
            log_size: true,
            effort_unit: self.dataset.effort_unit,
            size_unit: self.dataset.size_unit,
            categorical,
            numeric: Vec::new(),
        }
    }

    pub fn profile_json(&self) -> String {
        serde_json::to_string_pretty(&self.profile).expect("profile serialises")
    }
}

fn generate(spec: &ProcessSpec, kind: ProcessKind) -> Result<Synthetic> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let ln_median = spec.size_median.ln();
    let mut records = Vec::with_capacity(spec.n_years * spec.projects_per_year);
    for t in 0..spec.n_years {
        let year = spec.start_year + t as i32;
        for _ in 0..spec.projects_per_year {
            let z_size: f64 = StandardNormal.sample(&mut rng);
            let z_noise: f64 = StandardNormal.sample(&mut rng);
            let size = (ln_median + spec.size_sigma * z_size).exp();
            let mut ln_effort =
                spec.intercepts[t] + spec.slopes[t] * size.ln() + spec.noise_sigma * z_noise;
            let mut categoricals = BTreeMap::new();
            if let Some(mix) = &spec.categorical {
                let total: f64 = mix.probabilities.iter().sum();
                let u: f64 = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut chosen = mix.levels.len() - 1;
                for (i, p) in mix.probabilities.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        chosen = i;
                        break;
                    }
                }
                ln_effort += mix.effects[chosen];
                categoricals.insert(mix.name.clone(), mix.levels[chosen].clone());
            }
            records.push(ProjectRecord {
                id: format!("p{:04}", records.len() + 1),
                completion_year: year,
                start_date: None,
                duration_days: None,
                effort: ln_effort.exp(),
                size,
                categoricals,
                numerics: BTreeMap::new(),
            });
        }
    }

    let mut terms = vec![Term::Numeric {
        name: "size".into(),
        log_transform: true,
    }];
    if let Some(mix) = &spec.categorical {
        terms.push(Term::Categorical {
            name: mix.name.clone(),
            reference_level: mix.levels[0].clone(),
            levels: mix.levels.clone(),
        });
    }
    let name = match kind {
        ProcessKind::Stationary => "synthetic-stationary",
        ProcessKind::Drifting => "synthetic-drifting",
    };
    let dataset = Dataset::new(
        name,
        records,
        ModelSpec::log_effort(terms),
        EffortUnit::PersonHours,
        SizeUnit::FunctionPoints,
    )?;
    let profile = DriftProfile {
        kind,
        years: (0..spec.n_years).map(|t| spec.start_year + t as i32).collect(),
        intercepts: spec.intercepts.clone(),
        slopes: spec.slopes.clone(),
        noise_sigma: spec.noise_sigma,
        seed: spec.seed,
    };
    Ok(Synthetic { dataset, profile })
}

/// Requires a constant coefficient path.
pub fn gen_stationary(spec: &ProcessSpec) -> Result<Synthetic> {
    if !spec.is_constant() {
        return Err(Error::BadSpec(
            "stationary process needs constant coefficients".into(),
        ));
    }
    generate(spec, ProcessKind::Stationary)
}

pub fn gen_drifting(spec: &ProcessSpec) -> Result<Synthetic> {
    generate(spec, ProcessKind::Drifting)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_dataset() {
        let spec = ProcessSpec::stationary(5, 4, 1.0, 1.0, 0.3, 11);
        let a = gen_stationary(&spec).unwrap();
        let b = gen_stationary(&spec).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.to_csv(), b.to_csv());
        let c = gen_stationary(&ProcessSpec { seed: 12, ..spec }).unwrap();
        assert_ne!(a.dataset.records, c.dataset.records);
    }

    #[test]
    fn zero_drift_matches_stationary() {
        let flat = ProcessSpec::slope_ramp(6, 5, 1.0, 0.9, 0.9, 0.2, 3);
        let stat = ProcessSpec::stationary(6, 5, 1.0, 0.9, 0.2, 3);
        assert_eq!(
            gen_drifting(&flat).unwrap().dataset.records,
            gen_stationary(&stat).unwrap().dataset.records
        );
    }

    #[test]
    fn noiseless_efforts_follow_the_formula() {
        let spec = ProcessSpec::stationary(3, 4, 0.5, 1.1, 0.0, 5);
        let ds = gen_stationary(&spec).unwrap().dataset;
        for r in &ds.records {
            let expected = (0.5 + 1.1 * r.size.ln()).exp();
            assert!(((r.effort - expected) / expected).abs() < 1e-12);
        }
    }

    #[test]
    fn ramp_endpoints() {
        let spec = ProcessSpec::slope_ramp(10, 10, 1.0, 0.5, 1.5, 0.2, 1);
        assert_eq!(spec.slopes[0], 0.5);
        assert!((spec.slopes[9] - 1.5).abs() < 1e-15);
        assert!(gen_stationary(&spec).is_err());
        let profile = gen_drifting(&spec).unwrap().profile;
        assert_eq!(profile.years.len(), 10);
    }

    #[test]
    fn bad_specs_are_rejected() {
        let mut spec = ProcessSpec::stationary(3, 4, 0.5, 1.1, -1.0, 5);
        assert!(matches!(gen_stationary(&spec), Err(Error::BadSpec(_))));
        spec.noise_sigma = 0.1;
        spec.slopes.pop();
        assert!(matches!(gen_drifting(&spec), Err(Error::BadSpec(_))));
    }

    #[test]
    fn categorical_mix_is_drawn() {
        let mut spec = ProcessSpec::stationary(4, 25, 1.0, 1.0, 0.1, 9);
        spec.categorical = Some(CategoricalMix {
            name: "type".into(),
            levels: vec!["dev".into(), "maint".into()],
            probabilities: vec![0.5, 0.5],
            effects: vec![0.0, -0.4],
        });
        let ds = gen_stationary(&spec).unwrap().dataset;
        let hist = ds.level_histogram("type");
        assert_eq!(hist.values().sum::<usize>(), 100);
        assert!(hist["dev"] > 20 && hist["maint"] > 20);
    }
}
