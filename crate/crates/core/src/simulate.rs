//! Synthetic CATA / APT panels drawn from a latent-intensity perception model.
//!
//! Product `i` has latent intensity `μ_ia` on attribute `a`; each judgement adds
//! independent `Normal(0, σ)` perceptual noise.
//!
//! * CATA: the box is checked when `μ_ia + ε > t`, so `P = Φ((μ_ia - t) / σ)`.
//! * APT: the coded wine is compared with the pivot, an equal blend of all
//!   products whose latent intensity is `μ̄_a = mean_i μ_ia`. The box is checked
//!   when `μ_ia + ε₁ > μ̄_a + ε₂ + δ`, so `P = Φ((μ_ia - μ̄_a - δ) / (σ √2))`.
//!   Pivot noise `ε₂` is redrawn for every comparison.
//!
//! APT presets use the CATA intensities with `σ` multiplied by a
//! blend-compression factor ([`BLEND_COMPRESSION`]): judging a wine against a
//! blend that already contains it shrinks the perceived contrast relative to
//! the judgement noise, which the model expresses as inflated noise.
//!
//! Hedonic scores, when modelled, are `Normal(mean_i, sd)` rounded and clamped to 1..=9.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::data::{AttributeList, DataError, Method, ResponseDataset, ResponseRow, DEFAULT_HEDONIC_COLUMN};
use crate::numerics::special::normal_cdf;
use crate::numerics::SeedSpec;

/// Noise inflation applied to the APT response channel of the shipped presets.
pub const BLEND_COMPRESSION: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("intensity file: {0}")]
    Intensity(String),
    #[error("parameter file: {0}")]
    Params(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerceptionModel {
    pub name: String,
    pub products: Vec<String>,
    pub attributes: AttributeList,
    /// products × attributes latent means.
    pub intensity: Vec<Vec<f64>>,
    pub noise_sd: f64,
    pub cata_threshold: f64,
    pub apt_threshold: f64,
    /// Per-product hedonic means, aligned with `products`.
    pub hedonic_means: Option<Vec<f64>>,
    pub hedonic_sd: f64,
}

impl PerceptionModel {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidModel(m));
        if self.products.len() < 2 {
            return bad("need at least 2 products".into());
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(p) = self.products.iter().find(|p| p.is_empty() || !seen.insert(p.as_str())) {
            return bad(format!("empty or duplicate product label {p:?}"));
        }
        if self.intensity.len() != self.products.len()
            || self.intensity.iter().any(|r| r.len() != self.attributes.len())
        {
            return bad("intensity matrix does not match products × attributes".into());
        }
        if self.intensity.iter().flatten().any(|x| !x.is_finite()) {
            return bad("intensities must be finite".into());
        }
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return bad(format!("noise_sd must be positive, got {}", self.noise_sd));
        }
        if !self.cata_threshold.is_finite() {
            return bad("cata_threshold must be finite".into());
        }
        if !(self.apt_threshold >= 0.0 && self.apt_threshold.is_finite()) {
            return bad(format!("apt_threshold must be >= 0, got {}", self.apt_threshold));
        }
        if let Some(h) = &self.hedonic_means {
            if h.len() != self.products.len() {
                return bad("hedonic means must cover every product".into());
            }
            if h.iter().any(|m| !(1.0..=9.0).contains(m)) {
                return bad("hedonic means must lie in [1, 9]".into());
            }
            if !(self.hedonic_sd > 0.0 && self.hedonic_sd.is_finite()) {
                return bad(format!("hedonic_sd must be positive, got {}", self.hedonic_sd));
            }
        }
        Ok(())
    }

    /// Latent pivot intensity per attribute: unweighted mean over products.
    pub fn pivot(&self) -> Vec<f64> {
        let k = self.products.len() as f64;
        (0..self.attributes.len()).map(|a| self.intensity.iter().map(|r| r[a]).sum::<f64>() / k).collect()
    }

    pub fn cata_probability(&self, product: usize, attribute: usize) -> f64 {
        normal_cdf((self.intensity[product][attribute] - self.cata_threshold) / self.noise_sd)
    }

    pub fn apt_probability(&self, product: usize, attribute: usize) -> f64 {
        let pivot = self.pivot()[attribute];
        normal_cdf(
            (self.intensity[product][attribute] - pivot - self.apt_threshold)
                / (self.noise_sd * std::f64::consts::SQRT_2),
        )
    }

    /// Expected citation counts for a panel of `panelists` (products × attributes).
    pub fn expected_table(&self, method: Method, panelists: usize) -> Vec<Vec<f64>> {
        (0..self.products.len())
            .map(|i| {
                (0..self.attributes.len())
                    .map(|a| {
                        let p = match method {
                            Method::Apt => self.apt_probability(i, a),
                            _ => self.cata_probability(i, a),
                        };
                        p * panelists as f64
                    })
                    .collect()
            })
            .collect()
    }

    /// Moves every product profile away from (s > 1) or toward (s < 1) the pivot.
    pub fn with_signal_scale(&self, s: f64) -> Self {
        let pivot = self.pivot();
        let mut m = self.clone();
        for row in &mut m.intensity {
            for (x, p) in row.iter_mut().zip(&pivot) {
                *x = p + s * (*x - p);
            }
        }
        m
    }

    /// Same intensities with the noise inflated for the APT channel.
    pub fn apt_variant(&self, factor: f64) -> Self {
        let mut m = self.clone();
        m.noise_sd *= factor;
        m.name = format!("{}-apt", self.name);
        m
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelParams {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    #[allow(dead_code)]
    description: Option<String>,
    noise_sd: f64,
    cata_threshold: f64,
    #[serde(default)]
    apt_threshold: f64,
    #[serde(default = "default_hedonic_sd")]
    hedonic_sd: f64,
    #[serde(default)]
    hedonic_means: Option<BTreeMap<String, f64>>,
}

fn default_hedonic_sd() -> f64 {
    1.0
}

/// Loads a model from an intensity table (`Product;<attr>...` then one numeric
/// row per product) and a TOML parameter file.
pub fn load_model(intensity_csv: &[u8], params_toml: &str, separator: char) -> Result<PerceptionModel, SimError> {
    let params: ModelParams = toml::from_str(params_toml).map_err(|e| SimError::Params(e.to_string()))?;
    if !separator.is_ascii() || separator == '"' {
        return Err(SimError::Intensity(format!("bad separator {separator:?}")));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(separator as u8)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(intensity_csv.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(intensity_csv));
    let mut records = reader.records().filter(|r| r.as_ref().map_or(true, |r| r.iter().any(|f| !f.is_empty())));
    let header = records
        .next()
        .ok_or_else(|| SimError::Intensity("empty file".into()))?
        .map_err(|e| SimError::Intensity(e.to_string()))?;
    if header.get(0) != Some("Product") {
        return Err(SimError::Intensity("first header cell must be \"Product\"".into()));
    }
    let attributes = AttributeList::new(header.iter().skip(1).map(str::to_string))?;
    let mut products = Vec::new();
    let mut intensity = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| SimError::Intensity(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != attributes.len() + 1 {
            return Err(SimError::Intensity(format!(
                "line {line}: expected {} fields, found {}",
                attributes.len() + 1,
                rec.len()
            )));
        }
        products.push(rec[0].to_string());
        let row = rec
            .iter()
            .skip(1)
            .map(|c| c.parse::<f64>().map_err(|_| SimError::Intensity(format!("line {line}: {c:?} is not a number"))))
            .collect::<Result<Vec<_>, _>>()?;
        intensity.push(row);
    }
    let hedonic_means = match params.hedonic_means {
        None => None,
        Some(map) => {
            if let Some(extra) = map.keys().find(|k| !products.contains(k)) {
                return Err(SimError::Params(format!("hedonic mean for unknown product {extra:?}")));
            }
            Some(
                products
                    .iter()
                    .map(|p| map.get(p).copied().ok_or_else(|| SimError::Params(format!("missing hedonic mean for {p:?}"))))
                    .collect::<Result<Vec<_>, _>>()?,
            )
        }
    };
    let model = PerceptionModel {
        name: params.name.unwrap_or_else(|| "custom".into()),
        products,
        attributes,
        intensity,
        noise_sd: params.noise_sd,
        cata_threshold: params.cata_threshold,
        apt_threshold: params.apt_threshold,
        hedonic_means,
        hedonic_sd: params.hedonic_sd,
    };
    model.validate()?;
    Ok(model)
}

fn hedonic_draw<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> u8 {
    let z: f64 = StandardNormal.sample(rng);
    (mean + sd * z).round().clamp(1.0, 9.0) as u8
}

fn simulate(model: &PerceptionModel, panelists: usize, seed: &SeedSpec, method: Method) -> Result<ResponseDataset, SimError> {
    model.validate()?;
    let pivot = model.pivot();
    let n_attr = model.attributes.len();
    let per_panelist: Vec<Vec<ResponseRow>> = (1..=panelists as u32)
        .into_par_iter()
        .map(|id| {
            let mut rng = seed.rng(id as u64);
            let mut noise = || -> f64 {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * model.noise_sd
            };
            let mut rows = Vec::with_capacity(model.products.len());
            for (i, product) in model.products.iter().enumerate() {
                let citations: Vec<u8> = (0..n_attr)
                    .map(|a| {
                        let mu = model.intensity[i][a];
                        let hit = match method {
                            Method::Apt => {
                                let coded = mu + noise();
                                let reference = pivot[a] + noise();
                                coded > reference + model.apt_threshold
                            }
                            _ => mu + noise() > model.cata_threshold,
                        };
                        hit as u8
                    })
                    .collect();
                rows.push(ResponseRow { product: product.clone(), panelist: id, citations, hedonic: None });
            }
            if let Some(means) = &model.hedonic_means {
                for (row, &m) in rows.iter_mut().zip(means) {
                    row.hedonic = Some(hedonic_draw(&mut rng, m, model.hedonic_sd));
                }
            }
            rows
        })
        .collect();
    // product-major output: all panelists of product 1, then product 2, ...
    let mut rows = Vec::with_capacity(panelists * model.products.len());
    for i in 0..model.products.len() {
        rows.extend(per_panelist.iter().map(|p| p[i].clone()));
    }
    let hedonic_column = model.hedonic_means.as_ref().map(|_| DEFAULT_HEDONIC_COLUMN.to_string());
    Ok(ResponseDataset::new(model.attributes.clone(), rows, method, hedonic_column)?)
}

/// CATA responses of panelists `1..=panelists`.
pub fn simulate_cata(model: &PerceptionModel, panelists: usize, seed: &SeedSpec) -> Result<ResponseDataset, SimError> {
    simulate(model, panelists, seed, Method::Cata)
}

/// APT responses of panelists `1..=panelists`.
pub fn simulate_apt(model: &PerceptionModel, panelists: usize, seed: &SeedSpec) -> Result<ResponseDataset, SimError> {
    simulate(model, panelists, seed, Method::Apt)
}

pub const PRESET_NAMES: [&str; 4] = ["null", "paper-shaped", "paper-shaped-apt", "strong"];

/// Shipped model files: (name, intensity.csv, params.toml).
const PRESET_FILES: [(&str, &str, &str); 4] = [
    ("null", include_str!("../models/null/intensity.csv"), include_str!("../models/null/params.toml")),
    (
        "paper-shaped",
        include_str!("../models/paper-shaped/intensity.csv"),
        include_str!("../models/paper-shaped/params.toml"),
    ),
    (
        "paper-shaped-apt",
        include_str!("../models/paper-shaped-apt/intensity.csv"),
        include_str!("../models/paper-shaped-apt/params.toml"),
    ),
    ("strong", include_str!("../models/strong/intensity.csv"), include_str!("../models/strong/params.toml")),
];

/// Raw files of a shipped preset.
pub fn preset_files(name: &str) -> Option<(&'static str, &'static str)> {
    PRESET_FILES.iter().find(|(n, _, _)| *n == name).map(|(_, i, p)| (*i, *p))
}

pub fn preset(name: &str) -> Result<PerceptionModel, SimError> {
    let (intensity, params) = preset_files(name).ok_or_else(|| SimError::UnknownPreset(name.to_string()))?;
    load_model(intensity.as_bytes(), params, ';')
}

/// All shipped presets by name.
pub fn scenario_library() -> BTreeMap<String, PerceptionModel> {
    PRESET_NAMES
        .iter()
        .map(|n| (n.to_string(), preset(n).expect("shipped presets are valid")))
        .collect()
}
