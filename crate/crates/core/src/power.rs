//! Panel-size p-value curves: the chi-square p-value of the product × attribute
//! table as a function of the number of panelists, estimated by repeatedly
//! drawing panelist subsets without replacement.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::association::{chi2_independence, AssociationError, ContingencyTable};
use crate::data::{Method, ResponseDataset};
use crate::numerics::{subsample_without_replacement, NumericsError, SeedSpec};
use crate::simulate::{simulate_apt, simulate_cata, PerceptionModel, SimError};

pub const DEFAULT_DRAWS: usize = 300;
pub const DEFAULT_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PowerError {
    #[error("panel size {size} outside [2, {panel}]")]
    SizeOutOfRange { size: usize, panel: usize },
    #[error("size grid must be non-empty and strictly increasing")]
    BadSizes,
    #[error("draws must be at least 1")]
    NoDraws,
    #[error("threshold must lie in (0, 1), got {0}")]
    BadThreshold(f64),
    #[error(transparent)]
    Domain(#[from] NumericsError),
    #[error(transparent)]
    Table(#[from] AssociationError),
    #[error(transparent)]
    Simulation(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Summary {
    #[default]
    Mean,
    Median,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Summary::Mean => "mean",
            Summary::Median => "median",
        })
    }
}

impl std::str::FromStr for Summary {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(Summary::Mean),
            "median" => Ok(Summary::Median),
            other => Err(format!("unknown summary {other:?} (expected mean or median)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerCurve {
    pub sizes: Vec<usize>,
    pub draws_per_size: usize,
    /// `p_samples[k][r]`: p-value of draw `r` at `sizes[k]`.
    pub p_samples: Vec<Vec<f64>>,
    pub mean_p: Vec<f64>,
    pub median_p: Vec<f64>,
    pub q10_p: Vec<f64>,
    pub q90_p: Vec<f64>,
    /// Draws whose table was degenerate (scored p = 1).
    pub degenerate_draws: Vec<usize>,
    pub summary: Summary,
    pub threshold: f64,
    pub crossing_size: Option<f64>,
}

impl PowerCurve {
    fn from_samples(sizes: Vec<usize>, p_samples: Vec<Vec<f64>>, degenerate_draws: Vec<usize>, summary: Summary, threshold: f64) -> Self {
        let draws_per_size = p_samples.first().map_or(0, Vec::len);
        let sorted: Vec<Vec<f64>> = p_samples
            .iter()
            .map(|s| {
                let mut v = s.clone();
                v.sort_by(f64::total_cmp);
                v
            })
            .collect();
        let mean_p = p_samples.iter().map(|s| s.iter().sum::<f64>() / s.len() as f64).collect();
        let median_p = sorted.iter().map(|s| quantile(s, 0.5)).collect();
        let q10_p = sorted.iter().map(|s| quantile(s, 0.1)).collect();
        let q90_p = sorted.iter().map(|s| quantile(s, 0.9)).collect();
        let mut curve = Self {
            sizes,
            draws_per_size,
            p_samples,
            mean_p,
            median_p,
            q10_p,
            q90_p,
            degenerate_draws,
            summary,
            threshold,
            crossing_size: None,
        };
        curve.crossing_size = crossing(&curve.sizes, curve.summary_values(), threshold);
        curve
    }

    /// The per-size values of the chosen summary.
    pub fn summary_values(&self) -> &[f64] {
        match self.summary {
            Summary::Mean => &self.mean_p,
            Summary::Median => &self.median_p,
        }
    }
}

/// Type-7 (linear interpolation) quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// First size where `values` drops below `threshold`, interpolated linearly
/// between the neighbouring grid points.
pub fn crossing(sizes: &[usize], values: &[f64], threshold: f64) -> Option<f64> {
    let k = values.iter().position(|&v| v < threshold)?;
    if k == 0 {
        return Some(sizes[0] as f64);
    }
    let (x0, x1) = (sizes[k - 1] as f64, sizes[k] as f64);
    let (y0, y1) = (values[k - 1], values[k]);
    Some(x0 + (y0 - threshold) / (y0 - y1) * (x1 - x0))
}

fn check_args(sizes: &[usize], draws: usize, threshold: f64, panel: usize) -> Result<(), PowerError> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PowerError::BadSizes);
    }
    if let Some(&size) = sizes.iter().find(|&&m| m < 2 || m > panel) {
        return Err(PowerError::SizeOutOfRange { size, panel });
    }
    if draws == 0 {
        return Err(PowerError::NoDraws);
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(PowerError::BadThreshold(threshold));
    }
    Ok(())
}

fn score(table: Result<ContingencyTable, AssociationError>) -> Result<Option<f64>, PowerError> {
    match table.and_then(|t| chi2_independence(&t)) {
        Ok(r) => Ok(Some(r.p_value)),
        Err(AssociationError::DegenerateTable { .. } | AssociationError::EmptySelection) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn collect_grid(
    sizes: &[usize],
    draws: usize,
    cell: impl Fn(usize, usize) -> Result<Option<f64>, PowerError> + Sync,
) -> Result<(Vec<Vec<f64>>, Vec<usize>), PowerError> {
    let grid: Vec<(usize, usize)> = (0..sizes.len()).flat_map(|k| (0..draws).map(move |r| (k, r))).collect();
    let results: Vec<Option<f64>> =
        grid.into_par_iter().map(|(k, r)| cell(sizes[k], r)).collect::<Result<_, _>>()?;
    let mut p_samples = Vec::with_capacity(sizes.len());
    let mut degenerate = Vec::with_capacity(sizes.len());
    for chunk in results.chunks(draws) {
        degenerate.push(chunk.iter().filter(|p| p.is_none()).count());
        p_samples.push(chunk.iter().map(|p| p.unwrap_or(1.0)).collect());
    }
    Ok((p_samples, degenerate))
}

fn replicate_index(size: usize, draw: usize) -> u64 {
    ((size as u64) << 32) | draw as u64
}

/// Subsampling p-value curve of a recorded panel.
///
/// Subsets are drawn from the dataset's sorted panelist ids. Draws whose
/// restricted table is degenerate score `p = 1` and are counted in
/// `degenerate_draws`.
pub fn power_curve(
    dataset: &ResponseDataset,
    sizes: &[usize],
    draws: usize,
    threshold: f64,
    summary: Summary,
    seed: &SeedSpec,
) -> Result<PowerCurve, PowerError> {
    let panelists = dataset.panelists();
    check_args(sizes, draws, threshold, panelists.len())?;
    let products = dataset.products();
    let product_index: HashMap<&str, usize> = products.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
    let panelist_index: HashMap<u32, usize> = panelists.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let n_attr = dataset.attributes().len();
    // per-panelist product × attribute citation counts
    let mut own = vec![vec![vec![0u64; n_attr]; products.len()]; panelists.len()];
    for row in dataset.rows() {
        let cell = &mut own[panelist_index[&row.panelist]][product_index[row.product.as_str()]];
        for (c, &v) in cell.iter_mut().zip(&row.citations) {
            *c += v as u64;
        }
    }
    let attrs = dataset.attributes().names().to_vec();
    let (p_samples, degenerate) = collect_grid(sizes, draws, |m, r| {
        let subset = subsample_without_replacement(panelists.len(), m, seed, replicate_index(m, r))?;
        let mut counts = vec![vec![0u64; n_attr]; products.len()];
        for &id in &subset {
            for (acc, mine) in counts.iter_mut().zip(&own[id - 1]) {
                for (a, b) in acc.iter_mut().zip(mine) {
                    *a += b;
                }
            }
        }
        score(ContingencyTable::new(products.clone(), attrs.clone(), counts))
    })?;
    Ok(PowerCurve::from_samples(sizes.to_vec(), p_samples, degenerate, summary, threshold))
}

/// p-value curve of a perception model: every draw is a freshly simulated panel
/// of the given size, so the curve estimates the expected behaviour of the
/// model rather than of one recorded panel.
pub fn power_curve_model(
    model: &PerceptionModel,
    method: Method,
    sizes: &[usize],
    draws: usize,
    threshold: f64,
    summary: Summary,
    seed: &SeedSpec,
) -> Result<PowerCurve, PowerError> {
    model.validate()?;
    check_args(sizes, draws, threshold, usize::MAX)?;
    let (p_samples, degenerate) = collect_grid(sizes, draws, |m, r| {
        let panel_seed = seed.with_label(format!("{}/{}", seed.stream_label, replicate_index(m, r)));
        let data = match method {
            Method::Apt => simulate_apt(model, m, &panel_seed)?,
            _ => simulate_cata(model, m, &panel_seed)?,
        };
        score(crate::association::build_contingency(&data, None))
    })?;
    Ok(PowerCurve::from_samples(sizes.to_vec(), p_samples, degenerate, summary, threshold))
}

/// About `points` evenly spaced panel sizes from 10 to `panel`, deduplicated.
pub fn default_size_grid(panel: usize, points: usize) -> Result<Vec<usize>, PowerError> {
    if panel < 10 {
        return Err(NumericsError::Domain(format!("panel of {panel} is below 10; pass explicit sizes")).into());
    }
    if points < 2 {
        return Err(NumericsError::Domain(format!("need at least 2 grid points, got {points}")).into());
    }
    let step = (panel - 10) as f64 / (points - 1) as f64;
    let mut grid: Vec<usize> = (0..points).map(|i| (10.0 + step * i as f64).round() as usize).collect();
    grid.dedup();
    Ok(grid)
}
