//! Correspondence analysis of a product × attribute table and multinomial
//! bootstrap confidence ellipses for the product points.
//!
//! With `P = counts / n`, row masses `r` and column masses `c`, the
//! standardized residual matrix is `S = D_r^{-1/2} (P - r c^T) D_c^{-1/2}`.
//! Its SVD `S = U Σ V^T` yields principal inertias `λ_k = σ_k^2`, row principal
//! coordinates `F = D_r^{-1/2} U Σ`, column principal coordinates
//! `G = D_c^{-1/2} V Σ` and column standard coordinates `D_c^{-1/2} V`.
//!
//! Axis signs are fixed so that, on every axis, the row point farthest from the
//! origin has a positive coordinate (ties go to the lowest row index).

use rayon::prelude::*;
use thiserror::Error;

use crate::association::ContingencyTable;
use crate::numerics::rng::multinomial_with;
use crate::numerics::{chi2_quantile, SeedSpec};
use crate::svd::svd;

/// Replicates drawn per ellipse set unless the caller asks otherwise.
pub const DEFAULT_REPLICATES: usize = 500;
pub const DEFAULT_LEVEL: f64 = 0.95;

/// Singular values at or below this are treated as exact zeros.
const RANK_TOL: f64 = 1e-12;
const SIGN_TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CaError {
    #[error("degenerate table: {rows} rows and {cols} columns with positive mass (need at least 2 of each)")]
    DegenerateTable { rows: usize, cols: usize },
    #[error("supplementary row has zero total")]
    ZeroRow,
    #[error("supplementary row has {got} entries, table has {expected} columns")]
    LengthMismatch { expected: usize, got: usize },
    #[error("need at least 10 bootstrap replicates, got {0}")]
    TooFewReplicates(usize),
    #[error("confidence level must lie in (0, 1), got {0}")]
    BadLevel(f64),
    #[error("result does not belong to this table")]
    TableMismatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaResult {
    /// Products with positive mass, in table order.
    pub row_labels: Vec<String>,
    /// Attributes with positive mass, in table order.
    pub col_labels: Vec<String>,
    /// Table indices of the active rows / columns.
    pub row_index: Vec<usize>,
    pub col_index: Vec<usize>,
    /// Table rows / columns dropped for zero mass.
    pub excluded_rows: Vec<String>,
    pub excluded_cols: Vec<String>,
    /// Column count of the source table (length expected by supplementary projection).
    pub n_table_cols: usize,
    pub inertias: Vec<f64>,
    pub inertia_pct: Vec<f64>,
    pub total_inertia: f64,
    pub row_masses: Vec<f64>,
    pub col_masses: Vec<f64>,
    /// Active rows × axes.
    pub row_coords: Vec<Vec<f64>>,
    /// Active columns × axes.
    pub col_coords: Vec<Vec<f64>>,
    pub col_standard_coords: Vec<Vec<f64>>,
}

impl CaResult {
    pub fn n_axes(&self) -> usize {
        self.inertias.len()
    }

    pub fn singular_values(&self) -> Vec<f64> {
        self.inertias.iter().map(|l| l.sqrt()).collect()
    }

    /// Coordinates of a product by label.
    pub fn row_coord(&self, label: &str) -> Option<&[f64]> {
        self.row_labels.iter().position(|l| l == label).map(|i| self.row_coords[i].as_slice())
    }
}

/// Correspondence analysis of `table`.
pub fn ca(table: &ContingencyTable) -> Result<CaResult, CaError> {
    let row_index: Vec<usize> = (0..table.n_rows()).filter(|&i| table.row_totals()[i] > 0).collect();
    let col_index: Vec<usize> = (0..table.n_cols()).filter(|&j| table.col_totals()[j] > 0).collect();
    if row_index.len() < 2 || col_index.len() < 2 {
        return Err(CaError::DegenerateTable { rows: row_index.len(), cols: col_index.len() });
    }
    let n = table.grand_total() as f64;
    let row_masses: Vec<f64> = row_index.iter().map(|&i| table.row_totals()[i] as f64 / n).collect();
    let col_masses: Vec<f64> = col_index.iter().map(|&j| table.col_totals()[j] as f64 / n).collect();

    let residuals: Vec<Vec<f64>> = row_index
        .iter()
        .zip(&row_masses)
        .map(|(&i, &r)| {
            col_index
                .iter()
                .zip(&col_masses)
                .map(|(&j, &c)| {
                    let p = table.counts()[i][j] as f64 / n;
                    (p - r * c) / (r * c).sqrt()
                })
                .collect()
        })
        .collect();
    let total_inertia: f64 = residuals.iter().flatten().map(|x| x * x).sum();

    let dec = svd(&residuals);
    let max_axes = row_index.len().min(col_index.len()) - 1;
    let n_axes = dec.s.iter().take(max_axes).take_while(|&&s| s > RANK_TOL).count();

    let mut row_coords = vec![Vec::with_capacity(n_axes); row_index.len()];
    let mut col_coords = vec![Vec::with_capacity(n_axes); col_index.len()];
    let mut col_standard_coords = vec![Vec::with_capacity(n_axes); col_index.len()];
    let mut inertias = Vec::with_capacity(n_axes);
    for k in 0..n_axes {
        let sigma = dec.s[k];
        let f: Vec<f64> = dec.u[k].iter().zip(&row_masses).map(|(u, r)| u * sigma / r.sqrt()).collect();
        let sign = axis_sign(&f);
        for (i, x) in f.iter().enumerate() {
            row_coords[i].push(sign * x);
        }
        for (j, (v, c)) in dec.v[k].iter().zip(&col_masses).enumerate() {
            let standard = sign * v / c.sqrt();
            col_standard_coords[j].push(standard);
            col_coords[j].push(standard * sigma);
        }
        inertias.push(sigma * sigma);
    }
    let sum: f64 = inertias.iter().sum();
    let inertia_pct = inertias.iter().map(|l| if sum > 0.0 { 100.0 * l / sum } else { 0.0 }).collect();

    let pick = |labels: &[String], idx: &[usize], len: usize| -> Vec<String> {
        (0..len).filter(|i| !idx.contains(i)).map(|i| labels[i].clone()).collect()
    };
    Ok(CaResult {
        excluded_rows: pick(table.row_labels(), &row_index, table.n_rows()),
        excluded_cols: pick(table.col_labels(), &col_index, table.n_cols()),
        row_labels: row_index.iter().map(|&i| table.row_labels()[i].clone()).collect(),
        col_labels: col_index.iter().map(|&j| table.col_labels()[j].clone()).collect(),
        row_index,
        col_index,
        n_table_cols: table.n_cols(),
        inertias,
        inertia_pct,
        total_inertia,
        row_masses,
        col_masses,
        row_coords,
        col_coords,
        col_standard_coords,
    })
}

/// +1 or -1 so that the largest-magnitude entry (first on ties) becomes positive.
fn axis_sign(f: &[f64]) -> f64 {
    let max = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let lead = f.iter().find(|x| x.abs() >= max * (1.0 - SIGN_TIE_TOL)).copied().unwrap_or(0.0);
    if lead < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Places a row profile on the axes of `result` through the transition formula
/// `f_k = Σ_j (x_j / Σ x) γ_jk` with `γ` the column standard coordinates.
///
/// `row_counts` is indexed like the source table's columns; counts in columns
/// excluded from the analysis add to the total but carry no coordinate.
pub fn project_supplementary_row(result: &CaResult, row_counts: &[f64]) -> Result<Vec<f64>, CaError> {
    if row_counts.len() != result.n_table_cols {
        return Err(CaError::LengthMismatch { expected: result.n_table_cols, got: row_counts.len() });
    }
    let total: f64 = row_counts.iter().sum();
    if !(total > 0.0) {
        return Err(CaError::ZeroRow);
    }
    let mut f = vec![0.0; result.n_axes()];
    for (a, &j) in result.col_index.iter().enumerate() {
        let w = row_counts[j] / total;
        if w != 0.0 {
            for (fk, g) in f.iter_mut().zip(&result.col_standard_coords[a]) {
                *fk += w * g;
            }
        }
    }
    Ok(f)
}

fn project_first_two(result: &CaResult, row: &[u64]) -> Option<[f64; 2]> {
    let total: u64 = row.iter().sum();
    if total == 0 {
        return None;
    }
    let mut p = [0.0; 2];
    for (a, &j) in result.col_index.iter().enumerate() {
        if row[j] == 0 {
            continue;
        }
        let w = row[j] as f64 / total as f64;
        for (k, g) in result.col_standard_coords[a].iter().take(2).enumerate() {
            p[k] += w * g;
        }
    }
    Some(p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceEllipse {
    pub product: String,
    /// Mean of the replicate cloud on axes 1-2.
    pub center: [f64; 2],
    pub covariance: [[f64; 2]; 2],
    /// Major then minor semi-axis length.
    pub semi_axes: [f64; 2],
    /// Angle of the major axis from axis 1, radians in (-π/2, π/2].
    pub angle: f64,
    pub level: f64,
    /// Replicates that contributed a point.
    pub n_replicates: usize,
    /// Replicates in which the product's resampled row was empty.
    pub skipped: usize,
}

impl ConfidenceEllipse {
    /// Fits the `level` normal-theory ellipse to a point cloud (sample covariance, n - 1).
    pub fn from_cloud(product: impl Into<String>, points: &[[f64; 2]], level: f64, skipped: usize) -> Result<Self, CaError> {
        if !(level > 0.0 && level < 1.0) {
            return Err(CaError::BadLevel(level));
        }
        let m = points.len() as f64;
        // shift by the first point so a constant cloud gives exact zeros
        let origin = points.first().copied().unwrap_or([0.0; 2]);
        let mut shift = [0.0; 2];
        for p in points {
            shift[0] += p[0] - origin[0];
            shift[1] += p[1] - origin[1];
        }
        if !points.is_empty() {
            shift[0] /= m;
            shift[1] /= m;
        }
        let center = [origin[0] + shift[0], origin[1] + shift[1]];
        let mut cov = [[0.0; 2]; 2];
        if points.len() > 1 {
            for p in points {
                let d = [p[0] - origin[0] - shift[0], p[1] - origin[1] - shift[1]];
                cov[0][0] += d[0] * d[0];
                cov[0][1] += d[0] * d[1];
                cov[1][1] += d[1] * d[1];
            }
            for v in cov.iter_mut().flatten() {
                *v /= m - 1.0;
            }
        }
        cov[1][0] = cov[0][1];
        let q = chi2_quantile(level, 2.0).map_err(|_| CaError::BadLevel(level))?;
        let (l1, l2, angle) = sym_eigen(cov);
        Ok(Self {
            product: product.into(),
            center,
            covariance: cov,
            semi_axes: [(l1.max(0.0) * q).sqrt(), (l2.max(0.0) * q).sqrt()],
            angle,
            level,
            n_replicates: points.len(),
            skipped,
        })
    }

    /// Whether `point` lies inside (or on) the ellipse.
    pub fn contains(&self, point: [f64; 2]) -> bool {
        let d = [point[0] - self.center[0], point[1] - self.center[1]];
        let (c, s) = (self.angle.cos(), self.angle.sin());
        let along = d[0] * c + d[1] * s;
        let across = -d[0] * s + d[1] * c;
        let term = |x: f64, a: f64| if a > 0.0 { (x / a).powi(2) } else if x.abs() <= 1e-12 { 0.0 } else { f64::INFINITY };
        term(along, self.semi_axes[0]) + term(across, self.semi_axes[1]) <= 1.0
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.semi_axes[0] * self.semi_axes[1]
    }
}

/// Eigenvalues (descending) and major-axis angle of a symmetric 2×2 matrix.
fn sym_eigen(m: [[f64; 2]; 2]) -> (f64, f64, f64) {
    let (a, b, d) = (m[0][0], m[0][1], m[1][1]);
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let mut angle = 0.5 * (2.0 * b).atan2(a - d);
    if angle <= -std::f64::consts::FRAC_PI_2 {
        angle += std::f64::consts::PI;
    }
    (mid + rad, mid - rad, angle)
}

/// How bootstrap tables are redrawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Resampling {
    /// One multinomial over all cells, grand total fixed.
    #[default]
    WholeTable,
    /// Independent multinomial per row, row totals fixed. Sensitivity option only.
    PerRow,
}

/// Multinomial bootstrap ellipses for every active product on axes 1-2.
///
/// Each replicate redraws the table, projects every resampled product row as a
/// supplementary point onto the axes of `result`, and each product's cloud is
/// summarized by [`ConfidenceEllipse::from_cloud`]. Replicate `r` uses substream
/// `seed.rng(r)`, so the output does not depend on the thread count.
pub fn bootstrap_ellipses(
    table: &ContingencyTable,
    result: &CaResult,
    n_replicates: usize,
    level: f64,
    seed: &SeedSpec,
    scheme: Resampling,
) -> Result<Vec<ConfidenceEllipse>, CaError> {
    if n_replicates < 10 {
        return Err(CaError::TooFewReplicates(n_replicates));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(CaError::BadLevel(level));
    }
    if table.n_cols() != result.n_table_cols || result.row_index.iter().any(|&i| i >= table.n_rows()) {
        return Err(CaError::TableMismatch);
    }
    let n = table.grand_total();
    let n_cols = table.n_cols();
    // Rows are drawn in label order and scattered back, so permuting the
    // table's rows permutes the ellipses without changing them.
    let mut canonical: Vec<usize> = (0..table.n_rows()).collect();
    canonical.sort_by(|&a, &b| table.row_labels()[a].cmp(&table.row_labels()[b]));
    let cell_probs: Vec<f64> =
        canonical.iter().flat_map(|&i| table.counts()[i].iter().map(|&c| c as f64 / n as f64)).collect();

    let clouds: Vec<Vec<Option<[f64; 2]>>> = (0..n_replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed.rng(r);
            let mut rows = vec![Vec::new(); table.n_rows()];
            match scheme {
                Resampling::WholeTable => {
                    let flat = multinomial_with(&mut rng, n, &cell_probs);
                    for (&i, chunk) in canonical.iter().zip(flat.chunks(n_cols)) {
                        rows[i] = chunk.to_vec();
                    }
                }
                Resampling::PerRow => {
                    for &i in &canonical {
                        let tot = table.row_totals()[i];
                        rows[i] = if tot == 0 {
                            vec![0; n_cols]
                        } else {
                            let probs: Vec<f64> = table.counts()[i].iter().map(|&c| c as f64 / tot as f64).collect();
                            multinomial_with(&mut rng, tot, &probs)
                        };
                    }
                }
            }
            result.row_index.iter().map(|&i| project_first_two(result, &rows[i])).collect()
        })
        .collect();

    result
        .row_labels
        .iter()
        .enumerate()
        .map(|(a, label)| {
            let points: Vec<[f64; 2]> = clouds.iter().filter_map(|rep| rep[a]).collect();
            let skipped = n_replicates - points.len();
            ConfidenceEllipse::from_cloud(label.clone(), &points, level, skipped)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::association::chi2_independence;

    fn table(counts: Vec<Vec<u64>>) -> ContingencyTable {
        ContingencyTable::from_counts(counts).unwrap()
    }

    #[test]
    fn hand_two_by_two() {
        let t = table(vec![vec![10, 20], vec![20, 10]]);
        let r = ca(&t).unwrap();
        assert_eq!(r.n_axes(), 1);
        assert!((r.inertias[0] - 1.0 / 9.0).abs() < 1e-12);
        assert!((r.row_coords[0][0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.row_coords[1][0] + 1.0 / 3.0).abs() < 1e-12);
        assert!((r.inertia_pct[0] - 100.0).abs() < 1e-12);
    }

    #[test]
    fn independence_table_has_no_axes() {
        let r = ca(&table(vec![vec![12, 18, 6], vec![8, 12, 4]])).unwrap();
        assert_eq!(r.n_axes(), 0);
        assert!(r.total_inertia < 1e-24);
        assert_eq!(project_supplementary_row(&r, &[1.0, 2.0, 3.0]).unwrap(), Vec::<f64>::new());
    }

    #[test]
    fn inertia_matches_chi_square() {
        let t = table(vec![vec![9, 3, 4, 1], vec![2, 8, 5, 6], vec![4, 4, 9, 2]]);
        let r = ca(&t).unwrap();
        let x2 = chi2_independence(&t).unwrap().statistic;
        assert!((r.total_inertia - x2 / t.grand_total() as f64).abs() < 1e-12);
        assert!((r.inertias.iter().sum::<f64>() - r.total_inertia).abs() < 1e-12);
        assert!((r.inertia_pct.iter().sum::<f64>() - 100.0).abs() < 1e-9);
        assert!(r.inertias.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn doubling_counts_changes_nothing() {
        let t = table(vec![vec![9, 3, 4, 1], vec![2, 8, 5, 6], vec![4, 4, 9, 2]]);
        let a = ca(&t).unwrap();
        let b = ca(&t.scaled(2)).unwrap();
        for (x, y) in a.row_coords.iter().flatten().zip(b.row_coords.iter().flatten()) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in a.inertia_pct.iter().zip(&b.inertia_pct) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_mass_rows_and_columns_are_excluded() {
        let t = table(vec![vec![5, 0, 3, 2], vec![0, 0, 0, 0], vec![1, 0, 6, 4], vec![2, 0, 2, 9]]);
        let r = ca(&t).unwrap();
        assert_eq!(r.excluded_rows, vec!["r2"]);
        assert_eq!(r.excluded_cols, vec!["c2"]);
        assert_eq!(r.row_coords.len(), 3);
        assert_eq!(r.col_coords.len(), 3);
        let p = project_supplementary_row(&r, &[1.0, 0.0, 6.0, 4.0]).unwrap();
        for (x, y) in p.iter().zip(&r.row_coords[1]) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!(matches!(ca(&table(vec![vec![1, 2], vec![0, 0]])), Err(CaError::DegenerateTable { rows: 1, cols: 2 })));
    }

    #[test]
    fn supplementary_projection() {
        let t = table(vec![vec![9, 3, 4, 1], vec![2, 8, 5, 6], vec![4, 4, 9, 2]]);
        let r = ca(&t).unwrap();
        for (i, row) in t.counts().iter().enumerate() {
            let f: Vec<f64> = row.iter().map(|&c| c as f64).collect();
            let p = project_supplementary_row(&r, &f).unwrap();
            for (x, y) in p.iter().zip(&r.row_coords[i]) {
                assert!((x - y).abs() < 1e-10);
            }
        }
        let centroid: Vec<f64> = t.col_totals().iter().map(|&c| c as f64).collect();
        assert!(project_supplementary_row(&r, &centroid).unwrap().iter().all(|x| x.abs() < 1e-12));
        assert_eq!(project_supplementary_row(&r, &[0.0; 4]), Err(CaError::ZeroRow));
        assert!(matches!(project_supplementary_row(&r, &[1.0; 3]), Err(CaError::LengthMismatch { .. })));
    }

    #[test]
    fn mixture_projects_onto_segment() {
        let t = table(vec![vec![9, 3, 4, 1], vec![2, 8, 5, 6], vec![4, 4, 9, 2]]);
        let r = ca(&t).unwrap();
        let prof = |i: usize| -> Vec<f64> {
            let tot = t.row_totals()[i] as f64;
            t.counts()[i].iter().map(|&c| c as f64 / tot).collect()
        };
        let (a, b) = (prof(0), prof(1));
        for &w in &[0.0, 0.17, 0.5, 0.93, 1.0] {
            let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| w * x + (1.0 - w) * y).collect();
            let p = project_supplementary_row(&r, &mix).unwrap();
            for k in 0..r.n_axes() {
                let expect = w * r.row_coords[0][k] + (1.0 - w) * r.row_coords[1][k];
                assert!((p[k] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ellipse_from_point_clouds() {
        let e = ConfidenceEllipse::from_cloud("p", &[[0.3, -0.1]; 20], 0.95, 0).unwrap();
        assert_eq!(e.semi_axes, [0.0, 0.0]);
        assert_eq!(e.area(), 0.0);
        assert!(e.contains([0.3, -0.1]));
        assert!(!e.contains([0.3, -0.09]));

        // four points with unit sample covariance: (±a, 0), (0, ±a), 2a²/3 = 1
        let a = 1.5f64.sqrt();
        let e = ConfidenceEllipse::from_cloud("p", &[[a, 0.0], [-a, 0.0], [0.0, a], [0.0, -a]], 0.95, 0).unwrap();
        let r = (-2.0 * 0.05f64.ln()).sqrt();
        assert!((e.semi_axes[0] - r).abs() < 1e-12 && (e.semi_axes[1] - r).abs() < 1e-12);
        assert!((e.semi_axes[0] - 5.991f64.sqrt()).abs() < 1e-3);
        assert!(e.contains([r * 0.999, 0.0]) && !e.contains([r * 1.001, 0.0]));
    }

    #[test]
    fn ellipse_orientation() {
        // cloud stretched along y = x
        let pts: Vec<[f64; 2]> = (-10..=10).map(|i| i as f64 / 10.0).flat_map(|t| [[t + 0.01, t], [t - 0.01, t]]).collect();
        let e = ConfidenceEllipse::from_cloud("p", &pts, 0.95, 0).unwrap();
        assert!((e.angle - std::f64::consts::FRAC_PI_4).abs() < 1e-3);
        assert!(e.semi_axes[0] > 10.0 * e.semi_axes[1]);
    }

    #[test]
    fn bootstrap_is_deterministic_and_centered() {
        let t = table(vec![vec![40, 12, 8, 20], vec![10, 30, 25, 5], vec![15, 15, 30, 30]]);
        let r = ca(&t).unwrap();
        let seed = SeedSpec::new(11, "ellipse");
        let a = bootstrap_ellipses(&t, &r, 200, 0.95, &seed, Resampling::WholeTable).unwrap();
        let b = bootstrap_ellipses(&t, &r, 200, 0.95, &seed, Resampling::WholeTable).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        for (e, f) in a.iter().zip(&r.row_coords) {
            assert_eq!(e.n_replicates, 200);
            assert!((e.center[0] - f[0]).abs() < 0.05 && (e.center[1] - f[1]).abs() < 0.05);
            assert!(e.semi_axes[0] > 0.0);
        }
        let c = bootstrap_ellipses(&t, &r, 200, 0.95, &seed, Resampling::PerRow).unwrap();
        assert_ne!(a, c);
        assert!(matches!(bootstrap_ellipses(&t, &r, 5, 0.95, &seed, Resampling::WholeTable), Err(CaError::TooFewReplicates(5))));
        assert!(matches!(bootstrap_ellipses(&t, &r, 50, 1.5, &seed, Resampling::WholeTable), Err(CaError::BadLevel(_))));
    }

    #[test]
    fn bootstrap_records_skips() {
        // row 1 has a single citation, so some whole-table replicates leave it empty
        let t = table(vec![vec![30, 10, 5], vec![1, 0, 0], vec![5, 12, 30]]);
        let r = ca(&t).unwrap();
        let e = bootstrap_ellipses(&t, &r, 300, 0.95, &SeedSpec::new(3, "e"), Resampling::WholeTable).unwrap();
        assert!(e[1].skipped > 0);
        assert_eq!(e[1].skipped + e[1].n_replicates, 300);
        assert_eq!(e[0].skipped, 0);
    }
}
