//! Product × attribute contingency tables and the Pearson chi-square test of independence.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::data::{write_record, ResponseDataset};
use crate::numerics::chi2_sf;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssociationError {
    #[error("panelist selection yields an empty table (grand total 0)")]
    EmptySelection,
    #[error("panelist {0} does not occur in the dataset")]
    UnknownPanelist(u32),
    #[error("degenerate table: {rows} non-zero rows and {cols} non-zero columns (need at least 2 of each)")]
    DegenerateTable { rows: usize, cols: usize },
    #[error("invalid table: {0}")]
    Shape(String),
}

/// Citation counts with cached margins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    counts: Vec<Vec<u64>>,
    row_totals: Vec<u64>,
    col_totals: Vec<u64>,
    grand_total: u64,
}

impl ContingencyTable {
    pub fn new(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        counts: Vec<Vec<u64>>,
    ) -> Result<Self, AssociationError> {
        if counts.len() != row_labels.len() {
            return Err(AssociationError::Shape(format!(
                "{} rows of counts for {} row labels",
                counts.len(),
                row_labels.len()
            )));
        }
        if let Some(bad) = counts.iter().position(|r| r.len() != col_labels.len()) {
            return Err(AssociationError::Shape(format!(
                "row {bad} has {} cells for {} columns",
                counts[bad].len(),
                col_labels.len()
            )));
        }
        let row_totals: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
        let mut col_totals = vec![0u64; col_labels.len()];
        for row in &counts {
            for (t, &c) in col_totals.iter_mut().zip(row) {
                *t += c;
            }
        }
        let grand_total = row_totals.iter().sum();
        if grand_total == 0 {
            return Err(AssociationError::EmptySelection);
        }
        Ok(Self { row_labels, col_labels, counts, row_totals, col_totals, grand_total })
    }

    /// Unlabelled table, rows `r1..` and columns `c1..`; handy for tests and simulations.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self, AssociationError> {
        let rows = counts.len();
        let cols = counts.first().map_or(0, Vec::len);
        Self::new(
            (1..=rows).map(|i| format!("r{i}")).collect(),
            (1..=cols).map(|j| format!("c{j}")).collect(),
            counts,
        )
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn row_totals(&self) -> &[u64] {
        &self.row_totals
    }

    pub fn col_totals(&self) -> &[u64] {
        &self.col_totals
    }

    pub fn grand_total(&self) -> u64 {
        self.grand_total
    }

    pub fn n_rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn zero_rows(&self) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| self.row_totals[i] == 0).collect()
    }

    pub fn zero_cols(&self) -> Vec<usize> {
        (0..self.n_cols()).filter(|&j| self.col_totals[j] == 0).collect()
    }

    pub fn transpose(&self) -> Self {
        let counts = (0..self.n_cols()).map(|j| self.counts.iter().map(|r| r[j]).collect()).collect();
        Self::new(self.col_labels.clone(), self.row_labels.clone(), counts).expect("transpose keeps the grand total")
    }

    /// Reorders rows and columns: new row `i` is old row `row_order[i]`.
    pub fn permute(&self, row_order: &[usize], col_order: &[usize]) -> Self {
        let counts = row_order.iter().map(|&i| col_order.iter().map(|&j| self.counts[i][j]).collect()).collect();
        Self::new(
            row_order.iter().map(|&i| self.row_labels[i].clone()).collect(),
            col_order.iter().map(|&j| self.col_labels[j].clone()).collect(),
            counts,
        )
        .expect("permutation keeps the grand total")
    }

    /// Multiplies every cell by `factor`.
    pub fn scaled(&self, factor: u64) -> Self {
        Self::new(
            self.row_labels.clone(),
            self.col_labels.clone(),
            self.counts.iter().map(|r| r.iter().map(|c| c * factor).collect()).collect(),
        )
        .expect("non-zero factor keeps a positive total")
    }

    /// CSV export: `Product;<attributes...>` header then one line of counts per product.
    pub fn to_csv(&self, separator: char) -> Vec<u8> {
        let mut out = Vec::new();
        write_record(&mut out, separator, std::iter::once("Product").chain(self.col_labels.iter().map(String::as_str)));
        for (label, row) in self.row_labels.iter().zip(&self.counts) {
            write_record(
                &mut out,
                separator,
                std::iter::once(label.clone()).chain(row.iter().map(u64::to_string)),
            );
        }
        out
    }
}

/// Counts citations per (product, attribute), optionally over a subset of panelists.
pub fn build_contingency(
    dataset: &ResponseDataset,
    panelist_subset: Option<&[u32]>,
) -> Result<ContingencyTable, AssociationError> {
    let selection: Option<HashSet<u32>> = match panelist_subset {
        Some(ids) => {
            let known: HashSet<u32> = dataset.rows().iter().map(|r| r.panelist).collect();
            if let Some(&bad) = ids.iter().find(|id| !known.contains(id)) {
                return Err(AssociationError::UnknownPanelist(bad));
            }
            Some(ids.iter().copied().collect())
        }
        None => None,
    };
    let products = dataset.products();
    let index: HashMap<&str, usize> = products.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
    let n_attr = dataset.attributes().len();
    let mut counts = vec![vec![0u64; n_attr]; products.len()];
    for row in dataset.rows() {
        if selection.as_ref().is_some_and(|s| !s.contains(&row.panelist)) {
            continue;
        }
        let target = &mut counts[index[row.product.as_str()]];
        for (c, &v) in target.iter_mut().zip(&row.citations) {
            *c += v as u64;
        }
    }
    ContingencyTable::new(products, dataset.attributes().names().to_vec(), counts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chi2Result {
    pub statistic: f64,
    pub df: u64,
    pub p_value: f64,
    /// `row_total * col_total / grand_total` for every cell of the input table.
    pub expected: Vec<Vec<f64>>,
    /// Share of non-zero-margin cells with expected count below 5.
    pub low_expected_fraction: f64,
    /// Rows / columns with zero margin; they contribute nothing and do not count toward df.
    pub zero_rows: Vec<usize>,
    pub zero_cols: Vec<usize>,
}

impl Chi2Result {
    pub fn has_zero_margins(&self) -> bool {
        !self.zero_rows.is_empty() || !self.zero_cols.is_empty()
    }
}

/// Pearson chi-square test of independence, no continuity correction.
pub fn chi2_independence(table: &ContingencyTable) -> Result<Chi2Result, AssociationError> {
    let zero_rows = table.zero_rows();
    let zero_cols = table.zero_cols();
    let rows = table.n_rows() - zero_rows.len();
    let cols = table.n_cols() - zero_cols.len();
    if rows < 2 || cols < 2 {
        return Err(AssociationError::DegenerateTable { rows, cols });
    }
    let n = table.grand_total() as f64;
    let mut statistic = 0.0;
    let mut low = 0usize;
    let mut expected = Vec::with_capacity(table.n_rows());
    for (i, row) in table.counts().iter().enumerate() {
        let rt = table.row_totals()[i] as f64;
        let mut erow = Vec::with_capacity(row.len());
        for (j, &obs) in row.iter().enumerate() {
            let e = rt * table.col_totals()[j] as f64 / n;
            if e > 0.0 {
                let d = obs as f64 - e;
                statistic += d * d / e;
                if e < 5.0 {
                    low += 1;
                }
            }
            erow.push(e);
        }
        expected.push(erow);
    }
    let df = ((rows - 1) * (cols - 1)) as u64;
    let p_value = chi2_sf(statistic, df).expect("df >= 1 and statistic >= 0");
    Ok(Chi2Result {
        statistic,
        df,
        p_value,
        expected,
        low_expected_fraction: low as f64 / (rows * cols) as f64,
        zero_rows,
        zero_cols,
    })
}
