//! Panel response records and the semicolon-separated interchange format.
//!
//! File layout: `Product;NumPanel;<attribute>...[;Score]`, one row per
//! (product presentation, panelist), citation cells `0`/`1`, optional integer
//! hedonic score in 1..=9. Input may use CRLF or LF; output is always LF.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

pub const PRODUCT_HEADER: &str = "Product";
pub const PANELIST_HEADER: &str = "NumPanel";
pub const DEFAULT_HEDONIC_COLUMN: &str = "Score";

/// The 17 wine attributes used on the CATA and APT questionnaires.
pub const WINE_ATTRIBUTES: [&str; 17] = [
    "Fruity", "Linger", "Dry", "Short", "Alcohol", "Light", "Woody", "Fresh", "Vegetal", "Sweet", "Bland", "Rough",
    "Bitter", "Acid", "Spicy", "Strong", "Floral",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DataError {
    #[error("input is not valid UTF-8 (line {line})")]
    Utf8 { line: u64 },
    #[error("input has no header row")]
    Empty,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("invalid attribute list: {0}")]
    InvalidAttributes(String),
    #[error("line {line}: expected {expected} fields, found {found}")]
    WrongFieldCount { line: u64, expected: usize, found: usize },
    #[error("line {line}, column {column:?}: cell {value:?} is not 0 or 1")]
    NonBinaryCell { line: u64, column: String, value: String },
    #[error("line {line}: NumPanel {value:?} is not a positive integer")]
    BadPanelist { line: u64, value: String },
    #[error("line {line}: empty product label")]
    EmptyProduct { line: u64 },
    #[error("line {line}: duplicate row for product {product:?}, panelist {panelist}")]
    DuplicatePair { line: u64, product: String, panelist: u32 },
    #[error("line {line}: hedonic score {value:?} is not an integer in 1..=9")]
    BadHedonic { line: u64, value: String },
    #[error("row {index}: {reason}")]
    InvalidRow { index: usize, reason: String },
    #[error("separator must be a single ASCII character other than '\"', got {0:?}")]
    BadSeparator(char),
    #[error("csv syntax error: {0}")]
    Syntax(String),
}

/// Ordered, unique attribute labels. The order fixes every matrix column order downstream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeList(Vec<String>);

impl AttributeList {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self, DataError> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() < 2 {
            return Err(DataError::InvalidAttributes(format!("need at least 2 attributes, got {}", names.len())));
        }
        let mut seen = HashSet::new();
        for n in &names {
            if n.is_empty() || n.trim() != n {
                return Err(DataError::InvalidAttributes(format!("attribute label {n:?} is empty or padded")));
            }
            if !seen.insert(n.as_str()) {
                return Err(DataError::InvalidAttributes(format!("duplicate attribute {n:?}")));
            }
        }
        Ok(Self(names))
    }

    pub fn wine() -> Self {
        Self(WINE_ATTRIBUTES.iter().map(|s| s.to_string()).collect())
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|n| n == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Cata,
    Apt,
    Unknown,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Cata => "CATA",
            Method::Apt => "APT",
            Method::Unknown => "UNKNOWN",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseRow {
    pub product: String,
    pub panelist: u32,
    /// One entry per attribute, 1 = box checked.
    pub citations: Vec<u8>,
    pub hedonic: Option<u8>,
}

/// Long-format panel responses with validated invariants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseDataset {
    attributes: AttributeList,
    rows: Vec<ResponseRow>,
    method: Method,
    hedonic_column: Option<String>,
}

impl ResponseDataset {
    /// Builds a dataset, checking row shape, binary cells, hedonic range and pair uniqueness.
    ///
    /// `hedonic_column` names the trailing score column; `None` means the
    /// dataset carries no hedonic data and every row must have `hedonic == None`.
    pub fn new(
        attributes: AttributeList,
        rows: Vec<ResponseRow>,
        method: Method,
        hedonic_column: Option<String>,
    ) -> Result<Self, DataError> {
        let mut pairs = HashSet::with_capacity(rows.len());
        for (index, row) in rows.iter().enumerate() {
            let bad = |reason: String| DataError::InvalidRow { index, reason };
            if row.product.is_empty() || row.product.trim() != row.product {
                return Err(bad(format!("product label {:?} is empty or padded", row.product)));
            }
            if row.panelist == 0 {
                return Err(bad("panelist ids start at 1".into()));
            }
            if row.citations.len() != attributes.len() {
                return Err(bad(format!(
                    "{} citations for {} attributes",
                    row.citations.len(),
                    attributes.len()
                )));
            }
            if row.citations.iter().any(|&c| c > 1) {
                return Err(bad("citation values must be 0 or 1".into()));
            }
            match (row.hedonic, &hedonic_column) {
                (Some(h), Some(_)) if !(1..=9).contains(&h) => {
                    return Err(bad(format!("hedonic score {h} outside 1..=9")));
                }
                (Some(_), None) => return Err(bad("hedonic score without a hedonic column".into())),
                _ => {}
            }
            if !pairs.insert((row.product.as_str(), row.panelist)) {
                return Err(bad(format!(
                    "duplicate (product, panelist) pair ({:?}, {})",
                    row.product, row.panelist
                )));
            }
        }
        Ok(Self { attributes, rows, method, hedonic_column })
    }

    pub fn attributes(&self) -> &AttributeList {
        &self.attributes
    }

    pub fn rows(&self) -> &[ResponseRow] {
        &self.rows
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn hedonic_column(&self) -> Option<&str> {
        self.hedonic_column.as_deref()
    }

    /// Products in order of first appearance.
    pub fn products(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.rows
            .iter()
            .filter(|r| seen.insert(r.product.as_str()))
            .map(|r| r.product.clone())
            .collect()
    }

    /// Distinct panelist ids, ascending.
    pub fn panelists(&self) -> Vec<u32> {
        self.rows.iter().map(|r| r.panelist).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvOptions {
    pub separator: char,
    /// Name of the trailing hedonic column; `None` treats every column as an attribute.
    pub hedonic_column: Option<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { separator: ';', hedonic_column: Some(DEFAULT_HEDONIC_COLUMN.to_string()) }
    }
}

fn separator_byte(sep: char) -> Result<u8, DataError> {
    if sep.is_ascii() && sep != '"' && sep != '\n' && sep != '\r' {
        Ok(sep as u8)
    } else {
        Err(DataError::BadSeparator(sep))
    }
}

fn line_of(record: &csv::ByteRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

/// Parses a response file.
pub fn parse_csv(bytes: &[u8], options: &CsvOptions) -> Result<ResponseDataset, DataError> {
    let sep = separator_byte(options.separator)?;
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(sep)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);

    let mut records = reader.byte_records();
    let header = loop {
        match records.next() {
            None => return Err(DataError::Empty),
            Some(r) => {
                let r = r.map_err(|e| DataError::Syntax(e.to_string()))?;
                if !is_blank(&r) {
                    break r;
                }
            }
        }
    };
    let header = decode_record(&header)?;
    if header.len() < 2 || header[0] != PRODUCT_HEADER || header[1] != PANELIST_HEADER {
        return Err(DataError::MalformedHeader(format!(
            "first two columns must be {PRODUCT_HEADER:?} and {PANELIST_HEADER:?}, found {:?}",
            header.iter().take(2).collect::<Vec<_>>()
        )));
    }
    let width = header.len();
    let mut data_cols = &header[2..];
    let hedonic_column = match (&options.hedonic_column, data_cols.last()) {
        (Some(name), Some(last)) if last == name => {
            data_cols = &data_cols[..data_cols.len() - 1];
            Some(name.clone())
        }
        _ => None,
    };
    let attributes = AttributeList::new(data_cols.iter().cloned()).map_err(|e| match e {
        DataError::InvalidAttributes(m) => DataError::MalformedHeader(m),
        other => other,
    })?;
    let n_attr = attributes.len();

    let mut rows = Vec::new();
    let mut pairs: HashMap<(String, u32), ()> = HashMap::new();
    for rec in records {
        let rec = rec.map_err(|e| DataError::Syntax(e.to_string()))?;
        if is_blank(&rec) {
            continue;
        }
        let line = line_of(&rec);
        let cells = decode_record(&rec)?;
        if cells.len() != width {
            return Err(DataError::WrongFieldCount { line, expected: width, found: cells.len() });
        }
        let product = cells[0].clone();
        if product.is_empty() {
            return Err(DataError::EmptyProduct { line });
        }
        let panelist = match cells[1].parse::<u32>() {
            Ok(p) if p > 0 && !cells[1].starts_with('+') => p,
            _ => return Err(DataError::BadPanelist { line, value: cells[1].clone() }),
        };
        let mut citations = Vec::with_capacity(n_attr);
        for (j, cell) in cells[2..2 + n_attr].iter().enumerate() {
            citations.push(match cell.as_str() {
                "0" => 0,
                "1" => 1,
                _ => {
                    return Err(DataError::NonBinaryCell {
                        line,
                        column: attributes.names()[j].clone(),
                        value: cell.clone(),
                    })
                }
            });
        }
        let hedonic = if hedonic_column.is_some() {
            let cell = &cells[width - 1];
            if cell.is_empty() {
                None
            } else {
                match cell.parse::<u8>() {
                    Ok(h) if (1..=9).contains(&h) && !cell.starts_with('+') => Some(h),
                    _ => return Err(DataError::BadHedonic { line, value: cell.clone() }),
                }
            }
        } else {
            None
        };
        if pairs.insert((product.clone(), panelist), ()).is_some() {
            return Err(DataError::DuplicatePair { line, product, panelist });
        }
        rows.push(ResponseRow { product, panelist, citations, hedonic });
    }
    ResponseDataset::new(attributes, rows, Method::Unknown, hedonic_column)
}

fn is_blank(rec: &csv::ByteRecord) -> bool {
    rec.iter().all(|f| f.is_empty())
}

fn decode_record(rec: &csv::ByteRecord) -> Result<Vec<String>, DataError> {
    rec.iter()
        .map(|f| {
            std::str::from_utf8(f)
                .map(str::to_string)
                .map_err(|_| DataError::Utf8 { line: line_of(rec) })
        })
        .collect()
}

/// Writes `fields` as one LF-terminated record, quoting only when needed.
pub(crate) fn write_record<I, S>(out: &mut Vec<u8>, sep: char, fields: I)
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    for (i, f) in fields.into_iter().enumerate() {
        if i > 0 {
            let mut buf = [0u8; 4];
            out.extend_from_slice(sep.encode_utf8(&mut buf).as_bytes());
        }
        let f = f.as_ref();
        let needs_quotes = f.contains(sep)
            || f.contains('"')
            || f.contains('\n')
            || f.contains('\r');
        if needs_quotes {
            out.push(b'"');
            out.extend_from_slice(f.replace('"', "\"\"").as_bytes());
            out.push(b'"');
        } else {
            out.extend_from_slice(f.as_bytes());
        }
    }
    out.push(b'\n');
}

/// Serializes a dataset; the inverse of [`parse_csv`] for the same separator.
pub fn emit_csv(dataset: &ResponseDataset, separator: char) -> Vec<u8> {
    let mut out = Vec::new();
    let mut header: Vec<&str> = vec![PRODUCT_HEADER, PANELIST_HEADER];
    header.extend(dataset.attributes.names().iter().map(String::as_str));
    if let Some(h) = &dataset.hedonic_column {
        header.push(h);
    }
    write_record(&mut out, separator, header);
    for row in &dataset.rows {
        let mut fields: Vec<String> = Vec::with_capacity(row.citations.len() + 3);
        fields.push(row.product.clone());
        fields.push(row.panelist.to_string());
        fields.extend(row.citations.iter().map(|c| c.to_string()));
        if dataset.hedonic_column.is_some() {
            fields.push(row.hedonic.map(|h| h.to_string()).unwrap_or_default());
        }
        write_record(&mut out, separator, &fields);
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    /// (product, panelist) pairs absent from an otherwise crossed design.
    pub missing_pairs: Vec<(String, u32)>,
    /// Attributes never cited: zero column mass in the contingency table.
    pub zero_mass_attributes: Vec<String>,
    /// Products with no citation at all.
    pub zero_citation_products: Vec<String>,
    /// Ids in 1..=max(NumPanel) that never occur.
    pub missing_panelist_ids: Vec<u32>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.missing_pairs.is_empty()
            && self.zero_mass_attributes.is_empty()
            && self.zero_citation_products.is_empty()
            && self.missing_panelist_ids.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return writeln!(f, "no warnings");
        }
        for (p, id) in &self.missing_pairs {
            writeln!(f, "warning: missing response for product {p:?}, panelist {id}")?;
        }
        for a in &self.zero_mass_attributes {
            writeln!(f, "warning: attribute {a:?} is never cited (zero column mass)")?;
        }
        for p in &self.zero_citation_products {
            writeln!(f, "warning: product {p:?} has zero total citations (zero row mass)")?;
        }
        if !self.missing_panelist_ids.is_empty() {
            writeln!(f, "warning: panelist ids not contiguous, missing {:?}", self.missing_panelist_ids)?;
        }
        Ok(())
    }
}

pub fn validate(dataset: &ResponseDataset) -> ValidationReport {
    let products = dataset.products();
    let panelists = dataset.panelists();
    let present: HashSet<(&str, u32)> = dataset.rows.iter().map(|r| (r.product.as_str(), r.panelist)).collect();
    let mut report = ValidationReport::default();
    for p in &products {
        for &id in &panelists {
            if !present.contains(&(p.as_str(), id)) {
                report.missing_pairs.push((p.clone(), id));
            }
        }
    }
    let mut col_mass = vec![0u64; dataset.attributes.len()];
    let mut row_mass: HashMap<&str, u64> = HashMap::new();
    for row in &dataset.rows {
        let s: u64 = row.citations.iter().map(|&c| c as u64).sum();
        *row_mass.entry(row.product.as_str()).or_default() += s;
        for (m, &c) in col_mass.iter_mut().zip(&row.citations) {
            *m += c as u64;
        }
    }
    report.zero_mass_attributes = dataset
        .attributes
        .names()
        .iter()
        .zip(&col_mass)
        .filter(|(_, &m)| m == 0)
        .map(|(n, _)| n.clone())
        .collect();
    report.zero_citation_products =
        products.iter().filter(|p| row_mass.get(p.as_str()).copied().unwrap_or(0) == 0).cloned().collect();
    if let Some(&max) = panelists.last() {
        let have: HashSet<u32> = panelists.iter().copied().collect();
        report.missing_panelist_ids = (1..=max).filter(|i| !have.contains(i)).collect();
    }
    report
}
