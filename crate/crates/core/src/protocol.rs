//! Tasting-session material: attribute orders, blind serving codes carrying a
//! hidden product digit, per-panelist serving orders and printable sheets.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::data::{write_record, AttributeList, Method};
use crate::numerics::SeedSpec;

pub const DEFAULT_ORDERS: usize = 10;
pub const DEFAULT_HIDDEN_DIGIT_POSITION: usize = 2;
pub const DEFAULT_CODE_LENGTH: usize = 3;
const MAX_ORDER_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("{0} product presentations, at most 10 fit a single identity digit")]
    TooManyProducts(usize),
    #[error("duplicate product label {0:?}")]
    DuplicateProductLabels(String),
    #[error("need at least one product")]
    NoProducts,
    #[error("need at least one panelist")]
    NoPanelists,
    #[error("need at least one attribute order")]
    NoOrders,
    #[error("code length must lie in 3..=6, got {0}")]
    BadCodeLength(usize),
    #[error("hidden digit position must lie in 1..={length}, got {position}")]
    BadPosition { position: usize, length: usize },
    #[error("{panelists} panelists exceed the {available} distinct codes per product; use longer codes")]
    CodesExhausted { panelists: usize, available: usize },
    #[error("code {0:?} is not a string of decimal digits of the plan's length")]
    BadCode(String),
    #[error("digit {0} is not assigned to any product")]
    UnknownDigit(u8),
    #[error("panelist {0} is not part of the plan")]
    UnknownPanelist(u32),
    #[error("method must be CATA or APT")]
    UnknownMethod,
}

/// How each panelist's serving order is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ServingDesign {
    /// Independent uniform permutation per panelist.
    #[default]
    Random,
    /// Rows of a Williams design (balanced for position and first-order carry-over).
    BalancedLatin,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanOptions {
    pub n_orders: usize,
    /// 1-based position of the identity digit.
    pub hidden_digit_position: usize,
    pub code_length: usize,
    pub serving: ServingDesign,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            n_orders: DEFAULT_ORDERS,
            hidden_digit_position: DEFAULT_HIDDEN_DIGIT_POSITION,
            code_length: DEFAULT_CODE_LENGTH,
            serving: ServingDesign::Random,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Presentation {
    /// Index into `QuestionnairePlan::products`.
    pub product: usize,
    pub code: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanelistSheet {
    pub panelist: u32,
    /// Index into `QuestionnairePlan::orders`; label `o{order + 1}`.
    pub order: usize,
    /// Presentations in serving order.
    pub serving: Vec<Presentation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionnairePlan {
    pub method: Method,
    pub attributes: AttributeList,
    pub products: Vec<String>,
    /// Attribute permutations (indices into `attributes`).
    pub orders: Vec<Vec<usize>>,
    pub hidden_digit_position: usize,
    pub code_length: usize,
    /// Identity digit of each product, aligned with `products`.
    pub product_digit: Vec<u8>,
    pub sheets: Vec<PanelistSheet>,
}

pub fn order_label(order: usize) -> String {
    format!("o{}", order + 1)
}

fn check_layout(code_length: usize, position: usize) -> Result<(), ProtocolError> {
    if !(3..=6).contains(&code_length) {
        return Err(ProtocolError::BadCodeLength(code_length));
    }
    if position == 0 || position > code_length {
        return Err(ProtocolError::BadPosition { position, length: code_length });
    }
    Ok(())
}

/// Every `length`-digit code whose digit at `position` (1-based) is `digit`.
fn code_pool(digit: u8, position: usize, length: usize) -> Vec<String> {
    let free = 10usize.pow(length as u32 - 1);
    (0..free)
        .map(|n| {
            let rest = format!("{n:0width$}", width = length - 1);
            let mut code = String::with_capacity(length);
            code.push_str(&rest[..position - 1]);
            code.push((b'0' + digit) as char);
            code.push_str(&rest[position - 1..]);
            code
        })
        .collect()
}

/// Williams design rows for `n` treatments (2n rows when n is odd).
fn williams_rows(n: usize) -> Vec<Vec<usize>> {
    let mut base = Vec::with_capacity(n);
    let (mut lo, mut hi) = (0usize, n);
    for i in 0..n {
        if i % 2 == 0 {
            base.push(lo);
            lo += 1;
        } else {
            hi -= 1;
            base.push(hi);
        }
    }
    let mut rows: Vec<Vec<usize>> = (0..n).map(|r| base.iter().map(|&b| (b + r) % n).collect()).collect();
    if n % 2 == 1 {
        let mirrored: Vec<Vec<usize>> = rows.iter().map(|r| r.iter().rev().copied().collect()).collect();
        rows.extend(mirrored);
    }
    rows
}

/// Builds the session plan for panelists `1..=panelists`.
///
/// Product `i` (0-based) carries identity digit `(i + 1) % 10`, so the fourth
/// product is "wine number 4".
pub fn generate_plan(
    method: Method,
    attributes: &AttributeList,
    products: &[String],
    panelists: usize,
    options: &PlanOptions,
    seed: &SeedSpec,
) -> Result<QuestionnairePlan, ProtocolError> {
    if method == Method::Unknown {
        return Err(ProtocolError::UnknownMethod);
    }
    if products.is_empty() {
        return Err(ProtocolError::NoProducts);
    }
    if products.len() > 10 {
        return Err(ProtocolError::TooManyProducts(products.len()));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = products.iter().find(|p| !seen.insert(p.as_str())) {
        return Err(ProtocolError::DuplicateProductLabels(dup.clone()));
    }
    if panelists == 0 {
        return Err(ProtocolError::NoPanelists);
    }
    if options.n_orders == 0 {
        return Err(ProtocolError::NoOrders);
    }
    check_layout(options.code_length, options.hidden_digit_position)?;
    let available = 10usize.pow(options.code_length as u32 - 1);
    if panelists > available {
        return Err(ProtocolError::CodesExhausted { panelists, available });
    }

    let mut rng = seed.rng(0);
    let n_attr = attributes.len();
    let mut orders: Vec<Vec<usize>> = Vec::with_capacity(options.n_orders);
    let mut seen_orders = HashSet::new();
    for _ in 0..options.n_orders {
        let mut perm: Vec<usize> = (0..n_attr).collect();
        for _ in 0..MAX_ORDER_ATTEMPTS {
            perm.shuffle(&mut rng);
            if !seen_orders.contains(&perm) {
                break;
            }
        }
        seen_orders.insert(perm.clone());
        orders.push(perm);
    }

    // balanced order labels: round-robin over a shuffled panelist list
    let mut shuffled: Vec<usize> = (0..panelists).collect();
    shuffled.shuffle(&mut rng);
    let mut order_of = vec![0usize; panelists];
    for (slot, &p) in shuffled.iter().enumerate() {
        order_of[p] = slot % options.n_orders;
    }

    let product_digit: Vec<u8> = (0..products.len()).map(|i| ((i + 1) % 10) as u8).collect();
    let codes: Vec<Vec<String>> = product_digit
        .iter()
        .map(|&d| {
            let mut pool = code_pool(d, options.hidden_digit_position, options.code_length);
            pool.shuffle(&mut rng);
            pool.truncate(panelists);
            pool
        })
        .collect();

    let n = products.len();
    let servings: Vec<Vec<usize>> = match options.serving {
        ServingDesign::Random => (0..panelists)
            .map(|_| {
                let mut s: Vec<usize> = (0..n).collect();
                s.shuffle(&mut rng);
                s
            })
            .collect(),
        ServingDesign::BalancedLatin => {
            let rows = williams_rows(n);
            let mut symbol: Vec<usize> = (0..n).collect();
            symbol.shuffle(&mut rng);
            let mut who: Vec<usize> = (0..panelists).collect();
            who.shuffle(&mut rng);
            let mut out = vec![Vec::new(); panelists];
            for (slot, &p) in who.iter().enumerate() {
                out[p] = rows[slot % rows.len()].iter().map(|&s| symbol[s]).collect();
            }
            out
        }
    };

    let sheets = (0..panelists)
        .map(|p| PanelistSheet {
            panelist: p as u32 + 1,
            order: order_of[p],
            serving: servings[p].iter().map(|&i| Presentation { product: i, code: codes[i][p].clone() }).collect(),
        })
        .collect();

    Ok(QuestionnairePlan {
        method,
        attributes: attributes.clone(),
        products: products.to_vec(),
        orders,
        hidden_digit_position: options.hidden_digit_position,
        code_length: options.code_length,
        product_digit,
        sheets,
    })
}

/// Product whose identity digit sits at `hidden_digit_position` (1-based) of `code`.
pub fn decode_code<'a>(
    code: &str,
    hidden_digit_position: usize,
    product_digit: &'a [(String, u8)],
) -> Result<&'a str, ProtocolError> {
    if !(3..=6).contains(&code.len()) || !code.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ProtocolError::BadCode(code.to_string()));
    }
    check_layout(code.len(), hidden_digit_position)?;
    let digit = code.as_bytes()[hidden_digit_position - 1] - b'0';
    product_digit
        .iter()
        .find(|(_, d)| *d == digit)
        .map(|(p, _)| p.as_str())
        .ok_or(ProtocolError::UnknownDigit(digit))
}

impl QuestionnairePlan {
    pub fn digit_key(&self) -> Vec<(String, u8)> {
        self.products.iter().cloned().zip(self.product_digit.iter().copied()).collect()
    }

    pub fn decode(&self, code: &str) -> Result<String, ProtocolError> {
        if code.len() != self.code_length {
            return Err(ProtocolError::BadCode(code.to_string()));
        }
        decode_code(code, self.hidden_digit_position, &self.digit_key()).map(str::to_string)
    }

    pub fn sheet(&self, panelist: u32) -> Result<&PanelistSheet, ProtocolError> {
        self.sheets.iter().find(|s| s.panelist == panelist).ok_or(ProtocolError::UnknownPanelist(panelist))
    }

    /// `NumPanel;Order;Position;Code`, one row per presentation.
    pub fn plan_csv(&self, separator: char) -> Vec<u8> {
        let mut out = Vec::new();
        write_record(&mut out, separator, ["NumPanel", "Order", "Position", "Code"]);
        for s in &self.sheets {
            for (pos, pr) in s.serving.iter().enumerate() {
                write_record(
                    &mut out,
                    separator,
                    [s.panelist.to_string(), order_label(s.order), (pos + 1).to_string(), pr.code.clone()],
                );
            }
        }
        out
    }

    /// Server key `Code;Product;NumPanel`, sorted by code.
    pub fn key_csv(&self, separator: char) -> Vec<u8> {
        let mut rows: Vec<(&str, &str, u32)> = self
            .sheets
            .iter()
            .flat_map(|s| s.serving.iter().map(move |pr| (pr.code.as_str(), self.products[pr.product].as_str(), s.panelist)))
            .collect();
        rows.sort();
        let mut out = Vec::new();
        write_record(&mut out, separator, ["Code", "Product", "NumPanel"]);
        for (code, product, panelist) in rows {
            write_record(&mut out, separator, [code.to_string(), product.to_string(), panelist.to_string()]);
        }
        out
    }

    /// `Order;Rank;Attribute`, one row per attribute of every order.
    pub fn orders_csv(&self, separator: char) -> Vec<u8> {
        let mut out = Vec::new();
        write_record(&mut out, separator, ["Order", "Rank", "Attribute"]);
        for (k, order) in self.orders.iter().enumerate() {
            for (rank, &a) in order.iter().enumerate() {
                write_record(&mut out, separator, [order_label(k), (rank + 1).to_string(), self.attributes.names()[a].clone()]);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SheetFormat {
    #[default]
    Text,
    Html,
}

pub const SCORE_LABEL: &str = "Score 1 to 9";
pub const APT_HEADER: &str = "more than \"P\"";
pub const CHECKBOX: &str = "[ ]";

fn instructions(method: Method, wines: usize) -> Vec<String> {
    match method {
        Method::Apt => vec![
            format!("{wines} coded wines are served one at a time, each next to the reference glass \"P\"."),
            "Smell and taste P first, then the coded wine.".into(),
            "Tick a word only when the coded wine shows it more than P does. If it is weaker or about".into(),
            "the same, leave the box empty.".into(),
            "On the bottom line, rate how much you like the coded wine (1 = not at all, 9 = very much).".into(),
        ],
        _ => vec![
            format!("{wines} coded wines are served one at a time, in the column order below."),
            "For each wine, tick every word that fits what you smell and taste; leave the rest empty.".into(),
            "On the bottom line, rate how much you like the wine (1 = not at all, 9 = very much).".into(),
        ],
    }
}

fn escape_html(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Printable sheet for one panelist: attribute rows in the assigned order, one
/// column per coded wine in serving order, a final score row.
pub fn render_questionnaire(plan: &QuestionnairePlan, panelist: u32, format: SheetFormat) -> Result<String, ProtocolError> {
    let sheet = plan.sheet(panelist)?;
    let title = format!("{} questionnaire", plan.method);
    let marker = format!("({})", order_label(sheet.order));
    let codes: Vec<&str> = sheet.serving.iter().map(|p| p.code.as_str()).collect();
    let rows: Vec<&str> = plan.orders[sheet.order].iter().map(|&a| plan.attributes.names()[a].as_str()).collect();
    let text = instructions(plan.method, codes.len());
    let mut out = String::new();
    match format {
        SheetFormat::Text => {
            let label_w = rows.iter().map(|r| r.chars().count()).chain([SCORE_LABEL.len(), "Attributes".len()]).max().unwrap_or(0);
            let col_w = match plan.method {
                Method::Apt => APT_HEADER.len(),
                _ => "Wine code: ".len() + plan.code_length,
            }
            .max("Wine code: ".len() + plan.code_length);
            let cell = |s: &str| format!(" {s:^col_w$} |");
            let _ = writeln!(out, "{marker}");
            let _ = writeln!(out, "{title}");
            let _ = writeln!(out, "Panelist: {panelist}");
            let _ = writeln!(out);
            for line in &text {
                let _ = writeln!(out, "{line}");
            }
            let _ = writeln!(out);
            let mut header = format!("{:<label_w$} |", "Attributes");
            for c in &codes {
                header.push_str(&cell(&format!("Wine code: {c}")));
            }
            let _ = writeln!(out, "{header}");
            if plan.method == Method::Apt {
                let mut sub = format!("{:<label_w$} |", "");
                for _ in &codes {
                    sub.push_str(&cell(APT_HEADER));
                }
                let _ = writeln!(out, "{sub}");
            }
            for r in &rows {
                let mut line = format!("{r:<label_w$} |");
                for _ in &codes {
                    line.push_str(&cell(CHECKBOX));
                }
                let _ = writeln!(out, "{line} {r}");
            }
            let mut score = format!("{SCORE_LABEL:<label_w$} |");
            for _ in &codes {
                score.push_str(&cell(""));
            }
            let _ = writeln!(out, "{score} {SCORE_LABEL}");
        }
        SheetFormat::Html => {
            let _ = writeln!(out, "<!DOCTYPE html>");
            let _ = writeln!(out, "<html><head><meta charset=\"utf-8\"><title>{}</title></head><body>", escape_html(&title));
            let _ = writeln!(out, "<div style=\"text-align:right\">{}</div>", escape_html(&marker));
            let _ = writeln!(out, "<h1>{}</h1>", escape_html(&title));
            let _ = writeln!(out, "<p>Panelist: {panelist}</p>");
            for line in &text {
                let _ = writeln!(out, "<p>{}</p>", escape_html(line));
            }
            let _ = writeln!(out, "<table border=\"1\">");
            let _ = write!(out, "<tr><th>Attributes</th>");
            for c in &codes {
                let _ = write!(out, "<th>Wine code: {}</th>", escape_html(c));
            }
            let _ = writeln!(out, "<th>Attributes</th></tr>");
            if plan.method == Method::Apt {
                let _ = write!(out, "<tr><th></th>");
                for _ in &codes {
                    let _ = write!(out, "<th>{}</th>", escape_html(APT_HEADER));
                }
                let _ = writeln!(out, "<th></th></tr>");
            }
            for r in &rows {
                let _ = write!(out, "<tr><td>{}</td>", escape_html(r));
                for _ in &codes {
                    let _ = write!(out, "<td><input type=\"checkbox\"/></td>");
                }
                let _ = writeln!(out, "<td>{}</td></tr>", escape_html(r));
            }
            let _ = write!(out, "<tr><td>{SCORE_LABEL}</td>");
            for _ in &codes {
                let _ = write!(out, "<td></td>");
            }
            let _ = writeln!(out, "<td>{SCORE_LABEL}</td></tr>");
            let _ = writeln!(out, "</table></body></html>");
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wines() -> Vec<String> {
        ["MUSCAT", "CHAS-SPUR", "CHAS-MP", "VIOGNIER1", "VIOGNIER2", "ITALIA"].map(String::from).to_vec()
    }

    fn plan(method: Method, panelists: usize, options: PlanOptions) -> QuestionnairePlan {
        generate_plan(method, &AttributeList::wine(), &wines(), panelists, &options, &SeedSpec::new(3, "plan")).unwrap()
    }

    #[test]
    fn paper_example_codes() {
        let key: Vec<(String, u8)> = (0..6).map(|i| (format!("w{}", i + 1), (i + 1) as u8)).collect();
        for code in ["145", "348", "043", "947"] {
            assert_eq!(decode_code(code, 2, &key).unwrap(), "w4");
        }
        assert_eq!(decode_code("999", 2, &key), Err(ProtocolError::UnknownDigit(9)));
        assert!(matches!(decode_code("14a", 2, &key), Err(ProtocolError::BadCode(_))));
        assert!(matches!(decode_code("14", 2, &key), Err(ProtocolError::BadCode(_))));
        assert!(matches!(decode_code("145", 4, &key), Err(ProtocolError::BadPosition { .. })));
    }

    #[test]
    fn order_balance_and_codes() {
        let p = plan(Method::Cata, 65, PlanOptions::default());
        assert_eq!(p.orders.len(), 10);
        let mut counts = [0usize; 10];
        for s in &p.sheets {
            counts[s.order] += 1;
        }
        assert!(counts.iter().all(|&c| c == 6 || c == 7), "{counts:?}");
        let mut seen = HashSet::new();
        for s in &p.sheets {
            let mut served: Vec<usize> = s.serving.iter().map(|x| x.product).collect();
            served.sort_unstable();
            assert_eq!(served, (0..6).collect::<Vec<_>>());
            for pr in &s.serving {
                assert!(seen.insert(pr.code.clone()));
                assert_eq!(pr.code.as_bytes()[1] - b'0', p.product_digit[pr.product]);
                assert_eq!(p.decode(&pr.code).unwrap(), p.products[pr.product]);
            }
        }
        for o in &p.orders {
            let mut sorted = o.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..17).collect::<Vec<_>>());
        }
        let distinct: HashSet<&Vec<usize>> = p.orders.iter().collect();
        assert_eq!(distinct.len(), 10);
    }

    #[test]
    fn single_order_shared() {
        let p = plan(Method::Cata, 20, PlanOptions { n_orders: 1, ..Default::default() });
        assert!(p.sheets.iter().all(|s| s.order == 0));
    }

    #[test]
    fn distinct_orders_on_tiny_lists() {
        let attrs = AttributeList::new(["a", "b", "c"]).unwrap();
        let p = generate_plan(Method::Cata, &attrs, &wines(), 5, &PlanOptions { n_orders: 6, ..Default::default() }, &SeedSpec::new(1, "o")).unwrap();
        let distinct: HashSet<&Vec<usize>> = p.orders.iter().collect();
        assert_eq!(distinct.len(), 6);
    }

    #[test]
    fn errors() {
        let s = SeedSpec::new(1, "p");
        let many: Vec<String> = (0..11).map(|i| format!("p{i}")).collect();
        let w = AttributeList::wine();
        let d = PlanOptions::default();
        assert_eq!(generate_plan(Method::Cata, &w, &many, 5, &d, &s), Err(ProtocolError::TooManyProducts(11)));
        let dup = vec!["a".to_string(), "a".to_string()];
        assert_eq!(generate_plan(Method::Cata, &w, &dup, 5, &d, &s), Err(ProtocolError::DuplicateProductLabels("a".into())));
        assert_eq!(
            generate_plan(Method::Cata, &w, &wines(), 101, &d, &s),
            Err(ProtocolError::CodesExhausted { panelists: 101, available: 100 })
        );
        assert!(generate_plan(Method::Cata, &w, &wines(), 101, &PlanOptions { code_length: 4, ..d.clone() }, &s).is_ok());
        assert_eq!(
            generate_plan(Method::Cata, &w, &wines(), 5, &PlanOptions { hidden_digit_position: 4, ..d.clone() }, &s),
            Err(ProtocolError::BadPosition { position: 4, length: 3 })
        );
        let p = plan(Method::Cata, 3, PlanOptions::default());
        assert_eq!(render_questionnaire(&p, 4, SheetFormat::Text), Err(ProtocolError::UnknownPanelist(4)));
    }

    #[test]
    fn render_cata_structure() {
        let p = plan(Method::Cata, 8, PlanOptions::default());
        let doc = render_questionnaire(&p, 3, SheetFormat::Text).unwrap();
        let sheet = p.sheet(3).unwrap();
        assert!(doc.starts_with(&format!("(o{})", sheet.order + 1)));
        assert_eq!(doc.matches(CHECKBOX).count(), 6 * 17);
        assert_eq!(doc.lines().filter(|l| l.starts_with(SCORE_LABEL)).count(), 1);
        // attribute rows follow the assigned order
        let rows: Vec<&str> = doc.lines().filter(|l| l.contains(CHECKBOX)).map(|l| l.split(" |").next().unwrap().trim()).collect();
        let expected: Vec<&str> = p.orders[sheet.order].iter().map(|&a| p.attributes.names()[a].as_str()).collect();
        assert_eq!(rows, expected);
        for pr in &sheet.serving {
            assert!(doc.contains(&pr.code));
        }
        assert_eq!(doc, render_questionnaire(&p, 3, SheetFormat::Text).unwrap());
        let html = render_questionnaire(&p, 3, SheetFormat::Html).unwrap();
        assert_eq!(html.matches("type=\"checkbox\"").count(), 6 * 17);
    }

    #[test]
    fn render_apt_headers() {
        let p = plan(Method::Apt, 4, PlanOptions::default());
        let doc = render_questionnaire(&p, 1, SheetFormat::Text).unwrap();
        assert_eq!(doc.matches(APT_HEADER).count(), 6);
        assert!(doc.contains("APT questionnaire"));
        let html = render_questionnaire(&p, 1, SheetFormat::Html).unwrap();
        assert_eq!(html.matches("more than &quot;P&quot;").count(), 6);
    }

    #[test]
    fn random_serving_first_position_uniform() {
        let n = 4000;
        let mut first = [0usize; 6];
        for r in 0..n {
            let p = generate_plan(Method::Cata, &AttributeList::wine(), &wines(), 1, &PlanOptions::default(), &SeedSpec::new(r as u64, "serve")).unwrap();
            first[p.sheets[0].serving[0].product] += 1;
        }
        let sd = (n as f64 * (1.0 / 6.0) * (5.0 / 6.0)).sqrt();
        for c in first {
            assert!((c as f64 - n as f64 / 6.0).abs() < 3.0 * sd, "{first:?}");
        }
    }

    #[test]
    fn williams_balance() {
        for n in 2..=10 {
            let rows = williams_rows(n);
            // each product once per position
            for pos in 0..n {
                let mut col: Vec<usize> = rows.iter().map(|r| r[pos]).collect();
                col.sort_unstable();
                let times = rows.len() / n;
                assert_eq!(col, (0..n).flat_map(|x| std::iter::repeat_n(x, times)).collect::<Vec<_>>());
            }
            // each ordered pair adjacent equally often
            let mut adj = vec![vec![0usize; n]; n];
            for r in &rows {
                for w in r.windows(2) {
                    adj[w[0]][w[1]] += 1;
                }
            }
            let target = adj[0][1];
            assert!((0..n).all(|a| (0..n).all(|b| a == b || adj[a][b] == target)), "n = {n}");
        }
        let p = plan(Method::Cata, 12, PlanOptions { serving: ServingDesign::BalancedLatin, ..Default::default() });
        for pos in 0..6 {
            let mut counts = [0usize; 6];
            for s in &p.sheets {
                counts[s.serving[pos].product] += 1;
            }
            assert!(counts.iter().all(|&c| c == 2));
        }
    }

    #[test]
    fn csv_exports() {
        let p = plan(Method::Cata, 3, PlanOptions::default());
        let plan_csv = String::from_utf8(p.plan_csv(';')).unwrap();
        assert_eq!(plan_csv.lines().count(), 1 + 18);
        assert!(plan_csv.starts_with("NumPanel;Order;Position;Code\n"));
        let key = String::from_utf8(p.key_csv(';')).unwrap();
        for line in key.lines().skip(1) {
            let f: Vec<&str> = line.split(';').collect();
            assert_eq!(p.decode(f[0]).unwrap(), f[1]);
        }
        assert_eq!(String::from_utf8(p.orders_csv(';')).unwrap().lines().count(), 1 + 170);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn plans_round_trip(seed in any::<u64>(), n_products in 1usize..=10, panelists in 1usize..120,
                            length in 3usize..=4, pos_raw in 0usize..4, orders in 1usize..12) {
            let pos = pos_raw % length + 1;
            prop_assume!(panelists <= 10usize.pow(length as u32 - 1));
            let products: Vec<String> = (0..n_products).map(|i| format!("P{i}")).collect();
            let opts = PlanOptions { n_orders: orders, hidden_digit_position: pos, code_length: length, serving: ServingDesign::Random };
            let p = generate_plan(Method::Cata, &AttributeList::wine(), &products, panelists, &opts, &SeedSpec::new(seed, "plan")).unwrap();
            let mut seen = HashSet::new();
            let mut counts = vec![0usize; orders];
            for s in &p.sheets {
                counts[s.order] += 1;
                for pr in &s.serving {
                    prop_assert!(seen.insert(pr.code.clone()));
                    prop_assert_eq!(pr.code.len(), length);
                    prop_assert_eq!(p.decode(&pr.code).unwrap(), p.products[pr.product].clone());
                }
            }
            prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
            let digits: HashSet<u8> = p.product_digit.iter().copied().collect();
            prop_assert_eq!(digits.len(), n_products);
        }
    }
}
