//! Analysis toolkit for check-all-that-apply (CATA) and adapted-pivot-test (APT)
//! sensory panels.
//!
//! The pipeline runs from a semicolon-separated response file
//! ([`data::parse_csv`]) to a product × attribute contingency table
//! ([`association`]), its chi-square test, a correspondence analysis with
//! multinomial bootstrap ellipses ([`correspondence`]), panel-size p-value
//! curves ([`power`]) and hedonic ANOVA / Tukey HSD ([`hedonic`]).
//! [`protocol`] builds the tasting-session material and [`simulate`]
//! generates synthetic panels from a perception model.

// `!(x >= 0.0)` also rejects NaN; index loops mirror the matrix formulas
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod numerics;
pub mod data;
pub mod association;
pub mod correspondence;
pub mod svd;
pub mod power;
pub mod simulate;
pub mod hedonic;
pub mod protocol;
