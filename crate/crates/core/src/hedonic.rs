//! One-way ANOVA of hedonic scores by product, Tukey HSD pairwise comparisons
//! and compact letter display.

use std::collections::HashMap;

use thiserror::Error;

use crate::data::ResponseDataset;
use crate::numerics::{f_sf, studentized_range_sf};

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HedonicError {
    #[error("dataset has no hedonic column")]
    NoHedonicColumn,
    #[error("group {group:?} has {n} hedonic score(s), need at least 2")]
    MissingScores { group: String, n: usize },
    #[error("need at least 2 groups, found {0}")]
    SingleGroup(usize),
    #[error("within-group variance is zero while group means differ")]
    ZeroWithinVariance,
    #[error("alpha must lie in (0, 1), got {0}")]
    BadAlpha(f64),
    #[error("{0} groups exceed the {1} available letters")]
    TooManyGroups(usize, usize),
    #[error("non-finite score in group {0:?}")]
    NonFinite(String),
}

/// Scores grouped by label, groups in first-appearance order.
#[derive(Debug, Clone, PartialEq)]
pub struct HedonicGroups {
    pub labels: Vec<String>,
    pub scores: Vec<Vec<f64>>,
}

impl HedonicGroups {
    pub fn new(labels: Vec<String>, scores: Vec<Vec<f64>>) -> Result<Self, HedonicError> {
        if labels.len() < 2 || labels.len() != scores.len() {
            return Err(HedonicError::SingleGroup(labels.len().min(scores.len())));
        }
        for (l, s) in labels.iter().zip(&scores) {
            if s.len() < 2 {
                return Err(HedonicError::MissingScores { group: l.clone(), n: s.len() });
            }
            if s.iter().any(|x| !x.is_finite()) {
                return Err(HedonicError::NonFinite(l.clone()));
            }
        }
        Ok(Self { labels, scores })
    }

    /// Hedonic scores of each product; rows without a score are skipped.
    pub fn from_dataset(dataset: &ResponseDataset) -> Result<Self, HedonicError> {
        if dataset.hedonic_column().is_none() {
            return Err(HedonicError::NoHedonicColumn);
        }
        let labels = dataset.products();
        let index: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
        let mut scores = vec![Vec::new(); labels.len()];
        for row in dataset.rows() {
            if let Some(h) = row.hedonic {
                scores[index[row.product.as_str()]].push(h as f64);
            }
        }
        Self::new(labels, scores)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { labels: self.labels.clone(), scores: self.scores.iter().map(|g| g.iter().map(|&x| f(x)).collect()).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaResult {
    pub group_labels: Vec<String>,
    pub group_means: Vec<f64>,
    pub group_ns: Vec<usize>,
    /// Sample standard deviations (n - 1).
    pub group_sds: Vec<f64>,
    pub ss_between: f64,
    pub ss_within: f64,
    pub ss_total: f64,
    pub df_between: u64,
    pub df_within: u64,
    /// Infinite when the within variance is zero and the means differ.
    pub f_statistic: f64,
    pub p_value: f64,
    /// Set when `ss_within == 0`; p is then 0 (means differ) or 1 (all scores equal).
    pub zero_within_variance: bool,
}

impl AnovaResult {
    pub fn ms_within(&self) -> f64 {
        self.ss_within / self.df_within as f64
    }

    pub fn standard_errors(&self) -> Vec<f64> {
        self.group_sds.iter().zip(&self.group_ns).map(|(s, &n)| s / (n as f64).sqrt()).collect()
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn anova(groups: &HedonicGroups) -> Result<AnovaResult, HedonicError> {
    let groups = HedonicGroups::new(groups.labels.clone(), groups.scores.clone())?;
    let all: Vec<f64> = groups.scores.iter().flatten().copied().collect();
    let grand = mean(&all);
    let means: Vec<f64> = groups.scores.iter().map(|g| mean(g)).collect();
    let ns: Vec<usize> = groups.scores.iter().map(Vec::len).collect();
    let ss_within_g: Vec<f64> =
        groups.scores.iter().zip(&means).map(|(g, m)| g.iter().map(|x| (x - m) * (x - m)).sum()).collect();
    let ss_within: f64 = ss_within_g.iter().sum();
    let ss_between: f64 = means.iter().zip(&ns).map(|(m, &n)| n as f64 * (m - grand) * (m - grand)).sum();
    let ss_total: f64 = all.iter().map(|x| (x - grand) * (x - grand)).sum();
    let sds = ss_within_g.iter().zip(&ns).map(|(ss, &n)| (ss / (n - 1) as f64).sqrt()).collect();
    let df_between = (groups.labels.len() - 1) as u64;
    let df_within = (all.len() - groups.labels.len()) as u64;
    let zero_within_variance = ss_within == 0.0;
    let (f_statistic, p_value) = if zero_within_variance {
        if ss_between > 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            (0.0, 1.0)
        }
    } else {
        let f = (ss_between / df_between as f64) / (ss_within / df_within as f64);
        (f, f_sf(f, df_between, df_within).expect("valid F arguments"))
    };
    Ok(AnovaResult {
        group_labels: groups.labels,
        group_means: means,
        group_ns: ns,
        group_sds: sds,
        ss_between,
        ss_within,
        ss_total,
        df_between,
        df_within,
        f_statistic,
        p_value,
        zero_within_variance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TukeyPair {
    pub group_a: String,
    pub group_b: String,
    /// mean_a - mean_b.
    pub mean_diff: f64,
    pub q_statistic: f64,
    pub p_adjusted: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TukeyResult {
    /// Pairs (a, b) with a before b in group order.
    pub pairs: Vec<TukeyPair>,
    /// Compact letters per group, aligned with the ANOVA group order.
    pub letters: Vec<String>,
    pub alpha: f64,
}

impl TukeyResult {
    pub fn letters_of(&self, anova: &AnovaResult, group: &str) -> Option<&str> {
        anova.group_labels.iter().position(|g| g == group).map(|i| self.letters[i].as_str())
    }
}

const LETTERS: &str = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";

/// Tukey-Kramer all-pairs comparisons from an ANOVA decomposition.
pub fn tukey_hsd(anova: &AnovaResult, alpha: f64) -> Result<TukeyResult, HedonicError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(HedonicError::BadAlpha(alpha));
    }
    let k = anova.group_labels.len();
    if anova.zero_within_variance && anova.ss_between > 0.0 {
        return Err(HedonicError::ZeroWithinVariance);
    }
    let msw = anova.ms_within();
    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    let mut significant = vec![vec![false; k]; k];
    for a in 0..k {
        for b in a + 1..k {
            let diff = anova.group_means[a] - anova.group_means[b];
            let (q, p) = if anova.zero_within_variance {
                (0.0, 1.0)
            } else {
                let se = (msw / 2.0 * (1.0 / anova.group_ns[a] as f64 + 1.0 / anova.group_ns[b] as f64)).sqrt();
                let q = diff.abs() / se;
                (q, studentized_range_sf(q, k as u32, anova.df_within as f64).expect("valid range arguments"))
            };
            let sig = p < alpha;
            significant[a][b] = sig;
            significant[b][a] = sig;
            pairs.push(TukeyPair {
                group_a: anova.group_labels[a].clone(),
                group_b: anova.group_labels[b].clone(),
                mean_diff: diff,
                q_statistic: q,
                p_adjusted: p,
                significant: sig,
            });
        }
    }
    let letters = compact_letters(&anova.group_means, &significant)?;
    Ok(TukeyResult { pairs, letters, alpha })
}

/// Insert-and-absorb letter display. Groups are visited in descending-mean
/// order (ties by index), so the best group always carries "a".
pub fn compact_letters(means: &[f64], significant: &[Vec<bool>]) -> Result<Vec<String>, HedonicError> {
    let k = means.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
    let rank: Vec<usize> = {
        let mut r = vec![0; k];
        for (pos, &g) in order.iter().enumerate() {
            r[g] = pos;
        }
        r
    };
    // each column is a sorted set of group indices sharing a letter
    let mut columns: Vec<Vec<usize>> = vec![order.clone()];
    for (x, &a) in order.iter().enumerate() {
        for &b in &order[x + 1..] {
            if !significant[a][b] {
                continue;
            }
            let mut next = Vec::with_capacity(columns.len() + 1);
            for col in columns {
                if col.contains(&a) && col.contains(&b) {
                    next.push(col.iter().copied().filter(|&g| g != a).collect::<Vec<_>>());
                    next.push(col.iter().copied().filter(|&g| g != b).collect::<Vec<_>>());
                } else {
                    next.push(col);
                }
            }
            columns = absorb(next);
        }
    }
    let letters: Vec<char> = LETTERS.chars().collect();
    if columns.len() > letters.len() {
        return Err(HedonicError::TooManyGroups(columns.len(), letters.len()));
    }
    // letter order follows the best-ranked member of each column
    columns.sort_by_key(|col| {
        let mut ranks: Vec<usize> = col.iter().map(|&g| rank[g]).collect();
        ranks.sort_unstable();
        ranks
    });
    let mut out = vec![String::new(); k];
    for (col, &ch) in columns.iter().zip(&letters) {
        for &g in col {
            out[g].push(ch);
        }
    }
    // keep each group's letters alphabetical
    for s in &mut out {
        let mut c: Vec<char> = s.chars().collect();
        c.sort_by_key(|ch| LETTERS.find(*ch));
        *s = c.into_iter().collect();
    }
    Ok(out)
}

fn absorb(columns: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    let mut kept: Vec<Vec<usize>> = Vec::with_capacity(columns.len());
    for (i, col) in columns.iter().enumerate() {
        let redundant = columns.iter().enumerate().any(|(j, other)| {
            j != i && col.iter().all(|g| other.contains(g)) && (other.len() > col.len() || j < i)
        });
        if !redundant && !col.is_empty() {
            kept.push(col.clone());
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::t_two_sided_sf;
    use proptest::prelude::*;

    fn groups(g: &[&[f64]]) -> HedonicGroups {
        HedonicGroups::new((0..g.len()).map(|i| format!("g{i}")).collect(), g.iter().map(|s| s.to_vec()).collect()).unwrap()
    }

    #[test]
    fn hand_fixture() {
        let a = anova(&groups(&[&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0], &[3.0, 4.0, 5.0]])).unwrap();
        assert!((a.ss_between - 6.0).abs() < 1e-12);
        assert!((a.ss_within - 6.0).abs() < 1e-12);
        assert_eq!(a.f_statistic, 3.0);
        assert_eq!((a.df_between, a.df_within), (2, 6));
        // F(2, 6) survival has the closed form (1 + 2x/6)^(-3)
        assert!((a.p_value - 0.125).abs() < 1e-12);
        assert!(!a.zero_within_variance);
    }

    #[test]
    fn zero_within_variance() {
        let same = anova(&groups(&[&[4.0, 4.0], &[4.0, 4.0, 4.0]])).unwrap();
        assert!(same.zero_within_variance);
        assert_eq!(same.p_value, 1.0);
        let t = tukey_hsd(&same, 0.05).unwrap();
        assert_eq!(t.letters, vec!["a", "a"]);
        assert_eq!(t.pairs[0].p_adjusted, 1.0);
        let differ = anova(&groups(&[&[4.0, 4.0], &[5.0, 5.0]])).unwrap();
        assert_eq!(differ.p_value, 0.0);
        assert_eq!(tukey_hsd(&differ, 0.05), Err(HedonicError::ZeroWithinVariance));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            HedonicGroups::new(vec!["a".into(), "b".into()], vec![vec![1.0], vec![1.0, 2.0]]),
            Err(HedonicError::MissingScores { n: 1, .. })
        ));
        assert_eq!(HedonicGroups::new(vec!["a".into()], vec![vec![1.0, 2.0]]), Err(HedonicError::SingleGroup(1)));
        let a = anova(&groups(&[&[1.0, 2.0], &[2.0, 3.0]])).unwrap();
        assert_eq!(tukey_hsd(&a, 0.0), Err(HedonicError::BadAlpha(0.0)));
    }

    #[test]
    fn two_groups_match_pooled_t() {
        let x = [5.0, 6.0, 7.0, 5.0, 8.0, 6.0];
        let y = [4.0, 5.0, 4.0, 6.0, 3.0];
        let a = anova(&groups(&[&x, &y])).unwrap();
        let t = tukey_hsd(&a, 0.05).unwrap();
        let (mx, my) = (mean(&x), mean(&y));
        let sp2 = (x.iter().map(|v| (v - mx).powi(2)).sum::<f64>() + y.iter().map(|v| (v - my).powi(2)).sum::<f64>()) / 9.0;
        let tstat = (mx - my) / (sp2 * (1.0 / 6.0 + 1.0 / 5.0)).sqrt();
        let p = t_two_sided_sf(tstat, 9.0).unwrap();
        assert!((t.pairs[0].p_adjusted - p).abs() < 1e-6, "{} vs {p}", t.pairs[0].p_adjusted);
        // identical groups
        let a = anova(&groups(&[&x, &x])).unwrap();
        let t = tukey_hsd(&a, 0.05).unwrap();
        assert_eq!(t.pairs[0].q_statistic, 0.0);
        assert!((t.pairs[0].p_adjusted - 1.0).abs() < 1e-9);
        assert_eq!(t.letters, vec!["a", "a"]);
    }

    #[test]
    fn letters_examples() {
        // 0 > 1 ~ 2; 0 differs from both
        let sig = vec![vec![false, true, true], vec![true, false, false], vec![true, false, false]];
        assert_eq!(compact_letters(&[6.4, 5.5, 5.1], &sig).unwrap(), vec!["a", "b", "b"]);
        // chain 0 ~ 1 ~ 2 with 0 != 2
        let sig = vec![vec![false, false, true], vec![false, false, false], vec![true, false, false]];
        assert_eq!(compact_letters(&[3.0, 2.0, 1.0], &sig).unwrap(), vec!["a", "ab", "b"]);
        // order follows the means, not the input order
        let sig = vec![vec![false, true], vec![true, false]];
        assert_eq!(compact_letters(&[1.0, 2.0], &sig).unwrap(), vec!["b", "a"]);
    }

    #[test]
    fn permutation_oracle_agrees() {
        use rand::seq::SliceRandom;
        let g = [
            vec![5.1, 6.3, 5.8, 7.0, 6.1, 5.5, 6.8, 6.0],
            vec![5.0, 5.6, 4.9, 6.2, 5.3, 5.8, 4.7, 5.4],
            vec![4.2, 5.1, 4.6, 3.9, 5.0, 4.4, 4.8, 5.2],
        ];
        let hg = groups(&[&g[0], &g[1], &g[2]]);
        let t = tukey_hsd(&anova(&hg).unwrap(), 0.05).unwrap();
        let q_of = |s: &[Vec<f64>]| -> Vec<f64> {
            let a = anova(&HedonicGroups { labels: hg.labels.clone(), scores: s.to_vec() }).unwrap();
            let se = (a.ms_within() / 8.0).sqrt();
            vec![
                (a.group_means[0] - a.group_means[1]).abs() / se,
                (a.group_means[0] - a.group_means[2]).abs() / se,
                (a.group_means[1] - a.group_means[2]).abs() / se,
            ]
        };
        let observed = q_of(&g);
        let mut pool: Vec<f64> = g.iter().flatten().copied().collect();
        let mut rng = crate::numerics::SeedSpec::new(1, "perm").rng(0);
        let shuffles = 20_000;
        let mut exceed = [0usize; 3];
        for _ in 0..shuffles {
            pool.shuffle(&mut rng);
            let s: Vec<Vec<f64>> = pool.chunks(8).map(<[f64]>::to_vec).collect();
            let max = q_of(&s).into_iter().fold(0.0, f64::max);
            for (e, q) in exceed.iter_mut().zip(&observed) {
                *e += (max >= *q) as usize;
            }
        }
        for (pair, e) in t.pairs.iter().zip(exceed) {
            let perm_p = e as f64 / shuffles as f64;
            assert_eq!(pair.significant, perm_p < 0.05, "tukey {} perm {perm_p}", pair.p_adjusted);
            assert!((pair.p_adjusted - perm_p).abs() < 0.03, "tukey {} perm {perm_p}", pair.p_adjusted);
        }
    }

    fn letters_consistent(t: &TukeyResult, k: usize) -> bool {
        let share = |a: usize, b: usize| t.letters[a].chars().any(|c| t.letters[b].contains(c));
        let mut idx = 0;
        for a in 0..k {
            for b in a + 1..k {
                if share(a, b) == t.pairs[idx].significant {
                    return false;
                }
                idx += 1;
            }
        }
        t.letters.iter().all(|l| !l.is_empty())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn invariants(
            data in prop::collection::vec(prop::collection::vec(1u8..=9, 2..8), 2..7),
            shift in -20.0f64..20.0, scale in 0.1f64..10.0,
        ) {
            let g = HedonicGroups::new(
                (0..data.len()).map(|i| format!("p{i}")).collect(),
                data.iter().map(|s| s.iter().map(|&x| x as f64).collect()).collect(),
            ).unwrap();
            let a = anova(&g).unwrap();
            prop_assert!((a.ss_total - a.ss_between - a.ss_within).abs() < 1e-9 * (1.0 + a.ss_total));
            prop_assume!(!a.zero_within_variance);
            let t = tukey_hsd(&a, 0.05).unwrap();
            prop_assert!(letters_consistent(&t, data.len()));
            for p in &t.pairs {
                prop_assert!((0.0..=1.0).contains(&p.p_adjusted));
            }
            let moved = anova(&g.map(|x| x * scale + shift)).unwrap();
            prop_assert!((moved.f_statistic - a.f_statistic).abs() < 1e-7 * (1.0 + a.f_statistic));
            let t2 = tukey_hsd(&moved, 0.05).unwrap();
            for (x, y) in t.pairs.iter().zip(&t2.pairs) {
                prop_assert!((x.q_statistic - y.q_statistic).abs() < 1e-7 * (1.0 + x.q_statistic));
                prop_assert!((x.p_adjusted - y.p_adjusted).abs() < 1e-6);
            }
            // relabelling by reversing the group order
            let rev = HedonicGroups { labels: g.labels.iter().rev().cloned().collect(), scores: g.scores.iter().rev().cloned().collect() };
            let r = anova(&rev).unwrap();
            prop_assert!((r.f_statistic - a.f_statistic).abs() < 1e-9 * (1.0 + a.f_statistic));
            prop_assert!((r.p_value - a.p_value).abs() < 1e-12);
        }

        #[test]
        fn letters_consistent_random_matrix(k in 2usize..9, bits in prop::collection::vec(any::<bool>(), 36), means in prop::collection::vec(0.0f64..10.0, 9)) {
            let mut sig = vec![vec![false; k]; k];
            let mut i = 0;
            for a in 0..k { for b in a + 1..k { sig[a][b] = bits[i]; sig[b][a] = bits[i]; i += 1; } }
            let l = compact_letters(&means[..k], &sig).unwrap();
            for a in 0..k { for b in a + 1..k {
                let share = l[a].chars().any(|c| l[b].contains(c));
                prop_assert_eq!(share, !sig[a][b]);
            } }
        }
    }
}
