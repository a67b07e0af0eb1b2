//! Surprise ratio, its variance across iterations, BIC model selection and
//! report ordering.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::str::FromStr;

use crate::inference::InferenceResult;
use crate::predicate::Predicate;

pub const DEFAULT_VARIANCE_WINDOW: usize = 5;
const LIKELIHOOD_CLAMP: f64 = 1e-12;

/// An inferred conditional invariant `P(outcome | givens)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Invariant {
    pub id: String,
    pub outcome: Predicate,
    pub givens: Vec<Predicate>,
    pub result: InferenceResult,
    pub surprise: Option<f64>,
    /// `(iteration, surprise)` pairs, oldest first.
    pub surprise_history: Vec<(u64, f64)>,
    pub bic: f64,
    pub k: usize,
}

impl Invariant {
    pub fn new(outcome: Predicate, givens: Vec<Predicate>, result: InferenceResult) -> Self {
        let id = invariant_id(&outcome, &givens);
        let k = givens.len() + 1;
        Invariant {
            id,
            surprise: surprise(result.posterior, result.prior),
            bic: bic(result.counts.freq_g, k, result.posterior, result.counts.freq_o_and_g),
            outcome,
            givens,
            result,
            surprise_history: Vec::new(),
            k,
        }
    }

    pub fn surprise_variance(&self, window: usize) -> f64 {
        let values: Vec<f64> = self.surprise_history.iter().map(|&(_, s)| s).collect();
        surprise_variance(&values, window)
    }
}

/// `P(O | G1, G2, ...)` rendered from predicate ids.
pub fn invariant_id(outcome: &Predicate, givens: &[Predicate]) -> String {
    let gs: Vec<&str> = givens.iter().map(|g| g.id.as_str()).collect();
    format!("P({} | {})", outcome.id, gs.join(", "))
}

/// `posterior / prior`; `None` when the prior is not positive.
pub fn surprise(posterior: f64, prior: f64) -> Option<f64> {
    (prior > 0.0).then(|| posterior / prior)
}

/// Sample variance of the last `window` values; zero with fewer than two.
pub fn surprise_variance(history: &[f64], window: usize) -> f64 {
    let tail = &history[history.len().saturating_sub(window)..];
    if tail.len() < 2 {
        return 0.0;
    }
    let m = tail.len() as f64;
    let mean = tail.iter().sum::<f64>() / m;
    tail.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0)
}

/// `ln(n)·k − 2·ln L̂` for a Bernoulli outcome with `successes` of `n`
/// at rate `posterior`.
pub fn bic(n: u64, k: usize, posterior: f64, successes: u64) -> f64 {
    let n = n.max(1);
    let p = posterior.clamp(LIKELIHOOD_CLAMP, 1.0 - LIKELIHOOD_CLAMP);
    let s = successes.min(n) as f64;
    let log_l = s * p.ln() + (n as f64 - s) * (1.0 - p).ln();
    (n as f64).ln() * k as f64 - 2.0 * log_l
}

/// Marks which invariants survive nested-model comparison. A model with
/// several givens is kept only if its BIC is strictly below that of every
/// present model with the same outcome and a proper subset of its givens.
pub fn select_models(invariants: &[Invariant]) -> Vec<bool> {
    let key = |inv: &Invariant, givens: &[&str]| -> (String, Vec<String>) {
        let mut g: Vec<String> = givens.iter().map(|s| s.to_string()).collect();
        g.sort();
        (inv.outcome.id.clone(), g)
    };
    let index: HashMap<(String, Vec<String>), f64> = invariants
        .iter()
        .map(|inv| {
            let ids: Vec<&str> = inv.givens.iter().map(|g| g.id.as_str()).collect();
            (key(inv, &ids), inv.bic)
        })
        .collect();
    invariants
        .iter()
        .map(|inv| {
            let ids: Vec<&str> = inv.givens.iter().map(|g| g.id.as_str()).collect();
            let m = ids.len();
            if m < 2 {
                return true;
            }
            (1..(1u32 << m) - 1).all(|mask| {
                let subset: Vec<&str> = (0..m).filter(|b| mask & (1 << b) != 0).map(|b| ids[b]).collect();
                index.get(&key(inv, &subset)).is_none_or(|&sub_bic| inv.bic < sub_bic)
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankKey {
    #[default]
    Surprise,
    Posterior,
}

impl FromStr for RankKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "surprise" => Ok(RankKey::Surprise),
            "posterior" => Ok(RankKey::Posterior),
            _ => Err(format!("unknown rank key `{s}` (expected surprise or posterior)")),
        }
    }
}

fn desc(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

/// Orders invariants by `key` descending, then posterior descending, then id.
pub fn rank(mut invariants: Vec<Invariant>, key: RankKey) -> Vec<Invariant> {
    invariants.sort_by(|a, b| {
        let primary = match key {
            RankKey::Surprise => desc(a.surprise, b.surprise),
            RankKey::Posterior => Ordering::Equal,
        };
        primary
            .then_with(|| b.result.posterior.total_cmp(&a.result.posterior))
            .then_with(|| a.id.cmp(&b.id))
    });
    invariants
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{infer, FrequencyCounts};
    use crate::spec::parse_spec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn atoms() -> (Predicate, Vec<Predicate>) {
        let spec = parse_spec(
            "OUTCOMES o, INT-Eq, , o == 1, GIVENS a, INT-Eq, , a == 1, b, INT-Eq, , b == 1, c, INT-Eq, , c == 1,",
        )
        .unwrap();
        let (mut o, g) = spec.expand_predicates();
        (o.remove(0), g)
    }

    fn inv(givens: &[usize], posterior: f64, n: u64, prior: f64) -> Invariant {
        let (o, g) = atoms();
        let successes = (posterior * n as f64).round() as u64;
        let counts = FrequencyCounts {
            n: 2 * n,
            freq_o: successes,
            freq_g: n,
            freq_o_and_g: successes,
            freq_g_and_not_o: n - successes,
        };
        let result = InferenceResult {
            p_g_given_o: 1.0,
            p_g_given_not_o: 0.0,
            p_g: 1.0,
            posterior,
            prior,
            counts,
        };
        Invariant::new(o, givens.iter().map(|&i| g[i].clone()).collect(), result)
    }

    #[test]
    fn surprise_values() {
        assert_eq!(surprise(0.3, 0.3), Some(1.0));
        assert_eq!(surprise(0.6, 0.3), Some(2.0));
        assert_abs_diff_eq!(surprise(0.39, 0.3).unwrap(), 1.3, epsilon = 1e-12);
        assert_eq!(surprise(0.5, 0.0), None);
    }

    #[test]
    fn variance_values() {
        assert_eq!(surprise_variance(&[2.0; 7], 5), 0.0);
        assert_eq!(surprise_variance(&[1.0, 3.0], 5), 2.0);
        assert_eq!(surprise_variance(&[100.0, 1.0, 3.0], 2), 2.0);
        assert_eq!(surprise_variance(&[4.0], 5), 0.0);
    }

    #[test]
    fn bic_reference_value() {
        let log_l = 90.0 * 0.9f64.ln() + 10.0 * 0.1f64.ln();
        assert_abs_diff_eq!(log_l, -32.508, epsilon = 1e-3);
        assert_abs_diff_eq!(bic(100, 2, 0.9, 90), 2.0 * 100f64.ln() - 2.0 * log_l, epsilon = 1e-9);
        assert_abs_diff_eq!(bic(100, 2, 0.9, 90), 74.23, epsilon = 1e-2);
        assert_abs_diff_eq!(bic(50, 3, 1.0, 50), 50f64.ln() * 3.0, epsilon = 1e-6);
    }

    #[test]
    fn nested_identical_fit_pruned() {
        let small = inv(&[0], 0.5, 100, 0.3);
        let big = inv(&[0, 1], 0.5, 100, 0.3);
        assert_abs_diff_eq!(big.bic - small.bic, 100f64.ln(), epsilon = 1e-9);
        assert_eq!(select_models(&[small, big]), vec![true, false]);
    }

    #[test]
    fn nested_better_fit_retained() {
        let small = inv(&[0], 0.5, 100, 0.3);
        let big = inv(&[0, 1], 0.9, 100, 0.3);
        assert_eq!(select_models(&[small, big]), vec![true, true]);
        assert_eq!(select_models(&[inv(&[0, 1, 2], 0.5, 10, 0.3)]), vec![true]);
    }

    #[test]
    fn superset_must_beat_every_subset() {
        let a = inv(&[0], 0.5, 100, 0.3);
        let b = inv(&[1], 0.95, 100, 0.3);
        let ab = inv(&[0, 1], 0.9, 100, 0.3);
        assert_eq!(select_models(&[a, b, ab]), vec![true, true, false]);
    }

    #[test]
    fn rank_orders_and_breaks_ties() {
        let x = inv(&[0], 0.3, 10, 0.3 / 159.85);
        let y = inv(&[1], 0.3, 10, 0.3 / 57.54);
        let ranked = rank(vec![y.clone(), x.clone()], RankKey::Surprise);
        assert_eq!(ranked[0].id, x.id);

        let p = inv(&[0], 0.8, 10, 0.4);
        let q = inv(&[1], 0.3, 10, 0.15);
        assert_eq!(p.surprise, q.surprise);
        let ranked = rank(vec![q, p.clone()], RankKey::Surprise);
        assert_eq!(ranked[0].id, p.id);
        assert!(rank(vec![], RankKey::Posterior).is_empty());
    }

    #[test]
    fn invariant_id_format() {
        let i = inv(&[0, 2], 0.5, 10, 0.5);
        assert_eq!(i.id, "P(o == 1 | a == 1, c == 1)");
    }

    #[test]
    fn built_from_real_inference() {
        let counts = FrequencyCounts {
            n: 5,
            freq_o: 2,
            freq_g: 2,
            freq_o_and_g: 1,
            freq_g_and_not_o: 1,
        };
        let (o, g) = atoms();
        let r = infer(&counts, 0.3).unwrap();
        let i = Invariant::new(o, vec![g[0].clone()], r);
        assert_abs_diff_eq!(i.surprise.unwrap(), r.posterior / 0.3, epsilon = 1e-15);
        assert_eq!(i.k, 2);
    }

    proptest! {
        #[test]
        fn surprise_scale_invariant(post in 0.0f64..1.0, prior in 0.01f64..1.0, c in 0.01f64..100.0) {
            let a = surprise(post, prior).unwrap();
            let b = surprise(c * post, c * prior).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn bic_monotone_in_k(n in 1u64..1000, s in 0u64..1000, p in 0.0f64..=1.0, k in 1usize..6) {
            let s = s % (n + 1);
            prop_assert!(bic(n, k + 1, p, s) >= bic(n, k, p, s));
        }

        #[test]
        fn rank_is_permutation(posts in proptest::collection::vec((0.0f64..1.0, 0.01f64..1.0), 0..20)) {
            let invs: Vec<Invariant> = posts.iter().enumerate()
                .map(|(i, &(p, pr))| inv(&[i % 3], p, 10, pr)).collect();
            let ranked = rank(invs.clone(), RankKey::Surprise);
            prop_assert_eq!(ranked.len(), invs.len());
            for w in ranked.windows(2) {
                prop_assert!(w[0].surprise.unwrap() >= w[1].surprise.unwrap());
            }
        }
    }
}
