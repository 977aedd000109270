//! The 18-vector, 9-context Kochen–Specker configuration in `C^4`.
//!
//! All checks on the configuration run in integer arithmetic; the projections
//! are only formed as floating-point matrices for use elsewhere.

use serde::Serialize;

use crate::matcore::{CMatrix, C64};

/// Integer vectors, numbered 1..=18 in the published tables.
pub const KS_VECTORS: [[i64; 4]; 18] = [
    [0, 0, 0, 1],
    [1, -1, 1, -1],
    [0, 0, 1, 0],
    [1, -1, -1, 1],
    [1, 1, -1, 1],
    [1, 1, 1, -1],
    [0, 1, 0, 0],
    [1, 1, 1, 1],
    [-1, 1, 1, 1],
    [1, 1, 0, 0],
    [1, 0, 1, 0],
    [1, 0, -1, 0],
    [1, 0, 0, 1],
    [1, 0, 0, -1],
    [1, -1, 0, 0],
    [0, 0, 1, 1],
    [0, 1, 0, -1],
    [0, 1, -1, 0],
];

/// Contexts as 1-based vector indices.
pub const KS_CONTEXTS: [[usize; 4]; 9] = [
    [1, 3, 10, 15],
    [1, 7, 11, 12],
    [2, 4, 10, 16],
    [2, 8, 12, 17],
    [3, 7, 13, 14],
    [4, 8, 14, 18],
    [5, 6, 15, 16],
    [5, 9, 11, 17],
    [6, 9, 13, 18],
];

#[derive(Debug, Clone)]
pub struct KSConfiguration {
    pub vectors: Vec<[i64; 4]>,
    /// 1-based indices into `vectors`.
    pub contexts: Vec<[usize; 4]>,
    /// `|j⟩⟨j| / ⟨j|j⟩`.
    pub projections: Vec<CMatrix>,
}

pub fn ks_configuration() -> KSConfiguration {
    let projections = KS_VECTORS
        .iter()
        .map(|v| {
            let norm2 = dot(v, v) as f64;
            CMatrix::from_fn(4, 4, |i, j| C64::new((v[i] * v[j]) as f64 / norm2, 0.0))
        })
        .collect();
    KSConfiguration { vectors: KS_VECTORS.to_vec(), contexts: KS_CONTEXTS.to_vec(), projections }
}

fn dot(a: &[i64; 4], b: &[i64; 4]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Outcome of [`validate_configuration`].
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub contexts_valid: Vec<bool>,
    /// Number of contexts containing each vector.
    pub occurrences: Vec<usize>,
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Pairwise orthogonality inside every context, completeness
/// `Σ_{j∈C} ⟨j|j⟩⁻¹ |j⟩⟨j| = I` (checked after clearing denominators) and the
/// occurrence count of every vector.
pub fn validate_configuration(cfg: &KSConfiguration) -> ValidationReport {
    let mut violations = Vec::new();
    let mut contexts_valid = Vec::with_capacity(cfg.contexts.len());
    let mut occurrences = vec![0usize; cfg.vectors.len()];
    for (c, ctx) in cfg.contexts.iter().enumerate() {
        let mut ok = true;
        for &j in ctx {
            if j == 0 || j > cfg.vectors.len() {
                violations.push(format!("context {}: index {j} out of range", c + 1));
                ok = false;
            }
        }
        if !ok {
            contexts_valid.push(false);
            continue;
        }
        for &j in ctx {
            occurrences[j - 1] += 1;
        }
        for a in 0..4 {
            for b in a + 1..4 {
                let d = dot(&cfg.vectors[ctx[a] - 1], &cfg.vectors[ctx[b] - 1]);
                if d != 0 {
                    violations.push(format!("context {}: <{}|{}> = {d}", c + 1, ctx[a], ctx[b]));
                    ok = false;
                }
            }
        }
        // Σ_j (L / n_j) v_j v_jᵀ = L·I with L the product of the squared norms
        let norms: Vec<i64> = ctx.iter().map(|&j| dot(&cfg.vectors[j - 1], &cfg.vectors[j - 1])).collect();
        if norms.contains(&0) {
            violations.push(format!("context {}: zero vector", c + 1));
            contexts_valid.push(false);
            continue;
        }
        let l: i64 = norms.iter().product();
        for i in 0..4 {
            for k in 0..4 {
                let s: i64 = ctx
                    .iter()
                    .zip(&norms)
                    .map(|(&j, n)| {
                        let v = &cfg.vectors[j - 1];
                        l / n * v[i] * v[k]
                    })
                    .sum();
                let want = if i == k { l } else { 0 };
                if s != want {
                    violations.push(format!("context {}: projections do not sum to I at ({i},{k})", c + 1));
                    ok = false;
                }
            }
        }
        contexts_valid.push(ok);
    }
    for (j, &count) in occurrences.iter().enumerate() {
        if count != 2 {
            violations.push(format!("vector {} appears in {count} contexts", j + 1));
        }
    }
    ValidationReport { contexts_valid, occurrences, violations }
}

/// Assignment `j ↦ {0, 1}` of values to the 18 projections.
pub type Valuation = Vec<u8>;

/// Every valuation giving exactly one 1 in each context.
pub fn search_valuations(cfg: &KSConfiguration) -> Vec<Valuation> {
    search_valuations_in(cfg, &cfg.contexts)
}

/// Search restricted to the given contexts. Branches on which member of each
/// context gets the 1, pruning as soon as a shared index is inconsistent.
/// Vectors outside every listed context are left at 0.
pub fn search_valuations_in(cfg: &KSConfiguration, contexts: &[[usize; 4]]) -> Vec<Valuation> {
    fn go(contexts: &[[usize; 4]], k: usize, assign: &mut [Option<u8>], out: &mut Vec<Valuation>) {
        if k == contexts.len() {
            out.push(assign.iter().map(|v| v.unwrap_or(0)).collect());
            return;
        }
        let ctx = &contexts[k];
        for pick in 0..4 {
            let mut changed = Vec::new();
            let mut ok = true;
            for (pos, &j) in ctx.iter().enumerate() {
                let want = u8::from(pos == pick);
                match assign[j - 1] {
                    Some(v) if v != want => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        assign[j - 1] = Some(want);
                        changed.push(j - 1);
                    }
                }
            }
            if ok {
                go(contexts, k + 1, assign, out);
            }
            for i in changed {
                assign[i] = None;
            }
        }
    }
    let mut out = Vec::new();
    let mut assign = vec![None; cfg.vectors.len()];
    go(contexts, 0, &mut assign, &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

/// Counting argument: one 1 per context forces `#contexts` ones in the table,
/// while every projection appearing twice makes the table total even.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ParityRecord {
    pub required_ones: usize,
    pub double_count_parity: Parity,
    pub contradiction: bool,
}

pub fn parity_argument(cfg: &KSConfiguration) -> ParityRecord {
    let required_ones = cfg.contexts.len();
    let mut occ = vec![0usize; cfg.vectors.len()];
    for ctx in &cfg.contexts {
        for &j in ctx {
            occ[j - 1] += 1;
        }
    }
    let all_even = occ.iter().all(|c| c % 2 == 0);
    let double_count_parity = if all_even { Parity::Even } else { Parity::Odd };
    ParityRecord {
        required_ones,
        double_count_parity,
        contradiction: all_even && required_ones % 2 == 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::is_psd;
    use crate::measure::{uncertainty_gap, Observable};
    use crate::random::{random_density, rng};
    use proptest::prelude::*;

    #[test]
    fn published_entries() {
        let cfg = ks_configuration();
        assert_eq!(cfg.vectors[0], [0, 0, 0, 1]);
        assert_eq!(cfg.vectors[9], [1, 1, 0, 0]);
        assert_eq!(cfg.contexts[0], [1, 3, 10, 15]);
        for p in &cfg.projections {
            assert!(p.max_abs_diff(&(p * p)) < 1e-15);
            assert!((p.trace().re - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn configuration_is_valid() {
        let cfg = ks_configuration();
        let report = validate_configuration(&cfg);
        assert!(report.is_valid(), "{:?}", report.violations);
        assert!(report.contexts_valid.iter().all(|&v| v));
        assert_eq!(report.occurrences, vec![2; 18]);
        // floating-point cross-check of completeness
        for ctx in &cfg.contexts {
            let mut s = CMatrix::zeros(4, 4);
            for &j in ctx {
                s += &cfg.projections[j - 1];
            }
            assert!(s.max_abs_diff(&CMatrix::identity(4)) < 1e-12);
        }
    }

    #[test]
    fn corrupted_configuration_is_reported() {
        let mut cfg = ks_configuration();
        cfg.vectors[2] = [0, 0, 1, 1];
        let report = validate_configuration(&cfg);
        assert!(!report.is_valid());
        assert!(!report.contexts_valid[0]);
        assert!(report.violations.iter().any(|v| v.contains("<1|3>")));

        let mut cfg = ks_configuration();
        cfg.contexts[8] = [6, 9, 13, 17];
        let report = validate_configuration(&cfg);
        assert!(report.violations.iter().any(|v| v.contains("vector 18")));
    }

    #[test]
    fn no_valuation_exists() {
        let cfg = ks_configuration();
        assert!(search_valuations(&cfg).is_empty());
        let parity = parity_argument(&cfg);
        assert_eq!(parity.required_ones, 9);
        assert_eq!(parity.double_count_parity, Parity::Even);
        assert!(parity.contradiction);
    }

    /// Brute force over all 2^18 assignments.
    fn brute_force(cfg: &KSConfiguration, contexts: &[[usize; 4]]) -> usize {
        (0u32..1 << 18)
            .filter(|bits| {
                contexts.iter().all(|ctx| ctx.iter().filter(|&&j| bits >> (j - 1) & 1 == 1).count() == 1)
            })
            .filter(|bits| {
                // vectors outside the listed contexts are fixed to 0, as in the search
                (0..cfg.vectors.len())
                    .all(|j| bits >> j & 1 == 0 || contexts.iter().any(|c| c.contains(&(j + 1))))
            })
            .count()
    }

    #[test]
    fn relaxed_searches_match_brute_force() {
        let cfg = ks_configuration();
        for drop in 0..9 {
            let contexts: Vec<[usize; 4]> =
                cfg.contexts.iter().enumerate().filter(|&(k, _)| k != drop).map(|(_, c)| *c).collect();
            let found = search_valuations_in(&cfg, &contexts);
            assert!(!found.is_empty());
            assert_eq!(found.len(), brute_force(&cfg, &contexts));
            for v in &found {
                for ctx in &contexts {
                    assert_eq!(ctx.iter().map(|&j| v[j - 1] as usize).sum::<usize>(), 1);
                }
            }
        }
        assert_eq!(search_valuations_in(&cfg, &cfg.contexts[..1]).len(), 4);
        assert_eq!(brute_force(&cfg, &cfg.contexts), 0);
    }

    #[test]
    fn uncertainty_across_contexts() {
        let cfg = ks_configuration();
        let mut r = rng(90);
        let mut pairs = 0;
        for a in 0..18 {
            for b in a + 1..18 {
                let (pa, pb) = (&cfg.projections[a], &cfg.projections[b]);
                if pa.commutator(pb).max_abs() < 1e-12 {
                    continue;
                }
                pairs += 1;
                let rho = random_density(4, 2, &mut r);
                let oa = Observable::new(pa.clone()).unwrap();
                let ob = Observable::new(pb.clone()).unwrap();
                assert!(uncertainty_gap(&oa, &ob, &rho).unwrap() >= -1e-12);
                assert!(is_psd(rho.matrix(), 1e-12));
            }
        }
        assert!(pairs > 0);
    }

    proptest! {
        #[test]
        fn search_agrees_with_parity(perm in Just((0..9).collect::<Vec<usize>>()).prop_shuffle()) {
            let cfg = ks_configuration();
            let reordered: Vec<[usize; 4]> = perm.iter().map(|&k| cfg.contexts[k]).collect();
            let cfg2 = KSConfiguration { contexts: reordered, ..cfg };
            prop_assert!(search_valuations(&cfg2).is_empty());
            prop_assert!(parity_argument(&cfg2).contradiction);
        }
    }
}
