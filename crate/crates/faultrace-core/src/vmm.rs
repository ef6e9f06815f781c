//! PPM-C variable-order Markov model.
//!
//! Training accumulates context counts for every order 0..D over the
//! fault-free symbol sequences. Probability queries use the Method C escape
//! mass q/(n+q) with the exclusion mechanism: when a context escapes, its
//! successors are removed from the alphabet considered at shorter contexts.
//! The final order(-1) level is uniform over the non-excluded alphabet, so
//! every symbol gets positive probability.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::trace::{Symbol, SymbolSequence};

/// Per-context successor counts. `total` is the sum of all counts; the
/// number of distinct successors q(s) is `counts.len()`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ContextStats {
    counts: BTreeMap<Symbol, u32>,
    total: u64,
}

impl ContextStats {
    pub fn count(&self, symbol: Symbol) -> u32 {
        self.counts.get(&symbol).copied().unwrap_or(0)
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn successors(&self) -> impl Iterator<Item = (Symbol, u32)> + '_ {
        self.counts.iter().map(|(s, c)| (*s, *c))
    }
}

/// A trained PPM-C model over a fixed alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VmmModel {
    max_order: usize,
    alphabet_size: usize,
    contexts: BTreeMap<Vec<Symbol>, ContextStats>,
}

/// Default maximum context order.
pub const DEFAULT_MAX_ORDER: usize = 5;

impl VmmModel {
    /// Trains on the given sequences with contexts of length 0..=max_order.
    ///
    /// Counts never cross a sequence boundary: no context spans two training
    /// sequences. Individual sequences may be empty; the list must not be.
    pub fn train(
        sequences: &[SymbolSequence],
        max_order: usize,
        alphabet_size: usize,
    ) -> Result<VmmModel, CoreError> {
        if sequences.is_empty() {
            return Err(CoreError::EmptyInput("train needs at least one sequence"));
        }
        if max_order < 1 || max_order > 8 {
            return Err(CoreError::InvalidParameter(alloc::format!(
                "max_order must be in 1..=8, got {max_order}"
            )));
        }
        let mut contexts: BTreeMap<Vec<Symbol>, ContextStats> = BTreeMap::new();
        for seq in sequences {
            for (i, &target) in seq.symbols.iter().enumerate() {
                if target.index() >= alphabet_size {
                    return Err(CoreError::UnknownSymbol {
                        id: target.0,
                        alphabet: alphabet_size as u32,
                    });
                }
                for k in 0..=max_order.min(i) {
                    let ctx = seq.symbols[i - k..i].to_vec();
                    let stats = contexts.entry(ctx).or_default();
                    *stats.counts.entry(target).or_insert(0) += 1;
                    stats.total += 1;
                }
            }
        }
        Ok(VmmModel { max_order, alphabet_size, contexts })
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn context(&self, ctx: &[Symbol]) -> Option<&ContextStats> {
        self.contexts.get(ctx)
    }

    /// All stored contexts with their stats, shortest first.
    pub fn contexts(&self) -> impl Iterator<Item = (&[Symbol], &ContextStats)> + '_ {
        self.contexts.iter().map(|(k, v)| (k.as_slice(), v))
    }

    /// Rebuilds a model from serialized parts, re-checking the structural
    /// invariants (totals consistent, suffix closure).
    pub fn from_parts(
        max_order: usize,
        alphabet_size: usize,
        entries: impl IntoIterator<Item = (Vec<Symbol>, Vec<(Symbol, u32)>)>,
    ) -> Result<VmmModel, CoreError> {
        let mut contexts: BTreeMap<Vec<Symbol>, ContextStats> = BTreeMap::new();
        for (ctx, counts) in entries {
            if ctx.len() > max_order {
                return Err(CoreError::InvalidParameter(alloc::format!(
                    "context of length {} exceeds max_order {max_order}",
                    ctx.len()
                )));
            }
            let mut stats = ContextStats::default();
            for (sym, c) in counts {
                if sym.index() >= alphabet_size {
                    return Err(CoreError::UnknownSymbol {
                        id: sym.0,
                        alphabet: alphabet_size as u32,
                    });
                }
                if c == 0 {
                    return Err(CoreError::InvalidParameter(
                        "zero count in serialized context".into(),
                    ));
                }
                stats.counts.insert(sym, c);
                stats.total += c as u64;
            }
            contexts.insert(ctx, stats);
        }
        for ctx in contexts.keys() {
            if !ctx.is_empty() && !contexts.contains_key(&ctx[1..]) {
                return Err(CoreError::InvalidParameter(
                    "serialized trie is not suffix-closed".into(),
                ));
            }
        }
        Ok(VmmModel { max_order, alphabet_size, contexts })
    }

    /// PPM-C conditional probability of `target` after `history`.
    ///
    /// Only the trailing `max_order` symbols of the history are used. The
    /// result is always positive.
    pub fn prob(&self, history: &[Symbol], target: Symbol) -> f64 {
        debug_assert!(target.index() < self.alphabet_size);
        let start = history.len() - self.max_order.min(history.len());
        let mut excluded: BTreeSet<Symbol> = BTreeSet::new();
        let mut acc = 1.0f64;
        for k in start..=history.len() {
            let ctx = &history[k..];
            let Some(stats) = self.contexts.get(ctx) else { continue };
            let mut seen_total = 0u64;
            let mut seen_distinct = 0u64;
            let mut target_count = 0u64;
            for (&sym, &c) in &stats.counts {
                if excluded.contains(&sym) {
                    continue;
                }
                seen_total += c as u64;
                seen_distinct += 1;
                if sym == target {
                    target_count = c as u64;
                }
            }
            if seen_distinct == 0 {
                // every successor already accounted for at a longer context
                continue;
            }
            // no escape mass when the context has already seen every
            // non-excluded symbol of the alphabet: there is nothing left to
            // escape to, and reserving mass would break normalization
            let full_coverage =
                seen_distinct as usize == self.alphabet_size - excluded.len();
            let denom = if full_coverage {
                seen_total as f64
            } else {
                (seen_total + seen_distinct) as f64
            };
            if target_count > 0 {
                return acc * target_count as f64 / denom;
            }
            acc *= seen_distinct as f64 / denom;
            excluded.extend(stats.counts.keys().copied());
        }
        // order(-1): uniform over the non-excluded alphabet
        acc / (self.alphabet_size - excluded.len()) as f64
    }

    /// Mean negative log2-probability of the test sequence, each position
    /// conditioned on its full preceding prefix.
    pub fn avg_log_loss(&self, test: &SymbolSequence) -> Result<f64, CoreError> {
        if test.is_empty() {
            return Err(CoreError::EmptyInput("avg_log_loss needs a non-empty test sequence"));
        }
        let mut sum = 0.0;
        for (i, &sym) in test.symbols.iter().enumerate() {
            sum -= libm::log2(self.prob(&test.symbols[..i], sym));
        }
        Ok(sum / test.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn seq(ids: &[u32]) -> SymbolSequence {
        SymbolSequence::new("t".to_string(), ids.iter().map(|&i| Symbol(i)).collect())
    }

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-12, "{a} != {b}");
    }

    #[test]
    fn train_on_aa_counts() {
        let m = VmmModel::train(&[seq(&[0, 0])], 1, 1).unwrap();
        assert_eq!(m.context(&[]).unwrap().count(Symbol(0)), 2);
        assert_eq!(m.context(&[Symbol(0)]).unwrap().count(Symbol(0)), 1);
    }

    #[test]
    fn train_on_empty_list_errors() {
        assert!(VmmModel::train(&[], 1, 2).is_err());
    }

    #[test]
    fn train_abab_matches_window_oracle() {
        // sliding-window count oracle over "abab"
        let data = [0u32, 1, 0, 1];
        let m = VmmModel::train(&[seq(&data)], 2, 2).unwrap();
        for k in 0..=2usize {
            let mut oracle: BTreeMap<(Vec<u32>, u32), u32> = BTreeMap::new();
            for i in k..data.len() {
                *oracle.entry((data[i - k..i].to_vec(), data[i])).or_insert(0) += 1;
            }
            for ((ctx, target), count) in oracle {
                let ctx: Vec<Symbol> = ctx.into_iter().map(Symbol).collect();
                assert_eq!(m.context(&ctx).unwrap().count(Symbol(target)), count);
            }
        }
        assert_eq!(m.context(&[Symbol(0)]).unwrap().count(Symbol(1)), 2);
        assert_eq!(m.context(&[Symbol(1)]).unwrap().count(Symbol(0)), 1);
    }

    #[test]
    fn training_does_not_cross_sequence_boundaries() {
        // "ab" and "cb": context "b" never has a successor
        let m = VmmModel::train(&[seq(&[0, 1]), seq(&[2, 1])], 2, 4).unwrap();
        assert!(m.context(&[Symbol(1)]).is_none());
        let eps = m.context(&[]).unwrap();
        assert_eq!(eps.total(), 4);
        assert_eq!(eps.distinct(), 3);
    }

    #[test]
    fn spec_hand_cases_on_aaaa() {
        let m = VmmModel::train(&[seq(&[0, 0, 0, 0])], 1, 2).unwrap();
        close(m.prob(&[Symbol(0)], Symbol(0)), 0.75);
        close(m.prob(&[Symbol(0)], Symbol(1)), 0.25);
        close(m.prob(&[], Symbol(0)), 0.8);
        close(m.prob(&[], Symbol(1)), 0.2);
    }

    #[test]
    fn double_escape_with_exclusion() {
        // train "abab" over {a,b,c}, D=2
        let m = VmmModel::train(&[seq(&[0, 1, 0, 1])], 2, 3).unwrap();
        let a = Symbol(0);
        let b = Symbol(1);
        let c = Symbol(2);
        close(m.prob(&[a], b), 2.0 / 3.0);
        close(m.prob(&[a], a), 2.0 / 9.0);
        close(m.prob(&[a], c), 1.0 / 9.0);
        // context "ba": escape to "a" (all successors excluded, skipped),
        // then epsilon with exclusion
        close(m.prob(&[b, a], b), 0.5);
        close(m.prob(&[b, a], a), 1.0 / 3.0);
        close(m.prob(&[b, a], c), 1.0 / 6.0);
    }

    #[test]
    fn full_alphabet_coverage_drops_the_escape() {
        // epsilon has seen both alphabet symbols: probabilities are plain
        // count ratios and sum to exactly 1
        let m = VmmModel::train(&[seq(&[0, 1, 0])], 1, 2).unwrap();
        close(m.prob(&[], Symbol(0)), 2.0 / 3.0);
        close(m.prob(&[], Symbol(1)), 1.0 / 3.0);
    }

    #[test]
    fn untrained_context_skips_without_escape_charge() {
        let m = VmmModel::train(&[seq(&[0, 1]), seq(&[2, 1])], 2, 4).unwrap();
        // context "b" unstored: falls straight to epsilon
        close(m.prob(&[Symbol(1)], Symbol(3)), 3.0 / 7.0);
        close(m.prob(&[Symbol(1)], Symbol(0)), 1.0 / 7.0);
    }

    #[test]
    fn avg_log_loss_hand_value_and_uniform_fallback() {
        let m = VmmModel::train(&[seq(&[0, 0, 0, 0])], 1, 2).unwrap();
        let loss = m.avg_log_loss(&seq(&[0])).unwrap();
        close(loss, -(0.8f64).log2());
        // untrained model over a 4-symbol alphabet: exactly 2 bits
        let m = VmmModel::train(&[seq(&[])], 1, 4).unwrap();
        close(m.avg_log_loss(&seq(&[2])).unwrap(), 2.0);
    }

    #[test]
    fn repeated_training_sequence_beats_its_reversal() {
        let data = [0u32, 1, 2, 3, 0, 1, 2, 3, 0, 1, 2, 3];
        let train: Vec<SymbolSequence> = (0..5).map(|_| seq(&data)).collect();
        let m = VmmModel::train(&train, 3, 4).unwrap();
        let fwd = m.avg_log_loss(&seq(&data)).unwrap();
        let rev: Vec<u32> = data.iter().rev().copied().collect();
        let bwd = m.avg_log_loss(&seq(&rev)).unwrap();
        assert!(fwd < bwd, "forward loss {fwd} should beat reversed {bwd}");
    }

    #[test]
    fn monotone_evidence() {
        let ctx = [0u32, 1];
        let mut last = 0.0;
        for reps in 1..6 {
            let train: Vec<SymbolSequence> = (0..reps).map(|_| seq(&[0, 1, 2])).collect();
            let m = VmmModel::train(&train, 2, 4).unwrap();
            let p = m.prob(&[Symbol(ctx[0]), Symbol(ctx[1])], Symbol(2));
            assert!(p >= last);
            last = p;
        }
    }

    #[test]
    fn from_parts_round_trip_and_validation() {
        let m = VmmModel::train(&[seq(&[0, 1, 0, 2, 0, 1])], 3, 3).unwrap();
        let parts: Vec<(Vec<Symbol>, Vec<(Symbol, u32)>)> = m
            .contexts()
            .map(|(ctx, stats)| (ctx.to_vec(), stats.successors().collect()))
            .collect();
        let rebuilt = VmmModel::from_parts(3, 3, parts).unwrap();
        assert_eq!(rebuilt, m);
        // a trie missing the suffix of a stored context is rejected
        let bad = vec![(vec![Symbol(0)], vec![(Symbol(1), 1)])];
        assert!(VmmModel::from_parts(3, 3, bad).is_err());
    }

    fn random_model(rng_seed: u64, alphabet: usize, d: usize) -> VmmModel {
        use rand_core::{RngCore, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng_seed);
        let n_seqs = 1 + (rng.next_u32() % 4) as usize;
        let seqs: Vec<SymbolSequence> = (0..n_seqs)
            .map(|_| {
                let len = (rng.next_u32() % 30) as usize;
                let ids: Vec<u32> =
                    (0..len).map(|_| rng.next_u32() % alphabet as u32).collect();
                seq(&ids)
            })
            .collect();
        VmmModel::train(&seqs, d, alphabet).unwrap()
    }

    #[test]
    fn normalization_over_stored_and_random_contexts() {
        use rand_core::{RngCore, SeedableRng};
        for seed in 0..20u64 {
            let alphabet = 2 + (seed % 5) as usize;
            let d = 1 + (seed % 5) as usize;
            let m = random_model(seed, alphabet, d);
            let stored: Vec<Vec<Symbol>> =
                m.contexts().map(|(c, _)| c.to_vec()).collect();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xbeef);
            let mut random_ctxs = Vec::new();
            for _ in 0..10 {
                let len = (rng.next_u32() as usize) % (d + 1);
                random_ctxs.push(
                    (0..len)
                        .map(|_| Symbol(rng.next_u32() % alphabet as u32))
                        .collect::<Vec<_>>(),
                );
            }
            for ctx in stored.iter().chain(random_ctxs.iter()) {
                let sum: f64 =
                    (0..alphabet).map(|s| m.prob(ctx, Symbol(s as u32))).sum();
                assert!((sum - 1.0).abs() < 1e-9, "sum {sum} for ctx {ctx:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn positivity_and_d1_no_escape_agreement(
            data in proptest::collection::vec(0u32..4, 1..40),
            qctx in 0u32..4,
            qsym in 0u32..4,
        ) {
            let m = VmmModel::train(&[seq(&data)], 1, 4).unwrap();
            let p = m.prob(&[Symbol(qctx)], Symbol(qsym));
            prop_assert!(p > 0.0 && p <= 1.0);
            if let Some(stats) = m.context(&[Symbol(qctx)]) {
                let c = stats.count(Symbol(qsym));
                // the count-ratio identity only holds while an escape is
                // still possible (some alphabet symbol unseen here)
                if c > 0 && stats.distinct() < 4 {
                    let expect = c as f64
                        / (stats.total() as f64 + stats.distinct() as f64);
                    prop_assert!((p - expect).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn training_is_deterministic(
            data in proptest::collection::vec(0u32..3, 0..30),
        ) {
            let a = VmmModel::train(&[seq(&data)], 3, 3).unwrap();
            let b = VmmModel::train(&[seq(&data)], 3, 3).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
