use crate::num::Real;

/// Unit-cost Levenshtein distance.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    if b.is_empty() {
        return a.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut diagonal = row[0];
        row[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let substitution = diagonal + usize::from(x != y);
            diagonal = row[j + 1];
            row[j + 1] = substitution.min(diagonal + 1).min(row[j] + 1);
        }
    }
    row[b.len()]
}

/// Levenshtein distance divided by the longer length; 0 when both are empty.
pub fn normalized_levenshtein<F: Real, T: PartialEq>(a: &[T], b: &[T]) -> F {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return F::zero();
    }
    F::from_count(levenshtein(a, b)) / F::from_count(longest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phonetics::Phoneme::{self, *};
    use proptest::prelude::*;

    /// Textbook recursion, memo-free; only for short inputs.
    fn recursive(a: &[Phoneme], b: &[Phoneme]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ra)), Some((y, rb))) => {
                if x == y {
                    recursive(ra, rb)
                } else {
                    1 + recursive(ra, rb).min(recursive(ra, b)).min(recursive(a, rb))
                }
            }
        }
    }

    #[test]
    fn identity_and_empty() {
        assert_eq!(normalized_levenshtein::<f64, _>(&[K, AE, T], &[K, AE, T]), 0.0);
        assert_eq!(normalized_levenshtein::<f64, Phoneme>(&[], &[K]), 1.0);
        assert_eq!(normalized_levenshtein::<f64, Phoneme>(&[], &[]), 0.0);
    }

    #[test]
    fn single_substitution_is_one_third() {
        // DP table for KAT vs BAT: only the first cell differs, distance 1 over length 3.
        assert_eq!(recursive(&[K, AE, T], &[B, AE, T]), 1);
        let d: f64 = normalized_levenshtein(&[K, AE, T], &[B, AE, T]);
        assert_eq!(d, 1.0 / 3.0);
        let d32: f32 = normalized_levenshtein(&[K, AE, T], &[B, AE, T]);
        assert_eq!(d32, 1.0 / 3.0);
    }

    fn seq(max: usize) -> impl Strategy<Value = Vec<Phoneme>> {
        // A small alphabet makes matches frequent enough to exercise every branch.
        prop::collection::vec(prop::sample::select(vec![K, AE, T, S, IY]), 0..=max)
    }

    proptest! {
        #[test]
        fn agrees_with_recursion(a in seq(7), b in seq(7)) {
            prop_assert_eq!(levenshtein(&a, &b), recursive(&a, &b));
        }

        #[test]
        fn symmetric_bounded_and_zero_iff_equal(a in seq(20), b in seq(20)) {
            let ab: f64 = normalized_levenshtein(&a, &b);
            let ba: f64 = normalized_levenshtein(&b, &a);
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(ab == 0.0, a == b);
        }
    }
}
