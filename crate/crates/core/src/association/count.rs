use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// Number of one-to-one partial assignments of `m` measurements to
/// `n_tracks` objects: `Σ_n C(M,n) C(m,n) n!`, exact.
pub fn count_associations(m: usize, n_tracks: usize) -> BigUint {
    let mut total = BigUint::zero();
    // term_n = C(M,n) * C(m,n) * n! = C(M,n) * m! / (m-n)!
    let mut binom_tracks = BigUint::one();
    let mut falling = BigUint::one();
    for n in 0..=m.min(n_tracks) {
        if n > 0 {
            binom_tracks = binom_tracks * BigUint::from(n_tracks - n + 1) / BigUint::from(n);
            falling *= BigUint::from(m - n + 1);
        }
        total += &binom_tracks * &falling;
    }
    total
}

/// Same count as a float, for log-scale reporting.
pub fn count_associations_f64(m: usize, n_tracks: usize) -> f64 {
    count_associations(m, n_tracks).to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct evaluation with independent binomial and factorial helpers.
    fn reference(m: u64, n: u64) -> u128 {
        fn binom(n: u64, k: u64) -> u128 {
            (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
        }
        fn fact(k: u64) -> u128 {
            (1..=k).map(|i| i as u128).product()
        }
        (0..=m.min(n)).map(|k| binom(n, k) * binom(m, k) * fact(k)).sum()
    }

    #[test]
    fn known_counts() {
        assert_eq!(count_associations(5, 10), BigUint::from(63_591u32));
        assert_eq!(count_associations(0, 7), BigUint::from(1u32));
        assert_eq!(count_associations(2, 2), BigUint::from(7u32));
        assert_eq!(count_associations(1, 1), BigUint::from(2u32));
        assert_eq!(count_associations(3, 0), BigUint::from(1u32));
    }

    #[test]
    fn matches_reference_on_grid() {
        for m in 0..=12u64 {
            for n in 0..=12u64 {
                assert_eq!(
                    count_associations(m as usize, n as usize),
                    BigUint::from(reference(m, n)),
                    "m={m} M={n}"
                );
            }
        }
    }

    #[test]
    fn symmetric_in_its_arguments() {
        for m in 0..10 {
            for n in 0..10 {
                assert_eq!(count_associations(m, n), count_associations(n, m));
            }
        }
    }

    #[test]
    fn exceeds_u64_without_overflow() {
        let big = count_associations(30, 50);
        assert!(big > BigUint::from(u64::MAX));
        assert!(count_associations_f64(30, 50) > 1e33);
    }
}
