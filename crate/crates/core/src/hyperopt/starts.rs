//! Randomly shifted Halton points in the unit cube.

fn nth_prime(k: usize) -> u64 {
    let mut found = 0;
    let mut n = 1u64;
    loop {
        n += 1;
        if (2..).take_while(|d| d * d <= n).all(|d| n % d != 0) {
            if found == k {
                return n;
            }
            found += 1;
        }
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Point `index` of the Halton sequence (skipping the origin) with a
/// Cranley–Patterson rotation by `shift`.
pub(crate) fn shifted_halton(index: usize, shift: &[f64]) -> Vec<f64> {
    shift
        .iter()
        .enumerate()
        .map(|(j, s)| (radical_inverse(index as u64 + 1, nth_prime(j)) + s).fract())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_bases_and_points() {
        assert_eq!((0..5).map(nth_prime).collect::<Vec<_>>(), vec![2, 3, 5, 7, 11]);
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(2, 3) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rotated_points_stay_in_unit_cube() {
        let shift = [0.9, 0.3, 0.999];
        for i in 0..100 {
            assert!(shifted_halton(i, &shift).iter().all(|u| (0.0..1.0).contains(u)));
        }
    }
}
