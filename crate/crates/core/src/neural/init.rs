use rand::Rng;

/// `n` draws from U(-b, b) with `b = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<R: Rng + ?Sized>(rng: &mut R, fan_in: usize, fan_out: usize, n: usize) -> Vec<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..n).map(|_| rng.random_range(-bound..bound)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn draws_respect_bound_and_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = glorot_uniform(&mut rng, 100, 100, 10_000);
        let bound = (6.0f64 / 200.0).sqrt();
        assert!(w.iter().all(|x| x.abs() <= bound));
        // roughly uniform: the extreme draws come close to the bound
        assert!(w.iter().cloned().fold(0.0, f64::max) > 0.99 * bound);
        let again = glorot_uniform(&mut ChaCha8Rng::seed_from_u64(1), 100, 100, 10_000);
        assert_eq!(w, again);
    }
}
