use rand::Rng;

/// Fixed-capacity ring buffer with uniform sampling.
#[derive(Clone, Debug)]
pub struct ReplayMemory<T> {
    capacity: usize,
    items: Vec<T>,
    next: usize,
}

impl<T> ReplayMemory<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Inserts, overwriting the oldest item once full.
    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.next] = item;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// One uniformly drawn item; `None` when empty.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<&T> {
        if self.items.is_empty() {
            None
        } else {
            Some(&self.items[rng.gen_range(0..self.items.len())])
        }
    }

    pub fn sample_batch<'a, R: Rng + ?Sized>(&'a self, rng: &mut R, n: usize) -> Vec<&'a T> {
        (0..n).filter_map(|_| self.sample(rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ring_buffer_overwrites_oldest() {
        let mut m = ReplayMemory::new(3);
        for i in 0..5 {
            m.push(i);
        }
        assert_eq!(m.len(), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seen: std::collections::BTreeSet<_> =
            m.sample_batch(&mut rng, 200).into_iter().copied().collect();
        assert_eq!(seen, [2, 3, 4].into_iter().collect());
    }

    #[test]
    fn sampling_is_seed_reproducible() {
        let mut m = ReplayMemory::new(100);
        for i in 0..100 {
            m.push(i);
        }
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            m.sample_batch(&mut rng, 20)
                .into_iter()
                .copied()
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
        assert!(ReplayMemory::<u8>::new(1)
            .sample(&mut ChaCha8Rng::seed_from_u64(0))
            .is_none());
    }
}
