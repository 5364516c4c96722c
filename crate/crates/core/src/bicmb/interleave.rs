//! Seeded random bit interleaver.

use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::channel::SimRng;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    /// Input position `i` is sent at `perm[i]`.
    perm: Vec<usize>,
}

impl Interleaver {
    pub fn new(len: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(&mut SimRng::seed_from_u64(seed));
        Self { perm }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn destination(&self, i: usize) -> usize {
        self.perm[i]
    }

    pub fn interleave<T: Copy + Default>(&self, input: &[T]) -> Result<Vec<T>> {
        if input.len() != self.perm.len() {
            return invalid(format!("interleaver length {} got {} items", self.perm.len(), input.len()));
        }
        let mut out = vec![T::default(); input.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = input[i];
        }
        Ok(out)
    }

    pub fn deinterleave<T: Copy + Default>(&self, input: &[T]) -> Result<Vec<T>> {
        if input.len() != self.perm.len() {
            return invalid(format!("interleaver length {} got {} items", self.perm.len(), input.len()));
        }
        Ok(self.perm.iter().map(|&p| input[p]).collect())
    }
}
