use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sequence::Label;

/// Assignment of every instance to one of `k` test folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.assignment[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }

    /// Reorders the plan to follow a permutation of the instances:
    /// instance `order[i]` of the old order becomes instance `i`.
    pub fn permuted(&self, order: &[usize]) -> FoldPlan {
        FoldPlan {
            k: self.k,
            seed: self.seed,
            assignment: order.iter().map(|&i| self.assignment[i]).collect(),
        }
    }
}

/// Mixes a stream index into a seed (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check(n: usize, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: format!("need at least 2 folds, got {k}"),
        });
    }
    if n < k {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: format!("{k} folds for only {n} instances"),
        });
    }
    Ok(())
}

/// Seeded shuffle, then contiguous chunks; the first `n % k` folds get one
/// extra instance.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    check(n, k)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut assignment = vec![0; n];
    let mut pos = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &i in &order[pos..pos + size] {
            assignment[i] = fold;
        }
        pos += size;
    }
    Ok(FoldPlan { k, seed, assignment })
}

/// Class-stratified variant: each class is shuffled separately and the
/// concatenation is dealt round-robin, keeping fold sizes within one.
pub fn stratified_kfold_split(labels: &[Label], k: usize, seed: u64) -> Result<FoldPlan> {
    check(labels.len(), k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order = Vec::with_capacity(labels.len());
    for class in [Label::Positive, Label::Negative] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        order.extend(idx);
    }
    let mut assignment = vec![0; labels.len()];
    for (pos, &i) in order.iter().enumerate() {
        assignment[i] = pos % k;
    }
    Ok(FoldPlan { k, seed, assignment })
}
