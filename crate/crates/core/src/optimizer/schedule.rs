use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::frequency::FrequencyVector;
use crate::error::{Error, Result};
use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulePolicy {
    /// Fresh uniform permutations at the start of every cycle.
    #[default]
    ReshuffleEachCycle,
    /// Identity block order and objectives repeated `m_k` times in index order.
    FixedContiguous,
}

/// One realization of the block permutation and the index mapping for a cycle.
/// Blocks and objectives are zero-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub sigma: Vec<usize>,
    pub pi: Vec<usize>,
}

impl Schedule {
    pub fn draw(
        num_blocks: usize,
        freq: &FrequencyVector,
        policy: SchedulePolicy,
        sigma_rng: &mut StreamRng,
        pi_rng: &mut StreamRng,
    ) -> Result<Self> {
        Ok(Self {
            sigma: build_block_permutation(num_blocks, policy, sigma_rng)?,
            pi: build_index_mapping(freq, policy, pi_rng),
        })
    }

    /// Whether `pi` hits every objective exactly `m_k` times.
    pub fn satisfies_multiplicity(&self, freq: &FrequencyVector) -> bool {
        let mut counts = vec![0usize; freq.num_objectives()];
        for &k in &self.pi {
            match counts.get_mut(k) {
                Some(c) => *c += 1,
                None => return false,
            }
        }
        counts == freq.counts()
    }
}

/// Sequence of length `p` over the objectives with multiplicities `m`.
pub fn build_index_mapping(
    freq: &FrequencyVector,
    policy: SchedulePolicy,
    rng: &mut StreamRng,
) -> Vec<usize> {
    let mut pi = Vec::with_capacity(freq.budget());
    for (k, &mk) in freq.counts().iter().enumerate() {
        pi.extend(std::iter::repeat_n(k, mk));
    }
    if policy == SchedulePolicy::ReshuffleEachCycle {
        pi.shuffle(rng);
    }
    pi
}

pub fn build_block_permutation(
    num_blocks: usize,
    policy: SchedulePolicy,
    rng: &mut StreamRng,
) -> Result<Vec<usize>> {
    if num_blocks == 0 {
        return Err(Error::dim("block permutation needs at least one block"));
    }
    let mut sigma: Vec<usize> = (0..num_blocks).collect();
    if policy == SchedulePolicy::ReshuffleEachCycle {
        sigma.shuffle(rng);
    }
    Ok(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use std::collections::HashMap;

    fn rng(seed: u64) -> StreamRng {
        stream(seed, 0, Purpose::IndexMapping)
    }

    #[test]
    fn contiguous_mapping() {
        let freq = FrequencyVector::new(vec![5, 15]).unwrap();
        let pi = build_index_mapping(&freq, SchedulePolicy::FixedContiguous, &mut rng(0));
        let mut expected = vec![0; 5];
        expected.extend(vec![1; 15]);
        assert_eq!(pi, expected);
    }

    #[test]
    fn zero_count_leaves_single_sequence() {
        let freq = FrequencyVector::new(vec![1, 0]).unwrap();
        for policy in [SchedulePolicy::FixedContiguous, SchedulePolicy::ReshuffleEachCycle] {
            assert_eq!(build_index_mapping(&freq, policy, &mut rng(3)), vec![0]);
        }
    }

    #[test]
    fn reshuffled_mappings_keep_counts() {
        let freq = FrequencyVector::new(vec![3, 2]).unwrap();
        let mut r = rng(11);
        let mut distinct = std::collections::HashSet::new();
        for _ in 0..1000 {
            let pi = build_index_mapping(&freq, SchedulePolicy::ReshuffleEachCycle, &mut r);
            assert_eq!(pi.iter().filter(|&&k| k == 0).count(), 3);
            assert_eq!(pi.iter().filter(|&&k| k == 1).count(), 2);
            distinct.insert(pi);
        }
        // C(5,2) arrangements of the multiset
        assert_eq!(distinct.len(), 10);
    }

    #[test]
    fn permutation_edge_cases() {
        assert_eq!(build_block_permutation(1, SchedulePolicy::ReshuffleEachCycle, &mut rng(0)).unwrap(), vec![0]);
        assert_eq!(
            build_block_permutation(4, SchedulePolicy::FixedContiguous, &mut rng(0)).unwrap(),
            vec![0, 1, 2, 3]
        );
        assert!(build_block_permutation(0, SchedulePolicy::FixedContiguous, &mut rng(0)).is_err());
    }

    #[test]
    fn reshuffled_permutations_are_uniform() {
        let mut r = stream(5, 0, Purpose::BlockPermutation);
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        let draws = 6000;
        for _ in 0..draws {
            let sigma = build_block_permutation(3, SchedulePolicy::ReshuffleEachCycle, &mut r).unwrap();
            *counts.entry(sigma).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        let mut chi_sq = 0.0;
        for &c in counts.values() {
            let freq = c as f64 / draws as f64;
            assert!((freq - 1.0 / 6.0).abs() < 0.03, "frequency {freq}");
            chi_sq += (c as f64 - 1000.0).powi(2) / 1000.0;
        }
        // 5 degrees of freedom, 99.9th percentile
        assert!(chi_sq < 20.52, "chi-square {chi_sq}");
    }

    #[test]
    fn schedule_draw_checks_multiplicity() {
        let freq = FrequencyVector::new(vec![0, 3, 1]).unwrap();
        let s = Schedule::draw(
            2,
            &freq,
            SchedulePolicy::ReshuffleEachCycle,
            &mut stream(1, 0, Purpose::BlockPermutation),
            &mut rng(1),
        )
        .unwrap();
        assert!(s.satisfies_multiplicity(&freq));
        let bad = Schedule { sigma: s.sigma.clone(), pi: vec![1, 1, 2, 2] };
        assert!(!bad.satisfies_multiplicity(&freq));
    }
}
