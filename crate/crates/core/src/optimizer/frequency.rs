use crate::error::{Error, Result};

/// Per-objective step counts within one inner cycle, with budget `p = Σ m_k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FrequencyVector {
    m: Vec<usize>,
    p: usize,
}

impl FrequencyVector {
    pub fn new(m: Vec<usize>) -> Result<Self> {
        let p = m.iter().sum();
        if p == 0 {
            return Err(Error::InvalidBudget);
        }
        Ok(Self { m, p })
    }

    /// Equal steps for every objective.
    pub fn uniform(q: usize, per_objective: usize) -> Result<Self> {
        Self::new(vec![per_objective; q])
    }

    pub fn counts(&self) -> &[usize] {
        &self.m
    }

    pub fn budget(&self) -> usize {
        self.p
    }

    pub fn num_objectives(&self) -> usize {
        self.m.len()
    }

    /// Weights `m_k / p` of the induced weighted-sum function.
    pub fn weights(&self) -> Vec<f64> {
        weighted_sum_weights(self)
    }
}

/// Checks raw (possibly negative) counts against an objective count `q`.
pub fn validate_frequency_vector(m: &[i64], q: usize) -> Result<FrequencyVector> {
    if m.len() != q {
        return Err(Error::dim(format!(
            "frequency vector has {} entries but the problem has {q} objectives",
            m.len()
        )));
    }
    let counts = m
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            usize::try_from(value).map_err(|_| Error::InvalidEntry { index, value })
        })
        .collect::<Result<Vec<_>>>()?;
    FrequencyVector::new(counts)
}

pub fn weighted_sum_weights(freq: &FrequencyVector) -> Vec<f64> {
    let p = freq.p as f64;
    freq.m.iter().map(|&mk| mk as f64 / p).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_is_sum_of_counts() {
        assert_eq!(validate_frequency_vector(&[5, 15], 2).unwrap().budget(), 20);
        assert_eq!(validate_frequency_vector(&[2; 5], 5).unwrap().budget(), 10);
    }

    #[test]
    fn error_paths() {
        assert!(matches!(validate_frequency_vector(&[0, 0], 2), Err(Error::InvalidBudget)));
        assert!(matches!(
            validate_frequency_vector(&[1, -2], 2),
            Err(Error::InvalidEntry { index: 1, value: -2 })
        ));
        assert!(matches!(validate_frequency_vector(&[1, 2, 3], 2), Err(Error::Dimension(_))));
    }

    #[test]
    fn weights_examples() {
        let w = weighted_sum_weights(&FrequencyVector::new(vec![5, 15]).unwrap());
        assert_eq!(w, vec![0.25, 0.75]);
        let w = weighted_sum_weights(&FrequencyVector::new(vec![1, 1, 1]).unwrap());
        assert!(w.iter().all(|&x| x == 1.0 / 3.0));
        let w = weighted_sum_weights(&FrequencyVector::new(vec![2; 5]).unwrap());
        assert!(w.iter().all(|&x| x == 0.2));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
