use crate::optimizer::FrequencyVector;

/// All non-negative integer vectors of length `q` summing to `p`, in
/// lexicographic order. There are `C(p+q−1, q−1)` of them.
pub fn enumerate_frequency_vectors(q: usize, p: usize) -> Vec<FrequencyVector> {
    fn fill(prefix: &mut Vec<usize>, remaining: usize, slots: usize, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=remaining {
            prefix.push(first);
            fill(prefix, remaining - first, slots - 1, out);
            prefix.pop();
        }
    }
    if q == 0 || p == 0 {
        return Vec::new();
    }
    let mut raw = Vec::new();
    fill(&mut Vec::with_capacity(q), p, q, &mut raw);
    raw.into_iter()
        .map(|m| FrequencyVector::new(m).expect("entries sum to p > 0"))
        .collect()
}
