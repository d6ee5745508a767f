//! Rectangular sample lattices with lexicographic ordering.

/// One lattice node: its integer indices and coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub index: Vec<usize>,
    pub coords: Vec<f64>,
}

/// Nodes of the lattice spanning `[lo[k], hi[k]]` with `counts[k]` points per
/// axis, ordered lexicographically in the indices (last axis fastest).
///
/// An axis with a single point sits at the midpoint of its interval.
pub fn lattice(counts: &[usize], lo: &[f64], hi: &[f64]) -> Vec<Node> {
    assert_eq!(counts.len(), lo.len());
    assert_eq!(counts.len(), hi.len());
    if counts.is_empty() || counts.contains(&0) {
        return Vec::new();
    }
    let total: usize = counts.iter().product();
    let coord = |k: usize, i: usize| {
        if counts[k] == 1 {
            0.5 * (lo[k] + hi[k])
        } else {
            lo[k] + (hi[k] - lo[k]) * i as f64 / (counts[k] - 1) as f64
        }
    };
    (0..total)
        .map(|mut flat| {
            let mut index = vec![0; counts.len()];
            for k in (0..counts.len()).rev() {
                index[k] = flat % counts[k];
                flat /= counts[k];
            }
            let coords = index
                .iter()
                .enumerate()
                .map(|(k, &i)| coord(k, i))
                .collect();
            Node { index, coords }
        })
        .collect()
}
