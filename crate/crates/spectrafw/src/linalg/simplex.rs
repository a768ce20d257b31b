//! Euclidean projection onto the probability simplex
//! `{ x : x_i >= 0, sum_i x_i = 1 }` by the classic sort-and-threshold rule:
//! sort descending, find the largest support for which the common shift
//! keeps every kept entry positive, clamp the rest to zero.

/// Projects `w` onto the probability simplex, returning the closest point in
/// Euclidean distance. O(n log n) from the sort.
pub fn project_to_simplex(w: &[f64]) -> Vec<f64> {
    assert!(!w.is_empty(), "cannot project an empty vector");
    let mut sorted: Vec<f64> = w.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let candidate = (1.0 - cumsum) / (j + 1) as f64;
        if v + candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    w.iter().map(|&v| (v + theta).max(0.0)).collect()
}
