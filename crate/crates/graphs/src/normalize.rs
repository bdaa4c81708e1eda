use ndarray::Array2;

/// Symmetric degree normalization with self-loops: returns
/// `D^{-1/2} (A + I) D^{-1/2}` where `D` is the diagonal degree matrix of
/// `A + I`. Input must be square and entrywise nonnegative; the self-loop
/// makes every degree strictly positive.
pub fn normalize_adjacency(a: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "adjacency must be square");
    let mut tilde = a.clone();
    for i in 0..n {
        tilde[(i, i)] += 1.0;
    }
    let d_inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let deg: f64 = tilde.row(i).sum();
            1.0 / deg.sqrt()
        })
        .collect();
    for i in 0..n {
        for j in 0..n {
            tilde[(i, j)] *= d_inv_sqrt[i] * d_inv_sqrt[j];
        }
    }
    tilde
}
