//! Central-difference oracle. Every gradient in the repo is validated against
//! this, so it must stay independent of the tape.

/// Central differences `(f(x + eps e_i) - f(x - eps e_i)) / 2 eps` per
/// coordinate.
pub fn finite_diff(mut f: impl FnMut(&[f64]) -> f64, at: &[f64], eps: f64) -> Vec<f64> {
    assert!(eps > 0.0, "finite_diff needs eps > 0");
    let mut point = at.to_vec();
    let mut grad = Vec::with_capacity(at.len());
    for i in 0..at.len() {
        point[i] = at[i] + eps;
        let hi = f(&point);
        point[i] = at[i] - eps;
        let lo = f(&point);
        point[i] = at[i];
        grad.push((hi - lo) / (2.0 * eps));
    }
    grad
}

/// `finite_diff` over several parameter blocks at once; the function sees the
/// blocks in the order given.
pub fn finite_diff_multi(
    mut f: impl FnMut(&[Vec<f64>]) -> f64,
    at: &[&[f64]],
    eps: f64,
) -> Vec<Vec<f64>> {
    assert!(eps > 0.0, "finite_diff needs eps > 0");
    let mut blocks: Vec<Vec<f64>> = at.iter().map(|b| b.to_vec()).collect();
    let mut grads = Vec::with_capacity(at.len());
    for b in 0..at.len() {
        let mut grad = Vec::with_capacity(at[b].len());
        for i in 0..at[b].len() {
            let orig = blocks[b][i];
            blocks[b][i] = orig + eps;
            let hi = f(&blocks);
            blocks[b][i] = orig - eps;
            let lo = f(&blocks);
            blocks[b][i] = orig;
            grad.push((hi - lo) / (2.0 * eps));
        }
        grads.push(grad);
    }
    grads
}

/// Max over coordinates of `|a - b| / max(|a|, |b|, 1e-6)`, skipping
/// coordinates where both magnitudes are below 1e-6.
pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "gradient length mismatch");
    a.iter()
        .zip(b)
        .filter(|(x, y)| x.abs() > 1e-6 || y.abs() > 1e-6)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_loss_has_zero_gradient() {
        let g = finite_diff(|_| 42.0, &[1.0, 2.0, 3.0], 1e-5);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bilinear_product_recovers_partners() {
        let g = finite_diff(|x| x[0] * x[1], &[2.0, 3.0], 1e-5);
        assert!((g[0] - 3.0).abs() < 1e-8);
        assert!((g[1] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn multi_block_matches_single_block() {
        let f_joint = |x: &[f64]| x[0] * x[0] + 2.0 * x[1] * x[2];
        let single = finite_diff(f_joint, &[1.0, 2.0, 3.0], 1e-6);
        let multi = finite_diff_multi(
            |b| b[0][0] * b[0][0] + 2.0 * b[1][0] * b[1][1],
            &[&[1.0], &[2.0, 3.0]],
            1e-6,
        );
        assert!((multi[0][0] - single[0]).abs() < 1e-9);
        assert!((multi[1][0] - single[1]).abs() < 1e-9);
        assert!((multi[1][1] - single[2]).abs() < 1e-9);
    }
}
