use nalgebra::DMatrix;

use crate::error::{GinvError, Result};

/// Column choices of a Householder QR with column pivoting. Stops after
/// `max_k` steps or once every remaining column norm is at most
/// `rel_cutoff` times the largest column norm of `m`.
pub(crate) fn pivot_prefix(m: &DMatrix<f64>, max_k: usize, rel_cutoff: f64) -> Vec<usize> {
    let (p, q) = m.shape();
    let max_k = max_k.min(p).min(q);
    let mut work = m.clone();
    let mut perm: Vec<usize> = (0..q).collect();
    let scale = (0..q).map(|j| m.column(j).norm()).fold(0.0, f64::max);
    for step in 0..max_k {
        let mut best = step;
        let mut best_norm = -1.0;
        for j in step..q {
            let nrm = work.view((step, j), (p - step, 1)).norm();
            if nrm > best_norm {
                best_norm = nrm;
                best = j;
            }
        }
        if best_norm <= rel_cutoff * scale {
            perm.truncate(step);
            return perm;
        }
        work.swap_columns(step, best);
        perm.swap(step, best);

        let mut v = work.view((step, step), (p - step, 1)).column(0).into_owned();
        let alpha = if v[0] >= 0.0 { -best_norm } else { best_norm };
        v[0] -= alpha;
        let vn = v.norm();
        if vn > 0.0 {
            v /= vn;
            let mut block = work.view_mut((step, step), (p - step, q - step));
            let proj = v.transpose() * &block;
            block -= &v * proj * 2.0;
        }
    }
    perm.truncate(max_k);
    perm
}

/// Exactly `k` pivot columns, or a rank error if fewer are certified.
pub(crate) fn pivot_columns(m: &DMatrix<f64>, k: usize, rel_cutoff: f64) -> Result<Vec<usize>> {
    let cols = pivot_prefix(m, k, rel_cutoff);
    if cols.len() < k {
        return Err(GinvError::Rank(format!(
            "only {} of {k} independent columns could be certified in a {}x{} matrix",
            cols.len(),
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(cols)
}
