use nalgebra::{DMatrix, DVector};

use super::{DenseMatrix, ToleranceConfig};
use crate::error::{GinvError, Result};

/// Full singular-value decomposition `A = U Σ Vᵀ` together with the blocks
/// induced by the numerical rank `r`.
///
/// `U` is `m x m`, `V` is `n x n`; both are square orthogonal. The derived
/// blocks are stored rather than sliced on demand since every solver reads
/// them repeatedly.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    u: DMatrix<f64>,
    v: DMatrix<f64>,
    sigma: Vec<f64>,
    rank: usize,
    u1: DMatrix<f64>,
    u2: DMatrix<f64>,
    v1: DMatrix<f64>,
    v2: DMatrix<f64>,
    g: DMatrix<f64>,
}

impl SvdFactors {
    pub fn m(&self) -> usize {
        self.u.nrows()
    }

    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    /// First `r` columns of `U` (`m x r`).
    pub fn u1(&self) -> &DMatrix<f64> {
        &self.u1
    }

    /// Last `m - r` columns of `U`.
    pub fn u2(&self) -> &DMatrix<f64> {
        &self.u2
    }

    /// First `r` columns of `V` (`n x r`).
    pub fn v1(&self) -> &DMatrix<f64> {
        &self.v1
    }

    /// Last `n - r` columns of `V`.
    pub fn v2(&self) -> &DMatrix<f64> {
        &self.v2
    }

    /// `D`: the `r x r` diagonal of nonzero singular values.
    pub fn d(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.rank,
            self.sigma[..self.rank].iter().copied(),
        ))
    }

    /// `D⁻¹`.
    pub fn dinv(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.rank,
            self.sigma[..self.rank].iter().map(|s| 1.0 / s),
        ))
    }

    /// `G = V₁ D⁻¹ U₁ᵀ` (`n x m`), the pseudoinverse of `A`.
    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// `V₁ D⁻¹` (`n x r`): the fixed part of `V [D⁻¹; Z]`.
    pub fn v1_dinv(&self) -> DMatrix<f64> {
        let mut b = self.v1.clone();
        for (j, mut col) in b.column_iter_mut().enumerate() {
            col /= self.sigma[j];
        }
        b
    }

    /// `U Σ Vᵀ` rebuilt from the stored factors.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let (m, n) = (self.m(), self.n());
        let mut us = DMatrix::zeros(m, n);
        for j in 0..self.sigma.len() {
            us.set_column(j, &(self.u.column(j) * self.sigma[j]));
        }
        us * self.v.transpose()
    }
}

/// Full SVD with the numerical rank taken from `cfg.rank_cutoff`.
pub fn svd(a: &DenseMatrix, cfg: &ToleranceConfig) -> Result<SvdFactors> {
    cfg.validate()?;
    let (u, sigma, v) = full_svd(a)?;
    let cutoff = cfg.rank_cutoff(a.rows(), a.cols()) * sigma[0];
    let rank = sigma.iter().take_while(|&&s| s > cutoff).count();
    assemble(u, sigma, v, rank)
}

/// Full SVD with a caller-supplied rank (e.g. the known rank of a
/// generated instance).
pub fn svd_with_rank(a: &DenseMatrix, rank: usize) -> Result<SvdFactors> {
    let (u, sigma, v) = full_svd(a)?;
    if rank == 0 || rank > sigma.len() {
        return Err(GinvError::Rank(format!(
            "requested rank {rank} outside 1..={}",
            sigma.len()
        )));
    }
    if sigma[rank - 1] <= 0.0 {
        return Err(GinvError::Rank(format!(
            "singular value {} is zero; rank {rank} impossible",
            rank - 1
        )));
    }
    assemble(u, sigma, v, rank)
}

/// `A† = V Σ† Uᵀ`.
pub fn mp_pseudoinverse(f: &SvdFactors) -> DenseMatrix {
    DenseMatrix::wrap(f.g.clone())
}

type Triple = (DMatrix<f64>, Vec<f64>, DMatrix<f64>);

fn full_svd(a: &DenseMatrix) -> Result<Triple> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 || a.is_zero() {
        return Err(GinvError::ZeroMatrix);
    }
    let k = m.min(n);
    let (u_thin, sigma, v_thin) = if m >= n {
        tall_svd(a.as_matrix().clone())
    } else {
        let (u, s, v) = tall_svd(a.as_matrix().transpose());
        (v, s, u)
    };
    debug_assert_eq!(sigma.len(), k);

    let mut u = complete_basis(&u_thin);
    let mut v = complete_basis(&v_thin);
    normalize_signs(&mut u, &mut v, k);
    Ok((u, sigma, v))
}

/// Thin SVD of a `p x n` matrix with `p ≥ n`: a Householder QR followed by
/// one-sided Jacobi on the triangular factor.
///
/// Returns `U` with orthonormal columns for every singular value above
/// roundoff (the rest are left to `complete_basis`), the sorted singular
/// values and the square `V`.
fn tall_svd(a: DMatrix<f64>) -> Triple {
    let (p, n) = a.shape();
    let qr = a.qr();
    let (q, r) = (qr.q(), qr.r());
    let (w, v) = jacobi(r);

    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let floor = norms[order[0]] * f64::EPSILON * p as f64;
    let keep = order.iter().take_while(|&&j| norms[j] > floor).count();

    let uw = DMatrix::from_fn(n, keep, |i, c| w[(i, order[c])] / norms[order[c]]);
    let u = q * reorthonormalize(uw);
    let v = DMatrix::from_fn(n, n, |i, c| v[(i, order[c])]);
    let sigma = order.iter().map(|&j| norms[j]).collect();
    (u, sigma, v)
}

/// Nearest-in-sign orthonormal basis of the columns of `x`, which are
/// already orthonormal up to rounding.
fn reorthonormalize(x: DMatrix<f64>) -> DMatrix<f64> {
    if x.ncols() == 0 {
        return x;
    }
    let mut q = x.clone().qr().q();
    for j in 0..x.ncols() {
        if q.column(j).dot(&x.column(j)) < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// One-sided Jacobi: orthogonalizes the columns of `b` by plane rotations,
/// returning `B V` and the accumulated orthogonal `V`.
fn jacobi(mut b: DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (rows, n) = b.shape();
    let mut v = DMatrix::<f64>::identity(n, n);
    let tol = f64::EPSILON * rows as f64;
    for _sweep in 0..80 {
        let mut rotated = false;
        let mut sq: Vec<f64> = (0..n).map(|j| b.column(j).norm_squared()).collect();
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta) = (sq[p], sq[q]);
                let gamma = b.column(p).dot(&b.column(q));
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(b.as_mut_slice(), rows, p, q, c, s);
                rotate(v.as_mut_slice(), n, p, q, c, s);
                sq[p] = (alpha - t * gamma).max(0.0);
                sq[q] = beta + t * gamma;
            }
        }
        if !rotated {
            break;
        }
    }
    (b, v)
}

fn rotate(data: &mut [f64], rows: usize, p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = data.split_at_mut(q * rows);
    let cp = &mut head[p * rows..(p + 1) * rows];
    let cq = &mut tail[..rows];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

fn assemble(u: DMatrix<f64>, sigma: Vec<f64>, v: DMatrix<f64>, rank: usize) -> Result<SvdFactors> {
    if rank == 0 {
        return Err(GinvError::ZeroMatrix);
    }
    let (m, n) = (u.nrows(), v.nrows());
    let u1 = u.columns(0, rank).into_owned();
    let u2 = u.columns(rank, m - rank).into_owned();
    let v1 = v.columns(0, rank).into_owned();
    let v2 = v.columns(rank, n - rank).into_owned();
    let mut f = SvdFactors {
        u,
        v,
        sigma,
        rank,
        u1,
        u2,
        v1,
        v2,
        g: DMatrix::zeros(0, 0),
    };
    f.g = f.v1_dinv() * f.u1.transpose();
    Ok(f)
}

/// Extends an `m x k` matrix with orthonormal columns to an `m x m`
/// orthogonal matrix whose first `k` columns are the input.
fn complete_basis(q: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, k) = q.shape();
    if k >= m {
        return q.clone();
    }
    // Householder QR of q; the trailing columns of the full Q span the
    // orthogonal complement of range(q).
    let mut work = q.clone();
    let mut reflectors: Vec<DVector<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let x = work.view((j, j), (m - j, 1)).column(0).into_owned();
        let norm = x.norm();
        let mut v = x;
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vn = v.norm();
        if vn > 0.0 {
            v /= vn;
        }
        let mut block = work.view_mut((j, j), (m - j, k - j));
        let proj = v.transpose() * &block;
        block -= &v * proj * 2.0;
        reflectors.push(v);
    }
    let mut comp = DMatrix::zeros(m, m - k);
    for i in 0..m - k {
        comp[(k + i, i)] = 1.0;
    }
    for (j, v) in reflectors.iter().enumerate().rev() {
        let mut block = comp.view_mut((j, 0), (m - j, m - k));
        let proj = v.transpose() * &block;
        block -= v * proj * 2.0;
    }
    let mut out = DMatrix::zeros(m, m);
    out.columns_mut(0, k).copy_from(q);
    out.columns_mut(k, m - k).copy_from(&comp);
    out
}

/// Flips column signs so the largest-magnitude entry of each `V` column is
/// positive, carrying the paired `U` column along. Unpaired columns are
/// normalized on their own.
fn normalize_signs(u: &mut DMatrix<f64>, v: &mut DMatrix<f64>, k: usize) {
    fn leading_negative(col: nalgebra::DVectorView<'_, f64>) -> bool {
        let mut best = 0.0_f64;
        let mut sign_neg = false;
        for &x in col.iter() {
            if x.abs() > best {
                best = x.abs();
                sign_neg = x < 0.0;
            }
        }
        sign_neg
    }
    for j in 0..v.ncols() {
        if leading_negative(v.column(j)) {
            v.column_mut(j).neg_mut();
            if j < k {
                u.column_mut(j).neg_mut();
            }
        }
    }
    for j in k..u.ncols() {
        if leading_negative(u.column(j)) {
            u.column_mut(j).neg_mut();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::property_residuals;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn orth_err(q: &DMatrix<f64>) -> f64 {
        (q.transpose() * q - DMatrix::identity(q.ncols(), q.ncols())).norm()
    }

    #[test]
    fn identity_rank_two() {
        let f = svd(&DenseMatrix::identity(2), &ToleranceConfig::default()).unwrap();
        assert_eq!(f.sigma(), &[1.0, 1.0]);
        assert_eq!(f.rank(), 2);
        assert_eq!(f.u2().ncols(), 0);
        assert_eq!(f.v2().ncols(), 0);
    }

    #[test]
    fn diagonal_rank_one() {
        let a = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let f = svd(&a, &ToleranceConfig::default()).unwrap();
        assert_eq!(f.sigma(), &[2.0, 0.0]);
        assert_eq!(f.rank(), 1);
        assert_eq!(f.dinv()[(0, 0)], 0.5);
    }

    #[test]
    fn ones_two_by_two() {
        // AᵀA = 2·ones has eigenvalues 4 and 0, so σ = (2, 0).
        let a = DenseMatrix::filled(2, 2, 1.0).unwrap();
        let f = svd(&a, &ToleranceConfig::default()).unwrap();
        assert!((f.sigma()[0] - 2.0).abs() < 1e-14);
        assert!(f.sigma()[1].abs() < 1e-14);
        assert_eq!(f.rank(), 1);
        for x in f.g().iter() {
            assert!((x - 0.25).abs() < 1e-15);
        }
        assert!((f.reconstruct() - a.as_matrix()).norm() < 1e-14);
        // Sign convention: V column has a positive leading entry.
        assert!(f.v()[(0, 0)] > 0.0);
    }

    #[test]
    fn zero_matrix_rejected() {
        let z = DenseMatrix::zeros(3, 2);
        assert!(matches!(
            svd(&z, &ToleranceConfig::default()),
            Err(GinvError::ZeroMatrix)
        ));
    }

    #[test]
    fn rectangular_bases_are_complete() {
        for &(m, n) in &[(5, 3), (3, 5), (4, 4)] {
            let a = DMatrix::from_fn(m, n, |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.5);
            let a = DenseMatrix::from_nalgebra(a).unwrap();
            let f = svd(&a, &ToleranceConfig::default()).unwrap();
            assert_eq!(f.u().shape(), (m, m));
            assert_eq!(f.v().shape(), (n, n));
            assert!(orth_err(f.u()) < 1e-13);
            assert!(orth_err(f.v()) < 1e-13);
            assert!((f.reconstruct() - a.as_matrix()).norm() < 1e-12 * a.frobenius_norm());
            let cutoff = ToleranceConfig::default().rank_cutoff(m, n) * f.sigma()[0];
            assert!(f.sigma()[f.rank() - 1] > cutoff);
            if f.rank() < f.sigma().len() {
                assert!(f.sigma()[f.rank()] <= cutoff);
            }
        }
    }

    #[test]
    fn pseudoinverse_examples() {
        let a = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let p = mp_pseudoinverse(&svd(&a, &ToleranceConfig::default()).unwrap());
        assert_eq!(p.to_row_major(), vec![0.5, 0.0, 0.0, 0.0]);

        let ones = DenseMatrix::filled(2, 2, 1.0).unwrap();
        let p = mp_pseudoinverse(&svd(&ones, &ToleranceConfig::default()).unwrap());
        let r = property_residuals(&ones, &p).unwrap();
        assert!(r.max() < 1e-15);
    }

    #[test]
    fn large_rank_deficient_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = DMatrix::from_fn(1000, 250, |_, _| rng.gen_range(-1.0..1.0));
        let c = DMatrix::from_fn(250, 500, |_, _| rng.gen_range(-1.0..1.0));
        let a = DenseMatrix::from_nalgebra(b * c).unwrap();
        let f = svd(&a, &ToleranceConfig::default()).unwrap();
        assert_eq!(f.rank(), 250);
        assert!((f.reconstruct() - a.as_matrix()).amax() < 1e-10);
    }

    #[test]
    fn explicit_rank_override() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1e-20]]).unwrap();
        let f = svd(&a, &ToleranceConfig::default()).unwrap();
        assert_eq!(f.rank(), 1);
        let f2 = svd_with_rank(&a, 2).unwrap();
        assert_eq!(f2.rank(), 2);
        assert!(svd_with_rank(&a, 3).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn exact_low_rank_products(m in 1usize..14, n in 1usize..14, r in 1usize..6, seed in 0u64..1000) {
            let r = r.min(m).min(n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = DMatrix::from_fn(m, r, |_, _| rng.gen_range(-1.0..1.0));
            let c = DMatrix::from_fn(r, n, |_, _| rng.gen_range(-1.0..1.0));
            let a = DenseMatrix::from_nalgebra(b * c).unwrap();
            let f = svd(&a, &ToleranceConfig::default()).unwrap();
            let scale = a.frobenius_norm();
            prop_assert!((f.reconstruct() - a.as_matrix()).norm() <= 1e-12 * scale);
            prop_assert!(orth_err(f.u()) < 1e-12);
            prop_assert!(orth_err(f.v()) < 1e-12);
            prop_assert!(f.sigma().windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(f.rank() <= r);
        }
    }
}
