//! Dense SVD and pseudoinverse helpers.

use faer::Mat;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Thin SVD `M = U diag(s) Vᵀ` with `s` nonincreasing.
#[derive(Clone, Debug)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn thin_svd(m: &DMatrix<f64>) -> Result<ThinSvd> {
    let (nr, nc) = m.shape();
    if nr == 0 || nc == 0 {
        return Ok(ThinSvd {
            u: DMatrix::zeros(nr, 0),
            s: Vec::new(),
            v: DMatrix::zeros(nc, 0),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("SVD of a matrix with non-finite entries".into()));
    }
    let fm = Mat::<f64>::from_fn(nr, nc, |i, j| m[(i, j)]);
    let svd = fm
        .thin_svd()
        .map_err(|e| Error::InvalidArgument(format!("SVD did not converge: {e:?}")))?;
    let k = nr.min(nc);
    let (fu, fv, fs) = (svd.U(), svd.V(), svd.S().column_vector());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| fs[b].total_cmp(&fs[a]));
    Ok(ThinSvd {
        u: DMatrix::from_fn(nr, k, |i, j| fu[(i, order[j])]),
        s: order.iter().map(|&j| fs[j]).collect(),
        v: DMatrix::from_fn(nc, k, |i, j| fv[(i, order[j])]),
    })
}

/// Pseudoinverse discarding singular values below `rel_tol·σ_max`.
pub fn pinv(m: &DMatrix<f64>, rel_tol: f64) -> Result<DMatrix<f64>> {
    let svd = thin_svd(m)?;
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    if smax == 0.0 {
        return Ok(out);
    }
    for (k, &s) in svd.s.iter().enumerate() {
        if s >= rel_tol * smax {
            out += (svd.v.column(k) / s) * svd.u.column(k).transpose();
        }
    }
    Ok(out)
}
