//! Dense symmetric eigensolver (Householder tridiagonalization followed by a
//! divide-and-conquer / implicit QR tridiagonal solve, via `faer`).

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::Mat;

use crate::error::{ChaosError, Result};
use crate::exec::Exec;

/// Ascending eigenvalues and, optionally, the matching orthonormal eigenvectors
/// as columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Option<Mat<f64>>,
}

/// Rejects matrices that are not exactly symmetric or contain non-finite entries.
pub fn check_symmetric(m: &Mat<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(crate::error::invalid("matrix", "not square"));
    }
    for c in 0..m.ncols() {
        for r in c..m.nrows() {
            let v = m[(r, c)];
            if !v.is_finite() {
                return Err(crate::error::invalid("matrix", format!("non-finite entry at ({r}, {c})")));
            }
            if v != m[(c, r)] {
                return Err(ChaosError::NotSymmetric { row: r, col: c });
            }
        }
    }
    Ok(())
}

pub fn diagonalize(m: &Mat<f64>, vectors: bool, exec: Exec) -> Result<Eigen> {
    check_symmetric(m)?;
    let n = m.nrows();
    let par = exec.faer_par();
    let compute = if vectors { ComputeEigenvectors::Yes } else { ComputeEigenvectors::No };
    let mut s = faer::diag::Diag::<f64>::zeros(n);
    let mut u = if vectors { Some(Mat::<f64>::zeros(n, n)) } else { None };
    let mut buf = MemBuffer::new(evd::self_adjoint_evd_scratch::<f64>(n, compute, par, Default::default()));
    evd::self_adjoint_evd(
        m.as_ref(),
        s.as_mut(),
        u.as_mut().map(|u| u.as_mut()),
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|_| ChaosError::EigenFailure)?;
    let values: Vec<f64> = (0..n).map(|i| s[i]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(ChaosError::EigenFailure);
    }
    Ok(Eigen { values, vectors: u })
}
