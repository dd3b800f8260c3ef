//! Process-wide cache of discretized operators and their eigensystems.
//!
//! Construction is deterministic in `(h, n)`, so sharing across sweeps is
//! safe; everything handed out is immutable behind an `Arc`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;

use crate::error::Result;
use crate::operator::{build_operator, eigen, DiscretizedOperator, EigenSystem};

pub struct OperatorWithEigen {
    pub op: DiscretizedOperator,
    pub eigs: EigenSystem,
}

static CACHE: Lazy<Mutex<HashMap<(u64, usize), Arc<OperatorWithEigen>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Build (or fetch) the operator and eigensystem for `(h, n)`.
pub fn operator_with_eigen(h: f64, n: usize) -> Result<Arc<OperatorWithEigen>> {
    let key = (h.to_bits(), n);
    if let Some(hit) = CACHE.lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let op = build_operator(h, n)?;
    let eigs = eigen(&op)?;
    let entry = Arc::new(OperatorWithEigen { op, eigs });
    CACHE.lock().unwrap().insert(key, entry.clone());
    Ok(entry)
}

/// Adopt a precomputed eigensystem (typically from a disk cache). It is
/// validated against a freshly built operator matrix; inconsistent data is
/// rejected so corrupt caches fall back to a clean rebuild.
pub fn adopt_eigensystem(h: f64, n: usize, eigs: EigenSystem) -> Result<Arc<OperatorWithEigen>> {
    use crate::error::Error;

    let key = (h.to_bits(), n);
    if let Some(hit) = CACHE.lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let op = build_operator(h, n)?;
    if eigs.eigenvalues.len() != n || eigs.eigenvectors.nrows() != n || eigs.eigenvectors.ncols() != n
    {
        return Err(Error::EigenFailure("cached eigensystem has wrong dimensions".into()));
    }
    let lambda1 = eigs.eigenvalues.first().cloned().unwrap_or(0.0);
    let trace: f64 = eigs.eigenvalues.iter().sum();
    if (trace - op.trace()).abs() > 1e-10 * op.trace().abs().max(1e-300) {
        return Err(Error::EigenFailure("cached eigensystem fails the trace check".into()));
    }
    for k in 0..n.min(8) {
        let v = eigs.eigenvectors.column(k);
        let r = &op.matrix * v - v * num_complex::Complex64::from(eigs.eigenvalues[k]);
        if r.norm() > 1e-10 * lambda1.max(f64::MIN_POSITIVE) {
            return Err(Error::EigenFailure(format!(
                "cached eigensystem residual {:.3e} on column {k}",
                r.norm()
            )));
        }
    }
    let entry = Arc::new(OperatorWithEigen { op, eigs });
    CACHE.lock().unwrap().insert(key, entry.clone());
    Ok(entry)
}
