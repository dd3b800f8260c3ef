//! Optional on-disk cache for operator eigendecompositions, keyed by
//! `(h, n)`. Enabled by setting `PERMEX_CACHE_DIR`. The layout is
//! implementation-defined with a versioned magic header; stale or corrupt
//! files are ignored and rebuilt.

use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::sync::Arc;

use permex_core::cache::{adopt_eigensystem, operator_with_eigen, OperatorWithEigen};
use permex_core::operator::EigenSystem;

const MAGIC: &[u8; 8] = b"PMXOP001";

fn cache_path(h: f64, n: usize) -> Option<PathBuf> {
    let dir = std::env::var_os("PERMEX_CACHE_DIR")?;
    Some(PathBuf::from(dir).join(format!("op-{:016x}-{n}.bin", h.to_bits())))
}

fn read_cache(h: f64, n: usize) -> Option<EigenSystem> {
    let path = cache_path(h, n)?;
    let mut buf = Vec::new();
    fs::File::open(path).ok()?.read_to_end(&mut buf).ok()?;
    let need = 8 + 8 + 8 + 8 * n + 16 * n * n;
    if buf.len() != need || &buf[..8] != MAGIC {
        return None;
    }
    let rd_f64 = |off: usize| f64::from_le_bytes(buf[off..off + 8].try_into().unwrap());
    if rd_f64(8) != h || rd_f64(16) as usize != n {
        return None;
    }
    let mut off = 24;
    let mut eigenvalues = Vec::with_capacity(n);
    for _ in 0..n {
        eigenvalues.push(rd_f64(off));
        off += 8;
    }
    let mut eigenvectors = nalgebra_matrix(n);
    for c in 0..n {
        for r in 0..n {
            let re = rd_f64(off);
            let im = rd_f64(off + 8);
            off += 16;
            eigenvectors[(r, c)] = num_complex::Complex64::new(re, im);
        }
    }
    Some(EigenSystem { eigenvalues, eigenvectors })
}

fn nalgebra_matrix(n: usize) -> nalgebra::DMatrix<num_complex::Complex64> {
    nalgebra::DMatrix::zeros(n, n)
}

fn write_cache(h: f64, n: usize, eigs: &EigenSystem) {
    let Some(path) = cache_path(h, n) else { return };
    if let Some(parent) = path.parent() {
        let _ = fs::create_dir_all(parent);
    }
    let mut buf = Vec::with_capacity(8 + 16 + 8 * n + 16 * n * n);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&h.to_le_bytes());
    buf.extend_from_slice(&(n as f64).to_le_bytes());
    for &l in &eigs.eigenvalues {
        buf.extend_from_slice(&l.to_le_bytes());
    }
    for c in 0..n {
        for r in 0..n {
            let z = eigs.eigenvectors[(r, c)];
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    if let Ok(mut f) = fs::File::create(&path) {
        let _ = f.write_all(&buf);
    }
}

/// Operator + eigensystem, going through the disk cache when enabled.
pub fn operator(h: f64, n: usize) -> permex_core::Result<Arc<OperatorWithEigen>> {
    if let Some(eigs) = read_cache(h, n) {
        if let Ok(ent) = adopt_eigensystem(h, n, eigs) {
            return Ok(ent);
        }
    }
    let ent = operator_with_eigen(h, n)?;
    write_cache(h, n, &ent.eigs);
    Ok(ent)
}
