//! Small numeric helpers shared across modules.

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub(crate) fn golden_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64, max_iter: usize) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (a, b);
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if (b - a).abs() < tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Minimum of `f` over a log-spaced grid on `[lo, hi]`, polished by a
/// golden-section pass around the best sample.
pub(crate) fn log_grid_min<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let la = lo.ln();
    let lb = hi.ln();
    let mut best = (lo, f(lo));
    for i in 0..=n {
        let x = (la + (lb - la) * i as f64 / n as f64).exp();
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let span = (lb - la) / n as f64;
    let a = (best.0.ln() - span).max(la).exp();
    let b = (best.0.ln() + span).min(lb).exp();
    let (x, v) = golden_min(|t| f(t.exp()), a.ln(), b.ln(), 1e-12, 200);
    let (x, v) = (x.exp(), v);
    if v < best.1 {
        (x, v)
    } else {
        best
    }
}
