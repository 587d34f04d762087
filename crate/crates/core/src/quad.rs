//! Adaptive Simpson quadrature for the analytic engine's non-closed-form
//! segment integrals.

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (left, ml, fml) = simpson(f, a, fa, m, fm);
    let (right, mr, fmr) = simpson(f, m, fm, b, fb);
    let err = left + right - whole;
    // a non-finite estimate (overflowing integrand) cannot be refined away
    if !err.is_finite() {
        return left + right;
    }
    // the absolute tolerance gets a machine-precision relative floor so
    // huge-magnitude integrals still terminate
    let tol_eff = tol.max(1e-14 * (left.abs() + right.abs()));
    if err.abs() <= 15.0 * tol_eff || depth == 0 {
        left + right + err / 15.0
    } else {
        let half = 0.5 * tol;
        recurse(f, a, fa, m, fm, ml, fml, left, half, depth - 1)
            + recurse(f, m, fm, b, fb, mr, fmr, right, half, depth - 1)
    }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`. Handles
/// reversed bounds by sign flip.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if a > b {
        return -adaptive_simpson(f, b, a, tol);
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(&f, a, fa, b, fb);
    recurse(&f, a, fa, b, fb, m, fm, whole, tol, 48)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_near_exact() {
        let q = adaptive_simpson(|x| x * x, 0.0, 1.0, 1e-12);
        assert!((q - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_matches_closed_form() {
        let q = adaptive_simpson(|x| (-2.0 * x).exp(), 0.0, 3.0, 1e-12);
        let exact = (1.0 - (-6.0f64).exp()) / 2.0;
        assert!((q - exact).abs() < 1e-11);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let fwd = adaptive_simpson(|x| x.exp(), 0.0, 1.0, 1e-12);
        let bwd = adaptive_simpson(|x| x.exp(), 1.0, 0.0, 1e-12);
        assert_eq!(fwd, -bwd);
    }
}
