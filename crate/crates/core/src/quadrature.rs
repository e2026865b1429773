//! Quadrature and root-finding helpers.

/// Trapezoid weights on `n_cells + 1` uniform nodes.
pub fn trapezoid_weights(n_cells: usize, dx: f64) -> Vec<f64> {
    let mut w = vec![dx; n_cells + 1];
    w[0] = 0.5 * dx;
    w[n_cells] = 0.5 * dx;
    w
}

/// Composite trapezoid rule over uniform nodes.
pub fn trapz(values: &[f64], dx: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            dx * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Trapezoid rule of `f(x_j)` over uniform nodes without allocating.
pub fn trapz_by<F: FnMut(usize) -> f64>(n_nodes: usize, dx: f64, mut f: F) -> f64 {
    if n_nodes < 2 {
        return 0.0;
    }
    let mut acc = 0.5 * (f(0) + f(n_nodes - 1));
    for j in 1..n_nodes - 1 {
        acc += f(j);
    }
    acc * dx
}

/// Trapezoid rule over arbitrary (sorted) abscissae.
pub fn trapz_nonuniform(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2)
        .zip(y.windows(2))
        .map(|(tw, yw)| 0.5 * (tw[1] - tw[0]) * (yw[0] + yw[1]))
        .sum()
}

const GL8_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Eight-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre8<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for k in 0..4 {
        acc += GL8_W[k] * (f(c - h * GL8_X[k]) + f(c + h * GL8_X[k]));
    }
    acc * h
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(&mut f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Bisection on a bracket with a sign change. Returns `None` when the
/// bracket is invalid or a function value is non-finite.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    max_iter: usize,
) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if !flo.is_finite() || !fhi.is_finite() {
        return None;
    }
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if !fm.is_finite() {
            return None;
        }
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapz_exact_for_linear() {
        let n = 10;
        let dx = 0.1;
        let v: Vec<f64> = (0..=n).map(|j| 2.0 * j as f64 * dx + 1.0).collect();
        assert!((trapz(&v, dx) - 2.0).abs() < 1e-14);
        let w = trapezoid_weights(n, dx);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_exact_for_degree_15() {
        let v = gauss_legendre8(|x| x.powi(15) + x.powi(2), 0.0, 1.0);
        assert!((v - (1.0 / 16.0 + 1.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn simpson_handles_sqrt() {
        let v = adaptive_simpson(|x: f64| x.sqrt(), 0.0, 1.0, 1e-12);
        assert!((v - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn bisect_finds_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 200).is_none());
    }
}
