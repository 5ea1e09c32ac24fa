//! Independent eigenvalue oracle for small symmetric matrices.
//!
//! The characteristic polynomial is built from power sums via Newton's
//! identities (exact in f64 for small integer matrices), and its roots are
//! isolated by recursive bisection between the critical points of the
//! derivative. Symmetric input guarantees every root is real, which the
//! recursion relies on. Nothing here touches the Jacobi solver under test.

use clusternet_core::DenseMatrix;

/// Monic characteristic polynomial det(lambda I - A), coefficients ascending:
/// c[0] + c[1] x + ... + c[n] x^n with c[n] = 1.
pub fn char_poly(a: &DenseMatrix) -> Vec<f64> {
    assert!(a.is_square());
    let n = a.rows();
    // Power sums p_k = tr(A^k), k = 1..n.
    let mut power = DenseMatrix::identity(n);
    let mut p = vec![0.0; n + 1];
    for pk in p.iter_mut().skip(1) {
        power = power.matmul(a).unwrap();
        *pk = power.trace();
    }
    // Newton's identities: k e_k = sum_{i=1..k} (-1)^{i-1} e_{k-i} p_i.
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for k in 1..=n {
        let mut acc = 0.0;
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[k - i] * p[i];
        }
        e[k] = acc / k as f64;
    }
    // det(xI - A) = sum_k (-1)^k e_k x^{n-k}.
    let mut coeffs = vec![0.0; n + 1];
    for k in 0..=n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        coeffs[n - k] = sign * e[k];
    }
    coeffs
}

fn eval(poly: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for &c in poly.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Magnitude scale of the polynomial at x, for zero tests.
fn eval_scale(poly: &[f64], x: f64) -> f64 {
    let mut acc = 1.0;
    let mut xp = 1.0;
    for &c in poly {
        acc += c.abs() * xp;
        xp *= x.abs().max(1.0);
    }
    acc
}

fn derivative(poly: &[f64]) -> Vec<f64> {
    poly.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

fn bisect(poly: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = eval(poly, lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = eval(poly, mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_lo < 0.0) == (f_mid < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All real roots with multiplicity, ascending. Correct only for polynomials
/// whose roots are all real (characteristic polynomials of symmetric
/// matrices). Panics if the bookkeeping cannot account for every root; that
/// means the oracle itself is broken and the caller must not trust it.
pub fn real_roots_all_real(poly: &[f64]) -> Vec<f64> {
    let deg = poly.len() - 1;
    assert!(poly[deg] != 0.0, "leading coefficient must be nonzero");
    if deg == 0 {
        return Vec::new();
    }
    if deg == 1 {
        return vec![-poly[0] / poly[1]];
    }

    let critical = real_roots_all_real(&derivative(poly));

    // Cauchy bound on root magnitude.
    let bound = 1.0
        + poly[..deg]
            .iter()
            .map(|c| (c / poly[deg]).abs())
            .fold(0.0, f64::max);

    // Group equal critical points, keeping multiplicities.
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for &c in &critical {
        match groups.last_mut() {
            Some((v, m)) if (c - *v).abs() <= 1e-9 * v.abs().max(1.0) => *m += 1,
            _ => groups.push((c, 1)),
        }
    }

    let near_zero = |x: f64| eval(poly, x).abs() <= 1e-13 * eval_scale(poly, x);

    // Between consecutive critical points the polynomial is monotonic, so a
    // sign change isolates exactly one simple root.
    let mut breakpoints = vec![-bound];
    breakpoints.extend(groups.iter().map(|&(c, _)| c));
    breakpoints.push(bound);
    let mut roots: Vec<f64> = Vec::new();
    for w in breakpoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a || near_zero(a) || near_zero(b) {
            continue;
        }
        if (eval(poly, a) < 0.0) != (eval(poly, b) < 0.0) {
            roots.push(bisect(poly, a, b));
        }
    }

    // Remaining roots sit at critical points where the polynomial vanishes:
    // a critical point of multiplicity m in p' is a root of multiplicity
    // m + 1 of p.
    let mut missing = deg - roots.len();
    if missing > 0 {
        let mut candidates: Vec<(f64, usize)> =
            groups.into_iter().filter(|&(c, _)| near_zero(c)).collect();
        candidates.sort_by(|x, y| {
            let px = eval(poly, x.0).abs() / eval_scale(poly, x.0);
            let py = eval(poly, y.0).abs() / eval_scale(poly, y.0);
            px.total_cmp(&py)
        });
        for (c, m) in candidates {
            if missing == 0 {
                break;
            }
            let take = (m + 1).min(missing);
            roots.extend(std::iter::repeat_n(c, take));
            missing -= take;
        }
    }

    assert_eq!(
        roots.len(),
        deg,
        "oracle failed to account for every root of {poly:?}: found {roots:?}"
    );
    roots.sort_by(f64::total_cmp);
    roots
}

/// Eigenvalues of a symmetric matrix by the characteristic-polynomial route.
pub fn eigenvalues(a: &DenseMatrix) -> Vec<f64> {
    real_roots_all_real(&char_poly(a))
}
