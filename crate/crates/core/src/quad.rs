//! Adaptive Simpson quadrature.

const MAX_DEPTH: u32 = 48;

/// `∫_a^b f` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    adaptive_simpson_vec(|x| [f(x)], a, b, tol)[0]
}

/// Component-wise `∫_a^b f` for vector-valued integrands, refining until the
/// largest component error estimate is below `tol`.
pub fn adaptive_simpson_vec<const N: usize>(
    f: impl Fn(f64) -> [f64; N],
    a: f64,
    b: f64,
    tol: f64,
) -> [f64; N] {
    if a == b {
        return [0.0; N];
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, &fa, &fm, &fb);
    recurse(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

fn simpson<const N: usize>(a: f64, b: f64, fa: &[f64; N], fm: &[f64; N], fb: &[f64; N]) -> [f64; N] {
    let w = (b - a) / 6.0;
    std::array::from_fn(|k| w * (fa[k] + 4.0 * fm[k] + fb[k]))
}

#[allow(clippy::too_many_arguments)]
fn recurse<const N: usize>(
    f: &impl Fn(f64) -> [f64; N],
    a: f64,
    b: f64,
    fa: [f64; N],
    fm: [f64; N],
    fb: [f64; N],
    whole: [f64; N],
    tol: f64,
    depth: u32,
) -> [f64; N] {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, &fa, &flm, &fm);
    let right = simpson(m, b, &fm, &frm, &fb);
    let err = (0..N)
        .map(|k| (left[k] + right[k] - whole[k]).abs())
        .fold(0.0, f64::max);
    if depth == 0 || err <= 15.0 * tol {
        return std::array::from_fn(|k| {
            let s = left[k] + right[k];
            s + (s - whole[k]) / 15.0
        });
    }
    let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1);
    let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    std::array::from_fn(|k| l[k] + r[k])
}
