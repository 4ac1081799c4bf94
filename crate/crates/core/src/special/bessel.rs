/// `J_0(x) ..= J_mmax(x)` for `x >= 0`.
///
/// Ascending series below `x = 1`, Miller's backward recurrence normalised by
/// `J_0 + 2 sum J_2k = 1` above.
pub fn bessel_j_all(mmax: usize, x: f64) -> Vec<f64> {
    assert!(x >= 0.0 && x.is_finite(), "bessel_j needs finite x >= 0");
    if x == 0.0 {
        let mut out = vec![0.0; mmax + 1];
        out[0] = 1.0;
        return out;
    }
    if x < 1.0 {
        return (0..=mmax).map(|m| series(m, x)).collect();
    }
    let big = mmax.max(x as usize);
    let mut start = big + 20 + (40.0 * big as f64).sqrt() as usize;
    start += start % 2;
    let mut out = vec![0.0; mmax + 1];
    let (mut jp1, mut j) = (0.0, 1e-300);
    let mut norm = 0.0;
    for n in (1..=start).rev() {
        let jm1 = 2.0 * n as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        let idx = n - 1;
        if idx <= mmax {
            out[idx] = j;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            let s = 1e-250;
            j *= s;
            jp1 *= s;
            norm *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    norm += j;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

fn series(m: usize, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut term: f64 = (1..=m).fold(1.0, |t, i| t * h / i as f64);
    let mut sum = term;
    for k in 1..40 {
        term *= -h * h / (k as f64 * (k + m) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// Bessel function of the first kind `J_m(x)` for integer `m >= 0`.
pub fn bessel_j(m: usize, x: f64) -> f64 {
    bessel_j_all(m, x)[m]
}
