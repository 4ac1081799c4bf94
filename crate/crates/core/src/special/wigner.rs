//! Wigner small-d matrices.
//!
//! Convention: `d^l_{m'm}(b) = <l m'| exp(-i b J_y) |l m>`, which makes
//! `Y_lm(R^T w) = sum_{m'} e^{-i m' phi} d^l_{m'm}(theta) Y_{lm'}(w)` for `R = Rz(phi) Ry(theta)`.
//! Entries come from the three-term recurrence in `l` at fixed `(m', m)`, seeded with
//! the closed forms at `l = max(|m'|, |m|)`.

/// Entries `d^l_{a n}` for `l <= lmax`, all `|a| <= l` and `|n| <= min(l, ncol)`.
#[derive(Clone, Debug)]
pub struct WignerTable {
    lmax: usize,
    ncol: usize,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut b = 1.0;
    for i in 0..k {
        b = b * (n - i) as f64 / (i + 1) as f64;
    }
    b
}

/// Closed form at the seed degree `j = max(|a|, |n|)`.
fn seed(j: usize, a: i32, n: i32, beta: f64) -> f64 {
    let ji = j as i32;
    let (s, c) = (0.5 * beta).sin_cos();
    if a.abs() == ji {
        let b = binomial(2 * j, (ji + n) as usize).sqrt();
        if a == ji {
            b * c.powi(ji + n) * (-s).powi(ji - n)
        } else {
            b * c.powi(ji - n) * s.powi(ji + n)
        }
    } else {
        let sign = if (a - n).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        sign * seed(j, n, a, beta)
    }
}

impl WignerTable {
    pub fn new(lmax: usize, ncol: usize, beta: f64) -> Self {
        let mut offsets = Vec::with_capacity(lmax + 2);
        let mut total = 0;
        for l in 0..=lmax {
            offsets.push(total);
            total += (2 * l + 1) * (2 * l.min(ncol) + 1);
        }
        offsets.push(total);
        let mut table = WignerTable { lmax, ncol, offsets, data: vec![0.0; total] };
        let cb = beta.cos();
        let li = lmax as i32;
        let ni = ncol.min(lmax) as i32;
        for a in -li..=li {
            for n in -ni..=ni {
                let j0 = a.unsigned_abs().max(n.unsigned_abs()) as usize;
                if j0 == 0 {
                    // d^l_00 is the Legendre polynomial.
                    let (mut p0, mut p1) = (1.0, cb);
                    table.set(0, 0, 0, 1.0);
                    if lmax >= 1 {
                        table.set(1, 0, 0, cb);
                    }
                    for j in 1..lmax {
                        let p2 = ((2 * j + 1) as f64 * cb * p1 - j as f64 * p0) / (j + 1) as f64;
                        table.set(j + 1, 0, 0, p2);
                        p0 = p1;
                        p1 = p2;
                    }
                    continue;
                }
                let (af, nf) = (a as f64, n as f64);
                let mut prev = 0.0;
                let mut cur = seed(j0, a, n, beta);
                table.set(j0, a, n, cur);
                for j in j0..lmax {
                    let jf = j as f64;
                    let j1 = jf + 1.0;
                    let t = j1 * (2.0 * jf + 1.0) / ((j1 * j1 - af * af) * (j1 * j1 - nf * nf)).sqrt();
                    let back = ((jf * jf - af * af) * (jf * jf - nf * nf)).max(0.0).sqrt() / (jf * (2.0 * jf + 1.0));
                    let next = t * ((cb - af * nf / (jf * j1)) * cur - back * prev);
                    table.set(j + 1, a, n, next);
                    prev = cur;
                    cur = next;
                }
            }
        }
        table
    }

    fn index(&self, l: usize, a: i32, n: i32) -> usize {
        let w = 2 * l.min(self.ncol) + 1;
        let row = (a + l as i32) as usize;
        let col = (n + l.min(self.ncol) as i32) as usize;
        self.offsets[l] + row * w + col
    }

    fn set(&mut self, l: usize, a: i32, n: i32, v: f64) {
        let i = self.index(l, a, n);
        self.data[i] = v;
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    /// `d^l_{a n}`; requires `|n| <= min(l, ncol)`.
    pub fn get(&self, l: usize, a: i32, n: i32) -> f64 {
        debug_assert!(a.unsigned_abs() as usize <= l && n.unsigned_abs() as usize <= l.min(self.ncol));
        self.data[self.index(l, a, n)]
    }

    /// `d^l_{n a}` through the symmetry `d_{n a} = (-1)^{n-a} d_{a n}`.
    pub fn get_transposed(&self, l: usize, n: i32, a: i32) -> f64 {
        let v = self.get(l, a, n);
        if (n - a).rem_euclid(2) == 0 {
            v
        } else {
            -v
        }
    }
}

/// Full matrix `d^l_{m'm}(theta)` stored at `[m' + l][m + l]`.
pub fn wigner_d(l: usize, theta: f64) -> Vec<Vec<f64>> {
    let t = WignerTable::new(l, l, theta);
    let li = l as i32;
    (-li..=li).map(|mp| (-li..=li).map(|m| t.get(l, mp, m)).collect()).collect()
}
