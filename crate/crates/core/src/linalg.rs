//! Fixed-capacity dense helpers for the small matrices on the hot path.

use crate::jet::Real;

pub const CAP: usize = 4;

pub type Vec3<S> = [S; 3];
pub type Mat3<S> = [[S; 3]; 3];
pub type Mat4 = [[f64; CAP]; CAP];

#[inline]
pub fn quad<S: Real>(a: &Mat3<S>, v: &[f64], n: usize) -> S {
    let mut acc = S::cst(0.0);
    for i in 0..n {
        for j in 0..n {
            acc = acc + a[i][j].scale(v[i] * v[j]);
        }
    }
    acc
}

#[inline]
pub fn bilinear<S: Real>(a: &Mat3<S>, u: &[f64], w: &[f64], n: usize) -> S {
    let mut acc = S::cst(0.0);
    for i in 0..n {
        for j in 0..n {
            acc = acc + a[i][j].scale(u[i] * w[j]);
        }
    }
    acc
}

#[inline]
pub fn matvec<S: Real>(a: &Mat3<S>, v: &[f64], n: usize) -> Vec3<S> {
    let mut out = [S::cst(0.0); 3];
    for i in 0..n {
        for j in 0..n {
            out[i] = out[i] + a[i][j].scale(v[j]);
        }
    }
    out
}

#[inline]
pub fn pair<S: Real>(b: &Vec3<S>, v: &[f64], n: usize) -> S {
    let mut acc = S::cst(0.0);
    for i in 0..n {
        acc = acc + b[i].scale(v[i]);
    }
    acc
}

pub fn re_mat<S: Real>(a: &Mat3<S>) -> Mat3<f64> {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][j].re();
        }
    }
    out
}

/// Lower Cholesky factor of the leading `n x n` block, or `None` when the
/// block is not positive definite.
pub fn cholesky(a: &Mat3<f64>, n: usize) -> Option<Mat3<f64>> {
    let mut l = [[0.0; 3]; 3];
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        l[j][j] = d.sqrt();
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / l[j][j];
        }
    }
    Some(l)
}

/// Solves `a x = b` for the leading `n x n` block with partial pivoting.
pub fn solve(a: &Mat4, b: &[f64; CAP], n: usize) -> Option<[f64; CAP]> {
    let mut m = *a;
    let mut x = *b;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-300 {
            return None;
        }
        m.swap(c, p);
        x.swap(c, p);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
            x[r] -= f * x[c];
        }
    }
    for c in (0..n).rev() {
        let mut s = x[c];
        for k in c + 1..n {
            s -= m[c][k] * x[k];
        }
        x[c] = s / m[c][c];
    }
    Some(x)
}

pub fn inverse(a: &Mat4, n: usize) -> Option<Mat4> {
    let mut inv = [[0.0; CAP]; CAP];
    for c in 0..n {
        let mut e = [0.0; CAP];
        e[c] = 1.0;
        let col = solve(a, &e, n)?;
        for r in 0..n {
            inv[r][c] = col[r];
        }
    }
    Some(inv)
}

/// Solves with the leading block of a 3x3 matrix.
pub fn solve3(a: &Mat3<f64>, b: &[f64], n: usize) -> Option<[f64; 3]> {
    let mut m = [[0.0; CAP]; CAP];
    let mut r = [0.0; CAP];
    for i in 0..n {
        m[i][..n].copy_from_slice(&a[i][..n]);
        r[i] = b[i];
    }
    let x = solve(&m, &r, n)?;
    Some([x[0], x[1], x[2]])
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}
