//! Row-major matrix kernels. A matrix with `rows × cols` stores row `r` at
//! `w[r * cols .. (r + 1) * cols]`.

/// `out[r] = b[r] + Σ_c w[r, c] · x[c]`
#[inline]
pub(crate) fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    debug_assert_eq!(w.len(), b.len() * cols);
    for ((o, row), &bias) in out.iter_mut().zip(w.chunks_exact(cols)).zip(b) {
        *o = bias + dot(row, x);
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four independent accumulators let the compiler vectorise.
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let k = 4 * i;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// `dx[c] += Σ_r w[r, c] · dz[r]`
#[inline]
pub(crate) fn transpose_acc(w: &[f64], dz: &[f64], dx: &mut [f64]) {
    let cols = dx.len();
    for (row, &d) in w.chunks_exact(cols).zip(dz) {
        if d == 0.0 {
            continue;
        }
        for (o, &wv) in dx.iter_mut().zip(row) {
            *o += wv * d;
        }
    }
}

/// `dw[r, c] += dz[r] · x[c]`
#[inline]
pub(crate) fn outer_acc(dw: &mut [f64], dz: &[f64], x: &[f64]) {
    let cols = x.len();
    for (row, &d) in dw.chunks_exact_mut(cols).zip(dz) {
        if d == 0.0 {
            continue;
        }
        for (o, &xv) in row.iter_mut().zip(x) {
            *o += d * xv;
        }
    }
}

#[inline]
pub(crate) fn add_assign(acc: &mut [f64], x: &[f64]) {
    for (a, &v) in acc.iter_mut().zip(x) {
        *a += v;
    }
}
