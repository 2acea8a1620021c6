//! Dense kernels behind the two augmentation methods.
//!
//! Arithmetic happens in the element type. Every output element is reduced
//! over input rows in ascending order with fused multiply-adds, so results
//! do not depend on tiling or on which code path produced them.

use std::ops::Range;

use crate::matrix::Element;

/// Columns per tile in the portable path.
const TILE: usize = 16;
/// Output rows handled together in the register-blocked inner loop.
const ROW_BLOCK: usize = 4;

/// `out = weights · x`, where `weights` is `n_out x n_in` and `x` is
/// `n_in x d`, both row-major.
pub(crate) fn weighted_rows_into<T: Element>(
    weights: &[f64],
    n_out: usize,
    x: &[T],
    n_in: usize,
    d: usize,
    out: &mut [T],
) {
    debug_assert_eq!(weights.len(), n_out * n_in);
    debug_assert_eq!(x.len(), n_in * d);
    debug_assert_eq!(out.len(), n_out * d);

    let w: Vec<T> = weights.iter().map(|&v| T::from_f64(v)).collect();
    let (rows, cols) = T::weighted_rows_simd(&w, n_out, x, n_in, d, out);
    region(&w, n_in, x, d, out, rows..n_out, 0..cols);
    region(&w, n_in, x, d, out, 0..n_out, cols..d);
}

/// Portable `out[rows, cols] = w[rows, :] · x[:, cols]`.
pub(crate) fn region<T: Element>(
    w: &[T],
    n_in: usize,
    x: &[T],
    d: usize,
    out: &mut [T],
    rows: Range<usize>,
    cols: Range<usize>,
) {
    let mut c0 = cols.start;
    while c0 < cols.end {
        let width = TILE.min(cols.end - c0);
        let mut p0 = rows.start;
        if width == TILE {
            while p0 + ROW_BLOCK <= rows.end {
                block_full(w, p0, n_in, x, d, c0, out);
                p0 += ROW_BLOCK;
            }
        }
        for p in p0..rows.end {
            let wr = &w[p * n_in..(p + 1) * n_in];
            let mut acc = [T::default(); TILE];
            for (i, &wi) in wr.iter().enumerate() {
                let xr = &x[i * d + c0..i * d + c0 + width];
                for (a, &xv) in acc.iter_mut().zip(xr) {
                    *a = wi.fmadd(xv, *a);
                }
            }
            out[p * d + c0..p * d + c0 + width].copy_from_slice(&acc[..width]);
        }
        c0 += width;
    }
}

#[inline(always)]
fn block_full<T: Element>(w: &[T], p0: usize, n_in: usize, x: &[T], d: usize, c0: usize, out: &mut [T]) {
    let mut acc = [[T::default(); TILE]; ROW_BLOCK];
    for i in 0..n_in {
        let xr: &[T; TILE] = x[i * d + c0..i * d + c0 + TILE].try_into().unwrap();
        for (r, acc_r) in acc.iter_mut().enumerate() {
            let wi = w[(p0 + r) * n_in + i];
            for c in 0..TILE {
                acc_r[c] = wi.fmadd(xr[c], acc_r[c]);
            }
        }
    }
    for (r, acc_r) in acc.iter().enumerate() {
        let base = (p0 + r) * d + c0;
        out[base..base + TILE].copy_from_slice(acc_r);
    }
}

/// `out[p] = λ·x[p] + (1-λ)·x[partner[p]]` row by row.
pub(crate) fn pair_rows_into<T: Element>(x: &[T], d: usize, partner: &[usize], lambda: f64, out: &mut [T]) {
    let (l, mu) = (T::from_f64(lambda), T::from_f64(1.0 - lambda));
    for (p, (&j, dst)) in partner.iter().zip(out.chunks_exact_mut(d)).enumerate() {
        let a = &x[p * d..(p + 1) * d];
        let b = &x[j * d..(j + 1) * d];
        for ((o, &av), &bv) in dst.iter_mut().zip(a).zip(b) {
            *o = l * av + mu * bv;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(w: &[f64], n_out: usize, x: &[f64], n_in: usize, d: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_out * d];
        for p in 0..n_out {
            for c in 0..d {
                out[p * d + c] = (0..n_in).map(|i| w[p * n_in + i] * x[i * d + c]).sum();
            }
        }
        out
    }

    #[test]
    fn matches_naive_product_on_ragged_shapes() {
        // shapes straddle both the tile width and the row block
        for &(n_out, n_in, d) in &[(1, 1, 1), (3, 5, 7), (4, 4, 16), (9, 6, 33), (32, 32, 50)] {
            let w: Vec<f64> = (0..n_out * n_in).map(|i| ((i * 7919) % 97) as f64 / 97.0).collect();
            let x: Vec<f64> = (0..n_in * d).map(|i| ((i * 104_729) % 211) as f64 - 105.0).collect();
            let mut out = vec![0.0; n_out * d];
            weighted_rows_into(&w, n_out, &x, n_in, d, &mut out);
            let want = naive(&w, n_out, &x, n_in, d);
            for (a, b) in out.iter().zip(&want) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn row_block_and_tail_paths_agree_bitwise() {
        // the same weight row placed in a full block and in the tail
        let n_in = 5;
        let d = 16;
        let row: Vec<f64> = vec![0.1, 0.2, 0.3, 0.15, 0.25];
        let w: Vec<f64> = row.iter().cycle().take(5 * n_in).copied().collect();
        let x: Vec<f64> = (0..n_in * d).map(|i| (i as f64).sin()).collect();
        let mut out = vec![0.0; 5 * d];
        weighted_rows_into(&w, 5, &x, n_in, d, &mut out);
        for p in 1..5 {
            assert_eq!(out[..d], out[p * d..(p + 1) * d]);
        }
    }

    #[test]
    fn f32_fast_path_matches_portable_bitwise() {
        // ragged in both rows and 64-column panels
        for &(n_out, n_in, d) in &[(32, 32, 200), (7, 5, 64), (9, 32, 130), (4, 3, 63)] {
            let wf: Vec<f64> = (0..n_out * n_in).map(|i| ((i * 31) % 17) as f64 / 170.0).collect();
            let x: Vec<f32> = (0..n_in * d).map(|i| ((i as f32) * 0.37).sin()).collect();
            let mut fast = vec![0f32; n_out * d];
            weighted_rows_into(&wf, n_out, &x, n_in, d, &mut fast);
            let w: Vec<f32> = wf.iter().map(|&v| v as f32).collect();
            let mut slow = vec![0f32; n_out * d];
            region(&w, n_in, &x, d, &mut slow, 0..n_out, 0..d);
            assert_eq!(fast, slow, "shape {n_out}x{n_in}x{d}");

            let xd: Vec<f64> = x.iter().map(|&v| v as f64).collect();
            let want = naive(&wf, n_out, &xd, n_in, d);
            for (a, b) in fast.iter().zip(&want) {
                assert!((*a as f64 - b).abs() <= 1e-5 * b.abs().max(1.0));
            }
        }
    }
}
