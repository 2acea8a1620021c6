//! AVX-512 block for the `f32` weighted product.

#[cfg(all(target_arch = "x86_64", target_feature = "avx512f"))]
mod imp {
    use std::arch::x86_64::*;

    const LANES: usize = 16;
    /// Vectors per row of a panel: 64 columns.
    const VECS: usize = 4;
    const PANEL: usize = LANES * VECS;
    const ROWS: usize = 4;

    /// Covers the leading `(n_out / 4 * 4) x (d / 64 * 64)` block. The
    /// first row block of each 64-column panel reads `x` directly and packs
    /// the panel contiguously for the others; rows of `x` a page multiple
    /// apart would otherwise evict each other from L1. Output lines of the
    /// next panel are prefetched while the current one is computed.
    pub(crate) fn weighted_rows_f32(
        w: &[f32],
        n_out: usize,
        x: &[f32],
        n_in: usize,
        d: usize,
        out: &mut [f32],
    ) -> (usize, usize) {
        assert!(w.len() >= n_out * n_in && x.len() >= n_in * d && out.len() >= n_out * d);
        let rows = n_out / ROWS * ROWS;
        let cols = d / PANEL * PANEL;
        if rows == 0 || cols == 0 {
            return (0, 0);
        }
        let blocks = rows / ROWS;
        let mut packed = vec![0f32; n_in * PANEL];
        for c0 in (0..cols).step_by(PANEL) {
            let has_next = c0 + PANEL < cols;
            for b in 0..blocks {
                let p0 = b * ROWS;
                // SAFETY: the assert above bounds every row p0..p0+ROWS of
                // `w` and `out` and every row of `x` at columns
                // c0..c0+PANEL; `packed` holds n_in full panels.
                unsafe {
                    if has_next {
                        for r in 0..ROWS {
                            prefetch_panel_row(out.as_ptr().add((p0 + r) * d + c0 + PANEL));
                        }
                    }
                    let dst = out.as_mut_ptr().add(p0 * d + c0);
                    let wp = w.as_ptr().add(p0 * n_in);
                    if b == 0 {
                        block::<true>(wp, n_in, x.as_ptr().add(c0), d, packed.as_mut_ptr(), dst, d);
                    } else {
                        block::<false>(wp, n_in, packed.as_ptr(), PANEL, packed.as_mut_ptr(), dst, d);
                    }
                }
            }
        }
        (rows, cols)
    }

    #[inline(always)]
    unsafe fn prefetch_panel_row(p: *const f32) {
        for line in 0..PANEL / LANES {
            _mm_prefetch::<_MM_HINT_T0>(p.add(line * LANES) as *const i8);
        }
    }

    /// `ROWS x PANEL` outputs; `src` rows are `stride` apart. With `PACK`
    /// the loaded panel rows are also written to `packed`.
    #[inline(always)]
    unsafe fn block<const PACK: bool>(
        w: *const f32,
        n_in: usize,
        src: *const f32,
        stride: usize,
        packed: *mut f32,
        out: *mut f32,
        d: usize,
    ) {
        let mut acc = [[_mm512_setzero_ps(); VECS]; ROWS];
        for i in 0..n_in {
            let xp = src.add(i * stride);
            let xv = [
                _mm512_loadu_ps(xp),
                _mm512_loadu_ps(xp.add(LANES)),
                _mm512_loadu_ps(xp.add(2 * LANES)),
                _mm512_loadu_ps(xp.add(3 * LANES)),
            ];
            if PACK {
                let pp = packed.add(i * PANEL);
                for (v, xvv) in xv.iter().enumerate() {
                    _mm512_storeu_ps(pp.add(v * LANES), *xvv);
                }
            }
            for (r, acc_r) in acc.iter_mut().enumerate() {
                let wv = _mm512_set1_ps(*w.add(r * n_in + i));
                for v in 0..VECS {
                    acc_r[v] = _mm512_fmadd_ps(wv, xv[v], acc_r[v]);
                }
            }
        }
        for (r, acc_r) in acc.iter().enumerate() {
            for (v, a) in acc_r.iter().enumerate() {
                _mm512_storeu_ps(out.add(r * d + v * LANES), *a);
            }
        }
    }
}

#[cfg(all(target_arch = "x86_64", target_feature = "avx512f"))]
pub(crate) use imp::weighted_rows_f32;

#[cfg(not(all(target_arch = "x86_64", target_feature = "avx512f")))]
pub(crate) fn weighted_rows_f32(
    _w: &[f32],
    _n_out: usize,
    _x: &[f32],
    _n_in: usize,
    _d: usize,
    _out: &mut [f32],
) -> (usize, usize) {
    (0, 0)
}
