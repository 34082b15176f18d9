//! 3x3 same-padded convolution on `[channels][rows][cols]` feature maps via im2col + GEMM.
//!
//! Weights are `[cout][cin * 9]` with the 3x3 taps row-major inside each input channel.

use alloc::vec::Vec;

use super::scalar::{gemm, Mat, Scalar};

fn im2col<T: Scalar>(x: &[T], cin: usize, h: usize, w: usize, cols: &mut Vec<T>) {
    let hw = h * w;
    cols.clear();
    cols.resize(cin * 9 * hw, T::zero());
    for ci in 0..cin {
        let plane = &x[ci * hw..(ci + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut cols[((ci * 9) + ky * 3 + kx) * hw..][..hw];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let src = &plane[sy as usize * w..][..w];
                    let dst = &mut row[y * w..][..w];
                    match kx {
                        0 => dst[1..].copy_from_slice(&src[..w - 1]),
                        1 => dst.copy_from_slice(src),
                        _ => dst[..w - 1].copy_from_slice(&src[1..]),
                    }
                }
            }
        }
    }
}

fn col2im<T: Scalar>(cols: &[T], cin: usize, h: usize, w: usize, dx: &mut [T]) {
    let hw = h * w;
    for ci in 0..cin {
        let plane = &mut dx[ci * hw..(ci + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &cols[((ci * 9) + ky * 3 + kx) * hw..][..hw];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let dst = &mut plane[sy as usize * w..][..w];
                    let src = &row[y * w..][..w];
                    match kx {
                        0 => dst[..w - 1].iter_mut().zip(&src[1..]).for_each(|(d, s)| *d += *s),
                        1 => dst.iter_mut().zip(src).for_each(|(d, s)| *d += *s),
                        _ => dst[1..].iter_mut().zip(&src[..w - 1]).for_each(|(d, s)| *d += *s),
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conv3x3 {
    pub cin: usize,
    pub cout: usize,
}

impl Conv3x3 {
    pub fn weight_len(&self) -> usize {
        self.cout * self.cin * 9
    }

    /// `out = conv(x) + bias`; `out` must hold `cout * h * w` values.
    #[allow(clippy::too_many_arguments)]
    pub fn forward<T: Scalar>(
        &self,
        weight: &[T],
        bias: &[T],
        x: &[T],
        h: usize,
        w: usize,
        out: &mut [T],
        scratch: &mut Vec<T>,
    ) {
        let hw = h * w;
        im2col(x, self.cin, h, w, scratch);
        for (co, plane) in out[..self.cout * hw].chunks_exact_mut(hw).enumerate() {
            plane.fill(bias[co]);
        }
        gemm(
            Mat::row_major(weight, self.cout, self.cin * 9),
            Mat::row_major(scratch, self.cin * 9, hw),
            T::one(),
            out,
        );
    }

    /// Accumulate weight and bias gradients; write the input gradient into `dx` when given
    /// (overwriting it).
    #[allow(clippy::too_many_arguments)]
    pub fn backward<T: Scalar>(
        &self,
        weight: &[T],
        x: &[T],
        h: usize,
        w: usize,
        dy: &[T],
        dweight: &mut [T],
        dbias: &mut [T],
        dx: Option<&mut [T]>,
        scratch: &mut Vec<T>,
    ) {
        let hw = h * w;
        for (co, plane) in dy[..self.cout * hw].chunks_exact(hw).enumerate() {
            let mut s = T::zero();
            for &v in plane {
                s += v;
            }
            dbias[co] += s;
        }
        im2col(x, self.cin, h, w, scratch);
        gemm(
            Mat::row_major(dy, self.cout, hw),
            Mat::row_major(scratch, self.cin * 9, hw).t(),
            T::one(),
            dweight,
        );
        if let Some(dx) = dx {
            // reuse the column buffer for the column gradient
            gemm(
                Mat::row_major(weight, self.cout, self.cin * 9).t(),
                Mat::row_major(dy, self.cout, hw),
                T::zero(),
                scratch,
            );
            dx[..self.cin * hw].fill(T::zero());
            col2im(scratch, self.cin, h, w, dx);
        }
    }
}
