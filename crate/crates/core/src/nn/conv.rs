//! 2D convolution via im2col.
//!
//! Feature maps are `Tensor2` values with one row per pixel and one column per
//! channel; a batch of `B` images stacks their `H*W` rows back to back in
//! row-major pixel order.

use super::{DenseGrads, Tensor2};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub in_h: usize,
    pub in_w: usize,
    pub in_c: usize,
    pub out_c: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvGeometry {
    /// 3x3 kernel, stride 2, padding 1: halves each spatial side.
    pub fn halving(in_h: usize, in_w: usize, in_c: usize, out_c: usize) -> Self {
        Self {
            in_h,
            in_w,
            in_c,
            out_c,
            kernel: 3,
            stride: 2,
            pad: 1,
        }
    }

    pub fn out_h(&self) -> usize {
        (self.in_h + 2 * self.pad - self.kernel) / self.stride + 1
    }

    pub fn out_w(&self) -> usize {
        (self.in_w + 2 * self.pad - self.kernel) / self.stride + 1
    }

    /// Rows of the im2col matrix per image, and its width.
    pub fn patch_len(&self) -> usize {
        self.kernel * self.kernel * self.in_c
    }

    fn check_input(&self, x: &Tensor2, batch: usize) -> Result<()> {
        if x.shape() != (batch * self.in_h * self.in_w, self.in_c) {
            return Err(Error::Shape {
                op: "conv input",
                left: (batch * self.in_h * self.in_w, self.in_c),
                right: x.shape(),
            });
        }
        Ok(())
    }
}

/// Input pixel feeding patch slot `(ky, kx)` of output pixel `(oy, ox)`.
fn source(g: &ConvGeometry, oy: usize, ox: usize, ky: usize, kx: usize) -> Option<(usize, usize)> {
    let iy = (oy * g.stride + ky) as isize - g.pad as isize;
    let ix = (ox * g.stride + kx) as isize - g.pad as isize;
    if iy < 0 || ix < 0 || iy as usize >= g.in_h || ix as usize >= g.in_w {
        None
    } else {
        Some((iy as usize, ix as usize))
    }
}

pub fn im2col(x: &Tensor2, batch: usize, g: &ConvGeometry) -> Result<Tensor2> {
    g.check_input(x, batch)?;
    let (oh, ow) = (g.out_h(), g.out_w());
    let mut cols = Tensor2::zeros(batch * oh * ow, g.patch_len());
    for b in 0..batch {
        for oy in 0..oh {
            for ox in 0..ow {
                let row = cols.row_mut((b * oh + oy) * ow + ox);
                for ky in 0..g.kernel {
                    for kx in 0..g.kernel {
                        if let Some((iy, ix)) = source(g, oy, ox, ky, kx) {
                            let src = x.row((b * g.in_h + iy) * g.in_w + ix);
                            let off = (ky * g.kernel + kx) * g.in_c;
                            row[off..off + g.in_c].copy_from_slice(src);
                        }
                    }
                }
            }
        }
    }
    Ok(cols)
}

/// Adjoint of [`im2col`]: scatter-adds patch gradients back onto pixels.
pub fn col2im(dcols: &Tensor2, batch: usize, g: &ConvGeometry) -> Tensor2 {
    let (oh, ow) = (g.out_h(), g.out_w());
    let mut dx = Tensor2::zeros(batch * g.in_h * g.in_w, g.in_c);
    for b in 0..batch {
        for oy in 0..oh {
            for ox in 0..ow {
                let row = dcols.row((b * oh + oy) * ow + ox);
                for ky in 0..g.kernel {
                    for kx in 0..g.kernel {
                        if let Some((iy, ix)) = source(g, oy, ox, ky, kx) {
                            let dst = dx.row_mut((b * g.in_h + iy) * g.in_w + ix);
                            let off = (ky * g.kernel + kx) * g.in_c;
                            for (d, s) in dst.iter_mut().zip(&row[off..off + g.in_c]) {
                                *d += s;
                            }
                        }
                    }
                }
            }
        }
    }
    dx
}

/// Returns the output map and the im2col matrix needed for backward.
pub fn conv2d_forward(
    x: &Tensor2,
    batch: usize,
    g: &ConvGeometry,
    w: &Tensor2,
    b: &Tensor2,
) -> Result<(Tensor2, Tensor2)> {
    if w.shape() != (g.patch_len(), g.out_c) {
        return Err(Error::Shape {
            op: "conv weight",
            left: (g.patch_len(), g.out_c),
            right: w.shape(),
        });
    }
    let cols = im2col(x, batch, g)?;
    let y = super::dense_forward(&cols, w, b)?;
    Ok((y, cols))
}

pub fn conv2d_backward(
    cols: &Tensor2,
    batch: usize,
    g: &ConvGeometry,
    w: &Tensor2,
    dy: &Tensor2,
) -> Result<DenseGrads> {
    let grads = super::dense_backward(cols, w, dy)?;
    Ok(DenseGrads {
        dx: col2im(&grads.dx, batch, g),
        dw: grads.dw,
        db: grads.db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halving_geometry() {
        let g = ConvGeometry::halving(32, 32, 1, 8);
        assert_eq!((g.out_h(), g.out_w()), (16, 16));
        let g = ConvGeometry::halving(2, 2, 1, 1);
        assert_eq!((g.out_h(), g.out_w()), (1, 1));
    }

    #[test]
    fn direct_convolution_matches() {
        // 4x4 single channel, ramp image, all-ones kernel with bias
        let g = ConvGeometry::halving(4, 4, 1, 1);
        let x = Tensor2::from_vec(16, 1, (0..16).map(f64::from).collect()).unwrap();
        let w = Tensor2::filled(9, 1, 1.0);
        let (y, _) = conv2d_forward(&x, 1, &g, &w, &Tensor2::filled(1, 1, 0.5)).unwrap();
        // output (0,0) covers pixels (0..=1, 0..=1) with padding: 0+1+4+5
        assert_eq!(y.get(0, 0), 10.5);
        // output (1,1) covers rows 1..=3, cols 1..=3
        let want: f64 = [5, 6, 7, 9, 10, 11, 13, 14, 15].iter().map(|&v| v as f64).sum();
        assert_eq!(y.get(3, 0), want + 0.5);
    }

    #[test]
    fn col2im_is_adjoint_of_im2col() {
        // <im2col(x), c> == <x, col2im(c)>
        let g = ConvGeometry::halving(6, 6, 2, 3);
        let x = Tensor2::from_vec(2 * 36, 2, (0..144).map(|i| ((i * 37 % 11) as f64) - 5.0).collect()).unwrap();
        let cols = im2col(&x, 2, &g).unwrap();
        let c = cols.map(|v| v * 0.5 + 1.0).zip_map(&cols, |a, b| a - b * b * 0.01);
        let lhs: f64 = cols.data().iter().zip(c.data()).map(|(a, b)| a * b).sum();
        let back = col2im(&c, 2, &g);
        let rhs: f64 = x.data().iter().zip(back.data()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-9);
    }
}
