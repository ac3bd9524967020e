use nalgebra::{DMatrix, DVector};

use super::Field2D;
use crate::error::{Error, Result};
use crate::tensor::mask::neighbors4;
use crate::tensor::Mask2D;

/// Largest number of masked pixels the dense reference will factor.
pub const DIRECT_SOLVE_LIMIT: usize = 4096;

/// Solves the same 5-point system as the iterative solver by dense LU.
///
/// Each masked pixel `p` with `n_p` in-image neighbours contributes the row
/// `n_p u_p - sum(masked neighbours u_q) = sum(unmasked neighbours f_q)`.
/// Meant as a test oracle; the dense factorization is cubic in the number
/// of unknowns.
pub fn direct_solve_reference(field: &Field2D, mask: &Mask2D) -> Result<Field2D> {
    field.check_mask(mask)?;
    if mask.is_full() {
        return Err(Error::NoBackground);
    }
    let (w, h) = (field.width(), field.height());
    let mut slot = vec![usize::MAX; w * h];
    let mut cells = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                slot[y * w + x] = cells.len();
                cells.push((x, y));
            }
        }
    }
    let n = cells.len();
    if n > DIRECT_SOLVE_LIMIT {
        return Err(Error::TooLarge {
            unknowns: n,
            limit: DIRECT_SOLVE_LIMIT,
        });
    }
    let mut out = field.data().to_vec();
    if n == 0 {
        return Field2D::from_vec(w, h, out);
    }

    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for (row, &(x, y)) in cells.iter().enumerate() {
        for (nx, ny) in neighbors4(x, y, w, h) {
            a[(row, row)] += 1.0;
            let q = ny * w + nx;
            if mask.get(nx, ny) {
                a[(row, slot[q])] -= 1.0;
            } else {
                b[row] += field.data()[q];
            }
        }
    }
    let u = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Argument("reference system is singular".into()))?;
    for (row, &(x, y)) in cells.iter().enumerate() {
        out[y * w + x] = u[row];
    }
    Field2D::from_vec(w, h, out)
}
