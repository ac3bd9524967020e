use serde::Serialize;

use super::AttentionStack;

/// Row sums may deviate from 1 by this much before a row counts as violating.
pub const ROW_SUM_TOLERANCE: f64 = 1e-4;
/// Entries may dip this far below zero (float drift) before a row violates.
pub const NEGATIVE_TOLERANCE: f64 = -1e-6;

/// Residuals of the row-stochastic invariant over a whole stack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationReport {
    /// `max |sum_j a_ij - 1|` over all rows.
    pub max_row_sum_error: f64,
    pub min_value: f64,
    /// Rows whose sum is off by more than [`ROW_SUM_TOLERANCE`], that hold an
    /// entry below [`NEGATIVE_TOLERANCE`], or that hold a non-finite entry.
    pub violating_rows: usize,
    pub non_finite: usize,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violating_rows == 0
    }
}

pub fn validate_attention(stack: &AttentionStack) -> ValidationReport {
    let t = stack.frames();
    let mut report = ValidationReport {
        max_row_sum_error: 0.0,
        min_value: f64::INFINITY,
        violating_rows: 0,
        non_finite: 0,
    };
    for row in stack.data().chunks_exact(t) {
        let mut sum = 0.0f64;
        let mut bad = false;
        for &v in row {
            if !v.is_finite() {
                report.non_finite += 1;
                bad = true;
                continue;
            }
            let v = v as f64;
            sum += v;
            report.min_value = report.min_value.min(v);
            if v < NEGATIVE_TOLERANCE {
                bad = true;
            }
        }
        let err = (sum - 1.0).abs();
        if err.is_finite() {
            report.max_row_sum_error = report.max_row_sum_error.max(err);
        }
        if bad || !(err <= ROW_SUM_TOLERANCE) {
            report.violating_rows += 1;
        }
    }
    report
}

/// Divides every row by its sum. Rows summing to at most `1e-8` become
/// uniform. Returns the number of rows that had to be replaced by uniform.
pub fn renormalize_rows(stack: &mut AttentionStack) -> usize {
    let t = stack.frames();
    renormalize_rows_slice(stack.data_mut(), t)
}

pub(crate) fn renormalize_rows_slice(data: &mut [f32], t: usize) -> usize {
    let mut degenerate = 0;
    for row in data.chunks_exact_mut(t) {
        let sum: f64 = row.iter().map(|&v| v as f64).sum();
        if sum <= 1e-8 {
            row.fill(1.0 / t as f32);
            degenerate += 1;
        } else {
            for v in row.iter_mut() {
                *v = (*v as f64 / sum) as f32;
            }
        }
    }
    degenerate
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_stack_is_exact() {
        let s = AttentionStack::uniform(3, 4, 4).unwrap();
        let r = validate_attention(&s);
        assert_eq!(r.max_row_sum_error, 0.0);
        assert_eq!(r.min_value, 0.25);
        assert!(r.is_valid());
    }

    #[test]
    fn identity_stack_is_valid_with_zero_minimum() {
        let r = validate_attention(&AttentionStack::identity(2, 2, 5).unwrap());
        assert_eq!(r.max_row_sum_error, 0.0);
        assert_eq!(r.min_value, 0.0);
        assert_eq!(r.violating_rows, 0);
    }

    #[test]
    fn doubled_row_is_reported_once() {
        let mut s = AttentionStack::uniform(3, 3, 4).unwrap();
        for v in &mut s.pixel_mut(1, 2)[4..8] {
            *v *= 2.0;
        }
        let r = validate_attention(&s);
        assert_eq!(r.violating_rows, 1);
        assert!((r.max_row_sum_error - 1.0).abs() < 1e-6);
    }

    #[test]
    fn negative_and_nan_entries_violate() {
        let mut s = AttentionStack::uniform(1, 2, 2).unwrap();
        s.pixel_mut(0, 0)[0] = -0.5;
        s.pixel_mut(0, 0)[1] = 1.5;
        s.pixel_mut(1, 0)[2] = f32::NAN;
        let r = validate_attention(&s);
        assert_eq!(r.violating_rows, 2);
        assert_eq!(r.non_finite, 1);
    }

    #[test]
    fn renormalize_fixes_scaled_and_zero_rows() {
        let mut s = AttentionStack::uniform(1, 1, 3).unwrap();
        for v in &mut s.data_mut()[0..3] {
            *v *= 1.5;
        }
        s.data_mut()[3..6].fill(0.0);
        assert_eq!(renormalize_rows(&mut s), 1);
        assert!(validate_attention(&s).max_row_sum_error < 1e-6);
        assert_eq!(&s.data()[3..6], &[1.0 / 3.0; 3]);
    }
}
