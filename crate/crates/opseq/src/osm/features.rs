use crate::numkit::Array;

/// Width of a jump-feature row: six one-hot distance classes
/// (`d=0`, `d=1`, `d>=2`, `d<=-1`, NULL, FINISH) followed by the numeric
/// features `d` and `d/|s|`.
pub const JUMP_FEATURE_DIM: usize = 8;

const F_ZERO: usize = 0;
const F_ONE: usize = 1;
const F_FORWARD: usize = 2;
const F_BACKWARD: usize = 3;
const F_NULL: usize = 4;
const F_FINISH: usize = 5;
const F_DIST: usize = 6;
const F_DIST_SCALED: usize = 7;

/// Jump features for every candidate of the next alignment decision, as a
/// `[|s| + 2, 8]` matrix: row 0 is NULL, rows `1..=|s|` the source
/// positions, row `|s| + 1` FINISH.
///
/// For source candidates the distance is `candidate - prev_pos`, where
/// `prev_pos` is the last *real* source position (0 before any real
/// alignment; NULL steps leave it unchanged). The numeric features are zero
/// on the NULL and FINISH rows, and `d/|s|` is defined as zero for an empty
/// source sentence.
pub fn jump_features(prev_pos: usize, source_len: usize) -> Array {
    debug_assert!(prev_pos <= source_len);
    let rows = source_len + 2;
    let mut data = vec![0.0; rows * JUMP_FEATURE_DIM];
    data[F_NULL] = 1.0;
    for candidate in 1..=source_len {
        let row = &mut data[candidate * JUMP_FEATURE_DIM..(candidate + 1) * JUMP_FEATURE_DIM];
        let d = candidate as f64 - prev_pos as f64;
        let class = if d == 0.0 {
            F_ZERO
        } else if d == 1.0 {
            F_ONE
        } else if d >= 2.0 {
            F_FORWARD
        } else {
            F_BACKWARD
        };
        row[class] = 1.0;
        row[F_DIST] = d;
        row[F_DIST_SCALED] = if source_len == 0 { 0.0 } else { d / source_len as f64 };
    }
    data[(rows - 1) * JUMP_FEATURE_DIM + F_FINISH] = 1.0;
    Array::from_vec(&[rows, JUMP_FEATURE_DIM], data).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_step_from_position_two() {
        let phi = jump_features(2, 5);
        assert_eq!(phi.shape(), &[7, 8]);
        assert_eq!(phi.row(3), &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.2]);
    }

    #[test]
    fn staying_put_is_distance_zero() {
        let phi = jump_features(2, 5);
        assert_eq!(phi.row(2), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn null_and_finish_rows_are_pure_one_hots() {
        let phi = jump_features(2, 5);
        assert_eq!(phi.row(0), &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(phi.row(6), &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn distance_classes_cover_forward_and_backward_jumps() {
        let phi = jump_features(3, 5);
        // candidate 5: d = 2 -> forward class
        assert_eq!(phi.row(5)[F_FORWARD], 1.0);
        // candidate 1: d = -2 -> backward class
        assert_eq!(phi.row(1)[F_BACKWARD], 1.0);
        assert_eq!(phi.row(1)[F_DIST], -2.0);
    }

    #[test]
    fn empty_source_has_only_null_and_finish_rows() {
        let phi = jump_features(0, 0);
        assert_eq!(phi.shape(), &[2, 8]);
        assert_eq!(phi.row(0)[F_NULL], 1.0);
        assert_eq!(phi.row(1)[F_FINISH], 1.0);
    }

    #[test]
    fn exactly_one_hot_per_row() {
        for prev in 0..=4 {
            let phi = jump_features(prev, 4);
            for r in 0..phi.rows() {
                let ones = phi.row(r)[..6].iter().filter(|&&v| v == 1.0).count();
                assert_eq!(ones, 1, "row {r} with prev {prev}");
            }
        }
    }
}
