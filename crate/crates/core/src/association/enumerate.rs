use super::{count_associations, Assignment, AssociationError, DataAssociationMatrix};
use num_bigint::BigUint;

/// Default ceiling on the number of associations an exhaustive pass may generate.
pub const DEFAULT_ENUMERATION_CAP: u64 = 5_000_000;

/// Lexicographic depth-first iterator over one-to-one assignments.
///
/// An optional mask restricts which (row, column) pairs may be used; the
/// clutter column is the last one.
#[derive(Debug, Clone)]
pub struct AssignmentIter {
    m: usize,
    n: usize,
    mask: Option<Vec<bool>>,
    cols: Vec<usize>,
    used: Vec<bool>,
    started: bool,
    done: bool,
}

impl AssignmentIter {
    pub fn new(m: usize, n_tracks: usize) -> Self {
        Self {
            m,
            n: n_tracks,
            mask: None,
            cols: vec![0; m],
            used: vec![false; n_tracks],
            started: false,
            done: false,
        }
    }

    /// Only pairs with a finite matrix entry are allowed.
    pub fn feasible(da: &DataAssociationMatrix) -> Self {
        let (m, n) = (da.n_measurements(), da.n_tracks());
        let mut mask = Vec::with_capacity(m * (n + 1));
        for r in 0..m {
            for c in 0..=n {
                mask.push(da.entry(r, c) > f64::NEG_INFINITY);
            }
        }
        Self {
            mask: Some(mask),
            ..Self::new(m, n)
        }
    }

    #[inline]
    fn allowed(&self, row: usize, col: usize) -> bool {
        (col == self.n || !self.used[col]) && self.mask.as_ref().is_none_or(|m| m[row * (self.n + 1) + col])
    }

    fn release(&mut self, row: usize) {
        let c = self.cols[row];
        if c < self.n {
            self.used[c] = false;
        }
    }

    /// Assigns `row` its first allowed column `>= start`, then descends;
    /// backtracks on dead ends. Returns false when the space is exhausted.
    fn advance(&mut self, mut row: usize, mut start: usize) -> bool {
        loop {
            match (start..=self.n).find(|&c| self.allowed(row, c)) {
                Some(c) => {
                    self.cols[row] = c;
                    if c < self.n {
                        self.used[c] = true;
                    }
                    if row + 1 == self.m {
                        return true;
                    }
                    row += 1;
                    start = 0;
                }
                None => {
                    if row == 0 {
                        return false;
                    }
                    row -= 1;
                    self.release(row);
                    start = self.cols[row] + 1;
                }
            }
        }
    }
}

impl AssignmentIter {
    /// Advances without allocating; the slice is the clutter-coded column
    /// vector of the next assignment.
    pub fn next_columns(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        let found = if !self.started {
            self.started = true;
            self.m == 0 || self.advance(0, 0)
        } else if self.m == 0 {
            false
        } else {
            let last = self.m - 1;
            self.release(last);
            self.advance(last, self.cols[last] + 1)
        };
        if !found || self.m == 0 {
            self.done = true;
        }
        if found {
            Some(&self.cols)
        } else {
            None
        }
    }
}

impl Iterator for AssignmentIter {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        let n = self.n;
        self.next_columns().map(|cols| Assignment {
            columns: cols.to_vec(),
            n_tracks: n,
        })
    }
}

/// Every one-to-one partial assignment of `m` measurements to `n_tracks`
/// objects, unassigned measurements going to clutter, in lexicographic order.
pub fn enumerate_associations(m: usize, n_tracks: usize, cap: u64) -> Result<AssignmentIter, AssociationError> {
    let count = count_associations(m, n_tracks);
    if count > BigUint::from(cap) {
        return Err(AssociationError::EnumerationInfeasible {
            count: count.to_string(),
            cap,
        });
    }
    Ok(AssignmentIter::new(m, n_tracks))
}

/// All assignments whose entries are finite, failing once more than `cap`
/// have been generated.
pub fn enumerate_feasible(da: &DataAssociationMatrix, cap: u64) -> Result<Vec<Assignment>, AssociationError> {
    let mut out = Vec::new();
    for a in AssignmentIter::feasible(da) {
        if out.len() as u64 >= cap {
            return Err(AssociationError::EnumerationInfeasible {
                count: format!(">{cap}"),
                cap,
            });
        }
        out.push(a);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mtt::TrackLabel;
    use nalgebra::DMatrix;
    use std::collections::BTreeSet;

    #[test]
    fn one_by_one() {
        let all: Vec<_> = enumerate_associations(1, 1, 10).unwrap().collect();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].columns(), &[0]);
        assert!(all[1].is_clutter(0));
    }

    #[test]
    fn two_by_two_has_seven_valid_maps() {
        let all: Vec<_> = enumerate_associations(2, 2, 10).unwrap().collect();
        assert_eq!(all.len(), 7);
        for a in &all {
            assert!(a.is_valid());
        }
        let distinct: BTreeSet<_> = all.iter().collect();
        assert_eq!(distinct.len(), 7);
    }

    #[test]
    fn five_by_ten_length() {
        assert_eq!(enumerate_associations(5, 10, 100_000).unwrap().count(), 63_591);
    }

    #[test]
    fn lengths_match_counts_and_order_is_lexicographic() {
        for m in 0..=5 {
            for n in 0..=5 {
                let all: Vec<_> = enumerate_associations(m, n, 1 << 20).unwrap().collect();
                assert_eq!(BigUint::from(all.len()), count_associations(m, n), "m={m} M={n}");
                assert!(all.windows(2).all(|w| w[0] < w[1]));
                assert!(all.iter().all(Assignment::is_valid));
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            enumerate_associations(5, 10, 63_590),
            Err(AssociationError::EnumerationInfeasible { .. })
        ));
    }

    #[test]
    fn feasible_skips_gated_pairs() {
        let ninf = f64::NEG_INFINITY;
        // row 0 can only go to track 0 or clutter, row 1 only to track 1 or clutter
        let ll = DMatrix::from_row_slice(2, 3, &[-1.0, ninf, -5.0, ninf, -1.0, -5.0]);
        let da = DataAssociationMatrix::from_loglik(ll, vec![TrackLabel::new(0, 0), TrackLabel::new(0, 1)]);
        let all = enumerate_feasible(&da, 100).unwrap();
        assert_eq!(all.len(), 4);
        assert!(enumerate_feasible(&da, 3).is_err());

        // a row with nothing finite has no feasible assignment at all
        let dead = DMatrix::from_row_slice(1, 2, &[ninf, ninf]);
        let da = DataAssociationMatrix::from_loglik(dead, vec![TrackLabel::new(0, 0)]);
        assert!(enumerate_feasible(&da, 100).unwrap().is_empty());
    }
}
