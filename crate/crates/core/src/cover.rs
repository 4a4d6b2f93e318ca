//! Set cover over a materialised coverage matrix: rows are candidate
//! policies, columns are grid weights.

use crate::error::{PalmError, Result};

/// Largest row count accepted by [`exact_cover`].
pub const EXACT_COVER_LIMIT: usize = 20;

/// Dense boolean matrix stored as one bitset per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageMatrix {
    columns: usize,
    words: usize,
    bits: Vec<Vec<u64>>,
}

impl CoverageMatrix {
    pub fn new(columns: usize) -> Self {
        Self {
            columns,
            words: columns.div_ceil(64),
            bits: Vec::new(),
        }
    }

    pub fn from_rows(columns: usize, rows: &[Vec<bool>]) -> Self {
        let mut m = Self::new(columns);
        for row in rows {
            m.push_row(row);
        }
        m
    }

    pub fn push_row(&mut self, row: &[bool]) {
        assert_eq!(
            row.len(),
            self.columns,
            "row length must match column count"
        );
        let mut bits = vec![0u64; self.words];
        for (j, _) in row.iter().enumerate().filter(|(_, b)| **b) {
            bits[j / 64] |= 1 << (j % 64);
        }
        self.bits.push(bits);
    }

    pub fn rows(&self) -> usize {
        self.bits.len()
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row][col / 64] >> (col % 64) & 1 == 1
    }

    /// Column indices covered by `row`, ascending.
    pub fn covered_by(&self, row: usize) -> Vec<usize> {
        (0..self.columns).filter(|&j| self.get(row, j)).collect()
    }

    /// First column covered by none of `rows`.
    pub fn first_uncovered(&self, rows: &[usize]) -> Option<usize> {
        let mut acc = vec![0u64; self.words];
        for &r in rows {
            or_into(&mut acc, &self.bits[r]);
        }
        (0..self.columns).find(|&j| acc[j / 64] >> (j % 64) & 1 == 0)
    }

    fn full_mask(&self) -> Vec<u64> {
        let mut mask = vec![u64::MAX; self.words];
        if !self.columns.is_multiple_of(64) {
            if let Some(last) = mask.last_mut() {
                *last = (1u64 << (self.columns % 64)) - 1;
            }
        }
        mask
    }
}

fn or_into(acc: &mut [u64], row: &[u64]) {
    acc.iter_mut().zip(row).for_each(|(a, b)| *a |= b);
}

fn count_new(acc: &[u64], row: &[u64]) -> u32 {
    acc.iter()
        .zip(row)
        .map(|(a, b)| (b & !a).count_ones())
        .sum()
}

fn check_keys(matrix: &CoverageMatrix, keys: &[usize]) {
    assert_eq!(keys.len(), matrix.rows(), "one key per row");
}

/// Greedy cover: repeatedly takes the row covering the most still-uncovered
/// columns, ties going to the smallest key. Returns row indices in pick order.
pub fn greedy_cover(matrix: &CoverageMatrix, keys: &[usize]) -> Result<Vec<usize>> {
    check_keys(matrix, keys);
    let all: Vec<usize> = (0..matrix.rows()).collect();
    if let Some(j) = matrix.first_uncovered(&all) {
        return Err(PalmError::InfeasibleCover { weight_index: j });
    }
    let full = matrix.full_mask();
    let mut acc = vec![0u64; matrix.words];
    let mut picked = Vec::new();
    let mut used = vec![false; matrix.rows()];
    while acc != full {
        let mut best: Option<(u32, usize)> = None;
        for r in (0..matrix.rows()).filter(|r| !used[*r]) {
            let gain = count_new(&acc, &matrix.bits[r]);
            let better = match best {
                None => gain > 0,
                Some((g, b)) => gain > g || (gain == g && keys[r] < keys[b]),
            };
            if better {
                best = Some((gain, r));
            }
        }
        let (_, r) = best.expect("feasibility checked above");
        used[r] = true;
        or_into(&mut acc, &matrix.bits[r]);
        picked.push(r);
    }
    Ok(picked)
}

/// Minimum-cardinality cover. Among minimum covers, returns the one whose
/// sorted key list is lexicographically smallest. Row indices are returned
/// in ascending key order.
pub fn exact_cover(matrix: &CoverageMatrix, keys: &[usize]) -> Result<Vec<usize>> {
    check_keys(matrix, keys);
    if matrix.rows() > EXACT_COVER_LIMIT {
        return Err(PalmError::InstanceTooLarge {
            limit: EXACT_COVER_LIMIT,
            got: matrix.rows(),
        });
    }
    let all: Vec<usize> = (0..matrix.rows()).collect();
    if let Some(j) = matrix.first_uncovered(&all) {
        return Err(PalmError::InfeasibleCover { weight_index: j });
    }
    let mut order = all;
    order.sort_by_key(|&r| keys[r]);
    let full = matrix.full_mask();

    // suffix[i] = union of rows order[i..], used to cut hopeless branches
    let mut suffix = vec![vec![0u64; matrix.words]; order.len() + 1];
    for i in (0..order.len()).rev() {
        suffix[i] = suffix[i + 1].clone();
        or_into(&mut suffix[i], &matrix.bits[order[i]]);
    }

    let search = Search {
        matrix,
        order: &order,
        suffix: &suffix,
        full: &full,
    };
    for size in 0..=order.len() {
        let mut chosen = Vec::with_capacity(size);
        let acc = vec![0u64; matrix.words];
        if search.run(0, size, &acc, &mut chosen) {
            return Ok(chosen.into_iter().map(|i| order[i]).collect());
        }
    }
    unreachable!("the full row set is a cover")
}

struct Search<'a> {
    matrix: &'a CoverageMatrix,
    order: &'a [usize],
    suffix: &'a [Vec<u64>],
    full: &'a [u64],
}

impl Search<'_> {
    /// Depth-first over combinations in lexicographic order, so the first
    /// success is the lexicographically smallest cover of the given size.
    fn run(&self, start: usize, remaining: usize, acc: &[u64], chosen: &mut Vec<usize>) -> bool {
        if acc == self.full {
            return remaining == 0;
        }
        if remaining == 0 || self.order.len() - start < remaining {
            return false;
        }
        let mut reach = acc.to_vec();
        or_into(&mut reach, &self.suffix[start]);
        if reach != self.full {
            return false;
        }
        for i in start..=self.order.len() - remaining {
            let mut next = acc.to_vec();
            or_into(&mut next, &self.matrix.bits[self.order[i]]);
            chosen.push(i);
            if self.run(i + 1, remaining - 1, &next, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }
}
