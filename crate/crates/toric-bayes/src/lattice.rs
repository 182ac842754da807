//! Log-linear design matrices, exact integer kernels and the lattice-basis
//! binomial equations they induce.
//!
//! All lattice computations run in arbitrary-precision integers; orthogonality
//! is exact, never approximate. The kernel basis is returned in a canonical
//! Hermite-normal-form representation (positive pivots, entries above a pivot
//! reduced into `[0, pivot)`), so two bases of the same lattice compare equal.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tables::{CellIndex, ContingencyTable};

/// Nonnegative-integer design matrix: rows are cells, columns are log-linear
/// parameters (or Hilbert generators).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DesignMatrix {
    pub cells: Vec<CellIndex>,
    pub param_names: Vec<String>,
    /// `entries[row][col]`, dimension `cells.len() x param_names.len()`.
    pub entries: Vec<Vec<u64>>,
}

impl DesignMatrix {
    pub fn new(cells: Vec<CellIndex>, param_names: Vec<String>, entries: Vec<Vec<u64>>) -> Self {
        assert_eq!(entries.len(), cells.len());
        for row in &entries {
            assert_eq!(row.len(), param_names.len());
        }
        DesignMatrix {
            cells,
            param_names,
            entries,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_params(&self) -> usize {
        self.param_names.len()
    }

    /// Column `j` as a vector over cells.
    pub fn column(&self, j: usize) -> Vec<u64> {
        self.entries.iter().map(|row| row[j]).collect()
    }
}

/// Integer basis of the lattice orthogonal to the columns of a design matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KernelBasis {
    pub cells: Vec<CellIndex>,
    pub vectors: Vec<Vec<BigInt>>,
}

impl KernelBasis {
    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    /// True when every basis vector has zero coordinate sum. Holds whenever
    /// the all-ones vector lies in the column span of the parent design.
    pub fn zero_sum_holds(&self) -> bool {
        self.vectors
            .iter()
            .all(|v| v.iter().sum::<BigInt>().is_zero())
    }
}

/// A binomial constraint `prod q^plus - prod q^minus = 0` on the un-normalized
/// cell probabilities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BinomialEquation {
    pub plus: BTreeMap<CellIndex, u64>,
    pub minus: BTreeMap<CellIndex, u64>,
}

impl BinomialEquation {
    pub fn total_degree_plus(&self) -> u64 {
        self.plus.values().sum()
    }

    pub fn total_degree_minus(&self) -> u64 {
        self.minus.values().sum()
    }
}

impl fmt::Display for BinomialEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |terms: &BTreeMap<CellIndex, u64>| -> String {
            if terms.is_empty() {
                return "1".to_string();
            }
            terms
                .iter()
                .map(|(c, &e)| {
                    if e == 1 {
                        format!("q_{}{}", c.row, c.col)
                    } else {
                        format!("q_{}{}^{}", c.row, c.col, e)
                    }
                })
                .collect::<Vec<_>>()
                .join("*")
        };
        write!(f, "{} - {}", side(&self.plus), side(&self.minus))
    }
}

/// Indicator design of the quasi-independence model: one column per grid row
/// and per grid column that touches at least one free cell.
///
/// Returns the design together with the names of parameters dropped because
/// their entire grid row or column is structurally zero.
pub fn build_qi_design(table: &ContingencyTable) -> (DesignMatrix, Vec<String>) {
    let cells = table.free_cells();
    let mut row_used = vec![false; table.n_rows()];
    let mut col_used = vec![false; table.n_cols()];
    for c in &cells {
        row_used[c.row - 1] = true;
        col_used[c.col - 1] = true;
    }
    let mut dropped = Vec::new();
    let mut param_names = Vec::new();
    let mut cols: Vec<Box<dyn Fn(&CellIndex) -> u64>> = Vec::new();
    for i in 1..=table.n_rows() {
        if row_used[i - 1] {
            param_names.push(format!("alpha_{i}"));
            cols.push(Box::new(move |c: &CellIndex| u64::from(c.row == i)));
        } else {
            dropped.push(format!("alpha_{i}"));
        }
    }
    for j in 1..=table.n_cols() {
        if col_used[j - 1] {
            param_names.push(format!("beta_{j}"));
            cols.push(Box::new(move |c: &CellIndex| u64::from(c.col == j)));
        } else {
            dropped.push(format!("beta_{j}"));
        }
    }
    let entries = cells
        .iter()
        .map(|c| cols.iter().map(|f| f(c)).collect())
        .collect();
    (DesignMatrix::new(cells, param_names, entries), dropped)
}

/// Saturated integer kernel of a design matrix, in canonical HNF.
///
/// The basis spans every integer vector orthogonal to all columns of `design`;
/// saturation comes for free because the basis is extracted from a unimodular
/// row transform.
pub fn integer_kernel(design: &DesignMatrix) -> KernelBasis {
    let m = design.n_cells();
    let n = design.n_params();
    let mut a: Vec<Vec<BigInt>> = design
        .entries
        .iter()
        .map(|row| row.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let mut u: Vec<Vec<BigInt>> = (0..m)
        .map(|i| (0..m).map(|j| BigInt::from(u64::from(i == j))).collect())
        .collect();

    let mut rank = 0;
    for col in 0..n {
        // gcd elimination in this column among rows rank..m
        loop {
            let mut pivot: Option<usize> = None;
            for i in rank..m {
                if !a[i][col].is_zero()
                    && pivot.is_none_or(|p| a[i][col].abs() < a[p][col].abs())
                {
                    pivot = Some(i);
                }
            }
            let Some(p) = pivot else { break };
            a.swap(rank, p);
            u.swap(rank, p);
            let mut done = true;
            for i in rank + 1..m {
                if !a[i][col].is_zero() {
                    let q = a[i][col].div_floor(&a[rank][col]);
                    row_sub(&mut a, i, rank, &q);
                    row_sub(&mut u, i, rank, &q);
                    if !a[i][col].is_zero() {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if rank < m && !a[rank][col].is_zero() {
            rank += 1;
        }
    }

    let vectors: Vec<Vec<BigInt>> = u.drain(rank..).collect();
    KernelBasis {
        cells: design.cells.clone(),
        vectors: hermite_normal_form(vectors),
    }
}

fn row_sub(rows: &mut [Vec<BigInt>], dst: usize, src: usize, q: &BigInt) {
    if q.is_zero() {
        return;
    }
    for k in 0..rows[dst].len() {
        let d = &rows[dst][k] - q * &rows[src][k];
        rows[dst][k] = d;
    }
}

/// Row-style Hermite normal form with positive pivots and entries above each
/// pivot reduced into `[0, pivot)`. Zero rows are discarded. This is the
/// canonical representative used for lattice-equality checks.
pub fn hermite_normal_form(mut rows: Vec<Vec<BigInt>>) -> Vec<Vec<BigInt>> {
    rows.retain(|r| r.iter().any(|x| !x.is_zero()));
    if rows.is_empty() {
        return rows;
    }
    let n = rows[0].len();
    let m = rows.len();
    let mut rank = 0;
    for col in 0..n {
        loop {
            let mut pivot: Option<usize> = None;
            for i in rank..m {
                if !rows[i][col].is_zero()
                    && pivot.is_none_or(|p| rows[i][col].abs() < rows[p][col].abs())
                {
                    pivot = Some(i);
                }
            }
            let Some(p) = pivot else { break };
            rows.swap(rank, p);
            let mut done = true;
            for i in rank + 1..m {
                if !rows[i][col].is_zero() {
                    let q = rows[i][col].div_floor(&rows[rank][col]);
                    row_sub(&mut rows, i, rank, &q);
                    if !rows[i][col].is_zero() {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if rank < m && !rows[rank][col].is_zero() {
            if rows[rank][col].is_negative() {
                for x in rows[rank].iter_mut() {
                    *x = -&*x;
                }
            }
            for i in 0..rank {
                let q = rows[i][col].div_floor(&rows[rank][col]);
                row_sub(&mut rows, i, rank, &q);
            }
            rank += 1;
            if rank == m {
                break;
            }
        }
    }
    rows.truncate(rank);
    rows
}

/// One binomial per kernel vector: positive part against negative part.
pub fn kernel_binomials(kernel: &KernelBasis) -> Vec<BinomialEquation> {
    kernel
        .vectors
        .iter()
        .map(|v| {
            let mut plus = BTreeMap::new();
            let mut minus = BTreeMap::new();
            for (cell, x) in kernel.cells.iter().zip(v) {
                if x.is_positive() {
                    plus.insert(*cell, u64::try_from(x).expect("exponent fits u64"));
                } else if x.is_negative() {
                    minus.insert(*cell, u64::try_from(&-x).expect("exponent fits u64"));
                }
            }
            BinomialEquation { plus, minus }
        })
        .collect()
}

/// Check `|prod q^plus - prod q^minus| <= tol` for every equation.
pub fn satisfies_binomials(
    q: &BTreeMap<CellIndex, f64>,
    eqs: &[BinomialEquation],
    tol: f64,
) -> Result<bool> {
    let term = |side: &BTreeMap<CellIndex, u64>| -> Result<f64> {
        let mut prod = 1.0;
        for (cell, &e) in side {
            let value = q
                .get(cell)
                .ok_or_else(|| Error::InvalidArgument(format!("q missing cell {cell}")))?;
            prod *= value.powi(e as i32);
        }
        Ok(prod)
    };
    for eq in eqs {
        if (term(&eq.plus)? - term(&eq.minus)?).abs() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}
