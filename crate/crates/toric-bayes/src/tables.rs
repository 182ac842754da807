//! Two-way contingency tables with structural zeros.
//!
//! A structural zero is a cell that is logically forced to be empty; it is
//! excluded from the free cell set and carries no count. An observed count of
//! zero at a free cell is a sampling zero and is kept in the table.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 1-based (row, col) position in the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellIndex {
    pub row: usize,
    pub col: usize,
}

impl CellIndex {
    pub fn new(row: usize, col: usize) -> Self {
        CellIndex { row, col }
    }
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// Observed counts on an R x C grid with declared structural zeros.
///
/// Free cells (the grid minus the structural zeros) are ordered row-major;
/// that order is canonical for every matrix built downstream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    counts: BTreeMap<CellIndex, u64>,
    structural_zeros: BTreeSet<CellIndex>,
    total: u64,
}

#[derive(Serialize, Deserialize)]
struct TableDoc {
    rows: Vec<String>,
    cols: Vec<String>,
    counts: Vec<Vec<Option<i64>>>,
    structural_zeros: Vec<(usize, usize)>,
}

impl ContingencyTable {
    pub fn new(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        counts: BTreeMap<CellIndex, u64>,
        structural_zeros: BTreeSet<CellIndex>,
    ) -> Result<Self> {
        let nrows = row_labels.len();
        let ncols = col_labels.len();
        if nrows == 0 || ncols == 0 {
            return Err(Error::InvalidTable("empty grid".into()));
        }
        for cell in counts.keys().chain(structural_zeros.iter()) {
            if cell.row < 1 || cell.row > nrows || cell.col < 1 || cell.col > ncols {
                return Err(Error::InvalidTable(format!("cell {cell} outside the grid")));
            }
        }
        for cell in counts.keys() {
            if structural_zeros.contains(cell) {
                return Err(Error::InvalidTable(format!(
                    "count present at structural-zero cell {cell}"
                )));
            }
        }
        if counts.len() + structural_zeros.len() != nrows * ncols {
            return Err(Error::InvalidTable(
                "counts and structural zeros do not cover the grid".into(),
            ));
        }
        if counts.is_empty() {
            return Err(Error::InvalidTable("no free cells".into()));
        }
        let total = counts.values().sum();
        Ok(ContingencyTable {
            row_labels,
            col_labels,
            counts,
            structural_zeros,
            total,
        })
    }

    /// Parse the JSON table format. Structural-zero positions hold `null`.
    pub fn from_json(source: &str) -> Result<Self> {
        let doc: TableDoc =
            serde_json::from_str(source).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_doc(doc)
    }

    fn from_doc(doc: TableDoc) -> Result<Self> {
        let nrows = doc.rows.len();
        let ncols = doc.cols.len();
        if doc.counts.len() != nrows {
            return Err(Error::Parse(format!(
                "counts has {} rows, expected {nrows}",
                doc.counts.len()
            )));
        }
        let declared: BTreeSet<CellIndex> = doc
            .structural_zeros
            .iter()
            .map(|&(r, c)| CellIndex::new(r, c))
            .collect();
        if declared.len() != doc.structural_zeros.len() {
            return Err(Error::Parse("duplicate structural-zero cell".into()));
        }
        let mut counts = BTreeMap::new();
        for (i, row) in doc.counts.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::Parse(format!(
                    "row {} has {} entries, expected {ncols}",
                    i + 1,
                    row.len()
                )));
            }
            for (j, entry) in row.iter().enumerate() {
                let cell = CellIndex::new(i + 1, j + 1);
                match entry {
                    None => {
                        if !declared.contains(&cell) {
                            return Err(Error::Parse(format!(
                                "null count at {cell} which is not a declared structural zero"
                            )));
                        }
                    }
                    Some(n) => {
                        if declared.contains(&cell) {
                            return Err(Error::Parse(format!(
                                "count present at structural-zero position {cell}"
                            )));
                        }
                        if *n < 0 {
                            return Err(Error::Parse(format!("negative count at {cell}")));
                        }
                        counts.insert(cell, *n as u64);
                    }
                }
            }
        }
        Self::new(doc.rows, doc.cols, counts, declared)
    }

    /// Parse CSV: first row is `,col1,col2,...`, each data row starts with its
    /// label; `*` marks a structural zero.
    pub fn from_csv(source: &str) -> Result<Self> {
        let mut lines = source.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty CSV".into()))?;
        let col_labels: Vec<String> = header
            .split(',')
            .skip(1)
            .map(|s| s.trim().to_string())
            .collect();
        let mut row_labels = Vec::new();
        let mut counts = BTreeMap::new();
        let mut zeros = BTreeSet::new();
        for (i, line) in lines.enumerate() {
            let mut fields = line.split(',');
            let label = fields
                .next()
                .ok_or_else(|| Error::Parse(format!("row {} missing label", i + 1)))?;
            row_labels.push(label.trim().to_string());
            let mut j = 0;
            for field in fields {
                j += 1;
                let cell = CellIndex::new(i + 1, j);
                let field = field.trim();
                if field == "*" {
                    zeros.insert(cell);
                } else {
                    let n: i64 = field
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad count {field:?} at {cell}")))?;
                    if n < 0 {
                        return Err(Error::Parse(format!("negative count at {cell}")));
                    }
                    counts.insert(cell, n as u64);
                }
            }
            if j != col_labels.len() {
                return Err(Error::Parse(format!(
                    "row {} has {j} entries, expected {}",
                    i + 1,
                    col_labels.len()
                )));
            }
        }
        Self::new(row_labels, col_labels, counts, zeros)
    }

    /// Serialize to the JSON table format (inverse of `from_json` up to
    /// whitespace).
    pub fn to_json(&self) -> String {
        let mut count_rows = Vec::new();
        for i in 1..=self.n_rows() {
            let mut row = Vec::new();
            for j in 1..=self.n_cols() {
                let cell = CellIndex::new(i, j);
                row.push(self.counts.get(&cell).map(|&n| n as i64));
            }
            count_rows.push(row);
        }
        let doc = TableDoc {
            rows: self.row_labels.clone(),
            cols: self.col_labels.clone(),
            counts: count_rows,
            structural_zeros: self
                .structural_zeros
                .iter()
                .map(|c| (c.row, c.col))
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("table serialization cannot fail")
    }

    pub fn n_rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    /// Total count N.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, cell: CellIndex) -> Option<u64> {
        self.counts.get(&cell).copied()
    }

    /// Observed counts keyed by free cell.
    pub fn counts(&self) -> &BTreeMap<CellIndex, u64> {
        &self.counts
    }

    pub fn is_structural_zero(&self, cell: CellIndex) -> bool {
        self.structural_zeros.contains(&cell)
    }

    pub fn structural_zeros(&self) -> &BTreeSet<CellIndex> {
        &self.structural_zeros
    }

    /// The free cell set A in row-major order.
    pub fn free_cells(&self) -> Vec<CellIndex> {
        let mut cells = Vec::with_capacity(self.counts.len());
        for i in 1..=self.n_rows() {
            for j in 1..=self.n_cols() {
                let cell = CellIndex::new(i, j);
                if !self.structural_zeros.contains(&cell) {
                    cells.push(cell);
                }
            }
        }
        cells
    }

    /// Free cells with a strictly positive observed count.
    pub fn positive_cells(&self) -> BTreeSet<CellIndex> {
        self.counts
            .iter()
            .filter(|(_, &n)| n > 0)
            .map(|(&c, _)| c)
            .collect()
    }

    /// Same shape (grid and structural zeros), count 1 at every free cell.
    pub fn unit_table(&self) -> ContingencyTable {
        let counts = self.counts.keys().map(|&c| (c, 1)).collect();
        ContingencyTable::new(
            self.row_labels.clone(),
            self.col_labels.clone(),
            counts,
            self.structural_zeros.clone(),
        )
        .expect("unit table shares a valid shape")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    use crate::testdata::CANCER_JSON;

    #[test]
    fn cancer_table_loads() {
        let t = ContingencyTable::from_json(CANCER_JSON).unwrap();
        assert_eq!(t.total(), 292);
        assert_eq!(t.free_cells().len(), 8);
    }

    #[test]
    fn free_cells_row_major() {
        let t = ContingencyTable::from_json(CANCER_JSON).unwrap();
        let cells: Vec<(usize, usize)> =
            t.free_cells().iter().map(|c| (c.row, c.col)).collect();
        assert_eq!(
            cells,
            vec![(1, 1), (1, 2), (2, 1), (2, 2), (3, 1), (4, 2), (5, 1), (5, 2)]
        );
    }

    #[test]
    fn positive_cells_drop_sampling_zero() {
        let t = ContingencyTable::from_json(CANCER_JSON).unwrap();
        let pos = t.positive_cells();
        assert_eq!(pos.len(), 7);
        assert!(!pos.contains(&CellIndex::new(5, 1)));
    }

    #[test]
    fn degenerate_single_cell() {
        let t = ContingencyTable::from_json(
            r#"{"rows":["a"],"cols":["b"],"counts":[[0]],"structural_zeros":[]}"#,
        )
        .unwrap();
        assert_eq!(t.total(), 0);
        assert_eq!(t.free_cells().len(), 1);
        assert!(t.positive_cells().is_empty());
    }

    #[test]
    fn two_by_two_sum() {
        let t = ContingencyTable::from_json(
            r#"{"rows":["r1","r2"],"cols":["c1","c2"],"counts":[[1,2],[3,4]],"structural_zeros":[]}"#,
        )
        .unwrap();
        assert_eq!(t.total(), 10);
        assert_eq!(t.free_cells().len(), 4);
        assert_eq!(t.positive_cells().len(), 4);
    }

    #[test]
    fn structural_zero_skipped_in_ordering() {
        let t = ContingencyTable::from_json(
            r#"{"rows":["r1","r2"],"cols":["c1","c2"],"counts":[[null,2],[3,4]],"structural_zeros":[[1,1]]}"#,
        )
        .unwrap();
        let cells: Vec<(usize, usize)> =
            t.free_cells().iter().map(|c| (c.row, c.col)).collect();
        assert_eq!(cells, vec![(1, 2), (2, 1), (2, 2)]);
    }

    #[test]
    fn rejects_count_at_structural_zero() {
        let err = ContingencyTable::from_json(
            r#"{"rows":["r"],"cols":["c1","c2"],"counts":[[1,2]],"structural_zeros":[[1,2]]}"#,
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn rejects_negative_count() {
        let err = ContingencyTable::from_json(
            r#"{"rows":["r"],"cols":["c"],"counts":[[-1]],"structural_zeros":[]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("negative"));
    }

    #[test]
    fn rejects_undeclared_null() {
        let err = ContingencyTable::from_json(
            r#"{"rows":["r"],"cols":["c1","c2"],"counts":[[null,2]],"structural_zeros":[]}"#,
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn json_round_trip() {
        let t = ContingencyTable::from_json(CANCER_JSON).unwrap();
        let again = ContingencyTable::from_json(&t.to_json()).unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn csv_with_star_markers() {
        let csv = "type,Female,Male\nLung,38,90\nMelanoma,15,15\nOvarian,18,*\nProstate,*,111\nStomach,0,5\n";
        let t = ContingencyTable::from_csv(csv).unwrap();
        assert_eq!(t.total(), 292);
        assert_eq!(t.structural_zeros().len(), 2);
        assert!(t.is_structural_zero(CellIndex::new(3, 2)));
    }
}
