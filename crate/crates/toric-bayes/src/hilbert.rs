//! Minimal Hilbert basis of the monoid of nonnegative integer vectors
//! orthogonal to a kernel lattice.
//!
//! The completion procedure is the Contejean-Devie breadth-first search: grow
//! candidate vectors from the unit vectors one increment at a time, keep the
//! minimal solutions, and only expand along coordinates that move the residual
//! toward zero. Solutions appear level by level in total degree, so no later
//! solution can reduce an earlier one and the surviving set is exactly the
//! minimal Hilbert basis.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{DesignMatrix, KernelBasis};
use crate::tables::CellIndex;

/// Minimal generating set of `{t in N^cells : t . k = 0 for all kernel k}`,
/// sorted lexicographically in canonical cell order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HilbertBasis {
    pub cells: Vec<CellIndex>,
    pub generators: Vec<Vec<u64>>,
}

/// Resource budget for the completion procedure. Exceeding it is an error,
/// never a silent truncation.
#[derive(Debug, Clone, Copy)]
pub struct HilbertBudget {
    pub max_generators: usize,
    pub max_frontier: usize,
}

impl Default for HilbertBudget {
    fn default() -> Self {
        // sized for desk-scale tables (about a dozen free cells)
        HilbertBudget {
            max_generators: 10_000,
            max_frontier: 2_000_000,
        }
    }
}

fn residual(kernel: &KernelBasis, t: &[u64]) -> Vec<BigInt> {
    kernel
        .vectors
        .iter()
        .map(|k| k.iter().zip(t).map(|(ki, &ti)| ki * BigInt::from(ti)).sum())
        .collect()
}

fn dominated(basis: &[Vec<u64>], t: &[u64]) -> bool {
    basis
        .iter()
        .any(|b| b.iter().zip(t).all(|(&bi, &ti)| bi <= ti))
}

/// Compute the minimal Hilbert basis by Contejean-Devie completion.
pub fn hilbert_basis(kernel: &KernelBasis, budget: &HilbertBudget) -> Result<HilbertBasis> {
    let n = kernel.cells.len();
    let unit_residuals: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            let mut e = vec![0u64; n];
            e[i] = 1;
            residual(kernel, &e)
        })
        .collect();

    let mut basis: Vec<Vec<u64>> = Vec::new();
    let mut frontier: Vec<(Vec<u64>, Vec<BigInt>)> = (0..n)
        .map(|i| {
            let mut e = vec![0u64; n];
            e[i] = 1;
            (e, unit_residuals[i].clone())
        })
        .collect();

    while !frontier.is_empty() {
        // solutions first: everything at this level has the same total degree,
        // so a solution can only reduce vectors of later levels
        for (t, r) in &frontier {
            if r.iter().all(Zero::is_zero) && !dominated(&basis, t) {
                basis.push(t.clone());
                if basis.len() > budget.max_generators {
                    return Err(Error::Capacity(format!(
                        "Hilbert basis exceeds {} generators",
                        budget.max_generators
                    )));
                }
            }
        }
        let mut next: Vec<(Vec<u64>, Vec<BigInt>)> = Vec::new();
        let mut seen: HashSet<Vec<u64>> = HashSet::new();
        for (t, r) in &frontier {
            if r.iter().all(Zero::is_zero) {
                continue;
            }
            for i in 0..n {
                // move only toward the constraint surface
                let step: BigInt = r
                    .iter()
                    .zip(&unit_residuals[i])
                    .map(|(a, b)| a * b)
                    .sum();
                if !step.is_negative() {
                    continue;
                }
                let mut t2 = t.clone();
                t2[i] += 1;
                if dominated(&basis, &t2) || seen.contains(&t2) {
                    continue;
                }
                let r2: Vec<BigInt> = r
                    .iter()
                    .zip(&unit_residuals[i])
                    .map(|(a, b)| a + b)
                    .collect();
                seen.insert(t2.clone());
                next.push((t2, r2));
                if next.len() > budget.max_frontier {
                    return Err(Error::Capacity(format!(
                        "Hilbert completion frontier exceeds {} vectors",
                        budget.max_frontier
                    )));
                }
            }
        }
        frontier = next;
    }

    basis.sort();
    Ok(HilbertBasis {
        cells: kernel.cells.clone(),
        generators: basis,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub pass: bool,
    pub witness: Option<String>,
}

impl Check {
    fn pass() -> Self {
        Check {
            pass: true,
            witness: None,
        }
    }

    fn fail(witness: String) -> Self {
        Check {
            pass: false,
            witness: Some(witness),
        }
    }
}

/// Independent verification of a claimed Hilbert basis: exact orthogonality,
/// pairwise irreducibility, and completeness up to a total-degree bound by
/// exhaustive decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct HilbertVerification {
    pub orthogonality: Check,
    pub minimality: Check,
    pub completeness: Check,
}

impl HilbertVerification {
    pub fn all_pass(&self) -> bool {
        self.orthogonality.pass && self.minimality.pass && self.completeness.pass
    }
}

pub fn verify_hilbert(
    basis: &HilbertBasis,
    kernel: &KernelBasis,
    bound: u64,
) -> HilbertVerification {
    let orthogonality = basis
        .generators
        .iter()
        .find(|g| residual(kernel, g).iter().any(|x| !x.is_zero()))
        .map(|g| Check::fail(format!("generator {g:?} not orthogonal to the kernel")))
        .unwrap_or_else(Check::pass);

    // a generator dominating another is reducible within the monoid
    let mut minimality = Check::pass();
    'outer: for (i, g) in basis.generators.iter().enumerate() {
        for (j, h) in basis.generators.iter().enumerate() {
            if i != j && g.iter().zip(h).all(|(&gi, &hi)| gi >= hi) {
                minimality = Check::fail(format!("generator {g:?} is reducible by {h:?}"));
                break 'outer;
            }
        }
    }

    let mut completeness = Check::pass();
    let mut memo: HashMap<Vec<u64>, bool> = HashMap::new();
    let mut stack = vec![(vec![0u64; basis.cells.len()], 0usize, 0u64)];
    // enumerate all t with total degree <= bound
    while let Some((t, pos, used)) = stack.pop() {
        if pos == basis.cells.len() {
            if used > 0
                && residual(kernel, &t).iter().all(Zero::is_zero)
                && !decomposes(&t, &basis.generators, &mut memo)
            {
                completeness = Check::fail(format!(
                    "vector {t:?} is orthogonal but not generated"
                ));
                break;
            }
            continue;
        }
        for v in 0..=(bound - used) {
            let mut t2 = t.clone();
            t2[pos] = v;
            stack.push((t2, pos + 1, used + v));
        }
    }

    HilbertVerification {
        orthogonality,
        minimality,
        completeness,
    }
}

fn decomposes(t: &[u64], generators: &[Vec<u64>], memo: &mut HashMap<Vec<u64>, bool>) -> bool {
    if t.iter().all(|&x| x == 0) {
        return true;
    }
    if let Some(&r) = memo.get(t) {
        return r;
    }
    let mut ok = false;
    for g in generators {
        if g.iter().zip(t).all(|(&gi, &ti)| gi <= ti) {
            let rest: Vec<u64> = t.iter().zip(g).map(|(&ti, &gi)| ti - gi).collect();
            if decomposes(&rest, generators, memo) {
                ok = true;
                break;
            }
        }
    }
    memo.insert(t.to_vec(), ok);
    ok
}

/// Design matrix whose columns are the Hilbert generators, parameters named
/// `zeta_1..zeta_u` in canonical generator order.
pub fn maximal_design(basis: &HilbertBasis) -> DesignMatrix {
    let u = basis.generators.len();
    let param_names = (1..=u).map(|j| format!("zeta_{j}")).collect();
    let entries = (0..basis.cells.len())
        .map(|i| basis.generators.iter().map(|g| g[i]).collect())
        .collect();
    DesignMatrix::new(basis.cells.clone(), param_names, entries)
}
