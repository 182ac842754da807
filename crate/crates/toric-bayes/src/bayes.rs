//! Dirichlet-multinomial marginal likelihoods and mixture Bayes factors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::instances::InstanceFamily;
use crate::tables::{CellIndex, ContingencyTable};

/// Per-cell Dirichlet hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPrior {
    pub alpha: BTreeMap<CellIndex, f64>,
}

impl DirichletPrior {
    pub fn symmetric(cells: &[CellIndex], alpha_bar: f64) -> Result<Self> {
        if !(alpha_bar > 0.0) || !alpha_bar.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "alpha must be a positive finite number, got {alpha_bar}"
            )));
        }
        Ok(Self {
            alpha: cells.iter().map(|&c| (c, alpha_bar)).collect(),
        })
    }

    /// Keep only the hyperparameters of the given support cells.
    pub fn restrict(&self, support: &[CellIndex]) -> Result<Self> {
        let alpha = support
            .iter()
            .map(|c| {
                self.alpha
                    .get(c)
                    .map(|&a| (*c, a))
                    .ok_or_else(|| Error::InvalidArgument(format!("no prior mass for cell {c}")))
            })
            .collect::<Result<_>>()?;
        Ok(Self { alpha })
    }

    pub fn total(&self) -> f64 {
        self.alpha.values().sum()
    }
}

/// `log h(y) = ln Gamma(sum y) - sum ln Gamma(y_i)`, the log normalizing
/// constant of a Dirichlet density.
pub fn log_h(y: &[f64]) -> f64 {
    let total: f64 = y.iter().sum();
    ln_gamma(total) - y.iter().map(|&v| ln_gamma(v)).sum::<f64>()
}

/// `log [ h(alpha) / h(alpha + n) ]`, the log of the Dirichlet moment
/// `E[prod theta_i^(n_i)]`.
fn h_ratio(alpha: &[f64], counts: &[u64]) -> f64 {
    let updated: Vec<f64> = alpha
        .iter()
        .zip(counts)
        .map(|(&a, &n)| a + n as f64)
        .collect();
    log_h(alpha) - log_h(&updated)
}

/// `log [ N! / prod n_x! ]`.
pub fn log_multinomial_coeff(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    ln_gamma(total as f64 + 1.0) - counts.iter().map(|&n| ln_gamma(n as f64 + 1.0)).sum::<f64>()
}

fn support_counts(
    counts: &BTreeMap<CellIndex, u64>,
    support: &[CellIndex],
) -> Result<Vec<u64>> {
    let support_set: BTreeSet<&CellIndex> = support.iter().collect();
    for (cell, &n) in counts {
        if n > 0 && !support_set.contains(cell) {
            return Err(Error::InconsistentInstance(format!(
                "observed count {n} at cell {cell} outside the instance support"
            )));
        }
    }
    Ok(support
        .iter()
        .map(|c| counts.get(c).copied().unwrap_or(0))
        .collect())
}

/// Log marginal likelihood of the saturated model on the given support under
/// a cell-wise Dirichlet prior.
pub fn marginal_saturated(
    counts: &BTreeMap<CellIndex, u64>,
    support: &[CellIndex],
    prior: &DirichletPrior,
) -> Result<f64> {
    let n = support_counts(counts, support)?;
    let prior = prior.restrict(support)?;
    let alpha: Vec<f64> = prior.alpha.values().copied().collect();
    // prior.alpha is a BTreeMap, so realign the counts to its key order
    let n: Vec<u64> = prior
        .alpha
        .keys()
        .map(|c| {
            let pos = support.iter().position(|s| s == c).unwrap();
            n[pos]
        })
        .collect();
    let value = log_multinomial_coeff(&n) + h_ratio(&alpha, &n);
    if value.is_nan() {
        return Err(Error::Numeric("saturated marginal is NaN".into()));
    }
    Ok(value)
}

/// A maximal complete-rectangle component of a quasi-independence support.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

/// Factorization of a quasi-independence support into free cells and
/// independence blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QiDecomposition {
    pub isolated: Vec<CellIndex>,
    pub blocks: Vec<Block>,
}

/// Split a support into cells whose probability is a free parameter and
/// rectangular blocks carrying an independence constraint.
///
/// A cell that is alone in its row (or alone in its column) among the cells
/// still under consideration has a private row (column) effect, so its
/// probability is unconstrained; such cells are peeled off repeatedly. The
/// remainder must be a disjoint union of complete rectangles, one
/// independence block each. Anything else is a genuinely toric support with
/// no product-Dirichlet marginal, which we refuse rather than approximate.
pub fn qi_decomposition(support: &[CellIndex]) -> Result<QiDecomposition> {
    let mut remaining: BTreeSet<CellIndex> = support.iter().copied().collect();
    if remaining.len() != support.len() {
        return Err(Error::InvalidArgument("duplicate support cells".into()));
    }
    let mut isolated = Vec::new();
    loop {
        let mut row_count: BTreeMap<usize, usize> = BTreeMap::new();
        let mut col_count: BTreeMap<usize, usize> = BTreeMap::new();
        for c in &remaining {
            *row_count.entry(c.row).or_insert(0) += 1;
            *col_count.entry(c.col).or_insert(0) += 1;
        }
        let peel = remaining
            .iter()
            .find(|c| row_count[&c.row] == 1 || col_count[&c.col] == 1)
            .copied();
        match peel {
            Some(c) => {
                remaining.remove(&c);
                isolated.push(c);
            }
            None => break,
        }
    }
    // connected components of the bipartite row/column graph
    let mut blocks = Vec::new();
    let mut unseen = remaining.clone();
    while let Some(&seed) = unseen.iter().next() {
        let mut rows = BTreeSet::from([seed.row]);
        let mut cols = BTreeSet::from([seed.col]);
        loop {
            let before = (rows.len(), cols.len());
            for c in &remaining {
                if rows.contains(&c.row) {
                    cols.insert(c.col);
                }
                if cols.contains(&c.col) {
                    rows.insert(c.row);
                }
            }
            if (rows.len(), cols.len()) == before {
                break;
            }
        }
        let members: Vec<CellIndex> = remaining
            .iter()
            .filter(|c| rows.contains(&c.row))
            .copied()
            .collect();
        if members.len() != rows.len() * cols.len() {
            return Err(Error::UnsupportedPattern(format!(
                "support component on rows {rows:?} and columns {cols:?} is not a \
                 complete rectangle; its marginal has no closed form here"
            )));
        }
        for c in &members {
            unseen.remove(c);
        }
        blocks.push(Block {
            rows: rows.into_iter().collect(),
            cols: cols.into_iter().collect(),
        });
    }
    isolated.sort();
    Ok(QiDecomposition { isolated, blocks })
}

/// Log marginal likelihood of the quasi-independence model on the given
/// support.
///
/// The model factorizes as a Dirichlet-multinomial over the coarse split
/// (one category per free cell, one per block) times, for each block, a
/// Dirichlet-multinomial on its row sums and one on its column sums, with
/// hyperparameters aggregated from the cell-wise prior.
pub fn marginal_qi(
    counts: &BTreeMap<CellIndex, u64>,
    support: &[CellIndex],
    prior: &DirichletPrior,
) -> Result<f64> {
    let n = support_counts(counts, support)?;
    let prior = prior.restrict(support)?;
    let decomp = qi_decomposition(support)?;
    let get_n = |c: &CellIndex| -> u64 {
        support.iter().position(|s| s == c).map(|i| n[i]).unwrap()
    };
    let get_a = |c: &CellIndex| -> f64 { prior.alpha[c] };

    let mut value = log_multinomial_coeff(&n);

    // coarse split over free cells and whole blocks
    let mut lambda_alpha = Vec::new();
    let mut lambda_counts = Vec::new();
    for c in &decomp.isolated {
        lambda_alpha.push(get_a(c));
        lambda_counts.push(get_n(c));
    }
    for b in &decomp.blocks {
        let cells = block_cells(b);
        lambda_alpha.push(cells.iter().map(|c| get_a(c)).sum());
        lambda_counts.push(cells.iter().map(|c| get_n(c)).sum());
    }
    value += h_ratio(&lambda_alpha, &lambda_counts);

    // independence within each block: row sums and column sums
    for b in &decomp.blocks {
        let row_alpha: Vec<f64> = b
            .rows
            .iter()
            .map(|&r| b.cols.iter().map(|&c| get_a(&CellIndex::new(r, c))).sum())
            .collect();
        let row_counts: Vec<u64> = b
            .rows
            .iter()
            .map(|&r| b.cols.iter().map(|&c| get_n(&CellIndex::new(r, c))).sum())
            .collect();
        let col_alpha: Vec<f64> = b
            .cols
            .iter()
            .map(|&c| b.rows.iter().map(|&r| get_a(&CellIndex::new(r, c))).sum())
            .collect();
        let col_counts: Vec<u64> = b
            .cols
            .iter()
            .map(|&c| b.rows.iter().map(|&r| get_n(&CellIndex::new(r, c))).sum())
            .collect();
        value += h_ratio(&row_alpha, &row_counts) + h_ratio(&col_alpha, &col_counts);
    }
    if value.is_nan() {
        return Err(Error::Numeric("quasi-independence marginal is NaN".into()));
    }
    Ok(value)
}

fn block_cells(b: &Block) -> Vec<CellIndex> {
    b.rows
        .iter()
        .flat_map(|&r| b.cols.iter().map(move |&c| CellIndex::new(r, c)))
        .collect()
}

/// Sum the hyperparameters over each block of a partition of the support.
///
/// Aggregating a Dirichlet over a partition yields a Dirichlet with the
/// summed parameters, so these are the hyperparameters of the coarsened
/// prior.
pub fn aggregate_alpha(
    prior: &DirichletPrior,
    partition: &[Vec<CellIndex>],
) -> Result<Vec<f64>> {
    let mut seen = BTreeSet::new();
    for block in partition {
        for c in block {
            if !prior.alpha.contains_key(c) {
                return Err(Error::InvalidArgument(format!(
                    "block cell {c} is outside the prior support"
                )));
            }
            if !seen.insert(*c) {
                return Err(Error::InvalidArgument(format!(
                    "cell {c} appears in more than one block"
                )));
            }
        }
    }
    if seen.len() != prior.alpha.len() {
        return Err(Error::InvalidArgument(
            "blocks do not cover the prior support".into(),
        ));
    }
    Ok(partition
        .iter()
        .map(|block| block.iter().map(|c| prior.alpha[c]).sum())
        .collect())
}

/// Posterior probability of the first model: `p BF / (p BF + 1 - p)`.
pub fn posterior_model_prob(bf: f64, prior_prob_qi: f64) -> f64 {
    prior_prob_qi * bf / (prior_prob_qi * bf + (1.0 - prior_prob_qi))
}

/// Strength of evidence against quasi-independence on the base-10 log scale
/// `lambda = log10(1 / BF)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evidence {
    SupportsQi,
    Poor,
    Substantial,
    Strong,
    Decisive,
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Evidence::SupportsQi => "supports quasi-independence",
            Evidence::Poor => "poor",
            Evidence::Substantial => "substantial",
            Evidence::Strong => "strong",
            Evidence::Decisive => "decisive",
        };
        f.write_str(s)
    }
}

/// Classify `lambda = log10(1/BF)` on the usual order-of-magnitude scale;
/// boundaries belong to the weaker class.
/// Classify a Bayes factor on the order-of-magnitude evidence scale.
pub fn jeffreys_class(bf_qi_vs_sz: f64) -> Evidence {
    evidence_class((1.0 / bf_qi_vs_sz).log10())
}

pub fn evidence_class(lambda: f64) -> Evidence {
    if lambda <= 0.0 {
        Evidence::SupportsQi
    } else if lambda <= 0.5 {
        Evidence::Poor
    } else if lambda <= 1.0 {
        Evidence::Substantial
    } else if lambda <= 2.0 {
        Evidence::Strong
    } else {
        Evidence::Decisive
    }
}

/// Full output of a Bayes-factor computation.
#[derive(Debug, Clone, Serialize)]
pub struct BfReport {
    pub xi: f64,
    pub alpha_bar: f64,
    /// Mixture Bayes factor of quasi-independence against the saturated
    /// structural-zero model.
    pub bf_qi_vs_sz: f64,
    /// Plain full-support ratio `m_QI0 / m_SZ0`, ignoring restricted
    /// instances.
    pub bf_conventional: f64,
    /// `log10(1 / bf_qi_vs_sz)`.
    pub log10_against_qi: f64,
    pub evidence: Evidence,
    /// Posterior probability of quasi-independence under the given prior
    /// model probability.
    pub posterior_prob_qi: f64,
    pub model_prior_qi: f64,
    /// Prior instance weights actually entering the mixture.
    pub weights_used: BTreeMap<String, f64>,
    /// Log marginal likelihood of each consistent instance.
    pub log_marginals: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

/// Mixture Bayes factor of the quasi-independence family against the
/// saturated family, each averaged over its data-consistent instances with
/// the cell-zeroing prior weights.
pub fn mixture_bayes_factor(
    table: &ContingencyTable,
    qi_family: &InstanceFamily,
    sz_family: &InstanceFamily,
    alpha_bar: f64,
    model_prior_qi: f64,
) -> Result<BfReport> {
    if !(model_prior_qi > 0.0 && model_prior_qi < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "model prior must lie in (0,1), got {model_prior_qi}"
        )));
    }
    let cells = table.free_cells();
    let prior = DirichletPrior::symmetric(&cells, alpha_bar)?;
    let counts = table.counts();

    let mut weights_used = BTreeMap::new();
    let mut log_marginals = BTreeMap::new();
    let mut warnings = Vec::new();

    let mut family_mass = |family: &InstanceFamily,
                           qi: bool,
                           warnings: &mut Vec<String>|
     -> Result<f64> {
        let mut total = 0.0f64;
        let mut any = false;
        for inst in &family.instances {
            let support = inst.support_cells();
            let consistent = counts
                .iter()
                .all(|(c, &n)| n == 0 || support.contains(c));
            if !consistent {
                continue;
            }
            let log_m = if qi {
                match marginal_qi(counts, &support, &prior) {
                    // the factorized form only covers the full support and
                    // product-shaped restrictions; anything else degenerates
                    // to the saturated marginal on the support
                    Err(Error::UnsupportedPattern(_)) if !inst.is_full_support() => {
                        warnings.push(format!(
                            "instance {}: no factorized marginal for its support, \
                             using the saturated marginal",
                            inst.label
                        ));
                        marginal_saturated(counts, &support, &prior)?
                    }
                    other => other?,
                }
            } else {
                marginal_saturated(counts, &support, &prior)?
            };
            let q = family.weights[&inst.label];
            total += q * log_m.exp();
            weights_used.insert(inst.label.clone(), q);
            log_marginals.insert(inst.label.clone(), log_m);
            any = true;
        }
        if !any {
            return Err(Error::InconsistentInstance(format!(
                "no instance of {} is consistent with the observed counts",
                family.model_name
            )));
        }
        Ok(total)
    };

    let qi_mass = family_mass(qi_family, true, &mut warnings)?;
    let sz_mass = family_mass(sz_family, false, &mut warnings)?;
    if !(qi_mass > 0.0) || !(sz_mass > 0.0) || !qi_mass.is_finite() || !sz_mass.is_finite() {
        return Err(Error::Numeric(format!(
            "degenerate mixture masses: qi={qi_mass}, sz={sz_mass}"
        )));
    }
    let bf = qi_mass / sz_mass;

    let full_qi = marginal_qi(counts, &cells, &prior)?;
    let full_sz = marginal_saturated(counts, &cells, &prior)?;
    let bf_conventional = (full_qi - full_sz).exp();

    let lambda = (1.0 / bf).log10();
    let posterior = posterior_model_prob(bf, model_prior_qi);
    Ok(BfReport {
        xi: qi_family.xi,
        alpha_bar,
        bf_qi_vs_sz: bf,
        bf_conventional,
        log10_against_qi: lambda,
        evidence: evidence_class(lambda),
        posterior_prob_qi: posterior,
        model_prior_qi,
        weights_used,
        log_marginals,
        warnings,
    })
}

/// One row of a calibration run.
#[derive(Debug, Clone, Serialize)]
pub struct CalibrationEntry {
    pub alpha_bar: f64,
    pub bf_qi_vs_sz: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationReport {
    pub xi: f64,
    pub entries: Vec<CalibrationEntry>,
    /// Candidate whose Bayes factor on the uninformative table is closest
    /// to 1.
    pub chosen_alpha_bar: f64,
}

/// Score candidate `alpha` values on an imaginary table holding one count in
/// every free cell; an uninformative prior should leave the two models close
/// to equipoised there.
pub fn calibrate_alpha(
    table: &ContingencyTable,
    qi_family: &InstanceFamily,
    sz_family: &InstanceFamily,
    candidates: &[f64],
) -> Result<CalibrationReport> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidate alpha values".into()));
    }
    let unit = table.unit_table();
    let mut entries = Vec::new();
    for &alpha_bar in candidates {
        let report = mixture_bayes_factor(&unit, qi_family, sz_family, alpha_bar, 0.5)?;
        entries.push(CalibrationEntry {
            alpha_bar,
            bf_qi_vs_sz: report.bf_qi_vs_sz,
        });
    }
    let chosen = entries
        .iter()
        .min_by(|a, b| {
            (a.bf_qi_vs_sz - 1.0)
                .abs()
                .total_cmp(&(b.bf_qi_vs_sz - 1.0).abs())
        })
        .unwrap()
        .alpha_bar;
    Ok(CalibrationReport {
        xi: qi_family.xi,
        entries,
        chosen_alpha_bar: chosen,
    })
}
