//! End-to-end pipeline: table -> toric structure -> instances -> Bayes factors.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::bayes::{mixture_bayes_factor, BfReport};
use crate::error::Result;
use crate::hilbert::{hilbert_basis, maximal_design, HilbertBasis, HilbertBudget};
use crate::instances::{
    consistent_instances, count_by_zero_cells, enumerate_instances, instance_prior_weights,
};
use crate::lattice::{build_qi_design, integer_kernel, kernel_binomials, KernelBasis};
use crate::tables::{CellIndex, ContingencyTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Mixture,
    Conventional,
}

#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub xi: f64,
    pub alpha_bar: f64,
    pub model_prior_qi: f64,
    pub mode: Mode,
    pub budget: HilbertBudget,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            xi: 0.1,
            alpha_bar: 1.0,
            model_prior_qi: 0.5,
            mode: Mode::Mixture,
            budget: HilbertBudget::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub mode: Mode,
    pub xi: f64,
    pub alpha_bar: f64,
    pub model_prior_qi: f64,
    /// Row-major order of the free cells; every vector in the report is
    /// indexed against it.
    pub cell_order: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableSummary {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub total: u64,
    pub structural_zeros: Vec<CellIndex>,
    pub n_free_cells: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LatticeSummary {
    pub kernel_rank: usize,
    /// Kernel basis rows in Hermite normal form, as decimal strings.
    pub kernel_vectors: Vec<Vec<String>>,
    /// Generating binomial equations of the toric variety.
    pub binomials: Vec<String>,
    pub dropped_parameters: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilySummary {
    pub total_instances: usize,
    pub by_zero_cells: BTreeMap<usize, usize>,
    pub consistent: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub provenance: Provenance,
    pub table: TableSummary,
    pub lattice: LatticeSummary,
    pub hilbert_generators: Vec<Vec<u64>>,
    pub qi_instances: FamilySummary,
    pub sz_instances: FamilySummary,
    pub result: BfReport,
}

fn family_summary(
    instances: &[crate::instances::ModelInstance],
    table: &ContingencyTable,
) -> FamilySummary {
    FamilySummary {
        total_instances: instances.len(),
        by_zero_cells: count_by_zero_cells(instances),
        consistent: consistent_instances(instances, table)
            .iter()
            .map(|i| i.label.clone())
            .collect(),
    }
}

/// Derive the toric structure of the quasi-independence model for the table,
/// enumerate both instance families, and compute the Bayes-factor report.
pub fn run_analysis(table: &ContingencyTable, config: &AnalysisConfig) -> Result<AnalysisReport> {
    let (design, dropped) = build_qi_design(table);
    let kernel = integer_kernel(&design);
    let basis = hilbert_basis(&kernel, &config.budget)?;
    let qi_max = maximal_design(&basis);
    let qi_instances = enumerate_instances(&qi_max, "QI")?;

    let sz_kernel = KernelBasis {
        cells: table.free_cells(),
        vectors: vec![],
    };
    let sz_basis = hilbert_basis(&sz_kernel, &config.budget)?;
    let sz_instances = enumerate_instances(&maximal_design(&sz_basis), "SZ")?;

    let qi_family = instance_prior_weights(&qi_instances, "QI", config.xi)?;
    let sz_family = instance_prior_weights(&sz_instances, "SZ", config.xi)?;

    let result = mixture_bayes_factor(
        table,
        &qi_family,
        &sz_family,
        config.alpha_bar,
        config.model_prior_qi,
    )?;

    Ok(AnalysisReport {
        provenance: Provenance {
            tool: "toric-bayes".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            mode: config.mode,
            xi: config.xi,
            alpha_bar: config.alpha_bar,
            model_prior_qi: config.model_prior_qi,
            cell_order: table.free_cells().iter().map(|c| c.to_string()).collect(),
        },
        table: TableSummary {
            row_labels: table.row_labels().to_vec(),
            col_labels: table.col_labels().to_vec(),
            total: table.total(),
            structural_zeros: table.structural_zeros().iter().copied().collect(),
            n_free_cells: table.free_cells().len(),
        },
        lattice: LatticeSummary {
            kernel_rank: kernel.rank(),
            kernel_vectors: kernel
                .vectors
                .iter()
                .map(|v| v.iter().map(|x| x.to_string()).collect())
                .collect(),
            binomials: kernel_binomials(&kernel)
                .iter()
                .map(|b| b.to_string())
                .collect(),
            dropped_parameters: dropped,
        },
        hilbert_generators: basis.generators.clone(),
        qi_instances: family_summary(&qi_instances, table),
        sz_instances: family_summary(&sz_instances, table),
        result,
    })
}

/// Expose the intermediate lattice objects for the structure-only subcommands.
pub fn derive_structure(
    table: &ContingencyTable,
    budget: &HilbertBudget,
) -> Result<(KernelBasis, HilbertBasis, Vec<String>)> {
    let (design, dropped) = build_qi_design(table);
    let kernel = integer_kernel(&design);
    let basis = hilbert_basis(&kernel, budget)?;
    Ok((kernel, basis, dropped))
}

/// Human-readable rendering of the analysis, following the order of the
/// derivation: data, lattice, generators, instances, and finally evidence.
pub fn render_text(report: &AnalysisReport) -> String {
    let mut out = String::new();
    let w = &mut out;
    let p = &report.provenance;
    writeln!(w, "toric-bayes {} ({:?} mode)", p.version, p.mode).unwrap();
    writeln!(
        w,
        "table: {} x {} ({} observations, {} structural zeros)",
        report.table.row_labels.len(),
        report.table.col_labels.len(),
        report.table.total,
        report.table.structural_zeros.len()
    )
    .unwrap();
    writeln!(
        w,
        "priors: xi = {}, alpha = {}, Pr(QI) = {}",
        p.xi, p.alpha_bar, p.model_prior_qi
    )
    .unwrap();
    writeln!(w, "cell order: {}", p.cell_order.join(" ")).unwrap();
    if !report.lattice.dropped_parameters.is_empty() {
        writeln!(
            w,
            "dropped vacuous parameters: {}",
            report.lattice.dropped_parameters.join(", ")
        )
        .unwrap();
    }
    writeln!(w).unwrap();
    writeln!(w, "kernel rank {}", report.lattice.kernel_rank).unwrap();
    for v in &report.lattice.kernel_vectors {
        writeln!(w, "  [{}]", v.join(", ")).unwrap();
    }
    writeln!(w, "binomial equations:").unwrap();
    for b in &report.lattice.binomials {
        writeln!(w, "  {b} = 0").unwrap();
    }
    writeln!(w).unwrap();
    writeln!(
        w,
        "Hilbert basis: {} generators",
        report.hilbert_generators.len()
    )
    .unwrap();
    for g in &report.hilbert_generators {
        let s: Vec<String> = g.iter().map(|x| x.to_string()).collect();
        writeln!(w, "  ({})", s.join(", ")).unwrap();
    }
    writeln!(w).unwrap();
    for (name, fam) in [("QI", &report.qi_instances), ("SZ", &report.sz_instances)] {
        let hist: Vec<String> = fam
            .by_zero_cells
            .iter()
            .map(|(z, n)| format!("{z}:{n}"))
            .collect();
        writeln!(
            w,
            "{name}: {} instances (by zero cells {}), consistent with the data: {}",
            fam.total_instances,
            hist.join(" "),
            fam.consistent.join(", ")
        )
        .unwrap();
    }
    writeln!(w).unwrap();
    let r = &report.result;
    writeln!(w, "instance weights and log marginals:").unwrap();
    for (label, q) in &r.weights_used {
        writeln!(
            w,
            "  {label}: q = {:.6}, log m = {:.6}",
            q, r.log_marginals[label]
        )
        .unwrap();
    }
    writeln!(w).unwrap();
    writeln!(w, "BF(QI : SZ) mixture      = {:.6}", r.bf_qi_vs_sz).unwrap();
    writeln!(w, "BF(QI : SZ) conventional = {:.6}", r.bf_conventional).unwrap();
    let headline = match p.mode {
        Mode::Mixture => r.bf_qi_vs_sz,
        Mode::Conventional => r.bf_conventional,
    };
    writeln!(
        w,
        "log10(1/BF) = {:.4} -> evidence against QI: {}",
        (1.0 / headline).log10(),
        crate::bayes::evidence_class((1.0 / headline).log10())
    )
    .unwrap();
    writeln!(w, "posterior Pr(QI | data) = {:.4}", r.posterior_prob_qi).unwrap();
    for warning in &r.warnings {
        writeln!(w, "warning: {warning}").unwrap();
    }
    out
}
