//! Enumeration of model instances: the restricted-support exponential models
//! obtained by zeroing subsets of the maximal toric parameterization.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::DesignMatrix;
use crate::tables::{CellIndex, ContingencyTable};

/// Hard cap on the number of generator columns accepted for exhaustive
/// subset enumeration.
pub const MAX_ENUM_GENERATORS: usize = 24;

/// One instance of a toric model: a support together with the generators that
/// survive on it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelInstance {
    /// Support flags over the canonical cell order.
    pub support: Vec<bool>,
    /// Number of zero-probability cells, `|A| - |support|`.
    pub zero_cell_count: usize,
    pub restricted_design: DesignMatrix,
    pub label: String,
}

impl ModelInstance {
    pub fn support_cells(&self) -> Vec<CellIndex> {
        self.restricted_design.cells.clone()
    }

    pub fn is_full_support(&self) -> bool {
        self.zero_cell_count == 0
    }
}

/// A model together with all of its instances and their prior weights.
#[derive(Debug, Clone, Serialize)]
pub struct InstanceFamily {
    pub model_name: String,
    pub instances: Vec<ModelInstance>,
    pub xi: f64,
    /// label -> prior probability q_h
    pub weights: BTreeMap<String, f64>,
    /// C(xi), the normalizer of the raw weights.
    pub normalizer: f64,
}

/// All distinct supports reachable by zeroing subsets of the generators of a
/// maximal design.
///
/// Order is deterministic: descending support size, then lexicographic on the
/// support flags. Labels are `<model>_<z>_<index-within-z>`; the full-support
/// instance of a model `M` is labelled `M0`, and a single-zero-cell instance
/// `M1_k`, mirroring the usual subscript-by-zero-count naming.
pub fn enumerate_instances(
    maximal: &DesignMatrix,
    model_name: &str,
) -> Result<Vec<ModelInstance>> {
    let u = maximal.n_params();
    let n = maximal.n_cells();
    if u > MAX_ENUM_GENERATORS {
        return Err(Error::Capacity(format!(
            "{u} generators exceed the enumeration cap of {MAX_ENUM_GENERATORS}"
        )));
    }
    let mut supports: HashMap<Vec<bool>, ()> = HashMap::new();
    for mask in 0u64..(1 << u) {
        let support: Vec<bool> = (0..n)
            .map(|i| (0..u).all(|j| mask >> j & 1 == 0 || maximal.entries[i][j] == 0))
            .collect();
        if support.iter().any(|&s| s) {
            supports.insert(support, ());
        }
    }
    let mut supports: Vec<Vec<bool>> = supports.into_keys().collect();
    supports.sort_by(|a, b| {
        let (na, nb) = (count(a), count(b));
        nb.cmp(&na).then_with(|| b.cmp(a))
    });

    let mut by_z: BTreeMap<usize, usize> = BTreeMap::new();
    let instances = supports
        .into_iter()
        .map(|support| {
            let z = n - count(&support);
            let idx = by_z.entry(z).or_insert(0);
            let label = if z == 0 {
                format!("{model_name}0")
            } else {
                format!("{model_name}{z}_{idx}")
            };
            *idx += 1;
            restrict(maximal, support, label)
        })
        .collect();
    Ok(instances)
}

fn count(support: &[bool]) -> usize {
    support.iter().filter(|&&s| s).count()
}

fn restrict(maximal: &DesignMatrix, support: Vec<bool>, label: String) -> ModelInstance {
    let kept_rows: Vec<usize> = (0..maximal.n_cells()).filter(|&i| support[i]).collect();
    // keep generators positive somewhere on the support
    let kept_cols: Vec<usize> = (0..maximal.n_params())
        .filter(|&j| kept_rows.iter().any(|&i| maximal.entries[i][j] > 0))
        .collect();
    let design = DesignMatrix::new(
        kept_rows.iter().map(|&i| maximal.cells[i]).collect(),
        kept_cols
            .iter()
            .map(|&j| maximal.param_names[j].clone())
            .collect(),
        kept_rows
            .iter()
            .map(|&i| kept_cols.iter().map(|&j| maximal.entries[i][j]).collect())
            .collect(),
    );
    ModelInstance {
        zero_cell_count: maximal.n_cells() - kept_rows.len(),
        support,
        restricted_design: design,
        label,
    }
}

/// Keep the instances whose support covers every positive-count cell.
pub fn consistent_instances(
    instances: &[ModelInstance],
    table: &ContingencyTable,
) -> Vec<ModelInstance> {
    let positive = table.positive_cells();
    instances
        .iter()
        .filter(|inst| {
            let support: BTreeSet<CellIndex> = inst.support_cells().into_iter().collect();
            positive.iter().all(|c| support.contains(c))
        })
        .cloned()
        .collect()
}

/// Independent cell-zeroing prior: instance `h` with `z_h` zero cells gets
/// weight `xi^z (1-xi)^(|A|-z) / C(xi)`.
pub fn instance_prior_weights(
    instances: &[ModelInstance],
    model_name: &str,
    xi: f64,
) -> Result<InstanceFamily> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "xi must lie in (0,1), got {xi}"
        )));
    }
    let n_cells = instances
        .first()
        .map(|i| i.support.len())
        .ok_or_else(|| Error::InvalidArgument("empty instance family".into()))?;
    let raw: Vec<f64> = instances
        .iter()
        .map(|i| {
            xi.powi(i.zero_cell_count as i32) * (1.0 - xi).powi((n_cells - i.zero_cell_count) as i32)
        })
        .collect();
    let normalizer: f64 = raw.iter().sum();
    let weights = instances
        .iter()
        .zip(&raw)
        .map(|(i, w)| (i.label.clone(), w / normalizer))
        .collect();
    Ok(InstanceFamily {
        model_name: model_name.to_string(),
        instances: instances.to_vec(),
        xi,
        weights,
        normalizer,
    })
}

/// Histogram of instances by zero-cell count.
pub fn count_by_zero_cells(instances: &[ModelInstance]) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for i in instances {
        *hist.entry(i.zero_cell_count).or_insert(0) += 1;
    }
    hist
}
