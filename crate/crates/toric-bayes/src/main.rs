use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use toric_bayes::analysis::{derive_structure, render_text, run_analysis, AnalysisConfig, Mode};
use toric_bayes::bayes::calibrate_alpha;
use toric_bayes::error::{Error, Result};
use toric_bayes::hilbert::{maximal_design, HilbertBudget};
use toric_bayes::instances::{
    consistent_instances, count_by_zero_cells, enumerate_instances, instance_prior_weights,
};
use toric_bayes::lattice::kernel_binomials;
use toric_bayes::tables::ContingencyTable;

#[derive(Parser)]
#[command(
    name = "toric-bayes",
    version,
    about = "Bayesian comparison of quasi-independence against the saturated model \
             on two-way tables with structural zeros"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Mixture,
    Conventional,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Qi,
    Sz,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and report Bayes factors
    Analyze {
        #[arg(long)]
        input: PathBuf,
        /// Prior probability that any single cell is switched off
        #[arg(long, default_value_t = 0.1)]
        xi: f64,
        /// Symmetric Dirichlet hyperparameter per cell
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Prior probability of the quasi-independence model
        #[arg(long = "model-prior", default_value_t = 0.5)]
        model_prior: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Mixture)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
    },
    /// Print the integer kernel and binomial equations of the model
    Kernel {
        #[arg(long)]
        input: PathBuf,
    },
    /// Print the minimal Hilbert basis of the model monoid
    Hilbert {
        #[arg(long)]
        input: PathBuf,
    },
    /// Enumerate the instances of a model family
    Instances {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = ModelArg::Qi)]
        model: ModelArg,
        /// Keep only instances consistent with the counts in this table
        #[arg(long = "consistent-with")]
        consistent_with: Option<PathBuf>,
    },
    /// Score candidate Dirichlet hyperparameters on an uninformative table
    Calibrate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        xi: f64,
        /// Comma-separated candidate alpha values
        #[arg(long, value_delimiter = ',', default_value = "0.5,1.0")]
        alphas: Vec<f64>,
    },
}

fn load_table(path: &Path) -> Result<ContingencyTable> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        ContingencyTable::from_csv(&text)
    } else {
        ContingencyTable::from_json(&text)
    }
}

fn budget_from_env() -> Result<HilbertBudget> {
    let mut budget = HilbertBudget::default();
    if let Ok(raw) = std::env::var("TORIC_BAYES_BUDGET") {
        let n: usize = raw.trim().parse().map_err(|_| {
            Error::InvalidArgument(format!("TORIC_BAYES_BUDGET must be a positive integer, got {raw:?}"))
        })?;
        if n == 0 {
            return Err(Error::InvalidArgument(
                "TORIC_BAYES_BUDGET must be positive".into(),
            ));
        }
        budget.max_generators = n;
        budget.max_frontier = n.saturating_mul(200);
    }
    Ok(budget)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Numeric(format!("cannot serialize report: {e}")))?;
    println!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct KernelDoc {
    cells: Vec<String>,
    basis_vectors: Vec<Vec<String>>,
    binomials_as_strings: Vec<String>,
}

#[derive(Serialize)]
struct HilbertDoc {
    generators: Vec<Vec<u64>>,
    param_names: Vec<String>,
    cell_order: Vec<String>,
}

#[derive(Serialize)]
struct InstanceDoc {
    label: String,
    support: Vec<u8>,
    z: usize,
}

#[derive(Serialize)]
struct InstancesDoc {
    model: String,
    count: usize,
    by_zero_cells: BTreeMap<usize, usize>,
    instances: Vec<InstanceDoc>,
}

fn run(cli: Cli) -> Result<()> {
    let budget = budget_from_env()?;
    match cli.command {
        Command::Analyze {
            input,
            xi,
            alpha,
            model_prior,
            mode,
            format,
        } => {
            let table = load_table(&input)?;
            let config = AnalysisConfig {
                xi,
                alpha_bar: alpha,
                model_prior_qi: model_prior,
                mode: match mode {
                    ModeArg::Mixture => Mode::Mixture,
                    ModeArg::Conventional => Mode::Conventional,
                },
                budget,
            };
            let report = run_analysis(&table, &config)?;
            match format {
                FormatArg::Json => print_json(&report)?,
                FormatArg::Text => print!("{}", render_text(&report)),
            }
        }
        Command::Kernel { input } => {
            let table = load_table(&input)?;
            let (kernel, _, _) = derive_structure(&table, &budget)?;
            print_json(&KernelDoc {
                cells: kernel.cells.iter().map(|c| c.to_string()).collect(),
                basis_vectors: kernel
                    .vectors
                    .iter()
                    .map(|v| v.iter().map(|x| x.to_string()).collect())
                    .collect(),
                binomials_as_strings: kernel_binomials(&kernel)
                    .iter()
                    .map(|b| b.to_string())
                    .collect(),
            })?;
        }
        Command::Hilbert { input } => {
            let table = load_table(&input)?;
            let (_, basis, _) = derive_structure(&table, &budget)?;
            let design = maximal_design(&basis);
            print_json(&HilbertDoc {
                generators: basis.generators.clone(),
                param_names: design.param_names.clone(),
                cell_order: basis.cells.iter().map(|c| c.to_string()).collect(),
            })?;
        }
        Command::Instances {
            input,
            model,
            consistent_with,
        } => {
            let table = load_table(&input)?;
            let (model_name, maximal) = match model {
                ModelArg::Qi => {
                    let (_, basis, _) = derive_structure(&table, &budget)?;
                    ("QI", maximal_design(&basis))
                }
                ModelArg::Sz => {
                    let kernel = toric_bayes::lattice::KernelBasis {
                        cells: table.free_cells(),
                        vectors: vec![],
                    };
                    let basis = toric_bayes::hilbert::hilbert_basis(&kernel, &budget)?;
                    ("SZ", maximal_design(&basis))
                }
            };
            let mut instances = enumerate_instances(&maximal, model_name)?;
            if let Some(path) = consistent_with {
                let data = load_table(&path)?;
                instances = consistent_instances(&instances, &data);
                if instances.is_empty() {
                    return Err(Error::InconsistentInstance(format!(
                        "no {model_name} instance is consistent with {}",
                        path.display()
                    )));
                }
            }
            print_json(&InstancesDoc {
                model: model_name.to_string(),
                count: instances.len(),
                by_zero_cells: count_by_zero_cells(&instances),
                instances: instances
                    .iter()
                    .map(|i| InstanceDoc {
                        label: i.label.clone(),
                        support: i.support.iter().map(|&s| s as u8).collect(),
                        z: i.zero_cell_count,
                    })
                    .collect(),
            })?;
        }
        Command::Calibrate { input, xi, alphas } => {
            let table = load_table(&input)?;
            let (_, basis, _) = derive_structure(&table, &budget)?;
            let qi = enumerate_instances(&maximal_design(&basis), "QI")?;
            let sz_kernel = toric_bayes::lattice::KernelBasis {
                cells: table.free_cells(),
                vectors: vec![],
            };
            let sz_basis = toric_bayes::hilbert::hilbert_basis(&sz_kernel, &budget)?;
            let sz = enumerate_instances(&maximal_design(&sz_basis), "SZ")?;
            let qi_family = instance_prior_weights(&qi, "QI", xi)?;
            let sz_family = instance_prior_weights(&sz, "SZ", xi)?;
            let report = calibrate_alpha(&table, &qi_family, &sz_family, &alphas)?;
            print_json(&report)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
