//! Command-line interface for cherry-vine copula modeling: structure
//! validation, truncated-vine fitting, density evaluation, sampling,
//! truncation, junction-tree transformation, and divergence-based model
//! comparison.
//!
//! Exit codes: 0 success, 1 domain failure (invalid structure, unattainable
//! parameters), 2 malformed input (unparsable files, bad flags). Every
//! command is deterministic given its flags and `--seed`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cherryvine::assess;
use cherryvine::bicop::{Family, FitMethod};
use cherryvine::error::Error;
use cherryvine::io::{
    format_value, read_csv_data, read_json, write_csv_data, write_json, ModelFile, StructureFile,
};
use cherryvine::learn::{
    fit_truncated_vine, junction_tree_to_cherry_tree, pseudo_observations, FitOptions,
    PseudoObservations,
};
use cherryvine::numeric::CLAMP_EPS;
use cherryvine::vine::VineModel;

/// Default seed used by all randomized commands, so tutorial transcripts
/// reproduce exactly.
const DEFAULT_SEED: u64 = 12345;

#[derive(Parser)]
#[command(
    name = "cherryvine",
    version,
    about = "Junction-tree and cherry-vine copula modeling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a structure file (no-subset, cover and running
    /// intersection checks).
    Validate {
        /// Structure JSON file.
        #[arg(long)]
        structure: PathBuf,
        /// Optional path for the JSON validation report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a truncated vine to CSV data.
    Fit {
        /// CSV data file with a header row, one column per variable.
        #[arg(long)]
        data: PathBuf,
        /// Truncation level (1 = Markov tree, d-1 = full vine).
        #[arg(long)]
        k: usize,
        /// Comma-separated family pool.
        #[arg(long, default_value = "independence,gaussian,clayton,gumbel,frank")]
        families: String,
        /// Seed for tie jittering.
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Significance level for the pairwise independence filter
        /// (omitted = no filtering).
        #[arg(long)]
        alpha: Option<f64>,
        /// Refine tau-inverted parameters by maximum likelihood.
        #[arg(long)]
        mle: bool,
        /// Output model JSON file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate log densities of a model at points from a CSV file.
    Density {
        #[arg(long)]
        model: PathBuf,
        /// CSV of points on the copula scale (values in (0,1)).
        #[arg(long)]
        data: PathBuf,
        /// Output CSV (one log density per row).
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw samples from a model.
    Sample {
        #[arg(long)]
        model: PathBuf,
        /// Number of rows to draw.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Truncate a model at a level: all pair copulas with conditioning
    /// sets of that size or larger become independence.
    Truncate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Transform a junction-tree structure into a k-th order cherry tree
    /// containing every original cluster.
    Transform {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare models against a reference by Monte-Carlo KL divergence
    /// (and by information criteria when data is supplied).
    Compare {
        /// Model JSON files to score.
        #[arg(long, num_args = 1.., required = true)]
        models: Vec<PathBuf>,
        /// Reference model JSON file.
        #[arg(long)]
        reference: PathBuf,
        /// Optional CSV data for log-likelihood/AIC/BIC columns.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Monte-Carlo sample count per model.
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Output CSV report.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Validate { structure, out } => cmd_validate(&structure, out.as_deref()),
        Command::Fit {
            data,
            k,
            families,
            seed,
            alpha,
            mle,
            out,
        } => cmd_fit(&data, k, &families, seed, alpha, mle, &out),
        Command::Density { model, data, out } => cmd_density(&model, &data, &out),
        Command::Sample {
            model,
            n,
            seed,
            out,
        } => cmd_sample(&model, n, seed, &out),
        Command::Truncate { model, k, out } => cmd_truncate(&model, k, &out),
        Command::Transform { structure, k, out } => cmd_transform(&structure, k, &out),
        Command::Compare {
            models,
            reference,
            data,
            n,
            seed,
            out,
        } => cmd_compare(&models, &reference, data.as_deref(), n, seed, &out),
    }
}

fn cmd_validate(structure: &Path, out: Option<&Path>) -> Result<ExitCode, Error> {
    let file: StructureFile = read_json(structure)?;
    let (vertices, clusters) = file.hypergraph()?;
    let report = cherryvine::graph::validate_hypergraph(&vertices, &clusters)?;

    if report.valid {
        println!("valid: {} clusters satisfy the junction-tree conditions", clusters.len());
        if let Some(order) = &report.witness_ordering {
            let rendered: Vec<String> = order.iter().map(|i| clusters[*i].to_string()).collect();
            println!("witness ordering: {}", rendered.join(" -> "));
        }
    } else {
        for violation in &report.violations {
            println!("{}: {}", violation.rule, violation.description);
        }
    }
    if let Some(path) = out {
        #[derive(serde::Serialize)]
        struct ReportFile {
            valid: bool,
            violations: Vec<ViolationFile>,
            witness_ordering: Option<Vec<usize>>,
        }
        #[derive(serde::Serialize)]
        struct ViolationFile {
            rule: String,
            description: String,
            elements: Vec<String>,
        }
        let json = ReportFile {
            valid: report.valid,
            violations: report
                .violations
                .iter()
                .map(|v| ViolationFile {
                    rule: v.rule.to_string(),
                    description: v.description.clone(),
                    elements: v.elements.clone(),
                })
                .collect(),
            witness_ordering: report.witness_ordering.clone(),
        };
        write_json(path, &json)?;
    }
    Ok(if report.valid {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn parse_families(spec: &str) -> Result<Vec<Family>, Error> {
    let mut families = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        families.push(part.parse()?);
    }
    if families.is_empty() {
        return Err(Error::EmptyFamilyPool);
    }
    Ok(families)
}

fn cmd_fit(
    data: &Path,
    k: usize,
    families: &str,
    seed: u64,
    alpha: Option<f64>,
    mle: bool,
    out: &Path,
) -> Result<ExitCode, Error> {
    let table = read_csv_data(data)?;
    let families = parse_families(families)?;
    let po = pseudo_observations(&table.rows, seed)?;
    let options = FitOptions {
        method: if mle {
            FitMethod::TauInversionMle
        } else {
            FitMethod::TauInversion
        },
        independence_alpha: alpha,
    };
    let model = fit_truncated_vine(&po, k, &families, options)?;

    let mut by_level: std::collections::BTreeMap<usize, Vec<String>> = Default::default();
    for (label, copula) in model.pair_copulas() {
        let desc = match copula.parameter() {
            Some(p) => format!("{label} {}({:.4})", copula.family(), p),
            None => format!("{label} {}", copula.family()),
        };
        by_level.entry(label.cond.len() + 1).or_default().push(desc);
    }
    for (level, links) in &by_level {
        println!("tree {level}: {}", links.join("  "));
    }
    let ll = assess::log_likelihood(&model, &po)?;
    println!(
        "log-likelihood: {:.6}  dependent links: {}",
        ll,
        model.dependent_link_count()
    );
    write_json(out, &ModelFile::from_model(&model))?;
    println!("model written to {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn load_model(path: &Path) -> Result<VineModel, Error> {
    let file: ModelFile = read_json(path)?;
    file.to_model()
}

fn cmd_density(model: &Path, data: &Path, out: &Path) -> Result<ExitCode, Error> {
    let model = load_model(model)?;
    let table = read_csv_data(data)?;
    if table.d() != model.d() {
        return Err(Error::DimensionMismatch {
            expected: model.d(),
            got: table.d(),
        });
    }
    let mut clamped = 0usize;
    let mut values = Vec::with_capacity(table.n());
    for row in &table.rows {
        clamped += row
            .iter()
            .filter(|&&v| !(CLAMP_EPS..=1.0 - CLAMP_EPS).contains(&v))
            .count();
        values.push(vec![model.log_density(row)?]);
    }
    if clamped > 0 {
        eprintln!("warning: {clamped} values outside (0,1) were clamped to the evaluation domain");
    }
    write_csv_data(out, &["log_density".to_string()], &values)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sample(model: &Path, n: usize, seed: u64, out: &Path) -> Result<ExitCode, Error> {
    let model = load_model(model)?;
    let rows = model.sample(n, seed)?;
    let headers: Vec<String> = model
        .structure()
        .vertices()
        .labels()
        .iter()
        .map(|v| format!("u{v}"))
        .collect();
    write_csv_data(out, &headers, &rows)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_truncate(model: &Path, k: usize, out: &Path) -> Result<ExitCode, Error> {
    let model = load_model(model)?;
    let truncated = model.truncate(k)?;
    write_json(out, &ModelFile::from_model(&truncated))?;
    println!(
        "truncated at level {k}: {} dependent links remain",
        truncated.dependent_link_count()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_transform(structure: &Path, k: usize, out: &Path) -> Result<ExitCode, Error> {
    let file: StructureFile = read_json(structure)?;
    let jt = file.junction_tree()?;
    let cherry = junction_tree_to_cherry_tree(&jt, k)?;
    write_json(out, &StructureFile::from_junction_tree(cherry.base()))?;
    println!(
        "embedded {} clusters into a {k}-th order cherry tree with {} clusters",
        jt.clusters().len(),
        cherry.clusters().len()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(
    models: &[PathBuf],
    reference: &Path,
    data: Option<&Path>,
    n: usize,
    seed: u64,
    out: &Path,
) -> Result<ExitCode, Error> {
    let reference_model = load_model(reference)?;
    let po: Option<PseudoObservations> = match data {
        Some(path) => {
            let table = read_csv_data(path)?;
            Some(pseudo_observations(&table.rows, seed)?)
        }
        None => None,
    };

    let mut lines = vec![
        "model,loglik,aic,bic,n_params,kl_vs_reference,kl_stderr".to_string(),
    ];
    for path in models {
        let model = load_model(path)?;
        if model.d() != reference_model.d() {
            return Err(Error::DimensionMismatch {
                expected: reference_model.d(),
                got: model.d(),
            });
        }
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let (loglik, aic, bic, n_params) = match &po {
            Some(po) => {
                let ic = assess::information_criteria(&model, po)?;
                (
                    format_value(ic.log_likelihood),
                    format_value(ic.aic),
                    format_value(ic.bic),
                    ic.n_params.to_string(),
                )
            }
            None => {
                let n_params: usize = model
                    .pair_copulas()
                    .map(|(_, c)| c.family().parameter_count())
                    .sum();
                (String::new(), String::new(), String::new(), n_params.to_string())
            }
        };
        let kl = assess::kl_divergence_mc(&model, &reference_model, n, seed)?;
        lines.push(format!(
            "{id},{loglik},{aic},{bic},{n_params},{},{}",
            format_value(kl.value),
            format_value(kl.std_error)
        ));
        println!(
            "{id}: KL vs reference = {:.6e} (stderr {:.3e})",
            kl.value, kl.std_error
        );
    }
    std::fs::write(out, lines.join("\n") + "\n")?;
    Ok(ExitCode::SUCCESS)
}
