//! Command-line front end: run studies, simulate networks, fit and check
//! network models, synthesize attribute tables, and summarize graphs.

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use plasmode::copula::SynthesisParams;
use plasmode::datagen::{AttributeGenerator, ExposureScheme};
use plasmode::ergm::{gof, mple_fit, simulate, ErgmModel, SamplerConfig, TermSpec};
use plasmode::graph::{read_edge_list, summarize, write_edge_list};
use plasmode::harness::run_study_file;
use plasmode::table::NodeTable;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "plasmode",
    version,
    about = "Synthetic social-network studies for interference estimators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full replicated study from a config file and write outputs.
    RunStudy {
        /// Study configuration JSON.
        config: PathBuf,
    },
    /// Draw one network from a model and print it as an edge list.
    SimulateGraph {
        /// Network model JSON.
        model: PathBuf,
        /// Node attribute CSV.
        attrs: PathBuf,
        /// Chain seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit a model to an observed graph by maximum pseudolikelihood.
    FitErgm {
        /// Edge list file (one "u v" pair per line).
        graph: PathBuf,
        /// Node attribute CSV.
        attrs: PathBuf,
        /// Term list JSON (an array of term specs).
        terms: PathBuf,
    },
    /// Compare an observed graph against simulations from a fitted model.
    Gof {
        /// Fitted model JSON.
        model: PathBuf,
        /// Edge list file.
        graph: PathBuf,
        /// Number of simulated graphs.
        #[arg(long, default_value_t = 100)]
        sims: usize,
        /// Node attribute CSV (required when the model uses attributes).
        #[arg(long)]
        attrs: Option<PathBuf>,
        /// Chain seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sample an attribute table from synthesis parameters.
    Synth {
        /// Synthesis parameters JSON.
        params: PathBuf,
        /// Number of rows to draw.
        #[arg(long)]
        n: usize,
        /// Sampling seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print structural summaries of a graph.
    Summarize {
        /// Edge list file.
        graph: PathBuf,
        /// Attribute CSV and categorical column for assortativity.
        #[arg(long, num_args = 2, value_names = ["CSV", "COLUMN"])]
        attr: Option<Vec<String>>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::RunStudy { config } => {
            let (results, out_dir) = run_study_file(&config)?;
            let m = &results.manifest;
            println!(
                "{} replicates ({} failed), {} schools, {} scenarios -> {}",
                m.replicates_total,
                m.replicates_failed,
                m.school_sizes.len(),
                m.scenarios.len(),
                out_dir.display()
            );
            for row in &results.metrics {
                println!(
                    "{} {} {}: truth {:+.4} bias {:+.4} mse {:.5}",
                    row.scenario, row.method, row.estimand, row.truth, row.bias, row.mse
                );
            }
        }
        Command::SimulateGraph { model, attrs, seed } => {
            let model = ErgmModel::read_json(&model)?;
            let table = NodeTable::read_csv(&attrs)?;
            let cfg = SamplerConfig::with_seed(seed);
            let graph = simulate(&model, &table, table.n_rows(), &cfg)?;
            let mut out = Vec::new();
            write_edge_list(&graph, &mut out)?;
            print!("{}", String::from_utf8(out)?);
            eprintln!(
                "{} nodes, {} edges, density {:.6}",
                graph.n_nodes(),
                graph.n_edges(),
                graph.n_edges() as f64 / graph.n_dyads() as f64
            );
        }
        Command::FitErgm {
            graph,
            attrs,
            terms,
        } => {
            let table = NodeTable::read_csv(&attrs)?;
            let graph = read_edge_list(&graph, Some(table.n_rows()))?;
            let text = std::fs::read_to_string(&terms)?;
            let terms: Vec<TermSpec> = serde_json::from_str(&text)?;
            let fit = mple_fit(&graph, &table, &terms)?;
            for ((term, est), se) in fit
                .model
                .terms
                .iter()
                .zip(&fit.model.theta)
                .zip(&fit.std_errors)
            {
                println!("{:<28} {est:>10.4} (se {se:.4})", term.label());
            }
            if fit.se_caveat {
                eprintln!("note: dyad-dependent terms present; standard errors are approximate");
            }
            println!("{}", serde_json::to_string_pretty(&fit.model)?);
        }
        Command::Gof {
            model,
            graph,
            sims,
            attrs,
            seed,
        } => {
            let model = ErgmModel::read_json(&model)?;
            // Size the graph by the attribute table when one is given so
            // trailing isolated nodes survive the edge-list round trip.
            let (observed, table) = match attrs {
                Some(path) => {
                    let table = NodeTable::read_csv(&path)?;
                    (read_edge_list(&graph, Some(table.n_rows()))?, table)
                }
                None => {
                    let observed = read_edge_list(&graph, None)?;
                    let table = NodeTable::new(observed.n_nodes());
                    (observed, table)
                }
            };
            let cfg = SamplerConfig::with_seed(seed);
            let report = gof(&model, &table, &observed, sims, &cfg)?;
            println!("{:<10} {:>4} {:>9} {:>9} {:>9} {:>9}", "statistic", "bin", "observed", "q05", "median", "q95");
            for band in &report.bands {
                println!(
                    "{:<10} {:>4} {:>9} {:>9.1} {:>9.1} {:>9.1}",
                    band.statistic, band.bin, band.observed, band.q05, band.median, band.q95
                );
            }
            println!(
                "envelope coverage (occupied bins): {:.3}",
                report.envelope_coverage()
            );
        }
        Command::Synth { params, n, seed } => {
            let params = SynthesisParams::read_json(&params)?;
            let first = params
                .variables
                .first()
                .map(|v| v.name.clone())
                .unwrap_or_default();
            let gen = AttributeGenerator::prepare(
                &params,
                &first,
                ExposureScheme::Copula,
                plasmode::copula::SOLVE_TOL,
            )?;
            let inter = gen.intermediate();
            if inter.repair_warning() {
                eprintln!(
                    "note: correlation matrix needed adjustment (delta {:.4}, {} pairs moved)",
                    inter.repair_delta,
                    inter.adjusted_pairs.len()
                );
            }
            let table = gen.generate(n, seed)?;
            table.to_csv_writer(std::io::stdout())?;
        }
        Command::Summarize { graph, attr } => {
            // With attributes the table fixes the node count (keeping
            // trailing isolates); otherwise infer it from the edge list.
            let (g, codes, label): (_, Option<Vec<u32>>, Option<String>) = match &attr {
                Some(pair) => {
                    let table = NodeTable::read_csv(&pair[0])?;
                    let g = read_edge_list(&graph, Some(table.n_rows()))?;
                    (g, Some(table.codes(&pair[1])?.to_vec()), Some(pair[1].clone()))
                }
                None => (read_edge_list(&graph, None)?, None, None),
            };
            let s = summarize(&g, codes.as_deref())?;
            println!("nodes          {}", s.n_nodes);
            println!("edges          {}", s.n_edges);
            println!("density        {}", fmt_f64(Some(s.density)));
            println!("mean degree    {}", fmt_f64(Some(s.mean_degree)));
            println!("sd degree      {}", fmt_f64(Some(s.sd_degree)));
            println!("transitivity   {}", fmt_f64(s.transitivity));
            if let Some(name) = label {
                println!("{name} assortativity   {}", fmt_f64(s.assortativity));
            }
        }
    }
    Ok(())
}

fn fmt_f64(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.6}"),
        _ => "undefined".to_string(),
    }
}
