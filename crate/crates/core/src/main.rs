use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use neutnn::flow::{parse_config, run_flow, run_flow_in};
use neutnn::hwgen::ppa::{compare_pdks, fit_ppa, fits_csv, FitMethod, Pdk, PpaTable};
use neutnn::model_doc::ModelDocument;
use neutnn::network::count_synapses;
use neutnn::presets;
use neutnn::pruning::PruneMode;

#[derive(Parser)]
#[command(name = "neutnn", version, about = "Temporal neural network simulator and hardware compiler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the stages listed in a flow config.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config and NEUTNN_OUT_DIR.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Check that a model document is well formed.
    Validate { model: PathBuf },
    /// Print the synapse count of a model document.
    Count {
        model: PathBuf,
        /// Count mode for pruned weights; defaults to the document's mode.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Fit the linear PPA models to the reference tables.
    FitPpa {
        /// Restrict to one node (nangate45, asap7, asap7_tnn7).
        #[arg(long)]
        pdk: Option<String>,
        #[arg(long, value_enum, default_value_t = MethodArg::Minimax)]
        method: MethodArg,
        /// Also forecast this many synapses on every node.
        #[arg(long)]
        compare: Option<u64>,
    },
    /// Write a ready-made model document.
    Preset {
        name: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    RemoveZero,
    KeepZero,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Minimax,
    Ols,
    Relative,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { config, out_dir } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let cfg = parse_config(&text).with_context(|| format!("{}", config.display()))?;
            let report = match out_dir {
                Some(dir) => run_flow_in(&cfg, &dir)?,
                None => run_flow(&cfg)?,
            };
            for note in &report.notes {
                eprintln!("{note}");
            }
            for p in report.artifacts {
                println!("{}", p.display());
            }
        }
        Command::Validate { model } => {
            let doc = ModelDocument::load(&model).with_context(|| format!("{}", model.display()))?;
            println!(
                "ok: {} layers, input width {}, {} synapses{}",
                doc.model.layers.len(),
                doc.model.input_width(),
                doc.model.synapse_count(),
                if doc.weights.is_some() { ", weights present" } else { "" }
            );
        }
        Command::Count { model, mode } => {
            let doc = ModelDocument::load(&model).with_context(|| format!("{}", model.display()))?;
            let mode = match mode {
                Some(ModeArg::RemoveZero) => PruneMode::RemoveZero,
                Some(ModeArg::KeepZero) => PruneMode::KeepZero,
                None => doc.prune_mode.unwrap_or(PruneMode::KeepZero),
            };
            println!("{}", count_synapses(&doc.model, doc.weights.as_ref(), mode));
        }
        Command::FitPpa { pdk, method, compare } => {
            let method = match method {
                MethodArg::Minimax => FitMethod::Minimax,
                MethodArg::Ols => FitMethod::Ols,
                MethodArg::Relative => FitMethod::RelativeLeastSquares,
            };
            let pdks = match pdk {
                Some(name) => match Pdk::parse(&name) {
                    Some(p) => vec![p],
                    None => bail!("unknown pdk {name:?}; valid options: {{nangate45, asap7, asap7_tnn7}}"),
                },
                None => Pdk::ALL.to_vec(),
            };
            let models = pdks
                .iter()
                .map(|&p| fit_ppa(&PpaTable::reference(p), method))
                .collect::<Result<Vec<_>, _>>()?;
            print!("{}", fits_csv(&models));
            if let Some(n) = compare {
                for f in compare_pdks(n) {
                    println!("{}: {:.4} mW leakage, {:.4} mm2", f.pdk.node(), f.leakage_mw(), f.area_mm2());
                }
            }
        }
        Command::Preset { name, output } => {
            let model = presets::by_name(&name)?;
            let text = ModelDocument::new(model).to_text();
            match output {
                Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}
