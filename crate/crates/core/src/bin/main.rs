use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use auction_ic::harness::{
    build_dataset, gfp_sanity_experiment, ols_fit_eval, read_dataset_csv, swl_bound_experiment,
    write_dataset_csv, FeatureSet, GeneratorConfig,
};
use auction_ic::metrics::{mechanism_from_tag, verify_theorems, Mechanism};
use auction_ic::pricing::AdTypesRule;
use auction_ic::{Error, InstanceFile, Result};

#[derive(Parser)]
#[command(name = "auction-ic", about = "Auction mechanisms with envy/regret diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MechanismTag {
    Vcg,
    Gsp,
    Gfp,
    #[value(name = "extended-gsp")]
    ExtendedGsp,
    #[value(name = "greedy-gsp")]
    GreedyGsp,
    #[value(name = "greedy-externality")]
    GreedyExternality,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExperimentTag {
    #[value(name = "gfp-sanity")]
    GfpSanity,
    #[value(name = "swl-bound")]
    SwlBound,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FeatureTag {
    Envy,
    #[value(name = "price-value")]
    PriceValue,
}

#[derive(Subcommand)]
enum Command {
    /// Run one auction and print the outcome as JSON.
    Run {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        mechanism: MechanismTag,
        /// Also write the full diagnostics report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print the diagnostics report; exit 0 iff envy dominates regret.
    Check {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        mechanism: MechanismTag,
    },
    /// Run a generated experiment and write its CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long, value_enum)]
        experiment: ExperimentTag,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a feature/label dataset CSV.
    Dataset {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long, value_enum)]
        mechanism: MechanismTag,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the OLS baseline on a dataset and report train/test R^2.
    Regress {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        features: FeatureTag,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn tag_str(tag: MechanismTag) -> &'static str {
    match tag {
        MechanismTag::Vcg => "vcg",
        MechanismTag::Gsp => "gsp",
        MechanismTag::Gfp => "gfp",
        MechanismTag::ExtendedGsp => "extended-gsp",
        MechanismTag::GreedyGsp => "greedy-gsp",
        MechanismTag::GreedyExternality => "greedy-externality",
    }
}

fn load_mechanism(path: &PathBuf, tag: MechanismTag) -> Result<Box<dyn Mechanism>> {
    let file: InstanceFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    mechanism_from_tag(&file, tag_str(tag))
}

fn adtypes_rule(tag: MechanismTag) -> Result<AdTypesRule> {
    match tag {
        MechanismTag::Vcg => Ok(AdTypesRule::Vcg),
        MechanismTag::ExtendedGsp => Ok(AdTypesRule::ExtendedGsp),
        MechanismTag::GreedyGsp => Ok(AdTypesRule::GreedyGsp),
        MechanismTag::GreedyExternality => Ok(AdTypesRule::GreedyExternality),
        other => Err(Error::Config(format!(
            "dataset generation needs an ad-types rule, got {other:?}"
        ))),
    }
}

fn load_config(path: &PathBuf) -> Result<GeneratorConfig> {
    let cfg: GeneratorConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { instance, mechanism, report } => {
            let mech = load_mechanism(&instance, mechanism)?;
            let outcome = mech.run(mech.bids())?;
            println!("{}", serde_json::to_string_pretty(&outcome)?);
            if let Some(path) = report {
                let diag = verify_theorems(&*mech)?;
                fs::write(path, serde_json::to_string_pretty(&diag)?)?;
            }
            Ok(true)
        }
        Command::Check { instance, mechanism } => {
            let mech = load_mechanism(&instance, mechanism)?;
            let diag = verify_theorems(&*mech)?;
            println!("{}", serde_json::to_string_pretty(&diag)?);
            Ok(diag.envy_dominates_regret)
        }
        Command::Simulate { config, count, experiment, out } => {
            let cfg = load_config(&config)?;
            let mut buf = Vec::new();
            match experiment {
                ExperimentTag::GfpSanity => {
                    let summary = gfp_sanity_experiment(&cfg, count, &mut buf)?;
                    eprintln!("{}", serde_json::to_string(&summary)?);
                }
                ExperimentTag::SwlBound => {
                    let summary = swl_bound_experiment(&cfg, count, &mut buf)?;
                    eprintln!("{}", serde_json::to_string(&summary)?);
                }
            }
            fs::File::create(out)?.write_all(&buf)?;
            Ok(true)
        }
        Command::Dataset { config, count, mechanism, out } => {
            let cfg = load_config(&config)?;
            let rows = build_dataset(&cfg, count, adtypes_rule(mechanism)?)?;
            let mut buf = Vec::new();
            write_dataset_csv(&rows, cfg.seed, &mut buf)?;
            fs::File::create(out)?.write_all(&buf)?;
            Ok(true)
        }
        Command::Regress { data, features, seed } => {
            let rows = read_dataset_csv(&fs::read_to_string(data)?)?;
            let set = match features {
                FeatureTag::Envy => FeatureSet::Envy,
                FeatureTag::PriceValue => FeatureSet::PriceValue,
            };
            let report = ols_fit_eval(&rows, set, seed)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
