//! Command-line front end: tree invariants, exact and sampled statistics,
//! Betti-number computations, and the verification suites.

mod verify;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use raagtree::enumerate::{estimate, Mode, StatReport, Statistic, DEFAULT_ENUMERATION_BUDGET};
use raagtree::homology::{build_presentation, DEFAULT_PRESENTATION_BUDGET};
use raagtree::series::{constants_with_digits, decimal_string, phi, psi, DeepSeries};
use raagtree::tree::LabeledTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Parser)]
#[command(
    name = "raagtree",
    about = "Tree invariants, Whitehead automorphism presentations and labeled-tree statistics",
    version
)]
struct Cli {
    /// Output format; csv applies to tabular statistics, other reports fall
    /// back to json
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Suppress the timestamp field so identical runs are byte-identical
    #[arg(long, global = true)]
    no_timestamp: bool,

    /// Worker threads; results never depend on this
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Boundary profile, deep nodes and the invariant upsilon of one tree
    Invariants {
        /// Tree file: "n" then n-1 edge lines, or "prufer: c1 c2 ..."
        #[arg(long)]
        input: String,
    },
    /// Exact statistics by exhaustive enumeration
    Enumerate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        stat: String,
        /// Exhaustive node budget (env RAAGTREE_BUDGET overrides the default)
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Monte-Carlo statistics from seeded uniform sampling
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        stat: String,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exact series values: probabilities, means and EGF coefficients
    Exact {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        stat: String,
        /// Distance/height parameter for psi-coef and phi-coef
        #[arg(long)]
        k: Option<usize>,
    },
    /// The limiting constants to the requested number of decimal digits
    Constants {
        #[arg(long, default_value_t = 50)]
        digits: usize,
    },
    /// First Betti number of the automorphism subgroup presentation
    Betti {
        #[arg(long)]
        input: String,
        /// Presentation node budget (env RAAGTREE_BUDGET overrides default)
        #[arg(long)]
        max_nodes: Option<usize>,
        /// Write the deduplicated relator matrix as "rows cols" + triplets
        #[arg(long)]
        emit_matrix: Option<String>,
        /// Write the generator list as JSON lines
        #[arg(long)]
        emit_generators: Option<String>,
    },
    /// Verification suites; exit code 1 on any failure
    Verify {
        /// series | enumeration | relators | homology | montecarlo |
        /// discrepancy | all
        #[arg(long, default_value = "all")]
        suite: String,
        /// Cap on tree sizes used by the suites
        #[arg(long)]
        max_n: Option<usize>,
        /// Monte-Carlo repetitions for the coverage check
        #[arg(long, default_value_t = 100)]
        mc_runs: usize,
        /// Samples per Monte-Carlo repetition
        #[arg(long, default_value_t = 100_000)]
        mc_samples: u64,
    },
}

#[derive(Serialize)]
struct RunConfig {
    subcommand: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<u64>,
    enumeration_budget: usize,
    presentation_budget: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<String>,
    format: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    precision: Option<usize>,
    workers: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp: Option<u64>,
}

fn env_budget(default: usize) -> usize {
    std::env::var("RAAGTREE_BUDGET")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(default)
}

struct Out {
    format: Format,
}

impl Out {
    fn emit<T: Serialize>(&self, value: &T) {
        let line = serde_json::to_string(value).expect("report serializes");
        println!("{line}");
    }

    fn stat_report(&self, report: &StatReport) {
        match self.format {
            Format::Json => self.emit(report),
            Format::Csv => {
                let value = match &report.value {
                    raagtree::enumerate::StatValue::Exact(s) => s.clone(),
                    raagtree::enumerate::StatValue::Float(x) => x.to_string(),
                };
                println!(
                    "{},{},{},{},{},{},{},{}",
                    report.statistic,
                    report.n,
                    report.mode,
                    value,
                    report.stderr.map(|x| x.to_string()).unwrap_or_default(),
                    report
                        .ci95
                        .map(|ci| format!("{}..{}", ci[0], ci[1]))
                        .unwrap_or_default(),
                    report.samples.map(|x| x.to_string()).unwrap_or_default(),
                    report.seed.map(|x| x.to_string()).unwrap_or_default(),
                );
            }
            Format::Text => {
                println!(
                    "{} at n={} ({}): {}{}",
                    report.statistic,
                    report.n,
                    report.mode,
                    match &report.value {
                        raagtree::enumerate::StatValue::Exact(s) =>
                            format!("{s} = {:.8}", report.value_f64()),
                        raagtree::enumerate::StatValue::Float(x) => format!("{x:.8}"),
                    },
                    report
                        .ci95
                        .map(|ci| format!("  ci95 [{:.6}, {:.6}]", ci[0], ci[1]))
                        .unwrap_or_default()
                );
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .ok();
    }
    let out = Out { format: cli.format };
    let enumeration_budget = env_budget(DEFAULT_ENUMERATION_BUDGET);
    let presentation_budget = env_budget(DEFAULT_PRESENTATION_BUDGET);

    let mut config = RunConfig {
        subcommand: String::new(),
        n: None,
        seed: None,
        samples: None,
        enumeration_budget,
        presentation_budget,
        input: None,
        format: format!("{:?}", cli.format).to_lowercase(),
        precision: None,
        workers: rayon::current_num_threads(),
        timestamp: (!cli.no_timestamp).then(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        }),
    };

    match run(&cli.command, &mut config, &out) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn print_config(config: &RunConfig, out: &Out) {
    match out.format {
        Format::Json => out.emit(config),
        Format::Csv | Format::Text => {
            println!(
                "# config: {}",
                serde_json::to_string(config).expect("config serializes")
            );
        }
    }
}

fn load_tree(path: &str) -> Result<LabeledTree, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?;
    LabeledTree::parse(&text).map_err(|e| format!("cannot parse {path}: {e}"))
}

fn run(command: &Command, config: &mut RunConfig, out: &Out) -> Result<ExitCode, String> {
    match command {
        Command::Invariants { input } => {
            config.subcommand = "invariants".into();
            config.input = Some(input.clone());
            print_config(config, out);
            let tree = load_tree(input)?;
            let profile = tree
                .boundary_profile()
                .map_err(|e| format!("profile: {e}"))?;
            #[derive(Serialize)]
            struct Invariants {
                n: usize,
                deep: Vec<usize>,
                upsilon: u64,
                shallow: bool,
                betti_lower_bound: u64,
                boundary_distance: Vec<usize>,
            }
            let n = tree.node_count();
            out.emit(&Invariants {
                n,
                deep: profile.deep().to_vec(),
                upsilon: profile.upsilon(),
                shallow: profile.is_shallow(),
                betti_lower_bound: profile.upsilon(),
                boundary_distance: (1..=n).map(|v| profile.dist(v)).collect(),
            });
            Ok(ExitCode::SUCCESS)
        }
        Command::Enumerate { n, stat, budget } => {
            config.subcommand = "enumerate".into();
            config.n = Some(*n);
            if let Some(b) = budget {
                config.enumeration_budget = *b;
            }
            print_config(config, out);
            let statistic: Statistic = stat.parse()?;
            let report = estimate(statistic, *n, Mode::Exhaustive, config.enumeration_budget)
                .map_err(|e| e.to_string())?;
            out.stat_report(&report);
            Ok(ExitCode::SUCCESS)
        }
        Command::Sample {
            n,
            stat,
            samples,
            seed,
        } => {
            config.subcommand = "sample".into();
            config.n = Some(*n);
            config.samples = Some(*samples);
            config.seed = Some(*seed);
            print_config(config, out);
            let statistic: Statistic = stat.parse()?;
            let report = estimate(
                statistic,
                *n,
                Mode::MonteCarlo {
                    samples: *samples,
                    seed: *seed,
                },
                config.enumeration_budget,
            )
            .map_err(|e| e.to_string())?;
            out.stat_report(&report);
            Ok(ExitCode::SUCCESS)
        }
        Command::Exact { n, stat, k } => {
            config.subcommand = "exact".into();
            config.n = Some(*n);
            print_config(config, out);
            exact_command(*n, stat, *k, out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Constants { digits } => {
            config.subcommand = "constants".into();
            config.precision = Some(*digits);
            print_config(config, out);
            let consts = constants_with_digits((*digits).max(1));
            #[derive(Serialize)]
            struct ConstantLine<'a> {
                name: &'a str,
                decimal: &'a str,
                digits: usize,
            }
            for c in [&consts.c3, &consts.d3, &consts.exp_minus_inv_e] {
                match out.format {
                    Format::Text => println!("{} = {}", c.name, c.decimal),
                    _ => out.emit(&ConstantLine {
                        name: c.name,
                        decimal: &c.decimal,
                        digits: c.digits,
                    }),
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Betti {
            input,
            max_nodes,
            emit_matrix,
            emit_generators,
        } => {
            config.subcommand = "betti".into();
            config.input = Some(input.clone());
            if let Some(b) = max_nodes {
                config.presentation_budget = *b;
            }
            print_config(config, out);
            let tree = load_tree(input)?;
            let presentation = build_presentation(&tree, config.presentation_budget)
                .map_err(|e| e.to_string())?;
            #[derive(Serialize)]
            struct Counts<'a> {
                generators: usize,
                relator_instances: usize,
                schemas: Vec<(&'a str, usize)>,
            }
            out.emit(&Counts {
                generators: presentation.generator_count(),
                relator_instances: presentation.relator_count(),
                schemas: presentation.schema_counts(),
            });
            if let Some(path) = emit_generators {
                let mut file = std::fs::File::create(path)
                    .map_err(|e| format!("cannot write {path}: {e}"))?;
                let n = tree.node_count();
                for generator in &presentation.generators {
                    let line = match generator {
                        raagtree::homology::PresGenerator::Type2(w) => {
                            serde_json::to_string(&w.describe(n))
                        }
                        raagtree::homology::PresGenerator::Sym1(s) => {
                            serde_json::to_string(&format!("{:?}", s.kind))
                        }
                    }
                    .expect("generator serializes");
                    writeln!(file, "{line}").map_err(|e| e.to_string())?;
                }
            }
            let matrix = presentation.abelianized();
            if let Some(path) = emit_matrix {
                std::fs::write(path, matrix.dump())
                    .map_err(|e| format!("cannot write {path}: {e}"))?;
            }
            let h1 = presentation.betti_one();
            #[derive(Serialize)]
            struct BettiLine {
                n: usize,
                b1: usize,
                torsion: Vec<String>,
                generators: usize,
                relator_instances: usize,
                upsilon: u64,
            }
            let upsilon = tree
                .boundary_profile()
                .map(|p| p.upsilon())
                .unwrap_or(0);
            out.emit(&BettiLine {
                n: tree.node_count(),
                b1: h1.b1,
                torsion: h1.torsion.iter().map(|t| t.to_string()).collect(),
                generators: h1.generator_count,
                relator_instances: h1.relator_count,
                upsilon,
            });
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            suite,
            max_n,
            mc_runs,
            mc_samples,
        } => {
            config.subcommand = format!("verify:{suite}");
            print_config(config, out);
            let options = verify::Options {
                max_n: *max_n,
                mc_runs: *mc_runs,
                mc_samples: *mc_samples,
                enumeration_budget: config.enumeration_budget,
                presentation_budget: config.presentation_budget,
            };
            let checks = verify::run_suite(suite, &options)?;
            let mut ok = true;
            for check in &checks {
                ok &= check.ok;
                match out.format {
                    Format::Json => out.emit(check),
                    _ => println!(
                        "{} {} {}",
                        if check.ok { "PASS" } else { "FAIL" },
                        check.name,
                        check.detail
                    ),
                }
            }
            let passed = checks.iter().filter(|c| c.ok).count();
            match out.format {
                Format::Json => out.emit(&serde_json::json!({
                    "suite": suite,
                    "passed": passed,
                    "total": checks.len(),
                })),
                _ => println!("{passed}/{} checks passed", checks.len()),
            }
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn exact_command(n: usize, stat: &str, k: Option<usize>, out: &Out) -> Result<(), String> {
    #[derive(Serialize)]
    struct ExactLine {
        statistic: String,
        n: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        k: Option<usize>,
        mode: &'static str,
        rational: String,
        decimal: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        count: Option<String>,
    }
    let emit = |stat: &str, k: Option<usize>, value: num_rational::BigRational, count: Option<String>| {
        let line = ExactLine {
            statistic: stat.to_string(),
            n,
            k,
            mode: "exact-series",
            rational: value.to_string(),
            decimal: decimal_string(&value, 12),
            count,
        };
        match out.format {
            Format::Text => println!(
                "{} at n={}: {} = {}",
                line.statistic, line.n, line.rational, line.decimal
            ),
            _ => out.emit(&line),
        }
    };
    match stat {
        "psi-coef" | "phi-coef" => {
            let k = k.ok_or("psi-coef and phi-coef need --k")?;
            let series = if stat == "psi-coef" {
                psi(k, n)
            } else {
                phi(k, n)
            };
            let coef = series.coef(n);
            let count = {
                let mut f = num_bigint_fact(n);
                f *= coef.clone();
                f.to_integer().to_string()
            };
            emit(stat, Some(k), coef, Some(count));
        }
        _ => {
            let deep = DeepSeries::new(n).map_err(|e| e.to_string())?;
            let value = match stat {
                "prob-deep-root" | "prob-root-deep" => deep.prob_root_deep(n),
                "mean-y" => deep.mean_y(n),
                "mean-n-given-deep" => deep.mean_n_given_deep(n),
                "deep-fraction" => deep.prob_deep_node(n),
                "upsilon-per-node" => deep.mean_upsilon_per_node(n),
                other => return Err(format!("unknown exact statistic {other:?}")),
            }
            .map_err(|e| e.to_string())?;
            emit(stat, None, value, None);
        }
    }
    Ok(())
}

fn num_bigint_fact(n: usize) -> num_rational::BigRational {
    let mut f = num_rational::BigRational::from_integer(1.into());
    for i in 2..=n {
        f *= num_rational::BigRational::from_integer((i as i64).into());
    }
    f
}
