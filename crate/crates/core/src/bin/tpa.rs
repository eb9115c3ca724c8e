use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};

use tpa::baselines::ServingPolicy;
use tpa::eval::PowerRule;
use tpa::experiment::{assign_scheme, evaluate, rate_rows, run_and_write, write_csv_to, ExperimentSpec, Scheme, SchemeParams};
use tpa::io::{load_network, save_network, AssignmentFile};
use tpa::netgen::{generate_network, SimConfig};
use tpa::topo::{sparsify_top_fraction, verify_assignment};
use tpa::Error;

#[derive(Parser)]
#[command(name = "tpa", version, about = "Pilot assignment for cell-free massive MIMO")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw a network realization and write it as JSON.
    Generate {
        /// TOML file with deployment parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        num_rrh: Option<usize>,
        #[arg(long)]
        num_ue: Option<usize>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Sparsify a network and assign pilots with one scheme.
    Assign {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        scheme: String,
        #[arg(long, default_value_t = 1.0)]
        g_fraction: f64,
        #[arg(short = 'T', long = "pilots", default_value_t = 1)]
        t: usize,
        #[arg(long, default_value_t = 1)]
        kappa: usize,
        #[arg(long, default_value_t = 20)]
        kappa_u: usize,
        #[arg(long, value_enum, default_value = "uncontaminated")]
        serving: ServingArg,
        /// Reassignment steps of the cell-free greedy baseline; defaults to K.
        #[arg(long)]
        cellfree_iters: Option<usize>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Monte-Carlo downlink rates of an assignment; prints result CSV rows.
    Evaluate {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        assignment: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, value_enum, default_value = "gain-proportional")]
        power_rule: PowerArg,
        #[arg(long, default_value_t = 0)]
        realization_id: usize,
    },
    /// Run a sweep described by a TOML file.
    Sweep { spec: PathBuf },
    /// Check that an assignment file is rank feasible; exits 2 if not.
    Verify { assignment: PathBuf },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ServingArg {
    Uncontaminated,
    AllConnected,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum PowerArg {
    GainProportional,
    EqualShare,
}

fn generate(config: Option<&Path>, seed: Option<u64>, num_rrh: Option<usize>, num_ue: Option<usize>, out: &Path) -> tpa::Result<()> {
    let mut cfg = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            toml::from_str::<SimConfig>(&text).map_err(|e| {
                let line = e.span().map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
                Error::Parse { path: p.to_path_buf(), line, msg: e.message().to_string() }
            })?
        }
        None => SimConfig::default(),
    };
    cfg.seed = seed.unwrap_or(cfg.seed);
    cfg.num_rrh = num_rrh.unwrap_or(cfg.num_rrh);
    cfg.num_ue = num_ue.unwrap_or(cfg.num_ue);
    let net = generate_network(&cfg)?;
    save_network(out, &net, &cfg)
}

fn run(cmd: Cmd) -> tpa::Result<bool> {
    match cmd {
        Cmd::Generate { config, seed, num_rrh, num_ue, out } => generate(config.as_deref(), seed, num_rrh, num_ue, &out)?,
        Cmd::Assign { network, scheme, g_fraction, t, kappa, kappa_u, serving, cellfree_iters, out } => {
            let scheme: Scheme = scheme.parse()?;
            let (net, _) = load_network(&network)?;
            let topo = sparsify_top_fraction(&net, g_fraction)?;
            let params = SchemeParams {
                t,
                kappa,
                kappa_u,
                serving_policy: match serving {
                    ServingArg::Uncontaminated => ServingPolicy::Uncontaminated,
                    ServingArg::AllConnected => ServingPolicy::AllConnected,
                },
                cellfree_iters: cellfree_iters.unwrap_or(net.num_ue()),
            };
            let assignment = assign_scheme(scheme, &net, &topo, &params)?;
            let file = AssignmentFile {
                topology: topo,
                assignment,
                g_fraction: Some(g_fraction),
                kappa: scheme.is_sequential().then_some(kappa),
            };
            file.save(&out)?;
        }
        Cmd::Evaluate { network, assignment, trials, power_rule, realization_id } => {
            let (net, cfg) = load_network(&network)?;
            let file = AssignmentFile::load(&assignment)?;
            let rule = match power_rule {
                PowerArg::GainProportional => PowerRule::GainProportional,
                PowerArg::EqualShare => PowerRule::EqualShare,
            };
            let rates = evaluate(&file.assignment, &net, &cfg, trials, rule)?;
            let rows = rate_rows(&file.assignment.scheme, file.g_fraction.unwrap_or(1.0), file.kappa, &file.assignment, &rates, net.seed, realization_id);
            write_csv_to(std::io::stdout().lock(), &rows)?;
        }
        Cmd::Sweep { spec } => {
            let spec = ExperimentSpec::load(&spec)?;
            if let Some(dir) = spec.output.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let out = run_and_write(&spec)?;
            eprintln!("{} rows written to {}", out.rows.len(), spec.output.display());
        }
        Cmd::Verify { assignment } => {
            let file = AssignmentFile::load(&assignment)?;
            let v = verify_assignment(&file.assignment.x, &file.topology, &file.pattern()?)?;
            for c in v.per_rrh.iter().filter(|c| !c.ok) {
                println!(
                    "rrh {}: desired {} interference rank {} joint rank {}",
                    c.rrh, c.desired, c.rank_interference, c.rank_joint
                );
            }
            println!("{}", if v.feasible { "feasible" } else { "infeasible" });
            return Ok(v.feasible);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::UnknownScheme(_) = e {
                eprintln!("known schemes: {}", Scheme::ALL.map(|s| s.name()).join(", "));
                eprintln!("{}", Cli::command().render_usage());
                return ExitCode::from(1);
            }
            ExitCode::from(if e.is_data_error() { 2 } else { 1 })
        }
    }
}
