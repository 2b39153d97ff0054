//! `losr`: command-line front end for the losr-core library.
//!
//! Every subcommand prints a JSON run report on stdout. Exit codes: 0 pass,
//! 1 verification failure or NO-evidence, 2 usage error or malformed input,
//! 3 numerical failure, 4 UNKNOWN.

mod commands;
mod input;
mod report;

use std::io::Write;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use report::{digest_inputs, ErrorInfo, RunReport, Status};

#[derive(Parser)]
#[command(name = "losr", version, about = "Separable certificates, LOSR balls, no-signaling checks and quantum games")]
struct Cli {
    #[command(flatten)]
    opts: GlobalOpts,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Clone, Debug)]
pub struct GlobalOpts {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Overrides the check tolerances of the chosen command.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Ordering of bare matrix inputs.
    #[arg(long, global = true, value_enum, default_value_t = OrderingArg::Global)]
    pub ordering: OrderingArg,
    /// Party dimensions: `qubits<m>x<d>` or `din:dout,din:dout,...`.
    #[arg(long, global = true)]
    pub layout: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OrderingArg {
    Global,
    Grouped,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SpaceArg {
    Q,
    Hermitian,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Losr,
    Lose,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NosigMethodArg {
    Constraint,
    Semantic,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Check channels and certificates.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Build separable certificates.
    #[command(subcommand)]
    Decompose(DecomposeCmd),
    /// The certified LOSR ball around the completely noisy channel.
    #[command(subcommand)]
    Ball(BallCmd),
    /// One-round two-player games.
    #[command(subcommand)]
    Game(GameCmd),
    /// Linear functionals against LOSR membership.
    #[command(subcommand)]
    Witness(WitnessCmd),
    /// Built-in examples.
    #[command(subcommand)]
    Examples(ExamplesCmd),
}

#[derive(Subcommand)]
pub enum VerifyCmd {
    /// Complete positivity and trace preservation.
    Cptp {
        #[arg(required = true)]
        files: Vec<String>,
    },
    /// No-signaling for every subset of parties.
    Nosig {
        #[arg(required = true)]
        files: Vec<String>,
        #[arg(long, value_enum, default_value_t = NosigMethodArg::Both)]
        method: NosigMethodArg,
        /// Random input pairs per subset for the semantic check.
        #[arg(long, default_value_t = 5)]
        trials: usize,
    },
    /// Membership in the product of Q subspaces.
    Tensorq {
        #[arg(required = true)]
        files: Vec<String>,
    },
    /// Separable certificates.
    Cert {
        #[arg(required = true)]
        files: Vec<String>,
    },
}

#[derive(Subcommand)]
pub enum DecomposeCmd {
    /// X = X+ - X- with both halves separable.
    Split {
        file: String,
        #[arg(long, value_enum, default_value_t = SpaceArg::Q)]
        space: SpaceArg,
    },
    /// (n+1)||Q|| I - Q for a separable certificate Q.
    Sep { file: String },
    /// k ||X||_F I - X.
    IdMinus {
        file: String,
        #[arg(long, value_enum, default_value_t = SpaceArg::Q)]
        space: SpaceArg,
    },
}

#[derive(Subcommand)]
pub enum BallCmd {
    /// Ball constants for --layout.
    Radius,
    /// Certificate for I - A (A in global ordering).
    Cert { file: String },
    /// Channel mixture from a Q-separable certificate.
    Losr { file: String },
    /// Shared-randomness realization of a channel mixture.
    Realize { file: String },
}

#[derive(Subcommand)]
pub enum GameCmd {
    /// Winning probability of a channel, by direct simulation.
    Simulate { game: String, channel: String },
    /// Winning probability through the payoff operator, cross-checked by simulation.
    Value { game: String, channel: String },
    /// Best deterministic strategy by enumeration.
    Classical { game: String },
    /// See-saw search over entangled strategies.
    Seesaw {
        game: String,
        #[arg(long, default_value_t = 2)]
        ent_dim: usize,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 60)]
        iterations: usize,
    },
    /// Does some strategy reach gamma + 1/s?
    WeakValidity {
        /// Instance `{"R", "layout", "gamma", "s"}` or a game file.
        file: String,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        s: Option<u64>,
        #[arg(long, value_enum, default_value_t = ModeArg::Losr)]
        mode: ModeArg,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
    },
    /// Is the operator within 1/s of the class?
    WeakMembership {
        file: String,
        #[arg(long, default_value_t = 10)]
        s: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Losr)]
        mode: ModeArg,
    },
}

#[derive(Subcommand)]
pub enum WitnessCmd {
    /// <H, J> for a channel. H is a matrix file or `builtin:chsh`.
    Eval { h: String, channel: String },
    /// Search for product channels where H is negative.
    Audit {
        h: String,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        #[arg(long, default_value_t = 40)]
        iterations: usize,
    },
    /// Audit H and check that it separates the channel.
    Certify {
        h: String,
        channel: String,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        #[arg(long, default_value_t = 40)]
        iterations: usize,
    },
}

#[derive(Subcommand)]
pub enum ExamplesCmd {
    List,
    Emit {
        name: String,
        /// Also write the example itself to this file.
        #[arg(long)]
        out: Option<String>,
    },
}

fn main() {
    let cli = Cli::parse();
    let start = Instant::now();
    let command: Vec<String> = std::env::args().skip(1).collect();
    let mut inputs = Vec::new();
    let run = match &cli.cmd {
        Command::Verify(c) => commands::verify(c, &cli.opts, &mut inputs),
        Command::Decompose(c) => commands::decompose(c, &cli.opts, &mut inputs),
        Command::Ball(c) => commands::ball(c, &cli.opts, &mut inputs),
        Command::Game(c) => commands::game(c, &cli.opts, &mut inputs),
        Command::Witness(c) => commands::witness(c, &cli.opts, &mut inputs),
        Command::Examples(c) => commands::examples(c),
    };
    let (outcome, err) = match run {
        Ok(o) => (o, None),
        Err(e) => {
            eprintln!("error: {}", e.message);
            (
                report::Outcome {
                    status: Status::Error,
                    checks: Vec::new(),
                    result: serde_json::Value::Null,
                },
                Some(e),
            )
        }
    };
    let report = RunReport {
        command,
        inputs_digest: digest_inputs(&inputs),
        seed: cli.opts.seed,
        status: outcome.status,
        checks: outcome.checks,
        result: outcome.result,
        error: err.as_ref().map(|e| ErrorInfo {
            kind: e.kind,
            message: e.message.clone(),
        }),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let code = report.exit_code(err.as_ref());
    match serde_json::to_string_pretty(&report) {
        Ok(s) => {
            // a closed pipe on stdout is not worth a panic
            let _ = writeln!(std::io::stdout().lock(), "{s}");
        }
        Err(e) => {
            eprintln!("error: cannot serialize report: {e}");
            std::process::exit(2);
        }
    }
    std::process::exit(code);
}
