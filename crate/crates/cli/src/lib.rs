//! Library side of the `yodkit` binary, so commands can be driven from tests.

pub mod args;
pub mod commands;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use args::{Cli, Command, Format};
pub use error::CliError;

use commands::{GradcheckArgs, ScoreArgs, TrainArgs};

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Score { paths, lang, formulas, abbreviations, common } => commands::cmd_score(
            &ScoreArgs {
                paths: &paths,
                lang,
                formulas: &formulas,
                abbreviations: abbreviations.as_deref(),
                format: common.format,
                out_dir: common.out_dir.as_deref(),
            },
            out,
            err,
        ),
        Command::Analyze { corpus, common } => {
            commands::cmd_analyze(&corpus, common.format, common.out_dir.as_deref(), out, err)
        }
        Command::BuildSplits { corpus, quota, seed, out_dir } => {
            commands::cmd_build_splits(&corpus, quota, seed, &out_dir, out, err)
        }
        Command::Evaluate { predictions, tolerance, common } => {
            commands::cmd_evaluate(&predictions, tolerance, common.format, common.out_dir.as_deref(), out, err)
        }
        Command::TrainToy { corpus, seed, steps, lr, warmup, batch_size, sampling, out_dir, format } => {
            commands::cmd_train_toy(
                &TrainArgs {
                    corpus: corpus.as_deref(),
                    seed,
                    steps,
                    lr,
                    warmup,
                    batch_size,
                    sampling,
                    out_dir: &out_dir,
                    format,
                },
                out,
                err,
            )
        }
        Command::Gradcheck { seed, per_group, epsilon, threshold, fault, format } => {
            commands::cmd_gradcheck(&GradcheckArgs { seed, per_group, epsilon, threshold, fault, format }, out)
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
/// Argument errors exit with 3, the code for invalid input.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match run(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
