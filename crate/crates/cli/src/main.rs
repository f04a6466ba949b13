//! `crowdvote`: the pipeline from pronunciation lexicon to aggregated votes.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{
    AggregateArgs, CorpusBuildArgs, LexiconValidateArgs, P2gDecodeArgs, P2gTrainArgs, ReportArgs, ServeArgs,
    SimulateArgs, TasksAllocateArgs, TasksGenerateArgs,
};

#[derive(Debug, Parser)]
#[command(name = "crowdvote", version, about = "Build, serve and aggregate transcription-voting tasks")]
struct Cli {
    /// TOML file of option values, or a run manifest to repeat. Flags given
    /// on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<std::path::PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pronunciation lexicon checks.
    #[command(subcommand)]
    Lexicon(LexiconCommand),
    /// Option-set corpus generation.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Phoneme-to-grapheme model.
    #[command(subcommand)]
    P2g(P2gCommand),
    /// Task files and worker assignments.
    #[command(subcommand)]
    Tasks(TasksCommand),
    /// Run the vote collection service.
    Serve(ServeArgs),
    /// Simulate a crowd voting on tasks.
    Simulate(SimulateArgs),
    /// Aggregate a vote log into one label per task.
    Aggregate(AggregateArgs),
    /// Accuracy tables and the reject-bias analysis.
    Report(ReportArgs),
}

#[derive(Debug, Subcommand)]
enum LexiconCommand {
    Validate(LexiconValidateArgs),
}

#[derive(Debug, Subcommand)]
enum CorpusCommand {
    Build(CorpusBuildArgs),
}

#[derive(Debug, Subcommand)]
enum P2gCommand {
    Train(P2gTrainArgs),
    Decode(P2gDecodeArgs),
}

#[derive(Debug, Subcommand)]
enum TasksCommand {
    Generate(TasksGenerateArgs),
    Allocate(TasksAllocateArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Lexicon(LexiconCommand::Validate(a)) => commands::lexicon_validate(a),
        Command::Corpus(CorpusCommand::Build(a)) => commands::corpus_build(a),
        Command::P2g(P2gCommand::Train(a)) => commands::p2g_train(a),
        Command::P2g(P2gCommand::Decode(a)) => commands::p2g_decode(a),
        Command::Tasks(TasksCommand::Generate(a)) => commands::tasks_generate(a),
        Command::Tasks(TasksCommand::Allocate(a)) => commands::tasks_allocate(a),
        Command::Serve(a) => commands::serve(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Aggregate(a) => commands::aggregate(a),
        Command::Report(a) => commands::report(a),
    }
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let args = match config::expand_args(std::env::args_os().collect()) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("error: config: {}", one_line(&format!("{e:#}")));
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let message: Vec<&str> = text.lines().take_while(|l| !l.starts_with("Usage:")).collect();
            eprintln!("error: usage: {}", one_line(message.join(" ").trim_start_matches("error: ")));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", one_line(&format!("{e:#}")));
            ExitCode::FAILURE
        }
    }
}
