//! Command-line driver: `scan` one network directory or `corpus` a
//! directory of networks.
//!
//! Exit codes: 0 clean, 1 findings at or above `--fail-on`, 2 internal
//! error. Corpus mode exits 0 unless it cannot run at all.

mod config;
mod discover;

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use thiserror::Error;

use crate::loader::{load_network, NetworkFiles};
use crate::model::{FileRole, Finding, Level, NetworkModel, PatternId, SourceLocation};
use crate::patterns::run_all;
use crate::report::{aggregate, render_corpus_json, render_corpus_table, render_json, render_text};
use crate::yaml::HostEnv;

pub use config::{load_threshold_config, parse_threshold_config, LintConfig};
pub use discover::{discover_files, MAX_DEPTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum FailOn {
    #[default]
    Error,
    Warning,
    Never,
}

impl FailOn {
    pub fn trips(self, findings: &[Finding]) -> bool {
        let bar = match self {
            FailOn::Error => Level::Error,
            FailOn::Warning => Level::Warning,
            FailOn::Never => return false,
        };
        findings.iter().any(|f| f.level >= bar)
    }
}

/// Explicit file assignments that replace discovery for their role.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Overrides {
    pub compose: Vec<PathBuf>,
    pub crypto: Option<PathBuf>,
    pub configtx: Option<PathBuf>,
    pub scripts: Vec<PathBuf>,
}

#[derive(Debug, Clone, Default)]
pub struct ScanOptions {
    pub network_dir: PathBuf,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub config_path: Option<PathBuf>,
    pub fail_on: FailOn,
    pub overrides: Overrides,
    pub host_env: HostEnv,
    pub dump_model: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0} is not a readable directory")]
    NotADirectory(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("cannot write report: {0}")]
    Write(std::io::Error),
}

impl From<crate::loader::LoadError> for CliError {
    fn from(e: crate::loader::LoadError) -> Self {
        CliError::Io { path: e.path, source: e.source }
    }
}

/// Discovered files with the overrides applied.
pub fn resolve_files(dir: &Path, overrides: &Overrides) -> Result<NetworkFiles, CliError> {
    let mut files = discover_files(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    if !overrides.compose.is_empty() {
        files.insert(FileRole::Compose, overrides.compose.clone());
    }
    if let Some(p) = &overrides.crypto {
        files.insert(FileRole::CryptoConfig, vec![p.clone()]);
    }
    if let Some(p) = &overrides.configtx {
        files.insert(FileRole::Configtx, vec![p.clone()]);
    }
    if !overrides.scripts.is_empty() {
        files.remove(&FileRole::StartScript);
        files.remove(&FileRole::ChannelScript);
        for p in &overrides.scripts {
            let in_scripts = p.parent().and_then(Path::file_name).is_some_and(|d| d == "scripts");
            let role = if in_scripts { FileRole::ChannelScript } else { FileRole::StartScript };
            files.entry(role).or_default().push(p.clone());
        }
    }
    Ok(files)
}

/// Loads one network and runs every pattern not disabled by `config`.
pub fn scan_network(
    dir: &Path,
    overrides: &Overrides,
    config: &LintConfig,
    host_env: &HostEnv,
) -> Result<(NetworkModel, Vec<Finding>), CliError> {
    if !dir.is_dir() {
        return Err(CliError::NotADirectory(dir.to_path_buf()));
    }
    let files = resolve_files(dir, overrides)?;
    let model = load_network(dir, &files, host_env)?;
    let enabled: BTreeSet<PatternId> = PatternId::ALL.into_iter().filter(|p| !config.disabled.contains(p)).collect();
    let findings = run_all(&model, &config.thresholds, &enabled);
    Ok((model, findings))
}

fn emit(text: &str, output: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(CliError::Write),
        None => out.write_all(text.as_bytes()).map_err(CliError::Write),
    }
}

fn load_config(opts: &ScanOptions) -> Result<LintConfig, CliError> {
    load_threshold_config(opts.config_path.as_deref()).map_err(CliError::Config)
}

fn try_scan(opts: &ScanOptions, out: &mut dyn Write, err: &mut dyn Write) -> Result<bool, CliError> {
    let config = load_config(opts)?;
    let (model, findings) = scan_network(&opts.network_dir, &opts.overrides, &config, &opts.host_env)?;
    for note in &model.script_notes {
        let _ = writeln!(err, "note: {}: {}", note.location, note.message);
    }
    if let Some(path) = &opts.dump_model {
        let json = serde_json::to_string_pretty(&model).expect("model serializes");
        std::fs::write(path, json + "\n").map_err(CliError::Write)?;
    }
    let text = match opts.format {
        Format::Text => render_text(&findings),
        Format::Json => render_json(&findings),
    };
    emit(&text, opts.output.as_deref(), out)?;
    Ok(opts.fail_on.trips(&findings))
}

pub fn scan(opts: &ScanOptions, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match try_scan(opts, out, err) {
        Ok(false) => 0,
        Ok(true) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

/// The stand-in finding for a network that could not be scanned.
pub fn unscannable(name: &str, error: &CliError) -> Finding {
    Finding::new(
        PatternId::ComponentMissing,
        Level::Error,
        "pattern failure",
        format!("Network could not be scanned: {error}"),
        SourceLocation::file(name),
        "Check that the network directory and its files are readable",
    )
}

/// Findings for every immediate subdirectory of `root`, sorted by name.
pub fn scan_corpus(root: &Path, config: &LintConfig, host_env: &HostEnv) -> Result<Vec<(String, Vec<Finding>)>, CliError> {
    let entries = std::fs::read_dir(root).map_err(|_| CliError::NotADirectory(root.to_path_buf()))?;
    let mut dirs: Vec<(String, PathBuf)> = entries
        .filter_map(Result::ok)
        .filter(|e| e.path().is_dir())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), e.path()))
        .filter(|(name, _)| !name.starts_with('.'))
        .collect();
    dirs.sort();
    let results = dirs
        .par_iter()
        .map(|(name, path)| {
            let findings = match scan_network(path, &Overrides::default(), config, host_env) {
                Ok((_, findings)) => findings,
                Err(e) => vec![unscannable(name, &e)],
            };
            (name.clone(), findings)
        })
        .collect();
    Ok(results)
}

fn try_corpus(opts: &ScanOptions, out: &mut dyn Write) -> Result<(), CliError> {
    let config = load_config(opts)?;
    let results = scan_corpus(&opts.network_dir, &config, &opts.host_env)?;
    let summary = aggregate(results.iter().map(|(n, f)| (n.as_str(), f.as_slice())));
    let text = match opts.format {
        Format::Text => render_corpus_table(&summary),
        Format::Json => render_corpus_json(&summary),
    };
    emit(&text, opts.output.as_deref(), out)
}

pub fn corpus(opts: &ScanOptions, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match try_corpus(opts, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fabcheck", version, about = "Static reasonableness checks for Hyperledger Fabric network configurations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lint one network directory.
    Scan {
        dir: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
        /// Lowest level that makes the exit code 1.
        #[arg(long, value_enum, default_value_t = FailOn::Error)]
        fail_on: FailOn,
        /// Compose file to use instead of discovery (repeatable).
        #[arg(long)]
        compose: Vec<PathBuf>,
        #[arg(long)]
        crypto: Option<PathBuf>,
        #[arg(long)]
        configtx: Option<PathBuf>,
        /// Script to use instead of discovery (repeatable).
        #[arg(long)]
        script: Vec<PathBuf>,
        /// Write the merged network model as JSON.
        #[arg(long)]
        dump_model: Option<PathBuf>,
    },
    /// Lint every subdirectory of a directory and print per-pattern counts.
    Corpus {
        dir: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Threshold and disable-list file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I, host_env: HostEnv, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return 2;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    match cli.command {
        Command::Scan { dir, common, fail_on, compose, crypto, configtx, script, dump_model } => {
            let opts = ScanOptions {
                network_dir: dir,
                format: common.format,
                output: common.output,
                config_path: common.config,
                fail_on,
                overrides: Overrides { compose, crypto, configtx, scripts: script },
                host_env,
                dump_model,
            };
            scan(&opts, out, err)
        }
        Command::Corpus { dir, common } => {
            let opts = ScanOptions {
                network_dir: dir,
                format: common.format,
                output: common.output,
                config_path: common.config,
                host_env,
                ..Default::default()
            };
            corpus(&opts, out, err)
        }
    }
}
