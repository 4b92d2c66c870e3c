//! Library side of the `alignbounds` binary, exposed so tests can drive the
//! whole command line in-process through [`main_with`].
//!
//! Exit codes: `0` success, `1` a computation failed, `2` the configuration or
//! an instance file is unusable. Failures print exactly one JSON line on
//! stderr and nothing on stdout.

pub mod args;
pub mod commands;
pub mod error;
pub mod instance;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use args::{Cli, Format};
use commands::Artifact;
use error::{CliError, CliResult};
use instance::{hex, Inputs};
use output::Meta;

/// Caps the worker pool; unset means one worker per core.
pub const THREADS_ENV: &str = "ALIGNBOUNDS_THREADS";

/// A rendered artifact and its destination (`None` is stdout).
struct Rendered {
    primary: (Option<std::path::PathBuf>, String),
    side: Option<(std::path::PathBuf, String)>,
}

/// SHA-256 over the parsed arguments (minus output paths) and input digests.
pub fn config_hash(cli: &Cli, inputs: &Inputs) -> String {
    let doc = json!({ "args": cli, "inputs": inputs.digests() });
    hex(&Sha256::digest(doc.to_string().as_bytes()))
}

fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => return Err(CliError::config(format!("{THREADS_ENV}={v:?} is not a positive integer"))),
        },
        Err(std::env::VarError::NotPresent) => 0,
        Err(e) => return Err(CliError::config(format!("{THREADS_ENV}: {e}"))),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::config(format!("cannot start worker pool: {e}")))
}

fn render(cli: &Cli, artifact: Artifact, meta: &Meta) -> Rendered {
    let format = cli.format.unwrap_or(artifact.default_format);
    let with_meta = |mut doc: serde_json::Map<String, Value>| {
        doc.insert("meta".into(), meta.to_json());
        output::to_json(&Value::Object(doc))
    };
    let body = match format {
        Format::Csv => output::to_csv(&artifact.table, meta),
        Format::Json => with_meta(artifact.json),
    };
    Rendered {
        primary: (cli.out.clone(), body),
        side: artifact.side.map(|(path, doc)| (path, with_meta(doc))),
    }
}

fn execute(cli: &Cli) -> CliResult<Rendered> {
    let inputs = Inputs::read(&commands::input_paths(&cli.command))?;
    let meta = Meta {
        version: env!("CARGO_PKG_VERSION"),
        seed: cli.seed,
        config_hash: config_hash(cli, &inputs),
        extra: Vec::new(),
    };
    let artifact = thread_pool()?.install(|| commands::run(&cli.command, &inputs, cli.seed))?;
    let meta = Meta {
        extra: artifact.extra.clone(),
        ..meta
    };
    Ok(render(cli, artifact, &meta))
}

fn write_all(rendered: Rendered, stdout: &mut dyn Write) -> CliResult<()> {
    let fail = |what: String, e: std::io::Error| CliError::Output(format!("cannot write {what}: {e}"));
    if let Some((path, body)) = &rendered.side {
        std::fs::write(path, body).map_err(|e| fail(path.display().to_string(), e))?;
    }
    match rendered.primary {
        (Some(path), body) => std::fs::write(&path, body).map_err(|e| fail(path.display().to_string(), e)),
        (None, body) => stdout
            .write_all(body.as_bytes())
            .and_then(|_| stdout.flush())
            .map_err(|e| fail("stdout".into(), e)),
    }
}

fn fail(err: &CliError, stderr: &mut dyn Write) -> i32 {
    let _ = writeln!(stderr, "{}", err.to_json_line());
    err.exit_code()
}

/// Runs the command line `args` (including the program name).
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = write!(stdout, "{e}");
            return 0;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default();
            let message = first.strip_prefix("error: ").unwrap_or(first);
            return fail(&CliError::config(message), stderr);
        }
    };
    match execute(&cli).and_then(|r| write_all(r, stdout)) {
        Ok(()) => 0,
        Err(e) => fail(&e, stderr),
    }
}
