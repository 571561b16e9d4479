//! Command-line front end for `gsa-core`.
//!
//! Settings come from an optional flat `key = value` file (`--config`) and
//! flags of the same names; flags win. Every run writes CSV and JSON tables
//! plus `manifest.json`, which `gsa replay` uses to repeat the run and check
//! that each output file comes back byte-identical.

pub mod error;
pub mod manifest;
pub mod run;
pub mod settings;
pub mod source;
pub mod study;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Arg, ArgAction, ArgMatches, Command};

use crate::error::{CliError, CliResult};
use crate::manifest::{hash_file, write_manifest, write_tables, Manifest};
use crate::settings::{read_config, Key, Settings, CONVERGE_KEYS, MODEL_KEYS, RUN_KEYS};

pub const OUT_DIR_ENV: &str = "GSA_OUT_DIR";
pub const THREADS_ENV: &str = "GSA_THREADS";

/// Keys naming input files whose contents are hashed into the manifest.
const FILE_KEYS: [&str; 3] = ["data", "space", "reference"];

fn key_args(cmd: Command, groups: &[&[Key]]) -> Command {
    groups.iter().flat_map(|g| g.iter()).fold(cmd, |cmd, k| {
        cmd.arg(
            Arg::new(k.name)
                .long(k.name)
                .value_name("VALUE")
                .help(k.help)
                .action(if k.multi { ArgAction::Append } else { ArgAction::Set }),
        )
    })
}

fn cli() -> Command {
    let config = || Arg::new("config").long("config").value_name("FILE").help("flat key = value settings file");
    Command::new("gsa")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Global sensitivity analysis")
        .subcommand_required(true)
        .subcommand(key_args(Command::new("run").about("Run one method").arg(config()), &[MODEL_KEYS, RUN_KEYS]))
        .subcommand(key_args(
            Command::new("converge").about("Replicated error-versus-budget study").arg(config()),
            &[MODEL_KEYS, CONVERGE_KEYS],
        ))
        .subcommand(
            Command::new("replay")
                .about("Repeat the run recorded in a manifest and compare outputs")
                .arg(Arg::new("manifest").required(true).value_name("MANIFEST"))
                .arg(Arg::new("out").long("out").value_name("DIR").help("output directory (default <manifest dir>/replay)")),
        )
}

fn settings_from(m: &ArgMatches, groups: &[&[Key]]) -> CliResult<Settings> {
    let file = match m.get_one::<String>("config") {
        Some(path) => read_config(Path::new(path), groups)?,
        None => BTreeMap::new(),
    };
    let mut flags = BTreeMap::new();
    for k in groups.iter().flat_map(|g| g.iter()) {
        if let Some(vals) = m.get_many::<String>(k.name) {
            flags.insert(k.name.to_string(), vals.cloned().collect());
        }
    }
    Ok(Settings::merge(file, flags))
}

fn default_out_dir(s: &Settings) -> PathBuf {
    match s.values().get("out").and_then(|v| v.first()) {
        Some(dir) => PathBuf::from(dir),
        None => PathBuf::from(std::env::var(OUT_DIR_ENV).unwrap_or_else(|_| "gsa-out".into())),
    }
}

fn input_hashes(s: &Settings) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for key in FILE_KEYS {
        if let Some(path) = s.values().get(key).and_then(|v| v.first()) {
            out.insert(path.clone(), hash_file(Path::new(path))?);
        }
    }
    Ok(out)
}

/// Run `command` with `settings`, write outputs and manifest into `out`.
pub fn execute(command: &str, settings: Settings, out: Option<PathBuf>) -> CliResult<(PathBuf, Manifest)> {
    let start = Instant::now();
    let result = match command {
        "run" => run::run(&settings)?,
        "converge" => study::converge(&settings)?,
        other => return Err(CliError::usage(format!("unknown command `{other}`"))),
    };
    let dir = out.unwrap_or_else(|| default_out_dir(&settings));
    let outputs = write_tables(&dir, &result.tables)?;
    let manifest = Manifest {
        tool: "gsa".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config: settings.values().clone(),
        seed: settings.get_or("seed", 0)?,
        eval_count: result.eval_count,
        wall_time_s: start.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
        cwd: std::env::current_dir()?,
        inputs: input_hashes(&settings)?,
        outputs,
    };
    let path = write_manifest(&dir, &manifest)?;
    Ok((path, manifest))
}

/// Repeat a recorded run into `out` and check every output hash.
pub fn replay(manifest_path: &Path, out: Option<PathBuf>) -> CliResult<(PathBuf, Manifest)> {
    let recorded = Manifest::read(manifest_path)?;
    if recorded.version != env!("CARGO_PKG_VERSION") {
        eprintln!(
            "gsa: warning: manifest written by version {}, replaying with {}",
            recorded.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    let out = match out {
        Some(dir) => std::path::absolute(dir)?,
        None => std::path::absolute(manifest_path)?.parent().unwrap_or(Path::new(".")).join("replay"),
    };
    std::env::set_current_dir(&recorded.cwd)
        .map_err(|e| CliError::usage(format!("cannot enter recorded directory {}: {e}", recorded.cwd.display())))?;
    for (path, hash) in &recorded.inputs {
        if &hash_file(Path::new(path))? != hash {
            return Err(CliError::usage(format!("input file {path} changed since the recorded run")));
        }
    }
    let (path, fresh) = execute(&recorded.command, Settings::new(recorded.config.clone()), Some(out))?;
    let differing: Vec<&str> = recorded
        .outputs
        .iter()
        .filter(|(file, hash)| fresh.outputs.get(*file) != Some(hash))
        .map(|(file, _)| file.as_str())
        .collect();
    if !differing.is_empty() || fresh.outputs.len() != recorded.outputs.len() {
        return Err(CliError::Mismatch(format!("outputs differ: {}", differing.join(", "))));
    }
    if fresh.eval_count != recorded.eval_count {
        return Err(CliError::Mismatch(format!("eval_count {} vs recorded {}", fresh.eval_count, recorded.eval_count)));
    }
    Ok((path, fresh))
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().map_err(|_| CliError::usage(format!("{THREADS_ENV}=`{v}` is not a count")))?;
        // Already configured when called twice in one process; keep the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parse `args`, run, print a short report; returns the process exit code.
pub fn main_with(args: impl IntoIterator<Item = impl Into<OsString> + Clone>) -> i32 {
    let matches = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = configure_threads().and_then(|_| match matches.subcommand() {
        Some(("run", m)) => execute("run", settings_from(m, &[MODEL_KEYS, RUN_KEYS])?, None),
        Some(("converge", m)) => execute("converge", settings_from(m, &[MODEL_KEYS, CONVERGE_KEYS])?, None),
        Some(("replay", m)) => replay(
            Path::new(m.get_one::<String>("manifest").expect("required")),
            m.get_one::<String>("out").map(PathBuf::from),
        ),
        _ => unreachable!("subcommand required"),
    });
    match outcome {
        Ok((path, m)) => {
            println!("wrote {} ({} model evaluations)", path.display(), m.eval_count);
            for file in m.outputs.keys() {
                println!("  {file}");
            }
            0
        }
        Err(e) => {
            eprintln!("gsa: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        cli().debug_assert();
    }
}
