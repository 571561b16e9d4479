use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};
use std::sync::Mutex;

use ndarray::Array2;

use super::{check_arity, Model};
use crate::error::{Error, Result};
use crate::io::fmt_g17;

/// A model run as a child process.
///
/// Protocol: the child receives `p,n` on the first stdin line followed by n
/// CSV rows of p floats (`%.17g`), and must print exactly n lines with one
/// float each on stdout, then exit with status 0.
#[derive(Debug)]
pub struct ExternalModel {
    command: String,
    args: Vec<String>,
    arity: usize,
    // One child at a time per handle.
    lock: Mutex<()>,
}

impl ExternalModel {
    pub fn new(command: impl Into<String>, args: Vec<String>, arity: usize) -> Result<Self> {
        let command = command.into();
        if command.trim().is_empty() {
            return Err(Error::config("external model command is empty"));
        }
        if arity == 0 {
            return Err(Error::config("external model needs at least one input"));
        }
        Ok(ExternalModel { command, args, arity, lock: Mutex::new(()) })
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    pub fn args(&self) -> &[String] {
        &self.args
    }
}

/// Render the stdin payload for a batch.
pub(crate) fn encode_batch(x: &Array2<f64>) -> String {
    let mut s = format!("{},{}\n", x.ncols(), x.nrows());
    for row in x.rows() {
        let fields: Vec<String> = row.iter().map(|&v| fmt_g17(v)).collect();
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

/// Parse the child's stdout: exactly `n` lines holding one finite float each.
pub(crate) fn decode_responses(out: &str, n: usize) -> Result<Vec<f64>> {
    let mut y = Vec::with_capacity(n);
    for (row, line) in out.lines().enumerate() {
        if row >= n {
            return Err(Error::Evaluation { row, message: format!("model printed more than {n} lines") });
        }
        let v: f64 = line
            .trim()
            .parse()
            .map_err(|_| Error::Evaluation { row, message: format!("malformed output line `{}`", line.trim()) })?;
        if !v.is_finite() {
            return Err(Error::Evaluation { row, message: format!("non-finite output `{}`", line.trim()) });
        }
        y.push(v);
    }
    if y.len() != n {
        return Err(Error::Evaluation {
            row: y.len(),
            message: format!("expected {n} output lines, got {} (completed rows: {})", y.len(), y.len()),
        });
    }
    Ok(y)
}

impl Model for ExternalModel {
    fn arity(&self) -> usize {
        self.arity
    }

    fn evaluate(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        check_arity(self, x)?;
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut child = Command::new(&self.command)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Evaluation { row: 0, message: format!("cannot launch `{}`: {e}", self.command) })?;
        let payload = encode_batch(x);
        let mut stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (lines, write_result) = std::thread::scope(|s| {
            let writer = s.spawn(move || {
                let r = stdin.write_all(payload.as_bytes());
                drop(stdin);
                r
            });
            let mut lines = Vec::new();
            for line in BufReader::new(stdout).lines() {
                match line {
                    Ok(l) => lines.push(l),
                    Err(_) => break,
                }
            }
            (lines, writer.join().expect("stdin writer thread"))
        });
        let status = child.wait()?;
        let completed = lines.iter().take_while(|l| l.trim().parse::<f64>().is_ok()).count();
        if !status.success() {
            return Err(Error::Evaluation {
                row: completed,
                message: format!("`{}` exited with {status} after {completed} completed rows", self.command),
            });
        }
        if let Err(e) = write_result {
            // A child that stops reading early must still answer every row.
            if lines.len() < x.nrows() {
                return Err(Error::Evaluation { row: completed, message: format!("writing model input failed: {e}") });
            }
        }
        let mut text = lines.join("\n");
        text.push('\n');
        decode_responses(&text, x.nrows())
    }
}
