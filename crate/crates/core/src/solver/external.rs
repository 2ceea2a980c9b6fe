//! Running third-party DQBF/QBF solvers as subprocesses.
//!
//! Certificates are plain text, one line per existential bit:
//!
//! ```text
//! f <var> <bits>
//! ```
//!
//! where `<bits>` has `2^|deps|` characters `0`/`1` and character `r` is the
//! value when dependency `k` (in declaration order) equals bit `k` of `r`.
//! Other lines are ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use thiserror::Error;

use super::{BitFunction, HenkinSolution};
use crate::bitblast::{DqbfInstance, Var};
use crate::dqdimacs::write_dqdimacs;

#[derive(Debug, Error)]
pub enum ExternalError {
    #[error("could not run `{path}`: {source}")]
    Spawn {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("external solver timed out")]
    Timeout,
    #[error("no verdict in solver output (exit status {0:?})")]
    NoVerdict(Option<i32>),
    #[error("certificate line {line}: {message}")]
    Certificate { line: usize, message: String },
}

#[derive(Clone, Debug)]
pub struct ExternalOutcome {
    pub verdict: bool,
    pub certificate: Option<HenkinSolution>,
    pub stdout: String,
}

fn verdict_of_line(line: &str) -> Option<bool> {
    let words: Vec<&str> = line.split_whitespace().collect();
    let last = match words.as_slice() {
        ["s", "cnf", v, ..] => return Some(*v == "1"),
        ["s", v] | ["r", v] | [v] => *v,
        _ => return None,
    };
    match last.to_ascii_uppercase().as_str() {
        "SAT" | "SATISFIABLE" | "TRUE" => Some(true),
        "UNSAT" | "UNSATISFIABLE" | "FALSE" => Some(false),
        _ => None,
    }
}

/// Parses `f <var> <bits>` lines against the instance's dependency sets.
/// Returns `None` when the text contains no certificate lines.
pub fn parse_certificate(
    text: &str,
    instance: &DqbfInstance,
) -> Result<Option<HenkinSolution>, ExternalError> {
    let deps: BTreeMap<Var, Vec<Var>> = instance.all_existentials().into_iter().collect();
    let mut functions = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let err = |message: String| ExternalError::Certificate {
            line: i + 1,
            message,
        };
        let words: Vec<&str> = line.split_whitespace().collect();
        let ["f", var, bits] = words.as_slice() else {
            continue;
        };
        let var: Var = var
            .parse()
            .map_err(|_| err(format!("bad variable `{var}`")))?;
        let d = deps
            .get(&var)
            .ok_or_else(|| err(format!("{var} is not existential")))?;
        if bits.len() != 1 << d.len() {
            return Err(err(format!(
                "expected {} table entries, found {}",
                1usize << d.len(),
                bits.len()
            )));
        }
        let rows = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(err(format!("bad table entry `{c}`"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        functions.insert(var, BitFunction::from_rows(d.clone(), rows));
    }
    if functions.is_empty() {
        return Ok(None);
    }
    Ok(Some(HenkinSolution {
        functions,
        bitmap: instance.bitmap.clone(),
    }))
}

/// Renders a solution in the certificate format, tabulating every function
/// over its declared dependencies.
pub fn write_certificate(instance: &DqbfInstance, sol: &HenkinSolution) -> String {
    let mut out = String::new();
    for (var, deps) in instance.all_existentials() {
        let Some(f) = sol.function(var) else { continue };
        write!(out, "f {var} ").unwrap();
        for r in 0usize..1 << deps.len() {
            let bit = f.eval(&|v| {
                deps.iter()
                    .position(|&d| d == v)
                    .is_some_and(|k| (r >> k) & 1 == 1)
            });
            out.push(if bit { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}

static COUNTER: AtomicUsize = AtomicUsize::new(0);

/// Writes `instance` to a temporary file and runs `solver <file>`.
///
/// The verdict is taken from the first recognized output line (`s cnf 1|0`,
/// `SAT`/`UNSAT`, `r TRUE/FALSE` and similar) or, failing that, from the
/// conventional exit codes 10 and 20.
pub fn run_external(
    solver: &Path,
    instance: &DqbfInstance,
    timeout: Option<Duration>,
) -> Result<ExternalOutcome, ExternalError> {
    let file = std::env::temp_dir().join(format!(
        "dqsynth-{}-{}.dqdimacs",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::write(&file, write_dqdimacs(instance))?;
    let result = run_on_file(solver, &file, instance, timeout);
    let _ = std::fs::remove_file(&file);
    result
}

fn run_on_file(
    solver: &Path,
    file: &Path,
    instance: &DqbfInstance,
    timeout: Option<Duration>,
) -> Result<ExternalOutcome, ExternalError> {
    let mut child = Command::new(solver)
        .arg(file)
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|source| ExternalError::Spawn {
            path: solver.to_path_buf(),
            source,
        })?;
    let mut pipe = child.stdout.take().expect("piped stdout");
    let reader = std::thread::spawn(move || {
        let mut s = String::new();
        pipe.read_to_string(&mut s).map(|_| s)
    });
    let deadline = timeout.map(|t| Instant::now() + t);
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            let _ = child.kill();
            let _ = child.wait();
            return Err(ExternalError::Timeout);
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    let stdout = reader.join().expect("reader thread")?;
    let verdict = stdout
        .lines()
        .find_map(verdict_of_line)
        .or(match status.code() {
            Some(10) => Some(true),
            Some(20) => Some(false),
            _ => None,
        })
        .ok_or(ExternalError::NoVerdict(status.code()))?;
    let certificate = if verdict {
        parse_certificate(&stdout, instance)?
    } else {
        None
    };
    Ok(ExternalOutcome {
        verdict,
        certificate,
        stdout,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_lines() {
        assert_eq!(verdict_of_line("s cnf 1"), Some(true));
        assert_eq!(verdict_of_line("s cnf 0 3 4"), Some(false));
        assert_eq!(verdict_of_line("UNSAT"), Some(false));
        assert_eq!(verdict_of_line("r TRUE"), Some(true));
        assert_eq!(verdict_of_line("s UNSATISFIABLE"), Some(false));
        assert_eq!(verdict_of_line("c solving"), None);
    }
}
