//! Scenario scripts: one command per line, without the program name.
//!
//! ```text
//! # comment
//! register-issuer --issuer CBSE                      # expect: ok
//! fetch-doc --requester shop --uri ${uri} --out x    # expect: error=policy-not-satisfied
//! fetch-doc --requester bank --uri ${uri} --out y    # expect: ok sha256=${document_sha256}
//! ```
//!
//! A step without an annotation must succeed. `${key}` expands to the most
//! recent value of `key` printed by an earlier step; `${store}` and
//! `${scenario_dir}` are predefined. The outer `--store` and `--seed` apply
//! to every step.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use clap::Parser;

use crate::{execute, render_output, Cli, CliError, Command, Output};

const EXPECT_MARK: &str = "# expect:";

#[derive(Debug, Clone, PartialEq, Eq)]
enum Outcome {
    Ok,
    Error(String),
}

#[derive(Debug)]
struct Expectation {
    outcome: Outcome,
    fields: Vec<(String, String)>,
}

fn fail(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::new("scenario-failed", format!("line {line}: {msg}"))
}

fn substitute(text: &str, vars: &BTreeMap<String, String>, line: usize) -> Result<String, CliError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after.find('}').ok_or_else(|| fail(line, "unterminated ${"))?;
        let name = &after[..end];
        let value = vars.get(name).ok_or_else(|| fail(line, format!("undefined variable {name:?}")))?;
        out.push_str(value);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

fn parse_expectation(text: &str, line: usize) -> Result<Expectation, CliError> {
    let words = shlex::split(text).ok_or_else(|| fail(line, "unbalanced quotes in expectation"))?;
    let (head, rest) = words.split_first().ok_or_else(|| fail(line, "empty expectation"))?;
    let outcome = match head.split_once('=') {
        None if head == "ok" => Outcome::Ok,
        Some(("error", code)) if !code.is_empty() => Outcome::Error(code.to_string()),
        _ => return Err(fail(line, format!("expectation must start with ok or error=<code>, got {head:?}"))),
    };
    let fields = rest
        .iter()
        .map(|w| {
            w.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| fail(line, format!("expected key=value, got {w:?}")))
        })
        .collect::<Result<_, _>>()?;
    Ok(Expectation { outcome, fields })
}

fn step_cli(outer: &Cli, words: &[String], line: usize) -> Result<Cli, CliError> {
    let mut args: Vec<String> = vec!["privlocker".into()];
    if let Some(store) = &outer.store {
        args.push("--store".into());
        args.push(store.display().to_string());
    }
    if let Some(seed) = outer.seed {
        args.push("--seed".into());
        args.push(seed.to_string());
    }
    args.extend(words.iter().cloned());
    let cli = Cli::try_parse_from(&args).map_err(|e| CliError::new("usage", format!("line {line}: {e}")))?;
    if matches!(cli.command, Command::RunScenario { .. }) {
        return Err(fail(line, "scenarios cannot nest"));
    }
    Ok(cli)
}

fn check(exp: &Expectation, got: &Result<Output, CliError>, line: usize) -> Result<(), CliError> {
    match (&exp.outcome, got) {
        (Outcome::Ok, Ok(out)) => {
            for (k, want) in &exp.fields {
                match out.iter().rev().find(|(key, _)| key == k) {
                    Some((_, v)) if v == want => {}
                    Some((_, v)) => return Err(fail(line, format!("{k}={v}, expected {want}"))),
                    None => return Err(fail(line, format!("output has no {k}"))),
                }
            }
            Ok(())
        }
        (Outcome::Error(code), Err(e)) if e.code == code => Ok(()),
        (Outcome::Ok, Err(e)) => Err(fail(line, format!("expected ok, got error={} ({})", e.code, e.message))),
        (Outcome::Error(code), Ok(_)) => Err(fail(line, format!("expected error={code}, got ok"))),
        (Outcome::Error(code), Err(e)) => Err(fail(line, format!("expected error={code}, got error={}", e.code))),
    }
}

pub(crate) fn run(outer: &Cli, file: &Path) -> Result<Output, CliError> {
    let store = outer
        .store
        .as_ref()
        .ok_or_else(|| CliError::new("invalid-input", "--store <dir> is required"))?;
    let text = fs::read_to_string(file)?;
    let dir = file.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut vars = BTreeMap::from([
        ("store".to_string(), store.display().to_string()),
        ("scenario_dir".to_string(), dir.display().to_string()),
    ]);

    let mut steps = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (cmd, exp) = match trimmed.find(EXPECT_MARK) {
            Some(at) => (&trimmed[..at], Some(&trimmed[at + EXPECT_MARK.len()..])),
            None => (trimmed, None),
        };
        let cmd = substitute(cmd.trim(), &vars, line)?;
        let exp = match exp {
            Some(e) => parse_expectation(&substitute(e.trim(), &vars, line)?, line)?,
            None => Expectation {
                outcome: Outcome::Ok,
                fields: Vec::new(),
            },
        };
        let words = shlex::split(&cmd).ok_or_else(|| fail(line, "unbalanced quotes"))?;
        let result = step_cli(outer, &words, line).and_then(|cli| execute(&cli));
        match &result {
            Ok(out) => eprintln!("[{line}] {cmd} -> ok {}", render_output(out)),
            Err(e) => eprintln!("[{line}] {cmd} -> error={}", e.code),
        }
        check(&exp, &result, line)?;
        if let Ok(out) = result {
            vars.extend(out);
        }
        steps += 1;
    }
    Ok(vec![
        ("scenario".into(), file.display().to_string()),
        ("steps".into(), steps.to_string()),
        ("passed".into(), steps.to_string()),
    ])
}
