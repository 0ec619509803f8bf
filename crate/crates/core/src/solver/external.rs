//! External MaxSAT solvers as subprocesses.
//!
//! The instance is written to a temporary WCNF file, the command template is
//! run with `{wcnf}` replaced by that path, and standard MaxSAT output is
//! parsed from stdout: `o <cost>` lines (the last one counts),
//! `s OPTIMUM FOUND` / `s SATISFIABLE` / `s UNSATISFIABLE`, and `v` model
//! lines (either signed literals or a 0/1 string). The exit code is ignored
//! whenever the output parses. Temporary files are deleted on success and
//! kept on failure, with the path carried in the error.

use std::io::{BufWriter, Read};
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use crate::encoder::{emit_wcnf, VarLayout, WcnfFormula};

use super::{Model, SolveOutcome, SolverError};

/// Runs the external solver named by `command_template` on the instance.
///
/// A solver that proves optimality maps to [`SolveOutcome::Optimum`]; one
/// that only reports a model (e.g. killed at the budget after printing
/// intermediate solutions) maps to [`SolveOutcome::FeasibleBest`]; output
/// with no model line at all maps to [`SolveOutcome::TimeoutNone`]. The cost
/// is always recomputed from the model; a mismatching `o` line only logs a
/// warning, because the model is verifiable and the claim is not.
pub fn solve_external(
    formula: &WcnfFormula,
    layout: &VarLayout,
    command_template: &str,
    budget: Duration,
) -> Result<SolveOutcome, SolverError> {
    if !command_template.contains("{wcnf}") {
        return Err(SolverError::MissingPlaceholder);
    }
    let file = tempfile::Builder::new()
        .prefix("rule-instance-")
        .suffix(".wcnf")
        .tempfile()?;
    {
        let names: Vec<String> = (1..=layout.m()).map(|j| format!("x{j}")).collect();
        let mut writer = BufWriter::new(file.as_file());
        emit_wcnf(formula, layout, &names, &mut writer)?;
    }
    let path = file.into_temp_path();

    let mut command = build_command(command_template, &path);
    let run = run_with_deadline(&mut command, budget);
    let (stdout, stderr, exit) = match run {
        Ok(parts) => parts,
        Err(source) => {
            let kept = path.keep().ok();
            return Err(SolverError::Spawn {
                command: command_template.to_string(),
                source,
                instance: kept,
            });
        }
    };

    let parsed = parse_solver_output(&stdout, formula.num_vars());
    if parsed.is_silent() {
        let kept = path.keep().ok();
        let exit_text = exit
            .map(|c| format!("exit status {c}"))
            .unwrap_or_else(|| "killed at budget".to_string());
        let stderr_head: String = stderr.lines().take(3).collect::<Vec<_>>().join(" | ");
        return Err(SolverError::ExternalOutput {
            detail: format!(
                "no parseable solution lines ({exit_text}); stderr: {}",
                if stderr_head.is_empty() { "<empty>" } else { &stderr_head }
            ),
            instance: kept,
        });
    }

    if matches!(parsed.claim, SolverClaim::Unsatisfiable) {
        // cannot occur for well-formed encodings; surfaced upstream
        return Ok(SolveOutcome::Infeasible);
    }

    match parsed.model {
        Some(values) => {
            if !formula.hard_satisfied(&values) {
                let kept = path.keep().ok();
                return Err(SolverError::ModelViolatesHard { instance: kept });
            }
            let recomputed = formula.violation_cost(&values);
            if let Some(claimed) = parsed.reported_cost {
                if claimed != recomputed {
                    log::warn!(
                        "solver claimed cost {claimed}, model recomputes to {recomputed}; \
                         trusting the model"
                    );
                }
            }
            let model = Model::new(values, recomputed);
            if matches!(parsed.claim, SolverClaim::Optimum) {
                Ok(SolveOutcome::Optimum(model))
            } else {
                Ok(SolveOutcome::FeasibleBest(model))
            }
        }
        None => {
            if matches!(parsed.claim, SolverClaim::Optimum) {
                log::warn!("solver printed 's OPTIMUM FOUND' but no model line; degrading");
            }
            Ok(SolveOutcome::TimeoutNone)
        }
    }
}

fn build_command(template: &str, wcnf_path: &Path) -> Command {
    let path_text = wcnf_path.display().to_string();
    let parts: Vec<String> = template
        .split_whitespace()
        .map(|tok| tok.replace("{wcnf}", &path_text))
        .collect();
    let mut command = Command::new(&parts[0]);
    command.args(&parts[1..]);
    command
}

/// Runs the command, killing it at the deadline; returns captured stdout,
/// stderr, and the exit code (`None` when killed).
fn run_with_deadline(
    command: &mut Command,
    budget: Duration,
) -> std::io::Result<(String, String, Option<i32>)> {
    command.stdout(Stdio::piped()).stderr(Stdio::piped()).stdin(Stdio::null());
    let mut child = command.spawn()?;
    let deadline = Instant::now() + budget;

    let mut stdout_pipe = child.stdout.take().expect("piped stdout");
    let mut stderr_pipe = child.stderr.take().expect("piped stderr");
    let out_reader = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = stdout_pipe.read_to_string(&mut buf);
        buf
    });
    let err_reader = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = stderr_pipe.read_to_string(&mut buf);
        buf
    });

    let mut exit = None;
    loop {
        if let Some(status) = child.try_wait()? {
            exit = status.code();
            break;
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            let _ = child.wait();
            break;
        }
        std::thread::sleep(Duration::from_millis(10));
    }
    let stdout = out_reader.join().unwrap_or_default();
    let stderr = err_reader.join().unwrap_or_default();
    Ok((stdout, stderr, exit))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SolverClaim {
    Optimum,
    Satisfiable,
    Unsatisfiable,
    None,
}

struct ParsedOutput {
    claim: SolverClaim,
    reported_cost: Option<u64>,
    model: Option<Vec<bool>>,
    saw_any: bool,
}

impl ParsedOutput {
    fn is_silent(&self) -> bool {
        !self.saw_any
    }
}

/// Parses `o` / `s` / `v` lines. Multiple `v` lines concatenate. The model is
/// indexed by variable (entry 0 unused); variables a literal list leaves
/// unmentioned default to false.
fn parse_solver_output(text: &str, num_vars: usize) -> ParsedOutput {
    let mut claim = SolverClaim::None;
    let mut reported_cost = None;
    let mut v_tokens: Vec<String> = Vec::new();
    let mut saw_any = false;
    for line in text.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("o ") {
            if let Ok(cost) = rest.trim().parse::<u64>() {
                reported_cost = Some(cost);
                saw_any = true;
            }
        } else if let Some(rest) = line.strip_prefix("s ") {
            saw_any = true;
            let rest = rest.trim();
            claim = if rest.eq_ignore_ascii_case("OPTIMUM FOUND") {
                SolverClaim::Optimum
            } else if rest.eq_ignore_ascii_case("UNSATISFIABLE") {
                SolverClaim::Unsatisfiable
            } else if rest.eq_ignore_ascii_case("SATISFIABLE") {
                SolverClaim::Satisfiable
            } else {
                claim
            };
        } else if line == "v" {
            saw_any = true;
        } else if let Some(rest) = line.strip_prefix("v ") {
            saw_any = true;
            v_tokens.extend(rest.split_whitespace().map(str::to_string));
        }
    }
    let model = if v_tokens.is_empty() {
        None
    } else {
        Some(decode_model(&v_tokens, num_vars))
    };
    ParsedOutput {
        claim,
        reported_cost,
        model,
        saw_any,
    }
}

fn decode_model(tokens: &[String], num_vars: usize) -> Vec<bool> {
    let mut values = vec![false; num_vars + 1];
    // newer solvers print one 0/1 string indexed by variable
    let joined: String = tokens.concat();
    if num_vars > 1
        && joined.len() == num_vars
        && joined.chars().all(|c| c == '0' || c == '1')
    {
        for (i, c) in joined.chars().enumerate() {
            values[i + 1] = c == '1';
        }
        return values;
    }
    for tok in tokens {
        match tok.parse::<i64>() {
            Ok(0) => break,
            Ok(lit) => {
                let var = lit.unsigned_abs() as usize;
                if var <= num_vars {
                    values[var] = lit > 0;
                }
            }
            Err(_) => log::warn!("ignoring malformed model token '{tok}'"),
        }
    }
    values
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_list_models_decode() {
        let parsed = parse_solver_output("c comment\no 3\ns OPTIMUM FOUND\nv 1 -2 3 0\n", 3);
        assert_eq!(parsed.claim, SolverClaim::Optimum);
        assert_eq!(parsed.reported_cost, Some(3));
        assert_eq!(parsed.model.unwrap()[1..], [true, false, true]);
    }

    #[test]
    fn bitstring_models_decode() {
        let parsed = parse_solver_output("s OPTIMUM FOUND\nv 101\n", 3);
        assert_eq!(parsed.model.unwrap()[1..], [true, false, true]);
    }

    #[test]
    fn multiple_v_lines_concatenate() {
        let parsed = parse_solver_output("s SATISFIABLE\nv 1 -2\nv 3 0\n", 3);
        assert_eq!(parsed.claim, SolverClaim::Satisfiable);
        assert_eq!(parsed.model.unwrap()[1..], [true, false, true]);
    }

    #[test]
    fn last_o_line_wins() {
        let parsed = parse_solver_output("o 12\no 7\no 5\n", 4);
        assert_eq!(parsed.reported_cost, Some(5));
        assert!(parsed.model.is_none());
    }

    #[test]
    fn garbage_is_silent() {
        let parsed = parse_solver_output("segfault lol\n", 4);
        assert!(parsed.is_silent());
    }

    #[test]
    fn command_template_substitutes_path() {
        let cmd = build_command("solver --input={wcnf} -v", Path::new("/tmp/i.wcnf"));
        assert_eq!(cmd.get_program(), "solver");
        let args: Vec<_> = cmd.get_args().collect();
        assert_eq!(args, vec!["--input=/tmp/i.wcnf", "-v"]);
    }
}
