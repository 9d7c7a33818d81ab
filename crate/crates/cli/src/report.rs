//! Human-readable summary of an output directory, built only from artifacts
//! and their sidecars.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::output::sha256_hex;

/// Tables longer than this are shown by their head and tail.
const FULL_ROWS: usize = 20;
const EDGE_ROWS: usize = 5;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn bad(path: &Path, what: impl std::fmt::Display) -> CliError {
    CliError::config("bad-artifact", format!("{}: {what}", path.display()))
}

fn markdown_rows(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let line = |cells: &[String]| format!("| {} |\n", cells.join(" | "));
    out.push_str(&line(header));
    out.push_str(&line(&vec!["---".to_string(); header.len()]));
    let show = |out: &mut String, r: &[Vec<String>]| r.iter().for_each(|row| out.push_str(&line(row)));
    if rows.len() <= FULL_ROWS {
        show(out, rows);
    } else {
        show(out, &rows[..EDGE_ROWS]);
        out.push_str(&line(&vec!["...".to_string(); header.len()]));
        show(out, &rows[rows.len() - EDGE_ROWS..]);
    }
}

/// Shortens `1.2345678901234567e-1` style cells for display.
fn pretty(cell: &str) -> String {
    match cell.parse::<f64>() {
        Ok(x) if cell.contains('e') && x != 0.0 && x.abs() < 1e-3 => format!("{x:.4e}"),
        Ok(x) if cell.contains('e') && x.is_finite() => format!("{x:.6}"),
        _ => cell.to_string(),
    }
}

fn csv_section(out: &mut String, path: &Path) -> CliResult<()> {
    let text = read(path)?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().map_err(|e| bad(path, e))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        rows.push(rec.map_err(|e| bad(path, e))?.iter().map(pretty).collect());
    }
    markdown_rows(out, &header, &rows);
    Ok(())
}

fn jsonl_section(out: &mut String, path: &Path, columns: &[String]) -> CliResult<()> {
    let text = read(path)?;
    let mut rows = Vec::new();
    for line in text.lines() {
        let v: Value = serde_json::from_str(line).map_err(|e| bad(path, e))?;
        rows.push(
            columns
                .iter()
                .map(|c| match &v[c] {
                    Value::Null => String::new(),
                    Value::Number(n) => pretty(&format!("{:e}", n.as_f64().unwrap_or(f64::NAN))),
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect(),
        );
    }
    markdown_rows(out, columns, &rows);
    Ok(())
}

/// Renders every artifact in `dir` that has a sidecar.
pub fn render(dir: &Path) -> CliResult<String> {
    let metas = crate::commands::artifacts(dir)?;
    if metas.is_empty() {
        return Err(CliError::config(
            "no-artifacts",
            format!("{} holds no artifacts with sidecars", dir.display()),
        ));
    }
    let mut out = String::new();
    writeln!(out, "# nadim report\n").unwrap();
    for meta_path in metas {
        let meta: Value = serde_json::from_str(&read(&meta_path)?).map_err(|e| bad(&meta_path, e))?;
        let name = meta["artifact"].as_str().ok_or_else(|| bad(&meta_path, "missing `artifact`"))?;
        let path = dir.join(name);
        let body = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        let intact = meta["artifact_sha256"].as_str() == Some(sha256_hex(&body).as_str());
        writeln!(out, "## {name}\n").unwrap();
        let spec_hash: String = meta["spec_sha256"].as_str().unwrap_or("?").chars().take(12).collect();
        writeln!(
            out,
            "- command: `{}`, spec: `{}` (sha256 {spec_hash})",
            meta["command"].as_str().unwrap_or("?"),
            meta["spec_name"].as_str().unwrap_or("?"),
        )
        .unwrap();
        writeln!(out, "- tool version: {}", meta["version"].as_str().unwrap_or("?")).unwrap();
        if let Some(p) = meta["params"].as_object().filter(|p| !p.is_empty()) {
            let parts: Vec<String> = p.iter().map(|(k, v)| format!("{k}={v}")).collect();
            writeln!(out, "- params: {}", parts.join(", ")).unwrap();
        }
        if let Some(f) = meta["facts"].as_object().filter(|f| !f.is_empty()) {
            let parts: Vec<String> = f.iter().map(|(k, v)| format!("{k}={v}")).collect();
            writeln!(out, "- facts: {}", parts.join(", ")).unwrap();
        }
        if !intact {
            writeln!(out, "- WARNING: artifact does not match its recorded sha256").unwrap();
        }
        out.push('\n');
        let columns: Vec<String> = meta["columns"]
            .as_array()
            .map(|a| a.iter().filter_map(|c| c.as_str().map(String::from)).collect())
            .unwrap_or_default();
        match meta["format"].as_str() {
            Some("csv") => csv_section(&mut out, &path)?,
            Some("json-lines") => jsonl_section(&mut out, &path, &columns)?,
            _ => writeln!(out, "({} bytes)", body.len()).unwrap(),
        }
        out.push('\n');
    }
    Ok(out)
}
