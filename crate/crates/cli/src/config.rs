//! `--config FILE` support: each `key = value` line becomes `--key value`,
//! inserted before the explicit flags so the command line wins.

use std::fs;

use crate::commands::CliError;

pub fn parse_config(text: &str) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", n + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", n + 1)));
        }
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            _ => {
                out.push(format!("--{key}"));
                out.push(value.to_string());
            }
        }
    }
    Ok(out)
}

pub fn expand_config(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut config_path = None;
    let mut subcommand_at = None;
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if a == "--config" {
            config_path = args.get(i + 1).cloned();
            i += 2;
            continue;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            config_path = Some(p.to_string());
        } else if !a.starts_with('-') && subcommand_at.is_none() {
            subcommand_at = Some(i);
        }
        i += 1;
    }
    let (Some(path), Some(at)) = (config_path, subcommand_at) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
    let extra = parse_config(&text)?;
    let mut out = args[..=at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[at + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_become_flags() {
        let args = parse_config("# comment\nsteps = 50\nn_ff=8\nuntrained-control = true\ngrids = false\n").unwrap();
        assert_eq!(args, ["--steps", "50", "--n-ff", "8", "--untrained-control"]);
        assert!(parse_config("nonsense").is_err());
    }
}
