//! `key = value` config files whose keys are the long flag names.

use std::path::Path;

use crate::outcome::Failure;

/// Parses the file into `(key, value)` pairs. Blank lines and `#` comments
/// are skipped; `_` in keys is read as `-`.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", no + 1))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key.starts_with('-') {
            return Err(format!("line {}: bad key {:?}", no + 1, k.trim()));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn flag_present(args: &[String], key: &str) -> bool {
    let flag = format!("--{key}");
    args.iter()
        .any(|a| a == &flag || a.strip_prefix(&flag).is_some_and(|rest| rest.starts_with('=')))
}

/// Position of the subcommand token: the first argument that is neither a
/// global flag nor its value.
fn subcommand_index(args: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if a == "--config" || a == "--jobs" {
            i += 2;
        } else if a.starts_with('-') {
            i += 1;
        } else {
            return Some(i);
        }
    }
    None
}

/// Inserts the config entries right after the subcommand. Flags given on the
/// command line win over the file.
pub fn merge(args: &[String], path: &Path) -> Result<Vec<String>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
    let pairs = parse(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let Some(at) = subcommand_index(args) else {
        return Ok(args.to_vec());
    };
    let mut extra = Vec::new();
    for (k, v) in pairs {
        if k == "config" || flag_present(args, &k) {
            continue;
        }
        match v.as_str() {
            "true" => extra.push(format!("--{k}")),
            "false" => {}
            _ => extra.push(format!("--{k}={v}")),
        }
    }
    let mut out = args[..=at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[at + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_pairs() {
        let p = parse("# sweep\nlambda = 1,0\n\ns_max=20\n").unwrap();
        assert_eq!(p, vec![("lambda".into(), "1,0".into()), ("s-max".into(), "20".into())]);
        assert!(parse("lambda 1").is_err());
    }

    #[test]
    fn command_line_wins() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "lambda = 3\ntol = 1e-9\n").unwrap();
        let args: Vec<String> = ["lab", "--config", "x", "profile", "--lambda", "1"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let merged = merge(&args, &path).unwrap();
        assert_eq!(
            merged,
            ["lab", "--config", "x", "profile", "--tol=1e-9", "--lambda", "1"]
        );
    }
}
