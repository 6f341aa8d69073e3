//! `key = value` configuration files.

use std::path::Path;

/// Reads non-empty, non-comment lines as `(key, value)` pairs, in file order.
pub fn read(path: &Path) -> Result<Vec<(String, String)>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
        let key = key.trim().trim_start_matches("--");
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(format!("line {}: empty key or value", i + 1));
        }
        out.push((key.to_string(), value.to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_comments_and_blanks() {
        let got = parse("# run\nn = 2\n\n  k=0.5  # modulus\n--seed = 7\n").unwrap();
        assert_eq!(
            got,
            vec![("n".into(), "2".into()), ("k".into(), "0.5".into()), ("seed".into(), "7".into())]
        );
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse("n 2").is_err());
        assert!(parse("= 2").is_err());
        assert!(parse("n =").is_err());
    }
}
