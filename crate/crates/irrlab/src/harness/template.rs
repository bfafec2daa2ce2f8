//! Interaction templates: one 'a' or 'd' per line, fed to the client in
//! file order.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::harness::HarnessError;

/// Loads and validates a template file. Blank lines are ignored; any other
/// content is rejected with its line number. An empty template is an error.
pub fn load_template(path: &Path) -> Result<Vec<char>, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    parse_template(&text)
}

pub fn parse_template(text: &str) -> Result<Vec<char>, HarnessError> {
    let mut queue = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        match trimmed {
            "" => continue,
            "a" => queue.push('a'),
            "d" => queue.push('d'),
            other => {
                return Err(HarnessError::TemplateLine {
                    line: i + 1,
                    content: other.to_string(),
                })
            }
        }
    }
    if queue.is_empty() {
        return Err(HarnessError::EmptyTemplate);
    }
    Ok(queue)
}

/// Generates a deterministic pseudorandom template: identical seeds produce
/// byte-identical files.
pub fn generate_template(count: usize, seed: u64) -> Result<String, HarnessError> {
    if count == 0 {
        return Err(HarnessError::ZeroCount);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::with_capacity(count * 2);
    for _ in 0..count {
        out.push(if rng.gen_bool(0.5) { 'a' } else { 'd' });
        out.push('\n');
    }
    Ok(out)
}

/// Generates a template and writes it to disk.
pub fn write_template(path: &Path, count: usize, seed: u64) -> Result<(), HarnessError> {
    std::fs::write(path, generate_template(count, seed)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_in_file_order_and_skips_blank_lines() {
        assert_eq!(parse_template("a\nd\n\na\n").unwrap(), vec!['a', 'd', 'a']);
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(parse_template(""), Err(HarnessError::EmptyTemplate)));
        assert!(matches!(parse_template("\n\n"), Err(HarnessError::EmptyTemplate)));
    }

    #[test]
    fn bad_content_names_the_line() {
        let err = parse_template("a\nx\nd\n").unwrap_err();
        match err {
            HarnessError::TemplateLine { line, content } => {
                assert_eq!(line, 2);
                assert_eq!(content, "x");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let a = generate_template(1000, 42).unwrap();
        let b = generate_template(1000, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_template(1000, 43).unwrap());
    }

    #[test]
    fn generated_templates_have_the_right_shape() {
        let t = generate_template(4, 7).unwrap();
        assert_eq!(t.lines().count(), 4);
        assert_eq!(parse_template(&t).unwrap().len(), 4);
        assert!(matches!(generate_template(0, 7), Err(HarnessError::ZeroCount)));
    }

    #[test]
    fn written_templates_round_trip_through_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.txt");
        write_template(&path, 16, 3).unwrap();
        let loaded = load_template(&path).unwrap();
        assert_eq!(loaded.len(), 16);
    }
}
