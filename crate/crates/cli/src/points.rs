//! Point specifications accepted on the command line.
//!
//! A point specification is one of:
//! - an alias `prAB` (single-digit counts) or `prAxB`,
//! - `pr A B`, `uniform A B [NA NB]`, `gfun FILE`, `enumerate A B`,
//! - a path to a distribution JSON file or a G-matrix text file.

use std::path::Path;

use anyhow::{bail, Context, Result};
use loophole_core::vertices::{enumerate_binary_extremals, generalized_pr_box, GFunction};
use loophole_core::{Distribution, Scenario};

pub struct NamedPoint {
    pub id: String,
    pub point: Distribution,
}

fn count(word: &str) -> Result<usize> {
    word.parse().with_context(|| format!("expected an input or output count, got {word:?}"))
}

/// Parses `pr22`, `pr34` or `pr10x10`.
pub fn parse_alias(word: &str) -> Option<(usize, usize)> {
    let rest = word.strip_prefix("pr")?;
    if let Some((a, b)) = rest.split_once('x') {
        return Some((a.parse().ok()?, b.parse().ok()?));
    }
    let digits: Vec<usize> = rest.chars().map(|c| c.to_digit(10).map(|d| d as usize)).collect::<Option<_>>()?;
    match digits.as_slice() {
        [a, b] => Some((*a, *b)),
        _ => None,
    }
}

fn load_file(path: &Path) -> Result<Distribution> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        let p: Distribution =
            serde_json::from_str(&text).with_context(|| format!("parsing distribution {}", path.display()))?;
        return Ok(p);
    }
    Ok(GFunction::parse(&text)?.to_distribution())
}

pub fn resolve(spec: &[String], enumerate_cap: u128) -> Result<Vec<NamedPoint>> {
    let words: Vec<&str> = spec.iter().map(String::as_str).collect();
    let one = |id: String, point: Distribution| Ok(vec![NamedPoint { id, point }]);
    match words.as_slice() {
        [] => bail!("no point given"),
        ["pr", a, b] => one(format!("pr{a}x{b}"), generalized_pr_box(count(a)?, count(b)?)?),
        ["uniform", a, b] => one(format!("uniform{a}x{b}"), Distribution::uniform(Scenario::binary(count(a)?, count(b)?)?)),
        ["uniform", a, b, na, nb] => one(
            format!("uniform{a}x{b}x{na}x{nb}"),
            Distribution::uniform(Scenario::new(count(a)?, count(b)?, count(na)?, count(nb)?)?),
        ),
        ["gfun", path] => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            one(path.to_string(), GFunction::parse(&text)?.to_distribution())
        }
        ["enumerate", a, b] => {
            let s = Scenario::binary(count(a)?, count(b)?)?;
            let pts = enumerate_binary_extremals(s, enumerate_cap)?;
            Ok(pts.into_iter().enumerate().map(|(i, point)| NamedPoint { id: format!("extremal-{i}"), point }).collect())
        }
        [word] => match parse_alias(word) {
            Some((a, b)) => one(word.to_string(), generalized_pr_box(a, b)?),
            None => one(word.to_string(), load_file(Path::new(word))?),
        },
        _ => bail!("unrecognised point specification {:?}", spec.join(" ")),
    }
}

pub fn resolve_one(spec: &[String]) -> Result<NamedPoint> {
    let mut points = resolve(spec, 1 << 20)?;
    if points.len() != 1 {
        bail!("expected a single point, got {}", points.len());
    }
    Ok(points.remove(0))
}
