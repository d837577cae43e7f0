//! Memory dumps. The text form is the program source plus `;@` directive
//! lines (comments to the loader); the binary form wraps the text form with a
//! length and SHA-256 checksum.

use sha2::{Digest, Sha256};

use super::parser::{self, Construct};
use super::{Deffacts, EngineError, Fact, Rule};

pub const SNAPSHOT_MAJOR: u32 = 1;
const TEXT_MAGIC: &str = ";; rbe-snapshot";
const BINARY_MAGIC: &[u8; 4] = b"RBEB";
const BINARY_HEADER_LEN: usize = 4 + 1 + 8 + 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotFormat {
    Text,
    Binary,
}

impl SnapshotFormat {
    /// `.dump.bin` is binary, anything else text.
    pub fn for_path(path: &str) -> SnapshotFormat {
        if path.ends_with(".bin") {
            SnapshotFormat::Binary
        } else {
            SnapshotFormat::Text
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub format: SnapshotFormat,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct SnapshotImage {
    pub next_index: usize,
    pub cursor: usize,
    pub deffacts: Vec<Deffacts>,
    pub rules: Vec<Rule>,
    pub facts: Vec<Fact>,
    pub fired: Vec<(String, Vec<usize>)>,
}

fn snap_err(msg: impl Into<String>) -> EngineError {
    EngineError::Snapshot(msg.into())
}

fn encode_text(image: &SnapshotImage) -> String {
    let mut out = format!("{TEXT_MAGIC} {SNAPSHOT_MAJOR}\n");
    out.push_str(&format!(";@next-index {}\n", image.next_index));
    out.push_str(&format!(";@cursor {}\n", image.cursor));
    for d in &image.deffacts {
        out.push_str(&format!("{d}\n"));
    }
    for r in &image.rules {
        out.push_str(&format!("{r}\n"));
    }
    for f in &image.facts {
        out.push_str(&format!(";@fact {} {}\n", f.index, f.body()));
    }
    for (rule, tuple) in &image.fired {
        let idx: Vec<String> = tuple.iter().map(usize::to_string).collect();
        out.push_str(&format!(";@fired {rule} {}\n", idx.join(" ")));
    }
    out.push_str(";@end\n");
    out
}

pub(crate) fn encode(image: &SnapshotImage, format: SnapshotFormat) -> Snapshot {
    let text = encode_text(image).into_bytes();
    let payload = match format {
        SnapshotFormat::Text => text,
        SnapshotFormat::Binary => {
            let mut out = Vec::with_capacity(BINARY_HEADER_LEN + text.len());
            out.extend_from_slice(BINARY_MAGIC);
            out.push(SNAPSHOT_MAJOR as u8);
            out.extend_from_slice(&(text.len() as u64).to_le_bytes());
            out.extend_from_slice(&Sha256::digest(&text));
            out.extend_from_slice(&text);
            out
        }
    };
    Snapshot { format, payload }
}

fn unwrap_binary(payload: &[u8]) -> Result<&[u8], EngineError> {
    if payload.len() < BINARY_HEADER_LEN || &payload[..4] != BINARY_MAGIC {
        return Err(snap_err("not a binary snapshot"));
    }
    if payload[4] as u32 != SNAPSHOT_MAJOR {
        return Err(snap_err(format!("unsupported snapshot version {}", payload[4])));
    }
    let len = u64::from_le_bytes(payload[5..13].try_into().unwrap()) as usize;
    let body = &payload[BINARY_HEADER_LEN..];
    if body.len() != len {
        return Err(snap_err(format!("payload is {} bytes, header says {len}", body.len())));
    }
    if Sha256::digest(body).as_slice() != &payload[13..45] {
        return Err(snap_err("checksum mismatch"));
    }
    Ok(body)
}

fn parse_num(s: Option<&str>, what: &str) -> Result<usize, EngineError> {
    s.and_then(|s| s.parse().ok())
        .ok_or_else(|| snap_err(format!("bad {what}")))
}

pub(crate) fn decode(snapshot: &Snapshot) -> Result<SnapshotImage, EngineError> {
    let bytes = match snapshot.format {
        SnapshotFormat::Text => &snapshot.payload[..],
        SnapshotFormat::Binary => unwrap_binary(&snapshot.payload)?,
    };
    let text = std::str::from_utf8(bytes).map_err(|_| snap_err("payload is not UTF-8"))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| snap_err("empty snapshot"))?;
    let version = header
        .strip_prefix(TEXT_MAGIC)
        .map(str::trim)
        .ok_or_else(|| snap_err("missing snapshot header"))?;
    if version.parse::<u32>().ok() != Some(SNAPSHOT_MAJOR) {
        return Err(snap_err(format!("unsupported snapshot version {version}")));
    }

    let mut next_index = None;
    let mut cursor = 0;
    let mut source = String::new();
    let mut fact_lines = Vec::new();
    let mut fired = Vec::new();
    let mut ended = false;
    for line in lines {
        if ended {
            if line.trim().is_empty() {
                continue;
            }
            return Err(snap_err("data after end marker"));
        }
        let Some(directive) = line.strip_prefix(";@") else {
            source.push_str(line);
            source.push('\n');
            continue;
        };
        let (name, rest) = directive.split_once(' ').unwrap_or((directive, ""));
        match name {
            "next-index" => next_index = Some(parse_num(Some(rest), "next index")?),
            "cursor" => cursor = parse_num(Some(rest), "cursor")?,
            "fact" => {
                let (idx, body) = rest.split_once(' ').ok_or_else(|| snap_err("bad fact line"))?;
                let index = parse_num(Some(idx), "fact index")?;
                let (head, slots) = parser::read_one(body)
                    .and_then(|form| parser::parse_fact(&form))
                    .map_err(|e| snap_err(format!("bad fact line: {e}")))?;
                fact_lines.push(Fact { index, head, slots });
            }
            "fired" => {
                let mut parts = rest.split(' ');
                let rule = parts.next().filter(|r| !r.is_empty()).ok_or_else(|| snap_err("bad fired line"))?;
                let tuple = parts
                    .map(|p| parse_num(Some(p), "fired tuple"))
                    .collect::<Result<Vec<_>, _>>()?;
                fired.push((rule.to_string(), tuple));
            }
            "end" => ended = true,
            other => return Err(snap_err(format!("unknown directive `{other}`"))),
        }
    }
    if !ended {
        return Err(snap_err("truncated snapshot (no end marker)"));
    }
    let constructs = parser::parse_program(&source).map_err(|e| snap_err(e.to_string()))?;
    let mut rules = Vec::new();
    let mut deffacts = Vec::new();
    for c in constructs {
        match c {
            Construct::Rule(r) => rules.push(r),
            Construct::Deffacts(d) => deffacts.push(d),
        }
    }
    Ok(SnapshotImage {
        next_index: next_index.ok_or_else(|| snap_err("missing next-index"))?,
        cursor,
        deffacts,
        rules,
        facts: fact_lines,
        fired,
    })
}
