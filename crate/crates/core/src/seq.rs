//! FASTA ingestion and the seven-category physicochemical amino-acid alphabet.
//!
//! Residues are binned by side-chain volume and dipole:
//!
//! | category | residues     |
//! |----------|--------------|
//! | 1        | A G V        |
//! | 2        | I L F P      |
//! | 3        | Y M T S      |
//! | 4        | H N Q W      |
//! | 5        | R K          |
//! | 6        | D E          |
//! | 7        | C (and U)    |
//!
//! The ambiguity codes `X B Z J O` are accepted by the parser but only
//! encoded in [`AlphabetMode::Lenient`].

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of physicochemical categories.
pub const NUM_CATEGORIES: u8 = 7;

#[derive(Debug, Error)]
pub enum SeqError {
    #[error("FASTA input contains no records")]
    Empty,
    #[error("sequence data before the first '>' header at line {line}")]
    MissingHeader { line: usize },
    #[error("empty identifier in header at line {line}")]
    EmptyId { line: usize },
    #[error("duplicate protein id '{0}'")]
    DuplicateId(String),
    #[error("protein '{id}' has an empty sequence")]
    EmptySequence { id: String },
    #[error("protein '{id}': invalid character '{ch}' at position {position}")]
    InvalidCharacter { id: String, ch: char, position: usize },
    #[error("protein '{id}': residue '{ch}' at position {position} is not encodable in strict mode")]
    Unmapped { id: String, ch: char, position: usize },
    #[error("protein '{id}': no standard residue to infer a category for ambiguous codes")]
    NoStandardResidue { id: String },
    #[error("unknown alphabet mode '{0}' (expected strict or lenient)")]
    UnknownMode(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How residues outside the 20 standard amino acids (and U) are handled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphabetMode {
    #[default]
    Strict,
    /// Ambiguity codes take the most frequent category of their sequence.
    Lenient,
}

impl FromStr for AlphabetMode {
    type Err = SeqError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "strict" => Ok(AlphabetMode::Strict),
            "lenient" => Ok(AlphabetMode::Lenient),
            other => Err(SeqError::UnknownMode(other.to_string())),
        }
    }
}

impl fmt::Display for AlphabetMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphabetMode::Strict => f.write_str("strict"),
            AlphabetMode::Lenient => f.write_str("lenient"),
        }
    }
}

/// UniRef identity level used by the homology fallback.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IdentityLevel {
    Id100,
    Id90,
    Id50,
}

impl IdentityLevel {
    /// Levels in lookup order, most similar first.
    pub const CHAIN: [IdentityLevel; 3] = [IdentityLevel::Id100, IdentityLevel::Id90, IdentityLevel::Id50];

    pub fn percent(self) -> u32 {
        match self {
            IdentityLevel::Id100 => 100,
            IdentityLevel::Id90 => 90,
            IdentityLevel::Id50 => 50,
        }
    }

    pub fn from_percent(p: u32) -> Option<Self> {
        match p {
            100 => Some(IdentityLevel::Id100),
            90 => Some(IdentityLevel::Id90),
            50 => Some(IdentityLevel::Id50),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProteinRecord {
    pub id: String,
    /// Upper-case residue letters, terminal stop symbols removed.
    pub sequence: String,
    pub go_terms: BTreeSet<String>,
    pub cluster_ids: BTreeMap<IdentityLevel, String>,
}

impl ProteinRecord {
    pub fn new(id: impl Into<String>, sequence: impl Into<String>) -> Self {
        ProteinRecord {
            id: id.into(),
            sequence: sequence.into(),
            go_terms: BTreeSet::new(),
            cluster_ids: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }
}

/// A protein as a signal over the categories `1..=7`, one value per residue.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CategorySignal(Vec<u8>);

impl CategorySignal {
    /// Wraps raw category values, checking each lies in `1..=7`.
    pub fn new(values: Vec<u8>) -> Option<Self> {
        if values.is_empty() || values.iter().any(|&v| v == 0 || v > NUM_CATEGORIES) {
            return None;
        }
        Some(CategorySignal(values))
    }

    pub fn values(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&v| f64::from(v)).collect()
    }
}

/// Category of a standard residue (plus selenocysteine), `None` otherwise.
/// Expects an upper-case letter.
pub fn residue_category(residue: u8) -> Option<u8> {
    match residue {
        b'A' | b'G' | b'V' => Some(1),
        b'I' | b'L' | b'F' | b'P' => Some(2),
        b'Y' | b'M' | b'T' | b'S' => Some(3),
        b'H' | b'N' | b'Q' | b'W' => Some(4),
        b'R' | b'K' => Some(5),
        b'D' | b'E' => Some(6),
        b'C' | b'U' => Some(7),
        _ => None,
    }
}

fn is_ambiguity_code(residue: u8) -> bool {
    matches!(residue, b'X' | b'B' | b'Z' | b'J' | b'O')
}

/// Encodes a validated, upper-case sequence.
///
/// `id` only labels error messages.
pub fn encode_sequence(id: &str, sequence: &str, mode: AlphabetMode) -> Result<CategorySignal, SeqError> {
    let bytes = sequence.as_bytes();
    if bytes.is_empty() {
        return Err(SeqError::EmptySequence { id: id.to_string() });
    }
    let mut values = Vec::with_capacity(bytes.len());
    let mut ambiguous = Vec::new();
    for (i, &b) in bytes.iter().enumerate() {
        match residue_category(b) {
            Some(c) => values.push(c),
            None if mode == AlphabetMode::Lenient && is_ambiguity_code(b) => {
                ambiguous.push(i);
                values.push(0);
            }
            None => {
                let ch = char::from(b);
                let position = i + 1;
                return Err(if is_ambiguity_code(b) {
                    SeqError::Unmapped { id: id.to_string(), ch, position }
                } else {
                    SeqError::InvalidCharacter { id: id.to_string(), ch, position }
                });
            }
        }
    }
    if !ambiguous.is_empty() {
        let mut counts = [0usize; NUM_CATEGORIES as usize + 1];
        for &v in &values {
            counts[v as usize] += 1;
        }
        // ties go to the lower category
        let fill = (1..=NUM_CATEGORIES)
            .max_by(|&a, &b| counts[a as usize].cmp(&counts[b as usize]).then(b.cmp(&a)))
            .filter(|&c| counts[c as usize] > 0)
            .ok_or_else(|| SeqError::NoStandardResidue { id: id.to_string() })?;
        for i in ambiguous {
            values[i] = fill;
        }
    }
    Ok(CategorySignal(values))
}

/// Parses FASTA text into records carrying sequences only.
///
/// The id is the first whitespace-delimited token of the header. Sequence
/// lines are concatenated and upper-cased; whitespace is ignored and `*`
/// is accepted only at the very end of a sequence.
pub fn parse_fasta<R: BufRead>(reader: R) -> Result<Vec<ProteinRecord>, SeqError> {
    let mut records: Vec<ProteinRecord> = Vec::new();
    let mut seen = HashSet::new();
    let mut current: Option<(String, String)> = None;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if let Some(header) = line.strip_prefix('>') {
            if let Some((id, seq)) = current.take() {
                records.push(finish_record(id, seq)?);
            }
            let id = header.split_whitespace().next().unwrap_or("");
            if id.is_empty() {
                return Err(SeqError::EmptyId { line: lineno + 1 });
            }
            if !seen.insert(id.to_string()) {
                return Err(SeqError::DuplicateId(id.to_string()));
            }
            current = Some((id.to_string(), String::new()));
        } else if line.trim().is_empty() || line.starts_with(';') {
            continue;
        } else {
            match current.as_mut() {
                Some((_, seq)) => seq.extend(line.chars().filter(|c| !c.is_whitespace())),
                None => return Err(SeqError::MissingHeader { line: lineno + 1 }),
            }
        }
    }
    if let Some((id, seq)) = current.take() {
        records.push(finish_record(id, seq)?);
    }
    if records.is_empty() {
        return Err(SeqError::Empty);
    }
    Ok(records)
}

fn finish_record(id: String, raw: String) -> Result<ProteinRecord, SeqError> {
    let trimmed = raw.trim_end_matches('*');
    let mut sequence = String::with_capacity(trimmed.len());
    for (i, ch) in trimmed.chars().enumerate() {
        if !ch.is_ascii_alphabetic() {
            return Err(SeqError::InvalidCharacter { id, ch, position: i + 1 });
        }
        sequence.push(ch.to_ascii_uppercase());
    }
    if sequence.is_empty() {
        return Err(SeqError::EmptySequence { id });
    }
    Ok(ProteinRecord::new(id, sequence))
}

/// Writes records as FASTA with sequence lines wrapped at `width` residues.
pub fn write_fasta<W: Write>(mut out: W, records: &[ProteinRecord], width: usize) -> std::io::Result<()> {
    let width = width.max(1);
    for rec in records {
        writeln!(out, ">{}", rec.id)?;
        for chunk in rec.sequence.as_bytes().chunks(width) {
            out.write_all(chunk)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}
