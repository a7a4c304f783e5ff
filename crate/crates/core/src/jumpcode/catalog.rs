//! Degree-of-difficulty catalog.
//!
//! The catalog is a CSV file with header `code,description,dd_men,dd_women`
//! and DD values written with exactly four decimals. The official chart ships
//! embedded as [`DEFAULT_CATALOG_CSV`]; federations can load an amended file
//! with [`DifficultyCatalog::from_csv`].

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{parse, CodeError, Gender};
use crate::points::Dd;

pub const DEFAULT_CATALOG_CSV: &str = include_str!("../../data/dd_catalog_v1.csv");
pub const CATALOG_VERSION: &str = "dd-catalog/1";

const HEADER: [&str; 4] = ["code", "description", "dd_men", "dd_women"];

/// Women's DD on three-circle jumps is 1.06 times the men's value, printed
/// to three decimals. Allowed slack in ten-thousandths.
const RATIO_SLACK: u64 = 5;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog io: {0}")]
    Io(#[from] std::io::Error),
    #[error("catalog csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("catalog header must be `code,description,dd_men,dd_women`")]
    BadHeader,
    #[error("catalog line {line}: {message}")]
    InvalidRow { line: u64, message: String },
    #[error("catalog line {line}: duplicate code {code}")]
    DuplicateCode { line: u64, code: String },
    #[error("catalog is empty")]
    Empty,
    #[error("unknown jump code {0}")]
    UnknownCode(String),
    #[error(transparent)]
    Code(#[from] CodeError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DifficultyEntry {
    pub code: String,
    pub description: String,
    pub dd_men: Dd,
    pub dd_women: Dd,
    pub circles: usize,
}

impl DifficultyEntry {
    pub fn dd(&self, gender: Gender) -> Dd {
        match gender {
            Gender::Men => self.dd_men,
            Gender::Women => self.dd_women,
        }
    }
}

#[derive(Deserialize)]
struct Row {
    code: String,
    description: String,
    dd_men: String,
    dd_women: String,
}

#[derive(Debug, Clone)]
pub struct DifficultyCatalog {
    entries: BTreeMap<String, DifficultyEntry>,
    digest: String,
}

impl DifficultyCatalog {
    /// The official single-kicker chart.
    pub fn official() -> Self {
        Self::from_csv(DEFAULT_CATALOG_CSV).expect("embedded catalog is valid")
    }

    pub fn load(path: &Path) -> Result<Self, CatalogError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv(&text)
    }

    pub fn from_csv(text: &str) -> Result<Self, CatalogError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::None)
            .from_reader(text.as_bytes());
        let header = reader.headers()?;
        if header.iter().ne(HEADER) {
            return Err(CatalogError::BadHeader);
        }

        let mut entries = BTreeMap::new();
        for row in reader.deserialize::<Row>() {
            let row = row?;
            // header is line 1
            let line = entries.len() as u64 + 2;
            let invalid = |message: String| CatalogError::InvalidRow { line, message };

            let jump = parse(&row.code).map_err(|e| invalid(format!("code {:?}: {e}", row.code)))?;
            if jump.canonical_text() != row.code {
                return Err(invalid(format!("code {:?} is not canonical", row.code)));
            }
            let dd_men: Dd = row.dd_men.parse().map_err(|e| invalid(format!("dd_men: {e}")))?;
            let dd_women: Dd = row.dd_women.parse().map_err(|e| invalid(format!("dd_women: {e}")))?;
            if dd_men.ten_thousandths() == 0 || dd_women.ten_thousandths() == 0 {
                return Err(invalid("DD must be positive".into()));
            }
            let circles = jump.flip_count();
            check_gender_ratio(circles, dd_men, dd_women).map_err(invalid)?;

            if entries.contains_key(&row.code) {
                return Err(CatalogError::DuplicateCode { line, code: row.code });
            }
            entries.insert(
                row.code.clone(),
                DifficultyEntry {
                    code: row.code,
                    description: row.description,
                    dd_men,
                    dd_women,
                    circles,
                },
            );
        }
        if entries.is_empty() {
            return Err(CatalogError::Empty);
        }
        let digest = hex::encode(Sha256::digest(text.as_bytes()));
        Ok(DifficultyCatalog { entries, digest })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &DifficultyEntry> {
        self.entries.values()
    }

    pub fn get(&self, code: &str) -> Option<&DifficultyEntry> {
        self.entries.get(code)
    }

    /// SHA-256 of the catalog source text.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn max_dd(&self) -> Dd {
        self.entries
            .values()
            .map(|e| e.dd_men.max(e.dd_women))
            .max()
            .expect("catalog is non-empty")
    }

    /// Exact table lookup. The code must parse; it is then matched on its
    /// canonical text.
    pub fn lookup_dd(&self, code_text: &str, gender: Gender) -> Result<Dd, CatalogError> {
        let jump = parse(code_text)?;
        self.entries
            .get(jump.canonical_text())
            .map(|e| e.dd(gender))
            .ok_or_else(|| CatalogError::UnknownCode(code_text.to_string()))
    }
}

fn check_gender_ratio(circles: usize, men: Dd, women: Dd) -> Result<(), String> {
    let men = u64::from(men.ten_thousandths());
    let women = u64::from(women.ten_thousandths());
    if circles < 3 {
        if men != women {
            return Err("one- and two-circle rows need equal men's and women's DD".into());
        }
        return Ok(());
    }
    // women * 100 vs men * 106, both in millionths
    let scaled_women = women * 100;
    let scaled_ratio = men * 106;
    if scaled_women.abs_diff(scaled_ratio) > RATIO_SLACK * 100 {
        return Err(format!(
            "three-circle women's DD {} is not 1.06 x men's DD {}",
            Dd(women as u32),
            Dd(men as u32)
        ));
    }
    Ok(())
}
