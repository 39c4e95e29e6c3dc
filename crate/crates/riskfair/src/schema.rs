//! Versioned column schema for the county and domain-knowledge tables.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

pub const COUNTY_V1: &str = include_str!("../schema/county_v1.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Key,
    State,
    County,
    Explanatory,
    Target,
    DomainKnowledge,
    Ignored,
}

impl Role {
    pub fn is_numeric(self) -> bool {
        matches!(self, Role::Explanatory | Role::Target | Role::DomainKnowledge)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitClass {
    Percent,
    Index,
    Usd,
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownColumns {
    #[default]
    Error,
    Ignore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub field: String,
    pub header: String,
    pub role: Role,
    #[serde(default)]
    pub unit: Option<UnitClass>,
    #[serde(default)]
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSchema {
    pub version: u32,
    pub name: String,
    #[serde(default)]
    pub missing_tokens: Vec<String>,
    #[serde(default)]
    pub unknown_columns: UnknownColumns,
    #[serde(rename = "column")]
    pub columns: Vec<ColumnSpec>,
}

/// Domain-knowledge fields a record can carry.
pub const DK_FIELDS: [&str; 3] = ["per_capita_income", "pct_age_65_plus", "pct_nh_white"];

pub fn normalize_header(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl TableSchema {
    pub fn builtin() -> Self {
        Self::from_toml(COUNTY_V1).expect("bundled schema is valid")
    }

    pub fn from_toml(text: &str) -> AppResult<Self> {
        let schema: TableSchema = toml::from_str(text).map_err(|e| AppError::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> AppResult<()> {
        if self.version != 1 {
            return Err(AppError::Schema(format!("unsupported schema version {}", self.version)));
        }
        let count = |r: Role| self.columns.iter().filter(|c| c.role == r).count();
        if count(Role::Key) != 1 {
            return Err(AppError::Schema(format!("expected exactly one key column, found {}", count(Role::Key))));
        }
        if count(Role::Target) != 1 {
            return Err(AppError::Schema(format!("expected exactly one target column, found {}", count(Role::Target))));
        }
        let mut fields = BTreeSet::new();
        let mut names = BTreeSet::new();
        for c in &self.columns {
            if !fields.insert(c.field.as_str()) {
                return Err(AppError::Schema(format!("field `{}` declared twice", c.field)));
            }
            for n in std::iter::once(&c.header).chain(&c.aliases) {
                if !names.insert(normalize_header(n)) {
                    return Err(AppError::Schema(format!("header or alias `{n}` is ambiguous")));
                }
            }
            if c.role.is_numeric() && c.unit.is_none() {
                return Err(AppError::Schema(format!("numeric column `{}` has no unit class", c.field)));
            }
            if c.role == Role::DomainKnowledge && !DK_FIELDS.contains(&c.field.as_str()) {
                return Err(AppError::Schema(format!(
                    "domain-knowledge field `{}` is not one of {}",
                    c.field,
                    DK_FIELDS.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn column(&self, field: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.field == field)
    }

    pub fn with_role(&self, role: Role) -> impl Iterator<Item = &ColumnSpec> {
        self.columns.iter().filter(move |c| c.role == role)
    }

    pub fn key(&self) -> &ColumnSpec {
        self.with_role(Role::Key).next().expect("validated")
    }

    pub fn target(&self) -> &ColumnSpec {
        self.with_role(Role::Target).next().expect("validated")
    }

    pub fn explanatory_fields(&self) -> Vec<String> {
        self.with_role(Role::Explanatory).map(|c| c.field.clone()).collect()
    }

    pub fn dk_fields(&self) -> Vec<String> {
        self.with_role(Role::DomainKnowledge).map(|c| c.field.clone()).collect()
    }

    /// Every field name a record can be filtered on.
    pub fn known_fields(&self) -> BTreeSet<String> {
        self.columns.iter().filter(|c| c.role.is_numeric()).map(|c| c.field.clone()).collect()
    }

    pub fn lookup(&self, header: &str) -> Option<&ColumnSpec> {
        let h = normalize_header(header);
        self.columns
            .iter()
            .find(|c| normalize_header(&c.header) == h || c.aliases.iter().any(|a| normalize_header(a) == h))
    }

    pub fn is_missing(&self, token: &str) -> bool {
        let t = token.trim();
        self.missing_tokens.iter().any(|m| m.eq_ignore_ascii_case(t)) || t.is_empty()
    }

    /// Maps each header to its column, `None` for skipped unknown columns.
    pub fn resolve(&self, headers: &[String]) -> AppResult<Vec<Option<&ColumnSpec>>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(headers.len());
        for h in headers {
            match self.lookup(h) {
                Some(c) => {
                    if !seen.insert(c.field.as_str()) {
                        return Err(AppError::Schema(format!(
                            "column `{}` appears more than once (as `{h}`)",
                            c.field
                        )));
                    }
                    out.push(Some(c));
                }
                None => match self.unknown_columns {
                    UnknownColumns::Error => {
                        return Err(AppError::Schema(format!("header `{h}` is not in schema `{}`", self.name)))
                    }
                    UnknownColumns::Ignore => out.push(None),
                },
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_schema_lists_twenty_explanatory_columns() {
        let s = TableSchema::builtin();
        assert_eq!(s.explanatory_fields().len(), 20);
        assert_eq!(s.dk_fields(), DK_FIELDS.map(String::from).to_vec());
        assert_eq!(s.target().field, "alcohol_impaired_death_pct");
        assert_eq!(s.key().field, "fips");
    }

    #[test]
    fn header_matching_ignores_case_and_spacing() {
        let s = TableSchema::builtin();
        assert_eq!(s.lookup("  adult   OBESITY ").unwrap().field, "adult_obesity");
        assert_eq!(s.lookup("% Non-Hispanic White").unwrap().field, "pct_nh_white");
        assert!(s.lookup("shoe size").is_none());
    }

    #[test]
    fn two_keys_are_rejected() {
        let mut s = TableSchema::builtin();
        s.columns[1].role = Role::Key;
        assert!(matches!(s.validate(), Err(AppError::Schema(_))));
    }

    #[test]
    fn duplicate_and_unknown_headers_are_schema_errors() {
        let s = TableSchema::builtin();
        let dup = vec!["FIPS".to_string(), "fips code".to_string()];
        assert!(matches!(s.resolve(&dup), Err(AppError::Schema(_))));
        let unknown = vec!["FIPS".to_string(), "Shoe Size".to_string()];
        let e = s.resolve(&unknown).unwrap_err().to_string();
        assert!(e.contains("Shoe Size"), "{e}");
    }
}
