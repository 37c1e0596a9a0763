//! Project-metadata ingestion.
//!
//! Input is a delimited export with one row per developer/project pair:
//!
//! ```text
//! dev_id  proj_id_num  audience  environment  OS_system  language  topic  PREFERENCE_COUNT
//! ```
//!
//! Each distinct `(aspect, label)` pair becomes a technology with id
//! `aspect_code * 10000 + ordinal`, where the ordinal is the 1-based rank of
//! the label in first-appearance order within its aspect. A user's rating of a
//! technology is the number of distinct projects of theirs carrying that
//! label, clamped to 5.
//!
//! An optional ninth `role` column is accepted. When present only rows whose
//! role names a manager are kept.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{ItemId, UserId};

/// Column names of the metadata export, in order. Matched case-insensitively.
pub const METADATA_HEADER: [&str; 8] = [
    "dev_id",
    "proj_id_num",
    "audience",
    "environment",
    "OS_system",
    "language",
    "topic",
    "PREFERENCE_COUNT",
];

/// Optional trailing column restricting rows to project managers.
pub const ROLE_COLUMN: &str = "role";

const ID_BLOCK: u64 = 10_000;

/// Highest rating a derived occurrence count can reach.
pub const MAX_DERIVED_RATING: u64 = 5;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("empty input")]
    EmptyInput,

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("row {row}, column {column}: {detail}")]
    RowParseError {
        row: u64,
        column: &'static str,
        detail: String,
    },

    #[error("label {label:?} for aspect {aspect} is not in the catalog")]
    UnknownLabel { aspect: Aspect, label: String },

    #[error("aspect {0} has more than 9999 distinct labels")]
    CatalogOverflow(Aspect),

    #[error("malformed ratings file at line {line}: {detail}")]
    MalformedRatings { line: u64, detail: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aspect {
    Audience,
    Environment,
    Os,
    Language,
    Topic,
}

impl Aspect {
    pub const ALL: [Aspect; 5] = [
        Aspect::Audience,
        Aspect::Environment,
        Aspect::Os,
        Aspect::Language,
        Aspect::Topic,
    ];

    /// Leading digit of every technology id in this aspect.
    pub fn code(self) -> u64 {
        match self {
            Aspect::Audience => 1,
            Aspect::Environment => 2,
            Aspect::Os => 3,
            Aspect::Language => 4,
            Aspect::Topic => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Aspect::Audience => "audience",
            Aspect::Environment => "environment",
            Aspect::Os => "os",
            Aspect::Language => "language",
            Aspect::Topic => "topic",
        }
    }

    pub fn from_code(code: u64) -> Option<Aspect> {
        Aspect::ALL.into_iter().find(|a| a.code() == code)
    }

    fn column(self) -> &'static str {
        METADATA_HEADER[2 + self as usize]
    }
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One developer/project row of the metadata export.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProjectRecord {
    pub dev_id: u64,
    pub proj_id: u64,
    pub audience: String,
    pub environment: String,
    pub os_system: String,
    pub language: String,
    pub topic: String,
    pub preference_count: u8,
}

impl ProjectRecord {
    pub fn label(&self, aspect: Aspect) -> &str {
        match aspect {
            Aspect::Audience => &self.audience,
            Aspect::Environment => &self.environment,
            Aspect::Os => &self.os_system,
            Aspect::Language => &self.language,
            Aspect::Topic => &self.topic,
        }
    }

    /// Checks the record invariants, reporting the first offending column.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.dev_id == 0 {
            return Err(("dev_id", "must be positive".into()));
        }
        if self.proj_id == 0 {
            return Err(("proj_id_num", "must be positive".into()));
        }
        for aspect in Aspect::ALL {
            let label = self.label(aspect);
            if label.trim().is_empty() {
                return Err((aspect.column(), "empty label".into()));
            }
            if label.trim() != label {
                return Err((aspect.column(), "label has surrounding whitespace".into()));
            }
        }
        if !(1..=5).contains(&self.preference_count) {
            return Err((
                "PREFERENCE_COUNT",
                format!("{} not in [1, 5]", self.preference_count),
            ));
        }
        Ok(())
    }
}

/// Parses the metadata export. Identical rows are collapsed, first
/// occurrence wins. Row numbers in errors are 1-based line numbers of the
/// input, counting the header as line 1.
pub fn parse_project_metadata<R: Read>(
    source: R,
    delimiter: u8,
) -> Result<Vec<ProjectRecord>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let mut rows = reader.records();
    let header = match rows.next() {
        None => return Err(IngestError::EmptyInput),
        Some(h) => h?,
    };
    let has_role = check_header(&header)?;

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for row in rows {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.iter().all(str::is_empty) {
            continue;
        }
        let (record, role) = parse_row(&row, line, has_role)?;
        if let Some(role) = role {
            if !is_manager_role(role) {
                continue;
            }
        }
        if seen.insert(record.clone()) {
            records.push(record);
        }
    }
    if records.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    Ok(records)
}

fn check_header(header: &csv::StringRecord) -> Result<bool, IngestError> {
    let names: Vec<&str> = header.iter().collect();
    let expected_len_ok = names.len() == 8 || names.len() == 9;
    let columns_ok = expected_len_ok
        && METADATA_HEADER
            .iter()
            .zip(&names)
            .all(|(want, got)| want.eq_ignore_ascii_case(got));
    let role_ok = names
        .get(8)
        .is_none_or(|name| name.eq_ignore_ascii_case(ROLE_COLUMN));
    if columns_ok && role_ok {
        Ok(names.len() == 9)
    } else {
        Err(IngestError::MalformedHeader(format!(
            "expected [{}] (optionally followed by {ROLE_COLUMN}), found [{}]",
            METADATA_HEADER.join(", "),
            names.join(", ")
        )))
    }
}

fn parse_row(
    row: &csv::StringRecord,
    line: u64,
    has_role: bool,
) -> Result<(ProjectRecord, Option<&str>), IngestError> {
    let err = |column: &'static str, detail: String| IngestError::RowParseError {
        row: line,
        column,
        detail,
    };
    let field = |idx: usize| -> Result<&str, IngestError> {
        row.get(idx)
            .ok_or_else(|| err(column_name(idx), "missing field".into()))
    };
    let id = |idx: usize| -> Result<u64, IngestError> {
        let raw = field(idx)?;
        if raw.is_empty() {
            return Err(err(column_name(idx), "missing id".into()));
        }
        raw.parse::<u64>()
            .map_err(|e| err(column_name(idx), format!("{raw:?}: {e}")))
    };

    let expected = if has_role { 9 } else { 8 };
    if row.len() > expected {
        return Err(err(
            column_name(expected - 1),
            format!("expected {expected} fields, found {}", row.len()),
        ));
    }

    let dev_id = id(0)?;
    let proj_id = id(1)?;
    let audience = field(2)?.to_owned();
    let environment = field(3)?.to_owned();
    let os_system = field(4)?.to_owned();
    let language = field(5)?.to_owned();
    let topic = field(6)?.to_owned();
    let pref_raw = field(7)?;
    let preference_count = pref_raw
        .parse::<u8>()
        .map_err(|e| err("PREFERENCE_COUNT", format!("{pref_raw:?}: {e}")))?;

    let record = ProjectRecord {
        dev_id,
        proj_id,
        audience,
        environment,
        os_system,
        language,
        topic,
        preference_count,
    };
    record.validate().map_err(|(column, detail)| err(column, detail))?;

    let role = if has_role { Some(field(8)?) } else { None };
    Ok((record, role))
}

fn column_name(idx: usize) -> &'static str {
    METADATA_HEADER.get(idx).copied().unwrap_or(ROLE_COLUMN)
}

fn is_manager_role(role: &str) -> bool {
    let role = role.to_ascii_lowercase();
    role == "pm" || role.contains("manager")
}

/// Writes records in the metadata export format, header included.
pub fn write_project_metadata<W: Write>(
    records: &[ProjectRecord],
    sink: W,
    delimiter: u8,
) -> Result<(), IngestError> {
    let mut writer = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_writer(sink);
    writer.write_record(METADATA_HEADER)?;
    for r in records {
        writer.write_record([
            r.dev_id.to_string().as_str(),
            &r.proj_id.to_string(),
            &r.audience,
            &r.environment,
            &r.os_system,
            &r.language,
            &r.topic,
            &r.preference_count.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TechnologyEntry {
    pub id: ItemId,
    pub aspect: Aspect,
    pub label: String,
}

impl TechnologyEntry {
    pub fn title(&self) -> &str {
        &self.label
    }

    pub fn genre(&self) -> &'static str {
        self.aspect.name()
    }
}

/// Technologies keyed by id, with a reverse `(aspect, label)` lookup.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TechnologyCatalog {
    entries: Vec<TechnologyEntry>,
    by_label: HashMap<(Aspect, String), ItemId>,
}

impl TechnologyCatalog {
    /// Entries in ascending id order.
    pub fn entries(&self) -> &[TechnologyEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn id_of(&self, aspect: Aspect, label: &str) -> Option<ItemId> {
        self.by_label.get(&(aspect, label.to_owned())).copied()
    }

    pub fn get(&self, id: ItemId) -> Option<&TechnologyEntry> {
        self.entries
            .binary_search_by_key(&id, |e| e.id)
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn contains(&self, id: ItemId) -> bool {
        self.get(id).is_some()
    }
}

pub fn build_catalog(records: &[ProjectRecord]) -> Result<TechnologyCatalog, IngestError> {
    if records.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let mut next_ordinal = [0u64; 5];
    let mut catalog = TechnologyCatalog::default();
    for record in records {
        for aspect in Aspect::ALL {
            let label = record.label(aspect);
            let key = (aspect, label.to_owned());
            if catalog.by_label.contains_key(&key) {
                continue;
            }
            let ordinal = &mut next_ordinal[aspect as usize];
            *ordinal += 1;
            if *ordinal >= ID_BLOCK {
                return Err(IngestError::CatalogOverflow(aspect));
            }
            let id = ItemId(aspect.code() * ID_BLOCK + *ordinal);
            catalog.by_label.insert(key, id);
            catalog.entries.push(TechnologyEntry {
                id,
                aspect,
                label: label.to_owned(),
            });
        }
    }
    catalog.entries.sort_by_key(|e| e.id);
    Ok(catalog)
}

/// One line of the ratings file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingRow {
    pub user: UserId,
    pub item: ItemId,
    pub value: f64,
}

/// Number of distinct projects per `(user, technology)`, before clamping,
/// sorted by user then technology.
pub fn occurrence_counts(
    records: &[ProjectRecord],
    catalog: &TechnologyCatalog,
) -> Result<Vec<(UserId, ItemId, u64)>, IngestError> {
    let mut projects: BTreeMap<(UserId, ItemId), BTreeSet<u64>> = BTreeMap::new();
    for record in records {
        for aspect in Aspect::ALL {
            let label = record.label(aspect);
            let item = catalog
                .id_of(aspect, label)
                .ok_or_else(|| IngestError::UnknownLabel {
                    aspect,
                    label: label.to_owned(),
                })?;
            projects
                .entry((UserId(record.dev_id), item))
                .or_default()
                .insert(record.proj_id);
        }
    }
    Ok(projects
        .into_iter()
        .map(|((u, i), p)| (u, i, p.len() as u64))
        .collect())
}

pub fn derive_ratings(
    records: &[ProjectRecord],
    catalog: &TechnologyCatalog,
) -> Result<Vec<RatingRow>, IngestError> {
    Ok(occurrence_counts(records, catalog)?
        .into_iter()
        .map(|(user, item, count)| RatingRow {
            user,
            item,
            value: count.min(MAX_DERIVED_RATING) as f64,
        })
        .collect())
}

/// Writes `userID,technologyID,value` lines, no header.
pub fn write_ratings<W: Write>(rows: &[RatingRow], mut sink: W) -> std::io::Result<()> {
    for row in rows {
        writeln!(sink, "{},{},{}", row.user, row.item, row.value)?;
    }
    sink.flush()
}

/// Reads `userID,technologyID,value` lines. Blank lines and lines starting
/// with `#` are skipped.
pub fn read_ratings<R: Read>(source: R) -> Result<Vec<RatingRow>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let bad = |detail: String| IngestError::MalformedRatings { line, detail };
        if rec.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", rec.len())));
        }
        let user = rec[0]
            .parse::<u64>()
            .map_err(|e| bad(format!("user id {:?}: {e}", &rec[0])))?;
        let item = rec[1]
            .parse::<u64>()
            .map_err(|e| bad(format!("technology id {:?}: {e}", &rec[1])))?;
        let value = rec[2]
            .parse::<f64>()
            .map_err(|e| bad(format!("value {:?}: {e}", &rec[2])))?;
        rows.push(RatingRow {
            user: UserId(user),
            item: ItemId(item),
            value,
        });
    }
    Ok(rows)
}

/// Writes `technologyID,title,genre` lines, no header.
pub fn write_catalog<W: Write>(catalog: &TechnologyCatalog, sink: W) -> Result<(), IngestError> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(sink);
    for e in catalog.entries() {
        writer.write_record([e.id.to_string().as_str(), e.title(), e.genre()])?;
    }
    writer.flush()?;
    Ok(())
}
