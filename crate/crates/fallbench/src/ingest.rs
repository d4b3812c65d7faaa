//! Discovery, parsing, calibration, and labeling of raw SisFall-format
//! trial files.
//!
//! A dataset root holds one directory per subject (`SA01..SA23`,
//! `SE01..SE15`), each containing trial files named
//! `{activity}_{subject}_R{trial}.txt`. Every data line carries nine
//! comma-separated signed ADC counts, optionally terminated by `;`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub const ADULT_COUNT: u8 = 23;
pub const ELDERLY_COUNT: u8 = 15;
pub const ADL_COUNT: u8 = 19;
pub const FALL_COUNT: u8 = 15;
pub const CHANNELS: usize = 9;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("dataset root does not exist: {0}")]
    MissingRoot(PathBuf),
    #[error("no trial files found under {0}")]
    EmptyCatalog(PathBuf),
    #[error("{path}:{line}: malformed line: {reason}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{path}:{line}: channel {channel} count {value} exceeds {bits}-bit sensor range")]
    OutOfRange {
        path: PathBuf,
        line: usize,
        channel: usize,
        value: i64,
        bits: u32,
    },
    #[error("trial file has no data lines: {0}")]
    EmptyTrial(PathBuf),
    #[error("unknown subject {0}")]
    UnknownSubject(String),
    #[error("invalid identifier '{0}'")]
    BadIdentifier(String),
    #[error("duplicate trial entry {0}")]
    DuplicateEntry(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SubjectGroup {
    Adult,
    Elderly,
}

/// One of the 38 recorded subjects, e.g. `SA07` or `SE12`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SubjectId {
    pub group: SubjectGroup,
    pub index: u8,
}

impl SubjectId {
    pub fn new(group: SubjectGroup, index: u8) -> Result<Self, IngestError> {
        let max = match group {
            SubjectGroup::Adult => ADULT_COUNT,
            SubjectGroup::Elderly => ELDERLY_COUNT,
        };
        if index == 0 || index > max {
            return Err(IngestError::BadIdentifier(format!(
                "subject index {index} out of bounds for {group:?}"
            )));
        }
        Ok(SubjectId { group, index })
    }

    /// All 38 subjects, adults first, each group in index order.
    pub fn all() -> Vec<SubjectId> {
        let adults = (1..=ADULT_COUNT).map(|i| SubjectId {
            group: SubjectGroup::Adult,
            index: i,
        });
        let elderly = (1..=ELDERLY_COUNT).map(|i| SubjectId {
            group: SubjectGroup::Elderly,
            index: i,
        });
        adults.chain(elderly).collect()
    }
}

impl fmt::Display for SubjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.group {
            SubjectGroup::Adult => "SA",
            SubjectGroup::Elderly => "SE",
        };
        write!(f, "{tag}{:02}", self.index)
    }
}

impl FromStr for SubjectId {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || IngestError::BadIdentifier(s.to_string());
        let group = match s.get(..2) {
            Some("SA") => SubjectGroup::Adult,
            Some("SE") => SubjectGroup::Elderly,
            _ => return Err(bad()),
        };
        let index: u8 = s[2..].parse().map_err(|_| bad())?;
        SubjectId::new(group, index).map_err(|_| bad())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActivityKind {
    Adl,
    Fall,
}

/// One of the 34 recorded activities: `D01..D19` or `F01..F15`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActivityCode {
    pub kind: ActivityKind,
    pub index: u8,
}

impl ActivityCode {
    pub fn new(kind: ActivityKind, index: u8) -> Result<Self, IngestError> {
        let max = match kind {
            ActivityKind::Adl => ADL_COUNT,
            ActivityKind::Fall => FALL_COUNT,
        };
        if index == 0 || index > max {
            return Err(IngestError::BadIdentifier(format!(
                "activity index {index} out of bounds for {kind:?}"
            )));
        }
        Ok(ActivityCode { kind, index })
    }

    /// All 34 activity codes, ADLs first.
    pub fn all() -> Vec<ActivityCode> {
        let adls = (1..=ADL_COUNT).map(|i| ActivityCode {
            kind: ActivityKind::Adl,
            index: i,
        });
        let falls = (1..=FALL_COUNT).map(|i| ActivityCode {
            kind: ActivityKind::Fall,
            index: i,
        });
        adls.chain(falls).collect()
    }
}

impl fmt::Display for ActivityCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.kind {
            ActivityKind::Adl => 'D',
            ActivityKind::Fall => 'F',
        };
        write!(f, "{tag}{:02}", self.index)
    }
}

impl FromStr for ActivityCode {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || IngestError::BadIdentifier(s.to_string());
        let kind = match s.chars().next() {
            Some('D') => ActivityKind::Adl,
            Some('F') => ActivityKind::Fall,
            _ => return Err(bad()),
        };
        let index: u8 = s[1..].parse().map_err(|_| bad())?;
        ActivityCode::new(kind, index).map_err(|_| bad())
    }
}

/// Binary class label: ADL = 0, Fall = 1.
pub fn label_of(activity: ActivityCode) -> u8 {
    match activity.kind {
        ActivityKind::Adl => 0,
        ActivityKind::Fall => 1,
    }
}

/// One sample row: nine signed ADC counts in fixed channel order
/// (accelerometer 1 xyz, gyroscope xyz, accelerometer 2 xyz).
pub type RawSample = [i32; CHANNELS];

/// Resolution and full-scale range of one on-body sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub bits: u32,
    pub range_magnitude: f64,
}

impl SensorSpec {
    /// Physical units per ADC count: `2*range / 2^bits`.
    pub fn scale(&self) -> f64 {
        2.0 * self.range_magnitude / (1u64 << self.bits) as f64
    }

    pub fn max_count(&self) -> i64 {
        1i64 << (self.bits - 1)
    }
}

/// ADXL345 accelerometer: 13 bits, +-16 g.
pub const ACCEL1_SPEC: SensorSpec = SensorSpec {
    bits: 13,
    range_magnitude: 16.0,
};
/// ITG3200 gyroscope: 16 bits, +-2000 deg/s.
pub const GYRO_SPEC: SensorSpec = SensorSpec {
    bits: 16,
    range_magnitude: 2000.0,
};
/// MMA8451Q accelerometer: 14 bits, +-8 g.
pub const ACCEL2_SPEC: SensorSpec = SensorSpec {
    bits: 14,
    range_magnitude: 8.0,
};

/// Sensor spec per channel triplet in file order.
pub const SENSOR_SPECS: [SensorSpec; 3] = [ACCEL1_SPEC, GYRO_SPEC, ACCEL2_SPEC];

fn channel_spec(channel: usize) -> SensorSpec {
    SENSOR_SPECS[channel / 3]
}

/// One sample converted to physical units: g, deg/s, g per triplet.
pub type CalibratedSample<T> = [T; CHANNELS];

/// Converts a raw sample to physical units channel-wise.
pub fn calibrate<T: Scalar>(sample: &RawSample) -> CalibratedSample<T> {
    let mut out = [T::zero(); CHANNELS];
    for (c, (&count, slot)) in sample.iter().zip(out.iter_mut()).enumerate() {
        *slot = T::from_f64_(count as f64 * channel_spec(c).scale());
    }
    out
}

/// One parsed trial file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRecord {
    pub subject: SubjectId,
    pub activity: ActivityCode,
    pub trial: u32,
    pub samples: Vec<RawSample>,
    pub source_path: String,
}

impl TrialRecord {
    /// Renders the samples back to the on-disk line format.
    pub fn to_line_format(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            let fields: Vec<String> = s.iter().map(i32::to_string).collect();
            out.push_str(&fields.join(","));
            out.push_str(";\n");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub source_path: PathBuf,
    pub subject: SubjectId,
    pub activity: ActivityCode,
    pub trial: u32,
}

/// A file skipped during the scan, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: String,
}

/// Deterministic listing of every trial file under a dataset root.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    pub entries: Vec<CatalogEntry>,
    pub skipped: Vec<SkippedFile>,
}

impl Catalog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn subjects(&self) -> Vec<SubjectId> {
        let mut s: Vec<SubjectId> = self.entries.iter().map(|e| e.subject).collect();
        s.sort();
        s.dedup();
        s
    }

    /// Trial counts keyed by (subject, activity).
    pub fn counts(&self) -> BTreeMap<(SubjectId, ActivityCode), usize> {
        let mut m = BTreeMap::new();
        for e in &self.entries {
            *m.entry((e.subject, e.activity)).or_insert(0) += 1;
        }
        m
    }

    pub fn per_subject_counts(&self) -> BTreeMap<SubjectId, usize> {
        let mut m = BTreeMap::new();
        for e in &self.entries {
            *m.entry(e.subject).or_insert(0) += 1;
        }
        m
    }

    pub fn per_activity_counts(&self) -> BTreeMap<ActivityCode, usize> {
        let mut m = BTreeMap::new();
        for e in &self.entries {
            *m.entry(e.activity).or_insert(0) += 1;
        }
        m
    }
}

/// Decomposes `D01_SA01_R01.txt` into its (activity, subject, trial) parts.
fn parse_file_name(name: &str) -> Result<(ActivityCode, SubjectId, u32), String> {
    let stem = name
        .strip_suffix(".txt")
        .ok_or_else(|| format!("not a .txt file: {name}"))?;
    let parts: Vec<&str> = stem.split('_').collect();
    if parts.len() != 3 {
        return Err(format!("expected activity_subject_Rnn name, got '{name}'"));
    }
    let activity: ActivityCode = parts[0]
        .parse()
        .map_err(|_| format!("bad activity code '{}'", parts[0]))?;
    let subject: SubjectId = parts[1]
        .parse()
        .map_err(|_| format!("bad subject id '{}'", parts[1]))?;
    let trial_str = parts[2]
        .strip_prefix('R')
        .ok_or_else(|| format!("trial part '{}' lacks R prefix", parts[2]))?;
    let trial: u32 = trial_str
        .parse()
        .map_err(|_| format!("bad trial number '{trial_str}'"))?;
    if trial == 0 {
        return Err("trial number must be positive".into());
    }
    Ok((activity, subject, trial))
}

/// Walks the dataset tree and returns every matching trial file,
/// lexicographically sorted by path. Non-matching files are collected
/// into the skipped list with a reason.
pub fn scan_catalog(root_dir: &Path) -> Result<Catalog, IngestError> {
    if !root_dir.is_dir() {
        return Err(IngestError::MissingRoot(root_dir.to_path_buf()));
    }
    let mut catalog = Catalog::default();
    let mut subject_dirs: Vec<PathBuf> = Vec::new();
    let rd = fs::read_dir(root_dir).map_err(|e| IngestError::Io {
        path: root_dir.to_path_buf(),
        source: e,
    })?;
    for entry in rd {
        let entry = entry.map_err(|e| IngestError::Io {
            path: root_dir.to_path_buf(),
            source: e,
        })?;
        let path = entry.path();
        let name = entry.file_name().to_string_lossy().into_owned();
        if path.is_dir() && name.parse::<SubjectId>().is_ok() {
            subject_dirs.push(path);
        }
    }
    subject_dirs.sort();

    for dir in subject_dirs {
        let dir_subject: SubjectId = dir
            .file_name()
            .unwrap()
            .to_string_lossy()
            .parse()
            .expect("directory name validated above");
        let mut files: Vec<PathBuf> = Vec::new();
        let rd = fs::read_dir(&dir).map_err(|e| IngestError::Io {
            path: dir.clone(),
            source: e,
        })?;
        for entry in rd {
            let entry = entry.map_err(|e| IngestError::Io {
                path: dir.clone(),
                source: e,
            })?;
            files.push(entry.path());
        }
        files.sort();
        for path in files {
            if path.is_dir() {
                continue;
            }
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            match parse_file_name(&name) {
                Ok((activity, subject, trial)) => {
                    if subject != dir_subject {
                        catalog.skipped.push(SkippedFile {
                            path,
                            reason: format!(
                                "subject {subject} does not match directory {dir_subject}"
                            ),
                        });
                        continue;
                    }
                    catalog.entries.push(CatalogEntry {
                        source_path: path,
                        subject,
                        activity,
                        trial,
                    });
                }
                Err(reason) => catalog.skipped.push(SkippedFile { path, reason }),
            }
        }
    }

    catalog.entries.sort_by(|a, b| a.source_path.cmp(&b.source_path));
    let mut seen = std::collections::BTreeSet::new();
    for e in &catalog.entries {
        if !seen.insert((e.subject, e.activity, e.trial)) {
            return Err(IngestError::DuplicateEntry(format!(
                "{}_{}_R{:02}",
                e.activity, e.subject, e.trial
            )));
        }
    }
    if catalog.entries.is_empty() {
        return Err(IngestError::EmptyCatalog(root_dir.to_path_buf()));
    }
    Ok(catalog)
}

/// Parses one data line into a raw sample.
///
/// Accepts a trailing `;`, trailing whitespace, and CR from CRLF endings.
/// Returns None for blank lines.
fn parse_line(
    raw: &str,
    path: &Path,
    line_no: usize,
) -> Result<Option<RawSample>, IngestError> {
    let mut s = raw.trim_end_matches(['\r', ' ', '\t']);
    s = s.strip_suffix(';').unwrap_or(s).trim();
    if s.is_empty() {
        return Ok(None);
    }
    let mut sample = [0i32; CHANNELS];
    let mut count = 0usize;
    for (i, tok) in s.split(',').enumerate() {
        if i >= CHANNELS {
            return Err(IngestError::MalformedLine {
                path: path.to_path_buf(),
                line: line_no,
                reason: format!("more than {CHANNELS} fields"),
            });
        }
        let v: i64 = tok.trim().parse().map_err(|_| IngestError::MalformedLine {
            path: path.to_path_buf(),
            line: line_no,
            reason: format!("non-integer token '{}'", tok.trim()),
        })?;
        let spec = channel_spec(i);
        if v.abs() > spec.max_count() {
            return Err(IngestError::OutOfRange {
                path: path.to_path_buf(),
                line: line_no,
                channel: i,
                value: v,
                bits: spec.bits,
            });
        }
        sample[i] = v as i32;
        count += 1;
    }
    if count != CHANNELS {
        return Err(IngestError::MalformedLine {
            path: path.to_path_buf(),
            line: line_no,
            reason: format!("expected {CHANNELS} fields, got {count}"),
        });
    }
    Ok(Some(sample))
}

/// Parses a trial file into a record, preserving sample order.
pub fn parse_trial(
    path: &Path,
    expected: (SubjectId, ActivityCode, u32),
) -> Result<TrialRecord, IngestError> {
    let text = fs::read_to_string(path).map_err(|e| IngestError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_trial_text(&text, path, expected)
}

pub fn parse_trial_text(
    text: &str,
    path: &Path,
    expected: (SubjectId, ActivityCode, u32),
) -> Result<TrialRecord, IngestError> {
    let mut samples = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if let Some(sample) = parse_line(raw, path, i + 1)? {
            samples.push(sample);
        }
    }
    if samples.is_empty() {
        return Err(IngestError::EmptyTrial(path.to_path_buf()));
    }
    Ok(TrialRecord {
        subject: expected.0,
        activity: expected.1,
        trial: expected.2,
        samples,
        source_path: path.to_string_lossy().into_owned(),
    })
}

/// Parses every catalog entry for the chosen subjects, keeping every
/// `decimation`-th sample of each trial (first sample always kept).
/// Output order equals catalog order regardless of scheduling.
pub fn load_cohort(
    catalog: &Catalog,
    subjects: &[SubjectId],
    decimation: usize,
) -> Result<Vec<TrialRecord>, IngestError> {
    assert!(decimation >= 1, "decimation must be >= 1");
    let known = catalog.subjects();
    for s in subjects {
        if !known.contains(s) {
            return Err(IngestError::UnknownSubject(s.to_string()));
        }
    }
    let wanted: Vec<&CatalogEntry> = catalog
        .entries
        .iter()
        .filter(|e| subjects.contains(&e.subject))
        .collect();
    let mut records: Vec<TrialRecord> = wanted
        .par_iter()
        .map(|e| parse_trial(&e.source_path, (e.subject, e.activity, e.trial)))
        .collect::<Result<_, _>>()?;
    if decimation > 1 {
        for r in &mut records {
            r.samples = r
                .samples
                .iter()
                .step_by(decimation)
                .copied()
                .collect();
        }
    }
    Ok(records)
}
