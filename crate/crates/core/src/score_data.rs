//! Detector manifests, trial labels and the aligned detector-by-trial score
//! matrix.
//!
//! Text formats:
//! * manifest: CSV with header `name,param_count,score_file`, where
//!   `score_file` is resolved relative to the manifest's directory;
//! * score file: one `trial_id score` pair per line;
//! * label file: one `trial_id label` pair per line, `label` being
//!   `bonafide` or `spoof`.
//!
//! Blank lines and lines starting with `#` are ignored in the two
//! whitespace-separated formats. LF and CRLF line endings are accepted.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorMeta {
    pub id: usize,
    pub name: String,
    pub param_count: u64,
    pub score_path: PathBuf,
}

/// Ordered set of detectors. The order is the gene order of every
/// chromosome built over this pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorPool {
    detectors: Vec<DetectorMeta>,
}

impl DetectorPool {
    /// Builds a pool from `(name, param_count, score_path)` triples, assigning
    /// ids in order.
    pub fn new<I, S, P>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, u64, P)>,
        S: Into<String>,
        P: Into<PathBuf>,
    {
        let mut detectors = Vec::new();
        let mut seen = HashSet::new();
        for (id, (name, param_count, path)) in entries.into_iter().enumerate() {
            let name = name.into();
            if param_count == 0 {
                return Err(Error::NonPositiveParams(name));
            }
            if !seen.insert(name.clone()) {
                return Err(Error::DuplicateDetector(name));
            }
            detectors.push(DetectorMeta {
                id,
                name,
                param_count,
                score_path: path.into(),
            });
        }
        if detectors.is_empty() {
            return Err(Error::EmptyPool);
        }
        Ok(Self { detectors })
    }

    pub fn len(&self) -> usize {
        self.detectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detectors.is_empty()
    }

    pub fn detectors(&self) -> &[DetectorMeta] {
        &self.detectors
    }

    pub fn get(&self, id: usize) -> Option<&DetectorMeta> {
        self.detectors.get(id)
    }

    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.detectors.iter().position(|d| d.name == name)
    }

    pub fn total_params(&self) -> u64 {
        self.detectors.iter().map(|d| d.param_count).sum()
    }

    pub fn param_counts(&self) -> Vec<u64> {
        self.detectors.iter().map(|d| d.param_count).collect()
    }

    /// Pool restricted to `ids`, re-indexed from zero in the given order.
    pub fn subset(&self, ids: &[usize]) -> Result<Self> {
        Self::new(ids.iter().map(|&i| {
            let d = &self.detectors[i];
            (d.name.clone(), d.param_count, d.score_path.clone())
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Bonafide,
    Spoof,
}

impl Label {
    pub fn is_bonafide(self) -> bool {
        matches!(self, Label::Bonafide)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Bonafide => "bonafide",
            Label::Spoof => "spoof",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialLabels {
    trial_ids: Vec<String>,
    labels: Vec<Label>,
    n_bonafide: usize,
    n_spoof: usize,
}

impl TrialLabels {
    pub fn new(pairs: Vec<(String, Label)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(pairs.len());
        for (id, _) in &pairs {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateTrial {
                    path: PathBuf::new(),
                    trial: id.clone(),
                });
            }
        }
        let (trial_ids, labels): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        Self::from_parts(trial_ids, labels)
    }

    fn from_parts(trial_ids: Vec<String>, labels: Vec<Label>) -> Result<Self> {
        let n_bonafide = labels.iter().filter(|l| l.is_bonafide()).count();
        let n_spoof = labels.len() - n_bonafide;
        if n_bonafide == 0 || n_spoof == 0 {
            return Err(Error::DegenerateClasses {
                bonafide: n_bonafide,
                spoof: n_spoof,
            });
        }
        Ok(Self {
            trial_ids,
            labels,
            n_bonafide,
            n_spoof,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn trial_ids(&self) -> &[String] {
        &self.trial_ids
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// `(bonafide, spoof)` counts.
    pub fn counts(&self) -> (usize, usize) {
        (self.n_bonafide, self.n_spoof)
    }
}

/// Per-detector summary printed by validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectorStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

/// Detector scores aligned over trials. Row `i` belongs to detector `i` of
/// the pool, column `j` to trial `j` of the labels. Higher scores mean
/// "more bonafide".
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pool: DetectorPool,
    labels: TrialLabels,
    scores: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(pool: DetectorPool, labels: TrialLabels, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != pool.len() {
            return Err(Error::DimensionMismatch {
                expected: pool.len(),
                got: rows.len(),
            });
        }
        let t = labels.len();
        let mut scores = Vec::with_capacity(pool.len() * t);
        for (meta, row) in pool.detectors().iter().zip(rows) {
            if row.len() != t {
                return Err(Error::LengthMismatch {
                    scores: row.len(),
                    labels: t,
                });
            }
            if let Some(j) = row.iter().position(|s| !s.is_finite()) {
                return Err(Error::NonFiniteScore {
                    detector: meta.name.clone(),
                    trial: labels.trial_ids[j].clone(),
                });
            }
            scores.extend(row);
        }
        Ok(Self {
            pool,
            labels,
            scores,
        })
    }

    pub fn pool(&self) -> &DetectorPool {
        &self.pool
    }

    pub fn trial_labels(&self) -> &TrialLabels {
        &self.labels
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels.labels
    }

    pub fn n_detectors(&self) -> usize {
        self.pool.len()
    }

    pub fn n_trials(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, detector: usize) -> &[f64] {
        let t = self.n_trials();
        &self.scores[detector * t..(detector + 1) * t]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.scores.chunks_exact(self.n_trials())
    }

    pub fn stats(&self) -> Vec<DetectorStats> {
        self.rows()
            .map(|row| {
                let (min, max, sum) = row.iter().fold(
                    (f64::INFINITY, f64::NEG_INFINITY, 0.0),
                    |(lo, hi, s), &x| (lo.min(x), hi.max(x), s + x),
                );
                DetectorStats {
                    min,
                    max,
                    mean: sum / row.len() as f64,
                }
            })
            .collect()
    }

    /// Copy with every row shifted and scaled to zero mean and unit
    /// variance. Constant rows are only centred.
    pub fn z_normalized(&self) -> Self {
        let t = self.n_trials() as f64;
        let mut scores = Vec::with_capacity(self.scores.len());
        for row in self.rows() {
            let mean = row.iter().sum::<f64>() / t;
            let var = row.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / t;
            let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
            scores.extend(row.iter().map(|x| (x - mean) / sd));
        }
        Self {
            pool: self.pool.clone(),
            labels: self.labels.clone(),
            scores,
        }
    }

    /// Matrix restricted to the detectors in `ids`, in that order.
    pub fn select_detectors(&self, ids: &[usize]) -> Result<Self> {
        let pool = self.pool.subset(ids)?;
        let mut scores = Vec::with_capacity(ids.len() * self.n_trials());
        for &i in ids {
            scores.extend_from_slice(self.row(i));
        }
        Ok(Self {
            pool,
            labels: self.labels.clone(),
            scores,
        })
    }

    /// Writes `manifest.csv`, `labels.txt` and one score file per detector
    /// under `dir/scores/`. Returns the manifest path.
    pub fn write_files(&self, dir: &Path) -> Result<PathBuf> {
        let score_dir = dir.join("scores");
        fs::create_dir_all(&score_dir).map_err(|e| Error::io(&score_dir, e))?;

        let manifest = dir.join("manifest.csv");
        let mut w = csv::Writer::from_path(&manifest)?;
        w.write_record(["name", "param_count", "score_file"])?;
        for (meta, row) in self.pool.detectors().iter().zip(self.rows()) {
            let rel = format!("scores/{:03}_{}.txt", meta.id, file_stem(&meta.name));
            let mut text = String::with_capacity(row.len() * 24);
            for (id, s) in self.labels.trial_ids.iter().zip(row) {
                text.push_str(&format!("{id} {s}\n"));
            }
            write_text(&dir.join(&rel), &text)?;
            w.write_record([meta.name.as_str(), &meta.param_count.to_string(), &rel])?;
        }
        w.flush().map_err(|e| Error::io(&manifest, e))?;

        write_labels(&dir.join("labels.txt"), &self.labels)?;
        Ok(manifest)
    }
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn write_labels(path: &Path, labels: &TrialLabels) -> Result<()> {
    let mut text = String::with_capacity(labels.len() * 20);
    for (id, l) in labels.trial_ids.iter().zip(&labels.labels) {
        text.push_str(&format!("{id} {l}\n"));
    }
    write_text(path, &text)
}

#[derive(Deserialize)]
struct ManifestRow {
    name: String,
    param_count: String,
    score_file: PathBuf,
}

pub fn load_manifest(path: &Path) -> Result<DetectorPool> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut entries = Vec::new();
    for row in reader.deserialize::<ManifestRow>() {
        let row = row?;
        let count: i128 = row.param_count.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: entries.len() + 2,
            msg: format!("param_count `{}` is not an integer", row.param_count),
        })?;
        if count <= 0 {
            return Err(Error::NonPositiveParams(row.name));
        }
        let count = u64::try_from(count).map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: entries.len() + 2,
            msg: "param_count out of range".into(),
        })?;
        entries.push((row.name, count, base.join(row.score_file)));
    }
    DetectorPool::new(entries)
}

/// Yields `(line_number, first_token, second_token)` for every non-blank,
/// non-comment line.
fn pairs(text: &str) -> impl Iterator<Item = (usize, &str, Option<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            return None;
        }
        let mut it = line.split_whitespace();
        let a = it.next()?;
        Some((i + 1, a, it.next()))
    })
}

pub fn load_labels(path: &Path) -> Result<TrialLabels> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut seen = HashSet::new();
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for (line, id, token) in pairs(&text) {
        let label = match token {
            Some("bonafide") => Label::Bonafide,
            Some("spoof") => Label::Spoof,
            other => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("unknown label `{}`", other.unwrap_or("")),
                })
            }
        };
        if !seen.insert(id) {
            return Err(Error::DuplicateTrial {
                path: path.to_path_buf(),
                trial: id.to_string(),
            });
        }
        ids.push(id.to_string());
        labels.push(label);
    }
    TrialLabels::from_parts(ids, labels)
}

fn read_scores(path: &Path) -> Result<HashMap<String, f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = HashMap::new();
    for (line, id, token) in pairs(&text) {
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let token = token.ok_or_else(|| parse_err(format!("missing score for `{id}`")))?;
        let score: f64 = token
            .parse()
            .map_err(|_| parse_err(format!("`{token}` is not a number")))?;
        if out.insert(id.to_string(), score).is_some() {
            return Err(Error::DuplicateTrial {
                path: path.to_path_buf(),
                trial: id.to_string(),
            });
        }
    }
    Ok(out)
}

/// Reads every detector's score file and aligns it to `labels` by trial id.
///
/// Every labelled trial must be present in every score file. Score files
/// may carry additional trials (e.g. the other half of a dev/eval split);
/// those are ignored.
pub fn assemble_matrix(pool: DetectorPool, labels: TrialLabels) -> Result<ScoreMatrix> {
    let rows = pool
        .detectors()
        .par_iter()
        .map(|meta| {
            let by_trial = read_scores(&meta.score_path)?;
            labels
                .trial_ids
                .iter()
                .map(|id| match by_trial.get(id) {
                    None => Err(Error::MissingTrial {
                        detector: meta.name.clone(),
                        trial: id.clone(),
                    }),
                    Some(s) if !s.is_finite() => Err(Error::NonFiniteScore {
                        detector: meta.name.clone(),
                        trial: id.clone(),
                    }),
                    Some(&s) => Ok(s),
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    ScoreMatrix::new(pool, labels, rows)
}

/// Human-readable parameter count with three significant digits, e.g.
/// `3.52B`, `321M`.
pub fn format_params(count: u64) -> String {
    let (value, unit) = match count {
        c if c >= 1_000_000_000 => (c as f64 / 1e9, "B"),
        c if c >= 1_000_000 => (c as f64 / 1e6, "M"),
        c if c >= 1_000 => (c as f64 / 1e3, "K"),
        c => return c.to_string(),
    };
    let int_digits = value.log10().floor() as i32 + 1;
    let decimals = (3 - int_digits).max(0) as usize;
    format!("{value:.decimals$}{unit}")
}
