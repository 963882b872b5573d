use std::collections::HashSet;

use serde::ser::{Serialize, SerializeSeq, Serializer};

use super::hypervolume::{hypervolume_2d, ReferencePoint};
use crate::error::{Error, Result};
use crate::fusion::{Chromosome, Encoding, FusionObjectives};

#[derive(Debug, Clone, PartialEq)]
pub struct FrontMember {
    pub objectives: FusionObjectives,
    pub chromosome: Chromosome,
}

/// Mutually non-dominated fusions, one per objective pair, ascending by EER.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParetoFront {
    members: Vec<FrontMember>,
}

impl ParetoFront {
    /// Keeps the non-dominated candidates, drops later copies of an
    /// objective pair, and sorts by EER.
    pub fn from_candidates<I: IntoIterator<Item = FrontMember>>(candidates: I) -> Self {
        let all: Vec<FrontMember> = candidates.into_iter().collect();
        let mut seen = HashSet::new();
        let mut members: Vec<FrontMember> = all
            .iter()
            .filter(|m| !all.iter().any(|o| o.objectives.dominates(&m.objectives)))
            .filter(|m| seen.insert((m.objectives.eer.to_bits(), m.objectives.params)))
            .cloned()
            .collect();
        members.sort_by(|a, b| {
            a.objectives
                .eer
                .total_cmp(&b.objectives.eer)
                .then(a.objectives.params.cmp(&b.objectives.params))
        });
        Self { members }
    }

    pub fn members(&self) -> &[FrontMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn encoding(&self) -> Option<Encoding> {
        self.members.first().map(|m| m.chromosome.encoding())
    }

    pub fn objectives(&self) -> Vec<FusionObjectives> {
        self.members.iter().map(|m| m.objectives).collect()
    }

    pub fn hypervolume(&self, reference: ReferencePoint) -> f64 {
        hypervolume_2d(self.members.iter().map(|m| &m.objectives), reference)
    }

    /// True when some member is at least as good as `point` in both
    /// objectives.
    pub fn weakly_dominates(&self, point: &FusionObjectives) -> bool {
        self.members
            .iter()
            .any(|m| m.objectives.weakly_dominates(point))
    }

    pub fn dominates(&self, point: &FusionObjectives) -> bool {
        self.members.iter().any(|m| m.objectives.dominates(point))
    }

    /// `eer,params,chromosome` with a header row.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["eer", "params", "chromosome"])
            .expect("in-memory write");
        for m in &self.members {
            w.write_record([
                m.objectives.eer.to_string(),
                m.objectives.params.to_string(),
                m.chromosome.to_field(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    /// Reads a front CSV as written by [`ParetoFront::to_csv`]. Rows are
    /// kept as given.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["eer", "params", "chromosome"] {
            return Err(Error::Config(format!(
                "front CSV header must be `eer,params,chromosome`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut members = Vec::new();
        let mut encoding = None;
        for (k, rec) in reader.records().enumerate() {
            let rec = rec?;
            let bad = |what: &str| Error::Config(format!("front row {}: bad {what}", k + 2));
            let eer: f64 = rec[0].parse().map_err(|_| bad("eer"))?;
            let params: u64 = rec[1].parse().map_err(|_| bad("params"))?;
            let enc = *encoding.get_or_insert_with(|| Chromosome::detect_encoding(&rec[2]));
            let chromosome = Chromosome::parse_field(enc, &rec[2])?;
            members.push(FrontMember {
                objectives: FusionObjectives { eer, params },
                chromosome,
            });
        }
        Ok(Self { members })
    }
}

impl Serialize for ParetoFront {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(serde::Serialize)]
        struct Row<'a> {
            eer: f64,
            params: u64,
            chromosome: &'a str,
        }
        let mut seq = serializer.serialize_seq(Some(self.members.len()))?;
        for m in &self.members {
            let field = m.chromosome.to_field();
            seq.serialize_element(&Row {
                eer: m.objectives.eer,
                params: m.objectives.params,
                chromosome: &field,
            })?;
        }
        seq.end()
    }
}

/// Global non-dominated set over several fronts.
pub fn super_pareto(fronts: &[ParetoFront]) -> Result<ParetoFront> {
    let encodings: HashSet<Encoding> = fronts.iter().filter_map(|f| f.encoding()).collect();
    if encodings.len() > 1 {
        return Err(Error::MixedEncodings);
    }
    Ok(ParetoFront::from_candidates(
        fronts.iter().flat_map(|f| f.members.iter().cloned()),
    ))
}
