//! Builtin primitives, the aggregation monoids, and the shipped corpus of
//! example programs.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::ast::Program;
use crate::parser::{parse_program, ParseError};
use crate::runtime::{smash, DValue, KeyError, PValue, Table};
use crate::typecheck::ErrorKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MonoidKind {
    /// Over `&`, with nil as unit: usable as an aggregation.
    Additive,
    /// Over `@`, with a non-nil unit; absorbs nil.
    Multiplicative,
}

/// A commutative monoid on a pointed carrier.
pub struct MonoidSpec {
    pub name: &'static str,
    pub carrier: &'static str,
    pub kind: MonoidKind,
    pub unit: fn() -> PValue,
    pub op: fn(&PValue, &PValue) -> PValue,
}

pub static ANY: MonoidSpec = MonoidSpec {
    name: "or",
    carrier: "bool",
    kind: MonoidKind::Additive,
    unit: || PValue::Nil,
    op: prim_or,
};

pub static SUM: MonoidSpec = MonoidSpec {
    name: "+",
    carrier: "nat",
    kind: MonoidKind::Additive,
    unit: || PValue::Nil,
    op: prim_plus,
};

pub static ALL: MonoidSpec = MonoidSpec {
    name: "and",
    carrier: "bool",
    kind: MonoidKind::Multiplicative,
    unit: || PValue::bool(true),
    op: prim_and,
};

pub static PRODUCT: MonoidSpec = MonoidSpec {
    name: "*",
    carrier: "nat",
    kind: MonoidKind::Multiplicative,
    unit: || PValue::nat(1),
    op: prim_times,
};

pub static MONOIDS: [&MonoidSpec; 4] = [&ANY, &SUM, &ALL, &PRODUCT];

pub fn prim_or(p: &PValue, q: &PValue) -> PValue {
    PValue::bool(!p.is_nil() || !q.is_nil())
}

pub fn prim_plus(p: &PValue, q: &PValue) -> PValue {
    PValue::nat(p.as_nat() + q.as_nat())
}

pub fn prim_and(p: &PValue, q: &PValue) -> PValue {
    match smash(p.clone(), q.clone()) {
        PValue::Nil => PValue::Nil,
        _ => PValue::bool(true),
    }
}

pub fn prim_times(p: &PValue, q: &PValue) -> PValue {
    match smash(p.clone(), q.clone()) {
        PValue::Smash(a, b) => PValue::nat(a.as_nat() * b.as_nat()),
        _ => PValue::Nil,
    }
}

/// `(=) a`: the singleton finite map `{a => true}`.
pub fn prim_eq(a: DValue) -> Result<PValue, KeyError> {
    let mut t = Table::new(1);
    t.insert(vec![a], PValue::bool(true))?;
    Ok(PValue::table(t))
}

/// Fold an additive monoid over a table's values in key order.
pub fn aggregate(m: &MonoidSpec, t: &Table) -> PValue {
    debug_assert_eq!(m.kind, MonoidKind::Additive);
    t.values().fold((m.unit)(), |acc, v| (m.op)(&acc, v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    Accept,
    Reject,
}

#[derive(Clone, Debug, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub file: String,
    /// The definition the entry is about.
    pub def: String,
    pub expect: Expect,
    #[serde(rename = "errorKind")]
    pub error_kind: Option<String>,
    pub group: String,
}

impl ManifestEntry {
    pub fn error_kind(&self) -> Option<ErrorKind> {
        self.error_kind.as_deref().and_then(ErrorKind::from_name)
    }
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub meta: ManifestEntry,
    pub source: String,
}

impl CorpusEntry {
    pub fn parse(&self) -> Result<Program, ParseError> {
        parse_program(&self.source)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error("manifest names missing file `{0}`")]
    Missing(String),
}

const MANIFEST: &str = include_str!("../corpus/manifest.json");

const SOURCES: &[(&str, &str)] = &[
    ("actorOrDirector.fsl", include_str!("../corpus/actorOrDirector.fsl")),
    ("and3_smash.fsl", include_str!("../corpus/and3_smash.fsl")),
    ("and3_with.fsl", include_str!("../corpus/and3_with.fsl")),
    ("circular.fsl", include_str!("../corpus/circular.fsl")),
    ("connected.fsl", include_str!("../corpus/connected.fsl")),
    ("costars.fsl", include_str!("../corpus/costars.fsl")),
    ("cross.fsl", include_str!("../corpus/cross.fsl")),
    ("curry.fsl", include_str!("../corpus/curry.fsl")),
    ("dup_smash.fsl", include_str!("../corpus/dup_smash.fsl")),
    ("dup_smash_fin.fsl", include_str!("../corpus/dup_smash_fin.fsl")),
    ("dup_with.fsl", include_str!("../corpus/dup_with.fsl")),
    ("dup_with_fin.fsl", include_str!("../corpus/dup_with_fin.fsl")),
    ("filmCount.fsl", include_str!("../corpus/filmCount.fsl")),
    ("filter.fsl", include_str!("../corpus/filter.fsl")),
    ("fst_smash.fsl", include_str!("../corpus/fst_smash.fsl")),
    ("fst_with.fsl", include_str!("../corpus/fst_with.fsl")),
    ("hitchcockAlone.fsl", include_str!("../corpus/hitchcockAlone.fsl")),
    ("id_fin.fsl", include_str!("../corpus/id_fin.fsl")),
    ("id_lolli.fsl", include_str!("../corpus/id_lolli.fsl")),
    ("intersect.fsl", include_str!("../corpus/intersect.fsl")),
    ("join.fsl", include_str!("../corpus/join.fsl")),
    ("map.fsl", include_str!("../corpus/map.fsl")),
    ("matMul.fsl", include_str!("../corpus/matMul.fsl")),
    ("mutuals.fsl", include_str!("../corpus/mutuals.fsl")),
    ("pair_smash.fsl", include_str!("../corpus/pair_smash.fsl")),
    ("pair_with.fsl", include_str!("../corpus/pair_with.fsl")),
    ("pure.fsl", include_str!("../corpus/pure.fsl")),
    ("three.fsl", include_str!("../corpus/three.fsl")),
    ("three_fin.fsl", include_str!("../corpus/three_fin.fsl")),
    ("uncurry.fsl", include_str!("../corpus/uncurry.fsl")),
    ("union.fsl", include_str!("../corpus/union.fsl")),
];

/// The shipped corpus, or the one in `$FSLANG_CORPUS` when set.
pub fn corpus() -> Result<Vec<CorpusEntry>, CorpusError> {
    match std::env::var_os("FSLANG_CORPUS") {
        Some(dir) => corpus_from_dir(Path::new(&dir)),
        None => {
            let manifest: Vec<ManifestEntry> = serde_json::from_str(MANIFEST)?;
            manifest
                .into_iter()
                .map(|meta| {
                    let source = SOURCES
                        .iter()
                        .find(|(f, _)| *f == meta.file)
                        .ok_or_else(|| CorpusError::Missing(meta.file.clone()))?
                        .1
                        .to_string();
                    Ok(CorpusEntry { meta, source })
                })
                .collect()
        }
    }
}

pub fn corpus_from_dir(dir: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let read = |p: PathBuf| std::fs::read_to_string(&p).map_err(|source| CorpusError::Io { path: p, source });
    let manifest: Vec<ManifestEntry> = serde_json::from_str(&read(dir.join("manifest.json"))?)?;
    manifest
        .into_iter()
        .map(|meta| Ok(CorpusEntry { source: read(dir.join(&meta.file))?, meta }))
        .collect()
}
