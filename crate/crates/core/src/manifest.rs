//! CSV dataset manifests.
//!
//! Header: `image_id,gt_mask,pred_mask,prob_map,split,baseline_pain,followup_pain`.
//! `pred_mask`, `prob_map` and the two pain columns may be empty; the pain
//! columns must be both present or both empty. Relative paths are resolved
//! against the manifest's directory.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::pain::PainRecord;

pub const MANIFEST_HEADER: [&str; 7] = [
    "image_id",
    "gt_mask",
    "pred_mask",
    "prob_map",
    "split",
    "baseline_pain",
    "followup_pain",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn from_name(s: &str) -> Option<Split> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub image_id: String,
    pub gt_mask: PathBuf,
    pub pred_mask: Option<PathBuf>,
    pub prob_map: Option<PathBuf>,
    pub split: Split,
    pub pain: Option<PainRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    parse_manifest(file, base)
}

/// Parses manifest CSV from any reader, resolving relative paths against `base`.
pub fn parse_manifest<R: Read>(reader: R, base: &Path) -> Result<DatasetManifest> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != MANIFEST_HEADER {
        return Err(Error::MalformedRow {
            line: 1,
            reason: format!(
                "header must be `{}`, found `{}`",
                MANIFEST_HEADER.join(","),
                header.join(",")
            ),
        });
    }

    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::MalformedRow {
                line,
                reason: e.to_string(),
            }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let malformed = |reason: String| Error::MalformedRow { line, reason };
        let field = |i: usize| record.get(i).unwrap_or("");

        let image_id = field(0).to_owned();
        if image_id.is_empty() {
            return Err(malformed("empty image_id".into()));
        }
        let gt = field(1);
        if gt.is_empty() {
            return Err(malformed("empty gt_mask path".into()));
        }
        let optional_path = |s: &str| (!s.is_empty()).then(|| base.join(s));

        let split_token = field(4);
        let split = Split::from_name(split_token).ok_or_else(|| Error::UnknownSplit {
            line,
            token: split_token.to_owned(),
        })?;

        let score = |i: usize| -> Result<Option<i64>> {
            let s = field(i);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<i64>()
                .map(Some)
                .map_err(|_| malformed(format!("{} is not an integer: {s:?}", MANIFEST_HEADER[i])))
        };
        let pain = match (score(5)?, score(6)?) {
            (Some(b), Some(f)) => Some(PainRecord::new(image_id.clone(), b, f)),
            (None, None) => None,
            _ => {
                return Err(malformed(
                    "baseline_pain and followup_pain must both be set or both empty".into(),
                ))
            }
        };

        if !seen.insert(image_id.clone()) {
            return Err(Error::DuplicateId { line, id: image_id });
        }
        entries.push(ManifestEntry {
            gt_mask: base.join(gt),
            pred_mask: optional_path(field(2)),
            prob_map: optional_path(field(3)),
            image_id,
            split,
            pain,
        });
    }
    Ok(DatasetManifest { entries })
}

/// Serializes a manifest; paths are written relative to `base` when possible.
pub fn write_manifest(manifest: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(MANIFEST_HEADER)?;
    let rel = |p: &Path| -> String {
        p.strip_prefix(base)
            .unwrap_or(p)
            .to_string_lossy()
            .into_owned()
    };
    for e in &manifest.entries {
        let (b, f) = match &e.pain {
            Some(p) => (p.baseline_pain.to_string(), p.followup_pain.to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([
            e.image_id.clone(),
            rel(&e.gt_mask),
            e.pred_mask.as_deref().map(rel).unwrap_or_default(),
            e.prob_map.as_deref().map(rel).unwrap_or_default(),
            e.split.name().to_owned(),
            b,
            f,
        ])?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pain::PainCategory;

    const HEADER: &str = "image_id,gt_mask,pred_mask,prob_map,split,baseline_pain,followup_pain\n";

    fn parse(body: &str) -> Result<DatasetManifest> {
        parse_manifest(format!("{HEADER}{body}").as_bytes(), Path::new("/data"))
    }

    #[test]
    fn three_splits() {
        let m = parse(
            "a,gt/a.png,pred/a.png,,train,3,5\n\
             b,gt/b.png,,,val,,\n\
             c,gt/c.png,,prob/c.bin,test,5,3\n",
        )
        .unwrap();
        let splits: Vec<Split> = m.entries.iter().map(|e| e.split).collect();
        assert_eq!(splits, [Split::Train, Split::Val, Split::Test]);
        assert_eq!(m.entries[0].gt_mask, Path::new("/data/gt/a.png"));
        assert_eq!(m.entries[0].pred_mask.as_deref(), Some(Path::new("/data/pred/a.png")));
        assert!(m.entries[1].pain.is_none());
        assert_eq!(m.entries[2].prob_map.as_deref(), Some(Path::new("/data/prob/c.bin")));
        assert_eq!(m.entries[2].pain.as_ref().unwrap().category(), PainCategory::Improved);
        for s in Split::ALL {
            assert_eq!(m.split(s).count(), 1);
        }
    }

    #[test]
    fn duplicate_id_is_reported() {
        let err = parse("img7,a.png,,,train,,\nimg7,b.png,,,test,,\n").unwrap_err();
        match err {
            Error::DuplicateId { id, line } => {
                assert_eq!(id, "img7");
                assert_eq!(line, 3);
            }
            other => panic!("{other:?}"),
        }
        assert!(err_msg("img7,a.png,,,train,,\nimg7,b.png,,,test,,\n").contains("img7"));
    }

    fn err_msg(body: &str) -> String {
        parse(body).unwrap_err().to_string()
    }

    #[test]
    fn unknown_split_cites_line() {
        match parse("a,a.png,,,train,,\nb,b.png,,,holdout,,\n").unwrap_err() {
            Error::UnknownSplit { line, token } => {
                assert_eq!(line, 3);
                assert_eq!(token, "holdout");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_rows() {
        assert!(matches!(
            parse("a,a.png,,,train,x,1\n"),
            Err(Error::MalformedRow { line: 2, .. })
        ));
        assert!(matches!(
            parse("a,a.png,,,train,1,\n"),
            Err(Error::MalformedRow { line: 2, .. })
        ));
        assert!(matches!(
            parse("a,,,,train,,\n"),
            Err(Error::MalformedRow { line: 2, .. })
        ));
        assert!(matches!(
            parse("a,a.png,,train\n"),
            Err(Error::MalformedRow { .. })
        ));
        assert!(matches!(
            parse_manifest("id,gt\n".as_bytes(), Path::new("")),
            Err(Error::MalformedRow { line: 1, .. })
        ));
    }

    #[test]
    fn write_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        let m = DatasetManifest {
            entries: vec![ManifestEntry {
                image_id: "x".into(),
                gt_mask: dir.path().join("gt/x.png"),
                pred_mask: None,
                prob_map: Some(dir.path().join("p/x.bin")),
                split: Split::Val,
                pain: Some(PainRecord::new("x", 1, 4)),
            }],
        };
        write_manifest(&m, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("x,gt/x.png,,p/x.bin,val,1,4"));
        assert_eq!(load_manifest(&path).unwrap(), m);
    }
}
