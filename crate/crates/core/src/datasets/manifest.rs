//! Corpus manifests.
//!
//! One utterance per line:
//! `<speaker> <gender> <utt> <acoustic> <alignment> [<articulatory>]`,
//! with paths relative to the manifest. Directive lines:
//! `!exclude <utt>` drops an utterance from iteration and
//! `!palate <speaker> <a> <b> <c> <x_min> <x_max>` fixes a speaker's palate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use crate::articulatory::PalateModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gender {
    M,
    F,
}

impl Gender {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "M" | "m" => Some(Gender::M),
            "F" | "f" => Some(Gender::F),
            _ => None,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Gender::M => Gender::F,
            Gender::F => Gender::M,
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::M => "M",
            Gender::F => "F",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceEntry {
    pub id: String,
    /// WAV or feature file, as written in the manifest.
    pub acoustic: PathBuf,
    pub alignment: PathBuf,
    pub articulatory: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerEntry {
    pub id: String,
    pub gender: Gender,
    /// Sorted by utterance id.
    pub utterances: Vec<UtteranceEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    /// Directory that relative paths are resolved against.
    pub root: PathBuf,
    /// Sorted by speaker id.
    pub speakers: Vec<SpeakerEntry>,
    pub excluded: BTreeSet<String>,
    pub palates: BTreeMap<String, PalateModel>,
}

impl DatasetManifest {
    /// Parses manifest text without touching the referenced files.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut speakers: BTreeMap<String, SpeakerEntry> = BTreeMap::new();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let mut excluded = BTreeSet::new();
        let mut palates = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            match f[0] {
                "!exclude" => {
                    if f.len() != 2 {
                        return Err(Error::parse(path, line_no, "expected `!exclude <utt>`"));
                    }
                    excluded.insert(f[1].to_string());
                }
                "!palate" => {
                    if f.len() != 7 {
                        return Err(Error::parse(
                            path,
                            line_no,
                            "expected `!palate <speaker> <a> <b> <c> <x_min> <x_max>`",
                        ));
                    }
                    let mut v = [0.0; 5];
                    for (slot, s) in v.iter_mut().zip(&f[2..]) {
                        *slot = s
                            .parse()
                            .map_err(|_| Error::parse(path, line_no, format!("bad number {s:?}")))?;
                    }
                    let p = PalateModel::new([v[0], v[1], v[2]], v[3], v[4])
                        .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
                    palates.insert(f[1].to_string(), p);
                }
                d if d.starts_with('!') => {
                    return Err(Error::parse(path, line_no, format!("unknown directive {d}")));
                }
                _ => {
                    if !(5..=6).contains(&f.len()) {
                        return Err(Error::parse(
                            path,
                            line_no,
                            "expected `<speaker> <gender> <utt> <acoustic> <alignment> [<articulatory>]`",
                        ));
                    }
                    let gender = Gender::parse(f[1])
                        .ok_or_else(|| Error::parse(path, line_no, format!("gender {:?} is not M or F", f[1])))?;
                    if !seen.insert(f[2].to_string()) {
                        return Err(Error::parse(path, line_no, format!("duplicate utterance {}", f[2])));
                    }
                    let spk = speakers.entry(f[0].to_string()).or_insert_with(|| SpeakerEntry {
                        id: f[0].to_string(),
                        gender,
                        utterances: Vec::new(),
                    });
                    if spk.gender != gender {
                        return Err(Error::parse(
                            path,
                            line_no,
                            format!("speaker {} listed with both genders", f[0]),
                        ));
                    }
                    spk.utterances.push(UtteranceEntry {
                        id: f[2].to_string(),
                        acoustic: PathBuf::from(f[3]),
                        alignment: PathBuf::from(f[4]),
                        articulatory: f.get(5).map(PathBuf::from),
                    });
                }
            }
        }
        if speakers.is_empty() {
            return Err(Error::parse(path, 0, "manifest lists no speakers"));
        }
        let mut speakers: Vec<SpeakerEntry> = speakers.into_values().collect();
        for s in &mut speakers {
            s.utterances.sort_by(|a, b| a.id.cmp(&b.id));
        }
        Ok(DatasetManifest {
            root,
            speakers,
            excluded,
            palates,
        })
    }

    /// Parses and checks that every referenced, non-excluded file exists.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m = Self::parse(&text, path)?;
        for (spk, u) in m.utterances() {
            let mut files = vec![&u.acoustic, &u.alignment];
            files.extend(u.articulatory.as_ref());
            for f in files {
                let full = m.resolve(f);
                if !full.is_file() {
                    return Err(Error::data(format!(
                        "{}: utterance {} of speaker {}: missing file {}",
                        path.display(),
                        u.id,
                        spk.id,
                        full.display()
                    )));
                }
            }
        }
        Ok(m)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for u in &self.excluded {
            let _ = writeln!(s, "!exclude {u}");
        }
        for (spk, p) in &self.palates {
            let [a, b, c] = p.coeffs;
            let _ = writeln!(s, "!palate {spk} {a} {b} {c} {} {}", p.x_min, p.x_max);
        }
        for spk in &self.speakers {
            for u in &spk.utterances {
                let _ = write!(
                    s,
                    "{} {} {} {} {}",
                    spk.id,
                    spk.gender,
                    u.id,
                    u.acoustic.display(),
                    u.alignment.display()
                );
                if let Some(a) = &u.articulatory {
                    let _ = write!(s, " {}", a.display());
                }
                s.push('\n');
            }
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn speaker(&self, id: &str) -> Option<&SpeakerEntry> {
        self.speakers.iter().find(|s| s.id == id)
    }

    pub fn speaker_ids(&self) -> Vec<String> {
        self.speakers.iter().map(|s| s.id.clone()).collect()
    }

    /// Non-excluded utterances by speaker id, then utterance id.
    pub fn utterances(&self) -> impl Iterator<Item = (&SpeakerEntry, &UtteranceEntry)> {
        self.speakers.iter().flat_map(move |s| {
            s.utterances
                .iter()
                .filter(move |u| !self.excluded.contains(&u.id))
                .map(move |u| (s, u))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "\
# corpus
!exclude b2
!palate B -0.01 0.2 10 -40 10
B F b2 f/b2.feat a/b2.ali
B F b1 f/b1.feat a/b1.ali t/b1.art
A M a1 f/a1.feat a/a1.ali
";

    #[test]
    fn parse_order_and_exclusion() {
        let m = DatasetManifest::parse(TEXT, Path::new("/data/m.txt")).unwrap();
        assert_eq!(m.speaker_ids(), vec!["A", "B"]);
        let ids: Vec<&str> = m.utterances().map(|(_, u)| u.id.as_str()).collect();
        assert_eq!(ids, vec!["a1", "b1"]);
        assert_eq!(m.resolve(Path::new("f/a1.feat")), PathBuf::from("/data/f/a1.feat"));
        assert_eq!(m.palates["B"].coeffs, [-0.01, 0.2, 10.0]);
        let back = DatasetManifest::parse(&m.to_text(), Path::new("/data/m.txt")).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn errors() {
        let p = Path::new("m.txt");
        assert!(DatasetManifest::parse("# nothing\n", p).is_err());
        let e = DatasetManifest::parse("A M u x y\nA M u x y\n", p).unwrap_err().to_string();
        assert!(e.contains("m.txt:2") && e.contains("duplicate"), "{e}");
        assert!(DatasetManifest::parse("A X u x y\n", p).is_err());
        assert!(DatasetManifest::parse("A M u x y\nA F v x y\n", p).is_err());
        assert!(DatasetManifest::parse("!bogus\n", p).is_err());
    }

    #[test]
    fn load_checks_files() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("m.txt");
        fs::write(&m, "A M u1 u1.feat u1.ali\n").unwrap();
        let e = DatasetManifest::load(&m).unwrap_err().to_string();
        assert!(e.contains("u1.feat"), "{e}");
        fs::write(dir.path().join("u1.feat"), b"").unwrap();
        fs::write(dir.path().join("u1.ali"), b"").unwrap();
        assert!(DatasetManifest::load(&m).is_ok());
    }
}
