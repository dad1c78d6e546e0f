//! Speaker partitions into train, validation and test sets.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::manifest::{DatasetManifest, Gender};
use crate::error::{Error, Result};
use crate::kv::{self, KvFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitKind {
    Matched,
    /// Train and validate on male speakers, test on all female speakers.
    MismatchedTestFemale,
    /// Train and validate on female speakers, test on all male speakers.
    MismatchedTestMale,
}

impl SplitKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "matched" => Ok(SplitKind::Matched),
            "mismatched-test-female" => Ok(SplitKind::MismatchedTestFemale),
            "mismatched-test-male" => Ok(SplitKind::MismatchedTestMale),
            other => Err(Error::config(format!("unknown split kind {other}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SplitKind::Matched => "matched",
            SplitKind::MismatchedTestFemale => "mismatched-test-female",
            SplitKind::MismatchedTestMale => "mismatched-test-male",
        }
    }

    /// Gender of the test speakers in a mismatched split.
    pub fn test_gender(self) -> Option<Gender> {
        match self {
            SplitKind::Matched => None,
            SplitKind::MismatchedTestFemale => Some(Gender::F),
            SplitKind::MismatchedTestMale => Some(Gender::M),
        }
    }
}

/// Requested speaker counts. Mismatched splits use only `validation`;
/// the remaining training-gender speakers train and the other gender tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitCounts {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub kind: SplitKind,
    pub seed: u64,
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

fn shuffled(mut ids: Vec<String>, rng: &mut ChaCha8Rng) -> Vec<String> {
    ids.sort();
    ids.shuffle(rng);
    ids
}

fn sorted(mut v: Vec<String>) -> Vec<String> {
    v.sort();
    v
}

pub fn make_split(manifest: &DatasetManifest, kind: SplitKind, counts: SplitCounts, seed: u64) -> Result<SplitPlan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plan = match kind.test_gender() {
        None => {
            let need = counts.train + counts.validation + counts.test;
            let have = manifest.speakers.len();
            if need > have || counts.train == 0 || counts.test == 0 {
                return Err(Error::config(format!(
                    "split {}/{}/{} needs {need} speakers with non-empty train and test; manifest has {have}",
                    counts.train, counts.validation, counts.test
                )));
            }
            let ids = shuffled(manifest.speaker_ids(), &mut rng);
            let (train, rest) = ids.split_at(counts.train);
            let (validation, rest) = rest.split_at(counts.validation);
            SplitPlan {
                kind,
                seed,
                train: sorted(train.to_vec()),
                validation: sorted(validation.to_vec()),
                test: sorted(rest[..counts.test].to_vec()),
            }
        }
        Some(test_gender) => {
            let of = |g: Gender| -> Vec<String> {
                manifest
                    .speakers
                    .iter()
                    .filter(|s| s.gender == g)
                    .map(|s| s.id.clone())
                    .collect()
            };
            let pool = of(test_gender.other());
            let test = of(test_gender);
            if test.is_empty() || pool.len() <= counts.validation {
                return Err(Error::config(format!(
                    "mismatched split needs test speakers and more than {} training-gender speakers \
                     (have {} and {})",
                    counts.validation,
                    test.len(),
                    pool.len()
                )));
            }
            let ids = shuffled(pool, &mut rng);
            let (validation, train) = ids.split_at(counts.validation);
            SplitPlan {
                kind,
                seed,
                train: sorted(train.to_vec()),
                validation: sorted(validation.to_vec()),
                test: sorted(test),
            }
        }
    };
    plan.validate()?;
    Ok(plan)
}

impl SplitPlan {
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for id in self.train.iter().chain(&self.validation).chain(&self.test) {
            if !seen.insert(id) {
                return Err(Error::config(format!("speaker {id} appears in two split sets")));
            }
        }
        if self.train.is_empty() || self.test.is_empty() {
            return Err(Error::config("split needs training and test speakers"));
        }
        Ok(())
    }

    /// Checks that every speaker of the plan is in `manifest`.
    pub fn check_against(&self, manifest: &DatasetManifest) -> Result<()> {
        for id in self.train.iter().chain(&self.validation).chain(&self.test) {
            if manifest.speaker(id).is_none() {
                return Err(Error::config(format!("split speaker {id} is not in the manifest")));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        format!(
            "kind = {}\nseed = {}\ntrain = {}\nvalidation = {}\ntest = {}\n",
            self.kind.as_str(),
            self.seed,
            kv::join(&self.train),
            kv::join(&self.validation),
            kv::join(&self.test)
        )
    }

    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        kv.reject_unknown(&["kind", "seed", "train", "validation", "test"])?;
        let list = |k: &str| -> Result<Vec<String>> { Ok(kv.list(k)?.unwrap_or_default()) };
        let plan = SplitPlan {
            kind: SplitKind::parse(kv.require("kind")?)?,
            seed: kv.parse_or("seed", 0)?,
            train: list("train")?,
            validation: list("validation")?,
            test: list("test")?,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_kv(&KvFile::load(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}
