//! Phone-indexed prior vectors: expert lookup tables and statistically
//! quantized tables built from z-scored tract variables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Prior vector length.
pub const PRIOR_DIM: usize = 10;

pub const PRIOR_NAMES: [&str; PRIOR_DIM] = [
    "LP", "LA", "TTCL", "TTCD", "TBCL", "TBCD", "VEL", "GLO", "consonant", "silence",
];

/// Number of leading entries that are tract variables.
pub const VTV_PRIOR_DIM: usize = 6;

pub type PriorVector = [i32; PRIOR_DIM];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    /// Expert-assigned lookup table.
    Lf,
    /// Statistics over all speakers.
    Sf,
    /// Statistics over one speaker.
    Sf1,
    /// Statistics over two speakers.
    Sf2,
}

impl Provenance {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lf" => Ok(Provenance::Lf),
            "sf" => Ok(Provenance::Sf),
            "sf1" => Ok(Provenance::Sf1),
            "sf2" => Ok(Provenance::Sf2),
            other => Err(Error::config(format!("unknown prior provenance {other}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Lf => "lf",
            Provenance::Sf => "sf",
            Provenance::Sf1 => "sf1",
            Provenance::Sf2 => "sf2",
        }
    }

    /// Provenance of a statistical table computed from `speakers` speakers.
    pub fn statistical(speakers: usize) -> Self {
        match speakers {
            1 => Provenance::Sf1,
            2 => Provenance::Sf2,
            _ => Provenance::Sf,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorTable {
    pub entries: BTreeMap<String, PriorVector>,
    pub provenance: Provenance,
}

const PROVENANCE_TAG: &str = "provenance:";

impl PriorTable {
    pub fn new(entries: BTreeMap<String, PriorVector>, provenance: Provenance) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::data("empty prior table"));
        }
        for (phone, v) in &entries {
            if v[8] > 1 || v[8] < 0 || v[9] > 1 || v[9] < 0 {
                return Err(Error::data(format!(
                    "phone {phone}: consonant and silence flags must be 0 or 1"
                )));
            }
        }
        if !entries.values().any(|v| v[9] == 1) {
            return Err(Error::data("prior table has no silence phone"));
        }
        Ok(PriorTable {
            entries,
            provenance,
        })
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut provenance = Provenance::Lf;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let (body, comment) = raw.split_once('#').unwrap_or((raw, ""));
            if let Some(tag) = comment.trim().strip_prefix(PROVENANCE_TAG) {
                provenance = Provenance::parse(tag.trim())
                    .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
            }
            let fields: Vec<&str> = body.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if fields.len() != PRIOR_DIM + 1 {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("expected a phone and {PRIOR_DIM} integers, got {} fields", fields.len()),
                ));
            }
            let mut v = [0i32; PRIOR_DIM];
            for (slot, f) in v.iter_mut().zip(&fields[1..]) {
                *slot = f
                    .parse()
                    .map_err(|_| Error::parse(path, line_no, format!("{f:?} is not an integer")))?;
            }
            for (k, name) in [(8, "consonant"), (9, "silence")] {
                if !(0..=1).contains(&v[k]) {
                    return Err(Error::parse(path, line_no, format!("{name} flag must be 0 or 1")));
                }
            }
            if entries.insert(fields[0].to_string(), v).is_some() {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("duplicate phone {}", fields[0]),
                ));
            }
        }
        PriorTable::new(entries, provenance).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("# {PROVENANCE_TAG} {}\n# phone", self.provenance.as_str());
        for n in PRIOR_NAMES {
            s.push(' ');
            s.push_str(n);
        }
        s.push('\n');
        for (phone, v) in &self.entries {
            s.push_str(phone);
            for x in v {
                let _ = write!(s, " {x}");
            }
            s.push('\n');
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn get(&self, phone: &str) -> Result<&PriorVector> {
        self.entries
            .get(phone)
            .ok_or_else(|| Error::data(format!("phone {phone} is missing from the prior table")))
    }

    pub fn phones(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct values taken by each tract-variable entry across phones.
    pub fn quantization_levels(&self) -> [usize; VTV_PRIOR_DIM] {
        let mut out = [0; VTV_PRIOR_DIM];
        for (d, slot) in out.iter_mut().enumerate() {
            let mut vals: Vec<i32> = self.entries.values().map(|v| v[d]).collect();
            vals.sort_unstable();
            vals.dedup();
            *slot = vals.len();
        }
        out
    }
}

/// Builds a statistical table: per phone, the mean of each z-scored tract
/// variable over its frames, rounded half away from zero. The remaining
/// four entries are copied from `seed`.
///
/// `data` pairs per-frame labels with `N × 6` z-scored tract variables.
/// Every phone of `seed` must occur in the data.
pub fn compute_statistical_priors(
    data: &[(&[String], &Tensor)],
    seed: &PriorTable,
    provenance: Provenance,
) -> Result<PriorTable> {
    let mut sums: BTreeMap<&str, ([f64; VTV_PRIOR_DIM], usize)> =
        seed.phones().map(|p| (p, ([0.0; VTV_PRIOR_DIM], 0))).collect();
    for (labels, vtv) in data {
        if vtv.cols() != VTV_PRIOR_DIM || vtv.rows() != labels.len() {
            return Err(Error::shape(format!(
                "{} labels against a {:?} tract-variable matrix",
                labels.len(),
                vtv.shape()
            )));
        }
        for (r, phone) in labels.iter().enumerate() {
            let (sum, count) = sums.get_mut(phone.as_str()).ok_or_else(|| {
                Error::data(format!("phone {phone} is missing from the seed table"))
            })?;
            for (s, v) in sum.iter_mut().zip(vtv.row(r)) {
                *s += v;
            }
            *count += 1;
        }
    }
    let empty: Vec<&str> = sums.iter().filter(|(_, (_, n))| *n == 0).map(|(p, _)| *p).collect();
    if !empty.is_empty() {
        return Err(Error::data(format!("no frames for phones: {}", empty.join(", "))));
    }
    let mut entries = BTreeMap::new();
    for (phone, (sum, count)) in sums {
        let mut v = *seed.get(phone)?;
        for d in 0..VTV_PRIOR_DIM {
            let mean = sum[d] / count as f64;
            if !mean.is_finite() {
                return Err(Error::NonFinite(format!("mean tract variable of {phone}")));
            }
            v[d] = mean.round() as i32;
        }
        entries.insert(phone.to_string(), v);
    }
    PriorTable::new(entries, provenance)
}

/// `N × 10` priors for per-frame phone labels.
pub fn priors_for_labels(labels: &[String], table: &PriorTable) -> Result<Tensor> {
    let mut data = Vec::with_capacity(labels.len() * PRIOR_DIM);
    for phone in labels {
        data.extend(table.get(phone)?.iter().map(|&v| v as f64));
    }
    Tensor::matrix(labels.len(), PRIOR_DIM, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE: &str = "\
# provenance: lf
sil 0 0 0 0 0 0 0 0 0 1
aa  1 3 -2 2 0 -1 1 1 0 0
t   0 -1 2 -3 1 0 0 0 1 0
";

    fn table() -> PriorTable {
        PriorTable::parse(TABLE, Path::new("lf.txt")).unwrap()
    }

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parse_and_round_trip() {
        let t = table();
        assert_eq!(t.provenance, Provenance::Lf);
        assert_eq!(t.get("sil").unwrap()[9], 1);
        assert_eq!(t.get("aa").unwrap()[2], -2);
        assert_eq!(PriorTable::parse(&t.to_text(), Path::new("x")).unwrap(), t);
    }

    #[test]
    fn parse_errors_report_lines() {
        let p = Path::new("bad.txt");
        let cases = [
            ("sil 0 0 0 0 0 0 0 0 0 1\nsil 0 0 0 0 0 0 0 0 0 1\n", ":2:"),
            ("sil 0 0 0 0 0 0 0 0 0 1\naa 1 2 3\n", ":2:"),
            ("# c\nsil 0 0 0.5 0 0 0 0 0 0 1\n", ":2:"),
            ("sil 0 0 0 0 0 0 0 0 2 1\n", ":1:"),
        ];
        for (text, loc) in cases {
            let err = PriorTable::parse(text, p).unwrap_err().to_string();
            assert!(err.contains(loc), "{err}");
        }
        assert!(PriorTable::parse("aa 0 0 0 0 0 0 0 0 0 0\n", p).is_err());
    }

    #[test]
    fn missing_phone_is_named() {
        let err = priors_for_labels(&labels(&["sil", "zh"]), &table()).unwrap_err();
        assert!(err.to_string().contains("zh"));
    }

    #[test]
    fn blocks_follow_labels() {
        let t = table();
        let p = priors_for_labels(&labels(&["aa", "aa", "t"]), &t).unwrap();
        let want: Vec<f64> = [t.get("aa").unwrap(), t.get("aa").unwrap(), t.get("t").unwrap()]
            .iter()
            .flat_map(|v| v.iter().map(|&x| x as f64))
            .collect();
        assert_eq!(p.data(), &want[..]);
    }

    #[test]
    fn statistical_rounding() {
        let l = labels(&["sil", "aa", "aa", "t", "t"]);
        // aa: LA mean 1.4, TTCL mean -0.5 ; t: LP mean 2.5, LA mean -2.5
        #[rustfmt::skip]
        let v = Tensor::matrix(5, 6, vec![
            0.1, 0.0, 0.0, 0.0, 0.0, 0.0,
            0.0, 1.0, -0.4, 0.0, 0.0, 0.0,
            0.0, 1.8, -0.6, 0.0, 0.0, 0.0,
            2.0, -2.0, 0.0, 0.0, 0.0, 0.0,
            3.0, -3.0, 0.0, 0.0, 0.0, 0.0,
        ]).unwrap();
        let t = compute_statistical_priors(&[(&l, &v)], &table(), Provenance::Sf).unwrap();
        assert_eq!(t.get("aa").unwrap(), &[0, 1, -1, 0, 0, 0, 1, 1, 0, 0]);
        assert_eq!(t.get("t").unwrap(), &[3, -3, 0, 0, 0, 0, 0, 0, 1, 0]);
        assert_eq!(t.provenance, Provenance::Sf);
        let again = compute_statistical_priors(&[(&l, &v)], &table(), Provenance::Sf).unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn unseen_phone_is_listed() {
        let l = labels(&["sil", "aa"]);
        let v = Tensor::zeros(&[2, 6]);
        let err = compute_statistical_priors(&[(&l, &v)], &table(), Provenance::Sf).unwrap_err();
        assert!(err.to_string().contains('t'), "{err}");
    }
}
