//! JSON instance, measure and potential files. Unknown keys are rejected.
//!
//! Instance: `{"alphabet": [..], "transitions": [[a, b], ..], "code": {a: y, ..}}`,
//! optionally with `"forbidden_words": [[..], ..]` and `"code_window": [l, r]`;
//! with a window, code keys are space-separated `X`-words of length `l + r + 1`.
//! A missing `transitions` list allows every pair.
//!
//! Measure: `{"type": "markov", "transition": [[..]], "stationary": [..]}`
//! (stationary optional when unique) or `{"type": "pushforward", "source":
//! <markov>, "instance": path}`, the path relative to the measure file.
//!
//! Potential: `{"range": k, "values": {"a b ..": v, ..}}`; blocks not listed are 0.

use crate::error::{Error, Result};
use crate::measures::{MarkovMeasure, Potential};
use crate::shift::{Alphabet, FactorTriple, GeneralTriple, RecodedTriple, Sft, Word};
use serde::Deserialize;
use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub alphabet: Vec<String>,
    #[serde(default)]
    pub transitions: Option<Vec<(String, String)>>,
    pub code: BTreeMap<String, String>,
    #[serde(default)]
    pub forbidden_words: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub code_window: Option<(usize, usize)>,
}

/// A loaded instance: the 1-step 1-block triple, plus the conjugacy
/// when the file needed recoding.
#[derive(Debug, Clone)]
pub struct Instance {
    pub triple: FactorTriple,
    pub recoded: Option<RecodedTriple>,
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn needs_recoding(&self) -> bool {
        self.forbidden_words.as_ref().is_some_and(|f| f.iter().any(|w| w.len() != 2))
            || self.code_window.is_some_and(|(l, r)| l + r > 0)
    }

    pub fn build(&self) -> Result<Instance> {
        let alphabet = Alphabet::new(&self.alphabet)?;
        let mut allowed: Vec<(String, String)> = match &self.transitions {
            Some(t) => t.clone(),
            None => {
                let a = &self.alphabet;
                a.iter().flat_map(|s| a.iter().map(move |t| (s.clone(), t.clone()))).collect()
            }
        };
        for (s, t) in &allowed {
            alphabet.lookup(s)?;
            alphabet.lookup(t)?;
        }
        if !self.needs_recoding() {
            if let Some(f) = &self.forbidden_words {
                allowed.retain(|(s, t)| !f.iter().any(|w| w[0] == *s && w[1] == *t));
            }
            for k in self.code.keys() {
                alphabet.lookup(k)?;
            }
            let x = Sft::build(&self.alphabet, &allowed)?;
            let mut code = Vec::new();
            for name in x.alphabet().names() {
                let y = self.code.get(name).ok_or_else(|| Error::InvalidInput(format!("code undefined on `{name}`")))?;
                code.push((name.clone(), y.clone()));
            }
            return Ok(Instance { triple: FactorTriple::new(x, &code)?, recoded: None });
        }
        let mut forbidden: Vec<Word> = Vec::new();
        for s in &self.alphabet {
            for t in &self.alphabet {
                if !allowed.iter().any(|(a, b)| a == s && b == t) {
                    forbidden.push(vec![alphabet.lookup(s)?, alphabet.lookup(t)?]);
                }
            }
        }
        for w in self.forbidden_words.iter().flatten() {
            forbidden.push(alphabet.parse_word(w)?);
        }
        let (left, right) = self.code_window.unwrap_or((0, 0));
        let mut code = HashMap::new();
        for (k, v) in &self.code {
            let word = alphabet.parse_word(&k.split_whitespace().collect::<Vec<_>>())?;
            if word.len() != left + right + 1 {
                return Err(Error::InvalidInput(format!("code key `{k}` does not match the window")));
            }
            code.insert(word, v.clone());
        }
        let general = GeneralTriple { alphabet, forbidden, left, right, code };
        let recoded = general.recode()?;
        Ok(Instance { triple: recoded.triple.clone(), recoded: Some(recoded) })
    }
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    InstanceFile::parse(&std::fs::read_to_string(path)?)?.build()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeasureFile {
    Markov {
        transition: Vec<Vec<f64>>,
        #[serde(default)]
        stationary: Option<Vec<f64>>,
    },
    Pushforward {
        source: Box<MeasureFile>,
        instance: PathBuf,
    },
}

/// A Markov measure on the instance's `X`, from either kind of measure file.
#[derive(Debug, Clone)]
pub struct LoadedMeasure {
    pub source: MarkovMeasure,
    /// Instance named by a pushforward file.
    pub instance: Option<Instance>,
}

impl MeasureFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// `base` resolves relative instance paths; `sft` is used for Markov data
    /// unless the file names its own instance.
    pub fn build(&self, sft: &Sft, base: &Path) -> Result<LoadedMeasure> {
        match self {
            MeasureFile::Markov { transition, stationary } => Ok(LoadedMeasure {
                source: MarkovMeasure::new(sft.clone(), transition.clone(), stationary.clone())?,
                instance: None,
            }),
            MeasureFile::Pushforward { source, instance } => {
                let path = if instance.is_absolute() { instance.clone() } else { base.join(instance) };
                let inst = load_instance(&path)?;
                let inner = source.build(inst.triple.x(), base)?;
                Ok(LoadedMeasure { source: inner.source, instance: Some(inst) })
            }
        }
    }
}

pub fn load_measure(path: &Path, sft: &Sft) -> Result<LoadedMeasure> {
    let text = std::fs::read_to_string(path)?;
    MeasureFile::parse(&text)?.build(sft, path.parent().unwrap_or(Path::new(".")))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialFile {
    pub range: usize,
    pub values: BTreeMap<String, f64>,
}

impl PotentialFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self, sft: &Sft) -> Result<Potential> {
        let mut entries: BTreeMap<Word, f64> = BTreeMap::new();
        for b in sft.enumerate_blocks(self.range.max(1), 1 << 20)? {
            entries.insert(b, 0.0);
        }
        for (k, &v) in &self.values {
            let word = sft.alphabet().parse_word(&k.split_whitespace().collect::<Vec<_>>())?;
            if word.len() != self.range {
                return Err(Error::InvalidInput(format!("potential key `{k}` is not a {}-block", self.range)));
            }
            if !entries.contains_key(&word) {
                return Err(Error::IllegalWord(k.clone()));
            }
            entries.insert(word, v);
        }
        Potential::from_table(sft, self.range, entries)
    }
}

pub fn load_potential(path: &Path, sft: &Sft) -> Result<Potential> {
    PotentialFile::parse(&std::fs::read_to_string(path)?)?.build(sft)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_instance() {
        let f = InstanceFile::parse(
            r#"{"alphabet": ["A", "B"], "transitions": [["A","A"],["A","B"],["B","A"],["B","B"]], "code": {"A": "b", "B": "b"}}"#,
        )
        .unwrap();
        let inst = f.build().unwrap();
        assert_eq!(inst.triple.x_size(), 2);
        assert_eq!(inst.triple.y_size(), 1);
        assert!(inst.recoded.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let r = InstanceFile::parse(r#"{"alphabet": ["A"], "code": {"A": "a"}, "colour": 1}"#);
        assert!(r.is_err());
        let r = MeasureFile::parse(r#"{"type": "markov", "transition": [[1.0]], "weights": []}"#);
        assert!(r.is_err());
    }

    #[test]
    fn empty_shift() {
        let f = InstanceFile::parse(r#"{"alphabet": ["0","1"], "transitions": [["0","1"]], "code": {"0":"a","1":"b"}}"#)
            .unwrap();
        assert!(matches!(f.build(), Err(Error::EmptyShift)));
    }

    #[test]
    fn windowed_code_is_recoded() {
        let f = InstanceFile::parse(
            r#"{"alphabet": ["0","1"], "forbidden_words": [["1","1"]], "code_window": [0, 1],
                "code": {"0 0": "a", "0 1": "b", "1 0": "b"}}"#,
        )
        .unwrap();
        let inst = f.build().unwrap();
        assert_eq!(inst.triple.x_size(), 3);
        assert!(inst.recoded.is_some());
    }

    #[test]
    fn measures_and_potentials() {
        let x = Sft::full(&["A", "B"]).unwrap();
        let m = MeasureFile::parse(r#"{"type": "markov", "transition": [[0.3, 0.7], [0.3, 0.7]]}"#).unwrap();
        let mu = m.build(&x, Path::new(".")).unwrap().source;
        assert!((mu.stationary()[0] - 0.3).abs() < 1e-12);
        let v = PotentialFile::parse(r#"{"range": 1, "values": {"A": 0.2}}"#).unwrap().build(&x).unwrap();
        assert_eq!(v.value(&[0]), 0.2);
        assert_eq!(v.value(&[1]), 0.0);
        assert!(PotentialFile::parse(r#"{"range": 2, "values": {"A": 0.2}}"#).unwrap().build(&x).is_err());
    }
}
