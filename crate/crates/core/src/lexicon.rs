//! Guideline lexicon: the 26 CPIC guideline topics with their gene symbols and
//! drug names. Used for dataset validation and drug/gene entity lookup.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub const GUIDELINE_COUNT: usize = 26;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconEntry {
    pub guideline_key: String,
    pub genes: Vec<String>,
    pub drugs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GuidelineLexicon {
    entries: Vec<LexiconEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexiconError {
    #[error("lexicon has {0} entries, expected {GUIDELINE_COUNT}")]
    WrongCount(usize),
    #[error("duplicate guideline key {0:?}")]
    DuplicateKey(String),
    #[error("gene symbol {0:?} is not uppercase")]
    GeneCase(String),
    #[error("drug name {0:?} is not lowercase")]
    DrugCase(String),
}

// (guideline_key, genes, drugs); one row per guideline topic.
const CPIC26: [(&str, &[&str], &[&str]); GUIDELINE_COUNT] = [
    ("cyp2b6-efavirenz", &["CYP2B6"], &["efavirenz"]),
    ("cyp2c19-clopidogrel", &["CYP2C19"], &["clopidogrel"]),
    ("cyp2c19-ppis", &["CYP2C19"], &["proton pump inhibitors"]),
    ("cyp2c19-voriconazole", &["CYP2C19"], &["voriconazole"]),
    ("cyp2c9-nsaids", &["CYP2C9"], &["nonsteroidal anti-inflammatory drugs", "nsaids"]),
    ("cyp2c9-hlab-phenytoin", &["CYP2C9", "HLA-B"], &["phenytoin"]),
    ("cyp2c9-vkorc1-cyp4f2-warfarin", &["CYP2C9", "CYP4F2", "VKORC1"], &["warfarin"]),
    ("cyp2d6-atomoxetine", &["CYP2D6"], &["atomoxetine"]),
    ("cyp2d6-ondansetron-tropisetron", &["CYP2D6"], &["ondansetron", "tropisetron"]),
    ("cyp2d6-tamoxifen", &["CYP2D6"], &["tamoxifen"]),
    ("cyp2d6-cyp2c19-tcas", &["CYP2C19", "CYP2D6"], &["tricyclic antidepressants"]),
    (
        "ssri-cyp2d6-cyp2c19-cyp2b6-slc6a4-htr2a",
        &["CYP2B6", "CYP2C19", "CYP2D6", "HTR2A", "SLC6A4"],
        &["serotonin reuptake inhibitor antidepressants"],
    ),
    ("opioids-cyp2d6-oprm1-comt", &["COMT", "CYP2D6", "OPRM1"], &["opioids"]),
    ("cyp3a5-tacrolimus", &["CYP3A5"], &["tacrolimus"]),
    ("dpyd-fluoropyrimidines", &["DPYD"], &["fluoropyrimidines"]),
    ("g6pd-deficiency", &["G6PD"], &[]),
    ("hla-carbamazepine-oxcarbazepine", &["HLA-A", "HLA-B"], &["carbamazepine", "oxcarbazepine"]),
    ("hlab-abacavir", &["HLA-B"], &["abacavir"]),
    ("hlab-allopurinol", &["HLA-B"], &["allopurinol"]),
    ("ifnl3-peginterferon", &["IFNL3"], &["peginterferon-alpha"]),
    ("mtrnr1-aminoglycosides", &["MT-RNR1"], &["aminoglycosides"]),
    (
        "ryr1-cacna1s-anesthetics",
        &["CACNA1S", "RYR1"],
        &["succinylcholine", "volatile anesthetic agents"],
    ),
    ("statins-slco1b1-abcg2-cyp2c9", &["ABCG2", "CYP2C9", "SLCO1B1"], &["statins"]),
    ("tpmt-nudt15-thiopurines", &["NUDT15", "TPMT"], &["thiopurines"]),
    ("ugt1a1-atazanavir", &["UGT1A1"], &["atazanavir"]),
    ("cftr-ivacaftor", &["CFTR"], &["ivacaftor"]),
];

impl GuidelineLexicon {
    pub fn new(entries: Vec<LexiconEntry>) -> Result<Self, LexiconError> {
        let lexicon = GuidelineLexicon { entries };
        lexicon.validate()?;
        Ok(lexicon)
    }

    /// The built-in 26-guideline table (same content as `lexicon/cpic26.json`).
    pub fn cpic26() -> Self {
        let to_vec = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        GuidelineLexicon {
            entries: CPIC26
                .iter()
                .map(|(key, genes, drugs)| LexiconEntry {
                    guideline_key: key.to_string(),
                    genes: to_vec(genes),
                    drugs: to_vec(drugs),
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<(), LexiconError> {
        if self.entries.len() != GUIDELINE_COUNT {
            return Err(LexiconError::WrongCount(self.entries.len()));
        }
        let mut keys = BTreeSet::new();
        for entry in &self.entries {
            if !keys.insert(entry.guideline_key.as_str()) {
                return Err(LexiconError::DuplicateKey(entry.guideline_key.clone()));
            }
            if let Some(g) = entry.genes.iter().find(|g| g.to_uppercase() != **g) {
                return Err(LexiconError::GeneCase(g.clone()));
            }
            if let Some(d) = entry.drugs.iter().find(|d| d.to_lowercase() != **d) {
                return Err(LexiconError::DrugCase(d.clone()));
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.guideline_key.as_str())
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.entry(key).is_some()
    }

    pub fn entry(&self, key: &str) -> Option<&LexiconEntry> {
        self.entries.iter().find(|e| e.guideline_key == key)
    }

    pub fn genes(&self) -> BTreeSet<&str> {
        self.entries
            .iter()
            .flat_map(|e| e.genes.iter().map(String::as_str))
            .collect()
    }

    pub fn drugs(&self) -> BTreeSet<&str> {
        self.entries
            .iter()
            .flat_map(|e| e.drugs.iter().map(String::as_str))
            .collect()
    }
}
