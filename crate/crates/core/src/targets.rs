//! Drug and gene lookup for the targeted supplementary retrieval layer.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::lexicon::GuidelineLexicon;
use crate::text::alnum_tokens;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetEntities {
    pub drugs: Vec<String>,
    pub genes: Vec<String>,
}

impl TargetEntities {
    pub fn is_empty(&self) -> bool {
        self.drugs.is_empty() && self.genes.is_empty()
    }

    /// Drugs first, then genes, each sorted.
    pub fn all(&self) -> impl Iterator<Item = &str> {
        self.drugs.iter().chain(&self.genes).map(String::as_str)
    }
}

fn contains_phrase(haystack: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty() && haystack.windows(phrase.len()).any(|w| w == phrase)
}

/// Case-insensitive whole-word match of lexicon drug names and gene symbols.
/// A matched drug also pulls in the genes of its guideline; a matched gene
/// does not pull in drugs.
pub fn extract_targets(query_text: &str, lexicon: &GuidelineLexicon) -> TargetEntities {
    let tokens = alnum_tokens(query_text);
    let mut drugs = BTreeSet::new();
    let mut genes = BTreeSet::new();
    for entry in lexicon.entries() {
        for drug in &entry.drugs {
            if contains_phrase(&tokens, &alnum_tokens(drug)) {
                drugs.insert(drug.clone());
                genes.extend(entry.genes.iter().cloned());
            }
        }
        for gene in &entry.genes {
            if contains_phrase(&tokens, &alnum_tokens(gene)) {
                genes.insert(gene.to_string());
            }
        }
    }
    TargetEntities {
        drugs: drugs.into_iter().collect(),
        genes: genes.into_iter().collect(),
    }
}
