//! Two-layer prompt templates with named `{placeholder}` substitution.
//!
//! Layer 1 summarizes one retrieved chunk against the query; layer 2
//! synthesizes the numbered summaries into the final answer. The shipped
//! template texts live in `templates/` at the repository root and are
//! compiled in.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::digest::FieldHasher;

pub const PLACEHOLDERS: [&str; 5] = ["source", "query", "content", "user_input", "all_summaries"];

pub const LAYER1_SYSTEM: &str = include_str!("../../../templates/layer1_system.txt");
pub const LAYER1_USER: &str = include_str!("../../../templates/layer1_user.txt");
pub const LAYER2_SYSTEM: &str = include_str!("../../../templates/layer2_system.txt");
pub const LAYER2_USER: &str = include_str!("../../../templates/layer2_user.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TemplateId {
    Layer1System,
    Layer1User,
    Layer2System,
    Layer2User,
}

impl TemplateId {
    pub const ALL: [TemplateId; 4] = [
        TemplateId::Layer1System,
        TemplateId::Layer1User,
        TemplateId::Layer2System,
        TemplateId::Layer2User,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            TemplateId::Layer1System => "layer1_system.txt",
            TemplateId::Layer1User => "layer1_user.txt",
            TemplateId::Layer2System => "layer2_system.txt",
            TemplateId::Layer2User => "layer2_user.txt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("no binding for placeholder {{{0}}}")]
    MissingBinding(String),
    #[error("unknown placeholder {{{0}}}")]
    UnknownPlaceholder(String),
    #[error("binding {0:?} does not correspond to a placeholder in the template")]
    UnexpectedBinding(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Literal(String),
    Placeholder(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    id: TemplateId,
    text: String,
    segments: Vec<Segment>,
}

fn is_ident(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// `{name}` with a non-empty identifier is a placeholder; any other brace is
/// literal text.
fn parse(text: &str) -> Vec<Segment> {
    let mut segments = Vec::new();
    let mut literal = String::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        literal.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let ident_len = after.find(|c: char| !is_ident(c)).unwrap_or(after.len());
        if ident_len > 0 && after[ident_len..].starts_with('}') {
            if !literal.is_empty() {
                segments.push(Segment::Literal(core::mem::take(&mut literal)));
            }
            segments.push(Segment::Placeholder(after[..ident_len].to_string()));
            rest = &after[ident_len + 1..];
        } else {
            literal.push('{');
            rest = after;
        }
    }
    literal.push_str(rest);
    if !literal.is_empty() {
        segments.push(Segment::Literal(literal));
    }
    segments
}

impl PromptTemplate {
    /// Parses `text`; every placeholder must be one of [`PLACEHOLDERS`].
    pub fn new(id: TemplateId, text: impl Into<String>) -> Result<Self, PromptError> {
        let text = text.into();
        let segments = parse(&text);
        for seg in &segments {
            if let Segment::Placeholder(name) = seg {
                if !PLACEHOLDERS.contains(&name.as_str()) {
                    return Err(PromptError::UnknownPlaceholder(name.clone()));
                }
            }
        }
        Ok(PromptTemplate { id, text, segments })
    }

    pub fn id(&self) -> TemplateId {
        self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Distinct placeholder names in order of first appearance.
    pub fn placeholders(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for seg in &self.segments {
            if let Segment::Placeholder(name) = seg {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
        }
        out
    }

    /// Literal substitution. Bindings must cover exactly the template's
    /// placeholders; bound values are inserted verbatim and never re-expanded.
    pub fn render(&self, bindings: &BTreeMap<&str, &str>) -> Result<String, PromptError> {
        let used = self.placeholders();
        if let Some(name) = used.iter().find(|n| !bindings.contains_key(*n)) {
            return Err(PromptError::MissingBinding(name.to_string()));
        }
        if let Some(key) = bindings.keys().find(|k| !used.contains(k)) {
            return Err(PromptError::UnexpectedBinding(key.to_string()));
        }
        let mut out = String::with_capacity(self.text.len());
        for seg in &self.segments {
            match seg {
                Segment::Literal(s) => out.push_str(s),
                Segment::Placeholder(name) => out.push_str(bindings[name.as_str()]),
            }
        }
        Ok(out)
    }
}

pub fn render_prompt(template: &PromptTemplate, bindings: &BTreeMap<&str, &str>) -> Result<String, PromptError> {
    template.render(bindings)
}

/// The four templates used by the pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub layer1_system: PromptTemplate,
    pub layer1_user: PromptTemplate,
    pub layer2_system: PromptTemplate,
    pub layer2_user: PromptTemplate,
}

impl PromptSet {
    pub fn builtin() -> Self {
        Self::from_texts(LAYER1_SYSTEM, LAYER1_USER, LAYER2_SYSTEM, LAYER2_USER)
            .expect("shipped templates use only known placeholders")
    }

    pub fn from_texts(l1s: &str, l1u: &str, l2s: &str, l2u: &str) -> Result<Self, PromptError> {
        Ok(PromptSet {
            layer1_system: PromptTemplate::new(TemplateId::Layer1System, l1s)?,
            layer1_user: PromptTemplate::new(TemplateId::Layer1User, l1u)?,
            layer2_system: PromptTemplate::new(TemplateId::Layer2System, l2s)?,
            layer2_user: PromptTemplate::new(TemplateId::Layer2User, l2u)?,
        })
    }

    pub fn get(&self, id: TemplateId) -> &PromptTemplate {
        match id {
            TemplateId::Layer1System => &self.layer1_system,
            TemplateId::Layer1User => &self.layer1_user,
            TemplateId::Layer2System => &self.layer2_system,
            TemplateId::Layer2User => &self.layer2_user,
        }
    }

    /// Digest over all four template texts, for run manifests and traces.
    pub fn digest(&self) -> String {
        let mut h = FieldHasher::new();
        for id in TemplateId::ALL {
            h.str(self.get(id).text());
        }
        h.finish_hex()
    }
}

impl Default for PromptSet {
    fn default() -> Self {
        Self::builtin()
    }
}
