//! Prompt assembly: the four cumulative strategy levels and the multi-modal
//! message template they fill in.
//!
//! Wording lives in one versioned template file (see `assets/`) so snapshot
//! tests can pin it. Assembly is strict: a component required by the strategy
//! must be present, and a component disabled by the strategy must be absent,
//! otherwise ablation columns would not measure what they claim.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::CanonicalImage;

/// Default template wording, compiled in; overridable via a template file.
pub const DEFAULT_TEMPLATE_TOML: &str = include_str!("../assets/prompt_template.toml");
/// Default per-category normality rules, compiled in.
pub const DEFAULT_RULES_TOML: &str = include_str!("../assets/normality_rules.toml");

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("strategy {strategy} requires a {component}")]
    MissingComponent { strategy: PromptStrategy, component: &'static str },
    #[error("strategy {strategy} does not use a {component} (strict assembly)")]
    ExtraComponent { strategy: PromptStrategy, component: &'static str },
    #[error("unknown strategy identifier {0:?}")]
    UnknownStrategy(String),
    #[error("invalid template or rules file: {0}")]
    InvalidFile(String),
    #[error("normality rules must contain at least one non-empty sentence")]
    EmptyRules,
}

/// The cumulative prompting ladder. Each level keeps everything the previous
/// level sends and adds one component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStrategy {
    /// Task and format instructions only.
    Naive,
    /// Adds the class token.
    ClassInfo,
    /// Adds the textual normality rules.
    NormalityRule,
    /// Adds the reference normal image.
    NormalityCase,
}

impl PromptStrategy {
    pub const ALL: [PromptStrategy; 4] = [
        PromptStrategy::Naive,
        PromptStrategy::ClassInfo,
        PromptStrategy::NormalityRule,
        PromptStrategy::NormalityCase,
    ];

    pub fn use_class(self) -> bool {
        self >= PromptStrategy::ClassInfo
    }

    pub fn use_rules(self) -> bool {
        self >= PromptStrategy::NormalityRule
    }

    pub fn use_reference(self) -> bool {
        self >= PromptStrategy::NormalityCase
    }

    /// Stable identifier used in records, reports, and config files.
    pub fn id(self) -> &'static str {
        match self {
            PromptStrategy::Naive => "naive",
            PromptStrategy::ClassInfo => "class",
            PromptStrategy::NormalityRule => "rules",
            PromptStrategy::NormalityCase => "reference",
        }
    }
}

/// Stable identifier for a strategy ("naive" | "class" | "rules" | "reference").
pub fn describe_strategy(strategy: PromptStrategy) -> &'static str {
    strategy.id()
}

impl fmt::Display for PromptStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for PromptStrategy {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive" => Ok(PromptStrategy::Naive),
            "class" => Ok(PromptStrategy::ClassInfo),
            "rules" => Ok(PromptStrategy::NormalityRule),
            "reference" => Ok(PromptStrategy::NormalityCase),
            other => Err(PromptError::UnknownStrategy(other.to_string())),
        }
    }
}

/// Category-specific sentences describing normal standards and known
/// abnormal patterns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalityRules {
    pub category: String,
    pub rules: Vec<String>,
}

impl NormalityRules {
    pub fn new(category: impl Into<String>, rules: Vec<String>) -> Result<Self, PromptError> {
        if rules.is_empty() || rules.iter().any(|r| r.trim().is_empty()) {
            return Err(PromptError::EmptyRules);
        }
        Ok(NormalityRules { category: category.into(), rules })
    }
}

/// The full rule set, keyed by dataset category directory name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    rules: BTreeMap<String, Vec<String>>,
}

#[derive(Deserialize)]
struct RulesFileRepr {
    #[allow(dead_code)]
    version: u32,
    rules: BTreeMap<String, Vec<String>>,
}

impl RuleSet {
    pub fn from_toml(text: &str) -> Result<Self, PromptError> {
        let repr: RulesFileRepr =
            toml::from_str(text).map_err(|e| PromptError::InvalidFile(e.to_string()))?;
        for (category, rules) in &repr.rules {
            if rules.is_empty() || rules.iter().any(|r| r.trim().is_empty()) {
                return Err(PromptError::InvalidFile(format!(
                    "category {category:?} has an empty rule list or empty sentence"
                )));
            }
        }
        Ok(RuleSet { rules: repr.rules })
    }

    pub fn from_file(path: &Path) -> Result<Self, PromptError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PromptError::InvalidFile(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// The compiled-in default rule set.
    pub fn bundled() -> Self {
        Self::from_toml(DEFAULT_RULES_TOML).expect("bundled rules file is valid")
    }

    pub fn get(&self, category: &str) -> Option<NormalityRules> {
        self.rules.get(category).map(|rules| NormalityRules {
            category: category.to_string(),
            rules: rules.clone(),
        })
    }

    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.rules.keys().map(|s| s.as_str())
    }
}

/// Role of a text segment within a bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextRole {
    TaskInstruction,
    ClassContext,
    NormalityRules,
    ReferencePreamble,
    QueryPreamble,
    FormatInstruction,
}

/// Role of an image attachment within a bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageRole {
    Reference,
    Query,
}

/// One element of the ordered prompt message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Segment {
    Text { role: TextRole, content: String },
    Image { role: ImageRole, image: CanonicalImage },
}

/// An ordered multi-modal message realizing one prompt strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub segments: Vec<Segment>,
    pub strategy: PromptStrategy,
    pub class_token: Option<String>,
}

impl PromptBundle {
    pub fn text_segments(&self) -> impl Iterator<Item = (&TextRole, &str)> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Text { role, content } => Some((role, content.as_str())),
            _ => None,
        })
    }

    pub fn image(&self, role: ImageRole) -> Option<&CanonicalImage> {
        self.segments.iter().find_map(|s| match s {
            Segment::Image { role: r, image } if *r == role => Some(image),
            _ => None,
        })
    }

    /// All text content joined in order.
    pub fn joined_text(&self) -> String {
        self.text_segments().map(|(_, t)| t).collect::<Vec<_>>().join("\n")
    }

    /// Canonical serialization: stable field order, UTF-8 text, images as
    /// raw RGB bytes in base64. Request digests and snapshot tests both hash
    /// these exact bytes.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("bundle serialization cannot fail")
    }
}

/// The canonical wording for every fixed text segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub version: u32,
    pub task_instruction: String,
    /// Rendered with `{class}` replaced by the class token.
    pub class_context: String,
    pub rules_header: String,
    pub reference_preamble: String,
    pub query_preamble: String,
    pub format_instruction: String,
}

impl PromptTemplate {
    pub fn from_toml(text: &str) -> Result<Self, PromptError> {
        toml::from_str(text).map_err(|e| PromptError::InvalidFile(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, PromptError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PromptError::InvalidFile(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// The compiled-in default wording.
    pub fn bundled() -> Self {
        Self::from_toml(DEFAULT_TEMPLATE_TOML).expect("bundled template file is valid")
    }

    /// Assembles the ordered multi-modal message for one strategy level.
    ///
    /// Segment order: task instruction, class context (if enabled),
    /// normality rules (if enabled), reference preamble and image (if
    /// enabled), query preamble (only when a reference precedes, so "first
    /// image"/"second image" stay unambiguous) and query image, format
    /// instruction. The format instruction is always the final text segment.
    pub fn build_prompt(
        &self,
        strategy: PromptStrategy,
        query_image: CanonicalImage,
        class_token: Option<&str>,
        rules: Option<&NormalityRules>,
        reference: Option<CanonicalImage>,
    ) -> Result<PromptBundle, PromptError> {
        match (strategy.use_class(), class_token.is_some()) {
            (true, false) => {
                return Err(PromptError::MissingComponent { strategy, component: "class token" })
            }
            (false, true) => {
                return Err(PromptError::ExtraComponent { strategy, component: "class token" })
            }
            _ => {}
        }
        match (strategy.use_rules(), rules.is_some()) {
            (true, false) => {
                return Err(PromptError::MissingComponent { strategy, component: "normality rules" })
            }
            (false, true) => {
                return Err(PromptError::ExtraComponent { strategy, component: "normality rules" })
            }
            _ => {}
        }
        match (strategy.use_reference(), reference.is_some()) {
            (true, false) => {
                return Err(PromptError::MissingComponent { strategy, component: "reference image" })
            }
            (false, true) => {
                return Err(PromptError::ExtraComponent { strategy, component: "reference image" })
            }
            _ => {}
        }
        if let Some(rules) = rules {
            if rules.rules.is_empty() {
                return Err(PromptError::EmptyRules);
            }
        }

        let mut segments = Vec::with_capacity(8);
        let text = |role: TextRole, content: String| Segment::Text { role, content };

        segments.push(text(TextRole::TaskInstruction, self.task_instruction.clone()));
        if let Some(token) = class_token {
            segments.push(text(TextRole::ClassContext, self.class_context.replace("{class}", token)));
        }
        if let Some(rules) = rules {
            let mut body = self.rules_header.clone();
            for rule in &rules.rules {
                body.push_str("\n- ");
                body.push_str(rule);
            }
            segments.push(text(TextRole::NormalityRules, body));
        }
        if let Some(reference) = reference {
            segments.push(text(TextRole::ReferencePreamble, self.reference_preamble.clone()));
            segments.push(Segment::Image { role: ImageRole::Reference, image: reference });
            segments.push(text(TextRole::QueryPreamble, self.query_preamble.clone()));
        }
        segments.push(Segment::Image { role: ImageRole::Query, image: query_image });
        segments.push(text(TextRole::FormatInstruction, self.format_instruction.clone()));

        Ok(PromptBundle {
            segments,
            strategy,
            class_token: class_token.map(|s| s.to_string()),
        })
    }
}
