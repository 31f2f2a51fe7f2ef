//! Seeded synthesis of the six GSS benchmark datasets.
//!
//! Every dataset is a list of [`Prompt`]s plus [`PromptPair`]s in which the
//! `larger` prompt has the strictly larger ground-truth generation space.

mod banks;
mod generate;
mod lattice;

pub use banks::{
    Category, Country, FactualTemplate, Genre, IntersectionGrammar, TemplateBank, UnionFamily,
};
pub use generate::{
    complement_text, gen_complement, gen_factualqa, gen_intersection, gen_random_choice,
    gen_subset, gen_union, generate_all, generate_dataset, intersection_text, BuildConfig,
};
pub use lattice::{enumerate_strict_subset_pairs, mask_label, mask_members};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dataset {
    Complement,
    Factualqa,
    RandomChoice,
    Subset,
    Union,
    Intersection,
    External,
}

impl Dataset {
    /// The six synthesised datasets, in build order.
    pub const SYNTHETIC: [Dataset; 6] = [
        Self::Complement,
        Self::Factualqa,
        Self::RandomChoice,
        Self::Subset,
        Self::Union,
        Self::Intersection,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Complement => "complement",
            Self::Factualqa => "factualqa",
            Self::RandomChoice => "random_choice",
            Self::Subset => "subset",
            Self::Union => "union",
            Self::Intersection => "intersection",
            Self::External => "external",
        }
    }

    /// Lattice datasets group 15 prompts per set.
    pub fn is_lattice(self) -> bool {
        matches!(self, Self::Union | Self::Intersection)
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dataset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::SYNTHETIC
            .into_iter()
            .chain([Self::External])
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("unknown dataset `{s}`"))
    }
}

/// Set relation justifying a pair's ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rationale {
    /// "anything that is not X" versus X.
    Complement,
    /// Open-category question versus a single-answer question.
    Specialization,
    /// Ten listed options versus two of them.
    OptionSubset,
    /// Fewer appended requirements versus more.
    AddedRequirement,
    /// Union of more alternatives versus fewer.
    UnionSuperset,
    /// Conjunction of fewer requirements versus more.
    IntersectionSuperset,
    External,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub id: String,
    pub text: String,
    pub dataset: Dataset,
    pub set_id: String,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptPair {
    pub larger_id: String,
    pub smaller_id: String,
    pub dataset: Dataset,
    pub rationale: Rationale,
}

/// Prompt record of an external labelled prompt file (`{id, text, label}`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPrompt {
    pub id: String,
    pub text: String,
    pub label: serde_json::Value,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bench {
    pub prompts: Vec<Prompt>,
    pub pairs: Vec<PromptPair>,
}

impl Bench {
    pub fn extend(&mut self, other: Bench) {
        self.prompts.extend(other.prompts);
        self.pairs.extend(other.pairs);
    }

    /// Sorts prompts by id and pairs by `(larger_id, smaller_id)` so that
    /// output files diff cleanly.
    pub fn sort(&mut self) {
        self.prompts.sort_by(|a, b| a.id.cmp(&b.id));
        self.pairs.sort_by(|a, b| {
            (&a.larger_id, &a.smaller_id).cmp(&(&b.larger_id, &b.smaller_id))
        });
    }

    pub fn pair_count(&self, dataset: Dataset) -> usize {
        self.pairs.iter().filter(|p| p.dataset == dataset).count()
    }

    pub fn prompt(&self, id: &str) -> Option<&Prompt> {
        self.prompts.iter().find(|p| p.id == id)
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{dataset}: requested {requested} items but the bank only supports {available} distinct ones")]
    Exhausted { dataset: Dataset, requested: usize, available: usize },
    #[error("configuration error: {0}")]
    Configuration(String),
}
