use std::collections::{BTreeMap, HashSet};

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::banks::{Genre, IntersectionGrammar, TemplateBank, UnionFamily};
use super::lattice::{enumerate_strict_subset_pairs, mask_label, mask_members};
use super::{Bench, BenchError, Dataset, Prompt, PromptPair, Rationale};

/// Sizes and seed of a full benchmark build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub seed: u64,
    pub complement_pairs: usize,
    pub factualqa_pairs: usize,
    pub random_choice_pairs: usize,
    pub subset_sets: usize,
    pub union_sets: usize,
    pub intersection_sets: usize,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            complement_pairs: 500,
            factualqa_pairs: 500,
            random_choice_pairs: 500,
            subset_sets: 180,
            union_sets: 60,
            intersection_sets: 60,
        }
    }
}

impl BuildConfig {
    pub fn size_of(&self, dataset: Dataset) -> usize {
        match dataset {
            Dataset::Complement => self.complement_pairs,
            Dataset::Factualqa => self.factualqa_pairs,
            Dataset::RandomChoice => self.random_choice_pairs,
            Dataset::Subset => self.subset_sets,
            Dataset::Union => self.union_sets,
            Dataset::Intersection => self.intersection_sets,
            Dataset::External => 0,
        }
    }
}

/// Independent RNG stream per dataset so datasets can be built separately
/// (or in parallel) and still match a full build.
fn rng_for(seed: u64, dataset: Dataset) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(dataset as u64 + 1);
    rng
}

fn take_shuffled<T>(
    mut space: Vec<T>,
    n: usize,
    dataset: Dataset,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<T>, BenchError> {
    if n > space.len() {
        return Err(BenchError::Exhausted { dataset, requested: n, available: space.len() });
    }
    space.shuffle(rng);
    space.truncate(n);
    Ok(space)
}

fn set_id(dataset: Dataset, i: usize) -> String {
    format!("{}-{:04}", dataset.as_str(), i + 1)
}

fn prompt(id: String, text: String, dataset: Dataset, set_id: &str, meta: &[(&str, &str)]) -> Prompt {
    Prompt {
        id,
        text,
        dataset,
        set_id: set_id.to_owned(),
        meta: meta.iter().map(|(k, v)| ((*k).to_owned(), (*v).to_owned())).collect(),
    }
}

fn pair(larger: &Prompt, smaller: &Prompt, rationale: Rationale) -> PromptPair {
    PromptPair {
        larger_id: larger.id.clone(),
        smaller_id: smaller.id.clone(),
        dataset: larger.dataset,
        rationale,
    }
}

// ---------------------------------------------------------------------------
// Complement and Subset share the genre template.

#[derive(Debug, Clone, Copy)]
struct GenreChoice<'a> {
    genre: &'a Genre,
    topic: &'a str,
    context: Option<&'a str>,
    qualifier: Option<&'a str>,
    outline: Option<&'a str>,
}

fn outline_clause(outline: &str) -> String {
    let parts: Vec<&str> = outline.split(", ").collect();
    if parts.len() == 1 {
        return format!("follows the structure: {outline}");
    }
    let numbered: Vec<String> =
        parts.iter().enumerate().map(|(i, p)| format!("{}) {p}", i + 1)).collect();
    format!("follows the outline: {}", numbered.join(" "))
}

impl GenreChoice<'_> {
    fn description(&self) -> String {
        let g = self.genre;
        let mut s = format!("{} {} {}", g.noun, g.topic_connector, self.topic);
        if let Some(c) = self.context {
            s.push(' ');
            s.push_str(c);
        }
        match (self.qualifier, self.outline) {
            (Some(q), Some(o)) => s.push_str(&format!(" that {q} and {}", outline_clause(o))),
            (Some(q), None) => s.push_str(&format!(" that {q}")),
            (None, Some(o)) => s.push_str(&format!(" that {}", outline_clause(o))),
            (None, None) => {}
        }
        s
    }

    fn meta(&self) -> Vec<(&'static str, String)> {
        let mut m = vec![("genre", self.genre.name.clone()), ("topic", self.topic.to_owned())];
        if let Some(c) = self.context {
            m.push(("context", c.to_owned()));
        }
        if let Some(q) = self.qualifier {
            m.push(("qualifier", q.to_owned()));
        }
        if let Some(o) = self.outline {
            m.push(("outline", o.to_owned()));
        }
        m
    }
}

fn optional(items: &[String]) -> impl Iterator<Item = Option<&str>> + Clone {
    std::iter::once(None).chain(items.iter().map(|s| Some(s.as_str())))
}

fn genre_choices(bank: &TemplateBank, all_fields: bool) -> Vec<GenreChoice<'_>> {
    let mut out = Vec::new();
    for genre in &bank.genres {
        for topic in &genre.topics {
            let (ctx, qual, outl): (Vec<_>, Vec<_>, Vec<_>) = if all_fields {
                (
                    genre.contexts.iter().map(|s| Some(s.as_str())).collect(),
                    genre.qualifiers.iter().map(|s| Some(s.as_str())).collect(),
                    genre.outlines.iter().map(|s| Some(s.as_str())).collect(),
                )
            } else {
                (
                    optional(&genre.contexts).collect(),
                    optional(&genre.qualifiers).collect(),
                    optional(&genre.outlines).collect(),
                )
            };
            for &context in &ctx {
                for &qualifier in &qual {
                    for &outline in &outl {
                        out.push(GenreChoice { genre, topic, context, qualifier, outline });
                    }
                }
            }
        }
    }
    out
}

/// Complement prompt for a base description such as "a poem about the moon".
pub fn complement_text(description: &str) -> String {
    format!("Generate anything that is not {description}")
}

pub fn gen_complement(bank: &TemplateBank, n: usize, seed: u64) -> Result<Bench, BenchError> {
    let dataset = Dataset::Complement;
    let mut rng = rng_for(seed, dataset);
    let chosen = take_shuffled(genre_choices(bank, false), n, dataset, &mut rng)?;
    let mut bench = Bench::default();
    for (i, choice) in chosen.iter().enumerate() {
        let sid = set_id(dataset, i);
        let desc = choice.description();
        let meta = choice.meta();
        let meta: Vec<(&str, &str)> = meta.iter().map(|(k, v)| (*k, v.as_str())).collect();
        let base = prompt(format!("{sid}-a"), format!("Generate {desc}"), dataset, &sid, &meta);
        let comp = prompt(format!("{sid}-b"), complement_text(&desc), dataset, &sid, &meta);
        bench.pairs.push(pair(&comp, &base, Rationale::Complement));
        bench.prompts.extend([base, comp]);
    }
    bench.sort();
    Ok(bench)
}

pub fn gen_subset(bank: &TemplateBank, n_sets: usize, seed: u64) -> Result<Bench, BenchError> {
    let dataset = Dataset::Subset;
    let mut rng = rng_for(seed, dataset);
    let chosen = take_shuffled(genre_choices(bank, true), n_sets, dataset, &mut rng)?;
    let mut bench = Bench::default();
    for (i, full) in chosen.iter().enumerate() {
        let sid = set_id(dataset, i);
        let g = full.genre;
        let level_texts = [
            format!("Write {}", g.noun),
            format!("Write {} {} {}", g.noun, g.topic_connector, full.topic),
            format!("Write {} {} {} {}", g.noun, g.topic_connector, full.topic, full.context.unwrap_or_default()),
            format!("Write {}", GenreChoice { outline: None, ..*full }.description()),
            format!("Write {}", full.description()),
        ];
        let levels: Vec<Prompt> = level_texts
            .into_iter()
            .enumerate()
            .map(|(l, text)| {
                let level = (l + 1).to_string();
                prompt(
                    format!("{sid}-l{}", l + 1),
                    text,
                    dataset,
                    &sid,
                    &[("genre", &g.name), ("level", &level)],
                )
            })
            .collect();
        for a in 0..levels.len() {
            for b in a + 1..levels.len() {
                bench.pairs.push(pair(&levels[a], &levels[b], Rationale::AddedRequirement));
            }
        }
        bench.prompts.extend(levels);
    }
    bench.sort();
    Ok(bench)
}

// ---------------------------------------------------------------------------

pub fn gen_factualqa(bank: &TemplateBank, n: usize, seed: u64) -> Result<Bench, BenchError> {
    let dataset = Dataset::Factualqa;
    let mut rng = rng_for(seed, dataset);
    let mut seen = HashSet::new();
    let mut space: Vec<(String, String, usize)> = Vec::new();
    for (t, tpl) in bank.factual_templates.iter().enumerate() {
        let uses_country = tpl.specific.contains("{country}") || tpl.open.contains("{country}");
        let uses_continent = tpl.specific.contains("{continent}") || tpl.open.contains("{continent}");
        let fills: Vec<(&str, &str)> = if uses_country {
            bank.countries.iter().map(|c| (c.name.as_str(), c.continent.as_str())).collect()
        } else if uses_continent {
            bank.continents.iter().map(|c| ("", c.as_str())).collect()
        } else {
            vec![("", "")]
        };
        for (country, continent) in fills {
            let fill = |s: &str| s.replace("{country}", country).replace("{continent}", continent);
            let inst = (fill(&tpl.specific), fill(&tpl.open));
            if seen.insert(inst.clone()) {
                space.push((inst.0, inst.1, t));
            }
        }
    }
    let chosen = take_shuffled(space, n, dataset, &mut rng)?;
    let mut bench = Bench::default();
    for (i, (specific, open, t)) in chosen.into_iter().enumerate() {
        let sid = set_id(dataset, i);
        let template = t.to_string();
        let a = prompt(format!("{sid}-a"), specific, dataset, &sid, &[("template", &template)]);
        let b = prompt(format!("{sid}-b"), open, dataset, &sid, &[("template", &template)]);
        bench.pairs.push(pair(&b, &a, Rationale::Specialization));
        bench.prompts.extend([a, b]);
    }
    bench.sort();
    Ok(bench)
}

fn choice_text(items: &[&str]) -> String {
    format!("Choose one from the following: {}.", items.join(", "))
}

pub fn gen_random_choice(bank: &TemplateBank, n: usize, seed: u64) -> Result<Bench, BenchError> {
    const SMALL: usize = 2;
    const LARGE: usize = 10;
    let dataset = Dataset::RandomChoice;
    if bank.categories.is_empty() {
        return Err(BenchError::Configuration("no random-choice categories".into()));
    }
    if let Some(c) = bank.categories.iter().find(|c| c.items.len() < LARGE) {
        return Err(BenchError::Configuration(format!(
            "category `{}` has {} items, need at least {LARGE}",
            c.name,
            c.items.len()
        )));
    }
    let mut rng = rng_for(seed, dataset);
    let mut seen = HashSet::new();
    let mut bench = Bench::default();
    let max_attempts = n.saturating_mul(1000).max(1000);
    let mut attempts = 0;
    while bench.pairs.len() < n {
        attempts += 1;
        if attempts > max_attempts {
            return Err(BenchError::Exhausted { dataset, requested: n, available: bench.pairs.len() });
        }
        let category = &bank.categories[rng.gen_range(0..bank.categories.len())];
        let large: Vec<&str> = index::sample(&mut rng, category.items.len(), LARGE)
            .into_iter()
            .map(|i| category.items[i].as_str())
            .collect();
        // the two-option prompt lists a subset of the ten-option prompt
        let small: Vec<&str> =
            index::sample(&mut rng, LARGE, SMALL).into_iter().map(|i| large[i]).collect();
        let (small_text, large_text) = (choice_text(&small), choice_text(&large));
        if !seen.insert((small_text.clone(), large_text.clone())) {
            continue;
        }
        let sid = set_id(dataset, bench.pairs.len());
        let a = prompt(format!("{sid}-a"), small_text, dataset, &sid, &[("category", &category.name), ("options", "2")]);
        let b = prompt(format!("{sid}-b"), large_text, dataset, &sid, &[("category", &category.name), ("options", "10")]);
        bench.pairs.push(pair(&b, &a, Rationale::OptionSubset));
        bench.prompts.extend([a, b]);
    }
    bench.sort();
    Ok(bench)
}

// ---------------------------------------------------------------------------
// Lattice datasets

const LATTICE_BASE: u32 = 4;

fn lattice_bench(
    dataset: Dataset,
    families: Vec<(BTreeMap<String, String>, Vec<(u32, String)>)>,
    rationale: Rationale,
    superset_is_larger: bool,
) -> Bench {
    let lattice = enumerate_strict_subset_pairs(LATTICE_BASE);
    let mut bench = Bench::default();
    for (i, (family_meta, texts)) in families.into_iter().enumerate() {
        let sid = set_id(dataset, i);
        let id_of = |mask: u32| format!("{sid}-{}", mask_label(mask));
        for (mask, text) in texts {
            let mut meta = family_meta.clone();
            meta.insert("mask".into(), mask_label(mask));
            meta.insert("elements".into(), mask.count_ones().to_string());
            bench.prompts.push(Prompt { id: id_of(mask), text, dataset, set_id: sid.clone(), meta });
        }
        for &(sup, sub) in &lattice {
            let (larger, smaller) = if superset_is_larger { (sup, sub) } else { (sub, sup) };
            bench.pairs.push(PromptPair {
                larger_id: id_of(larger),
                smaller_id: id_of(smaller),
                dataset,
                rationale,
            });
        }
    }
    bench.sort();
    bench
}

fn union_text(stem: &str, options: &[&str]) -> String {
    format!("{stem} {}", options.join(" or "))
}

pub fn gen_union(bank: &TemplateBank, n_sets: usize, seed: u64) -> Result<Bench, BenchError> {
    let dataset = Dataset::Union;
    let mut rng = rng_for(seed, dataset);
    let mut space: Vec<(&UnionFamily, Vec<usize>)> = Vec::new();
    for fam in &bank.union_families {
        for combo in combinations(fam.options.len(), LATTICE_BASE as usize) {
            space.push((fam, combo));
        }
    }
    let chosen = take_shuffled(space, n_sets, dataset, &mut rng)?;
    let families = chosen
        .into_iter()
        .map(|(fam, combo)| {
            let options: Vec<&str> = combo.iter().map(|&i| fam.options[i].as_str()).collect();
            let texts = (1..1u32 << LATTICE_BASE)
                .map(|mask| {
                    let picked: Vec<&str> = mask_members(mask).into_iter().map(|i| options[i]).collect();
                    (mask, union_text(&fam.stem, &picked))
                })
                .collect();
            let meta = BTreeMap::from([
                ("stem".to_owned(), fam.stem.clone()),
                ("options".to_owned(), options.join("|")),
            ]);
            (meta, texts)
        })
        .collect();
    Ok(lattice_bench(dataset, families, Rationale::UnionSuperset, true))
}

/// One intersection family: a document plus three requirements.
#[derive(Debug, Clone, Copy)]
struct IntersectionFamily<'a> {
    document: &'a str,
    words: u32,
    paragraphs: &'a str,
    style: &'a str,
}

/// Prompt text for an intersection mask over (document, length,
/// paragraph count, style). Single elements use the standalone base
/// phrasing; larger masks merge into one sentence.
pub fn intersection_text(document: &str, words: u32, paragraphs: &str, style: &str, mask: u32) -> String {
    let bases = [
        format!("Compose {document}."),
        format!("Please write a piece that is {words} words long."),
        format!("Please write something that is {paragraphs} paragraphs in length."),
        format!("Compose a piece utilizing {style}."),
    ];
    let members = mask_members(mask);
    if members.len() == 1 {
        return bases[members[0]].clone();
    }
    let head = if mask & 1 != 0 { format!("Compose {document}") } else { "Compose a piece".to_owned() };
    let clauses: Vec<String> = members
        .into_iter()
        .filter(|&m| m != 0)
        .map(|m| match m {
            1 => format!("with a word count of approximately {words} words"),
            2 => format!("consisting of {paragraphs} paragraphs"),
            _ => format!("using {style}"),
        })
        .collect();
    let body = match clauses.as_slice() {
        [one] => one.clone(),
        [a, b] => format!("{a} and {b}"),
        [init @ .., last] => format!("{}, and {last}", init.join(", ")),
        [] => unreachable!("a mask with two or more members has at least one requirement"),
    };
    format!("{head} {body}.")
}

fn intersection_families(g: &IntersectionGrammar) -> Vec<IntersectionFamily<'_>> {
    let mut out = Vec::new();
    for document in &g.documents {
        for &words in &g.word_counts {
            for paragraphs in &g.paragraph_counts {
                for style in &g.styles {
                    out.push(IntersectionFamily { document, words, paragraphs, style });
                }
            }
        }
    }
    out
}

pub fn gen_intersection(bank: &TemplateBank, n_sets: usize, seed: u64) -> Result<Bench, BenchError> {
    let dataset = Dataset::Intersection;
    let mut rng = rng_for(seed, dataset);
    let chosen = take_shuffled(intersection_families(&bank.intersection), n_sets, dataset, &mut rng)?;
    let families = chosen
        .into_iter()
        .map(|f| {
            let texts = (1..1u32 << LATTICE_BASE)
                .map(|mask| (mask, intersection_text(f.document, f.words, f.paragraphs, f.style, mask)))
                .collect();
            let meta = BTreeMap::from([
                ("document".to_owned(), f.document.to_owned()),
                ("words".to_owned(), f.words.to_string()),
                ("paragraphs".to_owned(), f.paragraphs.to_owned()),
                ("style".to_owned(), f.style.to_owned()),
            ]);
            (meta, texts)
        })
        .collect();
    Ok(lattice_bench(dataset, families, Rationale::IntersectionSuperset, false))
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Builds one dataset; `size` is a pair count for the binary datasets and a
/// set count for subset/union/intersection.
pub fn generate_dataset(
    bank: &TemplateBank,
    dataset: Dataset,
    size: usize,
    seed: u64,
) -> Result<Bench, BenchError> {
    if size == 0 {
        return Err(BenchError::Configuration(format!("{dataset}: size must be at least 1")));
    }
    match dataset {
        Dataset::Complement => gen_complement(bank, size, seed),
        Dataset::Factualqa => gen_factualqa(bank, size, seed),
        Dataset::RandomChoice => gen_random_choice(bank, size, seed),
        Dataset::Subset => gen_subset(bank, size, seed),
        Dataset::Union => gen_union(bank, size, seed),
        Dataset::Intersection => gen_intersection(bank, size, seed),
        Dataset::External => Err(BenchError::Configuration("external datasets are loaded, not generated".into())),
    }
}

pub fn generate_all(bank: &TemplateBank, cfg: &BuildConfig) -> Result<Bench, BenchError> {
    let mut bench = Bench::default();
    for dataset in Dataset::SYNTHETIC {
        bench.extend(generate_dataset(bank, dataset, cfg.size_of(dataset), cfg.seed)?);
    }
    bench.sort();
    Ok(bench)
}
