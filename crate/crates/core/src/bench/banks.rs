//! Default word and template banks. Every bank can be replaced through
//! [`TemplateBank`] (it is plain serde data).

use serde::{Deserialize, Serialize};

/// One generation genre for the complement and subset datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genre {
    pub name: String,
    /// Noun phrase, e.g. "an email".
    pub noun: String,
    /// Word joining the noun and a topic: "about", "for", ...
    pub topic_connector: String,
    pub topics: Vec<String>,
    pub contexts: Vec<String>,
    pub qualifiers: Vec<String>,
    /// Each outline is a comma-separated list of parts.
    pub outlines: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactualTemplate {
    /// Question with a single correct answer.
    pub specific: String,
    /// Question admitting many correct answers.
    pub open: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Country {
    pub name: String,
    pub continent: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub name: String,
    pub items: Vec<String>,
}

/// Union family: a shared stem followed by one or more alternatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnionFamily {
    pub stem: String,
    pub options: Vec<String>,
}

/// Requirement fragments for intersection families. A family fixes one
/// document, one length, one paragraph count and one style.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionGrammar {
    pub documents: Vec<String>,
    pub word_counts: Vec<u32>,
    pub paragraph_counts: Vec<String>,
    pub styles: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateBank {
    pub genres: Vec<Genre>,
    pub factual_templates: Vec<FactualTemplate>,
    pub countries: Vec<Country>,
    pub continents: Vec<String>,
    pub categories: Vec<Category>,
    pub union_families: Vec<UnionFamily>,
    pub intersection: IntersectionGrammar,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| (*s).to_owned()).collect()
}

fn genre(
    name: &str,
    noun: &str,
    connector: &str,
    topics: &[&str],
    contexts: &[&str],
    qualifiers: &[&str],
    outlines: &[&str],
) -> Genre {
    Genre {
        name: name.into(),
        noun: noun.into(),
        topic_connector: connector.into(),
        topics: strings(topics),
        contexts: strings(contexts),
        qualifiers: strings(qualifiers),
        outlines: strings(outlines),
    }
}

impl Default for TemplateBank {
    fn default() -> Self {
        Self {
            genres: default_genres(),
            factual_templates: default_factual_templates(),
            countries: default_countries(),
            continents: strings(&[
                "Asia",
                "Africa",
                "Europe",
                "North America",
                "South America",
                "Australia",
            ]),
            categories: default_categories(),
            union_families: default_union_families(),
            intersection: IntersectionGrammar {
                documents: strings(&[
                    "an email",
                    "an essay",
                    "a cover letter",
                    "a blog post",
                    "a product review",
                    "a newsletter",
                    "a speech",
                    "a short story",
                    "a report",
                    "a letter of recommendation",
                    "a press release",
                    "a diary entry",
                ]),
                word_counts: vec![150, 200, 250, 300, 400],
                paragraph_counts: strings(&["two", "three", "four", "five"]),
                styles: strings(&[
                    "formal language",
                    "casual language",
                    "simple vocabulary",
                    "a persuasive tone",
                    "a humorous tone",
                    "vivid imagery",
                ]),
            },
        }
    }
}

fn default_genres() -> Vec<Genre> {
    vec![
        genre(
            "email",
            "an email",
            "about",
            &["job opportunities", "an upcoming conference", "a new product launch", "a team milestone"],
            &["at a tech firm", "for remote engineers", "in the non-profit sector"],
            &["includes a discussion of my qualifications", "asks about remote-work policies"],
            &["Greeting, Purpose, Qualifications, Next steps", "Subject, Body, Closing"],
        ),
        genre(
            "poem",
            "a poem",
            "about",
            &["autumn leaves", "lost love", "a starry night", "the ocean's whispers"],
            &["in a small town", "during wartime", "over the desert"],
            &["employs vivid imagery", "uses iambic pentameter", "is limited to 14 lines"],
            &["haiku (5-7-5)", "limerick", "free verse"],
        ),
        genre(
            "program",
            "a Python program",
            "for",
            &["sorting a list", "scraping a website", "converting CSV to JSON", "analyzing text sentiment"],
            &["using merge sort", "handling pagination", "with nested objects"],
            &["includes docstrings", "uses type hints", "avoids external libraries"],
            &["main(), helper functions, guard block", "CLI interface"],
        ),
        genre(
            "story",
            "a short story",
            "about",
            &["a time-travel mishap", "an unlikely friendship", "a dystopian future", "a family reunion"],
            &["in Victorian London", "between a robot and a child", "ruled by algorithms"],
            &["written in first person", "contains a twist ending", "under 500 words"],
            &["Freytag's pyramid", "journal entries", "letters format"],
        ),
        genre(
            "persona",
            "a persona",
            "of",
            &["a tech-savvy college student", "a health-conscious parent", "a budget traveler", "a small business owner"],
            &["majoring in computer science", "with two toddlers", "backpacking in Southeast Asia"],
            &["includes demographic info", "identifies pain points", "lists preferred communication channels"],
            &["Background, Goals, Challenges", "bullet points", "short narrative example"],
        ),
    ]
}

fn default_factual_templates() -> Vec<FactualTemplate> {
    const PAIRS: &[(&str, &str)] = &[
        ("Who was the first president of {country}?", "Name a president of {country}."),
        ("What is the capital of {country}?", "Name a city in {country}."),
        ("What is the largest river in {country}?", "Name a river in {country}."),
        ("What is the tallest mountain in {country}?", "Name a mountain in {country}."),
        ("What is the longest river in {continent}?", "Name a river in {continent}."),
        ("What is the most populated city in {country}?", "Name a city in {country}."),
        ("What is the highest mountain in {continent}?", "Name a mountain in {continent}."),
        ("What is the official language of {country}?", "Name a language spoken in {country}."),
        ("What is the currency of {country}?", "Name a currency used in {continent}."),
        ("Who was the 16th president of the United States?", "Who was a president of the United States?"),
        ("What is the fastest land animal?", "Name a land animal."),
        ("What is the largest lake in {country}?", "Name a lake in {country}."),
        ("What is the national animal of {country}?", "Name an animal found in {country}."),
        ("What is the national dish of {country}?", "Name a dish eaten in {country}."),
        ("What is the largest airport in {country}?", "Name an airport in {country}."),
        ("What is the oldest university in {country}?", "Name a university in {country}."),
        ("What is the most visited museum in {country}?", "Name a museum in {country}."),
        ("What is the national sport of {country}?", "Name a sport played in {country}."),
        ("What is the largest island of {country}?", "Name an island of {country}."),
        ("What is the busiest port in {country}?", "Name a port city in {country}."),
        ("Who is the most famous author from {country}?", "Name an author from {country}."),
        ("What is the largest national park in {country}?", "Name a national park in {country}."),
        ("What is the tallest building in {country}?", "Name a building in {country}."),
        ("What is the most widely read newspaper in {country}?", "Name a newspaper published in {country}."),
        ("What is the national flower of {country}?", "Name a flower that grows in {country}."),
        ("What is the most spoken language in {country}?", "Name a language spoken in {country}."),
        ("What is the longest highway in {country}?", "Name a highway in {country}."),
        ("What is the most famous festival in {country}?", "Name a festival celebrated in {country}."),
        ("What is the largest stadium in {country}?", "Name a stadium in {country}."),
        ("What is the highest waterfall in {country}?", "Name a waterfall in {country}."),
        ("What is the most popular tourist attraction in {country}?", "Name a tourist attraction in {country}."),
        ("What is the largest forest in {country}?", "Name a forest in {country}."),
        ("What is the best-selling car brand in {country}?", "Name a car brand sold in {country}."),
        ("Who is the most famous musician from {country}?", "Name a musician from {country}."),
        ("What is the largest bank in {country}?", "Name a bank in {country}."),
        ("What is the most popular beverage in {country}?", "Name a beverage popular in {country}."),
        ("What is the largest country in {continent}?", "Name a country in {continent}."),
        ("What is the most populated city in {continent}?", "Name a city in {continent}."),
        ("What is the largest lake in {continent}?", "Name a lake in {continent}."),
        ("What is the largest desert in {continent}?", "Name a desert in {continent}."),
        ("What is the smallest country in {continent}?", "Name a country in {continent}."),
        ("What is the most spoken language in {continent}?", "Name a language spoken in {continent}."),
        ("What is the largest ocean on Earth?", "Name an ocean."),
        ("What is the largest planet in the solar system?", "Name a planet in the solar system."),
        ("What is the chemical symbol for gold?", "Name a chemical symbol."),
        ("What is the smallest prime number?", "Name a prime number."),
        ("What is the tallest mountain in the world?", "Name a mountain."),
        ("What is the longest river in the world?", "Name a river."),
        ("Who wrote Romeo and Juliet?", "Name a playwright."),
        ("What is the hardest natural substance?", "Name a mineral."),
        ("What is the largest mammal?", "Name a mammal."),
        ("What is the closest star to Earth?", "Name a star."),
        ("Who painted the Mona Lisa?", "Name a Renaissance painter."),
        ("What is the most abundant gas in Earth's atmosphere?", "Name a gas found in Earth's atmosphere."),
        ("What is the largest bone in the human body?", "Name a bone in the human body."),
        ("What is the first element on the periodic table?", "Name an element on the periodic table."),
        ("Who was the first person to walk on the Moon?", "Name an astronaut."),
        ("What is the fastest bird?", "Name a bird."),
        ("What is the largest organ of the human body?", "Name an organ of the human body."),
        ("What is the largest moon of Saturn?", "Name a moon of Saturn."),
        ("Who composed the Moonlight Sonata?", "Name a classical composer."),
        ("What is the largest continent?", "Name a continent."),
    ];
    PAIRS
        .iter()
        .map(|(s, o)| FactualTemplate { specific: (*s).into(), open: (*o).into() })
        .collect()
}

fn default_countries() -> Vec<Country> {
    const LIST: &[(&str, &str)] = &[
        ("Argentina", "South America"),
        ("Australia", "Australia"),
        ("Bangladesh", "Asia"),
        ("Belgium", "Europe"),
        ("Brazil", "South America"),
        ("Canada", "North America"),
        ("Chile", "South America"),
        ("China", "Asia"),
        ("Colombia", "South America"),
        ("Denmark", "Europe"),
        ("Egypt", "Africa"),
        ("Ethiopia", "Africa"),
        ("Finland", "Europe"),
        ("France", "Europe"),
        ("Germany", "Europe"),
        ("India", "Asia"),
        ("Indonesia", "Asia"),
        ("Iran", "Asia"),
        ("Iraq", "Asia"),
        ("Italy", "Europe"),
        ("Japan", "Asia"),
        ("Kenya", "Africa"),
        ("Mexico", "North America"),
        ("Netherlands", "Europe"),
        ("Nigeria", "Africa"),
        ("Pakistan", "Asia"),
        ("Russia", "Europe"),
        ("South Africa", "Africa"),
        ("South Korea", "Asia"),
        ("United Kingdom", "Europe"),
    ];
    LIST.iter()
        .map(|(n, c)| Country { name: (*n).into(), continent: (*c).into() })
        .collect()
}

fn default_categories() -> Vec<Category> {
    let cat = |name: &str, items: &[&str]| Category { name: name.into(), items: strings(items) };
    vec![
        cat("animals", &["cat", "dog", "sheep", "horse", "bird", "whale", "lion", "tiger", "bear", "elephant", "giraffe", "zebra"]),
        cat("colors", &["red", "blue", "green", "yellow", "black", "white", "orange", "purple", "pink", "gray", "brown", "cyan"]),
        cat("numbers", &["1", "2", "3", "4", "5", "6", "7", "8", "9", "10", "11", "12", "13", "14", "15", "16", "17", "18", "19", "20"]),
        cat("fruits", &["apple", "banana", "cherry", "grape", "kiwi", "lemon", "mango", "orange", "pear", "peach", "plum", "melon"]),
        cat("vehicles", &["car", "truck", "bus", "motorcycle", "bicycle", "scooter", "van", "train", "boat", "plane", "helicopter", "submarine"]),
    ]
}

fn default_union_families() -> Vec<UnionFamily> {
    let fam = |stem: &str, options: &[&str]| UnionFamily { stem: stem.into(), options: strings(options) };
    vec![
        fam("Come up with an idea for", &["breakfast", "lunch", "dinner", "afternoon snack", "dessert", "brunch"]),
        fam("Come up with an idea for", &["a song", "a poem", "a movie", "a book", "a painting", "a play"]),
        fam("Suggest a name for", &["a cat", "a dog", "a goldfish", "a parrot", "a hamster", "a rabbit"]),
        fam("Recommend a place to visit in", &["spring", "summer", "autumn", "winter"]),
        fam("Describe a hobby that involves", &["cooking", "gardening", "painting", "music", "woodworking", "photography"]),
        fam("Write a short story about", &["a dragon", "a pirate", "a detective", "an astronaut", "a wizard", "a robot"]),
        fam("Name a sport played with", &["a ball", "a racket", "a bat", "a puck", "a stick"]),
        fam("Plan a weekend activity for", &["a family", "a couple", "a group of friends", "a solo traveler", "a retiree"]),
        fam("Come up with a gift idea for", &["a teacher", "a coworker", "a grandparent", "a child", "a neighbor", "a best friend"]),
        fam("Suggest a workout for", &["the arms", "the legs", "the back", "the core", "the shoulders"]),
        fam("Invent a holiday tradition for", &["New Year", "Halloween", "Thanksgiving", "a birthday", "an anniversary"]),
        fam("Come up with a slogan for", &["a bakery", "a bookstore", "a gym", "a coffee shop", "a bike shop", "a florist"]),
        fam("Write a joke about", &["cats", "computers", "teachers", "the weather", "vegetables", "airplanes"]),
        fam("Describe a costume for", &["a pirate", "a superhero", "a ghost", "a princess", "a vampire"]),
        fam("Suggest a weekend trip to", &["the mountains", "the beach", "a big city", "a national park", "the countryside"]),
    ]
}
