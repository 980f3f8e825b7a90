//! Embedded word lists backing the deterministic rule tagger.

use std::collections::HashMap;
use std::sync::OnceLock;

use super::Pos;

/// Closed-class words always tagged FUNCTION (articles, prepositions,
/// pronouns, conjunctions, auxiliaries, determiners, wh-words, particles).
const FUNCTION_WORDS: &[&str] = &[
    // articles and determiners
    "a", "an", "the", "this", "that", "these", "those", "each", "every", "either", "neither",
    "some", "any", "no", "all", "both", "half", "such", "another", "other", "others", "its",
    "my", "your", "his", "her", "our", "their", "whose",
    // pronouns
    "i", "you", "he", "she", "it", "we", "they", "me", "him", "us", "them", "mine", "yours",
    "hers", "ours", "theirs", "myself", "yourself", "himself", "herself", "itself", "ourselves",
    "themselves", "who", "whom", "which", "what", "something", "anything", "nothing",
    "everything", "someone", "anyone", "everyone", "nobody", "one", "ones",
    // prepositions and subordinators
    "of", "in", "on", "at", "by", "for", "with", "about", "against", "between", "among", "into",
    "onto", "through", "during", "before", "after", "above", "below", "from", "up", "down",
    "out", "off", "over", "under", "again", "further", "to", "toward", "towards", "upon",
    "within", "without", "across", "behind", "beyond", "near", "since", "until", "per", "via",
    "as", "than", "like", "despite", "except",
    // conjunctions and connectives
    "and", "but", "or", "nor", "so", "yet", "if", "then", "else", "when", "whenever", "where",
    "wherever", "while", "because", "although", "though", "unless", "whether", "once", "how",
    "why", "that's",
    // auxiliaries and copulas
    "am", "is", "are", "was", "were", "be", "been", "being", "have", "has", "had", "having",
    "do", "does", "did", "doing", "will", "would", "shall", "should", "can", "could", "may",
    "might", "must", "ought", "need",
    // adverbial particles and fillers commonly left unmasked
    "not", "n't", "there", "here", "also", "too", "very", "just", "only", "even", "still",
    "already", "yes", "no", "ok", "etc", "e.g", "i.e", "ie", "eg", "let's",
];

/// Embedded lemma -> POS entries for words the suffix heuristics would
/// misclassify. Kept small; unknown words fall back to the heuristics.
const CONTENT_WORDS: &[(&str, Pos)] = &[
    // verbs
    ("sleep", Pos::Verb),
    ("become", Pos::Verb),
    ("dissolve", Pos::Verb),
    ("assume", Pos::Verb),
    ("entitle", Pos::Verb),
    ("require", Pos::Verb),
    ("declare", Pos::Verb),
    ("impel", Pos::Verb),
    ("establish", Pos::Verb),
    ("elect", Pos::Verb),
    ("explain", Pos::Verb),
    ("run", Pos::Verb),
    ("eat", Pos::Verb),
    ("weigh", Pos::Verb),
    ("write", Pos::Verb),
    ("read", Pos::Verb),
    ("find", Pos::Verb),
    ("solve", Pos::Verb),
    ("answer", Pos::Verb),
    ("choose", Pos::Verb),
    ("let", Pos::Verb),
    ("calculate", Pos::Verb),
    ("compute", Pos::Verb),
    ("subtract", Pos::Verb),
    ("add", Pos::Verb),
    ("multiply", Pos::Verb),
    ("divide", Pos::Verb),
    ("simulate", Pos::Verb),
    ("fill", Pos::Verb),
    ("set", Pos::Verb),
    ("include", Pos::Verb),
    ("estimate", Pos::Verb),
    ("denote", Pos::Verb),
    ("obtain", Pos::Verb),
    ("determine", Pos::Verb),
    ("please", Pos::Verb),
    ("know", Pos::Verb),
    ("make", Pos::Verb),
    ("take", Pos::Verb),
    ("give", Pos::Verb),
    ("say", Pos::Verb),
    ("see", Pos::Verb),
    ("go", Pos::Verb),
    ("come", Pos::Verb),
    ("think", Pos::Verb),
    ("use", Pos::Verb),
    // adjectives
    ("separate", Pos::Adj),
    ("equal", Pos::Adj),
    ("decent", Pos::Adj),
    ("main", Pos::Adj),
    ("new", Pos::Adj),
    ("human", Pos::Adj),
    ("necessary", Pos::Adj),
    ("fiscal", Pos::Adj),
    ("annual", Pos::Adj),
    ("domestic", Pos::Adj),
    ("total", Pos::Adj),
    ("average", Pos::Adj),
    ("heavy", Pos::Adj),
    ("light", Pos::Adj),
    ("large", Pos::Adj),
    ("small", Pos::Adj),
    ("simple", Pos::Adj),
    ("correct", Pos::Adj),
    ("same", Pos::Adj),
    ("following", Pos::Adj),
    // adverbs
    ("respectively", Pos::Adv),
    ("approximately", Pos::Adv),
    ("together", Pos::Adv),
    ("therefore", Pos::Adv),
    ("thus", Pos::Adv),
    ("however", Pos::Adv),
    // nouns the heuristics would bend the wrong way
    ("cat", Pos::Noun),
    ("dog", Pos::Noun),
    ("weight", Pos::Noun),
    ("sum", Pos::Noun),
    ("result", Pos::Noun),
    ("value", Pos::Noun),
    ("number", Pos::Noun),
    ("model", Pos::Noun),
    ("unit", Pos::Noun),
    ("yen", Pos::Noun),
    ("cost", Pos::Noun),
    ("price", Pos::Noun),
    ("revenue", Pos::Noun),
    ("inventory", Pos::Noun),
    ("volume", Pos::Noun),
    ("plan", Pos::Noun),
    ("recall", Pos::Noun),
    ("sale", Pos::Noun),
    ("sales", Pos::Noun),
    ("rate", Pos::Noun),
    ("blank", Pos::Noun),
    ("text", Pos::Noun),
    ("question", Pos::Noun),
    ("option", Pos::Noun),
    ("kilogram", Pos::Noun),
    // number words: these carry numeric material, so they group with the
    // numerals and never count as maskable content
    ("thousand", Pos::Number),
    ("million", Pos::Number),
    ("billion", Pos::Number),
    ("trillion", Pos::Number),
    ("zero", Pos::Number),
    ("two", Pos::Number),
    ("three", Pos::Number),
    ("four", Pos::Number),
    ("five", Pos::Number),
    ("six", Pos::Number),
    ("seven", Pos::Number),
    ("eight", Pos::Number),
    ("nine", Pos::Number),
    ("ten", Pos::Number),
    ("eleven", Pos::Number),
    ("twelve", Pos::Number),
    ("thirteen", Pos::Number),
    ("fourteen", Pos::Number),
    ("fifteen", Pos::Number),
    ("sixteen", Pos::Number),
    ("seventeen", Pos::Number),
    ("eighteen", Pos::Number),
    ("nineteen", Pos::Number),
    ("twenty", Pos::Number),
    ("thirty", Pos::Number),
    ("forty", Pos::Number),
    ("fifty", Pos::Number),
    ("sixty", Pos::Number),
    ("seventy", Pos::Number),
    ("eighty", Pos::Number),
    ("ninety", Pos::Number),
    ("hundred", Pos::Number),
    ("first", Pos::Number),
    ("second", Pos::Number),
    ("third", Pos::Number),
    ("fourth", Pos::Number),
    ("fifth", Pos::Number),
    ("sixth", Pos::Number),
    ("seventh", Pos::Number),
    ("eighth", Pos::Number),
    ("ninth", Pos::Number),
    ("tenth", Pos::Number),
];

/// Abstract descriptions for masked words: lemma -> (category, meaning).
/// Words absent from this table receive an empty meaning (a solid mask).
const META_WORDS: &[(&str, &str, &str)] = &[
    ("dog", "Animal", "domestic animal"),
    ("cat", "Animal", "domestic animal"),
    ("weight", "Measurement", "heaviness of an object"),
    ("weigh", "Measurement", "have a certain heaviness"),
    ("kilogram", "Measurement", "unit of mass"),
    ("course", "Concept", "path of events"),
    ("human", "Being", "relating to people"),
    ("event", "Occurrence", "something that happens"),
    ("people", "Group", "human beings"),
    ("band", "Connection", "tie or link"),
    ("power", "Authority", "ability or control"),
    ("earth", "Place", "the world"),
    ("station", "Position", "standing or rank"),
    ("law", "Rule", "binding principle"),
    ("nature", "Concept", "the physical world"),
    ("god", "Individual Name", "higher power"),
    ("respect", "Attitude", "regard or esteem"),
    ("opinion", "Thought", "view or belief"),
    ("mankind", "Group", "humanity as a whole"),
    ("cause", "Reason", "ground for action"),
    ("separation", "Act", "splitting apart"),
    ("declaration", "Document", "formal statement"),
    ("independence", "State", "freedom from control"),
    ("main", "Quality", "most important"),
    ("purpose", "Intent", "reason for existing"),
    ("text", "Document", "written material"),
    ("according", "Relation", "agreement"),
    ("become", "Change", "come to be"),
    ("necessary", "Quality", "required"),
    ("dissolve", "Action", "break apart"),
    ("political", "Quality", "relating to governance"),
    ("assume", "Action", "take on"),
    ("separate", "Quality", "apart from others"),
    ("equal", "Quality", "same in measure"),
    ("entitle", "Action", "give a right to"),
    ("decent", "Quality", "proper"),
    ("require", "Action", "demand"),
    ("declare", "Action", "state formally"),
    ("impel", "Action", "drive forward"),
    ("establish", "Action", "set up"),
    ("government", "Organization", "governing body"),
    ("elect", "Action", "choose by vote"),
    ("president", "Role", "head of state"),
    ("explain", "Action", "make clear"),
    ("war", "Conflict", "armed struggle"),
    ("country", "Place", "nation"),
    ("scooter", "Product", "transportation, vehicle"),
    ("production", "Planning", "making of goods"),
    ("volume", "Quantity", "amount produced"),
    ("plan", "Planning", "intended scheme"),
    ("inventory", "Stock", "goods on hand"),
    ("revenue", "Finance", "income from sales"),
    ("recall", "Procedure", "product return, repair"),
    ("cost", "Finance", "expense"),
    ("part", "Component", "piece of a whole"),
    ("repair", "Procedure", "fixing"),
    ("transportation", "Logistics", "moving of goods"),
    ("expense", "Finance", "money spent"),
    ("sale", "Commerce", "exchange for money"),
    ("sales", "Commerce", "exchange for money"),
    ("price", "Finance", "amount charged"),
    ("unit", "Quantity", "single item"),
    ("rate", "Quantity", "proportion"),
    ("reduction", "Change", "decrease"),
    ("loss", "Finance", "amount forfeited"),
    ("model", "Product", "product variant"),
    ("projected", "Estimate", "forecast"),
    ("fiscal", "Finance", "relating to accounts"),
    ("year", "Time", "twelve months"),
    ("domestic", "Place", "within the country"),
    ("simulate", "Action", "model an outcome"),
    ("simulation", "Analysis", "modeled scenario"),
    ("condition", "Constraint", "governing assumption"),
    ("calculate", "Action", "work out a value"),
    ("subtract", "Action", "take away"),
    ("divide", "Action", "split into parts"),
    ("multiply", "Action", "scale up"),
    ("estimate", "Action", "judge approximately"),
    ("total", "Quantity", "whole amount"),
    ("blank", "Gap", "empty space"),
];

fn function_set() -> &'static HashMap<&'static str, ()> {
    static SET: OnceLock<HashMap<&'static str, ()>> = OnceLock::new();
    SET.get_or_init(|| FUNCTION_WORDS.iter().map(|w| (*w, ())).collect())
}

fn content_map() -> &'static HashMap<&'static str, Pos> {
    static MAP: OnceLock<HashMap<&'static str, Pos>> = OnceLock::new();
    MAP.get_or_init(|| CONTENT_WORDS.iter().copied().collect())
}

fn meta_map() -> &'static HashMap<&'static str, (&'static str, &'static str)> {
    static MAP: OnceLock<HashMap<&'static str, (&'static str, &'static str)>> = OnceLock::new();
    MAP.get_or_init(|| META_WORDS.iter().map(|(w, c, m)| (*w, (*c, *m))).collect())
}

/// True when `word` (already lowercased) belongs to the closed function class.
pub fn is_function_word(word: &str) -> bool {
    function_set().contains_key(word)
}

/// POS for a known content lemma, if the embedded lexicon has an entry.
pub fn content_pos(lemma: &str) -> Option<Pos> {
    content_map().get(lemma).copied()
}

/// (category, meaning) for a lemma, if the embedded description table has one.
pub fn meta_entry(lemma: &str) -> Option<(&'static str, &'static str)> {
    meta_map().get(lemma).copied()
}
