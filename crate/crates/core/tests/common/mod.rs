//! Shared fixtures and helpers for the integration tests.
#![allow(dead_code)] // each test target uses a different subset

use std::path::PathBuf;

use maskeval_core::annotation::RuleTagger;
use maskeval_core::corpus::{self, QaItem, SourceTag};
use maskeval_core::masking::meta::LexiconMeta;
use maskeval_core::CalcTask;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

pub fn load_qa_fixture() -> Vec<QaItem> {
    corpus::load_qa_jsonl(&fixture_path("qa_small.jsonl")).expect("qa_small.jsonl loads")
}

pub fn load_calc_fixture() -> CalcTask {
    let tasks = corpus::load_calc_jsonl(&fixture_path("calc_sales_plan.jsonl"))
        .expect("calc_sales_plan.jsonl loads");
    assert_eq!(tasks.len(), 1);
    tasks.into_iter().next().unwrap()
}

pub fn qa_item(items: &[QaItem], id: &str) -> QaItem {
    items
        .iter()
        .find(|item| item.id == id)
        .unwrap_or_else(|| panic!("fixture item {id} present"))
        .clone()
}

pub fn tagger() -> RuleTagger {
    RuleTagger::new()
}

/// Meta generator with no extra solid masks; lexicon gaps still go solid.
pub fn meta() -> LexiconMeta {
    LexiconMeta::default()
}

/// Compare `actual` against the golden file, or rewrite the file when
/// UPDATE_GOLDEN=1 is set.
pub fn assert_golden(name: &str, actual: &str) {
    let path = golden_path(name);
    if std::env::var("UPDATE_GOLDEN").as_deref() == Ok("1") {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("golden file {} unreadable ({e}); run with UPDATE_GOLDEN=1 to create it", path.display()));
    if expected != actual {
        let mismatch = expected
            .lines()
            .zip(actual.lines())
            .position(|(e, a)| e != a)
            .map(|i| i + 1)
            .unwrap_or_else(|| expected.lines().count().min(actual.lines().count()) + 1);
        panic!(
            "{name} differs from golden file (first differing line {mismatch});\n--- golden\n{expected}\n--- actual\n{actual}"
        );
    }
}

/// A small synthetic corpus of self-contained definition questions. Every
/// item carries a passage that names the correct option outright, so a
/// text-reading oracle has everything it needs.
pub fn synthetic_qa_corpus(n: usize) -> Vec<QaItem> {
    let subjects = [
        ("harbor", "a sheltered body of water where ships anchor"),
        ("granary", "a building for storing harvested grain"),
        ("aqueduct", "a channel built to carry water across land"),
        ("observatory", "a building that houses telescopes"),
        ("foundry", "a workshop where metal is cast"),
        ("archive", "a place where records are preserved"),
        ("orchard", "a plot of land planted with fruit trees"),
        ("quarry", "a site where stone is cut from the ground"),
        ("reservoir", "a lake that stores water for a city"),
        ("lighthouse", "a tower with a light that guides ships"),
    ];
    let fillers = [
        "a machine for weaving cloth",
        "a vehicle that travels on rails",
        "a garment worn in cold weather",
    ];
    (0..n)
        .map(|i| {
            let (word, meaning) = subjects[i % subjects.len()];
            let answer_index = i % 4;
            let mut options: Vec<String> = fillers.iter().map(|f| f.to_string()).collect();
            options.insert(answer_index, meaning.to_string());
            QaItem {
                id: format!("syn-{i:03}"),
                question: format!("According to the passage, what is the {word} number {i}?"),
                options,
                answer_index,
                evidence: format!(
                    "Travelers often visit the {word} number {i}. The {word} is {meaning}, \
and the town maintains it with care."
                ),
                rationale: None,
                source_tag: SourceTag::Uqa,
            }
        })
        .collect()
}
