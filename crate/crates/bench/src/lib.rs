//! Fixture builders shared by the benchmark targets.

use maskeval_core::corpus::{CalcGivens, QaItem, SourceTag};
use maskeval_core::masking::MaskMode;
use maskeval_core::runner::{ParsedAnswer, TrialRecord};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CONTENT_WORDS: [&str; 16] = [
    "harvest", "engine", "village", "market", "climate", "forest", "signal", "border", "weight",
    "journey", "station", "library", "mineral", "harbor", "bridge", "meadow",
];
const VERBS: [&str; 8] = [
    "carries", "builds", "measures", "connects", "shapes", "records", "supplies", "follows",
];
const FUNCTION_WORDS: [&str; 10] = [
    "the", "a", "of", "and", "to", "with", "under", "over", "from", "into",
];

/// Deterministic prose: `sentences` sentences of mixed content, verb, and
/// function words, long enough to exercise the tagging and masking paths.
pub fn synthetic_text(sentences: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::new();
    for s in 0..sentences {
        if s > 0 {
            text.push(' ');
        }
        let words = rng.gen_range(8..=14);
        for w in 0..words {
            if w > 0 {
                text.push(' ');
            }
            let word = match w % 3 {
                0 => FUNCTION_WORDS.choose(&mut rng).unwrap(),
                1 => CONTENT_WORDS.choose(&mut rng).unwrap(),
                _ => VERBS.choose(&mut rng).unwrap(),
            };
            if w == 0 {
                let mut chars = word.chars();
                let first = chars.next().unwrap().to_ascii_uppercase();
                text.push(first);
                text.push_str(chars.as_str());
            } else {
                text.push_str(word);
            }
        }
        text.push('.');
    }
    text
}

/// One fixed multiple-choice item over a public-domain excerpt.
pub fn declaration_item() -> QaItem {
    QaItem {
        id: "bench-declaration-q1".to_string(),
        question: "What does a decent respect to the opinions of mankind require?".to_string(),
        options: vec![
            "Declaring the causes of the separation".to_string(),
            "Dissolving the powers of the earth".to_string(),
            "Assuming the political bands".to_string(),
            "Connecting the separate station".to_string(),
        ],
        answer_index: 0,
        evidence: "When in the Course of human events, it becomes necessary for one people \
                   to dissolve the political bands which have connected them with another, \
                   and to assume among the powers of the earth, the separate and equal \
                   station to which the Laws of Nature entitle them, a decent respect to \
                   the opinions of mankind requires that they should declare the causes \
                   which impel them to the separation."
            .to_string(),
        rationale: None,
        source_tag: SourceTag::Uqa,
    }
}

/// The bundled sales-plan given values.
pub fn sales_plan_givens() -> CalcGivens {
    CalcGivens {
        production_2023: 15_840.0,
        production_plan_2024: 27_720.0,
        inventory: 3_960.0,
        planned_revenue: 2_772_000_000.0,
        model_revenue: 1_980_000_000.0,
        recall_unit_cost: 8_000.0,
        reduction_rate: 0.25,
    }
}

/// A full grid of finished question trials: every source, mode, and a
/// six-point rate grid, `trials_per_cell` records each, with a fixed mix
/// of correct, wrong, and missing answers.
pub fn synthetic_qa_records(trials_per_cell: usize) -> Vec<TrialRecord> {
    let mut records = Vec::new();
    for source in SourceTag::ALL {
        for mode in MaskMode::ALL {
            for rate_key in [0u32, 2_000, 4_000, 6_000, 8_000, 10_000] {
                for trial in 0..trials_per_cell {
                    let roll = trial + rate_key as usize / 1_000;
                    let (answer, correct) = if roll.is_multiple_of(5) {
                        (ParsedAnswer::Missing, Some(false))
                    } else if roll.is_multiple_of(3) {
                        (ParsedAnswer::Choice { answer: 2 }, Some(false))
                    } else {
                        (ParsedAnswer::Choice { answer: 1 }, Some(true))
                    };
                    records.push(TrialRecord {
                        item_id: format!("bench-{:03}", trial % 50),
                        source_tag: Some(source),
                        mode,
                        rate_key,
                        trial,
                        masked_count: rate_key as usize / 100,
                        maskable_count: 100,
                        answer,
                        correct,
                        response: None,
                        error: None,
                    });
                }
            }
        }
    }
    records
}
