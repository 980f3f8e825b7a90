//! Meta-information generation: filling the code table with POS labels,
//! categories, and abstract meanings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::annotation::{meta_entry, AnnotatedToken, Pos};
use crate::llm::{extract_json_objects, Completer, CompletionRequest};
use crate::seed;

use super::{CodeAssignment, MaskCode, MaskMode, MaskingError};

/// Category and meaning produced for one lemma.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaDescription {
    pub category: String,
    /// Empty meaning produces a solid mask.
    pub meaning: String,
}

/// Description backend. Implementations must be a pure function of
/// `(lemma, pos)` so that code tables stay order-independent.
pub trait MetaGenerator {
    fn describe(&self, lemma: &str, pos: Pos) -> Result<MetaDescription, MaskingError>;
}

/// Tally of the description pass over one document.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationReport {
    /// Codes in the table before any lifting.
    pub total: usize,
    /// Codes whose generated meaning came back empty (solid masks),
    /// including failed generations.
    pub solid: usize,
    /// Generator errors (transport failures and unparseable output).
    pub failed: usize,
}

impl GenerationReport {
    pub fn merge(&self, other: &GenerationReport) -> GenerationReport {
        GenerationReport {
            total: self.total + other.total,
            solid: self.solid + other.solid,
            failed: self.failed + other.failed,
        }
    }
}

/// Default category per POS when the lexicon has no entry.
pub fn default_category(pos: Pos) -> &'static str {
    match pos {
        Pos::Noun => "General",
        Pos::Propn => "Proper Noun",
        Pos::Verb => "Action",
        Pos::Adj => "Quality",
        Pos::Adv => "Manner",
        _ => "",
    }
}

/// Fill the code table: POS labels from the covered tokens (first-seen POS
/// first, further POS comma-appended), category and meaning from the
/// generator. Generator failures degrade to solid masks rather than failing
/// the pipeline; STRICT mode blanks every meaning after generation.
pub fn generate_meta(
    tokens: &[AnnotatedToken],
    assignment: &CodeAssignment,
    generator: &dyn MetaGenerator,
    mode: MaskMode,
) -> (Vec<MaskCode>, GenerationReport) {
    let mut table = Vec::with_capacity(assignment.codes.len());
    let mut report = GenerationReport::default();
    for skeleton in &assignment.codes {
        let mut labels: Vec<&'static str> = Vec::new();
        for &idx in &skeleton.token_indices {
            let label = tokens[idx].pos.label();
            if !labels.contains(&label) {
                labels.push(label);
            }
        }
        let first_pos = skeleton
            .token_indices
            .first()
            .map(|&idx| tokens[idx].pos)
            .unwrap_or(Pos::Other);
        let description = match generator.describe(&skeleton.lemma, first_pos) {
            Ok(description) => description,
            Err(_) => {
                report.failed += 1;
                MetaDescription {
                    category: default_category(first_pos).to_string(),
                    meaning: String::new(),
                }
            }
        };
        if description.meaning.is_empty() {
            report.solid += 1;
        }
        let meaning = if mode == MaskMode::Strict {
            String::new()
        } else {
            description.meaning
        };
        report.total += 1;
        table.push(MaskCode {
            code: skeleton.code.clone(),
            lemma: skeleton.lemma.clone(),
            pos_label: labels.join(", "),
            category: description.category,
            meaning,
        });
    }
    (table, report)
}

/// Deterministic generator backed by the embedded description lexicon.
/// Lemmas without an entry become solid masks; `solid_probability` blanks
/// further meanings at a seeded per-lemma coin flip, which lets tests and
/// simulations control the solid-mask share.
#[derive(Debug, Clone)]
pub struct LexiconMeta {
    pub solid_probability: f64,
    pub seed: u64,
}

impl LexiconMeta {
    pub fn new(solid_probability: f64, seed: u64) -> Self {
        LexiconMeta {
            solid_probability,
            seed,
        }
    }
}

impl Default for LexiconMeta {
    fn default() -> Self {
        LexiconMeta::new(0.0, 0)
    }
}

impl MetaGenerator for LexiconMeta {
    fn describe(&self, lemma: &str, pos: Pos) -> Result<MetaDescription, MaskingError> {
        let (category, meaning) = match meta_entry(lemma) {
            Some((category, meaning)) => (category.to_string(), meaning.to_string()),
            None => (default_category(pos).to_string(), String::new()),
        };
        let meaning = if self.solid_probability > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(self.seed, &["meta", lemma]));
            if rng.gen::<f64>() < self.solid_probability {
                String::new()
            } else {
                meaning
            }
        } else {
            meaning
        };
        Ok(MetaDescription { category, meaning })
    }
}

/// Generator that asks a completion backend for each description. Responses
/// must contain a JSON object with `category` and `meaning` strings; any
/// failure surfaces as an error, which [`generate_meta`] converts into a
/// solid mask and counts in the report.
pub struct LlmMeta<'a> {
    completer: &'a dyn Completer,
}

impl<'a> LlmMeta<'a> {
    pub fn new(completer: &'a dyn Completer) -> Self {
        LlmMeta { completer }
    }

    fn prompt(lemma: &str, pos: Pos) -> String {
        format!(
            "Give abstract meta-information for the word '{lemma}' used as {pos}. \
Respond in JSON format as {{\"category\": str, \"meaning\": str}} where meaning is a short \
abstract paraphrase that does not use the word itself."
        )
    }
}

impl MetaGenerator for LlmMeta<'_> {
    fn describe(&self, lemma: &str, pos: Pos) -> Result<MetaDescription, MaskingError> {
        let request = CompletionRequest {
            prompt: Self::prompt(lemma, pos),
            tag: format!("meta/{lemma}"),
            oracle_hint: None,
        };
        let raw = self
            .completer
            .complete(&request)
            .map_err(|err| MaskingError::Meta {
                lemma: lemma.to_string(),
                message: err.to_string(),
            })?;
        for value in extract_json_objects(&raw) {
            let (category, meaning) = (
                value.get("category").and_then(|v| v.as_str()),
                value.get("meaning").and_then(|v| v.as_str()),
            );
            if let (Some(category), Some(meaning)) = (category, meaning) {
                return Ok(MetaDescription {
                    category: category.trim().to_string(),
                    meaning: meaning.trim().to_string(),
                });
            }
        }
        Err(MaskingError::Meta {
            lemma: lemma.to_string(),
            message: format!("no JSON object with category/meaning in response: {raw:.60}"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{annotate, RuleTagger};
    use crate::llm::ClientError;
    use crate::masking::assign_codes;

    fn setup(text: &str, selection: &[usize]) -> (Vec<AnnotatedToken>, CodeAssignment) {
        let tokens = annotate(text, &RuleTagger::new()).unwrap();
        let assignment = assign_codes(&tokens, selection, selection, "r").unwrap();
        (tokens, assignment)
    }

    #[test]
    fn lexicon_entry_fills_category_and_meaning() {
        let (tokens, assignment) = setup("the dog barks", &[1]);
        let (table, report) = generate_meta(
            &tokens,
            &assignment,
            &LexiconMeta::default(),
            MaskMode::Regular,
        );
        assert_eq!(table[0].category, "Animal");
        assert_eq!(table[0].meaning, "domestic animal");
        assert_eq!(report.solid, 0);
    }

    #[test]
    fn unknown_lemma_degrades_to_a_solid_mask_with_pos_category() {
        let (tokens, assignment) = setup("the zorblax hums", &[1]);
        let (table, report) = generate_meta(
            &tokens,
            &assignment,
            &LexiconMeta::default(),
            MaskMode::Regular,
        );
        assert_eq!(table[0].category, "General");
        assert!(table[0].is_solid());
        assert_eq!(report.solid, 1);
    }

    #[test]
    fn solid_probability_one_blanks_everything() {
        let (tokens, assignment) = setup("the dog chases the cat", &[1, 4]);
        let (table, report) = generate_meta(
            &tokens,
            &assignment,
            &LexiconMeta::new(1.0, 7),
            MaskMode::Regular,
        );
        assert!(table.iter().all(MaskCode::is_solid));
        assert_eq!(report.solid, 2);
        // category survives blanking
        assert_eq!(table[0].category, "Animal");
    }

    #[test]
    fn pos_label_lists_first_seen_pos_first() {
        use crate::annotation::Span;
        // same lemma under two POS: the verb occurrence comes first, so the
        // label reads "VERB, NOUN"
        let token = |surface: &str, pos, start: usize| AnnotatedToken {
            surface: surface.to_string(),
            lemma: "equal".to_string(),
            pos,
            span: Span::new(start, start + surface.len()),
            compound: false,
        };
        let tokens = vec![
            token("equals", Pos::Verb, 0),
            token("equal", Pos::Noun, 7),
        ];
        let assignment = assign_codes(&tokens, &[0, 1], &[0, 1], "r").unwrap();
        let (table, _) = generate_meta(
            &tokens,
            &assignment,
            &LexiconMeta::default(),
            MaskMode::Regular,
        );
        assert_eq!(table.len(), 1, "one lemma, one code");
        assert_eq!(table[0].pos_label, "VERB, NOUN");
    }

    #[test]
    fn strict_mode_blanks_after_generation() {
        let (tokens, assignment) = setup("the dog barks", &[1]);
        let (table, report) = generate_meta(
            &tokens,
            &assignment,
            &LexiconMeta::default(),
            MaskMode::Strict,
        );
        assert!(table[0].is_solid());
        assert_eq!(table[0].category, "Animal");
        assert_eq!(report.solid, 0, "strict blanking is not a generation failure");
    }

    struct Scripted(&'static str);

    impl Completer for Scripted {
        fn complete(&self, _request: &CompletionRequest) -> Result<String, ClientError> {
            Ok(self.0.to_string())
        }
    }

    struct Failing;

    impl Completer for Failing {
        fn complete(&self, _request: &CompletionRequest) -> Result<String, ClientError> {
            Err(ClientError::Transport {
                message: "connection reset".into(),
                attempts: 3,
            })
        }
    }

    #[test]
    fn llm_generator_parses_json_descriptions() {
        let backend = Scripted(r#"Sure! {"category": "Animal", "meaning": "four-legged pet"}"#);
        let generator = LlmMeta::new(&backend);
        let description = generator.describe("dog", Pos::Noun).unwrap();
        assert_eq!(description.category, "Animal");
        assert_eq!(description.meaning, "four-legged pet");
    }

    #[test]
    fn llm_failures_become_counted_solid_masks() {
        let (tokens, assignment) = setup("the dog barks", &[1]);
        let generator = LlmMeta::new(&Failing);
        let (table, report) = generate_meta(&tokens, &assignment, &generator, MaskMode::Regular);
        assert!(table[0].is_solid());
        assert_eq!(report.failed, 1);
        assert_eq!(report.solid, 1);
    }
}
