//! Deterministic rule-based tokenizer, POS tagger, and lemmatizer.

use super::lexicon;
use super::{AnnotatedToken, AnnotationError, Pos, Span, Tagger};

/// Rule-based tagger: tokenizes on character classes, then classifies each
/// token through a fixed cascade (function-word list, embedded lexicon,
/// capitalization, suffix heuristics). Identical input always produces an
/// identical annotation.
#[derive(Debug, Clone, Default)]
pub struct RuleTagger;

impl RuleTagger {
    pub fn new() -> Self {
        RuleTagger
    }
}

impl Tagger for RuleTagger {
    fn annotate(&self, text: &str) -> Result<Vec<AnnotatedToken>, AnnotationError> {
        Ok(tokenize(text)
            .into_iter()
            .map(|raw| {
                let surface = &text[raw.span.start..raw.span.end];
                classify(surface, raw.span, raw.compound)
            })
            .collect())
    }
}

struct RawToken {
    span: Span,
    compound: bool,
}

/// True when the character can sit inside a word/number token.
fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Split text into word, number, and symbol tokens. Words keep internal
/// apostrophes ("Nature's") and hyphens when the left side already contains
/// a letter ("ZX-1000", "post-recall"); digit runs keep thousands separators
/// and decimal points ("15,840.00"). Every other non-whitespace character is
/// its own symbol token.
fn tokenize(text: &str) -> Vec<RawToken> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let n = chars.len();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < n {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if is_token_char(c) {
            let mut has_alpha = c.is_alphabetic();
            let mut compound = false;
            let mut j = i + 1;
            while j < n {
                let cj = chars[j].1;
                if is_token_char(cj) {
                    has_alpha |= cj.is_alphabetic();
                    j += 1;
                } else if j + 1 < n
                    && (((cj == ',' || cj == '.')
                        && chars[j - 1].1.is_ascii_digit()
                        && chars[j + 1].1.is_ascii_digit())
                        || ((cj == '\'' || cj == '\u{2019}')
                            && chars[j - 1].1.is_alphabetic()
                            && chars[j + 1].1.is_alphabetic()))
                {
                    // digit group separators and in-word apostrophes stay
                    // inside the token
                    j += 2;
                } else if cj == '-' && has_alpha && j + 1 < n && is_token_char(chars[j + 1].1) {
                    compound = true;
                    j += 2;
                    while j < n && is_token_char(chars[j].1) {
                        j += 1;
                    }
                    // allow multi-part compounds ("state-of-the-art")
                    if j < n && chars[j].1 == '-' && j + 1 < n && is_token_char(chars[j + 1].1) {
                        continue;
                    }
                    break;
                } else {
                    break;
                }
            }
            let end = chars[j - 1].0 + chars[j - 1].1.len_utf8();
            tokens.push(RawToken {
                span: Span { start, end },
                compound,
            });
            i = j;
        } else {
            tokens.push(RawToken {
                span: Span {
                    start,
                    end: start + c.len_utf8(),
                },
                compound: false,
            });
            i += 1;
        }
    }
    tokens
}

/// True when the surface is numeric material: digits plus separators.
pub(crate) fn is_numeric_surface(surface: &str) -> bool {
    let mut saw_digit = false;
    for c in surface.chars() {
        if c.is_ascii_digit() {
            saw_digit = true;
        } else if c != ',' && c != '.' {
            return false;
        }
    }
    saw_digit
}

fn classify(surface: &str, span: Span, compound: bool) -> AnnotatedToken {
    let first = surface.chars().next().unwrap_or(' ');
    let pos;
    let lemma;
    if is_numeric_surface(surface) {
        pos = Pos::Number;
        lemma = surface.to_string();
    } else if !first.is_alphanumeric() && surface.chars().count() == 1 {
        pos = Pos::Symbol;
        lemma = surface.to_string();
    } else {
        let lower = surface.to_lowercase();
        if lexicon::is_function_word(&lower) {
            pos = Pos::Function;
            lemma = lower;
        } else {
            let stem = lemmatize(&lower);
            pos = content_pos(surface, &lower, &stem, compound);
            lemma = stem;
        }
    }
    AnnotatedToken {
        surface: surface.to_string(),
        lemma,
        pos,
        span,
        compound,
    }
}

fn content_pos(surface: &str, lower: &str, lemma: &str, compound: bool) -> Pos {
    if let Some(pos) = lexicon::content_pos(lemma) {
        return pos;
    }
    if compound {
        // hyphenated compounds: model-number style (digits or inner capitals)
        // reads as a proper name, plain word pairs as a modifier
        let named = surface.chars().any(|c| c.is_ascii_digit())
            || surface.chars().skip(1).any(|c| c.is_uppercase());
        return if named { Pos::Propn } else { Pos::Adj };
    }
    let chars: Vec<char> = surface.chars().collect();
    if chars.len() >= 2 && chars.iter().all(|c| !c.is_alphabetic() || c.is_uppercase()) {
        return Pos::Propn; // acronyms: "NR", "GDP"
    }
    if chars[0].is_uppercase() {
        return Pos::Propn;
    }
    if chars.len() == 1 {
        return Pos::Noun; // bare variable letters pattern as nouns
    }
    for (suffixes, pos) in [
        (&["ly"][..], Pos::Adv),
        (&["ing", "ed"][..], Pos::Verb),
        (
            &["tion", "sion", "ment", "ness", "ity", "ship", "hood", "ance", "ence", "ion"][..],
            Pos::Noun,
        ),
        (
            &["ful", "less", "ous", "ive", "able", "ible", "al", "ic", "ish", "ary"][..],
            Pos::Adj,
        ),
    ] {
        for suffix in suffixes {
            if lower.ends_with(suffix) || lemma.ends_with(suffix) {
                return pos;
            }
        }
    }
    Pos::Noun
}

/// Lowercased surface reduced by a small fixed suffix set: possessives,
/// plural -s/-es (with sibilant stems), and verbal -ing/-ed with doubled
/// consonants undoubled and a restored final -e for short stems. The output
/// is a deterministic grouping key, not a dictionary citation form.
pub fn lemmatize(lower: &str) -> String {
    let w = lower
        .strip_suffix("'s")
        .or_else(|| lower.strip_suffix("\u{2019}s"))
        .unwrap_or(lower);
    let len = w.chars().count();
    if len < 3 || w.chars().any(|c| c.is_ascii_digit()) {
        return w.to_string();
    }
    if len > 4 {
        if let Some(stem) = w.strip_suffix("ies").or_else(|| w.strip_suffix("ied")) {
            return format!("{stem}y");
        }
    }
    if len > 3 {
        if let Some(stem) = w.strip_suffix("es") {
            if ["ss", "x", "z", "ch", "sh", "o"]
                .iter()
                .any(|ending| stem.ends_with(ending))
            {
                return stem.to_string();
            }
        }
    }
    if len > 3
        && w.ends_with('s')
        && !w.ends_with("ss")
        && !w.ends_with("us")
        && !w.ends_with("is")
    {
        return w[..w.len() - 1].to_string();
    }
    if len > 5 {
        if let Some(stem) = w.strip_suffix("ing") {
            return strip_verbal(stem);
        }
    }
    if len > 4 {
        if let Some(stem) = w.strip_suffix("ed") {
            return strip_verbal(stem);
        }
    }
    w.to_string()
}

/// Consonant handling shared by -ing/-ed stripping.
fn strip_verbal(stem: &str) -> String {
    let chars: Vec<char> = stem.chars().collect();
    let n = chars.len();
    if n >= 3 && chars[n - 1] == chars[n - 2] && !matches!(chars[n - 1], 'l' | 's' | 'e') {
        return chars[..n - 1].iter().collect(); // running -> run
    }
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u');
    if n >= 3
        && !is_vowel(chars[n - 1])
        && is_vowel(chars[n - 2])
        && !is_vowel(chars[n - 3])
        && !matches!(chars[n - 1], 'w' | 'x' | 'y')
    {
        return format!("{stem}e"); // estimat -> estimate
    }
    stem.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tag(text: &str) -> Vec<AnnotatedToken> {
        RuleTagger::new().annotate(text).unwrap()
    }

    #[test]
    fn tags_simple_sentence() {
        let tokens = tag("The cat sleeps.");
        let kinds: Vec<(&str, Pos)> = tokens.iter().map(|t| (t.surface.as_str(), t.pos)).collect();
        assert_eq!(
            kinds,
            vec![
                ("The", Pos::Function),
                ("cat", Pos::Noun),
                ("sleeps", Pos::Verb),
                (".", Pos::Symbol),
            ]
        );
        assert_eq!(tokens[2].lemma, "sleep");
    }

    #[test]
    fn hyphenated_model_number_is_one_proper_noun() {
        let tokens = tag("the ZX-1000 model");
        assert_eq!(tokens[1].surface, "ZX-1000");
        assert_eq!(tokens[1].pos, Pos::Propn);
        assert!(tokens[1].compound);
    }

    #[test]
    fn numerals_keep_separators() {
        let tokens = tag("2023 Production Volume: 15,840.00 units");
        let numbers: Vec<&str> = tokens
            .iter()
            .filter(|t| t.pos == Pos::Number)
            .map(|t| t.surface.as_str())
            .collect();
        assert_eq!(numbers, vec!["2023", "15,840.00"]);
    }

    #[test]
    fn number_scale_words_are_numeric() {
        let tokens = tag("2,772.00 million yen");
        assert_eq!(tokens[1].surface, "million");
        assert_eq!(tokens[1].pos, Pos::Number);
        assert_eq!(tokens[2].pos, Pos::Noun);
    }

    #[test]
    fn possessives_share_the_base_lemma() {
        let tokens = tag("Nature's God");
        assert_eq!(tokens[0].surface, "Nature's");
        assert_eq!(tokens[0].lemma, "nature");
    }

    #[test]
    fn spans_reconstruct_source() {
        let text = "When in the Course of human events, it becomes necessary \u{2014} 25-31%.";
        let tokens = tag(text);
        let mut prev = 0usize;
        for t in &tokens {
            assert!(t.span.start >= prev, "overlap at {:?}", t.span);
            assert_eq!(&text[t.span.start..t.span.end], t.surface);
            assert!(text[prev..t.span.start].chars().all(char::is_whitespace));
            prev = t.span.end;
        }
    }

    #[test]
    fn range_expressions_split_on_hyphen() {
        let tokens = tag("problems 25-31");
        let surfaces: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(surfaces, vec!["problems", "25", "-", "31"]);
    }

    #[test]
    fn lemma_rules() {
        for (surface, lemma) in [
            ("dogs", "dog"),
            ("boxes", "box"),
            ("bodies", "body"),
            ("causes", "cause"),
            ("running", "run"),
            ("connected", "connect"),
            ("estimated", "estimate"),
            ("carried", "carry"),
            ("classes", "class"),
            ("weighs", "weigh"),
        ] {
            assert_eq!(lemmatize(surface), lemma, "surface {surface}");
        }
    }

    #[test]
    fn suffix_heuristics() {
        let tokens = tag("according quickly political separation");
        let poses: Vec<Pos> = tokens.iter().map(|t| t.pos).collect();
        assert_eq!(poses, vec![Pos::Verb, Pos::Adv, Pos::Adj, Pos::Noun]);
    }

    #[test]
    fn acronyms_and_capitals_read_as_proper_nouns() {
        let tokens = tag("Declaration NR");
        assert_eq!(tokens[0].pos, Pos::Propn);
        assert_eq!(tokens[1].pos, Pos::Propn);
    }

    #[test]
    fn annotation_is_deterministic() {
        let text = "The 2024 Production Plan of the ZX-1000 weighs 15,840.00 units.";
        assert_eq!(tag(text), tag(text));
    }
}
