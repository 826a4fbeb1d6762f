//! Tokenization, normalization and a small rule-based phrase chunker shared by
//! the extraction pipeline and the intent interpreter.

use std::collections::HashSet;

/// A word or punctuation token with byte offsets into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
    pub is_word: bool,
}

/// Part-of-speech class assigned by [`tag_word`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    Det,
    Prep,
    Conj,
    Pron,
    Aux,
    Verb,
    Adv,
    Num,
    Adj,
    Noun,
    Punct,
}

/// Splits text into word tokens (alphanumeric runs, optionally joined by a
/// single `-` or `_`) and single-character punctuation tokens.
pub fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_alphanumeric() {
            let mut j = i + 1;
            loop {
                if j < chars.len() && chars[j].1.is_alphanumeric() {
                    j += 1;
                } else if j + 1 < chars.len()
                    && (chars[j].1 == '-' || chars[j].1 == '_')
                    && chars[j + 1].1.is_alphanumeric()
                {
                    j += 2;
                } else {
                    break;
                }
            }
            let end = if j < chars.len() { chars[j].0 } else { text.len() };
            out.push(Token {
                text: &text[start..end],
                start,
                end,
                is_word: true,
            });
            i = j;
        } else {
            let end = start + c.len_utf8();
            out.push(Token {
                text: &text[start..end],
                start,
                end,
                is_word: false,
            });
            i += 1;
        }
    }
    out
}

const SINGULAR_EXCEPTIONS: &[&str] = &[
    "series", "species", "news", "lens", "always", "perhaps", "sometimes", "nowadays", "towards",
    "afterwards", "besides", "whereas", "thus", "plus", "yes", "dataset's",
];

/// Trailing-s singularization: `networks` → `network`, `libraries` →
/// `library`, `boxes` → `box`. Words ending in `ss`, `us`, `is` or `as` are
/// left alone.
pub fn singularize(word: &str) -> String {
    let w = word;
    if w.len() <= 3 || SINGULAR_EXCEPTIONS.contains(&w) || !w.ends_with('s') {
        return w.to_string();
    }
    if w.ends_with("ss") || w.ends_with("us") || w.ends_with("is") || w.ends_with("as") {
        return w.to_string();
    }
    if let Some(stem) = w.strip_suffix("ies") {
        if stem.len() >= 2 {
            return format!("{stem}y");
        }
    }
    for suffix in ["sses", "ches", "shes", "xes", "zes"] {
        if w.ends_with(suffix) {
            return w[..w.len() - 2].to_string();
        }
    }
    w[..w.len() - 1].to_string()
}

/// Lowercased, singularized alphanumeric sub-tokens of `text`.
pub fn term_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| singularize(&s.to_lowercase()))
        .collect()
}

/// Canonical form of a phrase: lowercase, singularized tokens, single spaces.
pub fn normalize_phrase(text: &str) -> String {
    term_tokens(text).join(" ")
}

/// Lowercase and collapse whitespace without touching word forms.
pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalized Levenshtein similarity in `[0, 1]`.
pub fn similarity(a: &str, b: &str) -> f64 {
    strsim::normalized_levenshtein(a, b)
}

/// Whether `needle` occurs in `haystack` as a contiguous token run.
pub fn contains_token_run(haystack: &[String], needle: &[String]) -> bool {
    count_token_runs(haystack, needle) > 0
}

/// Number of (possibly overlapping) occurrences of `needle` in `haystack`.
pub fn count_token_runs(haystack: &[String], needle: &[String]) -> usize {
    if needle.is_empty() || needle.len() > haystack.len() {
        return 0;
    }
    haystack.windows(needle.len()).filter(|w| *w == needle).count()
}

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "each", "every", "some", "any", "all",
    "no", "its", "their", "our", "your", "his", "her", "my", "such", "both", "either", "neither",
    "another", "other", "many", "much", "few", "several", "most",
];
const PREPOSITIONS: &[&str] = &[
    "of", "in", "on", "at", "for", "with", "by", "from", "to", "into", "onto", "over", "under",
    "about", "as", "via", "through", "across", "between", "within", "without", "than", "per",
    "among", "during", "against", "upon", "like", "after", "before", "while", "if", "because",
    "since", "until", "whether", "unlike", "beyond", "versus", "vs",
];
const CONJUNCTIONS: &[&str] = &["and", "or", "but", "nor", "so", "yet", "then"];
const PRONOUNS: &[&str] = &[
    "it", "they", "we", "you", "i", "he", "she", "them", "us", "which", "who", "whom", "whose",
    "what", "where", "when", "how", "why", "there", "here", "me", "him", "itself", "themselves",
    "one", "ones",
];
const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had", "do", "does",
    "did", "can", "could", "will", "would", "shall", "should", "may", "might", "must", "not",
    "cannot",
];
const ADVERBS: &[&str] = &[
    "very", "also", "only", "just", "more", "less", "well", "often", "too", "even", "still",
    "already", "again", "now", "always", "never", "quite", "rather", "almost", "especially",
    "instead", "however", "therefore", "thus", "further", "out", "up", "down", "off", "away",
];
const VERBS: &[&str] = &[
    "add", "adds", "added", "allow", "allows", "apply", "applies", "build", "builds", "built",
    "classify", "classifies", "compute", "computes", "contain", "contains", "crash", "crashes",
    "detect", "detects", "enable", "enables", "estimate", "estimates", "fit", "fits", "generate",
    "generates", "get", "gets", "give", "gives", "handle", "handles", "help", "helps", "implement",
    "implements", "include", "includes", "including", "learn", "learns", "make", "makes", "need",
    "needs", "offer", "offers", "perform", "performs", "predict", "predicts", "provide",
    "provides", "providing", "reduce", "reduces", "require", "requires", "run", "runs", "segment",
    "segments", "shrink", "shrinks", "support", "supports", "supporting", "take", "takes", "train",
    "trains", "trained", "use", "uses", "used", "using", "work", "works", "worked", "was",
    "combine", "combines", "consist", "consists", "describe", "describes", "produce", "produces",
    "create", "creates", "find", "finds", "map", "maps", "let", "lets", "see", "show", "shows",
    "yield", "yields", "extend", "extends", "improve", "improves", "achieve", "achieves",
    "remain", "remains", "become", "becomes", "try", "tries", "love", "loved", "hate", "hated",
    "install", "installs", "installed", "explain", "explains", "recommend", "recommends", "want",
    "wants", "fail", "fails", "failed", "keep", "keeps", "resist", "resists", "minimize",
    "minimizes", "maximize", "maximizes", "penalize", "penalizes", "capture", "captures", "exist",
    "exists", "rely", "relies", "deal", "deals", "handled", "took", "made", "got", "found",
    "called", "known", "based", "given", "shown", "seen", "done", "written", "wrote", "felt",
];
const NOUN_EXCEPTIONS: &[&str] = &[
    "signal", "interval", "tutorial", "manual", "topic", "logic", "music", "metric", "graphic",
    "clinic", "objective", "alternative", "derivative", "primitive", "archive", "drive",
    "potential", "material", "proposal", "trial", "principal", "arrival", "journal", "portal",
    "terminal", "rival", "animal", "capital", "hospital", "medical", "chemical", "critical",
    "epic", "public", "heuristic", "statistic", "analytic", "classic", "mechanic", "physic",
    "family", "anomaly", "assembly", "supply", "reply", "italy", "monopoly", "speed", "seed",
    "need", "feed", "bed", "red", "embed", "hundred", "ridge", "edge", "bias", "fixed",
    "noise", "exercise", "expertise", "enterprise", "premise", "size",
];
const ADJ_SUFFIXES: &[&str] = &[
    "al", "ic", "ive", "ous", "able", "ible", "ful", "less", "ish", "ed", "ant", "ent",
];
const NOUN_ANT_ENT: &[&str] = &[
    "agent", "gradient", "component", "document", "environment", "element", "experiment",
    "management", "deployment", "development", "measurement", "requirement", "assignment",
    "alignment", "treatment", "assessment", "sentiment", "segment", "content", "client", "event",
    "patient", "student", "parent", "percent", "implement", "statement", "variant", "constant",
    "tenant", "assistant", "participant", "accent", "point", "coefficient", "movement",
    "argument", "instrument", "embedding", "improvement", "enhancement", "intent",
];

/// Assigns a coarse part-of-speech class to one lowercase word.
pub fn tag_word(lower: &str) -> Tag {
    if lower.is_empty() {
        return Tag::Punct;
    }
    if lower.chars().all(|c| c.is_ascii_digit()) {
        return Tag::Num;
    }
    if DETERMINERS.contains(&lower) {
        return Tag::Det;
    }
    if PREPOSITIONS.contains(&lower) {
        return Tag::Prep;
    }
    if CONJUNCTIONS.contains(&lower) {
        return Tag::Conj;
    }
    if PRONOUNS.contains(&lower) {
        return Tag::Pron;
    }
    if AUXILIARIES.contains(&lower) {
        return Tag::Aux;
    }
    if ADVERBS.contains(&lower) {
        return Tag::Adv;
    }
    if VERBS.contains(&lower) {
        return Tag::Verb;
    }
    if NOUN_EXCEPTIONS.contains(&lower) {
        return Tag::Noun;
    }
    let base = lower.strip_suffix('s').unwrap_or(lower);
    if base.ends_with("ify") || base.ends_with("ize") || base.ends_with("ise") {
        return Tag::Verb;
    }
    if lower.len() > 4 && lower.ends_with("ly") {
        return Tag::Adv;
    }
    if lower.contains('-') || lower.contains('_') {
        // Compound modifiers (`outlier-heavy`, `state-of-the-art`) act as
        // nouns so they stay inside a phrase.
        return Tag::Noun;
    }
    if (lower.ends_with("ant") || lower.ends_with("ent"))
        && NOUN_ANT_ENT.contains(&singularize(lower).as_str())
    {
        return Tag::Noun;
    }
    if lower.len() > 4 && ADJ_SUFFIXES.iter().any(|s| lower.ends_with(s)) && !lower.ends_with("eed")
    {
        return Tag::Adj;
    }
    Tag::Noun
}

/// A normalized noun phrase and where it was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseSpan {
    pub phrase: String,
    pub start: usize,
    pub end: usize,
}

/// Longest phrase accepted by [`noun_phrases`], in tokens.
pub const MAX_PHRASE_TOKENS: usize = 8;

/// Deterministic chunker: maximal runs of adjectives/nouns that end in a
/// noun. Phrases are normalized and deduplicated keeping the first span.
pub fn noun_phrases(text: &str) -> Vec<PhraseSpan> {
    noun_phrases_max(text, MAX_PHRASE_TOKENS)
}

/// [`noun_phrases`] keeping at most the last `max_tokens` tokens of a run.
pub fn noun_phrases_max(text: &str, max_tokens: usize) -> Vec<PhraseSpan> {
    let tokens = tokenize(text);
    let tags: Vec<Tag> = tokens
        .iter()
        .map(|t| {
            if t.is_word {
                tag_word(&t.text.to_lowercase())
            } else {
                Tag::Punct
            }
        })
        .collect();
    let mut tags = tags;
    // `a support vector machine`: a verb between a determiner and a noun is
    // a modifier.
    for i in 1..tokens.len().saturating_sub(1) {
        if tags[i] == Tag::Verb && tags[i - 1] == Tag::Det && matches!(tags[i + 1], Tag::Noun | Tag::Adj) {
            tags[i] = Tag::Noun;
        }
    }
    let mut out: Vec<PhraseSpan> = Vec::new();
    let mut seen = HashSet::new();
    let mut i = 0;
    while i < tokens.len() {
        if !matches!(tags[i], Tag::Adj | Tag::Noun) {
            i += 1;
            continue;
        }
        let run_start = i;
        while i < tokens.len() && matches!(tags[i], Tag::Adj | Tag::Noun) {
            i += 1;
        }
        let mut run_end = i;
        while run_end > run_start && tags[run_end - 1] != Tag::Noun {
            run_end -= 1;
        }
        if run_end == run_start {
            continue;
        }
        let first = run_end.saturating_sub(max_tokens.max(1)).max(run_start);
        let start = tokens[first].start;
        let end = tokens[run_end - 1].end;
        let phrase = normalize_phrase(&text[start..end]);
        if phrase.len() < 2 {
            continue;
        }
        if seen.insert(phrase.clone()) {
            out.push(PhraseSpan { phrase, start, end });
        }
    }
    out
}

/// Content words (verbs, adverbs, nouns, adjectives) that are not covered by
/// any of `phrases`, in order of appearance.
pub fn content_words_outside(text: &str, phrases: &[PhraseSpan]) -> Vec<PhraseSpan> {
    let mut out = Vec::new();
    for t in tokenize(text) {
        if !t.is_word {
            continue;
        }
        if phrases.iter().any(|p| t.start >= p.start && t.end <= p.end) {
            continue;
        }
        let lower = t.text.to_lowercase();
        if matches!(tag_word(&lower), Tag::Verb | Tag::Adv | Tag::Adj | Tag::Noun) {
            out.push(PhraseSpan {
                phrase: normalize_phrase(t.text),
                start: t.start,
                end: t.end,
            });
        }
    }
    out
}

/// Rule-based sentence boundaries: a terminator (`.`, `!`, `?`) followed by
/// whitespace and an uppercase letter. Returned ranges are trimmed byte
/// offsets into `text`.
pub fn split_sentences(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut bounds = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let mut j = i + 1;
            // Runs of terminators ("?!", "...") belong to the same sentence.
            while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?') {
                j += 1;
            }
            let mut k = j;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            if k > j && k < chars.len() && chars[k].1.is_uppercase() {
                let end = if j < chars.len() { chars[j].0 } else { text.len() };
                bounds.push((start, end));
                start = chars[k].0;
                i = k;
                continue;
            }
            let _ = pos;
            i = j;
            continue;
        }
        i += 1;
    }
    bounds.push((start, text.len()));
    bounds
        .into_iter()
        .filter_map(|(s, e)| {
            let slice = &text[s..e];
            let lead = slice.len() - slice.trim_start().len();
            let trimmed = slice.trim();
            if trimmed.is_empty() {
                None
            } else {
                Some((s + lead, s + lead + trimmed.len()))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phrases(text: &str) -> Vec<String> {
        noun_phrases(text).into_iter().map(|p| p.phrase).collect()
    }

    #[test]
    fn singularize_rules() {
        assert_eq!(singularize("networks"), "network");
        assert_eq!(singularize("libraries"), "library");
        assert_eq!(singularize("regression"), "regression");
        assert_eq!(singularize("classes"), "class");
        assert_eq!(singularize("bias"), "bias");
        assert_eq!(singularize("analysis"), "analysis");
        assert_eq!(singularize("svms"), "svm");
        assert_eq!(singularize("gas"), "gas");
    }

    #[test]
    fn tokenizer_joins_hyphenated_words() {
        let toks: Vec<_> = tokenize("outlier-heavy data, L2!")
            .into_iter()
            .map(|t| t.text)
            .collect();
        assert_eq!(toks, vec!["outlier-heavy", "data", ",", "L2", "!"]);
    }

    #[test]
    fn ridge_sentence_yields_two_phrases() {
        assert_eq!(
            phrases("Ridge regression adds an L2 penalty"),
            vec!["ridge regression", "l2 penalty"]
        );
    }

    #[test]
    fn plural_head_is_stripped() {
        assert_eq!(
            phrases("supports convolutional neural networks"),
            vec!["convolutional neural network"]
        );
    }

    #[test]
    fn verb_after_determiner_is_a_modifier() {
        assert_eq!(phrases("A support vector machine is effective."), vec!["support vector machine"]);
        assert_eq!(phrases("It supports vector input."), vec!["vector input"]);
    }

    #[test]
    fn empty_text_has_no_phrases() {
        assert!(phrases("").is_empty());
    }

    #[test]
    fn intent_sentence_phrases_and_words() {
        let text = "classify skin lesions in dermoscopic images with limited memory";
        let ps = noun_phrases(text);
        let names: Vec<_> = ps.iter().map(|p| p.phrase.as_str()).collect();
        assert_eq!(names, vec!["skin lesion", "dermoscopic image", "limited memory"]);
        let words: Vec<_> = content_words_outside(text, &ps)
            .into_iter()
            .map(|p| p.phrase)
            .collect();
        assert_eq!(words, vec!["classify"]);
    }

    #[test]
    fn duplicate_phrase_keeps_first_span() {
        let ps = noun_phrases("Random forests work. A random forest helps.");
        assert_eq!(ps.len(), 1);
        assert_eq!(ps[0].start, 0);
    }

    #[test]
    fn overlong_run_keeps_last_eight_tokens() {
        let text = "alpha beta gamma delta epsilon zeta theta iota kappa lambda";
        let ps = noun_phrases(text);
        assert_eq!(ps[0].phrase.split(' ').count(), MAX_PHRASE_TOKENS);
        assert!(ps[0].phrase.ends_with("lambda"));
    }

    #[test]
    fn sentence_split_requires_capital() {
        let text = "Training was slow. it was fine. The API is good!  Great docs";
        let got: Vec<_> = split_sentences(text)
            .into_iter()
            .map(|(s, e)| &text[s..e])
            .collect();
        assert_eq!(
            got,
            vec!["Training was slow. it was fine.", "The API is good!", "Great docs"]
        );
    }

    #[test]
    fn token_runs() {
        let hay = term_tokens("robust multivariate regression for robust data");
        assert_eq!(count_token_runs(&hay, &term_tokens("robust")), 2);
        assert!(contains_token_run(&hay, &term_tokens("multivariate regressions")));
        assert!(!contains_token_run(&hay, &term_tokens("robust regression")));
    }
}
