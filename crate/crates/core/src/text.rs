//! Segmentation and counting for Turkish (exact) and English (heuristic) text.
//!
//! Turkish syllables are counted as vowels: every Turkish syllable carries
//! exactly one vowel, so the count is exact and additive over concatenation.
//! English uses the usual vowel-group heuristic with a silent-e correction.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Turkish,
    English,
}

impl FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tr" | "turkish" => Ok(Language::Turkish),
            "en" | "english" => Ok(Language::English),
            other => Err(format!("unknown language '{other}' (expected turkish or english)")),
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Language::Turkish => "turkish",
            Language::English => "english",
        })
    }
}

/// Which words count as "hard" for the proportion-of-hard-words statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardWordRule {
    /// Every word with three or more syllables.
    #[default]
    Polysyllabic,
    /// As `Polysyllabic`, but in English a three-syllable word whose third
    /// syllable comes only from an `-ed`/`-es` suffix is not hard.
    Gunning,
}

/// Lowercases with Turkish rules: `I` → `ı`, `İ` → `i`.
pub fn turkish_lowercase(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            'I' => out.push('ı'),
            'İ' => out.push('i'),
            _ => out.extend(c.to_lowercase()),
        }
    }
    out
}

fn is_turkish_vowel(c: char) -> bool {
    matches!(
        c,
        'a' | 'e' | 'ı' | 'i' | 'o' | 'ö' | 'u' | 'ü' | 'A' | 'E' | 'I' | 'İ' | 'O' | 'Ö' | 'U' | 'Ü'
    )
}

/// Number of Turkish vowels in `word`.
pub fn count_syllables_turkish(word: &str) -> usize {
    word.chars().filter(|&c| is_turkish_vowel(c)).count()
}

fn is_english_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel-group heuristic: maximal runs of `a e i o u y`, minus one for a
/// terminal silent `e` (kept for consonant + `le`), floor of 1 for any word
/// with a letter.
pub fn count_syllables_english(word: &str) -> usize {
    let letters: Vec<char> = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(|c| c.to_lowercase())
        .collect();
    if letters.is_empty() {
        return 0;
    }
    let mut groups = 0usize;
    let mut in_group = false;
    for &c in &letters {
        let v = is_english_vowel(c);
        if v && !in_group {
            groups += 1;
        }
        in_group = v;
    }
    let n = letters.len();
    if n >= 2 && letters[n - 1] == 'e' && !is_english_vowel(letters[n - 2]) {
        let consonant_le = letters[n - 2] == 'l' && n >= 3 && !is_english_vowel(letters[n - 3]);
        if !consonant_le {
            groups = groups.saturating_sub(1);
        }
    }
    groups.max(1)
}

pub fn count_syllables(word: &str, language: Language) -> usize {
    match language {
        Language::Turkish => count_syllables_turkish(word),
        Language::English => count_syllables_english(word),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WordToken {
    /// Surface form with leading/trailing punctuation removed.
    pub surface: String,
    /// Alphabetic characters only.
    pub char_count: usize,
    pub syllable_count: usize,
}

/// Whitespace tokenization with edge punctuation stripped. Internal
/// apostrophes and hyphens stay inside the word (`İstanbul'da` is one
/// token); tokens without any letter are dropped.
pub fn tokenize_words(sentence: &str, language: Language) -> Vec<WordToken> {
    sentence
        .split_whitespace()
        .filter_map(|raw| {
            let surface = raw.trim_matches(|c: char| !c.is_alphanumeric());
            let char_count = surface.chars().filter(|c| c.is_alphabetic()).count();
            (char_count > 0).then(|| WordToken {
                surface: surface.to_string(),
                char_count,
                syllable_count: count_syllables(surface, language),
            })
        })
        .collect()
}

const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "dr.", "prof.", "doç.", "yrd.", "av.", "op.", "vb.", "vs.", "bkz.", "örn.", "sn.", "no.",
    "mr.", "mrs.", "ms.", "st.", "etc.", "e.g.", "i.e.",
];

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '…')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '»' | '”' | '’')
}

/// Terminator-based sentence splitter with an abbreviation list and a
/// decimal-number guard.
#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: HashSet<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        Self::with_abbreviations(DEFAULT_ABBREVIATIONS.iter().copied())
    }
}

impl SentenceSplitter {
    /// Abbreviations are matched case-insensitively and include their final dot.
    pub fn with_abbreviations<I, S>(abbreviations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            abbreviations: abbreviations
                .into_iter()
                .map(|a| turkish_lowercase(a.as_ref().trim()))
                .filter(|a| !a.is_empty())
                .collect(),
        }
    }

    /// Parses an abbreviation list: one entry per line, `#` starts a comment line.
    pub fn parse_abbreviations(contents: &str) -> Vec<String> {
        contents
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect()
    }

    /// Default list extended with the entries of an abbreviation file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let contents = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut splitter = Self::default();
        splitter.extend(Self::parse_abbreviations(&contents));
        Ok(splitter)
    }

    pub fn extend<I, S>(&mut self, abbreviations: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.abbreviations
            .extend(abbreviations.into_iter().map(|a| turkish_lowercase(a.as_ref().trim())));
    }

    pub fn is_abbreviation(&self, token: &str) -> bool {
        self.abbreviations.contains(&turkish_lowercase(token))
    }

    pub fn split(&self, text: &str) -> Result<Vec<String>> {
        if text.trim().is_empty() {
            return Err(Error::EmptyText);
        }
        let chars: Vec<char> = text.chars().collect();
        let n = chars.len();
        let mut sentences = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < n {
            let c = chars[i];
            if !is_terminator(c) {
                i += 1;
                continue;
            }
            if c == '.' && i > 0 && i + 1 < n && chars[i - 1].is_ascii_digit() && chars[i + 1].is_ascii_digit() {
                i += 1;
                continue;
            }
            let mut end = i + 1;
            while end < n && is_terminator(chars[end]) {
                end += 1;
            }
            while end < n && is_closer(chars[end]) {
                end += 1;
            }
            if c == '.' && end == i + 1 && self.abbreviation_ends_at(&chars, start, i) {
                i += 1;
                continue;
            }
            if end < n && !chars[end].is_whitespace() {
                i = end;
                continue;
            }
            push_trimmed(&mut sentences, &chars[start..end]);
            start = end;
            i = end;
        }
        push_trimmed(&mut sentences, &chars[start..]);
        Ok(sentences)
    }

    fn abbreviation_ends_at(&self, chars: &[char], start: usize, dot: usize) -> bool {
        let mut word_start = dot;
        while word_start > start && !chars[word_start - 1].is_whitespace() {
            word_start -= 1;
        }
        let word: String = chars[word_start..=dot].iter().collect();
        let word = word.trim_start_matches(|c: char| !c.is_alphanumeric());
        !word.is_empty() && self.is_abbreviation(word)
    }
}

fn push_trimmed(out: &mut Vec<String>, chars: &[char]) {
    let s: String = chars.iter().collect();
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}

/// Splits with the default abbreviation list.
pub fn split_sentences(text: &str) -> Result<Vec<String>> {
    SentenceSplitter::default().split(text)
}

/// Raw counts for one sentence or a whole text; merge with [`TextCounts::add`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TextCounts {
    pub sentences: usize,
    pub words: usize,
    pub syllables: usize,
    pub letters: usize,
    pub hard_words: usize,
    pub polysyllables: usize,
    /// Words with exactly 3, 4, 5 and 6+ syllables.
    pub by_syllables: [usize; 4],
}

impl TextCounts {
    pub fn add(&mut self, other: &TextCounts) {
        self.sentences += other.sentences;
        self.words += other.words;
        self.syllables += other.syllables;
        self.letters += other.letters;
        self.hard_words += other.hard_words;
        self.polysyllables += other.polysyllables;
        for (a, b) in self.by_syllables.iter_mut().zip(other.by_syllables) {
            *a += b;
        }
    }

    /// Counts for one sentence. A sentence without words contributes nothing,
    /// not even to the sentence count.
    pub fn of_sentence(sentence: &str, language: Language, rule: HardWordRule) -> TextCounts {
        let tokens = tokenize_words(sentence, language);
        let mut counts = TextCounts {
            sentences: usize::from(!tokens.is_empty()),
            ..TextCounts::default()
        };
        for token in &tokens {
            let s = token.syllable_count;
            counts.words += 1;
            counts.syllables += s;
            counts.letters += token.char_count;
            if s >= 3 {
                counts.polysyllables += 1;
                counts.by_syllables[(s - 3).min(3)] += 1;
                if !(rule == HardWordRule::Gunning
                    && language == Language::English
                    && is_suffix_only_third_syllable(&token.surface))
                {
                    counts.hard_words += 1;
                }
            }
        }
        counts
    }
}

fn is_suffix_only_third_syllable(word: &str) -> bool {
    let lower = word.to_lowercase();
    if count_syllables_english(&lower) != 3 {
        return false;
    }
    match lower.strip_suffix("ed").or_else(|| lower.strip_suffix("es")) {
        Some(stem) => count_syllables_english(stem) == 2,
        None => false,
    }
}

/// Per-text statistics feeding the readability formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TextStats {
    /// Sentences containing at least one word (SC).
    pub sentence_count: usize,
    pub word_count: usize,
    pub syllable_count: usize,
    pub letter_count: usize,
    /// Words per sentence (ASL, also OKS).
    pub asl: f64,
    /// Syllables per word (ASW).
    pub asw: f64,
    /// Letters per word.
    pub awl_chars: f64,
    /// Syllables per word, the word-length measure of the Çetinkaya-Uzun formula.
    pub awl_syllables: f64,
    /// Proportion of hard words in [0, 1].
    pub phw: f64,
    /// Words with three or more syllables (PC).
    pub polysyllable_count: usize,
    pub h3: f64,
    pub h4: f64,
    pub h5: f64,
    pub h6: f64,
}

impl TextStats {
    pub fn from_counts(c: &TextCounts) -> Result<Self> {
        if c.words == 0 || c.sentences == 0 {
            return Err(Error::NoWords);
        }
        let sc = c.sentences as f64;
        let wc = c.words as f64;
        let asw = c.syllables as f64 / wc;
        Ok(TextStats {
            sentence_count: c.sentences,
            word_count: c.words,
            syllable_count: c.syllables,
            letter_count: c.letters,
            asl: wc / sc,
            asw,
            awl_chars: c.letters as f64 / wc,
            awl_syllables: asw,
            phw: c.hard_words as f64 / wc,
            polysyllable_count: c.polysyllables,
            h3: c.by_syllables[0] as f64 / sc,
            h4: c.by_syllables[1] as f64 / sc,
            h5: c.by_syllables[2] as f64 / sc,
            h6: c.by_syllables[3] as f64 / sc,
        })
    }
}

pub fn compute_counts(
    splitter: &SentenceSplitter,
    text: &str,
    language: Language,
    rule: HardWordRule,
) -> Result<TextCounts> {
    let mut total = TextCounts::default();
    for sentence in splitter.split(text)? {
        total.add(&TextCounts::of_sentence(&sentence, language, rule));
    }
    Ok(total)
}

/// Statistics with the default sentence splitter.
pub fn compute_stats(text: &str, language: Language, rule: HardWordRule) -> Result<TextStats> {
    compute_stats_with(&SentenceSplitter::default(), text, language, rule)
}

pub fn compute_stats_with(
    splitter: &SentenceSplitter,
    text: &str,
    language: Language,
    rule: HardWordRule,
) -> Result<TextStats> {
    TextStats::from_counts(&compute_counts(splitter, text, language, rule)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn surfaces(s: &str) -> Vec<String> {
        tokenize_words(s, Language::Turkish).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn splits_on_terminators() {
        assert_eq!(split_sentences("Geldi. Gitti.").unwrap(), vec!["Geldi.", "Gitti."]);
        assert_eq!(split_sentences("Ne? Evet! Tamam…").unwrap(), vec!["Ne?", "Evet!", "Tamam…"]);
        assert_eq!(split_sentences("Son cümle").unwrap(), vec!["Son cümle"]);
    }

    #[test]
    fn abbreviation_does_not_split() {
        assert_eq!(split_sentences("Dr. Ali geldi.").unwrap(), vec!["Dr. Ali geldi."]);
        assert_eq!(
            split_sentences("Elma, armut vb. meyveler var. Prof. Kaya anlattı.").unwrap(),
            vec!["Elma, armut vb. meyveler var.", "Prof. Kaya anlattı."]
        );
    }

    #[test]
    fn decimal_does_not_split() {
        assert_eq!(split_sentences("Oran 3.5 oldu.").unwrap(), vec!["Oran 3.5 oldu."]);
    }

    #[test]
    fn closing_quote_stays_with_sentence() {
        assert_eq!(
            split_sentences("\"Geldim.\" Sonra gitti.").unwrap(),
            vec!["\"Geldim.\"", "Sonra gitti."]
        );
    }

    #[test]
    fn empty_text_is_an_error() {
        assert!(matches!(split_sentences("   \n\t"), Err(Error::EmptyText)));
        assert!(matches!(split_sentences(""), Err(Error::EmptyText)));
    }

    #[test]
    fn custom_abbreviations_from_list() {
        let list = SentenceSplitter::parse_abbreviations("# comment\nMah.\n\n  Cad.  \n");
        assert_eq!(list, vec!["Mah.", "Cad."]);
        let mut splitter = SentenceSplitter::default();
        splitter.extend(list);
        assert_eq!(splitter.split("Atatürk Cad. üzerinde.").unwrap().len(), 1);
    }

    #[test]
    fn abbreviation_file_loads() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        std::io::Write::write_all(&mut file, "# ek liste\nMah.\n".as_bytes()).unwrap();
        let splitter = SentenceSplitter::from_file(file.path()).unwrap();
        assert!(splitter.is_abbreviation("mah."));
        assert!(splitter.is_abbreviation("Dr."));
        assert!(matches!(
            SentenceSplitter::from_file(Path::new("/no/such/abbrevs.txt")),
            Err(Error::FileNotFound(_))
        ));
    }

    #[test]
    fn tokenization_rules() {
        assert_eq!(surfaces("Ali geldi."), vec!["Ali", "geldi"]);
        assert_eq!(surfaces("İstanbul'da yaşıyor"), vec!["İstanbul'da", "yaşıyor"]);
        assert!(surfaces("— 42 —").is_empty());
        let t = &tokenize_words("(okul-aile),", Language::Turkish)[0];
        assert_eq!(t.surface, "okul-aile");
        assert_eq!(t.char_count, 8);
    }

    #[test]
    fn turkish_syllables() {
        assert_eq!(count_syllables_turkish("ve"), 1);
        assert_eq!(count_syllables_turkish("merhaba"), 3);
        assert_eq!(count_syllables_turkish("okunabilirlik"), 6);
        assert_eq!(count_syllables_turkish("KIRMIZI"), 3);
        assert_eq!(count_syllables_turkish("İSTANBUL"), 3);
        assert_eq!(count_syllables_turkish("prd"), 0);
    }

    #[test]
    fn turkish_casing() {
        assert_eq!(turkish_lowercase("IŞIK İzmir"), "ışık izmir");
    }

    #[test]
    fn english_syllables() {
        assert_eq!(count_syllables_english("cat"), 1);
        assert_eq!(count_syllables_english("because"), 2);
        assert_eq!(count_syllables_english("table"), 2);
        assert_eq!(count_syllables_english("the"), 1);
        assert_eq!(count_syllables_english("while"), 1);
        assert_eq!(count_syllables_english("rhythm"), 1);
        assert_eq!(count_syllables_english("42"), 0);
    }

    #[test]
    fn stats_of_short_turkish_text() {
        let s = compute_stats("Ali koştu. Ayşe geldi.", Language::Turkish, HardWordRule::Polysyllabic).unwrap();
        assert_eq!(s.sentence_count, 2);
        assert_eq!(s.word_count, 4);
        assert_eq!(s.asl, 2.0);
        assert_eq!([s.h3, s.h4, s.h5, s.h6], [0.0; 4]);

        let s = compute_stats("Bu ve şu.", Language::Turkish, HardWordRule::Polysyllabic).unwrap();
        assert_eq!(s.asw, 1.0);
        assert_eq!(s.polysyllable_count, 0);
    }

    #[test]
    fn stats_of_three_syllable_words() {
        let s = compute_stats("Kelime masalı araba kapıda.", Language::Turkish, HardWordRule::Polysyllabic).unwrap();
        assert_eq!(s.asl, 4.0);
        assert_eq!(s.h3, 4.0);
        assert_eq!([s.h4, s.h5, s.h6], [0.0; 3]);
        assert_eq!(s.phw, 1.0);
    }

    #[test]
    fn gunning_suffix_exclusion_only_in_english() {
        let text = "They completed it.";
        let plain = compute_stats(text, Language::English, HardWordRule::Polysyllabic).unwrap();
        let gunning = compute_stats(text, Language::English, HardWordRule::Gunning).unwrap();
        assert_eq!(plain.polysyllable_count, 1);
        assert_eq!(gunning.polysyllable_count, 1);
        assert!((plain.phw - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(gunning.phw, 0.0);
        // "important" has no suffix; it stays hard under both rules
        let s = compute_stats("An important day.", Language::English, HardWordRule::Gunning).unwrap();
        assert!((s.phw - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn wordless_sentences_are_ignored() {
        let s = compute_stats("Geldi. — 42 —. Gitti.", Language::Turkish, HardWordRule::Polysyllabic).unwrap();
        assert_eq!(s.sentence_count, 2);
        assert!(matches!(
            compute_stats("... 12 34", Language::Turkish, HardWordRule::Polysyllabic),
            Err(Error::NoWords)
        ));
    }

    #[test]
    fn vowel_free_words_count_as_words() {
        let s = compute_stats("Prd ve.", Language::Turkish, HardWordRule::Polysyllabic).unwrap();
        assert_eq!(s.word_count, 2);
        assert_eq!(s.asw, 0.5);
    }

    fn turkish_word() -> impl Strategy<Value = String> {
        proptest::string::string_regex("[a-zçğıöşüA-ZÇĞİÖŞÜ]{1,12}").unwrap()
    }

    proptest! {
        #[test]
        fn turkish_syllables_are_additive(a in turkish_word(), b in turkish_word()) {
            let joined = format!("{a}{b}");
            prop_assert_eq!(
                count_syllables_turkish(&joined),
                count_syllables_turkish(&a) + count_syllables_turkish(&b)
            );
        }

        #[test]
        fn stats_invariants(words in proptest::collection::vec(turkish_word(), 1..40), cuts in proptest::collection::vec(any::<bool>(), 40)) {
            let mut text = String::new();
            for (i, w) in words.iter().enumerate() {
                text.push_str(w);
                text.push_str(if cuts[i] { ". " } else { " " });
            }
            let s = compute_stats(&text, Language::Turkish, HardWordRule::Polysyllabic).unwrap();
            prop_assert_eq!(s.asl, s.word_count as f64 / s.sentence_count as f64);
            prop_assert!(s.asl >= 1.0);
            prop_assert!(s.asw >= 0.0);
            prop_assert!((0.0..=1.0).contains(&s.phw));
            prop_assert!(s.polysyllable_count <= s.word_count);
            prop_assert!(s.h3 + s.h4 + s.h5 + s.h6 <= s.asl + 1e-12);
            let again = compute_stats(&text, Language::Turkish, HardWordRule::Polysyllabic).unwrap();
            prop_assert_eq!(s, again);
        }
    }
}
