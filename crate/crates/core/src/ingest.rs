//! Text ingestion: tokenization into words and punctuation marks, chapter
//! segmentation, and the two interval series derived from them.
//!
//! The rules are deliberately mechanical so that results are reproducible
//! across languages and editions:
//!
//! - a word is a maximal run of non-whitespace, non-mark characters that
//!   contains at least one alphanumeric character; pure-symbol runs are
//!   dropped;
//! - consecutive mark characters with no whitespace between them ("?!",
//!   "...", ".\u{201d}") collapse to a single mark, together with any closing
//!   quotes or brackets glued to them: one sentence boundary per cluster;
//! - a cluster counts as sentence-ending if it contains at least one
//!   sentence-ending character, otherwise as intra-sentence;
//! - every configured end mark terminates a sentence; there is no
//!   abbreviation lexicon ("Dr.", "etc." both end a sentence), which is a
//!   known limitation documented in the README;
//! - zero-length intervals (two marks separated only by whitespace) are
//!   dropped, and text trailing the final mark is discarded.

use std::collections::HashSet;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Closing quotes and brackets that attach to a preceding mark cluster.
const CLOSING_ATTACHMENTS: &[char] = &['"', '\'', '\u{00bb}', '\u{201d}', '\u{2019}', '\u{203a}', ')', ']', '}'];

/// Unit in which interval lengths are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountUnit {
    Words,
    Characters,
}

/// Tokenization and segmentation settings.
///
/// Mark sets are given as strings of characters; the two sets must be
/// disjoint. Opening inverted marks ("\u{00bf}", "\u{00a1}") are not marks by
/// default; add them to a set to override.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    /// Characters that end a sentence.
    pub sentence_end_marks: String,
    /// Characters that separate clauses within a sentence.
    pub intra_marks: String,
    /// Regex matching chapter headings; `None` (or no match) treats the
    /// whole text as a single chapter.
    pub chapter_delimiter: Option<String>,
    /// Unit for interval lengths.
    pub count_unit: CountUnit,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            sentence_end_marks: ".!?\u{2026}\u{203d}".into(),
            intra_marks: ",;:\u{2014}\u{2013}".into(),
            chapter_delimiter: None,
            count_unit: CountUnit::Words,
        }
    }
}

impl IngestConfig {
    pub fn validate(&self) -> Result<()> {
        let end: HashSet<char> = self.sentence_end_marks.chars().collect();
        let intra: HashSet<char> = self.intra_marks.chars().collect();
        if end.is_empty() {
            return Err(Error::InvalidConfig("sentence_end_marks is empty".into()));
        }
        if let Some(c) = end.intersection(&intra).next() {
            return Err(Error::InvalidConfig(format!(
                "mark sets overlap on {c:?}; sentence-ending and intra-sentence sets must be disjoint"
            )));
        }
        if let Some(pat) = &self.chapter_delimiter {
            Regex::new(pat).map_err(|e| Error::InvalidConfig(format!("chapter_delimiter: {e}")))?;
        }
        Ok(())
    }
}

/// Kind of punctuation boundary a mark cluster represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkKind {
    SentenceEnding,
    IntraSentence,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Token {
    Word(String),
    Mark { kind: MarkKind, text: String },
}

impl Token {
    pub fn is_word(&self) -> bool {
        matches!(self, Token::Word(_))
    }

    pub fn is_end_mark(&self) -> bool {
        matches!(
            self,
            Token::Mark {
                kind: MarkKind::SentenceEnding,
                ..
            }
        )
    }
}

/// The tokenized text: words and collapsed mark clusters in reading order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
}

impl TokenStream {
    /// Serialize back to text. Tokenizing the result reproduces this stream
    /// exactly (words carry no mark characters, clusters re-collapse to the
    /// same kind).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, tok) in self.tokens.iter().enumerate() {
            match tok {
                Token::Word(w) => {
                    if i > 0 && !out.ends_with(' ') {
                        out.push(' ');
                    }
                    out.push_str(w);
                }
                Token::Mark { text, .. } => {
                    out.push_str(text);
                    out.push(' ');
                }
            }
        }
        out
    }
}

/// Split text into WORD and MARK tokens according to `cfg`.
pub fn tokenize(text: &str, cfg: &IngestConfig) -> Result<TokenStream> {
    cfg.validate()?;
    if text.trim().is_empty() {
        return Err(Error::EmptyInput);
    }
    let end: HashSet<char> = cfg.sentence_end_marks.chars().collect();
    let intra: HashSet<char> = cfg.intra_marks.chars().collect();
    let is_mark = |c: char| end.contains(&c) || intra.contains(&c);

    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if is_mark(c) {
            let mut cluster = String::new();
            let mut kind = MarkKind::IntraSentence;
            while let Some(&c2) = chars.peek() {
                if is_mark(c2) {
                    if end.contains(&c2) {
                        kind = MarkKind::SentenceEnding;
                    }
                    cluster.push(c2);
                    chars.next();
                } else if CLOSING_ATTACHMENTS.contains(&c2) {
                    cluster.push(c2);
                    chars.next();
                } else {
                    break;
                }
            }
            tokens.push(Token::Mark { kind, text: cluster });
        } else {
            let mut run = String::new();
            while let Some(&c2) = chars.peek() {
                if c2.is_whitespace() || is_mark(c2) {
                    break;
                }
                run.push(c2);
                chars.next();
            }
            if run.chars().any(char::is_alphanumeric) {
                tokens.push(Token::Word(run));
            }
        }
    }
    Ok(TokenStream { tokens })
}

/// Size of a word for the given unit: 1 word, or its character count.
fn word_weight(w: &str, unit: CountUnit) -> u64 {
    match unit {
        CountUnit::Words => 1,
        CountUnit::Characters => w.chars().count() as u64,
    }
}

/// Interval lengths between consecutive sentence-ending marks.
///
/// Intra-sentence marks are transparent for the word count but their
/// characters contribute in character mode (everything non-whitespace
/// between the boundaries). Zero-length intervals are dropped; words after
/// the final end mark are discarded.
pub fn sentence_lengths(ts: &TokenStream, unit: CountUnit) -> Result<TimeSeries> {
    if !ts.tokens.iter().any(Token::is_end_mark) {
        return Err(Error::NoSentences);
    }
    let mut out: Vec<u64> = Vec::new();
    let mut acc: u64 = 0;
    for tok in &ts.tokens {
        match tok {
            Token::Word(w) => acc += word_weight(w, unit),
            Token::Mark { kind, text } => match kind {
                MarkKind::SentenceEnding => {
                    if acc > 0 {
                        out.push(acc);
                    }
                    acc = 0;
                }
                MarkKind::IntraSentence => {
                    if unit == CountUnit::Characters {
                        acc += text.chars().count() as u64;
                    }
                }
            },
        }
    }
    TimeSeries::from_counts(&out, label_for("slv", unit))
}

/// Interval lengths between consecutive marks of any kind.
///
/// Same trailing and zero-length rules as [`sentence_lengths`]; summing the
/// entries between two sentence-ending marks reproduces the corresponding
/// sentence length.
pub fn mark_distances(ts: &TokenStream, unit: CountUnit) -> Result<TimeSeries> {
    if !ts.tokens.iter().any(|t| !t.is_word()) {
        return Err(Error::NoMarks);
    }
    let mut out: Vec<u64> = Vec::new();
    let mut acc: u64 = 0;
    for tok in &ts.tokens {
        match tok {
            Token::Word(w) => acc += word_weight(w, unit),
            Token::Mark { .. } => {
                if acc > 0 {
                    out.push(acc);
                }
                acc = 0;
            }
        }
    }
    TimeSeries::from_counts(&out, label_for("pmdv", unit))
}

fn label_for(base: &str, unit: CountUnit) -> String {
    match unit {
        CountUnit::Words => format!("{base}-words"),
        CountUnit::Characters => format!("{base}-chars"),
    }
}

/// Per-chapter interval sequences plus chapter ordering metadata.
///
/// Concatenating the chapters in stored order reproduces the whole-book
/// series exactly; a sentence never spans a chapter boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChapterizedCorpus {
    pub chapters: Vec<Vec<u64>>,
    pub labels: Vec<String>,
    #[serde(default)]
    pub label: String,
}

impl ChapterizedCorpus {
    pub fn new(chapters: Vec<Vec<u64>>, labels: Vec<String>, label: impl Into<String>) -> Result<Self> {
        if chapters.is_empty() {
            return Err(Error::EmptyInput);
        }
        if chapters.len() != labels.len() {
            return Err(Error::InvalidConfig(format!(
                "{} chapters but {} labels",
                chapters.len(),
                labels.len()
            )));
        }
        if let Some(i) = chapters.iter().position(Vec::is_empty) {
            return Err(Error::EmptyChapter(i));
        }
        Ok(Self {
            chapters,
            labels,
            label: label.into(),
        })
    }

    pub fn chapter_count(&self) -> usize {
        self.chapters.len()
    }

    pub fn total_sentences(&self) -> usize {
        self.chapters.iter().map(Vec::len).sum()
    }

    /// The whole-book series in printed chapter order.
    pub fn printed_series(&self) -> TimeSeries {
        let values = self
            .chapters
            .iter()
            .flat_map(|c| c.iter().map(|&v| v as f64))
            .collect();
        TimeSeries {
            values,
            label: format!("{}-printed", self.label),
        }
    }
}

/// Split `text` into chapters on `cfg.chapter_delimiter` and compute the
/// per-chapter interval series independently.
///
/// Text before the first heading is kept as a front-matter chapter when it
/// contains sentences and silently dropped otherwise. A heading-delimited
/// block without any sentence is an error.
pub fn segment_chapters(text: &str, cfg: &IngestConfig) -> Result<ChapterizedCorpus> {
    cfg.validate()?;
    if text.trim().is_empty() {
        return Err(Error::EmptyInput);
    }

    let mut blocks: Vec<(String, &str)> = Vec::new();
    match &cfg.chapter_delimiter {
        Some(pat) => {
            let re = Regex::new(pat).expect("validated above");
            let mut last_end = 0usize;
            let mut last_label = String::new();
            let mut first = true;
            for m in re.find_iter(text) {
                let block = &text[last_end..m.start()];
                if first {
                    // Front matter before the first heading.
                    if !block.trim().is_empty() {
                        blocks.push(("front".into(), block));
                    }
                    first = false;
                } else {
                    blocks.push((last_label.clone(), block));
                }
                last_label = m.as_str().trim().to_string();
                last_end = m.end();
            }
            if first {
                blocks.push(("1".into(), text));
            } else {
                blocks.push((last_label, &text[last_end..]));
            }
        }
        None => blocks.push(("1".into(), text)),
    }

    let mut chapters = Vec::with_capacity(blocks.len());
    let mut labels = Vec::with_capacity(blocks.len());
    for (i, (label, block)) in blocks.into_iter().enumerate() {
        let stream = tokenize(block, cfg).map_err(|e| match e {
            Error::EmptyInput => Error::EmptyChapter(i),
            other => other,
        })?;
        let series = sentence_lengths(&stream, cfg.count_unit).map_err(|e| match e {
            Error::NoSentences => Error::EmptyChapter(i),
            other => other,
        })?;
        chapters.push(series.values.iter().map(|&v| v as u64).collect());
        labels.push(if label.is_empty() { (i + 1).to_string() } else { label });
    }
    ChapterizedCorpus::new(chapters, labels, "text")
}

/// Min/max/mean of an integer-valued sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatTriple {
    pub min: u64,
    pub max: u64,
    pub mean: f64,
}

impl StatTriple {
    fn from_counts(counts: impl Iterator<Item = u64> + Clone) -> Self {
        let mut min = u64::MAX;
        let mut max = 0u64;
        let mut sum = 0u64;
        let mut n = 0u64;
        for c in counts {
            min = min.min(c);
            max = max.max(c);
            sum += c;
            n += 1;
        }
        StatTriple {
            min,
            max,
            mean: sum as f64 / n as f64,
        }
    }
}

/// The nine corpus summary statistics: sentence lengths in words and in
/// characters, and chapter lengths in sentences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub sentence_words: StatTriple,
    pub sentence_characters: StatTriple,
    pub chapter_sentences: StatTriple,
}

/// Summary statistics for a word-unit corpus plus its character-unit series.
pub fn corpus_stats(corpus: &ChapterizedCorpus, char_series: &TimeSeries) -> Result<CorpusStats> {
    if char_series.is_empty() {
        return Err(Error::EmptyInput);
    }
    let words = StatTriple::from_counts(corpus.chapters.iter().flatten().copied());
    let chars = StatTriple::from_counts(char_series.values.iter().map(|&v| v as u64));
    let chapter_sentences = StatTriple::from_counts(corpus.chapters.iter().map(|c| c.len() as u64));
    Ok(CorpusStats {
        sentence_words: words,
        sentence_characters: chars,
        chapter_sentences,
    })
}
