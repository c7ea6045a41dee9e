//! Lexicon and rule-based sentiment scoring of rationale texts.
//!
//! This is a faithful port of the VADER analyzer (Hutto & Gilbert, MIT
//! licensed), including its quirks: booster and dampener words, a three-token
//! negation window, ALL-CAPS emphasis, exclamation and question-mark
//! amplification, and "but" clause reweighting. The bundled lexicon is the
//! reference `vader_lexicon.txt` reduced to `token<TAB>valence` lines, with
//! the later of any duplicated token kept.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Normalization constant of the compound score.
pub const ALPHA: f64 = 15.0;

const B_INCR: f64 = 0.293;
const B_DECR: f64 = -0.293;
const C_INCR: f64 = 0.733;
const N_SCALAR: f64 = -0.74;

const LEXICON_TSV: &str = include_str!("../data/sentiment_lexicon.tsv");
const EMOJI_TSV: &str = include_str!("../data/sentiment_emoji.tsv");

const NEGATE: &[&str] = &[
    "aint", "arent", "cannot", "cant", "couldnt", "darent", "didnt", "doesnt", "ain't", "aren't", "can't",
    "couldn't", "daren't", "didn't", "doesn't", "dont", "hadnt", "hasnt", "havent", "isnt", "mightnt", "mustnt",
    "neither", "don't", "hadn't", "hasn't", "haven't", "isn't", "mightn't", "mustn't", "neednt", "needn't",
    "never", "none", "nope", "nor", "not", "nothing", "nowhere", "oughtnt", "shant", "shouldnt", "uhuh", "wasnt",
    "werent", "oughtn't", "shan't", "shouldn't", "uh-uh", "wasn't", "weren't", "without", "wont", "wouldnt",
    "won't", "wouldn't", "rarely", "seldom", "despite",
];

const BOOSTERS_UP: &[&str] = &[
    "absolutely", "amazingly", "awfully", "completely", "considerable", "considerably", "decidedly", "deeply",
    "effing", "enormous", "enormously", "entirely", "especially", "exceptional", "exceptionally", "extreme",
    "extremely", "fabulously", "flipping", "flippin", "frackin", "fracking", "fricking", "frickin", "frigging",
    "friggin", "fully", "fuckin", "fucking", "fuggin", "fugging", "greatly", "hella", "highly", "hugely",
    "incredible", "incredibly", "intensely", "major", "majorly", "more", "most", "particularly", "purely",
    "quite", "really", "remarkably", "so", "substantially", "thoroughly", "total", "totally", "tremendous",
    "tremendously", "uber", "unbelievably", "unusually", "utter", "utterly", "very",
];

const BOOSTERS_DOWN: &[&str] = &[
    "almost", "barely", "hardly", "just enough", "kind of", "kinda", "kindof", "kind-of", "less", "little",
    "marginal", "marginally", "occasional", "occasionally", "partly", "scarce", "scarcely", "slight",
    "slightly", "somewhat", "sort of", "sorta", "sortof", "sort-of",
];

const SPECIAL_CASES: &[(&str, f64)] = &[
    ("the shit", 3.0),
    ("the bomb", 3.0),
    ("bad ass", 1.5),
    ("badass", 1.5),
    ("bus stop", 0.0),
    ("yeah right", -2.0),
    ("kiss of death", -1.5),
    ("to die for", 3.0),
    ("beating heart", 3.5),
];

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("failed to read lexicon: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("line {line}: duplicate token `{token}`")]
    Duplicate { line: usize, token: String },
}

#[derive(Debug, Error, PartialEq)]
pub enum SentimentError {
    #[error("community sets differ: {0:?} present on one side only")]
    MismatchedCommunities(Vec<u32>),
}

/// Token valences plus the modifier word lists. Immutable after load.
#[derive(Clone, Debug)]
pub struct Lexicon {
    entries: HashMap<String, f64>,
    boosters: HashMap<String, f64>,
    negators: HashSet<String>,
    emoji: HashMap<char, String>,
}

impl Lexicon {
    /// The lexicon shipped with the crate, parsed once.
    pub fn bundled() -> &'static Lexicon {
        static BUNDLED: OnceLock<Lexicon> = OnceLock::new();
        BUNDLED.get_or_init(|| Lexicon::from_tsv(LEXICON_TSV).expect("bundled lexicon is valid"))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Lexicon, LexiconError> {
        Lexicon::from_tsv(&std::fs::read_to_string(path)?)
    }

    /// Parses `token<TAB>valence` lines; extra tab-separated columns are ignored.
    pub fn from_tsv(text: &str) -> Result<Lexicon, LexiconError> {
        let mut entries = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split('\t');
            let token = cols.next().unwrap_or_default();
            let valence: f64 = cols
                .next()
                .ok_or_else(|| LexiconError::Line { line: i + 1, message: "missing valence column".into() })?
                .trim()
                .parse()
                .map_err(|e| LexiconError::Line { line: i + 1, message: format!("bad valence: {e}") })?;
            if !valence.is_finite() {
                return Err(LexiconError::Line { line: i + 1, message: "valence is not finite".into() });
            }
            if entries.insert(token.to_string(), valence).is_some() {
                return Err(LexiconError::Duplicate { line: i + 1, token: token.to_string() });
            }
        }
        let boosters = BOOSTERS_UP
            .iter()
            .map(|w| (w.to_string(), B_INCR))
            .chain(BOOSTERS_DOWN.iter().map(|w| (w.to_string(), B_DECR)))
            .collect();
        let negators = NEGATE.iter().map(|w| w.to_string()).collect();
        let emoji = EMOJI_TSV
            .lines()
            .filter_map(|l| {
                let (glyph, desc) = l.trim().split_once('\t')?;
                let mut chars = glyph.chars();
                let c = chars.next()?;
                chars.next().is_none().then(|| (c, desc.split('\t').next().unwrap_or(desc).to_string()))
            })
            .collect();
        Ok(Lexicon { entries, boosters, negators, emoji })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn valence(&self, token: &str) -> Option<f64> {
        self.entries.get(token).copied()
    }

    fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    fn booster(&self, token: &str) -> Option<f64> {
        self.boosters.get(token).copied()
    }

    fn negated(&self, word: &str) -> bool {
        self.negators.contains(word) || word.contains("n't")
    }
}

/// Scores for one text.
#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SentimentScore {
    /// Normalized signed sum of valences after punctuation emphasis, in [-1, 1].
    pub compound: f64,
    /// Share of positive intensity.
    pub pos: f64,
    /// Share of negative intensity.
    pub neg: f64,
    /// Share of neutral tokens.
    pub neu: f64,
    /// Sum of positive token valences.
    pub positive_mass: f64,
    /// Sum of absolute negative token valences.
    pub negative_mass: f64,
}

impl SentimentScore {
    /// Compound score from the valence masses alone, without punctuation
    /// emphasis.
    pub fn mass_balance_compound(&self) -> f64 {
        normalize_compound(self.positive_mass - self.negative_mass)
    }
}

/// Maps a net valence to `x / sqrt(x^2 + 15)`.
pub fn normalize_compound(net_valence: f64) -> f64 {
    (net_valence / (net_valence * net_valence + ALPHA).sqrt()).clamp(-1.0, 1.0)
}

/// Python `str.isupper`: at least one cased character and none lowercase.
fn is_upper(word: &str) -> bool {
    word.chars().any(char::is_uppercase) && !word.chars().any(char::is_lowercase)
}

fn strip_punctuation_if_word(token: &str) -> &str {
    let stripped = token.trim_matches(|c: char| c.is_ascii_punctuation());
    if stripped.chars().count() <= 2 {
        token
    } else {
        stripped
    }
}

struct Tokens<'a> {
    words: Vec<&'a str>,
    lower: Vec<String>,
    cap_differential: bool,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Tokens<'a> {
        let words: Vec<&str> = text.split_whitespace().map(strip_punctuation_if_word).collect();
        let lower = words.iter().map(|w| w.to_lowercase()).collect();
        let caps = words.iter().filter(|w| is_upper(w)).count();
        let diff = words.len() - caps;
        Tokens { cap_differential: diff > 0 && diff < words.len(), words, lower }
    }

    fn len(&self) -> usize {
        self.words.len()
    }
}

pub fn score_text(lexicon: &Lexicon, text: &str) -> SentimentScore {
    let text = replace_emoji(lexicon, text);
    let text = text.trim();
    let tokens = Tokens::new(text);

    let mut sentiments = Vec::with_capacity(tokens.len());
    for i in 0..tokens.len() {
        let lower = tokens.lower[i].as_str();
        if lexicon.booster(lower).is_some() {
            sentiments.push(0.0);
            continue;
        }
        if i + 1 < tokens.len() && lower == "kind" && tokens.lower[i + 1] == "of" {
            sentiments.push(0.0);
            continue;
        }
        sentiments.push(token_valence(lexicon, &tokens, i));
    }
    but_check(&tokens, &mut sentiments);
    score_valence(&sentiments, text)
}

fn replace_emoji(lexicon: &Lexicon, text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut prev_space = true;
    for c in text.chars() {
        match lexicon.emoji.get(&c) {
            Some(desc) => {
                if !prev_space {
                    out.push(' ');
                }
                out.push_str(desc);
                prev_space = false;
            }
            None => {
                out.push(c);
                prev_space = c == ' ';
            }
        }
    }
    out
}

fn token_valence(lex: &Lexicon, t: &Tokens<'_>, i: usize) -> f64 {
    let lower = t.lower[i].as_str();
    let Some(base) = lex.valence(lower) else {
        return 0.0;
    };
    let mut valence = base;
    let w = |k: usize| t.lower[k].as_str();

    // "no" directly before another lexicon word acts as a negator instead
    if lower == "no" && i + 1 != t.len() && lex.contains(w(i + 1)) {
        valence = 0.0;
    }
    if (i > 0 && w(i - 1) == "no")
        || (i > 1 && w(i - 2) == "no")
        || (i > 2 && w(i - 3) == "no" && matches!(w(i - 1), "or" | "nor"))
    {
        valence = base * N_SCALAR;
    }

    if is_upper(t.words[i]) && t.cap_differential {
        if valence > 0.0 {
            valence += C_INCR;
        } else {
            valence -= C_INCR;
        }
    }

    for start in 0..3 {
        if i > start && !lex.contains(w(i - (start + 1))) {
            let mut s = scalar_inc_dec(lex, t.words[i - (start + 1)], w(i - (start + 1)), valence, t.cap_differential);
            if start == 1 && s != 0.0 {
                s *= 0.95;
            }
            if start == 2 && s != 0.0 {
                s *= 0.9;
            }
            valence += s;
            valence = negation_check(lex, t, valence, start, i);
            if start == 2 {
                valence = special_idioms_check(lex, t, valence, i);
            }
        }
    }
    least_check(lex, t, valence, i)
}

fn scalar_inc_dec(lex: &Lexicon, word: &str, lower: &str, valence: f64, cap_differential: bool) -> f64 {
    let Some(mut scalar) = lex.booster(lower) else {
        return 0.0;
    };
    if valence < 0.0 {
        scalar = -scalar;
    }
    if is_upper(word) && cap_differential {
        if valence > 0.0 {
            scalar += C_INCR;
        } else {
            scalar -= C_INCR;
        }
    }
    scalar
}

fn negation_check(lex: &Lexicon, t: &Tokens<'_>, valence: f64, start: usize, i: usize) -> f64 {
    let w = |k: usize| t.lower[k].as_str();
    match start {
        0 => {
            if lex.negated(w(i - 1)) {
                return valence * N_SCALAR;
            }
        }
        1 => {
            if w(i - 2) == "never" && matches!(w(i - 1), "so" | "this") {
                return valence * 1.25;
            } else if w(i - 2) == "without" && w(i - 1) == "doubt" {
                return valence;
            } else if lex.negated(w(i - 2)) {
                return valence * N_SCALAR;
            }
        }
        2 => {
            // the reference groups this as (never && so|this) || so|this
            if (w(i - 3) == "never" && matches!(w(i - 2), "so" | "this")) || matches!(w(i - 1), "so" | "this") {
                return valence * 1.25;
            } else if w(i - 3) == "without" && (w(i - 2) == "doubt" || w(i - 1) == "doubt") {
                return valence;
            } else if lex.negated(w(i - 3)) {
                return valence * N_SCALAR;
            }
        }
        _ => {}
    }
    valence
}

fn special_case(phrase: &str) -> Option<f64> {
    SPECIAL_CASES.iter().find(|(p, _)| *p == phrase).map(|&(_, v)| v)
}

fn special_idioms_check(lex: &Lexicon, t: &Tokens<'_>, mut valence: f64, i: usize) -> f64 {
    let w = |k: usize| t.lower[k].as_str();
    let onezero = format!("{} {}", w(i - 1), w(i));
    let twoonezero = format!("{} {} {}", w(i - 2), w(i - 1), w(i));
    let twoone = format!("{} {}", w(i - 2), w(i - 1));
    let threetwoone = format!("{} {} {}", w(i - 3), w(i - 2), w(i - 1));
    let threetwo = format!("{} {}", w(i - 3), w(i - 2));

    for seq in [&onezero, &twoonezero, &twoone, &threetwoone, &threetwo] {
        if let Some(v) = special_case(seq) {
            valence = v;
            break;
        }
    }
    if t.len() - 1 > i {
        if let Some(v) = special_case(&format!("{} {}", w(i), w(i + 1))) {
            valence = v;
        }
    }
    if t.len() - 1 > i + 1 {
        if let Some(v) = special_case(&format!("{} {} {}", w(i), w(i + 1), w(i + 2))) {
            valence = v;
        }
    }
    for ngram in [&threetwoone, &threetwo, &twoone] {
        if let Some(b) = lex.booster(ngram) {
            valence += b;
        }
    }
    valence
}

fn least_check(lex: &Lexicon, t: &Tokens<'_>, valence: f64, i: usize) -> f64 {
    let w = |k: usize| t.lower[k].as_str();
    if i > 1 && !lex.contains(w(i - 1)) && w(i - 1) == "least" {
        if w(i - 2) != "at" && w(i - 2) != "very" {
            return valence * N_SCALAR;
        }
    } else if i > 0 && !lex.contains(w(i - 1)) && w(i - 1) == "least" {
        return valence * N_SCALAR;
    }
    valence
}

/// Halves sentiment before the first "but" and boosts it by half after.
///
/// Mirrors the reference loop exactly, which locates each value by its first
/// equal occurrence in the list rather than by position.
fn but_check(t: &Tokens<'_>, sentiments: &mut [f64]) {
    let Some(bi) = t.lower.iter().position(|w| w == "but") else {
        return;
    };
    for idx in 0..sentiments.len() {
        let sentiment = sentiments[idx];
        let si = sentiments.iter().position(|&s| s == sentiment).expect("value present");
        if si < bi {
            sentiments[si] = sentiment * 0.5;
        } else if si > bi {
            sentiments[si] = sentiment * 1.5;
        }
    }
}

fn punctuation_emphasis(text: &str) -> f64 {
    let ep = text.matches('!').count().min(4) as f64 * 0.292;
    let qm_count = text.matches('?').count();
    let qm = match qm_count {
        0 | 1 => 0.0,
        2 | 3 => qm_count as f64 * 0.18,
        _ => 0.96,
    };
    ep + qm
}

fn score_valence(sentiments: &[f64], text: &str) -> SentimentScore {
    if sentiments.is_empty() {
        return SentimentScore::default();
    }
    let mut sum: f64 = sentiments.iter().sum();
    let emphasis = punctuation_emphasis(text);
    if sum > 0.0 {
        sum += emphasis;
    } else if sum < 0.0 {
        sum -= emphasis;
    }
    let compound = normalize_compound(sum);

    let (mut pos_sum, mut neg_sum, mut neu_count) = (0.0, 0.0, 0usize);
    let (mut positive_mass, mut negative_mass) = (0.0, 0.0);
    for &s in sentiments {
        if s > 0.0 {
            pos_sum += s + 1.0;
            positive_mass += s;
        }
        if s < 0.0 {
            neg_sum += s - 1.0;
            negative_mass -= s;
        }
        if s == 0.0 {
            neu_count += 1;
        }
    }
    if pos_sum > neg_sum.abs() {
        pos_sum += emphasis;
    } else if pos_sum < neg_sum.abs() {
        neg_sum -= emphasis;
    }
    let total = pos_sum + neg_sum.abs() + neu_count as f64;
    SentimentScore {
        compound,
        pos: (pos_sum / total).abs(),
        neg: (neg_sum / total).abs(),
        neu: (neu_count as f64 / total).abs(),
        positive_mass,
        negative_mass,
    }
}

/// Per-community difference `a - b`, typically knowledge-augmented minus
/// community-only scores.
pub fn sentiment_delta(
    scores_a: &BTreeMap<u32, f64>,
    scores_b: &BTreeMap<u32, f64>,
) -> Result<BTreeMap<u32, f64>, SentimentError> {
    let mismatched: Vec<u32> = scores_a
        .keys()
        .filter(|k| !scores_b.contains_key(k))
        .chain(scores_b.keys().filter(|k| !scores_a.contains_key(k)))
        .copied()
        .collect();
    if !mismatched.is_empty() {
        return Err(SentimentError::MismatchedCommunities(mismatched));
    }
    Ok(scores_a.iter().map(|(&k, &a)| (k, a - scores_b[&k])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn compound(text: &str) -> f64 {
        score_text(Lexicon::bundled(), text).compound
    }

    #[test]
    fn normalize_anchors() {
        assert_eq!(normalize_compound(0.0), 0.0);
        assert!((normalize_compound(1000.0) - 1.0).abs() < 1e-3);
        assert!((normalize_compound(15f64.sqrt()) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(normalize_compound(-2.0), -normalize_compound(2.0));
    }

    #[test]
    fn empty_and_unknown_text_score_zero() {
        assert_eq!(score_text(Lexicon::bundled(), ""), SentimentScore::default());
        assert_eq!(compound("zxq qwv brrp"), 0.0);
        assert_eq!(compound("   "), 0.0);
    }

    #[test]
    fn heuristics_move_scores_in_the_expected_direction() {
        let base = compound("The policy is good.");
        assert!(base > 0.0);
        assert!(compound("The policy is very good.") > base);
        assert!(compound("The policy is good!!!") > base);
        assert!(compound("The policy is not good.") < 0.0);
        assert!(compound("The policy is GOOD.") > base);
        assert!(compound("The plan is only kind of good.") < base);
    }

    #[test]
    fn bus_stop_is_neutral() {
        assert_eq!(compound("Wait at the bus stop for ages"), 0.0);
    }

    #[test]
    fn lexicon_rejects_duplicates() {
        let err = Lexicon::from_tsv("good\t1.9\nbad\t-2.5\ngood\t2.0\n").unwrap_err();
        assert!(matches!(err, LexiconError::Duplicate { line: 3, .. }));
        assert!(Lexicon::from_tsv("good\tNaN\n").is_err());
        assert!(Lexicon::from_tsv("good\n").is_err());
        assert_eq!(Lexicon::bundled().len(), 7506);
    }

    #[test]
    fn delta_examples() {
        let a: BTreeMap<u32, f64> = [(1, 0.8), (2, 0.1)].into();
        let b: BTreeMap<u32, f64> = [(1, 0.5), (2, 0.1)].into();
        let d = sentiment_delta(&a, &b).unwrap();
        assert!((d[&1] - 0.3).abs() < 1e-12);
        assert_eq!(d[&2], 0.0);
        let back = sentiment_delta(&b, &a).unwrap();
        assert_eq!(back[&1], -d[&1]);
        let c: BTreeMap<u32, f64> = [(1, 0.5)].into();
        assert_eq!(sentiment_delta(&a, &c), Err(SentimentError::MismatchedCommunities(vec![2])));
    }
}
