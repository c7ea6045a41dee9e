use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::catalog::PolicyId;
use crate::voting::{Ballot, BallotError, VotingRule};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rationale {
    pub disposable_income: String,
    pub discretionary_consumption: String,
    pub accessibility: String,
    pub decision_rationale: String,
}

impl Rationale {
    pub fn sections(&self) -> [&str; 4] {
        [&self.disposable_income, &self.discretionary_consumption, &self.accessibility, &self.decision_rationale]
    }

    /// The non-empty sections joined by single spaces.
    pub fn joined(&self) -> String {
        self.sections().iter().filter(|s| !s.is_empty()).copied().collect::<Vec<_>>().join(" ")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedVote {
    pub community: String,
    pub rationale: Rationale,
    pub decision: Vec<PolicyId>,
}

impl ParsedVote {
    pub fn to_ballot(&self, agent_id: u32, rule: VotingRule) -> Result<Ballot, BallotError> {
        Ballot::new(agent_id, rule, self.decision.clone())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseErrorKind {
    NoBallot,
    MalformedId,
    DuplicateId,
    OutOfRange,
    Cardinality,
}

impl ParseErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            ParseErrorKind::NoBallot => "no_ballot",
            ParseErrorKind::MalformedId => "malformed_id",
            ParseErrorKind::DuplicateId => "duplicate_id",
            ParseErrorKind::OutOfRange => "out_of_range",
            ParseErrorKind::Cardinality => "cardinality",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: String,
}

impl ParseError {
    fn new(kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
        ParseError { kind, message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.name(), self.message)
    }
}

impl std::error::Error for ParseError {}

const DECISION_KEYS: &[&str] = &[
    "decision",
    "vote",
    "votes",
    "vote_decision",
    "voting_decision",
    "ballot",
    "ranking",
    "ranked_list",
    "approved",
    "approved_policies",
];
const COMMUNITY_KEYS: &[&str] = &["community", "community_area", "community_id", "super_neighborhood", "community_name"];
const RATIONALE_KEYS: &[&str] = &["rationale", "chain_of_thought", "reasoning"];

fn norm_key(k: &str) -> String {
    let mut out = String::with_capacity(k.len());
    for c in k.trim().chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

fn lookup<'a>(obj: &'a Map<String, Value>, keys: &[&str]) -> Option<&'a Value> {
    obj.iter().find(|(k, _)| keys.contains(&norm_key(k).as_str())).map(|(_, v)| v)
}

/// Extracts a ballot from a model reply.
///
/// The first JSON object that carries a decision wins, wherever it sits in
/// the text. Failing that, the labeled plain-text layout
/// (`Community Area: ...`, numbered considerations, `Vote Decision: [...]`)
/// is accepted.
pub fn parse_response(raw: &str, rule: VotingRule) -> Result<ParsedVote, ParseError> {
    let (community, rationale, ids) = match first_ballot_object(raw) {
        Some(obj) => from_object(&obj)?,
        None => from_labeled_text(raw)?,
    };
    let decision = validate(ids, rule)?;
    Ok(ParsedVote { community, rationale, decision })
}

fn first_ballot_object(raw: &str) -> Option<Map<String, Value>> {
    let bytes = raw.as_bytes();
    for (start, _) in raw.match_indices('{') {
        let Some(end) = matching_brace(&bytes[start..]) else { continue };
        if let Ok(Value::Object(obj)) = serde_json::from_str::<Value>(&raw[start..start + end + 1]) {
            if lookup(&obj, DECISION_KEYS).is_some() {
                return Some(obj);
            }
        }
    }
    None
}

/// Offset of the brace closing the one at `s[0]`, skipping string contents.
fn matching_brace(s: &[u8]) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_str = false;
    let mut escaped = false;
    for (i, &b) in s.iter().enumerate() {
        if in_str {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_str = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn text_of(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

type Extracted = (String, Rationale, Vec<RawId>);

fn from_object(obj: &Map<String, Value>) -> Result<Extracted, ParseError> {
    let community = lookup(obj, COMMUNITY_KEYS).map(text_of).unwrap_or_default();
    let mut rationale = Rationale::default();
    let sections = lookup(obj, RATIONALE_KEYS);
    match sections {
        Some(Value::Object(inner)) => fill_sections(&mut rationale, inner),
        Some(Value::String(s)) => rationale.decision_rationale = s.clone(),
        _ => {}
    }
    fill_sections(&mut rationale, obj);

    let decision = lookup(obj, DECISION_KEYS).expect("checked by caller");
    let ids = match decision {
        Value::Array(items) => items.iter().map(RawId::from_json).collect(),
        Value::String(s) => split_list(s),
        Value::Number(_) => vec![RawId::from_json(decision)],
        other => return Err(ParseError::new(ParseErrorKind::MalformedId, format!("decision is not a list: {other}"))),
    };
    Ok((community, rationale, ids))
}

fn fill_sections(rationale: &mut Rationale, obj: &Map<String, Value>) {
    for (k, v) in obj {
        let slot = match norm_key(k).as_str() {
            "disposable_income" => &mut rationale.disposable_income,
            "discretionary_consumption" => &mut rationale.discretionary_consumption,
            "accessibility" => &mut rationale.accessibility,
            "decision_rationale" => &mut rationale.decision_rationale,
            _ => continue,
        };
        if slot.is_empty() {
            *slot = text_of(v);
        }
    }
}

const SECTION_LABELS: [&str; 4] = ["disposable income", "discretionary consumption", "accessibility", "decision rationale"];
const DECISION_LABELS: [&str; 3] = ["vote decision", "voting decision", "decision"];
const COMMUNITY_LABELS: [&str; 3] = ["community area", "super neighborhood", "community"];

fn from_labeled_text(raw: &str) -> Result<Extracted, ParseError> {
    // ASCII lowercasing keeps byte offsets aligned with `raw`
    let lower = raw.to_ascii_lowercase();
    let (decision_at, list) = DECISION_LABELS
        .iter()
        .filter_map(|label| {
            let at = lower.find(&format!("{label}:"))?;
            let after = at + label.len() + 1;
            let open = after + raw[after..].find('[')?;
            let close = open + raw[open..].find(']')?;
            Some((at, &raw[open + 1..close]))
        })
        .min_by_key(|(at, _)| *at)
        .ok_or_else(|| ParseError::new(ParseErrorKind::NoBallot, "no ballot found"))?;

    let community = COMMUNITY_LABELS
        .iter()
        .find_map(|label| {
            let at = lower.find(&format!("{label}:"))?;
            let rest = &raw[at + label.len() + 1..];
            Some(clean(rest.lines().next().unwrap_or_default()))
        })
        .unwrap_or_default();

    let mut marks: Vec<(usize, usize, Option<usize>)> = SECTION_LABELS
        .iter()
        .enumerate()
        .filter_map(|(i, label)| lower.find(&format!("{label}:")).map(|at| (at, at + label.len() + 1, Some(i))))
        .collect();
    marks.push((decision_at, decision_at, None));
    marks.sort();
    let mut rationale = Rationale::default();
    for w in 0..marks.len() {
        let (_, body_start, Some(section)) = marks[w] else { continue };
        let end = marks.get(w + 1).map_or(raw.len(), |m| m.0);
        let body = clean(&raw[body_start..end.max(body_start)]);
        let slot = match section {
            0 => &mut rationale.disposable_income,
            1 => &mut rationale.discretionary_consumption,
            2 => &mut rationale.accessibility,
            _ => &mut rationale.decision_rationale,
        };
        *slot = body;
    }
    Ok((community, rationale, split_list(list)))
}

/// Trims whitespace, list numbering leftovers and wrapping quotes.
fn clean(s: &str) -> String {
    let mut t = s.trim();
    // drop the numbering of a following list item, e.g. "...\n2."
    if let Some(pos) = t.rfind('\n') {
        let tail = t[pos + 1..].trim();
        if !tail.is_empty() && tail.trim_end_matches('.').chars().all(|c| c.is_ascii_digit()) {
            t = t[..pos].trim();
        }
    }
    let t = t.trim_end_matches('\\').trim();
    let quotes: &[char] = &['"', '\'', '`', '“', '”', '‘', '’'];
    t.trim_start_matches(quotes).trim_end_matches(quotes).trim().to_string()
}

#[derive(Clone, Debug)]
enum RawId {
    Id(i64),
    Bad(String),
}

impl RawId {
    fn from_json(v: &Value) -> RawId {
        match v {
            Value::Number(n) => match (n.as_i64(), n.as_f64()) {
                (Some(i), _) => RawId::Id(i),
                (None, Some(f)) if f.fract() == 0.0 && f.abs() < 1e15 => RawId::Id(f as i64),
                _ => RawId::Bad(n.to_string()),
            },
            Value::String(s) => RawId::from_token(s),
            other => RawId::Bad(other.to_string()),
        }
    }

    fn from_token(s: &str) -> RawId {
        let t = s.trim().trim_matches(|c| c == '"' || c == '\'');
        let lower = t.to_ascii_lowercase();
        let digits = lower
            .strip_prefix("policy")
            .or_else(|| lower.strip_prefix('p'))
            .or_else(|| lower.strip_prefix('#'))
            .unwrap_or(&lower)
            .trim();
        digits.parse().map(RawId::Id).unwrap_or_else(|_| RawId::Bad(t.to_string()))
    }
}

fn split_list(s: &str) -> Vec<RawId> {
    s.trim()
        .trim_start_matches('[')
        .trim_end_matches(']')
        .split([',', ';'])
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(RawId::from_token)
        .collect()
}

fn validate(ids: Vec<RawId>, rule: VotingRule) -> Result<Vec<PolicyId>, ParseError> {
    let mut out = Vec::with_capacity(ids.len());
    let mut seen = BTreeSet::new();
    for id in ids {
        let n = match id {
            RawId::Id(n) => n,
            RawId::Bad(t) => return Err(ParseError::new(ParseErrorKind::MalformedId, format!("`{t}` is not a policy id"))),
        };
        let id = u32::try_from(n)
            .ok()
            .and_then(PolicyId::new)
            .ok_or_else(|| ParseError::new(ParseErrorKind::OutOfRange, format!("policy id {n} is outside 0..=26")))?;
        if !seen.insert(id) {
            return Err(ParseError::new(ParseErrorKind::DuplicateId, format!("policy {} listed twice", id.get())));
        }
        out.push(id);
    }
    let (lo, hi) = rule.cardinality();
    if out.len() < lo || out.len() > hi {
        let want = if lo == hi { format!("exactly {lo}") } else { format!("{lo} to {hi}") };
        return Err(ParseError::new(
            ParseErrorKind::Cardinality,
            format!("{} ballot lists {} policies, expected {want}", rule.name(), out.len()),
        ));
    }
    Ok(out)
}

/// JSON form of a vote, the layout the prompts ask for.
pub fn render_vote(vote: &ParsedVote) -> String {
    let value = serde_json::json!({
        "community": vote.community,
        "rationale": vote.rationale,
        "decision": vote.decision.iter().map(|id| id.get()).collect::<Vec<_>>(),
    });
    serde_json::to_string_pretty(&value).expect("serializable")
}
