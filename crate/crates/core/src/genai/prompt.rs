//! Prompt construction.
//!
//! The initial prompt folds the selected PTKB statements into one fluent
//! sentence ahead of the utterance. First-person statements share the
//! subject: consecutive statements with the same verb are merged with "and"
//! (`I am vegetarian` + `I am lactose intolerant` becomes
//! `I am vegetarian and lactose intolerant`), and the resulting clauses are
//! joined with ", and ", eliding a repeated "I". Contractions in the input
//! are kept when they open a clause (`I'm` stays `I'm`); comparisons against
//! reference prompts should normalize `I'm`/`I am`, `I'd`/`I would` and
//! `I've`/`I have` first, see [`normalize_contractions`].

const CONTRACTIONS: [(&str, &str); 3] = [("I'm ", "I am "), ("I'd ", "I would "), ("I've ", "I have ")];

const SUMMARY_INSTRUCTION: &str = "Summarize the given passage in 1-2 sentences.";

/// Expands the first-person contractions the prompt builder understands.
pub fn normalize_contractions(text: &str) -> String {
    let mut out = text.replace('\u{2019}', "'");
    for (short, long) in CONTRACTIONS {
        out = out.replace(short, long);
    }
    out
}

#[derive(Debug)]
struct Clause {
    /// `Some((subject as written, verb, complement))` for "I <verb> <rest>".
    first_person: Option<(String, String, String)>,
    raw: String,
}

impl Clause {
    fn parse(statement: &str) -> Option<Clause> {
        let raw = statement.trim().trim_end_matches(['.', '!', ';']).trim().to_string();
        if raw.is_empty() {
            return None;
        }
        let apostrophe_fixed = raw.replace('\u{2019}', "'");
        for (short, long) in CONTRACTIONS {
            if let Some(rest) = apostrophe_fixed.strip_prefix(short) {
                let verb = long.trim_start_matches("I ").trim().to_string();
                return Some(Clause { first_person: Some((short.trim().to_string(), verb, rest.trim().to_string())), raw });
            }
        }
        if let Some(rest) = apostrophe_fixed.strip_prefix("I ") {
            let mut parts = rest.trim().splitn(2, char::is_whitespace);
            let verb = parts.next().unwrap_or_default().to_string();
            let complement = parts.next().unwrap_or_default().trim().to_string();
            if !verb.is_empty() && !complement.is_empty() {
                return Some(Clause { first_person: Some((format!("I {verb}"), verb, complement)), raw });
            }
        }
        Some(Clause { first_person: None, raw })
    }
}

enum Group {
    FirstPerson { subject: String, verb: String, complements: Vec<String> },
    Other(String),
}

fn join_and(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

fn lower_first(s: &str) -> String {
    if s.starts_with("I ") || s.starts_with("I'") {
        return s.to_string();
    }
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn combine(statements: &[&str]) -> Option<String> {
    let mut groups: Vec<Group> = Vec::new();
    for clause in statements.iter().filter_map(|s| Clause::parse(s)) {
        match (clause.first_person, groups.last_mut()) {
            (Some((_, verb, complement)), Some(Group::FirstPerson { verb: v, complements, .. }))
                if v.eq_ignore_ascii_case(&verb) =>
            {
                complements.push(complement);
            }
            (Some((subject, verb, complement)), _) => {
                groups.push(Group::FirstPerson { subject, verb, complements: vec![complement] })
            }
            (None, _) => groups.push(Group::Other(clause.raw)),
        }
    }
    if groups.is_empty() {
        return None;
    }
    let mut rendered = Vec::with_capacity(groups.len());
    let mut prev_first_person = false;
    for (i, g) in groups.iter().enumerate() {
        let text = match g {
            Group::FirstPerson { subject, verb, complements } => {
                let body = join_and(complements);
                let text = if prev_first_person {
                    format!("{verb} {body}")
                } else if subject.contains('\'') {
                    format!("{subject} {body}")
                } else {
                    format!("I {verb} {body}")
                };
                prev_first_person = true;
                text
            }
            Group::Other(raw) => {
                prev_first_person = false;
                if i == 0 { raw.clone() } else { lower_first(raw) }
            }
        };
        rendered.push(text);
    }
    Some(rendered.join(", and "))
}

/// `"<combined statements>. <utterance>"`, or the utterance alone when no
/// statement is selected.
pub fn build_initial_prompt<S: AsRef<str>>(selected_ptkbs: &[S], utterance: &str) -> String {
    let statements: Vec<&str> = selected_ptkbs.iter().map(AsRef::as_ref).collect();
    match combine(&statements) {
        Some(prefix) => format!("{prefix}. {}", utterance.trim()),
        None => utterance.trim().to_string(),
    }
}

/// Prompt for a follow-up shot: answer from the collected summaries.
pub fn build_grounded_prompt(combined_summary: &str, initial_prompt: &str) -> String {
    format!("Answer the question using this information: {combined_summary} Question: {initial_prompt}")
}

/// The summarizer sees only this instruction and the passage.
pub fn build_summary_prompt(passage_text: &str) -> String {
    format!("{SUMMARY_INSTRUCTION}\n\n{passage_text}")
}
