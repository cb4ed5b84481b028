use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Method, Profile, Topic, VARIANTS_PER_PAIR};

static DEFAULT_VARIANT_TEMPLATE: &str = include_str!("../../data/prompts/variant.txt");
static DEFAULT_BACKSTORY_TEMPLATE: &str = include_str!("../../data/prompts/backstory.txt");

/// Substitutes `{name}` placeholders in a single left-to-right pass, so text
/// inserted for one placeholder is never rescanned. Unknown names are kept as is.
pub(crate) fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        let hit = tail.find('}').and_then(|close| {
            let name = &tail[1..close];
            vars.iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &tail[close + 1..];
            }
            None => {
                out.push('{');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Drops `#` comment lines and surrounding blank lines.
pub(crate) fn strip_comments(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
        .trim()
        .to_string()
}

/// The four-part variant prompt: task instruction, profile slot, output format,
/// profile adherence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub task: String,
    pub profile: String,
    pub format: String,
    pub adherence: String,
    pub n_variants: usize,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate::parse(DEFAULT_VARIANT_TEMPLATE).expect("bundled template is well formed")
    }
}

impl PromptTemplate {
    /// Parses a template file with `[1]`, `[2]`, `[3a]` and `[3b]` section markers.
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: [Option<Vec<&str>>; 4] = Default::default();
        let mut current: Option<usize> = None;
        for (lineno, line) in text.lines().enumerate() {
            if line.starts_with('#') {
                continue;
            }
            let slot = match line.trim() {
                "[1]" => Some(0),
                "[2]" => Some(1),
                "[3a]" => Some(2),
                "[3b]" => Some(3),
                _ => None,
            };
            match (slot, current) {
                (Some(i), _) => {
                    if sections[i].is_some() {
                        return Err(Error::parse(
                            "template",
                            lineno + 1,
                            format!("section {} repeated", line.trim()),
                        ));
                    }
                    sections[i] = Some(Vec::new());
                    current = Some(i);
                }
                (None, Some(i)) => sections[i].as_mut().unwrap().push(line),
                (None, None) if line.trim().is_empty() => {}
                (None, None) => {
                    return Err(Error::parse(
                        "template",
                        lineno + 1,
                        "text before the first section marker",
                    ))
                }
            }
        }
        let names = ["[1]", "[2]", "[3a]", "[3b]"];
        let mut parts = Vec::with_capacity(4);
        for (i, s) in sections.into_iter().enumerate() {
            let body = s
                .map(|lines| lines.join("\n").trim().to_string())
                .unwrap_or_default();
            if body.is_empty() {
                return Err(Error::Validation(format!(
                    "template section {} is missing or empty",
                    names[i]
                )));
            }
            parts.push(body);
        }
        let [task, profile, format, adherence]: [String; 4] = parts.try_into().unwrap();
        for (part, needle, name) in [
            (&task, "{seed_query}", "[1]"),
            (&profile, "{profile_description}", "[2]"),
            (&format, "{n_variants}", "[3a]"),
        ] {
            if !part.contains(needle) {
                return Err(Error::Validation(format!(
                    "template section {name} must contain {needle}"
                )));
            }
        }
        Ok(PromptTemplate {
            task,
            profile,
            format,
            adherence,
            n_variants: VARIANTS_PER_PAIR,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    fn vars<'a>(
        &self,
        topic: &'a Topic,
        profile: Option<&'a Profile>,
        n: &'a str,
    ) -> Vec<(&'static str, &'a str)> {
        let mut v = vec![("seed_query", topic.seed_query.as_str()), ("n_variants", n)];
        if let Some(p) = profile {
            v.push(("profile_name", p.name.as_str()));
            v.push(("profile_description", p.description.as_str()));
        }
        v
    }
}

/// Renders all four parts for a non-neutral profile.
pub fn build_prompt(topic: &Topic, profile: &Profile, template: &PromptTemplate) -> Result<String> {
    if profile.method == Method::Neutral {
        return Err(Error::Contract(format!(
            "profile {} is neutral; use build_neutral_prompt",
            profile.profile_id
        )));
    }
    if profile.description.trim().is_empty() {
        return Err(Error::Validation(format!(
            "profile {} has an empty description",
            profile.profile_id
        )));
    }
    let n = template.n_variants.to_string();
    let vars = template.vars(topic, Some(profile), &n);
    Ok([
        &template.task,
        &template.profile,
        &template.format,
        &template.adherence,
    ]
    .iter()
    .map(|part| render(part, &vars))
    .collect::<Vec<_>>()
    .join("\n\n"))
}

/// Renders only the task instruction and output format.
pub fn build_neutral_prompt(topic: &Topic, template: &PromptTemplate) -> String {
    let n = template.n_variants.to_string();
    let vars = template.vars(topic, None, &n);
    format!(
        "{}\n\n{}",
        render(&template.task, &vars),
        render(&template.format, &vars)
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackstoryTemplate {
    pub text: String,
    pub max_words: usize,
}

impl Default for BackstoryTemplate {
    fn default() -> Self {
        BackstoryTemplate {
            text: strip_comments(DEFAULT_BACKSTORY_TEMPLATE),
            max_words: super::BACKSTORY_MAX_WORDS,
        }
    }
}

impl BackstoryTemplate {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let text = strip_comments(&text);
        if !text.contains("{seed_query}") {
            return Err(Error::Validation(
                "backstory template must contain {seed_query}".into(),
            ));
        }
        Ok(BackstoryTemplate {
            text,
            max_words: super::BACKSTORY_MAX_WORDS,
        })
    }

    pub fn build(&self, topic: &Topic) -> String {
        let max = self.max_words.to_string();
        render(
            &self.text,
            &[("seed_query", &topic.seed_query), ("max_words", &max)],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emily() -> Profile {
        Profile {
            profile_id: "emily".into(),
            method: Method::Persona,
            name: "Emily".into(),
            description: "Emily is a 34-year-old marine biologist.".into(),
        }
    }

    fn topic() -> Topic {
        Topic::new("2001", "how much money do i need in bangkok").unwrap()
    }

    #[test]
    fn prompt_carries_seed_description_and_count() {
        let t = PromptTemplate::default();
        let p = build_prompt(&topic(), &emily(), &t).unwrap();
        assert!(p.contains("how much money do i need in bangkok"));
        assert!(p.contains("Emily is a 34-year-old marine biologist."));
        assert!(p.contains("exactly 3 queries as a JSON array of strings"));
        assert!(!p.contains('{'));
    }

    #[test]
    fn neutral_prompt_omits_profile_parts() {
        let t = PromptTemplate::default();
        let p = build_neutral_prompt(&topic(), &t);
        assert!(p.contains("how much money do i need in bangkok"));
        assert!(p.contains("JSON array"));
        assert!(!p.contains("Transformation profile"));
        assert!(!p.contains(&render(&t.adherence, &[])));
    }

    #[test]
    fn neutral_profile_is_contract_error() {
        let t = PromptTemplate::default();
        assert!(matches!(
            build_prompt(&topic(), &Profile::neutral(), &t),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn empty_description_is_validation_error() {
        let mut p = emily();
        p.description = "  ".into();
        assert!(matches!(
            build_prompt(&topic(), &p, &PromptTemplate::default()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn placeholder_text_in_seed_is_not_expanded() {
        let t = PromptTemplate::default();
        let topic = Topic::new("1", "what is {profile_name}").unwrap();
        let p = build_prompt(&topic, &emily(), &t).unwrap();
        assert!(p.contains("what is {profile_name}"));
    }

    #[test]
    fn custom_count_is_rendered() {
        let t = PromptTemplate {
            n_variants: 5,
            ..Default::default()
        };
        assert!(build_neutral_prompt(&topic(), &t).contains("exactly 5 queries"));
    }

    #[test]
    fn malformed_templates_rejected() {
        assert!(PromptTemplate::parse(
            "[1]\n{seed_query}\n[2]\n{profile_description}\n[3a]\nformat\n[3b]\nx"
        )
        .is_err());
        assert!(PromptTemplate::parse("preamble\n[1]\n{seed_query}").is_err());
        assert!(PromptTemplate::parse(
            "[1]\n{seed_query}\n[2]\n{profile_description}\n[3a]\n{n_variants}\n[3b]\nx"
        )
        .is_ok());
    }

    #[test]
    fn backstory_prompt_has_seed() {
        let p = BackstoryTemplate::default().build(&topic());
        assert!(p.contains("Seed query: how much money do i need in bangkok"));
        assert!(p.contains("120"));
    }
}
