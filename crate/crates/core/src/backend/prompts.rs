use std::collections::BTreeMap;
use std::path::Path;

use super::{BackendError, BackendRequest, RequestKind};

macro_rules! builtin {
    ($($kind:ident => $file:literal),* $(,)?) => {
        fn builtin_text(kind: RequestKind) -> &'static str {
            match kind {
                $(RequestKind::$kind => include_str!(concat!("../../prompts/", $file)),)*
            }
        }
    };
}

builtin! {
    Erase => "erase.txt",
    Repair => "repair.txt",
    Smudge => "smudge.txt",
    SetNumber => "set_number.txt",
    SetTense => "set_tense.txt",
    ApplyTone => "apply_tone.txt",
    EstimateTone => "estimate_tone.txt",
    Prompt => "prompt.txt",
    Resize => "resize.txt",
    Rotate => "rotate.txt",
    Split => "split.txt",
    Combine => "combine.txt",
    Unite => "unite.txt",
    Intersect => "intersect.txt",
    Subtract => "subtract.txt",
    Exclude => "exclude.txt",
}

/// System and user messages of a rendered template.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub system: String,
    pub user: String,
}

/// One plain-text template per request kind.
///
/// A template is a system message, a line holding only `---`, then the user
/// message. `{{name}}` is replaced by the slot or constraint of that name.
#[derive(Clone, Debug)]
pub struct PromptTemplates {
    templates: BTreeMap<RequestKind, String>,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self::builtin()
    }
}

impl PromptTemplates {
    pub fn builtin() -> Self {
        let templates = RequestKind::ALL.iter().map(|&k| (k, builtin_text(k).to_string())).collect();
        PromptTemplates { templates }
    }

    /// The built-in set, with `<kind>.txt` files from `dir` taking precedence.
    pub fn with_overrides(dir: &Path) -> std::io::Result<Self> {
        let mut t = Self::builtin();
        for kind in RequestKind::ALL {
            let path = dir.join(format!("{}.txt", kind.as_str()));
            if path.is_file() {
                t.templates.insert(kind, std::fs::read_to_string(path)?);
            }
        }
        Ok(t)
    }

    pub fn template(&self, kind: RequestKind) -> &str {
        &self.templates[&kind]
    }

    pub fn render(&self, req: &BackendRequest) -> Result<RenderedPrompt, BackendError> {
        let template = self.template(req.kind);
        let (system, user) = match template.split_once("\n---\n") {
            Some((s, u)) => (s, u),
            None => ("", template),
        };
        Ok(RenderedPrompt { system: substitute(system.trim(), req)?, user: substitute(user.trim(), req)? })
    }
}

fn lookup(req: &BackendRequest, name: &str) -> Option<String> {
    if let Some((_, text)) = req.slots.iter().find(|(slot, _)| slot.as_str() == name) {
        return Some(text.clone());
    }
    req.get(name).map(|c| c.render())
}

fn substitute(template: &str, req: &BackendRequest) -> Result<String, BackendError> {
    let mut out = String::with_capacity(template.len() + 64);
    let mut rest = template;
    while let Some(open) = rest.find("{{") {
        out.push_str(&rest[..open]);
        let after = &rest[open + 2..];
        let close = after
            .find("}}")
            .ok_or_else(|| BackendError::Validation(format!("unterminated placeholder in {} template", req.kind)))?;
        let name = after[..close].trim();
        let value = lookup(req, name).ok_or_else(|| {
            BackendError::Validation(format!("{} template needs `{name}`, which the request lacks", req.kind))
        })?;
        out.push_str(&value);
        rest = &after[close + 2..];
    }
    out.push_str(rest);
    Ok(out)
}
