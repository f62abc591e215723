use std::collections::BTreeSet;
use std::path::Path;

use super::{parse_rules, KiError, KnowledgeItem};

/// Rules in a directory with this name carry the empty (common) expert tag.
pub const COMMON_PACK_DIR: &str = "common";

/// Parses `(file name, source)` pairs into one tagged pack.
pub fn parse_pack<S: AsRef<str>>(
    sources: &[(S, S)],
    expert_tag: &str,
) -> Result<Vec<KnowledgeItem>, KiError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (file, text) in sources {
        let rules = parse_rules(text.as_ref()).map_err(|e| KiError::InFile {
            file: file.as_ref().to_string(),
            source: Box::new(e),
        })?;
        for mut rule in rules {
            if !seen.insert(rule.name.clone()) {
                return Err(KiError::DuplicateName {
                    name: rule.name,
                    pack: expert_tag.to_string(),
                });
            }
            rule.expert_tag = expert_tag.to_string();
            out.push(rule);
        }
    }
    Ok(out)
}

/// Loads every `*.ki` file of a pack directory, in file-name order. The
/// directory name is the expert tag.
pub fn load_pack_dir(dir: &Path) -> Result<Vec<KnowledgeItem>, KiError> {
    let name = dir
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| KiError::Io(format!("{}: not a pack directory", dir.display())))?;
    let tag = if name == COMMON_PACK_DIR { "" } else { name };
    let entries =
        std::fs::read_dir(dir).map_err(|e| KiError::Io(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ki"))
        .collect();
    files.sort();
    let mut sources = Vec::new();
    for f in files {
        let text = std::fs::read_to_string(&f)
            .map_err(|e| KiError::Io(format!("{}: {e}", f.display())))?;
        sources.push((f.display().to_string(), text));
    }
    parse_pack(&sources, tag)
}
