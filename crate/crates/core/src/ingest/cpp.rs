use super::IngestError;
use crate::model::{
    Association, AssociationKind, Attribute, ClassDecl, ClassModel, Operation, Parameter, Visibility,
};
use crate::Parsed;
use globset::{Glob, GlobSet, GlobSetBuilder};
use rayon::prelude::*;
use std::collections::HashSet;
use std::path::{Path, PathBuf};
use walkdir::WalkDir;

const SOURCE_EXTENSIONS: [&str; 7] = ["h", "hh", "hpp", "hxx", "cc", "cpp", "cxx"];

#[derive(Debug, Clone, Default)]
pub struct ScanOptions {
    /// Globs over paths relative to the root; every C++ file when empty.
    pub include: Vec<String>,
    pub exclude: Vec<String>,
}

fn globset(patterns: &[String]) -> Result<Option<GlobSet>, IngestError> {
    if patterns.is_empty() {
        return Ok(None);
    }
    let mut b = GlobSetBuilder::new();
    for p in patterns {
        let glob = Glob::new(p).map_err(|e| IngestError::Glob {
            pattern: p.clone(),
            message: e.to_string(),
        })?;
        b.add(glob);
    }
    b.build().map(Some).map_err(|e| IngestError::Glob {
        pattern: patterns.join(", "),
        message: e.to_string(),
    })
}

/// C++ files under `root` as (relative path with `/` separators, absolute path),
/// sorted by relative path.
pub(crate) fn source_files(root: &Path, opts: &ScanOptions) -> Result<Vec<(String, PathBuf)>, IngestError> {
    if !root.is_dir() {
        return Err(IngestError::MissingRoot(root.to_path_buf()));
    }
    let include = globset(&opts.include)?;
    let exclude = globset(&opts.exclude)?;
    let mut files = Vec::new();
    for entry in WalkDir::new(root).follow_links(true).into_iter().filter_map(Result::ok) {
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        let is_source = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| SOURCE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if !is_source {
            continue;
        }
        let rel = path.strip_prefix(root).unwrap_or(path);
        let rel_text = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        if include.as_ref().is_some_and(|g| !g.is_match(&rel_text)) {
            continue;
        }
        if exclude.as_ref().is_some_and(|g| g.is_match(&rel_text)) {
            continue;
        }
        files.push((rel_text, path.to_path_buf()));
    }
    files.sort();
    Ok(files)
}

/// Declaration-level scan of C++ sources. One class per `class`/`struct`
/// definition (nested ones flattened to `Outer::Inner`), members with the
/// visibility of their access section, a plain association labeled with the
/// member name whenever a member type mentions another discovered class, and
/// a dependency per discovered base class.
pub fn scan_cpp_sources(root: &Path, opts: &ScanOptions) -> Result<Parsed<ClassModel>, IngestError> {
    let files = source_files(root, opts)?;
    let scanned: Vec<(String, Result<Vec<RawClass>, String>)> = files
        .par_iter()
        .map(|(rel, abs)| {
            let result = std::fs::read(abs)
                .map(|bytes| scan_text(&String::from_utf8_lossy(&bytes)))
                .map_err(|e| e.to_string());
            (rel.clone(), result)
        })
        .collect();

    let mut warnings = Vec::new();
    let mut raw: Vec<(String, RawClass)> = Vec::new();
    for (rel, result) in scanned {
        match result {
            Ok(classes) => raw.extend(classes.into_iter().map(|c| (rel.clone(), c))),
            Err(e) => warnings.push(format!("{rel}: unreadable, skipped ({e})")),
        }
    }
    raw.sort_by(|a, b| (&a.0, a.1.offset).cmp(&(&b.0, b.1.offset)));

    let mut names = HashSet::new();
    let mut kept: Vec<(String, RawClass)> = Vec::new();
    for (rel, class) in raw {
        if names.insert(class.name.clone()) {
            kept.push((rel, class));
        } else {
            warnings.push(format!("{rel}: class `{}` already defined, ignored", class.name));
        }
    }
    if kept.is_empty() {
        return Err(IngestError::EmptyModel);
    }

    let mut model = ClassModel::default();
    let mut seen = HashSet::new();
    for (rel, class) in &kept {
        let mut decl = ClassDecl::new(class.name.clone());
        decl.source_path = Some(PathBuf::from(rel));
        for member in &class.attributes {
            if decl.attributes.iter().any(|a| a.name == member.name) {
                warnings.push(format!("{rel}: duplicate member {}.{}", class.name, member.name));
                continue;
            }
            decl.attributes.push(Attribute {
                name: member.name.clone(),
                visibility: member.visibility,
                type_name: render_type(&member.type_tokens),
            });
            for target in referenced_classes(&member.type_tokens, &class.name, &names) {
                let assoc = Association::plain(&class.name, &target).labeled(&member.name);
                if seen.insert((assoc.source.clone(), assoc.target.clone(), assoc.label.clone())) {
                    model.associations.push(assoc);
                }
            }
        }
        for op in &class.operations {
            if decl.operations.iter().any(|o| o.signature() == op.signature()) {
                continue;
            }
            decl.operations.push(op.clone());
        }
        for base in &class.bases {
            let Some(target) = resolve_name(base, &class.name, &names) else {
                continue;
            };
            if target == class.name {
                continue;
            }
            let assoc = Association {
                kind: AssociationKind::Dependency,
                ..Association::plain(&class.name, &target)
            };
            if seen.insert((assoc.source.clone(), assoc.target.clone(), None)) {
                model.associations.push(assoc);
            }
        }
        model.classes.push(decl);
    }
    Ok(Parsed {
        value: model,
        warnings,
    })
}

/// A qualified name as written (`ns::Boiler`) resolved against discovered
/// classes: the longest suffix that names one, preferring classes nested in
/// the current scope.
fn resolve_name(written: &str, scope: &str, names: &HashSet<String>) -> Option<String> {
    let parts: Vec<&str> = written.split("::").filter(|p| !p.is_empty()).collect();
    for start in 0..parts.len() {
        let suffix = parts[start..].join("::");
        let mut prefix = scope;
        loop {
            let candidate = if prefix.is_empty() {
                suffix.clone()
            } else {
                format!("{prefix}::{suffix}")
            };
            if names.contains(&candidate) {
                return Some(candidate);
            }
            match prefix.rfind("::") {
                Some(i) => prefix = &prefix[..i],
                None if !prefix.is_empty() => prefix = "",
                None => break,
            }
        }
    }
    None
}

fn referenced_classes(tokens: &[Token], scope: &str, names: &HashSet<String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if !tokens[i].is_ident() {
            i += 1;
            continue;
        }
        let mut written = tokens[i].text.clone();
        let mut j = i + 1;
        while j + 1 < tokens.len() && tokens[j].text == "::" && tokens[j + 1].is_ident() {
            written.push_str("::");
            written.push_str(&tokens[j + 1].text);
            j += 2;
        }
        if let Some(name) = resolve_name(&written, scope, names) {
            if !out.contains(&name) {
                out.push(name);
            }
        }
        i = j;
    }
    out
}

fn render_type(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        let tight_before = matches!(t.text.as_str(), "::" | "<" | ">" | "*" | "&" | "&&" | "," | "[" | "]")
            || (i > 0 && matches!(tokens[i - 1].text.as_str(), "::" | "<" | "["));
        if i > 0 && !tight_before {
            out.push(' ');
        }
        out.push_str(&t.text);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
struct Token {
    text: String,
    offset: usize,
}

impl Token {
    fn is_ident(&self) -> bool {
        self.text
            .chars()
            .next()
            .is_some_and(|c| c.is_alphabetic() || c == '_')
    }
}

#[derive(Debug)]
struct Member {
    name: String,
    visibility: Visibility,
    type_tokens: Vec<Token>,
}

#[derive(Debug)]
struct RawClass {
    name: String,
    offset: usize,
    attributes: Vec<Member>,
    operations: Vec<Operation>,
    bases: Vec<String>,
}

/// Blanks comments, string/char literals and preprocessor lines, keeping
/// byte offsets intact.
fn strip(text: &str) -> String {
    let b = text.as_bytes();
    let mut out = b.to_vec();
    let blank = |out: &mut Vec<u8>, from: usize, to: usize| {
        for c in &mut out[from..to] {
            if *c != b'\n' {
                *c = b' ';
            }
        }
    };
    let mut i = 0;
    let mut line_start = true;
    while i < b.len() {
        let c = b[i];
        if line_start && c == b'#' {
            let start = i;
            while i < b.len() && b[i] != b'\n' {
                if b[i] == b'\\' && i + 1 < b.len() && b[i + 1] == b'\n' {
                    i += 1;
                }
                i += 1;
            }
            blank(&mut out, start, i);
            continue;
        }
        if c == b'/' && b.get(i + 1) == Some(&b'/') {
            let start = i;
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
            blank(&mut out, start, i);
            continue;
        }
        if c == b'/' && b.get(i + 1) == Some(&b'*') {
            let start = i;
            i += 2;
            while i < b.len() && !(b[i] == b'*' && b.get(i + 1) == Some(&b'/')) {
                i += 1;
            }
            i = (i + 2).min(b.len());
            blank(&mut out, start, i);
            continue;
        }
        if c == b'"' || c == b'\'' {
            let start = i;
            i += 1;
            while i < b.len() && b[i] != c && b[i] != b'\n' {
                if b[i] == b'\\' {
                    i += 1;
                }
                i += 1;
            }
            i = (i + 1).min(b.len());
            blank(&mut out, start + 1, i.saturating_sub(1).max(start + 1));
            continue;
        }
        if c == b'\n' {
            line_start = true;
        } else if !c.is_ascii_whitespace() {
            line_start = false;
        }
        i += 1;
    }
    // Blanking only replaced ASCII bytes inside literals or whole regions, but a
    // multi-byte char may have been cut; fall back to lossy decoding.
    String::from_utf8_lossy(&out).into_owned()
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (offset, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_alphanumeric() || c == '_' {
            while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
        } else if (c == ':' || c == '&') && chars.get(i + 1).is_some_and(|n| n.1 == c) {
            i += 2;
        } else {
            i += 1;
        }
        let end = chars.get(i).map_or(text.len(), |x| x.0);
        tokens.push(Token {
            text: text[offset..end].to_string(),
            offset,
        });
    }
    tokens
}

fn scan_text(text: &str) -> Vec<RawClass> {
    let tokens = tokenize(&strip(text));
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if let Some(next) = try_class(&tokens, i, "", &mut out) {
            i = next;
        } else {
            i += 1;
        }
    }
    out
}

/// Index just past the group opened at `open` (`{`, `(`, `[` or `<`).
fn skip_group(tokens: &[Token], open: usize) -> usize {
    let (o, c) = match tokens[open].text.as_str() {
        "(" => ("(", ")"),
        "[" => ("[", "]"),
        "<" => ("<", ">"),
        _ => ("{", "}"),
    };
    let mut depth = 0usize;
    let mut i = open;
    while i < tokens.len() {
        let t = tokens[i].text.as_str();
        if t == o {
            depth += 1;
        } else if t == c {
            depth -= 1;
            if depth == 0 {
                return i + 1;
            }
        }
        i += 1;
    }
    tokens.len()
}

/// If a class/struct definition starts at `i`, records it (and its nested
/// classes) and returns the index after its closing brace.
fn try_class(tokens: &[Token], i: usize, scope: &str, out: &mut Vec<RawClass>) -> Option<usize> {
    let kw = tokens[i].text.as_str();
    if kw != "class" && kw != "struct" {
        return None;
    }
    if i > 0 && matches!(tokens[i - 1].text.as_str(), "enum" | "friend") {
        return None;
    }
    let mut j = i + 1;
    let mut name: Option<String> = None;
    while j < tokens.len() {
        let t = tokens[j].text.as_str();
        match t {
            "{" | ":" | ";" | "<" | "(" | "," | ">" | "=" | ")" | "*" | "&" => break,
            "[" => j = skip_group(tokens, j),
            "final" => j += 1,
            "::" => {
                // Out-of-line definition of a nested class: keep the last part.
                j += 1;
            }
            _ if tokens[j].is_ident() => {
                name = Some(t.to_string());
                j += 1;
            }
            _ => break,
        }
    }
    let name = name?;
    if j >= tokens.len() || !matches!(tokens[j].text.as_str(), "{" | ":") {
        return None;
    }
    let mut bases = Vec::new();
    if tokens[j].text == ":" {
        j += 1;
        let mut current = String::new();
        while j < tokens.len() && tokens[j].text != "{" {
            let t = tokens[j].text.as_str();
            match t {
                ";" => return None,
                "," => {
                    if !current.is_empty() {
                        bases.push(std::mem::take(&mut current));
                    }
                    j += 1;
                }
                "<" => j = skip_group(tokens, j),
                "public" | "private" | "protected" | "virtual" => j += 1,
                "::" => {
                    current.push_str("::");
                    j += 1;
                }
                _ => {
                    if tokens[j].is_ident() {
                        current.push_str(t);
                    }
                    j += 1;
                }
            }
        }
        if !current.is_empty() {
            bases.push(current);
        }
        if j >= tokens.len() {
            return None;
        }
    }
    let full = if scope.is_empty() {
        name
    } else {
        format!("{scope}::{name}")
    };
    let close = skip_group(tokens, j);
    let body_end = close.saturating_sub(1).max(j + 1);
    let default_vis = if kw == "struct" {
        Visibility::Public
    } else {
        Visibility::Private
    };
    let slot = out.len();
    out.push(RawClass {
        name: full.clone(),
        offset: tokens[i].offset,
        attributes: Vec::new(),
        operations: Vec::new(),
        bases,
    });
    let (attributes, operations) = scan_body(tokens, j + 1, body_end, &full, default_vis, out);
    out[slot].attributes = attributes;
    out[slot].operations = operations;
    Some(close)
}

const STORAGE: [&str; 8] = [
    "static", "mutable", "inline", "constexpr", "virtual", "explicit", "extern", "volatile",
];

fn scan_body(
    tokens: &[Token],
    start: usize,
    end: usize,
    scope: &str,
    default_vis: Visibility,
    out: &mut Vec<RawClass>,
) -> (Vec<Member>, Vec<Operation>) {
    let mut attributes = Vec::new();
    let mut operations = Vec::new();
    let mut vis = default_vis;
    let mut i = start;
    while i < end {
        let t = tokens[i].text.as_str();
        if matches!(t, "public" | "private" | "protected") && tokens.get(i + 1).is_some_and(|n| n.text == ":") {
            vis = match t {
                "public" => Visibility::Public,
                "protected" => Visibility::Protected,
                _ => Visibility::Private,
            };
            i += 2;
            continue;
        }
        if t == ";" {
            i += 1;
            continue;
        }
        if t == "{" {
            i = skip_group(tokens, i);
            continue;
        }
        if let Some(next) = try_class(tokens, i, scope, out) {
            // Skip an optional declarator list after the closing brace.
            i = next;
            while i < end && tokens[i].text != ";" {
                i += 1;
            }
            continue;
        }
        if matches!(t, "enum" | "using" | "typedef" | "friend" | "template" | "static_assert") {
            if t == "template" && tokens.get(i + 1).is_some_and(|n| n.text == "<") {
                i = skip_group(tokens, i + 1);
                continue;
            }
            while i < end && tokens[i].text != ";" {
                if tokens[i].text == "{" {
                    i = skip_group(tokens, i);
                } else {
                    i += 1;
                }
            }
            i += 1;
            continue;
        }

        // One member declaration.
        let mut decl: Vec<Token> = Vec::new();
        let mut has_paren = false;
        let mut initializer = false;
        while i < end {
            let t = tokens[i].text.as_str();
            match t {
                ";" => {
                    i += 1;
                    break;
                }
                "operator" if !initializer => {
                    // Fold `operator==`, `operator()` and `operator bool` into one token.
                    let offset = tokens[i].offset;
                    let mut name = String::from("operator");
                    i += 1;
                    if i + 1 < end && tokens[i].text == "(" && tokens[i + 1].text == ")" {
                        name.push_str("()");
                        i += 2;
                    } else {
                        while i < end && tokens[i].text != "(" {
                            if tokens[i].is_ident() {
                                name.push(' ');
                            }
                            name.push_str(&tokens[i].text);
                            i += 1;
                        }
                    }
                    decl.push(Token { text: name, offset });
                }
                "{" if has_paren => {
                    i = skip_group(tokens, i);
                    if i < end && tokens[i].text == ";" {
                        i += 1;
                    }
                    break;
                }
                "{" => {
                    initializer = true;
                    i = skip_group(tokens, i);
                }
                "(" | "[" | "<" if !initializer => {
                    if t == "(" && !has_paren {
                        has_paren = true;
                    }
                    let next = skip_group(tokens, i).min(end);
                    decl.extend_from_slice(&tokens[i..next]);
                    i = next;
                }
                "=" | ":" if !has_paren || t == "=" => {
                    initializer = true;
                    i += 1;
                }
                ":" => {
                    // Constructor initializer list up to the body.
                    initializer = true;
                    i += 1;
                }
                _ => {
                    if !initializer {
                        decl.push(tokens[i].clone());
                    }
                    i += 1;
                }
            }
        }
        if decl.is_empty() {
            continue;
        }
        if has_paren {
            if let Some(op) = read_operation(&decl, vis) {
                operations.push(op);
            }
        } else {
            attributes.extend(read_attributes(&decl, vis));
        }
    }
    (attributes, operations)
}

fn read_operation(decl: &[Token], visibility: Visibility) -> Option<Operation> {
    let open = decl.iter().position(|t| t.text == "(")?;
    if open == 0 {
        return None;
    }
    if !decl[open - 1].is_ident() {
        return None;
    }
    let mut name = decl[open - 1].text.clone();
    if open >= 2 && decl[open - 2].text == "~" {
        name = format!("~{name}");
    }
    let close = skip_group(decl, open);
    let inner = &decl[open + 1..close.saturating_sub(1).max(open + 1)];
    let mut parameters = Vec::new();
    let mut depth = 0i32;
    let mut current: Vec<Token> = Vec::new();
    let mut groups: Vec<Vec<Token>> = Vec::new();
    for t in inner {
        match t.text.as_str() {
            "(" | "<" | "[" | "{" => depth += 1,
            ")" | ">" | "]" | "}" => depth -= 1,
            "," if depth == 0 => {
                groups.push(std::mem::take(&mut current));
                continue;
            }
            _ => {}
        }
        current.push(t.clone());
    }
    if !current.is_empty() {
        groups.push(current);
    }
    for mut g in groups {
        if let Some(eq) = g.iter().position(|t| t.text == "=") {
            g.truncate(eq);
        }
        if g.is_empty() || (g.len() == 1 && g[0].text == "void") {
            continue;
        }
        let idents = g.iter().filter(|t| t.is_ident() && t.text != "const").count();
        let last = g.last().expect("non-empty");
        if idents >= 2 && last.is_ident() {
            let pname = last.text.clone();
            g.pop();
            parameters.push(Parameter {
                name: pname,
                type_name: render_type(&g),
            });
        } else {
            parameters.push(Parameter {
                name: String::new(),
                type_name: render_type(&g),
            });
        }
    }
    Some(Operation {
        name,
        visibility,
        parameters,
    })
}

fn read_attributes(decl: &[Token], visibility: Visibility) -> Vec<Member> {
    let decl: Vec<Token> = decl
        .iter()
        .filter(|t| !STORAGE.contains(&t.text.as_str()))
        .cloned()
        .collect();
    // Split declarators at top-level commas: `int a, *b;`
    let mut parts: Vec<Vec<Token>> = vec![Vec::new()];
    let mut depth = 0i32;
    for t in &decl {
        match t.text.as_str() {
            "<" | "(" | "[" => depth += 1,
            ">" | ")" | "]" => depth -= 1,
            "," if depth == 0 => {
                parts.push(Vec::new());
                continue;
            }
            _ => {}
        }
        parts.last_mut().expect("non-empty").push(t.clone());
    }
    let first = &parts[0];
    let Some(name_at) = first.iter().rposition(|t| t.is_ident()) else {
        return Vec::new();
    };
    if name_at == 0 {
        return Vec::new();
    }
    let base_type: Vec<Token> = first[..name_at]
        .iter()
        .filter(|t| t.text != "*" && t.text != "&")
        .cloned()
        .collect();
    let mut out = vec![Member {
        name: first[name_at].text.clone(),
        visibility,
        type_tokens: first[..name_at].to_vec(),
    }];
    for p in &parts[1..] {
        let Some(n) = p.iter().rposition(|t| t.is_ident()) else {
            continue;
        };
        let mut ty = base_type.clone();
        ty.extend(p[..n].iter().cloned());
        out.push(Member {
            name: p[n].text.clone(),
            visibility,
            type_tokens: ty,
        });
    }
    out
}
