use std::collections::HashMap;

/// Canonical form of a state or trigger label: camel-case, snake-case and
/// kebab-case boundaries become single spaces, everything is lowercased and
/// any run of non-alphanumerics collapses to one space.
pub fn normalize_label(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len() + 4);
    let mut pending_space = false;
    for (i, &c) in chars.iter().enumerate() {
        if !c.is_alphanumeric() {
            pending_space = true;
            continue;
        }
        if i > 0 && c.is_uppercase() {
            let prev = chars[i - 1];
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            if prev.is_lowercase() || prev.is_numeric() || (prev.is_uppercase() && next_lower) {
                pending_space = true;
            }
        }
        if pending_space && !out.is_empty() {
            out.push(' ');
        }
        pending_space = false;
        out.extend(c.to_lowercase());
    }
    out
}

/// 1.0 for labels with equal normalized form, otherwise the Dice ratio of
/// their token multisets: 2·|A∩B| / (|A| + |B|).
pub fn label_similarity(a: &str, b: &str) -> f64 {
    let na = normalize_label(a);
    let nb = normalize_label(b);
    if na == nb {
        return 1.0;
    }
    let ta: Vec<&str> = na.split(' ').filter(|t| !t.is_empty()).collect();
    let tb: Vec<&str> = nb.split(' ').filter(|t| !t.is_empty()).collect();
    if ta.is_empty() || tb.is_empty() {
        return 0.0;
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &ta {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &tb {
        if let Some(n) = counts.get_mut(t) {
            if *n > 0 {
                *n -= 1;
                common += 1;
            }
        }
    }
    2.0 * common as f64 / (ta.len() + tb.len()) as f64
}
