use super::IngestError;
use crate::model::{
    Association, AssociationKind, Attribute, ClassDecl, ClassModel, Operation, Parameter, Visibility,
};
use crate::Parsed;
use roxmltree::{Document, Node};
use std::collections::{HashMap, HashSet};

/// Attribute in the XMI namespace (`xmi:id`, `xmi:type`, `xmi:idref`).
fn xmi_attr<'a>(node: Node<'a, '_>, local: &str) -> Option<&'a str> {
    node.attributes()
        .find(|a| a.name() == local && a.namespace().is_some_and(|ns| ns.to_ascii_uppercase().contains("XMI")))
        .map(|a| a.value())
}

/// `uml:Class` → `Class`.
fn uml_type<'a>(node: Node<'a, '_>) -> Option<&'a str> {
    xmi_attr(node, "type").map(|t| t.rsplit(':').next().unwrap_or(t))
}

fn is_class(node: Node) -> bool {
    node.is_element()
        && matches!(node.tag_name().name(), "packagedElement" | "ownedMember" | "nestedClassifier")
        && uml_type(node) == Some("Class")
        && node.attribute("name").is_some_and(|n| !n.trim().is_empty())
}

fn visibility(node: Node) -> Visibility {
    match node.attribute("visibility") {
        Some("private") => Visibility::Private,
        Some("protected") => Visibility::Protected,
        _ => Visibility::Public,
    }
}

fn children<'a, 'input>(node: Node<'a, 'input>, tag: &'a str) -> impl Iterator<Item = Node<'a, 'input>> + 'a {
    node.children().filter(move |c| c.is_element() && c.tag_name().name() == tag)
}

fn byte_offset(text: &str, row: u32, col: u32) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(row.saturating_sub(1) as usize)
        .map(str::len)
        .sum();
    let line = &text[line_start.min(text.len())..];
    line_start
        + line
            .char_indices()
            .nth(col.saturating_sub(1) as usize)
            .map_or(line.len(), |(i, _)| i)
}

struct Index<'a, 'input> {
    by_id: HashMap<&'a str, Node<'a, 'input>>,
    /// xmi:id of a class → flattened class name.
    class_names: HashMap<&'a str, String>,
}

impl<'a, 'input> Index<'a, 'input> {
    /// Id referenced by the `type` attribute or a `<type>` child.
    fn type_ref(&self, node: Node<'a, 'input>) -> Option<TypeRef<'a>> {
        if let Some(id) = node.attribute("type") {
            return Some(TypeRef::Id(id));
        }
        let t = children(node, "type").next()?;
        if let Some(id) = xmi_attr(t, "idref") {
            return Some(TypeRef::Id(id));
        }
        t.attribute("href")
            .and_then(|h| h.rsplit('#').next())
            .map(TypeRef::Href)
    }

    fn type_name(&self, node: Node<'a, 'input>) -> String {
        match self.type_ref(node) {
            None => String::new(),
            Some(TypeRef::Href(name)) => name.to_string(),
            Some(TypeRef::Id(id)) => {
                if let Some(name) = self.class_names.get(id) {
                    return name.clone();
                }
                if let Some(name) = self.by_id.get(id).and_then(|n| n.attribute("name")) {
                    return name.to_string();
                }
                // Vendor primitive ids such as `EAJava_int`.
                match id.split_once('_') {
                    Some((prefix, rest)) if prefix.starts_with("EA") => rest.to_string(),
                    _ => String::new(),
                }
            }
        }
    }

    fn class_of_type(&self, node: Node<'a, 'input>) -> Option<&String> {
        match self.type_ref(node)? {
            TypeRef::Id(id) => self.class_names.get(id),
            TypeRef::Href(_) => None,
        }
    }

    fn class_of_node(&self, node: Node<'a, 'input>) -> Option<&String> {
        xmi_attr(node, "id").and_then(|id| self.class_names.get(id))
    }
}

enum TypeRef<'a> {
    Id(&'a str),
    Href(&'a str),
}

fn qualified_name(node: Node) -> String {
    let mut parts = vec![node.attribute("name").unwrap_or_default().trim().to_string()];
    let mut cur = node.parent();
    while let Some(p) = cur {
        if is_class(p) {
            parts.push(p.attribute("name").unwrap_or_default().trim().to_string());
        }
        cur = p.parent();
    }
    parts.reverse();
    parts.join("::")
}

/// Reads the UML class subset of an XMI 2.x document: classes with owned
/// attributes and operations, associations through their member ends,
/// dependencies and generalizations. Unknown elements are ignored.
pub fn parse_xmi(document: &[u8]) -> Result<Parsed<ClassModel>, IngestError> {
    let text = std::str::from_utf8(document).map_err(|e| IngestError::Xml {
        offset: e.valid_up_to(),
        message: "document is not valid UTF-8".into(),
    })?;
    let doc = Document::parse(text).map_err(|e| {
        let pos = e.pos();
        IngestError::Xml {
            offset: byte_offset(text, pos.row, pos.col),
            message: e.to_string(),
        }
    })?;

    let mut index = Index {
        by_id: HashMap::new(),
        class_names: HashMap::new(),
    };
    let mut class_nodes = Vec::new();
    for node in doc.descendants().filter(Node::is_element) {
        if let Some(id) = xmi_attr(node, "id") {
            index.by_id.entry(id).or_insert(node);
        }
        if is_class(node) {
            class_nodes.push(node);
        }
    }
    for &node in &class_nodes {
        if let Some(id) = xmi_attr(node, "id") {
            index.class_names.insert(id, qualified_name(node));
        }
    }

    let mut warnings = Vec::new();
    let mut model = ClassModel::default();
    let mut seen_classes = HashSet::new();
    for &node in &class_nodes {
        let name = qualified_name(node);
        if !seen_classes.insert(name.clone()) {
            warnings.push(format!("duplicate class `{name}` ignored"));
            continue;
        }
        model.classes.push(read_class(&index, node, name, &mut warnings));
    }
    if model.classes.is_empty() {
        return Err(IngestError::EmptyModel);
    }

    let mut seen = HashSet::new();
    let mut push = |assoc: Association, warnings: &mut Vec<String>| {
        let mut assoc = assoc;
        if assoc.source == assoc.target && assoc.kind != AssociationKind::Plain {
            warnings.push(format!("self-association on `{}` downgraded to plain", assoc.source));
            assoc.kind = AssociationKind::Plain;
        }
        let key = (assoc.source.clone(), assoc.target.clone(), assoc.label.clone());
        if seen.insert(key) {
            model.associations.push(assoc);
        } else {
            warnings.push(format!("duplicate association {} -- {} ignored", assoc.source, assoc.target));
        }
    };

    for node in doc.descendants().filter(Node::is_element) {
        match uml_type(node) {
            Some("Association") => match read_association(&index, node) {
                Ok(a) => push(a, &mut warnings),
                Err(w) => warnings.push(w),
            },
            Some("Dependency") | Some("Usage") | Some("Realization") => {
                let end = |attr: &str| {
                    node.attribute(attr)
                        .or_else(|| children(node, attr).next().and_then(|c| xmi_attr(c, "idref")))
                        .and_then(|id| index.class_names.get(id))
                        .cloned()
                };
                match (end("client"), end("supplier")) {
                    (Some(s), Some(t)) if s != t => push(dependency(&s, &t), &mut warnings),
                    (Some(_), Some(_)) => {}
                    _ => warnings.push(format!(
                        "dependency {} has an unresolved end, dropped",
                        xmi_attr(node, "id").unwrap_or("?")
                    )),
                }
            }
            _ => {}
        }
        if node.tag_name().name() == "generalization" {
            let owner = node.parent().filter(|p| is_class(*p)).and_then(|p| index.class_of_node(p));
            let general = node
                .attribute("general")
                .or_else(|| children(node, "general").next().and_then(|c| xmi_attr(c, "idref")))
                .and_then(|id| index.class_names.get(id));
            if let (Some(s), Some(t)) = (owner, general) {
                if s != t {
                    let (s, t) = (s.clone(), t.clone());
                    push(dependency(&s, &t), &mut warnings);
                }
            }
        }
    }

    Ok(Parsed {
        value: model,
        warnings,
    })
}

fn dependency(source: &str, target: &str) -> Association {
    Association {
        kind: AssociationKind::Dependency,
        ..Association::plain(source, target)
    }
}

fn read_class(index: &Index, node: Node, name: String, warnings: &mut Vec<String>) -> ClassDecl {
    let mut class = ClassDecl::new(name);
    for attr in children(node, "ownedAttribute") {
        // Navigable association ends are not plain attributes.
        if attr.attribute("association").is_some() {
            continue;
        }
        let Some(attr_name) = attr.attribute("name").filter(|n| !n.trim().is_empty()) else {
            continue;
        };
        if class.attributes.iter().any(|a| a.name == attr_name) {
            warnings.push(format!("duplicate attribute {}.{attr_name} ignored", class.name));
            continue;
        }
        class.attributes.push(Attribute {
            name: attr_name.to_string(),
            visibility: visibility(attr),
            type_name: index.type_name(attr),
        });
    }
    for op in children(node, "ownedOperation") {
        let Some(op_name) = op.attribute("name").filter(|n| !n.trim().is_empty()) else {
            continue;
        };
        let parameters = children(op, "ownedParameter")
            .filter(|p| p.attribute("direction") != Some("return"))
            .map(|p| Parameter {
                name: p.attribute("name").unwrap_or_default().to_string(),
                type_name: index.type_name(p),
            })
            .collect();
        let op = Operation {
            name: op_name.to_string(),
            visibility: visibility(op),
            parameters,
        };
        if class.operations.iter().any(|o| o.signature() == op.signature()) {
            warnings.push(format!("duplicate operation {}.{} ignored", class.name, op.signature()));
            continue;
        }
        class.operations.push(op);
    }
    class
}

fn read_association(index: &Index, node: Node) -> Result<Association, String> {
    let id = xmi_attr(node, "id").unwrap_or("?");
    let mut end_ids: Vec<&str> = children(node, "memberEnd").filter_map(|m| xmi_attr(m, "idref")).collect();
    if end_ids.is_empty() {
        if let Some(list) = node.attribute("memberEnd") {
            end_ids = list.split_whitespace().collect();
        }
    }
    if end_ids.len() != 2 {
        return Err(format!("association {id} has {} member ends, dropped", end_ids.len()));
    }
    let mut ends = Vec::new();
    for end_id in &end_ids {
        let end = index.by_id.get(end_id).copied();
        match end.and_then(|e| index.class_of_type(e).map(|c| (e, c))) {
            Some(pair) => ends.push(pair),
            None => return Err(format!("association {id}: member end `{end_id}` does not resolve to a class, dropped")),
        }
    }

    // An end owned by a class is that class's navigable reference.
    let owned = ends.iter().find_map(|(e, target)| {
        let parent = e.parent()?;
        (e.tag_name().name() == "ownedAttribute" && is_class(parent))
            .then(|| index.class_of_node(parent).map(|owner| (*e, owner.clone(), (*target).clone())))
            .flatten()
    });
    let (source, target, end_label) = match owned {
        Some((e, owner, target)) => (owner, target, e.attribute("name")),
        None => (ends[0].1.clone(), ends[1].1.clone(), None),
    };
    let label = node
        .attribute("name")
        .or(end_label)
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string);
    let kind = ends
        .iter()
        .map(|(e, _)| match e.attribute("aggregation") {
            Some("composite") => AssociationKind::Composition,
            Some("shared") => AssociationKind::Aggregation,
            _ => AssociationKind::Plain,
        })
        .max_by_key(|k| match k {
            AssociationKind::Composition => 2,
            AssociationKind::Aggregation => 1,
            _ => 0,
        })
        .unwrap_or_default();
    Ok(Association {
        source,
        target,
        label,
        kind,
    })
}
