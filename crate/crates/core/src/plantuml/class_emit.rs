use crate::model::{Association, AssociationKind, ClassDecl, ClassModel};
use std::fmt::Write;

/// Renders a class model as a PlantUML class diagram: one block per class
/// (attributes, then operations, each with a visibility prefix) followed by
/// one line per association.
pub fn emit_class_plantuml(model: &ClassModel) -> String {
    let mut out = String::from("@startuml\n");
    for class in &model.classes {
        write_class(&mut out, class);
    }
    for assoc in &model.associations {
        write_association(&mut out, assoc);
    }
    out.push_str("@enduml\n");
    out
}

fn write_class(out: &mut String, class: &ClassDecl) {
    let _ = writeln!(out, "class {} {{", quote_name(&class.name));
    for attr in &class.attributes {
        let _ = write!(out, "    {}{}", attr.visibility.symbol(), attr.name);
        if !attr.type_name.is_empty() {
            let _ = write!(out, " : {}", attr.type_name);
        }
        out.push('\n');
    }
    for op in &class.operations {
        let params: Vec<String> = op
            .parameters
            .iter()
            .map(|p| match (p.name.is_empty(), p.type_name.is_empty()) {
                (false, false) => format!("{} : {}", p.name, p.type_name),
                (false, true) => p.name.clone(),
                (true, _) => p.type_name.clone(),
            })
            .collect();
        let _ = writeln!(out, "    {}{}({})", op.visibility.symbol(), op.name, params.join(", "));
    }
    out.push_str("}\n");
}

fn write_association(out: &mut String, assoc: &Association) {
    let arrow = match assoc.kind {
        AssociationKind::Plain => "--",
        AssociationKind::Aggregation => "o--",
        AssociationKind::Composition => "*--",
        AssociationKind::Dependency => "..>",
    };
    let _ = write!(
        out,
        "{} {arrow} {}",
        quote_name(&assoc.source),
        quote_name(&assoc.target)
    );
    if let Some(label) = &assoc.label {
        let _ = write!(out, " : {label}");
    }
    out.push('\n');
}

fn quote_name(name: &str) -> String {
    if name
        .chars()
        .all(|c| c.is_alphanumeric() || c == '_' || c == ':' || c == '.')
    {
        name.to_string()
    } else {
        format!("\"{name}\"")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ClassDecl, Visibility};

    #[test]
    fn empty_model_is_fences_only() {
        assert_eq!(emit_class_plantuml(&ClassModel::default()), "@startuml\n@enduml\n");
    }

    #[test]
    fn labels_and_kinds() {
        let mut comp = Association::plain("A", "B");
        comp.kind = AssociationKind::Composition;
        let mut dep = Association::plain("B", "C");
        dep.kind = AssociationKind::Dependency;
        let m = ClassModel {
            classes: ["A", "B", "C"].into_iter().map(ClassDecl::new).collect(),
            associations: vec![Association::plain("A", "C").labeled("itsDisplay"), comp, dep],
        };
        let text = emit_class_plantuml(&m);
        assert!(text.contains("A -- C : itsDisplay\n"));
        assert!(text.contains("A *-- B\n"));
        assert!(text.contains("B ..> C\n"));
    }

    #[test]
    fn typed_members() {
        let mut c = ClassDecl::new("Boiler").with_attribute("temperature", Visibility::Protected);
        c.attributes[0].type_name = "int".into();
        c.operations.push(crate::model::Operation {
            name: "heat".into(),
            visibility: Visibility::Public,
            parameters: vec![crate::model::Parameter {
                name: "target".into(),
                type_name: "double".into(),
            }],
        });
        let text = emit_class_plantuml(&ClassModel {
            classes: vec![c],
            associations: vec![],
        });
        assert!(text.contains("    #temperature : int\n"));
        assert!(text.contains("    +heat(target : double)\n"));
    }
}
