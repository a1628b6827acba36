use sadgen_ffi::*;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

const TOGGLE: &str = "@startuml\n[*] --> Off\nOff --> On : press\nOn --> Off : press\n@enduml\n";

unsafe fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    sad_string_free(s);
    out
}

unsafe fn last_error() -> String {
    let p = sad_last_error();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_str().unwrap().to_string()
}

unsafe fn parse(text: &str) -> *mut SadStateMachine {
    let c = CString::new(text).unwrap();
    let mut sm = ptr::null_mut();
    assert_eq!(sad_state_machine_parse_plantuml(c.as_ptr(), &mut sm), SadStatus::Ok);
    sm
}

#[test]
fn state_machine_round_trip() {
    unsafe {
        let sm = parse(TOGGLE);
        let mut text = ptr::null_mut();
        assert_eq!(sad_state_machine_to_plantuml(sm, &mut text), SadStatus::Ok);
        let emitted = take(text);
        assert!(emitted.contains("Off --> On : press"));

        let mut json = ptr::null_mut();
        assert_eq!(sad_state_machine_to_json(sm, &mut json), SadStatus::Ok);
        let json = CString::new(take(json)).unwrap();
        let mut back = ptr::null_mut();
        assert_eq!(sad_state_machine_from_json(json.as_ptr(), &mut back), SadStatus::Ok);

        let mut ids = ptr::null_mut();
        assert_eq!(sad_state_machine_reachable(back, &mut ids), SadStatus::Ok);
        assert_eq!(take(ids), "Off\nOn");

        let mut count = 99usize;
        assert_eq!(sad_state_machine_validate(sm, &mut count, ptr::null_mut()), SadStatus::Ok);
        assert_eq!(count, 0);

        sad_state_machine_free(sm);
        sad_state_machine_free(back);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut sm = ptr::null_mut();
        assert_eq!(sad_state_machine_parse_plantuml(ptr::null(), &mut sm), SadStatus::NullPointer);
        assert_eq!(last_error(), "text is null");

        let bad = CString::new("not a diagram").unwrap();
        assert_eq!(sad_state_machine_parse_plantuml(bad.as_ptr(), &mut sm), SadStatus::ParseError);
        assert!(sm.is_null());

        let invalid = [0xffu8, 0];
        assert_eq!(
            sad_state_machine_parse_plantuml(invalid.as_ptr().cast(), &mut sm),
            SadStatus::InvalidUtf8
        );

        let no_entry = parse("@startuml\nA --> B : go\n@enduml\n");
        let mut ids = ptr::null_mut();
        assert_eq!(sad_state_machine_reachable(no_entry, &mut ids), SadStatus::NoEntryPoint);
        assert!(last_error().contains("no entry point"));
        sad_state_machine_free(no_entry);

        // a success clears the message
        let ok = parse(TOGGLE);
        assert!(sad_last_error().is_null());
        sad_state_machine_free(ok);
        sad_state_machine_free(ptr::null_mut());
        sad_string_free(ptr::null_mut());
    }
}

#[test]
fn scoring() {
    unsafe {
        let gt = parse(TOGGLE);
        let gen = parse("@startuml\n[*] --> Off\nOff --> On : press\nOn --> Off : press\nOn --> Broken : drop\n@enduml\n");
        let mut card = ptr::null_mut();
        assert_eq!(sad_score(gt, gen, ptr::null(), &mut card), SadStatus::Ok);

        let mut t = SadTriple {
            matched: 0,
            total: 0,
            hallucinated: 0,
        };
        assert_eq!(sad_score_card_triple(card, 4, &mut t), SadStatus::Ok);
        assert_eq!(
            t,
            SadTriple {
                matched: 3,
                total: 3,
                hallucinated: 1
            }
        );
        let mut text = ptr::null_mut();
        assert_eq!(sad_format_triple(t, &mut text), SadStatus::Ok);
        assert_eq!(take(text), "3/3 (1)");

        assert_eq!(sad_score_card_triple(card, 0, &mut t), SadStatus::OutOfRange);
        assert_eq!(sad_score_card_triple(card, 10, &mut t), SadStatus::OutOfRange);

        let mut json = ptr::null_mut();
        assert_eq!(sad_score_card_to_json(card, &mut json), SadStatus::Ok);
        assert!(take(json).contains("\"q9\""));

        let mut cfg = sad_score_config_default();
        assert_eq!(cfg.q9_manual, -1);
        cfg.q9_manual = 0;
        let mut manual = ptr::null_mut();
        assert_eq!(sad_score(gt, gt, &cfg, &mut manual), SadStatus::Ok);
        assert_eq!(sad_score_card_triple(manual, 9, &mut t), SadStatus::Ok);
        assert_eq!((t.matched, t.total), (0, 1));

        sad_score_card_free(card);
        sad_score_card_free(manual);
        sad_state_machine_free(gt);
        sad_state_machine_free(gen);
    }
}

#[test]
fn class_models() {
    let xmi = br#"<?xml version="1.0"?>
<xmi:XMI xmlns:xmi="http://www.omg.org/spec/XMI/20131001" xmlns:uml="http://www.omg.org/spec/UML/20131001">
  <uml:Model xmi:id="m" name="M">
    <packagedElement xmi:type="uml:Class" xmi:id="c1" name="Boiler"/>
    <packagedElement xmi:type="uml:Class" xmi:id="c2" name="Display"/>
  </uml:Model>
</xmi:XMI>"#;
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(sad_class_model_from_xmi(xmi.as_ptr(), xmi.len(), &mut model), SadStatus::Ok);
        assert_eq!(sad_class_model_class_count(model), 2);
        assert_eq!(sad_class_model_class_count(ptr::null()), 0);

        let mut puml = ptr::null_mut();
        assert_eq!(sad_class_model_to_plantuml(model, &mut puml), SadStatus::Ok);
        assert!(take(puml).contains("class Boiler"));

        let mut json = ptr::null_mut();
        assert_eq!(sad_class_model_to_json(model, &mut json), SadStatus::Ok);
        let json = CString::new(take(json)).unwrap();
        let mut back = ptr::null_mut();
        assert_eq!(sad_class_model_from_json(json.as_ptr(), &mut back), SadStatus::Ok);
        assert_eq!(sad_class_model_class_count(back), 2);

        // a class model is not a state machine
        let mut sm = ptr::null_mut();
        assert_eq!(sad_state_machine_from_json(json.as_ptr(), &mut sm), SadStatus::SerdeError);
        assert!(last_error().contains("class_model"));

        assert_eq!(sad_class_model_from_xmi(b"<broken".as_ptr(), 7, &mut back), SadStatus::ParseError);
        sad_class_model_free(model);
        sad_class_model_free(back);
    }
}

#[test]
fn extracts_block() {
    let resp = CString::new("Sure:\n```plantuml\n@startuml\n[*] --> A\n@enduml\n```\n").unwrap();
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(sad_extract_plantuml_block(resp.as_ptr(), &mut out), SadStatus::Ok);
        let block = take(out);
        assert!(block.starts_with("@startuml"));
        assert!(block.contains("[*] --> A"));
    }
}

fn header_path() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/include/sadgen.h"))
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(header_path()).unwrap();
    for decl in [
        "typedef struct SadStateMachine SadStateMachine;",
        "typedef struct SadClassModel SadClassModel;",
        "typedef struct SadScoreCard SadScoreCard;",
        "SAD_STATUS_OK = 0",
        "SAD_STATUS_NO_ENTRY_POINT",
        "SAD_STATUS_PANIC",
        "sad_state_machine_parse_plantuml(const char *text, struct SadStateMachine **out);",
        "sad_score(const struct SadStateMachine *ground_truth,",
        "struct SadScoreConfig sad_score_config_default(void);",
        "void sad_string_free(char *s);",
        "const char *sad_last_error(void);",
    ] {
        assert!(header.contains(decl), "missing `{decl}`");
    }
}

#[test]
fn header_compiles_as_c() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let dir = tempfile_dir();
    let src = dir.join("use_header.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{}\"\nint main(void) {{ SadStateMachine *sm = 0; SadStatus s = sad_state_machine_parse_plantuml(\"\", &sm); return s == SAD_STATUS_OK; }}\n",
            header_path().display()
        ),
    )
    .unwrap();
    match Command::new(&cc).args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).output() {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(e) => eprintln!("skipping C compile check, `{cc}` unavailable: {e}"),
    }
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("sadgen-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
