use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use concept_core::classifier::{train_classifier, ClassifierConfig};
use concept_core::corpus::make_splits;
use concept_core::extractor::{train_extractor, ExtractorConfig};
use concept_core::synthetic::{self, SyntheticParams};
use concept_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(p: *mut c_char) -> String {
    let s = CStr::from_ptr(p).to_str().unwrap().to_string();
    concept_string_free(p);
    s
}

fn last_error() -> String {
    let p = concept_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

const SCM: &str = r#"{"domains":{"k":2,"x":2,"p":2,"s":2},
    "prior_k":[0.5,0.5],
    "cond_x":[[0.8,0.2],[0.3,0.7]],
    "cond_p":[[0.9,0.1],[0.2,0.8]],
    "cond_s":[[[0.7,0.3],[0.4,0.6]],[[0.1,0.9],[0.5,0.5]]]}"#;

#[test]
fn scm_round_trip() {
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(concept_scm_from_json(c(SCM).as_ptr(), &mut h), ConceptStatus::Ok);
        assert!(concept_last_error().is_null());
        assert_eq!(concept_scm_x_size(h), 2);
        assert_eq!(concept_scm_s_size(h), 2);
        let (mut t, mut f, mut b) = ([0.0; 2], [0.0; 2], [0.0; 2]);
        assert_eq!(concept_scm_compare(h, 1, t.as_mut_ptr(), f.as_mut_ptr(), b.as_mut_ptr(), 2), ConceptStatus::Ok);
        // P(S=0 | do(X=1)) = Σ_k P(k) Σ_p P(p|1) P(0|p,k)
        let hand = 0.5 * (0.2 * 0.7 + 0.8 * 0.1) + 0.5 * (0.2 * 0.4 + 0.8 * 0.5);
        assert!((t[0] - hand).abs() < 1e-15);
        assert!((f[0] - t[0]).abs() < 1e-12 && (b[1] - t[1]).abs() < 1e-12);
        assert_eq!(concept_scm_compare(h, 2, t.as_mut_ptr(), f.as_mut_ptr(), b.as_mut_ptr(), 2), ConceptStatus::InvalidArgument);
        assert_eq!(concept_scm_compare(h, 0, t.as_mut_ptr(), ptr::null_mut(), b.as_mut_ptr(), 2), ConceptStatus::NullPointer);
        concept_scm_free(h);
        concept_scm_free(ptr::null_mut());
    }
}

#[test]
fn invalid_inputs() {
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(concept_scm_from_json(c("{}").as_ptr(), &mut h), ConceptStatus::Io);
        assert!(h.is_null());
        let bad = SCM.replace("[0.5,0.5]", "[0.6,0.5]");
        assert_eq!(concept_scm_from_json(c(&bad).as_ptr(), &mut h), ConceptStatus::Validation);
        assert!(last_error().contains("prior_k"));
        assert_eq!(concept_scm_from_json(ptr::null(), &mut h), ConceptStatus::NullPointer);
        let not_utf8 = [0xffu8, 0xfe, 0];
        assert_eq!(concept_scm_from_json(not_utf8.as_ptr().cast(), &mut h), ConceptStatus::InvalidUtf8);
        let mut clf = ptr::null_mut();
        assert_eq!(concept_classifier_load(c("/nonexistent/x.ckpt").as_ptr(), &mut clf), ConceptStatus::MissingArtifact);
        assert!(last_error().contains("missing artifact"));
    }
}

#[test]
fn hearst() {
    unsafe {
        let mut out = ptr::null_mut();
        let text = c("Lyon is one of the largest cities in France.");
        assert_eq!(concept_hearst_extract(text.as_ptr(), ConceptLanguage::En, &mut out), ConceptStatus::Ok);
        assert_eq!(take(out), r#"["largest cities in France"]"#);
        assert_eq!(concept_hearst_extract(c("熊猫属于熊科。").as_ptr(), ConceptLanguage::Zh, &mut out), ConceptStatus::Ok);
        assert_eq!(take(out), r#"["熊科"]"#);
    }
}

#[test]
fn models_through_handles() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synthetic::generate(&SyntheticParams {
        records_per_topic: 10,
        ..Default::default()
    });
    let tax = synthetic::taxonomy();
    let split = make_splits(&corpus.records, 5, 0).unwrap();
    let cc = ClassifierConfig {
        epochs: 1,
        num_layers: 1,
        hidden_dim: 16,
        embedding_dim: 16,
        ..Default::default()
    };
    let (clf, _) = train_classifier(&split, &tax, &cc).unwrap();
    let ec = ExtractorConfig {
        epochs: 1,
        num_layers: 1,
        hidden_dim: 16,
        embedding_dim: 16,
        ..Default::default()
    };
    let (ext, _) = train_extractor(&split, &tax, Some(&clf), &ec).unwrap();
    let cp: PathBuf = dir.path().join("c.ckpt");
    let ep: PathBuf = dir.path().join("e.ckpt");
    clf.save(&cp).unwrap();
    ext.save(&ep).unwrap();

    unsafe {
        let (mut hc, mut he) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(concept_classifier_load(c(cp.to_str().unwrap()).as_ptr(), &mut hc), ConceptStatus::Ok);
        assert_eq!(concept_extractor_load(c(ep.to_str().unwrap()).as_ptr(), &mut he), ConceptStatus::Ok);
        let entity = c("Mara Holm");
        let text = c("Mara Holm was a writer born in Lyon in 1901 .");
        let mut out = ptr::null_mut();
        assert_eq!(concept_classifier_classify(hc, entity.as_ptr(), text.as_ptr(), &mut out), ConceptStatus::Ok);
        let dist: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        let probs: f64 = dist["probabilities"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
        assert!((probs - 1.0).abs() < 1e-9);

        assert_eq!(concept_extractor_extract(he, hc, entity.as_ptr(), text.as_ptr(), f64::NAN, &mut out), ConceptStatus::Ok);
        let ex: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(ex["entity"], "Mara Holm");
        assert!(ex["spans"].is_array());
        // a prompted model refuses to run without its classifier
        assert_eq!(
            concept_extractor_extract(he, ptr::null(), entity.as_ptr(), text.as_ptr(), 0.5, &mut out),
            ConceptStatus::InvalidArgument
        );
        assert_eq!(concept_classifier_classify(hc, entity.as_ptr(), c("").as_ptr(), &mut out), ConceptStatus::InvalidArgument);
        concept_extractor_free(he);
        concept_classifier_free(hc);
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/concept.h")).unwrap();
    for name in [
        "concept_last_error",
        "concept_string_free",
        "concept_classifier_load",
        "concept_extractor_extract",
        "concept_scm_compare",
        "concept_hearst_extract",
        "typedef struct ConceptScm ConceptScm;",
        "CONCEPT_STATUS_MISSING_ARTIFACT = 4",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

/// Compiles a C program against the generated header and the shared library.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    if !lib_dir.join("libconcept_ffi.so").exists() {
        eprintln!("skipping: no shared library next to the test binary");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = std::process::Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(&lib_dir)
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .args(["-lconcept_ffi", "-lm", "-o"])
        .arg(&bin)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "C compilation failed"),
        Err(e) => {
            eprintln!("skipping: no C compiler ({e})");
            return;
        }
    }
    let out = std::process::Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "smoke exited with {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok 0.1.0"));
}
