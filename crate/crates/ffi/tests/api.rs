use std::ffi::{CStr, CString};
use std::ptr;

use opinion_ffi::*;

fn last_error() -> String {
    let p = opn_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn fig4_consensus(lambda: f64) -> *mut OpnModel {
    let mut m = ptr::null_mut();
    let s = unsafe { opn_model_new_homogeneous(17, 3, 0.0, -1.5, 0.2, 0.1, lambda, &mut m) };
    assert_eq!(s, OpnStatus::Ok);
    m
}

#[test]
fn model_lifecycle_and_dims() {
    let m = fig4_consensus(0.3);
    let (mut na, mut no) = (0, 0);
    assert_eq!(unsafe { opn_model_dims(m, &mut na, &mut no) }, OpnStatus::Ok);
    assert_eq!((na, no), (17, 3));
    assert_eq!(unsafe { opn_model_set_lambda(m, 0.4) }, OpnStatus::Ok);
    unsafe { opn_model_free(m) };
    unsafe { opn_model_free(ptr::null_mut()) };
}

#[test]
fn analysis_of_consensus_model() {
    let m = fig4_consensus(0.3);
    let mut a = OpnAnalysis { kind: OpnBifurcationKind::ModeInteraction, lambda_crit: 0.0, c1: 0.0, c2: 0.0, eig_consensus: 0.0, eig_dissensus: 0.0 };
    assert_eq!(unsafe { opn_analyze(m, &mut a) }, OpnStatus::Ok);
    assert_eq!(a.kind, OpnBifurcationKind::Consensus);
    assert!((a.lambda_crit - 1.0 / 3.1).abs() < 1e-6);
    assert!(a.eig_consensus < 0.0);
    unsafe { opn_model_free(m) };
}

#[test]
fn critical_lambdas_and_degeneracy() {
    let (mut k, mut lc, mut ld) = (OpnBifurcationKind::ModeInteraction, 0.0, 0.0);
    let s = unsafe { opn_critical_lambdas(0.0, -0.5, 0.1, 0.2, 17, &mut k, &mut lc, &mut ld) };
    assert_eq!(s, OpnStatus::Ok);
    assert_eq!(k, OpnBifurcationKind::Dissensus);
    assert!((ld - 1.0 / 0.6).abs() < 1e-12);
    assert!(lc.is_nan());
    let s = unsafe { opn_critical_lambdas(0.0, 1.0, 0.3, 0.1, 3, &mut k, &mut lc, &mut ld) };
    assert_eq!(s, OpnStatus::Degenerate);
    assert!(last_error().contains("degenerate"));
}

#[test]
fn drift_checks_lengths_and_pointers() {
    let m = fig4_consensus(0.3);
    let z = vec![0.0; 51];
    let mut out = vec![1.0; 51];
    assert_eq!(unsafe { opn_drift(m, z.as_ptr(), 51, out.as_mut_ptr()) }, OpnStatus::Ok);
    assert!(out.iter().all(|v| v.abs() < 1e-15));
    assert_eq!(unsafe { opn_drift(m, z.as_ptr(), 50, out.as_mut_ptr()) }, OpnStatus::DimensionMismatch);
    assert_eq!(unsafe { opn_drift(m, ptr::null(), 51, out.as_mut_ptr()) }, OpnStatus::NullPointer);
    assert_eq!(unsafe { opn_drift(ptr::null(), z.as_ptr(), 51, out.as_mut_ptr()) }, OpnStatus::NullPointer);
    let mut bad = z.clone();
    bad[0] = 1.0;
    assert_eq!(unsafe { opn_drift(m, bad.as_ptr(), 51, out.as_mut_ptr()) }, OpnStatus::InvalidArgument);
    unsafe { opn_model_free(m) };
}

#[test]
fn integrate_above_threshold_reaches_opinionated_state() {
    let m = fig4_consensus(1.0 / 3.1 + 0.05);
    let mut z0 = vec![0.0; 51];
    for i in 0..17 {
        z0[3 * i] = 0.02;
        z0[3 * i + 1] = -0.01;
        z0[3 * i + 2] = -0.01;
    }
    let mut z = vec![0.0; 51];
    let mut class = OpnGroupClass::Unopinionated;
    let s = unsafe { opn_integrate(m, z0.as_ptr(), 51, 0.05, 500.0, z.as_mut_ptr(), &mut class) };
    assert_eq!(s, OpnStatus::Ok);
    assert_eq!(class, OpnGroupClass::Consensus);
    let mut again = OpnGroupClass::Unopinionated;
    assert_eq!(unsafe { opn_classify(z.as_ptr(), 17, 3, 0.05, &mut again) }, OpnStatus::Ok);
    assert_eq!(again, class);
    unsafe { opn_model_free(m) };
}

#[test]
fn json_model_and_perturbation() {
    let text = CString::new(r#"{"na": 3, "no": 3, "alpha": 0, "beta": -1, "gamma": 0.2, "delta": 0.1, "lambda": 0.5}"#).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { opn_model_from_json(text.as_ptr(), &mut m) }, OpnStatus::Ok);
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { opn_model_perturb(m, 0.01, 7, &mut p) }, OpnStatus::Ok);
    assert_eq!(unsafe { opn_model_perturb(m, -1.0, 7, &mut p) }, OpnStatus::InvalidArgument);
    let bad = CString::new(r#"{"na": 3, "no": 3, "lambda": 0.5, "extra": 1}"#).unwrap();
    let mut q = ptr::null_mut();
    assert_eq!(unsafe { opn_model_from_json(bad.as_ptr(), &mut q) }, OpnStatus::Json);
    assert!(q.is_null());
    unsafe {
        opn_model_free(p);
        opn_model_free(m);
    }
}

#[test]
fn catalog_access() {
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { opn_catalog_new(3, 3, OpnMode::Dissensus, &mut c) }, OpnStatus::Ok);
    let mut n = 0;
    assert_eq!(unsafe { opn_catalog_len(c, &mut n) }, OpnStatus::Ok);
    assert_eq!(n, 2);
    let mut v = vec![0.0; 9];
    assert_eq!(unsafe { opn_catalog_fix_vector(c, 0, v.as_mut_ptr(), 9) }, OpnStatus::Ok);
    assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(unsafe { opn_catalog_fix_vector(c, 5, v.as_mut_ptr(), 9) }, OpnStatus::InvalidArgument);
    let mut label = ptr::null_mut();
    assert_eq!(unsafe { opn_catalog_label(c, 0, &mut label) }, OpnStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(label) }.to_str().unwrap(), "Sigma_x_m[m=1]");
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { opn_catalog_to_json(c, &mut json) }, OpnStatus::Ok);
    let parsed: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
    assert_eq!(parsed.as_array().unwrap().len(), 2);
    unsafe {
        opn_string_free(label);
        opn_string_free(json);
        opn_catalog_free(c);
    }
    assert_eq!(unsafe { opn_catalog_new(0, 3, OpnMode::Consensus, &mut c) }, OpnStatus::InvalidArgument);
}
