use std::ffi::{CStr, CString};
use std::ptr;

use lookahead_smc_ffi::*;

const INITIAL: [f64; 2] = [0.5, 0.5];
const TRANSITION: [f64; 4] = [0.85, 0.15, 0.25, 0.75];
const EMISSION: [f64; 4] = [0.8, 0.2, 0.3, 0.7];
const YS: [usize; 5] = [0, 1, 1, 0, 1];

fn last_error() -> String {
    let p = smc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn hmm() -> *mut SmcHmm {
    let mut h = ptr::null_mut();
    let s = unsafe { smc_hmm_new(2, 2, INITIAL.as_ptr(), TRANSITION.as_ptr(), EMISSION.as_ptr(), &mut h) };
    assert_eq!(s, SmcStatus::Ok);
    h
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(smc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn posterior_sums_to_one_and_filter_agrees() {
    let h = hmm();
    let mut exact = [0.0; 2];
    let mut approx = [0.0; 2];
    unsafe {
        assert_eq!(smc_hmm_posterior(h, YS.as_ptr(), YS.len(), 2, 2, exact.as_mut_ptr()), SmcStatus::Ok);
        assert_eq!(
            smc_hmm_lookahead_filter(h, YS.as_ptr(), YS.len(), 2, 2, 0, 20_000, 7, approx.as_mut_ptr()),
            SmcStatus::Ok
        );
    }
    assert!((exact.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((exact[1] - approx[1]).abs() < 0.02, "{exact:?} vs {approx:?}");
    let mut pilot = [0.0; 2];
    unsafe {
        assert_eq!(
            smc_hmm_lookahead_filter(h, YS.as_ptr(), YS.len(), 2, 2, 4, 20_000, 7, pilot.as_mut_ptr()),
            SmcStatus::Ok
        );
        smc_hmm_free(h);
    }
    assert!((exact[1] - pilot[1]).abs() < 0.02, "{exact:?} vs {pilot:?}");
}

#[test]
fn bad_arguments_report_status_and_message() {
    let mut h = ptr::null_mut();
    let bad = [0.5, 0.6];
    let s = unsafe { smc_hmm_new(2, 2, bad.as_ptr(), TRANSITION.as_ptr(), EMISSION.as_ptr(), &mut h) };
    assert_eq!(s, SmcStatus::Config);
    assert!(h.is_null());
    assert!(last_error().contains("probability"));

    let h = hmm();
    let mut out = [0.0; 2];
    let ys = [0usize, 5];
    unsafe {
        assert_eq!(smc_hmm_posterior(h, ys.as_ptr(), 2, 1, 0, out.as_mut_ptr()), SmcStatus::InvalidArgument);
        assert_eq!(
            smc_hmm_lookahead_filter(h, YS.as_ptr(), YS.len(), 4, 3, 0, 10, 1, out.as_mut_ptr()),
            SmcStatus::InvalidArgument
        );
        assert_eq!(smc_hmm_posterior(ptr::null(), YS.as_ptr(), 5, 1, 0, out.as_mut_ptr()), SmcStatus::NullPointer);
        assert_eq!(smc_hmm_posterior(h, YS.as_ptr(), 5, 1, 0, ptr::null_mut()), SmcStatus::NullPointer);
        smc_hmm_free(h);
    }
    assert!(last_error().contains("null"));
}

#[test]
fn experiment_round_trip_and_run() {
    let json = CString::new(r#"{"experiment":"qam","particles":20,"reps":2,"horizon":60,"lags":[0,2]}"#).unwrap();
    let mut e = ptr::null_mut();
    unsafe {
        assert_eq!(smc_experiment_from_json(json.as_ptr(), &mut e), SmcStatus::Ok);
        assert_eq!(smc_experiment_set_reps(e, 3, 11), SmcStatus::Ok);
        assert_eq!(smc_experiment_set_reps(e, 0, 11), SmcStatus::InvalidArgument);

        let mut text = ptr::null_mut();
        assert_eq!(smc_experiment_to_json(e, &mut text), SmcStatus::Ok);
        let resolved = CStr::from_ptr(text).to_str().unwrap().to_owned();
        smc_string_free(text);
        assert!(resolved.contains("\"reps\": 3"));

        let mut r = ptr::null_mut();
        assert_eq!(smc_experiment_run(e, &mut r), SmcStatus::Ok);
        let mut n = 0;
        assert_eq!(smc_results_len(r, &mut n), SmcStatus::Ok);
        assert_eq!(n, 6);

        let mut ber = f64::NAN;
        let metric = CString::new("ber").unwrap();
        assert_eq!(smc_results_mean(r, metric.as_ptr(), 2, &mut ber), SmcStatus::Ok);
        assert!((0.0..=1.0).contains(&ber));
        let missing = CString::new("rmse1").unwrap();
        assert_eq!(smc_results_mean(r, missing.as_ptr(), 2, &mut ber), SmcStatus::InvalidArgument);

        let mut csv = ptr::null_mut();
        assert_eq!(smc_results_to_csv(r, &mut csv), SmcStatus::Ok);
        let body = CStr::from_ptr(csv).to_str().unwrap().to_owned();
        smc_string_free(csv);
        assert!(body.starts_with("kind,rep,"));
        assert_eq!(body.lines().count(), 1 + 6 + 4);

        smc_results_free(r);
        smc_experiment_free(e);
    }
}

#[test]
fn config_errors_map_to_config_status() {
    let mut e = ptr::null_mut();
    let kind = CString::new("weather").unwrap();
    let json = CString::new(r#"{"particles": 0}"#).unwrap();
    unsafe {
        assert_eq!(smc_experiment_preset(kind.as_ptr(), &mut e), SmcStatus::Config);
        assert_eq!(smc_experiment_from_json(json.as_ptr(), &mut e), SmcStatus::Config);
        assert!(e.is_null());
        let nonlinear = CString::new("nonlinear").unwrap();
        assert_eq!(smc_experiment_preset(nonlinear.as_ptr(), &mut e), SmcStatus::Ok);
        smc_experiment_free(e);
        smc_experiment_free(ptr::null_mut());
        smc_string_free(ptr::null_mut());
    }
}
