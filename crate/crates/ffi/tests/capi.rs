use std::ffi::{CStr, CString};
use std::ptr;

use fastbp_ffi::*;

const CHAIN: &str = "MRF M=2 nodes=2 edges=1
g 0 1 1
g 1 2 1
e 0 1 p
pot p fbar=0.5
col 0 0:1
col 1 1:1
";

fn parse(text: &str) -> *mut FbpModel {
    let text = CString::new(text).unwrap();
    let mut model = ptr::null_mut();
    assert_eq!(
        unsafe { fbp_model_parse(text.as_ptr(), &mut model) },
        FbpStatus::Ok
    );
    assert!(!model.is_null());
    model
}

fn last_error() -> String {
    let p = fbp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn chain_beliefs_match_exact_marginals() {
    let model = parse(CHAIN);
    unsafe {
        assert_eq!(fbp_model_num_nodes(model), 2);
        assert_eq!(fbp_model_num_labels(model), 2);
        let mut exact = [0.0; 4];
        assert_eq!(
            fbp_exact_marginals(model, exact.as_mut_ptr(), 4),
            FbpStatus::Ok
        );
        assert!((exact[0] - 5.0 / 9.0).abs() < 1e-12);
        assert!((exact[1] - 4.0 / 9.0).abs() < 1e-12);
        for kernel in [FbpKernel::Standard, FbpKernel::Fast] {
            let mut beliefs = [0.0; 4];
            assert_eq!(
                fbp_run_beliefs(model, kernel as u32, 2, beliefs.as_mut_ptr(), 4),
                FbpStatus::Ok
            );
            for (b, e) in beliefs.iter().zip(&exact) {
                assert!((b - e).abs() <= 1e-12 * e);
            }
        }
        let mut labels = [9u32; 2];
        assert_eq!(
            fbp_run_labels(
                model,
                FbpKernel::Fast as u32,
                FbpDomain::MaxSum as u32,
                2,
                labels.as_mut_ptr(),
                2
            ),
            FbpStatus::Ok
        );
        assert_eq!(labels, [0, 0]);
        fbp_model_free(model);
    }
}

#[test]
fn stereo_model_labels_identical_images_zero() {
    let (h, w) = (6usize, 20usize);
    let img: Vec<u8> = (0..h * w).map(|i| (i * 73 % 251) as u8).collect();
    let mut params = fbp_stereo_default_params();
    params.num_disparities = 4;
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(
            fbp_model_stereo(img.as_ptr(), img.as_ptr(), h, w, &params, &mut model),
            FbpStatus::Ok
        );
        assert_eq!(fbp_model_num_nodes(model), h * w);
        let mut fast = vec![0u32; h * w];
        let mut standard = vec![0u32; h * w];
        for (kernel, out) in [
            (FbpKernel::Fast, &mut fast),
            (FbpKernel::Standard, &mut standard),
        ] {
            assert_eq!(
                fbp_run_labels(
                    model,
                    kernel as u32,
                    FbpDomain::MaxSum as u32,
                    10,
                    out.as_mut_ptr(),
                    h * w
                ),
                FbpStatus::Ok
            );
        }
        assert_eq!(fast, standard);
        for r in 0..h {
            assert!(fast[r * w..r * w + w - 4].iter().all(|&l| l == 0));
        }
        fbp_model_free(model);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(
            fbp_model_parse(ptr::null(), &mut model),
            FbpStatus::NullPointer
        );
        let bad = CString::new("MRF M=2 nodes=1").unwrap();
        assert_eq!(
            fbp_model_parse(bad.as_ptr(), &mut model),
            FbpStatus::ParseError
        );
        assert!(!last_error().is_empty());
        assert!(model.is_null());

        let model = parse(CHAIN);
        let mut small = [0.0; 3];
        assert_eq!(
            fbp_run_beliefs(model, 1, 1, small.as_mut_ptr(), 3),
            FbpStatus::BufferTooSmall
        );
        assert!(last_error().contains("4 needed"));
        let mut labels = [0u32; 2];
        assert_eq!(
            fbp_run_labels(model, 7, 0, 1, labels.as_mut_ptr(), 2),
            FbpStatus::InvalidArgument
        );
        assert_eq!(
            fbp_run_labels(model, 0, 5, 1, labels.as_mut_ptr(), 2),
            FbpStatus::InvalidArgument
        );
        assert_eq!(
            fbp_run_labels(model, 0, 0, 1, ptr::null_mut(), 2),
            FbpStatus::NullPointer
        );
        assert_eq!(
            fbp_run_labels(ptr::null(), 0, 0, 1, labels.as_mut_ptr(), 2),
            FbpStatus::NullPointer
        );
        fbp_model_free(model);

        assert_eq!(fbp_model_num_nodes(ptr::null()), 0);
        fbp_model_free(ptr::null_mut());

        let img = [0u8; 4];
        let mut params = fbp_stereo_default_params();
        let mut out = ptr::null_mut();
        assert_eq!(
            fbp_model_stereo(img.as_ptr(), img.as_ptr(), 2, 2, &params, &mut out),
            FbpStatus::ModelError
        );
        params.num_disparities = 2;
        assert_eq!(
            fbp_model_stereo(img.as_ptr(), img.as_ptr(), 2, 2, &params, &mut out),
            FbpStatus::Ok
        );
        fbp_model_free(out);
    }
}

#[test]
fn enumeration_limit_reported() {
    let mut text = String::from("MRF M=8 nodes=9 edges=0\n");
    for i in 0..9 {
        text.push_str(&format!("g {i} 1 1 1 1 1 1 1 1\n"));
    }
    let model = parse(&text);
    let mut out = vec![0.0; 72];
    unsafe {
        assert_eq!(
            fbp_exact_marginals(model, out.as_mut_ptr(), 72),
            FbpStatus::TooLarge
        );
        fbp_model_free(model);
    }
}

#[test]
fn header_declares_the_api() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/fastbp.h")).unwrap();
    for name in [
        "fbp_model_parse",
        "fbp_model_stereo",
        "fbp_model_free",
        "fbp_run_labels",
        "fbp_run_beliefs",
        "fbp_exact_marginals",
        "fbp_last_error",
        "FBP_STATUS_BUFFER_TOO_SMALL",
        "typedef struct FbpModel FbpModel",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
