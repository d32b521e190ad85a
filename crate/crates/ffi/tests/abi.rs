use std::ffi::{CStr, CString};
use std::ptr;

use seqrank::pipeline::{SampleSource, SyntheticSource};
use seqrank::ranking::{rpc_train, RpcConfig};
use seqrank_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(seqrank_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn plan_through_the_c_api() {
    unsafe {
        let classes = CString::new("cube,can,carton").unwrap();
        let mut scene = ptr::null_mut();
        assert_eq!(
            seqrank_scene_generate(classes.as_ptr(), SeqrankWorkspace::Container, 5, &mut scene),
            SeqrankStatus::Ok
        );
        let mut n = 0;
        assert_eq!(seqrank_scene_object_count(scene, &mut n), SeqrankStatus::Ok);
        assert_eq!(n, 3);

        // a JSON round trip gives the same plan
        let mut json = ptr::null_mut();
        assert_eq!(seqrank_scene_to_json(scene, &mut json), SeqrankStatus::Ok);
        let mut copy = ptr::null_mut();
        assert_eq!(seqrank_scene_from_json(json, &mut copy), SeqrankStatus::Ok);
        seqrank_string_free(json);

        let mut plan = ptr::null_mut();
        let mut full = ptr::null_mut();
        assert_eq!(seqrank_plan(scene, ptr::null(), false, &mut plan), SeqrankStatus::Ok);
        assert_eq!(seqrank_plan(copy, ptr::null(), true, &mut full), SeqrankStatus::Ok);
        let (mut c1, mut c2) = (0.0, 0.0);
        seqrank_plan_best_cost(plan, &mut c1);
        seqrank_plan_best_cost(full, &mut c2);
        assert_eq!(c1, c2);
        assert!(c1 >= 3.0);

        let mut len = 0;
        let mut short = [0u32; 2];
        assert_eq!(
            seqrank_plan_best_sequence(plan, short.as_mut_ptr(), short.len(), &mut len),
            SeqrankStatus::BufferTooSmall
        );
        assert_eq!(len, 3);
        let mut ids = [0u32; 3];
        assert_eq!(seqrank_plan_best_sequence(plan, ids.as_mut_ptr(), 3, &mut len), SeqrankStatus::Ok);
        let mut sorted = ids;
        sorted.sort();
        assert_eq!(sorted, [1, 2, 3]);

        let mut frac = -1.0;
        seqrank_plan_pruned_fraction(plan, &mut frac);
        assert!((0.0..=1.0).contains(&frac));
        let mut report = ptr::null_mut();
        assert_eq!(seqrank_plan_report_json(plan, &mut report), SeqrankStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(report).to_str().unwrap()).unwrap();
        assert_eq!(v["best"]["sequence"].as_array().unwrap().len(), 3);
        seqrank_string_free(report);

        let bad = [1.0, 1.0, -2.0, 1.0, 1.0, 1.0];
        let mut p3 = ptr::null_mut();
        assert_ne!(seqrank_plan(scene, bad.as_ptr(), false, &mut p3), SeqrankStatus::Ok);
        assert!(p3.is_null());
        assert!(!last_error().is_empty());

        seqrank_plan_free(plan);
        seqrank_plan_free(full);
        seqrank_scene_free(scene);
        seqrank_scene_free(copy);
    }
}

#[test]
fn predict_through_the_c_api() {
    let src = SyntheticSource::default();
    let data: Vec<_> = (0..15).flat_map(|id| src.produce(id).unwrap().samples).collect();
    let model = rpc_train(&data, &RpcConfig::default()).unwrap();
    let json = CString::new(model.to_json().unwrap()).unwrap();
    let probe = &data[0].features.0;
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(seqrank_model_from_json(json.as_ptr(), &mut m), SeqrankStatus::Ok);
        let mut n = 0;
        seqrank_model_label_count(m, &mut n);
        assert_eq!(n, 4);
        let mut order = [usize::MAX; 4];
        assert_eq!(
            seqrank_model_predict(m, probe.as_ptr(), probe.len(), order.as_mut_ptr(), 4),
            SeqrankStatus::Ok
        );
        let expected = seqrank::ranking::rpc_predict(&model, &data[0].features).unwrap().ranking;
        for (k, &i) in order.iter().enumerate() {
            let mut label = ptr::null_mut();
            assert_eq!(seqrank_model_label(m, i, &mut label), SeqrankStatus::Ok);
            assert_eq!(CStr::from_ptr(label).to_str().unwrap(), expected[k]);
            seqrank_string_free(label);
        }
        assert_eq!(
            seqrank_model_predict(m, probe.as_ptr(), probe.len() - 1, order.as_mut_ptr(), 4),
            SeqrankStatus::InvalidArgument
        );
        let mut label = ptr::null_mut();
        assert_eq!(seqrank_model_label(m, 9, &mut label), SeqrankStatus::InvalidArgument);
        seqrank_model_free(m);
        seqrank_model_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_every_export() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let src = std::fs::read_to_string(format!("{dir}/src/lib.rs")).unwrap();
    let header = std::fs::read_to_string(format!("{dir}/include/seqrank.h")).unwrap();
    let mut count = 0;
    for line in src.lines() {
        let Some(rest) = line.split("extern \"C\" fn ").nth(1) else { continue };
        let name = rest.split('(').next().unwrap();
        assert!(header.contains(&format!("{name}(")), "{name} missing from the header");
        count += 1;
    }
    assert!(count >= 20, "{count}");
    let v = unsafe { CStr::from_ptr(seqrank_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
