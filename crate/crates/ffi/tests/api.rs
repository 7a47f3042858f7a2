//! Exercise the C ABI from Rust: statuses, handles, and value parity with
//! the core library.

use std::ffi::{CStr, CString};
use std::ptr;

use distillforge_ffi::*;

fn matrix(rows: usize, cols: usize, data: &[f64]) -> *mut DfMatrix {
    let mut out = ptr::null_mut();
    let status = unsafe { df_matrix_new(rows, cols, data.as_ptr(), &mut out) };
    assert_eq!(status, DfStatus::Ok);
    assert!(!out.is_null());
    out
}

fn matrix_data(m: *const DfMatrix) -> Vec<f64> {
    let mut rows = 0;
    let mut cols = 0;
    unsafe {
        assert_eq!(df_matrix_rows(m, &mut rows), DfStatus::Ok);
        assert_eq!(df_matrix_cols(m, &mut cols), DfStatus::Ok);
        let mut data = vec![0.0; rows * cols];
        assert_eq!(df_matrix_copy_data(m, data.as_mut_ptr(), rows * cols), DfStatus::Ok);
        data
    }
}

#[test]
fn version_is_the_package_version() {
    let v = unsafe { CStr::from_ptr(df_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn matrix_roundtrip_and_null_checks() {
    let m = matrix(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    assert_eq!(matrix_data(m), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    unsafe { df_matrix_free(m) };

    let mut out = ptr::null_mut();
    let status = unsafe { df_matrix_new(1, 1, ptr::null(), &mut out) };
    assert_eq!(status, DfStatus::NullPointer);
    let msg = unsafe { CStr::from_ptr(df_last_error_message()) };
    assert!(!msg.to_bytes().is_empty());

    let status = unsafe { df_matrix_new(1, 1, [f64::NAN].as_ptr(), &mut out) };
    assert_eq!(status, DfStatus::NonFinite);
}

#[test]
fn normalize_and_zero_row_status() {
    let m = matrix(1, 2, &[3.0, 4.0]);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { df_normalize_rows(m, &mut out) }, DfStatus::Ok);
    let data = matrix_data(out);
    assert!((data[0] - 0.6).abs() < 1e-15);
    assert!((data[1] - 0.8).abs() < 1e-15);
    unsafe {
        df_matrix_free(m);
        df_matrix_free(out);
    }

    let zero = matrix(1, 2, &[0.0, 0.0]);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { df_normalize_rows(zero, &mut out) }, DfStatus::ZeroNormRow);
    unsafe { df_matrix_free(zero) };
}

#[test]
fn fuse_matches_hand_example() {
    let a = matrix(1, 2, &[3.0, 4.0]);
    let b = matrix(1, 2, &[1.0, 0.0]);
    let teachers = [a as *const DfMatrix, b as *const DfMatrix];
    let mut fused = ptr::null_mut();
    assert_eq!(
        unsafe { df_fuse(teachers.as_ptr(), 2, &mut fused) },
        DfStatus::Ok
    );
    let data = matrix_data(fused);
    let r2 = std::f64::consts::SQRT_2;
    for (got, want) in data.iter().zip([0.6 / r2, 0.8 / r2, 1.0 / r2, 0.0]) {
        assert!((got - want).abs() < 1e-12);
    }
    unsafe {
        df_matrix_free(a);
        df_matrix_free(b);
        df_matrix_free(fused);
    }
}

#[test]
fn pair_count_values() {
    assert_eq!(df_pair_count(4), 15);
    assert_eq!(df_pair_count(128), 33_028_128);
}

#[test]
fn losses_match_core_library() {
    let s_data = [1.0, 0.0, 0.0, 1.0, 0.6, 0.8];
    let t_data = [0.0, 1.0, 1.0, 0.0, 0.8, 0.6];
    let s = matrix(3, 2, &s_data);
    let t = matrix(3, 2, &t_data);

    let core_s = distillforge::numcore::matrix::Matrix::from_vec(3, 2, s_data.to_vec());
    let core_t = distillforge::numcore::matrix::Matrix::from_vec(3, 2, t_data.to_vec());

    let mut value = 0.0;
    let mut grad = ptr::null_mut();
    assert_eq!(
        unsafe { df_cosine_loss(s, t, &mut value, &mut grad) },
        DfStatus::Ok
    );
    let (cv, cg) = distillforge::losses::cosine_loss(&core_s, &core_t).unwrap();
    assert_eq!(value, cv);
    assert_eq!(matrix_data(grad), cg.data());
    unsafe { df_matrix_free(grad) };

    let mut value = 0.0;
    assert_eq!(
        unsafe { df_sim_loss(s, t, &mut value, ptr::null_mut()) },
        DfStatus::Ok
    );
    assert_eq!(value, distillforge::losses::sim_loss(&core_s, &core_t).unwrap().0);

    let mut value = 0.0;
    let mut hinges = 0;
    assert_eq!(
        unsafe { df_resim_loss(s, t, 0.015, &mut value, ptr::null_mut(), &mut hinges) },
        DfStatus::Ok
    );
    let (rv, _, rh) = distillforge::losses::resim_loss(&core_s, &core_t, 0.015).unwrap();
    assert_eq!(value, rv);
    assert_eq!(hinges, rh);

    // shape errors surface as ShapeMismatch
    let wide = matrix(3, 4, &[0.5; 12]);
    let mut value = 0.0;
    assert_eq!(
        unsafe { df_cosine_loss(s, wide, &mut value, ptr::null_mut()) },
        DfStatus::ShapeMismatch
    );
    unsafe {
        df_matrix_free(s);
        df_matrix_free(t);
        df_matrix_free(wide);
    }
}

#[test]
fn net_forward_produces_unit_rows() {
    let head_dims = [10usize, 8, 4, 2];
    let mut net = ptr::null_mut();
    assert_eq!(
        unsafe { df_net_new(6, 8, 3, head_dims.as_ptr(), 5, 42, &mut net) },
        DfStatus::Ok
    );

    let base_data: Vec<f64> = (0..18).map(|i| (i as f64) * 0.1 - 0.9).collect();
    let base = matrix(3, 6, &base_data);
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { df_net_forward_text(net, base, 0, &mut out) },
        DfStatus::Ok
    );
    let data = matrix_data(out);
    for row in data.chunks(10) {
        let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }
    unsafe { df_matrix_free(out) };

    // vision path shares head dimensions
    let token_data: Vec<f64> = (0..10).map(|i| i as f64 * 0.05).collect();
    let img = matrix(2, 5, &token_data);
    let images = [img as *const DfMatrix];
    let mut vout = ptr::null_mut();
    assert_eq!(
        unsafe { df_net_forward_vision(net, images.as_ptr(), 1, 0, &mut vout) },
        DfStatus::Ok
    );
    let mut cols = 0;
    unsafe { assert_eq!(df_matrix_cols(vout, &mut cols), DfStatus::Ok) };
    assert_eq!(cols, 10);

    let mut bad = ptr::null_mut();
    assert_eq!(
        unsafe { df_net_forward_text(net, base, 7, &mut bad) },
        DfStatus::InvalidArgument
    );

    unsafe {
        df_matrix_free(base);
        df_matrix_free(img);
        df_matrix_free(vout);
        df_net_free(net);
    }
}

#[test]
fn embeddings_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("x.emb").to_str().unwrap()).unwrap();

    let m = matrix(2, 3, &[0.25, 0.5, 0.75, -1.0, 0.0, 1.0]);
    let ids = [CString::new("alpha").unwrap(), CString::new("beta").unwrap()];
    let id_ptrs = [ids[0].as_ptr(), ids[1].as_ptr()];
    assert_eq!(
        unsafe { df_embeddings_write(path.as_ptr(), id_ptrs.as_ptr(), m) },
        DfStatus::Ok
    );

    let mut handle = ptr::null_mut();
    assert_eq!(
        unsafe { df_embeddings_read(path.as_ptr(), &mut handle) },
        DfStatus::Ok
    );
    let mut count = 0;
    let mut dim = 0;
    unsafe {
        assert_eq!(df_embeddings_count(handle, &mut count), DfStatus::Ok);
        assert_eq!(df_embeddings_dim(handle, &mut dim), DfStatus::Ok);
    }
    assert_eq!((count, dim), (2, 3));
    let mut id = ptr::null();
    assert_eq!(unsafe { df_embeddings_id(handle, 1, &mut id) }, DfStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(id) }.to_str().unwrap(), "beta");

    let mut back = ptr::null_mut();
    assert_eq!(
        unsafe { df_embeddings_matrix(handle, &mut back) },
        DfStatus::Ok
    );
    let data = matrix_data(back);
    assert_eq!(data[0], 0.25);
    assert_eq!(data[5], 1.0);

    // out-of-range row index
    assert_eq!(
        unsafe { df_embeddings_id(handle, 9, &mut id) },
        DfStatus::InvalidArgument
    );

    unsafe {
        df_matrix_free(m);
        df_matrix_free(back);
        df_embeddings_free(handle);
    }
}

#[test]
fn run_stage_and_evaluate_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.toml");
    std::fs::write(
        &config_path,
        format!(
            "profile = \"desk\"\n[data]\nn_items = 64\n[stage1]\nsteps = 12\n[paths]\ncheckpoint_dir = {:?}\nmetrics_dir = {:?}\n",
            dir.path().join("ckpt").to_str().unwrap(),
            dir.path().join("metrics").to_str().unwrap(),
        ),
    )
    .unwrap();
    let config_c = CString::new(config_path.to_str().unwrap()).unwrap();
    let ckpt_path = dir.path().join("ckpt/stage1.ckpt");

    assert_eq!(
        unsafe {
            df_run_stage(
                config_c.as_ptr(),
                1,
                ptr::null(),
                ptr::null(),
                ptr::null(),
            )
        },
        DfStatus::Ok
    );
    assert!(ckpt_path.exists());

    // load the trained net and forward the eval batch
    let ckpt_c = CString::new(ckpt_path.to_str().unwrap()).unwrap();
    let mut net = ptr::null_mut();
    assert_eq!(
        unsafe { df_net_from_checkpoint(ckpt_c.as_ptr(), &mut net) },
        DfStatus::Ok
    );

    // Build the identity-teacher eval fixture through the ABI.
    let cfg = distillforge::config::RunConfig::load(&config_path).unwrap();
    let world = cfg.synth_world().unwrap();
    let eval = world.eval_data(16).unwrap();
    let base = matrix(16, eval.base.cols(), eval.base.data());
    let mut fc1 = ptr::null_mut();
    assert_eq!(
        unsafe { df_net_forward_text(net, base, 0, &mut fc1) },
        DfStatus::Ok
    );

    let ids: Vec<CString> = (0..16)
        .map(|i| CString::new(format!("e{i}")).unwrap())
        .collect();
    let id_ptrs: Vec<*const std::os::raw::c_char> = ids.iter().map(|s| s.as_ptr()).collect();
    let base_path = CString::new(dir.path().join("base.emb").to_str().unwrap()).unwrap();
    let teacher_path = CString::new(dir.path().join("teacher.emb").to_str().unwrap()).unwrap();
    unsafe {
        assert_eq!(
            df_embeddings_write(base_path.as_ptr(), id_ptrs.as_ptr(), base),
            DfStatus::Ok
        );
        assert_eq!(
            df_embeddings_write(teacher_path.as_ptr(), id_ptrs.as_ptr(), fc1),
            DfStatus::Ok
        );
    }

    let manifest_path = dir.path().join("eval.toml");
    std::fs::write(
        &manifest_path,
        "[alignment]\nbase = \"base.emb\"\nteacher = \"teacher.emb\"\n",
    )
    .unwrap();
    let manifest_c = CString::new(manifest_path.to_str().unwrap()).unwrap();

    let mut csv = ptr::null_mut();
    assert_eq!(
        unsafe { df_evaluate(ckpt_c.as_ptr(), manifest_c.as_ptr(), false, &mut csv) },
        DfStatus::Ok
    );
    let text = unsafe { CStr::from_ptr(csv) }.to_str().unwrap().to_string();
    unsafe { df_string_free(csv) };
    assert!(text.starts_with("head,dim,"));
    let fc1_row = text.lines().nth(1).unwrap();
    let mean_cosine: f64 = fc1_row.split(',').nth(2).unwrap().parse().unwrap();
    assert!((mean_cosine - 1.0).abs() < 1e-6, "identity fixture: {mean_cosine}");

    // bad stage number through the driver
    assert_eq!(
        unsafe { df_run_stage(config_c.as_ptr(), 9, ptr::null(), ptr::null(), ptr::null()) },
        DfStatus::InvalidArgument
    );

    unsafe {
        df_matrix_free(base);
        df_matrix_free(fc1);
        df_net_free(net);
    }
}
