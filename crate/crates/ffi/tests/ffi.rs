use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use sgframe_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(sgf_last_error_message()) }.to_str().unwrap().to_owned()
}

fn ring(n: u32) -> *mut SgfGraph {
    let src: Vec<u32> = (0..n).collect();
    let dst: Vec<u32> = (0..n).map(|i| (i + 1) % n).collect();
    let mut g = ptr::null_mut();
    let s = unsafe { sgf_graph_from_edges(n as usize, src.as_ptr(), dst.as_ptr(), ptr::null(), n as usize, &mut g) };
    assert_eq!(s, SgfStatus::Ok, "{}", last_error());
    g
}

fn dictionary(g: *const SgfGraph, bank: &str) -> *mut SgfDictionary {
    let bank = CString::new(bank).unwrap();
    let mut d = ptr::null_mut();
    let s = unsafe { sgf_dictionary_new(g, bank.as_ptr(), SgfLaplacian::Combinatorial, 0, 3, &mut d) };
    assert_eq!(s, SgfStatus::Ok, "{}", last_error());
    d
}

fn signal(n: usize) -> Vec<f64> {
    (0..n).map(|i| (0.4 * i as f64).sin() + if i < n / 2 { 1.0 } else { 0.0 }).collect()
}

#[test]
fn graph_handle_reports_sizes() {
    let g = ring(10);
    unsafe {
        assert_eq!(sgf_graph_num_vertices(g), 10);
        assert_eq!(sgf_graph_num_edges(g), 10);
        sgf_graph_free(g);
        assert_eq!(sgf_graph_num_vertices(ptr::null()), 0);
        sgf_graph_free(ptr::null_mut());
    }
}

#[test]
fn bad_edges_give_invalid_graph() {
    let src = [0u32, 1];
    let dst = [1u32, 7];
    let mut g = ptr::null_mut();
    let s = unsafe { sgf_graph_from_edges(3, src.as_ptr(), dst.as_ptr(), ptr::null(), 2, &mut g) };
    assert_eq!(s, SgfStatus::InvalidGraph);
    assert!(g.is_null());
    assert!(last_error().contains("out of range"));
}

#[test]
fn null_pointers_are_reported() {
    let mut g = ptr::null_mut();
    let s = unsafe { sgf_graph_from_edges(3, ptr::null(), ptr::null(), ptr::null(), 2, &mut g) };
    assert_eq!(s, SgfStatus::NullPointer);
    let s = unsafe { sgf_graph_read(ptr::null(), &mut g) };
    assert_eq!(s, SgfStatus::NullPointer);
    let mut d = ptr::null_mut();
    let s = unsafe { sgf_dictionary_new(ptr::null(), ptr::null(), SgfLaplacian::Normalized, 0, 0, &mut d) };
    assert_eq!(s, SgfStatus::NullPointer);
    let s = unsafe { sgf_analysis(ptr::null(), ptr::null(), 0, ptr::null_mut(), 0) };
    assert_eq!(s, SgfStatus::NullPointer);
}

#[test]
fn missing_file_is_an_io_error() {
    let path = CString::new("/nonexistent/graph.mtx").unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { sgf_graph_read(path.as_ptr(), &mut g) }, SgfStatus::Io);
    assert!(last_error().contains("/nonexistent/graph.mtx"));
}

#[test]
fn graph_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.mtx");
    std::fs::write(&path, "%%MatrixMarket matrix coordinate real symmetric\n4 4 3\n2 1 1\n3 2 2.5\n4 3 1\n").unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { sgf_graph_read(c.as_ptr(), &mut g) }, SgfStatus::Ok);
    unsafe {
        assert_eq!(sgf_graph_num_vertices(g), 4);
        assert_eq!(sgf_graph_num_edges(g), 3);
        sgf_graph_free(g);
    }
}

#[test]
fn bad_bank_toml_is_a_parse_error() {
    let g = ring(8);
    let bank = CString::new("j = 4\nbogus = 1").unwrap();
    let mut d = ptr::null_mut();
    let s = unsafe { sgf_dictionary_new(g, bank.as_ptr(), SgfLaplacian::Combinatorial, 0, 0, &mut d) };
    assert_eq!(s, SgfStatus::Parse);
    assert!(d.is_null());
    unsafe { sgf_graph_free(g) };
}

#[test]
fn analysis_synthesis_and_inverse() {
    let g = ring(16);
    let d = dictionary(g, "j = 4\nmode = \"exact\"");
    unsafe { sgf_graph_free(g) };
    let n = unsafe { sgf_dictionary_num_vertices(d) };
    let m = unsafe { sgf_dictionary_num_atoms(d) };
    assert_eq!((n, m), (16, 64));
    assert_eq!(unsafe { sgf_dictionary_num_bands(d) }, 4);
    assert!(unsafe { sgf_dictionary_lambda_bar(d) } >= 4.0 - 1e-12);

    let f = signal(n);
    let mut c = vec![0.0; m];
    assert_eq!(unsafe { sgf_analysis(d, f.as_ptr(), n, c.as_mut_ptr(), m) }, SgfStatus::Ok);

    // <S c, f> = <c, S* f> = ||c||^2 with c = S* f
    let mut back = vec![0.0; n];
    assert_eq!(unsafe { sgf_synthesis(d, c.as_ptr(), m, back.as_mut_ptr(), n) }, SgfStatus::Ok);
    let lhs: f64 = back.iter().zip(&f).map(|(a, b)| a * b).sum();
    let rhs: f64 = c.iter().map(|v| v * v).sum();
    assert!((lhs - rhs).abs() <= 1e-10 * rhs);

    let (mut a, mut b) = (0.0, 0.0);
    assert_eq!(unsafe { sgf_dictionary_frame_bounds(d, &mut a, &mut b) }, SgfStatus::Ok);
    assert!(a > 0.0 && a <= b);
    assert!(rhs >= a * f.iter().map(|v| v * v).sum::<f64>() * (1.0 - 1e-10));

    let mut r = vec![0.0; n];
    let s = unsafe { sgf_inverse_cg(d, c.as_ptr(), m, 1e-12, 1000, r.as_mut_ptr(), n) };
    assert_eq!(s, SgfStatus::Ok);
    let err = f.iter().zip(&r).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(err < 1e-8, "{err}");

    let s = unsafe { sgf_analysis(d, f.as_ptr(), n, c.as_mut_ptr(), m - 1) };
    assert_eq!(s, SgfStatus::SizeMismatch);
    assert!(last_error().contains("expected 64"));
    unsafe { sgf_dictionary_free(d) };
}

#[test]
fn denoise_and_compress() {
    let g = ring(24);
    let d = dictionary(g, "j = 4\ndegree = 30");
    unsafe { sgf_graph_free(g) };
    let n = 24;
    let m = unsafe { sgf_dictionary_num_atoms(d) };
    let f = signal(n);
    let noisy: Vec<f64> = f.iter().enumerate().map(|(i, v)| v + 0.2 * ((i * 7 % 5) as f64 - 2.0)).collect();
    let mut out = vec![0.0; n];
    assert_eq!(unsafe { sgf_denoise(d, noisy.as_ptr(), 0.3, out.as_mut_ptr(), n) }, SgfStatus::Ok);
    assert!(out.iter().all(|v| v.is_finite()));
    assert_eq!(unsafe { sgf_denoise(d, noisy.as_ptr(), -1.0, out.as_mut_ptr(), n) }, SgfStatus::InvalidArgument);

    let mut c = vec![0.0; m];
    let mut approx = vec![0.0; n];
    let s = unsafe { sgf_compress_omp(d, f.as_ptr(), n, 5, c.as_mut_ptr(), m, approx.as_mut_ptr()) };
    assert_eq!(s, SgfStatus::Ok, "{}", last_error());
    assert!(c.iter().filter(|v| **v != 0.0).count() <= 5);
    // the approximation is the synthesis of the sparse coefficients
    let mut syn = vec![0.0; n];
    assert_eq!(unsafe { sgf_synthesis(d, c.as_ptr(), m, syn.as_mut_ptr(), n) }, SgfStatus::Ok);
    for (a, b) in approx.iter().zip(&syn) {
        assert!((a - b).abs() < 1e-9);
    }
    let s = unsafe { sgf_compress_omp(d, f.as_ptr(), n, 5, ptr::null_mut(), 0, approx.as_mut_ptr()) };
    assert_eq!(s, SgfStatus::Ok);
    unsafe { sgf_dictionary_free(d) };
}

#[test]
fn zero_signal_compresses_to_zero() {
    let g = ring(10);
    let d = dictionary(g, "j = 3\nmode = \"exact\"");
    unsafe { sgf_graph_free(g) };
    let f = vec![0.0; 10];
    let mut approx = vec![1.0; 10];
    let s = unsafe { sgf_compress_omp(d, f.as_ptr(), 10, 2, ptr::null_mut(), 0, approx.as_mut_ptr()) };
    assert_eq!(s, SgfStatus::Ok, "{}", last_error());
    assert!(approx.iter().all(|v| *v == 0.0));
    unsafe { sgf_dictionary_free(d) };
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { CStr::from_ptr(sgf_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/sgframe.h")
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "sgf_last_error_message", "sgf_version", "sgf_graph_from_edges", "sgf_graph_read",
        "sgf_graph_num_vertices", "sgf_graph_num_edges", "sgf_graph_free", "sgf_dictionary_new",
        "sgf_dictionary_free", "sgf_dictionary_num_bands", "sgf_dictionary_num_atoms",
        "sgf_dictionary_frame_bounds", "sgf_analysis", "sgf_synthesis", "sgf_inverse_cg",
        "sgf_denoise", "sgf_compress_omp",
    ] {
        assert!(h.contains(&format!("{name}(")), "{name}");
    }
    assert!(h.contains("SGF_STATUS_SIZE_MISMATCH = 4"));
    assert!(h.contains("typedef struct SgfDictionary SgfDictionary;"));
}

// Compiles and links a C program against the static library when a C
// compiler is available.
#[test]
fn c_program_links_and_runs() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let exe = std::env::current_exe().unwrap();
    let target = exe.parent().and_then(|p| p.parent()).unwrap();
    let lib = target.join("libsgframe_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let src = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/c_smoke.c");
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
