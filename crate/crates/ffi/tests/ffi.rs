use std::ffi::{c_char, CStr};
use std::process::Command;
use std::ptr;

use pcmb::modulation::Constellation;
use pcmb::pcmb_decoder::closed_form_r;
use pcmb::pstbc::{generation_matrix, SymbolMatrix};
use pcmb_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 512];
    unsafe {
        pcmb_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn code(d: usize) -> *mut PcmbCode {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { pcmb_code_new(d, &mut h) }, PcmbStatus::Ok);
    h
}

fn qam(m: usize) -> *mut PcmbConstellation {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { pcmb_constellation_new(m, &mut h) }, PcmbStatus::Ok);
    h
}

#[test]
fn bad_arguments_map_to_status_codes() {
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(pcmb_code_new(3, &mut h), PcmbStatus::UnsupportedDimension);
        assert!(h.is_null());
        assert!(last_error().contains("D=3"));
        assert_eq!(pcmb_constellation_new(8, &mut ptr::null_mut()), PcmbStatus::UnsupportedModulation);
        assert_eq!(pcmb_code_new(2, ptr::null_mut()), PcmbStatus::NullPointer);
        assert_eq!(pcmb_code_dimension(ptr::null()), 0);
        let c = code(2);
        assert_eq!(pcmb_closed_form_r(c, ptr::null(), ptr::null_mut()), PcmbStatus::NullPointer);
        let mut r = [0.0; 4];
        assert_eq!(pcmb_closed_form_r(c, [1.0, 0.0].as_ptr(), r.as_mut_ptr()), PcmbStatus::DegenerateChannel);
        pcmb_code_free(c);
        pcmb_code_free(ptr::null_mut());

        let mut s = ptr::null_mut();
        assert_eq!(
            pcmb_simulator_new(c"nope".as_ptr(), 2, 4, 1, 10, 10, &mut s),
            PcmbStatus::Config
        );
        assert_eq!(
            pcmb_simulator_new(c"gc".as_ptr(), 4, 16, 1, 10, 10, &mut s),
            PcmbStatus::Infeasible
        );
    }
}

#[test]
fn closed_form_r_matches_library() {
    for d in [2, 4] {
        let lambda: Vec<f64> = (0..d).map(|i| 2.0 - 0.4 * i as f64).collect();
        let expect = closed_form_r(&lambda, &generation_matrix(d).unwrap()).unwrap();
        let c = code(d);
        let mut out = vec![f64::NAN; d * d];
        unsafe {
            assert_eq!(pcmb_code_dimension(c), d);
            assert_eq!(pcmb_closed_form_r(c, lambda.as_ptr(), out.as_mut_ptr()), PcmbStatus::Ok);
            pcmb_code_free(c);
        }
        for i in 0..d {
            assert_eq!(&out[i * d..(i + 1) * d], expect[i].as_slice());
        }
    }
}

#[test]
fn noiseless_decode_recovers_symbols() {
    for (d, m) in [(2, 4), (2, 16), (4, 4)] {
        let g = generation_matrix(d).unwrap();
        let cons = Constellation::qam(m).unwrap();
        let idx: Vec<usize> = (0..d * d).map(|k| (7 * k + 3) % m).collect();
        let x = SymbolMatrix::from_columns(d, idx.clone()).unwrap();
        let z = g.assemble(&x, &cons).unwrap().z;
        let lambda: Vec<f64> = (0..d).map(|i| 1.8 - 0.3 * i as f64).collect();
        let mut y = Vec::new();
        for u in 0..d {
            for v in 0..d {
                let s = z[(u, v)] * lambda[u];
                y.extend([s.re, s.im]);
            }
        }
        let (c, k) = (code(d), qam(m));
        let mut out = vec![u32::MAX; d * d];
        unsafe {
            assert_eq!(pcmb_decode(c, k, lambda.as_ptr(), y.as_ptr(), out.as_mut_ptr()), PcmbStatus::Ok);
            pcmb_code_free(c);
            pcmb_constellation_free(k);
        }
        let got: Vec<usize> = out.iter().map(|&i| i as usize).collect();
        assert_eq!(got, x.as_column_major(), "d={d} m={m}");
    }
}

#[test]
fn simulator_points_are_reproducible() {
    let mut s = ptr::null_mut();
    let (mut a, mut b) = (PcmbPoint::default(), PcmbPoint::default());
    unsafe {
        assert_eq!(pcmb_simulator_new(c"gcmb".as_ptr(), 2, 4, 9, 50, 2000, &mut s), PcmbStatus::Ok);
        assert_eq!(pcmb_simulator_run_point(s, 6.0, false, &mut a), PcmbStatus::Ok);
        assert_eq!(pcmb_simulator_run_point(s, 6.0, false, &mut b), PcmbStatus::Ok);
        assert_eq!(pcmb_simulator_run_point(s, 6.0, false, ptr::null_mut()), PcmbStatus::NullPointer);
        pcmb_simulator_free(s);
    }
    assert_eq!(a, b);
    assert!(a.bit_errors >= 50 && a.ber > 0.0 && a.ber < 0.5);
    assert!(a.avg_real_mults > 0.0);
}

#[test]
fn validation_passes() {
    let mut ok = false;
    unsafe {
        assert_eq!(pcmb_validate(3, 20, &mut ok), PcmbStatus::Ok);
    }
    assert!(ok);
}

#[test]
fn header_declares_every_export_and_compiles() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let header = std::fs::read_to_string(format!("{dir}/include/pcmb.h")).unwrap();
    for f in [
        "pcmb_last_error",
        "pcmb_code_new",
        "pcmb_code_free",
        "pcmb_code_dimension",
        "pcmb_constellation_new",
        "pcmb_constellation_free",
        "pcmb_closed_form_r",
        "pcmb_decode",
        "pcmb_simulator_new",
        "pcmb_simulator_free",
        "pcmb_simulator_run_point",
        "pcmb_validate",
    ] {
        assert!(header.contains(&format!(" {f}(")), "{f} missing from header");
    }
    // Syntax check with the system C compiler when one is installed.
    if let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-xc", &format!("{dir}/include/pcmb.h")])
        .output()
    {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
