//! Property tests against independent brute-force references.

use num_complex::Complex64;
use proptest::prelude::*;

use pcmb::bicmb::{conv_encode, viterbi_decode, CodeRate, ConvCode, Interleaver};
use pcmb::modulation::Constellation;
use pcmb::numerics::{qr, svd, CMatrix};
use pcmb::pstbc::{generation_matrix, SymbolMatrix};
use pcmb::spheredec::{brute_force_ml, brute_force_real, complex_sd, real_sd_with_levels, ComplexLattice, RealLattice};

fn qam_order() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![4usize, 16, 64, 256])
}

fn cplx() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

fn cmatrix(n: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec(cplx(), n * n).prop_map(move |v| CMatrix::from_fn(n, n, |i, j| v[i * n + j]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn labels_round_trip_and_neighbours_differ_in_one_bit(m in qam_order()) {
        let c = Constellation::qam(m).unwrap();
        prop_assert!((c.average_energy() - 1.0).abs() < 1e-12);
        for i in 0..m {
            prop_assert_eq!(c.index_of_bits(&c.label(i)).unwrap(), i);
        }
        let levels = c.pam_levels();
        for w in levels.windows(2) {
            prop_assert!(w[0].value < w[1].value);
            prop_assert_eq!((w[0].label ^ w[1].label).count_ones(), 1);
        }
    }

    #[test]
    fn interleaver_round_trips(len in 1usize..600, seed in any::<u64>()) {
        let il = Interleaver::new(len, seed);
        let data: Vec<u32> = (0..len as u32).collect();
        let mixed = il.interleave(&data).unwrap();
        let mut sorted = mixed.clone();
        sorted.sort_unstable();
        prop_assert_eq!(&sorted, &data);
        prop_assert_eq!(il.deinterleave(&mixed).unwrap(), data);
    }

    #[test]
    fn real_sphere_decoder_matches_exhaustive(
        n in 1usize..5,
        raw in prop::collection::vec(-1.5..1.5f64, 16),
        diag in prop::collection::vec(0.05..2.0f64, 4),
        y in prop::collection::vec(-3.0..3.0f64, 4),
    ) {
        let c = Constellation::qam(16).unwrap();
        let levels = c.level_values();
        let mut r = vec![0.0; n * n];
        for i in 0..n {
            r[i * n + i] = diag[i];
            for j in i + 1..n {
                r[i * n + j] = raw[i * 4 + j];
            }
        }
        let lat = RealLattice::new(n, r, levels.clone()).unwrap();
        let sets: Vec<&[f64]> = vec![&levels; n];
        let sd = real_sd_with_levels(&y[..n], &lat, &sets).unwrap();
        let bf = brute_force_real(&y[..n], &lat, &sets).unwrap();
        prop_assert!((sd.metric - bf.metric).abs() <= 1e-9 * (1.0 + bf.metric));
    }

    #[test]
    fn complex_sphere_decoder_matches_exhaustive(a in cmatrix(3), y in prop::collection::vec(cplx(), 3)) {
        let c = Constellation::qam(4).unwrap();
        let f = qr(&a).unwrap();
        prop_assume!((0..3).all(|i| f.r[(i, i)].norm() > 1e-3));
        let lat = ComplexLattice::new(&f.r).unwrap();
        let qy = f.q.conj_transpose().mul_vec(&y).unwrap();
        let sd = complex_sd(&qy, &lat, &c).unwrap();
        let bf = brute_force_ml(&y, &a, &c, 3).unwrap();
        // Metrics differ by the part of y outside the column space, zero here.
        prop_assert!((sd.metric - bf.metric).abs() <= 1e-9 * (1.0 + bf.metric));
    }

    #[test]
    fn qr_and_svd_reconstruct(a in cmatrix(4)) {
        let f = qr(&a).unwrap();
        prop_assert!(f.q.mul(&f.r).unwrap().sub(&a).unwrap().frobenius_norm() < 1e-10);
        prop_assert!(f.q.unitarity_residual() < 1e-10);
        let s = svd(&a).unwrap();
        let back = s.u.mul(&CMatrix::diag_real(&s.sigma)).unwrap().mul(&s.v.conj_transpose()).unwrap();
        prop_assert!(back.sub(&a).unwrap().frobenius_norm() < 1e-9);
        prop_assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn codeword_energy_splits_per_subchannel(
        d in prop::sample::select(vec![2usize, 4]),
        idx in prop::collection::vec(0usize..16, 16),
        lambda in prop::collection::vec(0.01..3.0f64, 4),
    ) {
        let code = generation_matrix(d).unwrap();
        let c = Constellation::qam(16).unwrap();
        let x = SymbolMatrix::from_columns(d, idx[..d * d].to_vec()).unwrap();
        let z = code.assemble(&x, &c).unwrap().z;
        let lz = z.scale_rows(&lambda[..d]).unwrap().frobenius_norm_sqr();
        let xv = x.values(&c);
        let gx = code.g_matrix().mul(&xv).unwrap();
        let split: f64 = (0..d).map(|u| lambda[u] * lambda[u] * gx.row(u).iter().map(|s| s.norm_sqr()).sum::<f64>()).sum();
        prop_assert!((lz - split).abs() < 1e-9 * (1.0 + lz));
        // Unitary G preserves the symbol energy.
        prop_assert!((z.frobenius_norm_sqr() - xv.frobenius_norm_sqr()).abs() < 1e-9);
    }

    #[test]
    fn viterbi_inverts_noiseless_encoding(
        rate in prop::sample::select(vec![CodeRate::Half, CodeRate::TwoThirds, CodeRate::FourFifths]),
        info in prop::collection::vec(0u8..2, 1..200),
    ) {
        let code = ConvCode::new(rate);
        let coded = conv_encode(&info, &code).unwrap();
        let metrics: Vec<[f64; 2]> = coded.iter().map(|&b| if b == 0 { [0.0, 1.0] } else { [1.0, 0.0] }).collect();
        prop_assert_eq!(viterbi_decode(&metrics, &code, info.len()).unwrap(), info);
    }
}
