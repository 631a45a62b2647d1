mod common;

use common::*;
use nonmarkov::channels::{sandwich, ChannelTensor};
use nonmarkov::measures::{
    env_state, measure_series, measure_series_with, memory_complexity, memory_complexity_series, nm_ee, osee, osee_with,
    Cut, MeasureKind, OseeOptions, SeriesOptions,
};
use nonmarkov::models::{ruqdm_channel, uqdm_env_entropy, uqdm_model, xx_chain_model, SystemPreparation, UqdmParams, XxChainParams};
use nonmarkov::process_tensor::ProcessTensor;
use nonmarkov::tensorops::random::{random_density, random_unitary};
use nonmarkov::tensorops::DensityMatrix;
use nonmarkov::{CMat, Error};

fn xx_pt(gamma: f64, n: f64, k: usize) -> ProcessTensor {
    let (ch, rho) = xx_chain_model(&XxChainParams { gamma, n, ..Default::default() }).unwrap();
    ProcessTensor::build(&ch, &rho, k).unwrap()
}

fn mid(series: &nonmarkov::measures::MeasureSeries, lo: usize, hi: usize) -> Vec<f64> {
    (lo..=hi).map(|j| series.value_at(j).unwrap()).collect()
}

#[test]
fn env_state_of_product_initial_state() {
    let mut r = rng(1);
    let rho_e = random_density(3, 3, &mut r);
    let rho = DensityMatrix::new(random_density(2, 1, &mut r).kronecker(&rho_e)).unwrap();
    let (ch, _) = random_model(2, 3, 2, 4);
    let pt = ProcessTensor::build(&ch, &rho, 2).unwrap();
    let st = env_state(&pt, 0).unwrap();
    assert!(max_abs(&(st.rho.matrix() - rho_e)) < 1e-12);
    assert!(matches!(env_state(&pt, 3), Err(Error::OutOfRange { .. })));
}

#[test]
fn env_state_trivial_environment() {
    let pt = ProcessTensor::build(&ruqdm_channel(1.0, 0.1).unwrap(), &DensityMatrix::maximally_mixed(2), 3).unwrap();
    for j in 0..=3 {
        let st = env_state(&pt, j).unwrap();
        assert_eq!(st.rho.dim(), 1);
        assert!((st.rho.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
    }
}

#[test]
fn recursion_matches_direct_contraction() {
    let mut cases = vec![xx_pt(1.0, 0.3, 4)];
    for seed in 0..4 {
        cases.push(random_pt(4, 200 + seed));
    }
    for pt in &cases {
        for j in 0..=4 {
            let st = env_state(pt, j).unwrap();
            assert!(st.trace_defect < 1e-9);
            let direct = env_state_direct(pt, j);
            assert!(max_abs(&(st.rho.matrix() - direct)) < 1e-10, "j={j}");
        }
    }
}

#[test]
fn markovian_model_has_zero_measures() {
    let pt = ProcessTensor::build(&ruqdm_channel(0.8, 0.25).unwrap(), &DensityMatrix::maximally_mixed(2), 12).unwrap();
    for j in 1..12 {
        assert!(osee(&pt, j).unwrap().abs() < 1e-10);
        assert!(nm_ee(&pt, j).unwrap().abs() < 1e-10);
    }
    let s = measure_series(&pt, MeasureKind::Osee).unwrap();
    assert!(s.values.iter().all(|v| v.abs() < 1e-10));
}

#[test]
fn xx_chain_asymptotes() {
    let pt = xx_pt(0.0, 0.0, 20);
    let o = measure_series(&pt, MeasureKind::Osee).unwrap();
    let e = measure_series(&pt, MeasureKind::Ee).unwrap();
    for v in mid(&o, 8, 14).into_iter().chain(mid(&e, 8, 14)) {
        assert!((0.9..=1.05).contains(&v), "{v}");
    }
    // dissipation suppresses the OSEE; the environment entropy of the
    // generating model stays finite because its environment is mixed
    let pt = xx_pt(5.0, 0.0, 20);
    let o = measure_series(&pt, MeasureKind::Osee).unwrap();
    assert!(mid(&o, 8, 14).into_iter().all(|v| v < 0.1));
    let weak = measure_series(&xx_pt(1.0, 0.0, 20), MeasureKind::Ee).unwrap();
    let strong = measure_series(&pt, MeasureKind::Ee).unwrap();
    for j in 8..=14 {
        assert!(strong.value_at(j).unwrap() < weak.value_at(j).unwrap());
    }
}

#[test]
fn initial_system_state_does_not_enter_measures() {
    let series = |sys| {
        let (ch, rho) = xx_chain_model(&XxChainParams { gamma: 1.0, system: sys, ..Default::default() }).unwrap();
        let pt = ProcessTensor::build(&ch, &rho, 8).unwrap();
        let mut v = measure_series(&pt, MeasureKind::Osee).unwrap().values;
        v.extend(measure_series(&pt, MeasureKind::Ee).unwrap().values);
        v
    };
    let a = series(SystemPreparation::Plus);
    let b = series(SystemPreparation::MaximallyMixed);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-10);
    }
}

#[test]
fn osee_matches_dense_svd() {
    let cases = [random_pt(3, 300), random_pt(3, 301), xx_pt(1.0, 0.0, 3), xx_pt(0.0, 0.0, 3)];
    for pt in &cases {
        for j in 1..3 {
            let a = osee(pt, j).unwrap();
            let b = dense_osee(pt, j, false);
            assert!((a - b).abs() < 1e-8 * b.max(1.0), "j={j}: {a} vs {b}");
            let opts = OseeOptions { cut: Cut::AfterInput, alpha: None };
            let a = osee_with(pt, j, &opts).unwrap();
            let b = dense_osee(pt, j, true);
            assert!((a - b).abs() < 1e-8 * b.max(1.0), "alt j={j}: {a} vs {b}");
        }
    }
}

#[test]
fn osee_bounds_and_range() {
    let pt = random_pt(6, 310);
    for j in 1..6 {
        let v = osee(&pt, j).unwrap();
        assert!(v >= 0.0 && v <= (4f64.powi(j as i32)).log2() && v <= 2.0 + 1e-12);
        let ee = nm_ee(&pt, j).unwrap();
        assert!((0.0..=1.0 + 1e-12).contains(&ee));
    }
    assert!(osee(&pt, 0).is_err() && osee(&pt, 6).is_err());
    assert!(nm_ee(&pt, 0).is_err() && nm_ee(&pt, 7).is_err());
    let r2 = osee_with(&pt, 2, &OseeOptions { cut: Cut::BetweenSites, alpha: Some(2.0) }).unwrap();
    assert!(r2 <= osee(&pt, 2).unwrap() + 1e-12);
}

#[test]
fn unitary_channels_agree_with_memory_complexity() {
    let mut r = rng(5);
    let u = random_unitary(4, &mut r);
    let ch = ChannelTensor::from_superop(sandwich(&u, &u.adjoint()), 2, 2).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let rho = DensityMatrix::pure(&[c(h), c(0.0), c(0.0), c(h)]).unwrap();
    let pts = [xx_pt(0.0, 0.0, 8), ProcessTensor::build(&ch, &rho, 8).unwrap()];
    for pt in &pts {
        let mc = memory_complexity_series(pt, 8).unwrap();
        assert!(mc[0].abs() < 1e-12 || pt.env_dim() == 2);
        for j in 1..=8 {
            assert!((nm_ee(pt, j).unwrap() - mc[j]).abs() < 1e-9);
        }
    }
    let pt = xx_pt(1.0, 0.0, 3);
    assert!(matches!(memory_complexity(&pt, 2), Err(Error::NotUnitary(_))));
}

#[test]
fn unitary_dephasing_routes_agree() {
    let model = uqdm_model(&UqdmParams { grid_points: 12, grid_halfwidth: 8.0, gamma: 1.5, ..Default::default() }).unwrap();
    let ch = model.channel_tensor().unwrap();
    let pt = ProcessTensor::build(&ch, &model.initial_state(&SystemPreparation::Zero.density()), 6).unwrap();
    let mc = memory_complexity_series(&pt, 6).unwrap();
    for j in 0..=6 {
        let gram = uqdm_env_entropy(&model, j).unwrap();
        assert!((mc[j] - gram).abs() < 1e-9, "j={j}: {} vs {gram}", mc[j]);
        if j > 0 {
            assert!((nm_ee(&pt, j).unwrap() - gram).abs() < 1e-9);
        }
    }
}

#[test]
fn series_flags_and_csv() {
    let pt = xx_pt(1.0, 0.0, 20);
    let s = measure_series(&pt, MeasureKind::Osee).unwrap();
    assert_eq!(s.steps, (1..20).collect::<Vec<_>>());
    assert_eq!(s.boundary_flagged, (16..20).collect::<Vec<_>>());
    let s2 = measure_series_with(&pt, MeasureKind::Osee, &SeriesOptions { margin: Some(2), ..Default::default() }).unwrap();
    assert_eq!(s2.boundary_flagged, vec![18, 19]);
    let csv = s.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "j,value_bits,boundary_flag");
    assert_eq!(lines.len(), 20);
    assert!(lines[19].ends_with(",1") && lines[1].ends_with(",0"));
    let e = measure_series(&pt, MeasureKind::Ee).unwrap();
    assert_eq!(e.steps, (1..=20).collect::<Vec<_>>());
    assert!(e.boundary_flagged.is_empty());
    assert!(measure_series(&pt.truncated(1).unwrap(), MeasureKind::Ee).is_err());
}

#[test]
fn series_stable_in_k() {
    let a = measure_series(&xx_pt(5.0, 0.0, 20), MeasureKind::Osee).unwrap();
    let b = measure_series(&xx_pt(5.0, 0.0, 30), MeasureKind::Osee).unwrap();
    for j in 6..=12 {
        assert!((a.value_at(j).unwrap() - b.value_at(j).unwrap()).abs() < 0.02);
    }
}

#[test]
fn boundary_effect_near_final_step() {
    let s = measure_series(&xx_pt(1.0, 0.0, 51), MeasureKind::Osee).unwrap();
    let middle = s.value_at(25).unwrap();
    let last = s.value_at(50).unwrap();
    assert!(last < middle - 1e-3, "{middle} vs {last}");
}

#[test]
fn gauge_invariance_of_series() {
    let pt = xx_pt(1.0, 0.2, 10);
    let mut r = rng(6);
    let g = pt.gauge_transform_env(&random_unitary(2, &mut r)).unwrap();
    for kind in [MeasureKind::Osee, MeasureKind::Ee] {
        let a = measure_series(&pt, kind).unwrap();
        let b = measure_series(&g, kind).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}

#[test]
fn memory_complexity_of_pure_start_is_zero() {
    let pt = xx_pt(0.0, 0.0, 2);
    assert!(memory_complexity(&pt, 0).unwrap().abs() < 1e-12);
    let _ = CMat::identity(2, 2);
}
