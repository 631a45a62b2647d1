#![allow(dead_code)]

use nonmarkov::channels::{kraus_to_w, ChannelTensor, KrausChannel};
use nonmarkov::process_tensor::{choi_labels, Intervention, ProcessTensor};
use nonmarkov::reconstruct::{Objective, ReconstructionAnsatz};
use nonmarkov::tensorops::random::{random_density, random_unitary};
use nonmarkov::tensorops::{contract, von_neumann_entropy, DensityMatrix, LabeledTensor, Spectrum};
use nalgebra::DVector;
use rand::Rng;
use nonmarkov::{CMat, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Random CPTP channel on `d x env` with a random (generally entangled,
/// mixed) initial state.
pub fn random_model(d: usize, env: usize, rank: usize, seed: u64) -> (ChannelTensor, DensityMatrix) {
    let mut r = rng(seed);
    let ch = kraus_to_w(&KrausChannel::random(d, env, rank, &mut r));
    let rho = DensityMatrix::new(random_density(d * env, 2.min(d * env), &mut r)).unwrap();
    (ch, rho)
}

pub fn random_pt(k: usize, seed: u64) -> ProcessTensor {
    let (ch, rho) = random_model(2, 2, 3, seed);
    ProcessTensor::build(&ch, &rho, k).unwrap()
}

/// Random CPTP map on the system through a random Stinespring dilation.
pub fn random_intervention(d: usize, seed: u64) -> Intervention {
    let mut r = rng(seed);
    let ch = kraus_to_w(&KrausChannel::random(d, 1, 2, &mut r));
    Intervention::from_superop(ch.superop().clone(), d).unwrap()
}

pub fn random_unitary_intervention(d: usize, seed: u64) -> Intervention {
    let mut r = rng(seed);
    Intervention::unitary(&random_unitary(d, &mut r)).unwrap()
}

pub fn delta(a: &str, b: &str, d: usize) -> LabeledTensor {
    LabeledTensor::from_fn(vec![a, b], vec![d, d], |ix| c((ix[0] == ix[1]) as u8 as f64)).unwrap()
}

/// Site tensor of step `m` with indices `i{m-1}, i{m-1}', o{m}, o{m}',
/// a{m-1}, a{m-1}', a{m}, a{m}'`, read entry by entry from the superoperator.
pub fn site_tensor(ch: &ChannelTensor, m: usize) -> LabeledTensor {
    let (d, e) = (ch.d(), ch.env_dim());
    let labels = vec![
        format!("i{}", m - 1),
        format!("i{}'", m - 1),
        format!("o{m}"),
        format!("o{m}'"),
        format!("a{}", m - 1),
        format!("a{}'", m - 1),
        format!("a{m}"),
        format!("a{m}'"),
    ];
    let n = d * e;
    let s = ch.superop();
    LabeledTensor::from_fn(labels, vec![d, d, d, d, e, e, e, e], |ix| {
        let (i, ip, o, op, a, ap, b, bp) = (ix[0], ix[1], ix[2], ix[3], ix[4], ix[5], ix[6], ix[7]);
        s[((o * e + b) * n + (op * e + bp), (i * e + a) * n + (ip * e + ap))]
    })
    .unwrap()
}

pub fn rho0_tensor(rho: &CMat, d: usize, e: usize) -> LabeledTensor {
    LabeledTensor::from_fn(vec!["o0", "o0'", "a0", "a0'"], vec![d, d, e, e], |ix| {
        rho[(ix[0] * e + ix[2], ix[1] * e + ix[3])]
    })
    .unwrap()
}

/// Environment state after `j` steps by explicit contraction of the whole
/// network with every history index pair summed diagonally.
pub fn env_state_direct(pt: &ProcessTensor, j: usize) -> CMat {
    let (d, e) = (pt.d(), pt.env_dim());
    let mut t = rho0_tensor(pt.rho0(), d, e);
    t = contract(&t, &delta("o0", "o0'", d), &[("o0", "o0"), ("o0'", "o0'")]).unwrap();
    for m in 1..=j {
        let w = site_tensor(&pt.sites()[m - 1], m);
        let (a, ap) = (format!("a{}", m - 1), format!("a{}'", m - 1));
        t = contract(&t, &w, &[(&a, &a), (&ap, &ap)]).unwrap();
        let (i, ip) = (format!("i{}", m - 1), format!("i{}'", m - 1));
        t = contract(&t, &delta(&i, &ip, d), &[(&i, &i), (&ip, &ip)]).unwrap();
        let (o, op) = (format!("o{m}"), format!("o{m}'"));
        t = contract(&t, &delta(&o, &op, d), &[(&o, &o), (&op, &op)]).unwrap();
    }
    let (a, ap) = (format!("a{j}"), format!("a{j}'"));
    let m = t.to_matrix(&[&a], &[&ap]).unwrap();
    let tr = m.trace();
    m / tr
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// OSEE from the singular values of the materialized Choi tensor.
pub fn dense_osee(pt: &ProcessTensor, j: usize, after_input: bool) -> f64 {
    let t = pt.materialize().unwrap();
    let labels = choi_labels(pt.k());
    let split = 2 + 4 * j + if after_input { 2 } else { 0 };
    let rows: Vec<&str> = labels[..split].iter().map(String::as_str).collect();
    let cols: Vec<&str> = labels[split..].iter().map(String::as_str).collect();
    let m = t.tensor().to_matrix(&rows, &cols).unwrap();
    let sv = m.singular_values();
    let total: f64 = sv.iter().map(|s| s * s).sum();
    let p: Vec<f64> = sv.iter().map(|s| s * s / total).collect();
    von_neumann_entropy(&Spectrum::new(p)).unwrap() / 2.0
}

pub fn perturbed(a: &ReconstructionAnsatz, s: usize, r: usize, c: usize, dz: C64) -> ReconstructionAnsatz {
    let mut blocks = a.a_bar().to_vec();
    blocks[s][(r, c)] += dz;
    ReconstructionAnsatz::new(blocks, a.psi0().clone(), a.d(), a.env_dim()).unwrap()
}

/// Worst relative deviation between the analytic gradient and central
/// differences over every block entry and every entry of the unnormalized
/// state.
pub fn gradient_error(a: &ReconstructionAnsatz, target: &ProcessTensor, k: usize) -> f64 {
    let h = 1e-6;
    let obj = Objective::new(target, k).unwrap();
    let (_, g) = obj.loss_and_gradient(a).unwrap();
    let f = |b: &ReconstructionAnsatz| obj.loss(b).unwrap();
    let mut num = Vec::new();
    let mut ana = Vec::new();
    for s in 0..a.rank() {
        for r in 0..a.n() {
            for c in 0..a.n() {
                let re = (f(&perturbed(a, s, r, c, C64::new(h, 0.0))) - f(&perturbed(a, s, r, c, C64::new(-h, 0.0)))) / (2.0 * h);
                let im = (f(&perturbed(a, s, r, c, C64::new(0.0, h))) - f(&perturbed(a, s, r, c, C64::new(0.0, -h)))) / (2.0 * h);
                num.extend([re, im]);
                ana.extend([g.a_bar[s][(r, c)].re, g.a_bar[s][(r, c)].im]);
            }
        }
    }
    // unnormalized state: ψ = φ/|φ| at |φ| = 1
    let tang = g.psi_tangential(a.psi0(), 1.0);
    let x = a.to_params();
    let off = x.len() - 2 * a.n();
    for p in off..x.len() {
        let mut xp = x.clone();
        xp[p] += h;
        let mut xm = x.clone();
        xm[p] -= h;
        let fp = f(&ReconstructionAnsatz::from_params(&xp, a.d(), a.env_dim(), a.rank()).unwrap());
        let fm = f(&ReconstructionAnsatz::from_params(&xm, a.d(), a.env_dim(), a.rank()).unwrap());
        num.push((fp - fm) / (2.0 * h));
        let z = tang[(p - off) / 2];
        ana.push(if (p - off).is_multiple_of(2) { z.re } else { z.im });
    }
    let scale = ana.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    num.iter().zip(&ana).fold(0.0f64, |m, (n, a)| m.max((n - a).abs())) / scale
}

pub fn random_pure(n: usize, seed: u64) -> DVector<C64> {
    let mut r = rng(seed);
    let v = DVector::from_fn(n, |_, _| C64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5));
    &v / C64::new(v.norm(), 0.0)
}
