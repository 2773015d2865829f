use bosemix_core::analysis::driven_oscillator;
use bosemix_core::ci::CiPropagation;
use bosemix_core::meanfield::GroundStateOptions;
use bosemix_core::{
    CiSystem, DrivingProtocol, FewBodyParams, FewBodySolver, GridSpec, MeanField, MixtureModel, Observe, Species,
};

fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * statrs::function::gamma::gamma(1.0 - x))
    } else {
        statrs::function::gamma::gamma(x)
    }
}

/// Two bosons with contact coupling `g` in a trap of frequency `w` (unit
/// mass): the relative energy solves `2Γ(3/4 − ε/2)/Γ(1/4 − ε/2) = −g/(wℓ)`
/// with `ℓ = √(2/w)`, and the centre of mass adds `w/2`.
fn two_body_energy(g: f64, w: f64) -> f64 {
    let c = g / (w * (2.0 / w).sqrt());
    let f = |e: f64| 2.0 * gamma(0.75 - 0.5 * e) / gamma(0.25 - 0.5 * e) + c;
    let (mut lo, mut hi) = (0.5 + 1e-12, 1.5 - 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    w * 0.5 * (lo + hi) + 0.5 * w
}

#[test]
fn contact_pair_energy_matches_closed_form() {
    let exact = two_body_energy(0.4, 0.3);
    assert!((exact - 0.371_923_770_286_549_6).abs() < 1e-12);
    let mut errs = Vec::new();
    for n in [151, 301] {
        let p = FewBodyParams {
            grid: GridSpec::new(-15.0, 15.0, n).unwrap(),
            ..FewBodyParams::default()
        };
        let fb = FewBodySolver::new(p, DrivingProtocol::none()).unwrap();
        let (_, e) = fb.ground_state(1e-11).unwrap();
        errs.push((e - exact).abs() / exact);
    }
    assert!(errs[1] < 2e-3, "relative error {}", errs[1]);
    assert!(errs[1] < errs[0]);
}

fn kohn_error<F: FnMut(f64) -> f64>(times: &[f64], xs: &[f64], mut exact: F) -> f64 {
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (t, x) in times.iter().zip(xs) {
        let e = exact(*t);
        err = err.max((x - e).abs());
        scale = scale.max(e.abs());
    }
    err / scale
}

fn kohn_model(wd: f64) -> MixtureModel {
    let mut m = MixtureModel {
        g_bi: 0.0,
        driving: DrivingProtocol::continuous(20.0, wd),
        ..MixtureModel::default()
    };
    m.bath.count = 0;
    m
}

#[test]
fn meanfield_impurity_follows_driven_oscillator() {
    let mut m = kohn_model(1.5);
    m.bath.count = 100;
    let mf = MeanField::new(m).unwrap();
    let (mut st, _) = mf.ground_state(&GroundStateOptions::default()).unwrap();
    let (mut ts, mut xs) = (Vec::new(), Vec::new());
    mf.propagate(&mut st, 30.0, 0.005, 20, |s| {
        ts.push(s.time);
        xs.push(mf.mean_position(s, Species::Impurity).unwrap());
        Ok(())
    })
    .unwrap();
    let err = kohn_error(&ts, &xs, |t| driven_oscillator(20.0, 0.3, 1.5, t));
    assert!(err < 1e-4, "relative error {err}");
}

#[test]
fn fewbody_pair_follows_driven_oscillator() {
    let p = FewBodyParams {
        grid: GridSpec::new(-30.0, 30.0, 299).unwrap(),
        ..FewBodyParams::default()
    };
    let fb = FewBodySolver::new(p, DrivingProtocol::continuous(20.0, 1.5)).unwrap();
    let (mut st, _) = fb.ground_state(1e-10).unwrap();
    let (mut ts, mut xs) = (Vec::new(), Vec::new());
    fb.propagate(&mut st, 10.0, 0.01, 10, |s| {
        ts.push(s.time);
        xs.push(fb.mean_position(s, Species::Impurity).unwrap());
        Ok(())
    })
    .unwrap();
    let err = kohn_error(&ts, &xs, |t| driven_oscillator(20.0, 0.3, 1.5, t));
    assert!(err < 1e-4, "relative error {err}");
}

fn ci_kohn_error(g: f64, d: usize, t_end: f64) -> f64 {
    let mut m = kohn_model(1.5);
    m.grid = GridSpec::new(-30.0, 30.0, 300).unwrap();
    m.impurity.g_intra = g;
    let ci = CiSystem::new(m, 1, d).unwrap();
    let (mut st, _) = ci.ground_state(1e-10).unwrap();
    let (mut ts, mut xs) = (Vec::new(), Vec::new());
    ci.propagate(&mut st, t_end, 0.02, 5, &CiPropagation::default(), |s| {
        ts.push(s.time);
        xs.push(ci.mean_position(s, Species::Impurity).unwrap());
        Ok(())
    })
    .unwrap();
    kohn_error(&ts, &xs, |t| driven_oscillator(20.0, 0.3, 1.5, t))
}

#[test]
fn ci_free_pair_follows_driven_oscillator() {
    let err = ci_kohn_error(0.0, 60, 20.0);
    assert!(err < 1e-4, "relative error {err}");
}

#[test]
fn ci_interacting_kohn_error_shrinks_with_basis() {
    let coarse = ci_kohn_error(0.4, 30, 10.0);
    let fine = ci_kohn_error(0.4, 50, 10.0);
    assert!(fine < coarse, "{fine} vs {coarse}");
}

#[test]
fn noninteracting_pair_energy_is_one_quantum() {
    let p = FewBodyParams {
        g: 0.0,
        grid: GridSpec::new(-15.0, 15.0, 151).unwrap(),
        ..FewBodyParams::default()
    };
    let fb = FewBodySolver::new(p, DrivingProtocol::none()).unwrap();
    let (_, e) = fb.ground_state(1e-12).unwrap();
    assert!((e - 0.3).abs() < 1e-9, "{e}");
}
