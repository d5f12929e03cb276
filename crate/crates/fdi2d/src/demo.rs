//! End-to-end demonstration bundles for the bundled reference systems.
//!
//! Each demo runs the full pipeline on one fixture and returns a list
//! of labelled pass/fail checks; the CLI prints them as a table.

use nalgebra::{DMatrix, DVector};

use crate::fixtures::{
    comparison_annihilator, comparison_counterexample, comparison_friends,
    reference_heat_exchanger_observer_gain, reference_heat_exchanger_quotient,
    reference_heat_exchanger_weights,
};
use crate::invariants::{is_invariant, measurement_maps, min_conditioned_invariant, min_unobservability};
use crate::lmi::{lyapunov_check, lyapunov_matrix, max_eigenvalue, projected_feasibility, recover_gains};
use crate::pde::{heat_exchanger, ode1d_model, Measurement};
use crate::polymat::{isolability_rank_condition, pbh, rank_at, verify_annihilator, PrimenessMode, PrimenessVerdict, zero_prime_check};
use crate::sim::{
    fdi_decide, simulate_filter, simulate_plant, threshold_mc, BoundaryData, BoundarySignal,
    FaultSchedule, FilterBoundary, InputSchedule, Scenario, ThresholdSpec,
};
use crate::subspace::Subspace;
use crate::synthesis::{isolability, synthesize_filter, GainMethod};
use num_complex::Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DemoName {
    HeatExchangerFull,
    HeatExchangerPartial,
    Counterexample,
}

impl DemoName {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "heat-exchanger-full" => Some(Self::HeatExchangerFull),
            "heat-exchanger-partial" => Some(Self::HeatExchangerPartial),
            "counterexample" => Some(Self::Counterexample),
            _ => None,
        }
    }
}

pub struct DemoCheck {
    pub label: String,
    pub pass: bool,
    pub detail: String,
}

fn check(label: &str, pass: bool, detail: String) -> DemoCheck {
    DemoCheck {
        label: label.to_string(),
        pass,
        detail,
    }
}

pub fn run_demo(name: DemoName) -> Vec<DemoCheck> {
    match name {
        DemoName::Counterexample => counterexample_demo(),
        DemoName::HeatExchangerFull => heat_exchanger_full_demo(),
        DemoName::HeatExchangerPartial => heat_exchanger_partial_demo(),
    }
}

fn counterexample_demo() -> Vec<DemoCheck> {
    let model = comparison_counterexample();
    let mut out = Vec::new();

    let l2 = Subspace::image(&model.faults[1].maps[0]);
    let w = min_conditioned_invariant(&model, &l2);
    let s = min_unobservability(&model, &l2);
    let expected = Subspace::span(&[0.0, 0.0, -1.0, 1.0]);
    out.push(check(
        "W* = S* = span{[0,0,-1,1]}",
        w.approx_eq(&expected) && s.approx_eq(&expected),
        format!("dim W* = {}, dim S* = {}", w.dim(), s.dim()),
    ));

    let report = isolability(&model).expect("two faults present");
    out.push(check(
        "both faults isolable",
        report.all_isolable(),
        report
            .faults
            .iter()
            .map(|f| format!("{}: {}", f.name, f.isolable))
            .collect::<Vec<_>>()
            .join(", "),
    ));

    let (d1, d2) = comparison_friends();
    let closed: Vec<DMatrix<f64>> = model
        .shift_ops
        .iter()
        .zip([&d1, &d2])
        .map(|(a, d)| a + d * &model.output_map)
        .collect();
    out.push(check(
        "reference friends keep S* invariant",
        is_invariant(&s, &closed),
        "(A_i + D_i C) S* inside S*".to_string(),
    ));

    let maps = measurement_maps(&model, &s).expect("S* is conditioned invariant");
    let h_ok = maps.h.nrows() == 1 && maps.h[(0, 0)].abs() > 0.99 && maps.h[(0, 1)].abs() < 1e-9;
    out.push(check(
        "H row-equivalent to [1, 0]",
        h_ok,
        format!("H = [{:.3}, {:.3}]", maps.h[(0, 0)], maps.h[(0, 1)]),
    ));

    let p = pbh(&model);
    let verdict = zero_prime_check(&p, PrimenessMode::ZeroPrime);
    let (witnessed, detail) = match &verdict {
        PrimenessVerdict::NotPrime { z1, z2, rank } => (
            rank_at(&p, *z1, *z2) < 4,
            format!("rank {rank} at ({z1:.3}, {z2:.3})"),
        ),
        PrimenessVerdict::Prime => (false, "no witness found".to_string()),
    };
    let rank_two_zero = rank_at(&p, Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0));
    out.push(check(
        "PBH not right zero prime (rank 3 at (2,0))",
        witnessed && rank_two_zero == 3,
        detail,
    ));

    let n_mat = comparison_annihilator();
    out.push(check(
        "left annihilator verifies",
        verify_annihilator(&n_mat, &p).unwrap_or(false),
        "N(z1,z2) PBH(z1,z2) = 0".to_string(),
    ));

    let l1_block = DMatrix::from_columns(&[
        model.faults[0].maps[0].column(0).into_owned(),
        model.faults[1].maps[0].column(0).into_owned(),
    ]);
    let l2_block = DMatrix::zeros(4, 2);
    let rank_report = isolability_rank_condition(&n_mat, &l1_block, &l2_block, 50)
        .expect("conformable blocks");
    let drop_at_two = rank_report
        .witness
        .map(|(z1, _, _)| (z1 - Complex64::new(2.0, 0.0)).norm() < 1e-8)
        .unwrap_or(false);
    out.push(check(
        "parity rank condition drops at z1 = 2",
        !rank_report.holds_on_samples && drop_at_two,
        format!("witness: {:?}", rank_report.witness),
    ));

    out
}

fn heat_exchanger_full_demo() -> Vec<DemoCheck> {
    let model = heat_exchanger(Measurement::Full);
    let mut out = Vec::new();

    let l2 = Subspace::image(&model.faults[1].maps[0]);
    let w = min_conditioned_invariant(&model, &l2);
    let s = min_unobservability(&model, &l2);
    let expected = Subspace::span(&[0.0, 0.0, -1.0, 1.0]);
    out.push(check(
        "W2* = S* = span{[0,0,-1,1]}",
        w.approx_eq(&expected) && s.approx_eq(&expected),
        format!("dim W2* = {}, dim S* = {}", w.dim(), s.dim()),
    ));

    let report = isolability(&model).expect("two faults");
    out.push(check(
        "both faults isolable",
        report.all_isolable(),
        String::new(),
    ));

    let (a1p, a2p, m) = reference_heat_exchanger_quotient();
    let (r1, r2) = reference_heat_exchanger_weights();
    let kernel = Subspace::kernel(&m);
    let wc = kernel.basis();
    let mut wcd = DMatrix::zeros(6, 2 * wc.ncols());
    wcd.view_mut((0, 0), (3, wc.ncols())).copy_from(wc);
    wcd.view_mut((3, wc.ncols()), (3, wc.ncols())).copy_from(wc);
    let projected = wcd.transpose() * lyapunov_matrix(&a1p, &a2p, &r1, &r2) * &wcd;
    let top = max_eigenvalue(&projected);
    out.push(check(
        "reference weights satisfy the projected inequality",
        top < 0.0,
        format!("max eigenvalue {top:.4}"),
    ));

    let d_ref = reference_heat_exchanger_observer_gain();
    // The reference gain acts through output-error injection, so the
    // certified pair is (A1p, A2p - D M).
    let closed2 = &a2p - &d_ref * &m;
    let (ok_ref, margin_ref) = lyapunov_check(&a1p, &closed2, &r1, &r2).unwrap();
    out.push(check(
        "reference observer gain certifies the closed loop",
        ok_ref,
        format!("margin {margin_ref:.4}"),
    ));

    let synth = synthesize_filter(&model, 0, GainMethod::Lmi).expect("LMI synthesis");
    let cert = synth.certificate.as_ref().expect("lmi route");
    let g1 = &synth.quotient.a_p[0] + &synth.gains[0] * &synth.quotient.m;
    let g2 = &synth.quotient.a_p[1] + &synth.gains[1] * &synth.quotient.m;
    let (ok_own, margin_own) = lyapunov_check(&g1, &g2, &cert.r1, &cert.r2).unwrap();
    out.push(check(
        "recovered gains certify the closed loop",
        ok_own,
        format!("margin {margin_own:.2e}"),
    ));

    // Decoupling: fouling alone cannot move the leakage residual.
    let mut base = Scenario::quiet(30, 30, 2);
    base.boundary = BoundaryData::Rectangle {
        h1: BoundarySignal::Zero,
        h2: BoundarySignal::Zero,
    };
    base.input = InputSchedule::Constant(vec![1.0, 1.0]);
    let mut with_f2 = base.clone();
    with_f2.faults[1] = FaultSchedule::Step {
        i_min: 5,
        i_max: Some(5),
        j_min: 10,
        j_max: None,
        severity: 1.0,
    };
    let run_base = simulate_plant(&model, &base).expect("simulate");
    let run_f2 = simulate_plant(&model, &with_f2).expect("simulate");
    let r_base = simulate_filter(&synth.filter, &run_base.outputs, &base.input, &FilterBoundary::Zero)
        .expect("filter");
    let r_f2 = simulate_filter(&synth.filter, &run_f2.outputs, &with_f2.input, &FilterBoundary::Zero)
        .expect("filter");
    let dev = r_base.max_abs_diff(&r_f2);
    out.push(check(
        "leakage residual decoupled from fouling",
        dev < 1e-9,
        format!("max deviation {dev:.2e}"),
    ));

    // Alarm pattern on a noisy scenario.
    let filters = vec![
        synth.filter,
        synthesize_filter(&model, 1, GainMethod::Lmi).expect("second filter").filter,
    ];
    let mut noisy = base.clone();
    noisy.noise_std = 0.01;
    noisy.seed = 42;
    let spec = ThresholdSpec::new(40, 60);
    let spec = threshold_mc(&model, &filters, &noisy, &spec, 42).expect("thresholds");
    let mut faulty = noisy.clone();
    faulty.seed = 4242;
    faulty.i_max = 60;
    faulty.j_max = 60;
    faulty.faults[0] = FaultSchedule::Step {
        i_min: 5,
        i_max: Some(5),
        j_min: 30,
        j_max: None,
        severity: 1.0,
    };
    let run = simulate_plant(&model, &faulty).expect("simulate");
    let residuals: Vec<_> = filters
        .iter()
        .map(|f| simulate_filter(f, &run.outputs, &faulty.input, &FilterBoundary::Zero).unwrap())
        .collect();
    let alarms = fdi_decide(&residuals, &spec.thresholds);
    let mut fired_inside = false;
    let mut fired_outside = false;
    let mut alarm2 = false;
    for i in 0..=60usize {
        for j in 0..=60usize {
            if alarms[0].get(i, j) {
                if i >= 6 && j >= 30 {
                    fired_inside = true;
                } else {
                    fired_outside = true;
                }
            }
            alarm2 |= alarms[1].get(i, j);
        }
    }
    out.push(check(
        "alarm 1 fires only in the fault cone; alarm 2 silent",
        fired_inside && !fired_outside && !alarm2,
        format!("thresholds {:?}", spec.thresholds),
    ));

    out
}

fn heat_exchanger_partial_demo() -> Vec<DemoCheck> {
    let model = heat_exchanger(Measurement::Partial);
    let mut out = Vec::new();

    let l2 = Subspace::image(&model.faults[1].maps[0]);
    let s = min_unobservability(&model, &l2);
    let mut expected_basis = DMatrix::zeros(4, 3);
    expected_basis
        .column_mut(0)
        .copy_from(&DVector::from_column_slice(&[0.0, 0.0, -1.0, 1.0]));
    expected_basis
        .column_mut(1)
        .copy_from(&DVector::from_column_slice(&[1.0, 0.0, 0.0, 0.0]));
    expected_basis
        .column_mut(2)
        .copy_from(&DVector::from_column_slice(&[0.0, 0.0, 1.0, 1.0]));
    let expected = Subspace::from_columns(&expected_basis);
    out.push(check(
        "S* = span{[0,0,-1,1], e1, [0,0,1,1]}",
        s.approx_eq(&expected),
        format!("dim S* = {}", s.dim()),
    ));

    let l1 = Subspace::image(&model.faults[0].maps[0]);
    out.push(check(
        "leakage signature escapes S*",
        !s.contains(&l1),
        String::new(),
    ));

    let report = isolability(&model).expect("two faults");
    out.push(check(
        "both faults isolable from partial measurements",
        report.all_isolable(),
        String::new(),
    ));

    // The 1D space-only discretization cannot separate the same pair.
    let oned = ode1d_model(5);
    let k = 5;
    let l1_1d = Subspace::image(&oned.faults[2 * (k - 1)].maps[0]);
    let l2_1d = Subspace::image(&oned.faults[2 * (k - 1) + 1].maps[0]);
    let w2 = min_conditioned_invariant(&oned, &l2_1d);
    out.push(check(
        "1D approximation cannot isolate the node pair",
        w2.contains(&l1_1d),
        format!("dim W2* = {}", w2.dim()),
    ));

    // A partial-measurement filter still certifies via the LMI route.
    match synthesize_filter(&model, 0, GainMethod::Lmi) {
        Ok(synth) => {
            let cert = synth.certificate.as_ref().unwrap();
            let g1 = &synth.quotient.a_p[0] + &synth.gains[0] * &synth.quotient.m;
            let g2 = &synth.quotient.a_p[1] + &synth.gains[1] * &synth.quotient.m;
            let (ok, margin) = lyapunov_check(&g1, &g2, &cert.r1, &cert.r2).unwrap();
            out.push(check(
                "LMI filter synthesized for the leakage fault",
                ok,
                format!("quotient dim {}, margin {margin:.2e}", synth.quotient.state_dim()),
            ));
        }
        Err(e) => out.push(check(
            "LMI filter synthesized for the leakage fault",
            false,
            format!("{e}"),
        )),
    }

    out
}

/// Convenience check used by the LMI demo path: feasibility of the
/// published quotient followed by gain recovery.
pub fn reference_quotient_feasible() -> bool {
    let (a1p, a2p, m) = reference_heat_exchanger_quotient();
    match projected_feasibility(&a1p, &a2p, &m) {
        Ok(cert) => recover_gains(&a1p, &a2p, &m, &cert).is_ok(),
        Err(_) => false,
    }
}
