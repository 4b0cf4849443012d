//! Property-based invariants: cone geometry, envelope bounds, resolvent
//! positivity, functional subadditivity, and pattern-matcher soundness.

use proptest::prelude::*;

use conequill::certify::{match_patterns, ConditionLedger, Pattern};
use conequill::cone::{resolve_positive, spectral_radius_entries, CrossMatrix};
use conequill::functional::{apply_functional, Family, FunctionalKind, FunctionalSpec};
use conequill::grid::GridFunction;
use conequill::index::{ConditionKind, ConditionResult};
use conequill::kernel::presets;
use conequill::report::decimal;

fn holding(kind: ConditionKind, rho: f64) -> ConditionResult {
    ConditionResult {
        kind,
        rho: Some(rho),
        lhs: 0.0,
        threshold: 1.0,
        holds: true,
        constants: Vec::new(),
        advisory: false,
    }
}

/// Projects an arbitrary nonnegative sample onto the cone by lifting it
/// until the window minimum dominates c times the sup-norm.
fn cone_projection(values: &[f64], c: f64) -> GridFunction {
    let n = values.len();
    let nodes: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let raw = GridFunction::new(nodes.clone(), values.to_vec());
    let sup = raw.sup_norm();
    let min_w = raw.min_on(0.25, 0.75);
    // adding the constant L keeps the sup at sup + L, so L solves
    // min_w + L >= c (sup + L)
    let lift = ((c * sup - min_w) / (1.0 - c)).max(0.0);
    GridFunction::new(nodes, values.iter().map(|v| v + lift).collect())
}

proptest! {
    // |k(t,s)| never exceeds the envelope, and on the window the kernel
    // keeps at least the c1 fraction of it
    #[test]
    fn kernel_envelope_and_window_bounds(t in 0.0f64..1.0, s in 0.0f64..1.0, w in 0.0f64..1.0) {
        for kernel in [
            presets::dirichlet_max((0.25, 0.75)).unwrap(),
            presets::periodic_deviation((0.25, 0.75)).unwrap(),
        ] {
            let phi = kernel.phi(s);
            prop_assert!(kernel.k(t, s).abs() <= phi + 1e-12);
            let (a, b) = kernel.window();
            let tw = a + (b - a) * w;
            prop_assert!(kernel.k(tw, s) >= kernel.c1() * phi - 1e-6);
        }
    }

    // membership chain: sup-norm below rho puts the window minimum below
    // rho, and a window minimum below rho caps the sup-norm by rho / c
    #[test]
    fn cone_radius_chain(
        values in proptest::collection::vec(0.0f64..10.0, 9..40),
        c in 0.05f64..0.95,
        rho in 0.1f64..20.0,
    ) {
        let u = cone_projection(&values, c);
        let min_w = u.min_on(0.25, 0.75);
        let sup = u.sup_norm();
        // the lift guarantees cone membership on any window
        prop_assert!(min_w >= c * sup - 1e-12);
        if sup < rho {
            prop_assert!(min_w < rho);
        }
        if min_w < rho {
            prop_assert!(sup < rho / c + 1e-9);
        }
    }

    // the resolvent of a nonnegative matrix below the spectral threshold
    // maps nonnegative data to nonnegative data
    #[test]
    fn resolvent_preserves_positivity(
        raw in proptest::collection::vec(0.0f64..1.0, 1..=16),
        rhs_raw in proptest::collection::vec(0.0f64..1.0, 4),
        target in 0.0f64..0.95,
    ) {
        let n = (raw.len() as f64).sqrt() as usize;
        let mut entries: Vec<Vec<f64>> =
            (0..n).map(|i| raw[i * n..(i + 1) * n].to_vec()).collect();
        let radius = spectral_radius_entries(&entries).unwrap();
        if radius > 1e-12 {
            let scale = target / radius;
            for row in &mut entries {
                for v in row.iter_mut() {
                    *v *= scale;
                }
            }
        }
        let m = CrossMatrix { entries, family: Family::Upper };
        let rhs = &rhs_raw[..n];
        let out = resolve_positive(&m, 1.0, rhs).unwrap();
        prop_assert!(out.values.iter().all(|v| *v >= -1e-12));
    }

    // direct solve and the truncated Neumann series agree while the series
    // converges comfortably (radius kept at or below 0.7)
    #[test]
    fn resolvent_matches_neumann_series(
        raw in proptest::collection::vec(0.0f64..1.0, 1..=16),
        rhs_raw in proptest::collection::vec(0.0f64..1.0, 4),
        target in 0.0f64..0.65,
    ) {
        let n = (raw.len() as f64).sqrt() as usize;
        let mut entries: Vec<Vec<f64>> =
            (0..n).map(|i| raw[i * n..(i + 1) * n].to_vec()).collect();
        let radius = spectral_radius_entries(&entries).unwrap();
        if radius > 1e-12 {
            let scale = target / radius;
            for row in &mut entries {
                for v in row.iter_mut() {
                    *v *= scale;
                }
            }
        }
        let rhs = rhs_raw[..n].to_vec();
        let m = CrossMatrix { entries: entries.clone(), family: Family::Upper };
        let direct = resolve_positive(&m, 1.0, &rhs).unwrap().values;
        let mut term = rhs.clone();
        let mut sum = rhs.clone();
        for _ in 0..200 {
            term = (0..n)
                .map(|i| entries[i].iter().zip(&term).map(|(a, b)| a * b).sum())
                .collect();
            for (s, t) in sum.iter_mut().zip(&term) {
                *s += t;
            }
        }
        for (a, b) in direct.iter().zip(&sum) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }

    // upper functionals are subadditive and positively homogeneous
    #[test]
    fn upper_functionals_are_sublinear(
        us in proptest::collection::vec(0.0f64..5.0, 17),
        vs in proptest::collection::vec(0.0f64..5.0, 17),
        lambda in 0.0f64..10.0,
        tau in 0.0f64..1.0,
    ) {
        let nodes: Vec<f64> = (0..17).map(|i| i as f64 / 16.0).collect();
        let u = GridFunction::new(nodes.clone(), us);
        let v = GridFunction::new(nodes, vs);
        let w = u.axpy(1.0, &v);
        let window = (0.25, 0.75);
        for phi in [
            FunctionalSpec::new(FunctionalKind::MaxWindow, Family::Upper),
            FunctionalSpec::new(FunctionalKind::PointEval(tau), Family::Upper),
        ] {
            let fu = apply_functional(&phi, window, &u);
            let fv = apply_functional(&phi, window, &v);
            prop_assert!(apply_functional(&phi, window, &w) <= fu + fv + 1e-12);
            let scaled = GridFunction::new(
                u.nodes().to_vec(),
                u.values().iter().map(|x| lambda * x).collect(),
            );
            prop_assert!((apply_functional(&phi, window, &scaled) - lambda * fu).abs() <= 1e-9);
        }
    }

    // whatever the matcher emits, its shell chain respects the gap rule
    // and every boundary is backed by a ledger entry
    #[test]
    fn matched_patterns_are_sound(
        kinds in proptest::collection::vec(proptest::bool::ANY, 0..6),
        rhos in proptest::collection::vec(0.1f64..100.0, 6),
        c in 0.1f64..0.9,
    ) {
        let mut ledger = ConditionLedger::new(c);
        for (flag, rho) in kinds.iter().zip(&rhos) {
            let kind = if *flag { ConditionKind::I1 } else { ConditionKind::I0 };
            ledger.push(holding(kind, *rho));
        }
        let certificate = match_patterns(&ledger);
        if matches!(certificate.pattern, Pattern::None) {
            prop_assert_eq!(certificate.solution_count, 0);
            return Ok(());
        }
        prop_assert_eq!(certificate.shells.len(), certificate.solution_count);
        let mut boundaries = Vec::new();
        if let Some(first) = certificate.shells.first() {
            boundaries.push((first.inner_rho, first.inner_kind));
        }
        for shell in &certificate.shells {
            prop_assert!(shell.sup_lower < shell.sup_upper);
            boundaries.push((shell.outer_rho, shell.outer_kind));
        }
        for pair in boundaries.windows(2) {
            let reach = if pair[0].1 == ConditionKind::I0 {
                pair[0].0 / c
            } else {
                pair[0].0
            };
            prop_assert!(reach < pair[1].0);
        }
        for (rho, kind) in &boundaries {
            prop_assert!(ledger.entries.iter().any(|e| e.rho == *rho && e.kind == *kind));
        }
    }

    // decimal strings round-trip to full double precision
    #[test]
    fn decimal_strings_round_trip(x in -1e12f64..1e12) {
        let text = decimal(x);
        let back: f64 = text.parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-14 * x.abs().max(1e-300));
    }
}
