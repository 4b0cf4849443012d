//! Cross matrices of functionals against psi functions, their spectral
//! radii, and the positive resolvents used in the index estimates.

use crate::error::{Error, Result};
use crate::functional::{apply_functional, build_psi, Family, FamilySpec};
use crate::kernel::KernelSpec;
use crate::linalg::{matvec, solve_dense};

/// Margin enforced on every strict spectral inequality.
pub const SPECTRAL_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct CrossMatrix {
    pub entries: Vec<Vec<f64>>,
    pub family: Family,
}

impl CrossMatrix {
    pub fn dim(&self) -> usize {
        self.entries.len()
    }
}

/// Entry (i, j) is the i-th functional applied to the j-th psi function.
pub fn build_cross_matrix(kernel: &KernelSpec, spec: &FamilySpec) -> Result<CrossMatrix> {
    let psis = build_psi(kernel, spec)?;
    let phis = spec.functionals();
    let mut entries = Vec::with_capacity(phis.len());
    for (row, phi) in phis.iter().enumerate() {
        let mut r = Vec::with_capacity(psis.len());
        for (col, psi) in psis.iter().enumerate() {
            let value = apply_functional(phi, kernel.window(), &psi.curve);
            if value < -1e-10 {
                return Err(Error::NegativeEntry { row, col, value });
            }
            r.push(value.max(0.0));
        }
        entries.push(r);
    }
    Ok(CrossMatrix {
        entries,
        family: spec.family,
    })
}

/// Spectral radius of a nonnegative matrix: closed form up to dimension
/// two, power iteration with a tiny diagonal shift beyond that.
pub fn spectral_radius(m: &CrossMatrix) -> Result<f64> {
    spectral_radius_entries(&m.entries)
}

pub fn spectral_radius_entries(entries: &[Vec<f64>]) -> Result<f64> {
    match entries.len() {
        0 => Ok(0.0),
        1 => Ok(entries[0][0].abs()),
        2 => {
            let (p, q) = (entries[0][0], entries[0][1]);
            let (r, s) = (entries[1][0], entries[1][1]);
            let half_trace = 0.5 * (p + s);
            let disc = 0.25 * (p - s) * (p - s) + q * r;
            if disc >= 0.0 {
                let root = disc.sqrt();
                Ok((half_trace + root).abs().max((half_trace - root).abs()))
            } else {
                // complex pair; modulus is sqrt of the determinant
                Ok((p * s - q * r).abs().sqrt())
            }
        }
        n => {
            // tiny diagonal shift breaks nilpotent stalls; subtracted at the end
            const SHIFT: f64 = 1e-14;
            let shifted: Vec<Vec<f64>> = entries
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(j, &v)| if i == j { v + SHIFT } else { v })
                        .collect()
                })
                .collect();
            let mut v = vec![1.0; n];
            let mut last = (0.0, f64::INFINITY);
            for _ in 0..100_000 {
                let w = matvec(&shifted, &v);
                // Collatz-Wielandt bounds of the positive iterate
                let mut lower = f64::INFINITY;
                let mut upper: f64 = 0.0;
                for (wi, vi) in w.iter().zip(&v) {
                    if *vi > 1e-300 {
                        let ratio = wi / vi;
                        lower = lower.min(ratio);
                        upper = upper.max(ratio);
                    }
                }
                let norm = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                if norm < 1e-300 {
                    return Ok(0.0);
                }
                v = w.iter().map(|x| x / norm).collect();
                if upper - lower < 1e-12 {
                    return Ok((0.5 * (upper + lower) - SHIFT).max(0.0));
                }
                last = (lower, upper);
            }
            Err(Error::NoConvergence {
                lower: last.0,
                upper: last.1,
            })
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct C8Report {
    pub holds: bool,
    pub r1: f64,
    pub r2: f64,
    pub margin: f64,
}

/// The spectral condition on both families: r(M1) < 1/c1 and r(M2) < 1,
/// strictly, with the certification margin.
pub fn check_c8(
    kernel: &KernelSpec,
    lower: &FamilySpec,
    upper: &FamilySpec,
) -> Result<C8Report> {
    let r1 = if lower.is_empty() {
        0.0
    } else {
        spectral_radius(&build_cross_matrix(kernel, lower)?)?
    };
    let r2 = if upper.is_empty() {
        0.0
    } else {
        spectral_radius(&build_cross_matrix(kernel, upper)?)?
    };
    let holds =
        r1 < 1.0 / kernel.c1() - SPECTRAL_MARGIN && r2 < 1.0 - SPECTRAL_MARGIN;
    Ok(C8Report {
        holds,
        r1,
        r2,
        margin: SPECTRAL_MARGIN,
    })
}

#[derive(Debug, Clone)]
pub struct ResolventVector {
    pub values: Vec<f64>,
}

/// Applies (Id - scale * M)^(-1) to a nonnegative right-hand side by direct
/// solve, with a positivity check and, while the truncated series still
/// resolves the target accuracy, a Neumann-sum cross-check.
pub fn resolve_positive(
    m: &CrossMatrix,
    scale: f64,
    rhs: &[f64],
) -> Result<ResolventVector> {
    let n = m.dim();
    assert_eq!(rhs.len(), n);
    if n == 0 {
        return Ok(ResolventVector { values: Vec::new() });
    }
    let radius = spectral_radius(m)? * scale;
    if radius >= 1.0 - SPECTRAL_MARGIN {
        return Err(Error::SpectralRadiusTooLarge { radius });
    }

    let system: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let id = if i == j { 1.0 } else { 0.0 };
                    id - scale * m.entries[i][j]
                })
                .collect()
        })
        .collect();
    let values = solve_dense(&system, rhs).ok_or(Error::SpectralRadiusTooLarge {
        radius,
    })?;

    for (row, v) in values.iter().enumerate() {
        if *v < -1e-10 {
            return Err(Error::NegativeEntry {
                row,
                col: 0,
                value: *v,
            });
        }
    }

    // 64 terms resolve the series to ~1e-8 only while r is moderate
    if radius <= 0.7 {
        let scaled: Vec<Vec<f64>> = m
            .entries
            .iter()
            .map(|row| row.iter().map(|v| v * scale).collect())
            .collect();
        let mut term = rhs.to_vec();
        let mut sum = rhs.to_vec();
        for _ in 0..63 {
            term = matvec(&scaled, &term);
            for (s, t) in sum.iter_mut().zip(&term) {
                *s += t;
            }
        }
        let rhs_norm = rhs.iter().fold(0.0f64, |mx, x| mx.max(x.abs()));
        for (a, b) in values.iter().zip(&sum) {
            if (a - b).abs() > 1e-8 * rhs_norm.max(1.0) {
                return Err(Error::NoConvergence {
                    lower: *b,
                    upper: *a,
                });
            }
        }
    }

    Ok(ResolventVector { values })
}

/// Lipschitz bound of the resolvent: 1 / (1 - q*) for q* < 1.
pub fn resolvent_lip_bound(q_star: f64) -> Result<f64> {
    if q_star >= 1.0 {
        return Err(Error::NotContractive { q_star });
    }
    Ok(1.0 / (1.0 - q_star))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{FunctionalKind, FunctionalSpec};
    use crate::kernel::{presets, Map1};
    use std::sync::Arc;

    fn example1_family(family: Family) -> FamilySpec {
        let gamma: Map1 = Arc::new(|s: f64| s * (1.0 - s) + 0.25);
        let theta: Map1 = Arc::new(|_t: f64| 0.5);
        let kind = match family {
            Family::Lower => FunctionalKind::MinWindow,
            Family::Upper => FunctionalKind::MaxWindow,
        };
        FamilySpec {
            family,
            alphas: vec![FunctionalSpec::new(kind.clone(), family)],
            gammas: vec![gamma],
            betas: vec![FunctionalSpec::new(kind, family)],
            deltas: vec![theta],
        }
    }

    #[test]
    fn example_cross_matrices() {
        let kernel = presets::dirichlet_max((0.25, 0.75)).unwrap();
        let m1 = build_cross_matrix(&kernel, &example1_family(Family::Lower)).unwrap();
        let m2 = build_cross_matrix(&kernel, &example1_family(Family::Upper)).unwrap();
        for row in 0..2 {
            assert!((m1.entries[row][0] - 43.0 / 1024.0).abs() < 1e-9);
            assert!((m1.entries[row][1] - 0.5).abs() < 1e-12);
            assert!((m2.entries[row][0] - 11.0 / 192.0).abs() < 1e-9);
            assert!((m2.entries[row][1] - 0.5).abs() < 1e-12);
        }
        let r2 = spectral_radius(&m2).unwrap();
        assert!((r2 - 107.0 / 192.0).abs() < 1e-12);
    }

    #[test]
    fn rank_structured_radius_is_exact() {
        for (m, theta) in [(0.1, 0.5), (0.0419921875, 0.5), (0.3, 0.2)] {
            let cm = CrossMatrix {
                entries: vec![vec![m, theta], vec![m, theta]],
                family: Family::Upper,
            };
            assert!((spectral_radius(&cm).unwrap() - (m + theta)).abs() < 1e-14);
        }
    }

    #[test]
    fn power_iteration_matches_cubic_roots() {
        // dominant root of the characteristic cubic, via explicit Cardano
        let entries = vec![
            vec![0.2, 0.5, 0.1],
            vec![0.3, 0.1, 0.4],
            vec![0.1, 0.2, 0.3],
        ];
        let got = spectral_radius_entries(&entries).unwrap();
        // coefficients of det(A - x I) = -x^3 + c2 x^2 + c1 x + c0
        let a = &entries;
        let trace = a[0][0] + a[1][1] + a[2][2];
        let minors = a[0][0] * a[1][1] - a[0][1] * a[1][0]
            + a[0][0] * a[2][2]
            - a[0][2] * a[2][0]
            + a[1][1] * a[2][2]
            - a[1][2] * a[2][1];
        let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
        // largest real root of x^3 - trace x^2 + minors x - det by Newton
        let mut x = 1.0;
        for _ in 0..200 {
            let f = x * x * x - trace * x * x + minors * x - det;
            let df = 3.0 * x * x - 2.0 * trace * x + minors;
            x -= f / df;
        }
        assert!((got - x).abs() < 1e-9, "power {got} vs root {x}");
    }

    #[test]
    fn zero_and_identity_radii() {
        assert_eq!(
            spectral_radius_entries(&[vec![0.0]]).unwrap(),
            0.0
        );
        assert_eq!(
            spectral_radius_entries(&[vec![1.0]]).unwrap(),
            1.0
        );
        assert_eq!(spectral_radius_entries(&[]).unwrap(), 0.0);
    }

    #[test]
    fn c8_for_example_and_boundary_cases() {
        let kernel = presets::dirichlet_max((0.25, 0.75)).unwrap();
        let report = check_c8(
            &kernel,
            &example1_family(Family::Lower),
            &example1_family(Family::Upper),
        )
        .unwrap();
        assert!(report.holds);
        assert!((report.r1 - (43.0 / 1024.0 + 0.5)).abs() < 1e-9);
        assert!((report.r2 - 107.0 / 192.0).abs() < 1e-9);

        let empty = check_c8(
            &kernel,
            &FamilySpec::empty(Family::Lower),
            &FamilySpec::empty(Family::Upper),
        )
        .unwrap();
        assert!(empty.holds);
        assert_eq!(empty.r1, 0.0);

        // boundary case r2 = 1 must fail
        let cm = CrossMatrix {
            entries: vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            family: Family::Upper,
        };
        assert!((spectral_radius(&cm).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn resolvent_golden_value() {
        // (Id - M2)^(-1) applied to (31/192)(1,1) gives (31/85)(1,1)
        let kernel = presets::dirichlet_max((0.25, 0.75)).unwrap();
        let m2 = build_cross_matrix(&kernel, &example1_family(Family::Upper)).unwrap();
        let rhs = vec![31.0 / 192.0, 31.0 / 192.0];
        let out = resolve_positive(&m2, 1.0, &rhs).unwrap();
        for v in out.values {
            assert!((v - 31.0 / 85.0).abs() < 1e-10, "v = {v}");
        }
    }

    #[test]
    fn scaled_resolvent_prefactor() {
        // (Id - c1 M1)^(-1) on (1,1) has the rank-one prefactor
        // 1 / (1 - c1 (m1 + theta)) = 4096/3541
        let kernel = presets::dirichlet_max((0.25, 0.75)).unwrap();
        let m1 = build_cross_matrix(&kernel, &example1_family(Family::Lower)).unwrap();
        let out = resolve_positive(&m1, 0.25, &[1.0, 1.0]).unwrap();
        for v in out.values {
            assert!((v - 4096.0 / 3541.0).abs() < 1e-8, "v = {v}");
        }
    }

    #[test]
    fn resolvent_edge_cases() {
        let zero = CrossMatrix {
            entries: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            family: Family::Upper,
        };
        let out = resolve_positive(&zero, 1.0, &[2.0, 3.0]).unwrap();
        assert_eq!(out.values, vec![2.0, 3.0]);

        let big = CrossMatrix {
            entries: vec![vec![2.0]],
            family: Family::Upper,
        };
        assert!(matches!(
            resolve_positive(&big, 1.0, &[1.0]),
            Err(Error::SpectralRadiusTooLarge { .. })
        ));
    }

    #[test]
    fn lip_bound_values() {
        assert_eq!(resolvent_lip_bound(0.5).unwrap(), 2.0);
        assert_eq!(resolvent_lip_bound(0.0).unwrap(), 1.0);
        assert!((resolvent_lip_bound(0.9).unwrap() - 10.0).abs() < 1e-12);
        assert!(matches!(
            resolvent_lip_bound(1.0),
            Err(Error::NotContractive { .. })
        ));
    }
}
