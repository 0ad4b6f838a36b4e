//! End-to-end acceptance checks, one per headline claim of the library.
//! Each test prints a single pass/fail line (visible with `--nocapture`).

use momentgap::circuit_mc::validate_decay;
use momentgap::convergence::convergence_time_bound;
use momentgap::gate_averaging::{
    build_local_moment_operator, canonical_gate, pauli_transfer_matrix, BasisKind,
    GateDistribution, LocalMomentOperator,
};
use momentgap::mean_field::{
    gap_prediction_vs_exact, invariant_polynomial_check, leading_coefficient, omega2,
};
use momentgap::moment_space::u2_invariant_basis;
use momentgap::symmetric_sector::{
    assemble_symmetric_moment_matrix, permutation_fixed_vectors, spectral_gap, DEFAULT_DIM_CAP,
};
use ndarray::Array2;
use ndarray_linalg::{EigValsh, UPLO};
use num_complex::Complex64 as C64;

fn criterion(id: usize, name: &str, f: impl FnOnce()) {
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f));
    println!("criterion {id} ({name}): {}", if outcome.is_ok() { "pass" } else { "FAIL" });
    if let Err(panic) = outcome {
        std::panic::resume_unwind(panic);
    }
}

fn haar_local(t: usize, kind: BasisKind) -> LocalMomentOperator {
    build_local_moment_operator(&GateDistribution::haar_u4(), t, kind, 0).unwrap()
}

#[test]
fn haar_second_moment_coefficient_is_six_fifths() {
    criterion(1, "haar t=2 mean-field coefficient 6/5 with isotropic witness", || {
        let pred = leading_coefficient(&haar_local(2, BasisKind::FullPauli), false).unwrap();
        assert!((pred.a1 - 1.2).abs() < 1e-10, "a1 = {}", pred.a1);
        // the slowest excitation is the isotropic two-copy Pauli correlation:
        // equal-magnitude XX, YY, ZZ components and nothing else
        let mags: std::collections::HashMap<&str, f64> = pred
            .witness
            .iter()
            .map(|(l, c)| (l.as_str(), (c[0] * c[0] + c[1] * c[1]).sqrt()))
            .collect();
        assert_eq!(mags.len(), 3, "witness support {:?}", pred.witness);
        let xx = mags["XX"];
        assert!(xx > 0.5);
        assert!((mags["YY"] - xx).abs() < 1e-8);
        assert!((mags["ZZ"] - xx).abs() < 1e-8);
    });
}

#[test]
fn coefficient_independent_of_moment_order() {
    criterion(2, "mean-field coefficient equal at moment orders 2 and 3", || {
        let a2 = leading_coefficient(&haar_local(2, BasisKind::FullPauli), false).unwrap().a1;
        let a3 = leading_coefficient(&haar_local(3, BasisKind::FullPauli), false).unwrap().a1;
        assert!((a2 - a3).abs() < 1e-8, "a1(t=2) = {a2}, a1(t=3) = {a3}");
    });
}

#[test]
fn sector_gap_approaches_mean_field_prediction() {
    criterion(3, "exact sector gap approaches a1/n at both moment orders", || {
        for (t, n_max) in [(2usize, 30usize), (3, 20)] {
            let a1 = leading_coefficient(&haar_local(t, BasisKind::FullPauli), false).unwrap().a1;
            let m = haar_local(t, BasisKind::Invariant);
            let n_list: Vec<usize> = (4..=n_max).collect();
            let rows = gap_prediction_vs_exact(&m, a1, &n_list, DEFAULT_DIM_CAP).unwrap();
            let last = rows.last().unwrap();
            assert!(
                last.rel_dev <= 0.05,
                "t={t}: relative deviation {} at n={} exceeds 5%",
                last.rel_dev,
                last.n
            );
            // past the small-n crossover the deviation shrinks monotonically
            for pair in rows.iter().filter(|r| r.n >= 8).collect::<Vec<_>>().windows(2) {
                assert!(
                    pair[1].rel_dev < pair[0].rel_dev,
                    "t={t}: deviation grew from n={} to n={}",
                    pair[0].n,
                    pair[1].n
                );
            }
        }
    });
}

#[test]
fn permutation_products_are_exact_fixed_points() {
    criterion(4, "permutation product states span the fixed space, multiplicity t!", || {
        for (t, expected_mult) in [(2usize, 2usize), (3, 6)] {
            let m = haar_local(t, BasisKind::Invariant);
            for n in 2..=8 {
                let sector = assemble_symmetric_moment_matrix(&m, n, DEFAULT_DIM_CAP).unwrap();
                let fixed = permutation_fixed_vectors(&m, sector.occupations()).unwrap();
                assert_eq!(fixed.len(), expected_mult, "t={t} n={n}");
                for v in &fixed {
                    let mv = sector.matvec(v);
                    let res: f64 = mv
                        .iter()
                        .zip(v.iter())
                        .map(|(a, b)| (a - b).norm_sqr())
                        .sum::<f64>()
                        .sqrt();
                    assert!(res <= 1e-9, "t={t} n={n}: fixed-point residual {res:.3e}");
                }
                let result = spectral_gap(&sector, &fixed).unwrap();
                assert_eq!(result.unit_multiplicity, expected_mult, "t={t} n={n}");
            }
        }
    });
}

/// Dense second-moment operator on all three sites of a length-3 chain, in the
/// product basis of normalized two-copy Pauli strings (site dimension 16).
fn dense_full_chain_moment(m: &LocalMomentOperator) -> Array2<C64> {
    let d = 16usize;
    let dim = d * d * d;
    let mloc = m.matrix();
    let mut full = Array2::<C64>::zeros((dim, dim));
    let pairs = [(0usize, 1usize), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)];
    let weight = 1.0 / 6.0;
    for &(i, j) in &pairs {
        let k = 3 - i - j;
        for row in 0..d * d {
            let (a, c) = (row / d, row % d);
            for col in 0..d * d {
                let v = mloc[[row, col]];
                if v.norm() < 1e-15 {
                    continue;
                }
                let (b, e) = (col / d, col % d);
                for spectator in 0..d {
                    let mut r = [0usize; 3];
                    let mut cc = [0usize; 3];
                    r[i] = a;
                    r[j] = c;
                    r[k] = spectator;
                    cc[i] = b;
                    cc[j] = e;
                    cc[k] = spectator;
                    full[[(r[0] * d + r[1]) * d + r[2], (cc[0] * d + cc[1]) * d + cc[2]]] +=
                        v * weight;
                }
            }
        }
    }
    full
}

#[test]
fn sector_spectrum_embeds_in_full_operator() {
    criterion(5, "symmetric-sector spectrum is a subset of the full 3-site spectrum", || {
        let m_full = haar_local(2, BasisKind::FullPauli);
        let full = dense_full_chain_moment(&m_full);
        // Hermiticity check before the symmetric eigensolve
        let herm: f64 = (0..full.nrows())
            .flat_map(|i| (0..i + 1).map(move |j| (i, j)))
            .map(|(i, j)| (full[[i, j]] - full[[j, i]].conj()).norm())
            .fold(0.0, f64::max);
        assert!(herm < 1e-10, "full operator asymmetry {herm:.3e}");
        let full_eigs = full.eigvalsh(UPLO::Lower).unwrap();

        let m_inv = haar_local(2, BasisKind::Invariant);
        let sector = assemble_symmetric_moment_matrix(&m_inv, 3, DEFAULT_DIM_CAP).unwrap();
        let sector_eigs = sector.to_dense().eigvalsh(UPLO::Lower).unwrap();
        for &e in sector_eigs.iter() {
            let nearest = full_eigs
                .iter()
                .map(|&f| (f - e).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest <= 1e-9, "sector eigenvalue {e} missing from full spectrum (nearest {nearest:.3e})");
        }
        // the subdominant full-space eigenvalue is reproduced by the sector
        let lambda1 = spectral_gap(
            &sector,
            &permutation_fixed_vectors(&m_inv, sector.occupations()).unwrap(),
        )
        .unwrap()
        .lambda1;
        let n_eigs = full_eigs.len();
        assert!((full_eigs[n_eigs - 3] - lambda1).abs() <= 1e-9);
    });
}

#[test]
fn monte_carlo_rate_matches_exact_lambda1() {
    criterion(6, "sampled correlator decay matches the diagonalized subdominant eigenvalue", || {
        let replicas = 20_000;
        let dist = GateDistribution::haar_u4();
        let m = haar_local(2, BasisKind::Invariant);
        let a1 = leading_coefficient(&haar_local(2, BasisKind::FullPauli), false).unwrap().a1;
        let reference =
            gap_prediction_vs_exact(&m, a1, &[4], DEFAULT_DIM_CAP).unwrap()[0].lambda1;
        let depths: Vec<usize> = (1..=14).collect();
        let v = validate_decay(&dist, 2, 4, &depths, replicas, 7, reference).unwrap();
        assert!(v.replicas >= 20_000);
        assert!(
            v.estimate.consistent,
            "fitted rate {} +- {} vs reference {}",
            v.estimate.rate, v.estimate.rate_stderr, reference
        );
    });
}

/// Conjugation table of two-qubit Pauli strings under exp(i pi/4 ZZ):
/// (input (p,q), output (p',q'), sign); labels 0..3 = I,X,Y,Z.
fn zz_quarter_table() -> Vec<((usize, usize), (usize, usize), f64)> {
    vec![
        ((0, 0), (0, 0), 1.0),
        ((0, 3), (0, 3), 1.0),
        ((3, 0), (3, 0), 1.0),
        ((3, 3), (3, 3), 1.0),
        ((1, 0), (2, 3), -1.0),
        ((2, 0), (1, 3), 1.0),
        ((0, 1), (3, 2), -1.0),
        ((0, 2), (3, 1), 1.0),
        ((1, 3), (2, 0), -1.0),
        ((2, 3), (1, 0), 1.0),
        ((3, 1), (0, 2), -1.0),
        ((3, 2), (0, 1), 1.0),
        ((1, 1), (1, 1), 1.0),
        ((1, 2), (1, 2), 1.0),
        ((2, 1), (2, 1), 1.0),
        ((2, 2), (2, 2), 1.0),
    ]
}

#[test]
fn transfer_matrix_and_polynomial_invariants() {
    criterion(7, "transfer-matrix table, polynomial bound on an angle grid, positive coefficients", || {
        // (a) the quarter-turn ZZ gate permutes Pauli strings with signs
        let ptm = pauli_transfer_matrix(&canonical_gate(0.0, 0.0, std::f64::consts::FRAC_PI_4))
            .unwrap();
        for ((p, q), (pp, qq), sign) in zz_quarter_table() {
            for row in 0..16 {
                let expect = if row == pp * 4 + qq { sign } else { 0.0 };
                assert!(
                    (ptm[[row, p * 4 + q]] - expect).abs() <= 1e-12,
                    "transfer entry [{row}, {}]", p * 4 + q
                );
            }
        }

        // (b) two-site overlap bound over a 10^3 angle grid; equality for the
        // isotropic two-copy correlation operator at both moment orders
        let grid = 10usize;
        let step = std::f64::consts::FRAC_PI_2 / grid as f64;
        for t in [2usize, 3] {
            let basis = u2_invariant_basis(t).unwrap();
            let w2 = omega2(t).unwrap();
            for iq in 0..grid {
                for ir in 0..grid {
                    for is in 0..grid {
                        let (q, r, s) = (iq as f64 * step, ir as f64 * step, is as f64 * step);
                        let (lhs, bound) = invariant_polynomial_check(&w2, q, r, s, t).unwrap();
                        assert!(
                            (lhs - bound).abs() <= 1e-10,
                            "t={t} ({q:.3},{r:.3},{s:.3}): equality violated by {:.3e}",
                            (lhs - bound).abs()
                        );
                        for w in basis.iter().skip(1) {
                            // the check itself errors when lhs > bound + 1e-9
                            let (lhs, bound) = invariant_polynomial_check(w, q, r, s, t).unwrap();
                            assert!(lhs <= bound + 1e-9);
                        }
                    }
                }
            }
        }

        // (c) strictly positive coefficient for the shipped universal sets
        for dist in [GateDistribution::haar_u4(), GateDistribution::universal_demo()] {
            let m = build_local_moment_operator(&dist, 2, BasisKind::FullPauli, 0).unwrap();
            let pred = leading_coefficient(&m, false).unwrap();
            assert!(pred.a1 > 1e-9, "{}: a1 = {}", dist.name(), pred.a1);
            assert!(!pred.non_universal);
        }
    });
}

#[test]
fn design_depth_worked_example() {
    criterion(8, "depth bound evaluates to 174 for gap 0.12, 10 qubits, order 2, eps 1e-3", || {
        let b = convergence_time_bound(0.12, 10, 2, 1e-3).unwrap();
        assert_eq!(b.headline, 174);
        assert!(b.sharper <= b.headline);
    });
}
