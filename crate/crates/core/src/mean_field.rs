//! Holstein-Primakoff excitation matrices around a permutation product state,
//! the leading gap coefficient a1, and the invariant-polynomial bound for the
//! canonical two-qubit gate.

use ndarray::{Array1, Array2};
use ndarray_linalg::Eigh;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::gate_averaging::{
    canonical_gate, pauli_transfer_matrix, BasisKind, LocalMomentOperator,
};
use crate::moment_space::{OperatorKet, PauliString, Perm};
use crate::symmetric_sector::{
    assemble_symmetric_moment_matrix, permutation_fixed_vectors, spectral_gap,
};

/// a1 at or below this threshold flags the distribution as possibly
/// non-universal.
pub const NON_UNIVERSAL_TOL: f64 = 1e-9;

const HERMITICITY_TOL: f64 = 1e-10;

fn c64(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ExcitationBand {
    /// Direct plus exchange term: the band seen by the bosonic sector.
    Symmetric,
    /// Direct term only, with the identity read as a Kronecker delta.
    Antisymmetric,
}

/// Quadratic excitation form around the product state built on |sigma>>,
/// restricted to the local directions orthogonal to the normalized |sigma>>.
#[derive(Debug, Clone)]
pub struct ExcitationMatrix {
    band: ExcitationBand,
    sigma: Perm,
    /// (d_loc - 1) x (d_loc - 1), Hermitian.
    matrix: Array2<C64>,
    /// d_loc x (d_loc - 1): orthonormal complement of |sigma>> used for the
    /// restriction; maps excitation coordinates back to local-basis ones.
    complement: Array2<C64>,
}

impl ExcitationMatrix {
    pub fn band(&self) -> ExcitationBand {
        self.band
    }

    pub fn sigma(&self) -> &Perm {
        &self.sigma
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim().0
    }

    /// Ascending eigenvalues and eigenvectors (columns) of the excitation form.
    pub fn eigen(&self) -> Result<(Array1<f64>, Array2<C64>)> {
        self.matrix
            .eigh(ndarray_linalg::UPLO::Lower)
            .map_err(|e| Error::InvalidInput(format!("excitation eigensolve failed: {e}")))
    }

    /// Smallest eigenvalue with its multiplicity and one witness eigenvector
    /// expressed in local-basis coordinates, phase-fixed so the
    /// largest-magnitude component is real positive.
    pub fn minimum(&self) -> Result<(f64, usize, Array1<C64>)> {
        let (w, v) = self.eigen()?;
        let min = w[0];
        let degeneracy = w.iter().filter(|&&x| (x - min).abs() < 1e-8).count();
        let local = self.complement.dot(&v.column(0).to_owned());
        Ok((min, degeneracy, fix_phase(&local)))
    }
}

fn fix_phase(v: &Array1<C64>) -> Array1<C64> {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.norm() > v[best].norm() {
            best = i;
        }
    }
    let phase = if v[best].norm() > 0.0 {
        v[best].conj() / c64(v[best].norm())
    } else {
        c64(1.0)
    };
    v.mapv(|x| x * phase)
}

/// Orthonormal basis of the complement of `s` inside C^d, d x (d-1).
fn complement_basis(s: &Array1<C64>) -> Array2<C64> {
    let d = s.len();
    let mut cols: Vec<Array1<C64>> = vec![s.clone()];
    for i in 0..d {
        let mut e = Array1::<C64>::zeros(d);
        e[i] = c64(1.0);
        for _ in 0..2 {
            for c in &cols {
                let ov: C64 = c.iter().zip(e.iter()).map(|(a, b)| a.conj() * b).sum();
                for (ei, ci) in e.iter_mut().zip(c.iter()) {
                    *ei -= ov * ci;
                }
            }
        }
        let norm: f64 = e.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            cols.push(e.mapv(|x| x / norm));
        }
        if cols.len() == d {
            break;
        }
    }
    let mut q = Array2::zeros((d, d - 1));
    for (j, c) in cols[1..].iter().enumerate() {
        for i in 0..d {
            q[[i, j]] = c[i];
        }
    }
    q
}

/// Excitation matrix for the product state on `sigma`:
/// symmetric band E = 2(1 - T1 - T2), antisymmetric band 2(1 - T1), with
/// T1[a,b] = <<sigma a|m|sigma b>> and T2[a,b] = <<sigma a|m|b sigma>>,
/// evaluated for the pair-swap-symmetrized m (the form entering the chain
/// average) and restricted to the complement of |sigma>>.
pub fn excitation_matrix(
    m_local: &LocalMomentOperator,
    sigma: &Perm,
    band: ExcitationBand,
) -> Result<ExcitationMatrix> {
    let basis = m_local.basis();
    let d = basis.dim();
    let s = basis.permutation_coords(sigma)?;
    let m = m_local.matrix();

    // sigma (x) sigma must be fixed by m
    let mut ss = Array1::<C64>::zeros(d * d);
    for i in 0..d {
        for k in 0..d {
            ss[i * d + k] = s[i] * s[k];
        }
    }
    let mss = m.dot(&ss);
    let residual: f64 = mss
        .iter()
        .zip(ss.iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if residual > 1e-8 {
        return Err(Error::NotFixedPoint { residual });
    }

    // msym[(i,a),(k,b)] = (m[(i,a),(k,b)] + m[(a,i),(b,k)]) / 2
    let elem = |i: usize, a: usize, k: usize, b: usize| -> C64 {
        (m[[i * d + a, k * d + b]] + m[[a * d + i, b * d + k]]) / 2.0
    };
    let mut t1 = Array2::<C64>::zeros((d, d));
    let mut t2 = Array2::<C64>::zeros((d, d));
    for a in 0..d {
        for b in 0..d {
            let mut acc1 = c64(0.0);
            let mut acc2 = c64(0.0);
            for i in 0..d {
                if s[i].norm() < 1e-15 {
                    continue;
                }
                for k in 0..d {
                    if s[k].norm() < 1e-15 {
                        continue;
                    }
                    acc1 += s[i].conj() * elem(i, a, k, b) * s[k];
                    acc2 += s[i].conj() * elem(i, a, b, k) * s[k];
                }
            }
            t1[[a, b]] = acc1;
            t2[[a, b]] = acc2;
        }
    }

    let mut full = Array2::<C64>::eye(d);
    match band {
        ExcitationBand::Symmetric => {
            full = full - &t1 - &t2;
        }
        ExcitationBand::Antisymmetric => {
            full = full - &t1;
        }
    }
    full.mapv_inplace(|x| x * 2.0);

    let q = complement_basis(&s);
    let qc = q.mapv(|x| x.conj());
    let mut matrix = qc.t().dot(&full).dot(&q);

    let mut deviation = 0.0f64;
    let dm = matrix.dim().0;
    for i in 0..dm {
        for j in i..dm {
            let a = matrix[[i, j]];
            let b = matrix[[j, i]].conj();
            deviation = deviation.max((a - b).norm());
            let avg = (a + b) / 2.0;
            matrix[[i, j]] = avg;
            matrix[[j, i]] = avg.conj();
        }
    }
    if deviation > HERMITICITY_TOL {
        return Err(Error::Asymmetry { asymmetry: deviation, tolerance: HERMITICITY_TOL });
    }

    Ok(ExcitationMatrix { band, sigma: sigma.clone(), matrix, complement: q })
}

/// Leading gap coefficient and the witness excitation.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GapPrediction {
    pub a1: f64,
    pub band: ExcitationBand,
    /// One-line notation of the minimizing reference permutation.
    pub sigma: Vec<usize>,
    pub degeneracy: usize,
    /// Witness operator as (Pauli-string label, coefficient) pairs over the
    /// normalized string kets, sorted by string index, entries above 1e-9.
    pub witness: Vec<(String, [f64; 2])>,
    /// Minimum of the antisymmetric (direct-term-only) band, reported for
    /// diagnostics even when excluded from a1.
    pub antisymmetric_min: f64,
    pub antisymmetric_included: bool,
    /// True when a1 <= the non-universality threshold.
    pub non_universal: bool,
    /// True when the scan ran over the invariant-restricted local basis
    /// rather than the full one.
    pub restricted_scan: bool,
}

impl GapPrediction {
    pub fn predicted_gap(&self, n: usize) -> f64 {
        self.a1 / n as f64
    }
}

/// a1 = minimum over reference permutations (and, on request, over both
/// excitation bands) of the smallest excitation eigenvalue. The antisymmetric
/// band decouples from the chain-averaged dynamics, so it is excluded from a1
/// unless `include_antisymmetric` is set; its minimum is always reported.
pub fn leading_coefficient(
    m_local: &LocalMomentOperator,
    include_antisymmetric: bool,
) -> Result<GapPrediction> {
    let t = m_local.t();
    let mut best: Option<(f64, usize, Array1<C64>, Perm, ExcitationBand)> = None;
    let mut antisym_min = f64::INFINITY;
    for sigma in Perm::all(t) {
        for band in [ExcitationBand::Symmetric, ExcitationBand::Antisymmetric] {
            let e = excitation_matrix(m_local, &sigma, band)?;
            let (min, degeneracy, witness) = e.minimum()?;
            if band == ExcitationBand::Antisymmetric {
                antisym_min = antisym_min.min(min);
                if !include_antisymmetric {
                    continue;
                }
            }
            if best.as_ref().map_or(true, |b| min < b.0) {
                best = Some((min, degeneracy, witness, sigma.clone(), band));
            }
        }
    }
    let (a1, degeneracy, witness_local, sigma, band) = best.unwrap();

    // express the witness over normalized Pauli-string kets
    let np = 4usize.pow(t as u32);
    let mut pauli = vec![C64::new(0.0, 0.0); np];
    for (idx, &coord) in witness_local.iter().enumerate() {
        for (s, c) in m_local.basis().pauli_support(idx) {
            pauli[s] += coord * c;
        }
    }
    let witness: Vec<(String, [f64; 2])> = pauli
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 1e-9)
        .map(|(s, c)| {
            let labels: String = PauliString::from_index(s, t)
                .labels()
                .iter()
                .map(|&l| ['I', 'X', 'Y', 'Z'][l as usize])
                .collect();
            (labels, [c.re, c.im])
        })
        .collect();

    Ok(GapPrediction {
        a1,
        band,
        sigma: sigma.one_line().to_vec(),
        degeneracy,
        witness,
        antisymmetric_min: antisym_min,
        antisymmetric_included: include_antisymmetric,
        non_universal: a1 <= NON_UNIVERSAL_TOL,
        restricted_scan: m_local.basis().kind() == BasisKind::Invariant,
    })
}

// ---------------------------------------------------------------------------
// Invariant polynomial bound for the canonical gate
// ---------------------------------------------------------------------------

/// Normalized single-qubit-invariant test operator of degree 2:
/// (s1 s1 + s2 s2 + s3 s3) on the first two copies, identity on the rest.
pub fn omega2(t: usize) -> Result<OperatorKet> {
    if t < 2 {
        return Err(Error::InvalidInput("omega2 needs at least two copies".into()));
    }
    let mut out = OperatorKet::zeros(t, 2)?;
    for i in 1..4usize {
        let mut labels = vec![0u8; t];
        labels[0] = i as u8;
        labels[1] = i as u8;
        let ket = PauliString::new(labels)?.normalized_ket()?;
        out.add_scaled(c64(1.0), &ket);
    }
    Ok(out.normalized())
}

fn random_su2(seed: u64) -> Array2<C64> {
    // deterministic unit quaternion from a splitmix-style hash
    let mut x = seed;
    let mut next = move || {
        x = x.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        (z ^ (z >> 31)) as f64 / u64::MAX as f64 - 0.5
    };
    let q: Vec<f64> = (0..4).map(|_| next()).collect();
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (a, b, c, d) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    ndarray::array![
        [C64::new(a, b), C64::new(c, d)],
        [C64::new(-c, d), C64::new(a, -b)]
    ]
}

/// Deviation of `ket` from invariance under conjugation by u^{(x)t} for a few
/// fixed single-qubit unitaries.
pub fn twirl_deviation(ket: &OperatorKet) -> f64 {
    let t = ket.t();
    let w = ket.to_matrix();
    let mut worst = 0.0f64;
    for seed in [11u64, 29, 47] {
        let u = random_su2(seed);
        let mut ut = ndarray::array![[c64(1.0)]];
        for _ in 0..t {
            ut = crate::moment_space::kron(&ut, &u);
        }
        let utd = ut.t().mapv(|x| x.conj());
        let rotated = ut.dot(&w).dot(&utd);
        let dev: f64 = rotated
            .iter()
            .zip(w.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(dev);
    }
    worst
}

/// Two-site expectation <<I omega|U(q,r,s)^{(x)t,t}|I omega>> against the
/// symmetric-polynomial bound (x^2+y^2+z^2)/3 with x = r1 s1, y = s1 q1,
/// z = q1 r1 and q1 = cos 2q etc. Returns (lhs, bound); lhs must not exceed
/// the bound, and omega must be a normalized invariant operator orthogonal to
/// the identity.
pub fn invariant_polynomial_check(
    omega: &OperatorKet,
    q: f64,
    r: f64,
    s: f64,
    t: usize,
) -> Result<(f64, f64)> {
    if omega.t() != t || omega.local_dim() != 2 {
        return Err(Error::BasisMismatch { expected: t, got: omega.t() });
    }
    let norm = omega.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Unnormalized { norm });
    }
    let identity = PauliString::new(vec![0u8; t])?.normalized_ket()?;
    let id_overlap = identity.inner(omega).norm();
    if id_overlap > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "omega has identity component {id_overlap:.3e}"
        )));
    }
    let deviation = twirl_deviation(omega);
    if deviation > 1e-8 {
        return Err(Error::NotInvariant { deviation });
    }

    // Pauli expansion of omega over normalized string kets
    let np = 4usize.pow(t as u32);
    let coeffs: Vec<C64> = (0..np)
        .map(|u| {
            PauliString::from_index(u, t)
                .normalized_ket()
                .map(|k| k.inner(omega))
        })
        .collect::<Result<Vec<_>>>()?;
    let support: Vec<(usize, C64)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 1e-14)
        .map(|(u, &c)| (u, c))
        .collect();

    let rtm = pauli_transfer_matrix(&canonical_gate(q, r, s))?;
    let digits = |mut idx: usize| -> Vec<usize> {
        let mut d = vec![0usize; t];
        for k in (0..t).rev() {
            d[k] = idx % 4;
            idx /= 4;
        }
        d
    };
    let mut lhs = c64(0.0);
    for &(u_out, c_out) in &support {
        let out_d = digits(u_out);
        for &(u_in, c_in) in &support {
            let in_d = digits(u_in);
            // site 1 carries the identity string, so each per-copy pair index
            // reduces to the omega label alone
            let mut prod = 1.0f64;
            for k in 0..t {
                prod *= rtm[[out_d[k], in_d[k]]];
                if prod == 0.0 {
                    break;
                }
            }
            lhs += c_out.conj() * c_in * c64(prod);
        }
    }
    if lhs.im.abs() > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "expectation has imaginary part {:.3e}",
            lhs.im
        )));
    }
    let (q1, r1, s1) = ((2.0 * q).cos(), (2.0 * r).cos(), (2.0 * s).cos());
    let (x, y, z) = (r1 * s1, s1 * q1, q1 * r1);
    let bound = (x * x + y * y + z * z) / 3.0;
    if lhs.re > bound + 1e-9 {
        return Err(Error::InvalidInput(format!(
            "invariant expectation {} exceeds bound {}",
            lhs.re, bound
        )));
    }
    Ok((lhs.re, bound))
}

// ---------------------------------------------------------------------------
// Exact gap vs mean-field prediction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, serde::Serialize)]
pub struct GapTableRow {
    pub n: usize,
    pub dim: usize,
    pub unit_multiplicity: usize,
    pub lambda1: f64,
    pub gap: f64,
    pub meanfield_prediction: f64,
    pub rel_dev: f64,
}

/// Exact sector gaps for each chain length against the a1/n prediction.
pub fn gap_prediction_vs_exact(
    m_local: &LocalMomentOperator,
    a1: f64,
    n_list: &[usize],
    cap: usize,
) -> Result<Vec<GapTableRow>> {
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let sector = assemble_symmetric_moment_matrix(m_local, n, cap)?;
        let fixed = permutation_fixed_vectors(m_local, sector.occupations())?;
        let result = spectral_gap(&sector, &fixed)?;
        let prediction = a1 / n as f64;
        let rel_dev = (result.gap * n as f64 / a1 - 1.0).abs();
        rows.push(GapTableRow {
            n,
            dim: sector.dim(),
            unit_multiplicity: result.unit_multiplicity,
            lambda1: result.lambda1,
            gap: result.gap,
            meanfield_prediction: prediction,
            rel_dev,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate_averaging::{build_local_moment_operator, cnot, GateDistribution};
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;

    fn haar_local(t: usize, kind: BasisKind) -> LocalMomentOperator {
        build_local_moment_operator(&GateDistribution::haar_u4(), t, kind, 0).unwrap()
    }

    #[test]
    fn invariant_restricted_t2_is_one_by_one() {
        let m = haar_local(2, BasisKind::Invariant);
        let e = excitation_matrix(&m, &Perm::identity(2), ExcitationBand::Symmetric).unwrap();
        assert_eq!(e.dim(), 1);
        assert_abs_diff_eq!(e.matrix()[[0, 0]].re, 1.2, epsilon = 1e-10);
        assert_abs_diff_eq!(e.matrix()[[0, 0]].im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn full_scan_t2_minimum_and_witness() {
        let m = haar_local(2, BasisKind::FullPauli);
        let pred = leading_coefficient(&m, false).unwrap();
        assert_abs_diff_eq!(pred.a1, 1.2, epsilon = 1e-10);
        assert!(!pred.non_universal);
        assert!(!pred.restricted_scan);
        // witness proportional to XX + YY + ZZ across the two copies
        let mut found = std::collections::HashMap::new();
        for (label, c) in &pred.witness {
            found.insert(label.clone(), (c[0] * c[0] + c[1] * c[1]).sqrt());
        }
        assert_eq!(found.len(), 3, "witness {:?}", pred.witness);
        let xx = found["XX"];
        assert!(xx > 0.5);
        assert_abs_diff_eq!(found["YY"], xx, epsilon = 1e-8);
        assert_abs_diff_eq!(found["ZZ"], xx, epsilon = 1e-8);
    }

    #[test]
    fn a1_invariant_under_reference_permutation() {
        for (t, kind) in [(2usize, BasisKind::FullPauli), (3, BasisKind::Invariant)] {
            let m = haar_local(t, kind);
            let mins: Vec<f64> = Perm::all(t)
                .iter()
                .map(|sigma| {
                    excitation_matrix(&m, sigma, ExcitationBand::Symmetric)
                        .unwrap()
                        .minimum()
                        .unwrap()
                        .0
                })
                .collect();
            for &v in &mins[1..] {
                assert_abs_diff_eq!(v, mins[0], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn a1_is_t_independent() {
        let m3 = haar_local(3, BasisKind::FullPauli);
        let pred = leading_coefficient(&m3, false).unwrap();
        assert_abs_diff_eq!(pred.a1, 1.2, epsilon = 1e-8);
    }

    #[test]
    fn identity_distribution_is_non_universal() {
        let dist =
            GateDistribution::finite("identity-only", vec![Array2::eye(4)], vec![1.0], true)
                .unwrap();
        let m = build_local_moment_operator(&dist, 2, BasisKind::FullPauli, 0).unwrap();
        let pred = leading_coefficient(&m, false).unwrap();
        assert!(pred.a1 <= NON_UNIVERSAL_TOL, "a1 = {}", pred.a1);
        assert!(pred.non_universal);
    }

    #[test]
    fn cnot_only_flags_by_sign() {
        // The single-excitation band alone does not expose CNOT's extra
        // conserved quantities (they live at higher excitation number), so
        // only the flag consistency is contractual, not the sign itself.
        let dist = GateDistribution::finite("cnot-only", vec![cnot(0, 1)], vec![1.0], true).unwrap();
        let m = build_local_moment_operator(&dist, 2, BasisKind::FullPauli, 0).unwrap();
        let pred = leading_coefficient(&m, false).unwrap();
        assert!(pred.a1.is_finite());
        assert_eq!(pred.non_universal, pred.a1 <= NON_UNIVERSAL_TOL);
    }

    #[test]
    fn universal_demo_has_positive_a1() {
        let dist = GateDistribution::universal_demo();
        let m = build_local_moment_operator(&dist, 2, BasisKind::FullPauli, 0).unwrap();
        let pred = leading_coefficient(&m, false).unwrap();
        assert!(pred.a1 > NON_UNIVERSAL_TOL, "a1 = {}", pred.a1);
    }

    #[test]
    fn omega2_saturates_polynomial_bound() {
        for t in [2usize, 3] {
            let w = omega2(t).unwrap();
            for (q, r, s) in [(0.3, 0.7, 1.1), (0.0, 0.0, 0.0), (1.2, 0.1, 0.5)] {
                let (lhs, bound) = invariant_polynomial_check(&w, q, r, s, t).unwrap();
                assert_abs_diff_eq!(lhs, bound, epsilon = 1e-10);
            }
            let (lhs, _) = invariant_polynomial_check(&w, 0.0, 0.0, 0.0, t).unwrap();
            assert_abs_diff_eq!(lhs, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn degree_three_invariant_respects_bound() {
        let basis = crate::moment_space::u2_invariant_basis(3).unwrap();
        // last element: the genuinely degree-3 invariant direction
        let w = basis.last().unwrap();
        for (q, r, s) in [(0.4, 0.9, 0.2), (0.15, 1.3, 0.8)] {
            let (lhs, bound) = invariant_polynomial_check(w, q, r, s, 3).unwrap();
            assert!(lhs <= bound + 1e-9, "lhs {lhs} bound {bound}");
            assert!(lhs < bound - 1e-4, "expected strict inequality: {lhs} vs {bound}");
        }
    }

    #[test]
    fn polynomial_symmetric_under_angle_permutation() {
        let w = omega2(2).unwrap();
        let (q, r, s) = (0.27, 0.81, 1.03);
        let (base, _) = invariant_polynomial_check(&w, q, r, s, 2).unwrap();
        for (a, b, c) in [(q, s, r), (r, q, s), (r, s, q), (s, q, r), (s, r, q)] {
            let (lhs, _) = invariant_polynomial_check(&w, a, b, c, 2).unwrap();
            assert_abs_diff_eq!(lhs, base, epsilon = 1e-12);
        }
    }

    #[test]
    fn non_invariant_omega_rejected() {
        let w = PauliString::new(vec![1, 0]).unwrap().normalized_ket().unwrap();
        assert!(matches!(
            invariant_polynomial_check(&w, 0.1, 0.2, 0.3, 2),
            Err(Error::NotInvariant { .. })
        ));
    }

    #[test]
    fn gap_table_small_chain() {
        let m = haar_local(2, BasisKind::Invariant);
        let rows = gap_prediction_vs_exact(&m, 1.2, &[2, 3, 8, 16], 200_000).unwrap();
        assert_abs_diff_eq!(rows[0].gap, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(rows[0].meanfield_prediction, 0.6, epsilon = 1e-12);
        // the n=3 gap happens to match a1/n exactly for the Haar average
        assert_abs_diff_eq!(rows[1].rel_dev, 0.0, epsilon = 1e-10);
        // the deviation crossover sits near n = 6; past it the agreement
        // improves monotonically
        assert!(rows[3].rel_dev < rows[2].rel_dev);
        for row in &rows {
            assert_eq!(row.unit_multiplicity, 2);
        }
    }

    #[test]
    fn excitation_positivity_for_universal_sets() {
        for dist in [GateDistribution::haar_u4(), GateDistribution::universal_demo()] {
            let m = build_local_moment_operator(&dist, 2, BasisKind::FullPauli, 0).unwrap();
            for sigma in Perm::all(2) {
                let e = excitation_matrix(&m, &sigma, ExcitationBand::Symmetric).unwrap();
                let (w, _) = e.eigen().unwrap();
                assert!(w[0] >= -1e-9, "negative excitation eigenvalue {}", w[0]);
            }
        }
    }
}
