//! Monte Carlo cross-validation of the exact spectral gap: sample random
//! two-qubit-gate circuits, estimate moment correlators by copy
//! factorization, and fit the empirical decay rate.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gate_averaging::GateDistribution;
use crate::moment_space::Perm;

/// Statevector path is dense in 2^n; keep n small.
pub const MAX_QUBITS: usize = 6;
/// Depths enter the fit only when |signal| exceeds this many standard errors.
pub const SIGNAL_FILTER: f64 = 5.0;
/// Minimum usable depths for a decay fit.
pub const MIN_FIT_DEPTHS: usize = 4;

fn c64(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Haar-random unitary on U(dim): modified Gram-Schmidt on a complex Gaussian
/// matrix. MGS produces the unique QR factor with real positive R diagonal,
/// so Q is exactly Haar distributed.
pub fn haar_unitary<R: Rng>(dim: usize, rng: &mut R) -> Array2<C64> {
    let mut q = Array2::<C64>::zeros((dim, dim));
    for v in q.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v = C64::new(re, im);
    }
    for j in 0..dim {
        for k in 0..j {
            let col_k = q.column(k).to_owned();
            let ov: C64 = col_k.iter().zip(q.column(j).iter()).map(|(a, b)| a.conj() * b).sum();
            for i in 0..dim {
                let sub = ov * col_k[i];
                q[[i, j]] -= sub;
            }
        }
        let norm: f64 = q.column(j).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        for i in 0..dim {
            q[[i, j]] = q[[i, j]] / norm;
        }
    }
    q
}

// ---------------------------------------------------------------------------
// Circuit sampling
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CircuitStep {
    /// Qubit pair (i, j) with i < j.
    pub pair: (usize, usize),
    /// Two-qubit gate on that pair, qubit i as the first tensor factor.
    pub gate: Array2<C64>,
}

#[derive(Debug, Clone)]
pub struct CircuitSample {
    pub n: usize,
    pub steps: Vec<CircuitStep>,
    /// Seed that produced this sample.
    pub provenance_id: u64,
}

fn sample_steps<R: Rng>(n: usize, k: usize, dist: &GateDistribution, rng: &mut R) -> Vec<CircuitStep> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let chooser = match dist {
        GateDistribution::FiniteSet { weights, .. } => Some(WeightedIndex::new(weights).unwrap()),
        GateDistribution::HaarU4 => None,
    };
    (0..k)
        .map(|_| {
            let pair = pairs[rng.gen_range(0..pairs.len())];
            let gate = match dist {
                GateDistribution::HaarU4 => haar_unitary(4, rng),
                GateDistribution::FiniteSet { gates, .. } => {
                    gates[chooser.as_ref().unwrap().sample(rng)].clone()
                }
            };
            CircuitStep { pair, gate }
        })
        .collect()
}

/// Depth-k circuit on n qubits with uniformly random pairs and gates from
/// `dist`; deterministic for a fixed seed.
pub fn sample_circuit(n: usize, k: usize, dist: &GateDistribution, seed: u64) -> Result<CircuitSample> {
    if n < 2 {
        return Err(Error::InvalidInput("need at least two qubits".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(CircuitSample { n, steps: sample_steps(n, k, dist, &mut rng), provenance_id: seed })
}

/// Left-multiply the dense n-qubit matrix `u` by a two-qubit gate acting on
/// qubits (i, j), i < j, qubit 0 carrying the most significant bit.
pub fn apply_two_qubit_gate_left(u: &mut Array2<C64>, gate: &Array2<C64>, i: usize, j: usize, n: usize) {
    let dim = 1usize << n;
    debug_assert_eq!(u.dim(), (dim, dim));
    let bi = n - 1 - i;
    let bj = n - 1 - j;
    let (mi, mj) = (1usize << bi, 1usize << bj);
    for col in 0..dim {
        for base in 0..dim {
            if base & mi != 0 || base & mj != 0 {
                continue;
            }
            let idx = [base, base | mj, base | mi, base | mi | mj];
            let old: Vec<C64> = idx.iter().map(|&r| u[[r, col]]).collect();
            for a in 0..4 {
                let mut acc = c64(0.0);
                for b in 0..4 {
                    acc += gate[[a, b]] * old[b];
                }
                u[[idx[a], col]] = acc;
            }
        }
    }
}

/// Dense unitary realized by a circuit sample.
pub fn circuit_unitary(sample: &CircuitSample) -> Array2<C64> {
    let dim = 1usize << sample.n;
    let mut u = Array2::<C64>::eye(dim);
    for step in &sample.steps {
        apply_two_qubit_gate_left(&mut u, &step.gate, step.pair.0, step.pair.1, sample.n);
    }
    u
}

// ---------------------------------------------------------------------------
// Test operators
// ---------------------------------------------------------------------------

/// t-copy test operator written as a sum of copy products,
/// A = sum_a coeff_a (x)_c F_{a,c}, so every correlator reduces to single-copy
/// traces of the factors.
#[derive(Debug, Clone)]
pub struct TestOperator {
    t: usize,
    /// (coefficient, per-copy n-qubit factors of length t)
    terms: Vec<(C64, Vec<Array2<C64>>)>,
}

impl TestOperator {
    /// Single product term with unit coefficient; one factor per copy.
    pub fn product(factors: Vec<Array2<C64>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidInput("need at least one copy".into()));
        }
        let t = factors.len();
        Ok(TestOperator { t, terms: vec![(c64(1.0), factors)] })
    }

    /// Site-collective Pauli sum: A = N sum_{i,P in {X,Y,Z}} (P_i)^{(x)t}
    /// with P_i the Hilbert-Schmidt-normalized single-site Pauli. After the
    /// fixed-point component is removed this concentrates almost all weight
    /// on the slowest decay mode, unlike a single-site product.
    pub fn collective_pauli(n: usize, t: usize) -> Result<Self> {
        if n < 1 || t < 1 {
            return Err(Error::InvalidInput("need n >= 1, t >= 1".into()));
        }
        let hs_norm = (1u64 << n) as f64;
        let coeff = c64(1.0 / ((3 * n) as f64).sqrt());
        let mut terms = Vec::with_capacity(3 * n);
        for site in 0..n {
            for p in 1..4usize {
                let mut m = if site == 0 {
                    crate::moment_space::pauli(p)
                } else {
                    crate::moment_space::pauli(0)
                };
                for q in 1..n {
                    let f = if q == site {
                        crate::moment_space::pauli(p)
                    } else {
                        crate::moment_space::pauli(0)
                    };
                    m = crate::moment_space::kron(&m, &f);
                }
                let factor = m.mapv(|x| x / c64(hs_norm.sqrt()));
                terms.push((coeff, vec![factor; t]));
            }
        }
        Ok(TestOperator { t, terms })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn terms(&self) -> &[(C64, Vec<Array2<C64>>)] {
        &self.terms
    }

    fn dim(&self) -> usize {
        self.terms[0].1[0].dim().0
    }

    /// Hilbert-Schmidt norm from the term Gram matrix.
    pub fn norm(&self) -> f64 {
        let mut acc = c64(0.0);
        for (ca, fa) in &self.terms {
            for (cb, fb) in &self.terms {
                let mut ov = c64(1.0);
                for (x, y) in fa.iter().zip(fb.iter()) {
                    // tr(Y^dag X)
                    let tr: C64 = y.iter().zip(x.iter()).map(|(u, v)| u.conj() * v).sum();
                    ov *= tr;
                }
                acc += cb.conj() * ca * ov;
            }
        }
        acc.re.max(0.0).sqrt()
    }
}

fn check_operators(n: usize, a: &TestOperator, b: &TestOperator) -> Result<()> {
    if n > MAX_QUBITS {
        return Err(Error::CapExceeded { dim: 1 << n, cap: 1 << MAX_QUBITS });
    }
    if a.t != b.t {
        return Err(Error::BasisMismatch { expected: a.t, got: b.t });
    }
    let dim = 1usize << n;
    for op in [a, b] {
        if op.dim() != dim {
            return Err(Error::BasisMismatch { expected: dim, got: op.dim() });
        }
        let norm = op.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Unnormalized { norm });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Correlators
// ---------------------------------------------------------------------------

/// Single-circuit correlator <<B|U^{(x)t,t}|A>>: copy factorization gives
/// sum_{a,b} conj(beta_b) alpha_a Prod_c tr(B_{b,c}^dag U A_{a,c} U^dag),
/// so only one 2^n circuit is ever simulated.
pub fn circuit_correlator(u: &Array2<C64>, a: &TestOperator, b: &TestOperator) -> C64 {
    let udag = u.t().mapv(|x| x.conj());
    // conjugated a-factors, computed once per (term, copy)
    let conj_a: Vec<Vec<Array2<C64>>> = a
        .terms
        .iter()
        .map(|(_, fs)| fs.iter().map(|f| u.dot(f).dot(&udag)).collect())
        .collect();
    let mut out = c64(0.0);
    for (bi, (cb, fb)) in b.terms.iter().enumerate() {
        let _ = bi;
        for (ai, (ca, _)) in a.terms.iter().enumerate() {
            let mut prod = c64(1.0);
            for (bc, ac) in fb.iter().zip(conj_a[ai].iter()) {
                // tr(B^dag X) = sum_ij conj(B[i,j]) X[i,j]
                let tr: C64 = bc.iter().zip(ac.iter()).map(|(x, y)| x.conj() * y).sum();
                prod *= tr;
                if prod.norm() == 0.0 {
                    break;
                }
            }
            out += cb.conj() * ca * prod;
        }
    }
    out
}

/// Pairwise (cascade) summation: deterministic for a fixed order and more
/// accurate than sequential accumulation.
fn pairwise_sum(values: &[C64]) -> C64 {
    match values.len() {
        0 => c64(0.0),
        1 => values[0],
        len => {
            let mid = len / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Mean and standard error of the depth-k moment correlator over independent
/// circuit replicas. Replica r uses the master seed with RNG stream r, so the
/// estimate is deterministic and replicas stay independent.
pub fn moment_correlator(
    n: usize,
    a: &TestOperator,
    b: &TestOperator,
    k: usize,
    replicas: usize,
    dist: &GateDistribution,
    seed: u64,
) -> Result<(C64, f64)> {
    check_operators(n, a, b)?;
    if replicas == 0 {
        return Err(Error::InvalidInput("need at least one replica".into()));
    }
    let values: Vec<C64> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r);
            let steps = sample_steps(n, k, dist, &mut rng);
            let sample = CircuitSample { n, steps, provenance_id: seed };
            let u = circuit_unitary(&sample);
            circuit_correlator(&u, a, b)
        })
        .collect();
    let mean = pairwise_sum(&values) / c64(replicas as f64);
    let var: f64 = if replicas > 1 {
        values.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (replicas as f64 - 1.0)
    } else {
        0.0
    };
    let stderr = (var / replicas as f64).sqrt();
    Ok((mean, stderr))
}

fn product_fixed_point_overlap(
    big_n: f64,
    perms: &[Perm],
    ginv: &Array2<f64>,
    a_factors: &[Array2<C64>],
    b_factors: &[Array2<C64>],
) -> C64 {
    let _ = big_n;
    let oa: Vec<C64> = perms
        .iter()
        .map(|s| crate::moment_space::cycle_trace(s, a_factors))
        .collect();
    let ob: Vec<C64> = perms
        .iter()
        .map(|s| crate::moment_space::cycle_trace(s, b_factors))
        .collect();
    let p = perms.len();
    let mut out = c64(0.0);
    for i in 0..p {
        for j in 0..p {
            out += ob[i].conj() * c64(ginv[[i, j]]) * oa[j];
        }
    }
    out
}

/// Exact overlap <<B|P_V|A>> with the fixed-point space spanned by the t-copy
/// permutation operators of the full 2^n space, via the integer Gram matrix
/// N^{cycles} and cycle-factorized traces; multilinear over the operator
/// terms.
pub fn fixed_point_overlap(n: usize, a: &TestOperator, b: &TestOperator) -> Result<C64> {
    check_operators(n, a, b)?;
    let t = a.t;
    let big_n = (1usize << n) as f64;
    let perms = Perm::all(t);
    let p = perms.len();
    let mut gram = Array2::<f64>::zeros((p, p));
    for (i, s) in perms.iter().enumerate() {
        for (j, u) in perms.iter().enumerate() {
            gram[[i, j]] = big_n.powi(s.inverse().compose(u).cycle_count() as i32);
        }
    }
    let ginv = ndarray_linalg::Inverse::inv(&gram)
        .map_err(|_| Error::GramSingular { t, local_dim: 1 << n })?;
    let mut out = c64(0.0);
    for (cb, fb) in &b.terms {
        for (ca, fa) in &a.terms {
            out += cb.conj() * ca * product_fixed_point_overlap(big_n, &perms, &ginv, fa, fb);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Decay-rate fit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, serde::Serialize)]
pub struct DecayEstimate {
    pub depths: Vec<usize>,
    /// Deflated signal magnitude per depth.
    pub signals: Vec<f64>,
    pub stderrs: Vec<f64>,
    /// Which depths passed the signal filter and entered the fit.
    pub used: Vec<bool>,
    /// Fitted decay rate per step (the estimate of lambda1).
    pub rate: f64,
    pub rate_stderr: f64,
    /// 95% confidence interval for the rate.
    pub ci: (f64, f64),
    /// Reference lambda1 = 1 - gap from exact diagonalization.
    pub reference: f64,
    /// True when |rate - reference| <= max(3 sigma, 10% relative).
    pub consistent: bool,
}

/// Weighted least squares of log signal against depth. Depths with signal
/// below `SIGNAL_FILTER` standard errors are dropped; at least
/// `MIN_FIT_DEPTHS` must survive.
pub fn fit_decay_rate(
    depths: &[usize],
    signals: &[f64],
    stderrs: &[f64],
    reference: f64,
) -> Result<DecayEstimate> {
    if depths.len() != signals.len() || depths.len() != stderrs.len() {
        return Err(Error::BasisMismatch { expected: depths.len(), got: signals.len() });
    }
    let used: Vec<bool> = signals
        .iter()
        .zip(stderrs.iter())
        .map(|(&s, &e)| s > 0.0 && s > SIGNAL_FILTER * e)
        .collect();
    let n_used = used.iter().filter(|&&u| u).count();
    if n_used < MIN_FIT_DEPTHS {
        return Err(Error::InsufficientSignal { needed: MIN_FIT_DEPTHS, found: n_used });
    }

    // y = ln s, sigma_y = stderr / s; fit y = a + b k
    let (mut sw, mut swx, mut swy, mut swxx, mut swxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&k, &s), (&e, &u)) in depths
        .iter()
        .zip(signals.iter())
        .zip(stderrs.iter().zip(used.iter()))
    {
        if !u {
            continue;
        }
        let sigma_y = if e > 0.0 { e / s } else { 1e-12 };
        let w = 1.0 / (sigma_y * sigma_y);
        let (x, y) = (k as f64, s.ln());
        sw += w;
        swx += w * x;
        swy += w * y;
        swxx += w * x * x;
        swxy += w * x * y;
    }
    let det = sw * swxx - swx * swx;
    if det <= 0.0 {
        return Err(Error::InvalidInput("degenerate depth grid".into()));
    }
    let slope = (sw * swxy - swx * swy) / det;
    let slope_var = sw / det;
    let rate = slope.exp();
    let rate_stderr = rate * slope_var.sqrt();
    let ci = (rate - 1.96 * rate_stderr, rate + 1.96 * rate_stderr);
    let tol = (3.0 * rate_stderr).max(0.1 * reference.abs());
    let consistent = (rate - reference).abs() <= tol;
    Ok(DecayEstimate {
        depths: depths.to_vec(),
        signals: signals.to_vec(),
        stderrs: stderrs.to_vec(),
        used,
        rate,
        rate_stderr,
        ci,
        reference,
        consistent,
    })
}

// ---------------------------------------------------------------------------
// End-to-end validation pipeline
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, serde::Serialize)]
pub struct ValidationRow {
    pub depth: usize,
    pub mean_re: f64,
    pub mean_im: f64,
    pub stderr: f64,
    pub deflated_abs: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct McValidation {
    pub n: usize,
    pub t: usize,
    pub replicas: usize,
    pub seed: u64,
    pub baseline_re: f64,
    pub baseline_im: f64,
    pub rows: Vec<ValidationRow>,
    pub estimate: DecayEstimate,
}

/// Estimate the moment-correlator decay over a depth grid and compare the
/// fitted rate against the reference lambda1. Every unitary fixes the
/// permutation space V_t exactly, so the exact <<B|P_V|A>> baseline can be
/// subtracted per depth rather than orthogonalizing the test operator.
pub fn validate_decay(
    dist: &GateDistribution,
    t: usize,
    n: usize,
    depths: &[usize],
    replicas: usize,
    seed: u64,
    reference_lambda1: f64,
) -> Result<McValidation> {
    let a = TestOperator::collective_pauli(n, t)?;
    let baseline = fixed_point_overlap(n, &a, &a)?;
    let mut rows = Vec::with_capacity(depths.len());
    let mut signals = Vec::with_capacity(depths.len());
    let mut stderrs = Vec::with_capacity(depths.len());
    for (i, &k) in depths.iter().enumerate() {
        let (mean, stderr) =
            moment_correlator(n, &a, &a, k, replicas, dist, seed.wrapping_add(i as u64))?;
        let deflated = (mean - baseline).norm();
        rows.push(ValidationRow {
            depth: k,
            mean_re: mean.re,
            mean_im: mean.im,
            stderr,
            deflated_abs: deflated,
        });
        signals.push(deflated);
        stderrs.push(stderr);
    }
    let estimate = fit_decay_rate(depths, &signals, &stderrs, reference_lambda1)?;
    Ok(McValidation {
        n,
        t,
        replicas,
        seed,
        baseline_re: baseline.re,
        baseline_im: baseline.im,
        rows,
        estimate,
    })
}
