//! Command-line surface: gap scans, mean-field reports, Monte Carlo
//! validation, the design-depth calculator, and the appendix self-test.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use momentgap::circuit_mc::validate_decay;
use momentgap::convergence::convergence_time_bound;
use momentgap::error::{Error, Result};
use momentgap::gate_averaging::{
    build_local_moment_operator, canonical_gate, pauli_transfer_matrix, BasisKind,
    GateDistribution, LocalMomentOperator,
};
use momentgap::mean_field::{
    gap_prediction_vs_exact, invariant_polynomial_check, leading_coefficient, omega2,
};
use momentgap::moment_space::u2_invariant_basis;
use momentgap::symmetric_sector::DEFAULT_DIM_CAP;

/// Environment variable overriding the symmetric-sector dimension cap.
const DIM_CAP_ENV: &str = "MOMENTGAP_DIM_CAP";

#[derive(Parser)]
#[command(
    name = "momentgap",
    version,
    about = "Spectral gaps of t-order moment superoperators for permutationally invariant random circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DistArg {
    /// Gate distribution: "haar-u4", "universal-demo", or a path to a gate-set
    /// JSON file.
    #[arg(long, default_value = "haar-u4")]
    dist: String,
}

impl DistArg {
    fn resolve(&self) -> Result<GateDistribution> {
        match self.dist.as_str() {
            "haar-u4" => Ok(GateDistribution::haar_u4()),
            "universal-demo" => Ok(GateDistribution::universal_demo()),
            path => GateDistribution::from_json_file(std::path::Path::new(path)),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Exact sector gaps over a range of chain lengths against the a1/n
    /// mean-field prediction; writes CSV data and a JSON provenance block.
    GapScan {
        #[arg(long, default_value_t = 2)]
        t: usize,
        /// Inclusive chain-length range "lo..hi" or a single value.
        #[arg(long, default_value = "4..30")]
        n: String,
        #[command(flatten)]
        dist: DistArg,
        /// Local basis for the sector: "invariant" (exact for locally
        /// invariant distributions) or "full".
        #[arg(long, default_value = "invariant")]
        basis: String,
        /// CSV output path; the JSON provenance goes to the same stem with a
        /// .json extension.
        #[arg(long, default_value = "gaps.csv")]
        out: PathBuf,
    },
    /// Holstein-Primakoff leading coefficient a1 with its witness operator.
    Meanfield {
        #[arg(long, default_value_t = 2)]
        t: usize,
        #[command(flatten)]
        dist: DistArg,
        /// Include the antisymmetric (direct-term-only) band in the minimum.
        #[arg(long)]
        include_antisymmetric: bool,
        /// Optional JSON output path (stdout otherwise).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo decay-rate estimate against lambda1 from diagonalization.
    McValidate {
        #[arg(long, default_value_t = 2)]
        t: usize,
        #[arg(long, default_value_t = 4)]
        n: usize,
        /// Inclusive depth range "lo..hi" or a single depth.
        #[arg(long, default_value = "1..14")]
        depths: String,
        #[arg(long, default_value_t = 20_000)]
        replicas: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[command(flatten)]
        dist: DistArg,
        /// Optional JSON output path (stdout otherwise).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Depth bound for an epsilon-approximate t-design.
    Bound {
        #[arg(long)]
        gap: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        t: usize,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
    },
    /// Appendix property suite: Pauli-transfer table, symmetric-polynomial
    /// bound on a (q,r,s) grid, and excitation positivity.
    InvariantsSelftest {
        /// Grid points per angle axis (the full grid is the cube of this).
        #[arg(long, default_value_t = 10)]
        grid: usize,
    },
}

fn parse_range(s: &str) -> Result<Vec<usize>> {
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad_range(s))?;
        let hi: usize = hi.trim().trim_start_matches('=').parse().map_err(|_| bad_range(s))?;
        if lo > hi {
            return Err(bad_range(s));
        }
        Ok((lo..=hi).collect())
    } else {
        Ok(vec![s.trim().parse().map_err(|_| bad_range(s))?])
    }
}

fn bad_range(s: &str) -> Error {
    Error::InvalidInput(format!("cannot parse range {s:?}; expected \"lo..hi\" or a single integer"))
}

fn dim_cap() -> Result<usize> {
    match std::env::var(DIM_CAP_ENV) {
        Ok(v) => v
            .parse()
            .map_err(|_| Error::InvalidInput(format!("{DIM_CAP_ENV}={v:?} is not an integer"))),
        Err(_) => Ok(DEFAULT_DIM_CAP),
    }
}

fn basis_kind(name: &str) -> Result<BasisKind> {
    match name {
        "invariant" => Ok(BasisKind::Invariant),
        "full" => Ok(BasisKind::FullPauli),
        other => Err(Error::InvalidInput(format!(
            "unknown basis {other:?}; expected \"invariant\" or \"full\""
        ))),
    }
}

/// 17 significant digits: round-trips f64 exactly.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn provenance(command: &str, params: serde_json::Value, seed: Option<u64>) -> serde_json::Value {
    json!({
        "command": command,
        "parameters": params,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
    })
}

fn write_json(path: Option<&PathBuf>, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

/// Local moment operator for the mean-field scan: full basis when dense caps
/// allow (t <= 3), invariant-restricted otherwise.
fn scan_operator(dist: &GateDistribution, t: usize) -> Result<LocalMomentOperator> {
    let kind = if t <= 3 { BasisKind::FullPauli } else { BasisKind::Invariant };
    build_local_moment_operator(dist, t, kind, 0)
}

fn run_gap_scan(t: usize, n: &str, dist: &DistArg, basis: &str, out: &PathBuf) -> Result<u8> {
    let dist = dist.resolve()?;
    let n_list = parse_range(n)?;
    let kind = basis_kind(basis)?;
    let cap = dim_cap()?;
    let a1 = leading_coefficient(&scan_operator(&dist, t)?, false)?;
    let m_local = build_local_moment_operator(&dist, t, kind, 0)?;
    let rows = gap_prediction_vs_exact(&m_local, a1.a1, &n_list, cap)?;

    let mut csv = String::from("n,dim,unit_multiplicity,lambda1,gap,meanfield_prediction,rel_dev\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n,
            r.dim,
            r.unit_multiplicity,
            fmt(r.lambda1),
            fmt(r.gap),
            fmt(r.meanfield_prediction),
            fmt(r.rel_dev)
        ));
    }
    std::fs::write(out, csv)?;
    let summary = provenance(
        "gap-scan",
        json!({
            "t": t, "n": n_list, "dist": dist.name(), "basis": basis,
            "cap": cap, "a1": a1.a1, "out": out,
        }),
        None,
    );
    write_json(Some(&out.with_extension("json")), &summary)?;
    eprintln!("wrote {} rows to {}", rows.len(), out.display());
    Ok(0)
}

fn run_meanfield(t: usize, dist: &DistArg, include_antisymmetric: bool, out: Option<&PathBuf>) -> Result<u8> {
    let dist = dist.resolve()?;
    let pred = leading_coefficient(&scan_operator(&dist, t)?, include_antisymmetric)?;
    if pred.non_universal {
        eprintln!("warning: a1 <= 1e-9; the distribution may be non-universal");
    }
    let report = json!({
        "provenance": provenance(
            "meanfield",
            json!({"t": t, "dist": dist.name(), "include_antisymmetric": include_antisymmetric}),
            None,
        ),
        "result": pred,
    });
    write_json(out, &report)?;
    Ok(0)
}

fn run_mc_validate(
    t: usize,
    n: usize,
    depths: &str,
    replicas: usize,
    seed: u64,
    dist: &DistArg,
    out: Option<&PathBuf>,
) -> Result<u8> {
    let dist = dist.resolve()?;
    let depths = parse_range(depths)?;
    let cap = dim_cap()?;
    // reference lambda1 from the symmetric sector
    let kind = if dist.is_haar() { BasisKind::Invariant } else { BasisKind::FullPauli };
    let m_local = build_local_moment_operator(&dist, t, kind, 0)?;
    let a1 = leading_coefficient(&scan_operator(&dist, t)?, false)?;
    let rows = gap_prediction_vs_exact(&m_local, a1.a1, &[n], cap)?;
    let reference = rows[0].lambda1;

    let v = validate_decay(&dist, t, n, &depths, replicas, seed, reference)?;
    let verdict = if v.estimate.consistent { "consistent" } else { "inconsistent" };
    let report = json!({
        "provenance": provenance(
            "mc-validate",
            json!({
                "t": t, "n": n, "depths": depths, "replicas": replicas,
                "dist": dist.name(), "reference_lambda1": reference,
            }),
            Some(seed),
        ),
        "result": serde_json::to_value(&v)?,
        "verdict": verdict,
    });
    write_json(out, &report)?;
    eprintln!(
        "fitted rate {} +- {} vs lambda1 {} -> {verdict}",
        v.estimate.rate, v.estimate.rate_stderr, reference
    );
    Ok(if v.estimate.consistent { 0 } else { 2 })
}

fn run_bound(gap: f64, n: usize, t: usize, epsilon: f64) -> Result<u8> {
    let b = convergence_time_bound(gap, n, t, epsilon)?;
    let report = json!({
        "provenance": provenance(
            "bound",
            json!({"gap": gap, "n": n, "t": t, "epsilon": epsilon}),
            None,
        ),
        "result": b,
    });
    write_json(None, &report)?;
    Ok(0)
}

/// Expected conjugation table of the two-qubit Pauli basis under
/// exp(i pi/4 s3 s3): (input pair, output pair, sign), pairs as (p, q) labels.
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

fn run_selftest(grid: usize) -> Result<u8> {
    let mut all_ok = true;
    let mut report = |name: &str, ok: bool, detail: String| {
        println!("{}: {} ({detail})", name, if ok { "pass" } else { "FAIL" });
        all_ok &= ok;
    };

    // (a) Pauli transfer of exp(i pi/4 s3 s3) against the hand-derived table
    let ptm = pauli_transfer_matrix(&canonical_gate(0.0, 0.0, std::f64::consts::FRAC_PI_4))?;
    let mut worst = 0.0f64;
    for ((p, q), (pp, qq), sign) in zz_quarter_table() {
        for row in 0..16 {
            let expect = if row == pp * 4 + qq { sign } else { 0.0 };
            worst = worst.max((ptm[[row, p * 4 + q]] - expect).abs());
        }
    }
    report("ptm-table", worst <= 1e-12, format!("max deviation {worst:.1e}"));

    // (b) symmetric-polynomial bound over the angle grid
    for t in [2usize, 3] {
        let basis = u2_invariant_basis(t)?;
        let w2 = omega2(t)?;
        let mut max_excess = f64::NEG_INFINITY;
        let mut max_eq_dev = 0.0f64;
        for iq in 0..grid {
            for ir in 0..grid {
                for is in 0..grid {
                    let f = std::f64::consts::FRAC_PI_2 / grid as f64;
                    let (q, r, s) = (iq as f64 * f, ir as f64 * f, is as f64 * f);
                    let (lhs, bound) = invariant_polynomial_check(&w2, q, r, s, t)?;
                    max_eq_dev = max_eq_dev.max((lhs - bound).abs());
                    for w in basis.iter().skip(1) {
                        let (lhs, bound) = invariant_polynomial_check(w, q, r, s, t)?;
                        max_excess = max_excess.max(lhs - bound);
                    }
                }
            }
        }
        report(
            &format!("polynomial-bound-t{t}"),
            max_excess <= 1e-9,
            format!("max excess {max_excess:.1e} over {} points", grid.pow(3)),
        );
        report(
            &format!("omega2-equality-t{t}"),
            max_eq_dev <= 1e-10,
            format!("max |lhs - bound| {max_eq_dev:.1e}"),
        );
    }

    // (c) excitation positivity for the shipped universal distributions
    for dist in [GateDistribution::haar_u4(), GateDistribution::universal_demo()] {
        let pred = leading_coefficient(&scan_operator(&dist, 2)?, false)?;
        report(
            &format!("a1-positive-{}", dist.name()),
            pred.a1 > 1e-9,
            format!("a1 = {}", pred.a1),
        );
    }

    // design-depth worked example
    let b = convergence_time_bound(0.12, 10, 2, 1e-3)?;
    report("depth-bound-example", b.headline == 174, format!("headline {}", b.headline));

    Ok(if all_ok { 0 } else { 2 })
}

fn run(cli: Cli) -> Result<u8> {
    match &cli.command {
        Command::GapScan { t, n, dist, basis, out } => run_gap_scan(*t, n, dist, basis, out),
        Command::Meanfield { t, dist, include_antisymmetric, out } => {
            run_meanfield(*t, dist, *include_antisymmetric, out.as_ref())
        }
        Command::McValidate { t, n, depths, replicas, seed, dist, out } => {
            run_mc_validate(*t, *n, depths, *replicas, *seed, dist, out.as_ref())
        }
        Command::Bound { gap, n, t, epsilon } => run_bound(*gap, *n, *t, *epsilon),
        Command::InvariantsSelftest { grid } => run_selftest(*grid),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            ExitCode::from(1)
        }
    }
}
