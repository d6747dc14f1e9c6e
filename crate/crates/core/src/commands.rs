//! Command implementations behind the `bcast` binary.

use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use num_rational::BigRational;
use serde::Serialize;

use crate::approx::approximate_detbcc;
use crate::channel::{ChannelTable, DEFAULT_TENSOR_CAP};
use crate::error::{Error, Result};
use crate::exact::{solve_dqg, solve_joint, solve_ns_dec, solve_sum, Witness};
use crate::graph::DEFAULT_ENUMERATION_CAP;
use crate::hardness::{
    build_instance, chernoff_bound, optimal_welfare, poisson_concavity_ratio, run_query_experiment, AdaptiveBisection,
    FixedList, QueryLog, RandomFixedSize, Singletons, Strategy, WelfareMode, Which,
};
use crate::io::LoadedChannel;
use crate::lp::{build_ns, build_ns_full, extract_ns_solution, lp_solve, to_lp_format, Objective, DEFAULT_FULL_NS_CAP};
use crate::report::Report;
use crate::scalar::Scalar;

/// Default tolerance for cross-inequality checks.
pub const DEFAULT_CHECK_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveWhich {
    Joint,
    Sum,
    Ns,
    NsSum,
    NsDec,
    All,
}

impl FromStr for SolveWhich {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "joint" => SolveWhich::Joint,
            "sum" => SolveWhich::Sum,
            "ns" => SolveWhich::Ns,
            "ns-sum" => SolveWhich::NsSum,
            "ns-dec" => SolveWhich::NsDec,
            "all" => SolveWhich::All,
            _ => return Err(Error::BadParameters(format!("unknown solver {s:?}"))),
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub cap: u128,
    pub tol: f64,
    /// Solve in exact rational arithmetic.
    pub exact: bool,
    /// Re-check the non-signaling solutions against every constraint family.
    pub verify: bool,
    /// Also solve the full non-signaling program (tiny instances only).
    pub full_ns: bool,
    pub timings: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            cap: DEFAULT_ENUMERATION_CAP,
            tol: DEFAULT_CHECK_TOL,
            exact: false,
            verify: false,
            full_ns: false,
            timings: false,
        }
    }
}

struct Quantities<'a> {
    report: &'a mut Report,
    exact: bool,
    timings: bool,
}

impl Quantities<'_> {
    fn record<T: Scalar>(&mut self, name: &str, value: &T, started: Instant) {
        self.report.quantity(name, value.to_f64_value());
        if self.exact {
            self.report.exact_quantities.insert(name.into(), value.to_string());
        }
        if self.timings {
            self.report.timing(name, started.elapsed().as_secs_f64() * 1e3);
        }
    }
}

fn solve_ns_value<T: Scalar>(
    w: &ChannelTable<T>,
    k1: usize,
    k2: usize,
    objective: Objective,
    verify: bool,
) -> Result<T> {
    let sol = lp_solve(&build_ns(w, k1, k2, objective)?)?.require_optimal()?;
    if verify {
        extract_ns_solution(w, k1, k2, &sol)?;
    }
    Ok(sol.value)
}

fn solve_into<T: Scalar>(
    w: &ChannelTable<T>,
    k1: usize,
    k2: usize,
    which: SolveWhich,
    opts: &SolveOptions,
    report: &mut Report,
) -> Result<()> {
    let want = |s: SolveWhich| which == s || which == SolveWhich::All;
    let mut q = Quantities { report, exact: opts.exact, timings: opts.timings };
    if want(SolveWhich::Joint) {
        let t = Instant::now();
        let r = solve_joint(w, k1, k2, opts.cap)?;
        q.record("S", &r.value, t);
        if let Some(wit) = r.witness {
            q.report.witness("S", wit);
        }
    }
    if want(SolveWhich::Sum) {
        let t = Instant::now();
        let r = solve_sum(w, k1, k2, opts.cap)?;
        q.record("S_sum", &r.value, t);
        if let Some(wit) = r.witness {
            q.report.witness("S_sum", wit);
        }
    }
    if want(SolveWhich::Ns) {
        let t = Instant::now();
        let v = solve_ns_value(w, k1, k2, Objective::Joint, opts.verify)?;
        q.record("S_NS", &v, t);
    }
    if want(SolveWhich::NsSum) {
        let t = Instant::now();
        let v = solve_ns_value(w, k1, k2, Objective::Sum, opts.verify)?;
        q.record("S_NS_sum", &v, t);
    }
    if want(SolveWhich::NsDec) {
        let t = Instant::now();
        let r = solve_ns_dec(w, k1, k2, Objective::Joint, opts.cap)?;
        q.record("S_NS_dec", &r.value, t);
        if let Some(wit) = r.witness {
            q.report.witness("S_NS_dec", wit);
        }
    }
    if which == SolveWhich::All {
        let t = Instant::now();
        let r = solve_ns_dec(w, k1, k2, Objective::Sum, opts.cap)?;
        q.record("S_NS_dec_sum", &r.value, t);
    }
    if opts.full_ns && (want(SolveWhich::Ns) || want(SolveWhich::NsSum)) {
        for (objective, name) in [(Objective::Joint, "S_NS_full"), (Objective::Sum, "S_NS_sum_full")] {
            if (objective == Objective::Joint && !want(SolveWhich::Ns))
                || (objective == Objective::Sum && !want(SolveWhich::NsSum))
            {
                continue;
            }
            let t = Instant::now();
            let model = build_ns_full(w, k1, k2, objective, DEFAULT_FULL_NS_CAP)?;
            let v = lp_solve(&model)?.require_optimal()?.value;
            q.record(name, &v, t);
        }
    }
    Ok(())
}

/// `(1 − k^k e^{−k}/k!)(1 − (1 − 1/l1)^k1)(1 − (1 − 1/l2)^k2)`.
pub fn rounding_factor(k1: usize, k2: usize, l1: usize, l2: usize) -> Result<f64> {
    if l1 == 0 || l2 == 0 {
        return Err(Error::BadParameters("message counts must be at least 1".into()));
    }
    let c = poisson_concavity_ratio(k1)?;
    let f = |l: usize, k: usize| 1.0 - (1.0 - 1.0 / l as f64).powi(k as i32);
    Ok(c * f(l1, k1) * f(l2, k2))
}

/// `min(k1 k2, Σ_{y1} min(k2, deg y1)) / (k1 k2)` for a deterministic channel.
pub fn ns_degree_bound(g: &crate::graph::BipartiteGraph, k1: usize, k2: usize) -> f64 {
    let s: usize = (0..g.left_size()).map(|v| g.left_degree(v).min(k2)).sum();
    s.min(k1 * k2) as f64 / (k1 * k2) as f64
}

fn add_checks(report: &mut Report, channel: &LoadedChannel, k1: usize, k2: usize, tol: f64) -> Result<()> {
    if let (Some(s), Some(ss)) = (report.get("S"), report.get("S_sum")) {
        let claim = "error sandwich: 1 - S_sum <= 1 - S <= 2 (1 - S_sum)";
        report.check_values(claim, "1-S_sum", 1.0 - ss, "<=", "1-S", 1.0 - s, tol);
        report.check_values(claim, "1-S", 1.0 - s, "<=", "2(1-S_sum)", 2.0 * (1.0 - ss), tol);
    }
    let relax = "non-signaling relaxation: S <= S_NS_dec <= S_NS";
    report.check_le(relax, "S", "S_NS_dec", tol);
    report.check_le(relax, "S_NS_dec", "S_NS", tol);
    report.check_le(relax, "S", "S_NS", tol);
    report.check_le("non-signaling relaxation: S_sum <= S_NS_sum", "S_sum", "S_NS_sum", tol);
    report.check_eq("decoder-side program is exact for the sum objective", "S_NS_dec_sum", "S_sum", tol);
    if let (Some(ns), Some(nss)) = (report.get("S_NS"), report.get("S_NS_sum")) {
        let claim = "non-signaling sandwich: 2 S_NS_sum - 1 <= S_NS <= S_NS_sum";
        report.check_values(claim, "2S_NS_sum-1", 2.0 * nss - 1.0, "<=", "S_NS", ns, tol);
        report.check_values(claim, "S_NS", ns, "<=", "S_NS_sum", nss, tol);
    }
    report.check_eq("compact and full non-signaling programs agree", "S_NS", "S_NS_full", tol);
    report.check_eq("compact and full non-signaling programs agree", "S_NS_sum", "S_NS_sum_full", tol);
    if let Some(d) = channel.deterministic() {
        let g = d.graph();
        if let Some(s) = report.get("S") {
            let r = solve_dqg(&g, k1, k2, DEFAULT_ENUMERATION_CAP)?;
            report.quantity("DQG", r.value as f64);
            report.quantity("k1k2_S", (k1 * k2) as f64 * s);
            report.check_eq("densest quotient graph equals k1 k2 S", "k1k2_S", "DQG", tol);
        }
        if let Some(ns) = report.get("S_NS") {
            let bound = ns_degree_bound(&g, k1, k2);
            report.quantity("NS_degree_bound", bound);
            report.check_le("non-signaling degree bound", "S_NS", "NS_degree_bound", tol);
            if report.get("S").is_some() {
                report.quantity("NS_rounding_lower", rounding_factor(k1, k2, k1, k2)? * ns);
                report.check_le("non-signaling rounding lower bound", "NS_rounding_lower", "S", tol);
            }
        }
    }
    Ok(())
}

fn solve_report(
    channel: &LoadedChannel,
    k1: usize,
    k2: usize,
    which: SolveWhich,
    opts: &SolveOptions,
) -> Result<Report> {
    let mut report = Report::new("solve", if opts.exact { "exact-rational" } else { "f64" });
    let (nx, n1, n2) = channel.sizes();
    report.param("k1", k1);
    report.param("k2", k2);
    report.param("which", which);
    report.param("sizes", [nx, n1, n2]);
    report.param("cap", opts.cap.to_string());
    report.tolerance("check", opts.tol);
    report.tolerance("lp", if opts.exact { 0.0 } else { f64::tolerance() });
    let w = channel.table();
    if opts.exact {
        solve_into(&w.cast::<BigRational>(), k1, k2, which, opts, &mut report)?;
    } else {
        solve_into(&w, k1, k2, which, opts, &mut report)?;
    }
    add_checks(&mut report, channel, k1, k2, opts.tol)?;
    Ok(report)
}

pub fn cmd_solve(
    channel: &LoadedChannel,
    k1: usize,
    k2: usize,
    which: SolveWhich,
    opts: &SolveOptions,
) -> Result<Report> {
    solve_report(channel, k1, k2, which, opts)
}

/// Quantities of the `n`-fold tensor power.
pub fn cmd_tensor(
    channel: &LoadedChannel,
    n: usize,
    k1: usize,
    k2: usize,
    which: SolveWhich,
    opts: &SolveOptions,
) -> Result<Report> {
    let power = match channel {
        LoadedChannel::Deterministic(d) => {
            LoadedChannel::Deterministic(d.to_table::<f64>().tensor_power(n, DEFAULT_TENSOR_CAP)?.to_deterministic()?)
        }
        LoadedChannel::Dense(w) => LoadedChannel::Dense(w.tensor_power(n, DEFAULT_TENSOR_CAP)?),
    };
    let mut report = solve_report(&power, k1, k2, which, opts)?;
    report.command = "tensor".into();
    report.param("n", n);
    Ok(report)
}

pub fn cmd_approx(channel: &LoadedChannel, k1: usize, k2: usize, seed: u64, samples: usize) -> Result<Report> {
    let d = channel
        .deterministic()
        .ok_or_else(|| Error::Validation("approximation needs a deterministic channel".into()))?;
    let a = approximate_detbcc(&d, k1, k2, seed, samples)?;
    let mut report = Report::new("approx", "greedy-welfare+derandomized-rounding");
    report.param("k1", k1);
    report.param("k2", k2);
    report.param("samples", samples);
    report.provenance.seed = Some(seed);
    let r = &a.result;
    report.quantity("approx_edges", r.value as f64);
    report.quantity("approx_success", a.success);
    report.quantity("upper_bound", r.upper_bound as f64);
    report.quantity("ratio_certificate", r.ratio_certificate);
    report.quantity("welfare", r.welfare as f64);
    report.quantity("expected_edges", r.expected_edges);
    report.quantity("derandomized_edges", r.derandomized_value as f64);
    report.tolerance("check", DEFAULT_CHECK_TOL);
    report.check_le("approximation never exceeds its upper bound", "approx_edges", "upper_bound", 0.0);
    report.check_le("derandomization meets the expectation", "expected_edges", "derandomized_edges", DEFAULT_CHECK_TOL);
    report.check_le("best candidate is at least the derandomized one", "derandomized_edges", "approx_edges", 0.0);
    report.witness("code", Witness::Code(a.code.clone()));
    report.witness("partitions", Witness::Partitions { p1: r.p1.clone(), p2: r.p2.clone() });
    Ok(report)
}

/// Query strategy names: `singletons`, `random[:SIZE]`,
/// `bisection`, or `list:PATH` (a JSON array of subsets).
pub fn parse_strategy(name_arg: &str, m: usize, seed: u64) -> Result<Box<dyn Strategy>> {
    let (name, arg) = name_arg.split_once(':').map_or((name_arg, None), |(a, b)| (a, Some(b)));
    Ok(match name {
        "singletons" => Box::new(Singletons::default()),
        "random" => {
            let size = match arg {
                Some(s) => s.parse().map_err(|_| Error::BadParameters(format!("bad subset size {s:?}")))?,
                None => (m as f64).sqrt().round() as usize,
            };
            Box::new(RandomFixedSize::new(size, seed))
        }
        "bisection" => Box::new(AdaptiveBisection::new(seed)),
        "list" => {
            let path = arg.ok_or_else(|| Error::BadParameters("list strategy needs a path".into()))?;
            let text = std::fs::read_to_string(Path::new(path)).map_err(|e| Error::Io(format!("{path}: {e}")))?;
            let queries: Vec<Vec<usize>> = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
            Box::new(FixedList::new(format!("list:{path}"), queries))
        }
        _ => return Err(Error::BadParameters(format!("unknown strategy {name_arg:?}"))),
    })
}

/// Largest `k1` for which the report includes exhaustive welfare.
pub const EXHAUSTIVE_WELFARE_MAX_K1: usize = 3;

pub fn cmd_hardness(k1: usize, delta: f64, seed: u64, strategy: &str, budget: usize) -> Result<(Report, QueryLog)> {
    let inst = build_instance(k1, delta, seed)?;
    let mut strat = parse_strategy(strategy, inst.m, seed)?;
    let log = run_query_experiment(&inst, strat.as_mut(), budget)?;
    let mut report = Report::new("hardness", "value-oracle");
    report.param("k1", k1);
    report.param("delta", delta);
    report.param("strategy", strategy);
    report.param("budget", budget);
    report.provenance.seed = Some(seed);
    report.quantity("m", inst.m as f64);
    report.quantity("a", inst.a());
    report.quantity("b", inst.b());
    report.quantity("C", inst.c);
    report.quantity("p_leak", inst.p_leak());
    report.quantity("poisson_ratio", poisson_concavity_ratio(k1)?);
    report.quantity("chernoff_half", chernoff_bound(1.0 / k1 as f64, inst.m, 0.5)?);
    report.quantity("welfare_planted", optimal_welfare(&inst, Which::Planted, WelfareMode::ClosedForm)?);
    report.quantity("welfare_alternate", optimal_welfare(&inst, Which::Alternate, WelfareMode::ClosedForm)?);
    if k1 <= EXHAUSTIVE_WELFARE_MAX_K1 {
        let mode = WelfareMode::Exhaustive { cap: DEFAULT_ENUMERATION_CAP };
        report.quantity("welfare_planted_exhaustive", optimal_welfare(&inst, Which::Planted, mode)?);
        report.quantity("welfare_alternate_exhaustive", optimal_welfare(&inst, Which::Alternate, mode)?);
        report.check_eq(
            "alternate welfare closed form is optimal",
            "welfare_alternate",
            "welfare_alternate_exhaustive",
            1e-9,
        );
        report.check_le("planted partition is feasible", "welfare_planted", "welfare_planted_exhaustive", 1e-9);
    }
    report.quantity("queries", log.queries.len() as f64);
    report.quantity("distinguished", if log.distinguished_at.is_some() { 1.0 } else { 0.0 });
    report.witness("blocks", &inst.blocks);
    if let Some(i) = log.distinguished_at {
        report.witness("distinguishing_query", &log.queries[i].subset);
    }
    report.tolerance("welfare", 1e-9);
    Ok((report, log))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpForm {
    Compact,
    Full,
}

pub fn export_lp(channel: &LoadedChannel, k1: usize, k2: usize, objective: Objective, form: LpForm) -> Result<String> {
    let w = channel.table();
    let model = match form {
        LpForm::Compact => build_ns(&w, k1, k2, objective)?,
        LpForm::Full => build_ns_full(&w, k1, k2, objective, DEFAULT_FULL_NS_CAP)?,
    };
    let comment = format!("{form:?} non-signaling program, {objective:?} objective, k1={k1}, k2={k2}");
    Ok(to_lp_format(&model, Some(&comment)))
}
