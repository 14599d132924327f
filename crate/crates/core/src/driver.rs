//! The alternating bound loop: one exchange round, then one witness tranche,
//! until the bracket is narrower than `eps` or a budget runs out.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::greens::{builtin, make_composite, CompositeSpec, GreenFunction};
use crate::intpoly::{enumerate_graded, IntPoly, PolyFilter};
use crate::lowerbound::{
    default_delta, default_seed_grid, pool_grow, recognize, DualCertificate, ExchangeConfig, ExchangeState, InfConfig,
    Rigor, StepStatus,
};
use crate::upperbound::{search_tranche, PrimalWitness, SearchConfig, SearchCursor};

/// Slack allowed in `lower ≤ upper` for rounding in both computations.
pub const DUALITY_SLACK: f64 = 1e-7;

/// A builtin name or an inline composite spec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GreenSelector {
    Builtin(String),
    Composite(CompositeSpec),
}

impl GreenSelector {
    pub fn resolve(&self) -> Result<GreenFunction> {
        match self {
            GreenSelector::Builtin(name) => builtin(name),
            GreenSelector::Composite(spec) => make_composite(spec),
        }
    }

    /// Reads a builtin name, or a path to a composite spec JSON file.
    pub fn parse_arg(s: &str) -> Result<Self> {
        if s.ends_with(".json") || Path::new(s).is_file() {
            let text = fs::read_to_string(s)?;
            Ok(GreenSelector::Composite(CompositeSpec::from_json(&text)?))
        } else {
            Ok(GreenSelector::Builtin(s.to_string()))
        }
    }
}

/// Hex SHA-256 of the Green function's canonical id.
pub fn spec_hash(g: &GreenFunction) -> String {
    hex::encode(Sha256::digest(g.canonical_id().as_bytes()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub green: GreenSelector,
    /// Target width of `[lower, upper]`.
    pub eps: f64,
    /// Exchange rounds.
    pub budget_lp: usize,
    /// Witness evaluations.
    pub budget_witness: usize,
    pub budget_wall_s: f64,
    /// Witness evaluations per iteration.
    pub tranche: usize,
    pub rigor: Rigor,
    /// Exchange stopping gap between LP value and certificate value.
    pub exchange_tol: f64,
    /// Target `high − low` of the certified inner infimum.
    pub inf_tol: f64,
    pub inf_max_boxes: usize,
    /// Dual pool: caps and growth batch.
    pub pool_max_degree: usize,
    pub pool_max_height: u64,
    pub pool_batch: usize,
    /// Witness enumeration caps and tolerances.
    pub witness_max_degree: usize,
    pub witness_max_height: u64,
    pub coarse_tol: f64,
    pub quad_tol: f64,
    pub out: Option<PathBuf>,
    /// Recorded for reproducibility; every phase is deterministic.
    pub seed: u64,
}

impl RunConfig {
    pub fn new(green: GreenSelector) -> Self {
        RunConfig {
            green,
            eps: 1e-3,
            budget_lp: 20,
            budget_witness: 10_000,
            budget_wall_s: 1800.0,
            tranche: 64,
            rigor: Rigor::Certified,
            exchange_tol: 1e-3,
            inf_tol: 1e-4,
            inf_max_boxes: 4_000_000,
            pool_max_degree: 4,
            pool_max_height: 3,
            pool_batch: 8,
            witness_max_degree: 6,
            witness_max_height: 20,
            coarse_tol: 1e-3,
            quad_tol: 1e-6,
            out: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::ConfigInvalid(m.to_string()));
        if !(self.eps > 0.0) {
            return bad("eps must be positive");
        }
        if self.budget_lp == 0 || self.budget_witness == 0 || self.tranche == 0 {
            return bad("budgets and tranche size must be at least 1");
        }
        if !(self.budget_wall_s > 0.0) {
            return bad("wall-clock budget must be positive");
        }
        if !(self.exchange_tol > 0.0 && self.inf_tol > 0.0 && self.coarse_tol > 0.0 && self.quad_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.pool_max_degree == 0 || self.pool_max_height == 0 || self.witness_max_degree == 0 || self.witness_max_height == 0 {
            return bad("enumeration caps must be at least 1");
        }
        Ok(())
    }

    /// Without rigorous enclosures the result is heuristic anyway, so the
    /// branch and bound is skipped.
    fn exchange(&self, g: &GreenFunction) -> ExchangeConfig {
        let rigor = if g.enclosure_is_rigorous() { self.rigor } else { Rigor::Heuristic };
        ExchangeConfig {
            max_rounds: 1,
            tol: self.exchange_tol,
            inner: InfConfig {
                tol: self.inf_tol,
                max_boxes: self.inf_max_boxes,
                ..InfConfig::default()
            },
            rigor,
            delta: default_delta(),
            max_points: 2000,
        }
    }

    fn search(&self) -> SearchConfig {
        SearchConfig {
            max_degree: self.witness_max_degree,
            max_height: self.witness_max_height,
            coarse_tol: self.coarse_tol,
            tol: self.quad_tol,
            ..SearchConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iter: usize,
    pub wall_s: f64,
    /// Certified lower bound; `None` when no certified value exists.
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub gap: Option<f64>,
    /// Multistart value of the best certificate; not a proven bound.
    pub heuristic_lower: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub iter: usize,
    pub phase: String,
    pub message: String,
}

/// Everything needed to continue a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    pub iteration: usize,
    pub lp_rounds: usize,
    pub witness_evals: usize,
    pub pool: Vec<IntPoly>,
    /// Polynomials consumed from the graded pool enumeration.
    pub pool_taken: usize,
    pub exchange: Option<ExchangeState>,
    /// The last exchange round converged or stalled for the current pool.
    pub exchange_idle: bool,
    pub cursor: SearchCursor,
    pub witness_exhausted: bool,
    pub wall_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsLedger {
    pub green: String,
    pub spec_hash: String,
    pub certificate: DualCertificate,
    pub witness: Option<PrimalWitness>,
    pub history: Vec<HistoryRow>,
    pub config: RunConfig,
    pub seed: u64,
    pub log: Vec<LogEntry>,
    pub state: RunState,
}

impl BoundsLedger {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let g = config.green.resolve()?;
        Ok(BoundsLedger {
            green: g.name().to_string(),
            spec_hash: spec_hash(&g),
            certificate: DualCertificate::empty(),
            witness: None,
            history: Vec::new(),
            seed: config.seed,
            config,
            log: Vec::new(),
            state: RunState {
                iteration: 0,
                lp_rounds: 0,
                witness_evals: 0,
                pool: Vec::new(),
                pool_taken: 0,
                exchange: None,
                exchange_idle: true,
                cursor: SearchCursor::new(),
                witness_exhausted: false,
                wall_s: 0.0,
            },
        })
    }

    /// Certified lower bound, if any.
    pub fn lower(&self) -> Option<f64> {
        let c = &self.certificate;
        (c.rigor == Rigor::Certified && c.lambda.is_finite()).then_some(c.lambda)
    }

    pub fn heuristic_lower(&self) -> Option<f64> {
        self.state
            .exchange
            .as_ref()
            .map(|e| e.best_heuristic)
            .filter(|v| v.is_finite())
            .or_else(|| self.certificate.lambda.is_finite().then_some(self.certificate.lambda))
    }

    pub fn upper(&self) -> Option<f64> {
        self.witness.as_ref().map(|w| w.value)
    }

    pub fn gap(&self) -> Option<f64> {
        Some(self.upper()? - self.lower()?)
    }

    /// Weak duality and monotonicity over the whole history.
    pub fn check_invariants(&self) -> Result<()> {
        for r in &self.history {
            if let (Some(l), Some(u)) = (r.lower, r.upper) {
                if l > u + DUALITY_SLACK {
                    return Err(Error::LedgerInvariant { lower: l, upper: u });
                }
            }
        }
        for w in self.history.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let lower_drops = matches!((a.lower, b.lower), (Some(x), Some(y)) if y < x) || (a.lower.is_some() && b.lower.is_none());
            let upper_rises = matches!((a.upper, b.upper), (Some(x), Some(y)) if y > x) || (a.upper.is_some() && b.upper.is_none());
            if lower_drops || upper_rises {
                return Err(Error::ConfigInvalid(format!("ledger history is not monotone at iteration {}", b.iter)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ledger serializes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Halt {
    /// `upper − lower ≤ eps`.
    Eps,
    /// A budget ran out, or neither side can make further progress.
    Budget,
}

impl Halt {
    pub fn exit_code(self) -> i32 {
        match self {
            Halt::Eps => 0,
            Halt::Budget => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub ledger: BoundsLedger,
    pub halt: Halt,
}

const CHECKPOINT: &str = "checkpoint.json";

/// Writes `text` to `path` through a temporary file and a rename.
fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn checkpoint(ledger: &BoundsLedger, path: &Path) -> Result<()> {
    write_atomic(path, &ledger.to_json())
}

/// Loads a checkpoint and checks that its green spec still hashes to the
/// recorded value.
pub fn resume(path: &Path) -> Result<BoundsLedger> {
    let text = fs::read_to_string(path)?;
    let ledger: BoundsLedger =
        serde_json::from_str(&text).map_err(|e| Error::CorruptCheckpoint(format!("{}: {e}", path.display())))?;
    let g = ledger
        .config
        .green
        .resolve()
        .map_err(|e| Error::CorruptCheckpoint(format!("green function: {e}")))?;
    let found = spec_hash(&g);
    if found != ledger.spec_hash {
        return Err(Error::HashMismatch {
            expected: ledger.spec_hash.clone(),
            found,
        });
    }
    Ok(ledger)
}

/// [`resume`], additionally requiring the checkpoint to be for `config.green`.
pub fn resume_for(path: &Path, config: &RunConfig) -> Result<BoundsLedger> {
    let ledger = resume(path)?;
    let want = spec_hash(&config.green.resolve()?);
    if want != ledger.spec_hash {
        return Err(Error::HashMismatch {
            expected: want,
            found: ledger.spec_hash,
        });
    }
    Ok(ledger)
}

pub fn run(config: RunConfig) -> Result<RunOutcome> {
    let ledger = BoundsLedger::new(config)?;
    run_from(ledger)
}

/// Continues `ledger` until a halt condition; the ledger's own config governs.
pub fn run_from(mut ledger: BoundsLedger) -> Result<RunOutcome> {
    let cfg = ledger.config.clone();
    cfg.validate()?;
    let g = cfg.green.resolve()?;
    if spec_hash(&g) != ledger.spec_hash {
        return Err(Error::HashMismatch {
            expected: ledger.spec_hash.clone(),
            found: spec_hash(&g),
        });
    }
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir)?;
    }
    let started = Instant::now();
    let wall0 = ledger.state.wall_s;
    let elapsed = |s: &Instant| wall0 + s.elapsed().as_secs_f64();
    loop {
        if let Some(h) = halt_reason(&ledger, elapsed(&started)) {
            ledger.state.wall_s = elapsed(&started);
            if let Some(dir) = &cfg.out {
                checkpoint(&ledger, &dir.join(CHECKPOINT))?;
                report(&ledger, h, dir)?;
            }
            return Ok(RunOutcome { ledger, halt: h });
        }
        iterate(&g, &mut ledger);
        ledger.state.wall_s = elapsed(&started);
        let row = HistoryRow {
            iter: ledger.state.iteration,
            wall_s: ledger.state.wall_s,
            lower: ledger.lower(),
            upper: ledger.upper(),
            gap: ledger.gap(),
            heuristic_lower: ledger.heuristic_lower(),
        };
        ledger.history.push(row);
        // a violation means a numerics bug, so the run stops here
        ledger.check_invariants()?;
        if let Some(dir) = &cfg.out {
            checkpoint(&ledger, &dir.join(CHECKPOINT))?;
        }
    }
}

fn halt_reason(ledger: &BoundsLedger, wall_s: f64) -> Option<Halt> {
    let cfg = &ledger.config;
    let st = &ledger.state;
    if matches!(ledger.gap(), Some(gap) if gap <= cfg.eps) {
        return Some(Halt::Eps);
    }
    let lp_done = st.lp_rounds >= cfg.budget_lp;
    let witness_done = st.witness_evals >= cfg.budget_witness || st.witness_exhausted;
    if wall_s >= cfg.budget_wall_s || (lp_done && witness_done) {
        return Some(Halt::Budget);
    }
    None
}

fn note(ledger: &mut BoundsLedger, phase: &str, message: String) {
    ledger.log.push(LogEntry {
        iter: ledger.state.iteration,
        phase: phase.to_string(),
        message,
    });
}

/// One lower phase and one upper phase; module errors are logged, not raised.
fn iterate(g: &GreenFunction, ledger: &mut BoundsLedger) {
    ledger.state.iteration += 1;
    let cfg = ledger.config.clone();
    if ledger.state.lp_rounds < cfg.budget_lp {
        if let Err(e) = lower_phase(g, ledger, &cfg) {
            note(ledger, "lower", e.to_string());
        }
    }
    if ledger.state.witness_evals < cfg.budget_witness && !ledger.state.witness_exhausted {
        if let Err(e) = upper_phase(g, ledger, &cfg) {
            note(ledger, "upper", e.to_string());
        }
    }
}

fn lower_phase(g: &GreenFunction, ledger: &mut BoundsLedger, cfg: &RunConfig) -> Result<()> {
    let xcfg = cfg.exchange(g);
    if ledger.state.exchange.is_none() {
        ledger.state.exchange = Some(ExchangeState::new(g, &default_seed_grid(), &xcfg)?);
    }
    if ledger.state.exchange_idle {
        let minimizers = ledger.state.exchange.as_ref().map(|e| e.minimizers.clone()).unwrap_or_default();
        let mut source = enumerate_graded(cfg.pool_max_degree, cfg.pool_max_height, PolyFilter::PrimitiveIrreducible)
            .skip(ledger.state.pool_taken);
        let mut counted = CountingIter { inner: &mut source, taken: 0 };
        let grown = pool_grow(&ledger.state.pool, &minimizers, &mut counted, cfg.pool_batch, cfg.pool_max_height);
        ledger.state.pool_taken += counted.taken;
        if grown.is_empty() {
            // nothing new to add: the lower side is finished for these caps
            ledger.state.lp_rounds = cfg.budget_lp;
            return Ok(());
        }
        ledger.state.pool.extend(grown);
    }
    let st = ledger.state.exchange.as_mut().expect("exchange state initialised");
    ledger.state.lp_rounds += 1;
    let status = st.step(g, &ledger.state.pool, &xcfg)?;
    ledger.state.exchange_idle = status != StepStatus::Progress;
    if st.best.lambda > ledger.certificate.lambda || ledger.certificate.lambda.is_nan() {
        ledger.certificate = st.best.clone();
    }
    Ok(())
}

struct CountingIter<'a, I: Iterator<Item = IntPoly>> {
    inner: &'a mut I,
    taken: usize,
}

impl<I: Iterator<Item = IntPoly>> Iterator for CountingIter<'_, I> {
    type Item = IntPoly;

    fn next(&mut self) -> Option<IntPoly> {
        let p = self.inner.next()?;
        self.taken += 1;
        Some(p)
    }
}

/// Minimal polynomials recognised from the exchange minimizers, monic only.
fn minimizer_seeds(ledger: &BoundsLedger, cfg: &RunConfig) -> Vec<IntPoly> {
    let Some(st) = &ledger.state.exchange else { return Vec::new() };
    st.minimizers
        .iter()
        .filter_map(|&z: &Complex64| recognize(z, cfg.witness_max_degree.min(4), cfg.witness_max_height))
        .filter(|p| p.is_monic())
        .collect()
}

fn upper_phase(g: &GreenFunction, ledger: &mut BoundsLedger, cfg: &RunConfig) -> Result<()> {
    let mut seeds = minimizer_seeds(ledger, cfg);
    seeds.extend(ledger.state.pool.iter().filter(|p| p.is_monic()).cloned());
    for s in &seeds {
        ledger.state.cursor.add_seed(s);
    }
    let n = cfg.tranche.min(cfg.budget_witness - ledger.state.witness_evals);
    let drawn = ledger.state.cursor.drawn();
    let res = search_tranche(g, &cfg.search(), &mut ledger.state.cursor, n)?;
    ledger.state.witness_evals += res.evaluations;
    if ledger.state.cursor.drawn() == drawn {
        ledger.state.witness_exhausted = true;
    }
    if let Some(best) = res.best {
        let better = match &ledger.witness {
            None => true,
            Some(w) => best.value < w.value,
        };
        if better {
            ledger.witness = Some(best);
        }
    }
    Ok(())
}

/// Writes `report.json`, `history.csv`, and `convergence.svg` into `dir`.
pub fn report(ledger: &BoundsLedger, halt: Halt, dir: &Path) -> Result<()> {
    if ledger.history.is_empty() {
        return Err(Error::ConfigInvalid("cannot report an empty ledger".into()));
    }
    fs::create_dir_all(dir)?;
    write_atomic(&dir.join("report.json"), &report_json(ledger, halt))?;
    write_atomic(&dir.join("history.csv"), &history_csv(ledger))?;
    write_atomic(&dir.join("convergence.svg"), &convergence_svg(ledger))?;
    Ok(())
}

/// Final bounds, certificate, and witness; no wall-clock fields, so equal
/// runs give byte-identical reports.
pub fn report_json(ledger: &BoundsLedger, halt: Halt) -> String {
    let mut v = serde_json::json!({
        "green": ledger.green,
        "spec_hash": ledger.spec_hash,
        "halt": halt,
        "iterations": ledger.state.iteration,
        "lower": ledger.lower(),
        "upper": ledger.upper(),
        "gap": ledger.gap(),
        "heuristic_lower": ledger.heuristic_lower(),
        "certificate": ledger.certificate,
        "witness": ledger.witness,
        "lp_rounds": ledger.state.lp_rounds,
        "witness_evaluations": ledger.state.witness_evals,
        "seed": ledger.seed,
    });
    if ledger.green == "faltings" {
        // Ht_F is a twelfth of the height of g_hyp
        let twelfth = |x: Option<f64>| x.map(|x| x / 12.0);
        v["ess_Ht_F_lower"] = serde_json::json!(twelfth(ledger.lower()));
        v["ess_Ht_F_heuristic_lower"] = serde_json::json!(twelfth(ledger.heuristic_lower()));
        v["ess_Ht_F_upper"] = serde_json::json!(twelfth(ledger.upper()));
    }
    serde_json::to_string_pretty(&v).expect("report serializes")
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v}")).unwrap_or_default()
}

pub fn history_csv(ledger: &BoundsLedger) -> String {
    let mut s = String::from("iter,wall_s,lower,upper,gap,heuristic_lower\n");
    for r in &ledger.history {
        let _ = writeln!(
            s,
            "{},{:.3},{},{},{},{}",
            r.iter,
            r.wall_s,
            cell(r.lower),
            cell(r.upper),
            cell(r.gap),
            cell(r.heuristic_lower)
        );
    }
    s
}

/// Two step curves (lower, upper) against iteration.
pub fn convergence_svg(ledger: &BoundsLedger) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let rows = &ledger.history;
    let vals: Vec<f64> = rows
        .iter()
        .flat_map(|r| [r.lower, r.upper, r.heuristic_lower])
        .flatten()
        .filter(|v| v.is_finite())
        .collect();
    let (mut lo, mut hi) = vals
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo, hi) = (lo - 0.5, hi + 0.5);
    }
    let n = rows.last().map(|r| r.iter).unwrap_or(1).max(1) as f64;
    let x = |i: f64| pad + (w - 2.0 * pad) * (i - 1.0).max(0.0) / (n - 1.0).max(1.0);
    let y = |v: f64| h - pad - (h - 2.0 * pad) * (v - lo) / (hi - lo);
    let step = |get: &dyn Fn(&HistoryRow) -> Option<f64>| -> String {
        let mut pts = String::new();
        let mut prev: Option<f64> = None;
        for r in rows {
            if let Some(v) = get(r) {
                let xi = x(r.iter as f64);
                if let Some(p) = prev {
                    let _ = write!(pts, "{:.2},{:.2} ", xi, y(p));
                }
                let _ = write!(pts, "{:.2},{:.2} ", xi, y(v));
                prev = Some(v);
            }
        }
        pts
    };
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{pad}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/><line x1="{pad}" y1="{pad}" x2="{pad}" y2="{0}" stroke="black"/>"#,
        h - pad,
        w - pad
    );
    let _ = writeln!(s, r#"<text x="{pad}" y="20" font-size="14">{} bounds by iteration</text>"#, ledger.green);
    let _ = writeln!(s, r#"<text x="5" y="{:.2}" font-size="11">{:.6}</text>"#, y(hi) + 4.0, hi);
    let _ = writeln!(s, r#"<text x="5" y="{:.2}" font-size="11">{:.6}</text>"#, y(lo) + 4.0, lo);
    let _ = writeln!(s, r#"<polyline fill="none" stroke="crimson" points="{}"/>"#, step(&|r| r.upper));
    let _ = writeln!(s, r#"<polyline fill="none" stroke="navy" points="{}"/>"#, step(&|r| r.lower));
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="gray" stroke-dasharray="4 3" points="{}"/>"#,
        step(&|r| r.heuristic_lower)
    );
    s.push_str("</svg>\n");
    s
}
