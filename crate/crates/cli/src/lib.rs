//! Batch front end: family and system files in, JSON-lines records out.

pub mod family;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use petkit_core::pet::{group_report, reduce_for};
use petkit_core::polycore::degeneracy_witness;
use petkit_core::report::{j2_check, j3_conditions, mainthm_conditions, render_lattice};
use petkit_core::{IntLattice, NumericInstance, PetError, PolyVec, ReportError};
use petkit_sim::{IntPolyMap, SimError, SystemFile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

pub use family::{FamilyError, FamilySpec, SlotExpr};

#[derive(Debug, Parser)]
#[command(name = "petkit", version, about = "PET induction, subgroup reports and torus simulations")]
pub struct Cli {
    /// Human-readable output instead of JSON lines.
    #[arg(long, global = true)]
    pub pretty: bool,
    /// Seed for instantiating symbolic coefficients.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// vdC trace and final linear tuple for each function.
    Reduce {
        #[arg(long)]
        family: PathBuf,
        /// Only reduce for this function (one-based).
        #[arg(long)]
        function: Option<usize>,
    },
    /// The groups G_{i,j}, H_{i,m} and containment certificates.
    Groups {
        #[arg(long)]
        family: PathBuf,
    },
    /// Ergodicity hypotheses of one theorem.
    Report {
        #[arg(long)]
        family: PathBuf,
        #[arg(long, value_enum)]
        theorem: TheoremArg,
    },
    /// Numerical checks on a torus rotation system.
    Sim {
        #[arg(value_enum)]
        mode: SimMode,
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long)]
        family: Option<PathBuf>,
        #[arg(long = "N", default_value_t = 1000)]
        n: u64,
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TheoremArg {
    Mainthm,
    J2,
    J3,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SimMode {
    Average,
    Joint,
    Seminorm,
    Null,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Invariant(_) => 2,
        }
    }
}

impl From<FamilyError> for CliError {
    fn from(e: FamilyError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<PetError> for CliError {
    fn from(e: PetError) -> Self {
        match e {
            PetError::Degenerate(..)
            | PetError::Shape
            | PetError::Empty
            | PetError::FunctionOutOfRange(..)
            | PetError::Poly(_) => CliError::Input(e.to_string()),
            _ => CliError::Invariant(e.to_string()),
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Pet(p) => p.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_family(path: &PathBuf) -> Result<FamilySpec, CliError> {
    FamilySpec::parse(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_system(path: &Option<PathBuf>) -> Result<SystemFile, CliError> {
    let path = path.as_ref().ok_or_else(|| CliError::Input("--system is required".into()))?;
    SystemFile::parse(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Values for every symbol of `family`, drawn from `[-5, 5]^d` until the
/// instantiated family is essentially distinct.
pub fn random_instance(family: &[PolyVec], d: usize, seed: u64) -> Result<NumericInstance, CliError> {
    let symbols: std::collections::BTreeSet<_> = family.iter().flat_map(PolyVec::symbols).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100 {
        let mut inst = NumericInstance::new(d);
        for s in &symbols {
            let v: Vec<i64> = (0..d).map(|_| rng.gen_range(-5..=5)).collect();
            inst.insert_ints(s.clone(), &v).map_err(|e| CliError::Input(e.to_string()))?;
        }
        let numeric = family.iter().map(|p| p.instantiate(&inst)).collect::<Result<Vec<_>, _>>().map_err(PetError::from)?;
        if degeneracy_witness(&numeric).is_none() {
            return Ok(inst);
        }
    }
    Err(CliError::Input("no non-degenerate instance found in 100 draws".into()))
}

fn instance_record(spec: &FamilySpec, inst: &NumericInstance, seed: u64) -> Option<Value> {
    if !spec.is_symbolic() {
        return None;
    }
    let mut values = Map::new();
    for (s, v) in inst.iter() {
        values.insert(s.to_string(), json!(v.iter().map(ToString::to_string).collect::<Vec<_>>()));
    }
    Some(json!({"record": "instance", "seed": seed, "values": values}))
}

fn basis_json(g: &IntLattice) -> Value {
    json!(g.basis().iter().map(|r| r.iter().map(ToString::to_string).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn reduce(spec: &FamilySpec, only: Option<usize>) -> Result<Vec<Value>, CliError> {
    let family = spec.family();
    let which: Vec<usize> = match only {
        Some(i) => vec![i],
        None => (1..=family.len()).collect(),
    };
    let mut out = Vec::new();
    for i in which {
        let red = reduce_for(&family, i)?;
        out.push(json!({
            "record": "reduce",
            "function": i,
            "incremented": red.incremented,
            "schedule": red.schedule(),
            "final_len": red.plan.len,
            "bound": red.bound.to_string(),
        }));
        match &red.linear {
            Some(lin) => {
                let skip = lin.history().len() - red.plan.steps.len();
                for (t, rec) in lin.history()[skip..].iter().enumerate() {
                    out.push(json!({
                        "record": "step",
                        "function": i,
                        "step": t + 1,
                        "rho": rec.rho,
                        "prev_len": rec.prev_len,
                        "dropped": rec.dropped,
                        "classes": rec.class_sizes(),
                        "len": rec.polys.len(),
                    }));
                }
                if lin.degree() > 1 {
                    return Err(CliError::Invariant(format!("final tuple for function {i} has degree {}", lin.degree())));
                }
                out.push(json!({
                    "record": "linear",
                    "function": i,
                    "len": lin.len(),
                    "slots": lin.polys().iter().map(ToString::to_string).collect::<Vec<_>>(),
                }));
            }
            None => {
                for (t, (rho, surv)) in red.plan.steps.iter().enumerate() {
                    out.push(json!({"record": "step", "function": i, "step": t + 1, "rho": rho, "len": surv.len()}));
                }
            }
        }
    }
    Ok(out)
}

fn instantiate(spec: &FamilySpec, seed: u64, out: &mut Vec<Value>) -> Result<NumericInstance, CliError> {
    let inst = random_instance(&spec.family(), spec.d, seed)?;
    out.extend(instance_record(spec, &inst, seed));
    Ok(inst)
}

fn groups(spec: &FamilySpec, seed: u64) -> Result<Vec<Value>, CliError> {
    let mut out = Vec::new();
    let inst = instantiate(spec, seed, &mut out)?;
    let rep = group_report(&spec.family(), &inst)?;
    for ((i, j), g) in &rep.g_groups {
        out.push(json!({"record": "G", "i": i, "j": j, "group": render_lattice(g), "basis": basis_json(g)}));
    }
    for ((i, m), h) in &rep.h_groups {
        let j = rep.certificates[&(*i, *m)];
        out.push(json!({"record": "H", "i": i, "m": m, "group": render_lattice(h), "basis": basis_json(h), "certificate": j}));
    }
    out.push(json!({"record": "summary", "k": rep.k, "d": rep.d, "D": rep.bound.to_string()}));
    Ok(out)
}

fn report(spec: &FamilySpec, theorem: TheoremArg, seed: u64) -> Result<Vec<Value>, CliError> {
    let mut out = Vec::new();
    let (set, applicable) = match theorem {
        TheoremArg::J2 => {
            let split = spec.split().ok_or_else(|| CliError::Input("j2 needs every slot in the form (poly) * [v]".into()))?;
            let (ok, set) = j2_check(&split)?;
            (set, Some(ok))
        }
        TheoremArg::Mainthm => {
            let inst = instantiate(spec, seed, &mut out)?;
            (mainthm_conditions(&spec.family(), &inst)?, None)
        }
        TheoremArg::J3 => {
            let inst = instantiate(spec, seed, &mut out)?;
            (j3_conditions(&spec.family(), &inst)?, None)
        }
    };
    let mut rec = set.to_json();
    rec["record"] = json!("report");
    if let Some(ok) = applicable {
        rec["applicable"] = json!(ok);
    }
    out.push(rec);
    Ok(out)
}

fn int_family(spec: &FamilySpec, seed: u64, out: &mut Vec<Value>) -> Result<Vec<IntPolyMap>, CliError> {
    let inst = instantiate(spec, seed, out)?;
    spec.family()
        .iter()
        .map(|p| {
            let q = p.instantiate(&inst).map_err(PetError::from)?;
            Ok(IntPolyMap::from_poly(&q)?)
        })
        .collect()
}

fn ladder(n: u64) -> Vec<u64> {
    let mut l: Vec<u64> = [n / 100, n / 10, n].into_iter().filter(|&x| x > 0).collect();
    l.dedup();
    l
}

fn complex(z: num_complex::Complex64) -> Value {
    json!([z.re, z.im])
}

fn sim(mode: SimMode, system: &Option<PathBuf>, family: &Option<PathBuf>, n: u64, tol: f64, seed: u64) -> Result<Vec<Value>, CliError> {
    let mut out = Vec::new();
    match mode {
        SimMode::Average | SimMode::Joint => {
            let sys = load_system(system)?;
            let spec = load_family(family.as_ref().ok_or_else(|| CliError::Input("--family is required".into()))?)?;
            let fam = int_family(&spec, seed, &mut out)?;
            if let SimMode::Average = mode {
                let r = petkit_sim::multi_average(&sys.system, &fam, &sys.chars, n)?;
                out.push(json!({"record": "average", "N": n, "value": complex(r.value), "estimated_error": r.estimated_error}));
            } else {
                let r = petkit_sim::joint_ergodicity_test(&sys.system, &fam, &sys.chars, n, tol)?;
                out.push(json!({
                    "record": "joint", "N": n, "weyl": complex(r.weyl.value), "expected": complex(r.expected),
                    "residual": r.residual, "tol": tol, "pass": r.pass,
                }));
            }
        }
        SimMode::Seminorm => {
            let sys = load_system(system)?;
            if sys.lattices.is_empty() || sys.chars.is_empty() {
                return Err(CliError::Input("seminorm needs at least one `char` and one `lattice` line".into()));
            }
            for (c, f) in sys.chars.iter().enumerate() {
                let v = petkit_sim::hk_seminorm_char(&sys.system, &sys.lattices, f, n)?;
                out.push(json!({
                    "record": "seminorm", "char": c + 1, "N": n, "s": sys.lattices.len(),
                    "numeric": v.numeric, "analytic": v.analytic, "pass": (v.numeric - v.analytic).abs() <= 0.02,
                }));
            }
        }
        SimMode::Null => match family {
            Some(path) => {
                let sys = load_system(system)?;
                let spec = load_family(path)?;
                let fam = int_family(&spec, seed, &mut out)?;
                if fam.len() != 1 || sys.chars.len() != 2 {
                    return Err(CliError::Input("the split needs one iterate and two `char` lines".into()));
                }
                let split = petkit_sim::herglotz_split(&sys.system, &sys.chars[0], &sys.chars[1], &fam[0])?;
                let t = petkit_sim::besicovitch_null_test(split.l(), &ladder(n), 0.0, |k| split.nu(k))?;
                out.push(json!({"record": "herglotz", "ladder": t.ladder, "nu_estimates": t.estimates, "null": t.null}));
            }
            None => {
                let rungs = ladder(n);
                let bound = 1.0 / n as f64;
                let t = petkit_sim::besicovitch_null_test(1, &rungs, bound, |k| Ok(petkit_sim::doubling_demo(k[0]).1))?;
                out.push(json!({"record": "doubling", "ladder": t.ladder, "nu_estimates": t.estimates, "bound": bound, "null": t.null}));
            }
        },
    }
    Ok(out)
}

/// Runs one command and returns its records.
pub fn execute(cli: &Cli) -> Result<Vec<Value>, CliError> {
    match &cli.command {
        Command::Reduce { family, function } => reduce(&load_family(family)?, *function),
        Command::Groups { family } => groups(&load_family(family)?, cli.seed),
        Command::Report { family, theorem } => report(&load_family(family)?, *theorem, cli.seed),
        Command::Sim { mode, system, family, n, tol } => sim(*mode, system, family, *n, *tol, cli.seed),
    }
}

/// `key: value` lines under a heading per record.
pub fn render_pretty(rec: &Value) -> String {
    let Some(obj) = rec.as_object() else { return rec.to_string() };
    let mut s = format!("{}\n", obj.get("record").and_then(Value::as_str).unwrap_or("record"));
    for (k, v) in obj.iter().filter(|(k, _)| k.as_str() != "record") {
        let text = match v {
            Value::String(x) => x.clone(),
            other => other.to_string(),
        };
        s.push_str(&format!("  {k}: {text}\n"));
    }
    s
}
