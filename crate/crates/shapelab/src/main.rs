//! Command-line front end: deterministic suite orchestration and report
//! emission on top of the library modules.
//!
//! Exit codes: 0 success, 1 inequality-audit failure, 2 usage error,
//! 3 numeric failure.

use clap::{Args, Parser, Subcommand};
use shapelab::ball_spectrum::enumerate_spectrum;
use shapelab::geometry::{make_domain, FourierProfile};
use shapelab::inequality_audit::{
    audit_family, audit_main_theorems, standard_family, SpectralTarget,
};
use shapelab::optimizer::{
    delta_threshold, fd_hessian, projected_descent, reverse_kj_exponent, EigenFunctional,
    FunctionalSpec,
};
use shapelab::shape_calculus::{d_cluster_sum, d_lambda_simple, d_torsion, raw_domain};
use shapelab::spectral_sums::{cluster_partition, heat_trace_ball};
use shapelab::Error;
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "shapelab", version, about = "spectral-geometry laboratory")]
struct Cli {
    /// Plain-text key=value configuration file; command-line flags override.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: SHAPELAB_OUT env var, then "./out").
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerate the exact ball spectrum.
    Ball(BallArgs),
    /// Run the explicit-inequality suite over a seeded domain family.
    Audit(AuditArgs),
    /// Measure the stability exponents over the cos(2 theta) family.
    Sharpness(SharpnessArgs),
    /// Hessian scan, delta thresholds and the reverse product exponent.
    Scan(ScanArgs),
    /// Shape-derivative reports for a boundary profile.
    Derive(DeriveArgs),
    /// Ball heat trace with tail certificates and the cluster partition.
    Trace(TraceArgs),
}

#[derive(Args)]
struct BallArgs {
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    k: Option<u64>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    family: Option<usize>,
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    k: Option<usize>,
    /// Restrict the report to inequality ids containing this substring.
    #[arg(long)]
    only: Option<String>,
}

#[derive(Args)]
struct SharpnessArgs {
    /// Comma-separated epsilon grid.
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    level: Option<u32>,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    m_max: Option<usize>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    delta: Option<f64>,
    /// Run a projected descent from 0.1 cos(2 theta) as well.
    #[arg(long)]
    descent: bool,
}

#[derive(Args)]
struct DeriveArgs {
    /// Profile text: lines "m a_m b_m" (see FourierProfile::parse), or "@file".
    #[arg(long)]
    profile: String,
    #[arg(long)]
    level: Option<u32>,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    n: Option<u32>,
    /// Comma-separated times.
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    k: Option<u64>,
}

/// key=value configuration with defaults, file values, then flag overrides.
struct Config {
    map: BTreeMap<String, String>,
}

impl Config {
    fn load(path: Option<&PathBuf>) -> Result<Self, Error> {
        let mut map = BTreeMap::new();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)?;
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| Error::Invalid(format!("config line {}: expected key=value", i + 1)))?;
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Config { map })
    }

    fn set_if<T: ToString>(&mut self, key: &str, v: &Option<T>) {
        if let Some(v) = v {
            self.map.insert(key.to_string(), v.to_string());
        }
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, Error> {
        match self.map.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Error::Invalid(format!("config key {key}: cannot parse {s:?}"))),
        }
    }

    fn get_grid(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, Error> {
        match self.map.get(key) {
            None => Ok(default.to_vec()),
            Some(s) => s
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse()
                        .map_err(|_| Error::Invalid(format!("config key {key}: bad number {x:?}")))
                })
                .collect(),
        }
    }

    /// FNV-1a hash of the canonical key=value listing; embedded in outputs
    /// so identical configurations are recognizable byte-for-byte.
    fn hash(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        for (k, v) in &self.map {
            for byte in k.bytes().chain([b'='].into_iter()).chain(v.bytes()).chain([b'\n']) {
                h ^= byte as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        format!("{h:016x}")
    }
}

struct Out {
    dir: PathBuf,
    stamp: String,
}

impl Out {
    fn new(dir: Option<PathBuf>, cfg: &Config) -> Result<Self, Error> {
        let dir = dir
            .or_else(|| std::env::var_os("SHAPELAB_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&dir)?;
        let stamp = format!("config_hash={} version={}", cfg.hash(), env!("CARGO_PKG_VERSION"));
        Ok(Out { dir, stamp })
    }

    fn write_csv(&self, name: &str, body: &str) -> Result<(), Error> {
        let path = self.dir.join(name);
        std::fs::write(&path, format!("# {}\n{}", self.stamp, body))?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn write_json(&self, name: &str, body: serde_json::Value) -> Result<(), Error> {
        let doc = serde_json::json!({ "meta": self.stamp, "report": body });
        let path = self.dir.join(name);
        std::fs::write(&path, serde_json::to_string_pretty(&doc).expect("json"))?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(match run(cli) {
        Ok(code) => code,
        Err(Error::Invalid(msg)) | Err(Error::Domain(msg)) => {
            eprintln!("usage error: {msg}");
            2
        }
        Err(Error::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            3
        }
        Err(e) => {
            eprintln!("error: {e}");
            3
        }
    });
}

fn run(cli: Cli) -> Result<i32, Error> {
    let mut cfg = Config::load(cli.config.as_ref())?;
    match &cli.cmd {
        Cmd::Ball(a) => {
            cfg.set_if("n", &a.n);
            cfg.set_if("k", &a.k);
            let out = Out::new(cli.out, &cfg)?;
            let n = cfg.get("n", 2u32)?;
            let k = cfg.get("k", 600u64)?;
            let spec = enumerate_spectrum(n, k)?;
            out.write_csv("spectrum.csv", &spec.to_csv())?;
            let simple: Vec<String> =
                spec.simple_indices(k).iter().map(|i| i.to_string()).collect();
            println!("n={n} K={k} simple indices: {}", simple.join(","));
            Ok(0)
        }
        Cmd::Audit(a) => {
            cfg.set_if("seed", &a.seed);
            cfg.set_if("family", &a.family);
            cfg.set_if("level", &a.level);
            cfg.set_if("k", &a.k);
            cfg.set_if("only", &a.only);
            let out = Out::new(cli.out, &cfg)?;
            let seed = cfg.get("seed", 7u64)?;
            let count = cfg.get("family", 50usize)?;
            let level = cfg.get("level", 1u32)?;
            let k = cfg.get("k", 6usize)?;
            let profiles = standard_family(count, 0.2, seed);
            let mut report = audit_family(&profiles, k, level)?;
            if let Some(only) = cfg.map.get("only") {
                report.entries.retain(|e| e.inequality_id.contains(only.as_str()));
            }
            out.write_csv("audit.csv", &report.to_csv())?;
            out.write_json("audit.json", serde_json::to_value(&report).expect("json"))?;
            let failed = report.entries.iter().filter(|e| !e.satisfied).count();
            println!(
                "{} inequalities checked over {count} domains, {failed} failed",
                report.entries.len()
            );
            Ok(if failed == 0 { 0 } else { 1 })
        }
        Cmd::Sharpness(a) => {
            cfg.set_if("eps", &a.eps);
            cfg.set_if("level", &a.level);
            let out = Out::new(cli.out, &cfg)?;
            let eps = cfg.get_grid("eps", &[0.01, 0.02, 0.04, 0.08, 0.16, 0.32])?;
            let level = cfg.get("level", 2u32)?;
            let mut doc = serde_json::Map::new();
            for (name, target) in [
                ("simple_k6", SpectralTarget::Simple(6)),
                ("double_k2", SpectralTarget::Double(2)),
                ("cluster_2_3", SpectralTarget::ClusterSum(2, 3)),
            ] {
                let (entries, fit) = audit_main_theorems(target, &eps, level)?;
                println!("{name}: slope {:.4} over {} points", fit.slope, fit.points.len());
                doc.insert(
                    name.to_string(),
                    serde_json::json!({ "fit": fit, "entries": entries }),
                );
            }
            out.write_json("sharpness.json", serde_json::Value::Object(doc))?;
            Ok(0)
        }
        Cmd::Scan(a) => {
            cfg.set_if("m_max", &a.m_max);
            cfg.set_if("step", &a.step);
            cfg.set_if("level", &a.level);
            cfg.set_if("delta", &a.delta);
            let out = Out::new(cli.out, &cfg)?;
            let m_max = cfg.get("m_max", 5usize)?;
            let step = cfg.get("step", 0.02f64)?;
            let level = cfg.get("level", 1u32)?;
            let delta = cfg.get("delta", 1e-3f64)?;
            let spec = FunctionalSpec::new(EigenFunctional::ClusterSum { lo: 2, hi: 3 }, delta)?;
            let scan = fd_hessian(&spec, m_max, step, level)?;
            println!(
                "min Hessian eigenvalue of {} at delta={delta}: {:.6}",
                scan.functional, scan.min_eigenvalue
            );
            let thresholds = delta_threshold(&scan, 1e6)?;
            let kj = reverse_kj_exponent(m_max, step, level)?;
            println!(
                "delta thresholds: {thresholds:?}; reverse product exponent p = {:.4}",
                kj.p_from_threshold
            );
            out.write_csv("hessian.csv", &scan.to_csv())?;
            out.write_json(
                "scan.json",
                serde_json::json!({ "scan": scan, "thresholds": thresholds, "reverse_kj": kj }),
            )?;
            if a.descent {
                let start = vec![0.1, 0.0, 0.0, 0.0];
                let traj = projected_descent(&spec, &start, 3, 40, level)?;
                out.write_csv("descent.csv", &traj.to_csv())?;
                println!(
                    "descent: {} steps, final value {:.8}, converged: {}",
                    traj.values.len(),
                    traj.values.last().unwrap(),
                    traj.converged
                );
            }
            Ok(0)
        }
        Cmd::Derive(a) => {
            cfg.set_if("level", &a.level);
            cfg.map.insert("profile".into(), a.profile.clone());
            let out = Out::new(cli.out, &cfg)?;
            let level = cfg.get("level", 2u32)?;
            let text = match a.profile.strip_prefix('@') {
                Some(path) => std::fs::read_to_string(path)?,
                None => a.profile.replace(';', "\n"),
            };
            let profile = FourierProfile::parse(&text)?;
            let domain = if profile.a.iter().all(|x| *x == 0.0) && profile.b.iter().all(|x| *x == 0.0)
            {
                raw_domain(&profile)
            } else {
                make_domain(profile.clone())?
            };
            let dir = FourierProfile::mode(2, 1.0, false);
            let mut reports = vec![d_torsion(&domain, &dir, level)?];
            match d_lambda_simple(&domain, &dir, 1, level) {
                Ok(r) => reports.push(r),
                Err(e) => eprintln!("lambda_1 derivative skipped: {e}"),
            }
            reports.push(d_cluster_sum(&domain, &dir, 2, 3, level)?);
            for r in &reports {
                println!("{}: {:.8} (err ~ {:.2e})", r.functional, r.value, r.err_est);
            }
            out.write_json("derivatives.json", serde_json::to_value(&reports).expect("json"))?;
            Ok(0)
        }
        Cmd::Trace(a) => {
            cfg.set_if("n", &a.n);
            cfg.set_if("t", &a.t);
            cfg.set_if("k", &a.k);
            let out = Out::new(cli.out, &cfg)?;
            let n = cfg.get("n", 2u32)?;
            let times = cfg.get_grid("t", &[0.1, 0.2, 0.5, 1.0, 2.0])?;
            let k = cfg.get("k", 500u64)?;
            let mut body = String::from("t,value,tail_bound\n");
            for &t in &times {
                let (value, tail) = heat_trace_ball(n, t, 64)?;
                body.push_str(&format!("{t},{value:.17e},{tail:.17e}\n"));
            }
            out.write_csv("heat_trace.csv", &body)?;
            let part = cluster_partition(n, k)?;
            out.write_csv("clusters.csv", &part.to_csv())?;
            println!(
                "partition of 1..{k}: {} intervals, max sup/inf ratio {:.4} (cap {:.4})",
                part.intervals.len(),
                part.max_ratio,
                part.d_n
            );
            Ok(0)
        }
    }
}
