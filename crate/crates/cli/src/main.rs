use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use casson_lin::catalog::catalog;
use casson_lin::run::{run, BraidSource, Mode, RunOutcome, RunOutput, RunRequest, EXIT_INPUT};

#[derive(Parser)]
#[command(name = "casson-lin", version, about = "SU(N) Casson-Lin invariants of braid closures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a braid and labels without solving.
    Validate(Common),
    /// Find the fixed points and dump them.
    Solve(Common),
    /// Compute h_{N,a} of the closure.
    Invariant(Common),
    /// Compare h across Markov moves.
    MarkovCheck(Common),
    /// Compare h across all compatible twists.
    EpsilonCheck(Common),
    /// Tabulate |h| of T(2,2q) against q^(N-1) (exploratory).
    ConjectureScan {
        #[arg(long, default_value_t = 3)]
        q_max: usize,
        #[arg(long, default_value_t = 3)]
        n_max: u32,
        #[command(flatten)]
        common: Common,
    },
    /// List the built-in links.
    Catalog {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Clone, Default)]
struct Common {
    /// A catalog name or braid text such as `B3: 1 1 2 2`, optionally
    /// followed by `N=3 a=1,1,1 eps=0,0,1`.
    #[arg(allow_negative_numbers = true)]
    tokens: Vec<String>,
    /// Braid text, e.g. `B2: 1 1`.
    #[arg(long)]
    braid: Option<String>,
    /// Catalog entry, e.g. `hopf`, `chain(3)`, `torus2(2)`.
    #[arg(long)]
    name: Option<String>,
    #[arg(long = "N")]
    rank: Option<u32>,
    /// Labels, comma separated.
    #[arg(long, value_delimiter = ',')]
    a: Option<Vec<u32>>,
    /// Twist exponents, comma separated.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<u32>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON report instead of a summary.
    #[arg(long)]
    json: bool,
    /// File of `key = value` solver settings.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_list(s: &str) -> anyhow::Result<Vec<u32>> {
    s.split(',')
        .map(|t| t.trim().parse::<u32>().with_context(|| format!("bad list entry `{t}`")))
        .collect()
}

fn build_request(c: &Common, mode: Mode) -> anyhow::Result<RunRequest> {
    let mut req = RunRequest::new(mode);
    let mut rest = Vec::new();
    for tok in &c.tokens {
        if let Some(v) = tok.strip_prefix("N=") {
            req.n = Some(v.parse().with_context(|| format!("bad rank `{v}`"))?);
        } else if let Some(v) = tok.strip_prefix("a=") {
            req.labels = Some(parse_list(v)?);
        } else if let Some(v) = tok.strip_prefix("eps=") {
            req.epsilon = Some(parse_list(v)?);
        } else {
            rest.push(tok.as_str());
        }
    }
    let positional = (!rest.is_empty()).then(|| rest.join(" "));
    let sources = [
        c.braid.clone().map(BraidSource::Inline),
        c.name.clone().map(BraidSource::Catalog),
        positional.map(|p| if p.contains(':') { BraidSource::Inline(p) } else { BraidSource::Catalog(p) }),
    ];
    let mut given = sources.into_iter().flatten();
    req.source = given.next();
    if given.next().is_some() {
        bail!("give exactly one braid source");
    }
    req.n = c.rank.or(req.n);
    req.labels = c.a.clone().or(req.labels);
    req.epsilon = c.eps.clone().or(req.epsilon);
    req.seed = c.seed;
    req.restarts = c.restarts;
    req.out = c.out.clone();
    if let Some(path) = &c.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        req = req.with_config_text(&text)?;
    }
    Ok(req)
}

fn fmt_h(h: Option<i64>) -> String {
    h.map_or_else(|| "undefined".to_string(), |h| h.to_string())
}

fn summarize(out: &RunOutcome) {
    match &out.output {
        RunOutput::Validation(v) => {
            println!("{}  components={}  cycles={:?}", v.braid, v.components, v.cycles);
            if v.valid {
                println!("valid");
            }
            for msg in &v.violations {
                println!("violation: {msg}");
            }
        }
        RunOutput::Invariant(r) => {
            println!("{}  N={}  a={:?}  eps={:?}", r.braid, r.n, r.labels, r.epsilon);
            for (i, c) in r.classes.iter().enumerate() {
                let sign = c.sign.map_or("-".to_string(), |s| format!("{s:+}"));
                let family = if c.family_members > 1 || c.torus_family {
                    format!("  family of {} solver classes", c.family_members)
                } else {
                    String::new()
                };
                println!("class {}: kernel {} excess {} sign {}{}", i + 1, c.kernel_dim, c.excess, sign, family);
            }
            let note = if r.global_sign_ambiguous && r.h.is_some() { " (up to global sign)" } else { "" };
            println!("h = {}{}", fmt_h(r.h), note);
            for f in &r.flags {
                println!("flag: {f}");
            }
        }
        RunOutput::Solutions(d) => {
            println!("{}  N={}  a={:?}  eps={:?}", d.braid, d.n, d.labels, d.epsilon);
            println!(
                "{} classes from {} restarts ({} converged, {} stalled, {} unresolved)",
                d.classes.len(),
                d.stats.restarts,
                d.stats.converged,
                d.stats.stalled,
                d.stats.unresolved
            );
        }
        RunOutput::Markov(m) => {
            println!("base: |h| = {}  excess {:?}", fmt_h(m.base.abs_h), m.base.excesses);
            for v in &m.variants {
                let verdict = if v.agrees { "agrees" } else { "DIFFERS" };
                println!("{}: {}  |h| = {}  excess {:?}  {verdict}", v.mv, v.braid, fmt_h(v.summary.abs_h), v.summary.excesses);
            }
        }
        RunOutput::Epsilon(e) => {
            for (eps, s) in &e.runs {
                println!("eps={eps:?}: |h| = {}  classes {}", fmt_h(s.abs_h), s.classes);
            }
            println!("{}", if e.all_agree { "all agree" } else { "DISAGREE" });
        }
        RunOutput::Conjecture(t) => {
            println!("exploratory: |h| of T(2,2q) with a=(1,N-1) against q^(N-1)");
            println!("{:>3} {:>3} {:>10} {:>10}", "q", "N", "|h|", "q^(N-1)");
            for r in &t.rows {
                println!("{:>3} {:>3} {:>10} {:>10}", r.q, r.n, fmt_h(r.abs_h), r.conjectured);
            }
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<i32> {
    let (common, mode) = match cli.command {
        Command::Catalog { json } => {
            let entries = catalog();
            if json {
                println!("{}", serde_json::to_string_pretty(&entries)?);
            } else {
                for e in entries {
                    println!("{:<18} {:<24} components={}  {}", e.name, e.braid.to_string(), e.components, e.note);
                }
            }
            return Ok(0);
        }
        Command::Validate(c) => (c, Mode::Validate),
        Command::Solve(c) => (c, Mode::SolveOnly),
        Command::Invariant(c) => (c, Mode::Invariant),
        Command::MarkovCheck(c) => (c, Mode::MarkovCheck),
        Command::EpsilonCheck(c) => (c, Mode::EpsilonCheck),
        Command::ConjectureScan { q_max, n_max, common } => (common, Mode::ConjectureScan { q_max, n_max }),
    };
    let req = build_request(&common, mode)?;
    let out = run(&req)?;
    if common.json {
        println!("{}", out.to_json()?);
    } else {
        summarize(&out);
    }
    Ok(out.exit_code)
}

fn main() -> ExitCode {
    env_logger::init();
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}
