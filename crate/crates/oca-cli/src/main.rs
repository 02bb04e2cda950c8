//! Command-line front end: construction commands, verification driver and
//! size reports for one-counter automata and their regular abstractions.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use oca::closures::{downward_nfa_of, upward_nfa_of};
use oca::completeness::{
    flatten_to_rba, hard_automaton, hard_automaton_sizes, loop_counting_constants,
    reduce_to_hard, to_loop_counting, Rba,
};
use oca::core::{expand_extended, Kind, Letter, Oca, StateId};
use oca::format::{parse_oca, parse_substitution_lines, print_oca};
use oca::oracle::{
    closure_member, enumerate_language_mod_eps, enumerate_parikh, nfa_accepts, nfa_parikh_up_to,
    MemberMode,
};
use oca::parikh_fixed::{parikh_nfa_fixed, parikh_nfa_fixed_deepened, BoundConfig};
use oca::parikh_general::{parikh_nfa_general_with, GeneralConfig};
use oca::reduction::{apply_substitution, Substitution};

#[derive(Parser)]
#[command(name = "oca", version, about = "Regular abstractions of one-counter automata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputOpt {
    /// Write the result here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// NFA for the upward closure ↑L(A).
    Upward {
        file: PathBuf,
        #[command(flatten)]
        out: OutputOpt,
        /// Prune unreachable and dead states (off by default so state counts
        /// match the construction formulas).
        #[arg(long)]
        trim: bool,
    },
    /// NFA for the downward closure ↓L(A).
    Downward {
        file: PathBuf,
        #[command(flatten)]
        out: OutputOpt,
        #[arg(long)]
        trim: bool,
    },
    /// Parikh-equivalent NFA via fixed-alphabet semilinear synthesis.
    ParikhFixed {
        file: PathBuf,
        #[command(flatten)]
        out: OutputOpt,
        /// Base-vector norm bound (base-run length).
        #[arg(long)]
        s_len: Option<u64>,
        /// Period-vector norm bound (direction length).
        #[arg(long)]
        dir_len: Option<u64>,
        /// Maximal effect of the increasing direction half.
        #[arg(long)]
        eff_max: Option<u64>,
        /// Deepen the bounds until the Parikh window of this norm matches
        /// the brute-force oracle.
        #[arg(long, value_name = "NORM")]
        deepen: Option<u64>,
        /// Print the synthesized semilinear set instead of the NFA.
        #[arg(long)]
        emit_semilinear: bool,
    },
    /// Parikh-equivalent NFA via the reversal-bounding pipeline.
    ParikhGeneral {
        file: PathBuf,
        #[command(flatten)]
        out: OutputOpt,
        /// Reversal budget (default 2K²+K for K states).
        #[arg(long)]
        reversals: Option<u64>,
        /// Refuse constructions beyond this many states.
        #[arg(long, default_value_t = 5_000_000)]
        state_budget: usize,
    },
    /// The hard extended OCA H_n.
    HardAutomaton {
        n: u64,
        #[command(flatten)]
        out: OutputOpt,
    },
    /// Decompose an r-reversal-bounded simple OCA into an RBA plus a
    /// regular substitution.
    FlattenRba {
        file: PathBuf,
        #[arg(short, long)]
        reversals: u64,
        #[command(flatten)]
        out: OutputOpt,
        /// Directory for the substitution images (written as NFA files next
        /// to a `.sub` index).
        #[arg(long)]
        sigma_dir: Option<PathBuf>,
    },
    /// Loop-counting normalization of an RBA.
    LoopCounting {
        file: PathBuf,
        #[command(flatten)]
        out: OutputOpt,
    },
    /// Reduce a loop-counting RBA onto the hard family H_{2m}.
    ReduceHard {
        file: PathBuf,
        /// Directory for the substitution images.
        #[arg(long)]
        sigma_dir: Option<PathBuf>,
    },
    /// Apply a substitution file to an NFA.
    ApplySubst {
        nfa: PathBuf,
        subst: PathBuf,
        #[command(flatten)]
        out: OutputOpt,
    },
    /// Check a construction against the brute-force oracle.
    Verify {
        /// exact, up, down or parikh.
        mode: String,
        file: PathBuf,
        /// Word length bound for exact/up/down.
        #[arg(long, default_value_t = 6)]
        max_len: usize,
        /// Parikh norm window for parikh mode.
        #[arg(long, default_value_t = 8)]
        norm: u64,
    },
    /// Size report for an automaton file.
    Stats { file: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<Oca> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    parse_oca(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(out: &OutputOpt, a: &Oca) -> Result<()> {
    let text = print_oca(a);
    match &out.output {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn write_sigma(dir: &Path, sigma: &Substitution) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut index = String::new();
    for letter in sigma.domain() {
        let img = sigma.get(letter).expect("domain letter");
        let file = format!("{}.nfa", letter.token());
        std::fs::write(dir.join(&file), print_oca(img))?;
        index.push_str(&format!("sub {} -> {}\n", letter.token(), file));
    }
    std::fs::write(dir.join("sigma.sub"), index)?;
    Ok(())
}

fn load_sigma(path: &Path) -> Result<Substitution> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut map = BTreeMap::new();
    for (token, rel) in parse_substitution_lines(&text)? {
        let letter = Letter::new(&token).map_err(|e| anyhow!("{e}"))?;
        let img = load(&base.join(rel))?;
        map.insert(letter, img);
    }
    Ok(Substitution::new(map)?)
}

fn rba_from_file(path: &Path) -> Result<Rba> {
    let oca = load(path)?;
    // Infer the order witness by topologically sorting the loop-free part.
    let mut indeg: BTreeMap<&StateId, usize> = oca.states().iter().map(|s| (s, 0)).collect();
    for t in oca.transitions() {
        if t.src != t.dst {
            *indeg.get_mut(&t.dst).unwrap() += 1;
        }
    }
    let mut order = Vec::new();
    let mut ready: Vec<&StateId> = indeg
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(s, _)| *s)
        .collect();
    ready.sort();
    while let Some(s) = ready.pop() {
        order.push(s.clone());
        for t in oca.transitions() {
            if t.src == *s && t.dst != *s {
                let d = indeg.get_mut(&t.dst).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(&t.dst);
                    ready.sort();
                }
            }
        }
    }
    Ok(Rba::new(oca, order)?)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Upward { file, out, trim } => {
            let a = load(&file)?;
            let mut nfa = upward_nfa_of(&a)?;
            if trim {
                nfa = nfa.trimmed();
            }
            emit(&out, &nfa)?;
        }
        Command::Downward { file, out, trim } => {
            let a = load(&file)?;
            let mut nfa = downward_nfa_of(&a)?;
            if trim {
                nfa = nfa.trimmed();
            }
            emit(&out, &nfa)?;
        }
        Command::ParikhFixed {
            file,
            out,
            s_len,
            dir_len,
            eff_max,
            deepen,
            emit_semilinear,
        } => {
            let a = load(&file)?;
            let a = match a.kind() {
                Kind::Extended => expand_extended(&a)?,
                _ => a,
            };
            let bounds = if let Some(window) = deepen {
                let (_, bounds) = parikh_nfa_fixed_deepened(&a, window)?;
                eprintln!(
                    "deepened to s_len={} dir_len={} eff_max={}",
                    bounds.s_len, bounds.dir_len, bounds.eff_max
                );
                bounds
            } else {
                let mut bounds = BoundConfig::defaults_for(&a);
                if let Some(v) = s_len {
                    bounds.s_len = v;
                }
                if let Some(v) = dir_len {
                    bounds.dir_len = v;
                }
                if let Some(v) = eff_max {
                    bounds.eff_max = v;
                }
                bounds
            };
            if emit_semilinear {
                let s = oca::parikh_fixed::construct_semilinear(&a, &bounds)?;
                let text = oca::semilinear::print_semilinear(&s);
                match &out.output {
                    Some(path) => std::fs::write(path, text)?,
                    None => print!("{text}"),
                }
            } else {
                let nfa = parikh_nfa_fixed(&a, &bounds)?;
                emit(&out, &nfa)?;
            }
        }
        Command::ParikhGeneral {
            file,
            out,
            reversals,
            state_budget,
        } => {
            let a = load(&file)?;
            let cfg = GeneralConfig {
                reversals,
                state_budget,
                ..GeneralConfig::default()
            };
            let nfa = parikh_nfa_general_with(&a, &cfg)?;
            emit(&out, &nfa)?;
        }
        Command::HardAutomaton { n, out } => {
            let h = hard_automaton(n)?;
            let (reported, literal) = hard_automaton_sizes(n);
            let mut text = format!(
                "# H_{n}: reported size {reported}, literal transition-charge size {literal}\n"
            );
            text.push_str(&print_oca(&h));
            match &out.output {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
        }
        Command::FlattenRba {
            file,
            reversals,
            out,
            sigma_dir,
        } => {
            let a = load(&file)?;
            let (rba, sigma) = flatten_to_rba(&a, reversals)?;
            emit(&out, rba.oca())?;
            if let Some(dir) = sigma_dir {
                write_sigma(&dir, &sigma)?;
            }
        }
        Command::LoopCounting { file, out } => {
            let rba = rba_from_file(&file)?;
            let (lc, k) = to_loop_counting(&rba)?;
            let (n_const, m_const, _) = loop_counting_constants(rba.oca().extended_size());
            let mut text = format!("# loop-counting: N={n_const} M={m_const} K={k}\n");
            text.push_str(&print_oca(lc.oca()));
            match &out.output {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
        }
        Command::ReduceHard { file, sigma_dir } => {
            let rba = rba_from_file(&file)?;
            let (m, sigma) = reduce_to_hard(&rba)?;
            println!("m {m}");
            println!("hard-automaton {}", 2 * m);
            println!("sigma-size {}", sigma.size());
            if let Some(dir) = sigma_dir {
                write_sigma(&dir, &sigma)?;
            }
        }
        Command::ApplySubst { nfa, subst, out } => {
            let n = load(&nfa)?;
            let sigma = load_sigma(&subst)?;
            let result = apply_substitution(&n, &sigma)?;
            emit(&out, &result)?;
        }
        Command::Verify {
            mode,
            file,
            max_len,
            norm,
        } => {
            let a = load(&file)?;
            return verify(&mode, &a, max_len, norm);
        }
        Command::Stats { file } => {
            let a = load(&file)?;
            println!("kind {}", a.kind());
            println!("states {}", a.state_count());
            println!("transitions {}", a.transitions().len());
            println!("alphabet {}", a.alphabet().len());
            println!("extended-size {}", a.extended_size());
            println!("epsilon {}", a.has_epsilon());
            println!("zero-tests {}", a.has_zero_test());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn all_words(a: &Oca, max_len: usize) -> Vec<Vec<Letter>> {
    let mut out: Vec<Vec<Letter>> = vec![Vec::new()];
    let mut layer: Vec<Vec<Letter>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for l in a.alphabet().letters() {
                let mut w2 = w.clone();
                w2.push(l.clone());
                next.push(w2);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn verify(mode: &str, a: &Oca, max_len: usize, norm: u64) -> Result<ExitCode> {
    if a.kind() != Kind::Simple {
        bail!("verify expects a simple OCA");
    }
    let mut mismatches = 0usize;
    let mut total = 0usize;
    match mode {
        "exact" => {
            // Two independent routes: bounded enumeration vs the
            // product-and-emptiness membership decider.
            let slack = a.state_count() * a.state_count() + 2;
            let enumerated = enumerate_language_mod_eps(a, max_len, slack)?;
            for w in all_words(a, max_len) {
                total += 1;
                let by_member = closure_member(a, &w, MemberMode::Exact)?;
                let by_enum = enumerated.contains(&w);
                if by_member != by_enum {
                    mismatches += 1;
                    println!("MISMATCH {}", render(&w));
                }
            }
        }
        "up" | "down" => {
            let (nfa, member_mode) = if mode == "up" {
                (upward_nfa_of(a)?, MemberMode::Up)
            } else {
                (downward_nfa_of(a)?, MemberMode::Down)
            };
            for w in all_words(a, max_len) {
                total += 1;
                let constructed = nfa_accepts(&nfa, &w)?;
                let oracle = closure_member(a, &w, member_mode)?;
                if constructed != oracle {
                    mismatches += 1;
                    println!("MISMATCH {} constructed={constructed} oracle={oracle}", render(&w));
                }
            }
        }
        "parikh" => {
            let (nfa, _) = parikh_nfa_fixed_deepened(a, norm)?;
            let got = nfa_parikh_up_to(&nfa, norm)?;
            let expect = enumerate_parikh(a, norm)?;
            for v in expect.union(&got) {
                total += 1;
                if expect.contains(v) != got.contains(v) {
                    mismatches += 1;
                    println!("MISMATCH {v}");
                }
            }
        }
        _ => bail!("unknown verify mode {mode:?} (exact|up|down|parikh)"),
    }
    if mismatches == 0 {
        println!("OK {total}/{total} agree");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("FAIL {}/{total} agree", total - mismatches);
        Ok(ExitCode::from(1))
    }
}

fn render(w: &[Letter]) -> String {
    if w.is_empty() {
        "eps".to_string()
    } else {
        w.iter().map(|l| l.token()).collect::<Vec<_>>().join(" ")
    }
}
