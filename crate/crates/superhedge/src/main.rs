//! Command-line front end: model validation, AIP verdicts, prices,
//! decompositions, model generation and the verification suites.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use superhedge::decomp::{decompose_claim, FlowSign};
use superhedge::error::{Error, Result};
use superhedge::ext::fmt_q;
use superhedge::gen::{generate, GenConfig, PriceMode, TauRegime};
use superhedge::model::Model;
use superhedge::pricing::{aip, backward_price, price_vulnerable, ClaimClass, ClaimKit, HorizonMarket, MarketModel, Verdict};
use superhedge::verify::{self, Plan, Suite};

#[derive(Parser)]
#[command(name = "superhedge", version, about = "Exact super-hedging on finite markets with a random horizon")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a model file and report its shape.
    Validate { model: PathBuf },
    /// AIP verdict per atom for one of the derived markets.
    Aip {
        model: PathBuf,
        #[arg(long = "model", value_enum, default_value_t = Market::Stopped)]
        market: Market,
    },
    /// Super-hedging prices of the model's claim.
    Price {
        model: PathBuf,
        /// Claim class; defaults to the class in the file.
        #[arg(long)]
        class: Option<ClaimClass>,
    },
    /// Labelled terms of the G-price dynamics.
    Decompose {
        model: PathBuf,
        #[arg(long)]
        class: Option<ClaimClass>,
        #[arg(long, value_enum, default_value_t = Sign::Derived)]
        sign: Sign,
    },
    /// Draw a random model.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "correlated")]
        regime: TauRegime,
        #[arg(long, default_value = "tilde_aip")]
        prices: PriceMode,
        /// Draw nonnegative claim processes.
        #[arg(long)]
        nonneg: bool,
        /// Write the model here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run verification suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: Suite,
        /// Generated models per check family; the standard plan when omitted.
        #[arg(long)]
        models: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Market {
    Stopped,
    Tilde,
    Bar,
    Base,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sign {
    Derived,
    AsPrinted,
}

/// What a command produced: its report and whether every assertion passed.
struct Outcome {
    text: String,
    passed: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(out) => {
            print!("{}", out.text);
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::ImmediateProfit { .. } | Error::Internal(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn execute(command: Command) -> Result<Outcome> {
    match command {
        Command::Validate { model } => validate(&model),
        Command::Aip { model, market } => aip_report(&model, market),
        Command::Price { model, class } => price(&model, class),
        Command::Decompose { model, class, sign } => decompose(&model, class, sign),
        Command::Gen { seed, regime, prices, nonneg, out } => {
            let mut config = GenConfig::new(seed, regime, prices);
            config.nonneg_claims = nonneg;
            let text = generate(&config)?.to_text();
            match out {
                Some(path) => {
                    std::fs::write(&path, &text)?;
                    Ok(Outcome { text: format!("wrote={}\n", path.display()), passed: true })
                }
                None => Ok(Outcome { text, passed: true }),
            }
        }
        Command::Verify { suite, models, seed } => {
            let plan = models.map_or_else(Plan::standard, Plan::uniform);
            let report = verify::run(suite, &plan, seed)?;
            Ok(Outcome { text: report.render(), passed: report.passed() })
        }
    }
}

fn line(out: &mut String, text: std::fmt::Arguments<'_>) {
    out.write_fmt(text).expect("writing to a string");
    out.push('\n');
}

fn vector(v: &[superhedge::ext::Q]) -> String {
    v.iter().map(fmt_q).collect::<Vec<_>>().join(",")
}

fn validate(path: &Path) -> Result<Outcome> {
    let model = Model::load(path)?;
    model.market()?;
    let mut out = String::new();
    let claim = model.claim.as_ref().map_or("none", |c| c.class.name());
    line(
        &mut out,
        format_args!(
            "status=valid outcomes={} horizon={} assets={} claim={claim}",
            model.space.outcomes(),
            model.space.horizon(),
            model.prices.dim()
        ),
    );
    Ok(Outcome { text: out, passed: true })
}

fn market_of(hm: &HorizonMarket, market: Market) -> (&'static str, MarketModel) {
    match market {
        Market::Stopped => ("stopped", hm.stopped()),
        Market::Tilde => ("tilde", hm.tilde()),
        Market::Bar => ("bar", hm.bar()),
        Market::Base => ("base", hm.base()),
    }
}

fn aip_report(path: &Path, market: Market) -> Result<Outcome> {
    let model = Model::load(path)?;
    let hm = model.market()?;
    let (name, m) = market_of(&hm, market);
    let report = aip(&m);
    let mut out = String::new();
    for atom in report.atoms.iter().flatten() {
        let block = model.space.block_name(m.filtration[atom.time].block(atom.block));
        let detail = match &atom.verdict {
            Verdict::Holds { weights } => format!("verdict=holds weights={}", vector(weights)),
            Verdict::Violated { separator } => format!("verdict=violated certificate={}", vector(separator)),
            Verdict::Null => "verdict=null".into(),
        };
        line(&mut out, format_args!("aip model={name} t={} atom={block} {detail}", atom.time));
    }
    line(&mut out, format_args!("aip model={name} holds={}", report.holds()));
    Ok(Outcome { text: out, passed: true })
}

fn claim_kit(model: &Model, hm: &HorizonMarket, class: Option<ClaimClass>) -> Result<ClaimKit> {
    let kit = model.kit(hm).ok_or_else(|| Error::Invalid("the model file has no claim section".into()))??;
    Ok(class.map_or_else(|| kit.clone(), |c| kit.with_class(c)))
}

fn price(path: &Path, class: Option<ClaimClass>) -> Result<Outcome> {
    let model = Model::load(path)?;
    let hm = model.market()?;
    let kit = claim_kit(&model, &hm, class)?;
    let name = kit.class.name();
    let mut out = String::new();
    let stopped = hm.stopped();
    let report = backward_price(&stopped, &kit.payoff(&hm, hm.horizon()).to_ext())?;
    for t in 0..=hm.horizon() {
        let part = &stopped.filtration[t];
        for b in 0..part.len() {
            let block = part.block(b);
            let value = report.prices[t].get(block[0]).map_or_else(|| "undef".into(), |v| v.to_string());
            let atom = model.space.block_name(block);
            let theta = report
                .steps
                .get(t)
                .and_then(|s| s[b].theta.as_ref())
                .map_or_else(String::new, |th| format!(" theta={}", vector(th)));
            line(&mut out, format_args!("price class={name} t={t} atom={atom} value={value}{theta}"));
        }
    }
    match report.aip.first_violation() {
        None => {
            let vp = price_vulnerable(&hm, &kit)?;
            for t in 0..=hm.horizon() {
                let part = hm.space.at(t);
                for b in 0..part.len() {
                    let block = part.block(b);
                    let value = fmt_q(&vp.f_process.at(t).0[block[0]]);
                    line(&mut out, format_args!("reduced class={name} t={t} atom={} value={value}", model.space.block_name(block)));
                }
            }
            line(&mut out, format_args!("price class={name} aip=holds"));
        }
        Some(v) => {
            let block = model.space.block_name(stopped.filtration[v.time].block(v.block));
            line(&mut out, format_args!("price class={name} aip=violated t={} atom={block}", v.time));
        }
    }
    Ok(Outcome { text: out, passed: true })
}

fn decompose(path: &Path, class: Option<ClaimClass>, sign: Sign) -> Result<Outcome> {
    let model = Model::load(path)?;
    let hm = model.market()?;
    let kit = claim_kit(&model, &hm, class)?;
    let sign = match sign {
        Sign::Derived => FlowSign::Derived,
        Sign::AsPrinted => FlowSign::AsPrinted,
    };
    let (pricing, report) = decompose_claim(&hm, &kit, sign)?;
    let total = report.total();
    let form = pricing.g_form(&hm);
    let mut out = String::new();
    let name = kit.class.name();
    let ids = model.space.ids();
    for t in 0..=hm.horizon() {
        for (w, id) in ids.iter().enumerate() {
            let mut row = format!("decompose class={name} t={t} outcome={id}");
            for (term, p) in report.terms() {
                write!(row, " {term}={}", fmt_q(&p.at(t).0[w])).expect("writing to a string");
            }
            write!(row, " total={} price={}", fmt_q(&total.at(t).0[w]), fmt_q(&form.at(t).0[w])).expect("writing to a string");
            line(&mut out, format_args!("{row}"));
        }
    }
    let telescopes = total == form;
    line(&mut out, format_args!("decompose class={name} telescoping={}", if telescopes { "exact" } else { "broken" }));
    Ok(Outcome { text: out, passed: telescopes })
}
