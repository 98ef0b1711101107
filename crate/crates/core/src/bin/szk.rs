use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use szk::core::SzmielewDescription;
use szk::dsl::{parse_formula, parse_group, render_formula, render_group};
use szk::normalize::{invariants, is_equivalent, normalize};
use szk::oracle::{breadth_search, default_bound, verify_inp};
use szk::ppeval::{eval_formula, eval_all, index_class, profile_stats};
use szk::rank::{classify, dp_rank, seed_witnesses, vc_density, Dp};
use szk::shatter::{coset_family, shatter_csv, shatter_function, vc_dim, FinAbGroup};
use szk::PPFormula;

#[derive(Parser)]
#[command(name = "szk", version, about = "dp-rank of abelian groups from Szmielew invariants")]
struct Cli {
    /// Print JSON instead of a table.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Strict normal form.
    Normalize { group: String },
    /// Whether two groups are elementarily equivalent.
    Equiv { a: String, b: String },
    /// Ulm and limit invariants.
    Invariants { group: String },
    /// Closed-form dp-rank.
    Rank { group: String },
    /// Strongness, finite dp-rank, dp-minimality.
    Classify { group: String },
    /// vc-density for arities 1..=m.
    Vc {
        group: String,
        #[arg(long, default_value_t = 1)]
        m: u32,
    },
    /// Subgroup defined by a formula.
    Eval { group: String, formula: String },
    /// Index [φ(G) : φ(G) ∩ ψ(G)].
    Index {
        group: String,
        phi: String,
        psi: String,
    },
    /// Named witness families, each checked by the index test.
    Witness { group: String },
    /// Deepest family in the candidate pool.
    Breadth {
        group: String,
        #[arg(long)]
        pool_bound: Option<u32>,
        #[arg(long, default_value_t = 8)]
        max_depth: usize,
    },
    /// Shatter function of coset families in Z(m1) + ... + Z(mk).
    Shatter {
        #[arg(long, value_delimiter = ',', required = true)]
        orders: Vec<u64>,
        #[arg(long, value_delimiter = ';', required = true)]
        formulas: Vec<String>,
        #[arg(long, default_value_t = 4)]
        n: usize,
    },
    /// Closed form against the oracle on a random corpus.
    Fuzz {
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

enum Failure {
    Input(String),
    Internal(String),
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.to_string())
    }
}

fn internal(e: impl std::fmt::Display) -> Failure {
    Failure::Internal(e.to_string())
}

fn group(text: &str) -> Result<SzmielewDescription, Failure> {
    parse_group(text).map_err(|e| Failure::Input(format!("{text:?}: {e}")))
}

fn formula(text: &str) -> Result<PPFormula, Failure> {
    parse_formula(text).map_err(|e| Failure::Input(format!("{text:?}: {e}")))
}

fn table(rows: &[(&str, String)]) -> String {
    let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter()
        .map(|(k, v)| format!("{k:<w$}  {v}\n"))
        .collect()
}

fn dp_text(dp: Dp) -> String {
    match dp {
        Dp::Finite(k) => k.to_string(),
        Dp::Infinite { .. } => "inf".into(),
    }
}

fn formulas_text(fs: &[PPFormula]) -> String {
    let v: Vec<String> = fs.iter().map(render_formula).collect();
    format!("{{{}}}", v.join(", "))
}

fn emit(json: bool, value: &impl Serialize, text: String) -> String {
    if json {
        serde_json::to_string_pretty(value).expect("serializable") + "\n"
    } else {
        text
    }
}

fn run(cli: Cli) -> Result<String, Failure> {
    let j = cli.json;
    Ok(match cli.cmd {
        Cmd::Normalize { group: g } => {
            let n = render_group(&normalize(&group(&g)?));
            emit(j, &json!({ "normalized": n }), n.clone() + "\n")
        }
        Cmd::Equiv { a, b } => {
            let (da, db) = (group(&a)?, group(&b)?);
            let eq = is_equivalent(&da, &db);
            let v = json!({
                "equivalent": eq,
                "normal_forms": [render_group(&normalize(&da)), render_group(&normalize(&db))],
            });
            let text = if eq { "equivalent\n" } else { "not equivalent\n" };
            emit(j, &v, text.into())
        }
        Cmd::Invariants { group: g } => {
            let r = invariants(&group(&g)?);
            let mut rows = vec![
                ("bounded exponent", r.bounded_exponent.to_string()),
                ("finite", r.finite_group.to_string()),
            ];
            let per: Vec<(String, String)> = r
                .primes
                .iter()
                .map(|(p, inv)| {
                    let mut parts: Vec<String> =
                        inv.ulm.iter().map(|(n, v)| format!("U({n})={v}")).collect();
                    if let Some((s, v)) = &inv.ulm_tail {
                        parts.push(format!("U(n>={s})={v}"));
                    }
                    parts.push(format!("D={}", inv.d_lim));
                    parts.push(format!("Tf={}", inv.tf_lim));
                    (format!("p={p}"), parts.join(" "))
                })
                .collect();
            for (k, v) in &per {
                rows.push((k.as_str(), v.clone()));
            }
            emit(j, &r, table(&rows))
        }
        Cmd::Rank { group: g } => {
            let r = dp_rank(&group(&g)?).map_err(internal)?;
            let case = serde_json::to_value(r.case).expect("serializable");
            let rows = [
                ("dp", dp_text(r.dp)),
                ("strong", r.strong.to_string()),
                ("case", case.to_string().trim_matches('"').to_string()),
                (
                    "epsilons",
                    format!(
                        "U={} Exp={} Tf={} D={}",
                        r.epsilons.u, r.epsilons.exp, r.epsilons.tf, r.epsilons.d
                    ),
                ),
                (
                    "witness",
                    r.witness.as_deref().map_or("-".into(), formulas_text),
                ),
            ];
            emit(j, &r, table(&rows))
        }
        Cmd::Classify { group: g } => {
            let c = classify(&group(&g)?).map_err(internal)?;
            let rows = [
                ("strong", c.strong.to_string()),
                ("finite_dp", c.finite_dp.to_string()),
                ("dp_minimal", c.dp_minimal.to_string()),
            ];
            emit(j, &c, table(&rows))
        }
        Cmd::Vc { group: g, m } => {
            let ms: Vec<u32> = (1..=m).collect();
            let r = vc_density(&group(&g)?, &ms)?;
            let rows: Vec<(String, String)> = r
                .values
                .iter()
                .map(|(m, v)| (format!("vc({m})"), dp_text(*v)))
                .collect();
            let rows: Vec<(&str, String)> = rows.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
            emit(j, &r, table(&rows))
        }
        Cmd::Eval { group: g, formula: f } => {
            let h = eval_formula(&group(&g)?, &formula(&f)?);
            let (order, exp) = profile_stats(&h);
            let rows = [
                ("order", order.to_string()),
                ("exponent", exp.map_or("unbounded".into(), |e| e.to_string())),
            ];
            emit(j, &h, table(&rows))
        }
        Cmd::Index { group: g, phi, psi } => {
            let d = group(&g)?;
            let hs = eval_all(&d, &[formula(&phi)?, formula(&psi)?]);
            let i = index_class(&hs[0], &hs[1]).map_err(internal)?;
            emit(j, &json!({ "index": i }), format!("{i}\n"))
        }
        Cmd::Witness { group: g } => {
            let d = group(&g)?;
            let mut out = Vec::new();
            let mut text = String::new();
            for w in seed_witnesses(&d) {
                let v = verify_inp(&d, &w.formulas)?;
                text += &format!(
                    "{:<26} {:<4} {:<5} {}\n",
                    w.source,
                    w.certifies,
                    if v.valid { "ok" } else { "FAIL" },
                    formulas_text(&w.formulas)
                );
                out.push(json!({
                    "source": w.source,
                    "formulas": w.formulas,
                    "certifies": w.certifies,
                    "valid": v.valid,
                    "transcript": v.transcript,
                }));
            }
            emit(j, &out, text)
        }
        Cmd::Breadth {
            group: g,
            pool_bound,
            max_depth,
        } => {
            let d = group(&g)?;
            let b = pool_bound.unwrap_or_else(|| default_bound(&d));
            let r = breadth_search(&d, b, max_depth)?;
            let transcript = if r.witness.is_empty() {
                None
            } else {
                let v = verify_inp(&d, &r.witness)?;
                if !v.valid {
                    return Err(Failure::Internal("breadth witness fails the index test".into()));
                }
                Some(v)
            };
            let rows = [
                ("depth", r.depth.to_string()),
                ("witness", formulas_text(&r.witness)),
                ("pool bound", r.pool_bound.to_string()),
                ("pool size", r.pool_size.to_string()),
                ("exhausted", r.exhausted.to_string()),
            ];
            emit(j, &json!({ "result": r, "transcript": transcript }), table(&rows))
        }
        Cmd::Shatter {
            orders,
            formulas,
            n,
        } => {
            let g = FinAbGroup::new(orders)?;
            let fs = formulas.iter().map(|f| formula(f)).collect::<Result<Vec<_>, _>>()?;
            let fam = coset_family(&g, &fs);
            if j {
                let rows = (0..=n)
                    .map(|k| {
                        Ok(json!({ "n": k, "pi": shatter_function(&fam, k)?, "two_pow_n": 1u64 << k }))
                    })
                    .collect::<Result<Vec<_>, szk::shatter::ShatterError>>()?;
                let v = json!({
                    "order": g.order(),
                    "sets": fam.sets.len(),
                    "vc_dim": vc_dim(&fam)?,
                    "rows": rows,
                });
                emit(true, &v, String::new())
            } else {
                shatter_csv(&fam, n)?
            }
        }
        Cmd::Fuzz { count, seed, jobs } => {
            let r = szk::corpus::fuzz(count, seed, jobs).map_err(|e| match e {
                szk::corpus::FuzzError::Internal(e) => internal(e),
                e => Failure::Input(e.to_string()),
            })?;
            if r.disagreements > 0 {
                let bad: Vec<&str> = r
                    .cases
                    .iter()
                    .filter(|c| !c.agree)
                    .map(|c| c.group.as_str())
                    .collect();
                return Err(Failure::Internal(format!(
                    "{} disagreements: {}",
                    r.disagreements,
                    bad.join("; ")
                )));
            }
            let rows = [
                ("seed", r.seed.to_string()),
                ("count", r.count.to_string()),
                ("disagreements", r.disagreements.to_string()),
            ];
            emit(j, &r, table(&rows))
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}
