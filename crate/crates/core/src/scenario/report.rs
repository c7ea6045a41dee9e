//! Output files for a run: per-round and cross-round tables, vote lattice,
//! tidy metrics, IRV traces, sentiment, regression, and a markdown report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{replay, RoundResult, ScenarioError, ScenarioRun, ScenarioSummary};
use crate::catalog::{City, Lever};
use crate::regression::{run_lever_regressions, significance_stars, CommunityCovariates, LeverRegressions};
use crate::sentiment::{score_text, sentiment_delta, Lexicon, SentimentScore};
use crate::voting::{Ballot, VotingRule, MAX_RANKS};

#[derive(Clone, Debug, Default)]
pub struct RunMeta {
    pub model: String,
    pub city: Option<City>,
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

fn opt6(x: Option<f64>) -> String {
    x.map(f6).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, ScenarioError> {
    csv::Writer::from_path(path).map_err(|e| csv_err(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> ScenarioError {
    ScenarioError::io(path, std::io::Error::other(e.to_string()))
}

fn write_rows(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), ScenarioError> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| ScenarioError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), ScenarioError> {
    std::fs::write(path, text).map_err(|e| ScenarioError::io(path, e))
}

/// Writes rounds.csv, summary.csv, lattice.csv, metrics.csv, irv_rounds.csv
/// (ranked only), sentiment.csv and report.md.
pub fn write_outputs(dir: &Path, run: &ScenarioRun, meta: &RunMeta) -> Result<(), ScenarioError> {
    write_rows(&dir.join("rounds.csv"), ROUND_HEADER, round_rows(&run.rounds))?;
    write_rows(&dir.join("summary.csv"), SUMMARY_HEADER, vec![summary_row(&run.summary, &meta.model)])?;
    write_rows(&dir.join("lattice.csv"), &["policy", "rank", "count"], lattice_rows(&run.summary))?;
    write_rows(&dir.join("metrics.csv"), &["round", "metric", "lever", "rank", "value"], metric_rows(run))?;
    if run.summary.rule == VotingRule::Ranked {
        write_rows(
            &dir.join("irv_rounds.csv"),
            &["round", "stage", "policy", "votes", "eliminated", "active_ballots"],
            irv_rows(&run.rounds),
        )?;
    }
    write_rows(
        &dir.join("sentiment.csv"),
        &["scenario", "round", "agent_id", "community", "compound", "pos", "neg", "neu"],
        sentiment_rows(&run.summary.scenario, &run.rounds),
    )?;
    write_text(&dir.join("report.md"), &markdown_report(run, meta))
}

const ROUND_HEADER: &[&str] = &[
    "round",
    "status",
    "ballots",
    "abstentions",
    "winner",
    "winner_tax",
    "winner_fare",
    "winner_fee",
    "tied",
    "mean_tax",
    "mean_fare",
    "mean_fee",
    "entropy",
    "entropy_tax",
    "entropy_fare",
    "entropy_fee",
];

fn round_rows(rounds: &[RoundResult]) -> Vec<Vec<String>> {
    rounds
        .iter()
        .map(|r| {
            let mut row = vec![
                r.round.to_string(),
                if r.failed { "failed" } else { "ok" }.to_string(),
                r.ballots.len().to_string(),
                r.abstentions.len().to_string(),
                r.winner.map(|w| w.get().to_string()).unwrap_or_default(),
            ];
            row.extend(Lever::ALL.map(|l| r.winner.map(|w| w.lever_value(l).to_string()).unwrap_or_default()));
            row.push(r.tied.to_string());
            row.extend(Lever::ALL.map(|l| opt6(r.mean_listed.map(|m| m.lever(l)))));
            row.push(opt6(r.entropy.as_ref().map(|e| e.policy_entropy)));
            row.extend(Lever::ALL.map(|l| opt6(r.entropy.as_ref().map(|e| e.lever_entropy[&l]))));
            row
        })
        .collect()
}

const SUMMARY_HEADER: &[&str] = &[
    "scenario",
    "model",
    "rule",
    "rounds",
    "completed_rounds",
    "coverage",
    "winners",
    "entropy",
    "tax_mean",
    "tax_entropy",
    "fare_mean",
    "fare_entropy",
    "fee_mean",
    "fee_entropy",
];

/// `P10 (8), P11 (2)`: most wins first, then by id.
pub fn winner_label(summary: &ScenarioSummary) -> String {
    let mut counts: Vec<_> = summary.winner_counts.iter().collect();
    counts.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
    counts.iter().map(|(id, n)| format!("P{} ({n})", id.get())).collect::<Vec<_>>().join(", ")
}

/// Lever entropy shown beside each mean: rank-1 conditioned for ranked
/// ballots, unconditioned for approvals.
pub fn summary_lever_entropy(summary: &ScenarioSummary, lever: Lever) -> Option<f64> {
    let e = summary.entropy.as_ref()?;
    match summary.rule {
        VotingRule::Ranked => e.by_rank(lever, 1),
        _ => e.lever_entropy.get(&lever).copied(),
    }
}

fn summary_row(s: &ScenarioSummary, model: &str) -> Vec<String> {
    let mut row = vec![
        s.scenario.clone(),
        model.to_string(),
        s.rule.name().to_string(),
        s.rounds.to_string(),
        (s.rounds as usize - s.failed_rounds.len()).to_string(),
        f6(s.coverage),
        winner_label(s),
        opt6(s.entropy.as_ref().map(|e| e.policy_entropy)),
    ];
    for lever in Lever::ALL {
        row.push(opt6(s.mean_policy.map(|m| m.lever(lever))));
        row.push(opt6(summary_lever_entropy(s, lever)));
    }
    row
}

fn lattice_rows(s: &ScenarioSummary) -> Vec<Vec<String>> {
    s.lattice.iter().map(|c| vec![c.policy.get().to_string(), c.rank.to_string(), c.count.to_string()]).collect()
}

fn metric_rows(run: &ScenarioRun) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    let mut push = |round: &str, metric: &str, lever: Option<Lever>, rank: Option<usize>, value: f64| {
        rows.push(vec![
            round.to_string(),
            metric.to_string(),
            lever.map(|l| l.name().to_string()).unwrap_or_default(),
            rank.map(|r| r.to_string()).unwrap_or_default(),
            f6(value),
        ]);
    };
    for r in run.rounds.iter().filter(|r| !r.failed) {
        let round = r.round.to_string();
        if let Some(e) = &r.entropy {
            push(&round, "policy_entropy", None, None, e.policy_entropy);
            for lever in Lever::ALL {
                push(&round, "lever_entropy", Some(lever), None, e.lever_entropy[&lever]);
                for rank in 1..=MAX_RANKS {
                    if let Some(v) = e.by_rank(lever, rank) {
                        push(&round, "lever_entropy_by_rank", Some(lever), Some(rank), v);
                    }
                }
            }
        }
        for lever in Lever::ALL {
            if let Some(m) = r.mean_listed {
                push(&round, "mean_listed", Some(lever), None, m.lever(lever));
            }
            for (i, m) in r.mean_by_rank.iter().flatten().enumerate() {
                if let Some(m) = m {
                    push(&round, "mean_by_rank", Some(lever), Some(i + 1), m.lever(lever));
                }
            }
        }
    }
    if let Some(e) = &run.summary.entropy {
        push("mean", "policy_entropy", None, None, e.policy_entropy);
        for lever in Lever::ALL {
            push("mean", "lever_entropy", Some(lever), None, e.lever_entropy[&lever]);
            for rank in 1..=MAX_RANKS {
                if let Some(v) = e.by_rank(lever, rank) {
                    push("mean", "lever_entropy_by_rank", Some(lever), Some(rank), v);
                }
            }
        }
    }
    rows
}

fn irv_rows(rounds: &[RoundResult]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for r in rounds {
        let Some(log) = &r.irv_log else { continue };
        for (stage, st) in log.rounds.iter().enumerate() {
            for (id, votes) in &st.tally {
                rows.push(vec![
                    r.round.to_string(),
                    (stage + 1).to_string(),
                    id.get().to_string(),
                    votes.to_string(),
                    st.eliminated.contains(id).to_string(),
                    st.active_ballots.to_string(),
                ]);
            }
        }
    }
    rows
}

/// Rationale sentiment of each parsed vote, scored on the four sections
/// joined together.
pub fn vote_sentiment(rounds: &[RoundResult]) -> Vec<(u32, u32, String, SentimentScore)> {
    let lexicon = Lexicon::bundled();
    rounds
        .iter()
        .flat_map(|r| {
            r.parsed.iter().map(move |(agent, vote)| {
                (r.round, *agent, vote.community.clone(), score_text(lexicon, &vote.rationale.joined()))
            })
        })
        .collect()
}

/// Mean compound score per agent over all rounds it voted in.
pub fn community_sentiment(rounds: &[RoundResult]) -> BTreeMap<u32, f64> {
    let mut acc: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    for (_, agent, _, s) in vote_sentiment(rounds) {
        let e = acc.entry(agent).or_default();
        e.0 += s.compound;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (sum, n))| (k, sum / n as f64)).collect()
}

fn sentiment_rows(scenario: &str, rounds: &[RoundResult]) -> Vec<Vec<String>> {
    vote_sentiment(rounds)
        .into_iter()
        .map(|(round, agent, community, s)| {
            vec![
                scenario.to_string(),
                round.to_string(),
                agent.to_string(),
                community,
                f6(s.compound),
                f6(s.pos),
                f6(s.neg),
                f6(s.neu),
            ]
        })
        .collect()
}

/// Per-community sentiment difference, `treated - baseline`.
pub fn write_sentiment_delta(path: &Path, treated: &ScenarioRun, baseline: &ScenarioRun) -> Result<(), ScenarioError> {
    let a = community_sentiment(&treated.rounds);
    let b = community_sentiment(&baseline.rounds);
    let delta = sentiment_delta(&a, &b).map_err(|e| ScenarioError::Data(e.to_string()))?;
    let rows = delta.iter().map(|(id, d)| vec![id.to_string(), f6(a[id]), f6(b[id]), f6(*d)]).collect();
    write_rows(path, &["community_id", "treated", "baseline", "delta"], rows)
}

/// Ballots of each completed round, for Borda scoring.
pub fn completed_ballots(run: &ScenarioRun) -> Vec<Vec<Ballot>> {
    run.rounds.iter().filter(|r| !r.failed).map(|r| r.ballots.clone()).collect()
}

pub fn write_regression_from_files(
    dir: &Path,
    treated: &ScenarioRun,
    baseline_transcripts: &Path,
    covariate_file: &Path,
) -> Result<LeverRegressions, ScenarioError> {
    let baseline = replay(baseline_transcripts, treated.summary.rule)?;
    let covariates = CommunityCovariates::load(covariate_file).map_err(|e| ScenarioError::Data(e.to_string()))?;
    let fits = run_lever_regressions(&completed_ballots(treated), &completed_ballots(&baseline), &covariates)
        .map_err(|e| ScenarioError::Data(e.to_string()))?;
    write_regression(dir, &fits)?;
    Ok(fits)
}

/// regression.csv (terms by lever, starred), regression_detail.csv (full
/// coefficient statistics) and vif.csv.
pub fn write_regression(dir: &Path, fits: &LeverRegressions) -> Result<(), ScenarioError> {
    let mut header = vec!["term"];
    header.extend(fits.fits.keys().map(|l| l.name()));
    let terms = fits.fits.values().next().map(|f| f.terms.clone()).unwrap_or_default();
    let mut rows: Vec<Vec<String>> = terms
        .iter()
        .enumerate()
        .map(|(i, term)| {
            let mut row = vec![term.clone()];
            row.extend(
                fits.fits
                    .values()
                    .map(|f| format!("{:.3}{}", f.coefficients[i], significance_stars(f.p_values[i]))),
            );
            row
        })
        .collect();
    let stat = |name: &str, cell: &dyn Fn(&crate::regression::FitResult) -> String| {
        let mut row = vec![name.to_string()];
        row.extend(fits.fits.values().map(cell));
        row
    };
    rows.push(stat("R2", &|f| format!("{:.3}", f.r2)));
    rows.push(stat("adj_R2", &|f| format!("{:.3}", f.adj_r2)));
    rows.push(stat("F", &|f| match (f.f_statistic, f.f_pvalue) {
        (Some(s), Some(p)) => format!("{s:.2}{}", significance_stars(p)),
        _ => String::new(),
    }));
    rows.push(stat("AIC", &|f| format!("{:.1}", f.aic)));
    rows.push(stat("n", &|f| f.n_obs.to_string()));
    write_rows(&dir.join("regression.csv"), &header, rows)?;

    let detail = fits
        .fits
        .iter()
        .flat_map(|(lever, f)| {
            (0..f.terms.len()).map(move |i| {
                vec![
                    lever.name().to_string(),
                    f.terms[i].clone(),
                    f6(f.coefficients[i]),
                    f6(f.std_errors[i]),
                    f6(f.t_values[i]),
                    f6(f.p_values[i]),
                    significance_stars(f.p_values[i]).to_string(),
                ]
            })
        })
        .collect();
    write_rows(
        &dir.join("regression_detail.csv"),
        &["lever", "term", "estimate", "std_error", "t_value", "p_value", "stars"],
        detail,
    )?;
    if let Some(v) = &fits.vif {
        let rows = v.names.iter().zip(&v.values).map(|(n, x)| vec![n.clone(), f6(*x)]).collect();
        write_rows(&dir.join("vif.csv"), &["covariate", "vif"], rows)?;
    }
    write_text(&dir.join("regression.md"), &regression_markdown(fits))
}

fn fmt3(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into())
}

pub fn markdown_report(run: &ScenarioRun, meta: &RunMeta) -> String {
    let s = &run.summary;
    let mut out = String::new();
    let _ = writeln!(out, "# {}\n", s.scenario);
    let _ = writeln!(
        out,
        "Model `{}`, rule `{}`, {} agents, {} rounds ({} failed), ballot coverage {:.1}%.\n",
        meta.model,
        s.rule.name(),
        s.agents,
        s.rounds,
        s.failed_rounds.len(),
        100.0 * s.coverage
    );

    let _ = writeln!(out, "## Per round\n");
    let _ = writeln!(out, "| Round | Winner | t | r | τ | mean t | mean r | mean τ | E |");
    let _ = writeln!(out, "|---|---|---|---|---|---|---|---|---|");
    for r in &run.rounds {
        let winner = match (r.failed, r.winner) {
            (true, _) => "failed".to_string(),
            (false, Some(w)) => format!("{}{}", w.get(), if r.tied { " (tie)" } else { "" }),
            (false, None) => "-".into(),
        };
        let lever = |l: Lever| fmt3(r.winner.map(|w| w.lever_value(l)));
        let mean = |l: Lever| fmt3(r.mean_listed.map(|m| m.lever(l)));
        let _ = writeln!(
            out,
            "| {} | {winner} | {} | {} | {} | {} | {} | {} | {} |",
            r.round,
            lever(Lever::Tax),
            lever(Lever::Fare),
            lever(Lever::Fee),
            mean(Lever::Tax),
            mean(Lever::Fare),
            mean(Lever::Fee),
            fmt3(r.entropy.as_ref().map(|e| e.policy_entropy)),
        );
    }

    let _ = writeln!(out, "\n## Across rounds\n");
    let (sub, cond) = if s.rule == VotingRule::Ranked { ("₁", "|1") } else { ("", "") };
    let _ = writeln!(
        out,
        "| Scenario | Winner (counts) | Ē | t̄{sub} (ē_t{cond}) | r̄{sub} (ē_r{cond}) | τ̄{sub} (ē_τ{cond}) |"
    );
    let _ = writeln!(out, "|---|---|---|---|---|---|");
    let cell = |l: Lever| {
        format!("{} ({})", fmt3(s.mean_policy.map(|m| m.lever(l))), summary_lever_entropy(s, l).map_or("-".into(), |e| format!("{e:.2}")))
    };
    let _ = writeln!(
        out,
        "| {} | {} | {} | {} | {} | {} |",
        s.scenario,
        winner_label(s),
        fmt3(s.entropy.as_ref().map(|e| e.policy_entropy)),
        cell(Lever::Tax),
        cell(Lever::Fare),
        cell(Lever::Fee),
    );

    let _ = writeln!(out, "\n## Most frequent (policy, rank) cells\n");
    let mut cells = s.lattice.clone();
    cells.sort_by(|a, b| b.count.cmp(&a.count).then(a.policy.cmp(&b.policy)).then(a.rank.cmp(&b.rank)));
    let _ = writeln!(out, "| Policy | Rank | Votes |\n|---|---|---|");
    for c in cells.iter().take(10) {
        let rank = if c.rank == 0 { "approved".to_string() } else { c.rank.to_string() };
        let _ = writeln!(out, "| {} | {rank} | {} |", c.policy.get(), c.count);
    }

    let sentiment = community_sentiment(&run.rounds);
    if !sentiment.is_empty() {
        let values: Vec<f64> = sentiment.values().copied().collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(out, "\n## Rationale sentiment\n");
        let _ = writeln!(
            out,
            "Mean compound score per community: average {mean:.3}, lowest {min:.3}, highest {max:.3} over {} communities.",
            values.len()
        );
    }

    out.push_str(&reference_footer(meta.city));
    out
}

fn reference_footer(city: Option<City>) -> String {
    let mut out = String::from(
        "\n---\n\nPublished reference values, for side-by-side comparison only. \
         They come from live GPT-4o and Claude-3.5 runs and are not expected to match.\n\n",
    );
    if city != Some(City::Houston) {
        out.push_str(
            "Chicago, single round, GPT-4o:\n\n\
             | Rule | Winner | t | r | τ | mean t | mean r | mean τ | E |\n\
             |---|---|---|---|---|---|---|---|---|\n\
             | ranked | 10 | 1.000 | 0.750 | 0.500 | 0.833 | 0.917 | 0.750 | 2.739 |\n\
             | approve5 | 10 | 1.000 | 0.750 | 0.500 | 1.077 | 1.096 | 0.731 | 2.928 |\n\
             | approve_all | 10 | 1.000 | 0.750 | 0.500 | 0.978 | 1.185 | 0.587 | 3.565 |\n\n",
        );
    }
    out.push_str(
        "Ten ranked rounds:\n\n\
         | Model | Scenario | Winner (counts) | Ē | t̄₁ (ē_t|1) | r̄₁ (ē_r|1) | τ̄₁ (ē_τ|1) |\n\
         |---|---|---|---|---|---|---|\n\
         | GPT-4o | CHI-com | P10 (10) | 2.739 | 0.983 (0.21) | 0.782 (0.34) | 0.511 (0.15) |\n\
         | GPT-4o | CHI-know | P10 (8), P11 (2) | 2.804 | 0.999 (0.02) | 0.772 (0.25) | 0.721 (0.98) |\n\
         | GPT-4o | CHI-avg | P10 (8), P11 (2) | 2.611 | 1.000 (0.00) | 0.750 (0.00) | 0.600 (0.72) |\n\
         | Claude-3.5 | CHI-com | P1 (6), P10 (4) | 4.022 | 0.802 (1.29) | 0.951 (1.08) | 0.546 (1.52) |\n\
         | Claude-3.5 | CHI-know | P1 (8), P4 (2) | 3.902 | 0.782 (1.34) | 0.986 (1.04) | 0.579 (1.28) |\n\
         | GPT-4o | HOU-com | P2 (10) | 3.583 | 0.635 (0.92) | 0.785 (0.29) | 0.895 (0.74) |\n",
    );
    out
}

pub fn regression_markdown(fits: &LeverRegressions) -> String {
    let mut out = String::from("# Lever regressions\n\n");
    let levers: Vec<Lever> = fits.fits.keys().copied().collect();
    let _ = writeln!(out, "| Term | {} |", levers.iter().map(|l| l.name()).collect::<Vec<_>>().join(" | "));
    let _ = writeln!(out, "|---|{}", "---|".repeat(levers.len()));
    let terms = fits.fits.values().next().map(|f| f.terms.clone()).unwrap_or_default();
    for (i, term) in terms.iter().enumerate() {
        let cells: Vec<String> = fits
            .fits
            .values()
            .map(|f| format!("{:.3}{}", f.coefficients[i], significance_stars(f.p_values[i])))
            .collect();
        let _ = writeln!(out, "| {term} | {} |", cells.join(" | "));
    }
    let row = |name: &str, f: &dyn Fn(&crate::regression::FitResult) -> String| {
        format!("| {name} | {} |\n", fits.fits.values().map(f).collect::<Vec<_>>().join(" | "))
    };
    out.push_str(&row("R²", &|f| format!("{:.3}", f.r2)));
    out.push_str(&row("Adj. R²", &|f| format!("{:.3}", f.adj_r2)));
    out.push_str(&row("F", &|f| match (f.f_statistic, f.f_pvalue) {
        (Some(s), Some(p)) => format!("{s:.2}{}", significance_stars(p)),
        _ => "-".into(),
    }));
    out.push_str(&row("AIC", &|f| format!("{:.1}", f.aic)));
    out.push_str("\nSignificance: † p < 0.1, * p < 0.05, ** p < 0.01, *** p < 0.001.\n");
    out.push_str(
        "\n---\n\nPublished reference values (GPT-4o, Chicago, knowledge-augmented vs community agents), \
         for comparison only:\n\n\
         | Term | tax | fare | fee |\n|---|---|---|---|\n\
         | const | 1.123*** | 0.968*** | 0.535*** |\n\
         | non_white | 0.004 | 0.005 | -0.003 |\n\
         | car_no | -0.009 | 0.008 | 0.024** |\n\
         | tvl_transit | 0.010† | -0.002 | -0.008 |\n\
         | income_less_25k | -0.033*** | -0.013† | -0.008 |\n\
         | income_150k_plus | -0.013 | 0.021** | 0.024** |\n\
         | info_dummy | -0.025*** | -0.047*** | 0.150*** |\n\
         | non_white_x_info | 0.007 | 0.001 | 0.008 |\n\
         | car_no_x_info | 0.000 | 0.003 | 0.001 |\n\
         | tvl_transit_x_info | -0.009 | -0.030*** | 0.025** |\n\
         | income_less_25k_x_info | 0.035** | -0.012 | 0.014 |\n\
         | income_150k_plus_x_info | -0.006 | 0.015 | 0.018 |\n\
         | R² | 0.45 | 0.729 | 0.875 |\n\
         | Adj. R² | 0.407 | 0.708 | 0.865 |\n\
         | F | 10.54*** | 34.79*** | 89.99*** |\n\
         | AIC | -582.6 | -608.3 | -596.2 |\n",
    );
    out
}
