//! Acceptance run: one line per criterion. Exits non-zero if any criterion
//! that could be evaluated here failed.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use civic_core::catalog::{
    egalitarian_optimum, utilitarian_optimum, Catalog, City, Lever, Metric, PolicyId, POLICY_COUNT,
};
use civic_core::gateway::{
    BackendKind, ChatBackend, ChatRequest, MockBackend, MockOptions, ANTHROPIC_KEY_VAR, OPENAI_KEY_VAR,
};
use civic_core::metrics::{borda_scores, shannon_entropy_bits, EntropyReport};
use civic_core::oracle::{brute_force_irv, ols_fixtures, random_ranked_profile};
use civic_core::regression::{fit_ols, run_lever_regressions, vif, CommunityCovariates, DesignMatrix};
use civic_core::scenario::report::{completed_ballots, write_regression};
use civic_core::scenario::{replay, run_scenario, ScenarioConfig, ScenarioRun, TRANSCRIPT_FILE};
use civic_core::sentiment::{normalize_compound, score_text, Lexicon};
use civic_core::voting::{irv_winner, mean_approved_policy, mean_ranked_policy_by_rank, Ballot, VotingRule};

const SENTIMENT_ORACLE: &str = include_str!("data/sentiment_oracle.tsv");

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn pid(n: u32) -> PolicyId {
    PolicyId::new(n).expect("valid id")
}

fn ranked(agent: u32, ids: &[u32]) -> Ballot {
    Ballot::new(agent, VotingRule::Ranked, ids.iter().map(|&i| pid(i)).collect()).expect("valid ballot")
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let chi = Catalog::bundled(City::Chicago);
    let hou = Catalog::bundled(City::Houston);
    let m = |c: &Catalog, id: u32| *c.metrics(pid(id)).expect("policy present");
    ensure(utilitarian_optimum(&chi) == Some(pid(19)), || "chicago utilitarian optimum is not 19".into())?;
    ensure(egalitarian_optimum(&chi) == Some(pid(20)), || "chicago egalitarian optimum is not 20".into())?;
    ensure(chi.argmin(Metric::Gini) == Some(pid(20)) && m(&chi, 20).gini == 0.0883, || {
        "chicago min gini is not policy 20 at 0.0883".into()
    })?;
    ensure(chi.argmax(Metric::TransitPct) == Some(pid(20)) && m(&chi, 20).transit_share == 54.21, || {
        "chicago max transit share is not policy 20 at 54.21".into()
    })?;
    ensure(hou.argmax(Metric::UTotal) == Some(pid(20)) && m(&hou, 20).u_total == 676.1273, || {
        "houston max U_total is not policy 20 at 676.1273".into()
    })?;
    ensure(hou.argmax(Metric::UMin) == Some(pid(20)) && m(&hou, 20).u_min == 0.3470, || {
        "houston max u_min is not policy 20 at 0.3470".into()
    })?;
    ensure(hou.argmin(Metric::Gini) == Some(pid(20)) && m(&hou, 20).gini == 0.1135, || {
        "houston min gini is not policy 20 at 0.1135".into()
    })?;
    let t = start.elapsed();
    ensure(t.as_secs_f64() < 1.0, || format!("took {t:?}"))?;
    Ok(format!("7 benchmarks exact in {t:.2?}"))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..1000 {
        let profile = random_ranked_profile(&mut rng, 27, 77);
        let ballots: Vec<Ballot> = profile.iter().enumerate().map(|(i, b)| ranked(i as u32 + 1, b)).collect();
        let got = irv_winner(&ballots).map_err(|e| e.to_string())?.winner.get();
        let want = brute_force_irv(&profile).expect("nonempty");
        ensure(got == want, || format!("profile {case}: irv_winner {got}, oracle {want}: {profile:?}"))?;
    }
    let t = start.elapsed();
    ensure(t.as_secs_f64() < 10.0, || format!("took {t:?}"))?;
    Ok(format!("1000 profiles agree in {t:.2?}"))
}

/// Entropy by direct counting, independent of the metrics module.
fn naive_entropy(ballots: &[Ballot], key: impl Fn(PolicyId) -> usize) -> f64 {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    let mut total = 0.0;
    for b in ballots {
        for &id in b.choices() {
            *counts.entry(key(id)).or_default() += 1.0;
            total += 1.0;
        }
    }
    counts.values().map(|&c| -(c / total) * (c / total).ln() / std::f64::consts::LN_2).sum::<f64>().abs()
}

fn random_ballots(rng: &mut ChaCha8Rng, rule: VotingRule) -> Vec<Ballot> {
    let voters = rng.gen_range(1..=77);
    let all: Vec<u32> = (0..POLICY_COUNT as u32).collect();
    (0..voters)
        .map(|a| {
            let len = match rule {
                VotingRule::Ranked => rng.gen_range(1..=5),
                VotingRule::Approve5 => 5,
                VotingRule::ApproveAll => rng.gen_range(1..=POLICY_COUNT),
            };
            let ids: Vec<u32> = all.choose_multiple(rng, len).copied().collect();
            Ballot::new(a + 1, rule, ids.into_iter().map(pid).collect()).expect("valid ballot")
        })
        .collect()
}

fn criterion_3() -> Check {
    let uniform: Vec<Ballot> = (0..27).map(|i| ranked(i + 1, &[i])).collect();
    let e = EntropyReport::compute(&uniform, VotingRule::Ranked, 1).map_err(|e| e.to_string())?;
    let target = 27f64.log2();
    ensure((e.policy_entropy - target).abs() <= 1e-9 && (e.policy_entropy - 4.7549).abs() < 5e-5, || {
        format!("uniform-27 entropy {}", e.policy_entropy)
    })?;
    let degenerate: Vec<Ballot> = (0..10).map(|i| ranked(i + 1, &[7])).collect();
    let d = EntropyReport::compute(&degenerate, VotingRule::Ranked, 1).map_err(|e| e.to_string())?;
    ensure(d.policy_entropy == 0.0 && d.lever_entropy.values().all(|&v| v == 0.0), || "degenerate entropy nonzero".into())?;
    ensure(shannon_entropy_bits([1.0]) == 0.0, || "H([1]) nonzero".into())?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for case in 0..300 {
        let rule = VotingRule::ALL[case % 3];
        let ballots = random_ballots(&mut rng, rule);
        let rep = EntropyReport::compute(&ballots, rule, 1).map_err(|e| e.to_string())?;
        let naive = naive_entropy(&ballots, |id| id.index());
        worst = worst.max((rep.policy_entropy - naive).abs());
        for lever in Lever::ALL {
            let h = rep.lever_entropy[&lever];
            ensure(h <= 3f64.log2() + 1e-12 && h <= 1.5850, || format!("lever entropy {h} above bound"))?;
            worst = worst.max((h - naive_entropy(&ballots, |id| id.level(lever).index())).abs());
            for rank in 1..=5 {
                if let Some(v) = rep.by_rank(lever, rank) {
                    ensure(v <= 1.5850, || format!("rank {rank} entropy {v} above bound"))?;
                }
            }
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation from naive tally {worst:e}"))?;
    Ok(format!("uniform-27 = {:.4} bits, 300 fixtures within {worst:.1e}", e.policy_entropy))
}

fn criterion_4() -> Check {
    let bounds = [(0.5, 1.5), (0.75, 1.75), (0.0, 1.0)];
    let inside = |m: &civic_core::voting::MeanPolicy| {
        Lever::ALL.iter().zip(bounds).all(|(&l, (lo, hi))| (lo..=hi).contains(&m.lever(l)))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0;
    for case in 0..300 {
        let rule = VotingRule::ALL[case % 3];
        let ballots = random_ballots(&mut rng, rule);
        let m = mean_approved_policy(&ballots).map_err(|e| e.to_string())?;
        ensure(inside(&m), || format!("mean {m:?} out of bounds"))?;
        checked += 1;
        if rule == VotingRule::Ranked {
            for m in mean_ranked_policy_by_rank(&ballots).map_err(|e| e.to_string())?.iter().flatten() {
                ensure(inside(m), || format!("rank mean {m:?} out of bounds"))?;
                checked += 1;
            }
        }
    }
    for id in PolicyId::all() {
        let ballots: Vec<Ballot> = (1..=9).map(|a| ranked(a, &[id.get()])).collect();
        let first = mean_ranked_policy_by_rank(&ballots).map_err(|e| e.to_string())?[0].expect("rank 1");
        let all = mean_approved_policy(&ballots).map_err(|e| e.to_string())?;
        for lever in Lever::ALL {
            ensure(first.lever(lever) == id.lever_value(lever) && all.lever(lever) == id.lever_value(lever), || {
                format!("constant ballots for P{} give {first:?}", id.get())
            })?;
        }
    }
    Ok(format!("{checked} random means in bounds, 27 constant fixtures exact"))
}

fn criterion_5() -> Check {
    // every policy with tax at the high level, full ballots over 3 rounds
    let high_tax: Vec<u32> = PolicyId::all().filter(|id| id.lever_value(Lever::Tax) == 1.5).map(|id| id.get()).collect();
    let rounds: Vec<Vec<Ballot>> = (0..3).map(|r| vec![ranked(1, &high_tax[r..r + 5])]).collect();
    let s = borda_scores(&rounds, Lever::Tax).map_err(|e| e.to_string())?;
    ensure(s.len() == 1 && s[0].score == 1.5, || format!("constant-lever score {:?}", s))?;

    // tax 1.0, 0.5, 0.5 at ranks 1..3
    let ids: Vec<u32> = [(1.0, 0), (0.5, 1), (0.5, 2)]
        .iter()
        .map(|&(tax, k)| {
            PolicyId::all().filter(|id| id.lever_value(Lever::Tax) == tax).nth(k).expect("policy").get()
        })
        .collect();
    let hand = borda_scores(&[vec![ranked(1, &ids)]], Lever::Tax).map_err(|e| e.to_string())?;
    let want = (5.0 * 1.0 + 4.0 * 0.5 + 3.0 * 0.5) / 15.0;
    ensure((hand[0].score - want).abs() <= 1e-12 && (want - 0.5667f64).abs() < 1e-4, || {
        format!("hand example {} vs {want}", hand[0].score)
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let mut rounds: Vec<Vec<Ballot>> = (0..10).map(|_| random_ballots(&mut rng, VotingRule::Ranked)).collect();
        for lever in Lever::ALL {
            let before = borda_scores(&rounds, lever).map_err(|e| e.to_string())?;
            rounds.shuffle(&mut rng);
            let after = borda_scores(&rounds, lever).map_err(|e| e.to_string())?;
            for (a, b) in before.iter().zip(&after) {
                ensure(a.community_id == b.community_id && (a.score - b.score).abs() <= 1e-12, || {
                    format!("permutation changed score {} -> {}", a.score, b.score)
                })?;
            }
        }
    }
    Ok(format!("constant lever exact, hand example {want:.4}, 50 permutations invariant"))
}

fn criterion_6() -> Check {
    let mut worst_coef: f64 = 0.0;
    let mut worst_orth: f64 = 0.0;
    let mut worst_ss: f64 = 0.0;
    for (case, f) in ols_fixtures(6, 100).iter().enumerate() {
        let (n, p) = (f.instance.x.len(), f.instance.x[0].len());
        let matrix = DMatrix::from_fn(n, p, |i, j| f.instance.x[i][j]);
        let mut terms = vec!["const".to_string()];
        terms.extend((1..p).map(|j| format!("x{j}")));
        let fit = fit_ols(&DesignMatrix { matrix: matrix.clone(), terms }, &f.instance.y).map_err(|e| e.to_string())?;
        for (a, b) in fit.coefficients.iter().zip(&f.coefficients) {
            worst_coef = worst_coef.max((a - b).abs() / b.abs().max(1.0));
        }
        let y_norm = f.instance.y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for j in 0..p {
            let dot: f64 = (0..n).map(|i| matrix[(i, j)] * fit.residuals[i]).sum();
            worst_orth = worst_orth.max(dot.abs() / y_norm);
        }
        let mean = f.instance.y.iter().sum::<f64>() / n as f64;
        let sst: f64 = f.instance.y.iter().map(|v| (v - mean).powi(2)).sum();
        let sse: f64 = fit.residuals.iter().map(|e| e * e).sum();
        let ssr: f64 = f.instance.y.iter().zip(&fit.residuals).map(|(y, e)| (y - e - mean).powi(2)).sum();
        worst_ss = worst_ss.max((sst - sse - ssr).abs() / sst);
        ensure((fit.sst - sst).abs() <= 1e-9 * sst && (fit.sse - sse).abs() <= 1e-9 * sst, || {
            format!("case {case}: reported sums of squares disagree")
        })?;
    }
    ensure(worst_coef <= 1e-8, || format!("coefficient deviation {worst_coef:e}"))?;
    ensure(worst_orth <= 1e-9, || format!("residual orthogonality {worst_orth:e}"))?;
    ensure(worst_ss <= 1e-9, || format!("SST decomposition {worst_ss:e}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut worst_vif: f64 = 0.0;
    for _ in 0..20 {
        let n = 80;
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mix = rng.gen_range(0.1..0.9);
        let b: Vec<f64> = a.iter().map(|v| mix * v + (1.0 - mix) * rng.gen_range(0.0..1.0)).collect();
        let (ma, mb) = (a.iter().sum::<f64>() / n as f64, b.iter().sum::<f64>() / n as f64);
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        let rho = cov / (va * vb).sqrt();
        let want = 1.0 / (1.0 - rho * rho);
        let m = DMatrix::from_fn(n, 2, |i, j| if j == 0 { a[i] } else { b[i] });
        let r = vif(&m, &["a".into(), "b".into()]).map_err(|e| e.to_string())?;
        for v in &r.values {
            worst_vif = worst_vif.max((v - want).abs());
        }
    }
    ensure(worst_vif <= 1e-6, || format!("VIF deviation {worst_vif:e}"))?;
    Ok(format!(
        "100 fits: coef {worst_coef:.1e}, orthogonality {worst_orth:.1e}, SST split {worst_ss:.1e}; VIF {worst_vif:.1e}"
    ))
}

fn criterion_7() -> Check {
    ensure(normalize_compound(0.0) == 0.0, || "normalize_compound(0) != 0".into())?;
    let v = normalize_compound(15f64.sqrt());
    ensure((v - std::f64::consts::FRAC_1_SQRT_2).abs() <= 1e-12, || format!("normalize_compound(sqrt 15) = {v}"))?;
    let lexicon = Lexicon::bundled();
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for line in SENTIMENT_ORACLE.lines().skip(1) {
        let cols: Vec<&str> = line.split('\t').collect();
        let want: f64 = cols[1].parse().map_err(|_| format!("bad oracle line {line:?}"))?;
        worst = worst.max((score_text(lexicon, cols[0]).compound - want).abs());
        rows += 1;
    }
    ensure(rows == 200, || format!("oracle has {rows} rows"))?;
    ensure(worst <= 1e-4, || format!("compound deviation {worst:e}"))?;
    Ok(format!("anchors exact, {rows} oracle sentences within {worst:.1e}"))
}

fn dir_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .expect("output dir")
        .map(|e| {
            let e = e.expect("dir entry");
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).expect("readable"))
        })
        .collect()
}

fn chi_com(out: &Path) -> ScenarioConfig {
    let mut c = ScenarioConfig { name: "CHI-com".into(), ..Default::default() };
    c.rounds = 10;
    c.backend.seed = 42;
    c.output_dir = out.to_path_buf();
    c
}

fn criterion_8() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let a = run_scenario(&chi_com(&tmp.path().join("a"))).map_err(|e| e.to_string())?;
    let t = start.elapsed();
    let b = run_scenario(&chi_com(&tmp.path().join("b"))).map_err(|e| e.to_string())?;
    ensure(a.summary.agents == 77 && a.rounds.len() == 10, || "wrong scenario shape".into())?;
    let (fa, fb) = (dir_files(&tmp.path().join("a")), dir_files(&tmp.path().join("b")));
    ensure(fa.len() >= 7 && fa == fb, || {
        let differ: Vec<_> = fa.keys().filter(|k| fa.get(*k) != fb.get(*k)).collect();
        format!("outputs differ: {differ:?}")
    })?;
    ensure(a.summary == b.summary, || "summaries differ".into())?;
    let r = replay(tmp.path().join("a").join(TRANSCRIPT_FILE), VotingRule::Ranked).map_err(|e| e.to_string())?;
    ensure(r.summary == a.summary && r.rounds == a.rounds, || "replay differs from run".into())?;
    ensure(t.as_secs_f64() < 60.0, || format!("run took {t:?}"))?;
    Ok(format!("77x10 run in {t:.2?}, {} files byte-identical, replay exact", fa.len()))
}

/// Minimal OpenAI-compatible endpoint answering with mock ballots. Counts
/// requests that deviate from the chat-completions request schema.
struct LocalChat {
    url: String,
    bad_requests: Arc<AtomicU32>,
}

fn serve_local_chat() -> LocalChat {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().expect("addr"));
    let bad = Arc::new(AtomicU32::new(0));
    let counter = Arc::new(AtomicU32::new(0));
    let bad_requests = bad.clone();
    std::thread::spawn(move || {
        let mock = Arc::new(MockBackend::new(9, MockOptions::default()));
        for stream in listener.incoming().flatten() {
            let (mock, bad, counter) = (mock.clone(), bad.clone(), counter.clone());
            std::thread::spawn(move || {
                let mut reader = BufReader::new(stream);
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        return;
                    }
                    let request_line = line.clone();
                    let mut length = 0;
                    let mut auth = false;
                    loop {
                        line.clear();
                        if reader.read_line(&mut line).unwrap_or(0) == 0 {
                            return;
                        }
                        let l = line.trim_end().to_ascii_lowercase();
                        if l.is_empty() {
                            break;
                        }
                        if let Some(v) = l.strip_prefix("content-length:") {
                            length = v.trim().parse().unwrap_or(0);
                        }
                        auth |= l.starts_with("authorization: bearer ");
                    }
                    let mut body = vec![0; length];
                    if reader.read_exact(&mut body).is_err() {
                        return;
                    }
                    let v: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
                    let well_formed = request_line.starts_with("POST /v1/chat/completions ")
                        && auth
                        && v["model"].is_string()
                        && v["temperature"].as_f64() == Some(0.0)
                        && v["messages"][0]["role"] == "system"
                        && v["messages"][1]["role"] == "user"
                        && v["messages"][1]["content"].is_string();
                    if !well_formed {
                        bad.fetch_add(1, Ordering::SeqCst);
                    }
                    let agent = counter.fetch_add(1, Ordering::SeqCst) % 77 + 1;
                    let req = ChatRequest {
                        system: String::new(),
                        user: String::new(),
                        temperature: 0.0,
                        agent_id: agent,
                        community: format!("Area {agent}"),
                        round: 1,
                        rule: VotingRule::Ranked,
                        attempt: 0,
                    };
                    let text = mock.complete(&req).expect("mock reply").text;
                    let reply = json!({
                        "choices": [{"index": 0, "message": {"role": "assistant", "content": text}}],
                        "usage": {"prompt_tokens": 100, "completion_tokens": 50},
                    })
                    .to_string();
                    let head = format!(
                        "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n",
                        reply.len()
                    );
                    let s = reader.get_mut();
                    if s.write_all(head.as_bytes()).and_then(|_| s.write_all(reply.as_bytes())).is_err() {
                        return;
                    }
                }
            });
        }
    });
    LocalChat { url, bad_requests }
}

fn parse_rate(run: &ScenarioRun) -> f64 {
    let r = &run.rounds[0];
    r.ballots.len() as f64 / r.agents as f64
}

fn header(path: &Path) -> Result<Vec<String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(text.lines().next().unwrap_or_default().split(',').map(str::to_string).collect())
}

/// Column layout of the per-round, cross-round and regression tables.
fn check_report_schemas(dir: &Path, regression_dir: &Path) -> Result<(), String> {
    let rounds = header(&dir.join("rounds.csv"))?;
    for col in ["round", "winner", "mean_tax", "mean_fare", "mean_fee", "entropy", "entropy_tax", "entropy_fare", "entropy_fee"] {
        ensure(rounds.iter().any(|c| c == col), || format!("rounds.csv lacks {col}"))?;
    }
    let summary = header(&dir.join("summary.csv"))?;
    for col in ["scenario", "winners", "entropy", "tax_mean", "tax_entropy", "fare_mean", "fare_entropy", "fee_mean", "fee_entropy"] {
        ensure(summary.iter().any(|c| c == col), || format!("summary.csv lacks {col}"))?;
    }
    ensure(header(&dir.join("lattice.csv"))? == ["policy", "rank", "count"], || "lattice.csv header".into())?;
    ensure(header(&dir.join("sentiment.csv"))?.contains(&"compound".to_string()), || "sentiment.csv header".into())?;
    ensure(header(&regression_dir.join("regression.csv"))? == ["term", "tax", "fare", "fee"], || {
        "regression.csv header".into()
    })?;
    let text = std::fs::read_to_string(regression_dir.join("regression.csv")).map_err(|e| e.to_string())?;
    let first: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap_or_default()).collect();
    for term in ["const", "info_dummy", "R2", "adj_R2", "F", "AIC", "n"] {
        ensure(first.contains(&term), || format!("regression.csv lacks row {term}"))?;
    }
    Ok(())
}

fn write_covariates(path: &Path) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut text = String::from("community_id,poverty,car_share\n");
    for id in 1..=77 {
        text.push_str(&format!("{id},{:.4},{:.4}\n", rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)));
    }
    std::fs::write(path, text).map_err(|e| e.to_string())
}

enum Live {
    Pass(String),
    Fail(String),
    /// Substitute checks passed but no live backend was available.
    NotRun(String),
}

fn criterion_9() -> Live {
    let substitute = || -> Check {
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let server = serve_local_chat();
        if std::env::var(OPENAI_KEY_VAR).map_or(true, |k| k.trim().is_empty()) {
            std::env::set_var(OPENAI_KEY_VAR, "local-test-key");
        }
        let mut http = chi_com(&tmp.path().join("http"));
        http.rounds = 1;
        http.backend.kind = BackendKind::OpenAi;
        http.backend.endpoint = Some(server.url.clone());
        http.backend.max_retries = 0;
        let run = run_scenario(&http).map_err(|e| e.to_string())?;
        let bad = server.bad_requests.load(Ordering::SeqCst);
        ensure(bad == 0, || format!("{bad} malformed chat requests"))?;
        let rate = parse_rate(&run);
        ensure(rate >= 0.95, || format!("http parse rate {rate:.3}"))?;

        let mut faulty = chi_com(&tmp.path().join("faulty"));
        faulty.rounds = 1;
        faulty.backend.mock.fault_rate = 0.3;
        let noisy = parse_rate(&run_scenario(&faulty).map_err(|e| e.to_string())?);
        ensure(noisy >= 0.95, || format!("parse rate with re-asks {noisy:.3}"))?;

        let mut treated = chi_com(&tmp.path().join("treated"));
        treated.name = "CHI-treated".into();
        treated.rounds = 3;
        treated.backend.mock.tax_bias = 0.8;
        let treated = run_scenario(&treated).map_err(|e| e.to_string())?;
        let mut base = chi_com(&tmp.path().join("base"));
        base.rounds = 3;
        let base = run_scenario(&base).map_err(|e| e.to_string())?;
        let cov_path = tmp.path().join("covariates.csv");
        write_covariates(&cov_path)?;
        let cov = CommunityCovariates::load(&cov_path).map_err(|e| e.to_string())?;
        let fits = run_lever_regressions(&completed_ballots(&treated), &completed_ballots(&base), &cov)
            .map_err(|e| e.to_string())?;
        write_regression(&tmp.path().join("treated"), &fits).map_err(|e| e.to_string())?;
        check_report_schemas(&tmp.path().join("http"), &tmp.path().join("treated"))?;
        Ok(format!("local HTTP parse rate {:.0}%, 30% faulty mock {:.0}%, report schemas ok", rate * 100.0, noisy * 100.0))
    };
    let sub = match substitute() {
        Ok(s) => s,
        Err(e) => return Live::Fail(format!("substitute checks failed: {e}")),
    };

    let live = [(BackendKind::OpenAi, OPENAI_KEY_VAR), (BackendKind::Anthropic, ANTHROPIC_KEY_VAR)]
        .into_iter()
        .find(|(_, var)| std::env::var(format!("{var}_LIVE")).is_ok_and(|v| v == "1"));
    let Some((kind, _)) = live else {
        return Live::NotRun(format!("live backend not run (needs {OPENAI_KEY_VAR}_LIVE=1 and a key); {sub}"));
    };
    let run = || -> Result<f64, String> {
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut c = chi_com(tmp.path());
        c.rounds = 1;
        c.backend.kind = kind;
        Ok(parse_rate(&run_scenario(&c).map_err(|e| e.to_string())?))
    };
    match run() {
        Ok(rate) if rate >= 0.95 => Live::Pass(format!("live {kind:?} parse rate {:.1}%; {sub}", rate * 100.0)),
        Ok(rate) => Live::Fail(format!("live {kind:?} parse rate {:.1}% below 95%", rate * 100.0)),
        Err(e) => Live::Fail(format!("live run failed: {e}")),
    }
}

fn main() {
    let checks: [(u32, fn() -> Check); 8] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
    ];
    let mut failures = 0;
    for (n, check) in checks {
        match check() {
            Ok(msg) => println!("criterion {n}: PASS  {msg}"),
            Err(msg) => {
                failures += 1;
                println!("criterion {n}: FAIL  {msg}");
            }
        }
    }
    // without credentials the live half of 9 stays red but is not a failure
    match criterion_9() {
        Live::Pass(msg) => println!("criterion 9: PASS  {msg}"),
        Live::NotRun(msg) => println!("criterion 9: FAIL  {msg}"),
        Live::Fail(msg) => {
            failures += 1;
            println!("criterion 9: FAIL  {msg}");
        }
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
