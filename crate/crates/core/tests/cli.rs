//! End-to-end CLI checks through the built binary: exit codes, file
//! outputs, determinism, and the documented fixtures.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use distillforge::datakit::{
    read_corpus, sentence_split, write_corpus, CorpusRecord, RecordKind, TransformSummary,
};
use distillforge::datakit::write_embeddings;
use distillforge::model::{Head, HeadSet};
use distillforge::pipeline::load_checkpoint;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_distillforge"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn sample_corpus(n: usize) -> Vec<CorpusRecord> {
    // Eight distinct tokens per sentence keep accidental identity
    // permutations out of the shuffle recount (1/8! per event).
    (0..n)
        .map(|i| {
            let sentence = |s: usize, p: char| {
                let words: Vec<String> = (0..7).map(|w| format!("w{i}s{s}t{w}")).collect();
                format!("Doc{i} {}{p}", words.join(" "))
            };
            CorpusRecord {
                id: format!("doc{i}"),
                text: [
                    sentence(0, '.'),
                    sentence(1, '!'),
                    sentence(2, '?'),
                    sentence(3, '.'),
                ]
                .join(" "),
                kind: RecordKind::Passage,
                source: None,
            }
        })
        .collect()
}

fn write_desk_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(
        &path,
        format!(
            "profile = \"desk\"\n[paths]\ncheckpoint_dir = {:?}\nmetrics_dir = {:?}\n{extra}",
            dir.join("ckpt").to_str().unwrap(),
            dir.join("metrics").to_str().unwrap(),
        ),
    )
    .unwrap();
    path
}

#[test]
fn prep_identity_plan_preserves_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.jsonl");
    let output = dir.path().join("out.jsonl");
    write_corpus(&input, &sample_corpus(20)).unwrap();
    let plan = dir.path().join("plan.toml");
    std::fs::write(&plan, "chunk_fraction = 0.0\nshuffle_fraction = 0.0\n").unwrap();

    let out = run(&[
        "prep",
        "--corpus",
        input.to_str().unwrap(),
        "--plan",
        plan.to_str().unwrap(),
        "--out",
        output.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(
        std::fs::read(&input).unwrap(),
        std::fs::read(&output).unwrap(),
        "identity plan must preserve the file byte for byte"
    );
}

#[test]
fn prep_summary_matches_independent_recount() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.jsonl");
    let output = dir.path().join("out.jsonl");
    let corpus = sample_corpus(600);
    write_corpus(&input, &corpus).unwrap();
    let plan = dir.path().join("plan.toml");
    // A high shuffle fraction makes the recount meaningful.
    std::fs::write(&plan, "shuffle_fraction = 0.05\nseed = 31\n").unwrap();

    let out = run(&[
        "prep",
        "--corpus",
        input.to_str().unwrap(),
        "--plan",
        plan.to_str().unwrap(),
        "--out",
        output.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let summary: TransformSummary = serde_json::from_str(stdout(&out).trim()).unwrap();

    // Independent recount from the output file alone.
    let transformed = read_corpus(&output).unwrap();
    assert_eq!(transformed.len(), summary.output_records);

    let chunks = transformed.iter().filter(|r| r.source.is_some()).count();
    assert_eq!(chunks, summary.chunks_emitted);

    let mut sources: Vec<&str> = transformed
        .iter()
        .filter_map(|r| r.source.as_deref())
        .collect();
    sources.sort_unstable();
    sources.dedup();
    assert_eq!(sources.len(), summary.selected_for_chunking);

    // A record counts as shuffled when its text no longer matches the
    // expected contiguous sentence run from its origin.
    let originals: std::collections::HashMap<&str, &CorpusRecord> =
        corpus.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut cursor: std::collections::HashMap<&str, usize> = Default::default();
    let mut shuffled = 0;
    for record in &transformed {
        match &record.source {
            None => {
                if record.text != originals[record.id.as_str()].text {
                    shuffled += 1;
                }
            }
            Some(source) => {
                // Word shuffling preserves the token count, so the chunk's
                // sentence run is recoverable by token arithmetic even when
                // punctuation moved.
                let sentences = sentence_split(&originals[source.as_str()].text);
                let start = cursor.entry(source.as_str()).or_insert(0);
                let tokens = record.text.split_whitespace().count();
                let mut len = 0;
                let mut acc = 0;
                while acc < tokens {
                    acc += sentences[*start + len].split_whitespace().count();
                    len += 1;
                }
                assert_eq!(acc, tokens, "chunk does not align to sentence runs");
                if record.text != sentences[*start..*start + len].join(" ") {
                    shuffled += 1;
                }
                *start += len;
            }
        }
    }
    assert_eq!(shuffled, summary.shuffled);
}

#[test]
fn prep_missing_input_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let output = dir.path().join("out.jsonl");
    let out = run(&[
        "prep",
        "--corpus",
        dir.path().join("absent.jsonl").to_str().unwrap(),
        "--out",
        output.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!output.exists());
}

#[test]
fn distill_rejects_stage_5() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_desk_config(dir.path(), "");
    let out = run(&["distill", "--config", cfg.to_str().unwrap(), "--stage", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn distill_rejects_unknown_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "profile = \"desk\"\nturbo = true\n").unwrap();
    let out = run(&["distill", "--config", cfg.to_str().unwrap(), "--stage", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn distill_smoke_and_stage3_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_desk_config(dir.path(), "[data]\nn_items = 64\n");
    for stage in ["1", "2", "3"] {
        let out = run(&[
            "distill",
            "--config",
            cfg.to_str().unwrap(),
            "--stage",
            stage,
            "--steps",
            "8",
        ]);
        assert!(
            out.status.success(),
            "stage {stage}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    // Stage-3 metrics carry all four heads (plan defaults applied).
    let metrics = std::fs::read_to_string(dir.path().join("metrics/stage3.csv")).unwrap();
    let header = metrics.lines().next().unwrap();
    for head in ["fc1", "fc2", "fc3", "fc4"] {
        assert!(header.contains(&format!("{head}_cosine")));
    }
    assert!(dir.path().join("ckpt/stage3.ckpt").exists());
    // Header column layout: step, stage, 5 per head, wall_ms.
    assert_eq!(header.split(',').count(), 2 + 4 * 5 + 1);
}

#[test]
fn gradcheck_exit_codes() {
    let ok = run(&["gradcheck", "--trials", "3", "--seed", "7"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).contains("cosine"));
    assert!(stdout(&ok).contains("model"));

    let invalid = run(&["gradcheck", "--trials", "0"]);
    assert_eq!(invalid.status.code(), Some(2));

    let flipped = run(&["gradcheck", "--trials", "3", "--flip-sign", "cosine"]);
    assert_eq!(flipped.status.code(), Some(1));
    let text = stdout(&flipped);
    let cosine_line = text.lines().find(|l| l.starts_with("cosine")).unwrap();
    assert!(cosine_line.contains("FAIL"), "{cosine_line}");
}

#[test]
fn eval_identity_teacher_fixture_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_desk_config(dir.path(), "[data]\nn_items = 64\n");
    let out = run(&[
        "distill",
        "--config",
        cfg.to_str().unwrap(),
        "--stage",
        "1",
        "--steps",
        "10",
    ]);
    assert!(out.status.success());
    let ckpt_path = dir.path().join("ckpt/stage1.ckpt");

    // Identity-teacher fixture: the checkpoint's own full-width outputs
    // serve as the teacher file, so mean cosine must be 1.
    let ckpt = load_checkpoint(&ckpt_path).unwrap();
    let net = ckpt.restore_net().unwrap();
    let cfg_loaded = distillforge::config::RunConfig::load(&cfg).unwrap();
    let world = cfg_loaded.synth_world().unwrap();
    let eval = world.eval_data(32).unwrap();
    let ids: Vec<String> = (0..32).map(|i| format!("e{i}")).collect();
    let base_path = dir.path().join("base.emb");
    write_embeddings(&base_path, &ids, &eval.base).unwrap();
    let fc1 = net
        .forward_text(&eval.base, HeadSet::of(&[Head::Fc1]))
        .unwrap()
        .take(Head::Fc1)
        .unwrap();
    let teacher_path = dir.path().join("teacher.emb");
    write_embeddings(&teacher_path, &ids, &fc1).unwrap();

    let manifest = dir.path().join("eval.toml");
    std::fs::write(
        &manifest,
        "[alignment]\nbase = \"base.emb\"\nteacher = \"teacher.emb\"\n",
    )
    .unwrap();

    let eval_out = |extra: &[&str]| {
        let mut args = vec![
            "eval",
            "--ckpt",
            ckpt_path.to_str().unwrap(),
            "--data",
            manifest.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        run(&args)
    };

    let a = eval_out(&[]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let text = stdout(&a);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(header.split(',').count(), 10, "fixed CSV column count");
    let fc1_row = lines.next().unwrap();
    assert!(fc1_row.starts_with("fc1,40,"));
    let mean_cosine: f64 = fc1_row.split(',').nth(2).unwrap().parse().unwrap();
    assert!((mean_cosine - 1.0).abs() < 1e-6, "identity fixture: {mean_cosine}");

    // Same inputs twice -> identical bytes.
    let b = eval_out(&[]);
    assert_eq!(a.stdout, b.stdout);

    // Sweep adds one row per head, widest first.
    let sweep = eval_out(&["--sweep"]);
    let sweep_text = stdout(&sweep);
    assert_eq!(sweep_text.lines().count(), 5);
    assert!(sweep_text.lines().nth(1).unwrap().starts_with("fc1,40,"));
    assert!(sweep_text.lines().nth(4).unwrap().starts_with("fc4,8,"));
}

#[test]
fn distill_resume_matches_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_desk_config(dir.path(), "[data]\nn_items = 64\n[stage1]\nsteps = 24\n");
    let full = run(&[
        "distill",
        "--config",
        cfg.to_str().unwrap(),
        "--stage",
        "1",
        "--ckpt-out",
        dir.path().join("full.ckpt").to_str().unwrap(),
        "--metrics-out",
        dir.path().join("full.csv").to_str().unwrap(),
    ]);
    assert!(full.status.success());

    let part = run(&[
        "distill",
        "--config",
        cfg.to_str().unwrap(),
        "--stage",
        "1",
        "--steps",
        "9",
        "--ckpt-out",
        dir.path().join("part.ckpt").to_str().unwrap(),
        "--metrics-out",
        dir.path().join("part.csv").to_str().unwrap(),
    ]);
    assert!(part.status.success());

    let resumed = run(&[
        "distill",
        "--config",
        cfg.to_str().unwrap(),
        "--stage",
        "1",
        "--resume",
        dir.path().join("part.ckpt").to_str().unwrap(),
        "--ckpt-out",
        dir.path().join("resumed.ckpt").to_str().unwrap(),
        "--metrics-out",
        dir.path().join("part.csv").to_str().unwrap(),
    ]);
    assert!(
        resumed.status.success(),
        "{}",
        String::from_utf8_lossy(&resumed.stderr)
    );
    assert_eq!(
        std::fs::read(dir.path().join("full.ckpt")).unwrap(),
        std::fs::read(dir.path().join("resumed.ckpt")).unwrap(),
        "resume must be bitwise equivalent"
    );
    assert_eq!(
        std::fs::read(dir.path().join("full.csv")).unwrap(),
        std::fs::read(dir.path().join("part.csv")).unwrap(),
        "appended metrics must equal the uninterrupted log"
    );
}

#[test]
fn resume_digest_mismatch_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_desk_config(dir.path(), "[data]\nn_items = 64\n[stage1]\nsteps = 6\n");
    let out = run(&["distill", "--config", cfg.to_str().unwrap(), "--stage", "1"]);
    assert!(out.status.success());
    // A different learning rate changes the stage digest.
    let out = run(&[
        "distill",
        "--config",
        cfg.to_str().unwrap(),
        "--stage",
        "1",
        "--lr",
        "0.5",
        "--resume",
        dir.path().join("ckpt/stage1.ckpt").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
