//! One check per acceptance criterion, each printed as a PASS or FAIL line.
//! Run with `cargo test -p gendertx-cli --test acceptance -- --nocapture`.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use gendertx::corpus::{load_bug, sample_balanced_subsets};
use gendertx::experiments::{
    open_backend, run_bug_bias, score_mhb, translate, ExperimentReport, Manifest, TableKind,
    AVERAGE_LANG, SYSTEM_GENDERED,
};
use gendertx::genderbias::{
    bias_stats, evaluable_subset, predict_gender, GenderLexicon, PredictedGender,
};
use gendertx::metrics::{
    bleu_text, chrf, corpus_bleu, delta_f, BleuConfig, ChrfConfig, Tokenization,
};
use gendertx::prompting::parse_gendered_output;
use gendertx::{
    BugRecord, Gender, GenderedTranslation, GenerationStatus, PromptConfig, Stereotype,
    TemplateKind,
};
use rand::Rng;

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bleu_oracle_equivalence() -> Check {
    let start = Instant::now();
    let mut rng = support::rng(1);
    for case in 0..1000 {
        let (hyps, refs) = support::random_corpus(&mut rng);
        let got = corpus_bleu(&hyps, &refs, &BleuConfig::default()).map_err(|e| e.to_string())?;
        let want = support::bleu_oracle(&hyps, &refs, 4, 1.0);
        ensure((got.score - want.score).abs() <= 1e-9, || {
            format!("corpus {case}: {} vs {}", got.score, want.score)
        })?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.1}s"))
}

fn chrf_oracle_equivalence() -> Check {
    let mut rng = support::rng(2);
    for case in 0..500 {
        let h = support::random_sentence(&mut rng);
        let r = support::random_sentence(&mut rng);
        let got = chrf(&[&h], &[&r], &ChrfConfig::default()).map_err(|e| e.to_string())?;
        let want = support::chrf_oracle(&[&h], &[&r], 6, 2.0);
        ensure((got - want).abs() <= 1e-9, || {
            format!("pair {case} ({h:?}, {r:?}): {got} vs {want}")
        })?;
    }
    Ok(())
}

fn identity_and_disjointness() -> Check {
    let sents = ["el médico llegó tarde", "la médica llegó", "sí"];
    let cfg = BleuConfig::default();
    let same = bleu_text(&sents, &[&sents[..]], Tokenization::Whitespace, &cfg)
        .map_err(|e| e.to_string())?;
    ensure(same.score == 100.0, || {
        format!("BLEU(hyp=ref) = {}", same.score)
    })?;
    let c = chrf(&sents, &sents, &ChrfConfig::default()).map_err(|e| e.to_string())?;
    ensure(c == 100.0, || format!("chrF(identical) = {c}"))?;
    let apart = bleu_text(
        &["a b c", "d"],
        &[&["x y z", "w"][..]],
        Tokenization::Whitespace,
        &cfg,
    )
    .map_err(|e| e.to_string())?;
    ensure(apart.score == 0.0, || {
        format!("disjoint BLEU = {}", apart.score)
    })
}

fn delta_f_arithmetic() -> Check {
    let cat = delta_f(46.06, 43.83);
    ensure(format!("{cat:.2}") == "2.23", || {
        format!("cat delta_f = {cat}")
    })?;
    let text = std::fs::read_to_string(support::fixtures_dir().join("published/flores-delta.csv"))
        .map_err(|e| e.to_string())?;
    let report = ExperimentReport::parse_csv(&text).map_err(|e| e.to_string())?;
    let table = report.table(TableKind::FloresBleu).ok_or("no table")?;
    let cell = |lang: &str, kind: &str| {
        table
            .find(lang, SYSTEM_GENDERED, kind)
            .and_then(|r| r.cells[0])
    };
    let avg_delta = cell(AVERAGE_LANG, "delta_f").ok_or("no avg delta_f")?;
    let of_means = delta_f(
        cell(AVERAGE_LANG, "masc").ok_or("no avg masc")?,
        cell(AVERAGE_LANG, "fem").ok_or("no avg fem")?,
    );
    ensure(
        format!("{avg_delta:.2}") == "1.39" && format!("{of_means:.2}") == "1.38",
        || format!("avg delta_f {avg_delta}, delta of averages {of_means}"),
    )?;
    ensure((avg_delta - of_means).abs() <= 0.05, || {
        "avg discrepancy above 0.05".into()
    })
}

fn swap_degradation() -> Check {
    let m = Manifest::load(support::fixtures_dir().join("mhb-panel.toml"))
        .map_err(|e| e.to_string())?;
    let run =
        translate(&m, &open_backend(&m).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let report = score_mhb(&m, &run).map_err(|e| e.to_string())?;
    let bleu = report.table(TableKind::MhbBleu).ok_or("no BLEU table")?;
    for lang in &m.languages {
        let n = evaluable_subset(&run.unspecified(lang), &run.gendered(lang)).len();
        ensure(n >= 50, || format!("{lang}: only {n} evaluable segments"))?;
        let masc = bleu
            .find(lang, SYSTEM_GENDERED, "masc")
            .ok_or("no masc row")?;
        let fem = bleu
            .find(lang, SYSTEM_GENDERED, "fem")
            .ok_or("no fem row")?;
        let (mm, mf, fm, ff) = (masc.cells[0], masc.cells[1], fem.cells[0], fem.cells[1]);
        ensure(mm == Some(100.0) && ff == Some(100.0), || {
            format!("{lang}: matched {mm:?} / {ff:?}")
        })?;
        ensure(
            mf.is_some_and(|v| v < 60.0) && fm.is_some_and(|v| v < 60.0),
            || format!("{lang}: swapped {mf:?} / {fm:?}"),
        )?;
    }
    Ok(())
}

fn parser_totality() -> Check {
    let cfg = PromptConfig::new("spa", "Spanish", TemplateKind::GenderSpecific, 0);
    let mut rng = support::rng(3);
    for i in 0..10_000 {
        let len = rng.gen_range(0..40);
        let text: String = (0..len)
            .map(|_| match rng.gen_range(0..4) {
                0 => '\n',
                1 => char::from_u32(rng.gen_range(0x20..0x80)).unwrap(),
                _ => char::from_u32(rng.gen_range(0..0x11_0000)).unwrap_or('é'),
            })
            .collect();
        let text = if i % 3 == 0 {
            format!("x\nSpanish (feminine):{text}")
        } else {
            text
        };
        let out = std::panic::catch_unwind(|| parse_gendered_output(&text, &cfg))
            .map_err(|_| format!("panic on {text:?}"))?;
        let expected = match (out.masc.is_some(), out.fem.is_some()) {
            (true, true) => GenerationStatus::Complete,
            (false, false) => GenerationStatus::Empty,
            _ => GenerationStatus::Partial,
        };
        ensure(out.status == expected, || {
            format!("inconsistent status on {text:?}")
        })?;
    }
    let canonical = [
        (
            " El médico.\nSpanish (feminine): La médica.\n\nEnglish: y",
            GenerationStatus::Complete,
        ),
        (" El médico.\n\nEnglish: y", GenerationStatus::Partial),
        ("\n\nEnglish: y", GenerationStatus::Empty),
    ];
    for (text, want) in canonical {
        let got = parse_gendered_output(text, &cfg).status;
        ensure(got == want, || format!("{text:?}: {got} instead of {want}"))?;
    }
    Ok(())
}

fn balanced_sampler() -> Check {
    let mut rng = support::rng(4);
    let strata = [
        (Gender::Male, Stereotype::Pro),
        (Gender::Male, Stereotype::Anti),
        (Gender::Female, Stereotype::Pro),
        (Gender::Female, Stereotype::Anti),
    ];
    for case in 0..200 {
        let sizes: Vec<usize> = (0..4).map(|_| rng.gen_range(1..=30)).collect();
        let mut records = Vec::new();
        for (s, (gold_gender, stereotype)) in strata.iter().enumerate() {
            for i in 0..sizes[s] {
                records.push(BugRecord {
                    id: format!("{s}-{i}"),
                    source: "The cook left.".into(),
                    entity: "cook".into(),
                    gold_gender: *gold_gender,
                    stereotype: *stereotype,
                });
            }
        }
        let seed = rng.gen();
        let a = sample_balanced_subsets(&records, seed).map_err(|e| e.to_string())?;
        let min = *sizes.iter().min().unwrap();
        ensure(
            a.strata.len() == 4 && a.strata.values().all(|ids| ids.len() == min),
            || {
                format!(
                    "case {case}: sizes {sizes:?} gave {:?}",
                    a.strata.values().map(Vec::len).collect::<Vec<_>>()
                )
            },
        )?;
        let b = sample_balanced_subsets(&records, seed).map_err(|e| e.to_string())?;
        ensure(a == b, || {
            format!("case {case}: seed {seed} not reproducible")
        })?;
    }
    Ok(())
}

fn evaluable_conjunction() -> Check {
    let mut rng = support::rng(5);
    let side = |rng: &mut rand_chacha::ChaCha8Rng| match rng.gen_range(0..3) {
        0 => None,
        1 => Some(" ".to_string()),
        _ => Some("texto".to_string()),
    };
    for case in 0..500 {
        let mut unspec = BTreeMap::new();
        let mut gendered = BTreeMap::new();
        for id in 0..rng.gen_range(0..8) {
            if rng.gen_bool(0.8) {
                unspec.insert(format!("{id}"), side(&mut rng));
            }
            if rng.gen_bool(0.8) {
                gendered.insert(
                    format!("{id}"),
                    GenderedTranslation::new(side(&mut rng), side(&mut rng)),
                );
            }
        }
        let subset = evaluable_subset(&unspec, &gendered);
        let ids: BTreeSet<&String> = unspec.keys().chain(gendered.keys()).collect();
        for id in ids {
            let u = unspec
                .get(id)
                .and_then(|o: &Option<String>| o.as_deref())
                .is_some_and(|s| !s.trim().is_empty());
            let g = gendered
                .get(id)
                .is_some_and(|g| g.status == GenerationStatus::Complete);
            ensure(subset.contains(id) == (u && g), || {
                format!("case {case}: id {id}")
            })?;
        }
    }
    let m =
        Manifest::load(support::fixtures_dir().join("bug-bias.toml")).map_err(|e| e.to_string())?;
    let report = run_bug_bias(&m).map_err(|e| e.to_string())?;
    let table = report.table(TableKind::Bias).ok_or("no bias table")?;
    for lang in &m.languages {
        let ns: BTreeSet<String> = table
            .rows
            .iter()
            .filter(|r| &r.lang == lang)
            .map(|r| format!("{:?}", r.cells[0]))
            .collect();
        ensure(ns.len() == 1, || {
            format!("{lang}: n differs across systems: {ns:?}")
        })?;
    }
    Ok(())
}

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name();
        if name == "out" {
            continue;
        }
        let target = to.join(&name);
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            std::fs::copy(entry.path(), target).unwrap();
        }
    }
}

fn gendertx(dir: &Path, args: &[&str]) -> Check {
    let out = Command::new(env!("CARGO_BIN_EXE_gendertx"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr))
    })
}

/// Runs the three experiments in a fresh copy of the fixtures and returns
/// every file they wrote.
fn pipeline(root: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    copy_dir(&support::fixtures_dir(), root);
    for (manifest, score) in [
        ("mhb-panel.toml", "score-mhb"),
        ("bug-bias.toml", "score-bias"),
        ("flores-delta.toml", "score-delta"),
    ] {
        gendertx(root, &["translate", "--manifest", manifest])?;
        gendertx(root, &[score, "--manifest", manifest])?;
    }
    gendertx(
        root,
        &[
            "score-bias",
            "--manifest",
            "bug-bias.toml",
            "--lexicon",
            "lexicon.tsv",
        ],
    )?;
    let mut files = BTreeMap::new();
    let mut stack = vec![root.join("out")];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    Ok(files)
}

fn end_to_end_determinism() -> Check {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = pipeline(&tmp.path().join("a"))?;
    let second = pipeline(&tmp.path().join("b"))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(first.len() >= 12, || {
        format!("only {} files written", first.len())
    })?;
    for name in [
        "out/mhb-panel/mhb-panel.csv",
        "out/bug-bias/bug-bias.md",
        "out/flores-delta/flores-delta.csv",
    ] {
        ensure(first.contains_key(Path::new(name)), || {
            format!("missing {name}")
        })?;
    }
    let keys: Vec<_> = first.keys().collect();
    ensure(keys == second.keys().collect::<Vec<_>>(), || {
        "different file sets".into()
    })?;
    for (path, bytes) in &first {
        ensure(&second[path] == bytes, || {
            format!("{} differs between runs", path.display())
        })?;
    }
    // the replay store must be untouched by a replay-only run
    let store = std::fs::read(tmp.path().join("a/replay.jsonl")).map_err(|e| e.to_string())?;
    let shipped =
        std::fs::read(support::fixtures_dir().join("replay.jsonl")).map_err(|e| e.to_string())?;
    ensure(store == shipped, || "replay store rewritten".into())?;
    ensure(secs < 60.0, || format!("two full runs took {secs:.1}s"))
}

fn spanish_bias_fixture() -> Check {
    let dir = support::fixtures_dir().join("bias-es");
    let records = load_bug(dir.join("records.tsv"))
        .map_err(|e| e.to_string())?
        .items;
    let lexicon = GenderLexicon::load(dir.join("lexicon.tsv")).map_err(|e| e.to_string())?;
    ensure(records.len() == 20 && lexicon.len() == 10, || {
        "fixture size".into()
    })?;
    let text = std::fs::read_to_string(dir.join("translations.tsv")).map_err(|e| e.to_string())?;
    let translations: BTreeMap<&str, &str> = text
        .lines()
        .skip(1)
        .filter_map(|l| l.split_once('\t'))
        .collect();
    let expected = std::fs::read_to_string(dir.join("expected.tsv")).map_err(|e| e.to_string())?;
    let expected: BTreeMap<&str, &str> = expected
        .lines()
        .skip(1)
        .filter_map(|l| l.split_once('\t'))
        .collect();
    let mut preds = Vec::new();
    for r in &records {
        let p = predict_gender(
            &r.id,
            translations[r.id.as_str()],
            &r.entity,
            &lexicon,
            "spa",
        )
        .map_err(|e| e.to_string())?;
        let label = match p.predicted {
            PredictedGender::Male => "male",
            PredictedGender::Female => "female",
            PredictedGender::Unknown => "unknown",
        };
        ensure(label == expected[r.id.as_str()], || {
            format!("{}: predicted {label}", r.id)
        })?;
        preds.push(p);
    }
    let s = bias_stats(&preds, &records).map_err(|e| e.to_string())?;
    ensure(s.overall.accuracy == 0.75, || {
        format!("accuracy {}", s.overall.accuracy)
    })?;
    ensure(s.overall.unknown_rate == 0.1, || {
        format!("unknown_rate {}", s.overall.unknown_rate)
    })?;
    ensure(s.male.accuracy == 0.8 && s.female.accuracy == 0.7, || {
        "per-gender accuracy".into()
    })?;
    ensure((s.delta_b - 10.0).abs() < 1e-9, || {
        format!("delta_b {}", s.delta_b)
    })
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 10] = [
        ("BLEU oracle equivalence", bleu_oracle_equivalence),
        ("chrF oracle equivalence", chrf_oracle_equivalence),
        ("identity and disjointness", identity_and_disjointness),
        (
            "delta_f arithmetic and average discrepancy",
            delta_f_arithmetic,
        ),
        ("swap degradation on the gendered fixture", swap_degradation),
        ("parser totality and statuses", parser_totality),
        ("balanced sampler property", balanced_sampler),
        ("evaluable-subset conjunction", evaluable_conjunction),
        ("end-to-end determinism", end_to_end_determinism),
        ("hand-built Spanish gender accuracy", spanish_bias_fixture),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(()) => println!("PASS  {name}"),
            Err(why) => {
                println!("FAIL  {name}: {why}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
