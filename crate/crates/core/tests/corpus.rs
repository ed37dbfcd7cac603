mod support;

use std::collections::BTreeSet;

use gendertx::corpus::{
    parse_bug, parse_mhb, parse_parallel, sample_balanced_subsets, sample_balanced_subsets_sized,
};
use gendertx::{BugRecord, Gender, Stereotype};
use rand::Rng;

fn records(sizes: [usize; 4]) -> Vec<BugRecord> {
    let strata = [
        (Gender::Male, Stereotype::Pro),
        (Gender::Male, Stereotype::Anti),
        (Gender::Female, Stereotype::Pro),
        (Gender::Female, Stereotype::Anti),
    ];
    let mut out = Vec::new();
    for (s, &(gold_gender, stereotype)) in strata.iter().enumerate() {
        for i in 0..sizes[s] {
            out.push(BugRecord {
                id: format!("s{s}-{i}"),
                source: "The nurse left.".into(),
                entity: "nurse".into(),
                gold_gender,
                stereotype,
            });
        }
    }
    out
}

#[test]
fn balanced_sampler_on_random_stratum_sizes() {
    let mut rng = support::rng(0x5a3);
    for case in 0..200 {
        let sizes = [0; 4].map(|_| rng.gen_range(1..=25));
        let recs = records(sizes);
        let seed = rng.gen::<u64>();
        let sample = sample_balanced_subsets(&recs, seed).unwrap();
        let min = *sizes.iter().min().unwrap();
        assert_eq!(sample.n_per_stratum, min, "case {case}");
        for ((gender, stereotype), ids) in &sample.strata {
            assert_eq!(ids.len(), min, "case {case}");
            let distinct: BTreeSet<&String> = ids.iter().collect();
            assert_eq!(distinct.len(), ids.len());
            for id in ids {
                let r = recs.iter().find(|r| &r.id == id).unwrap();
                assert_eq!((r.gold_gender, r.stereotype), (*gender, *stereotype));
            }
        }
        assert_eq!(
            sample,
            sample_balanced_subsets(&recs, seed).unwrap(),
            "case {case}"
        );
    }
}

#[test]
fn sampler_respects_explicit_size_and_rejects_oversize() {
    let recs = records([4, 6, 5, 9]);
    let s = sample_balanced_subsets_sized(&recs, 3, Some(2)).unwrap();
    assert!(s.strata.values().all(|ids| ids.len() == 2));
    assert!(sample_balanced_subsets_sized(&recs, 3, Some(5)).is_err());
}

#[test]
fn empty_stratum_is_an_error() {
    assert!(sample_balanced_subsets(&records([3, 0, 2, 2]), 1).is_err());
}

#[test]
fn different_seeds_draw_different_members() {
    let recs = records([40, 40, 40, 3]);
    let draws: BTreeSet<Vec<String>> = (0..8)
        .map(|seed| {
            sample_balanced_subsets(&recs, seed)
                .unwrap()
                .ids()
                .map(str::to_string)
                .collect()
        })
        .collect();
    assert!(draws.len() > 1);
}

#[test]
fn mhb_rows_without_template_or_reference_are_rejected() {
    let text = "id\tlang\tsource\tmasc\tfem\tneutral\tgeneric\ttemplate_key\n\
                a\tspa\tHi.\tHola.\t\t\t\tt1\n\
                b\tspa\tHi.\t\t\t\t\tt1\n\
                c\tspa\tHi.\tHola.\tHola.\t\t\t\n\
                a\tspa\tHi again.\tHola.\tHola.\t\t\tt2\n\
                d\tita\tHi.\tCiao.\tCiao.\t\t\tt1\n";
    let loaded = parse_mhb(text, "SPA").unwrap();
    assert_eq!(loaded.items.len(), 1);
    assert_eq!(loaded.rejected.len(), 3);
    assert!(!loaded.items[0].has_both_genders());
}

#[test]
fn bug_rows_need_entity_in_sentence() {
    let text = "id\tsource\tentity\tgold_gender\tstereotype\textra\n\
                1\tThe Nurse said hi.\tnurse\tfemale\tpro\tx\n\
                2\tThe nurse said hi.\tdoctor\tmale\tanti\tx\n\
                3\tThe nurse said hi.\tnurse\tother\tanti\tx\n";
    let loaded = parse_bug(text).unwrap();
    assert_eq!(loaded.items.len(), 1);
    assert_eq!(loaded.rejected.len(), 2);
}

#[test]
fn parallel_alignment() {
    let pairs = parse_parallel("a\r\nb\n", "x\ny", "CAT").unwrap();
    assert_eq!(pairs.len(), 2);
    assert_eq!(
        (
            pairs[1].id.as_str(),
            pairs[1].reference.as_str(),
            pairs[1].lang.as_str()
        ),
        ("2", "y", "cat")
    );
    assert!(parse_parallel("a\nb\n", "x\n", "cat").is_err());
    assert!(parse_parallel("a\n\n", "x\ny\n", "cat").is_err());
}
