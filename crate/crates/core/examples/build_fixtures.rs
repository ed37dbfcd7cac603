//! Regenerates the synthetic datasets, manifests and replay store under
//! `fixtures/`.
//!
//! The "model" is a script: for every (language, source sentence) it knows
//! the standard and gender-specific completions to return, including a few
//! deliberately defective ones. The script answers through a recording
//! replay backend, so the store ends up holding exactly the prompts the
//! manifests produce.
//!
//! ```text
//! cargo run -p gendertx --example build_fixtures [-- <fixtures dir>]
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use gendertx::backends::{
    BackendError, CompletionBackend, CompletionRequest, CompletionResult, ReplayBackend,
    ReplayMode, ReplayStore,
};
use gendertx::corpus::derive_template_key;
use gendertx::experiments::{translate, Manifest};

struct Lang {
    code: &'static str,
    name: &'static str,
}

const SPA: Lang = Lang {
    code: "spa",
    name: "Spanish",
};
const ITA: Lang = Lang {
    code: "ita",
    name: "Italian",
};

/// Completions the scripted model gives for one source sentence.
struct Script {
    standard: String,
    gendered: String,
}

#[derive(Default)]
struct ScriptedModel {
    scripts: HashMap<(String, String), Script>,
}

impl ScriptedModel {
    fn add(
        &mut self,
        lang: &Lang,
        source: &str,
        unsp: &str,
        masc: Option<&str>,
        fem: Option<&str>,
    ) {
        let standard = if unsp.is_empty() {
            "\n".to_string()
        } else {
            format!(" {unsp}\n")
        };
        let gendered = match (masc, fem) {
            (Some(m), Some(f)) => format!(" {m}\n{} (feminine): {f}", lang.name),
            (Some(m), None) => format!(" {m}"),
            (None, Some(f)) => format!("\n{} (feminine): {f}", lang.name),
            (None, None) => String::new(),
        };
        let previous = self.scripts.insert(
            (lang.name.to_string(), source.to_string()),
            Script { standard, gendered },
        );
        assert!(previous.is_none(), "source scripted twice: {source}");
    }
}

impl CompletionBackend for ScriptedModel {
    fn id(&self) -> &str {
        "scripted"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        let mut lines = request.prompt.lines().rev();
        let label = lines.next().unwrap_or_default();
        let source = lines
            .next()
            .and_then(|l| l.strip_prefix("English: "))
            .ok_or_else(|| BackendError::InvalidRequest("prompt does not end on a query".into()))?;
        let (name, gendered) = match label.strip_suffix(" (masculine):") {
            Some(name) => (name, true),
            None => (label.trim_end_matches(':'), false),
        };
        let script = self
            .scripts
            .get(&(name.to_string(), source.to_string()))
            .ok_or_else(|| {
                BackendError::InvalidRequest(format!("no script for {name}: {source}"))
            })?;
        let text = if gendered {
            &script.gendered
        } else {
            &script.standard
        };
        Ok(CompletionResult {
            text: request.truncate_at_stop(text).to_string(),
            backend_id: "scripted".into(),
            latency: Duration::ZERO,
            attempt_count: 1,
        })
    }
}

// ---------------------------------------------------------------- MHB

const MHB_TEMPLATES: [(&str, &str, &str); 5] = [
    ("I like {D}.", "Me caen bien {D}.", "Mi piacciono {D}."),
    (
        "What do you think about {D}?",
        "¿Qué piensas de {D}?",
        "Cosa pensi di {D}?",
    ),
    (
        "I don't like {D}.",
        "No me gustan {D}.",
        "Non mi piacciono {D}.",
    ),
    (
        "Hi! I know {D}.",
        "¡Hola! Conozco a {D}.",
        "Ciao! Conosco {D}.",
    ),
    (
        "I wonder what it is like to be around {D}.",
        "Me pregunto cómo es estar con {D}.",
        "Mi chiedo come sia stare con {D}.",
    ),
];

/// English noun, then masculine/feminine plurals in Spanish and Italian.
const NOUNS: [(&str, [&str; 4]); 6] = [
    ("children", ["niños", "niñas", "bambini", "bambine"]),
    ("friends", ["amigos", "amigas", "amici", "amiche"]),
    (
        "teachers",
        ["profesores", "profesoras", "maestri", "maestre"],
    ),
    ("doctors", ["médicos", "médicas", "dottori", "dottoresse"]),
    ("neighbors", ["vecinos", "vecinas", "vicini", "vicine"]),
    (
        "students",
        ["alumnos", "alumnas", "studenti", "studentesse"],
    ),
];

const ADJECTIVES: [(&str, [&str; 4]); 2] = [
    ("tall", ["altos", "altas", "alti", "alte"]),
    ("rich", ["ricos", "ricas", "ricchi", "ricche"]),
];

struct MhbRow {
    id: String,
    lang: &'static str,
    source: String,
    masc: String,
    fem: String,
    generic: String,
    template_key: String,
}

fn mhb_rows() -> Vec<MhbRow> {
    let mut rows = Vec::new();
    for (li, lang) in [SPA, ITA].iter().enumerate() {
        let (dem_m, dem_f) = if li == 0 {
            ("estos", "estas")
        } else {
            ("questi", "queste")
        };
        let mut n = 0;
        for (en, spa, ita) in MHB_TEMPLATES {
            let target = if li == 0 { spa } else { ita };
            for (noun, noun_forms) in NOUNS {
                for (adj, adj_forms) in ADJECTIVES {
                    n += 1;
                    let descriptor = format!("{adj} {noun}");
                    let source = en.replace("{D}", &descriptor);
                    let phrase = |dem: &str, g: usize| {
                        format!("{dem} {} {}", noun_forms[2 * li + g], adj_forms[2 * li + g])
                    };
                    rows.push(MhbRow {
                        id: format!("{}-{n:03}", lang.code),
                        lang: lang.code,
                        template_key: derive_template_key(&source, &descriptor)
                            .expect("descriptor is in the source"),
                        masc: target.replace("{D}", &phrase(dem_m, 0)),
                        fem: target.replace("{D}", &phrase(dem_f, 1)),
                        generic: String::new(),
                        source,
                    });
                }
            }
        }
        // rows without gendered references are loaded but never queried
        let (generic_a, generic_b) = if li == 0 {
            (
                "Me caen bien las personas altas.",
                "No me gustan las personas ricas.",
            )
        } else {
            (
                "Mi piacciono le persone alte.",
                "Non mi piacciono le persone ricche.",
            )
        };
        for (k, (descriptor, en, generic)) in [
            ("tall people", "I like tall people.", generic_a),
            ("rich people", "I don't like rich people.", generic_b),
        ]
        .into_iter()
        .enumerate()
        {
            rows.push(MhbRow {
                id: format!("{}-g{}", lang.code, k + 1),
                lang: lang.code,
                source: en.to_string(),
                masc: String::new(),
                fem: String::new(),
                generic: generic.to_string(),
                template_key: derive_template_key(en, descriptor).unwrap(),
            });
        }
    }
    rows
}

fn mhb_tsv(rows: &[MhbRow]) -> String {
    let mut out = String::from("id\tlang\tsource\tmasc\tfem\tneutral\tgeneric\ttemplate_key\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t\t{}\t{}",
            r.id, r.lang, r.source, r.masc, r.fem, r.generic, r.template_key
        );
    }
    // a broken row: no references at all
    out.push_str("spa-bad\tspa\tI like short friends.\t\t\t\t\ti like ⟨D⟩.\n");
    out
}

fn script_mhb(model: &mut ScriptedModel, rows: &[MhbRow]) -> HashMap<&'static str, String> {
    let mut nmt: HashMap<&'static str, String> = HashMap::new();
    for (li, lang) in [SPA, ITA].iter().enumerate() {
        let article = if li == 0 {
            ("los", "estos")
        } else {
            ("i", "questi")
        };
        let mut lines = String::new();
        let gendered_rows = rows.iter().filter(|r| r.lang == lang.code);
        for (i, row) in gendered_rows.enumerate() {
            if row.masc.is_empty() {
                let _ = writeln!(lines, "{}", row.generic);
                continue;
            }
            // the reference system defaults to the masculine and sometimes
            // picks a plainer article
            let nmt_line = if i % 4 == 3 {
                row.masc.replacen(article.1, article.0, 1)
            } else {
                row.masc.clone()
            };
            let _ = writeln!(lines, "{nmt_line}");

            let unsp = match i {
                41 => "",
                _ if i % 5 == 2 => row.fem.as_str(),
                _ => row.masc.as_str(),
            };
            let (masc, fem) = match i {
                7 => (Some(row.masc.as_str()), None),
                23 => (None, None),
                _ => (Some(row.masc.as_str()), Some(row.fem.as_str())),
            };
            model.add(lang, &row.source, unsp, masc, fem);
        }
        nmt.insert(lang.code, lines);
    }
    nmt
}

// ---------------------------------------------------------------- BUG

/// English entity, stereotypical gender (true = male), Spanish m/f, Italian m/f.
const ENTITIES: [(&str, bool, [&str; 4]); 8] = [
    (
        "doctor",
        true,
        ["médico", "médica", "dottore", "dottoressa"],
    ),
    (
        "engineer",
        true,
        ["ingeniero", "ingeniera", "ingegnere", "ingegnera"],
    ),
    (
        "lawyer",
        true,
        ["abogado", "abogada", "avvocato", "avvocata"],
    ),
    (
        "janitor",
        true,
        ["conserje", "conserje", "custode", "custode"],
    ),
    (
        "nurse",
        false,
        ["enfermero", "enfermera", "infermiere", "infermiera"],
    ),
    (
        "secretary",
        false,
        ["secretario", "secretaria", "segretario", "segretaria"],
    ),
    (
        "teacher",
        false,
        ["profesor", "profesora", "maestro", "maestra"],
    ),
    ("cook", false, ["cocinero", "cocinera", "cuoco", "cuoca"]),
];

const PATTERNS: [(&str, &str, &str); 4] = [
    (
        "The {e} finished {poss} shift early.",
        "{Art} {f} terminó su turno temprano.",
        "{Art} {f} ha finito il turno presto.",
    ),
    (
        "The {e} said that {subj} would be late.",
        "{Art} {f} dijo que llegaría tarde.",
        "{Art} {f} ha detto che avrebbe fatto tardi.",
    ),
    (
        "Everyone trusted the {e} because {subj} was careful.",
        "Todos confiaban en {art} {f} porque trabajaba con cuidado.",
        "Tutti si fidavano {di} {f} perché lavorava con cura.",
    ),
    (
        "The {e} lost {poss} keys yesterday.",
        "{Art} {f} perdió sus llaves ayer.",
        "{Art} {f} ha perso le chiavi ieri.",
    ),
];

struct BugRow {
    id: String,
    source: String,
    entity: &'static str,
    male: bool,
    pro: bool,
    /// (pattern, entity index) to rebuild translations.
    pattern: usize,
    entity_index: usize,
}

fn bug_rows() -> Vec<BugRow> {
    // unequal strata: (male, pro) sizes
    let strata = [
        (true, true, 12),
        (true, false, 9),
        (false, true, 10),
        (false, false, 8),
    ];
    let mut rows = Vec::new();
    for (male, pro, size) in strata {
        let stereo_male = if pro { male } else { !male };
        let pool: Vec<usize> = (0..ENTITIES.len())
            .filter(|&i| ENTITIES[i].1 == stereo_male)
            .collect();
        for k in 0..size {
            let entity_index = pool[k % pool.len()];
            let pattern = (k / pool.len()) % PATTERNS.len();
            let (subj, poss) = if male { ("he", "his") } else { ("she", "her") };
            let source = PATTERNS[pattern]
                .0
                .replace("{e}", ENTITIES[entity_index].0)
                .replace("{subj}", subj)
                .replace("{poss}", poss);
            rows.push(BugRow {
                id: String::new(),
                source,
                entity: ENTITIES[entity_index].0,
                male,
                pro,
                pattern,
                entity_index,
            });
        }
    }
    // interleave strata in file order the way a real dump would be
    rows.sort_by(|a, b| a.source.cmp(&b.source));
    for (i, row) in rows.iter_mut().enumerate() {
        row.id = format!("bug-{:04}", i + 1);
    }
    rows
}

fn starts_with_vowel(s: &str) -> bool {
    s.starts_with(['a', 'e', 'i', 'o', 'u'])
}

fn bug_translation(lang: usize, row: &BugRow, male_form: bool) -> String {
    let form = ENTITIES[row.entity_index].2[2 * lang + usize::from(!male_form)];
    let pattern = if lang == 0 {
        PATTERNS[row.pattern].1
    } else {
        PATTERNS[row.pattern].2
    };
    let (art_cap, art, di) = if lang == 0 {
        if male_form {
            ("El", "el", "")
        } else {
            ("La", "la", "")
        }
    } else if starts_with_vowel(form) {
        ("L'", "l'", "dell'")
    } else if male_form {
        ("Il", "il", "del")
    } else {
        ("La", "la", "della")
    };
    let glue = |s: &str| s.replace("' ", "'");
    glue(
        &pattern
            .replace("{Art}", art_cap)
            .replace("{art}", art)
            .replace("{di}", if di.is_empty() { art } else { di })
            .replace("{f}", form),
    )
}

/// The same sentence with the entity replaced by a word the lexicon does
/// not know.
fn bug_paraphrase(lang: usize, row: &BugRow) -> String {
    let form = ENTITIES[row.entity_index].2[2 * lang];
    let text = bug_translation(lang, row, true);
    let text = text.replacen(form, "persona", 1);
    if lang == 0 {
        text.replacen("El persona", "La persona", 1)
            .replacen("el persona", "la persona", 1)
    } else {
        text.replacen("Il persona", "La persona", 1)
            .replacen("del persona", "della persona", 1)
            .replacen("L'persona", "La persona", 1)
            .replacen("dell'persona", "della persona", 1)
    }
}

fn bug_tsv(rows: &[BugRow]) -> String {
    let mut out = String::from("id\tsource\tentity\tgold_gender\tstereotype\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.id,
            r.source,
            r.entity,
            if r.male { "male" } else { "female" },
            if r.pro { "pro" } else { "anti" }
        );
    }
    out
}

fn bug_lexicon() -> String {
    let mut out = String::from("lang\tentity\tmasc_forms\tfem_forms\n");
    for (li, lang) in [SPA, ITA].iter().enumerate() {
        for (entity, _, forms) in ENTITIES {
            if entity == "janitor" {
                continue;
            }
            let _ = writeln!(
                out,
                "{}\t{entity}\t{}\t{}",
                lang.code,
                forms[2 * li],
                forms[2 * li + 1]
            );
        }
    }
    out
}

fn script_bug(model: &mut ScriptedModel, rows: &[BugRow]) -> HashMap<&'static str, String> {
    let mut nmt = HashMap::new();
    for (li, lang) in [SPA, ITA].iter().enumerate() {
        let mut lines = String::new();
        for (i, row) in rows.iter().enumerate() {
            let stereo_male = ENTITIES[row.entity_index].1;
            // the reference system follows the stereotype
            let _ = writeln!(lines, "{}", bug_translation(li, row, stereo_male));
            let unsp = if i % 17 == 11 {
                String::new()
            } else if i % 6 == 1 {
                bug_paraphrase(li, row)
            } else if i % 4 == 0 {
                bug_translation(li, row, row.male)
            } else {
                bug_translation(li, row, stereo_male)
            };
            let masc = bug_translation(li, row, true);
            let fem = bug_translation(li, row, false);
            let (masc, fem) = match () {
                _ if i % 9 == 4 => (Some(masc.as_str()), None),
                _ if i % 13 == 7 => (None, None),
                _ => (Some(masc.as_str()), Some(fem.as_str())),
            };
            model.add(lang, &row.source, &unsp, masc, fem);
        }
        nmt.insert(lang.code, lines);
    }
    nmt
}

// ---------------------------------------------------------------- FLoRes

/// English, Spanish, Italian, and for sentences about groups of people the
/// feminine rendering the gender-specific prompt produces.
/// (English, Spanish, Italian, feminine Spanish and Italian).
type FloresLine = (
    &'static str,
    &'static str,
    &'static str,
    Option<(&'static str, &'static str)>,
);

const FLORES: [FloresLine; 12] = [
    (
        "The museum opens at nine in the morning.",
        "El museo abre a las nueve de la mañana.",
        "Il museo apre alle nove del mattino.",
        None,
    ),
    (
        "The river crosses the whole valley.",
        "El río atraviesa todo el valle.",
        "Il fiume attraversa tutta la valle.",
        None,
    ),
    (
        "The researchers published their results last week.",
        "Los investigadores publicaron sus resultados la semana pasada.",
        "I ricercatori hanno pubblicato i loro risultati la settimana scorsa.",
        Some((
            "Las investigadoras publicaron sus resultados la semana pasada.",
            "Le ricercatrici hanno pubblicato i loro risultati la settimana scorsa.",
        )),
    ),
    (
        "It rained for three days without stopping.",
        "Llovió durante tres días sin parar.",
        "È piovuto per tre giorni senza sosta.",
        None,
    ),
    (
        "The players celebrated the victory with their fans.",
        "Los jugadores celebraron la victoria con sus aficionados.",
        "I giocatori hanno festeggiato la vittoria con i loro tifosi.",
        Some((
            "Las jugadoras celebraron la victoria con sus aficionadas.",
            "Le giocatrici hanno festeggiato la vittoria con le loro tifose.",
        )),
    ),
    (
        "The train to the capital was delayed.",
        "El tren a la capital se retrasó.",
        "Il treno per la capitale era in ritardo.",
        None,
    ),
    (
        "The city has more than two million inhabitants.",
        "La ciudad tiene más de dos millones de habitantes.",
        "La città ha più di due milioni di abitanti.",
        None,
    ),
    (
        "Scientists are studying the new virus.",
        "Los científicos están estudiando el nuevo virus.",
        "Gli scienziati stanno studiando il nuovo virus.",
        Some((
            "Las científicas están estudiando el nuevo virus.",
            "Le scienziate stanno studiando il nuovo virus.",
        )),
    ),
    (
        "The bridge was built in the nineteenth century.",
        "El puente fue construido en el siglo diecinueve.",
        "Il ponte fu costruito nel diciannovesimo secolo.",
        None,
    ),
    (
        "Most of the island is covered by forest.",
        "La mayor parte de la isla está cubierta de bosque.",
        "Gran parte dell'isola è coperta da foreste.",
        None,
    ),
    (
        "The market sells fresh fruit every day.",
        "El mercado vende fruta fresca todos los días.",
        "Il mercato vende frutta fresca ogni giorno.",
        None,
    ),
    (
        "The volunteers cleaned the beach on Sunday.",
        "Los voluntarios limpiaron la playa el domingo.",
        "I volontari hanno pulito la spiaggia domenica.",
        Some((
            "Las voluntarias limpiaron la playa el domingo.",
            "Le volontarie hanno pulito la spiaggia domenica.",
        )),
    ),
];

fn script_flores(model: &mut ScriptedModel) -> (String, HashMap<&'static str, (String, String)>) {
    let mut source = String::new();
    let mut per_lang = HashMap::new();
    for (en, ..) in FLORES {
        let _ = writeln!(source, "{en}");
    }
    for (li, lang) in [SPA, ITA].iter().enumerate() {
        let (mut refs, mut nmt) = (String::new(), String::new());
        for (i, (en, spa, ita, fem)) in FLORES.iter().enumerate() {
            let reference = if li == 0 { *spa } else { *ita };
            let _ = writeln!(refs, "{reference}");
            let words: Vec<&str> = reference.split(' ').collect();
            // drop one word every third line
            let nmt_line = if i % 3 == 1 && words.len() > 4 {
                [&words[..2], &words[3..]].concat().join(" ")
            } else {
                reference.to_string()
            };
            let _ = writeln!(nmt, "{nmt_line}");
            let unsp = if i == 3 {
                reference
                    .replacen(" durante", "", 1)
                    .replacen(" per", "", 1)
            } else {
                reference.to_string()
            };
            let masc = if i == 9 {
                reference
                    .replacen("bosque", "bosques", 1)
                    .replacen("foreste", "boschi", 1)
            } else {
                reference.to_string()
            };
            let fem = fem
                .map(|f| if li == 0 { f.0 } else { f.1 })
                .unwrap_or(reference);
            if i == 5 {
                model.add(lang, en, &unsp, Some(&masc), None);
            } else {
                model.add(lang, en, &unsp, Some(&masc), Some(fem));
            }
        }
        per_lang.insert(lang.code, (refs, nmt));
    }
    (source, per_lang)
}

// ---------------------------------------------------------------- files

const MHB_MANIFEST: &str = r#"# Gendered reference panels: BLEU and chrF per reference, plus the
# swapped-reference control.
experiment = "mhb-panel"
languages = ["spa", "ita"]
output_dir = "out/mhb-panel"

[backend]
id = "replay:scripted-fixture"
replay_store = "replay.jsonl"

[prompt]
seed = 20240611
n_ices = 8

[metrics]
tokenization = "whitespace"

[data]
mhb = "mhb.tsv"

[data.nmt_outputs]
spa = "nmt/mhb.spa.txt"
ita = "nmt/mhb.ita.txt"
"#;

const BUG_MANIFEST: &str = r#"# Gender prediction accuracy on a balanced coreference sample.
experiment = "bug-bias"
languages = ["spa", "ita"]
output_dir = "out/bug-bias"

[backend]
id = "replay:scripted-fixture"
replay_store = "replay.jsonl"

[prompt]
seed = 20240611

[data]
mhb = "mhb.tsv"
bug = "bug.tsv"
lexicon = "lexicon.tsv"

[data.nmt_outputs]
spa = "nmt/bug.spa.txt"
ita = "nmt/bug.ita.txt"

[sampling]
seed = 7
"#;

const FLORES_MANIFEST: &str = r#"# Masculine/feminine convergence on general-domain sentences.
experiment = "flores-delta"
languages = ["spa", "ita"]
output_dir = "out/flores-delta"

[backend]
id = "replay:scripted-fixture"
replay_store = "replay.jsonl"

[prompt]
seed = 20240611

[data]
mhb = "mhb.tsv"
flores_source = "flores/eng.txt"

[data.flores_references]
spa = "flores/spa.txt"
ita = "flores/ita.txt"

[data.nmt_outputs]
spa = "nmt/flores.spa.txt"
ita = "nmt/flores.ita.txt"
"#;

const PUBLISHED_HEADER: &str = "# manifest: published\n# backend: published\n# tokenization: spm\n";

fn published_mhb() -> String {
    format!(
        "# experiment: mhb-panel\n{PUBLISHED_HEADER}# note: cross-language averages as printed in the published aggregate table\n\n# table: bleu\n\
lang,system,output_kind,masc,fem,both,swapped\n\
avg,ingested-nmt,unsp,40.07,28.67,40.41,\n\
avg,llm-standard,unsp,41.57,30.92,42.43,\n\
avg,llm-gendered,masc,41.63,30.12,42.08,fem\n\
avg,llm-gendered,fem,31.84,39.55,43.37,masc\n"
    )
}

fn published_bias() -> String {
    let rows = [
        ("ces", [59.3, 6.5, 57.2, 11.3, 61.7, 10.1, 48.4, 8.8]),
        ("deu", [66.4, 11.8, 67.8, 10.8, 70.6, 9.5, 52.4, 8.6]),
        ("ita", [46.2, 12.5, 45.4, 13.7, 46.5, 14.4, 38.9, 14.2]),
        ("spa", [52.5, 10.1, 50.0, 11.4, 49.4, 14.4, 34.2, 29.4]),
        ("rus", [36.6, 25.0, 39.5, 23.8, 38.1, 27.5, 36.9, 16.7]),
        ("ukr", [41.2, 11.1, 42.1, 10.1, 43.2, 8.8, 39.0, 1.0]),
    ];
    let mut out = format!(
        "# experiment: bug-bias\n{PUBLISHED_HEADER}# note: subset sizes and unknown rates are not published; delta_b is printed as a magnitude\n\n# table: bias\nlang,system,output_kind,n,accuracy,delta_b,unknown_rate\n"
    );
    for (lang, v) in rows {
        for (k, (system, kind)) in [
            ("ingested-nmt", "unsp"),
            ("llm-standard", "unsp"),
            ("llm-gendered", "masc"),
            ("llm-gendered", "fem"),
        ]
        .into_iter()
        .enumerate()
        {
            let _ = writeln!(
                out,
                "{lang},{system},{kind},,{:.2},{:.2},",
                v[2 * k],
                v[2 * k + 1]
            );
        }
    }
    out
}

fn published_flores() -> String {
    let langs = [
        "cat", "deu", "fra", "ita", "nld", "por", "rus", "spa", "swe", "ukr", "avg",
    ];
    let series: [(&str, &str, [f64; 11]); 5] = [
        (
            "ingested-nmt",
            "unsp",
            [
                45.81, 43.38, 53.43, 36.34, 33.96, 53.05, 38.40, 32.99, 47.58, 36.31, 42.13,
            ],
        ),
        (
            "llm-standard",
            "unsp",
            [
                46.05, 41.79, 52.24, 34.70, 32.54, 51.76, 36.17, 31.34, 47.74, 36.02, 41.04,
            ],
        ),
        (
            "llm-gendered",
            "masc",
            [
                46.06, 42.18, 52.05, 34.46, 32.36, 51.68, 36.23, 31.25, 47.90, 36.05, 41.02,
            ],
        ),
        (
            "llm-gendered",
            "fem",
            [
                43.83, 41.02, 50.25, 33.25, 31.43, 49.29, 34.57, 29.72, 47.63, 35.38, 39.64,
            ],
        ),
        (
            "llm-gendered",
            "delta_f",
            [
                2.23, 1.16, 1.80, 1.21, 0.93, 2.39, 1.66, 1.53, 0.27, 0.67, 1.39,
            ],
        ),
    ];
    let mut out = format!(
        "# experiment: flores-delta\n{PUBLISHED_HEADER}# note: the avg delta_f is the mean of the per-language differences\n\n# table: flores-bleu\nlang,system,output_kind,bleu\n"
    );
    for (j, lang) in langs.iter().enumerate() {
        for (system, kind, values) in &series {
            let _ = writeln!(out, "{lang},{system},{kind},{:.2}", values[j]);
        }
    }
    out
}

fn write(dir: &Path, rel: &str, text: &str) {
    let path = dir.join(rel);
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(&path, text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
}

fn main() {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"));
    let mut model = ScriptedModel::default();

    let mhb = mhb_rows();
    write(&dir, "mhb.tsv", &mhb_tsv(&mhb));
    for (lang, text) in script_mhb(&mut model, &mhb) {
        write(&dir, &format!("nmt/mhb.{lang}.txt"), &text);
    }

    let bug = bug_rows();
    write(&dir, "bug.tsv", &bug_tsv(&bug));
    write(&dir, "lexicon.tsv", &bug_lexicon());
    for (lang, text) in script_bug(&mut model, &bug) {
        write(&dir, &format!("nmt/bug.{lang}.txt"), &text);
    }

    let (source, per_lang) = script_flores(&mut model);
    write(&dir, "flores/eng.txt", &source);
    for (lang, (refs, nmt)) in per_lang {
        write(&dir, &format!("flores/{lang}.txt"), &refs);
        write(&dir, &format!("nmt/flores.{lang}.txt"), &nmt);
    }

    write(&dir, "mhb-panel.toml", MHB_MANIFEST);
    write(&dir, "bug-bias.toml", BUG_MANIFEST);
    write(&dir, "flores-delta.toml", FLORES_MANIFEST);
    write(&dir, "published/mhb-panel.csv", &published_mhb());
    write(&dir, "published/bug-bias.csv", &published_bias());
    write(&dir, "published/flores-delta.csv", &published_flores());

    let store_path = dir.join("replay.jsonl");
    let _ = std::fs::remove_file(&store_path);
    let store = Arc::new(ReplayStore::open(&store_path, ReplayMode::RecordMissing).unwrap());
    let backend = ReplayBackend::new("scripted", store.clone()).with_inner(Arc::new(model));
    for name in ["mhb-panel.toml", "bug-bias.toml", "flores-delta.toml"] {
        let manifest = Manifest::load(dir.join(name)).unwrap();
        let run = translate(&manifest, &backend).unwrap_or_else(|e| panic!("{name}: {e}"));
        let n: usize = run.outputs.values().map(Vec::len).sum();
        println!("{name}: {n} output records");
    }
    store.compact().unwrap();
    println!("{} completions in {}", store.len(), store_path.display());
}
