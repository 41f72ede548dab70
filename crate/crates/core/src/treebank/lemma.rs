//! Verb grouping keys: lowercased surface form with irregular forms mapped
//! to their base. Regular inflections are left alone.

const IRREGULAR: &[(&str, &str)] = &[
    ("am", "be"), ("are", "be"), ("is", "be"), ("was", "be"), ("were", "be"), ("been", "be"),
    ("began", "begin"), ("begun", "begin"),
    ("bought", "buy"),
    ("brought", "bring"),
    ("built", "build"),
    ("came", "come"),
    ("did", "do"), ("does", "do"), ("done", "do"),
    ("drew", "draw"), ("drawn", "draw"),
    ("found", "find"),
    ("gave", "give"), ("given", "give"),
    ("got", "get"), ("gotten", "get"),
    ("had", "have"), ("has", "have"),
    ("held", "hold"),
    ("kept", "keep"),
    ("led", "lead"),
    ("left", "leave"),
    ("lent", "lend"),
    ("lost", "lose"),
    ("made", "make"),
    ("meant", "mean"),
    ("met", "meet"),
    ("paid", "pay"),
    ("ran", "run"),
    ("said", "say"),
    ("saw", "see"), ("seen", "see"),
    ("sent", "send"),
    ("showed", "show"), ("shown", "show"),
    ("sold", "sell"),
    ("spent", "spend"),
    ("spoke", "speak"), ("spoken", "speak"),
    ("taught", "teach"),
    ("told", "tell"),
    ("took", "take"), ("taken", "take"),
    ("threw", "throw"), ("thrown", "throw"),
    ("went", "go"), ("gone", "go"),
    ("won", "win"),
    ("wrote", "write"), ("written", "write"),
];

pub fn verb_lemma(surface: &str) -> String {
    let lower = surface.to_lowercase();
    IRREGULAR
        .iter()
        .find(|(form, _)| *form == lower)
        .map(|(_, base)| base.to_string())
        .unwrap_or(lower)
}
