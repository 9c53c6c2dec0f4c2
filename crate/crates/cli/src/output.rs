//! Writers for every report the binary emits. All JSON objects and CSV rows
//! carry a `format` tag.

use std::io::Write;

use drugmatch::bayes::Prediction;
use drugmatch::correction::PipelineReport;
use drugmatch::dosage::{parse_dosage, Strength};
use drugmatch::druginfo::InfoReport;
use drugmatch::fuzzy::ManufacturerClusters;
use drugmatch::matcher::{MatchDecision, Metrics};
use drugmatch::{DrugType, RecordPair};
use serde::Serialize;
use serde_json::{json, Value};

pub const DECISION_FORMAT: &str = "drugmatch.decision/1";
pub const METRICS_FORMAT: &str = "drugmatch.metrics/1";
pub const CORRECTION_FORMAT: &str = "drugmatch.correction/1";
pub const SUMMARY_FORMAT: &str = "drugmatch.correction-summary/1";
pub const TRAIN_FORMAT: &str = "drugmatch.train-report/1";
pub const CLASSIFY_FORMAT: &str = "drugmatch.classification/1";
pub const INFO_FORMAT: &str = "drugmatch.info/1";
pub const DEDUP_FORMAT: &str = "drugmatch.dedup/1";
pub const DOSAGE_FORMAT: &str = "drugmatch.dosage/1";

pub fn write_json_line<W: Write + ?Sized, T: Serialize>(out: &mut W, value: &T) -> anyhow::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Serialize)]
struct DecisionRow<'a> {
    format: &'static str,
    index: usize,
    label: u8,
    reason: &'static str,
    name_ratio: Option<u8>,
    clean_name_1: Option<&'a str>,
    clean_name_2: Option<&'a str>,
    strength_1: Option<Strength>,
    strength_2: Option<Strength>,
    package_total_1: Option<u64>,
    package_total_2: Option<u64>,
    gold_label: Option<u8>,
}

fn decision_row<'a>(index: usize, pair: &RecordPair, d: &'a MatchDecision) -> DecisionRow<'a> {
    DecisionRow {
        format: DECISION_FORMAT,
        index,
        label: d.label.as_int(),
        reason: d.reason.as_str(),
        name_ratio: d.name_ratio,
        clean_name_1: d.source1.clean_name.as_deref(),
        clean_name_2: d.source2.clean_name.as_deref(),
        strength_1: d.source1.strength,
        strength_2: d.source2.strength,
        package_total_1: d.source1.package_total,
        package_total_2: d.source2.package_total,
        gold_label: pair.gold_label.map(|g| g.as_int()),
    }
}

pub fn write_decisions_csv<W: Write + ?Sized>(
    out: &mut W,
    pairs: &[RecordPair],
    decisions: &[MatchDecision],
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "format",
        "index",
        "label",
        "reason",
        "name_ratio",
        "clean_name_1",
        "clean_name_2",
        "strength_1",
        "strength_2",
        "package_total_1",
        "package_total_2",
        "gold_label",
    ])?;
    for (i, (pair, d)) in pairs.iter().zip(decisions).enumerate() {
        let r = decision_row(i, pair, d);
        w.write_record([
            r.format.to_string(),
            r.index.to_string(),
            r.label.to_string(),
            r.reason.to_string(),
            opt(r.name_ratio),
            opt(r.clean_name_1),
            opt(r.clean_name_2),
            opt(r.strength_1),
            opt(r.strength_2),
            opt(r.package_total_1),
            opt(r.package_total_2),
            opt(r.gold_label),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_decisions_json<W: Write + ?Sized>(
    out: &mut W,
    pairs: &[RecordPair],
    decisions: &[MatchDecision],
) -> anyhow::Result<()> {
    for (i, (pair, d)) in pairs.iter().zip(decisions).enumerate() {
        write_json_line(out, &decision_row(i, pair, d))?;
    }
    Ok(())
}

fn ratio(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"))
}

/// Plain-text metrics block; the first line names its format.
pub fn metrics_block(what: &str, m: &Metrics) -> String {
    let c = &m.confusion;
    format!(
        "# {METRICS_FORMAT} {what}\n\
         accuracy  {:.6}\n\
         precision {}\n\
         recall    {}\n\
         confusion tp={} fp={} fn={} tn={}\n",
        m.accuracy,
        ratio(m.precision),
        ratio(m.recall),
        c.tp,
        c.fp,
        c.fn_,
        c.tn
    )
}

pub struct TrainReport {
    pub documents: usize,
    pub train: usize,
    pub test: usize,
    pub vocabulary: usize,
    pub metrics: Metrics,
    pub top_tokens: Vec<(DrugType, Vec<(String, u64)>)>,
}

impl TrainReport {
    pub fn to_json(&self) -> Value {
        let top: serde_json::Map<String, Value> = self
            .top_tokens
            .iter()
            .map(|(t, toks)| (t.as_str().to_string(), json!(toks)))
            .collect();
        json!({
            "format": TRAIN_FORMAT,
            "documents": self.documents,
            "train": self.train,
            "test": self.test,
            "vocabulary": self.vocabulary,
            "positive_class": DrugType::TraditionalChinese.as_str(),
            "metrics": self.metrics,
            "top_tokens": top,
        })
    }
}

pub fn write_train_text<W: Write + ?Sized>(out: &mut W, r: &TrainReport) -> anyhow::Result<()> {
    writeln!(out, "documents {} (train {}, test {})", r.documents, r.train, r.test)?;
    writeln!(out, "vocabulary {}", r.vocabulary)?;
    writeln!(out, "positive class {}", DrugType::TraditionalChinese)?;
    out.write_all(metrics_block("train", &r.metrics).as_bytes())?;
    let c = &r.metrics.confusion;
    writeln!(out, "{:>22} {:>10} {:>10}", "", "pred tcm", "pred west")?;
    writeln!(out, "{:>22} {:>10} {:>10}", "actual tcm", c.tp, c.fn_)?;
    writeln!(out, "{:>22} {:>10} {:>10}", "actual western", c.fp, c.tn)?;
    for (t, toks) in &r.top_tokens {
        let list: Vec<String> = toks.iter().map(|(tok, n)| format!("{tok}:{n}")).collect();
        writeln!(out, "top {t}: {}", list.join(" "))?;
    }
    Ok(())
}

pub fn classification_json(name: &str, p: &Prediction) -> Value {
    json!({
        "format": CLASSIFY_FORMAT,
        "name": name,
        "drug_type": p.drug_type,
        "confidence": p.confidence(),
        "posterior": {
            "western": p.posterior_of(DrugType::Western),
            "traditional_chinese": p.posterior_of(DrugType::TraditionalChinese),
        },
    })
}

pub fn write_correction_report<W: Write + ?Sized>(
    out: &mut W,
    pairs: &[RecordPair],
    report: &PipelineReport,
) -> anyhow::Result<()> {
    for e in &report.entries {
        if !e.decision.label.is_match() {
            continue;
        }
        let pair = &pairs[e.index];
        let c = e.correction.as_ref();
        let row = json!({
            "format": CORRECTION_FORMAT,
            "pair_index": e.index,
            "approval_1": pair.source1.approval_raw,
            "approval_2": pair.source2.approval_raw,
            "kind": e.inconsistency,
            "action": c.map(|c| c.action),
            "chosen": c.and_then(|c| c.chosen).map(|a| a.to_string()),
            "confidence": c.map(|c| c.confidence),
            "predicted_type": c.and_then(|c| c.predicted_type),
        });
        write_json_line(out, &row)?;
    }
    let mut summary = serde_json::to_value(&report.summary)?;
    if let Value::Object(map) = &mut summary {
        map.insert("format".into(), SUMMARY_FORMAT.into());
    }
    write_json_line(out, &summary)
}

pub fn info_json(r: &InfoReport) -> Value {
    let mut v = serde_json::to_value(r).expect("info report serializes");
    if let Value::Object(map) = &mut v {
        map.insert("format".into(), INFO_FORMAT.into());
    }
    v
}

pub fn write_info_text<W: Write + ?Sized>(out: &mut W, r: &InfoReport) -> anyhow::Result<()> {
    writeln!(out, "{:<24} {}", "name", r.name)?;
    writeln!(out, "{:<24} {}", "clean name", r.clean_name.as_deref().unwrap_or("-"))?;
    writeln!(out, "{:<24} {}", "popularity", r.popularity)?;
    writeln!(out, "{:<24} {}", "manufacturers", r.manufacturer_count)?;
    writeln!(out, "{:<24} {}", "raw manufacturer names", r.raw_manufacturer_count)?;
    for m in &r.manufacturers {
        writeln!(out, "  {m}")?;
    }
    writeln!(out, "{:<24} {}", "duplicated groups", r.duplicated_groups.len())?;
    for g in &r.duplicated_groups {
        writeln!(out, "  {}", g.members.join(" | "))?;
    }
    Ok(())
}

pub fn dedup_json(c: &ManufacturerClusters) -> Value {
    json!({
        "format": DEDUP_FORMAT,
        "duplicates": c.duplicates().map(|g| &g.members).collect::<Vec<_>>(),
        "unique": c.unique().collect::<Vec<_>>(),
    })
}

pub fn write_dedup_text<W: Write + ?Sized>(out: &mut W, c: &ManufacturerClusters) -> anyhow::Result<()> {
    writeln!(out, "# duplicates")?;
    for g in c.duplicates() {
        writeln!(out, "{}", g.members.join("\t"))?;
    }
    writeln!(out, "# unique")?;
    for name in c.unique() {
        writeln!(out, "{name}")?;
    }
    Ok(())
}

pub fn dosage_json(raw: &str) -> Value {
    let parsed = parse_dosage(raw);
    json!({
        "format": DOSAGE_FORMAT,
        "input": raw,
        "strength": parsed.strength.map(|s| s.to_string()),
        "package": parsed.package.as_ref().map(|p| json!({
            "factors": p.factors(),
            "total": p.total(),
        })),
        "residue": parsed.residue,
    })
}
