//! GWAS summary-statistics ingestion: streaming parse, QC filters, allele
//! harmonization, and minor-allele orientation.
//!
//! Harmonization aligns the outcome record to the exposure's allele pair
//! (swap, strand-complement, or both), resolves palindromic SNPs by allele
//! frequency when both frequencies are far enough from 0.5, and finally
//! orients every SNP so the counted allele is the exposure minor allele.
//! Both betas flip together, so the product γ̂·Γ̂ is invariant under
//! orientation.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SnpSummary, SummaryDataset};

/// Column mapping for a summary-statistics file.
///
/// The six core columns are required and missing ones are fatal; chromosome,
/// position, and p-value are used when the mapped header is present and
/// default to placeholders otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FormatSpec {
    pub snp_id: String,
    pub effect_allele: String,
    pub other_allele: String,
    pub eaf: String,
    pub beta: String,
    pub se: String,
    pub chrom: String,
    pub pos: String,
    pub pval: String,
}

impl Default for FormatSpec {
    fn default() -> Self {
        FormatSpec {
            snp_id: "SNP".into(),
            effect_allele: "A1".into(),
            other_allele: "A2".into(),
            eaf: "EAF".into(),
            beta: "BETA".into(),
            se: "SE".into(),
            chrom: "CHR".into(),
            pos: "POS".into(),
            pval: "P".into(),
        }
    }
}

/// One parsed and validated GWAS row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawGwasRecord {
    pub snp_id: String,
    pub chrom: String,
    pub pos: u64,
    pub effect_allele: char,
    pub other_allele: char,
    /// Effect-allele frequency.
    pub eaf: f64,
    pub beta: f64,
    pub se: f64,
    pub pval: f64,
}

/// A malformed row, reported with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowError {
    pub line: usize,
    pub message: String,
}

/// Result of a streaming parse: valid records plus per-row errors. Nothing is
/// silently coerced.
#[derive(Debug, Clone, Default)]
pub struct ParseOutput {
    pub records: Vec<RawGwasRecord>,
    pub row_errors: Vec<RowError>,
}

/// QC and harmonization bookkeeping.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct HarmonizationLog {
    pub kept: usize,
    pub dropped_missing: usize,
    pub dropped_maf: usize,
    pub dropped_region: usize,
    pub dropped_ambiguous: usize,
    pub flipped: usize,
}

fn open_maybe_gzip(path: &Path) -> Result<Box<dyn Read>> {
    let file = File::open(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(flate2::read::MultiGzDecoder::new(file)))
    } else {
        Ok(Box::new(file))
    }
}

/// Streaming parse of a delimited summary-statistics file.
///
/// The delimiter (tab or comma) is sniffed from the header row. Gzip input is
/// detected from the `.gz` extension. Missing required columns are fatal;
/// malformed rows are collected into [`ParseOutput::row_errors`].
pub fn parse_gwas(path: impl AsRef<Path>, spec: &FormatSpec) -> Result<ParseOutput> {
    let path = path.as_ref();
    let reader = BufReader::new(open_maybe_gzip(path)?);
    parse_gwas_reader(reader, spec, &path.display().to_string())
}

fn parse_gwas_reader(
    reader: impl BufRead,
    spec: &FormatSpec,
    path: &str,
) -> Result<ParseOutput> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => {
            return Err(Error::Io {
                path: path.into(),
                source: e,
            })
        }
        None => {
            return Err(Error::MalformedInput {
                path: path.into(),
                message: "empty file".into(),
            })
        }
    };
    let delim = if header.contains('\t') { '\t' } else { ',' };
    let columns: Vec<&str> = header.split(delim).map(str::trim).collect();
    let find = |name: &str| columns.iter().position(|c| *c == name);
    let require = |name: &str| {
        find(name).ok_or_else(|| Error::MissingColumn {
            column: name.into(),
            path: path.into(),
        })
    };
    let idx_id = require(&spec.snp_id)?;
    let idx_ea = require(&spec.effect_allele)?;
    let idx_oa = require(&spec.other_allele)?;
    let idx_eaf = require(&spec.eaf)?;
    let idx_beta = require(&spec.beta)?;
    let idx_se = require(&spec.se)?;
    let idx_chrom = find(&spec.chrom);
    let idx_pos = find(&spec.pos);
    let idx_pval = find(&spec.pval);

    let mut out = ParseOutput::default();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                return Err(Error::Io {
                    path: path.into(),
                    source: e,
                })
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(delim).map(str::trim).collect();
        match parse_row(
            &fields, line_no, idx_id, idx_ea, idx_oa, idx_eaf, idx_beta, idx_se, idx_chrom,
            idx_pos, idx_pval,
        ) {
            Ok(rec) => out.records.push(rec),
            Err(msg) => out.row_errors.push(RowError {
                line: line_no,
                message: msg,
            }),
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn parse_row(
    fields: &[&str],
    _line: usize,
    idx_id: usize,
    idx_ea: usize,
    idx_oa: usize,
    idx_eaf: usize,
    idx_beta: usize,
    idx_se: usize,
    idx_chrom: Option<usize>,
    idx_pos: Option<usize>,
    idx_pval: Option<usize>,
) -> std::result::Result<RawGwasRecord, String> {
    let get = |idx: usize, name: &str| -> std::result::Result<&str, String> {
        fields
            .get(idx)
            .copied()
            .ok_or_else(|| format!("row too short for column {name}"))
    };
    let num = |idx: usize, name: &str| -> std::result::Result<f64, String> {
        let raw = get(idx, name)?;
        raw.parse::<f64>()
            .map_err(|_| format!("unparseable {name} {raw:?}"))
    };
    let allele = |idx: usize, name: &str| -> std::result::Result<char, String> {
        let raw = get(idx, name)?;
        let mut chars = raw.chars();
        match (chars.next().map(|c| c.to_ascii_uppercase()), chars.next()) {
            (Some(c @ ('A' | 'C' | 'G' | 'T')), None) => Ok(c),
            _ => Err(format!("invalid {name} allele {raw:?}")),
        }
    };

    let snp_id = get(idx_id, "snp_id")?.to_string();
    if snp_id.is_empty() {
        return Err("empty snp id".into());
    }
    let effect_allele = allele(idx_ea, "effect")?;
    let other_allele = allele(idx_oa, "other")?;
    if effect_allele == other_allele {
        return Err(format!("identical alleles {effect_allele}/{other_allele}"));
    }
    let eaf = num(idx_eaf, "eaf")?;
    if !eaf.is_finite() || !(0.0..=1.0).contains(&eaf) {
        return Err(format!("eaf out of range: {eaf}"));
    }
    let beta = num(idx_beta, "beta")?;
    if !beta.is_finite() {
        return Err(format!("nonfinite beta: {beta}"));
    }
    let se = num(idx_se, "se")?;
    if !(se > 0.0) || !se.is_finite() {
        return Err("nonpositive se".into());
    }
    let pval = match idx_pval {
        Some(idx) => {
            let p = num(idx, "pval")?;
            if !(p > 0.0 && p <= 1.0) {
                return Err(format!("p-value out of range: {p}"));
            }
            p
        }
        None => 1.0,
    };
    let chrom = match idx_chrom {
        Some(idx) => get(idx, "chrom")?.to_string(),
        None => "NA".into(),
    };
    let pos = match idx_pos {
        Some(idx) => {
            let raw = get(idx, "pos")?;
            raw.parse::<u64>()
                .map_err(|_| format!("unparseable pos {raw:?}"))?
        }
        None => 0,
    };
    Ok(RawGwasRecord {
        snp_id,
        chrom,
        pos,
        effect_allele,
        other_allele,
        eaf,
        beta,
        se,
        pval,
    })
}

/// A genomic interval to exclude, positions inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub chrom: String,
    pub start: u64,
    pub end: u64,
}

impl Region {
    /// The Major Histocompatibility Complex region excluded by default.
    pub fn mhc() -> Region {
        Region {
            chrom: "6".into(),
            start: 26_000_000,
            end: 34_000_000,
        }
    }

    fn contains(&self, chrom: &str, pos: u64) -> bool {
        normalize_chrom(chrom) == normalize_chrom(&self.chrom)
            && pos >= self.start
            && pos <= self.end
    }
}

fn normalize_chrom(c: &str) -> &str {
    c.strip_prefix("chr").or_else(|| c.strip_prefix("CHR")).unwrap_or(c)
}

/// Default minor-allele-frequency cutoff.
pub const DEFAULT_MAF_MIN: f64 = 0.01;

/// Drops records below the MAF cutoff or inside excluded regions.
pub fn qc_filter(
    records: Vec<RawGwasRecord>,
    maf_min: f64,
    exclude_regions: &[Region],
) -> (Vec<RawGwasRecord>, HarmonizationLog) {
    let mut log = HarmonizationLog::default();
    let mut kept = Vec::with_capacity(records.len());
    for rec in records {
        let maf = rec.eaf.min(1.0 - rec.eaf);
        if maf < maf_min {
            log.dropped_maf += 1;
            continue;
        }
        if exclude_regions.iter().any(|r| r.contains(&rec.chrom, rec.pos)) {
            log.dropped_region += 1;
            continue;
        }
        kept.push(rec);
    }
    log.kept = kept.len();
    (kept, log)
}

/// Reads a SNP whitelist, one id per line. Blank lines are ignored; an empty
/// list is an error.
pub fn load_snp_whitelist(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    let path = path.as_ref();
    let reader = BufReader::new(open_maybe_gzip(path)?);
    let mut ids = HashSet::new();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let id = line.trim();
        if !id.is_empty() {
            ids.insert(id.to_string());
        }
    }
    if ids.is_empty() {
        return Err(Error::EmptyWhitelist);
    }
    Ok(ids)
}

/// Order-preserving whitelist filter.
pub fn filter_by_whitelist(
    records: Vec<RawGwasRecord>,
    whitelist: &HashSet<String>,
) -> Vec<RawGwasRecord> {
    records
        .into_iter()
        .filter(|r| whitelist.contains(&r.snp_id))
        .collect()
}

/// One harmonized SNP: the canonical interchange row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonizedRow {
    pub snp_id: String,
    pub gamma_hat: f64,
    pub sigma_x: f64,
    pub big_gamma_hat: f64,
    pub sigma_y: f64,
    /// Exposure effect-allele frequency after minor-allele orientation; at
    /// most 0.5 by construction.
    pub eaf_exposure: f64,
    /// Whether minor-allele orientation negated both betas.
    pub flipped: bool,
}

/// Default frequency margin for resolving palindromic SNPs: both datasets
/// must have |EAF − 0.5| above this for the frequencies to decide strand.
pub const DEFAULT_PALINDROMIC_MARGIN: f64 = 0.08;

fn complement(a: char) -> char {
    match a {
        'A' => 'T',
        'T' => 'A',
        'C' => 'G',
        'G' => 'C',
        other => other,
    }
}

fn is_palindromic(ea: char, oa: char) -> bool {
    complement(ea) == oa
}

enum Alignment {
    /// Outcome effect allele already matches the exposure effect allele.
    Same,
    /// Outcome alleles are swapped (possibly on the other strand): negate.
    SwapNegate,
    Ambiguous,
    Mismatch,
}

fn align(exp: &RawGwasRecord, out: &RawGwasRecord, margin: f64) -> Alignment {
    let (ea, oa) = (exp.effect_allele, exp.other_allele);
    if is_palindromic(ea, oa) {
        // allele labels cannot distinguish strand here, only frequencies can
        if !is_palindromic(out.effect_allele, out.other_allele)
            || (out.effect_allele != ea && out.effect_allele != oa)
        {
            return Alignment::Mismatch;
        }
        if (exp.eaf - 0.5).abs() <= margin || (out.eaf - 0.5).abs() <= margin {
            return Alignment::Ambiguous;
        }
        // orient the outcome frequency to the exposure effect allele label
        let out_eaf_for_ea = if out.effect_allele == ea {
            out.eaf
        } else {
            1.0 - out.eaf
        };
        if (exp.eaf < 0.5) == (out_eaf_for_ea < 0.5) {
            if out.effect_allele == ea {
                Alignment::Same
            } else {
                Alignment::SwapNegate
            }
        } else {
            // frequencies disagree: the apparent label match was the other
            // strand, so the action inverts
            if out.effect_allele == ea {
                Alignment::SwapNegate
            } else {
                Alignment::Same
            }
        }
    } else {
        if out.effect_allele == ea && out.other_allele == oa {
            return Alignment::Same;
        }
        if out.effect_allele == oa && out.other_allele == ea {
            return Alignment::SwapNegate;
        }
        let (cea, coa) = (complement(ea), complement(oa));
        if out.effect_allele == cea && out.other_allele == coa {
            return Alignment::Same;
        }
        if out.effect_allele == coa && out.other_allele == cea {
            return Alignment::SwapNegate;
        }
        Alignment::Mismatch
    }
}

/// Joins exposure and outcome records, aligns outcome alleles to the
/// exposure, and applies minor-allele orientation.
///
/// Returns the harmonized rows in exposure order plus the log. Fails only
/// when no SNP id overlaps between the two sets.
pub fn harmonize(
    exposure: &[RawGwasRecord],
    outcome: &[RawGwasRecord],
    palindromic_margin: f64,
) -> Result<(Vec<HarmonizedRow>, HarmonizationLog)> {
    let by_id: HashMap<&str, &RawGwasRecord> =
        outcome.iter().map(|r| (r.snp_id.as_str(), r)).collect();
    let mut log = HarmonizationLog::default();
    let mut rows = Vec::new();
    let mut overlap = 0usize;
    for exp in exposure {
        let Some(out) = by_id.get(exp.snp_id.as_str()) else {
            log.dropped_missing += 1;
            continue;
        };
        overlap += 1;
        let aligned_beta = match align(exp, out, palindromic_margin) {
            Alignment::Same => out.beta,
            Alignment::SwapNegate => -out.beta,
            Alignment::Ambiguous | Alignment::Mismatch => {
                log.dropped_ambiguous += 1;
                continue;
            }
        };
        // minor-allele orientation: count the exposure minor allele
        let (gamma_hat, big_gamma_hat, eaf_exposure, flipped) = if exp.eaf > 0.5 {
            log.flipped += 1;
            (-exp.beta, -aligned_beta, 1.0 - exp.eaf, true)
        } else {
            (exp.beta, aligned_beta, exp.eaf, false)
        };
        rows.push(HarmonizedRow {
            snp_id: exp.snp_id.clone(),
            gamma_hat,
            sigma_x: exp.se,
            big_gamma_hat,
            sigma_y: out.se,
            eaf_exposure,
            flipped,
        });
    }
    if overlap == 0 {
        return Err(Error::NoCommonInstruments);
    }
    log.kept = rows.len();
    Ok((rows, log))
}

/// Harmonized rows as an estimator-ready dataset.
pub fn to_dataset(rows: &[HarmonizedRow], provenance: impl Into<String>) -> SummaryDataset {
    SummaryDataset::new(
        rows.iter()
            .map(|r| SnpSummary {
                snp_id: r.snp_id.clone(),
                gamma_hat: r.gamma_hat,
                sigma_x: r.sigma_x,
                big_gamma_hat: r.big_gamma_hat,
                sigma_y: r.sigma_y,
            })
            .collect(),
        provenance,
    )
}

/// Canonical harmonized TSV header.
pub const HARMONIZED_HEADER: &str =
    "snp_id\tgamma_hat\tsigma_x\tbig_gamma_hat\tsigma_y\teaf_exposure\tflipped";

/// Writes the canonical harmonized TSV. Floats use shortest round-trip
/// formatting, so write → read is lossless.
pub fn write_harmonized_tsv(rows: &[HarmonizedRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{HARMONIZED_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.snp_id,
            r.gamma_hat,
            r.sigma_x,
            r.big_gamma_hat,
            r.sigma_y,
            r.eaf_exposure,
            u8::from(r.flipped)
        )?;
    }
    Ok(())
}

/// Reads the canonical harmonized TSV written by [`write_harmonized_tsv`].
pub fn read_harmonized_tsv(path: impl AsRef<Path>) -> Result<Vec<HarmonizedRow>> {
    let path = path.as_ref();
    let reader = BufReader::new(open_maybe_gzip(path)?);
    let display = path.display().to_string();
    let mut lines = reader.lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::Io {
            path: display.clone(),
            source: e,
        })?
        .ok_or_else(|| Error::MalformedInput {
            path: display.clone(),
            message: "empty file".into(),
        })?;
    if header.trim_end() != HARMONIZED_HEADER {
        return Err(Error::MalformedInput {
            path: display,
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Io {
            path: display.clone(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let bad = |msg: String| Error::MalformedInput {
            path: display.clone(),
            message: format!("line {}: {msg}", i + 2),
        };
        if f.len() != 7 {
            return Err(bad(format!("expected 7 columns, got {}", f.len())));
        }
        let num = |s: &str, name: &str| {
            s.parse::<f64>()
                .map_err(|_| bad(format!("unparseable {name} {s:?}")))
        };
        rows.push(HarmonizedRow {
            snp_id: f[0].to_string(),
            gamma_hat: num(f[1], "gamma_hat")?,
            sigma_x: num(f[2], "sigma_x")?,
            big_gamma_hat: num(f[3], "big_gamma_hat")?,
            sigma_y: num(f[4], "sigma_y")?,
            eaf_exposure: num(f[5], "eaf_exposure")?,
            flipped: match f[6] {
                "0" => false,
                "1" => true,
                other => return Err(bad(format!("flipped must be 0/1, got {other:?}"))),
            },
        });
    }
    Ok(rows)
}
