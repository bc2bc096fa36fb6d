use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;

use mr_regger::ingest::{
    self, FormatSpec, HarmonizationLog, Region, RowError, DEFAULT_MAF_MIN,
    DEFAULT_PALINDROMIC_MARGIN,
};

use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct HarmonizeArgs {
    /// Exposure GWAS summary file (TSV/CSV, optionally .gz).
    #[arg(long)]
    exposure: PathBuf,
    /// Outcome GWAS summary file.
    #[arg(long)]
    outcome: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Minimum minor-allele frequency.
    #[arg(long, default_value_t = DEFAULT_MAF_MIN)]
    maf_min: f64,
    /// Skip the default MHC region filter (chr6 26Mb–34Mb).
    #[arg(long)]
    no_mhc_filter: bool,
    /// Extra exclusion regions as CHR:START-END; repeatable.
    #[arg(long = "exclude-region")]
    exclude_regions: Vec<String>,
    /// SNP id whitelist (one id per line); the pre-clumped independence hook.
    #[arg(long)]
    whitelist: Option<PathBuf>,
    /// Frequency margin around 0.5 below which palindromic SNPs are dropped.
    #[arg(long, default_value_t = DEFAULT_PALINDROMIC_MARGIN)]
    palindromic_margin: f64,
    /// Exposure column mapping: comma list of snp=,ea=,oa=,eaf=,beta=,se=[,chr=,pos=,p=].
    #[arg(long)]
    exposure_columns: Option<String>,
    /// Outcome column mapping, same syntax.
    #[arg(long)]
    outcome_columns: Option<String>,
}

#[derive(Debug, Serialize)]
struct SideLog {
    parsed: usize,
    row_errors: usize,
    row_error_sample: Vec<RowError>,
    qc: HarmonizationLog,
}

#[derive(Debug, Serialize)]
struct FullLog {
    schema: &'static str,
    exposure: SideLog,
    outcome: SideLog,
    harmonization: HarmonizationLog,
}

pub(crate) fn parse_column_spec(spec: &str) -> Result<FormatSpec> {
    let mut fs = FormatSpec::default();
    for part in spec.split(',') {
        let (key, value) = part
            .split_once('=')
            .with_context(|| format!("column mapping {part:?} is not key=value"))?;
        let value = value.trim().to_string();
        match key.trim() {
            "snp" => fs.snp_id = value,
            "ea" => fs.effect_allele = value,
            "oa" => fs.other_allele = value,
            "eaf" => fs.eaf = value,
            "beta" => fs.beta = value,
            "se" => fs.se = value,
            "chr" => fs.chrom = value,
            "pos" => fs.pos = value,
            "p" => fs.pval = value,
            other => bail!("unknown column key {other:?} (want snp/ea/oa/eaf/beta/se/chr/pos/p)"),
        }
    }
    Ok(fs)
}

fn parse_region(spec: &str) -> Result<Region> {
    let err = || format!("region {spec:?} is not CHR:START-END");
    let (chrom, range) = spec.split_once(':').with_context(err)?;
    let (start, end) = range.split_once('-').with_context(err)?;
    Ok(Region {
        chrom: chrom.to_string(),
        start: start.parse().with_context(err)?,
        end: end.parse().with_context(err)?,
    })
}

fn load_side(
    path: &PathBuf,
    columns: &Option<String>,
    maf_min: f64,
    regions: &[Region],
    whitelist: &Option<std::collections::HashSet<String>>,
) -> Result<(Vec<ingest::RawGwasRecord>, SideLog)> {
    let spec = match columns {
        Some(s) => parse_column_spec(s)?,
        None => FormatSpec::default(),
    };
    let parsed = ingest::parse_gwas(path, &spec)?;
    let n_parsed = parsed.records.len();
    let records = match whitelist {
        Some(wl) => ingest::filter_by_whitelist(parsed.records, wl),
        None => parsed.records,
    };
    let (kept, qc) = ingest::qc_filter(records, maf_min, regions);
    let log = SideLog {
        parsed: n_parsed,
        row_errors: parsed.row_errors.len(),
        row_error_sample: parsed.row_errors.into_iter().take(100).collect(),
        qc,
    };
    Ok((kept, log))
}

pub fn run(args: HarmonizeArgs) -> Result<i32> {
    let mut regions: Vec<Region> = Vec::new();
    if !args.no_mhc_filter {
        regions.push(Region::mhc());
    }
    for spec in &args.exclude_regions {
        regions.push(parse_region(spec)?);
    }
    let whitelist = match &args.whitelist {
        Some(path) => Some(ingest::load_snp_whitelist(path)?),
        None => None,
    };

    let (exposure, exp_log) = load_side(
        &args.exposure,
        &args.exposure_columns,
        args.maf_min,
        &regions,
        &whitelist,
    )?;
    let (outcome, out_log) = load_side(
        &args.outcome,
        &args.outcome_columns,
        args.maf_min,
        &regions,
        &whitelist,
    )?;

    let (rows, harm_log) = ingest::harmonize(&exposure, &outcome, args.palindromic_margin)?;

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let tsv_path = args.out.join("harmonized.tsv");
    let file = std::fs::File::create(&tsv_path)
        .with_context(|| format!("creating {}", tsv_path.display()))?;
    ingest::write_harmonized_tsv(&rows, std::io::BufWriter::new(file))?;

    let full = FullLog {
        schema: mr_regger::report::SCHEMA_VERSION,
        exposure: exp_log,
        outcome: out_log,
        harmonization: harm_log,
    };
    std::fs::write(
        args.out.join("harmonization_log.json"),
        serde_json::to_string_pretty(&full)? + "\n",
    )?;

    let mut manifest = RunManifest::new(serde_json::json!({
        "command": "harmonize",
        "maf_min": args.maf_min,
        "mhc_filter": !args.no_mhc_filter,
        "exclude_regions": args.exclude_regions,
        "palindromic_margin": args.palindromic_margin,
        "whitelist": args.whitelist.as_ref().map(|p| p.display().to_string()),
    }));
    manifest.digest_input(&args.exposure)?;
    manifest.digest_input(&args.outcome)?;
    if let Some(wl) = &args.whitelist {
        manifest.digest_input(wl)?;
    }
    manifest.write(&args.out)?;

    eprintln!(
        "harmonized {} SNPs ({} flipped to minor-allele coding, {} ambiguous dropped) -> {}",
        harm_log.kept,
        harm_log.flipped,
        harm_log.dropped_ambiguous,
        tsv_path.display()
    );
    Ok(0)
}
