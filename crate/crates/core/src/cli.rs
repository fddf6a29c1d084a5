//! The `ndglcm` command-line driver.
//!
//! Exit codes: 0 on success, 1 when the input data is at fault, 2 for usage
//! errors (bad flags or flag combinations).

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cooccur::{compute_glcm, DirectionPattern};
use crate::corpus::{generate_synthetic, load_dataset, SynthSpec};
use crate::error::Error;
use crate::features::{read_feature_csv, write_feature_csv, Averaging, FeatureConfig, FeatureRecord, FeatureSet};
use crate::io::read_image;
use crate::retrieval::{PrecisionReport, RetrievalIndex};

/// Environment variable naming a user-supplied dataset root for `evaluate`.
pub const DATASET_ENV: &str = "NDGLCM_DATASET";

/// Reference average precisions for the 36-class texture benchmark, per feature set.
pub const PUBLISHED_PRECISION: [(FeatureSet, f64); 2] =
    [(FeatureSet::Trace4, 0.8194), (FeatureSet::Haralick4, 0.7222)];

#[derive(Debug, Parser)]
#[command(name = "ndglcm", version, about = "n-dimensional grey-level co-occurrence matrices and texture retrieval")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the co-occurrence matrix of one image for one displacement.
    Glcm(GlcmArgs),
    /// Extract texture features from an image or a class-per-directory dataset.
    Features(FeaturesArgs),
    /// Build a retrieval index from a dataset or a feature CSV.
    Index(IndexArgs),
    /// Rank index entries by similarity to an entry or an image.
    Query(QueryArgs),
    /// Measure average precision@m (defaults: 1st and 4th image per class as queries, m = 8).
    Evaluate(EvaluateArgs),
    /// Write a seeded synthetic texture dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args, Serialize)]
pub struct GlcmArgs {
    /// Image file (.pgm, .png or .ndh).
    pub image: PathBuf,
    /// Unit displacement, e.g. `1,0,0`; components in {-1, 0, 1}.
    #[arg(long, allow_hyphen_values = true)]
    pub direction: String,
    /// Distance k; the offset is k times the direction.
    #[arg(long, short = 'k', default_value_t = 1)]
    pub k: usize,
    /// Print joint probabilities instead of counts.
    #[arg(long)]
    pub normalize: bool,
    /// Requantize to this many grey levels first.
    #[arg(long)]
    pub levels: Option<u32>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write to a file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FeatureArgs {
    /// Distance k between paired pixels.
    #[arg(long, short = 'k', default_value_t = 1)]
    pub k: usize,
    /// Requantize every image to this many grey levels (default: keep native levels).
    #[arg(long)]
    pub levels: Option<u32>,
    /// `all` for every canonical direction, or a `;`-separated list such as `1,0;0,1`.
    #[arg(long, default_value = "all", allow_hyphen_values = true)]
    pub directions: String,
    /// `per-direction` averages features over directions; `mean-matrix` averages the matrices.
    #[arg(long, default_value = "per-direction")]
    pub averaging: String,
}

impl FeatureArgs {
    fn config(&self) -> Result<FeatureConfig, CliError> {
        if self.k == 0 {
            return Err(CliError::Usage("--k must be at least 1".into()));
        }
        let directions = if self.directions.trim() == "all" {
            None
        } else {
            Some(
                self.directions
                    .split(';')
                    .map(|d| d.parse::<DirectionPattern>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CliError::Usage(e.to_string()))?,
            )
        };
        Ok(FeatureConfig {
            distance: self.k,
            levels: self.levels,
            directions,
            averaging: self.averaging.parse::<Averaging>().map_err(|e| CliError::Usage(e.to_string()))?,
        })
    }
}

#[derive(Debug, Args, Serialize)]
pub struct FeaturesArgs {
    /// A single image or a dataset root (`root/<class>/<image>`).
    pub path: PathBuf,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct IndexArgs {
    /// Dataset root or a feature CSV written by `features`.
    pub path: PathBuf,
    /// Where to write the index JSON.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "trace4")]
    pub feature_set: String,
    #[command(flatten)]
    pub features: FeatureArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct QueryArgs {
    /// Index JSON written by `index`.
    #[arg(long)]
    pub index: PathBuf,
    /// Query with a stored entry.
    #[arg(long, conflicts_with = "image", required_unless_present = "image")]
    pub id: Option<String>,
    /// Query with an image file; its features use the extraction flags below.
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Number of results.
    #[arg(long, short = 'm', default_value_t = 8)]
    pub m: usize,
    /// Whether the query entry itself may be returned.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub include_self: bool,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Dataset root, feature CSV or index JSON. Falls back to $NDGLCM_DATASET.
    pub path: Option<PathBuf>,
    /// Comma-separated feature sets (trace4, haralick4, combined8).
    #[arg(long, default_value = "trace4,haralick4")]
    pub feature_set: String,
    /// Retrieved images per query.
    #[arg(long, short = 'm', default_value_t = 8)]
    pub m: usize,
    /// Whether the query image may appear among its own results.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub include_self: bool,
    /// 1-based positions, within each class's sorted ids, of the query images.
    #[arg(long, default_value = "1,4")]
    pub queries: String,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write one report per feature set into this directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Output dataset root.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 36)]
    pub classes: usize,
    #[arg(long, default_value_t = 9)]
    pub per_class: usize,
    /// Side length of the square images.
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    #[arg(long, default_value_t = 32)]
    pub levels: u32,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ndglcm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Executes a parsed command, writing results to `out` and the resolved
/// configuration to stderr.
pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult {
    match cli.command {
        Command::Glcm(a) => cmd_glcm(&a, out),
        Command::Features(a) => cmd_features(&a, out),
        Command::Index(a) => cmd_index(&a, out),
        Command::Query(a) => cmd_query(&a, out),
        Command::Evaluate(a) => cmd_evaluate(&a, out),
        Command::Synth(a) => cmd_synth(&a, out),
    }
}

fn print_config(name: &str, args: &impl Serialize) {
    let json = serde_json::to_string(args).unwrap_or_default();
    eprintln!("# {name} {json}");
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Data(Error::Io { path: path.to_path_buf(), source: e })
}

fn emit(text: &str, dest: Option<&Path>, out: &mut dyn Write) -> CliResult {
    match dest {
        Some(path) => fs::write(path, text).map_err(io_err(path)),
        None => out.write_all(text.as_bytes()).map_err(io_err(Path::new("<stdout>"))),
    }
}

fn cmd_glcm(a: &GlcmArgs, out: &mut dyn Write) -> CliResult {
    print_config("glcm", a);
    let direction: DirectionPattern = a.direction.parse().map_err(|e: Error| CliError::Usage(e.to_string()))?;
    if a.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let mut image = read_image(&a.image)?;
    if let Some(l) = a.levels {
        image = image.quantize(l)?;
    }
    let g = compute_glcm(&image, &direction, a.k)?;
    let text = match (a.normalize, a.format) {
        (false, Format::Csv) => g.to_csv(),
        (false, Format::Json) => g.to_json()? + "\n",
        (true, Format::Csv) => g.normalize()?.to_csv(),
        (true, Format::Json) => g.normalize()?.to_json()? + "\n",
    };
    emit(&text, a.out.as_deref(), out)
}

/// Features for a single image (id = file name, class empty) or a dataset.
fn extract_records(path: &Path, config: &FeatureConfig) -> CliResult<Vec<FeatureRecord>> {
    if path.is_dir() {
        Ok(load_dataset(path)?.extract_features(config)?)
    } else {
        let image = read_image(path)?;
        let features = config.extract(&image)?;
        let id = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        Ok(vec![FeatureRecord { id, class: String::new(), features }])
    }
}

fn cmd_features(a: &FeaturesArgs, out: &mut dyn Write) -> CliResult {
    print_config("features", a);
    let config = a.features.config()?;
    let records = extract_records(&a.path, &config)?;
    let text = match a.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_feature_csv(&mut buf, &records)?;
            String::from_utf8(buf).expect("csv output is UTF-8")
        }
        Format::Json => serde_json::to_string_pretty(&records).map_err(Error::from)? + "\n",
    };
    emit(&text, a.out.as_deref(), out)
}

fn parse_feature_set(s: &str) -> CliResult<FeatureSet> {
    s.trim().parse().map_err(|e: Error| CliError::Usage(e.to_string()))
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn load_records(path: &Path, args: &FeatureArgs) -> CliResult<Vec<FeatureRecord>> {
    if path.is_file() && is_csv(path) {
        let file = fs::File::open(path).map_err(io_err(path))?;
        Ok(read_feature_csv(file)?)
    } else if path.is_dir() {
        extract_records(path, &args.config()?)
    } else {
        Err(CliError::Data(Error::format(path, "expected a dataset directory or a feature .csv")))
    }
}

fn cmd_index(a: &IndexArgs, out: &mut dyn Write) -> CliResult {
    print_config("index", a);
    let set = parse_feature_set(&a.feature_set)?;
    let records = load_records(&a.path, &a.features)?;
    let index = RetrievalIndex::from_records(&records, set)?;
    index.save(&a.out)?;
    writeln!(out, "indexed {} entries ({set}) into {}", index.len(), a.out.display())
        .map_err(io_err(Path::new("<stdout>")))
}

fn schema_feature_set(index: &RetrievalIndex) -> CliResult<FeatureSet> {
    FeatureSet::ALL
        .into_iter()
        .find(|s| s.names().iter().copied().eq(index.schema().iter().map(String::as_str)))
        .ok_or_else(|| CliError::Data(Error::Schema(format!("unrecognised index schema {:?}", index.schema()))))
}

fn cmd_query(a: &QueryArgs, out: &mut dyn Write) -> CliResult {
    print_config("query", a);
    if a.m == 0 {
        return Err(CliError::Usage("-m must be at least 1".into()));
    }
    let index = RetrievalIndex::load(&a.index)?;
    let (probe, exclude) = match (&a.id, &a.image) {
        (Some(id), _) => {
            let entry = index.entry(id).ok_or_else(|| Error::UnknownId(id.clone()))?;
            (entry.features.clone(), (!a.include_self).then_some(id.as_str()))
        }
        (None, Some(path)) => {
            let set = schema_feature_set(&index)?;
            let features = a.features.config()?.extract(&read_image(path)?)?;
            (set.select(&features)?, None)
        }
        (None, None) => return Err(CliError::Usage("pass --id or --image".into())),
    };
    let hits = index.query(&probe, a.m, exclude)?;
    let class_of = |id: &str| index.entry(id).map(|e| e.class_label.clone()).unwrap_or_default();
    let text = match a.format {
        Format::Csv => {
            let mut s = String::from("rank,id,class,distance\n");
            for (rank, h) in hits.iter().enumerate() {
                s.push_str(&format!("{},{},{},{}\n", rank + 1, h.id, class_of(&h.id), h.distance));
            }
            s
        }
        Format::Json => {
            let rows: Vec<_> = hits
                .iter()
                .enumerate()
                .map(|(rank, h)| {
                    serde_json::json!({"rank": rank + 1, "id": h.id, "class": class_of(&h.id), "distance": h.distance})
                })
                .collect();
            serde_json::to_string_pretty(&rows).map_err(Error::from)? + "\n"
        }
    };
    emit(&text, None, out)
}

fn parse_positions(s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(|t| match t.trim().parse::<usize>() {
            Ok(p) if p >= 1 => Ok(p - 1),
            _ => Err(CliError::Usage(format!("bad query position `{t}` (1-based)"))),
        })
        .collect()
}

fn cmd_evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> CliResult {
    print_config("evaluate", a);
    if a.m == 0 {
        return Err(CliError::Usage("-m must be at least 1".into()));
    }
    let positions = parse_positions(&a.queries)?;
    let sets = a
        .feature_set
        .split(',')
        .map(parse_feature_set)
        .collect::<CliResult<Vec<_>>>()?;
    let path = match &a.path {
        Some(p) => p.clone(),
        None => std::env::var_os(DATASET_ENV)
            .map(PathBuf::from)
            .ok_or_else(|| CliError::Usage(format!("no dataset given and ${DATASET_ENV} is unset")))?,
    };

    let indexes: Vec<(FeatureSet, RetrievalIndex)> = if path.is_file() && is_json(&path) {
        let index = RetrievalIndex::load(&path)?;
        vec![(schema_feature_set(&index)?, index)]
    } else {
        let records = load_records(&path, &a.features)?;
        sets.iter()
            .map(|&s| Ok((s, RetrievalIndex::from_records(&records, s)?)))
            .collect::<CliResult<_>>()?
    };

    let mut reports: Vec<(FeatureSet, PrecisionReport)> = Vec::new();
    for (set, index) in &indexes {
        let queries = index.protocol_queries(&positions);
        reports.push((*set, index.evaluate(&queries, a.m, a.include_self)?));
    }
    if let Some(first) = indexes.first() {
        let classes = first.1.classes();
        eprintln!(
            "# corpus: {} images in {} classes; {} queries per feature set",
            first.1.len(),
            classes.len(),
            reports[0].1.per_query.len()
        );
    }

    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        for (set, r) in &reports {
            let (name, text) = match a.format {
                Format::Csv => (format!("{set}.csv"), r.to_csv()),
                Format::Json => (format!("{set}.json"), r.to_json()? + "\n"),
            };
            let p = dir.join(name);
            fs::write(&p, text).map_err(io_err(&p))?;
        }
    } else {
        let text = match a.format {
            Format::Csv => reports
                .iter()
                .map(|(set, r)| format!("# feature_set={set}\n{}", r.to_csv()))
                .collect::<String>(),
            Format::Json => {
                let map: serde_json::Map<String, serde_json::Value> = reports
                    .iter()
                    .map(|(set, r)| Ok((set.to_string(), serde_json::to_value(r)?)))
                    .collect::<Result<_, serde_json::Error>>()
                    .map_err(Error::from)?;
                serde_json::to_string_pretty(&map).map_err(Error::from)? + "\n"
            }
        };
        emit(&text, None, out)?;
    }

    // Side-by-side summary on stderr so stdout stays machine readable.
    eprintln!("{:<10} {:>17} {:>10}", "features", "average_precision", "published");
    for (set, r) in &reports {
        let published = PUBLISHED_PRECISION
            .iter()
            .find(|(s, _)| s == set)
            .map_or("-".to_string(), |(_, v)| format!("{v:.4}"));
        eprintln!("{set:<10} {:>17.4} {published:>10}", r.average_precision);
    }
    Ok(())
}

fn cmd_synth(a: &SynthArgs, out: &mut dyn Write) -> CliResult {
    print_config("synth", a);
    let spec = SynthSpec {
        classes: a.classes,
        per_class: a.per_class,
        size: a.size,
        levels: a.levels,
        seed: a.seed,
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let corpus = generate_synthetic(spec)?;
    let manifest = corpus.write_tree(&a.out)?;
    writeln!(
        out,
        "wrote {} images in {} classes to {}",
        manifest.image_count(),
        manifest.classes.len(),
        a.out.display()
    )
    .map_err(io_err(Path::new("<stdout>")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn help_documents_defaults() {
        let mut cmd = Cli::command();
        let help = cmd.find_subcommand_mut("evaluate").unwrap().render_long_help().to_string();
        assert!(help.contains("[default: 8]"), "{help}");
        assert!(help.contains("[default: 1,4]"));
        assert!(help.contains("[default: true]"));
        assert!(help.contains("[default: 1]"));
        assert!(help.contains("[default: all]"));
    }

    #[test]
    fn feature_args_parse() {
        let args = FeatureArgs {
            k: 2,
            levels: Some(8),
            directions: "1,0;0,-1".into(),
            averaging: "mean-matrix".into(),
        };
        let c = args.config().unwrap();
        assert_eq!(c.directions.unwrap().len(), 2);
        assert_eq!(c.averaging, Averaging::MeanMatrix);
        let bad = FeatureArgs { directions: "1,2".into(), ..args.clone() };
        assert!(matches!(bad.config(), Err(CliError::Usage(_))));
        let zero = FeatureArgs { k: 0, ..args };
        assert!(matches!(zero.config(), Err(CliError::Usage(_))));
    }

    #[test]
    fn positions_are_one_based() {
        assert_eq!(parse_positions("1,4").unwrap(), vec![0, 3]);
        assert!(parse_positions("0").is_err());
        assert!(parse_positions("x").is_err());
    }
}
