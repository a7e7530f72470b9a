//! Command-line front end. Exit status 0 on success, 2 for usage and
//! contract errors, 1 for internal failures.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::error::Error;
use crate::labels::{find_label, parse_label_lines, to_label_line, LabelRecord};
use crate::featmix::FeatureSequence;
use crate::localize::{
    compute_tcam, default_thresholds, evaluate_map, extract_proposals, ClassHead, GtSegment, Proposal,
    ProposalConfig, TCam,
};
use crate::mixers::{videomix_pair, MixSource};
use crate::rng::RngStream;
use crate::sampler::{sample_cuboids, sample_lambda, CuboidCoords, Extent, Mask, MixVariant};
use crate::stcam::{render_cam, st_cam, FeatureMap};
use crate::tensor::{argmax, Shape, SoftLabel, VideoClip};
use crate::toylab::{run_experiment, ExperimentConfig};
use crate::vct::{read_vct, write_vct, Dtype};

#[derive(Debug, Parser)]
#[command(name = "videomix", version, about = "Cuboid-mixing video augmentation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mix clip B into clip A and write the clip, its label and the recipe.
    Augment {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// JSON-lines labels keyed by file stem.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        variant: MixVariant,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sample index of the random stream, for reproducing one batch item.
        #[arg(long, default_value_t = 0)]
        sample: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample cuboids for an extent and write the 0/1 mask volume.
    SampleMask {
        #[arg(long)]
        variant: MixVariant,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        frames: usize,
        #[arg(long)]
        height: usize,
        #[arg(long)]
        width: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the synthetic training experiment described by a config file.
    TrainToy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_csv: PathBuf,
    },
    /// Score localization output against ground-truth segments.
    EvalWstal {
        /// `S x 1 x 1 x K` activation tensors; the file stem is the video id.
        #[arg(long)]
        tcam: Vec<PathBuf>,
        /// `S x 1 x 1 x D` feature tensors, scored with `--weights`.
        #[arg(long)]
        features: Vec<PathBuf>,
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Precomputed proposals (JSON array).
        #[arg(long)]
        proposals: Option<PathBuf>,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.5)]
        ratio: f64,
        /// Threshold raw scores even when every score is non-positive.
        #[arg(long)]
        no_shift: bool,
        /// Extract proposals for every class instead of the top-scoring one.
        #[arg(long)]
        all_classes: bool,
    },
    /// Render a spatio-temporal class activation map.
    Cam {
        /// `T x H x W x C` feature map.
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        class: usize,
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug)]
pub enum CliError {
    Contract(Error),
    Usage(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 1,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Contract(e) => write!(f, "{e}"),
            CliError::Usage(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Contract(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::Usage(format!("Io: cannot read {}: {e}", path.display())))
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("Io: cannot read {}: {e}", path.display())))
}

fn read_clip(path: &Path) -> CliResult<VideoClip> {
    Ok(read_vct(&read_bytes(path)?)?)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::Usage(format!("MalformedJson: {}: {e}", path.display())))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Writes through a temporary file in the destination directory, then
/// renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let internal = |e: std::io::Error| CliError::Internal(format!("Io: cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(internal)?;
    tmp.write_all(bytes).map_err(internal)?;
    tmp.persist(path).map_err(|e| internal(e.error))?;
    Ok(())
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(format!("Json: {e}")))
}

fn lookup_label<'a>(records: &'a [LabelRecord], id: &str) -> CliResult<&'a SoftLabel> {
    find_label(records, id).map(|r| &r.label).ok_or_else(|| {
        CliError::Contract(Error::InvalidConfig {
            key: "labels".into(),
            reason: format!("no label for id '{id}'"),
        })
    })
}

/// Runs one command, returning what should go to standard output.
pub fn execute(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Augment {
            a,
            b,
            labels,
            variant,
            alpha,
            seed,
            sample,
            out,
        } => {
            let (clip_a, clip_b) = (read_clip(&a)?, read_clip(&b)?);
            let records = parse_label_lines(&read_text(&labels)?)?;
            let (id_a, id_b) = (stem(&a), stem(&b));
            let (label_a, label_b) = (lookup_label(&records, &id_a)?, lookup_label(&records, &id_b)?);
            let stream = RngStream::new(seed).with_sample(sample);
            let (clip, label, recipe) = videomix_pair(
                MixSource {
                    id: &id_a,
                    clip: &clip_a,
                    label: label_a,
                },
                MixSource {
                    id: &id_b,
                    clip: &clip_b,
                    label: label_b,
                },
                variant,
                alpha,
                stream,
            )?;
            let recipe_json = to_json(&recipe)?;
            write_atomic(&out, &write_vct(&clip, Dtype::F32)?)?;
            let line = to_label_line(&LabelRecord { id: id_a, label });
            write_atomic(&sidecar(&out, ".label.jsonl"), line.as_bytes())?;
            write_atomic(&sidecar(&out, ".recipe.json"), recipe_json.as_bytes())?;
            Ok(recipe_json)
        }
        Command::SampleMask {
            variant,
            alpha,
            seed,
            frames,
            height,
            width,
            out,
        } => {
            let extent = Extent::new(frames, height, width);
            if extent.voxels() == 0 {
                return Err(Error::DimZero { field: "mask extent" }.into());
            }
            let mut gen = RngStream::new(seed).generator();
            let lambda = sample_lambda(alpha, &mut gen)?;
            let cuboids = sample_cuboids(variant, lambda, extent, &mut gen);
            let mask = Mask::from_cuboids(&cuboids, extent)?;
            let clip = VideoClip::new(
                Shape::new(frames, height, width, 1),
                (0..extent.voxels()).map(|i| f32::from(mask.data()[i])).collect(),
            )?;
            write_atomic(&out, &write_vct(&clip, Dtype::U8)?)?;
            #[derive(Serialize)]
            struct MaskReport {
                variant: MixVariant,
                lambda_sampled: f64,
                cuboids: Vec<CuboidCoords>,
                cut_fraction: f64,
            }
            to_json(&MaskReport {
                variant,
                lambda_sampled: lambda.get(),
                cut_fraction: mask.mean(),
                cuboids,
            })
        }
        Command::TrainToy { config, out_csv } => {
            let cfg = ExperimentConfig::parse(&read_text(&config)?)?;
            let outcome = run_experiment(&cfg)?;
            write_atomic(&out_csv, outcome.metrics.to_csv().as_bytes())?;
            Ok(format!("aug={} test_top1={}", cfg.train.aug, outcome.test_top1))
        }
        Command::EvalWstal {
            tcam,
            features,
            weights,
            proposals,
            gt,
            thresholds,
            ratio,
            no_shift,
            all_classes,
        } => {
            let gts: Vec<GtSegment> = read_json(&gt)?;
            if gts.is_empty() {
                return Err(Error::InvalidConfig {
                    key: "gt".into(),
                    reason: "no ground truth segments".into(),
                }
                .into());
            }
            let cfg = ProposalConfig {
                threshold_ratio: ratio,
                shift_nonpositive: !no_shift,
            };
            let mut props: Vec<Proposal> = match &proposals {
                Some(p) => read_json(p)?,
                None => Vec::new(),
            };
            let mut cams: Vec<(String, TCam)> = Vec::new();
            for path in &tcam {
                cams.push((stem(path), TCam::from_clip(&read_clip(path)?)?));
            }
            if !features.is_empty() {
                let weights = weights
                    .as_ref()
                    .ok_or_else(|| CliError::Usage("--features requires --weights".into()))?;
                let head: ClassHead = read_json(weights)?;
                for path in &features {
                    let id = stem(path);
                    let f = FeatureSequence::from_clip(id.clone(), read_clip(path)?, SoftLabel::one_hot(0, 2)?)?;
                    cams.push((id, compute_tcam(&f, &head)?));
                }
            }
            if cams.is_empty() && proposals.is_none() {
                return Err(CliError::Usage(
                    "one of --tcam, --features with --weights, or --proposals is required".into(),
                ));
            }
            for (id, cam) in &cams {
                let classes: Vec<usize> = if all_classes {
                    (0..cam.classes()).collect()
                } else {
                    let means: Vec<f64> = (0..cam.classes())
                        .map(|k| cam.class_scores(k).iter().sum::<f64>())
                        .collect();
                    vec![argmax(&means)]
                };
                for k in classes {
                    props.extend(extract_proposals(cam, k, id, &cfg));
                }
            }
            let thresholds = thresholds.unwrap_or_else(default_thresholds);
            to_json(&evaluate_map(&props, &gts, &thresholds))
        }
        Command::Cam {
            features,
            weights,
            class,
            frames,
            height,
            width,
            out,
        } => {
            let fm = FeatureMap::from_clip(&read_clip(&features)?)?;
            let head: ClassHead = read_json(&weights)?;
            let w = head.weights.get(class).ok_or(Error::DimMismatch {
                field: "class index",
                expected: head.classes(),
                actual: class,
            })?;
            let cam = st_cam(&fm, w)?;
            let e = fm.extent();
            let target = Extent::new(
                frames.unwrap_or(e.frames),
                height.unwrap_or(e.height),
                width.unwrap_or(e.width),
            );
            write_atomic(&out, &write_vct(&render_cam(&cam, target)?, Dtype::F32)?)?;
            #[derive(Serialize)]
            struct CamReport {
                class: usize,
                min: f64,
                max: f64,
                frames: usize,
                height: usize,
                width: usize,
            }
            to_json(&CamReport {
                class,
                min: cam.volume.iter().cloned().fold(f64::INFINITY, f64::min),
                max: cam.volume.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                frames: target.frames,
                height: target.height,
                width: target.width,
            })
        }
    }
}

/// Parses `args`, runs the command and reports; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(stdout) => {
            println!("{stdout}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
