//! `faceshape` command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage, parse and validation errors, 2 for
//! everything else. Errors are printed as one `error: <category>: <detail>` line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use faceshape::bench::{
    emit_report, run_benchmark, synth_dataset, BenchConfig, EvalMode, ReportFormat, SubsetStrategy,
    SynthConfig, DEFAULT_SIZES,
};
use faceshape::classifiers::{
    load_model, predict, save_model, train, ClassifierConfig, ClassifierKind,
};
use faceshape::features::{extract_dataset, read_feature_file, write_feature_file};
use faceshape::hairline::{detect_hairline, HairlineConfig};
use faceshape::image::read_ppm;
use faceshape::landmarks::{parse_landmark_file, LandmarkFormat};
use faceshape::{Error, FaceShape, FeatureVector, Point2D};

#[derive(Parser)]
#[command(
    name = "faceshape",
    version,
    about = "Face-shape classification from facial landmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the 19 features for every face in a landmark file.
    Extract {
        /// Landmark file (CSV with a header row).
        #[arg(long)]
        landmarks: PathBuf,
        /// Feature file to write.
        #[arg(long)]
        out: PathBuf,
        /// Landmark layout: native-19 or detector-68+hairline.
        #[arg(long, default_value = "native-19")]
        format: LandmarkFormat,
    },
    /// Find the hairline above the nose in a binary PPM (P6) image; prints `x,y`.
    DetectHairline {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        nose_x: f64,
        #[arg(long)]
        nose_y: f64,
        /// RGB distance that marks the hairline.
        #[arg(long, default_value_t = HairlineConfig::default().threshold)]
        threshold: f64,
        /// Side of the square averaging window (odd).
        #[arg(long, default_value_t = HairlineConfig::default().window)]
        window: usize,
        /// Rows above the nose where the skin reference is sampled.
        #[arg(long, default_value_t = HairlineConfig::default().start_offset)]
        start_offset: usize,
    },
    /// Train a classifier on a labelled feature file and save it.
    Train {
        #[arg(long)]
        features: PathBuf,
        /// lda, svm-lin, svm-rbf, mlp or knn.
        #[arg(long)]
        kind: ClassifierKind,
        /// Model file to write.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Classify every row of a feature file; prints `id,label` lines.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
    },
    /// Accuracy versus training-set size for all five classifiers.
    Bench {
        /// Labelled native-19 landmark file.
        #[arg(long)]
        dataset: PathBuf,
        /// Comma-separated training sizes, ascending.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SIZES)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report file to write.
        #[arg(long)]
        report: PathBuf,
        /// markdown or csv.
        #[arg(long, default_value = "markdown")]
        format: ReportFormat,
        /// How training subsets are chosen: stratified or prefix.
        #[arg(long, default_value = "stratified")]
        strategy: SubsetStrategy,
        /// Which samples are scored: overall-on-all or holdout-remainder.
        #[arg(long, default_value = "overall-on-all")]
        eval: EvalMode,
    },
    /// Write a synthetic labelled landmark dataset in native-19 format.
    Synth {
        #[arg(long)]
        per_class: usize,
        /// Standard deviation of the per-coordinate jitter, in pixels.
        #[arg(long)]
        noise: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct HyperArgs {
    /// Seed for MLP weight initialization.
    #[arg(long)]
    seed: Option<u64>,
    /// SVM soft-margin penalty.
    #[arg(long)]
    svm_c: Option<f64>,
    /// RBF kernel width.
    #[arg(long)]
    rbf_gamma: Option<f64>,
    /// Neighbours consulted by KNN.
    #[arg(long)]
    knn_k: Option<usize>,
    /// Discriminant components kept by LDA.
    #[arg(long)]
    lda_components: Option<usize>,
    /// Comma-separated MLP hidden layer sizes.
    #[arg(long, value_delimiter = ',')]
    mlp_hidden: Option<Vec<usize>>,
    /// L2 penalty on MLP weights.
    #[arg(long)]
    mlp_l2: Option<f64>,
}

impl HyperArgs {
    fn config(self, kind: ClassifierKind) -> ClassifierConfig {
        let d = ClassifierConfig::new(kind);
        ClassifierConfig {
            kind,
            svm_c: self.svm_c.unwrap_or(d.svm_c),
            rbf_gamma: self.rbf_gamma.unwrap_or(d.rbf_gamma),
            knn_k: self.knn_k.unwrap_or(d.knn_k),
            lda_components: self.lda_components.unwrap_or(d.lda_components),
            mlp_hidden: self.mlp_hidden.unwrap_or(d.mlp_hidden),
            mlp_l2: self.mlp_l2.unwrap_or(d.mlp_l2),
            seed: self.seed.unwrap_or(d.seed),
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parse { .. } | Error::Validation { .. } | Error::InvalidInput(_) => 1,
        _ => 2,
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Extract {
            landmarks,
            out,
            format,
        } => {
            let ds = parse_landmark_file(&landmarks, format)?;
            write_feature_file(&extract_dataset(&ds)?, &out)
        }
        Command::DetectHairline {
            image,
            nose_x,
            nose_y,
            threshold,
            window,
            start_offset,
        } => {
            let img = read_ppm(&image)?;
            let cfg = HairlineConfig {
                threshold,
                window,
                start_offset,
            };
            let p = detect_hairline(&img, Point2D::new(nose_x, nose_y), &cfg)?;
            println!("{},{}", p.x, p.y);
            Ok(())
        }
        Command::Train {
            features,
            kind,
            out,
            hyper,
        } => {
            let rows = read_feature_file(&features)?;
            let mut xs: Vec<FeatureVector> = Vec::with_capacity(rows.len());
            let mut ys: Vec<FaceShape> = Vec::with_capacity(rows.len());
            for r in rows {
                let label = r
                    .label
                    .ok_or_else(|| Error::InvalidInput(format!("row {} has no label", r.id)))?;
                xs.push(r.features);
                ys.push(label);
            }
            match train(&hyper.config(kind), &xs, &ys) {
                Ok(model) => save_model(&model, &out),
                // keep the partially trained model around, but still fail
                Err(Error::TrainingDidNotConverge {
                    a,
                    b,
                    iterations,
                    model,
                }) => {
                    save_model(&model, &out)?;
                    Err(Error::TrainingDidNotConverge {
                        a,
                        b,
                        iterations,
                        model,
                    })
                }
                Err(e) => Err(e),
            }
        }
        Command::Predict { model, features } => {
            let model = load_model(&model)?;
            let rows = read_feature_file(&features)?;
            let mut out = String::new();
            for r in &rows {
                let p = predict(&model, &r.features)?;
                out.push_str(&format!("{},{}\n", r.id, p.label));
            }
            print!("{out}");
            Ok(())
        }
        Command::Bench {
            dataset,
            sizes,
            seed,
            report,
            format,
            strategy,
            eval,
        } => {
            let ds = parse_landmark_file(&dataset, LandmarkFormat::Native19)?;
            let cfg = BenchConfig {
                sizes,
                seed,
                subset_strategy: strategy,
                eval_mode: eval,
                ..Default::default()
            };
            emit_report(&run_benchmark(&ds, &cfg)?, format, &report)
        }
        Command::Synth {
            per_class,
            noise,
            seed,
            out,
        } => synth_dataset(&SynthConfig {
            per_class,
            noise_sigma: noise,
            seed,
        })?
        .write_native(&out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let mut lines = rendered.lines();
            let first = lines.next().unwrap_or("invalid arguments");
            let detail = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("error: usage: {detail}");
            for line in lines.filter(|l| !l.trim().is_empty()) {
                eprintln!("{line}");
            }
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let detail = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {detail}", e.category());
            ExitCode::from(exit_code(&e))
        }
    }
}
