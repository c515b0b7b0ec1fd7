//! Subcommand implementations. Each returns the files to write; nothing touches
//! the output directory until every output has been computed.

use std::path::{Path, PathBuf};

use causemap::am::{am_run, random_init, AmConfig, Image, ImagePriors, PoolConfig, PriorWeights, QuadraticScorer, Regularizer, Scorer};
use causemap::desknet::{self, DeskNetParams, DeskNetScorer, NetConfig, RunMetrics, SplitSizes, TrainConfig, Variant};
use causemap::io;
use causemap::{compute_causality_map, extract_factors, CausalityMap, Direction, EstimatorConfig, FactorConfig, Method, Mode};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::CliError;

pub type Outputs = Vec<(String, Vec<u8>)>;

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))
}

fn input_path(flag: Option<PathBuf>, cfg: &Config) -> Result<PathBuf, CliError> {
    flag.or_else(|| cfg.raw("input").map(PathBuf::from))
        .ok_or_else(|| CliError::Parse("no input file given (--input or config key 'input')".into()))
}

pub struct CmapArgs {
    pub input: Option<PathBuf>,
    pub method: Option<Method>,
    pub p: Option<f64>,
    pub epsilon: Option<f64>,
}

pub fn estimator(cfg: &Config, method: Option<Method>, p: Option<f64>, epsilon: Option<f64>) -> Result<EstimatorConfig, CliError> {
    let method = match method {
        Some(m) => m,
        None => cfg.get_or("method", Method::Max)?,
    };
    let mut est = match method {
        Method::Max => EstimatorConfig::max(),
        Method::Lehmer => EstimatorConfig::lehmer(match p {
            Some(p) => p,
            None => cfg.get_or("p", 1.0)?,
        }),
    };
    if method == Method::Max {
        // accepted for symmetry with the lehmer settings, unused
        cfg.raw("p");
    }
    if let Some(e) = epsilon.or(cfg.get("epsilon")?) {
        est.epsilon = e;
    }
    est.validate()?;
    Ok(est)
}

pub fn cmap(args: CmapArgs, cfg: &Config) -> Result<Outputs, CliError> {
    let input = input_path(args.input, cfg)?;
    let est = estimator(cfg, args.method, args.p, args.epsilon)?;
    cfg.reject_unknown()?;
    let stack = io::stack_from_csv(&read_text(&input)?).map_err(|e| CliError::Parse(format!("{}: {e}", input.display())))?;
    let map = compute_causality_map(&stack, &est)?;
    Ok(vec![
        ("cmap.csv".into(), io::map_to_csv(&map).into_bytes()),
        ("cmap.pgm".into(), io::map_to_pgm(&map)),
    ])
}

pub struct FactorArgs {
    pub input: Option<PathBuf>,
    pub direction: Option<Direction>,
    pub mode: Option<Mode>,
}

pub fn factor_config(cfg: &Config, direction: Option<Direction>, mode: Option<Mode>) -> Result<FactorConfig, CliError> {
    let base = FactorConfig::default();
    Ok(FactorConfig {
        direction: match direction {
            Some(d) => d,
            None => cfg.get_or("direction", base.direction)?,
        },
        mode: match mode {
            Some(m) => m,
            None => cfg.get_or("mode", base.mode)?,
        },
    })
}

pub fn factors(args: FactorArgs, cfg: &Config) -> Result<Outputs, CliError> {
    let input = input_path(args.input, cfg)?;
    let fc = factor_config(cfg, args.direction, args.mode)?;
    cfg.reject_unknown()?;
    let map: CausalityMap = io::map_from_csv(&read_text(&input)?).map_err(|e| CliError::Parse(format!("{}: {e}", input.display())))?;
    let f = extract_factors(&map, fc);
    Ok(vec![("factors.csv".into(), io::factors_to_csv(&f).into_bytes())])
}

/// A trained network together with the configuration it was trained under.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SavedModel {
    pub net: NetConfig,
    pub params: DeskNetParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub variant: Variant,
    pub runs: usize,
    pub mean_test_accuracy: f64,
    /// Sample standard deviation (0 for a single run).
    pub std_test_accuracy: f64,
    pub param_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: TrainSettings,
    pub runs: Vec<RunMetrics>,
    pub aggregates: Vec<Aggregate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub data_seed: u64,
    pub split: SplitSizes,
    pub factors: FactorConfig,
    pub estimator: EstimatorConfig,
    pub cmap_backprop: bool,
}

pub fn train_settings(cfg: &Config, seed: u64, variants: &[Variant]) -> Result<TrainSettings, CliError> {
    let base = TrainConfig::new(Variant::Baseline);
    let variants = if variants.is_empty() {
        cfg.list("variants")?.unwrap_or_else(|| vec![Variant::Baseline])
    } else {
        cfg.raw("variants");
        variants.to_vec()
    };
    let seeds = cfg.list("seeds")?.unwrap_or_else(|| vec![seed]);
    if variants.is_empty() || seeds.is_empty() {
        return Err(CliError::Parse("need at least one variant and one seed".into()));
    }
    let split = SplitSizes {
        train: cfg.get_or("train_size", base.split.train)?,
        val: cfg.get_or("val_size", base.split.val)?,
        test: cfg.get_or("test_size", base.split.test)?,
    };
    let settings = TrainSettings {
        variants,
        seeds,
        epochs: cfg.get_or("epochs", base.epochs)?,
        batch_size: cfg.get_or("batch_size", base.batch_size)?,
        learning_rate: cfg.get_or("learning_rate", base.learning_rate)?,
        data_seed: cfg.get_or("data_seed", base.data_seed)?,
        split,
        factors: factor_config(cfg, None, None)?,
        estimator: estimator(cfg, None, None, None)?,
        cmap_backprop: cfg.switch("cmap_backprop", true)?,
    };
    for tc in settings.train_configs() {
        tc.validate()?;
    }
    Ok(settings)
}

impl TrainSettings {
    pub fn train_configs(&self) -> Vec<TrainConfig> {
        let mut out = Vec::new();
        for &variant in &self.variants {
            for &seed in &self.seeds {
                out.push(TrainConfig {
                    net: NetConfig {
                        variant,
                        factors: self.factors,
                        estimator: self.estimator,
                        cmap_backprop: self.cmap_backprop && self.estimator.method == Method::Max,
                    },
                    epochs: self.epochs,
                    batch_size: self.batch_size,
                    learning_rate: self.learning_rate,
                    seed,
                    data_seed: self.data_seed,
                    split: self.split,
                });
            }
        }
        out
    }
}

fn aggregate(variant: Variant, runs: &[&RunMetrics]) -> Aggregate {
    let n = runs.len() as f64;
    let mean = runs.iter().map(|r| r.test_accuracy).sum::<f64>() / n;
    let var = if runs.len() > 1 {
        runs.iter().map(|r| (r.test_accuracy - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Aggregate {
        variant,
        runs: runs.len(),
        mean_test_accuracy: mean,
        std_test_accuracy: var.sqrt(),
        param_count: runs[0].param_count,
    }
}

pub fn train(cfg: &Config, seed: u64, variants: &[Variant]) -> Result<Outputs, CliError> {
    let settings = train_settings(cfg, seed, variants)?;
    cfg.reject_unknown()?;
    let data = desknet::generate_dataset(settings.split.total(), settings.data_seed);
    let split = desknet::stratified_split(data, settings.split, settings.data_seed);

    let mut outputs = Outputs::new();
    let mut runs = Vec::new();
    let mut history = String::from("variant,seed,epoch,train_loss,train_accuracy,val_loss,val_accuracy\n");
    for tc in settings.train_configs() {
        let out = desknet::train_on(&split, &tc)?;
        for h in &out.metrics.history {
            history.push_str(&format!(
                "{},{},{},{:?},{:?},{:?},{:?}\n",
                tc.net.variant, tc.seed, h.epoch, h.train_loss, h.train_accuracy, h.val_loss, h.val_accuracy
            ));
        }
        let model = SavedModel {
            net: tc.net,
            params: out.params,
        };
        outputs.push((format!("params_{}_seed{}.json", tc.net.variant, tc.seed), to_json(&model)?));
        runs.push(out.metrics);
    }
    let aggregates = settings
        .variants
        .iter()
        .map(|&v| aggregate(v, &runs.iter().filter(|r| r.variant == v).collect::<Vec<_>>()))
        .collect();
    let report = TrainReport {
        config: settings,
        runs,
        aggregates,
    };
    outputs.insert(0, ("metrics.json".into(), to_json(&report)?));
    outputs.insert(1, ("history.csv".into(), history.into_bytes()));
    Ok(outputs)
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[derive(Debug, Clone)]
pub enum ScorerSpec {
    Quadratic,
    DeskNet { params: PathBuf, class: usize },
}

impl std::str::FromStr for ScorerSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "quadratic-test" {
            return Ok(ScorerSpec::Quadratic);
        }
        let rest = s
            .strip_prefix("desknet:")
            .ok_or_else(|| format!("unknown scorer '{s}' (expected quadratic-test or desknet:<params>:<class>)"))?;
        let (path, class) = rest
            .rsplit_once(':')
            .ok_or_else(|| "desknet scorer needs desknet:<params-file>:<class>".to_string())?;
        let class = class.parse().map_err(|_| format!("invalid class '{class}'"))?;
        Ok(ScorerSpec::DeskNet {
            params: PathBuf::from(path),
            class,
        })
    }
}

fn load_reference(path: &Path) -> Result<Image, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    let parsed = if bytes.starts_with(b"P5") {
        io::decode_pgm(&bytes).and_then(|(w, h, px)| Image::new(h, w, 1, px))
    } else {
        io::image_from_csv(&String::from_utf8_lossy(&bytes))
    };
    parsed.map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

pub fn am_config(cfg: &Config, seed: u64) -> Result<AmConfig, CliError> {
    let base = AmConfig::default();
    let pool = PoolConfig::default();
    let w = PriorWeights::default();
    let am = AmConfig {
        step_size: cfg.get_or("step_size", base.step_size)?,
        iterations: cfg.get_or("iterations", base.iterations)?,
        jitter_px: cfg.get_or("jitter", base.jitter_px)?,
        blur_every: cfg.get_or("blur_every", base.blur_every)?,
        clip_lo: cfg.get_or("clip_lo", base.clip_lo)?,
        clip_hi: cfg.get_or("clip_hi", base.clip_hi)?,
        seed,
        prior_weights: PriorWeights {
            histogram: cfg.get_or("w_histogram", w.histogram)?,
            noise: cfg.get_or("w_noise", w.noise)?,
            symmetry: cfg.get_or("w_symmetry", w.symmetry)?,
            frequency: cfg.get_or("w_frequency", w.frequency)?,
        },
        pool: PoolConfig {
            kernel: cfg.get_or("pool_kernel", pool.kernel)?,
            stride: cfg.get_or("pool_stride", pool.stride)?,
            padding: cfg.get_or("pool_padding", pool.padding)?,
        },
        prior_every: cfg.get_or("prior_every", base.prior_every)?,
    };
    am.validate()?;
    Ok(am)
}

pub fn am(scorer: &ScorerSpec, cfg: &Config, seed: u64) -> Result<Outputs, CliError> {
    let am_cfg = am_config(cfg, seed)?;
    let target = cfg
        .raw("histogram_target")
        .map(|p| -> Result<Vec<f64>, CliError> {
            let (_, v) = io::matrix_from_csv(&read_text(Path::new(p))?).map_err(|e| CliError::Parse(format!("{p}: {e}")))?;
            Ok(v)
        })
        .transpose()?;
    let reference = cfg.raw("reference").map(|p| load_reference(Path::new(p))).transpose()?;
    let (h, w, c) = match scorer {
        ScorerSpec::Quadratic => (cfg.get_or("height", 8)?, cfg.get_or("width", 8)?, cfg.get_or("channels", 1)?),
        ScorerSpec::DeskNet { .. } => (desknet::model::IN_SIDE, desknet::model::IN_SIDE, 1),
    };
    let init_lo = cfg.get_or("init_lo", am_cfg.clip_lo)?;
    let init_hi = cfg.get_or("init_hi", am_cfg.clip_hi)?;
    cfg.reject_unknown()?;

    let init = random_init(h, w, c, init_lo, init_hi, seed)?;
    let mut boxed: Box<dyn Scorer> = match scorer {
        ScorerSpec::Quadratic => Box::new(QuadraticScorer::pattern(h, w, c)?),
        ScorerSpec::DeskNet { params, class } => {
            let model: SavedModel = serde_json::from_str(&read_text(params)?)
                .map_err(|e| CliError::Parse(format!("{}: {e}", params.display())))?;
            Box::new(DeskNetScorer {
                params: model.params,
                net: model.net,
                class: *class,
                seed,
            })
        }
    };
    let priors = ImagePriors {
        weights: am_cfg.prior_weights,
        pool: am_cfg.pool,
        target,
        reference,
    };
    let regs: Vec<(f64, &dyn Regularizer)> = vec![(1.0, &priors)];
    let out = am_run(boxed.as_mut(), &init, &am_cfg, &regs)?;

    let mut trace = String::from("iteration,activation,regularizer\n");
    for r in &out.trace {
        trace.push_str(&format!("{},{:?},{:?}\n", r.iteration, r.activation, r.regularizer));
    }
    Ok(vec![
        ("am.pgm".into(), io::image_to_pgm(&out.image, am_cfg.clip_lo, am_cfg.clip_hi)),
        ("am_image.csv".into(), io::image_to_csv(&out.image).into_bytes()),
        ("am_trace.csv".into(), trace.into_bytes()),
    ])
}
