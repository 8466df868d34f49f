use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use semwire_core::caption::{caption_from_command, load_caption_sidecar};
use semwire_core::codec::{self, Format};
use semwire_core::container::Container;
use semwire_core::edges::{canny, to_grayscale};
use semwire_core::external::CommandTemplate;
use semwire_core::masking::{apply_mask, semantic_mask, MaskConfig, PatchGrid};
use semwire_core::metrics::{ms_ssim, psnr, Mode};
use semwire_core::mmsd::{mmsd_pack, mmsd_unpack, MmsdOptions};
use semwire_core::samr::{samr_decode, samr_encode, SamrBitstream, SamrOptions, DEFAULT_TAU};
use semwire_core::{load_image, load_segmap, Caption, ClassTaxonomy, SemanticGroup};
use semwire_harness::payload::{payload_report, summarize, write_payload_csv, CaptionSource};
use semwire_harness::sweep::{parse_reconstructor, read_csv, DEFAULT_CONFIGS, DEFAULT_QUALITIES};
use semwire_harness::{discover, plot, run_sweep, synth, CorpusKind, SweepPlan};

#[derive(Parser)]
#[command(
    name = "semwire",
    version,
    about = "Semantic image compression: MMSD payloads and SAMR masking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct TaxonomyArg {
    /// Class table (`<id> <name> <group>` per line); defaults to the Cityscapes labelIds.
    #[arg(long, global = true)]
    taxonomy: Option<PathBuf>,
}

impl TaxonomyArg {
    fn load(&self) -> Result<Arc<ClassTaxonomy>> {
        Ok(Arc::new(match &self.taxonomy {
            Some(p) => ClassTaxonomy::load(p)?,
            None => ClassTaxonomy::cityscapes(),
        }))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Canny edge map of an image (PNG, or lossless WebP for a .webp output).
    Edges {
        input: PathBuf,
        #[arg(long, default_value_t = semwire_core::edges::DEFAULT_LOW)]
        low: f64,
        #[arg(long, default_value_t = semwire_core::edges::DEFAULT_HIGH)]
        high: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Draws a semantic patch mask and reports per-group rates.
    Mask {
        #[arg(long)]
        segmap: PathBuf,
        /// Preset 0..=7.
        #[arg(long, default_value_t = 0)]
        config: u8,
        /// Probabilities as `group:prob` lines, overriding the preset.
        #[arg(long)]
        config_file: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Mask image (255 = masked patch).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the masked version of this image.
        #[arg(long, requires = "masked_output")]
        image: Option<PathBuf>,
        #[arg(long)]
        masked_output: Option<PathBuf>,
        #[command(flatten)]
        taxonomy: TaxonomyArg,
    },
    /// Packs label map, edges and caption into an SMC1 container.
    MmsdPack {
        input: PathBuf,
        #[arg(long)]
        segmap: PathBuf,
        /// Caption text file; defaults to the `<stem>.caption.txt` sidecar.
        #[arg(long, conflicts_with_all = ["caption_text", "caption_cmd"])]
        caption: Option<PathBuf>,
        #[arg(long, conflicts_with = "caption_cmd")]
        caption_text: Option<String>,
        /// Captioning command; `{image}` is replaced by the image path.
        #[arg(long)]
        caption_cmd: Option<String>,
        /// Transmitted label-map size, WxH.
        #[arg(long, default_value = "1024x512", value_parser = parse_size)]
        seg_size: (u32, u32),
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        taxonomy: TaxonomyArg,
    },
    /// Restores label map, edges and caption from an MMSD container.
    MmsdUnpack {
        input: PathBuf,
        #[arg(short = 'd', long)]
        dir: PathBuf,
        /// Generator command with `{seg}`, `{edge}`, `{caption}` and `{out}` placeholders.
        #[arg(long)]
        reconstruct_cmd: Option<String>,
        #[arg(long, default_value_t = 600)]
        timeout_secs: u64,
        #[command(flatten)]
        taxonomy: TaxonomyArg,
    },
    /// Masks and JPEG-encodes an image.
    SamrEncode {
        input: PathBuf,
        #[arg(long)]
        segmap: PathBuf,
        #[arg(long, default_value_t = 0)]
        config: u8,
        #[arg(long)]
        config_file: Option<PathBuf>,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u8).range(1..=100))]
        quality: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        mask_side_channel: bool,
        #[arg(long, default_value = "jpeg")]
        format: Format,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        taxonomy: TaxonomyArg,
    },
    /// Decodes a SAMR container and fills the dropped patches.
    SamrDecode {
        input: PathBuf,
        /// harmonic, passthrough or ext:<cmd> with `{input}`, `{mask}`, `{output}`.
        #[arg(long, default_value = "harmonic")]
        reconstructor: String,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
        #[arg(long, default_value_t = 600)]
        timeout_secs: u64,
        /// Also write the recovered patch mask.
        #[arg(long)]
        mask_output: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Rate–distortion sweep over a corpus, written to <out>/rd.csv.
    RdSweep {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "generic")]
        corpus_kind: CorpusKind,
        /// Comma-separated: jpeg, samr, mmsd.
        #[arg(long, value_delimiter = ',', default_value = "jpeg,samr")]
        modes: Vec<Mode>,
        #[arg(long, value_delimiter = ',')]
        configs: Option<Vec<u8>>,
        #[arg(long, value_delimiter = ',')]
        qualities: Option<Vec<u8>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "harmonic")]
        reconstructor: String,
        #[arg(long, default_value_t = 600)]
        timeout_secs: u64,
        /// Worker threads (default: SEMWIRE_JOBS, else one per core).
        #[arg(long)]
        jobs: Option<usize>,
        /// Also draw the three charts next to the CSV.
        #[arg(long)]
        plot: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Draws rate–distortion charts from one or more sweep CSVs.
    RdPlot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Per-image MMSD payload sizes and compression ratios as CSV.
    RatioReport {
        #[arg(long)]
        corpus: PathBuf,
        /// Caption for images without a sidecar; without it such images are an error.
        #[arg(long)]
        fallback_caption: Option<String>,
        #[arg(long, default_value = "1024x512", value_parser = parse_size)]
        seg_size: (u32, u32),
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Writes procedurally generated street scenes with label maps and captions.
    SynthCorpus {
        #[arg(long, default_value_t = 5)]
        count: usize,
        #[arg(long, default_value_t = 1024)]
        width: u32,
        #[arg(long, default_value_t = 512)]
        height: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// PSNR and MS-SSIM between two images.
    Compare { reference: PathBuf, test: PathBuf },
}

fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<u32>().map_err(|e| format!("{v:?}: {e}"));
    let (w, h) = (parse(w)?, parse(h)?);
    if w == 0 || h == 0 {
        return Err("size must be positive".into());
    }
    Ok((w, h))
}

fn mask_config(config: u8, file: Option<&Path>) -> Result<MaskConfig> {
    Ok(match file {
        Some(p) => MaskConfig::load(config, p)?,
        None => MaskConfig::preset(config)?,
    })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Edges {
            input,
            low,
            high,
            output,
        } => {
            let edges = canny(&to_grayscale(&load_image(&input)?), low, high)?;
            let is_webp = output
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("webp"));
            if is_webp {
                write_bytes(&output, &codec::encode_lossless(&edges.to_image())?.bytes)?;
            } else {
                edges.to_image().save_png(&output)?;
            }
            println!(
                "{} edge pixels of {}",
                edges.edge_count(),
                edges.width() as usize * edges.height() as usize
            );
        }
        Command::Mask {
            segmap,
            config,
            config_file,
            seed,
            output,
            image,
            masked_output,
            taxonomy,
        } => {
            let seg = load_segmap(&segmap, taxonomy.load()?)?;
            let cfg = mask_config(config, config_file.as_deref())?;
            let grid = PatchGrid::new(seg.width(), seg.height())?;
            let mask = semantic_mask(&seg, &cfg, &grid, seed)?;
            let tax = seg.taxonomy().clone();
            let mut per_group = [(0usize, 0usize); 8];
            for i in 0..grid.n_h() {
                for j in 0..grid.n_w() {
                    let g = tax.group_of(semwire_core::masking::dominant_class(&seg, &grid, i, j));
                    per_group[g.index()].0 += mask.is_masked(i, j) as usize;
                    per_group[g.index()].1 += 1;
                }
            }
            println!(
                "masked {} of {} patches ({:.3})",
                mask.masked_count(),
                grid.len(),
                mask.masked_fraction()
            );
            for g in SemanticGroup::ALL {
                let (m, n) = per_group[g.index()];
                if n > 0 {
                    println!("  {:<13} {m:>6}/{n:<6} rho={:.2}", g.name(), cfg.rho(g));
                }
            }
            if let Some(out) = output {
                mask.to_image().save_png(&out)?;
            }
            if let (Some(img), Some(out)) = (image, masked_output) {
                apply_mask(&load_image(&img)?, &mask)?.save_png(&out)?;
            }
        }
        Command::MmsdPack {
            input,
            segmap,
            caption,
            caption_text,
            caption_cmd,
            seg_size,
            output,
            taxonomy,
        } => {
            let img = load_image(&input)?;
            let seg = load_segmap(&segmap, taxonomy.load()?)?;
            let caption = match (caption, caption_text, caption_cmd) {
                (Some(p), _, _) => {
                    let text = std::fs::read_to_string(&p)
                        .with_context(|| format!("reading {}", p.display()))?;
                    Caption::new(text.trim_end_matches(['\n', '\r']))
                }
                (_, Some(t), _) => Caption::new(t),
                (_, _, Some(cmd)) => caption_from_command(&cmd, &input)?,
                _ => load_caption_sidecar(&input)?,
            };
            let opts = MmsdOptions {
                seg_target: seg_size,
                ..Default::default()
            };
            let container = mmsd_pack(&img, &seg, &caption, &opts)?;
            let bytes = container.to_bytes();
            write_bytes(&output, &bytes)?;
            for e in container.entries() {
                println!("{} {:>8} B", e.tag(), e.body().len());
            }
            println!("total {} B", bytes.len());
        }
        Command::MmsdUnpack {
            input,
            dir,
            reconstruct_cmd,
            timeout_secs,
            taxonomy,
        } => {
            let bytes =
                std::fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            let decoded = mmsd_unpack(&Container::from_bytes(&bytes)?, taxonomy.load()?)?;
            let files = decoded.write_dir(&dir)?;
            println!(
                "{}\n{}\n{}",
                files.seg.display(),
                files.edge.display(),
                files.caption.display()
            );
            if let Some(cmd) = reconstruct_cmd {
                let out = dir.join("reconstruction.png");
                let tmpl =
                    CommandTemplate::new(cmd).with_timeout(Duration::from_secs(timeout_secs));
                decoded.reconstruct(&tmpl, &files, &out)?;
                println!("{}", out.display());
            }
        }
        Command::SamrEncode {
            input,
            segmap,
            config,
            config_file,
            quality,
            seed,
            mask_side_channel,
            format,
            output,
            taxonomy,
        } => {
            let img = load_image(&input)?;
            let seg = load_segmap(&segmap, taxonomy.load()?)?;
            let opts = SamrOptions {
                quality,
                seed,
                format,
                mask_side_channel,
            };
            let enc = samr_encode(
                &img,
                &seg,
                &mask_config(config, config_file.as_deref())?,
                &opts,
            )?;
            let bytes = enc.bitstream.to_container()?.to_bytes();
            write_bytes(&output, &bytes)?;
            println!(
                "masked {:.3} of patches, {} B, {:.4} bpp",
                enc.mask.masked_fraction(),
                bytes.len(),
                semwire_core::metrics::bpp(bytes.len() as u64, img.width(), img.height())
            );
        }
        Command::SamrDecode {
            input,
            reconstructor,
            tau,
            timeout_secs,
            mask_output,
            output,
        } => {
            let bytes =
                std::fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            let bs = SamrBitstream::from_container(&Container::from_bytes(&bytes)?)?;
            let rec = parse_reconstructor(&reconstructor, Duration::from_secs(timeout_secs))?;
            let dec = samr_decode(&bs, &rec, tau)?;
            dec.image.save_png(&output)?;
            if let Some(p) = mask_output {
                dec.mask.to_image().save_png(&p)?;
            }
            println!(
                "{} masked patches ({})",
                dec.mask.masked_count(),
                if dec.mask_from_side_channel {
                    "side channel"
                } else {
                    "detected"
                }
            );
        }
        Command::RdSweep {
            corpus,
            corpus_kind,
            modes,
            configs,
            qualities,
            seed,
            reconstructor,
            timeout_secs,
            jobs,
            plot: draw,
            output,
        } => {
            let mut plan = SweepPlan::new(corpus, &output);
            plan.corpus_kind = corpus_kind;
            plan.modes = modes;
            plan.configs = configs.unwrap_or_else(|| DEFAULT_CONFIGS.to_vec());
            plan.qualities = qualities.unwrap_or_else(|| DEFAULT_QUALITIES.to_vec());
            plan.seed = seed;
            plan.reconstructor =
                parse_reconstructor(&reconstructor, Duration::from_secs(timeout_secs))?;
            plan.jobs = jobs;
            let report = run_sweep(&plan)?;
            println!(
                "{}: {} added, {} already present, {} failed of {}",
                report.csv.display(),
                report.added,
                report.skipped,
                report.failed,
                report.total
            );
            if draw {
                for p in plot::plot_rd(&read_csv(&report.csv)?, &output)? {
                    println!("{}", p.display());
                }
            }
        }
        Command::RdPlot { csv, output } => {
            let mut records = Vec::new();
            for p in &csv {
                records.extend(read_csv(p)?);
            }
            for p in plot::plot_rd(&records, &output)? {
                println!("{}", p.display());
            }
        }
        Command::RatioReport {
            corpus,
            fallback_caption,
            seg_size,
            output,
        } => {
            let items = discover(&corpus)?;
            let captions = match fallback_caption {
                Some(c) => CaptionSource::Fallback(Caption::new(c)),
                None => CaptionSource::SidecarOnly,
            };
            let opts = MmsdOptions {
                seg_target: seg_size,
                ..Default::default()
            };
            let records = payload_report(&items, &captions, &opts)?;
            write_payload_csv(&output, &records)?;
            if let Some(s) = summarize(&records) {
                println!(
                    "{} images: seg {:.2}±{:.2} kB, edge {:.2}±{:.2} kB, caption {:.1} B, payload {:.2} kB, original {:.2} MB, ratio {:.1}±{:.1}x",
                    s.images, s.seg_kb.0, s.seg_kb.1, s.edge_kb.0, s.edge_kb.1, s.caption_bytes, s.payload_kb, s.orig_mb, s.ratio.0, s.ratio.1
                );
            }
        }
        Command::SynthCorpus {
            count,
            width,
            height,
            seed,
            output,
        } => {
            if count == 0 {
                bail!("--count must be positive");
            }
            let items = synth::write_corpus(&output, count, width, height, seed)?;
            println!("{} scenes in {}", items.len(), output.display());
        }
        Command::Compare { reference, test } => {
            let (a, b) = (load_image(&reference)?, load_image(&test)?);
            let p = psnr(&a, &b)?;
            let m = ms_ssim(&a, &b)?;
            println!(
                "psnr_db {}",
                if p.is_finite() {
                    format!("{p:.4}")
                } else {
                    "inf".into()
                }
            );
            println!(
                "ms_ssim {:.6}{}",
                m.value,
                if m.is_reduced() {
                    format!(" ({} scales)", m.scales)
                } else {
                    String::new()
                }
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
