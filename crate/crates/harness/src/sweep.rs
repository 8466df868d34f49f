//! Rate–distortion sweep over a corpus.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use semwire_core::codec;
use semwire_core::container::Container;
use semwire_core::masking::MaskConfig;
use semwire_core::metrics::{bpp, ms_ssim, psnr, Mode, RdRecord};
use semwire_core::mmsd::{mmsd_pack, MmsdOptions};
use semwire_core::samr::{
    samr_decode, samr_encode, Reconstructor, SamrBitstream, SamrOptions, DEFAULT_TAU,
};
use semwire_core::{ClassTaxonomy, ImageBuffer, SegMap};

use crate::corpus::{discover, CorpusItem, CorpusKind};
use crate::error::{HarnessError, Result};

/// Fifteen quality levels spanning the whole JPEG range.
pub const DEFAULT_QUALITIES: [u8; 15] = [1, 3, 5, 10, 20, 30, 40, 50, 60, 70, 80, 90, 95, 98, 100];
pub const DEFAULT_CONFIGS: [u8; 4] = [0, 2, 4, 7];
pub const CSV_NAME: &str = "rd.csv";
/// Sweeps fail as a whole when more than this fraction of tasks fail.
pub const MAX_FAILURE_RATE: f64 = 0.10;

#[derive(Clone, Debug)]
pub struct SweepPlan {
    pub corpus: PathBuf,
    pub corpus_kind: CorpusKind,
    pub modes: Vec<Mode>,
    pub qualities: Vec<u8>,
    pub configs: Vec<u8>,
    pub seed: u64,
    pub reconstructor: Reconstructor,
    pub tau: f64,
    pub out_dir: PathBuf,
    /// Worker threads; `None` reads `SEMWIRE_JOBS`, falling back to one per core.
    pub jobs: Option<usize>,
}

impl SweepPlan {
    pub fn new(corpus: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            corpus: corpus.into(),
            corpus_kind: CorpusKind::Generic,
            modes: vec![Mode::Jpeg, Mode::Samr],
            qualities: DEFAULT_QUALITIES.to_vec(),
            configs: DEFAULT_CONFIGS.to_vec(),
            seed: 0,
            reconstructor: Reconstructor::default(),
            tau: DEFAULT_TAU,
            out_dir: out_dir.into(),
            jobs: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(HarnessError::Plan("no modes selected".into()));
        }
        if self.qualities.iter().any(|q| !(1..=100).contains(q)) {
            return Err(HarnessError::Plan("qualities must lie in 1..=100".into()));
        }
        if self.qualities.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HarnessError::Plan(
                "qualities must be strictly increasing".into(),
            ));
        }
        let needs_q = self
            .modes
            .iter()
            .any(|m| matches!(m, Mode::Jpeg | Mode::Samr));
        if needs_q && self.qualities.is_empty() {
            return Err(HarnessError::Plan("no quality levels given".into()));
        }
        for &c in &self.configs {
            MaskConfig::preset(c).map_err(|e| HarnessError::Plan(e.to_string()))?;
        }
        if self.modes.contains(&Mode::Samr) && self.configs.is_empty() {
            return Err(HarnessError::Plan(
                "samr mode needs at least one config".into(),
            ));
        }
        Ok(())
    }

    pub fn csv_path(&self) -> PathBuf {
        self.out_dir.join(CSV_NAME)
    }

    fn operations(&self) -> Vec<Operation> {
        let mut ops = Vec::new();
        for mode in &self.modes {
            match mode {
                Mode::Jpeg => ops.extend(self.qualities.iter().map(|&q| Operation::Jpeg(q))),
                Mode::Samr => {
                    for &config in &self.configs {
                        ops.extend(
                            self.qualities
                                .iter()
                                .map(|&q| Operation::Samr { config, q }),
                        );
                    }
                }
                Mode::Mmsd => ops.push(Operation::Mmsd),
            }
        }
        ops
    }

    fn thread_count(&self) -> Option<usize> {
        self.jobs.or_else(|| {
            std::env::var("SEMWIRE_JOBS")
                .ok()
                .and_then(|v| v.trim().parse().ok())
                .filter(|&n: &usize| n > 0)
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Operation {
    Jpeg(u8),
    Samr { config: u8, q: u8 },
    Mmsd,
}

impl Operation {
    fn key(self, image: &str) -> RecordKey {
        let (mode, config, q) = match self {
            Operation::Jpeg(q) => (Mode::Jpeg, RdRecord::JPEG_ONLY.to_string(), Some(q)),
            Operation::Samr { config, q } => (Mode::Samr, config.to_string(), Some(q)),
            Operation::Mmsd => (Mode::Mmsd, RdRecord::PAYLOAD.to_string(), None),
        };
        (image.to_string(), mode, config, q)
    }
}

type RecordKey = (String, Mode, String, Option<u8>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepReport {
    pub csv: PathBuf,
    pub added: usize,
    pub skipped: usize,
    pub failed: usize,
    pub total: usize,
}

/// Everything needed to evaluate one image; loaded once and shared by its operations.
struct Loaded {
    image: ImageBuffer,
    segmap: Option<SegMap>,
    caption: Option<semwire_core::Caption>,
}

fn load(item: &CorpusItem, ops: &[Operation], taxonomy: &Arc<ClassTaxonomy>) -> Result<Loaded> {
    let image = item.load_image()?;
    let needs_seg = ops.iter().any(|o| !matches!(o, Operation::Jpeg(_)));
    let segmap = needs_seg
        .then(|| item.load_segmap(taxonomy.clone()))
        .transpose()?;
    let caption = if ops.contains(&Operation::Mmsd) {
        item.load_caption()?
    } else {
        None
    };
    Ok(Loaded {
        image,
        segmap,
        caption,
    })
}

/// Evaluates one operating point of one image.
pub fn evaluate(
    item: &CorpusItem,
    image: &ImageBuffer,
    segmap: Option<&SegMap>,
    caption: Option<&semwire_core::Caption>,
    op: Operation,
    plan: &SweepPlan,
) -> Result<RdRecord> {
    let (id, mode, config, q) = op.key(&item.id);
    let (w, h) = (image.width(), image.height());
    let missing_seg = || HarnessError::Plan(format!("{}: label map required", item.id));
    let (bytes, quality) = match op {
        Operation::Jpeg(q) => {
            let blob = codec::encode_jpeg_q(image, q)?;
            let decoded = codec::decode_jpeg(&blob.bytes)?;
            (blob.len() as u64, Some(measure(image, &decoded)?))
        }
        Operation::Samr { config, q } => {
            let seg = segmap.ok_or_else(missing_seg)?;
            let opts = SamrOptions {
                quality: q,
                seed: plan.seed,
                ..Default::default()
            };
            let enc = samr_encode(image, seg, &MaskConfig::preset(config)?, &opts)?;
            let wire = enc.bitstream.to_container()?.to_bytes();
            let received = SamrBitstream::from_container(&Container::from_bytes(&wire)?)?;
            let dec = samr_decode(&received, &plan.reconstructor, plan.tau)?;
            (wire.len() as u64, Some(measure(image, &dec.image)?))
        }
        Operation::Mmsd => {
            let seg = segmap.ok_or_else(missing_seg)?;
            let caption = caption.ok_or_else(|| {
                HarnessError::Plan(format!("{}: caption sidecar required", item.id))
            })?;
            let c = mmsd_pack(image, seg, caption, &MmsdOptions::default())?;
            (c.encoded_len() as u64, None)
        }
    };
    Ok(RdRecord {
        image: id,
        mode,
        config,
        q,
        bytes,
        bpp: bpp(bytes, w, h),
        psnr_db: quality.map(|(p, _)| p),
        ms_ssim: quality.map(|(_, m)| m),
    })
}

fn measure(original: &ImageBuffer, reconstructed: &ImageBuffer) -> Result<(f64, f64)> {
    Ok((
        psnr(original, reconstructed)?,
        ms_ssim(original, reconstructed)?.value,
    ))
}

/// Runs every pending operation of the plan and merges the results into `rd.csv`.
///
/// Existing records are kept and their operations skipped, so an interrupted sweep can be
/// resumed and a finished one re-run without touching the file. Records are written sorted
/// by (image, mode, config, Q) whatever order the workers finish in.
pub fn run_sweep(plan: &SweepPlan) -> Result<SweepReport> {
    plan.validate()?;
    let items = discover(&plan.corpus)?;
    std::fs::create_dir_all(&plan.out_dir).map_err(|e| HarnessError::io(&plan.out_dir, e))?;
    let csv = plan.csv_path();
    let existing = if csv.is_file() {
        read_csv(&csv)?
    } else {
        Vec::new()
    };
    let done: BTreeMap<RecordKey, RdRecord> = existing.into_iter().map(|r| (r.key(), r)).collect();

    let ops = plan.operations();
    let pending: Vec<(&CorpusItem, Vec<Operation>)> = items
        .iter()
        .map(|item| {
            let todo = ops
                .iter()
                .copied()
                .filter(|op| !done.contains_key(&op.key(&item.id)))
                .collect();
            (item, todo)
        })
        .collect();
    let total = items.len() * ops.len();
    let skipped = total - pending.iter().map(|(_, t)| t.len()).sum::<usize>();

    let taxonomy = Arc::new(ClassTaxonomy::cityscapes());
    let work = || -> Vec<Result<RdRecord>> {
        pending
            .par_iter()
            .filter(|(_, todo)| !todo.is_empty())
            .flat_map(|(item, todo)| match load(item, todo, &taxonomy) {
                Ok(l) => todo
                    .par_iter()
                    .map(|&op| {
                        evaluate(
                            item,
                            &l.image,
                            l.segmap.as_ref(),
                            l.caption.as_ref(),
                            op,
                            plan,
                        )
                        .map_err(|e| {
                            log::warn!("{} {:?}: {e}", item.id, op);
                            e
                        })
                    })
                    .collect::<Vec<_>>(),
                Err(e) => {
                    log::warn!("{}: {e}", item.id);
                    todo.iter()
                        .map(|_| Err(HarnessError::Plan(format!("{}: {e}", item.id))))
                        .collect()
                }
            })
            .collect()
    };
    let results = match plan.thread_count() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::Plan(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };

    let mut merged = done;
    let mut added = 0;
    let mut failed = 0;
    for r in results {
        match r {
            Ok(rec) => {
                merged.insert(rec.key(), rec);
                added += 1;
            }
            Err(_) => failed += 1,
        }
    }
    if added > 0 || !csv.is_file() {
        write_csv(&csv, merged.values())?;
    }
    let report = SweepReport {
        csv,
        added,
        skipped,
        failed,
        total,
    };
    if failed as f64 > MAX_FAILURE_RATE * total as f64 {
        return Err(HarnessError::TooManyFailures { failed, total });
    }
    Ok(report)
}

/// Parses `harmonic`, `passthrough` or `ext:<command template>`.
pub fn parse_reconstructor(name: &str, timeout: std::time::Duration) -> Result<Reconstructor> {
    match name {
        "harmonic" => Ok(Reconstructor::default()),
        "passthrough" | "none" => Ok(Reconstructor::Passthrough),
        s => match s.strip_prefix("ext:") {
            Some(cmd) if !cmd.trim().is_empty() => Ok(Reconstructor::external(cmd, timeout)),
            _ => Err(HarnessError::Plan(format!(
                "unknown reconstructor {s:?}; expected harmonic, passthrough or ext:<cmd>"
            ))),
        },
    }
}

pub fn read_csv(path: &Path) -> Result<Vec<RdRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let records = rdr.deserialize().collect::<Result<Vec<RdRecord>, _>>()?;
    Ok(records)
}

/// Writes records sorted by key through a temporary file, so readers never see a partial
/// CSV.
pub fn write_csv<'a>(path: &Path, records: impl IntoIterator<Item = &'a RdRecord>) -> Result<()> {
    let mut sorted: Vec<&RdRecord> = records.into_iter().collect();
    sorted.sort_by_key(|r| r.key());
    let tmp = path.with_extension("csv.tmp");
    {
        let mut wtr = csv::Writer::from_path(&tmp)?;
        for r in sorted {
            wtr.serialize(r)?;
        }
        wtr.flush().map_err(|e| HarnessError::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(image: &str, psnr_db: Option<f64>) -> RdRecord {
        RdRecord {
            image: image.into(),
            mode: Mode::Samr,
            config: "4".into(),
            q: Some(10),
            bytes: 1234,
            bpp: 0.1234567890123,
            psnr_db,
            ms_ssim: Some(0.987654321),
        }
    }

    #[test]
    fn csv_round_trip_with_sentinels() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rd.csv");
        let mut mmsd = record("a", None);
        mmsd.mode = Mode::Mmsd;
        mmsd.config = RdRecord::PAYLOAD.into();
        mmsd.q = None;
        mmsd.ms_ssim = None;
        let recs = vec![
            record("b", Some(f64::INFINITY)),
            record("a", Some(31.5)),
            mmsd,
        ];
        write_csv(&p, &recs).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("image,mode,config,Q,bytes,bpp,psnr_db,ms_ssim\n"));
        assert!(text.contains(",inf,"));
        let back = read_csv(&p).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[0], recs[1]);
        assert_eq!(back[1], recs[2]);
        assert_eq!(back[2], recs[0]);
    }

    #[test]
    fn reconstructor_specs() {
        let t = std::time::Duration::from_secs(1);
        assert_eq!(
            parse_reconstructor("harmonic", t).unwrap(),
            Reconstructor::default()
        );
        assert_eq!(
            parse_reconstructor("passthrough", t).unwrap(),
            Reconstructor::Passthrough
        );
        assert!(matches!(
            parse_reconstructor("ext:cp {input} {output}", t).unwrap(),
            Reconstructor::External(_)
        ));
        assert!(parse_reconstructor("ext:", t).is_err());
        assert!(parse_reconstructor("magic", t).is_err());
    }

    #[test]
    fn plan_validation() {
        let mut plan = SweepPlan::new("c", "o");
        assert!(plan.validate().is_ok());
        plan.qualities = vec![5, 5];
        assert!(plan.validate().is_err());
        plan.qualities = vec![0, 5];
        assert!(plan.validate().is_err());
        plan.qualities = vec![5];
        plan.configs = vec![9];
        assert!(plan.validate().is_err());
    }

    #[test]
    fn empty_corpus_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let plan = SweepPlan::new(dir.path(), &out);
        assert!(matches!(
            run_sweep(&plan),
            Err(HarnessError::EmptyCorpus(_))
        ));
        assert!(!out.join(CSV_NAME).exists());
    }
}
