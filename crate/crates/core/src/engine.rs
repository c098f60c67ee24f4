//! Offline pipeline (render, train, encode, index) and the query-time
//! engine built from it.

use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::EngineConfig;
use crate::dataset::{load_dataset, PartDatabase};
use crate::error::{Error, Result};
use crate::features::{
    build_vocabulary, detail_crop, extract_galf, GaborBank, GalfLayout, KeypointFeature,
    TermHistogram, Vocabulary, VocabularyKind, WordCounts,
};
use crate::render::{render_contour, sample_viewpoints, LineImage, ViewDirection};
use crate::retrieval::{
    d2_descriptor, suggest_adjacent, ContextSet, InvertedIndex, InvertedIndexSet, Retrieval,
    Retriever, ScoredPart, Suggestion,
};

pub const INDEX_MAGIC: [u8; 8] = *b"PSKINDX1";
pub const INDEX_VERSION: u32 = 1;

/// Training images are drawn until this many times the feature cap is
/// available, then subsampled to the cap.
const TRAINING_OVERSAMPLE: usize = 4;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildStats {
    pub images: [usize; 3],
    pub training_images: [usize; 3],
    pub training_features: [usize; 3],
    pub seconds: f64,
}

/// Everything the offline pipeline produces, as persisted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexData {
    pub magic: [u8; 8],
    pub version: u32,
    /// Hash of the dataset content and the configuration.
    pub key: String,
    pub config_toml: String,
    pub views: Vec<ViewDirection>,
    /// Indexed by [`VocabularyKind::index`].
    pub vocabularies: Vec<Vocabulary>,
    pub index: InvertedIndexSet,
    pub d2: Vec<Vec<f64>>,
    pub stats: BuildStats,
}

pub struct Engine {
    pub config: EngineConfig,
    pub db: PartDatabase,
    pub data: IndexData,
    bank: GaborBank,
    layout: GalfLayout,
}

/// Default index location next to a manifest.
pub fn default_index_path(manifest: &Path) -> PathBuf {
    let mut s = manifest.as_os_str().to_owned();
    s.push(".index.bin");
    PathBuf::from(s)
}

pub fn index_key(db: &PartDatabase, config: &EngineConfig) -> String {
    let mut h = Sha256::new();
    h.update(INDEX_MAGIC);
    h.update(INDEX_VERSION.to_le_bytes());
    h.update(db.content_hash.as_bytes());
    h.update(config.to_toml().as_bytes());
    hex::encode(h.finalize())
}

/// Common-view direction of a part and its opposite.
fn common_pair(db: &PartDatabase, part: usize) -> [ViewDirection; 2] {
    let v = db.common_views[&db.parts[part].category];
    [v, v.opposite()]
}

struct Pipeline<'a> {
    db: &'a PartDatabase,
    config: &'a EngineConfig,
    views: &'a [ViewDirection],
    bank: &'a GaborBank,
    layout: &'a GalfLayout,
}

impl Pipeline<'_> {
    fn images_per_part(&self, kind: VocabularyKind) -> usize {
        match kind {
            VocabularyKind::SketchPart => self.views.len(),
            _ => 2,
        }
    }

    fn render(&self, kind: VocabularyKind, part: usize, view: usize) -> LineImage {
        let mesh = &self.db.parts[part].mesh;
        let r = &self.config.render;
        match kind {
            VocabularyKind::SketchPart => {
                render_contour(mesh, &self.views[view], r.image_size, r.crease_angle_deg)
            }
            VocabularyKind::Overall => render_contour(
                mesh,
                &common_pair(self.db, part)[view],
                r.image_size,
                r.crease_angle_deg,
            ),
            VocabularyKind::Detail => detail_crop(&render_contour(
                mesh,
                &common_pair(self.db, part)[view],
                r.image_size,
                r.crease_angle_deg,
            )),
        }
    }

    fn features(&self, img: &LineImage) -> Vec<KeypointFeature> {
        extract_galf(img, self.bank, self.layout)
    }

    fn train(&self, kind: VocabularyKind, stats: &mut BuildStats) -> Result<Vocabulary> {
        let per = self.images_per_part(kind);
        let total = self.db.parts.len() * per;
        let f = &self.config.features;
        let mut order: Vec<usize> = (0..total).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ (0x9e37 + kind.index() as u64));
        order.shuffle(&mut rng);
        let want = f.training_features.saturating_mul(TRAINING_OVERSAMPLE);
        let mut pool = Vec::new();
        let mut used = 0;
        for &id in &order {
            if pool.len() >= want {
                break;
            }
            let img = self.render(kind, id / per, id % per);
            pool.extend(self.features(&img).into_iter().filter(|k| !k.is_zero()));
            used += 1;
        }
        pool.shuffle(&mut rng);
        pool.truncate(f.training_features);
        stats.training_images[kind.index()] = used;
        stats.training_features[kind.index()] = pool.len();
        info!(
            "{kind:?}: clustering {} features from {used} images",
            pool.len()
        );
        build_vocabulary(
            kind,
            &pool,
            f.vocabulary_size,
            self.config.seed,
            f.idf,
            f.kmeans_max_iter,
        )
    }

    fn counts(&self, vocab: &Vocabulary, img: &LineImage) -> WordCounts {
        vocab.quantize(&self.features(img))
    }
}

fn finish_index(
    vocab: &mut Vocabulary,
    counts: Vec<Vec<(u16, WordCounts)>>,
    names: &[String],
) -> Result<InvertedIndex> {
    vocab.fit_statistics(counts.iter().flatten().map(|(_, c)| c));
    let per_part: Vec<Vec<(u16, TermHistogram)>> = counts
        .into_iter()
        .map(|list| {
            list.into_iter()
                .map(|(v, c)| (v, vocab.weigh(&c)))
                .collect()
        })
        .collect();
    InvertedIndex::build(vocab.kind, vocab.size(), per_part, names)
}

impl Engine {
    pub fn build(db: PartDatabase, config: EngineConfig) -> Result<Engine> {
        config.validate()?;
        if db.parts.is_empty() {
            return Err(Error::Dataset {
                model: db.name.clone(),
                message: "the dataset has no parts".into(),
            });
        }
        let start = Instant::now();
        let views = sample_viewpoints(config.render.view_level);
        let bank = GaborBank::new(config.gabor());
        let layout = config.layout();
        let mut stats = BuildStats::default();
        let names: Vec<String> = db.parts.iter().map(|p| p.id.clone()).collect();
        let pipe = Pipeline {
            db: &db,
            config: &config,
            views: &views,
            bank: &bank,
            layout: &layout,
        };

        let mut sketch_vocab = pipe.train(VocabularyKind::SketchPart, &mut stats)?;
        let mut detail_vocab = pipe.train(VocabularyKind::Detail, &mut stats)?;
        let mut overall_vocab = pipe.train(VocabularyKind::Overall, &mut stats)?;

        let n = db.parts.len();
        let mut sketch_counts = Vec::with_capacity(n);
        let mut detail_counts = Vec::with_capacity(n);
        let mut overall_counts = Vec::with_capacity(n);
        let r = &config.render;
        for (p, part) in db.parts.iter().enumerate() {
            if p % 50 == 0 {
                info!("encoding part {p}/{n}");
            }
            let list: Vec<(u16, WordCounts)> = views
                .iter()
                .enumerate()
                .map(|(v, view)| {
                    let img = render_contour(&part.mesh, view, r.image_size, r.crease_angle_deg);
                    (v as u16, pipe.counts(&sketch_vocab, &img))
                })
                .collect();
            sketch_counts.push(list);
            let (mut dl, mut ol) = (Vec::new(), Vec::new());
            for (o, view) in common_pair(&db, p).iter().enumerate() {
                let img = render_contour(&part.mesh, view, r.image_size, r.crease_angle_deg);
                ol.push((o as u16, pipe.counts(&overall_vocab, &img)));
                dl.push((o as u16, pipe.counts(&detail_vocab, &detail_crop(&img))));
            }
            detail_counts.push(dl);
            overall_counts.push(ol);
        }
        stats.images = [n * views.len(), 2 * n, 2 * n];
        let index = InvertedIndexSet {
            sketch: finish_index(&mut sketch_vocab, sketch_counts, &names)?,
            detail: finish_index(&mut detail_vocab, detail_counts, &names)?,
            overall: finish_index(&mut overall_vocab, overall_counts, &names)?,
        };
        let rc = &config.retrieval;
        let d2 = db
            .parts
            .iter()
            .enumerate()
            .map(|(i, p)| {
                d2_descriptor(
                    &p.mesh,
                    rc.d2_pairs,
                    rc.d2_bins,
                    config.seed.wrapping_add(i as u64),
                )
            })
            .collect();
        stats.seconds = start.elapsed().as_secs_f64();
        info!("index built in {:.1} s", stats.seconds);
        let data = IndexData {
            magic: INDEX_MAGIC,
            version: INDEX_VERSION,
            key: index_key(&db, &config),
            config_toml: config.to_toml(),
            views,
            vocabularies: vec![sketch_vocab, detail_vocab, overall_vocab],
            index,
            d2,
            stats,
        };
        Ok(Engine {
            config,
            db,
            data,
            bank,
            layout,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        let file = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        bincode::serialize_into(BufWriter::new(file), &self.data)
            .map_err(|e| Error::IndexFormat(format!("cannot write {}: {e}", path.display())))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    /// Loads a saved index and checks it belongs to `db` and `config`.
    pub fn load(db: PartDatabase, config: EngineConfig, path: &Path) -> Result<Engine> {
        config.validate()?;
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let data: IndexData = bincode::deserialize_from(BufReader::new(file)).map_err(|e| {
            Error::IndexFormat(format!("{} is not a readable index: {e}", path.display()))
        })?;
        if data.magic != INDEX_MAGIC || data.version != INDEX_VERSION {
            return Err(Error::IndexFormat(format!(
                "{} has format version {} (expected {INDEX_VERSION})",
                path.display(),
                data.version
            )));
        }
        let key = index_key(&db, &config);
        if data.key != key {
            return Err(Error::IndexFormat(format!(
                "{} was built from different data or settings; rebuild it",
                path.display()
            )));
        }
        let bank = GaborBank::new(config.gabor());
        let layout = config.layout();
        Ok(Engine {
            config,
            db,
            data,
            bank,
            layout,
        })
    }

    /// Loads the dataset, then the index at `index` (default next to the
    /// manifest), building and saving it when missing or stale.
    pub fn open(manifest: &Path, config: EngineConfig, index: Option<&Path>) -> Result<Engine> {
        let db = load_dataset(manifest)?;
        let path = index
            .map(Path::to_path_buf)
            .unwrap_or_else(|| default_index_path(manifest));
        if path.exists() {
            match Engine::load(db.clone(), config.clone(), &path) {
                Ok(e) => return Ok(e),
                Err(e) => warn!("{e}; rebuilding"),
            }
        }
        let engine = Engine::build(db, config)?;
        engine.save(&path)?;
        Ok(engine)
    }

    pub fn vocabulary(&self, kind: VocabularyKind) -> &Vocabulary {
        &self.data.vocabularies[kind.index()]
    }

    pub fn views(&self) -> &[ViewDirection] {
        &self.data.views
    }

    pub fn retriever(&self) -> Retriever<'_> {
        Retriever {
            db: &self.db,
            index: &self.data.index,
            views: &self.data.views,
            measure: self.config.features.similarity,
        }
    }

    /// TF-IDF histogram of an image already framed like the stored contours.
    pub fn encode(&self, kind: VocabularyKind, img: &LineImage) -> Result<TermHistogram> {
        let size = self.config.render.image_size;
        if img.width != size || img.height != size {
            return Err(Error::InvalidArgument(format!(
                "image is {}x{}, the index expects {size}x{size}",
                img.width, img.height
            )));
        }
        Ok(self.vocabulary(kind).encode(img, &self.bank, &self.layout))
    }

    /// Stored contour of `part` from precomputed view `view`.
    pub fn contour(&self, part: usize, view: usize) -> LineImage {
        let r = &self.config.render;
        let mut img = render_contour(
            &self.db.parts[part].mesh,
            &self.data.views[view],
            r.image_size,
            r.crease_angle_deg,
        );
        img.part = Some(self.db.parts[part].id.clone());
        img
    }

    /// Ranked parts of `category` for a framed sketch image.
    #[allow(clippy::too_many_arguments)]
    pub fn query(
        &self,
        sketch: &LineImage,
        view: &ViewDirection,
        category: &str,
        ctx: &ContextSet,
        lambda1: f64,
        lambda2: f64,
        n: usize,
    ) -> Result<Retrieval> {
        let h = self.encode(VocabularyKind::SketchPart, sketch)?;
        self.retriever()
            .retrieve(&h, view, category, ctx, lambda1, lambda2, n)
    }

    pub fn suggest(&self, results: &[ScoredPart], category: Option<&str>) -> Vec<Suggestion> {
        let rc = &self.config.retrieval;
        suggest_adjacent(
            &self.db,
            &self.data.d2,
            results,
            rc.suggest_k,
            rc.suggest_clusters,
            category,
            self.config.seed,
        )
    }
}
