//! Raw-sequence ingestion and paired training-sample construction.

mod build;
mod ingest;

pub use build::{
    build_dataset, read_manifest, replay_degraded, transform, usable_sequences, verify_entry,
    write_manifest, AugRecord, BuildConfig, CropRecord, Manifest, SampleManifestEntry,
    DEFAULT_CROP, MANIFEST_FILE, MAX_REF_OFFSET,
};
pub use ingest::{
    discover_scene_files, fraction_count, ingest_scene_views, ingest_video_triplets, list_pngs,
    HoldoutRule, RawSequence, SourceKind, VideoIngest,
};
