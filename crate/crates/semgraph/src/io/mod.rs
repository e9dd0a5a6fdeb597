//! File formats: dataset ingestion, graph export, and tabular reports.

mod dataset;
mod graph;
mod tables;

pub use dataset::{
    load_dataset, save_dataset_csv, DatasetSpec, LoadedDataset, NodeMoments, Orientation,
    OutputSelector,
};
pub use graph::{export_graph, import_graph_json, GraphFormat};
pub use tables::{
    containment_csv, curve_csv, elbow_json, json_document, meta_value, ranking_csv,
    ranking_markdown, read_curve_csv, sweep_csv, write_text_file,
};
