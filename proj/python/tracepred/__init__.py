"""Trace prediction, Barinel-style diagnosis and troubleshooting simulation."""

from ._core import (  # noqa: F401
    Diagnosis,
    EpisodeRecord,
    Error,
    GenConfig,
    InvalidArgument,
    LdpConfig,
    LabeledDataset,
    Metrics,
    Model,
    NetConfig,
    ParseError,
    Project,
    TraceTable,
    ValidationError,
    __version__,
    auc,
    build_dataset,
    camel_split,
    common_words,
    confusion,
    diagnose,
    diagnosis_likelihood,
    evaluate,
    feature_importance,
    feature_names,
    generate_project,
    generate_traces,
    health_states,
    inject_faults,
    minimal_hitting_sets,
    name_distance,
    run_episode,
    run_experiment,
    train,
    utility,
)
