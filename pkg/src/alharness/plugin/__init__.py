from .manifest import (
    PluginManifest,
    builtin_manifest,
    load_manifest,
    manifest_from_dict,
    resolve_plugin,
    validate_plugin,
)
from .protocol import (
    DEFAULT_TIMEOUT,
    ModelRef,
    TaskDir,
    TaskEnvelope,
    format_scores,
    parse_scores,
    prepare_task,
    read_envelope,
    run_score_task,
    run_train_task,
)

__all__ = [
    "DEFAULT_TIMEOUT",
    "ModelRef",
    "PluginManifest",
    "TaskDir",
    "TaskEnvelope",
    "builtin_manifest",
    "format_scores",
    "load_manifest",
    "manifest_from_dict",
    "parse_scores",
    "prepare_task",
    "read_envelope",
    "resolve_plugin",
    "run_score_task",
    "run_train_task",
    "validate_plugin",
]
