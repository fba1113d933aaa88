from .config import RunConfig, StopCriteria, expand_methods, load_config_file
from .loop import (
    IterationRecord,
    RunState,
    execute,
    init_run,
    load_run,
    resume,
    run_iteration,
    run_to_completion,
    should_stop,
    validate_plugins,
)

__all__ = [
    "IterationRecord",
    "RunConfig",
    "RunState",
    "StopCriteria",
    "execute",
    "expand_methods",
    "init_run",
    "load_config_file",
    "load_run",
    "resume",
    "run_iteration",
    "run_to_completion",
    "should_stop",
    "validate_plugins",
]
