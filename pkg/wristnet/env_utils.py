import os

from .config import WristnetConfig

# BLAS thread pools must be pinned before numpy loads; main() imports numpy lazily.
_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def resolve_path(base_dir: str, value: str) -> str:
    if not value:
        return value
    if os.path.isabs(value):
        return value
    return os.path.normpath(os.path.join(base_dir, value))


def export_env(config: WristnetConfig, config_path: str = "") -> None:
    base_dir = os.path.dirname(os.path.abspath(config_path)) if config_path else os.getcwd()
    for key, value in (config.env or {}).items():
        if value is None:
            continue
        os.environ[str(key)] = str(value)

    for key in _THREAD_VARS:
        os.environ.setdefault(key, "1")

    if config.activities_path:
        os.environ["WRISTNET_ACTIVITIES"] = resolve_path(base_dir, config.activities_path)
