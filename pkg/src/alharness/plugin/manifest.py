"""``plugin.json`` manifests and their validation."""
from __future__ import annotations

import json
import os
import shutil
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .. import PROTOCOL_VERSION
from ..errors import ManifestError

KINDS = ("strategy", "trainer")
BUILTIN_PREFIX = "builtin:"
BUILTIN_TRAINER = "sim"


@dataclass(frozen=True)
class PluginManifest:
    name: str
    kind: str
    entry_command: tuple[str, ...]
    protocol_version: str = PROTOCOL_VERSION
    # in_dir artifacts the plugin reads besides the index and config files
    requires: tuple[str, ...] = ()
    params: dict = field(default_factory=dict)
    base_dir: Path | None = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "entry_command": list(self.entry_command),
            "protocol_version": self.protocol_version,
            "requires": list(self.requires),
            "params": self.params,
        }

    def argv(self) -> list[str]:
        argv = list(self.entry_command)
        if self.base_dir is not None and argv and os.sep in argv[0] and not os.path.isabs(argv[0]):
            argv[0] = str(self.base_dir / argv[0])
        return argv


def manifest_from_dict(data: dict, base_dir: Path | None = None) -> PluginManifest:
    if not isinstance(data, dict):
        raise ManifestError("manifest must be a JSON object")
    try:
        entry = data["entry_command"]
        if isinstance(entry, str) or not isinstance(entry, list):
            raise ManifestError("entry_command must be an argv list")
        return PluginManifest(
            name=str(data["name"]),
            kind=str(data["kind"]),
            entry_command=tuple(str(a) for a in entry),
            protocol_version=str(data.get("protocol_version", "")),
            requires=tuple(data.get("requires", ())),
            params=dict(data.get("params", {})),
            base_dir=base_dir,
        )
    except KeyError as exc:
        raise ManifestError(f"manifest is missing {exc.args[0]!r}") from None


def load_manifest(path: Path | str) -> PluginManifest:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from None
    return manifest_from_dict(data, base_dir=path.resolve().parent)


def builtin_manifest(kind: str, name: str, params: dict | None = None) -> PluginManifest:
    from ..strategies import BUILTIN_STRATEGIES

    if kind == "strategy":
        if name not in BUILTIN_STRATEGIES:
            raise ManifestError(f"unknown built-in strategy {name!r}")
        requires = BUILTIN_STRATEGIES[name][1]
    elif kind == "trainer":
        if name != BUILTIN_TRAINER:
            raise ManifestError(f"unknown built-in trainer {name!r}")
        requires = ()
    else:
        raise ManifestError(f"unknown kind {kind!r}")
    return PluginManifest(
        name=name,
        kind=kind,
        entry_command=(sys.executable, "-m", "alharness.plugin.builtin", kind, name),
        protocol_version=PROTOCOL_VERSION,
        requires=requires,
        params=dict(params or {}),
    )


def resolve_plugin(ref: str, kind: str, base_dir: Path | None = None,
                   params: dict | None = None) -> PluginManifest:
    """``builtin:<name>`` or a path to ``plugin.json`` (relative to ``base_dir``)."""
    if ref.startswith(BUILTIN_PREFIX):
        return builtin_manifest(kind, ref[len(BUILTIN_PREFIX):], params)
    path = Path(ref)
    if base_dir is not None and not path.is_absolute():
        path = base_dir / path
    manifest = load_manifest(path)
    if params:
        manifest = PluginManifest(manifest.name, manifest.kind, manifest.entry_command,
                                  manifest.protocol_version, manifest.requires,
                                  {**manifest.params, **params}, manifest.base_dir)
    return manifest


def _major(version: str) -> int | None:
    try:
        return int(version.split(".")[0])
    except (ValueError, IndexError):
        return None


def validate_plugin(manifest: PluginManifest, expected_kind: str | None = None) -> list[str]:
    """Return the list of violations; empty means the manifest is usable."""
    violations = []
    if manifest.kind not in KINDS:
        violations.append(f"unknown kind {manifest.kind!r}")
    elif expected_kind is not None and manifest.kind != expected_kind:
        violations.append(f"expected a {expected_kind} plugin, got {manifest.kind!r}")
    if not manifest.name:
        violations.append("empty name")
    major = _major(manifest.protocol_version)
    if major is None:
        violations.append(f"unparseable protocol_version {manifest.protocol_version!r}")
    elif major != _major(PROTOCOL_VERSION):
        violations.append(
            f"incompatible protocol: plugin {manifest.protocol_version}, host {PROTOCOL_VERSION}"
        )
    argv = manifest.argv()
    if not argv or not argv[0]:
        violations.append("entry_command is empty")
    else:
        exe = argv[0]
        if os.sep in exe:
            if not (os.path.isfile(exe) and os.access(exe, os.X_OK)):
                violations.append(f"entry_command not resolvable: {exe}")
        elif shutil.which(exe) is None:
            violations.append(f"entry_command not resolvable: {exe}")
    return violations
