"""Run records and reproducibility plumbing.

A RunRecord plus the files it references suffices to reproduce a run: it
echoes the fully resolved configuration, hashes every input, and names every
output. All randomness flows from one top-level seed expanded by split_seed.
"""

import datetime
import hashlib
import json
import os

from .errors import DataError


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def split_seed(seed, label):
    """Child seed for a named subsystem: first 8 bytes of sha256(seed/label)."""
    digest = hashlib.sha256(("%d/%s" % (seed, label)).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def config_hash(config):
    blob = json.dumps(config, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def resolve_config(defaults, file_config=None, overrides=None):
    """Deep-merge with precedence: overrides > file > defaults."""
    def merge(base, extra):
        out = dict(base)
        for key, val in (extra or {}).items():
            if isinstance(val, dict) and isinstance(out.get(key), dict):
                out[key] = merge(out[key], val)
            else:
                out[key] = val
        return out

    return merge(merge(defaults, file_config), overrides)


def build_run_record(command, config, inputs, outputs, seed):
    """Assemble the record; inputs/outputs are path lists (inputs hashed)."""
    record = {
        "format": "ncdecode-run-v1",
        "run_id": "%s-%s" % (command, config_hash(config)[:12]),
        "command": command,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "seed": seed,
        "config": config,
        "inputs": {os.path.basename(p): sha256_file(p) for p in inputs},
        "input_paths": {os.path.basename(p): os.path.abspath(p) for p in inputs},
        "outputs": [os.path.basename(p) for p in outputs],
        "versions": {"ncdecode": _package_version()},
    }
    return record


def _package_version():
    try:
        from importlib.metadata import version

        return version("ncdecode")
    except Exception:
        return "unknown"


def save_run_record(record, out_dir):
    path = os.path.join(out_dir, "run_record.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def load_run_record(path):
    with open(path, encoding="utf-8") as fh:
        record = json.load(fh)
    if record.get("format") != "ncdecode-run-v1":
        raise DataError("not a run record: %r" % (path,))
    return record


def dump_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True)
        fh.write("\n")


def dump_jsonl(objs, path):
    with open(path, "w", encoding="utf-8") as fh:
        for obj in objs:
            fh.write(json.dumps(obj, sort_keys=True))
            fh.write("\n")
