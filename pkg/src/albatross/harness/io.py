"""File formats: CSV reports, JSON documents, JSONL match logs."""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

OUTPUT_ENV = "ALBATROSS_OUTPUT_DIR"


def output_dir() -> Path:
    d = Path(os.environ.get(OUTPUT_ENV, "."))
    d.mkdir(parents=True, exist_ok=True)
    return d


def resolve(path) -> Path:
    """Relative paths land in the output directory."""
    p = Path(path)
    return p if p.is_absolute() else output_dir() / p


def locate(path) -> Path:
    """Input paths: as given when they exist, else under the output directory."""
    p = Path(path)
    if p.exists() or p.is_absolute():
        return p
    alt = Path(os.environ.get(OUTPUT_ENV, ".")) / p
    return alt if alt.exists() else p


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)


def read_json(path):
    with open(path) as f:
        return json.load(f)


def write_json(path, obj):
    with open(path, "w") as f:
        json.dump(obj, f, indent=2)


def write_jsonl(path, records):
    with open(path, "w") as f:
        for r in records:
            f.write(json.dumps(r) + "\n")


def read_jsonl(path):
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]


def turn_record(turn, state, joint_action, rewards) -> dict:
    """One match-log line for the snake games."""
    return {
        "turn": int(turn),
        "bodies": [[list(c) for c in s.body] for s in state.snakes],
        "health": [int(s.health) for s in state.snakes],
        "alive": [bool(s.alive) for s in state.snakes],
        "food": sorted([list(c) for c in state.food]),
        "joint_action": [None if a is None else int(a) for a in joint_action],
        "rewards": [float(r) for r in rewards],
    }
